//! Text normalization, tokenization and token-set similarity.
//!
//! Every label that takes part in matching (instructions, node names, object
//! ids, attribute values, stored preference examples) goes through
//! [`normalize_text`] first, so comparisons are insensitive to case,
//! underscores, Romanian diacritics and whitespace layout.

use std::collections::{BTreeSet, HashSet};

use once_cell::sync::Lazy;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// Sorted set of tokens. Sorted so that signatures built from it are stable.
pub type TokenSet = BTreeSet<String>;

const STOPWORDS_EN: &str = include_str!("../../data/stopwords_en.txt");
const STOPWORDS_RO: &str = include_str!("../../data/stopwords_ro.txt");

static DEFAULT_STOPWORDS: Lazy<StopWords> =
    Lazy::new(|| StopWords::from_lists(&[STOPWORDS_EN, STOPWORDS_RO]));

/// Romanian letters whose comma/cedilla forms do not decompose uniformly
/// across normal forms.
fn romanian_base(c: char) -> Option<char> {
    Some(match c {
        'ă' | 'â' | 'Ă' | 'Â' => 'a',
        'î' | 'Î' => 'i',
        'ș' | 'ş' | 'Ș' | 'Ş' => 's',
        'ț' | 'ţ' | 'Ț' | 'Ţ' => 't',
        _ => return None,
    })
}

/// Lowercase, map underscores to spaces, strip diacritics and collapse
/// whitespace. Total and idempotent.
pub fn normalize_text(raw: &str) -> String {
    let mut folded = String::with_capacity(raw.len());
    for c in raw.chars() {
        if let Some(base) = romanian_base(c) {
            folded.push(base);
            continue;
        }
        if c == '_' {
            folded.push(' ');
            continue;
        }
        folded.extend(c.to_lowercase());
    }
    let stripped: String = folded.nfd().filter(|c| !is_combining_mark(*c)).collect();
    // Decomposition can surface uppercase bases (e.g. compatibility forms), so
    // fold case once more after stripping.
    let stripped: String = stripped
        .chars()
        .flat_map(char::to_lowercase)
        .filter(|c| !is_combining_mark(*c))
        .collect();
    stripped.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// A closed stopword vocabulary.
#[derive(Debug, Clone, Default)]
pub struct StopWords {
    words: HashSet<String>,
}

impl StopWords {
    /// Builds a vocabulary from newline-separated lists; `#` starts a comment.
    pub fn from_lists(lists: &[&str]) -> Self {
        let words = lists
            .iter()
            .flat_map(|list| list.lines())
            .map(|line| line.split('#').next().unwrap_or("").trim())
            .filter(|line| !line.is_empty())
            .map(normalize_text)
            .collect();
        Self { words }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// The shipped English + Romanian stopword lists.
pub fn default_stopwords() -> &'static StopWords {
    &DEFAULT_STOPWORDS
}

/// Tokenizes an already-normalized string with the default stopword lists.
pub fn tokenize(normalized: &str) -> TokenSet {
    tokenize_with(normalized, default_stopwords())
}

/// Splits on whitespace and punctuation, dropping stopwords. Duplicates
/// collapse.
pub fn tokenize_with(normalized: &str, stopwords: &StopWords) -> TokenSet {
    normalized
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && !stopwords.contains(t))
        .map(str::to_owned)
        .collect()
}

/// Normalize then tokenize.
pub fn tokens_of(raw: &str) -> TokenSet {
    tokenize(&normalize_text(raw))
}

/// `|a ∩ b| / |a ∪ b|`; two empty sets score 0 so an empty instruction never
/// matches anything.
pub fn jaccard_similarity(a: &TokenSet, b: &TokenSet) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

/// Sorted, stopword-free signature used to group equivalent instructions.
pub fn instruction_signature(raw: &str) -> String {
    tokens_of(raw).into_iter().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(items: &[&str]) -> TokenSet {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_text("Lab_CB204"), "lab cb204");
        assert_eq!(normalize_text(""), "");
        assert_eq!(
            normalize_text("Mergi   Până la   FEREASTRĂ"),
            "mergi pana la fereastra"
        );
        assert_eq!(normalize_text("  Ședința în ȚARĂ "), "sedinta in tara");
        assert_eq!(normalize_text("şi ţară"), "si tara");
        assert_eq!(normalize_text("café\t\nnaïve"), "cafe naive");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("go to the lab cb204"), set(&["lab", "cb204"]));
        assert_eq!(tokenize(""), TokenSet::new());
        assert_eq!(
            tokenize("take me to the closest plant"),
            set(&["closest", "plant"])
        );
        assert_eq!(tokenize("plant plant, plant"), set(&["plant"]));
    }

    #[test]
    fn romanian_stopwords_apply() {
        assert_eq!(tokens_of("Mergi la fereastra"), set(&["fereastra"]));
        assert!(default_stopwords().len() > 100);
    }

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard_similarity(&set(&["x", "y"]), &set(&["x", "y"])), 1.0);
        assert_eq!(jaccard_similarity(&set(&["x"]), &set(&["y"])), 0.0);
        assert_eq!(
            jaccard_similarity(&set(&["a", "b", "c"]), &set(&["b", "c", "d"])),
            0.5
        );
        assert_eq!(jaccard_similarity(&TokenSet::new(), &TokenSet::new()), 0.0);
    }

    #[test]
    fn signature_is_sorted_and_stopword_free() {
        assert_eq!(
            instruction_signature("Take me somewhere I can sit and relax"),
            "relax sit"
        );
        assert_eq!(
            instruction_signature("relax and SIT"),
            instruction_signature("Take me somewhere I can sit and relax")
        );
    }

    fn token_set() -> impl Strategy<Value = TokenSet> {
        proptest::collection::btree_set("[a-e]{1,2}", 0..6)
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC{0,40}") {
            let once = normalize_text(&s);
            prop_assert_eq!(normalize_text(&once), once);
        }

        #[test]
        fn normalize_idempotent_on_diacritic_heavy_input(s in "[a-zA-ZăâîșțĂÂÎȘȚşţ_ \t]{0,40}") {
            let once = normalize_text(&s);
            prop_assert_eq!(normalize_text(&once), once.clone());
            prop_assert!(!once.contains('_'));
            prop_assert!(!once.contains("  "));
        }

        #[test]
        fn jaccard_bounded_and_symmetric(a in token_set(), b in token_set()) {
            let ab = jaccard_similarity(&a, &b);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(ab, jaccard_similarity(&b, &a));
            prop_assert_eq!(ab == 1.0, a == b && !a.is_empty());
        }
    }
}
