use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::anyhow;
use serde_json::{json, Value};

use semnav_core::analytics::{
    build_session_report, clopper_pearson_interval, cohens_d, cohens_d_from_summary, fishers_exact_2x2,
    mann_whitney, write_report_csv, Alternative, PMethod, ScenarioDefinitions, SessionReport, Tally,
};
use semnav_core::memory::{
    compile_digest, extract_memory, load_digest, refresh_workflow, write_digest_atomic, MemoryStore,
    RefreshOptions, DIGEST_FILE,
};
use semnav_core::resolver::{resolve_traced, PreferenceIndex, ResolutionMethod, ResolveOutcome};
use semnav_core::sim::{
    backend_for_script, compare_runs, run_concurrent, run_session, serve_context_bridge, shared_state,
    ContextSource, HttpContext, ScenarioScript, SessionArtifacts, SessionOptions, SimState,
};
use semnav_core::vlm::{HttpChatBackend, OracleBackend, OracleScript, SharedBackend};
use semnav_core::world::{load_world, Policy, Pose, World};

use crate::{AlternativeArg, Classify, Cli, CmdResult, Command, Config, Failure, Format, StatsCommand};

pub struct Out {
    format: Format,
}

impl Out {
    /// Prints `text` in text mode, `record` as one JSON line otherwise.
    /// A closed stdout (e.g. piped into `head`) is not an error.
    pub fn emit(&self, text: impl AsRef<str>, record: Value) {
        let mut stdout = std::io::stdout().lock();
        let _ = match self.format {
            Format::Text => writeln!(stdout, "{}", text.as_ref()),
            Format::JsonLines => writeln!(stdout, "{record}"),
        };
    }

    pub fn text(&self, text: impl AsRef<str>) {
        if self.format == Format::Text {
            let _ = writeln!(std::io::stdout().lock(), "{}", text.as_ref());
        }
    }
}

pub struct Env {
    pub world: Arc<World>,
    pub policy: Arc<Policy>,
    pub policy_path: PathBuf,
}

impl Config {
    pub fn graph_path(&self) -> PathBuf {
        self.graph.clone().unwrap_or_else(|| self.world_dir.join("nav_graph.geojson"))
    }

    pub fn pois_path(&self) -> PathBuf {
        self.pois
            .clone()
            .unwrap_or_else(|| self.world_dir.join("semantic_objects_static.geojson"))
    }

    pub fn policy_path(&self) -> PathBuf {
        self.policy.clone().unwrap_or_else(|| self.world_dir.join("policy.yaml"))
    }

    pub fn load_env(&self) -> Result<Env, Failure> {
        let world = load_world(&self.graph_path(), &self.pois_path()).input()?;
        let policy = Policy::load(&self.policy_path()).input()?;
        Ok(Env {
            world: Arc::new(world),
            policy: Arc::new(policy),
            policy_path: self.policy_path(),
        })
    }

    /// Backend chosen on the command line, if any.
    pub fn backend(&self) -> Result<Option<Arc<SharedBackend>>, Failure> {
        if let Some(path) = &self.oracle {
            let script = OracleScript::load(path).input()?;
            return Ok(Some(SharedBackend::new(OracleBackend::new(script))));
        }
        Ok(self
            .vlm_endpoint
            .as_ref()
            .map(|url| SharedBackend::new(HttpChatBackend::new(url.clone(), self.vlm_model.clone()))))
    }

    pub fn digest_override(&self) -> Option<Option<PathBuf>> {
        if self.no_digest {
            Some(None)
        } else {
            self.digest.clone().map(Some)
        }
    }

    pub fn session_options(&self, out_dir: PathBuf) -> SessionOptions {
        SessionOptions {
            out_dir,
            frozen_clock: self.frozen_clock,
            force_bridge: false,
            digest_override: self.digest_override(),
            policy_path: self.policy_path().display().to_string(),
        }
    }

    pub fn load_script(&self, path: &Path) -> Result<ScenarioScript, Failure> {
        let mut script = ScenarioScript::load(path).input()?;
        if let Some(seed) = self.seed {
            script.nav.seed = seed;
        }
        Ok(script)
    }
}

fn needs_world(cmd: &Command) -> bool {
    !matches!(cmd, Command::Stats { .. } | Command::CompileDigest { .. } | Command::Report { .. })
}

/// Every path named on the command line must exist before anything runs.
fn validate_paths(cli: &Cli) -> CmdResult {
    let cfg = &cli.config;
    let mut paths: Vec<PathBuf> = Vec::new();
    if needs_world(&cli.command) || matches!(cli.command, Command::CompileDigest { .. }) {
        paths.extend([cfg.graph_path(), cfg.pois_path(), cfg.policy_path()]);
    }
    paths.extend(cfg.digest.clone());
    paths.extend(cfg.oracle.clone());
    match &cli.command {
        Command::RunSession { script, .. } => paths.push(script.clone()),
        Command::RunConcurrent { scripts, .. } => paths.extend(scripts.iter().cloned()),
        Command::ServeBridge { script, .. } => paths.extend(script.clone()),
        Command::ExtractMemory { logs, .. } => paths.extend(logs.iter().cloned()),
        Command::RefreshMemory { logs, .. } => paths.push(logs.clone()),
        Command::CompileDigest { memory_dir, .. } => paths.push(memory_dir.clone()),
        Command::Report { logs, definitions, .. } => {
            paths.extend(logs.iter().cloned());
            paths.extend(definitions.clone());
        }
        _ => {}
    }
    match paths.iter().find(|p| !p.exists()) {
        Some(p) => Err(Failure::Input(anyhow!("{}: no such file or directory", p.display()))),
        None => Ok(()),
    }
}

pub fn run(cli: &Cli) -> CmdResult {
    validate_paths(cli)?;
    let cfg = &cli.config;
    let out = Out { format: cfg.format };
    match &cli.command {
        Command::Resolve { instruction, pose, trace } => cmd_resolve(cfg, &out, instruction, *pose, *trace),
        Command::RunSession { script, bridge } => cmd_run_session(cfg, &out, script, *bridge),
        Command::RunConcurrent {
            scripts,
            check_sequential,
        } => cmd_run_concurrent(cfg, &out, scripts, *check_sequential),
        Command::ServeBridge {
            bind,
            pose,
            script,
            duration_s,
        } => cmd_serve_bridge(cfg, &out, bind, *pose, script.as_deref(), *duration_s),
        Command::ExtractMemory {
            logs,
            platforms,
            memory_dir,
        } => cmd_extract(cfg, &out, logs, platforms, memory_dir),
        Command::RefreshMemory {
            logs,
            memory_dir,
            platforms,
        } => cmd_refresh(cfg, &out, logs, memory_dir, platforms),
        Command::CompileDigest { memory_dir, output } => cmd_compile(cfg, &out, memory_dir, output.as_deref()),
        Command::Report { logs, definitions, csv } => cmd_report(&out, logs, definitions.as_deref(), csv.as_deref()),
        Command::Stats { test } => cmd_stats(&out, test),
        Command::Repl { pose, bridge } => crate::repl::run(cfg, &out, *pose, *bridge),
    }
}

fn cmd_resolve(cfg: &Config, out: &Out, instruction: &str, pose: Option<Pose>, trace: bool) -> CmdResult {
    let env = cfg.load_env()?;
    let pose = match (pose, &cfg.context_url) {
        (Some(p), _) => p,
        (None, Some(url)) => HttpContext::new(url).pose().runtime()?,
        (None, None) => Pose::default(),
    };
    let digest = if cfg.no_digest {
        semnav_core::memory::LoadedDigest::absent()
    } else {
        load_digest(cfg.digest.as_deref())
    };
    let index = digest.digest.as_ref().map(PreferenceIndex::from_digest);
    semnav_core::resolver::warm_up();
    let (outcome, steps) = resolve_traced(instruction, &env.world, &pose, index.as_ref(), &env.policy);

    let trace_json: Vec<Value> = steps
        .steps
        .iter()
        .map(|s| json!({"step": s.step, "matched": s.matched, "detail": s.detail}))
        .collect();
    let (text, mut record) = match &outcome {
        ResolveOutcome::Resolved(r) => {
            let mut text = format!(
                "node {} / step {} ({}, {:.1} us)",
                r.node_id,
                r.step.map_or("-".into(), |s| s.to_string()),
                r.method,
                r.resolve_time_us
            );
            if let Some(m) = &r.m3_match {
                text.push_str(&format!("\n  preference `{}` jaccard {:.3} frequency {}", m.preference_key, m.jaccard, m.frequency));
            }
            (
                text,
                json!({
                    "instruction": instruction,
                    "outcome": "resolved",
                    "node_id": r.node_id,
                    "step": r.step,
                    "method": r.method,
                    "m3_match": r.m3_match,
                    "resolve_time_us": r.resolve_time_us,
                }),
            )
        }
        ResolveOutcome::Escalate(e) => (
            format!("escalate to L3b: {} ({:.1} us)", e.reason, e.resolve_time_us),
            json!({
                "instruction": instruction,
                "outcome": "escalate",
                "reason": e.reason,
                "resolve_time_us": e.resolve_time_us,
            }),
        ),
    };
    let mut text = text;
    if trace || outcome.is_escalation() {
        for s in &steps.steps {
            text.push_str(&format!(
                "\n  step {} {}: {}",
                s.step,
                if s.matched { "hit " } else { "miss" },
                s.detail
            ));
        }
    }
    record["trace"] = Value::Array(trace_json);
    out.emit(text, record);
    Ok(())
}

fn print_session(out: &Out, s: &SessionArtifacts) {
    for m in &s.missions {
        let mark = match m.correct {
            Some(true) => "ok",
            Some(false) => "WRONG",
            None => "-",
        };
        out.emit(
            format!(
                "#{:<3} {:<18} node {:<4} {:<16} {:<5} {}{}",
                m.index,
                m.method.as_str(),
                m.node_id.map_or("-".into(), |n| n.to_string()),
                serde_json::to_value(m.nav_outcome).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default(),
                mark,
                if m.return_command { "[return] " } else { "" },
                m.instruction
            ),
            json!({"platform_id": s.platform_id, "session_id": s.session_id, "mission": m}),
        );
    }
    let counts = s.method_counts();
    let count = |m: ResolutionMethod| counts.get(&m).copied().unwrap_or(0);
    out.emit(
        format!(
            "{} / {}: {} decisions, m3 {}, deterministic {}, vlm {}, all correct: {}\naudit: {}\ndigest: {}",
            s.session_id,
            s.platform_id,
            s.scenario_missions().count(),
            count(ResolutionMethod::L3aM3Preference),
            count(ResolutionMethod::L3aDeterministic),
            count(ResolutionMethod::L3bVlm),
            s.all_correct(),
            s.audit_path.display(),
            s.digest_hash()
        ),
        json!({
            "summary": true,
            "platform_id": s.platform_id,
            "session_id": s.session_id,
            "decisions": s.scenario_missions().count(),
            "methods": counts.iter().map(|(k, v)| (k.as_str().to_owned(), json!(v))).collect::<serde_json::Map<_, _>>(),
            "all_correct": s.all_correct(),
            "audit_path": s.audit_path,
            "monitor_path": s.monitor_path,
            "memory_digest_hash": s.digest_hash(),
        }),
    );
}

fn cmd_run_session(cfg: &Config, out: &Out, path: &Path, bridge: bool) -> CmdResult {
    let env = cfg.load_env()?;
    let script = cfg.load_script(path)?;
    let backend = match cfg.backend()? {
        Some(b) => Some(b),
        None => backend_for_script(&script).input()?,
    };
    let mut options = cfg.session_options(cfg.out_dir.clone());
    options.force_bridge = bridge;
    let artifacts = run_session(&script, env.world, env.policy, backend, &options).runtime()?;
    print_session(out, &artifacts);
    Ok(())
}

fn cmd_run_concurrent(cfg: &Config, out: &Out, paths: &[PathBuf], check_sequential: bool) -> CmdResult {
    let env = cfg.load_env()?;
    let scripts = paths.iter().map(|p| cfg.load_script(p)).collect::<Result<Vec<_>, _>>()?;
    let shared = cfg.backend()?;
    let options = cfg.session_options(cfg.out_dir.clone());
    let run = run_concurrent(&scripts, Arc::clone(&env.world), Arc::clone(&env.policy), shared, &options)
        .runtime()?;
    for s in &run.sessions {
        print_session(out, s);
    }
    let ig = &run.integrity;
    let yes = |b: bool| if b { "yes" } else { "NO" };
    let mut text = format!(
        "same digest: {}\nplatform pure: {}\nall correct: {}",
        yes(ig.same_digest),
        yes(ig.platform_pure),
        yes(ig.all_correct)
    );
    for (p, h) in &ig.digest_hashes {
        text.push_str(&format!("\n  {p}: {h}"));
    }
    if let Some(b) = &ig.backend {
        text.push_str(&format!("\nbackend: {} call(s), busy {:.3} s", b.calls, b.busy.as_secs_f64()));
    }
    for v in &ig.violations {
        text.push_str(&format!("\nviolation: {v}"));
    }

    let mut mismatched = Vec::new();
    if check_sequential {
        let seq_options = cfg.session_options(cfg.out_dir.join("sequential"));
        let mut sequential = Vec::new();
        for script in &scripts {
            let backend = backend_for_script(script).input()?;
            sequential.push(
                run_session(script, Arc::clone(&env.world), Arc::clone(&env.policy), backend, &seq_options)
                    .runtime()?,
            );
        }
        mismatched = compare_runs(&run.sessions, &sequential);
        text.push_str(&format!(
            "\nsequential vs concurrent: {}",
            if mismatched.is_empty() {
                "identical".to_owned()
            } else {
                format!("differ for {}", mismatched.join(", "))
            }
        ));
    }
    out.emit(
        text,
        json!({
            "integrity": {
                "same_digest": ig.same_digest,
                "platform_pure": ig.platform_pure,
                "all_correct": ig.all_correct,
                "digest_hashes": ig.digest_hashes,
                "violations": ig.violations,
                "backend_calls": ig.backend.map(|b| b.calls),
            },
            "sequential_mismatch": check_sequential.then_some(&mismatched),
        }),
    );
    if !ig.passed() || !mismatched.is_empty() {
        return Err(Failure::Runtime(anyhow!("integrity check failed")));
    }
    Ok(())
}

fn cmd_serve_bridge(
    cfg: &Config,
    out: &Out,
    bind: &str,
    pose: Option<Pose>,
    script: Option<&Path>,
    duration_s: Option<f64>,
) -> CmdResult {
    let env = cfg.load_env()?;
    let mut state = SimState::default();
    if let Some(p) = script {
        let s = cfg.load_script(p)?;
        state.pose = s.start_pose;
        state.detections = s.detections;
    }
    if let Some(p) = pose {
        state.pose = p;
    }
    let handle = serve_context_bridge(bind, env.world, shared_state(state)).runtime()?;
    out.emit(format!("serving context on {}", handle.url()), json!({"url": handle.url()}));
    match duration_s {
        Some(s) => {
            std::thread::sleep(Duration::from_secs_f64(s.max(0.0)));
            handle.stop();
        }
        None => loop {
            std::thread::park();
        },
    }
    Ok(())
}

/// Files as given; directories expand to their *.jsonl files, sorted.
fn expand_logs(paths: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut inner: Vec<PathBuf> = std::fs::read_dir(p)
                .input()?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "jsonl"))
                .collect();
            inner.sort();
            files.extend(inner);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn cmd_extract(cfg: &Config, out: &Out, logs: &[PathBuf], platforms: &[String], memory_dir: &Path) -> CmdResult {
    let env = cfg.load_env()?;
    let files = expand_logs(logs)?;
    let refs: Vec<&Path> = files.iter().map(PathBuf::as_path).collect();
    let platforms: Vec<String> = if platforms.is_empty() {
        cfg.platform_id.iter().cloned().collect()
    } else {
        platforms.to_vec()
    };
    let store = extract_memory(&refs, &platforms, Some(&env.world), &env.policy).input()?;
    let compiled = compile_digest(&store, &env.policy);
    store.write_to(memory_dir, &compiled).runtime()?;
    let promoted: Vec<&str> = store.promotions().map(|p| p.key.as_str()).collect();
    out.emit(
        format!(
            "{} log file(s), {} decision(s)\nM1 {} | M2 {} | M3 {} ({} promoted) | M4 {} | M5 {}\ndigest: {} chars{}, MD5 {}\nwritten to {}",
            files.len(),
            store.m5.len(),
            store.m1.len(),
            store.m2.len(),
            store.m3.len(),
            promoted.len(),
            store.m4.len(),
            store.m5.len(),
            compiled.text.chars().count(),
            if compiled.trimmed { " (trimmed)" } else { "" },
            compiled.md5,
            memory_dir.display()
        ),
        json!({
            "files": files,
            "decisions": store.m5.len(),
            "counts": {"m1": store.m1.len(), "m2": store.m2.len(), "m3": store.m3.len(), "m4": store.m4.len(), "m5": store.m5.len()},
            "promotions": promoted,
            "unknown_platforms": store.unknown_platforms,
            "digest_chars": compiled.text.chars().count(),
            "trimmed": compiled.trimmed,
            "md5": compiled.md5,
        }),
    );
    Ok(())
}

fn cmd_refresh(cfg: &Config, out: &Out, logs: &Path, memory_dir: &Path, platforms: &[String]) -> CmdResult {
    let env = cfg.load_env()?;
    let options = RefreshOptions {
        platforms: platforms.to_vec(),
    };
    let report = refresh_workflow(logs, memory_dir, Some(&env.world), &env.policy, &options).input()?;
    out.emit(
        report.render().trim_end(),
        json!({
            "files_validated": report.files_validated,
            "decisions": report.decisions,
            "backup": report.backup,
            "old_md5": report.old_md5,
            "new_md5": report.new_md5,
            "diff": report.diff,
            "trimmed": report.trimmed,
        }),
    );
    Ok(())
}

fn cmd_compile(cfg: &Config, out: &Out, memory_dir: &Path, output: Option<&Path>) -> CmdResult {
    let policy = Policy::load(&cfg.policy_path()).input()?;
    let store = MemoryStore::load_dir(memory_dir).input()?;
    let compiled = compile_digest(&store, &policy);
    let target = output.map_or_else(|| memory_dir.join(DIGEST_FILE), Path::to_path_buf);
    write_digest_atomic(&target, &compiled.text).runtime()?;
    out.emit(
        format!(
            "{}: {} chars, {} promotion(s){}\nMD5: {}",
            target.display(),
            compiled.text.chars().count(),
            compiled.digest.l3a_promotions_ready.len(),
            if compiled.trimmed { ", trimmed" } else { "" },
            compiled.md5
        ),
        json!({
            "path": target,
            "chars": compiled.text.chars().count(),
            "promotions": compiled.digest.l3a_promotions_ready.len(),
            "trimmed": compiled.trimmed,
            "over_limit": compiled.over_limit,
            "md5": compiled.md5,
        }),
    );
    Ok(())
}

fn tally_row(label: &str, t: &Tally) -> String {
    format!(
        "{:<10} {:>5} {:>5} {:>5} {:>5} {:>7} {:>5} {:>5}",
        label,
        t.decisions,
        t.method(ResolutionMethod::L3aM3Preference),
        t.method(ResolutionMethod::L3aDeterministic),
        t.method(ResolutionMethod::L3bVlm),
        format!("{}/{}", t.correct, t.judged),
        t.nav_complete,
        t.confirmed
    )
}

fn render_report(r: &SessionReport) -> String {
    let mut lines = vec![format!(
        "{:<10} {:>5} {:>5} {:>5} {:>5} {:>7} {:>5} {:>5}",
        "scenario", "n", "m3", "det", "vlm", "correct", "nav", "conf"
    )];
    lines.extend(r.per_scenario.iter().map(|(k, t)| tally_row(k, t)));
    lines.push(tally_row("total", &r.overall));
    for (p, t) in &r.per_platform {
        lines.push(tally_row(p, t));
    }
    let pct = |v: Option<f64>| v.map_or("n/a".into(), |x| format!("{:.1}%", x * 100.0));
    lines.push(format!(
        "fast path {}/{} ({}), semantic accuracy {}, navigation completion {}",
        r.overall.fast_path(),
        r.overall.decisions,
        pct(r.fast_path_rate),
        pct(r.semantic_accuracy),
        pct(r.navigation_completion)
    ));
    if let Some(s) = &r.l3a_resolve_ms {
        lines.push(format!("L3a resolve: n={} mean {:.4} ms max {:.4} ms", s.n, s.mean, s.max));
    }
    if let Some(s) = &r.vlm_ms {
        lines.push(format!("L3b model: n={} mean {:.0} ms sd {:.0} ms", s.n, s.mean, s.sd_population));
    }
    if r.excluded_returns > 0 {
        lines.push(format!("{} return command(s) excluded", r.excluded_returns));
    }
    if !r.unclassified.is_empty() {
        lines.push(format!("unclassified: {}", r.unclassified.join(" | ")));
    }
    lines.join("\n")
}

fn cmd_report(out: &Out, logs: &[PathBuf], definitions: Option<&Path>, csv: Option<&Path>) -> CmdResult {
    let defs = match definitions {
        Some(p) => ScenarioDefinitions::load(p).input()?,
        None => ScenarioDefinitions::default(),
    };
    let files = expand_logs(logs)?;
    let refs: Vec<&Path> = files.iter().map(PathBuf::as_path).collect();
    let report = build_session_report(&refs, &defs).input()?;
    if let Some(path) = csv {
        write_report_csv(&report, path).runtime()?;
    }
    out.emit(render_report(&report), serde_json::to_value(&report).runtime()?);
    Ok(())
}

fn summary_arg(v: &[f64], name: &str) -> Result<(f64, f64, usize), Failure> {
    match v {
        [m, s, n] if *n >= 0.0 && n.fract() == 0.0 => Ok((*m, *s, *n as usize)),
        _ => Err(Failure::Input(anyhow!("--{name} expects mean,sd,n"))),
    }
}

fn cmd_stats(out: &Out, test: &StatsCommand) -> CmdResult {
    match test {
        StatsCommand::ClopperPearson { successes, n, alpha } => {
            let (lo, hi) = clopper_pearson_interval(*successes, *n, *alpha).input()?;
            out.emit(
                format!("[{lo:.3}, {hi:.3}]"),
                json!({"test": "clopper_pearson", "successes": successes, "n": n, "alpha": alpha, "lower": lo, "upper": hi}),
            );
        }
        StatsCommand::MannWhitney {
            a,
            b,
            alternative,
            exact,
        } => {
            let alt = match alternative {
                AlternativeArg::Greater => Alternative::Greater,
                AlternativeArg::Less => Alternative::Less,
                AlternativeArg::TwoSided => Alternative::TwoSided,
            };
            let method = if *exact { PMethod::Exact } else { PMethod::Normal };
            let r = mann_whitney(a, b, alt, method).input()?;
            let z = r.z.map_or(String::new(), |z| format!(", z = {z:.3}"));
            out.emit(
                format!("U = {}, p = {:.3e}{z}", r.u, r.p),
                json!({"test": "mann_whitney", "alternative": alt, "u": r.u, "p": r.p, "z": r.z, "method": r.method}),
            );
        }
        StatsCommand::CohensD {
            a,
            b,
            a_summary,
            b_summary,
        } => {
            let d = match (a_summary, b_summary) {
                (None, None) => cohens_d(a, b).input()?,
                _ => {
                    let sa = match a_summary {
                        Some(v) => summary_arg(v, "a-summary")?,
                        None => summary_of(a),
                    };
                    let sb = match b_summary {
                        Some(v) => summary_arg(v, "b-summary")?,
                        None => summary_of(b),
                    };
                    cohens_d_from_summary(sa.0, sa.1, sa.2, sb.0, sb.1, sb.2).input()?
                }
            };
            out.emit(format!("d = {d:.2}"), json!({"test": "cohens_d", "d": d}));
        }
        StatsCommand::Fisher { a, b, c, d } => {
            let p = fishers_exact_2x2([[*a, *b], [*c, *d]]);
            out.emit(
                format!("p = {p:.3}"),
                json!({"test": "fisher_exact", "table": [[a, b], [c, d]], "p": p}),
            );
        }
    }
    Ok(())
}

fn summary_of(xs: &[f64]) -> (f64, f64, usize) {
    use semnav_core::analytics::{mean, sd_sample};
    if xs.len() < 2 {
        return (xs.first().copied().unwrap_or(0.0), 0.0, xs.len());
    }
    (mean(xs), sd_sample(xs), xs.len())
}
