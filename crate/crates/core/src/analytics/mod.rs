//! Statistical tests and session reports computed from audit logs.

mod report;
mod stats;

pub use report::{
    build_session_report, report_from_entries, write_report_csv, ScenarioDefinition, ScenarioDefinitions,
    SessionReport, Tally,
};
pub use stats::{
    beta_quantile, clopper_pearson_interval, cohens_d, cohens_d_from_summary, fishers_exact_2x2, mann_whitney, mean,
    normal_sf, sd_population, sd_sample, summarize, variance, Alternative, MannWhitney, PMethod, Summary,
};
