//! Ranking metrics, evaluation scenarios, the random-guess baseline and
//! report assembly.

mod metrics;
mod report;
mod rgs;
mod scenario;

pub use metrics::{average_precision, i_map, l_map, mean_average_precision, overall_prf, precision_at_k, Prf};
pub use report::{
    aggregate_reports, evaluate, evaluate_i_map, summarize, EvalReport, MetricRecord, MetricSummary, MetricValues,
    DEFAULT_K,
};
pub use rgs::{rgs_baseline, RGS_TRIALS};
pub use scenario::{apply_scenario, Scenario, ScenarioKind, ScenarioView};
