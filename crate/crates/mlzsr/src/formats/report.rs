//! The `MLZSR-REPORT v1` evaluation report: one metric per line with fixed
//! columns `scenario metric k value mean sem`. `mean` and `sem` are `-` for
//! single-run evaluations.

use mlzsr_core::eval::{EvalReport, MetricValues, ScenarioKind};

use super::{LineReader, ParseResult};

pub const REPORT_HEADER: &str = "MLZSR-REPORT v1";
pub const REPORT_COLUMNS: &str = "# scenario metric k value mean sem";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRecord {
    pub scenario: ScenarioKind,
    pub metric: String,
    pub k: usize,
    pub value: f64,
    pub mean: Option<f64>,
    pub sem: Option<f64>,
}

impl ReportRecord {
    pub fn of(reports: &[EvalReport]) -> Vec<ReportRecord> {
        reports
            .iter()
            .flat_map(|r| r.records())
            .map(|r| ReportRecord {
                scenario: r.scenario,
                metric: r.metric.to_string(),
                k: r.k,
                value: r.value,
                mean: r.mean,
                sem: r.sem,
            })
            .collect()
    }
}

fn optional(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:?}"))
}

pub fn write_report(reports: &[EvalReport]) -> String {
    let mut out = format!("{REPORT_HEADER}\n{REPORT_COLUMNS}\n");
    for r in ReportRecord::of(reports) {
        out.push_str(&format!(
            "{} {} {} {:?} {} {}\n",
            r.scenario,
            r.metric,
            r.k,
            r.value,
            optional(r.mean),
            optional(r.sem)
        ));
    }
    out
}

pub fn parse_report(text: &str) -> ParseResult<Vec<ReportRecord>> {
    let mut r = LineReader::new(text);
    r.expect_exact(REPORT_HEADER)?;
    r.expect_exact(REPORT_COLUMNS)?;
    let mut out = Vec::new();
    while let Ok(l) = r.next("record") {
        if l.trim().is_empty() {
            r.finish()?;
            break;
        }
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 6 {
            return Err(r.error(format!("expected 6 fields, found {}", f.len())));
        }
        let scenario = f[0]
            .parse::<ScenarioKind>()
            .map_err(|_| r.error(format!("unknown scenario `{}`", f[0])))?;
        if !MetricValues::NAMES.contains(&f[1]) {
            return Err(r.error(format!("unknown metric `{}`", f[1])));
        }
        let opt = |s: &str| -> ParseResult<Option<f64>> {
            if s == "-" {
                Ok(None)
            } else {
                r.value::<f64>(s, "number").map(Some)
            }
        };
        out.push(ReportRecord {
            scenario,
            metric: f[1].to_string(),
            k: r.value(f[2], "k")?,
            value: r.value(f[3], "metric value")?,
            mean: opt(f[4])?,
            sem: opt(f[5])?,
        });
    }
    Ok(out)
}
