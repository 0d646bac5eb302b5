//! Batch verification: configuration, planning, parallel execution and
//! report files.

pub mod config;
pub mod output;
pub mod plan;
pub mod run;

pub use config::{Format, RunConfig, Suite};
pub use plan::{Plan, Skip, Task, TaskParams};
pub use run::{run, Record, RunOutput, Summary};

use crate::error::Result;

/// Parses, validates and runs a configuration.
pub fn verify_text(text: &str) -> Result<RunOutput> {
    let plan = Plan::new(RunConfig::parse(text)?)?;
    Ok(run(&plan))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
suites = ["hpw", "bg"]
[[manifold]]
catalog = "euclidean"
n = 3
[[manifold]]
catalog = "cone(0.5,1)"
n = 3
[[corpus]]
family = "gaussian"
alpha = [1.0, 2.0]
[params.bg]
points = 16
"#;

    #[test]
    fn hpw_gaussian_is_an_equality_on_euclidean_space() {
        let out = verify_text(SMALL).unwrap();
        assert_eq!(out.summary.exit_code(), 0);
        assert_eq!(out.records.len(), 2 * 2 + 2);
        for r in out.records.iter().filter(|r| r.suite == "hpw" && r.report.theta == 1.0) {
            assert!(r.report.deficit.abs() <= 1e-7 * r.report.rhs, "{:?}", r.report);
        }
    }

    #[test]
    fn jsonl_round_trip_and_csv_rows() {
        let out = verify_text(SMALL).unwrap();
        let mut buf = Vec::new();
        output::write_jsonl(&out.records[..3], &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 3);
        let back = output::read_jsonl(&buf[..]).unwrap();
        assert_eq!(back, out.records[..3].to_vec());
        // hpw and bg on two manifolds
        assert_eq!(output::csv_rows(&out.records).len(), 4);
        let mut csv = Vec::new();
        output::write_csv(&out.records, &mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 5);
    }
}
