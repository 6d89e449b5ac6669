//! Experiment grids: every sweep value, algorithm and seed, plus summaries.

use std::io::Write;

use hemilearn::learner::{ResultRow, RESULT_HEADER};
use hemilearn::metric::format_decimal;
use rayon::prelude::*;

use crate::config::{Algorithm, ExperimentConfig, TrialParams};
use crate::trial::{row_template, run_trial};
use crate::BenchError;

/// Outcome of one trial inside a sweep.
#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub row: ResultRow,
    /// `None` for a completed run, otherwise the failure reason.
    pub failure: Option<String>,
}

/// Per-point aggregate over the seeds that completed.
#[derive(Clone, Debug)]
pub struct Summary {
    pub template: ResultRow,
    pub completed: usize,
    pub attempted: usize,
    pub mean_iterations: f64,
    pub mean_user_queries: f64,
    pub std_user_queries: f64,
    pub mean_linf_error: Option<f64>,
    pub mean_wall_clock_ms: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    /// Grouped by point, in config order: values outermost, then
    /// algorithms, then seeds.
    pub groups: Vec<(Vec<TrialOutcome>, Summary)>,
}

pub fn points(config: &ExperimentConfig) -> Vec<(TrialParams, Algorithm)> {
    config
        .values
        .iter()
        .flat_map(|&v| {
            let params = config.base.with_axis(config.axis, v);
            config.algorithms.iter().map(move |&a| (params.clone(), a))
        })
        .collect()
}

pub fn sweep(config: &ExperimentConfig) -> SweepResult {
    let points = points(config);
    let seeds: Vec<u64> = (0..config.seeds).map(|s| config.first_seed + s).collect();
    let jobs: Vec<(usize, u64)> = (0..points.len()).flat_map(|p| seeds.iter().map(move |&s| (p, s))).collect();
    let outcomes: Vec<TrialOutcome> = jobs
        .par_iter()
        .map(|&(p, seed)| {
            let (params, algo) = &points[p];
            match run_trial(params, *algo, seed) {
                Ok(row) => TrialOutcome { row, failure: None },
                Err(e) => TrialOutcome {
                    row: row_template(params, *algo, seed),
                    failure: Some(e.to_string()),
                },
            }
        })
        .collect();
    let per_point = seeds.len();
    let groups = points
        .iter()
        .zip(outcomes.chunks(per_point))
        .map(|((params, algo), chunk)| {
            let summary = summarize(row_template(params, *algo, 0), chunk);
            (chunk.to_vec(), summary)
        })
        .collect();
    SweepResult { groups }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn summarize(template: ResultRow, outcomes: &[TrialOutcome]) -> Summary {
    let done: Vec<&ResultRow> = outcomes.iter().filter(|o| o.failure.is_none()).map(|o| &o.row).collect();
    let pick = |f: &dyn Fn(&ResultRow) -> f64| done.iter().map(|r| f(r)).collect::<Vec<f64>>();
    let (mean_iterations, mean_user_queries, std_user_queries) = if done.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        let queries = pick(&|r| r.user_queries as f64);
        let m = mean(&queries);
        let var = if queries.len() > 1 {
            queries.iter().map(|q| (q - m).powi(2)).sum::<f64>() / (queries.len() - 1) as f64
        } else {
            0.0
        };
        (mean(&pick(&|r| r.iterations as f64)), m, var.sqrt())
    };
    let optional_mean = |f: &dyn Fn(&ResultRow) -> Option<f64>| {
        let xs: Option<Vec<f64>> = done.iter().map(|r| f(r)).collect();
        xs.filter(|v| !v.is_empty()).map(|v| mean(&v))
    };
    Summary {
        template,
        completed: done.len(),
        attempted: outcomes.len(),
        mean_iterations,
        mean_user_queries,
        std_user_queries,
        mean_linf_error: optional_mean(&|r| r.linf_error),
        mean_wall_clock_ms: optional_mean(&|r| r.wall_clock_ms),
    }
}

pub fn sweep_header() -> Vec<&'static str> {
    let mut h = vec!["row_type"];
    h.extend(RESULT_HEADER);
    h.extend(["user_queries_std", "status"]);
    h
}

fn trial_record(o: &TrialOutcome) -> Vec<String> {
    let mut fields = o.row.fields();
    let status = match &o.failure {
        None => "ok".to_string(),
        Some(reason) => {
            for f in &mut fields[13..] {
                f.clear();
            }
            format!("failed: {reason}")
        }
    };
    let mut rec = vec!["trial".to_string()];
    rec.extend(fields);
    rec.extend([String::new(), status]);
    rec
}

fn summary_record(s: &Summary) -> Vec<String> {
    let mut fields = s.template.fields();
    let num = |v: f64| if v.is_finite() { format_decimal(v) } else { String::new() };
    fields[12] = String::new();
    fields[13] = num(s.mean_iterations);
    fields[14] = num(s.mean_user_queries);
    fields[15] = s.mean_linf_error.map(format_decimal).unwrap_or_default();
    fields[16] = s.mean_wall_clock_ms.map(|t| format!("{t:.3}")).unwrap_or_default();
    let status = if s.completed == s.attempted {
        "ok".to_string()
    } else {
        format!("{}/{} completed", s.completed, s.attempted)
    };
    let mut rec = vec!["summary".to_string()];
    rec.extend(fields);
    rec.extend([num(s.std_user_queries), status]);
    rec
}

pub fn write_sweep_csv<W: Write>(out: W, result: &SweepResult) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(sweep_header())?;
    for (trials, summary) in &result.groups {
        for t in trials {
            w.write_record(trial_record(t))?;
        }
        w.write_record(summary_record(summary))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text).unwrap()
    }

    fn csv_text(c: &ExperimentConfig) -> String {
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &sweep(c)).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn row_counts_and_order() {
        let c = config(
            "instance = restaurants-cuisine\nalgorithms = learnhm, indgreedy, indgreedy-sit\naxis = n\nvalues = 5, 8, 10\n\
             eps = 0.05\nseeds = 2\n",
        );
        let text = csv_text(&c);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 9 * 2 + 9);
        assert!(lines[3].starts_with("summary,learnhm"));
        assert!(lines[1].starts_with("trial,learnhm"));
        assert!(text.lines().skip(1).all(|l| l.ends_with(",ok")));
    }

    #[test]
    fn output_is_deterministic() {
        let c = config("instance = clustered\nk = 3\nalgorithms = learnhm, indgreedy\nvalues = 8, 12\nseeds = 3\n");
        assert_eq!(csv_text(&c), csv_text(&c));
    }

    #[test]
    fn summary_mean_matches_rows() {
        let c = config("instance = clustered\nk = 2\nvalues = 9\nseeds = 4\neps = 0.02\n");
        let result = sweep(&c);
        let (trials, summary) = &result.groups[0];
        let total: u64 = trials.iter().map(|t| t.row.user_queries).sum();
        assert!((summary.mean_user_queries - total as f64 / 4.0).abs() < 1e-9);
        let m = summary.mean_user_queries;
        let var: f64 = trials.iter().map(|t| (t.row.user_queries as f64 - m).powi(2)).sum::<f64>() / 3.0;
        assert!((summary.std_user_queries - var.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn failures_are_marked_not_fatal() {
        let c = config("instance = restaurants-mixed\nvalues = 300\nseeds = 2\n");
        let text = csv_text(&c);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].contains("failed: "));
        assert!(lines[3].ends_with("0/2 completed"));
    }
}
