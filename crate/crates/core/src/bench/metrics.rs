use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{BenchError, Status, TaskResult};

/// Solved over solved, unsolvable, timed-out and errored tasks; ill-posed
/// tasks are excluded.
pub fn metric_tc<'a>(results: impl IntoIterator<Item = &'a TaskResult>) -> Result<f64, BenchError> {
    let (mut solved, mut total) = (0usize, 0usize);
    for r in results {
        match r.status {
            Status::IllPosed(_) => {}
            Status::Solved => {
                solved += 1;
                total += 1;
            }
            _ => total += 1,
        }
    }
    if total == 0 {
        return Err(BenchError::EmptyDenominator);
    }
    Ok(solved as f64 / total as f64)
}

fn mean_over_solved<'a>(results: impl IntoIterator<Item = &'a TaskResult>, f: impl Fn(&TaskResult) -> f64) -> Result<f64, BenchError> {
    let v: Vec<f64> = results.into_iter().filter(|r| r.status == Status::Solved).map(f).collect();
    if v.is_empty() {
        return Err(BenchError::EmptyDenominator);
    }
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

/// Mean wall seconds over solved tasks.
pub fn metric_time<'a>(results: impl IntoIterator<Item = &'a TaskResult>) -> Result<f64, BenchError> {
    mean_over_solved(results, |r| r.wall_seconds)
}

/// Mean plan length over solved tasks.
pub fn metric_len<'a>(results: impl IntoIterator<Item = &'a TaskResult>) -> Result<f64, BenchError> {
    mean_over_solved(results, |r| r.plan_length.unwrap_or(0) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub config: String,
    pub category: String,
    pub split: String,
    pub tasks: usize,
    pub ill_posed: usize,
    pub tc: Option<f64>,
    pub time: Option<f64>,
    pub length: Option<f64>,
    /// Timeouts over the tasks in the TC denominator.
    pub timeout_rate: Option<f64>,
}

/// One row per (config, category, split), configs in first-seen order.
pub fn aggregate(results: &[TaskResult]) -> Vec<Aggregate> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<(usize, &str, &str), Vec<&TaskResult>> = BTreeMap::new();
    for r in results {
        let ci = match order.iter().position(|c| *c == r.config) {
            Some(i) => i,
            None => {
                order.push(&r.config);
                order.len() - 1
            }
        };
        groups.entry((ci, r.category.as_str(), r.split.as_str())).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((ci, category, split), rs)| {
            let ill_posed = rs.iter().filter(|r| matches!(r.status, Status::IllPosed(_))).count();
            let counted = rs.len() - ill_posed;
            let timeouts = rs.iter().filter(|r| r.status == Status::Timeout).count();
            Aggregate {
                config: order[ci].to_string(),
                category: category.to_string(),
                split: split.to_string(),
                tasks: rs.len(),
                ill_posed,
                tc: metric_tc(rs.iter().copied()).ok(),
                time: metric_time(rs.iter().copied()).ok(),
                length: metric_len(rs.iter().copied()).ok(),
                timeout_rate: (counted > 0).then(|| timeouts as f64 / counted as f64),
            }
        })
        .collect()
}
