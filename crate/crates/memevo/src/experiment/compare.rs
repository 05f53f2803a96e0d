//! Side-by-side comparison of two experiment runs.

use std::fmt;

use crate::error::{Error, Result};
use crate::experiment::RunStatistics;

/// Per-instance differences between two modes (b minus a; negative cost
/// deltas mean b is better).
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceDelta {
    pub instance: String,
    pub ave_cost_delta: f64,
    pub best_cost_delta: f64,
    pub success_no_delta: i64,
}

/// Comparison of two same-sequence runs, with a one-sided paired sign test
/// on average cost (alternative: b's averages are lower).
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub mode_a: String,
    pub mode_b: String,
    pub deltas: Vec<InstanceDelta>,
    pub sign_test_p_value: f64,
}

/// Compares two statistics sequences over the same instances.
pub fn compare_modes(
    stats_a: &[RunStatistics],
    stats_b: &[RunStatistics],
) -> Result<ComparisonReport> {
    if stats_a.len() != stats_b.len() {
        return Err(Error::MismatchedInstances(format!(
            "{} vs {} instances",
            stats_a.len(),
            stats_b.len()
        )));
    }
    for (a, b) in stats_a.iter().zip(stats_b) {
        if a.instance != b.instance {
            return Err(Error::MismatchedInstances(format!(
                "{:?} vs {:?}",
                a.instance, b.instance
            )));
        }
    }
    let deltas: Vec<InstanceDelta> = stats_a
        .iter()
        .zip(stats_b)
        .map(|(a, b)| InstanceDelta {
            instance: a.instance.clone(),
            ave_cost_delta: b.ave_cost - a.ave_cost,
            best_cost_delta: b.best_cost - a.best_cost,
            success_no_delta: b.success_no as i64 - a.success_no as i64,
        })
        .collect();

    let wins = deltas.iter().filter(|d| d.ave_cost_delta < 0.0).count();
    let ties = deltas.iter().filter(|d| d.ave_cost_delta == 0.0).count();
    let trials = deltas.len() - ties;

    Ok(ComparisonReport {
        mode_a: stats_a.first().map_or(String::new(), |s| s.mode.as_str().into()),
        mode_b: stats_b.first().map_or(String::new(), |s| s.mode.as_str().into()),
        deltas,
        sign_test_p_value: sign_test_upper_tail(wins, trials),
    })
}

/// P(X >= wins) for X ~ Binomial(trials, 1/2); 1.0 when every pair tied.
fn sign_test_upper_tail(wins: usize, trials: usize) -> f64 {
    if trials == 0 {
        return 1.0;
    }
    let mut p = 0.0;
    for k in wins..=trials {
        p += binomial(trials, k);
    }
    p / 2f64.powi(trials as i32)
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "comparison: {} vs {}", self.mode_a, self.mode_b)?;
        writeln!(
            f,
            "{:<20} {:>14} {:>14} {:>12}",
            "instance", "d(ave_cost)", "d(b_cost)", "d(success)"
        )?;
        for d in &self.deltas {
            writeln!(
                f,
                "{:<20} {:>14.4} {:>14.4} {:>12}",
                d.instance, d.ave_cost_delta, d.best_cost_delta, d.success_no_delta
            )?;
        }
        write!(
            f,
            "one-sided paired sign test on ave_cost: p = {:.6}",
            self.sign_test_p_value
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::Mode;

    fn stat(instance: &str, mode: Mode, ave: f64) -> RunStatistics {
        RunStatistics {
            instance: instance.into(),
            mode,
            best_cost: ave - 1.0,
            ave_cost: ave,
            std_dev: 0.0,
            success_no: 10,
            evaluation_count: 100.0,
            cpu_time_seconds: 0.1,
        }
    }

    #[test]
    fn identical_inputs_give_zero_deltas_and_p_one() {
        let a: Vec<_> = (0..5)
            .map(|i| stat(&format!("i{}", i), Mode::Heuristic, 100.0 + i as f64))
            .collect();
        let report = compare_modes(&a, &a).unwrap();
        assert!(report.deltas.iter().all(|d| d.ave_cost_delta == 0.0));
        assert_eq!(report.sign_test_p_value, 1.0);
    }

    #[test]
    fn uniform_improvement_is_significant_with_seven_instances() {
        let a: Vec<_> = (0..7)
            .map(|i| stat(&format!("i{}", i), Mode::Heuristic, 100.0))
            .collect();
        let b: Vec<_> = (0..7)
            .map(|i| stat(&format!("i{}", i), Mode::Meme, 95.0))
            .collect();
        let report = compare_modes(&a, &b).unwrap();
        assert!(report.sign_test_p_value < 0.01);
        assert_eq!(report.mode_a, "heuristic");
        assert_eq!(report.mode_b, "meme");
        let shown = report.to_string();
        assert!(shown.contains("heuristic") && shown.contains("meme"));
    }

    #[test]
    fn mismatched_instances_are_rejected() {
        let a = vec![stat("x", Mode::Heuristic, 1.0)];
        let b = vec![stat("y", Mode::Meme, 1.0)];
        assert!(matches!(
            compare_modes(&a, &b),
            Err(Error::MismatchedInstances(_))
        ));
    }
}
