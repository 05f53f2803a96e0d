//! Experiment driver: instance sequences, statistics and mode comparison.

mod compare;
mod runner;

pub use compare::{compare_modes, ComparisonReport, InstanceDelta};
pub use runner::{load_instance, mix_seed, run_sequence};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How initial populations are built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Meme-pool transfer; behaves like Heuristic while the pool is empty.
    Meme,
    /// Random permutations through the optimal split.
    Random,
    /// Baseline: nearest-neighbor tour plus random permutations.
    Heuristic,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Meme => "meme",
            Mode::Random => "random",
            Mode::Heuristic => "heuristic",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Mode> {
        match s.to_ascii_lowercase().as_str() {
            "meme" | "m" => Ok(Mode::Meme),
            "random" | "r" => Ok(Mode::Random),
            "heuristic" | "h" | "baseline" => Ok(Mode::Heuristic),
            other => Err(Error::Config(format!("unknown mode {:?}", other))),
        }
    }
}

fn default_runs() -> usize {
    30
}
fn default_feature_dim() -> usize {
    2
}
fn default_population() -> usize {
    30
}
fn default_p_ls() -> f64 {
    0.2
}

/// A full experiment description, usually loaded from TOML.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub instance_paths: Vec<PathBuf>,
    pub mode: Mode,
    #[serde(default = "default_runs")]
    pub runs_per_instance: usize,
    pub max_evaluations: u64,
    pub pool_path: PathBuf,
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default = "default_population")]
    pub population_size: usize,
    #[serde(default = "default_p_ls")]
    pub p_local_search: f64,
    #[serde(default = "default_feature_dim")]
    pub feature_dim: usize,
    /// Per-instance success thresholds, aligned with `instance_paths`.
    /// Defaults to each instance's own average cost.
    #[serde(default)]
    pub success_thresholds: Option<Vec<f64>>,
    /// Parallel runs per instance; defaults to the rayon global pool.
    #[serde(default)]
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig> {
        let config: ExperimentConfig = toml::from_str(text)
            .map_err(|e| Error::Config(format!("bad experiment config: {}", e)))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.instance_paths.is_empty() {
            return Err(Error::Config("instance_paths must be nonempty".into()));
        }
        if self.runs_per_instance < 1 {
            return Err(Error::Config("runs_per_instance must be >= 1".into()));
        }
        if let Some(t) = &self.success_thresholds {
            if t.len() != self.instance_paths.len() {
                return Err(Error::Config(
                    "success_thresholds must align with instance_paths".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Aggregate statistics of one instance's independent runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStatistics {
    pub instance: String,
    pub mode: Mode,
    pub best_cost: f64,
    pub ave_cost: f64,
    pub std_dev: f64,
    pub success_no: usize,
    /// Mean fitness evaluations consumed per run.
    pub evaluation_count: f64,
    /// Mean wall-clock seconds per run.
    pub cpu_time_seconds: f64,
}

impl RunStatistics {
    pub fn from_runs(
        instance: &str,
        mode: Mode,
        costs: &[f64],
        evals: &[u64],
        seconds: &[f64],
        success_threshold: Option<f64>,
    ) -> RunStatistics {
        let n = costs.len() as f64;
        let best_cost = costs.iter().cloned().fold(f64::INFINITY, f64::min);
        let ave_cost = costs.iter().sum::<f64>() / n;
        let variance = costs.iter().map(|c| (c - ave_cost).powi(2)).sum::<f64>() / n;
        let threshold = success_threshold.unwrap_or(ave_cost);
        RunStatistics {
            instance: instance.to_string(),
            mode,
            best_cost,
            ave_cost,
            std_dev: variance.sqrt(),
            success_no: costs.iter().filter(|&&c| c <= threshold + 1e-9).count(),
            evaluation_count: evals.iter().sum::<u64>() as f64 / n,
            cpu_time_seconds: seconds.iter().sum::<f64>() / n,
        }
    }

    pub const CSV_HEADER: &'static str =
        "instance,mode,b_cost,ave_cost,std_dev,success_no,evals,cpu_s";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.6}",
            self.instance,
            self.mode.as_str(),
            self.best_cost,
            self.ave_cost,
            self.std_dev,
            self.success_no,
            self.evaluation_count,
            self.cpu_time_seconds
        )
    }

    pub fn from_csv_row(line: &str, lineno: usize) -> Result<RunStatistics> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::parse(
                format!("stats line {}", lineno),
                format!("expected 8 fields, got {}", fields.len()),
            ));
        }
        let parse_f = |s: &str, what: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| Error::parse(format!("stats line {}", lineno), format!("bad {}", what)))
        };
        Ok(RunStatistics {
            instance: fields[0].trim().to_string(),
            mode: fields[1].trim().parse()?,
            best_cost: parse_f(fields[2], "b_cost")?,
            ave_cost: parse_f(fields[3], "ave_cost")?,
            std_dev: parse_f(fields[4], "std_dev")?,
            success_no: fields[5].trim().parse().map_err(|_| {
                Error::parse(format!("stats line {}", lineno), "bad success_no".to_string())
            })?,
            evaluation_count: parse_f(fields[6], "evals")?,
            cpu_time_seconds: parse_f(fields[7], "cpu_s")?,
        })
    }
}

/// Writes `stats.csv` into a directory.
pub fn write_stats_csv(dir: &Path, stats: &[RunStatistics]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let mut text = String::from(RunStatistics::CSV_HEADER);
    text.push('\n');
    for s in stats {
        text.push_str(&s.to_csv_row());
        text.push('\n');
    }
    let path = dir.join("stats.csv");
    std::fs::write(&path, text)?;
    Ok(path)
}

/// Reads a `stats.csv` produced by [`write_stats_csv`].
pub fn read_stats_csv(path: &Path) -> Result<Vec<RunStatistics>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| RunStatistics::from_csv_row(l, i + 1))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statistics_aggregate_and_round_trip() {
        let stats = RunStatistics::from_runs(
            "A-n54-k7",
            Mode::Meme,
            &[1167.0, 1167.0, 1170.0],
            &[100, 100, 100],
            &[0.5, 0.6, 0.7],
            Some(1167.0),
        );
        assert_eq!(stats.best_cost, 1167.0);
        assert_eq!(stats.success_no, 2);
        assert!(stats.best_cost <= stats.ave_cost);
        assert!(stats.std_dev >= 0.0);

        let row = stats.to_csv_row();
        let back = RunStatistics::from_csv_row(&row, 2).unwrap();
        assert_eq!(back.instance, "A-n54-k7");
        assert_eq!(back.mode, Mode::Meme);
        assert_eq!(back.success_no, 2);
        assert!((back.ave_cost - stats.ave_cost).abs() < 1e-12);
    }

    #[test]
    fn threshold_counts_runs_at_or_below() {
        let stats = RunStatistics::from_runs(
            "x",
            Mode::Heuristic,
            &[1167.0; 30],
            &[1; 30],
            &[0.0; 30],
            Some(1167.0),
        );
        assert_eq!(stats.success_no, 30);
    }

    #[test]
    fn config_toml_round_trip_and_validation() {
        let toml_text = r#"
instance_paths = ["a.vrp", "b.vrp"]
mode = "meme"
max_evaluations = 1000
pool_path = "pool.json"
seed = 7
output_dir = "out"
"#;
        let config = ExperimentConfig::from_toml(toml_text).unwrap();
        assert_eq!(config.mode, Mode::Meme);
        assert_eq!(config.runs_per_instance, 30);
        assert_eq!(config.population_size, 30);
        assert!(ExperimentConfig::from_toml("mode = \"meme\"").is_err());
    }

    #[test]
    fn mode_strings_parse() {
        assert_eq!("MEME".parse::<Mode>().unwrap(), Mode::Meme);
        assert_eq!("r".parse::<Mode>().unwrap(), Mode::Random);
        assert!("other".parse::<Mode>().is_err());
    }
}
