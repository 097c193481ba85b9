//! Monte Carlo comparison of ellipsoid-constrained long AR fits against an
//! AIC-selected AR benchmark.
//!
//! Replication `r` of every scenario uses seed `base_seed + r`. Each
//! replication simulates one continuous path, fits on the first
//! `sample_size` values and scores one-step forecasts on the following
//! `test_size` values.

mod config;
mod emit;

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimate::{build_design, default_p_max, select_aic_order, select_b_default};
use crate::forecast::evaluate;
use crate::model::WeightSequence;
use crate::simulate::{arfima_path, short_memory_path, ArfimaSpec, SeriesSample, ShortMemorySpec};

pub use config::{parse_config, ConfigOverrides, ExperimentConfig};
pub use emit::{emit, emit_diagnostics, OutputFormat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Design {
    ShortMemory,
    LongMemory,
}

impl Design {
    pub fn name(&self) -> &'static str {
        match self {
            Design::ShortMemory => "short_memory",
            Design::LongMemory => "long_memory",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Design::ShortMemory => "Short Memory",
            Design::LongMemory => "Long Memory",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "short_memory" | "short" => Some(Design::ShortMemory),
            "long_memory" | "long" => Some(Design::LongMemory),
            _ => None,
        }
    }
}

/// One data-generating process of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub design: Design,
    pub phi_bar: f64,
    pub k0: usize,
}

impl Scenario {
    /// Simulated path of `len` values after the warm-up.
    pub fn path(&self, cfg: &ExperimentConfig, len: usize, seed: u64) -> Result<Vec<f64>> {
        let ar = ShortMemorySpec::new(self.phi_bar, self.k0, 1.0)?;
        match self.design {
            Design::ShortMemory => Ok(short_memory_path(&ar, len, cfg.warmup, seed)),
            Design::LongMemory => {
                let spec = ArfimaSpec::new(
                    ar,
                    crate::simulate::default_ma_coeffs(),
                    cfg.frac_d,
                    cfg.frac_truncation,
                )?;
                arfima_path(&spec, len, cfg.warmup, seed)
            }
        }
    }
}

/// Outcome of a single replication of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationOutcome {
    pub replication: usize,
    pub seed: u64,
    pub k_aic: usize,
    pub per_multiplier: Vec<MultiplierOutcome>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplierOutcome {
    pub multiplier: usize,
    pub lags: usize,
    pub radius: f64,
    pub tau: f64,
    pub ratio: f64,
}

/// Aggregate over the replications of one (scenario, multiplier) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub scenario: Scenario,
    pub multiplier: usize,
    /// `None` when any replication of the scenario failed.
    pub mean_ratio: Option<f64>,
    pub stderr: Option<f64>,
    pub reps: usize,
}

impl Cell {
    pub fn complete(&self) -> bool {
        self.mean_ratio.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub scenario: Scenario,
    pub outcomes: Vec<ReplicationOutcome>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub cells: Vec<Cell>,
    pub runs: Vec<ScenarioRun>,
    pub wall_time: Duration,
}

impl ExperimentResult {
    pub fn complete(&self) -> bool {
        self.cells.iter().all(Cell::complete)
    }

    pub fn cell(&self, design: Design, phi_bar: f64, k0: usize, multiplier: usize) -> Option<&Cell> {
        self.cells.iter().find(|c| {
            c.scenario.design == design
                && c.scenario.phi_bar == phi_bar
                && c.scenario.k0 == k0
                && c.multiplier == multiplier
        })
    }
}

/// Fits the benchmark and every constrained candidate on one path and scores
/// them on the held-out segment.
pub fn run_replication(
    cfg: &ExperimentConfig,
    scenario: &Scenario,
    replication: usize,
) -> Result<ReplicationOutcome> {
    let seed = cfg.seed_for(replication);
    let path = scenario.path(cfg, cfg.sample_size + cfg.test_size, seed)?;
    let train = &path[..cfg.sample_size];

    let p_max = cfg.p_max.unwrap_or_else(|| default_p_max(cfg.sample_size));
    let aic = select_aic_order(&SeriesSample::from_values(train.to_vec(), p_max, seed)?, p_max)?;
    let k_aic = aic.chosen.order();
    let benchmark = aic.chosen.coeffs;

    let max_lags = cfg.multipliers.iter().max().copied().unwrap_or(1) * k_aic;
    let test_start = cfg.sample_size - max_lags.max(k_aic);
    let test = SeriesSample::from_values(path[test_start..].to_vec(), cfg.sample_size - test_start, seed)?;

    let mut per_multiplier = Vec::with_capacity(cfg.multipliers.len());
    for &multiplier in &cfg.multipliers {
        let lags = multiplier * k_aic;
        let sample = SeriesSample::from_values(train.to_vec(), lags, seed)?;
        let data = build_design(&sample)?;
        let w = WeightSequence::with_exponent(cfg.weight_exponent, lags)?;
        let sel = select_b_default(&data, &w)?;
        let report = evaluate(&sel.chosen.coeffs, &benchmark, &test)?;
        per_multiplier.push(MultiplierOutcome {
            multiplier,
            lags,
            radius: sel.chosen_parameter(),
            tau: sel.chosen.tau,
            ratio: report.relative_improvement,
        });
    }
    Ok(ReplicationOutcome { replication, seed, k_aic, per_multiplier })
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Collapses replication outcomes (in replication order) into one cell per
/// multiplier. Any failure leaves every cell of the scenario incomplete.
fn aggregate(
    scenario: Scenario,
    multipliers: &[usize],
    results: Vec<Result<ReplicationOutcome>>,
) -> (ScenarioRun, Vec<Cell>) {
    let mut outcomes = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for res in results {
        match res {
            Ok(o) => outcomes.push(o),
            Err(e) => {
                log::warn!("{e}");
                failures.push(e.to_string());
            }
        }
    }
    let cells = multipliers
        .iter()
        .enumerate()
        .map(|(j, &multiplier)| {
            let (mean_ratio, stderr) = if failures.is_empty() && !outcomes.is_empty() {
                let ratios: Vec<f64> = outcomes.iter().map(|o| o.per_multiplier[j].ratio).collect();
                let (m, s) = mean_and_stderr(&ratios);
                (Some(m), Some(s))
            } else {
                (None, None)
            };
            Cell { scenario, multiplier, mean_ratio, stderr, reps: outcomes.len() }
        })
        .collect();
    (ScenarioRun { scenario, outcomes, failures }, cells)
}

/// Runs every scenario of `cfg` on a worker pool of `cfg.parallelism`
/// threads. Results are ordered by replication index before aggregation, so
/// the output does not depend on scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| Error::Usage { key: "parallelism".into(), reason: e.to_string() })?;

    let mut runs = Vec::new();
    let mut cells = Vec::new();
    for scenario in cfg.scenarios() {
        log::info!(
            "running {} phi_bar={} K0={} ({} replications)",
            scenario.design.name(),
            scenario.phi_bar,
            scenario.k0,
            cfg.replications
        );
        let results: Vec<Result<ReplicationOutcome>> = pool.install(|| {
            (0..cfg.replications)
                .into_par_iter()
                .map(|r| {
                    run_replication(cfg, &scenario, r).map_err(|e| Error::Replication {
                        replication: r,
                        seed: cfg.seed_for(r),
                        source: Box::new(e),
                    })
                })
                .collect()
        });
        let (run, scenario_cells) = aggregate(scenario, &cfg.multipliers, results);
        cells.extend(scenario_cells);
        runs.push(run);
    }
    Ok(ExperimentResult { config: cfg.clone(), cells, runs, wall_time: started.elapsed() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            designs: vec![Design::ShortMemory],
            phi_bars: vec![0.75],
            k0s: vec![20],
            sample_size: 300,
            warmup: 100,
            test_size: 100,
            replications: 3,
            parallelism: 1,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn single_replication_is_stable() {
        let cfg = ExperimentConfig { replications: 1, ..tiny() };
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.cells, b.cells);
        assert!(a.complete());
        assert_eq!(a.cells.len(), 2);
        let ratio = a.cells[0].mean_ratio.unwrap();
        assert!(ratio > 0.0 && ratio.is_finite());
    }

    #[test]
    fn replication_uses_documented_seed() {
        let cfg = ExperimentConfig { base_seed: 40, ..tiny() };
        let scenario = cfg.scenarios()[0];
        let out = run_replication(&cfg, &scenario, 2).unwrap();
        assert_eq!(out.seed, 42);
        assert!(out.k_aic >= 1);
        for m in &out.per_multiplier {
            assert_eq!(m.lags, m.multiplier * out.k_aic);
        }
    }

    #[test]
    fn parallelism_does_not_change_cells() {
        let one = run_experiment(&tiny()).unwrap();
        let many = run_experiment(&ExperimentConfig { parallelism: 3, ..tiny() }).unwrap();
        assert_eq!(one.cells, many.cells);
        assert_eq!(one.runs[0].outcomes, many.runs[0].outcomes);
    }

    #[test]
    fn failed_replication_marks_cell_incomplete() {
        let cfg = tiny();
        let scenario = cfg.scenarios()[0];
        let ok = run_replication(&cfg, &scenario, 0).unwrap();
        let failed = Err(Error::Replication {
            replication: 1,
            seed: cfg.seed_for(1),
            source: Box::new(Error::SolverFailure("injected".into())),
        });
        let (run, cells) = aggregate(scenario, &cfg.multipliers, vec![Ok(ok.clone()), failed]);
        assert_eq!(run.failures.len(), 1);
        assert!(run.failures[0].contains("seed 2"));
        assert!(cells.iter().all(|c| !c.complete()));

        let (_, cells) = aggregate(scenario, &cfg.multipliers, vec![Ok(ok.clone())]);
        assert_eq!(cells[0].mean_ratio, Some(ok.per_multiplier[0].ratio));
    }

    #[test]
    fn stderr_of_constant_is_zero() {
        assert_eq!(mean_and_stderr(&[2.0, 2.0, 2.0]), (2.0, 0.0));
        let (m, s) = mean_and_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }
}
