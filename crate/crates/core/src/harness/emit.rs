use std::fmt::Write as _;

use super::{Cell, ExperimentResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Table,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "table" => Ok(OutputFormat::Table),
            other => Err(format!("unknown format {other:?} (expected csv or table)")),
        }
    }
}

pub const CSV_HEADER: &str = "design,phi_bar,K0,multiplier,mean_ratio,stderr,reps";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

pub fn emit(result: &ExperimentResult, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => emit_csv(&result.cells),
        OutputFormat::Table => emit_table(result),
    }
}

fn emit_csv(cells: &[Cell]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for c in cells {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.scenario.design.name(),
            c.scenario.phi_bar,
            c.scenario.k0,
            c.multiplier,
            opt(c.mean_ratio),
            opt(c.stderr),
            c.reps
        )
        .unwrap();
    }
    out
}

/// Rows grouped by design then `φ̄`; columns by `K₀` then multiplier.
fn emit_table(result: &ExperimentResult) -> String {
    let cfg = &result.config;
    let label_width = 18;
    let col = 10;
    let mut out = String::new();

    write!(out, "{:label_width$}", "K0 =").unwrap();
    for k0 in &cfg.k0s {
        write!(out, "{:<width$}", k0, width = col * cfg.multipliers.len()).unwrap();
    }
    out.push('\n');
    write!(out, "{:label_width$}", "").unwrap();
    for _ in &cfg.k0s {
        for m in &cfg.multipliers {
            write!(out, "{:<col$}", format!("{m}K_AIC")).unwrap();
        }
    }
    out.push('\n');

    for design in &cfg.designs {
        writeln!(out, "{}", design.label()).unwrap();
        for &phi_bar in &cfg.phi_bars {
            write!(out, "{:label_width$}", format!("phi_bar = {phi_bar}")).unwrap();
            for &k0 in &cfg.k0s {
                for &m in &cfg.multipliers {
                    let text = result
                        .cell(*design, phi_bar, k0, m)
                        .and_then(|c| c.mean_ratio)
                        .map_or_else(|| "NA".to_string(), |v| format!("{v:.2}"));
                    write!(out, "{text:<col$}").unwrap();
                }
            }
            out.push('\n');
        }
    }
    out
}

/// Per-replication record of `K_AIC`, the selected radius and the ratio.
pub fn emit_diagnostics(result: &ExperimentResult) -> String {
    let mut out = String::from("design,phi_bar,K0,replication,seed,k_aic,multiplier,K,B,tau,ratio\n");
    for run in &result.runs {
        let s = run.scenario;
        for o in &run.outcomes {
            for m in &o.per_multiplier {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    s.design.name(),
                    s.phi_bar,
                    s.k0,
                    o.replication,
                    o.seed,
                    o.k_aic,
                    m.multiplier,
                    m.lags,
                    m.radius,
                    m.tau,
                    m.ratio
                )
                .unwrap();
            }
        }
    }
    out
}
