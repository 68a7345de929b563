use hroc_core::{EnergyDensity, Hroc, Matrix};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{matrix, ExperimentConfig};
use crate::error::CliError;
use crate::model::{check_admissible, model3, Model2};
use crate::output::{log_log_slope, median_seconds, num, opt, Output};

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub w_rc: f64,
    pub reference: Option<f64>,
    pub seconds: f64,
    pub depth: usize,
    pub leaves: usize,
}

impl ConvergenceRow {
    pub fn error(&self) -> Option<f64> {
        self.reference.map(|r| (self.w_rc - r).abs())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceSummary {
    /// Fitted exponent of wall time against `N`.
    pub time_slope: f64,
    /// `t(5000) / t(500)` when both are in the study.
    pub time_ratio_5000_500: Option<f64>,
    /// Largest ratio of consecutive errors; below one means monotone decay.
    pub max_error_growth: Option<f64>,
}

/// Envelope error and median wall time for each `N`. Values are computed in
/// parallel; timings run one after another so they do not compete.
pub fn evaluate<const D: usize, W: EnergyDensity<D> + Sync + ?Sized>(
    w: &W,
    cfg: &ExperimentConfig,
    f: &Matrix<D>,
    n_values: &[usize],
    repetitions: usize,
) -> Result<(Vec<ConvergenceRow>, ConvergenceSummary), CliError> {
    check_admissible(w, f)?;
    let mut rows = n_values
        .par_iter()
        .map(|&n| {
            let res = Hroc::new(cfg.with_n::<D>(n)?).evaluate(w, f, None)?;
            Ok(ConvergenceRow {
                n,
                w_rc: res.w_rc,
                reference: w.reference_envelope(f),
                seconds: 0.0,
                depth: res.tree.max_depth(),
                leaves: res.tree.leaf_count(),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    for row in &mut rows {
        let mut engine = Hroc::new(cfg.with_n::<D>(row.n)?);
        let (t, res) = median_seconds(repetitions, || engine.evaluate(w, f, None));
        res?;
        row.seconds = t;
    }
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ts: Vec<f64> = rows.iter().map(|r| r.seconds.max(1e-12)).collect();
    let time_at = |n| rows.iter().find(|r| r.n == n).map(|r| r.seconds);
    let errors: Vec<f64> = rows.iter().filter_map(ConvergenceRow::error).collect();
    let summary = ConvergenceSummary {
        time_slope: if rows.len() > 1 {
            log_log_slope(&ns, &ts)
        } else {
            f64::NAN
        },
        time_ratio_5000_500: time_at(5000).zip(time_at(500)).map(|(a, b)| a / b),
        max_error_growth: errors
            .windows(2)
            .filter(|e| e[0] > 0.0)
            .map(|e| e[1] / e[0])
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v)))),
    };
    Ok((rows, summary))
}

pub fn run(cfg: &ExperimentConfig) -> Result<Value, CliError> {
    let c = &cfg.convergence;
    let (rows, summary) = if cfg.model.dim == 3 {
        let w = model3(&cfg.model)?;
        evaluate(&w, cfg, &matrix::<3>(c.f.as_ref()), &c.n_values, c.repetitions)?
    } else {
        let model = Model2::from_config(&cfg.model)?;
        evaluate(
            model.energy(),
            cfg,
            &matrix::<2>(c.f.as_ref()),
            &c.n_values,
            c.repetitions,
        )?
    };
    let out = Output::create(cfg)?;
    let header = [
        "n",
        "w_rc",
        "reference",
        "abs_error",
        "median_seconds",
        "depth",
        "leaves",
    ]
    .map(String::from);
    let mut table = out.csv("convergence.csv", &header)?;
    for r in &rows {
        table.row([
            r.n.to_string(),
            num(r.w_rc),
            opt(r.reference),
            opt(r.error()),
            num(r.seconds),
            r.depth.to_string(),
            r.leaves.to_string(),
        ])?;
    }
    table.finish()?;
    let value = json!({
        "time_slope": summary.time_slope,
        "time_ratio_5000_500": summary.time_ratio_5000_500,
        "max_error_growth": summary.max_error_growth,
    });
    out.sidecar("convergence", cfg, value.clone())?;
    Ok(value)
}
