//! CSV tables, JSON sidecars and tree export.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hroc_core::{Matrix, Tensor4, TreeNode, Vector};
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn matrix_json<const D: usize>(m: &Matrix<D>) -> Value {
    json!(m.0.iter().map(|row| row.to_vec()).collect::<Vec<_>>())
}

fn vector_json<const D: usize>(v: &Vector<D>) -> Value {
    json!(v.to_vec())
}

pub fn tensor_json<const D: usize>(a: &Tensor4<D>) -> Value {
    json!(a
        .0
        .iter()
        .map(|i| i
            .iter()
            .map(|j| j.iter().map(|k| k.to_vec()).collect::<Vec<_>>())
            .collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

/// `{f, depth, split: null | {lambda, a, b, minus, plus}}`; `lambda` is the
/// volume fraction of `minus`.
pub fn tree_json<const D: usize>(node: &TreeNode<D>) -> Value {
    let split = match &node.split {
        None => Value::Null,
        Some(s) => json!({
            "lambda": s.lambda,
            "a": vector_json(&s.direction.a),
            "b": vector_json(&s.direction.b),
            "minus": tree_json(&s.minus),
            "plus": tree_json(&s.plus),
        }),
    };
    json!({ "f": matrix_json(&node.f), "depth": node.depth, "split": split })
}

/// Component column names `{prefix}11, {prefix}12, …`.
pub fn matrix_header<const D: usize>(prefix: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(D * D);
    for i in 1..=D {
        for j in 1..=D {
            out.push(format!("{prefix}{i}{j}"));
        }
    }
    out
}

pub fn matrix_fields<const D: usize>(m: &Matrix<D>) -> impl Iterator<Item = String> + '_ {
    m.iter().map(|v| num(*v))
}

/// Shortest round-trip decimal, so reruns reproduce files byte for byte.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub struct Output {
    dir: PathBuf,
    hash: String,
}

impl Output {
    pub fn create(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
        Ok(Self {
            dir: cfg.out.clone(),
            hash: cfg.hash(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// CSV writer whose rows end in a `config_hash` column.
    pub fn csv(&self, name: &str, header: &[String]) -> Result<Table, CliError> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)?;
        let mut h = header.to_vec();
        h.push("config_hash".into());
        w.write_record(&h)?;
        Ok(Table {
            w,
            hash: self.hash.clone(),
        })
    }

    pub fn json(&self, name: &str, value: &Value) -> Result<(), CliError> {
        let path = self.path(name);
        let text = serde_json::to_string_pretty(value).expect("json value serializes");
        fs::write(&path, text + "\n").map_err(|e| CliError::io(path, e))
    }

    /// Metadata written next to every table.
    pub fn sidecar(&self, command: &str, cfg: &ExperimentConfig, summary: Value) -> Result<(), CliError> {
        self.json(
            &format!("{command}.json"),
            &json!({
                "command": command,
                "version": VERSION,
                "config_hash": self.hash,
                "config": cfg,
                "convexification": {
                    "box_center": "root",
                    "box_norm": "max",
                    "split_tolerance": hroc_core::hroc::SPLIT_EPS,
                    "continuity_tolerance": hroc_core::hroc::CONTINUITY_EPS,
                    "inadmissible_penalty": hroc_core::convexify::PENALTY,
                },
                "summary": summary,
            }),
        )
    }
}

pub struct Table {
    w: csv::Writer<fs::File>,
    hash: String,
}

impl Table {
    pub fn row(&mut self, fields: impl IntoIterator<Item = String>) -> Result<(), CliError> {
        let mut rec: Vec<String> = fields.into_iter().collect();
        rec.push(self.hash.clone());
        self.w.write_record(&rec)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.w.flush().map_err(|e| CliError::io("csv", e))
    }
}

/// Median wall time of `reps` runs after one warm-up, and the last result.
pub fn median_seconds<T>(reps: usize, mut run: impl FnMut() -> T) -> (f64, T) {
    let mut last = run();
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps.max(1) {
        let t0 = Instant::now();
        last = run();
        times.push(t0.elapsed().as_secs_f64());
    }
    times.sort_by(f64::total_cmp);
    let k = times.len();
    let median = if k % 2 == 1 {
        times[k / 2]
    } else {
        0.5 * (times[k / 2 - 1] + times[k / 2])
    };
    (median, last)
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn ensure_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use hroc_core::{Dyad, Matrix2};

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 10.0, 100.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        assert!((log_log_slope(&x, &y) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn median_of_odd_count() {
        let mut k = 0;
        let (t, last) = median_seconds(5, || {
            k += 1;
            k
        });
        assert!(t >= 0.0);
        assert_eq!(last, 6);
    }

    #[test]
    fn tree_json_shape() {
        let d = Dyad::new([1.0, 0.0], [1.0, 0.0]);
        let f = Matrix2::zeros();
        let tree = TreeNode::leaf(f).with_split(0.5, d, f + d.matrix * 0.5, f - d.matrix * 0.5);
        let v = tree_json(&tree);
        assert_eq!(v["split"]["lambda"], 0.5);
        assert_eq!(v["split"]["minus"]["f"][0][0], 0.5);
        assert!(v["split"]["plus"]["split"].is_null());
        assert_eq!(matrix_header::<2>("P"), ["P11", "P12", "P21", "P22"]);
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, -2.5e17] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(1e-300), "1e-300");
        assert_eq!(num(0.25), "0.25");
        assert_eq!(num(-0.0), "-0");
    }
}
