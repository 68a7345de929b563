use hroc_core::{ConvexifyParams, EnergyDensity, Hroc, Matrix, Tensor4, TreeNode};
use serde_json::{json, Value};

use crate::config::{matrix, ExperimentConfig};
use crate::error::CliError;
use crate::model::{check_admissible, model3, Model2};
use crate::output::{
    matrix_fields, matrix_header, matrix_json, median_seconds, num, opt, tensor_json, tree_json, Output,
};

/// An envelope value counts as reproducing the analytic one within this
/// margin, relative to `1 + |W^rc|`.
pub const ATTAINED_TOL: f64 = 1e-2;

#[derive(Clone, Debug)]
pub struct PointRecord<const D: usize> {
    pub f: Matrix<D>,
    pub w: f64,
    pub w_rc: f64,
    /// Closed-form envelope, when the model has one.
    pub reference: Option<f64>,
    pub p: Matrix<D>,
    pub a: Tensor4<D>,
    pub tree: TreeNode<D>,
    /// Median wall time of one evaluation.
    pub seconds: f64,
}

impl<const D: usize> PointRecord<D> {
    pub fn error(&self) -> Option<f64> {
        self.reference.map(|r| (self.w_rc - r).abs())
    }

    pub fn attained(&self) -> Option<bool> {
        let r = self.reference?;
        Some((self.w_rc - r).abs() <= ATTAINED_TOL * (1.0 + r.abs()))
    }
}

/// One timed envelope evaluation at `f`.
pub fn evaluate<const D: usize, W: EnergyDensity<D> + ?Sized>(
    w: &W,
    params: &ConvexifyParams<D>,
    f: &Matrix<D>,
    repetitions: usize,
) -> Result<PointRecord<D>, CliError> {
    check_admissible(w, f)?;
    let mut engine = Hroc::new(params.clone());
    let (seconds, res) = median_seconds(repetitions, || engine.evaluate(w, f, None));
    let res = res?;
    Ok(PointRecord {
        f: *f,
        w: w.value(f),
        w_rc: res.w_rc,
        reference: w.reference_envelope(f),
        p: res.p,
        a: res.a,
        tree: res.tree,
        seconds,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<Value, CliError> {
    if cfg.model.dim == 3 {
        let w = model3(&cfg.model)?;
        let rec = evaluate(
            &w,
            &cfg.convexify_params::<3>()?,
            &matrix(cfg.point.f.as_ref()),
            cfg.point.repetitions,
        )?;
        write(cfg, &rec)
    } else {
        let model = Model2::from_config(&cfg.model)?;
        let params = cfg.convexify_params::<2>()?;
        let rec = evaluate(
            model.energy(),
            &params,
            &matrix(cfg.point.f.as_ref()),
            cfg.point.repetitions,
        )?;
        write(cfg, &rec)
    }
}

fn write<const D: usize>(cfg: &ExperimentConfig, rec: &PointRecord<D>) -> Result<Value, CliError> {
    let out = Output::create(cfg)?;
    let mut header: Vec<String> = ["model", "n", "r", "k_max"].map(String::from).to_vec();
    header.extend(matrix_header::<D>("F"));
    header.extend(["w", "w_rc", "reference", "abs_error"].map(String::from));
    header.extend(matrix_header::<D>("P"));
    header.extend(["depth", "leaves", "seconds"].map(String::from));
    let mut table = out.csv("point.csv", &header)?;
    let c = &cfg.convexify;
    let mut row = vec![
        cfg.model_name()?.as_str().to_string(),
        c.n.to_string(),
        num(c.r),
        c.k_max.to_string(),
    ];
    row.extend(matrix_fields(&rec.f));
    row.extend([num(rec.w), num(rec.w_rc), opt(rec.reference), opt(rec.error())]);
    row.extend(matrix_fields(&rec.p));
    row.extend([
        rec.tree.max_depth().to_string(),
        rec.tree.leaf_count().to_string(),
        num(rec.seconds),
    ]);
    table.row(row)?;
    table.finish()?;
    out.json("point_tree.json", &tree_json(&rec.tree))?;
    let summary = json!({
        "w": rec.w,
        "w_rc": rec.w_rc,
        "reference": rec.reference,
        "abs_error": rec.error(),
        "reference_attained": rec.attained(),
        "p": matrix_json(&rec.p),
        "a": tensor_json(&rec.a),
        "depth": rec.tree.max_depth(),
        "leaves": rec.tree.leaf_count(),
        "seconds": rec.seconds,
    });
    out.sidecar("point", cfg, summary.clone())?;
    Ok(summary)
}
