use std::time::Instant;

use hroc_core::{ConvexifyParams, EnergyDensity, Hroc, Matrix};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{matrix, ExperimentConfig, SurfaceConfig};
use crate::error::CliError;
use crate::model::{model3, Model2};
use crate::output::{num, opt, Output};

#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceNode {
    pub i: usize,
    pub j: usize,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    /// `None` where the energy is not defined.
    pub w_rc: Option<f64>,
    pub reference: Option<f64>,
    pub depth: usize,
    pub leaves: usize,
}

impl SurfaceNode {
    pub fn abs_error(&self) -> Option<f64> {
        Some((self.w_rc? - self.reference?).abs())
    }

    /// `|W^HROC − W^rc| / |W^rc|`, taken as zero where both vanish.
    pub fn rel_error(&self) -> Option<f64> {
        let (a, r) = (self.w_rc?, self.reference?);
        if a == r {
            Some(0.0)
        } else {
            Some((a - r).abs() / r.abs())
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceSummary {
    pub nodes: usize,
    pub inadmissible: usize,
    pub max_rel_error: Option<f64>,
    pub max_abs_error: Option<f64>,
    pub seconds: f64,
}

/// `count` equispaced values covering `[lo, hi]` at spacing close to `delta`.
pub fn axis(lo: f64, hi: f64, delta: f64) -> Vec<f64> {
    let count = ((hi - lo) / delta).round().max(1.0) as usize + 1;
    (0..count)
        .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
        .collect()
}

/// Envelope on the plane through `base` spanned by two components. Nodes are
/// evaluated in parallel and returned in row-major order.
pub fn evaluate<const D: usize, W: EnergyDensity<D> + Sync + ?Sized>(
    w: &W,
    params: &ConvexifyParams<D>,
    base: &Matrix<D>,
    spec: &SurfaceConfig,
) -> Result<(Vec<SurfaceNode>, SurfaceSummary), CliError> {
    let xs = axis(spec.extent[0][0], spec.extent[0][1], spec.delta);
    let ys = axis(spec.extent[1][0], spec.extent[1][1], spec.delta);
    let [ax, ay] = spec.axes;
    let t0 = Instant::now();
    let nodes: Vec<SurfaceNode> = (0..xs.len() * ys.len())
        .into_par_iter()
        .map_init(
            || Hroc::new(params.clone()),
            |engine, k| {
                let (i, j) = (k / ys.len(), k % ys.len());
                let mut f = *base;
                f.0[ax[0]][ax[1]] = xs[i];
                f.0[ay[0]][ay[1]] = ys[j];
                let mut node = SurfaceNode {
                    i,
                    j,
                    x: xs[i],
                    y: ys[j],
                    w: w.value(&f),
                    w_rc: None,
                    reference: w.reference_envelope(&f),
                    depth: 0,
                    leaves: 0,
                };
                if w.admissible(&f) {
                    let res = engine.evaluate(w, &f, None)?;
                    node.w_rc = Some(res.w_rc);
                    node.depth = res.tree.max_depth();
                    node.leaves = res.tree.leaf_count();
                }
                Ok(node)
            },
        )
        .collect::<Result<_, CliError>>()?;
    let seconds = t0.elapsed().as_secs_f64();
    let fold = |f: fn(&SurfaceNode) -> Option<f64>| {
        nodes
            .iter()
            .filter_map(f)
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
    };
    let summary = SurfaceSummary {
        nodes: nodes.len(),
        inadmissible: nodes.iter().filter(|n| n.w_rc.is_none()).count(),
        max_rel_error: fold(SurfaceNode::rel_error),
        max_abs_error: fold(SurfaceNode::abs_error),
        seconds,
    };
    Ok((nodes, summary))
}

pub fn run(cfg: &ExperimentConfig) -> Result<Value, CliError> {
    let (nodes, summary) = if cfg.model.dim == 3 {
        let w = model3(&cfg.model)?;
        let base = matrix::<3>(cfg.surface.base.as_ref());
        evaluate(&w, &cfg.convexify_params()?, &base, &cfg.surface)?
    } else {
        let model = Model2::from_config(&cfg.model)?;
        let base = matrix::<2>(cfg.surface.base.as_ref());
        evaluate(model.energy(), &cfg.convexify_params()?, &base, &cfg.surface)?
    };
    let out = Output::create(cfg)?;
    let header = [
        "row",
        "i",
        "j",
        "x",
        "y",
        "w",
        "w_rc",
        "reference",
        "abs_error",
        "rel_error",
        "depth",
        "leaves",
    ]
    .map(String::from);
    let mut table = out.csv("surface.csv", &header)?;
    for n in &nodes {
        table.row([
            "node".into(),
            n.i.to_string(),
            n.j.to_string(),
            num(n.x),
            num(n.y),
            num(n.w),
            opt(n.w_rc),
            opt(n.reference),
            opt(n.abs_error()),
            opt(n.rel_error()),
            n.depth.to_string(),
            n.leaves.to_string(),
        ])?;
    }
    let mut last = vec![String::from("max")];
    last.extend(std::iter::repeat(String::new()).take(7));
    last.extend([
        opt(summary.max_abs_error),
        opt(summary.max_rel_error),
        String::new(),
        String::new(),
    ]);
    table.row(last)?;
    table.finish()?;
    let value = json!({
        "nodes": summary.nodes,
        "inadmissible": summary.inadmissible,
        "max_rel_error": summary.max_rel_error,
        "max_abs_error": summary.max_abs_error,
        "seconds": summary.seconds,
    });
    out.sidecar("surface", cfg, value.clone())?;
    Ok(value)
}
