use hroc_core::{ContinuityCache, Hroc, Matrix, Matrix2, PointKey};
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::model::{check_admissible, Model2};
use crate::output::{matrix_fields, matrix_header, num, opt, Output};

#[derive(Clone, Debug, PartialEq)]
pub struct PathRow {
    pub t: f64,
    pub w: f64,
    pub w_rc: f64,
    /// Stress of the single-orientation laminate.
    pub p: Matrix2,
    pub w_rot: f64,
    pub p_rot: Matrix2,
    pub alpha: Option<f64>,
    pub depth: usize,
    pub leaves: usize,
    /// Central difference of `w_rc` in `t`, interior rows only.
    pub dw_dt: Option<f64>,
    /// Central difference of `w_rot` in `t`, interior rows only.
    pub dw_rot_dt: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathSummary {
    /// `max |P₁₁^rot − P₂₂^rot| / max |P^rot|` over the path.
    pub symmetry: f64,
    /// `max |tr P^rot − dW_rc/dt| / max |tr P^rot|` over interior rows.
    pub fd_deviation: f64,
    /// The same against differences of the averaged energy curve.
    pub fd_deviation_rotated: f64,
    /// The single-orientation stress against its own energy curve.
    pub fd_deviation_unrotated: f64,
    pub max_p_rot: f64,
}

/// Sequential sweep along `F = diag(t, t)`. Both the single-orientation and
/// the averaged evaluations keep continuity caches across steps.
pub fn evaluate(model: &Model2, cfg: &ExperimentConfig) -> Result<(Vec<PathRow>, PathSummary), CliError> {
    let w = model.energy();
    let spec = &cfg.material_path;
    let params = cfg.convexify_params::<2>()?;
    let mut engine = Hroc::new(params);
    let mut cache = ContinuityCache::new();
    let mut rot_cache = ContinuityCache::new();
    let h = (spec.t_max - spec.t_min) / spec.steps as f64;
    let mut rows = Vec::with_capacity(spec.steps + 1);
    for k in 0..=spec.steps {
        let t = spec.t_min + h * k as f64;
        let f = Matrix([[t, 0.0], [0.0, t]]);
        check_admissible(w, &f)?;
        let res = engine.evaluate(w, &f, Some((&mut cache, PointKey::new(0))))?;
        let avg = engine.rotational_average(w, &f, cfg.n_rot, Some((&mut rot_cache, 0)))?;
        rows.push(PathRow {
            t,
            w: w.value(&f),
            w_rc: res.w_rc,
            p: res.p,
            w_rot: avg.w,
            p_rot: avg.p,
            alpha: model.condensed_alpha(&f),
            depth: res.tree.max_depth(),
            leaves: res.tree.leaf_count(),
            dw_dt: None,
            dw_rot_dt: None,
        });
    }
    for k in 1..rows.len() - 1 {
        rows[k].dw_dt = Some((rows[k + 1].w_rc - rows[k - 1].w_rc) / (2.0 * h));
        rows[k].dw_rot_dt = Some((rows[k + 1].w_rot - rows[k - 1].w_rot) / (2.0 * h));
    }
    Ok((rows.clone(), summarize(&rows)))
}

fn summarize(rows: &[PathRow]) -> PathSummary {
    let max_p_rot = rows.iter().map(|r| r.p_rot.max_abs()).fold(0.0, f64::max);
    let asym = rows
        .iter()
        .map(|r| (r.p_rot.0[0][0] - r.p_rot.0[1][1]).abs())
        .fold(0.0, f64::max);
    // dW/dt = P : dF/dt = P₁₁ + P₂₂ on this path
    let deviation = |stress: fn(&PathRow) -> f64, slope: fn(&PathRow) -> Option<f64>| {
        let scale = rows.iter().map(|r| stress(r).abs()).fold(0.0, f64::max);
        let dev = rows
            .iter()
            .filter_map(|r| slope(r).map(|s| (stress(r) - s).abs()))
            .fold(0.0, f64::max);
        if scale > 0.0 {
            dev / scale
        } else {
            dev
        }
    };
    let tr_rot = |r: &PathRow| r.p_rot.trace();
    PathSummary {
        symmetry: if max_p_rot > 0.0 { asym / max_p_rot } else { asym },
        fd_deviation: deviation(tr_rot, |r| r.dw_dt),
        fd_deviation_rotated: deviation(tr_rot, |r| r.dw_rot_dt),
        fd_deviation_unrotated: deviation(|r| r.p.trace(), |r| r.dw_dt),
        max_p_rot,
    }
}

pub fn summary_json(s: &PathSummary) -> Value {
    json!({
        "symmetry": s.symmetry,
        "fd_deviation": s.fd_deviation,
        "fd_deviation_rotated": s.fd_deviation_rotated,
        "fd_deviation_unrotated": s.fd_deviation_unrotated,
        "max_p_rot": s.max_p_rot,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<Value, CliError> {
    let model = Model2::from_config(&cfg.model)?;
    let (rows, summary) = evaluate(&model, cfg)?;
    let out = Output::create(cfg)?;
    let mut header: Vec<String> = ["t", "w", "w_rc"].map(String::from).to_vec();
    header.extend(matrix_header::<2>("P"));
    header.push("w_rot".into());
    header.extend(matrix_header::<2>("Prot"));
    header.extend(["alpha", "depth", "leaves", "dw_dt", "dw_rot_dt"].map(String::from));
    let mut table = out.csv("material_path.csv", &header)?;
    for r in &rows {
        let mut rec = vec![num(r.t), num(r.w), num(r.w_rc)];
        rec.extend(matrix_fields(&r.p));
        rec.push(num(r.w_rot));
        rec.extend(matrix_fields(&r.p_rot));
        rec.extend([
            opt(r.alpha),
            r.depth.to_string(),
            r.leaves.to_string(),
            opt(r.dw_dt),
            opt(r.dw_rot_dt),
        ]);
        table.row(rec)?;
    }
    table.finish()?;
    let value = summary_json(&summary);
    out.sidecar("material_path", cfg, value.clone())?;
    Ok(value)
}
