use hroc_core::microstructure::{phase_fractions, DisplacementField, LaminateField, PeriodicGrid, Projector};
use hroc_core::{Hroc, Matrix, Matrix2, TreeNode};
use serde_json::{json, Value};

use crate::config::{matrix, ExperimentConfig};
use crate::error::CliError;
use crate::model::{check_admissible, Model2};
use crate::output::{matrix_header, num, tree_json, Output};

#[derive(Clone, Debug)]
pub struct Microstructure {
    pub f: Matrix2,
    pub w_rc: f64,
    pub tree: TreeNode<2>,
    pub epsilon: f64,
    pub grid: PeriodicGrid<2>,
    /// Leaf fractions of the tree, depth-first.
    pub tree_fractions: Vec<f64>,
    /// Fraction of grid cells occupied by each leaf.
    pub grid_fractions: Vec<f64>,
    pub field: DisplacementField<2>,
    /// Residual recomputed from the returned displacements.
    pub residual: f64,
    pub normal: Option<[f64; 2]>,
    /// Leading right singular direction of the fluctuation gradient.
    pub estimated_normal: Option<[f64; 2]>,
}

impl Microstructure {
    pub fn fraction_deviation(&self) -> f64 {
        self.tree_fractions
            .iter()
            .zip(&self.grid_fractions)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `|n · n̂|`, one when the stripes follow the split normal.
    pub fn alignment(&self) -> Option<f64> {
        let (n, e) = (self.normal?, self.estimated_normal?);
        Some((n[0] * e[0] + n[1] * e[1]).abs())
    }
}

/// Leading eigenvector of a symmetric 2×2 matrix; `None` for zero input.
fn principal_axis(s: &Matrix2) -> Option<[f64; 2]> {
    if s.max_abs() == 0.0 {
        return None;
    }
    let (a, b, d) = (s.0[0][0], s.0[0][1], s.0[1][1]);
    let theta = 0.5 * (2.0 * b).atan2(a - d);
    Some([theta.cos(), theta.sin()])
}

/// One stripe period across the unit cell along the root normal, which
/// keeps the root lamination periodic.
fn default_epsilon(tree: &TreeNode<2>) -> f64 {
    match &tree.split {
        Some(s) => {
            let b = s.direction.b;
            1.0 / (b[0] * b[0] + b[1] * b[1]).sqrt().max(1.0)
        }
        None => 1.0,
    }
}

pub fn evaluate(model: &Model2, cfg: &ExperimentConfig) -> Result<Microstructure, CliError> {
    let spec = &cfg.microstructure;
    let w = model.energy();
    let f = match &spec.f {
        Some(rows) => matrix::<2>(Some(rows)),
        None => Matrix([[spec.t, 0.0], [0.0, spec.t]]),
    };
    check_admissible(w, &f)?;
    let res = Hroc::new(cfg.convexify_params::<2>()?).evaluate(w, &f, None)?;
    let tree = res.tree;
    let epsilon = spec.epsilon.unwrap_or_else(|| default_epsilon(&tree));
    let grid = PeriodicGrid::<2>::new(spec.m)?;
    let laminate = LaminateField::new(&tree, epsilon, spec.separation)?;
    let grid_fractions = phase_fractions(&laminate, &grid);
    let tree_fractions = tree.leaves().pairs.iter().map(|(xi, _)| *xi).collect();
    let projector = Projector::new(grid);
    let coefficient = |x: &[f64; 2]| laminate.coefficient(x);
    let field = projector.project(coefficient)?;
    let residual = projector.residual(coefficient, &field);
    let mut s = Matrix2::zeros();
    for k in 0..grid.len() {
        let g = field.cell_gradient(k);
        s += g.transpose().matmul(&g);
    }
    let normal = laminate.root_lamination().map(|l| l.normal);
    Ok(Microstructure {
        f,
        w_rc: res.w_rc,
        epsilon,
        grid,
        tree_fractions,
        grid_fractions,
        residual,
        normal,
        estimated_normal: normal.and(principal_axis(&s)),
        field,
        tree,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<Value, CliError> {
    if cfg.model.dim != 2 {
        return Err(crate::error::config("microstructure export supports dim 2"));
    }
    let model = Model2::from_config(&cfg.model)?;
    let ms = evaluate(&model, cfg)?;
    let out = Output::create(cfg)?;
    out.json("microstructure_tree.json", &tree_json(&ms.tree))?;

    let laminate = LaminateField::new(&ms.tree, ms.epsilon, cfg.microstructure.separation)?;
    let mut header: Vec<String> = ["cell", "x", "y", "leaf"].map(String::from).to_vec();
    header.extend(matrix_header::<2>("F"));
    let mut table = out.csv("coefficient.csv", &header)?;
    for k in 0..ms.grid.len() {
        let x = ms.grid.cell_center(k);
        let leaf = laminate.leaf_index(&x);
        let mut rec = vec![k.to_string(), num(x[0]), num(x[1]), leaf.to_string()];
        rec.extend(laminate.coefficient(&x).iter().map(|v| num(*v)));
        table.row(rec)?;
    }
    table.finish()?;

    let header = ["node", "x", "y", "u1", "u2"].map(String::from);
    let mut table = out.csv("displacement.csv", &header)?;
    for (k, u) in ms.field.u.iter().enumerate() {
        let x = ms.grid.node(k);
        table.row([k.to_string(), num(x[0]), num(x[1]), num(u[0]), num(u[1])])?;
    }
    table.finish()?;

    let value = json!({
        "f": [[ms.f.0[0][0], ms.f.0[0][1]], [ms.f.0[1][0], ms.f.0[1][1]]],
        "w_rc": ms.w_rc,
        "epsilon": ms.epsilon,
        "m": ms.grid.m,
        "separation": cfg.microstructure.separation,
        "average_gradient": [
            [ms.field.average_gradient.0[0][0], ms.field.average_gradient.0[0][1]],
            [ms.field.average_gradient.0[1][0], ms.field.average_gradient.0[1][1]],
        ],
        "depth": ms.tree.max_depth(),
        "leaves": ms.tree.leaf_count(),
        "tree_fractions": ms.tree_fractions,
        "grid_fractions": ms.grid_fractions,
        "fraction_deviation": ms.fraction_deviation(),
        "residual": ms.residual,
        "iterations": ms.field.iterations,
        "normal": ms.normal,
        "estimated_normal": ms.estimated_normal,
        "alignment": ms.alignment(),
    });
    out.sidecar("microstructure", cfg, value.clone())?;
    Ok(value)
}
