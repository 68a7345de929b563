//! Periodic microstructure reconstruction from a lamination tree.
//!
//! Each split oscillates between its two phases in stripes normal to the
//! split's rank-one normal. Nested levels oscillate on geometrically finer
//! scales. The resulting piecewise-constant gradient field is projected onto
//! gradients of periodic displacements with multilinear elements on a
//! structured grid over the unit cell.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::math;
use crate::tensor::{Matrix, Vector};
use crate::tree::TreeNode;

/// Default ratio between the oscillation lengths of consecutive levels.
pub const DEFAULT_SEPARATION: f64 = 8.0;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
/// Loads below this multiple of rounding in the mean are treated as zero.
const NOISE_FLOOR: f64 = 64.0 * f64::EPSILON;

/// Rank-one factorization `R = a ⊗ n` of a split's jump with unit `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lamination<const D: usize> {
    pub a: Vector<D>,
    pub normal: Vector<D>,
}

impl<const D: usize> Lamination<D> {
    pub fn jump(&self) -> Matrix<D> {
        Matrix::outer(&self.a, &self.normal)
    }
}

fn lamination_of<const D: usize>(node: &TreeNode<D>) -> Option<Lamination<D>> {
    let split = node.split.as_ref()?;
    let b = split.direction.b;
    let norm = math::sqrt(b.iter().map(|v| v * v).sum());
    let mut normal = [0.0; D];
    for (n, v) in normal.iter_mut().zip(b) {
        *n = v / norm;
    }
    let a = split.jump().mul_vec(&normal);
    Some(Lamination { a, normal })
}

/// The phase field `x ↦ F±(x)` of a lamination tree on the unit cell.
#[derive(Clone, Debug)]
pub struct LaminateField<'t, const D: usize> {
    tree: &'t TreeNode<D>,
    epsilon: f64,
    separation: f64,
}

impl<'t, const D: usize> LaminateField<'t, D> {
    /// `epsilon` is the stripe period of the root split; level `ℓ` uses
    /// `epsilon / separation^ℓ`.
    pub fn new(tree: &'t TreeNode<D>, epsilon: f64, separation: f64) -> Result<Self, Error> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::InvalidInput("epsilon must lie in (0, 1]"));
        }
        if !(separation >= 1.0) || !separation.is_finite() {
            return Err(Error::InvalidInput("separation ratio must be at least 1"));
        }
        if !tree.validate(1e-9) {
            return Err(Error::InvalidInput("lamination tree is inconsistent"));
        }
        Ok(Self {
            tree,
            epsilon,
            separation,
        })
    }

    pub fn tree(&self) -> &TreeNode<D> {
        self.tree
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn level_epsilon(&self, level: usize) -> f64 {
        self.epsilon / math::powf(self.separation, level as f64)
    }

    /// Laminations of the root's splits in depth-first order.
    pub fn root_lamination(&self) -> Option<Lamination<D>> {
        lamination_of(self.tree)
    }

    /// Index of the leaf (depth-first, minus before plus) occupying `x`.
    pub fn leaf_index(&self, x: &Vector<D>) -> usize {
        let mut node = self.tree;
        let mut offset = 0;
        let mut level = 0;
        while let Some(split) = node.split.as_ref() {
            let lam = lamination_of(node).expect("split node");
            let s: f64 = x.iter().zip(lam.normal).map(|(xi, ni)| xi * ni).sum();
            let phase = math::fract(s / self.level_epsilon(level));
            if phase < 1.0 - split.lambda {
                offset += split.minus.leaf_count();
                node = &split.plus;
            } else {
                node = &split.minus;
            }
            level += 1;
        }
        offset
    }

    /// `F±(x)`: the leaf gradient occupying `x`.
    pub fn coefficient(&self, x: &Vector<D>) -> Matrix<D> {
        let mut node = self.tree;
        let mut level = 0;
        while let Some(split) = node.split.as_ref() {
            let lam = lamination_of(node).expect("split node");
            let s: f64 = x.iter().zip(lam.normal).map(|(xi, ni)| xi * ni).sum();
            let phase = math::fract(s / self.level_epsilon(level));
            node = if phase < 1.0 - split.lambda {
                &split.plus
            } else {
                &split.minus
            };
            level += 1;
        }
        node.f
    }

    /// The same field built up as `F + Σ (−λR or (1−λ)R)` along the path.
    pub fn coefficient_by_increments(&self, x: &Vector<D>) -> Matrix<D> {
        let mut node = self.tree;
        let mut acc = node.f;
        let mut level = 0;
        while let Some(split) = node.split.as_ref() {
            let lam = lamination_of(node).expect("split node");
            let r = split.jump();
            let s: f64 = x.iter().zip(lam.normal).map(|(xi, ni)| xi * ni).sum();
            let phase = math::fract(s / self.level_epsilon(level));
            if phase < 1.0 - split.lambda {
                acc -= r * split.lambda;
                node = &split.plus;
            } else {
                acc += r * (1.0 - split.lambda);
                node = &split.minus;
            }
            level += 1;
        }
        acc
    }
}

/// Structured periodic grid with `m` nodes (and cells) per axis, spacing `1/m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PeriodicGrid<const D: usize> {
    pub m: usize,
}

impl<const D: usize> PeriodicGrid<D> {
    pub fn new(m: usize) -> Result<Self, Error> {
        if m < 4 {
            return Err(Error::InvalidInput("grid resolution must be at least 4"));
        }
        if !(D == 2 || D == 3) {
            return Err(Error::UnsupportedDimension(D));
        }
        Ok(Self { m })
    }

    pub fn len(&self) -> usize {
        self.m.pow(D as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    /// Multi-index of flat index `k`, first axis fastest.
    pub fn multi_index(&self, mut k: usize) -> [usize; D] {
        let mut idx = [0; D];
        for v in idx.iter_mut() {
            *v = k % self.m;
            k /= self.m;
        }
        idx
    }

    pub fn flat(&self, idx: &[usize; D]) -> usize {
        idx.iter().rev().fold(0, |acc, &i| acc * self.m + i % self.m)
    }

    pub fn node(&self, k: usize) -> Vector<D> {
        let idx = self.multi_index(k);
        let mut x = [0.0; D];
        for (xi, i) in x.iter_mut().zip(idx) {
            *xi = i as f64 * self.h();
        }
        x
    }

    pub fn cell_center(&self, k: usize) -> Vector<D> {
        let mut x = self.node(k);
        for xi in x.iter_mut() {
            *xi += 0.5 * self.h();
        }
        x
    }

    /// Flat indices of the `2^D` corners of cell `k`; corner `c` has offset
    /// bit `i` along axis `i`.
    fn corners(&self, k: usize, out: &mut [usize]) {
        let base = self.multi_index(k);
        for (c, slot) in out.iter_mut().enumerate() {
            let mut idx = base;
            for (axis, v) in idx.iter_mut().enumerate() {
                *v += (c >> axis) & 1;
            }
            *slot = self.flat(&idx);
        }
    }
}

/// Reference-cell data of the multilinear element: 2-point Gauss rule per
/// axis and shape-function gradients at each point (in reference units).
struct Element<const D: usize> {
    corners: usize,
    /// Gauss points in `[0,1]^D`.
    points: Vec<Vector<D>>,
    /// `grads[q][c]`: gradient of corner `c`'s shape function at point `q`.
    grads: Vec<Vec<Vector<D>>>,
    /// Local stiffness `∫ ∇φ_a · ∇φ_b` on a cell of side `h`, which in `D`
    /// dimensions scales as `h^{D−2}`.
    stiffness: Vec<f64>,
}

impl<const D: usize> Element<D> {
    fn new(h: f64) -> Self {
        let corners = 1usize << D;
        let g = 0.5 / math::sqrt(3.0);
        let gauss = [0.5 - g, 0.5 + g];
        let mut points = Vec::with_capacity(corners);
        for q in 0..corners {
            let mut p = [0.0; D];
            for (axis, v) in p.iter_mut().enumerate() {
                *v = gauss[(q >> axis) & 1];
            }
            points.push(p);
        }
        let shape_1d = |bit: usize, t: f64| if bit == 1 { t } else { 1.0 - t };
        let dshape_1d = |bit: usize| if bit == 1 { 1.0 } else { -1.0 };
        let grads: Vec<Vec<Vector<D>>> = points
            .iter()
            .map(|p| {
                (0..corners)
                    .map(|c| {
                        let mut grad = [0.0; D];
                        for (axis, gv) in grad.iter_mut().enumerate() {
                            let mut v = dshape_1d((c >> axis) & 1);
                            for (other, &t) in p.iter().enumerate() {
                                if other != axis {
                                    v *= shape_1d((c >> other) & 1, t);
                                }
                            }
                            *gv = v;
                        }
                        grad
                    })
                    .collect()
            })
            .collect();
        // reference gradients carry 1/h each; the weight of a point is h^D / 2^D
        let weight = math::powf(h, D as f64 - 2.0) / corners as f64;
        let mut stiffness = vec![0.0; corners * corners];
        for gq in &grads {
            for a in 0..corners {
                for b in 0..corners {
                    let dot: f64 = gq[a].iter().zip(gq[b]).map(|(x, y)| x * y).sum();
                    stiffness[a * corners + b] += weight * dot;
                }
            }
        }
        Self {
            corners,
            points,
            grads,
            stiffness,
        }
    }
}

/// Solution of the periodic gradient projection.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementField<const D: usize> {
    pub grid: PeriodicGrid<D>,
    /// Nodal fluctuation `u`, zero mean per component.
    pub u: Vec<Vector<D>>,
    /// Cell average of `F±`, removed before projecting.
    pub average_gradient: Matrix<D>,
    /// Largest relative CG residual over the components.
    pub residual: f64,
    pub iterations: usize,
}

impl<const D: usize> DisplacementField<D> {
    /// Gradient of the fluctuation at the center of cell `k`.
    pub fn cell_gradient(&self, k: usize) -> Matrix<D> {
        let corners = 1usize << D;
        let mut ids = [0usize; 8];
        self.grid.corners(k, &mut ids[..corners]);
        let h = self.grid.h();
        let mut g = Matrix::zeros();
        for (c, &id) in ids[..corners].iter().enumerate() {
            for axis in 0..D {
                let mut w = if (c >> axis) & 1 == 1 { 1.0 } else { -1.0 };
                w *= math::powf(0.5, D as f64 - 1.0) / h;
                for comp in 0..D {
                    g.0[comp][axis] += w * self.u[id][comp];
                }
            }
        }
        g
    }
}

/// Matrix-free periodic Laplacian with multilinear elements.
pub struct Projector<const D: usize> {
    grid: PeriodicGrid<D>,
    element: Element<D>,
    /// Corner indices of every cell, `2^D` per cell.
    connectivity: Vec<usize>,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl<const D: usize> Projector<D> {
    pub fn new(grid: PeriodicGrid<D>) -> Self {
        let element = Element::new(grid.h());
        let corners = element.corners;
        let mut connectivity = vec![0; grid.len() * corners];
        for (k, chunk) in connectivity.chunks_mut(corners).enumerate() {
            grid.corners(k, chunk);
        }
        Self {
            grid,
            element,
            connectivity,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: 20 * grid.m.pow(D as u32).max(100),
        }
    }

    pub fn grid(&self) -> PeriodicGrid<D> {
        self.grid
    }

    /// `y = K x` for one scalar component.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let nc = self.element.corners;
        y.iter_mut().for_each(|v| *v = 0.0);
        for cell in self.connectivity.chunks(nc) {
            for a in 0..nc {
                let row = &self.element.stiffness[a * nc..(a + 1) * nc];
                let s: f64 = row.iter().zip(cell).map(|(k, &j)| k * x[j]).sum();
                y[cell[a]] += s;
            }
        }
    }

    /// Load vectors `∫ G_c · ∇φ` for each displacement component `c`, with
    /// `G = F± − ⟨F±⟩` sampled at the Gauss points.
    fn load<F: Fn(&Vector<D>) -> Matrix<D>>(&self, field: &F, mean: &Matrix<D>) -> Vec<Vec<f64>> {
        let nc = self.element.corners;
        let h = self.grid.h();
        // gradient scale 1/h times point weight h^D / 2^D
        let weight = math::powf(h, D as f64 - 1.0) / nc as f64;
        let mut b = vec![vec![0.0; self.grid.len()]; D];
        for (k, cell) in self.connectivity.chunks(nc).enumerate() {
            let origin = self.grid.node(k);
            for (q, p) in self.element.points.iter().enumerate() {
                let mut x = origin;
                for (xi, pi) in x.iter_mut().zip(p) {
                    *xi += pi * h;
                }
                let g = field(&x) - *mean;
                for (a, &node) in cell.iter().enumerate() {
                    let grad = &self.element.grads[q][a];
                    for (comp, bc) in b.iter_mut().enumerate() {
                        let dot: f64 = g.0[comp].iter().zip(grad).map(|(u, v)| u * v).sum();
                        bc[node] += weight * dot;
                    }
                }
            }
        }
        b
    }

    /// Average of the field over the quadrature points, and the load norm
    /// that rounding of that average alone can produce.
    fn cell_average<F: Fn(&Vector<D>) -> Matrix<D>>(&self, field: &F) -> (Matrix<D>, f64) {
        let h = self.grid.h();
        let mut sum = Matrix::zeros();
        let mut peak: f64 = 0.0;
        let mut count = 0usize;
        for k in 0..self.grid.len() {
            let origin = self.grid.node(k);
            for p in &self.element.points {
                let mut x = origin;
                for (xi, pi) in x.iter_mut().zip(p) {
                    *xi += pi * h;
                }
                let g = field(&x);
                peak = peak.max(g.max_abs());
                sum += g;
                count += 1;
            }
        }
        let floor = NOISE_FLOOR * peak * math::powf(h, D as f64 - 1.0) * math::sqrt((D * self.grid.len()) as f64);
        (sum * (1.0 / count as f64), floor)
    }

    /// Projects the gradient field onto periodic displacements.
    pub fn project<F: Fn(&Vector<D>) -> Matrix<D>>(&self, field: F) -> Result<DisplacementField<D>, Error> {
        let (mean, floor) = self.cell_average(&field);
        let mut loads = self.load(&field, &mean);
        loads.iter_mut().for_each(|b| deflate(b));
        // one scale for all components; a component whose load is rounding
        // noise must not be solved to a tolerance relative to that noise
        let mut scale = math::sqrt(loads.iter().map(|b| dot(b, b)).sum());
        let n = self.grid.len();
        let mut u = vec![[0.0; D]; n];
        let mut iterations = 0;
        let mut residual_sq = 0.0;
        if scale <= floor {
            // homogeneous field
            scale = 0.0;
            loads.clear();
        }
        for (comp, b) in loads.iter().enumerate() {
            let (x, res, it) = self.solve(b, self.tolerance * scale / math::sqrt(D as f64))?;
            residual_sq += res * res;
            iterations = iterations.max(it);
            for (ui, xi) in u.iter_mut().zip(x) {
                ui[comp] = xi;
            }
        }
        let residual = if scale > 0.0 {
            math::sqrt(residual_sq) / scale
        } else {
            0.0
        };
        Ok(DisplacementField {
            grid: self.grid,
            u,
            average_gradient: mean,
            residual,
            iterations,
        })
    }

    /// `‖K u − b‖ / ‖b‖` over all components for a given solution, computed
    /// from scratch.
    pub fn residual<F: Fn(&Vector<D>) -> Matrix<D>>(&self, field: F, solution: &DisplacementField<D>) -> f64 {
        let (mean, floor) = self.cell_average(&field);
        let loads = self.load(&field, &mean);
        let mut ku = vec![0.0; self.grid.len()];
        let (mut r2, mut b2) = (0.0, 0.0);
        for (comp, b) in loads.iter().enumerate() {
            let x: Vec<f64> = solution.u.iter().map(|v| v[comp]).collect();
            self.apply(&x, &mut ku);
            r2 += ku.iter().zip(b).map(|(a, c)| (a - c) * (a - c)).sum::<f64>();
            b2 += dot(b, b);
        }
        if b2 > floor * floor {
            math::sqrt(r2 / b2)
        } else {
            math::sqrt(r2)
        }
    }

    /// Conjugate gradients on the zero-mean subspace down to an absolute
    /// residual `target`. Returns the solution and its true residual norm.
    fn solve(&self, b: &[f64], target: f64) -> Result<(Vec<f64>, f64, usize), Error> {
        let n = b.len();
        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let mut kp = vec![0.0; n];
        if norm(&r) <= target {
            return Ok((x, norm(&r), 0));
        }
        let mut p = r.clone();
        let mut rr = dot(&r, &r);
        let true_residual = |x: &[f64], kx: &mut [f64]| {
            self.apply(x, kx);
            math::sqrt(kx.iter().zip(b).map(|(a, c)| (a - c) * (a - c)).sum::<f64>())
        };
        for it in 1..=self.max_iterations {
            self.apply(&p, &mut kp);
            let alpha = rr / dot(&p, &kp);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * kp[i];
            }
            deflate(&mut r);
            let mut rr_new = dot(&r, &r);
            if math::sqrt(rr_new) <= target {
                deflate(&mut x);
                // guard against drift of the recursive residual
                let res = true_residual(&x, &mut kp);
                if res <= target {
                    return Ok((x, res, it));
                }
                r.copy_from_slice(b);
                for i in 0..n {
                    r[i] -= kp[i];
                }
                deflate(&mut r);
                rr_new = dot(&r, &r);
            }
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
        deflate(&mut x);
        let res = true_residual(&x, &mut kp);
        Err(Error::NotConverged {
            iterations: self.max_iterations,
            residual: res,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    math::sqrt(dot(a, a))
}

fn deflate(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

/// Fraction of grid cells (sampled at centers) occupied by each leaf.
pub fn phase_fractions<const D: usize>(field: &LaminateField<'_, D>, grid: &PeriodicGrid<D>) -> Vec<f64> {
    let mut counts = vec![0usize; field.tree().leaf_count()];
    for k in 0..grid.len() {
        counts[field.leaf_index(&grid.cell_center(k))] += 1;
    }
    counts.into_iter().map(|c| c as f64 / grid.len() as f64).collect()
}
