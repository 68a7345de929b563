//! Discrete rank-one direction sets and their scaling into the bounding box.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::Error;
use crate::math;
use crate::tensor::{Matrix, Vector};

/// A rank-one matrix `a ⊗ b` together with its factors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dyad<const D: usize> {
    pub a: Vector<D>,
    pub b: Vector<D>,
    pub matrix: Matrix<D>,
}

impl<const D: usize> Dyad<D> {
    pub fn new(a: Vector<D>, b: Vector<D>) -> Self {
        Self {
            a,
            b,
            matrix: Matrix::outer(&a, &b),
        }
    }

    /// Rescales the dyad by `s` (applied to the first factor).
    pub fn scaled(&self, s: f64) -> Self {
        let mut a = self.a;
        for v in a.iter_mut() {
            *v *= s;
        }
        Self::new(a, self.b)
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().all(|&v| v == 0.0) || self.b.iter().all(|&v| v == 0.0)
    }
}

/// Deduplicated set of rank-one directions with integer factors in `{−1, 0, 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionSet<const D: usize> {
    dirs: Vec<Dyad<D>>,
}

/// All nonzero vectors with entries in `{−1, 0, 1}`, lexicographic with `−1 < 0 < 1`.
fn sign_vectors<const D: usize>() -> Vec<Vector<D>> {
    let total = 3usize.pow(D as u32);
    let mut out = Vec::with_capacity(total - 1);
    for code in 0..total {
        let mut v = [0.0; D];
        let mut rest = code;
        for k in (0..D).rev() {
            v[k] = (rest % 3) as f64 - 1.0;
            rest /= 3;
        }
        if v.iter().any(|&x| x != 0.0) {
            out.push(v);
        }
    }
    out
}

fn lex_cmp<const D: usize>(x: &Vector<D>, y: &Vector<D>) -> Ordering {
    for (a, b) in x.iter().zip(y.iter()) {
        match a.partial_cmp(b) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

impl<const D: usize> DirectionSet<D> {
    /// Every dyad `a ⊗ b` with `a, b ∈ {−1,0,1}ᵈ \ {0}`, in lexicographic
    /// `(a, b)` order, before parallel deduplication.
    pub fn raw() -> Result<Vec<Dyad<D>>, Error> {
        if D != 2 && D != 3 {
            return Err(Error::UnsupportedDimension(D));
        }
        let vs = sign_vectors::<D>();
        let mut out = Vec::with_capacity(vs.len() * vs.len());
        for a in &vs {
            for b in &vs {
                out.push(Dyad::new(*a, *b));
            }
        }
        Ok(out)
    }

    /// The standard direction set, keeping the lexicographically smallest
    /// representative of every class of parallel dyads.
    pub fn standard() -> Result<Self, Error> {
        let mut dirs: Vec<Dyad<D>> = Vec::new();
        for cand in Self::raw()? {
            // entries are in {−1,0,1}, so parallel means equal up to sign
            let parallel = dirs.iter().any(|d| d.matrix == cand.matrix || d.matrix == -cand.matrix);
            if !parallel {
                dirs.push(cand);
            }
        }
        Ok(Self { dirs })
    }

    /// A user-supplied set. Zero dyads are rejected.
    pub fn from_dyads(dirs: Vec<Dyad<D>>) -> Result<Self, Error> {
        if dirs.is_empty() {
            return Err(Error::InvalidInput("direction set is empty"));
        }
        if dirs.iter().any(|d| d.is_zero()) {
            return Err(Error::InvalidInput("direction set contains a zero dyad"));
        }
        Ok(Self { dirs })
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&Dyad<D>> {
        self.dirs.get(i)
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Dyad<D>> {
        self.dirs.iter()
    }

    pub fn as_slice(&self) -> &[Dyad<D>] {
        &self.dirs
    }

    /// Position of `d` in the set, comparing factors lexicographically.
    pub fn position(&self, d: &Dyad<D>) -> Option<usize> {
        self.dirs
            .iter()
            .position(|x| lex_cmp(&x.a, &d.a).is_eq() && lex_cmp(&x.b, &d.b).is_eq())
    }
}

/// Parameters of one envelope evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexifyParams<const D: usize> {
    /// Samples per one-dimensional convexification.
    pub n: usize,
    /// Infinity-norm radius of the bounding box around the root gradient.
    pub r: f64,
    /// Maximum lamination tree depth.
    pub k_max: usize,
    pub dirs: DirectionSet<D>,
}

impl<const D: usize> ConvexifyParams<D> {
    pub fn new(n: usize, r: f64, k_max: usize, dirs: DirectionSet<D>) -> Result<Self, Error> {
        if n < 2 {
            return Err(Error::InvalidInput("N must be at least 2"));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidInput("r must be positive and finite"));
        }
        if k_max < 1 {
            return Err(Error::InvalidInput("k_max must be at least 1"));
        }
        if dirs.is_empty() {
            return Err(Error::InvalidInput("direction set is empty"));
        }
        Ok(Self { n, r, k_max, dirs })
    }

    /// Standard direction set with the given `N`, `r`, `k_max`.
    pub fn standard(n: usize, r: f64, k_max: usize) -> Result<Self, Error> {
        Self::new(n, r, k_max, DirectionSet::standard()?)
    }
}

/// Uniform sampling `F_eval + i·δ·R` for `i ∈ [i_min, i_max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineSampling {
    pub delta: f64,
    pub i_min: i64,
    pub i_max: i64,
}

impl LineSampling {
    pub fn count(&self) -> usize {
        (self.i_max - self.i_min + 1) as usize
    }

    /// Line parameter of the `k`-th sample, `k = 0..count()`.
    #[inline]
    pub fn param(&self, k: usize) -> f64 {
        (self.i_min + k as i64) as f64 * self.delta
    }

    /// Sample index of the evaluation point itself (`i = 0`).
    pub fn origin(&self) -> usize {
        (-self.i_min) as usize
    }
}

/// Relative slack when testing box membership, absorbing rounding of
/// `F + s·R` at the box faces.
const BOX_SLACK: f64 = 1e-12;

pub fn inside_box<const D: usize>(f: &Matrix<D>, root: &Matrix<D>, r: f64) -> bool {
    (*f - *root).max_abs() <= r * (1.0 + BOX_SLACK)
}

/// Chooses `δ` and the index range so that `N` samples along `±R` through
/// `f_eval` cover the longest segment inside the box `‖G − root‖∞ ≤ r`, with
/// `f_eval` itself as sample `i = 0`.
pub fn scale_direction<const D: usize>(
    dir: &Dyad<D>,
    n: usize,
    r: f64,
    root: &Matrix<D>,
    f_eval: &Matrix<D>,
) -> Result<LineSampling, Error> {
    if n < 2 {
        return Err(Error::InvalidInput("N must be at least 2"));
    }
    if dir.is_zero() {
        return Err(Error::InvalidInput("zero direction"));
    }
    if !inside_box(f_eval, root, r) {
        return Err(Error::OutOfRange);
    }
    let mut s_lo = f64::NEG_INFINITY;
    let mut s_hi = f64::INFINITY;
    for i in 0..D {
        for j in 0..D {
            let rij = dir.matrix.0[i][j];
            if rij == 0.0 {
                continue;
            }
            let offset = f_eval.0[i][j] - root.0[i][j];
            let (p, q) = ((-r - offset) / rij, (r - offset) / rij);
            s_lo = s_lo.max(p.min(q));
            s_hi = s_hi.min(p.max(q));
        }
    }
    let below = (-s_lo).max(0.0);
    let above = s_hi.max(0.0);
    let span = below + above;
    if !(span > 0.0) || !span.is_finite() {
        return Err(Error::DegenerateSegment);
    }
    let steps = (n - 1) as i64;
    let i_max = math::round(steps as f64 * above / span) as i64;
    let i_max = i_max.clamp(0, steps);
    let i_min = i_max - steps;
    let mut delta = f64::INFINITY;
    if i_max > 0 {
        delta = delta.min(above / i_max as f64);
    }
    if i_min < 0 {
        delta = delta.min(below / (-i_min) as f64);
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::DegenerateSegment);
    }
    Ok(LineSampling { delta, i_min, i_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{Matrix2, Matrix3};

    #[test]
    fn raw_counts() {
        assert_eq!(DirectionSet::<2>::raw().unwrap().len(), 64);
        assert_eq!(DirectionSet::<3>::raw().unwrap().len(), 676);
        assert!(DirectionSet::<4>::raw().is_err());
    }

    #[test]
    fn standard_set_sizes() {
        // ±a and ±b identify four raw dyads per class
        assert_eq!(DirectionSet::<2>::standard().unwrap().len(), 16);
        assert_eq!(DirectionSet::<3>::standard().unwrap().len(), 169);
    }

    #[test]
    fn axis_direction_survives() {
        let set = DirectionSet::<2>::standard().unwrap();
        let axis = Matrix2::outer(&[1.0, 0.0], &[1.0, 0.0]);
        assert!(set.iter().any(|d| d.matrix == axis || d.matrix == -axis));
    }

    #[test]
    fn every_discarded_dyad_has_a_parallel_representative() {
        let set = DirectionSet::<3>::standard().unwrap();
        for raw in DirectionSet::<3>::raw().unwrap() {
            assert!(set.iter().any(|d| d.matrix == raw.matrix || d.matrix == -raw.matrix));
        }
        for (i, x) in set.iter().enumerate() {
            assert!(x.matrix.is_rank_one(1e-10));
            for y in set.iter().skip(i + 1) {
                assert!(x.matrix != y.matrix && x.matrix != -y.matrix);
            }
        }
    }

    #[test]
    fn representative_is_lexicographically_smallest() {
        let set = DirectionSet::<2>::standard().unwrap();
        // class of e1 ⊗ e1 has members (±e1) ⊗ (±e1); smallest is (−1,0)⊗(−1,0)
        let axis = Matrix2::outer(&[1.0, 0.0], &[1.0, 0.0]);
        let rep = set.iter().find(|d| d.matrix == axis).unwrap();
        assert_eq!((rep.a, rep.b), ([-1.0, 0.0], [-1.0, 0.0]));
    }

    #[test]
    fn centered_axis_scaling() {
        let e11 = Dyad::new([1.0, 0.0], [1.0, 0.0]);
        let f = Matrix2::zeros();
        let s = scale_direction(&e11, 11, 1.0, &f, &f).unwrap();
        assert!((s.delta - 0.2).abs() < 1e-15);
        assert_eq!((s.i_min, s.i_max), (-5, 5));
        assert_eq!(s.count(), 11);
        assert_eq!(s.origin(), 5);
    }

    #[test]
    fn clipping_at_a_face() {
        let e11 = Dyad::new([1.0, 0.0], [1.0, 0.0]);
        let root = Matrix2::zeros();
        let at_face = Matrix2::from_diagonal([1.0, 0.0]);
        let s = scale_direction(&e11, 11, 1.0, &root, &at_face).unwrap();
        assert_eq!(s.i_max, 0);
        assert_eq!(s.i_min, -10);
        assert!((s.delta - 0.2).abs() < 1e-15);
    }

    #[test]
    fn homogeneous_in_direction_scale() {
        let root = Matrix3::identity();
        let f = root + Matrix3::from_diagonal([0.1, -0.3, 0.05]);
        let d = Dyad::new([1.0, -1.0, 0.0], [0.0, 1.0, 1.0]);
        let d2 = d.scaled(2.0);
        let s1 = scale_direction(&d, 37, 0.7, &root, &f).unwrap();
        let s2 = scale_direction(&d2, 37, 0.7, &root, &f).unwrap();
        assert_eq!((s1.i_min, s1.i_max), (s2.i_min, s2.i_max));
        assert!((s1.delta - 2.0 * s2.delta).abs() < 1e-15);
        for k in 0..s1.count() {
            let g1 = f + d.matrix * s1.param(k);
            let g2 = f + d2.matrix * s2.param(k);
            assert!((g1 - g2).max_abs() < 1e-14);
        }
    }

    #[test]
    fn outside_box_is_rejected() {
        let e11 = Dyad::new([1.0, 0.0], [1.0, 0.0]);
        let root = Matrix2::zeros();
        let far = Matrix2::from_diagonal([1.5, 0.0]);
        assert_eq!(scale_direction(&e11, 11, 1.0, &root, &far), Err(Error::OutOfRange));
    }

    #[test]
    fn blocked_corner_is_degenerate() {
        // offset +r in (0,0) and −r in (0,1): R = e1 ⊗ (1,1) cannot move
        let d = Dyad::new([1.0, 0.0], [1.0, 1.0]);
        let root = Matrix2::zeros();
        let f = Matrix([[1.0, -1.0], [0.0, 0.0]]);
        assert_eq!(scale_direction(&d, 11, 1.0, &root, &f), Err(Error::DegenerateSegment));
    }

    #[test]
    fn params_validation() {
        let dirs = DirectionSet::<2>::standard().unwrap();
        assert!(ConvexifyParams::new(1, 1.0, 10, dirs.clone()).is_err());
        assert!(ConvexifyParams::new(10, 0.0, 10, dirs.clone()).is_err());
        assert!(ConvexifyParams::new(10, 1.0, 0, dirs.clone()).is_err());
        assert!(ConvexifyParams::new(10, 1.0, 10, dirs).is_ok());
    }
}
