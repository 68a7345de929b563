//! Binary lamination trees and the hierarchical sequences formed by their leaves.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::directions::Dyad;
use crate::energy::EnergyDensity;
use crate::error::Error;
use crate::tensor::{Matrix, Tensor4};

/// Largest sequence length for which [`check_hm`] searches permutations
/// without a tree witness.
pub const MAX_EXHAUSTIVE_HM: usize = 4;

/// Splitting of a node into two rank-one connected phases.
///
/// `lambda` is the volume fraction of the minus phase, so the parent is
/// `λ F⁻ + (1 − λ) F⁺`.
#[derive(Clone, Debug, PartialEq)]
pub struct Split<const D: usize> {
    pub lambda: f64,
    /// Search direction the split was found along; `F⁻ − F⁺` is parallel to it.
    pub direction: Dyad<D>,
    pub minus: TreeNode<D>,
    pub plus: TreeNode<D>,
}

impl<const D: usize> Split<D> {
    /// The rank-one jump `F⁻ − F⁺`.
    pub fn jump(&self) -> Matrix<D> {
        self.minus.f - self.plus.f
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeNode<const D: usize> {
    pub f: Matrix<D>,
    pub depth: usize,
    pub split: Option<Box<Split<D>>>,
}

/// Weighted leaves `(ξᵢ, Fᵢ)` of a lamination tree.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HSequence<const D: usize> {
    pub pairs: Vec<(f64, Matrix<D>)>,
}

impl<const D: usize> HSequence<D> {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn total_fraction(&self) -> f64 {
        self.pairs.iter().map(|(xi, _)| xi).sum()
    }

    /// `Σ ξᵢ Fᵢ`.
    pub fn center(&self) -> Matrix<D> {
        self.pairs.iter().fold(Matrix::zeros(), |acc, (xi, f)| acc + *f * *xi)
    }

    /// `Σ ξᵢ W(Fᵢ)`.
    pub fn evaluate<W: EnergyDensity<D> + ?Sized>(&self, w: &W) -> Result<f64, Error> {
        let mut total = 0.0;
        for (xi, f) in &self.pairs {
            if !w.admissible(f) {
                return Err(Error::Inadmissible);
            }
            total += xi * w.value(f);
        }
        Ok(total)
    }

    /// `(Σ ξᵢ ∂W(Fᵢ), Σ ξᵢ ∂²W(Fᵢ))`.
    pub fn derivatives<W: EnergyDensity<D> + ?Sized>(&self, w: &W) -> Result<(Matrix<D>, Tensor4<D>), Error> {
        let mut p = Matrix::zeros();
        let mut a = Tensor4::zeros();
        for (xi, f) in &self.pairs {
            if !w.admissible(f) {
                return Err(Error::Inadmissible);
            }
            p += w.gradient(f) * *xi;
            a.add_scaled(*xi, &w.hessian(f));
        }
        Ok((p, a))
    }

    pub fn gradient<W: EnergyDensity<D> + ?Sized>(&self, w: &W) -> Result<Matrix<D>, Error> {
        let mut p = Matrix::zeros();
        for (xi, f) in &self.pairs {
            if !w.admissible(f) {
                return Err(Error::Inadmissible);
            }
            p += w.gradient(f) * *xi;
        }
        Ok(p)
    }
}

impl<const D: usize> TreeNode<D> {
    pub fn leaf(f: Matrix<D>) -> Self {
        Self::leaf_at(f, 0)
    }

    pub fn leaf_at(f: Matrix<D>, depth: usize) -> Self {
        Self { f, depth, split: None }
    }

    /// Attaches two children; `lambda` is the minus-phase fraction.
    pub fn with_split(mut self, lambda: f64, direction: Dyad<D>, minus: Matrix<D>, plus: Matrix<D>) -> Self {
        let depth = self.depth + 1;
        self.split = Some(Box::new(Split {
            lambda,
            direction,
            minus: TreeNode::leaf_at(minus, depth),
            plus: TreeNode::leaf_at(plus, depth),
        }));
        self
    }

    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }

    /// Deepest level below (and including) this node.
    pub fn max_depth(&self) -> usize {
        match &self.split {
            None => self.depth,
            Some(s) => s.minus.max_depth().max(s.plus.max_depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match &self.split {
            None => 1,
            Some(s) => s.minus.leaf_count() + s.plus.leaf_count(),
        }
    }

    /// Leaves depth-first, minus before plus, with path-product fractions.
    pub fn leaves(&self) -> HSequence<D> {
        let mut pairs = Vec::with_capacity(self.leaf_count());
        self.collect_leaves(1.0, &mut pairs);
        HSequence { pairs }
    }

    fn collect_leaves(&self, weight: f64, out: &mut Vec<(f64, Matrix<D>)>) {
        match &self.split {
            None => out.push((weight, self.f)),
            Some(s) => {
                s.minus.collect_leaves(weight * s.lambda, out);
                s.plus.collect_leaves(weight * (1.0 - s.lambda), out);
            }
        }
    }

    pub fn evaluate<W: EnergyDensity<D> + ?Sized>(&self, w: &W) -> Result<f64, Error> {
        self.leaves().evaluate(w)
    }

    pub fn derivatives<W: EnergyDensity<D> + ?Sized>(&self, w: &W) -> Result<(Matrix<D>, Tensor4<D>), Error> {
        self.leaves().derivatives(w)
    }

    /// Exchanges the phases of every split, mapping `λ ↦ 1 − λ`.
    pub fn swapped(&self) -> Self {
        let split = self.split.as_ref().map(|s| {
            Box::new(Split {
                lambda: 1.0 - s.lambda,
                direction: s.direction,
                minus: s.plus.swapped(),
                plus: s.minus.swapped(),
            })
        });
        Self {
            f: self.f,
            depth: self.depth,
            split,
        }
    }

    /// Checks the structural invariants: every split recombines to its
    /// parent, its phases are rank-one connected along the stored direction,
    /// and depths increase by one per level.
    pub fn validate(&self, tol: f64) -> bool {
        let Some(s) = &self.split else {
            return true;
        };
        if !(s.lambda >= 0.0 && s.lambda <= 1.0) {
            return false;
        }
        if s.minus.depth != self.depth + 1 || s.plus.depth != self.depth + 1 {
            return false;
        }
        let scale = 1.0 + self.f.frobenius_norm() + s.minus.f.frobenius_norm() + s.plus.f.frobenius_norm();
        let recombined = s.minus.f * s.lambda + s.plus.f * (1.0 - s.lambda);
        if (recombined - self.f).max_abs() > tol * scale {
            return false;
        }
        let jump = s.jump();
        if !jump.is_rank_one(tol) || !parallel(&jump, &s.direction.matrix, tol) {
            return false;
        }
        s.minus.validate(tol) && s.plus.validate(tol)
    }
}

/// True when `a` is a nonzero multiple of `b`.
fn parallel<const D: usize>(a: &Matrix<D>, b: &Matrix<D>, tol: f64) -> bool {
    let nb2 = b.frobenius_norm_squared();
    if nb2 == 0.0 {
        return false;
    }
    let s = a.contract(b) / nb2;
    (*a - *b * s).frobenius_norm() <= tol * a.frobenius_norm().max(f64::MIN_POSITIVE)
}

/// Tests the hierarchical rank-one condition `H_M` for `seq`.
///
/// With a tree `witness` the tree structure supplies the permutation: the
/// witness must be valid and its leaves must reproduce `seq`. Without one,
/// all contraction orders are searched for `M ≤ MAX_EXHAUSTIVE_HM`; longer
/// sequences cannot be certified and yield `false`.
pub fn check_hm<const D: usize>(seq: &HSequence<D>, witness: Option<&TreeNode<D>>, tol: f64) -> bool {
    if seq.is_empty() || (seq.total_fraction() - 1.0).abs() > tol {
        return false;
    }
    if seq.pairs.iter().any(|(xi, _)| !(*xi >= 0.0 && *xi <= 1.0 + tol)) {
        return false;
    }
    if seq.len() == 1 {
        return true;
    }
    if let Some(tree) = witness {
        let leaves = tree.leaves();
        return tree.validate(tol)
            && leaves.len() == seq.len()
            && leaves
                .pairs
                .iter()
                .zip(seq.pairs.iter())
                .all(|(a, b)| (a.0 - b.0).abs() <= tol && (a.1 - b.1).max_abs() <= tol * (1.0 + b.1.max_abs()));
    }
    if seq.len() > MAX_EXHAUSTIVE_HM {
        return false;
    }
    hm_search(&seq.pairs, tol)
}

fn hm_search<const D: usize>(pairs: &[(f64, Matrix<D>)], tol: f64) -> bool {
    if pairs.len() == 1 {
        return true;
    }
    for i in 0..pairs.len() {
        for j in (i + 1)..pairs.len() {
            let (xi, fi) = pairs[i];
            let (xj, fj) = pairs[j];
            if !(fi - fj).is_rank_one(tol) {
                continue;
            }
            let zeta = xi + xj;
            if zeta <= 0.0 {
                continue;
            }
            let merged = (fi * xi + fj * xj) * (1.0 / zeta);
            let mut rest: Vec<(f64, Matrix<D>)> = Vec::with_capacity(pairs.len() - 1);
            rest.push((zeta, merged));
            rest.extend(
                pairs
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != i && *k != j)
                    .map(|(_, p)| *p),
            );
            if hm_search(&rest, tol) {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{Affine, Multiwell};
    use crate::tensor::Matrix2;
    use alloc::vec;

    fn e11() -> Dyad<2> {
        Dyad::new([1.0, 0.0], [1.0, 0.0])
    }

    fn e22() -> Dyad<2> {
        Dyad::new([0.0, 1.0], [0.0, 1.0])
    }

    /// `F = 0` split along `e₁⊗e₁` with λ = 0.25, then the plus phase split
    /// again along `e₂⊗e₂` with λ′ = 0.5.
    fn two_level() -> TreeNode<2> {
        let root = Matrix2::zeros();
        let minus = Matrix2::from_diagonal([-0.75, 0.0]);
        let plus = Matrix2::from_diagonal([0.25, 0.0]);
        let mut t = TreeNode::leaf(root).with_split(0.25, e11(), minus, plus);
        let s = t.split.as_mut().unwrap();
        let p = s.plus.f;
        s.plus = s.plus.clone().with_split(
            0.5,
            e22(),
            p + Matrix2::from_diagonal([0.0, -0.5]),
            p + Matrix2::from_diagonal([0.0, 0.5]),
        );
        t
    }

    #[test]
    fn leaf_only_tree() {
        let f = Matrix([[1.0, 2.0], [3.0, 4.0]]);
        let t = TreeNode::leaf(f);
        assert_eq!(t.leaves().pairs, vec![(1.0, f)]);
        assert_eq!(t.evaluate(&Multiwell).unwrap(), Multiwell.value(&f));
        let (p, a) = t.derivatives(&Multiwell).unwrap();
        assert_eq!(p, Multiwell.gradient(&f));
        assert_eq!(a, Multiwell.hessian(&f));
        assert!(check_hm(&t.leaves(), None, 1e-10));
    }

    #[test]
    fn multiwell_gradient_outside_ball() {
        let f = Matrix([[1.0, 0.4], [0.2, 0.9]]);
        let n2 = f.frobenius_norm_squared();
        assert!(n2 > 1.0);
        let (p, _) = TreeNode::leaf(f).derivatives(&Multiwell).unwrap();
        assert!((p - f * (4.0 * (n2 - 1.0))).max_abs() < 1e-14);
    }

    #[test]
    fn first_order_laminate_fractions() {
        let minus = Matrix2::from_diagonal([-0.75, 0.0]);
        let plus = Matrix2::from_diagonal([0.25, 0.0]);
        let t = TreeNode::leaf(Matrix2::zeros()).with_split(0.25, e11(), minus, plus);
        assert_eq!(t.leaves().pairs, vec![(0.25, minus), (0.75, plus)]);
        assert!(t.validate(1e-12));
    }

    #[test]
    fn second_level_fractions() {
        let seq = two_level().leaves();
        let xi: Vec<f64> = seq.pairs.iter().map(|p| p.0).collect();
        assert_eq!(xi, vec![0.25, 0.375, 0.375]);
        assert!((seq.total_fraction() - 1.0).abs() < 1e-12);
        assert!(seq.center().max_abs() < 1e-12);
        assert!(two_level().validate(1e-12));
        assert_eq!(two_level().max_depth(), 2);
        assert_eq!(two_level().leaf_count(), 3);
    }

    #[test]
    fn symmetric_multiwell_split_evaluates_to_zero() {
        let star = Matrix2::from_diagonal([1.0, 0.0]);
        let t = TreeNode::leaf(Matrix2::zeros()).with_split(0.5, e11(), -star, star);
        assert_eq!(t.evaluate(&Multiwell).unwrap(), 0.0);
    }

    #[test]
    fn weighted_leaf_values() {
        // leaf values 4 and 0 with λ = 0.25 on the value-4 phase
        let w = Affine {
            slope: Matrix2::from_diagonal([1.0, 0.0]),
            offset: 0.0,
        };
        let t = TreeNode::leaf(Matrix2::from_diagonal([1.0, 0.0])).with_split(
            0.25,
            e11(),
            Matrix2::from_diagonal([4.0, 0.0]),
            Matrix2::zeros(),
        );
        assert_eq!(t.evaluate(&w).unwrap(), 1.0);
    }

    #[test]
    fn affine_derivative_is_tree_independent() {
        let slope = Matrix([[0.3, -1.0], [2.0, 0.5]]);
        let w = Affine { slope, offset: 1.5 };
        let (p, a) = two_level().derivatives(&w).unwrap();
        assert!((p - slope).max_abs() < 1e-15);
        assert_eq!(a.max_abs(), 0.0);
    }

    #[test]
    fn swap_invariance() {
        let t = two_level();
        let s = t.swapped();
        assert!(s.validate(1e-12));
        let a = t.evaluate(&Multiwell).unwrap();
        let b = s.evaluate(&Multiwell).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn hm_simple_laminate_and_rank_violation() {
        let a = Matrix2::from_diagonal([1.0, 0.0]);
        let ok = HSequence {
            pairs: vec![(0.5, a), (0.5, -a)],
        };
        assert!(check_hm(&ok, None, 1e-10));
        let bad = HSequence {
            pairs: vec![(0.5, Matrix2::identity()), (0.5, Matrix2::zeros())],
        };
        assert!(!check_hm(&bad, None, 1e-10));
    }

    #[test]
    fn hm_with_and_without_witness() {
        let t = two_level();
        let seq = t.leaves();
        assert!(check_hm(&seq, Some(&t), 1e-10));
        assert!(check_hm(&seq, None, 1e-10));
        let mut broken = seq.clone();
        broken.pairs[0].0 = 0.3;
        assert!(!check_hm(&broken, Some(&t), 1e-10));
    }

    #[test]
    fn invalid_split_is_detected() {
        // phases differ by a rank-two matrix
        let t = TreeNode::leaf(Matrix2::zeros()).with_split(0.5, e11(), Matrix2::identity(), -Matrix2::identity());
        assert!(!t.validate(1e-10));
    }
}
