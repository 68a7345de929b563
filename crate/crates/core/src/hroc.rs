//! Hierarchical rank-one sequence convexification.
//!
//! Starting from a single-leaf tree at `F`, every leaf is convexified along
//! each direction of the discrete rank-one set. The direction whose
//! one-dimensional envelope gives the lowest whole-tree energy splits the leaf
//! into its two bracketing support points, and both phases are queued for
//! further splitting until no direction improves or `k_max` is reached.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::convexify::Convexifier;
use crate::directions::{scale_direction, ConvexifyParams, Dyad};
use crate::energy::EnergyDensity;
use crate::error::Error;
use crate::tensor::{Matrix, Matrix2, Tensor4};
use crate::tree::{HSequence, Split, TreeNode};

/// Relative improvement a split must achieve to be accepted.
pub const SPLIT_EPS: f64 = 1e-10;
/// Relative improvement a new direction needs over the cached one.
pub const CONTINUITY_EPS: f64 = 1e-8;
/// Default number of rotations sampled by [`Hroc::rotational_average`].
pub const DEFAULT_ROTATIONS: usize = 16;

/// A tentative split of one leaf.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaminateCandidate<const D: usize> {
    pub f_plus: Matrix<D>,
    pub f_minus: Matrix<D>,
    pub direction: Dyad<D>,
    /// Position of `direction` in the direction set.
    pub direction_index: usize,
    /// Minus-phase volume fraction.
    pub lambda: f64,
    /// Whole-tree energy if the split is applied.
    pub value: f64,
    /// Envelope value at the split leaf along `direction`.
    pub local_value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HrocResult<const D: usize> {
    pub tree: TreeNode<D>,
    /// Envelope approximation `Σ ξᵢ W(Fᵢ)`.
    pub w_rc: f64,
    /// `Σ ξᵢ ∂W(Fᵢ)`.
    pub p: Matrix<D>,
    /// `Σ ξᵢ ∂²W(Fᵢ)`.
    pub a: Tensor4<D>,
    pub sequence: HSequence<D>,
}

/// Identifies one material point (and, for rotational averaging, one
/// rotation of it) across successive calls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PointKey {
    pub point: u64,
    pub variant: u32,
}

impl PointKey {
    pub fn new(point: u64) -> Self {
        Self { point, variant: 0 }
    }
}

/// Last accepted split direction per tree level, per material point.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ContinuityCache {
    entries: BTreeMap<PointKey, Vec<Option<usize>>>,
}

impl ContinuityCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: PointKey, level: usize) -> Option<usize> {
        self.entries.get(&key)?.get(level).copied().flatten()
    }

    pub fn levels(&self, key: PointKey) -> Option<&[Option<usize>]> {
        self.entries.get(&key).map(|v| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    fn record(&mut self, key: PointKey, level: usize, direction: usize) {
        let levels = self.entries.entry(key).or_default();
        if levels.len() <= level {
            levels.resize(level + 1, None);
        }
        levels[level] = Some(direction);
    }
}

struct ArenaNode<const D: usize> {
    f: Matrix<D>,
    depth: usize,
    fraction: f64,
    value: f64,
    split: Option<ArenaSplit<D>>,
}

struct ArenaSplit<const D: usize> {
    lambda: f64,
    direction: Dyad<D>,
    minus: usize,
    plus: usize,
}

/// HROC evaluator with reusable line buffers. One instance per worker.
#[derive(Clone, Debug)]
pub struct Hroc<const D: usize> {
    params: ConvexifyParams<D>,
    convexifier: Convexifier,
    samples: Vec<f64>,
}

impl<const D: usize> Hroc<D> {
    pub fn new(params: ConvexifyParams<D>) -> Self {
        let n = params.n;
        Self {
            params,
            convexifier: Convexifier::with_capacity(n),
            samples: Vec::with_capacity(n),
        }
    }

    pub fn params(&self) -> &ConvexifyParams<D> {
        &self.params
    }

    /// Envelope of `W` along direction `k` through `f_eval`, bracketed at
    /// `f_eval`. `None` when the direction is blocked by the box or `f_eval`
    /// is itself a support point.
    fn line_split<W: EnergyDensity<D> + ?Sized>(
        &mut self,
        w: &W,
        root: &Matrix<D>,
        f_eval: &Matrix<D>,
        k: usize,
    ) -> Result<Option<(f64, f64, Matrix<D>, Matrix<D>)>, Error> {
        let dir = self.params.dirs.as_slice()[k];
        let sampling = match scale_direction(&dir, self.params.n, self.params.r, root, f_eval) {
            Ok(s) => s,
            Err(Error::DegenerateSegment) => return Ok(None),
            Err(e) => return Err(e),
        };
        let count = sampling.count();
        self.samples.clear();
        self.samples.extend((0..count).map(|i| {
            let g = *f_eval + dir.matrix * sampling.param(i);
            w.value(&g)
        }));
        let samples = &self.samples;
        let hull = self.convexifier.run(count, |i| i as f64, |i| samples[i]);
        let origin = sampling.origin();
        let bracket = hull.envelope_at(origin as f64)?;
        if bracket.left == bracket.right {
            return Ok(None);
        }
        let minus = *f_eval + dir.matrix * sampling.param(hull.index[bracket.left]);
        let plus = *f_eval + dir.matrix * sampling.param(hull.index[bracket.right]);
        Ok(Some((bracket.value, bracket.lambda, minus, plus)))
    }

    /// Searches all directions for the split of the leaf `f_eval` (volume
    /// fraction `fraction`, energy `w_leaf`) that lowers the whole-tree value
    /// `w_ref` the most. A `preferred` direction is tried first and is only
    /// displaced by a margin of [`CONTINUITY_EPS`].
    #[allow(clippy::too_many_arguments)]
    pub fn kernel<W: EnergyDensity<D> + ?Sized>(
        &mut self,
        w: &W,
        root: &Matrix<D>,
        f_eval: &Matrix<D>,
        fraction: f64,
        w_leaf: f64,
        w_ref: f64,
        preferred: Option<usize>,
    ) -> Result<Option<LaminateCandidate<D>>, Error> {
        let accept_below = w_ref - SPLIT_EPS * (1.0 + w_ref.abs());
        let hysteresis = CONTINUITY_EPS * (1.0 + w_ref.abs());
        let preferred = preferred.filter(|&k| k < self.params.dirs.len());
        let mut best: Option<LaminateCandidate<D>> = None;
        let mut best_is_preferred = false;

        let order = preferred
            .into_iter()
            .chain((0..self.params.dirs.len()).filter(move |&k| Some(k) != preferred));
        for k in order {
            let Some((local, lambda, minus, plus)) = self.line_split(w, root, f_eval, k)? else {
                continue;
            };
            let value = w_ref + fraction * (local - w_leaf);
            if !(value < accept_below) {
                continue;
            }
            let margin = if best_is_preferred { hysteresis } else { 0.0 };
            if best.map_or(true, |b| value < b.value - margin) {
                best_is_preferred = Some(k) == preferred;
                best = Some(LaminateCandidate {
                    f_plus: plus,
                    f_minus: minus,
                    direction: self.params.dirs.as_slice()[k],
                    direction_index: k,
                    lambda,
                    value,
                    local_value: local,
                });
            }
        }
        Ok(best)
    }

    /// Builds the lamination tree at `f` and evaluates the envelope and its
    /// derivatives. With a cache, the directions chosen at each level are
    /// preferred on the next call for the same key and recorded afterwards.
    pub fn evaluate<W: EnergyDensity<D> + ?Sized>(
        &mut self,
        w: &W,
        f: &Matrix<D>,
        mut cache: Option<(&mut ContinuityCache, PointKey)>,
    ) -> Result<HrocResult<D>, Error> {
        if !f.is_finite() {
            return Err(Error::InvalidInput("deformation gradient must be finite"));
        }
        if !w.admissible(f) {
            return Err(Error::Inadmissible);
        }
        let w_root = w.value(f);
        if !w_root.is_finite() {
            return Err(Error::Inadmissible);
        }
        let k_max = self.params.k_max;
        let mut nodes = alloc::vec![ArenaNode {
            f: *f,
            depth: 0,
            fraction: 1.0,
            value: w_root,
            split: None,
        }];
        let mut tree_value = w_root;
        let mut chosen: Vec<Option<usize>> = Vec::new();

        let preferred_at = |cache: &Option<(&mut ContinuityCache, PointKey)>, level: usize| {
            cache.as_ref().and_then(|(c, key)| c.get(*key, level))
        };

        let first = self.kernel(w, f, f, 1.0, w_root, tree_value, preferred_at(&cache, 0))?;
        let mut queue: VecDeque<(usize, Option<LaminateCandidate<D>>)> = VecDeque::new();
        queue.push_back((0, first));

        while let Some((id, candidate)) = queue.pop_front() {
            let Some(lc) = candidate else { continue };
            let (depth, fraction, value) = {
                let n = &nodes[id];
                (n.depth, n.fraction, n.value)
            };
            if depth >= k_max {
                continue;
            }
            let w_minus = w.value(&lc.f_minus);
            let w_plus = w.value(&lc.f_plus);
            let minus_id = nodes.len();
            nodes.push(ArenaNode {
                f: lc.f_minus,
                depth: depth + 1,
                fraction: fraction * lc.lambda,
                value: w_minus,
                split: None,
            });
            let plus_id = nodes.len();
            nodes.push(ArenaNode {
                f: lc.f_plus,
                depth: depth + 1,
                fraction: fraction * (1.0 - lc.lambda),
                value: w_plus,
                split: None,
            });
            nodes[id].split = Some(ArenaSplit {
                lambda: lc.lambda,
                direction: lc.direction,
                minus: minus_id,
                plus: plus_id,
            });
            tree_value += fraction * (lc.lambda * w_minus + (1.0 - lc.lambda) * w_plus - value);
            if chosen.len() <= depth {
                chosen.resize(depth + 1, None);
            }
            chosen[depth].get_or_insert(lc.direction_index);

            if depth + 1 < k_max {
                let preferred = preferred_at(&cache, depth + 1);
                for child in [plus_id, minus_id] {
                    let (cf, cfrac, cval) = (nodes[child].f, nodes[child].fraction, nodes[child].value);
                    let next = self.kernel(w, f, &cf, cfrac, cval, tree_value, preferred)?;
                    queue.push_back((child, next));
                }
            }
        }

        if let Some((c, key)) = cache.as_mut() {
            for (level, dir) in chosen.iter().enumerate() {
                if let Some(k) = dir {
                    c.record(*key, level, *k);
                }
            }
        }

        let tree = build_tree(&nodes, 0);
        let sequence = tree.leaves();
        let w_rc = sequence.evaluate(w)?;
        let (p, a) = sequence.derivatives(w)?;
        Ok(HrocResult {
            tree,
            w_rc,
            p,
            a,
            sequence,
        })
    }
}

fn build_tree<const D: usize>(nodes: &[ArenaNode<D>], id: usize) -> TreeNode<D> {
    let n = &nodes[id];
    TreeNode {
        f: n.f,
        depth: n.depth,
        split: n.split.as_ref().map(|s| {
            Box::new(Split {
                lambda: s.lambda,
                direction: s.direction,
                minus: build_tree(nodes, s.minus),
                plus: build_tree(nodes, s.plus),
            })
        }),
    }
}

/// Rotation angles `θⱼ = jπ/(2n)`, `j = 0..n`, sampling a quarter turn.
pub fn rotation_angles(n_rot: usize) -> impl Iterator<Item = f64> {
    (0..n_rot).map(move |j| j as f64 * FRAC_PI_2 / n_rot as f64)
}

/// The reflection swapping both axes.
const SWAP: Matrix2 = Matrix([[0.0, 1.0], [1.0, 0.0]]);

/// Rotation-averaged envelope response of an isotropic energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationalAverage {
    /// Orientation-averaged relaxed stress.
    pub p: Matrix2,
    /// Mean envelope value over the same orientations.
    pub w: f64,
}

impl Hroc<2> {
    /// Averages the relaxed stress over reoriented copies of `f`, restoring
    /// the isotropy that a fixed direction set breaks.
    ///
    /// The orbit covers rotations `Qⱼ F` and their mirror images
    /// `S Qⱼ F S` under the axis swap `S`, i.e. a sampled O(2) rather than
    /// SO(2). Rotations alone leave a bias: points such as `tQ` satisfy
    /// `F = S Fᵀ S`, so mirror-image directions tie there and the
    /// index-ordered tie-break always favours the same one. Requires
    /// `W(S F S) = W(F)`, which holds for every isotropic model here. When
    /// `S F S == F` the mirrored half is obtained without re-evaluation.
    ///
    /// With a cache, orientation `j` keeps its own continuity history under
    /// `variant = j` (mirror images under `n_rot + j`).
    pub fn rotational_average<W: EnergyDensity<2> + ?Sized>(
        &mut self,
        w: &W,
        f: &Matrix2,
        n_rot: usize,
        mut cache: Option<(&mut ContinuityCache, u64)>,
    ) -> Result<RotationalAverage, Error> {
        if n_rot == 0 {
            return Err(Error::InvalidInput("n_rot must be at least 1"));
        }
        let direct = self.rotation_sum(w, f, n_rot, 0, cache.as_mut().map(|(c, k)| (&mut **c, *k)))?;
        let mirrored_f = SWAP.matmul(f).matmul(&SWAP);
        let mirrored = if mirrored_f == *f {
            direct
        } else {
            let key = cache.as_mut().map(|(c, k)| (&mut **c, *k));
            self.rotation_sum(w, &mirrored_f, n_rot, n_rot as u32, key)?
        };
        let p_mirror = SWAP.matmul(&mirrored.p).matmul(&SWAP);
        Ok(RotationalAverage {
            p: (direct.p + p_mirror) * 0.5,
            w: 0.5 * (direct.w + mirrored.w),
        })
    }

    /// `(1/n) Σ Qⱼᵀ P(Qⱼ F)` and the matching mean value.
    fn rotation_sum<W: EnergyDensity<2> + ?Sized>(
        &mut self,
        w: &W,
        f: &Matrix2,
        n_rot: usize,
        variant_offset: u32,
        mut cache: Option<(&mut ContinuityCache, u64)>,
    ) -> Result<RotationalAverage, Error> {
        let mut p = Matrix2::zeros();
        let mut w_sum = 0.0;
        for (j, theta) in rotation_angles(n_rot).enumerate() {
            let q = Matrix2::rotation(theta);
            let key = cache.as_mut().map(|(c, point)| {
                let variant = variant_offset + j as u32;
                (&mut **c, PointKey { point: *point, variant })
            });
            let res = self.evaluate(w, &q.matmul(f), key)?;
            p += q.transpose().matmul(&res.p);
            w_sum += res.w_rc;
        }
        let inv = 1.0 / n_rot as f64;
        Ok(RotationalAverage {
            p: p * inv,
            w: w_sum * inv,
        })
    }
}

/// One kernel search at `f_eval` for the tree rooted at `root`.
pub fn hroc_kernel<const D: usize, W: EnergyDensity<D> + ?Sized>(
    root: &TreeNode<D>,
    params: &ConvexifyParams<D>,
    w: &W,
    f_eval: &Matrix<D>,
) -> Result<Option<LaminateCandidate<D>>, Error> {
    let seq = root.leaves();
    let (fraction, _) = seq
        .pairs
        .iter()
        .find(|(_, f)| f == f_eval)
        .copied()
        .ok_or(Error::InvalidInput("evaluation point is not a leaf of the tree"))?;
    let w_ref = seq.evaluate(w)?;
    let w_leaf = w.value(f_eval);
    Hroc::new(params.clone()).kernel(w, &root.f, f_eval, fraction, w_leaf, w_ref, None)
}

/// Envelope approximation at `f` with a fresh buffer.
pub fn hroc<const D: usize, W: EnergyDensity<D> + ?Sized>(
    params: &ConvexifyParams<D>,
    w: &W,
    f: &Matrix<D>,
    cache: Option<(&mut ContinuityCache, PointKey)>,
) -> Result<HrocResult<D>, Error> {
    Hroc::new(params.clone()).evaluate(w, f, cache)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{Ksd, Multiwell, Quadratic};
    use crate::tree::check_hm;

    fn params2(n: usize) -> ConvexifyParams<2> {
        ConvexifyParams::standard(n, 1.0, 10).unwrap()
    }

    #[test]
    fn convex_energy_has_no_candidate() {
        let root = TreeNode::leaf(Matrix([[0.3, -0.2], [0.1, 0.5]]));
        let c = hroc_kernel(&root, &params2(101), &Quadratic { scale: 1.0 }, &root.f).unwrap();
        assert!(c.is_none());
    }

    #[test]
    fn multiwell_kernel_at_origin() {
        let root = TreeNode::leaf(Matrix2::zeros());
        let c = hroc_kernel(&root, &params2(201), &Multiwell, &root.f).unwrap().unwrap();
        assert!(c.value < 1e-3, "value {}", c.value);
        assert!((c.f_plus.frobenius_norm() - 1.0).abs() < 0.02);
        assert!((c.f_minus.frobenius_norm() - 1.0).abs() < 0.02);
        assert!((c.f_minus - c.f_plus).is_rank_one(1e-10));
    }

    #[test]
    fn ksd_kernel_near_envelope() {
        let f_hat = Matrix([[0.2, 0.1], [0.1, 0.3]]);
        let root = TreeNode::leaf(f_hat);
        let c = hroc_kernel(&root, &params2(1000), &Ksd, &f_hat).unwrap().unwrap();
        assert!(c.value < Ksd.value(&f_hat));
    }

    #[test]
    fn kernel_requires_leaf() {
        let root = TreeNode::leaf(Matrix2::zeros());
        let other = Matrix2::identity();
        assert!(hroc_kernel(&root, &params2(11), &Multiwell, &other).is_err());
    }

    #[test]
    fn convex_region_is_not_split() {
        let r = hroc(&params2(500), &Ksd, &Matrix2::identity(), None).unwrap();
        assert!(r.tree.is_leaf());
        assert!((r.w_rc - 3.0).abs() < 1e-15);
        assert_eq!(r.p, Ksd.gradient(&Matrix2::identity()));
    }

    #[test]
    fn result_sequence_is_hierarchical() {
        let f = Matrix([[0.2, 0.1], [0.1, 0.3]]);
        let r = hroc(&params2(300), &Ksd, &f, None).unwrap();
        assert!(!r.tree.is_leaf());
        assert!(check_hm(&r.sequence, Some(&r.tree), 1e-9));
        assert!((r.sequence.total_fraction() - 1.0).abs() < 1e-12);
        assert!((r.sequence.center() - f).max_abs() < 1e-10 * f.frobenius_norm());
        assert!(r.w_rc <= Ksd.value(&f));
        assert!((r.w_rc - r.tree.evaluate(&Ksd).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn depth_limit_is_respected() {
        let f = Matrix([[0.2, 0.1], [0.1, 0.3]]);
        let p = ConvexifyParams::standard(300, 1.0, 1).unwrap();
        let r = hroc(&p, &Ksd, &f, None).unwrap();
        assert_eq!(r.tree.max_depth(), 1);
    }

    #[test]
    fn deterministic() {
        let f = Matrix([[0.05, -0.1], [0.02, 0.1]]);
        let a = hroc(&params2(400), &Ksd, &f, None).unwrap();
        let b = hroc(&params2(400), &Ksd, &f, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.w_rc.to_bits(), b.w_rc.to_bits());
    }

    #[test]
    fn cache_records_and_prefers_directions() {
        let mut cache = ContinuityCache::new();
        let key = PointKey::new(7);
        let f = Matrix([[0.2, 0.1], [0.1, 0.3]]);
        let first = hroc(&params2(300), &Ksd, &f, Some((&mut cache, key))).unwrap();
        let recorded = cache.levels(key).unwrap().to_vec();
        assert!(recorded[0].is_some());
        let second = hroc(&params2(300), &Ksd, &f, Some((&mut cache, key))).unwrap();
        assert_eq!(first.tree, second.tree);
        assert_eq!(cache.levels(key).unwrap(), recorded.as_slice());
        assert!(cache.get(PointKey::new(8), 0).is_none());
    }

    #[test]
    fn single_orientation_of_swap_symmetric_point() {
        // S F S == F, so one rotation reduces to symmetrizing a single call
        let f = Matrix([[0.3, 0.1], [0.1, 0.3]]);
        let mut engine = Hroc::new(params2(300));
        let avg = engine.rotational_average(&Ksd, &f, 1, None).unwrap();
        let plain = engine.evaluate(&Ksd, &f, None).unwrap();
        let sym = (plain.p + SWAP.matmul(&plain.p).matmul(&SWAP)) * 0.5;
        assert!((avg.p - sym).max_abs() < 1e-15);
        assert_eq!(avg.w, plain.w_rc);
    }

    #[test]
    fn biaxial_average_is_isotropic() {
        let f = Matrix::from_diagonal([0.25, 0.25]);
        let mut engine = Hroc::new(params2(400));
        let avg = engine.rotational_average(&Ksd, &f, 8, None).unwrap();
        assert!((avg.p.0[0][0] - avg.p.0[1][1]).abs() <= 1e-6 * avg.p.max_abs());
    }

    #[test]
    fn rotation_average_of_convex_response() {
        let f = Matrix([[1.2, 0.3], [-0.1, 0.9]]);
        let w = Quadratic { scale: 0.7 };
        let mut engine = Hroc::new(params2(100));
        let avg = engine.rotational_average(&w, &f, 8, None).unwrap();
        let p = EnergyDensity::<2>::gradient(&w, &f);
        assert!((avg.p - p).max_abs() < 1e-12);
    }
}
