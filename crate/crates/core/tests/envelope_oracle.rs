//! The stack sweep against a gift-wrapping lower hull.

use hroc_core::{convexify, SampledLine};
use proptest::prelude::*;

/// Jarvis march along the lower hull: from the current vertex take the
/// sample of least slope, the farthest one on ties. `O(N·h)`.
fn gift_wrap(x: &[f64], w: &[f64]) -> Vec<usize> {
    let n = x.len();
    let mut hull = vec![0];
    let mut cur = 0;
    while cur < n - 1 {
        let mut best = cur + 1;
        for j in cur + 2..n {
            // slope(cur, j) <= slope(cur, best)
            if (w[j] - w[cur]) * (x[best] - x[cur]) <= (w[best] - w[cur]) * (x[j] - x[cur]) {
                best = j;
            }
        }
        hull.push(best);
        cur = best;
    }
    hull
}

fn interpolate(x: &[f64], w: &[f64], hull: &[usize], x0: f64) -> f64 {
    let k = hull.partition_point(|&i| x[i] < x0);
    if x[hull[k]] == x0 {
        return w[hull[k]];
    }
    let (l, r) = (hull[k - 1], hull[k]);
    let t = (x[r] - x0) / (x[r] - x[l]);
    t * w[l] + (1.0 - t) * w[r]
}

fn float_line() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..=200).prop_flat_map(|n| {
        (
            prop::collection::vec(1e-3f64..1.0, n),
            prop::collection::vec(-10.0f64..10.0, n),
        )
            .prop_map(|(gaps, w)| {
                let mut x = Vec::with_capacity(gaps.len());
                let mut acc = -1.0;
                for g in gaps {
                    acc += g;
                    x.push(acc);
                }
                (x, w)
            })
    })
}

/// Small integers make collinear triples common and every orientation test
/// exact, so the two hulls must agree index for index.
fn lattice_line() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..=200).prop_flat_map(|n| {
        (prop::collection::vec(1u32..4, n), prop::collection::vec(-6i32..=6, n)).prop_map(|(gaps, w)| {
            let mut x = Vec::with_capacity(gaps.len());
            let mut acc = 0.0;
            for g in gaps {
                acc += g as f64;
                x.push(acc);
            }
            (x, w.into_iter().map(f64::from).collect())
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn sweep_matches_gift_wrapping((x, w) in float_line()) {
        let hull = convexify(&SampledLine::new(x.clone(), w.clone()).unwrap());
        let oracle = gift_wrap(&x, &w);
        let scale = 1.0 + w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for &xi in &x {
            let got = hull.envelope_at(xi).unwrap().value;
            let want = interpolate(&x, &w, &oracle, xi);
            prop_assert!((got - want).abs() <= 1e-12 * scale, "x={xi}: {got} vs {want}");
        }
        prop_assert_eq!(hull.index.first(), Some(&0));
        prop_assert_eq!(hull.index.last(), Some(&(x.len() - 1)));
    }

    #[test]
    fn sweep_matches_gift_wrapping_on_lattice((x, w) in lattice_line()) {
        let hull = convexify(&SampledLine::new(x.clone(), w.clone()).unwrap());
        prop_assert_eq!(&hull.index, &gift_wrap(&x, &w));
    }

    #[test]
    fn envelope_is_below_samples_and_convex((x, w) in float_line()) {
        let hull = convexify(&SampledLine::new(x.clone(), w.clone()).unwrap());
        for (xi, wi) in x.iter().zip(&w) {
            prop_assert!(hull.envelope_at(*xi).unwrap().value <= *wi + 1e-12 * (1.0 + wi.abs()));
        }
        let slopes: Vec<f64> = hull
            .y
            .windows(2)
            .zip(hull.c.windows(2))
            .map(|(y, c)| (c[1] - c[0]) / (y[1] - y[0]))
            .collect();
        for s in slopes.windows(2) {
            prop_assert!(s[1] > s[0] - 1e-9 * (1.0 + s[0].abs()));
        }
        for (&i, (&y, &c)) in hull.index.iter().zip(hull.y.iter().zip(&hull.c)) {
            prop_assert_eq!((x[i], w[i]), (y, c));
        }
    }
}
