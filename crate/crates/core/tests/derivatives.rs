//! Analytic derivatives against central differences, and the condensed
//! damage variable against a numerical minimization.

use hroc_core::energy::{DamageParams, DamageState, IncrementalDamage, Ksd, Multiwell, NeoHooke1, NeoHooke2};
use hroc_core::{EnergyDensity, Matrix, Matrix2, Matrix3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const POINTS: usize = 100;

/// Fourth-order central difference of every component.
fn fd_gradient<const D: usize>(w: &impl EnergyDensity<D>, f: &Matrix<D>) -> Matrix<D> {
    let h = 1e-3;
    let mut g = Matrix::zeros();
    for i in 0..D {
        for j in 0..D {
            let at = |s: f64| {
                let mut x = *f;
                x.0[i][j] += s;
                w.value(&x)
            };
            g.0[i][j] = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
        }
    }
    g
}

fn relative_error<const D: usize>(a: &Matrix<D>, b: &Matrix<D>) -> f64 {
    (*a - *b).frobenius_norm() / b.frobenius_norm().max(1.0)
}

/// Near-identity gradients with `det F > 0.3`.
fn admissible<const D: usize>(rng: &mut StdRng) -> Matrix<D> {
    loop {
        let mut f = Matrix::<D>::identity();
        for v in f.0.iter_mut().flatten() {
            *v += rng.gen_range(-0.5..0.5);
        }
        if f.det() > 0.3 {
            return f;
        }
    }
}

fn check_gradient<const D: usize>(w: &impl EnergyDensity<D>, sample: impl Fn(&mut StdRng) -> Matrix<D>, seed: u64) {
    let mut rng = StdRng::seed_from_u64(seed);
    for _ in 0..POINTS {
        let f = sample(&mut rng);
        assert!(w.admissible(&f));
        let err = relative_error(&w.gradient(&f), &fd_gradient(w, &f));
        assert!(err <= 1e-5, "F = {f:?}: relative error {err:e}");
    }
}

#[test]
fn neo_hooke_1_gradient() {
    let w = NeoHooke1 { mu: 1.0, lambda: 0.5 };
    check_gradient::<2>(&w, admissible, 1);
    check_gradient::<3>(&w, admissible, 2);
}

#[test]
fn neo_hooke_2_gradient() {
    let w = NeoHooke2 { mu: 1.0, lambda: 0.5 };
    check_gradient::<2>(&w, admissible, 3);
    check_gradient::<3>(&w, admissible, 4);
}

#[test]
fn multiwell_gradient() {
    let sample = |rng: &mut StdRng| {
        let mut f = Matrix3::zeros();
        for v in f.0.iter_mut().flatten() {
            *v = rng.gen_range(-1.5..1.5);
        }
        f
    };
    check_gradient::<3>(&Multiwell, sample, 5);
    check_gradient::<2>(
        &Multiwell,
        |rng| Matrix::from_row_slice(&[0.0; 4].map(|_: f64| rng.gen_range(-1.5..1.5))).unwrap(),
        6,
    );
}

#[test]
fn ksd_gradient_away_from_the_kink() {
    let sample = |rng: &mut StdRng| loop {
        let f = Matrix::from_row_slice(&[0.0; 4].map(|_: f64| rng.gen_range(-1.0..1.0))).unwrap();
        if (f.frobenius_norm() - Ksd::KINK).abs() > 1e-2 {
            return f;
        }
    };
    check_gradient::<2>(&Ksd, sample, 7);
}

#[test]
fn neo_hooke_1_tangent() {
    let w = NeoHooke1 { mu: 1.0, lambda: 0.5 };
    let mut rng = StdRng::seed_from_u64(8);
    for _ in 0..POINTS {
        let f: Matrix3 = admissible(&mut rng);
        let a = EnergyDensity::<3>::hessian(&w, &f);
        let h = 1e-5;
        for k in 0..3 {
            for l in 0..3 {
                let (mut fp, mut fm) = (f, f);
                fp.0[k][l] += h;
                fm.0[k][l] -= h;
                let col = (w.gradient(&fp) - w.gradient(&fm)) * (0.5 / h);
                for i in 0..3 {
                    for j in 0..3 {
                        let d = (a.0[i][j][k][l] - col.0[i][j]).abs();
                        assert!(d <= 1e-5 * (1.0 + col.0[i][j].abs()), "{d:e}");
                    }
                }
            }
        }
    }
}

#[test]
fn damage_gradient_is_the_degraded_stress() {
    let params = DamageParams::default();
    let state = DamageState {
        alpha: 0.0625,
        f_prev: Matrix2::identity(),
    };
    let w = IncrementalDamage::new(params.nh1(), params, state).unwrap();
    check_gradient::<2>(&w, admissible, 9);
}

/// Minimizer of `g` over `[lo, hi]`: bisection on the sign of a
/// fourth-order difference quotient.
fn minimize(g: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let h = 1e-3;
    let slope = |a: f64| (8.0 * (g(a + h) - g(a - h)) - (g(a + 2.0 * h) - g(a - 2.0 * h))) / (12.0 * h);
    if slope(lo) >= 0.0 {
        return lo;
    }
    let (mut a, mut b) = (lo, hi);
    assert!(slope(b) > 0.0, "bracket too small");
    while b - a > 1e-13 {
        let m = 0.5 * (a + b);
        if slope(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[test]
fn condensed_variable_matches_numerical_minimum() {
    let params = DamageParams::default();
    let mut rng = StdRng::seed_from_u64(10);
    let mut clipped = 0;
    for _ in 0..POINTS {
        let alpha_k = rng.gen_range(0.0..0.4);
        let state = DamageState {
            alpha: alpha_k,
            f_prev: Matrix2::identity(),
        };
        let w = IncrementalDamage::new(params.nh1(), params, state).unwrap();
        let f: Matrix2 = admissible(&mut rng);
        let (alpha, value) = w.condensed_update(&f).unwrap();
        let numeric = minimize(|a| w.potential_at(&f, a), alpha_k, alpha_k + 5.0);
        assert!((alpha - numeric).abs() <= 1e-8, "{alpha} vs {numeric}");
        assert!((value - w.potential_at(&f, numeric)).abs() <= 1e-8);
        assert!((value - w.value(&f)).abs() <= 1e-14 * (1.0 + value.abs()));
        if alpha == alpha_k {
            clipped += 1;
        }
    }
    // both branches of the max are exercised
    assert!(clipped > 0 && clipped < POINTS);
}
