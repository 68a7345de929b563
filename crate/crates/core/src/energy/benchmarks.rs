use super::EnergyDensity;
use crate::math;
use crate::tensor::{Matrix, Matrix2, Tensor4};

/// Kohn–Strang energy with the Dolzmann modification at the origin:
/// `1 + |F|²` for `|F| ≥ √2 − 1`, `2√2 |F|` below.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Ksd;

impl Ksd {
    pub const KINK: f64 = core::f64::consts::SQRT_2 - 1.0;

    /// `ρ(F) = sqrt(|F|² + 2|det F|)`.
    pub fn rho(f: &Matrix2) -> f64 {
        math::sqrt(f.frobenius_norm_squared() + 2.0 * f.det().abs())
    }

    /// Closed-form rank-one convex envelope.
    pub fn envelope(f: &Matrix2) -> f64 {
        let rho = Self::rho(f);
        if rho >= 1.0 {
            1.0 + f.frobenius_norm_squared()
        } else {
            2.0 * (rho - f.det().abs())
        }
    }
}

impl EnergyDensity<2> for Ksd {
    fn value(&self, f: &Matrix2) -> f64 {
        let norm = f.frobenius_norm();
        if norm >= Self::KINK {
            1.0 + norm * norm
        } else {
            2.0 * core::f64::consts::SQRT_2 * norm
        }
    }

    fn gradient(&self, f: &Matrix2) -> Matrix2 {
        let norm = f.frobenius_norm();
        if norm >= Self::KINK {
            *f * 2.0
        } else if norm == 0.0 {
            Matrix2::zeros()
        } else {
            *f * (2.0 * core::f64::consts::SQRT_2 / norm)
        }
    }

    fn hessian(&self, f: &Matrix2) -> Tensor4<2> {
        let norm = f.frobenius_norm();
        let mut t = Tensor4::zeros();
        if norm >= Self::KINK {
            t.add_scaled(2.0, &Tensor4::identity());
        } else if norm > 0.0 {
            let c = 2.0 * core::f64::consts::SQRT_2;
            t.add_scaled(c / norm, &Tensor4::identity());
            t.add_scaled(-c / (norm * norm * norm), &Tensor4::dyadic(f, f));
        }
        t
    }

    fn reference_envelope(&self, f: &Matrix2) -> Option<f64> {
        Some(Self::envelope(f))
    }
}

/// Multiwell energy `(|F|² − 1)²`; its envelope vanishes inside the unit ball.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Multiwell;

impl Multiwell {
    pub fn envelope<const D: usize>(f: &Matrix<D>) -> f64 {
        let n2 = f.frobenius_norm_squared();
        if n2 >= 1.0 {
            (n2 - 1.0) * (n2 - 1.0)
        } else {
            0.0
        }
    }
}

impl<const D: usize> EnergyDensity<D> for Multiwell {
    fn value(&self, f: &Matrix<D>) -> f64 {
        let s = f.frobenius_norm_squared() - 1.0;
        s * s
    }

    fn gradient(&self, f: &Matrix<D>) -> Matrix<D> {
        *f * (4.0 * (f.frobenius_norm_squared() - 1.0))
    }

    fn hessian(&self, f: &Matrix<D>) -> Tensor4<D> {
        let mut t = Tensor4::zeros();
        t.add_scaled(4.0 * (f.frobenius_norm_squared() - 1.0), &Tensor4::identity());
        t.add_scaled(8.0, &Tensor4::dyadic(f, f));
        t
    }

    fn reference_envelope(&self, f: &Matrix<D>) -> Option<f64> {
        Some(Self::envelope(f))
    }
}

/// Isotropic energy with nested wells in the signed singular values, built so
/// that level-wise optimal laminates miss the zero-valued outer wells.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Fail;

impl Fail {
    fn well(nu: f64) -> f64 {
        let s = (nu - 3.0) * (nu + 3.0);
        s * s
    }

    /// The true envelope is zero on the whole box of radius 3.
    pub fn envelope(f: &Matrix2) -> Option<f64> {
        (f.max_abs() <= 3.0).then_some(0.0)
    }
}

impl EnergyDensity<2> for Fail {
    fn value(&self, f: &Matrix2) -> f64 {
        let (nu1, nu2) = f.signed_singular_values();
        let radial = math::sqrt(nu1 * nu1 + nu2 * nu2) - 1.0;
        (Self::well(nu1) + Self::well(nu2)) * (radial * radial + 1.0)
    }

    fn hessian(&self, f: &Matrix2) -> Tensor4<2> {
        // second differences of values; the gradient is itself a difference
        // quotient, so differencing it again would amplify rounding
        let h = 1e-4 * (1.0 + f.frobenius_norm());
        let mut t = Tensor4::zeros();
        let shifted = |di: (usize, usize), si: f64, dj: (usize, usize), sj: f64| {
            let mut g = *f;
            g.0[di.0][di.1] += si;
            g.0[dj.0][dj.1] += sj;
            self.value(&g)
        };
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let (a, b) = ((i, j), (k, l));
                        let v = (shifted(a, h, b, h) - shifted(a, h, b, -h) - shifted(a, -h, b, h)
                            + shifted(a, -h, b, -h))
                            / (4.0 * h * h);
                        t.0[i][j][k][l] = v;
                    }
                }
            }
        }
        t
    }

    fn reference_envelope(&self, f: &Matrix2) -> Option<f64> {
        Self::envelope(f)
    }
}

/// Affine energy `B : F + c`; its own envelope.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Affine<const D: usize> {
    pub slope: Matrix<D>,
    pub offset: f64,
}

impl<const D: usize> EnergyDensity<D> for Affine<D> {
    fn value(&self, f: &Matrix<D>) -> f64 {
        self.slope.contract(f) + self.offset
    }

    fn gradient(&self, _f: &Matrix<D>) -> Matrix<D> {
        self.slope
    }

    fn hessian(&self, _f: &Matrix<D>) -> Tensor4<D> {
        Tensor4::zeros()
    }

    fn reference_envelope(&self, f: &Matrix<D>) -> Option<f64> {
        Some(self.value(f))
    }
}

/// Convex quadratic `c |F|²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadratic {
    pub scale: f64,
}

impl<const D: usize> EnergyDensity<D> for Quadratic {
    fn value(&self, f: &Matrix<D>) -> f64 {
        self.scale * f.frobenius_norm_squared()
    }

    fn gradient(&self, f: &Matrix<D>) -> Matrix<D> {
        *f * (2.0 * self.scale)
    }

    fn hessian(&self, _f: &Matrix<D>) -> Tensor4<D> {
        let mut t = Tensor4::zeros();
        t.add_scaled(2.0 * self.scale, &Tensor4::identity());
        t
    }

    fn reference_envelope(&self, f: &Matrix<D>) -> Option<f64> {
        Some(self.value(f))
    }
}
