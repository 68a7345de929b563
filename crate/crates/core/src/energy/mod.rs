//! Energy densities `W(F)` and their first two derivatives.

mod benchmarks;
mod damage;
mod neo_hooke;

pub use benchmarks::{Affine, Fail, Ksd, Multiwell, Quadratic};
pub use damage::{DamageParams, DamageState, IncrementalDamage};
pub use neo_hooke::{NeoHooke1, NeoHooke2};

use crate::tensor::{Matrix, Tensor4};

/// A scalar energy density over `D × D` deformation gradients.
///
/// `value` returns `+∞` outside the admissible set. Derivatives default to
/// central finite differences; models with closed forms override them.
pub trait EnergyDensity<const D: usize> {
    fn value(&self, f: &Matrix<D>) -> f64;

    fn admissible(&self, _f: &Matrix<D>) -> bool {
        true
    }

    /// First Piola–Kirchhoff stress `∂W/∂F`.
    fn gradient(&self, f: &Matrix<D>) -> Matrix<D> {
        fd_gradient(|g| self.value(g), f)
    }

    /// Tangent moduli `∂²W/∂F∂F`.
    fn hessian(&self, f: &Matrix<D>) -> Tensor4<D> {
        fd_hessian(|g| self.gradient(g), f)
    }

    /// Closed-form rank-one convex envelope, where one is known.
    fn reference_envelope(&self, _f: &Matrix<D>) -> Option<f64> {
        None
    }
}

impl<const D: usize, E: EnergyDensity<D> + ?Sized> EnergyDensity<D> for &E {
    fn value(&self, f: &Matrix<D>) -> f64 {
        (**self).value(f)
    }
    fn admissible(&self, f: &Matrix<D>) -> bool {
        (**self).admissible(f)
    }
    fn gradient(&self, f: &Matrix<D>) -> Matrix<D> {
        (**self).gradient(f)
    }
    fn hessian(&self, f: &Matrix<D>) -> Tensor4<D> {
        (**self).hessian(f)
    }
    fn reference_envelope(&self, f: &Matrix<D>) -> Option<f64> {
        (**self).reference_envelope(f)
    }
}

/// Step used by the default finite-difference gradient.
pub fn fd_step<const D: usize>(f: &Matrix<D>) -> f64 {
    1e-6 * (1.0 + f.frobenius_norm())
}

/// Central-difference gradient of a scalar function.
pub fn fd_gradient<const D: usize>(value: impl Fn(&Matrix<D>) -> f64, f: &Matrix<D>) -> Matrix<D> {
    let h = fd_step(f);
    let mut g = Matrix::zeros();
    for i in 0..D {
        for j in 0..D {
            let mut fp = *f;
            let mut fm = *f;
            fp.0[i][j] += h;
            fm.0[i][j] -= h;
            g.0[i][j] = (value(&fp) - value(&fm)) / (2.0 * h);
        }
    }
    g
}

/// Central-difference Jacobian of a matrix-valued gradient.
pub fn fd_hessian<const D: usize>(gradient: impl Fn(&Matrix<D>) -> Matrix<D>, f: &Matrix<D>) -> Tensor4<D> {
    let h = 1e-5 * (1.0 + f.frobenius_norm());
    let mut t = Tensor4::zeros();
    for k in 0..D {
        for l in 0..D {
            let mut fp = *f;
            let mut fm = *f;
            fp.0[k][l] += h;
            fm.0[k][l] -= h;
            let col = (gradient(&fp) - gradient(&fm)) * (0.5 / h);
            t.set_column(k, l, &col);
        }
    }
    t
}
