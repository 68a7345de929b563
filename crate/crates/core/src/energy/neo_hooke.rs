//! Compressible Neo-Hookean effective strain energies.
//!
//! In two dimensions both models act on the plane-strain embedding
//! `diag(F, 1)`: `I₁ = tr(FᵀF) + 1` and `J = det F`, so `F = I` is stress free.

use super::EnergyDensity;
use crate::math;
use crate::tensor::{Matrix, Tensor4};

fn first_invariant<const D: usize>(f: &Matrix<D>) -> f64 {
    f.frobenius_norm_squared() + (3 - D) as f64
}

/// `μ/2 (I₁ − 3) − μ ln J + λ/2 (ln J)²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeoHooke1 {
    pub mu: f64,
    pub lambda: f64,
}

impl<const D: usize> EnergyDensity<D> for NeoHooke1 {
    fn value(&self, f: &Matrix<D>) -> f64 {
        let j = f.det();
        if !(j > 0.0) {
            return f64::INFINITY;
        }
        let lnj = math::ln(j);
        0.5 * self.mu * (first_invariant(f) - 3.0) - self.mu * lnj + 0.5 * self.lambda * lnj * lnj
    }

    fn admissible(&self, f: &Matrix<D>) -> bool {
        f.det() > 0.0
    }

    fn gradient(&self, f: &Matrix<D>) -> Matrix<D> {
        let Some(fit) = f.inverse_transpose() else {
            return Matrix::zeros();
        };
        let lnj = math::ln(f.det());
        *f * self.mu + fit * (self.lambda * lnj - self.mu)
    }

    fn hessian(&self, f: &Matrix<D>) -> Tensor4<D> {
        let Some(fit) = f.inverse_transpose() else {
            return Tensor4::zeros();
        };
        let c = self.lambda * math::ln(f.det()) - self.mu;
        let mut t = Tensor4::zeros();
        t.add_scaled(self.mu, &Tensor4::identity());
        t.add_scaled(self.lambda, &Tensor4::dyadic(&fit, &fit));
        // ∂(F⁻ᵀ)ᵢⱼ/∂Fₖₗ = −(F⁻ᵀ)ᵢₗ (F⁻ᵀ)ₖⱼ
        for i in 0..D {
            for j in 0..D {
                for k in 0..D {
                    for l in 0..D {
                        t.0[i][j][k][l] -= c * fit.0[i][l] * fit.0[k][j];
                    }
                }
            }
        }
        t
    }
}

/// `C₁ (J^{−2/3} I₁ − 3) + (C₁/6 + D₁/4)(J² + J⁻² − 2)` with `C₁ = μ/2`, `D₁ = λ/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeoHooke2 {
    pub mu: f64,
    pub lambda: f64,
}

impl NeoHooke2 {
    fn c1(&self) -> f64 {
        0.5 * self.mu
    }

    fn volumetric(&self) -> f64 {
        self.c1() / 6.0 + 0.25 * self.lambda
    }
}

impl<const D: usize> EnergyDensity<D> for NeoHooke2 {
    fn value(&self, f: &Matrix<D>) -> f64 {
        let j = f.det();
        if !(j > 0.0) {
            return f64::INFINITY;
        }
        let iso = math::powf(j, -2.0 / 3.0) * first_invariant(f);
        self.c1() * (iso - 3.0) + self.volumetric() * (j * j + 1.0 / (j * j) - 2.0)
    }

    fn admissible(&self, f: &Matrix<D>) -> bool {
        f.det() > 0.0
    }

    fn gradient(&self, f: &Matrix<D>) -> Matrix<D> {
        let Some(fit) = f.inverse_transpose() else {
            return Matrix::zeros();
        };
        let j = f.det();
        let j23 = math::powf(j, -2.0 / 3.0);
        let i1 = first_invariant(f);
        (*f * 2.0 - fit * (2.0 / 3.0 * i1)) * (self.c1() * j23)
            + fit * (2.0 * self.volumetric() * (j * j - 1.0 / (j * j)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{Matrix2, Matrix3};

    #[test]
    fn reference_state_is_stress_free() {
        let nh1 = NeoHooke1 { mu: 1.0, lambda: 0.5 };
        let nh2 = NeoHooke2 { mu: 1.0, lambda: 0.5 };
        assert_eq!(EnergyDensity::<2>::value(&nh1, &Matrix2::identity()), 0.0);
        assert_eq!(EnergyDensity::<3>::value(&nh1, &Matrix3::identity()), 0.0);
        assert!(EnergyDensity::<3>::value(&nh2, &Matrix3::identity()).abs() < 1e-15);
        assert!(EnergyDensity::<2>::gradient(&nh1, &Matrix2::identity()).max_abs() < 1e-15);
        assert!(EnergyDensity::<3>::gradient(&nh2, &Matrix3::identity()).max_abs() < 1e-15);
    }

    #[test]
    fn stretched_values_by_hand() {
        // F = diag(2,1,1), μ = 0.4, λ = 0.1: I₁ = 6, J = 2
        let f = Matrix3::from_diagonal([2.0, 1.0, 1.0]);
        let ln2 = core::f64::consts::LN_2;
        let nh1 = NeoHooke1 { mu: 0.4, lambda: 0.1 };
        let expected1 = 0.2 * 3.0 - 0.4 * ln2 + 0.05 * ln2 * ln2;
        assert!((nh1.value(&f) - expected1).abs() < 1e-15);
        // C₁ = 0.2, volumetric factor 0.2/6 + 0.025
        let nh2 = NeoHooke2 { mu: 0.4, lambda: 0.1 };
        let expected2 = 0.2 * (6.0 * 2f64.powf(-2.0 / 3.0) - 3.0) + (0.2 / 6.0 + 0.025) * (4.0 + 0.25 - 2.0);
        assert!((nh2.value(&f) - expected2).abs() < 1e-14);
    }

    #[test]
    fn inadmissible_gradients() {
        let nh1 = NeoHooke1 { mu: 1.0, lambda: 0.5 };
        let flipped = Matrix2::from_diagonal([1.0, -1.0]);
        assert!(!nh1.admissible(&flipped));
        assert_eq!(nh1.value(&flipped), f64::INFINITY);
    }
}
