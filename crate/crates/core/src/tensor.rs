//! Small dense tensors for deformation gradients in two and three dimensions.
//!
//! Storage is a fixed `[[f64; D]; D]` on the stack. Only `D = 2` and `D = 3`
//! are exercised; nothing here is tuned for larger sizes.

use core::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::math;

/// Default relative tolerance for [`Matrix::is_rank_one`].
pub const RANK_TOL: f64 = 1e-10;

/// A square `D × D` real matrix, typically a deformation gradient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix<const D: usize>(pub [[f64; D]; D]);

pub type Matrix2 = Matrix<2>;
pub type Matrix3 = Matrix<3>;

/// A `D`-vector.
pub type Vector<const D: usize> = [f64; D];

impl<const D: usize> Default for Matrix<D> {
    fn default() -> Self {
        Self::zeros()
    }
}

#[allow(clippy::needless_range_loop)]
impl<const D: usize> Matrix<D> {
    pub const fn zeros() -> Self {
        Matrix([[0.0; D]; D])
    }

    pub fn identity() -> Self {
        Self::from_diagonal([1.0; D])
    }

    pub fn from_diagonal(diag: [f64; D]) -> Self {
        let mut m = Self::zeros();
        for i in 0..D {
            m.0[i][i] = diag[i];
        }
        m
    }

    /// `a ⊗ b` with entries `a[i] * b[j]`.
    pub fn outer(a: &Vector<D>, b: &Vector<D>) -> Self {
        let mut m = Self::zeros();
        for i in 0..D {
            for j in 0..D {
                m.0[i][j] = a[i] * b[j];
            }
        }
        m
    }

    /// Builds a matrix from row-major entries; `None` if the length is not `D²`.
    pub fn from_row_slice(entries: &[f64]) -> Option<Self> {
        if entries.len() != D * D {
            return None;
        }
        let mut m = Self::zeros();
        for i in 0..D {
            for j in 0..D {
                m.0[i][j] = entries[i * D + j];
            }
        }
        Some(m)
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.0.iter().flat_map(|row| row.iter())
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..D {
            for j in 0..D {
                m.0[j][i] = self.0[i][j];
            }
        }
        m
    }

    pub fn trace(&self) -> f64 {
        (0..D).map(|i| self.0[i][i]).sum()
    }

    /// `A : B = Σ Aᵢⱼ Bᵢⱼ`.
    pub fn contract(&self, other: &Self) -> f64 {
        // row-major order, same as iter(); plain loops unroll where
        // flat_map does not
        let mut sum = 0.0;
        for i in 0..D {
            for j in 0..D {
                sum += self.0[i][j] * other.0[i][j];
            }
        }
        sum
    }

    pub fn frobenius_norm_squared(&self) -> f64 {
        self.contract(self)
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.frobenius_norm_squared())
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let mut m = Self::zeros();
        for i in 0..D {
            for j in 0..D {
                let mut s = 0.0;
                for k in 0..D {
                    s += self.0[i][k] * other.0[k][j];
                }
                m.0[i][j] = s;
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &Vector<D>) -> Vector<D> {
        let mut out = [0.0; D];
        for i in 0..D {
            out[i] = (0..D).map(|j| self.0[i][j] * v[j]).sum();
        }
        out
    }

    /// Determinant by cofactor expansion.
    pub fn det(&self) -> f64 {
        let a = &self.0;
        match D {
            1 => a[0][0],
            2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
            3 => {
                a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                    + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
            }
            _ => unimplemented!("determinant only for d ≤ 3"),
        }
    }

    /// Cofactor matrix, `cof(F) = det(F) F⁻ᵀ`.
    pub fn cofactor(&self) -> Self {
        let a = &self.0;
        let mut c = Self::zeros();
        match D {
            2 => {
                c.0[0][0] = a[1][1];
                c.0[0][1] = -a[1][0];
                c.0[1][0] = -a[0][1];
                c.0[1][1] = a[0][0];
            }
            3 => {
                for i in 0..3 {
                    for j in 0..3 {
                        let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
                        let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
                        c.0[i][j] = a[i1][j1] * a[i2][j2] - a[i1][j2] * a[i2][j1];
                    }
                }
            }
            _ => unimplemented!("cofactor only for d ∈ {{2, 3}}"),
        }
        c
    }

    /// `F⁻ᵀ`, or `None` for a singular matrix.
    pub fn inverse_transpose(&self) -> Option<Self> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(self.cofactor() * (1.0 / det))
    }

    /// Singular values in descending order (one-sided Jacobi).
    ///
    /// Column orthogonalization keeps small singular values accurate to
    /// roughly machine precision relative to the largest one, which the
    /// rank test depends on.
    pub fn singular_values(&self) -> [f64; D] {
        let mut u = self.0;
        for _sweep in 0..64 {
            let mut rotated = false;
            for p in 0..D {
                for q in (p + 1)..D {
                    let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                    for row in u.iter() {
                        alpha += row[p] * row[p];
                        beta += row[q] * row[q];
                        gamma += row[p] * row[q];
                    }
                    if gamma == 0.0 || gamma.abs() <= 1e-300 + f64::EPSILON * math::sqrt(alpha * beta) {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + math::sqrt(1.0 + zeta * zeta));
                    let c = 1.0 / math::sqrt(1.0 + t * t);
                    let s = c * t;
                    for row in u.iter_mut() {
                        let (x, y) = (row[p], row[q]);
                        row[p] = c * x - s * y;
                        row[q] = s * x + c * y;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let mut sv = [0.0; D];
        for (j, s) in sv.iter_mut().enumerate() {
            *s = math::sqrt(u.iter().map(|row| row[j] * row[j]).sum::<f64>());
        }
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
        sv
    }

    /// True iff the second singular value is at most `tol` times the largest
    /// and the largest exceeds `tol`.
    pub fn is_rank_one(&self, tol: f64) -> bool {
        if D < 2 {
            return self.max_abs() > tol;
        }
        let sv = self.singular_values();
        sv[0] > tol && sv[1] <= tol * sv[0]
    }
}

impl Matrix<2> {
    /// Signed singular values `(ν₁, ν₂)` with `ν₁ ≥ |ν₂|` and `ν₁ ν₂ = det F`.
    pub fn signed_singular_values(&self) -> (f64, f64) {
        let [[a, b], [c, d]] = self.0;
        let e = 0.5 * (a + d);
        let f = 0.5 * (a - d);
        let g = 0.5 * (c + b);
        let h = 0.5 * (c - b);
        let q = math::hypot(e, h);
        let r = math::hypot(f, g);
        (q + r, q - r)
    }

    /// Counter-clockwise rotation by `theta`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = (math::sin(theta), math::cos(theta));
        Matrix([[c, -s], [s, c]])
    }
}

impl<const D: usize> Index<(usize, usize)> for Matrix<D> {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl<const D: usize> IndexMut<(usize, usize)> for Matrix<D> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

impl<const D: usize> Add for Matrix<D> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl<const D: usize> AddAssign for Matrix<D> {
    fn add_assign(&mut self, rhs: Self) {
        for i in 0..D {
            for j in 0..D {
                self.0[i][j] += rhs.0[i][j];
            }
        }
    }
}

impl<const D: usize> Sub for Matrix<D> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        self -= rhs;
        self
    }
}

impl<const D: usize> SubAssign for Matrix<D> {
    fn sub_assign(&mut self, rhs: Self) {
        for i in 0..D {
            for j in 0..D {
                self.0[i][j] -= rhs.0[i][j];
            }
        }
    }
}

impl<const D: usize> Mul<f64> for Matrix<D> {
    type Output = Self;
    fn mul(mut self, s: f64) -> Self {
        for row in self.0.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        self
    }
}

impl<const D: usize> Mul<Matrix<D>> for f64 {
    type Output = Matrix<D>;
    fn mul(self, m: Matrix<D>) -> Matrix<D> {
        m * self
    }
}

impl<const D: usize> Neg for Matrix<D> {
    type Output = Self;
    fn neg(self) -> Self {
        self * -1.0
    }
}

/// A fourth-order tensor `Aᵢⱼₖₗ`, used for tangent moduli `∂²W/∂F∂F`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tensor4<const D: usize>(pub [[[[f64; D]; D]; D]; D]);

impl<const D: usize> Default for Tensor4<D> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const D: usize> Tensor4<D> {
    pub const fn zeros() -> Self {
        Tensor4([[[[0.0; D]; D]; D]; D])
    }

    /// `δᵢₖ δⱼₗ`, the identity on second-order tensors.
    pub fn identity() -> Self {
        let mut t = Self::zeros();
        for i in 0..D {
            for j in 0..D {
                t.0[i][j][i][j] = 1.0;
            }
        }
        t
    }

    /// `Aᵢⱼ Bₖₗ`.
    pub fn dyadic(a: &Matrix<D>, b: &Matrix<D>) -> Self {
        let mut t = Self::zeros();
        for i in 0..D {
            for j in 0..D {
                for k in 0..D {
                    for l in 0..D {
                        t.0[i][j][k][l] = a.0[i][j] * b.0[k][l];
                    }
                }
            }
        }
        t
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.0
            .iter()
            .flat_map(|a| a.iter().flat_map(|b| b.iter().flat_map(|c| c.iter())))
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// `self += s · other`.
    pub fn add_scaled(&mut self, s: f64, other: &Self) {
        for i in 0..D {
            for j in 0..D {
                for k in 0..D {
                    for l in 0..D {
                        self.0[i][j][k][l] += s * other.0[i][j][k][l];
                    }
                }
            }
        }
    }

    /// `(A : H)ᵢⱼ = Aᵢⱼₖₗ Hₖₗ`.
    pub fn contract_right(&self, h: &Matrix<D>) -> Matrix<D> {
        let mut m = Matrix::zeros();
        for i in 0..D {
            for j in 0..D {
                let mut s = 0.0;
                for k in 0..D {
                    for l in 0..D {
                        s += self.0[i][j][k][l] * h.0[k][l];
                    }
                }
                m.0[i][j] = s;
            }
        }
        m
    }

    /// Sets the slice `A[·][·][k][l]` to `column`.
    pub fn set_column(&mut self, k: usize, l: usize, column: &Matrix<D>) {
        for i in 0..D {
            for j in 0..D {
                self.0[i][j][k][l] = column.0[i][j];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Matrix2 {
        Matrix([[0.2, 0.1], [0.1, 0.3]])
    }

    #[test]
    fn frobenius_norm_cases() {
        assert_eq!(Matrix2::zeros().frobenius_norm(), 0.0);
        assert!((Matrix2::identity().frobenius_norm() - 2f64.sqrt()).abs() < 1e-15);
        // 0.04 + 0.01 + 0.01 + 0.09
        assert!((sample().frobenius_norm() - 0.15f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn determinant_cases() {
        assert_eq!(Matrix2::identity().det(), 1.0);
        assert!((sample().det() - 0.05).abs() < 1e-15);
        assert_eq!(Matrix3::from_diagonal([2.0, 3.0, 4.0]).det(), 24.0);
    }

    #[test]
    fn signed_singular_value_cases() {
        assert_eq!(Matrix2::identity().signed_singular_values(), (1.0, 1.0));
        assert_eq!(
            Matrix2::from_diagonal([2.0, -1.0]).signed_singular_values(),
            (2.0, -1.0)
        );
        assert_eq!(Matrix2::zeros().signed_singular_values(), (0.0, 0.0));
    }

    #[test]
    fn rank_one_cases() {
        let dyad = Matrix2::outer(&[1.0, 0.0], &[0.0, 1.0]);
        assert!(dyad.is_rank_one(RANK_TOL));
        assert!(!Matrix2::identity().is_rank_one(RANK_TOL));
        assert!(!Matrix2::zeros().is_rank_one(RANK_TOL));
        let dyad3 = Matrix3::outer(&[0.3, -1.2, 2.0], &[1.0, 0.7, -0.1]);
        assert!(dyad3.is_rank_one(RANK_TOL));
    }

    #[test]
    fn inverse_transpose_matches_identity() {
        let f = Matrix([[1.2, 0.1, 0.0], [0.3, 0.9, 0.2], [0.0, -0.1, 1.1]]);
        let fit = f.inverse_transpose().unwrap();
        let prod = f.transpose().matmul(&fit);
        assert!((prod - Matrix3::identity()).max_abs() < 1e-14);
        assert!(Matrix2::zeros().inverse_transpose().is_none());
    }

    #[test]
    fn rotation_is_orthogonal() {
        let q = Matrix2::rotation(0.7);
        assert!((q.transpose().matmul(&q) - Matrix2::identity()).max_abs() < 1e-15);
        assert!((q.det() - 1.0).abs() < 1e-15);
    }
}
