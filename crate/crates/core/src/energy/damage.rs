//! Finite-strain continuum damage with an incremental stress potential.
//!
//! The strain energy is `ψ(F, α) = (1 − D(α)) ψ⁰(F)` with the exponential
//! damage function `D(α) = D∞ (1 − exp(−α/D₀))`. For a fixed increment the
//! internal variable is condensed out, leaving a (generally nonconvex)
//! potential of `F` alone.

use super::{EnergyDensity, NeoHooke1, NeoHooke2};
use crate::error::Error;
use crate::math;
use crate::tensor::{Matrix, Tensor4};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DamageParams {
    /// Saturation value `D∞ ∈ (0, 1)`.
    pub d_inf: f64,
    /// Saturation scale `D₀ > 0`.
    pub d_0: f64,
    pub mu: f64,
    pub lambda: f64,
}

impl Default for DamageParams {
    fn default() -> Self {
        Self {
            d_inf: 0.9,
            d_0: 0.3,
            mu: 1.0,
            lambda: 0.5,
        }
    }
}

impl DamageParams {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.d_inf > 0.0 && self.d_inf < 1.0) {
            return Err(Error::InvalidInput("D_inf must lie in (0, 1)"));
        }
        if !(self.d_0 > 0.0) {
            return Err(Error::InvalidInput("D_0 must be positive"));
        }
        if !(self.mu > 0.0 && self.lambda > 0.0) {
            return Err(Error::InvalidInput("Lamé parameters must be positive"));
        }
        Ok(())
    }

    /// `D(α)`.
    pub fn damage(&self, alpha: f64) -> f64 {
        self.d_inf * (1.0 - math::exp(-alpha / self.d_0))
    }

    /// `D′(α)`.
    pub fn damage_rate(&self, alpha: f64) -> f64 {
        self.d_inf / self.d_0 * math::exp(-alpha / self.d_0)
    }

    /// `D̄(α) = ∫₀^α D(s) ds`.
    pub fn damage_integral(&self, alpha: f64) -> f64 {
        self.d_inf * (alpha + self.d_0 * math::exp(-alpha / self.d_0) - self.d_0)
    }

    pub fn nh1(&self) -> NeoHooke1 {
        NeoHooke1 {
            mu: self.mu,
            lambda: self.lambda,
        }
    }

    pub fn nh2(&self) -> NeoHooke2 {
        NeoHooke2 {
            mu: self.mu,
            lambda: self.lambda,
        }
    }
}

/// Converged state of the previous increment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DamageState<const D: usize> {
    pub alpha: f64,
    pub f_prev: Matrix<D>,
}

impl<const D: usize> Default for DamageState<D> {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            f_prev: Matrix::identity(),
        }
    }
}

/// Incremental stress potential of one time step, as a function of `F`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IncrementalDamage<const D: usize, P> {
    pub psi0: P,
    pub params: DamageParams,
    pub state: DamageState<D>,
    /// Energy of the previous state, constant during the increment.
    previous: f64,
}

impl<const D: usize, P: EnergyDensity<D>> IncrementalDamage<D, P> {
    pub fn new(psi0: P, params: DamageParams, state: DamageState<D>) -> Result<Self, Error> {
        params.validate()?;
        if !(state.alpha >= 0.0) {
            return Err(Error::InvalidInput("internal variable must be nonnegative"));
        }
        if !psi0.admissible(&state.f_prev) {
            return Err(Error::Inadmissible);
        }
        let ak = state.alpha;
        let previous =
            (1.0 - params.damage(ak)) * psi0.value(&state.f_prev) + ak * params.damage(ak) - params.damage_integral(ak);
        Ok(Self {
            psi0,
            params,
            state,
            previous,
        })
    }

    /// The potential at a prescribed internal variable, before condensation.
    pub fn potential_at(&self, f: &Matrix<D>, alpha: f64) -> f64 {
        let p = &self.params;
        (1.0 - p.damage(alpha)) * self.psi0.value(f) + alpha * p.damage(alpha)
            - p.damage_integral(alpha)
            - self.previous
    }

    /// Condensed internal variable `max(α_k, ψ⁰(F))` and the potential there.
    ///
    /// `∂W/∂α = D′(α)(α − ψ⁰(F))`, so the unconstrained stationary point is
    /// `α = ψ⁰(F)`; irreversibility clips it at `α_k`.
    pub fn condensed_update(&self, f: &Matrix<D>) -> Result<(f64, f64), Error> {
        if !self.psi0.admissible(f) {
            return Err(Error::Inadmissible);
        }
        let alpha = self.state.alpha.max(self.psi0.value(f));
        Ok((alpha, self.potential_at(f, alpha)))
    }
}

impl<const D: usize, P: EnergyDensity<D> + Copy> IncrementalDamage<D, P> {
    /// Accepts `f` as converged, moving the state to the next increment.
    pub fn advance(&mut self, f: &Matrix<D>) -> Result<(), Error> {
        let (alpha, _) = self.condensed_update(f)?;
        *self = Self::new(self.psi0, self.params, DamageState { alpha, f_prev: *f })?;
        Ok(())
    }
}

impl<const D: usize, P: EnergyDensity<D>> EnergyDensity<D> for IncrementalDamage<D, P> {
    fn value(&self, f: &Matrix<D>) -> f64 {
        match self.condensed_update(f) {
            Ok((_, w)) => w,
            Err(_) => f64::INFINITY,
        }
    }

    fn admissible(&self, f: &Matrix<D>) -> bool {
        self.psi0.admissible(f)
    }

    fn gradient(&self, f: &Matrix<D>) -> Matrix<D> {
        let alpha = self.state.alpha.max(self.psi0.value(f));
        self.psi0.gradient(f) * (1.0 - self.params.damage(alpha))
    }

    fn hessian(&self, f: &Matrix<D>) -> Tensor4<D> {
        let psi = self.psi0.value(f);
        let alpha = self.state.alpha.max(psi);
        let mut t = Tensor4::zeros();
        t.add_scaled(1.0 - self.params.damage(alpha), &self.psi0.hessian(f));
        if psi > self.state.alpha {
            let p0 = self.psi0.gradient(f);
            t.add_scaled(-self.params.damage_rate(psi), &Tensor4::dyadic(&p0, &p0));
        }
        t
    }
}
