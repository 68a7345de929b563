//! Model registry: configuration names to energy densities.

use hroc_core::energy::{DamageParams, DamageState, Fail, IncrementalDamage, Ksd, Multiwell, NeoHooke1, NeoHooke2};
use hroc_core::{EnergyDensity, Matrix, Matrix2};

use crate::config::{ModelConfig, ModelName};
use crate::error::{config, CliError};

/// A two-dimensional model. Damage models keep their concrete type so the
/// condensed internal variable can be reported.
pub enum Model2 {
    Ksd(Ksd),
    Multiwell(Multiwell),
    Fail(Fail),
    DamageNh1(IncrementalDamage<2, NeoHooke1>),
    DamageNh2(IncrementalDamage<2, NeoHooke2>),
}

impl Model2 {
    pub fn from_config(cfg: &ModelConfig) -> Result<Self, CliError> {
        let name = cfg
            .name
            .ok_or_else(|| config("no model given (set model.name or pass --model)"))?;
        if cfg.dim != 2 {
            return Err(config(format!(
                "{} is not available for dim {}",
                name.as_str(),
                cfg.dim
            )));
        }
        let d = &cfg.damage;
        let params = DamageParams {
            d_inf: d.d_inf,
            d_0: d.d_0,
            mu: d.mu,
            lambda: d.lambda,
        };
        let state = DamageState {
            alpha: d.alpha_k,
            f_prev: Matrix2::identity(),
        };
        let bad = |e| config(format!("model.damage: {e}"));
        Ok(match name {
            ModelName::Ksd => Model2::Ksd(Ksd),
            ModelName::Multiwell => Model2::Multiwell(Multiwell),
            ModelName::Fail => Model2::Fail(Fail),
            ModelName::DamageNh1 => {
                Model2::DamageNh1(IncrementalDamage::new(params.nh1(), params, state).map_err(bad)?)
            }
            ModelName::DamageNh2 => {
                Model2::DamageNh2(IncrementalDamage::new(params.nh2(), params, state).map_err(bad)?)
            }
        })
    }

    pub fn energy(&self) -> &(dyn EnergyDensity<2> + Sync) {
        match self {
            Model2::Ksd(w) => w,
            Model2::Multiwell(w) => w,
            Model2::Fail(w) => w,
            Model2::DamageNh1(w) => w,
            Model2::DamageNh2(w) => w,
        }
    }

    /// Condensed internal variable at `f`, for damage models.
    pub fn condensed_alpha(&self, f: &Matrix2) -> Option<f64> {
        match self {
            Model2::DamageNh1(w) => w.condensed_update(f).ok().map(|(a, _)| a),
            Model2::DamageNh2(w) => w.condensed_update(f).ok().map(|(a, _)| a),
            _ => None,
        }
    }
}

/// The three-dimensional registry holds only the multiwell benchmark.
pub fn model3(cfg: &ModelConfig) -> Result<Multiwell, CliError> {
    match cfg.name {
        Some(ModelName::Multiwell) if cfg.dim == 3 => Ok(Multiwell),
        Some(name) => Err(config(format!(
            "{} is not available for dim {}",
            name.as_str(),
            cfg.dim
        ))),
        None => Err(config("no model given (set model.name or pass --model)")),
    }
}

/// Checks that `f` is in the model's domain before any work is done.
pub fn check_admissible<const D: usize, W: EnergyDensity<D> + ?Sized>(w: &W, f: &Matrix<D>) -> Result<(), CliError> {
    if w.admissible(f) {
        Ok(())
    } else {
        Err(CliError::Numerical(hroc_core::Error::Inadmissible))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names() {
        let mut cfg = ModelConfig::default();
        for name in [
            ModelName::Ksd,
            ModelName::Multiwell,
            ModelName::Fail,
            ModelName::DamageNh1,
            ModelName::DamageNh2,
        ] {
            cfg.name = Some(name);
            let m = Model2::from_config(&cfg).unwrap();
            assert!(m.energy().value(&Matrix2::identity()).is_finite());
        }
        cfg.dim = 3;
        cfg.name = Some(ModelName::Ksd);
        assert!(model3(&cfg).is_err());
        cfg.name = Some(ModelName::Multiwell);
        assert!(model3(&cfg).is_ok());
    }

    #[test]
    fn damage_reports_condensed_variable() {
        let cfg = ModelConfig {
            name: Some(ModelName::DamageNh1),
            ..ModelConfig::default()
        };
        let m = Model2::from_config(&cfg).unwrap();
        assert_eq!(m.condensed_alpha(&Matrix2::identity()), Some(0.0625));
        let f = Matrix([[1.5, 0.0], [0.0, 1.5]]);
        assert!(m.condensed_alpha(&f).unwrap() > 0.0625);
    }
}
