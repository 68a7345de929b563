//! Run configuration. One JSON document per run; command-line flags take
//! precedence over its fields, and defaults fill the rest.

use std::path::{Path, PathBuf};

use hroc_core::{ConvexifyParams, Matrix};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{config, CliError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    Ksd,
    Multiwell,
    Fail,
    DamageNh1,
    DamageNh2,
}

impl ModelName {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelName::Ksd => "ksd",
            ModelName::Multiwell => "multiwell",
            ModelName::Fail => "fail",
            ModelName::DamageNh1 => "damage-nh1",
            ModelName::DamageNh2 => "damage-nh2",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub name: Option<ModelName>,
    pub dim: usize,
    pub damage: DamageConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            name: None,
            dim: 2,
            damage: DamageConfig::default(),
        }
    }
}

/// Damage material and the internal variable of the previous step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DamageConfig {
    pub d_inf: f64,
    pub d_0: f64,
    pub mu: f64,
    pub lambda: f64,
    pub alpha_k: f64,
}

impl Default for DamageConfig {
    fn default() -> Self {
        Self {
            d_inf: 0.9,
            d_0: 0.3,
            mu: 1.0,
            lambda: 0.5,
            alpha_k: 0.0625,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvexifyConfig {
    pub n: usize,
    pub r: f64,
    pub k_max: usize,
}

impl Default for ConvexifyConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            r: 1.0,
            k_max: 10,
        }
    }
}

/// Row-major `dim × dim` matrix.
pub type MatrixRows = Vec<Vec<f64>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PointConfig {
    /// Zero when absent.
    pub f: Option<MatrixRows>,
    pub repetitions: usize,
}

impl Default for PointConfig {
    fn default() -> Self {
        Self {
            f: None,
            repetitions: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurfaceConfig {
    /// Fixed components; zero when absent.
    pub base: Option<MatrixRows>,
    /// The two varied components as `[row, column]`.
    pub axes: [[usize; 2]; 2],
    pub delta: f64,
    pub extent: [[f64; 2]; 2],
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        Self {
            base: None,
            axes: [[0, 0], [1, 1]],
            delta: 0.05,
            extent: [[-1.0, 1.0], [-1.0, 1.0]],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceConfig {
    pub f: Option<MatrixRows>,
    pub n_values: Vec<usize>,
    pub repetitions: usize,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            f: None,
            n_values: vec![10, 50, 100, 300, 500, 1000, 3000, 5000],
            repetitions: 5,
        }
    }
}

/// Biaxial path `F = diag(t, t)`, `t = t_min + k (t_max − t_min)/steps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub steps: usize,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            t_min: 1.0,
            t_max: 2.0,
            steps: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MicrostructureConfig {
    /// Evaluation point; `diag(t, t)` when absent.
    pub f: Option<MatrixRows>,
    pub t: f64,
    pub m: usize,
    /// Root stripe period; one period across the cell along the root normal
    /// when absent.
    pub epsilon: Option<f64>,
    pub separation: f64,
}

impl Default for MicrostructureConfig {
    fn default() -> Self {
        Self {
            f: None,
            t: 1.24,
            m: 64,
            epsilon: None,
            separation: hroc_core::microstructure::DEFAULT_SEPARATION,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub convexify: ConvexifyConfig,
    pub n_rot: usize,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
    /// Echoed into every record. The commands themselves are deterministic.
    pub seed: u64,
    pub out: PathBuf,
    pub point: PointConfig,
    pub surface: SurfaceConfig,
    pub convergence: ConvergenceConfig,
    pub material_path: PathConfig,
    pub microstructure: MicrostructureConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            convexify: ConvexifyConfig::default(),
            n_rot: hroc_core::hroc::DEFAULT_ROTATIONS,
            threads: 0,
            seed: 0,
            out: PathBuf::from("out"),
            point: PointConfig::default(),
            surface: SurfaceConfig::default(),
            convergence: ConvergenceConfig::default(),
            material_path: PathConfig::default(),
            microstructure: MicrostructureConfig::default(),
        }
    }
}

/// Flags that override the document.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub model: Option<ModelName>,
    pub dim: Option<usize>,
    pub n: Option<usize>,
    pub r: Option<f64>,
    pub k_max: Option<usize>,
    pub n_rot: Option<usize>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// Parses a document; errors carry `origin:line:column`.
    pub fn from_json(text: &str, origin: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let msg = msg.rsplit_once(" at line ").map_or(msg.as_str(), |(m, _)| m);
            config(format!("{origin}:{}:{}: {msg}", e.line(), e.column()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(m) = o.model {
            self.model.name = Some(m);
        }
        if let Some(d) = o.dim {
            self.model.dim = d;
        }
        if let Some(n) = o.n {
            self.convexify.n = n;
        }
        if let Some(r) = o.r {
            self.convexify.r = r;
        }
        if let Some(k) = o.k_max {
            self.convexify.k_max = k;
        }
        if let Some(n) = o.n_rot {
            self.n_rot = n;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(t) = o.threads {
            self.threads = t;
        }
    }

    pub fn model_name(&self) -> Result<ModelName, CliError> {
        self.model
            .name
            .ok_or_else(|| config("no model given (set model.name or pass --model)"))
    }

    /// Checks everything that does not depend on the chosen command.
    pub fn validate(&self) -> Result<(), CliError> {
        let name = self.model_name()?;
        let dim = self.model.dim;
        match (name, dim) {
            (_, 2) | (ModelName::Multiwell, 3) => {}
            (ModelName::Multiwell, d) => return Err(config(format!("model.dim = {d}; expected 2 or 3"))),
            (m, d) => {
                return Err(config(format!(
                    "model {} is two-dimensional, got model.dim = {d}",
                    m.as_str()
                )))
            }
        }
        let dmg = &self.model.damage;
        let params = hroc_core::energy::DamageParams {
            d_inf: dmg.d_inf,
            d_0: dmg.d_0,
            mu: dmg.mu,
            lambda: dmg.lambda,
        };
        params.validate().map_err(|e| config(format!("model.damage: {e}")))?;
        if !(dmg.alpha_k >= 0.0) {
            return Err(config("model.damage.alpha_k must be nonnegative"));
        }
        self.convexify_params::<2>()?;
        if self.n_rot == 0 {
            return Err(config("n_rot must be at least 1"));
        }
        for (what, f) in [
            ("point.f", &self.point.f),
            ("surface.base", &self.surface.base),
            ("convergence.f", &self.convergence.f),
            ("microstructure.f", &self.microstructure.f),
        ] {
            if let Some(rows) = f {
                check_shape(what, rows, dim)?;
            }
        }
        for (what, reps) in [
            ("point.repetitions", self.point.repetitions),
            ("convergence.repetitions", self.convergence.repetitions),
        ] {
            if reps < 5 {
                return Err(config(format!("{what} must be at least 5")));
            }
        }
        let s = &self.surface;
        if s.axes.iter().flatten().any(|&i| i >= dim) || s.axes[0] == s.axes[1] {
            return Err(config("surface.axes must name two distinct components"));
        }
        if !(s.delta > 0.0) || s.extent.iter().any(|e| !(e[1] > e[0])) {
            return Err(config("surface needs delta > 0 and increasing extents"));
        }
        if self.convergence.n_values.iter().any(|&n| n < 2) || self.convergence.n_values.is_empty() {
            return Err(config("convergence.n_values must be nonempty with every N >= 2"));
        }
        let p = &self.material_path;
        if !(p.t_max > p.t_min) || p.steps < 2 {
            return Err(config("material_path needs t_max > t_min and steps >= 2"));
        }
        let m = &self.microstructure;
        if m.m < 4 {
            return Err(config("microstructure.m must be at least 4"));
        }
        if m.epsilon.is_some_and(|e| !(e > 0.0 && e <= 1.0)) {
            return Err(config("microstructure.epsilon must lie in (0, 1]"));
        }
        if !(m.separation >= 1.0) {
            return Err(config("microstructure.separation must be at least 1"));
        }
        Ok(())
    }

    pub fn convexify_params<const D: usize>(&self) -> Result<ConvexifyParams<D>, CliError> {
        let c = &self.convexify;
        ConvexifyParams::standard(c.n, c.r, c.k_max).map_err(|e| config(format!("convexify: {e}")))
    }

    pub fn with_n<const D: usize>(&self, n: usize) -> Result<ConvexifyParams<D>, CliError> {
        let c = &self.convexify;
        ConvexifyParams::standard(n, c.r, c.k_max).map_err(|e| config(format!("convexify: {e}")))
    }

    /// SHA-256 over every field that can change a numeric result; the output
    /// directory and thread count are left out.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("out");
            obj.remove("threads");
        }
        let digest = Sha256::digest(v.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn check_shape(what: &str, rows: &MatrixRows, dim: usize) -> Result<(), CliError> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(config(format!("{what} must be a {dim}x{dim} matrix")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(config(format!("{what} has non-finite entries")));
    }
    Ok(())
}

/// Converts validated rows; zero when absent.
pub fn matrix<const D: usize>(rows: Option<&MatrixRows>) -> Matrix<D> {
    let mut f = Matrix::zeros();
    if let Some(rows) = rows {
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                f.0[i][j] = *v;
            }
        }
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let err = ExperimentConfig::from_json("{\n  \"model\": {\"name\": \"ksd\"},\n  \"nrot\": 4\n}", "run.json")
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("run.json:3:"), "{msg}");
        assert!(msg.contains("unknown field `nrot`"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn nested_unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_json(r#"{"convexify": {"N": 10}}"#, "c").unwrap_err();
        assert!(err.to_string().contains("unknown field `N`"));
    }

    #[test]
    fn flags_override_document() {
        let mut cfg =
            ExperimentConfig::from_json(r#"{"model": {"name": "ksd"}, "convexify": {"n": 50, "r": 3.0}}"#, "c")
                .unwrap();
        cfg.apply(&Overrides {
            n: Some(700),
            model: Some(ModelName::Fail),
            ..Overrides::default()
        });
        assert_eq!(cfg.convexify.n, 700);
        assert_eq!(cfg.convexify.r, 3.0);
        assert_eq!(cfg.model.name, Some(ModelName::Fail));
        cfg.validate().unwrap();
    }

    #[test]
    fn hash_ignores_output_location() {
        let mut a = ExperimentConfig::default();
        a.model.name = Some(ModelName::Ksd);
        let mut b = a.clone();
        b.out = PathBuf::from("elsewhere");
        b.threads = 7;
        assert_eq!(a.hash(), b.hash());
        b.convexify.n += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn validation_errors() {
        let base = || {
            let mut c = ExperimentConfig::default();
            c.model.name = Some(ModelName::Ksd);
            c
        };
        assert!(ExperimentConfig::default().validate().is_err());
        let mut c = base();
        c.model.dim = 3;
        assert!(c.validate().is_err());
        c.model.name = Some(ModelName::Multiwell);
        assert!(c.validate().is_ok());
        let mut c = base();
        c.point.f = Some(vec![vec![1.0, 0.0]]);
        assert!(c.validate().is_err());
        let mut c = base();
        c.convexify.n = 1;
        assert!(c.validate().is_err());
        let mut c = base();
        c.convergence.repetitions = 3;
        assert!(c.validate().is_err());
        let mut c = base();
        c.surface.axes = [[0, 0], [0, 0]];
        assert!(c.validate().is_err());
    }
}
