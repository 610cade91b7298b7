//! Run configuration: a JSON file selecting the scenario, grids, methods,
//! quadrature, wavepacket parameters and seed. Every field is optional;
//! each subcommand fills in the reproduction defaults for the studies it
//! drives.

use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use qhop_core::hamiltonian::{
    schrodinger_split_system, SplitBounds, SplitSystem, TimeDependentHamiltonian,
};
use qhop_core::operator::HermitianOperator;
use qhop_core::quadrature::{QuadratureKind, QuadratureRule};

use crate::error::{LabError, Result};
use crate::expr::parse_potential;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScenarioConfig {
    /// Periodic finite-difference `-Δ + V(x)` on `[-π, π)`.
    Schrodinger {
        #[serde(default)]
        potential: Option<String>,
    },
    /// Dense `A`, `B` pair loaded from a JSON matrix file.
    CustomMatrixFile { path: String },
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig::Schrodinger { potential: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub rule: String,
    pub m: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WavepacketConfig {
    #[serde(default = "default_center")]
    pub center: f64,
    pub width: f64,
    #[serde(default)]
    pub frequencies: Option<Vec<i64>>,
}

fn default_center() -> f64 {
    -1.0
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub scenario: Option<ScenarioConfig>,
    #[serde(default)]
    pub n: Option<OneOrMany<usize>>,
    #[serde(default)]
    pub t_final: Option<f64>,
    #[serde(default)]
    pub h: Option<OneOrMany<f64>>,
    #[serde(default)]
    pub methods: Option<Vec<String>>,
    #[serde(default)]
    pub quadrature: Option<QuadratureConfig>,
    #[serde(default)]
    pub wavepacket: Option<WavepacketConfig>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Log-spaced separation grid for the commutator scan.
    #[serde(default)]
    pub s_range: Option<[f64; 2]>,
    #[serde(default)]
    pub s_points: Option<usize>,
    /// Random instance count for the bound checks.
    #[serde(default)]
    pub instances: Option<usize>,
    #[serde(default)]
    pub reference_tolerance: Option<f64>,
    #[serde(default)]
    pub estimate: Option<EstimateConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub total_time: f64,
    pub epsilon: f64,
    pub methods: Vec<String>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub c_h: Option<f64>,
    #[serde(default)]
    pub theta: Option<u8>,
    #[serde(default)]
    pub max_h_prime: Option<f64>,
    #[serde(default)]
    pub alpha_b: Option<f64>,
    #[serde(default)]
    pub beta_b: Option<f64>,
    #[serde(default)]
    pub alpha_ab: Option<f64>,
    #[serde(default)]
    pub c_ab: Option<f64>,
    #[serde(default)]
    pub commutator_ab: Option<f64>,
    #[serde(default)]
    pub nested_aab: Option<f64>,
    #[serde(default)]
    pub nested_bba: Option<f64>,
    #[serde(default)]
    pub l1_norm: Option<f64>,
    #[serde(default)]
    pub n_ancilla: Option<u64>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| LabError::Config(format!("cannot parse {}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn quadrature_rule(&self, default_kind: QuadratureKind, default_m: usize) -> Result<QuadratureRule> {
        match &self.quadrature {
            None => Ok(QuadratureRule::new(default_kind, default_m)?),
            Some(q) => {
                let kind: QuadratureKind = q.rule.parse()?;
                Ok(QuadratureRule::new(kind, q.m)?)
            }
        }
    }

    /// Reference-oracle tolerance: configured value, or 1e-10 up to
    /// N = 128 and 1e-8 above (keeps the desk-scale runtime bounded).
    pub fn reference_tolerance_for(&self, n: usize) -> f64 {
        self.reference_tolerance
            .unwrap_or(if n <= 128 { 1e-10 } else { 1e-8 })
    }
}

/// Simulation methods the study runners compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Qhop,
    Trotter2,
    Dyson1,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Qhop => "qhop",
            Method::Trotter2 => "trotter2",
            Method::Dyson1 => "dyson1",
        }
    }

    pub fn parse_list(names: &[String]) -> Result<Vec<Method>> {
        names
            .iter()
            .map(|s| match s.as_str() {
                "qhop" => Ok(Method::Qhop),
                "trotter2" => Ok(Method::Trotter2),
                "dyson1" => Ok(Method::Dyson1),
                other => Err(LabError::Config(format!("unknown method {other:?}"))),
            })
            .collect()
    }
}

/// JSON schema for the custom matrix scenario: real and imaginary parts of
/// dense `A` and `B`, row major. Imaginary parts default to zero.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    dim: usize,
    a_re: Vec<Vec<f64>>,
    #[serde(default)]
    a_im: Option<Vec<Vec<f64>>>,
    b_re: Vec<Vec<f64>>,
    #[serde(default)]
    b_im: Option<Vec<Vec<f64>>>,
}

fn assemble(
    dim: usize,
    re: &[Vec<f64>],
    im: Option<&Vec<Vec<f64>>>,
    what: &str,
) -> Result<Array2<Complex64>> {
    if re.len() != dim || re.iter().any(|row| row.len() != dim) {
        return Err(LabError::Config(format!(
            "{what}: expected {dim}x{dim} real part"
        )));
    }
    if let Some(im) = im {
        if im.len() != dim || im.iter().any(|row| row.len() != dim) {
            return Err(LabError::Config(format!(
                "{what}: expected {dim}x{dim} imaginary part"
            )));
        }
    }
    Ok(Array2::from_shape_fn((dim, dim), |(i, j)| {
        Complex64::new(re[i][j], im.map(|m| m[i][j]).unwrap_or(0.0))
    }))
}

/// Materialize the configured scenario as a split system of grid size /
/// dimension `n` on `[0, horizon]`.
pub fn build_split_system(
    scenario: &ScenarioConfig,
    n: usize,
    horizon: f64,
) -> Result<SplitSystem> {
    match scenario {
        ScenarioConfig::Schrodinger { potential } => {
            let spec = potential.clone().unwrap_or_else(|| "cos4x".to_string());
            let expr = parse_potential(&spec)?;
            Ok(schrodinger_split_system(n, move |x| expr.eval(x), horizon)?)
        }
        ScenarioConfig::CustomMatrixFile { path } => {
            let text = std::fs::read_to_string(path)?;
            let file: MatrixFile = serde_json::from_str(&text)
                .map_err(|e| LabError::Config(format!("cannot parse matrix file {path}: {e}")))?;
            let a = HermitianOperator::new(assemble(
                file.dim,
                &file.a_re,
                file.a_im.as_ref(),
                "A",
            )?)?;
            let b = HermitianOperator::new(assemble(
                file.dim,
                &file.b_re,
                file.b_im.as_ref(),
                "B",
            )?)?;
            let b_td = TimeDependentHamiltonian::constant(b, horizon)?;
            Ok(SplitSystem::new(a, b_td, SplitBounds::Measured)?)
        }
    }
}

pub fn scenario_label(scenario: &ScenarioConfig) -> &'static str {
    match scenario {
        ScenarioConfig::Schrodinger { .. } => "schrodinger",
        ScenarioConfig::CustomMatrixFile { .. } => "custom-matrix-file",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let cfg: RunConfig = serde_json::from_str(r#"{"n": 64, "t_final": 0.5}"#).unwrap();
        assert_eq!(cfg.n.unwrap().to_vec(), vec![64]);
        assert_eq!(cfg.t_final, Some(0.5));
    }

    #[test]
    fn parses_full_config() {
        let text = r#"{
            "scenario": {"type": "schrodinger", "potential": "cos4x"},
            "n": [8, 16],
            "t_final": 0.5,
            "h": [0.125, 0.0625],
            "methods": ["qhop", "trotter2", "dyson1"],
            "quadrature": {"rule": "trapezoid", "m": 512},
            "wavepacket": {"center": -1.0, "width": 20.0, "frequencies": [1, 4]},
            "seed": 7
        }"#;
        let cfg: RunConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.n.unwrap().to_vec(), vec![8, 16]);
        assert_eq!(cfg.h.unwrap().to_vec(), vec![0.125, 0.0625]);
        let rule = cfg.quadrature.as_ref().unwrap();
        assert_eq!(rule.rule, "trapezoid");
        assert_eq!(rule.m, 512);
    }

    #[test]
    fn rejects_unknown_fields_and_methods() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
        assert!(Method::parse_list(&["qhop".into(), "rk4".into()]).is_err());
    }

    #[test]
    fn scenario_tags_match_wire_names() {
        let s: ScenarioConfig =
            serde_json::from_str(r#"{"type": "custom-matrix-file", "path": "m.json"}"#).unwrap();
        assert_eq!(scenario_label(&s), "custom-matrix-file");
        let s: ScenarioConfig = serde_json::from_str(r#"{"type": "schrodinger"}"#).unwrap();
        assert_eq!(scenario_label(&s), "schrodinger");
    }
}
