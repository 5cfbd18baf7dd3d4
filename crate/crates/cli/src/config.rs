//! Run configuration: a single JSON document, every field optional.

use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use shearstab::odecore::{Contour, Mesh};
use shearstab::profiles::{build_profile, make_profile, ShearProfile, SpectralParams};
use shearstab::rayleigh::Operator;
use shearstab::viscgreen::BoundaryCondition;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileSpec {
    pub family: String,
    pub params: Vec<f64>,
    pub y_max: Option<f64>,
}

impl Default for ProfileSpec {
    fn default() -> Self {
        ProfileSpec { family: "cubic_exp".into(), params: vec![1.0, 0.45], y_max: None }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub re: [f64; 2],
    pub im: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSpec {
    pub re: [f64; 2],
    pub im: [f64; 2],
    pub n_re: usize,
    pub n_im: usize,
    pub operator: OperatorChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorChoice {
    Adjoint,
    Original,
}

impl From<OperatorChoice> for Operator {
    fn from(o: OperatorChoice) -> Operator {
        match o {
            OperatorChoice::Adjoint => Operator::Adjoint,
            OperatorChoice::Original => Operator::Original,
        }
    }
}

impl Default for ScanSpec {
    fn default() -> Self {
        ScanSpec { re: [0.2, 0.4], im: [0.01, 0.11], n_re: 41, n_im: 41, operator: OperatorChoice::Adjoint }
    }
}

/// Geometric `nu` grid from `max` down to `min`, or an explicit list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NuGrid {
    pub max: f64,
    pub min: f64,
    pub per_decade: usize,
    pub values: Option<Vec<f64>>,
}

impl Default for NuGrid {
    fn default() -> Self {
        NuGrid { max: 1e-3, min: 1e-6, per_decade: 4, values: None }
    }
}

impl NuGrid {
    pub fn values(&self) -> Vec<f64> {
        if let Some(v) = &self.values {
            return v.clone();
        }
        let decades = (self.max / self.min).log10();
        let n = (decades * self.per_decade as f64).round() as usize;
        (0..=n).map(|k| self.max * 10f64.powf(-(k as f64) / self.per_decade as f64)).collect()
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub h0: f64,
    pub ratio: f64,
    pub h_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GreenSpec {
    pub bc: BoundaryCondition,
    pub terms: usize,
    /// `y` of the exported slice `x -> G(x, y0)`
    pub y0: f64,
}

impl Default for GreenSpec {
    fn default() -> Self {
        GreenSpec { bc: BoundaryCondition::FullNavier, terms: 3, y0: 2.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub eigenvalue_agreement: f64,
    pub kappa_fit: f64,
    pub rate_relative: f64,
    pub inviscid_green_residual: f64,
    /// relative to `sup |phi|`
    pub viscous_green_residual: f64,
    /// relative third-derivative jump defect
    pub jump_relative: f64,
    pub correction_ratio: f64,
    pub boundary_residual: f64,
    pub image_membership: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eigenvalue_agreement: 1e-8,
            kappa_fit: 0.05,
            rate_relative: 0.1,
            inviscid_green_residual: 1e-4,
            viscous_green_residual: 1e-3,
            jump_relative: 1e-4,
            correction_ratio: 0.1,
            boundary_residual: 1e-8,
            image_membership: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub profile: ProfileSpec,
    pub alpha: f64,
    pub gamma: f64,
    /// phase speed `[re, im]` for single-point commands
    pub c: Option<[f64; 2]>,
    /// eigenvalue search rectangle
    pub search: Region,
    pub scan: ScanSpec,
    /// viscosity for single-`nu` commands
    pub nu: f64,
    pub nu_grid: NuGrid,
    /// also track with the original operator and compare
    pub compare_original: bool,
    pub mesh: Option<MeshSpec>,
    pub green: GreenSpec,
    pub tolerances: Tolerances,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            profile: ProfileSpec::default(),
            alpha: 1.0,
            gamma: 10.0,
            c: None,
            search: Region { re: [0.0, 0.6], im: [0.01, 0.6] },
            scan: ScanSpec::default(),
            nu: 1e-4,
            nu_grid: NuGrid::default(),
            compare_original: false,
            mesh: None,
            green: GreenSpec::default(),
            tolerances: Tolerances::default(),
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| ConfigError::Read { path: p.into(), source: e })?;
                serde_json::from_str(&text).map_err(|e| ConfigError::Parse { path: p.into(), source: e })
            }
        }
    }

    /// Profile with the wall conditions enforced, unless `lenient`.
    pub fn profile(&self, lenient: bool) -> Result<ShearProfile, ConfigError> {
        let f = if lenient { build_profile } else { make_profile };
        let p = f(&self.profile.family, &self.profile.params).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(match self.profile.y_max {
            Some(y) => p.with_y_max(y),
            None => p,
        })
    }

    pub fn c_or(&self, default: C64) -> C64 {
        self.c.map(|[re, im]| C64::new(re, im)).unwrap_or(default)
    }

    pub fn search_contour(&self) -> Result<Contour, ConfigError> {
        Contour::from_rect((self.search.re[0], self.search.re[1]), (self.search.im[0], self.search.im[1]), 128)
            .map_err(|e| ConfigError::Invalid(format!("search region: {e}")))
    }

    pub fn mesh(&self, p: &ShearProfile) -> Result<Option<Mesh>, ConfigError> {
        self.mesh
            .map(|m| Mesh::geometric(p.y_max, m.h0, m.ratio, m.h_max))
            .transpose()
            .map_err(|e| ConfigError::Invalid(format!("mesh: {e}")))
    }

    /// Checks everything the commands will use before any computation.
    pub fn validate(&self, lenient_profile: bool) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        let p = self.profile(lenient_profile)?;
        if let Some(y) = self.profile.y_max {
            if !(y > 1.0 && y.is_finite()) {
                return bad(format!("y_max = {y} must exceed 1"));
            }
        }
        SpectralParams::inviscid(self.alpha, C64::new(0.5, 0.1)).check().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma = {} must be positive", self.gamma));
        }
        if !(self.nu > 0.0 && self.nu < 1.0) {
            return bad(format!("nu = {} must lie in (0, 1)", self.nu));
        }
        if let Some([re, im]) = self.c {
            if !(re.is_finite() && im.is_finite()) {
                return bad("c must be finite".into());
            }
        }
        let r = &self.search;
        if !(r.re[0] < r.re[1] && r.im[0] < r.im[1]) {
            return bad("search region must have re[0] < re[1] and im[0] < im[1]".into());
        }
        let sc = &self.scan;
        if sc.n_re == 0 || sc.n_im == 0 || !(sc.re[0] <= sc.re[1] && sc.im[0] <= sc.im[1]) {
            return bad("scan needs n_re, n_im >= 1 and ordered ranges".into());
        }
        let nus = self.nu_grid.values();
        if nus.len() < 2 || nus.iter().any(|&v| !(v > 0.0 && v < 1.0)) || nus.windows(2).any(|w| !(w[1] < w[0])) {
            return bad("nu grid needs at least two strictly decreasing values in (0, 1)".into());
        }
        if self.nu_grid.values.is_none() && (self.nu_grid.per_decade == 0 || !(self.nu_grid.min < self.nu_grid.max)) {
            return bad("nu grid needs per_decade >= 1 and min < max".into());
        }
        self.mesh(&p)?;
        if self.green.terms > shearstab::viscgreen::MAX_CORRECTION_TERMS {
            return bad(format!("at most {} correction terms", shearstab::viscgreen::MAX_CORRECTION_TERMS));
        }
        let t = &self.tolerances;
        let all = [
            t.eigenvalue_agreement,
            t.kappa_fit,
            t.rate_relative,
            t.inviscid_green_residual,
            t.viscous_green_residual,
            t.jump_relative,
            t.correction_ratio,
            t.boundary_residual,
            t.image_membership,
        ];
        if all.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return bad("tolerances must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = RunConfig::default();
        c.validate(false).unwrap();
        let nus = c.nu_grid.values();
        assert_eq!(nus.len(), 13);
        assert!((nus[12] / 1e-6 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            r#"{"alpha": 0.5}"#,
            r#"{"nu": 2.0}"#,
            r#"{"nu_grid": {"values": [1e-4, 1e-3]}}"#,
            r#"{"profile": {"family": "parabola"}}"#,
            r#"{"profile": {"family": "cubic_exp", "params": [1, 1, 1]}}"#,
            r#"{"search": {"re": [0.5, 0.1], "im": [0.1, 0.2]}}"#,
            r#"{"tolerances": {"kappa_fit": -1}}"#,
            r#"{"green": {"terms": 9}}"#,
        ];
        for text in bad {
            let c: RunConfig = serde_json::from_str(text).unwrap();
            assert!(c.validate(false).is_err(), "{text}");
        }
        let lenient: RunConfig = serde_json::from_str(bad[4]).unwrap();
        lenient.validate(true).unwrap();
        assert!(serde_json::from_str::<RunConfig>(r#"{"gama": 1}"#).is_err());
    }
}
