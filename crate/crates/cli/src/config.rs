//! TOML run configuration. Every table is optional except `[domain]`; unknown
//! keys are rejected.

use std::path::{Path, PathBuf};

use mixeig::geometry::PatchSpec;
use mixeig::harness::{SweepConfig, SweepMesh};
use mixeig::profile::ProfileNumerics;
use mixeig::spectrum::PsiSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: Domain,
    #[serde(default = "default_patch")]
    pub patch: PatchSpec,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub psi: Psi,
    #[serde(default)]
    pub frequency: Frequency,
    #[serde(default)]
    pub outputs: Outputs,
}

fn default_patch() -> PatchSpec {
    PatchSpec::disk(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    HalfBall,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub kind: DomainKind,
    pub radius: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sweep {
    pub epsilon_list: Vec<f64>,
    pub n0: usize,
    pub fit_radius: f64,
    pub gamma_radii: Vec<f64>,
    pub predict: bool,
    /// Blow-up radius R and tolerances of the `--check` reports.
    pub blowup_radius: f64,
    pub blowup_tol: f64,
    pub sandwich_tol: f64,
}

impl Default for Sweep {
    fn default() -> Self {
        let s = SweepConfig::default();
        Sweep {
            epsilon_list: s.epsilon_list,
            n0: s.n0,
            fit_radius: s.fit_radius,
            gamma_radii: s.gamma_radii,
            predict: s.predict,
            blowup_radius: 4.0,
            blowup_tol: 0.2,
            sandwich_tol: 0.25,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    /// Mesh size away from the origin for ε = 0 meshes.
    pub h_far: f64,
    /// Ratio h_far / h_origin for ε = 0 meshes.
    pub grading: f64,
    pub eigen_tol: f64,
    /// Eigenpairs computed by `eig`.
    pub eig_count: usize,
    /// Per-ε mesh ladder.
    pub mesh: SweepMesh,
    pub profile: ProfileNumerics,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            h_far: 0.1,
            grading: 1.0,
            eigen_tol: 1e-8,
            eig_count: 3,
            mesh: SweepMesh::default(),
            profile: ProfileNumerics::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Psi {
    pub gamma: u32,
    pub coefficients: Vec<f64>,
}

impl Default for Psi {
    fn default() -> Self {
        Psi { gamma: 1, coefficients: vec![1.0] }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Frequency {
    pub radii: Vec<f64>,
}

impl Default for Frequency {
    fn default() -> Self {
        Frequency { radii: vec![0.05, 0.1, 0.2, 0.3, 0.4] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Dat,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs { dir: PathBuf::from("out"), formats: vec![Format::Json, Format::Csv, Format::Dat] }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.domain.radius.is_finite() && self.domain.radius > 0.0) {
            return bad(format!("domain.radius must be positive, got {}", self.domain.radius));
        }
        self.patch.validate().map_err(|e| CliError::Config(format!("patch: {e}")))?;
        self.sweep_config().validate().map_err(|e| CliError::Config(format!("sweep: {e}")))?;
        self.numerics.profile.validate().map_err(|e| CliError::Config(format!("numerics.profile: {e}")))?;
        self.psi_spec()?;
        if self.numerics.eig_count == 0 {
            return bad("numerics.eig_count must be at least 1".into());
        }
        if !(self.numerics.h_far > 0.0 && self.numerics.grading >= 1.0) {
            return bad("numerics.h_far must be positive and numerics.grading ≥ 1".into());
        }
        Ok(())
    }

    /// Rejects ε violating ε < 1 and ε·diam(V) < r₀.
    pub fn check_epsilon(&self, eps: f64) -> Result<(), CliError> {
        let diam = self.patch.diameter();
        if !((0.0..1.0).contains(&eps) && eps * diam < self.domain.radius) {
            return Err(CliError::Config(format!(
                "diameter constraint violated: need 0 ≤ ε < 1 and ε·diam(V) < r₀, got ε = {eps}, ε·diam(V) = {}, r₀ = {}",
                eps * diam,
                self.domain.radius
            )));
        }
        Ok(())
    }

    pub fn psi_spec(&self) -> Result<PsiSpec, CliError> {
        PsiSpec::new(self.psi.gamma, self.psi.coefficients.clone()).map_err(|e| CliError::Config(format!("psi: {e}")))
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            radius: self.domain.radius,
            patch: self.patch.clone(),
            epsilon_list: self.sweep.epsilon_list.clone(),
            n0: self.sweep.n0,
            mesh: self.numerics.mesh.clone(),
            eigen_tol: self.numerics.eigen_tol,
            fit_radius: self.sweep.fit_radius,
            gamma_radii: self.sweep.gamma_radii.clone(),
            predict: self.sweep.predict,
            profile: self.numerics.profile.clone(),
            partial_log: None,
        }
    }

    /// SHA-256 of the canonical JSON form (defaults filled in).
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn wants(&self, f: Format) -> bool {
        self.outputs.formats.contains(&f)
    }
}
