//! Versioned JSON instance and result files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audit::{EnvyAuditReport, OrderAuditReport};
use crate::classifier::KappaInterval;
use crate::error::{Error, Result};
use crate::instance::{
    derive, instantiate, FairInstance, Metadata, OmegaAtom, OmegaSpec, RawInstance, Side,
};
use crate::measure::{PointId, RealMeasure1D};
use crate::nestedness::{
    ClassifierRegression, EquivalenceReport, Grid, NestednessReport, PotentialDiagnostic,
};

pub const SCHEMA_VERSION: &str = "v1";
pub const TOOL_VERSION: &str = concat!("fairbary ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Raw,
    Omega,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub version: String,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<RawInstance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<OmegaSpec>,
    #[serde(default)]
    pub metadata: Metadata,
}

impl InstanceFile {
    pub fn raw(raw: RawInstance, metadata: Metadata) -> Self {
        InstanceFile {
            version: SCHEMA_VERSION.into(),
            mode: Mode::Raw,
            raw: Some(raw),
            omega: None,
            metadata,
        }
    }

    pub fn omega(spec: OmegaSpec, metadata: Metadata) -> Self {
        InstanceFile {
            version: SCHEMA_VERSION.into(),
            mode: Mode::Omega,
            raw: None,
            omega: Some(spec),
            metadata,
        }
    }

    /// Parses and checks the envelope; the payload is validated by [`InstanceFile::build`].
    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        if file.version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "unsupported version `{}` (expected `{SCHEMA_VERSION}`)",
                file.version
            )));
        }
        match (file.mode, &file.raw, &file.omega) {
            (Mode::Raw, Some(_), None) | (Mode::Omega, None, Some(_)) => Ok(file),
            (Mode::Raw, _, _) => Err(Error::Schema(
                "mode `raw` needs a `raw` section and no `omega` section".into(),
            )),
            (Mode::Omega, _, _) => Err(Error::Schema(
                "mode `omega` needs an `omega` section and no `raw` section".into(),
            )),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn build(&self) -> Result<FairInstance> {
        match (&self.raw, &self.omega) {
            (Some(raw), _) => derive(raw),
            (_, Some(spec)) => instantiate(spec),
            _ => Err(Error::Schema("instance file has no payload".into())),
        }
    }
}

/// Reads an instance file, returning it with the hex SHA-256 of its bytes.
pub fn read_instance(path: &Path) -> Result<(InstanceFile, String)> {
    let bytes = fs::read(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::Schema(format!("not UTF-8: {e}")))?;
    Ok((InstanceFile::from_json(text)?, sha256_hex(&bytes)))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One support point as written to result files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRow {
    pub x: PointId,
    pub side: Side,
    pub eta: f64,
    pub delta: f64,
    pub mu: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub p1: f64,
    pub p2: f64,
    pub jordan_mass: f64,
    pub d_scale: f64,
    pub y_binary: bool,
    pub awareness: bool,
    pub overlap: bool,
    pub points: Vec<PointRow>,
    pub omega_plus: Vec<OmegaAtom>,
    pub omega_minus: Vec<OmegaAtom>,
}

impl InstanceSummary {
    pub fn of(inst: &FairInstance) -> Self {
        InstanceSummary {
            p1: inst.p1,
            p2: inst.p2,
            jordan_mass: inst.jordan_mass,
            d_scale: inst.d_scale,
            y_binary: inst.y_binary,
            awareness: inst.is_awareness(),
            overlap: inst.has_overlap(),
            points: inst
                .atoms
                .iter()
                .map(|a| PointRow {
                    x: a.id.clone(),
                    side: a.side,
                    eta: a.eta,
                    delta: a.delta,
                    mu: a.mu,
                    mu_plus: a.mu_plus,
                    mu_minus: a.mu_minus,
                })
                .collect(),
            omega_plus: inst.omega_plus.clone(),
            omega_minus: inst.omega_minus.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanCell {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub x: PointId,
    pub f_det: f64,
    /// Law of the randomized prediction.
    pub kernel: RealMeasure1D,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolvePayload {
    pub ot_value: f64,
    pub excess_risk_randomized: f64,
    pub excess_risk_deterministic: f64,
    pub parity_gap_randomized: f64,
    pub parity_gap_deterministic: f64,
    pub barycenter: RealMeasure1D,
    pub plan: Vec<PlanCell>,
    pub predictions: Vec<Prediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpCheck {
    pub optimal_risk: f64,
    pub multiplier: f64,
    /// `|surrogate risk − LP optimum|`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub x: PointId,
    /// Acceptance probability, randomization included.
    pub accept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyPayload {
    pub y: f64,
    pub kappa: f64,
    pub kappa_unscaled: f64,
    pub interval: KappaInterval,
    pub interval_unscaled: (f64, f64),
    pub decisions: Vec<Decision>,
    pub parity_gap: f64,
    pub parity_gap_deterministic: f64,
    pub surrogate_risk: f64,
    /// Cost-sensitive risk; omitted unless labels are binary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lp_check: Option<LpCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedPayload {
    pub report: NestednessReport,
    /// `ρ · κ⁺(y)` along the grid.
    pub kappa_unscaled: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regression: Option<ClassifierRegression>,
    pub equivalence: EquivalenceReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialDiagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditPayload {
    /// Which rule was audited for order (`f_det` or `f_star`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<OrderAuditReport>,
    pub envy: Vec<EnvyAuditReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Payload {
    Solve(SolvePayload),
    Classify(ClassifyPayload),
    Nested(NestedPayload),
    Audit(AuditPayload),
}

/// Everything a command writes. No timestamps, so reruns are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultFile {
    pub version: String,
    pub tool: String,
    pub instance_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    pub instance: InstanceSummary,
    pub payload: Payload,
}

impl ResultFile {
    pub fn new(instance_sha256: String, inst: &FairInstance, payload: Payload) -> Self {
        ResultFile {
            version: SCHEMA_VERSION.into(),
            tool: TOOL_VERSION.into(),
            instance_sha256,
            grid: None,
            params: BTreeMap::new(),
            instance: InstanceSummary::of(inst),
            payload,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: ResultFile = serde_json::from_str(text)?;
        if r.version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "unsupported version `{}` (expected `{SCHEMA_VERSION}`)",
                r.version
            )));
        }
        Ok(r)
    }

    pub fn read(path: &Path) -> Result<Self> {
        ResultFile::from_json(&fs::read_to_string(path)?)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(fs::write(path, text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{example_spec, DScale};

    #[test]
    fn omega_file_round_trip() {
        let f = InstanceFile::omega(
            example_spec(1, 5).unwrap(),
            Metadata::from([("source".into(), "test".into())]),
        );
        let text = f.to_json().unwrap();
        assert!(text.contains("\"d_scale\": \"auto\""));
        let back = InstanceFile::from_json(&text).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.build().unwrap().len(), f.build().unwrap().len());
    }

    #[test]
    fn raw_file_parses() {
        let text = r#"{"version":"v1","mode":"raw","raw":{"records":[
            {"x":"a","s":1,"y":1.0,"p":0.3},{"x":"a","s":2,"y":0.0,"p":0.2},
            {"x":"b","s":1,"y":0.0,"p":0.1},{"x":"b","s":2,"y":1.0,"p":0.4}]}}"#;
        let f = InstanceFile::from_json(text).unwrap();
        assert!(f.metadata.is_empty());
        assert_eq!(f.build().unwrap().len(), 2);
    }

    #[test]
    fn envelope_errors_are_schema_errors() {
        let bad_version = r#"{"version":"v0","mode":"raw","raw":{"records":[]}}"#;
        assert!(matches!(
            InstanceFile::from_json(bad_version),
            Err(Error::Schema(_))
        ));
        let mismatch = r#"{"version":"v1","mode":"omega","raw":{"records":[]}}"#;
        assert!(matches!(
            InstanceFile::from_json(mismatch),
            Err(Error::Schema(_))
        ));
        let unknown = r#"{"version":"v1","mode":"raw","raw":{"records":[]},"extra":1}"#;
        assert!(matches!(
            InstanceFile::from_json(unknown),
            Err(Error::Json(_))
        ));
        assert_eq!(Error::Schema(String::new()).exit_code(), 2);
    }

    #[test]
    fn fixed_scale_mass_bound_is_infeasible() {
        let spec = OmegaSpec::new(
            vec![OmegaAtom::new(0.0, 1.0, 1.0)],
            vec![OmegaAtom::new(0.0, -1.0, 1.0)],
            DScale::Fixed(1.0),
        );
        let err = InstanceFile::omega(spec, Metadata::new())
            .build()
            .unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("violates mass bound"));
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
