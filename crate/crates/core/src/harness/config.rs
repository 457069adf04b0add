use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::infotheory::RateMethod;
use crate::keystream::{LfsrSpec, SeedKey};

/// Running-key generator and its seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LfsrConfig {
    pub degree: u32,
    /// Exponents of the connection polynomial; the default table is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taps: Option<Vec<u32>>,
    /// Seed as hexadecimal, bit `i` of the value is register bit `i`.
    pub seed: String,
}

/// What the attack stage of a run does with the transcript.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackSelection {
    #[default]
    None,
    Binarize,
    HeterodyneKeyKnown,
    HeterodyneKeyUnknown,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    /// Secret key from `keygen`, written as hexadecimal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<PathBuf>,
}

impl OutputPaths {
    fn is_empty(&self) -> bool {
        self.transcript.is_none() && self.report.is_none() && self.key.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeygenOptions {
    /// Raw qumode rate in bits per second, used to express rates.
    #[serde(default = "default_raw_rate")]
    pub raw_rate: f64,
    #[serde(default = "default_method")]
    pub method: RateMethod,
    /// Eve's bit error rate, replacing the simulated one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_eve: Option<f64>,
    /// Evaluate rates from error probabilities only, without sampling or hashing.
    #[serde(default)]
    pub analytic: bool,
}

fn default_raw_rate() -> f64 {
    1e9
}

fn default_method() -> RateMethod {
    RateMethod::PaperHeuristic
}

impl Default for KeygenOptions {
    fn default() -> Self {
        Self {
            raw_rate: default_raw_rate(),
            method: default_method(),
            p_eve: None,
            analytic: false,
        }
    }
}

/// A single experiment. Parsed from one JSON document; CLI flags are
/// applied on top of the parsed values before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "M")]
    pub m: u32,
    pub alpha0: f64,
    pub lfsr: LfsrConfig,
    pub n: u64,
    #[serde(default)]
    pub attack: AttackSelection,
    pub master_seed: u64,
    /// Worker threads. Results do not depend on it, so it is left out of
    /// the echo that goes into reports.
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "OutputPaths::is_empty")]
    pub output: OutputPaths,
    #[serde(default)]
    pub keygen: KeygenOptions,
}

/// Upper bound on simulated qumodes per run.
pub const MAX_RUN_LENGTH: u64 = 1 << 30;

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            m: 4096,
            alpha0: 200.0,
            lfsr: LfsrConfig {
                degree: 31,
                taps: None,
                seed: "5a3c96e1".into(),
            },
            n: 100_000,
            attack: AttackSelection::None,
            master_seed: 2024,
            workers: None,
            output: OutputPaths::default(),
            keygen: KeygenOptions::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::config(json_field(&e), e.to_string()))?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Canonical JSON echo, as embedded in reports.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn constellation(&self) -> Result<Constellation> {
        Constellation::new(self.m, self.alpha0).map_err(|e| match e {
            Error::Domain(msg) if msg.contains("alpha") => Error::config("alpha0", msg),
            Error::Domain(msg) => Error::config("M", msg),
            other => other,
        })
    }

    pub fn lfsr_spec(&self) -> Result<LfsrSpec> {
        match &self.lfsr.taps {
            Some(t) => LfsrSpec::new(self.lfsr.degree, t.clone()),
            None => LfsrSpec::primitive(self.lfsr.degree),
        }
    }

    pub fn seed_key(&self) -> Result<SeedKey> {
        let seed = SeedKey::from_hex(&self.lfsr.seed, self.lfsr.degree)
            .map_err(|e| Error::config("lfsr.seed", e.to_string()))?;
        if seed.is_zero() {
            return Err(Error::config("lfsr.seed", "the all-zero seed locks the register"));
        }
        Ok(seed)
    }

    /// Checks every field against the preconditions of the modules it feeds.
    pub fn validate(&self) -> Result<()> {
        self.constellation()?;
        let spec = self.lfsr_spec()?;
        if !spec.is_primitive() {
            return Err(Error::config(
                "lfsr.taps",
                "connection polynomial is not primitive, the keystream would not have maximal length",
            ));
        }
        self.seed_key()?;
        if self.n > MAX_RUN_LENGTH {
            return Err(Error::ResourceLimit(format!(
                "n = {} exceeds the run limit {MAX_RUN_LENGTH}",
                self.n
            )));
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers", "must be at least 1"));
        }
        let k = &self.keygen;
        if !(k.raw_rate.is_finite() && k.raw_rate > 0.0) {
            return Err(Error::config("keygen.raw_rate", "must be positive"));
        }
        if let Some(p) = k.p_eve {
            if !(0.0..=0.5).contains(&p) {
                return Err(Error::config("keygen.p_eve", format!("{p} outside [0, 1/2]")));
            }
        }
        Ok(())
    }
}

/// Best-effort field name for a serde error.
fn json_field(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    for marker in ["unknown field `", "missing field `"] {
        if let Some(rest) = msg.split(marker).nth(1) {
            if let Some(name) = rest.split('`').next() {
                return name.to_string();
            }
        }
    }
    "<document>".to_string()
}
