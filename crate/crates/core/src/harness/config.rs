//! TOML experiment files.
//!
//! ```toml
//! seed = 42
//! train_bits = 10000
//! test_bits = 1000000
//! code = { K = 3, polys_octal = [7, 7, 5], rsc = false }
//! channel = { tau = 0.7, ebn0_db = [0, 1, 2, 3], nonlinear = false, seed = 42 }
//! decoder = { type = "hmm_soft", mode = "bridge", q = 2 }
//! # or several:
//! # decoders = [{ type = "viterbi_hard" }, { type = "hmm_hard" }]
//! ```
//!
//! A channel without `tau` or `taps` is plain AWGN.

use serde::Deserialize;

use super::{ChannelSpec, DecoderKind, ExperimentConfig};
use crate::codec::CodeSpec;
use crate::gmm::EmConfig;
use crate::hmm::InitialState;
use crate::soft::EmissionMode;
use crate::{Error, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub name: Option<String>,
    pub seed: Option<u64>,
    pub train_bits: Option<usize>,
    pub test_bits: Option<usize>,
    /// Pseudo-count for unseen HMM cells.
    pub smoothing: Option<f64>,
    /// Pseudo-count added to every observation-matrix cell.
    pub emission_prior: Option<f64>,
    /// `"zero"` (default) or `"trained"`.
    pub start: Option<String>,
    pub shared_training_ebn0_db: Option<f64>,
    pub timing: Option<bool>,
    pub code: CodeSection,
    pub channel: ChannelSection,
    pub decoder: Option<DecoderEntry>,
    pub decoders: Option<Vec<DecoderEntry>>,
    pub em: Option<EmSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSection {
    #[serde(rename = "K")]
    pub constraint_length: usize,
    pub polys_octal: Vec<u32>,
    #[serde(default)]
    pub rsc: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub tau: Option<f64>,
    pub taps: Option<Vec<f64>>,
    pub ebn0_db: Vec<f64>,
    #[serde(default)]
    pub nonlinear: bool,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoderEntry {
    #[serde(rename = "type")]
    pub kind: String,
    pub mode: Option<String>,
    pub q: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmSection {
    pub epochs: Option<usize>,
    pub tolerance: Option<f64>,
}

impl DecoderEntry {
    pub fn decoder(&self) -> Result<DecoderKind> {
        match (self.kind.as_str(), &self.mode) {
            ("hmm_soft", Some(mode)) => Ok(DecoderKind::HmmSoft(EmissionMode::parse(mode)?)),
            (_, Some(_)) => Err(Error::Config(format!(
                "'mode' only applies to hmm_soft, not {}",
                self.kind
            ))),
            (kind, None) => DecoderKind::parse(kind),
        }
    }
}

pub fn parse_config(text: &str) -> Result<ConfigFile> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

impl ConfigFile {
    pub fn decoder_entries(&self) -> Vec<DecoderEntry> {
        let mut v = self.decoders.clone().unwrap_or_default();
        if let Some(d) = &self.decoder {
            v.insert(0, d.clone());
        }
        v
    }

    pub fn code_spec(&self) -> Result<CodeSpec> {
        CodeSpec::from_octal(
            self.code.constraint_length,
            &self.code.polys_octal,
            self.code.rsc,
        )
    }

    pub fn channel_spec(&self) -> Result<ChannelSpec> {
        let c = &self.channel;
        match (c.tau, &c.taps) {
            (Some(_), Some(_)) => Err(Error::Config(
                "give either channel.tau or channel.taps, not both".into(),
            )),
            (Some(tau), None) => Ok(ChannelSpec::multipath(tau, c.nonlinear)),
            (None, Some(taps)) => {
                if taps.is_empty() {
                    return Err(Error::Config("channel.taps is empty".into()));
                }
                let label = if taps.as_slice() == [1.0] {
                    "awgn".to_string()
                } else {
                    "custom".to_string()
                };
                Ok(ChannelSpec {
                    taps: taps.clone(),
                    nonlinear: c.nonlinear,
                    label: if c.nonlinear {
                        format!("{label}_nl")
                    } else {
                        label
                    },
                })
            }
            (None, None) => {
                let mut s = ChannelSpec::awgn();
                s.nonlinear = c.nonlinear;
                if c.nonlinear {
                    s.label.push_str("_nl");
                }
                Ok(s)
            }
        }
    }

    /// Builds the experiment; `seed` overrides the file's seeds when given.
    pub fn experiment(
        &self,
        seed: Option<u64>,
        test_bits: Option<usize>,
    ) -> Result<ExperimentConfig> {
        let entries = self.decoder_entries();
        if entries.is_empty() {
            return Err(Error::Config("no decoder configured".into()));
        }
        let decoders = entries
            .iter()
            .map(DecoderEntry::decoder)
            .collect::<Result<Vec<_>>>()?;
        let mut cfg = ExperimentConfig::new(
            self.code_spec()?,
            self.channel_spec()?,
            self.channel.ebn0_db.clone(),
            decoders,
        );
        cfg.seed = seed.or(self.seed).or(self.channel.seed).unwrap_or(0);
        if let Some(b) = self.train_bits {
            cfg.train_bits = b;
        }
        if let Some(b) = test_bits.or(self.test_bits) {
            cfg.test_bits = b;
        }
        if let Some(d) = self.smoothing {
            cfg.smoothing = d;
        }
        if let Some(a) = self.emission_prior {
            cfg.emission_prior = a;
        }
        if let Some(q) = entries.iter().find_map(|e| e.q) {
            cfg.mixtures = q;
        }
        cfg.start = match self.start.as_deref() {
            None | Some("zero") => InitialState::Zero,
            Some("trained") => InitialState::Trained,
            Some(other) => return Err(Error::Config(format!("unknown start '{other}'"))),
        };
        cfg.shared_training_ebn0 = self.shared_training_ebn0_db;
        cfg.timing = self.timing.unwrap_or(false);
        if let Some(em) = &self.em {
            let d = EmConfig::default();
            cfg.em = EmConfig {
                epochs: em.epochs.unwrap_or(d.epochs),
                tolerance: em.tolerance.unwrap_or(d.tolerance),
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
