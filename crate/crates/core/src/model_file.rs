//! Line-oriented text format for trained decoders.
//!
//! ```text
//! HMM N M
//! <N lines: rows of A>
//! <N lines: rows of B>
//! <1 line: pi>
//! GMM Q D                      (zero or more mixture blocks)
//! <Q lines: alpha mu_1..mu_D var_1..var_D>
//! SOFT <bridge|gmm_state|gmm_symbol>   (soft models only)
//! CODE <K> <rsc 0|1> <octal polys...>  (optional)
//! NOISE_VAR <sigma^2>                  (optional)
//! START <zero|trained>                 (optional)
//! ```
//!
//! Reals are written in scientific notation with 17 significant digits, which
//! is enough for every `f64` to parse back to the identical bit pattern.

use std::fmt::Write as _;

use crate::codec::{CodeSpec, Trellis};
use crate::demod::{group_symbols, hard_demod, soft_demod};
use crate::gmm::GmmModel;
use crate::hmm::{decode_with, HmmModel, InitialState};
use crate::soft::{decode_soft_states, EmissionMode, SoftHmmModel, SoftInput};
use crate::{Bit, Error, Frames, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub hmm: HmmModel,
    pub gmms: Vec<GmmModel>,
    pub mode: Option<EmissionMode>,
    pub code: Option<CodeSpec>,
    pub noise_variance: Option<f64>,
    pub start: Option<InitialState>,
}

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn row(values: &[f64]) -> String {
    values
        .iter()
        .map(|&v| real(v))
        .collect::<Vec<_>>()
        .join(" ")
}

impl ModelFile {
    pub fn hard(hmm: HmmModel) -> Self {
        Self {
            hmm,
            gmms: Vec::new(),
            mode: None,
            code: None,
            noise_variance: None,
            start: None,
        }
    }

    pub fn soft(model: &SoftHmmModel) -> Self {
        Self {
            hmm: model.base().clone(),
            gmms: model.gmms().to_vec(),
            mode: Some(model.mode()),
            code: None,
            noise_variance: None,
            start: None,
        }
    }

    pub fn soft_model(&self) -> Result<Option<SoftHmmModel>> {
        match self.mode {
            None => Ok(None),
            Some(mode) => SoftHmmModel::new(self.hmm.clone(), mode, self.gmms.clone()).map(Some),
        }
    }

    /// Decodes raw channel samples to data bits. Needs a `CODE` line, and a
    /// noise variance (from the file or `noise_variance`) for the bridge mode.
    pub fn decode_samples(&self, samples: &[f64], noise_variance: Option<f64>) -> Result<Vec<Bit>> {
        let code = self.code.as_ref().ok_or_else(|| {
            Error::Model("model file has no CODE line; cannot map states to bits".into())
        })?;
        let trellis = Trellis::new(code);
        let p = code.outputs();
        let start = self.start.unwrap_or_default();
        let states = match self.soft_model()? {
            None => decode_with(&self.hmm, &group_symbols(&hard_demod(samples), p)?, start)?,
            Some(model) => {
                let frames = match model.mode().input() {
                    SoftInput::Samples => Frames::new(p, samples.to_vec())?,
                    SoftInput::Probabilities => {
                        let var = noise_variance.or(self.noise_variance).ok_or_else(|| {
                            Error::Config("bridge decoding needs a noise variance (NOISE_VAR line or override)".into())
                        })?;
                        soft_demod(samples, var, p)?
                    }
                };
                decode_soft_states(&model, &frames, start)?
            }
        };
        Ok(trellis.states_to_bits(&states))
    }

    pub fn to_text(&self) -> String {
        let (n, m) = (self.hmm.num_states(), self.hmm.num_symbols());
        let mut out = String::new();
        writeln!(out, "HMM {n} {m}").unwrap();
        for r in self.hmm.transitions().chunks_exact(n) {
            writeln!(out, "{}", row(r)).unwrap();
        }
        for r in self.hmm.emissions().chunks_exact(m) {
            writeln!(out, "{}", row(r)).unwrap();
        }
        writeln!(out, "{}", row(self.hmm.pi())).unwrap();
        for g in &self.gmms {
            writeln!(out, "GMM {} {}", g.components(), g.dim()).unwrap();
            for k in 0..g.components() {
                let mut line = vec![g.weights()[k]];
                line.extend_from_slice(g.mean(k));
                line.extend_from_slice(g.variance(k));
                writeln!(out, "{}", row(&line)).unwrap();
            }
        }
        if let Some(mode) = self.mode {
            writeln!(out, "SOFT {}", mode.name()).unwrap();
        }
        if let Some(code) = &self.code {
            let polys: Vec<String> = code.polys_octal().iter().map(u32::to_string).collect();
            writeln!(
                out,
                "CODE {} {} {}",
                code.constraint_length(),
                code.is_recursive() as u8,
                polys.join(" ")
            )
            .unwrap();
        }
        if let Some(v) = self.noise_variance {
            writeln!(out, "NOISE_VAR {}", real(v)).unwrap();
        }
        if let Some(s) = self.start {
            let name = match s {
                InitialState::Zero => "zero",
                InitialState::Trained => "trained",
            };
            writeln!(out, "START {name}").unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (ln, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty model file".into(),
        })?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 3 || head[0] != "HMM" {
            return Err(Error::Parse {
                line: ln,
                msg: "expected 'HMM N M'".into(),
            });
        }
        let n = parse_usize(head[1], ln)?;
        let m = parse_usize(head[2], ln)?;
        let mut take_row = |width: usize| -> Result<Vec<f64>> {
            let (ln, l) = lines.next().ok_or(Error::Parse {
                line: 0,
                msg: "truncated model file".into(),
            })?;
            let v = parse_reals(l, ln)?;
            if v.len() != width {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("expected {width} values, got {}", v.len()),
                });
            }
            Ok(v)
        };
        let mut a = Vec::with_capacity(n * n);
        for _ in 0..n {
            a.extend(take_row(n)?);
        }
        let mut b = Vec::with_capacity(n * m);
        for _ in 0..n {
            b.extend(take_row(m)?);
        }
        let pi = take_row(n)?;
        let hmm = HmmModel::new(n, m, a, b, pi)?;
        let mut file = ModelFile::hard(hmm);

        while let Some((ln, l)) = lines.next() {
            let parts: Vec<&str> = l.split_whitespace().collect();
            match parts[0] {
                "GMM" if parts.len() == 3 => {
                    let q = parse_usize(parts[1], ln)?;
                    let d = parse_usize(parts[2], ln)?;
                    let (mut w, mut mu, mut var) = (Vec::new(), Vec::new(), Vec::new());
                    for _ in 0..q {
                        let (ln, l) = lines.next().ok_or(Error::Parse {
                            line: ln,
                            msg: "truncated mixture".into(),
                        })?;
                        let v = parse_reals(l, ln)?;
                        if v.len() != 1 + 2 * d {
                            return Err(Error::Parse {
                                line: ln,
                                msg: "bad mixture component line".into(),
                            });
                        }
                        w.push(v[0]);
                        mu.extend_from_slice(&v[1..1 + d]);
                        var.extend_from_slice(&v[1 + d..]);
                    }
                    file.gmms.push(GmmModel::new(d, w, mu, var)?);
                }
                "SOFT" if parts.len() == 2 => file.mode = Some(EmissionMode::parse(parts[1])?),
                "CODE" if parts.len() >= 4 => {
                    let k = parse_usize(parts[1], ln)?;
                    let rsc = parts[2] == "1";
                    let polys = parts[3..]
                        .iter()
                        .map(|p| {
                            p.parse::<u32>().map_err(|e| Error::Parse {
                                line: ln,
                                msg: e.to_string(),
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    file.code = Some(CodeSpec::from_octal(k, &polys, rsc)?);
                }
                "NOISE_VAR" if parts.len() == 2 => {
                    file.noise_variance = Some(parse_reals(parts[1], ln)?[0]);
                }
                "START" if parts.len() == 2 => {
                    file.start = Some(match parts[1] {
                        "zero" => InitialState::Zero,
                        "trained" => InitialState::Trained,
                        other => {
                            return Err(Error::Parse {
                                line: ln,
                                msg: format!("unknown start '{other}'"),
                            })
                        }
                    });
                }
                _ => {
                    return Err(Error::Parse {
                        line: ln,
                        msg: format!("unexpected line '{l}'"),
                    })
                }
            }
        }
        if let Some(code) = &file.code {
            if code.num_states() != n || code.num_symbols() != m {
                return Err(Error::Config(
                    "CODE line does not match HMM dimensions".into(),
                ));
            }
        }
        if !file.gmms.is_empty() && file.mode.is_none() {
            return Err(Error::Model(
                "mixture blocks without a SOFT mode line".into(),
            ));
        }
        file.soft_model()?;
        Ok(file)
    }
}

fn parse_usize(s: &str, line: usize) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("'{s}' is not a count"),
    })
}

fn parse_reals(l: &str, line: usize) -> Result<Vec<f64>> {
    l.split_whitespace()
        .map(|t| {
            t.parse::<f64>().map_err(|_| Error::Parse {
                line,
                msg: format!("'{t}' is not a number"),
            })
        })
        .collect()
}
