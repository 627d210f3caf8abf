//! Soft-input decoding on top of the discrete HMM.
//!
//! Three emission rules are available:
//!
//! * `Bridge` keeps the discrete observation matrix and marginalizes it
//!   against the demodulator output: the likelihood of discrete symbol `v`
//!   under soft input `p` is the Bernoulli product
//!   `prod_n p_n^{y_n} (1 - p_n)^{1 - y_n}` (often loosely called the
//!   "cross-entropy" of `v` and `p`), and state `j` emits
//!   `sum_v b_jv * that`. With hard 0/1 input this collapses to `b_{j, v}`.
//! * `GmmPerState` replaces row `j` of the observation matrix with a Gaussian
//!   mixture fitted to the raw channel samples seen in state `j`.
//! * `GmmPerSymbol` fits one mixture per transmitted symbol and mixes them
//!   with the rows of the observation matrix.
//!
//! The bridge consumes demodulator probabilities; the mixture rules consume
//! raw channel samples grouped per symbol, see [`EmissionMode::input`].

use rand::Rng;

use crate::codec::Trellis;
use crate::gmm::{self, moments, EmConfig, GmmModel};
use crate::hmm::{HmmModel, InitialState, LogViterbi, SupervisedTrainer, TrainingPair};
use crate::viterbi::PROB_EPS;
use crate::{Bit, Error, Frames, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum EmissionMode {
    Bridge,
    #[default]
    GmmPerState,
    GmmPerSymbol,
}

/// What a soft model expects as decoder input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoftInput {
    /// `P(bit = 1)` per coded bit, from the soft demodulator.
    Probabilities,
    /// Raw channel samples.
    Samples,
}

impl EmissionMode {
    pub fn input(self) -> SoftInput {
        match self {
            EmissionMode::Bridge => SoftInput::Probabilities,
            _ => SoftInput::Samples,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EmissionMode::Bridge => "bridge",
            EmissionMode::GmmPerState => "gmm_state",
            EmissionMode::GmmPerSymbol => "gmm_symbol",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "bridge" | "cross_entropy_bridge" => Ok(EmissionMode::Bridge),
            "gmm_state" | "gmm_per_state" => Ok(EmissionMode::GmmPerState),
            "gmm_symbol" | "gmm_per_symbol" => Ok(EmissionMode::GmmPerSymbol),
            other => Err(Error::Config(format!(
                "unknown soft emission mode '{other}'"
            ))),
        }
    }
}

/// Likelihood of the discrete symbol with bits `symbol` given per-bit
/// probabilities `soft`, each clamped to `[eps, 1 - eps]`.
pub fn bridge_likelihood(symbol: &[Bit], soft: &[f64]) -> f64 {
    symbol
        .iter()
        .zip(soft)
        .map(|(&y, &p)| {
            let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
            if y == 1 {
                p
            } else {
                1.0 - p
            }
        })
        .product()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftHmmModel {
    base: HmmModel,
    mode: EmissionMode,
    gmms: Vec<GmmModel>,
    outputs: usize,
}

impl SoftHmmModel {
    pub fn new(base: HmmModel, mode: EmissionMode, gmms: Vec<GmmModel>) -> Result<Self> {
        let m = base.num_symbols();
        if !m.is_power_of_two() || m < 2 {
            return Err(Error::Model(format!("{m} symbols is not a power of two")));
        }
        let outputs = m.trailing_zeros() as usize;
        let expected = match mode {
            EmissionMode::Bridge => 0,
            EmissionMode::GmmPerState => base.num_states(),
            EmissionMode::GmmPerSymbol => m,
        };
        if gmms.len() != expected {
            return Err(Error::Model(format!(
                "{} mode needs {expected} mixtures, got {}",
                mode.name(),
                gmms.len()
            )));
        }
        if let Some(g) = gmms.iter().find(|g| g.dim() != outputs) {
            return Err(Error::Model(format!(
                "mixture of dimension {} for {outputs}-bit symbols",
                g.dim()
            )));
        }
        Ok(Self {
            base,
            mode,
            gmms,
            outputs,
        })
    }

    pub fn base(&self) -> &HmmModel {
        &self.base
    }

    pub fn mode(&self) -> EmissionMode {
        self.mode
    }

    pub fn gmms(&self) -> &[GmmModel] {
        &self.gmms
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn param_count(&self) -> usize {
        self.base.param_count() + self.gmms.iter().map(GmmModel::param_count).sum::<usize>()
    }

    /// Fills `out[j] = ln emission(j | frame)` for every state.
    fn log_emissions(&self, frame: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        let m = self.base.num_symbols();
        match self.mode {
            EmissionMode::GmmPerState => {
                for (j, slot) in out.iter_mut().enumerate() {
                    *slot = self.gmms[j].log_pdf(frame);
                }
            }
            EmissionMode::Bridge | EmissionMode::GmmPerSymbol => {
                let per_symbol = &mut scratch[..m];
                if self.mode == EmissionMode::Bridge {
                    bridge_log_table(frame, per_symbol);
                } else {
                    for (v, slot) in per_symbol.iter_mut().enumerate() {
                        *slot = self.gmms[v].log_pdf(frame);
                    }
                }
                let max = per_symbol.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if !max.is_finite() {
                    out.iter_mut().for_each(|o| *o = f64::NEG_INFINITY);
                    return;
                }
                per_symbol.iter_mut().for_each(|v| *v = (*v - max).exp());
                for (j, slot) in out.iter_mut().enumerate() {
                    let row = self.base.emission_row(j);
                    let s: f64 = row.iter().zip(per_symbol.iter()).map(|(b, w)| b * w).sum();
                    *slot = if s > 0.0 {
                        s.ln() + max
                    } else {
                        f64::NEG_INFINITY
                    };
                }
            }
        }
    }

    /// Emission density/probability of state `j` for one soft frame.
    pub fn soft_emission(&self, state: usize, frame: &[f64]) -> Result<f64> {
        if frame.len() != self.outputs {
            return Err(Error::Framing(format!(
                "frame of width {} for {}-bit symbols",
                frame.len(),
                self.outputs
            )));
        }
        let n = self.base.num_states();
        let mut scratch = vec![0.0; self.base.num_symbols()];
        let mut out = vec![0.0; n];
        self.log_emissions(frame, &mut scratch, &mut out);
        Ok(out[state].exp())
    }
}

fn bridge_log_table(frame: &[f64], out: &mut [f64]) {
    let p = frame.len();
    for (v, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (n, &q) in frame.iter().enumerate() {
            let q = q.clamp(PROB_EPS, 1.0 - PROB_EPS);
            acc += if (v >> (p - 1 - n)) & 1 == 1 {
                q.ln()
            } else {
                (1.0 - q).ln()
            };
        }
        *slot = acc;
    }
}

/// Log-Viterbi state path with soft emissions.
pub fn decode_soft_states(
    model: &SoftHmmModel,
    frames: &Frames,
    init: InitialState,
) -> Result<Vec<usize>> {
    if frames.dim() != model.outputs {
        return Err(Error::Framing(format!(
            "frames of width {} for {}-bit symbols",
            frames.dim(),
            model.outputs
        )));
    }
    let engine = LogViterbi::new(&model.base, init);
    let mut scratch = vec![0.0; model.base.num_symbols()];
    Ok(engine.run(frames.len(), |t, out| {
        model.log_emissions(frames.frame(t), &mut scratch, out)
    }))
}

/// Soft decode straight to data bits.
pub fn decode_soft(
    model: &SoftHmmModel,
    trellis: &Trellis,
    frames: &Frames,
    init: InitialState,
) -> Result<Vec<Bit>> {
    let states = decode_soft_states(model, frames, init)?;
    Ok(trellis.states_to_bits(&states))
}

/// One labelled stream for soft training.
#[derive(Debug, Clone)]
pub struct SoftTrainingSequence {
    pub states: Vec<usize>,
    /// Hard-demodulated symbol indices, for the discrete observation matrix.
    pub hard_symbols: Vec<usize>,
    /// Raw channel samples grouped per symbol, for the mixture modes.
    pub samples: Frames,
}

/// Trains the discrete HMM and, in mixture modes, one GMM per partition.
pub fn train_soft<R: Rng + ?Sized>(
    trainer: &SupervisedTrainer,
    trellis: &Trellis,
    data: &[SoftTrainingSequence],
    mode: EmissionMode,
    q: usize,
    em: EmConfig,
    rng: &mut R,
) -> Result<SoftHmmModel> {
    let pairs: Vec<TrainingPair> = data
        .iter()
        .map(|d| TrainingPair {
            observations: d.hard_symbols.clone(),
            states: d.states.clone(),
        })
        .collect();
    let base = trainer.train(&pairs)?;
    if mode == EmissionMode::Bridge {
        return SoftHmmModel::new(base, mode, Vec::new());
    }
    if q == 0 {
        return Err(Error::Config("mixture count must be positive".into()));
    }
    let p = trellis.outputs();
    let categories = match mode {
        EmissionMode::GmmPerState => trellis.num_states(),
        _ => trellis.num_symbols(),
    };
    let category_of = |state: usize| match mode {
        EmissionMode::GmmPerState => state,
        _ => trellis.output_symbol(state),
    };
    let mut buckets: Vec<Frames> = (0..categories).map(|_| Frames::empty(p)).collect();
    let mut pooled = Frames::empty(p);
    for d in data {
        if d.samples.len() != d.states.len() || d.samples.dim() != p {
            return Err(Error::Training(
                "sample frames do not line up with state labels".into(),
            ));
        }
        for (t, &s) in d.states.iter().enumerate() {
            buckets[category_of(s)].push(d.samples.frame(t));
            pooled.push(d.samples.frame(t));
        }
    }
    let (global_mean, global_var) = moments(&pooled);
    let mut gmms = Vec::with_capacity(categories);
    for (c, bucket) in buckets.iter().enumerate() {
        if bucket.is_empty() {
            log::debug!(
                "no training frames for {} category {c}; using a wide fallback Gaussian",
                mode.name()
            );
            gmms.push(GmmModel::gaussian(global_mean.clone(), global_var.clone())?);
            continue;
        }
        let k = q.min(bucket.len());
        gmms.push(gmm::fit(bucket, k, em, rng)?);
    }
    SoftHmmModel::new(base, mode, gmms)
}
