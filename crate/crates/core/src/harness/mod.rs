//! Experiment orchestration: labelled datasets, per-point training, BER
//! measurement, sweeps and CSV output.
//!
//! Every Eb/N0 point is self-contained. Its training stream, test stream and
//! mixture-initialization stream come from independent ChaCha8 streams keyed
//! by `(seed, Eb/N0, role)`, so a point measured alone by [`run_point`] gives
//! the same record as the same point inside [`run_sweep`], and sweeps are
//! byte-reproducible regardless of scheduling.

mod config;
pub mod recipes;

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{self, stream_rng, ChannelConfig};
use crate::codec::{encode, CodeSpec, Trellis};
use crate::demod::{group_symbols, hard_demod, soft_demod};
use crate::gmm::EmConfig;
use crate::hmm::{
    decode_with, HmmModel, InitialState, SupervisedTrainer, TrainingPair, DEFAULT_SMOOTHING,
};
use crate::soft::{
    decode_soft_states, train_soft, EmissionMode, SoftHmmModel, SoftInput, SoftTrainingSequence,
};
use crate::viterbi::{viterbi_hard, viterbi_soft};
use crate::{Bit, Error, Frames, Result};

pub use config::{parse_config, ConfigFile, DecoderEntry};

/// Exact CSV header of every BER table.
pub const CSV_HEADER: &str = "decoder,channel,ebn0_db,bits,errors,ber,seconds";

pub const DEFAULT_TRAIN_BITS: usize = 10_000;
pub const DEFAULT_TEST_BITS: usize = 1_000_000;
pub const DEFAULT_MIXTURES: usize = 2;
/// Add-one estimate for the observation matrix. 10^4 training bits leave
/// rare multi-bit error patterns unobserved; a vanishing pseudo-count makes
/// them near-impossible and puts an error floor under the hard decoder.
pub const DEFAULT_EMISSION_PRIOR: f64 = 1.0;

pub const ROLE_TRAIN: u64 = 1;
pub const ROLE_TEST: u64 = 2;
pub const ROLE_GMM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecoderKind {
    ViterbiHard,
    ViterbiSoft,
    HmmHard,
    HmmSoft(EmissionMode),
}

impl DecoderKind {
    pub fn name(self) -> String {
        match self {
            DecoderKind::ViterbiHard => "viterbi_hard".into(),
            DecoderKind::ViterbiSoft => "viterbi_soft".into(),
            DecoderKind::HmmHard => "hmm_hard".into(),
            DecoderKind::HmmSoft(m) => format!("hmm_soft_{}", m.name()),
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "viterbi_hard" => DecoderKind::ViterbiHard,
            "viterbi_soft" => DecoderKind::ViterbiSoft,
            "hmm_hard" => DecoderKind::HmmHard,
            "hmm_soft" => DecoderKind::HmmSoft(EmissionMode::default()),
            other => match other.strip_prefix("hmm_soft_") {
                Some(mode) => DecoderKind::HmmSoft(EmissionMode::parse(mode)?),
                None => return Err(Error::Config(format!("unknown decoder '{other}'"))),
            },
        })
    }

    pub fn is_soft(self) -> bool {
        matches!(self, DecoderKind::ViterbiSoft | DecoderKind::HmmSoft(_))
    }

    pub fn is_hmm(self) -> bool {
        matches!(self, DecoderKind::HmmHard | DecoderKind::HmmSoft(_))
    }
}

/// Channel shape shared by all points of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub taps: Vec<f64>,
    pub nonlinear: bool,
    pub label: String,
}

impl ChannelSpec {
    pub fn awgn() -> Self {
        Self {
            taps: vec![1.0],
            nonlinear: false,
            label: "awgn".into(),
        }
    }

    pub fn multipath(tau: f64, nonlinear: bool) -> Self {
        Self {
            taps: channel::multipath_taps(tau),
            nonlinear,
            label: format!("multipath_tau{tau}{}", if nonlinear { "_nl" } else { "" }),
        }
    }

    pub fn at(&self, ebn0_db: f64, seed: u64, rate: f64) -> Result<ChannelConfig> {
        ChannelConfig::new(self.taps.clone(), ebn0_db, self.nonlinear, seed, rate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub code: CodeSpec,
    pub channel: ChannelSpec,
    pub ebn0_grid: Vec<f64>,
    pub decoders: Vec<DecoderKind>,
    pub train_bits: usize,
    pub test_bits: usize,
    pub seed: u64,
    /// Pseudo-count for zero-count cells of the discrete HMM.
    pub smoothing: f64,
    /// Pseudo-count added to every observation-matrix cell.
    pub emission_prior: f64,
    /// Mixture components per GMM.
    pub mixtures: usize,
    pub em: EmConfig,
    pub start: InitialState,
    /// Train once at this Eb/N0 and reuse across the grid instead of
    /// retraining at every point.
    pub shared_training_ebn0: Option<f64>,
    /// Record wall-clock decode time in the CSV.
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(
        code: CodeSpec,
        channel: ChannelSpec,
        ebn0_grid: Vec<f64>,
        decoders: Vec<DecoderKind>,
    ) -> Self {
        Self {
            code,
            channel,
            ebn0_grid,
            decoders,
            train_bits: DEFAULT_TRAIN_BITS,
            test_bits: DEFAULT_TEST_BITS,
            seed: 0,
            smoothing: DEFAULT_SMOOTHING,
            emission_prior: DEFAULT_EMISSION_PRIOR,
            mixtures: DEFAULT_MIXTURES,
            em: EmConfig::default(),
            start: InitialState::Zero,
            shared_training_ebn0: None,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_bits == 0 || self.test_bits == 0 {
            return Err(Error::Config(
                "train_bits and test_bits must be positive".into(),
            ));
        }
        if self.ebn0_grid.is_empty() {
            return Err(Error::Config("Eb/N0 grid is empty".into()));
        }
        if self.ebn0_grid.iter().any(|e| e.is_nan()) {
            return Err(Error::Config("Eb/N0 grid contains NaN".into()));
        }
        if self.decoders.is_empty() {
            return Err(Error::Config("no decoders configured".into()));
        }
        if !(self.smoothing.is_finite() && self.smoothing > 0.0) {
            return Err(Error::Config("smoothing must be a positive number".into()));
        }
        if !(self.emission_prior.is_finite() && self.emission_prior >= 0.0) {
            return Err(Error::Config("emission_prior must be non-negative".into()));
        }
        if self.mixtures == 0 {
            return Err(Error::Config("mixture count must be positive".into()));
        }
        if self.channel.taps.is_empty() {
            return Err(Error::Config("channel needs at least one tap".into()));
        }
        Ok(())
    }
}

/// One measured (decoder, channel, Eb/N0) point.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub decoder: String,
    pub channel: String,
    pub ebn0_db: f64,
    pub bits_tested: usize,
    pub bit_errors: usize,
    pub ber: f64,
    pub wall_seconds: f64,
}

/// Full trace of one pass through the transmit chain.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub data_bits: Vec<Bit>,
    pub coded: Vec<Bit>,
    pub channel_out: Vec<f64>,
    /// Demodulator probabilities, one `P`-vector per data bit.
    pub softs: Frames,
    /// Raw channel samples, one `P`-vector per data bit.
    pub samples: Frames,
    pub hard_symbols: Vec<usize>,
    pub states: Vec<usize>,
    pub noise_variance: f64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream id for a given point and purpose.
pub fn point_stream(ebn0_db: f64, role: u64) -> u64 {
    // +0.0 folds -0.0 onto 0.0
    splitmix64((ebn0_db + 0.0).to_bits() ^ splitmix64(role))
}

/// Encodes `n_bits` uniform random bits and pushes them through the channel.
pub fn generate_dataset<R: Rng + ?Sized>(
    config: &ExperimentConfig,
    ebn0_db: f64,
    n_bits: usize,
    rng: &mut R,
) -> Result<Dataset> {
    let p = config.code.outputs();
    let ch = config
        .channel
        .at(ebn0_db, config.seed, config.code.rate())?;
    let data_bits: Vec<Bit> = (0..n_bits).map(|_| rng.random::<bool>() as Bit).collect();
    let enc = encode(&config.code, &data_bits);
    let channel_out = ch.transmit(&enc.coded, rng);
    let noise_variance = ch.noise_variance();
    // genie-aided demodulator variance; an infinite Eb/N0 hard-limits
    let demod_var = if noise_variance > 0.0 {
        noise_variance
    } else {
        f64::MIN_POSITIVE
    };
    let softs = soft_demod(&channel_out, demod_var, p)?;
    let samples = Frames::new(p, channel_out.clone())?;
    let hard_symbols = group_symbols(&hard_demod(&channel_out), p)?;
    Ok(Dataset {
        data_bits,
        coded: enc.coded,
        channel_out,
        softs,
        samples,
        hard_symbols,
        states: enc.states,
        noise_variance,
    })
}

/// Models trained for one operating point.
#[derive(Debug, Clone, Default)]
pub struct TrainedModels {
    pub hard: Option<HmmModel>,
    pub soft: Vec<SoftHmmModel>,
}

impl TrainedModels {
    pub fn soft_model(&self, mode: EmissionMode) -> Option<&SoftHmmModel> {
        self.soft.iter().find(|m| m.mode() == mode)
    }
}

/// Trains whatever the requested decoders need from one training stream.
pub fn train_models(
    config: &ExperimentConfig,
    decoders: &[DecoderKind],
    ebn0_db: f64,
) -> Result<TrainedModels> {
    let mut out = TrainedModels::default();
    if !decoders.iter().any(|d| d.is_hmm()) {
        return Ok(out);
    }
    let trellis = Trellis::new(&config.code);
    let trainer = SupervisedTrainer::for_trellis(&trellis)
        .with_smoothing(config.smoothing)
        .with_emission_prior(config.emission_prior);
    let mut rng = stream_rng(config.seed, point_stream(ebn0_db, ROLE_TRAIN));
    let train = generate_dataset(config, ebn0_db, config.train_bits, &mut rng)?;
    let hard = trainer.train(&[TrainingPair {
        observations: train.hard_symbols.clone(),
        states: train.states.clone(),
    }])?;
    let seq = SoftTrainingSequence {
        states: train.states.clone(),
        hard_symbols: train.hard_symbols.clone(),
        samples: train.samples.clone(),
    };
    let mut modes: Vec<EmissionMode> = Vec::new();
    for d in decoders {
        if let DecoderKind::HmmSoft(mode) = d {
            if !modes.contains(mode) {
                modes.push(*mode);
            }
        }
    }
    for mode in modes {
        let model = if mode == EmissionMode::Bridge {
            SoftHmmModel::new(hard.clone(), mode, Vec::new())?
        } else {
            let role = ROLE_GMM + mode as u64;
            let mut g_rng = stream_rng(config.seed, point_stream(ebn0_db, role));
            train_soft(
                &trainer,
                &trellis,
                std::slice::from_ref(&seq),
                mode,
                config.mixtures,
                config.em,
                &mut g_rng,
            )?
        };
        out.soft.push(model);
    }
    out.hard = Some(hard);
    Ok(out)
}

/// Decodes a dataset's channel output with one decoder.
pub fn decode_dataset(
    decoder: DecoderKind,
    trellis: &Trellis,
    models: &TrainedModels,
    data: &Dataset,
    start: InitialState,
) -> Result<Vec<Bit>> {
    match decoder {
        DecoderKind::ViterbiHard => viterbi_hard(trellis, &data.hard_symbols),
        DecoderKind::ViterbiSoft => viterbi_soft(trellis, &data.softs),
        DecoderKind::HmmHard => {
            let model = models
                .hard
                .as_ref()
                .ok_or_else(|| Error::Model("hard HMM not trained".into()))?;
            check_dims(model, trellis)?;
            Ok(trellis.states_to_bits(&decode_with(model, &data.hard_symbols, start)?))
        }
        DecoderKind::HmmSoft(mode) => {
            let model = models
                .soft_model(mode)
                .ok_or_else(|| Error::Model(format!("soft HMM ({}) not trained", mode.name())))?;
            check_dims(model.base(), trellis)?;
            let input = match mode.input() {
                SoftInput::Probabilities => &data.softs,
                SoftInput::Samples => &data.samples,
            };
            Ok(trellis.states_to_bits(&decode_soft_states(model, input, start)?))
        }
    }
}

fn check_dims(model: &HmmModel, trellis: &Trellis) -> Result<()> {
    if model.num_states() != trellis.num_states() || model.num_symbols() != trellis.num_symbols() {
        return Err(Error::Config(format!(
            "model is {}x{} but the code has {} states and {} symbols",
            model.num_states(),
            model.num_symbols(),
            trellis.num_states(),
            trellis.num_symbols()
        )));
    }
    Ok(())
}

fn count_errors(a: &[Bit], b: &[Bit]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

fn measure_point(
    config: &ExperimentConfig,
    decoders: &[DecoderKind],
    ebn0_db: f64,
) -> Result<Vec<BerRecord>> {
    let trellis = Trellis::new(&config.code);
    let train_at = config.shared_training_ebn0.unwrap_or(ebn0_db);
    let models = train_models(config, decoders, train_at)?;
    let mut rng = stream_rng(config.seed, point_stream(ebn0_db, ROLE_TEST));
    let test = generate_dataset(config, ebn0_db, config.test_bits, &mut rng)?;
    decoders
        .iter()
        .map(|&d| {
            let started = Instant::now();
            let decoded = decode_dataset(d, &trellis, &models, &test, config.start)?;
            let secs = started.elapsed().as_secs_f64();
            let errors = count_errors(&decoded, &test.data_bits);
            Ok(BerRecord {
                decoder: d.name(),
                channel: config.channel.label.clone(),
                ebn0_db,
                bits_tested: test.data_bits.len(),
                bit_errors: errors,
                ber: errors as f64 / test.data_bits.len() as f64,
                wall_seconds: secs,
            })
        })
        .collect()
}

/// Trains `decoder` at this point and measures its BER on a fresh test stream.
pub fn run_point(
    config: &ExperimentConfig,
    decoder: DecoderKind,
    ebn0_db: f64,
) -> Result<BerRecord> {
    config.validate()?;
    Ok(measure_point(config, &[decoder], ebn0_db)?.remove(0))
}

/// All decoders over the whole grid. Records are ordered by decoder (config
/// order), then by grid position.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<BerRecord>> {
    config.validate()?;
    let per_point: Vec<Vec<BerRecord>> = config
        .ebn0_grid
        .par_iter()
        .map(|&e| measure_point(config, &config.decoders, e))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(per_point.len() * config.decoders.len());
    for d in 0..config.decoders.len() {
        for point in &per_point {
            out.push(point[d].clone());
        }
    }
    Ok(out)
}

/// Parameter count of a decoder as trained for `config`.
pub fn param_count(decoder: DecoderKind, models: &TrainedModels) -> Option<usize> {
    match decoder {
        DecoderKind::ViterbiHard | DecoderKind::ViterbiSoft => Some(0),
        DecoderKind::HmmHard => models.hard.as_ref().map(HmmModel::param_count),
        DecoderKind::HmmSoft(mode) => models.soft_model(mode).map(SoftHmmModel::param_count),
    }
}

/// Renders records under [`CSV_HEADER`]. The `seconds` column is left empty
/// unless `timing` is set, so untimed tables are byte-reproducible.
pub fn to_csv(records: &[BerRecord], timing: bool) -> String {
    let mut out = String::new();
    writeln!(out, "{CSV_HEADER}").unwrap();
    for r in records {
        let secs = if timing {
            format!("{:.6}", r.wall_seconds)
        } else {
            String::new()
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.decoder, r.channel, r.ebn0_db, r.bits_tested, r.bit_errors, r.ber, secs
        )
        .unwrap();
    }
    out
}

pub fn write_csv(path: &Path, records: &[BerRecord], timing: bool) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, to_csv(records, timing))?;
    Ok(())
}

/// Parses a table written by [`to_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<BerRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: "missing BER table header".into(),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            let bad = |what: &str| Error::Parse {
                line: i + 1,
                msg: format!("bad {what}"),
            };
            if f.len() != 7 {
                return Err(bad("field count"));
            }
            Ok(BerRecord {
                decoder: f[0].to_string(),
                channel: f[1].to_string(),
                ebn0_db: f[2].parse().map_err(|_| bad("ebn0_db"))?,
                bits_tested: f[3].parse().map_err(|_| bad("bits"))?,
                bit_errors: f[4].parse().map_err(|_| bad("errors"))?,
                ber: f[5].parse().map_err(|_| bad("ber"))?,
                wall_seconds: if f[6].is_empty() {
                    0.0
                } else {
                    f[6].parse().map_err(|_| bad("seconds"))?
                },
            })
        })
        .collect()
}

/// Eb/N0 (dB) at which a BER curve crosses `target`, by linear interpolation
/// of `log10(BER)` between the bracketing grid points. `None` if the curve
/// never crosses, or if a zero-error point sits at the crossing.
pub fn ebn0_at_ber(curve: &[(f64, f64)], target: f64) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = curve.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in pts.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if y0 >= target && y1 <= target {
            if y1 <= 0.0 || y0 <= 0.0 {
                return None;
            }
            let (l0, l1, lt) = (y0.log10(), y1.log10(), target.log10());
            if l0 == l1 {
                return Some(x0);
            }
            return Some(x0 + (lt - l0) / (l1 - l0) * (x1 - x0));
        }
    }
    None
}

/// `(ebn0, ber)` pairs of one decoder in a record set.
pub fn curve(records: &[BerRecord], decoder: &str) -> Vec<(f64, f64)> {
    records
        .iter()
        .filter(|r| r.decoder == decoder)
        .map(|r| (r.ebn0_db, r.ber))
        .collect()
}
