//! Discrete hidden Markov model over the encoder's register states.
//!
//! States are register values (`N = 2^K`), observations are quantized code
//! symbols (`M = 2^P`). Parameters are estimated by counting over labelled
//! (observation, state) sequences, and decoding runs Viterbi in the log
//! domain with per-step normalization so arbitrarily long streams stay finite.

use crate::codec::Trellis;
use crate::viterbi::argmax_lowest;
use crate::{Error, Result};

/// Upper bound on `N`; state indices are stored in a byte during traceback.
pub const MAX_STATES: usize = 256;

/// Pseudo-count added to zero-count cells before normalizing.
pub const DEFAULT_SMOOTHING: f64 = 1e-6;

const STOCHASTIC_TOL: f64 = 1e-9;

/// `lambda = (A, B, pi)`, all row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    n: usize,
    m: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    pi: Vec<f64>,
}

impl HmmModel {
    pub fn new(n: usize, m: usize, a: Vec<f64>, b: Vec<f64>, pi: Vec<f64>) -> Result<Self> {
        if n == 0 || m == 0 || n > MAX_STATES {
            return Err(Error::Model(format!("unsupported HMM size N={n}, M={m}")));
        }
        if a.len() != n * n || b.len() != n * m || pi.len() != n {
            return Err(Error::Model("parameter shapes do not match N and M".into()));
        }
        let bad = |v: &f64| !(v.is_finite() && *v >= 0.0);
        if a.iter().chain(&b).chain(&pi).any(bad) {
            return Err(Error::Model(
                "probabilities must be finite and nonnegative".into(),
            ));
        }
        for (name, rows, w) in [("A", &a, n), ("B", &b, m)] {
            for (i, row) in rows.chunks_exact(w).enumerate() {
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(Error::Model(format!("row {i} of {name} sums to {s}")));
                }
            }
        }
        let s: f64 = pi.iter().sum();
        if (s - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::Model(format!("pi sums to {s}")));
        }
        Ok(Self { n, m, a, b, pi })
    }

    pub fn num_states(&self) -> usize {
        self.n
    }

    pub fn num_symbols(&self) -> usize {
        self.m
    }

    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn b(&self, j: usize, k: usize) -> f64 {
        self.b[j * self.m + k]
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn transitions(&self) -> &[f64] {
        &self.a
    }

    pub fn emissions(&self) -> &[f64] {
        &self.b
    }

    pub fn emission_row(&self, j: usize) -> &[f64] {
        &self.b[j * self.m..(j + 1) * self.m]
    }

    /// Stored real parameters: `N^2 + N M + N`.
    pub fn param_count(&self) -> usize {
        self.n * self.n + self.n * self.m + self.n
    }
}

/// How the first step of a decode is seeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialState {
    /// Use the trained state-frequency vector `pi`.
    Trained,
    /// The register is known to sit in this state *before* the first input,
    /// so the first hidden state is distributed as row `s` of `A`.
    #[default]
    Zero,
}

/// Counting estimator for `A`, `B` and `pi`.
#[derive(Debug, Clone)]
pub struct SupervisedTrainer {
    num_states: usize,
    num_symbols: usize,
    allowed: Option<Vec<bool>>,
    smoothing: f64,
    emission_prior: f64,
}

/// One labelled training sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingPair {
    pub observations: Vec<usize>,
    pub states: Vec<usize>,
}

impl SupervisedTrainer {
    pub fn new(num_states: usize, num_symbols: usize) -> Self {
        Self {
            num_states,
            num_symbols,
            allowed: None,
            smoothing: DEFAULT_SMOOTHING,
            emission_prior: 0.0,
        }
    }

    /// Trainer whose transition support is restricted to trellis edges.
    /// Forbidden transitions stay at exactly zero.
    pub fn for_trellis(trellis: &Trellis) -> Self {
        Self {
            num_states: trellis.num_states(),
            num_symbols: trellis.num_symbols(),
            allowed: Some(trellis.transition_mask()),
            smoothing: DEFAULT_SMOOTHING,
            emission_prior: 0.0,
        }
    }

    pub fn with_smoothing(mut self, delta: f64) -> Self {
        self.smoothing = delta;
        self
    }

    /// Adds `alpha` to every `B` count before normalizing (Lidstone
    /// estimate). Zero by default, i.e. plain maximum likelihood.
    pub fn with_emission_prior(mut self, alpha: f64) -> Self {
        self.emission_prior = alpha;
        self
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_symbols(&self) -> usize {
        self.num_symbols
    }

    /// Maximum-likelihood counts, normalized row-wise.
    ///
    /// `A` counts consecutive state pairs within each sequence, `B` counts
    /// (state, observation) co-occurrences, and `pi` is the frequency of each
    /// state over all labelled positions. `B` counts first get the emission
    /// prior; zero-count `B` cells and allowed zero-count `A` cells then
    /// receive the smoothing pseudo-count.
    pub fn train(&self, pairs: &[TrainingPair]) -> Result<HmmModel> {
        let (n, m) = (self.num_states, self.num_symbols);
        if pairs.iter().all(|p| p.states.is_empty()) {
            return Err(Error::Training("empty training set".into()));
        }
        let mut a = vec![0.0; n * n];
        let mut b = vec![0.0; n * m];
        let mut pi = vec![0.0; n];
        for pair in pairs {
            if pair.states.len() != pair.observations.len() {
                return Err(Error::Training(format!(
                    "{} states labelled against {} observations",
                    pair.states.len(),
                    pair.observations.len()
                )));
            }
            for (&s, &o) in pair.states.iter().zip(&pair.observations) {
                if s >= n || o >= m {
                    return Err(Error::Training(format!("label ({s}, {o}) out of range")));
                }
                b[s * m + o] += 1.0;
                pi[s] += 1.0;
            }
            for w in pair.states.windows(2) {
                a[w[0] * n + w[1]] += 1.0;
            }
        }
        for i in 0..n {
            let row = &mut a[i * n..(i + 1) * n];
            for (j, cell) in row.iter_mut().enumerate() {
                let allowed = self.allowed.as_ref().is_none_or(|mask| mask[i * n + j]);
                if !allowed {
                    *cell = 0.0;
                } else if *cell == 0.0 {
                    *cell = self.smoothing;
                }
            }
            normalize(row);
            let row = &mut b[i * m..(i + 1) * m];
            row.iter_mut().for_each(|c| *c += self.emission_prior);
            row.iter_mut()
                .filter(|c| **c == 0.0)
                .for_each(|c| *c = self.smoothing);
            normalize(row);
        }
        normalize(&mut pi);
        HmmModel::new(n, m, a, b, pi)
    }
}

fn normalize(row: &mut [f64]) {
    let s: f64 = row.iter().sum();
    if s > 0.0 {
        row.iter_mut().for_each(|v| *v /= s);
    } else {
        let u = 1.0 / row.len() as f64;
        row.iter_mut().for_each(|v| *v = u);
    }
}

/// Log-domain Viterbi over an arbitrary (sparse) transition matrix.
///
/// Shared by the discrete and the soft-input HMM decoders; the caller supplies
/// the per-step log emission vector.
#[derive(Debug, Clone)]
pub(crate) struct LogViterbi {
    n: usize,
    // incoming[j] = (i, ln a_ij) for every a_ij > 0, ascending in i
    incoming: Vec<Vec<(usize, f64)>>,
    log_init: Vec<f64>,
}

impl LogViterbi {
    pub(crate) fn new(model: &HmmModel, init: InitialState) -> Self {
        let n = model.num_states();
        let incoming = (0..n)
            .map(|j| {
                (0..n)
                    .filter(|&i| model.a(i, j) > 0.0)
                    .map(|i| (i, model.a(i, j).ln()))
                    .collect()
            })
            .collect();
        let log_init = match init {
            InitialState::Trained => model.pi().iter().map(|p| ln0(*p)).collect(),
            InitialState::Zero => (0..n).map(|j| ln0(model.a(0, j))).collect(),
        };
        Self {
            n,
            incoming,
            log_init,
        }
    }

    /// `emit(t, out)` must fill `out[j] = ln P(o_t | state j)`.
    pub(crate) fn run(&self, steps: usize, mut emit: impl FnMut(usize, &mut [f64])) -> Vec<usize> {
        let n = self.n;
        if steps == 0 {
            return Vec::new();
        }
        let mut em = vec![0.0; n];
        let mut delta = vec![0.0; n];
        let mut next = vec![0.0; n];
        let mut back: Vec<u8> = vec![0; steps * n];
        emit(0, &mut em);
        for j in 0..n {
            delta[j] = self.log_init[j] + em[j];
        }
        normalize_log(&mut delta);
        for t in 1..steps {
            emit(t, &mut em);
            let row = &mut back[t * n..(t + 1) * n];
            for j in 0..n {
                let mut best = f64::NEG_INFINITY;
                let mut arg = self.incoming[j].first().map_or(0, |e| e.0);
                for &(i, la) in &self.incoming[j] {
                    let v = delta[i] + la;
                    if v > best {
                        best = v;
                        arg = i;
                    }
                }
                next[j] = best + em[j];
                row[j] = arg as u8;
            }
            normalize_log(&mut next);
            std::mem::swap(&mut delta, &mut next);
        }
        let mut path = vec![0usize; steps];
        let mut state = argmax_lowest(&delta);
        for t in (0..steps).rev() {
            path[t] = state;
            state = back[t * n + state] as usize;
        }
        path
    }
}

fn ln0(p: f64) -> f64 {
    if p > 0.0 {
        p.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Shifts finite entries so the maximum is zero; `-inf` entries stay `-inf`.
fn normalize_log(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_finite() {
        v.iter_mut().for_each(|x| *x -= max);
    }
}

/// Most probable state path for a symbol stream, seeded by the trained `pi`.
pub fn decode(model: &HmmModel, observations: &[usize]) -> Result<Vec<usize>> {
    decode_with(model, observations, InitialState::Trained)
}

/// Most probable state path with an explicit start rule.
pub fn decode_with(
    model: &HmmModel,
    observations: &[usize],
    init: InitialState,
) -> Result<Vec<usize>> {
    let m = model.num_symbols();
    if let Some(&bad) = observations.iter().find(|&&o| o >= m) {
        return Err(Error::Framing(format!("observation {bad} outside 0..{m}")));
    }
    let n = model.num_states();
    let log_b: Vec<f64> = model.emissions().iter().map(|&p| ln0(p)).collect();
    let engine = LogViterbi::new(model, init);
    Ok(engine.run(observations.len(), |t, out| {
        let o = observations[t];
        for (j, slot) in out.iter_mut().enumerate().take(n) {
            *slot = log_b[j * m + o];
        }
    }))
}

/// Joint log-probability `ln P(O, I | lambda)` of a given path.
pub fn path_log_probability(
    model: &HmmModel,
    init: InitialState,
    observations: &[usize],
    path: &[usize],
) -> f64 {
    if path.is_empty() {
        return 0.0;
    }
    let first = match init {
        InitialState::Trained => model.pi()[path[0]],
        InitialState::Zero => model.a(0, path[0]),
    };
    let mut lp = ln0(first) + ln0(model.b(path[0], observations[0]));
    for t in 1..path.len() {
        lp += ln0(model.a(path[t - 1], path[t])) + ln0(model.b(path[t], observations[t]));
    }
    lp
}
