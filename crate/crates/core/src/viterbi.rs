//! Conventional trellis Viterbi decoder, used as the comparison baseline.
//!
//! The decoder knows the code and nothing about the channel: hard input is
//! scored by Hamming distance, soft input by the Bernoulli log-likelihood of
//! the expected code bits. Decoding starts in the all-zero state, leaves the
//! end state free, and traces back over the full stream. Ties go to the
//! lowest-numbered predecessor (and the lowest-numbered final state).

use crate::codec::Trellis;
use crate::{Bit, Error, Frames, Result};

/// Probability clamp for soft metrics.
pub const PROB_EPS: f64 = 1e-12;

/// Path metric and survivor decisions for one stream.
#[derive(Debug, Clone)]
pub struct PathMetricState {
    metrics: Vec<f64>,
    // decisions[t * n + s] = index (0/1) of the surviving predecessor
    decisions: Vec<u8>,
    steps: usize,
}

impl PathMetricState {
    fn new(num_states: usize, capacity: usize) -> Self {
        let mut metrics = vec![f64::NEG_INFINITY; num_states];
        metrics[0] = 0.0;
        Self {
            metrics,
            decisions: Vec::with_capacity(capacity * num_states),
            steps: 0,
        }
    }

    /// Current metrics, normalized so that the best state is at zero.
    pub fn metrics(&self) -> &[f64] {
        &self.metrics
    }

    fn step(&mut self, trellis: &Trellis, branch: impl Fn(usize) -> f64) {
        let n = trellis.num_states();
        let mut next = vec![f64::NEG_INFINITY; n];
        for (s, slot) in next.iter_mut().enumerate() {
            let [p0, p1] = trellis.predecessors(s);
            let (m0, m1) = (self.metrics[p0], self.metrics[p1]);
            let (best, pick) = if m1 > m0 { (m1, 1u8) } else { (m0, 0u8) };
            self.decisions.push(pick);
            if best > f64::NEG_INFINITY {
                *slot = best + branch(s);
            }
        }
        let max = next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max.is_finite() {
            next.iter_mut().for_each(|m| *m -= max);
        }
        self.metrics = next;
        self.steps += 1;
    }

    fn traceback(&self, trellis: &Trellis) -> Vec<usize> {
        let n = trellis.num_states();
        let mut path = vec![0usize; self.steps];
        if self.steps == 0 {
            return path;
        }
        let mut state = argmax_lowest(&self.metrics);
        for t in (0..self.steps).rev() {
            path[t] = state;
            let pick = self.decisions[t * n + state] as usize;
            state = trellis.predecessors(state)[pick];
        }
        path
    }
}

pub(crate) fn argmax_lowest(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Runs the trellis recursion with `branch(t, state)` scoring the symbol
/// expected on entry to `state` at step `t`. Returns the state path.
pub fn decode_path(
    trellis: &Trellis,
    steps: usize,
    branch: impl Fn(usize, usize) -> f64,
) -> Vec<usize> {
    let mut pm = PathMetricState::new(trellis.num_states(), steps);
    for t in 0..steps {
        pm.step(trellis, |s| branch(t, s));
    }
    pm.traceback(trellis)
}

/// Hamming-distance Viterbi over quantized symbol indices.
pub fn viterbi_hard(trellis: &Trellis, symbols: &[usize]) -> Result<Vec<Bit>> {
    let m = trellis.num_symbols();
    if let Some(&bad) = symbols.iter().find(|&&s| s >= m) {
        return Err(Error::Framing(format!("symbol {bad} outside 0..{m}")));
    }
    let path = decode_path(trellis, symbols.len(), |t, s| {
        -f64::from((symbols[t] ^ trellis.output_symbol(s)).count_ones())
    });
    Ok(trellis.states_to_bits(&path))
}

/// Per-symbol table of Bernoulli log-likelihoods, `table[t * M + v]`.
pub(crate) fn symbol_log_likelihoods(softs: &Frames) -> Vec<f64> {
    let p = softs.dim();
    let m = 1usize << p;
    let mut table = Vec::with_capacity(softs.len() * m);
    let mut l1 = vec![0.0; p];
    let mut l0 = vec![0.0; p];
    for frame in softs.iter() {
        for (n, &q) in frame.iter().enumerate() {
            let q = q.clamp(PROB_EPS, 1.0 - PROB_EPS);
            l1[n] = q.ln();
            l0[n] = (1.0 - q).ln();
        }
        for v in 0..m {
            let mut acc = 0.0;
            for n in 0..p {
                acc += if (v >> (p - 1 - n)) & 1 == 1 {
                    l1[n]
                } else {
                    l0[n]
                };
            }
            table.push(acc);
        }
    }
    table
}

/// Soft-input Viterbi. Each frame holds `P(bit = 1)` per coded bit; the branch
/// metric is `sum_n y_n ln p_n + (1 - y_n) ln(1 - p_n)`.
pub fn viterbi_soft(trellis: &Trellis, softs: &Frames) -> Result<Vec<Bit>> {
    if softs.dim() != trellis.outputs() {
        return Err(Error::Framing(format!(
            "soft frames of width {} for a code with {} outputs",
            softs.dim(),
            trellis.outputs()
        )));
    }
    let m = trellis.num_symbols();
    let table = symbol_log_likelihoods(softs);
    let path = decode_path(trellis, softs.len(), |t, s| {
        table[t * m + trellis.output_symbol(s)]
    });
    Ok(trellis.states_to_bits(&path))
}
