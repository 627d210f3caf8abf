//! Rate-1/P convolutional codes: description, trellis tables and encoders.
//!
//! Bit-order convention used everywhere in this crate:
//!
//! * The register holds `K` bits. The newest bit sits in the most significant
//!   position, so after absorbing input `u` the register becomes
//!   `(u << (K-1)) | (previous >> 1)`.
//! * Generator polynomials are read MSB-first: the MSB taps the newest bit.
//!   The usual octal `[7, 5]` therefore means `y1 = u_t ^ u_{t-1} ^ u_{t-2}`
//!   and `y2 = u_t ^ u_{t-2}`.
//! * A code symbol `(y_1, .., y_P)` is quantized to the integer whose MSB is
//!   `y_1`; a register value is its own state index.
//! * The symbol at step `t` is emitted by the register *after* it absorbed
//!   input `t`, so it is a pure function of the state.
//!
//! For recursive systematic codes the register holds feedback-updated bits
//! `w_t = u_t ^ <feedback taps on w_{t-1}..w_{t-K+1}>`. The first polynomial
//! is the feedback polynomial, the first output is the systematic bit `u_t`,
//! and the remaining outputs are forward polynomials applied to the register.
//! Because `u_t` is recoverable from the register itself, every code this
//! module builds emits from the state alone.

use crate::{Bit, Error, Result};

/// Largest supported register length. Keeps state indices within a byte.
pub const MAX_CONSTRAINT_LENGTH: usize = 8;
/// Largest supported number of generator polynomials.
pub const MAX_OUTPUTS: usize = 8;

/// A `(P, 1, K)` convolutional code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSpec {
    constraint_length: usize,
    polys: Vec<u32>,
    recursive_systematic: bool,
}

/// Interprets the decimal digits of `value` as octal digits (`15` -> `0o15`).
pub fn octal_digits(value: u32) -> Result<u32> {
    let mut rest = value;
    let mut out = 0u32;
    let mut scale = 1u32;
    loop {
        let digit = rest % 10;
        if digit > 7 {
            return Err(Error::Config(format!("{value} is not an octal literal")));
        }
        out += digit * scale;
        rest /= 10;
        if rest == 0 {
            return Ok(out);
        }
        scale *= 8;
    }
}

impl CodeSpec {
    /// Builds a code from binary-valued polynomial tap masks.
    pub fn new(
        constraint_length: usize,
        polys: Vec<u32>,
        recursive_systematic: bool,
    ) -> Result<Self> {
        let k = constraint_length;
        if k == 0 || k > MAX_CONSTRAINT_LENGTH {
            return Err(Error::Config(format!(
                "constraint length {k} outside 1..={MAX_CONSTRAINT_LENGTH}"
            )));
        }
        if polys.len() < 2 || polys.len() > MAX_OUTPUTS {
            return Err(Error::Config(format!(
                "need between 2 and {MAX_OUTPUTS} generator polynomials, got {}",
                polys.len()
            )));
        }
        let limit = 1u32 << k;
        if let Some(p) = polys.iter().find(|&&p| p >= limit) {
            return Err(Error::Config(format!(
                "polynomial {p:o} (octal) wider than K = {k}"
            )));
        }
        let top = 1u32 << (k - 1);
        if !polys.iter().any(|p| p & top != 0) {
            return Err(Error::Config(
                "no polynomial taps the newest register stage".into(),
            ));
        }
        if recursive_systematic && polys[0] & top == 0 {
            return Err(Error::Config(
                "feedback polynomial must have its leading tap set".into(),
            ));
        }
        Ok(Self {
            constraint_length: k,
            polys,
            recursive_systematic,
        })
    }

    /// Builds a code from octal-notation polynomials such as `[7, 7, 5]`.
    pub fn from_octal(
        constraint_length: usize,
        polys_octal: &[u32],
        recursive_systematic: bool,
    ) -> Result<Self> {
        let polys = polys_octal
            .iter()
            .map(|&p| octal_digits(p))
            .collect::<Result<Vec<_>>>()?;
        Self::new(constraint_length, polys, recursive_systematic)
    }

    pub fn constraint_length(&self) -> usize {
        self.constraint_length
    }

    /// Tap masks, binary valued.
    pub fn polys(&self) -> &[u32] {
        &self.polys
    }

    /// Polynomials rendered back in octal digits, e.g. `[7, 5]`.
    pub fn polys_octal(&self) -> Vec<u32> {
        self.polys
            .iter()
            .map(|p| {
                format!("{p:o}")
                    .parse()
                    .expect("octal rendering is numeric")
            })
            .collect()
    }

    pub fn is_recursive(&self) -> bool {
        self.recursive_systematic
    }

    /// Number of coded bits per input bit (`P`).
    pub fn outputs(&self) -> usize {
        self.polys.len()
    }

    pub fn rate(&self) -> f64 {
        1.0 / self.polys.len() as f64
    }

    pub fn num_states(&self) -> usize {
        1 << self.constraint_length
    }

    pub fn num_symbols(&self) -> usize {
        1 << self.polys.len()
    }

    /// Short human-readable label, e.g. `conv(3,1,3)[7,7,5]`.
    pub fn label(&self) -> String {
        let polys: Vec<String> = self.polys.iter().map(|p| format!("{p:o}")).collect();
        format!(
            "{}({},1,{})[{}]",
            if self.recursive_systematic {
                "rsc"
            } else {
                "conv"
            },
            self.outputs(),
            self.constraint_length,
            polys.join(",")
        )
    }

    fn low_mask(&self) -> u32 {
        (1u32 << (self.constraint_length - 1)) - 1
    }

    /// Input bit that drives the register into `state`.
    fn input_of_state(&self, state: u32) -> Bit {
        let k = self.constraint_length;
        let newest = ((state >> (k - 1)) & 1) as Bit;
        if self.recursive_systematic {
            newest ^ parity(self.polys[0] & state & self.low_mask())
        } else {
            newest
        }
    }

    fn symbol_of_state(&self, state: u32) -> usize {
        let p = self.outputs();
        let mut sym = 0usize;
        for (n, &g) in self.polys.iter().enumerate() {
            let bit = if self.recursive_systematic && n == 0 {
                self.input_of_state(state)
            } else {
                parity(g & state)
            };
            sym |= (bit as usize) << (p - 1 - n);
        }
        sym
    }
}

fn parity(x: u32) -> Bit {
    (x.count_ones() & 1) as Bit
}

/// Time-invariant state graph of a code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trellis {
    constraint_length: usize,
    outputs: usize,
    next: Vec<[usize; 2]>,
    prev: Vec<[usize; 2]>,
    output_symbol: Vec<usize>,
    input_bit: Vec<Bit>,
}

impl Trellis {
    pub fn new(spec: &CodeSpec) -> Self {
        let k = spec.constraint_length();
        let n = spec.num_states();
        let mut next = vec![[0usize; 2]; n];
        let mut prev = vec![[0usize; 2]; n];
        let mut output_symbol = vec![0usize; n];
        let mut input_bit = vec![0 as Bit; n];
        for s in 0..n as u32 {
            let shifted = s >> 1;
            // Feed-forward: the new MSB is the input itself. RSC: the new MSB
            // is the input XOR the feedback parity of the surviving stages.
            let fb = if spec.is_recursive() {
                parity(spec.polys[0] & shifted & spec.low_mask())
            } else {
                0
            };
            for u in 0..2u32 {
                let msb = u ^ fb as u32;
                next[s as usize][u as usize] = ((msb << (k - 1)) | shifted) as usize;
            }
            let base = ((s as usize) << 1) & (n - 1);
            prev[s as usize] = [base, base | 1];
            output_symbol[s as usize] = spec.symbol_of_state(s);
            input_bit[s as usize] = spec.input_of_state(s);
        }
        Self {
            constraint_length: k,
            outputs: spec.outputs(),
            next,
            prev,
            output_symbol,
            input_bit,
        }
    }

    pub fn num_states(&self) -> usize {
        self.next.len()
    }

    pub fn num_symbols(&self) -> usize {
        1 << self.outputs
    }

    /// Bits per symbol (`P`).
    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn constraint_length(&self) -> usize {
        self.constraint_length
    }

    pub fn next_state(&self, state: usize, input: Bit) -> usize {
        self.next[state][input as usize]
    }

    /// The two states that can precede `state`, in ascending order.
    pub fn predecessors(&self, state: usize) -> [usize; 2] {
        self.prev[state]
    }

    pub fn output_symbol(&self, state: usize) -> usize {
        self.output_symbol[state]
    }

    /// Data bit carried by every transition into `state`.
    pub fn input_bit(&self, state: usize) -> Bit {
        self.input_bit[state]
    }

    /// `P` bits of symbol `symbol`, first output first.
    pub fn symbol_bits(&self, symbol: usize) -> Vec<Bit> {
        symbol_to_bits(symbol, self.outputs)
    }

    /// Whether `from -> to` is a trellis edge.
    pub fn is_edge(&self, from: usize, to: usize) -> bool {
        self.next[from].contains(&to)
    }

    /// `N x N` row-major mask of trellis edges.
    pub fn transition_mask(&self) -> Vec<bool> {
        let n = self.num_states();
        let mut mask = vec![false; n * n];
        for (s, nx) in self.next.iter().enumerate() {
            for &t in nx {
                mask[s * n + t] = true;
            }
        }
        mask
    }

    /// Data bits along a state path. Works for RSC codes too, where the
    /// newest register bit is not the data bit.
    pub fn states_to_bits(&self, states: &[usize]) -> Vec<Bit> {
        states.iter().map(|&s| self.input_bit[s]).collect()
    }

    /// Expected symbol sequence for a state path.
    pub fn symbols_of_path(&self, states: &[usize]) -> Vec<usize> {
        states.iter().map(|&s| self.output_symbol[s]).collect()
    }
}

/// Binary expansion of `value` over `width` bits, MSB first.
pub fn symbol_to_bits(value: usize, width: usize) -> Vec<Bit> {
    (0..width)
        .rev()
        .map(|i| ((value >> i) & 1) as Bit)
        .collect()
}

/// Decimal value of an MSB-first bit vector.
pub fn bits_to_symbol(bits: &[Bit]) -> usize {
    bits.iter()
        .fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize)
}

/// Output of an encoder run: coded bits plus the register value after each
/// input, which doubles as the HMM state label for supervised training.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Encoded {
    pub coded: Vec<Bit>,
    pub states: Vec<usize>,
}

/// Encodes `data` from the all-zero register without tail bits.
///
/// Dispatches to [`encode_rsc`] for recursive systematic codes.
pub fn encode(spec: &CodeSpec, data: &[Bit]) -> Encoded {
    if spec.is_recursive() {
        return encode_rsc(spec, data).expect("recursive flag checked");
    }
    let k = spec.constraint_length();
    let mut reg = 0u32;
    let mut out = Encoded {
        coded: Vec::with_capacity(data.len() * spec.outputs()),
        states: Vec::with_capacity(data.len()),
    };
    for &u in data {
        reg = ((u as u32 & 1) << (k - 1)) | (reg >> 1);
        out.coded
            .extend(spec.polys().iter().map(|&g| parity(g & reg)));
        out.states.push(reg as usize);
    }
    out
}

/// Recursive systematic encoder: systematic bit first, then one parity bit
/// per forward polynomial.
pub fn encode_rsc(spec: &CodeSpec, data: &[Bit]) -> Result<Encoded> {
    if !spec.is_recursive() {
        return Err(Error::Config(
            "encode_rsc needs a recursive systematic code".into(),
        ));
    }
    let k = spec.constraint_length();
    let feedback = spec.polys()[0];
    let mut reg = 0u32;
    let mut out = Encoded {
        coded: Vec::with_capacity(data.len() * spec.outputs()),
        states: Vec::with_capacity(data.len()),
    };
    for &u in data {
        let u = u & 1;
        let w = u ^ parity(feedback & (reg >> 1) & spec.low_mask());
        reg = ((w as u32) << (k - 1)) | (reg >> 1);
        out.coded.push(u);
        out.coded
            .extend(spec.polys()[1..].iter().map(|&g| parity(g & reg)));
        out.states.push(reg as usize);
    }
    Ok(out)
}

/// Extracts the newest-stage bit of each state (MSB under this crate's
/// convention). This is the data bit for feed-forward codes; RSC paths must go
/// through [`Trellis::states_to_bits`].
pub fn states_to_bits(states: &[usize], constraint_length: usize) -> Vec<Bit> {
    states
        .iter()
        .map(|&s| ((s >> (constraint_length - 1)) & 1) as Bit)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c75() -> CodeSpec {
        CodeSpec::from_octal(3, &[7, 5], false).unwrap()
    }

    #[test]
    fn octal_parsing() {
        assert_eq!(octal_digits(7).unwrap(), 7);
        assert_eq!(octal_digits(15).unwrap(), 13);
        assert_eq!(octal_digits(23).unwrap(), 19);
        assert!(octal_digits(18).is_err());
        assert_eq!(
            CodeSpec::from_octal(4, &[15, 17], false)
                .unwrap()
                .polys_octal(),
            vec![15, 17]
        );
    }

    #[test]
    fn trellis_sizes() {
        let t = Trellis::new(&c75());
        assert_eq!((t.num_states(), t.num_symbols()), (8, 4));
        let t = Trellis::new(&CodeSpec::from_octal(3, &[7, 7, 5], false).unwrap());
        assert_eq!((t.num_states(), t.num_symbols()), (8, 8));
    }

    #[test]
    fn single_stage_register() {
        let spec = CodeSpec::new(1, vec![1, 1], false).unwrap();
        let t = Trellis::new(&spec);
        assert_eq!(t.num_states(), 2);
        for s in 0..2 {
            for u in 0..2u8 {
                assert_eq!(t.next_state(s, u), u as usize);
            }
            assert_eq!(t.symbol_bits(t.output_symbol(s)), vec![s as u8, s as u8]);
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(CodeSpec::new(3, vec![7], false).is_err());
        assert!(CodeSpec::new(3, vec![7, 9], false).is_err());
        assert!(CodeSpec::new(3, vec![3, 1], false).is_err());
        assert!(CodeSpec::new(0, vec![1, 1], false).is_err());
        // feedback polynomial without a leading tap
        assert!(CodeSpec::new(3, vec![3, 7], true).is_err());
    }

    #[test]
    fn hand_traced_75() {
        let e = encode(&c75(), &[1, 0, 1]);
        assert_eq!(e.coded, vec![1, 1, 1, 0, 0, 0]);
        assert_eq!(e.states, vec![0b100, 0b010, 0b101]);
        assert_eq!(encode(&c75(), &[1]).coded, vec![1, 1]);
        assert_eq!(encode(&c75(), &[]), Encoded::default());
    }

    #[test]
    fn zero_input_zero_output() {
        let spec = CodeSpec::from_octal(3, &[7, 7, 5], false).unwrap();
        let e = encode(&spec, &[0; 10]);
        assert!(e.coded.iter().all(|&b| b == 0));
        assert!(e.states.iter().all(|&s| s == 0));
        let rsc = CodeSpec::from_octal(3, &[7, 5], true).unwrap();
        let e = encode_rsc(&rsc, &[0; 10]).unwrap();
        assert!(e.coded.iter().all(|&b| b == 0));
    }

    #[test]
    fn rsc_rejects_feedforward_spec() {
        assert!(encode_rsc(&c75(), &[1]).is_err());
    }

    /// Register-level RSC reference written without masks or shared helpers:
    /// explicit arrays of w values, feedback taps read off the octal digits.
    fn rsc_reference(fb: [u8; 3], fwd: [u8; 3], data: &[u8]) -> Vec<u8> {
        let (mut w1, mut w2) = (0u8, 0u8);
        let mut out = Vec::new();
        for &u in data {
            let w0 = u ^ (fb[1] & w1) ^ (fb[2] & w2);
            out.push(u);
            out.push((fwd[0] & w0) ^ (fwd[1] & w1) ^ (fwd[2] & w2));
            w2 = w1;
            w1 = w0;
        }
        out
    }

    #[test]
    fn rsc_matches_register_reference() {
        let rsc = CodeSpec::from_octal(3, &[7, 5], true).unwrap();
        let impulse = [1u8, 0, 0, 0, 0, 0, 0, 0];
        let e = encode_rsc(&rsc, &impulse).unwrap();
        assert_eq!(e.coded, rsc_reference([1, 1, 1], [1, 0, 1], &impulse));
        // first step: register 100, forward taps 101 -> parity 1
        assert_eq!(&e.coded[..2], &[1, 1]);
        let systematic: Vec<u8> = e.coded.iter().step_by(2).copied().collect();
        assert_eq!(systematic, impulse);
    }

    proptest! {
        #[test]
        fn rsc_reference_agreement(data in proptest::collection::vec(0u8..2, 0..64)) {
            let rsc = CodeSpec::from_octal(3, &[7, 5], true).unwrap();
            prop_assert_eq!(encode_rsc(&rsc, &data).unwrap().coded, rsc_reference([1, 1, 1], [1, 0, 1], &data));
        }

        #[test]
        fn linearity(pair in (1usize..48).prop_flat_map(|n| (
            proptest::collection::vec(0u8..2, n),
            proptest::collection::vec(0u8..2, n),
        ))) {
            let spec = CodeSpec::from_octal(4, &[15, 17, 13], false).unwrap();
            let (a, b) = pair;
            let xor: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
            let ea = encode(&spec, &a).coded;
            let eb = encode(&spec, &b).coded;
            let sum: Vec<u8> = ea.iter().zip(&eb).map(|(x, y)| x ^ y).collect();
            prop_assert_eq!(sum, encode(&spec, &xor).coded);
        }

        #[test]
        fn trellis_agrees_with_encoder(
            data in proptest::collection::vec(0u8..2, 1..64),
            k in 1usize..6,
            rsc in any::<bool>(),
        ) {
            let polys = if k == 1 { vec![1, 1] } else { vec![(1 << k) - 1, (1 << (k - 1)) | 1] };
            let spec = CodeSpec::new(k, polys, rsc).unwrap();
            let trellis = Trellis::new(&spec);
            let e = encode(&spec, &data);
            let mut prev = 0usize;
            for (t, &u) in data.iter().enumerate() {
                prop_assert_eq!(trellis.next_state(prev, u), e.states[t]);
                prop_assert!(trellis.predecessors(e.states[t]).contains(&prev));
                let sym = bits_to_symbol(&e.coded[t * spec.outputs()..(t + 1) * spec.outputs()]);
                prop_assert_eq!(trellis.output_symbol(e.states[t]), sym);
                prev = e.states[t];
            }
            prop_assert_eq!(trellis.states_to_bits(&e.states), data.clone());
            if !rsc {
                prop_assert_eq!(states_to_bits(&e.states, k), data);
            }
        }

        #[test]
        fn symbol_quantization_bijective(width in 1usize..9, v in 0usize..256) {
            let v = v % (1 << width);
            prop_assert_eq!(bits_to_symbol(&symbol_to_bits(v, width)), v);
        }
    }

    #[test]
    fn two_in_two_out_per_state() {
        for rsc in [false, true] {
            let spec = CodeSpec::from_octal(4, &[15, 17], rsc).unwrap();
            let t = Trellis::new(&spec);
            let mut indeg = vec![0; t.num_states()];
            for s in 0..t.num_states() {
                let [a, b] = [t.next_state(s, 0), t.next_state(s, 1)];
                assert_ne!(a, b);
                indeg[a] += 1;
                indeg[b] += 1;
            }
            assert!(indeg.iter().all(|&d| d == 2));
        }
    }

    #[test]
    fn newest_bit_extraction() {
        assert_eq!(states_to_bits(&[4, 2, 1], 3), vec![1, 0, 0]);
        assert_eq!(states_to_bits(&[0, 0], 3), vec![0, 0]);
    }
}
