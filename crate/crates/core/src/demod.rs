//! Hard and soft BPSK demodulation.

use crate::codec::bits_to_symbol;
use crate::{Bit, Error, Frames, Result};

/// Sign detector. An exact zero decides `0`.
pub fn hard_demod(samples: &[f64]) -> Vec<Bit> {
    samples.iter().map(|&s| (s > 0.0) as Bit).collect()
}

/// Posterior `P(bit = 1 | sample)` for unit-energy BPSK in Gaussian noise
/// with equal priors: `1 / (1 + exp(-2 s / sigma^2))`.
///
/// The multipath taps are ignored on purpose; any channel mismatch is left for
/// the decoder to absorb.
pub fn bit_posteriors(samples: &[f64], noise_variance: f64) -> Result<Vec<f64>> {
    if !(noise_variance > 0.0) {
        return Err(Error::Config(format!(
            "noise variance must be positive, got {noise_variance}"
        )));
    }
    Ok(samples
        .iter()
        .map(|&s| logistic(2.0 * s / noise_variance))
        .collect())
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// [`bit_posteriors`] grouped into one `P`-vector per code symbol.
pub fn soft_demod(samples: &[f64], noise_variance: f64, outputs: usize) -> Result<Frames> {
    Frames::new(outputs, bit_posteriors(samples, noise_variance)?)
}

/// Quantizes consecutive groups of `outputs` bits into symbol indices.
pub fn group_symbols(bits: &[Bit], outputs: usize) -> Result<Vec<usize>> {
    if outputs == 0 || !bits.len().is_multiple_of(outputs) {
        return Err(Error::Framing(format!(
            "{} bits do not split into symbols of {}",
            bits.len(),
            outputs
        )));
    }
    Ok(bits.chunks_exact(outputs).map(bits_to_symbol).collect())
}

/// Groups real values (channel samples or probabilities) into `P`-vectors.
pub fn group_frames(values: &[f64], outputs: usize) -> Result<Frames> {
    Frames::new(outputs, values.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::modulate_bpsk;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn sign_rule() {
        assert_eq!(hard_demod(&[0.3, -1.2]), vec![1, 0]);
        assert_eq!(hard_demod(&[0.0]), vec![0]);
        let bits = vec![1, 0, 0, 1, 1, 0];
        assert_eq!(hard_demod(&modulate_bpsk(&bits)), bits);
    }

    #[test]
    fn posterior_values() {
        let s2 = 0.8;
        let p = bit_posteriors(&[0.0, 1e6, s2 / 2.0, -1e6], s2).unwrap();
        assert_eq!(p[0], 0.5);
        assert_abs_diff_eq!(p[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[2], 1.0 / (1.0 + (-1f64).exp()), epsilon = 1e-15);
        assert_abs_diff_eq!(p[2], 0.7311, epsilon = 1e-4);
        assert!(p[3] >= 0.0 && p[3] < 1e-15);
        assert!(bit_posteriors(&[1.0], 0.0).is_err());
        assert!(bit_posteriors(&[1.0], -1.0).is_err());
    }

    #[test]
    fn grouping() {
        assert_eq!(group_symbols(&[1, 1, 1, 0, 0, 0], 3).unwrap(), vec![7, 0]);
        assert_eq!(group_symbols(&[1, 0], 2).unwrap(), vec![2]);
        assert!(group_symbols(&[], 2).unwrap().is_empty());
        assert!(matches!(
            group_symbols(&[1, 0, 1], 2),
            Err(Error::Framing(_))
        ));
        let f = soft_demod(&[0.1, -0.1, 0.2, 0.3], 1.0, 2).unwrap();
        assert_eq!(f.len(), 2);
        assert!(soft_demod(&[0.1], 1.0, 2).is_err());
    }

    proptest! {
        #[test]
        fn hard_agrees_with_soft_threshold(
            samples in proptest::collection::vec(-4.0f64..4.0, 1..64),
            s2 in 0.05f64..4.0,
        ) {
            let p = bit_posteriors(&samples, s2).unwrap();
            let h = hard_demod(&samples);
            for i in 0..samples.len() {
                if samples[i] != 0.0 && (p[i] - 0.5).abs() > 1e-15 {
                    prop_assert_eq!(h[i] == 1, p[i] > 0.5);
                }
                prop_assert!((0.0..=1.0).contains(&p[i]));
            }
        }

        #[test]
        fn posterior_monotone(a in -5.0f64..5.0, b in -5.0f64..5.0, s2 in 0.05f64..4.0) {
            let p = bit_posteriors(&[a, b], s2).unwrap();
            if a < b { prop_assert!(p[0] <= p[1]); } else { prop_assert!(p[0] >= p[1]); }
        }
    }
}
