//! BPSK over a tapped-delay-line channel with optional hardware distortion and
//! additive white Gaussian noise.
//!
//! Noise is drawn from ChaCha8 (`rand_chacha`), seeded per stream with
//! `seed_from_u64(master_seed)` followed by `set_stream(stream_id)`, and
//! shaped by the `rand_distr` standard normal sampler. Both are portable, so a
//! given seed reproduces the same samples on every platform.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Bit, Error, Result};

/// Line-of-sight tap first, then the two echoes `e^-tau`, `e^-2tau`.
/// Taps are deliberately not energy-normalized.
pub fn multipath_taps(tau: f64) -> Vec<f64> {
    vec![1.0, (-tau).exp(), (-2.0 * tau).exp()]
}

/// Noise variance per real BPSK sample for unit symbol energy, with
/// `Eb = Es / R`: `sigma^2 = 1 / (2 R 10^(EbN0/10))`.
pub fn noise_variance(ebn0_db: f64, rate: f64) -> f64 {
    1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0))
}

/// Independent generator for one (master seed, stream) pair.
pub fn stream_rng(master_seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id);
    rng
}

/// Channel parameters for one Eb/N0 point.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub taps: Vec<f64>,
    pub ebn0_db: f64,
    pub nonlinear: bool,
    pub seed: u64,
    /// Code rate `1/P` used to spread Eb over coded bits.
    pub rate: f64,
}

impl ChannelConfig {
    pub fn new(
        taps: Vec<f64>,
        ebn0_db: f64,
        nonlinear: bool,
        seed: u64,
        rate: f64,
    ) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::Config("channel needs at least one tap".into()));
        }
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::Config(format!("code rate {rate} outside (0, 1]")));
        }
        if ebn0_db.is_nan() {
            return Err(Error::Config("Eb/N0 is NaN".into()));
        }
        Ok(Self {
            taps,
            ebn0_db,
            nonlinear,
            seed,
            rate,
        })
    }

    /// Three-path channel built from the delay parameter.
    pub fn multipath(
        tau: f64,
        ebn0_db: f64,
        nonlinear: bool,
        seed: u64,
        rate: f64,
    ) -> Result<Self> {
        Self::new(multipath_taps(tau), ebn0_db, nonlinear, seed, rate)
    }

    pub fn noise_variance(&self) -> f64 {
        noise_variance(self.ebn0_db, self.rate)
    }

    /// Modulates, convolves, distorts and adds noise.
    pub fn transmit<R: Rng + ?Sized>(&self, coded: &[Bit], rng: &mut R) -> Vec<f64> {
        let x = modulate_bpsk(coded);
        let mut y = apply_multipath(&x, &self.taps);
        if self.nonlinear {
            y = apply_nonlinearity(&y);
        }
        add_awgn(&y, self.ebn0_db, self.rate, rng)
    }
}

/// `0 -> -1.0`, `1 -> +1.0`.
pub fn modulate_bpsk(bits: &[Bit]) -> Vec<f64> {
    bits.iter()
        .map(|&b| if b & 1 == 1 { 1.0 } else { -1.0 })
        .collect()
}

/// Causal convolution `y_t = sum_i h_i x_{t-i}`, truncated to the input length.
pub fn apply_multipath(x: &[f64], taps: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|t| {
            taps.iter()
                .enumerate()
                .take(t + 1)
                .map(|(i, h)| h * x[t - i])
                .sum()
        })
        .collect()
}

/// Memoryless amplifier model `g(v) = v + 0.2 v^2 - 0.1 v^3 + 0.5 cos(pi v)`.
pub fn nonlinearity(v: f64) -> f64 {
    v + 0.2 * v * v - 0.1 * v * v * v + 0.5 * (std::f64::consts::PI * v).cos()
}

pub fn apply_nonlinearity(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| nonlinearity(x)).collect()
}

/// Adds i.i.d. `N(0, sigma^2)` noise with `sigma^2` from [`noise_variance`].
/// An infinite Eb/N0 returns the input untouched without consuming randomness.
pub fn add_awgn<R: Rng + ?Sized>(x: &[f64], ebn0_db: f64, rate: f64, rng: &mut R) -> Vec<f64> {
    let sigma = noise_variance(ebn0_db, rate).sqrt();
    if sigma == 0.0 {
        return x.to_vec();
    }
    x.iter()
        .map(|&v| {
            let n: f64 = rng.sample(StandardNormal);
            v + sigma * n
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn bpsk_mapping() {
        assert_eq!(modulate_bpsk(&[0, 1, 1]), vec![-1.0, 1.0, 1.0]);
        assert!(modulate_bpsk(&[]).is_empty());
        assert_eq!(
            modulate_bpsk(&[0, 1, 0, 1, 0, 1]),
            vec![-1.0, 1.0, -1.0, 1.0, -1.0, 1.0]
        );
    }

    #[test]
    fn multipath_examples() {
        let x = [0.3, -2.0, 5.0];
        assert_eq!(apply_multipath(&x, &[1.0]), x.to_vec());
        assert_eq!(apply_multipath(&[1.0, -1.0], &[1.0, 0.5]), vec![1.0, -0.5]);
        let taps = multipath_taps(0.7);
        let y = apply_multipath(&[1.0, 0.0, 0.0], &taps);
        assert_abs_diff_eq!(y[0], 1.0);
        assert_abs_diff_eq!(y[1], 0.4966, epsilon = 1e-4);
        assert_abs_diff_eq!(y[2], 0.2466, epsilon = 1e-4);
    }

    #[test]
    fn nonlinearity_points() {
        assert_abs_diff_eq!(nonlinearity(0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(nonlinearity(1.0), 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(nonlinearity(-1.0), -1.2, epsilon = 1e-12);
    }

    #[test]
    fn noiseless_limit_and_determinism() {
        let x = vec![1.0, -1.0, 0.5];
        let mut rng = stream_rng(1, 0);
        assert_eq!(add_awgn(&x, f64::INFINITY, 0.5, &mut rng), x);
        let a = add_awgn(&x, 3.0, 0.5, &mut stream_rng(9, 4));
        let b = add_awgn(&x, 3.0, 0.5, &mut stream_rng(9, 4));
        assert_eq!(a, b);
        let c = add_awgn(&x, 3.0, 0.5, &mut stream_rng(9, 5));
        assert_ne!(a, c);
    }

    #[test]
    fn empirical_noise_variance() {
        let n = 1_000_000;
        let ebn0 = 10.0 * 2f64.log10(); // 3.0103 dB
        assert_abs_diff_eq!(noise_variance(ebn0, 0.5), 0.5, epsilon = 1e-12);
        let zeros = vec![0.0; n];
        let noise = add_awgn(&zeros, ebn0, 0.5, &mut stream_rng(42, 0));
        let mean = noise.iter().sum::<f64>() / n as f64;
        let var = noise.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((var - 0.5).abs() / 0.5 < 0.01, "variance {var}");
        // signal/noise independence
        let signal = modulate_bpsk(
            &(0..n)
                .map(|i| ((i * 7 + i / 3) % 2) as u8)
                .collect::<Vec<_>>(),
        );
        let corr = signal.iter().zip(&noise).map(|(s, w)| s * w).sum::<f64>() / n as f64;
        assert!(corr.abs() < 5.0 * (0.5f64 / n as f64).sqrt());
    }

    #[test]
    fn config_validation() {
        assert!(ChannelConfig::new(vec![], 1.0, false, 0, 0.5).is_err());
        assert!(ChannelConfig::new(vec![1.0], 1.0, false, 0, 0.0).is_err());
        let c = ChannelConfig::multipath(0.7, 3.0, false, 0, 1.0 / 3.0).unwrap();
        assert!(c.noise_variance() > 0.0);
        assert_eq!(c.taps.len(), 3);
    }

    proptest! {
        #[test]
        fn multipath_is_linear(
            a in proptest::collection::vec(-5.0f64..5.0, 0..32),
            scale in -3.0f64..3.0,
            taps in proptest::collection::vec(-2.0f64..2.0, 1..5),
        ) {
            let b: Vec<f64> = a.iter().rev().map(|v| v * scale + 0.25).collect();
            let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let lhs = apply_multipath(&sum, &taps);
            let ya = apply_multipath(&a, &taps);
            let yb = apply_multipath(&b, &taps);
            for i in 0..lhs.len() {
                prop_assert!((lhs[i] - ya[i] - yb[i]).abs() < 1e-9);
            }
        }
    }
}
