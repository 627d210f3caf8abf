//! Convolutional-code decoding with a hidden Markov model whose parameters are
//! learned from the channel, next to a conventional trellis Viterbi baseline.
//!
//! The encoder's shift register is read as the hidden state of an HMM and the
//! coded symbol it emits as the observation. Training the transition and
//! emission matrices on labelled channel outputs folds the channel's
//! intersymbol interference and distortion into the model, so the same
//! Viterbi recursion decodes better on multipath links than the textbook
//! Hamming/Euclidean trellis metric does.
//!
//! Modules, bottom-up:
//!
//! * [`codec`]: code description, trellis tables, feed-forward and RSC encoders.
//! * [`channel`]: BPSK mapping, tapped delay line, hardware nonlinearity, AWGN.
//! * [`demod`]: hard and soft demodulation, grouping into code symbols.
//! * [`viterbi`]: the baseline hard/soft trellis decoder.
//! * [`hmm`]: discrete HMM, supervised training, log-Viterbi decoding.
//! * [`gmm`]: diagonal Gaussian mixtures with k-means seeding and EM.
//! * [`soft`]: soft-input HMM decoding (Bernoulli bridge or GMM emissions).
//! * [`harness`]: datasets, per-point training, BER sweeps, CSV, figure recipes.

pub mod channel;
pub mod codec;
pub mod demod;
mod error;
pub mod frames;
pub mod gmm;
pub mod harness;
pub mod hmm;
pub mod model_file;
pub mod soft;
pub mod stream_file;
pub mod viterbi;

pub use error::{Error, Result};
pub use frames::Frames;

/// A single binary digit stored as `0` or `1`.
pub type Bit = u8;
