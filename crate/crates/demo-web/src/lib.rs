//! WebAssembly bindings for `www/index.html`.
//!
//! Each export is a thin wrapper around a plain Rust function so the logic can
//! be tested natively. Results cross the boundary as flat `f64` arrays.

use wasm_bindgen::prelude::*;

use trellis_hmm::channel::{stream_rng, ChannelConfig};
use trellis_hmm::codec::{encode, CodeSpec};
use trellis_hmm::harness::{
    point_stream, run_point, train_models, ChannelSpec, DecoderKind, ExperimentConfig, ROLE_TEST,
};
use trellis_hmm::soft::EmissionMode;

use rand::Rng;

/// Decoders plotted by the BER panel, in output column order.
pub const CURVE_DECODERS: [DecoderKind; 4] = [
    DecoderKind::ViterbiHard,
    DecoderKind::HmmHard,
    DecoderKind::ViterbiSoft,
    DecoderKind::HmmSoft(EmissionMode::GmmPerState),
];

/// Upper bound on bits per point so a page click stays interactive.
pub const MAX_DEMO_BITS: usize = 200_000;

fn channel(tau: f64, nonlinear: bool) -> ChannelSpec {
    if tau > 0.0 {
        ChannelSpec::multipath(tau, nonlinear)
    } else {
        let mut c = ChannelSpec::awgn();
        c.nonlinear = nonlinear;
        c
    }
}

fn demo_code() -> CodeSpec {
    CodeSpec::from_octal(3, &[7, 7, 5], false).expect("valid code")
}

/// Received samples for `n` coded bits of (3,1,3) [7,7,5], interleaved as
/// `(sent, received)` pairs with `sent` in {-1, +1}.
pub fn channel_samples(
    tau: f64,
    ebn0_db: f64,
    nonlinear: bool,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    let code = demo_code();
    let spec = channel(tau, nonlinear);
    let ch: ChannelConfig = spec
        .at(ebn0_db, seed, code.rate())
        .map_err(|e| e.to_string())?;
    let mut rng = stream_rng(seed, point_stream(ebn0_db, ROLE_TEST));
    let bits: Vec<u8> = (0..n.div_ceil(code.outputs()))
        .map(|_| rng.random::<bool>() as u8)
        .collect();
    let coded = encode(&code, &bits).coded;
    let rx = ch.transmit(&coded, &mut rng);
    Ok(coded
        .iter()
        .zip(&rx)
        .take(n)
        .flat_map(|(&c, &r)| [if c == 1 { 1.0 } else { -1.0 }, r])
        .collect())
}

/// BER of [`CURVE_DECODERS`] on an integer-dB grid `lo..=hi`. Rows are
/// `[ebn0, ber_0, ber_1, ber_2, ber_3]`, flattened.
pub fn ber_curve(
    tau: f64,
    nonlinear: bool,
    lo: i32,
    hi: i32,
    test_bits: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    if hi < lo {
        return Err("empty Eb/N0 range".into());
    }
    let grid: Vec<f64> = (lo..=hi).map(f64::from).collect();
    let mut cfg = ExperimentConfig::new(
        demo_code(),
        channel(tau, nonlinear),
        grid.clone(),
        CURVE_DECODERS.to_vec(),
    );
    cfg.seed = seed;
    cfg.test_bits = test_bits.clamp(1, MAX_DEMO_BITS);
    let mut out = Vec::with_capacity(grid.len() * 5);
    for &e in &grid {
        out.push(e);
        for d in CURVE_DECODERS {
            out.push(run_point(&cfg, d, e).map_err(|e| e.to_string())?.ber);
        }
    }
    Ok(out)
}

/// Row-major 8x8 observation matrix of the hard HMM trained at one point.
pub fn trained_emissions(
    tau: f64,
    nonlinear: bool,
    ebn0_db: f64,
    seed: u64,
) -> Result<Vec<f64>, String> {
    let mut cfg = ExperimentConfig::new(
        demo_code(),
        channel(tau, nonlinear),
        vec![ebn0_db],
        vec![DecoderKind::HmmHard],
    );
    cfg.seed = seed;
    let models = train_models(&cfg, &cfg.decoders, ebn0_db).map_err(|e| e.to_string())?;
    Ok(models
        .hard
        .expect("hard model trained")
        .emissions()
        .to_vec())
}

#[wasm_bindgen(js_name = channelSamples)]
pub fn channel_samples_js(
    tau: f64,
    ebn0_db: f64,
    nonlinear: bool,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    channel_samples(tau, ebn0_db, nonlinear, n, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = berCurve)]
pub fn ber_curve_js(
    tau: f64,
    nonlinear: bool,
    lo: i32,
    hi: i32,
    test_bits: usize,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    ber_curve(tau, nonlinear, lo, hi, test_bits, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = trainedEmissions)]
pub fn trained_emissions_js(
    tau: f64,
    nonlinear: bool,
    ebn0_db: f64,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    trained_emissions(tau, nonlinear, ebn0_db, seed).map_err(|e| JsError::new(&e))
}
