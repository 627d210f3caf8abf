//! End-to-end checks across the codec, channel, demodulator and decoders.

use trellis_hmm::channel::{stream_rng, ChannelConfig};
use trellis_hmm::codec::{encode, CodeSpec, Trellis};
use trellis_hmm::demod::hard_demod;
use trellis_hmm::harness::{
    self, generate_dataset, recipes, train_models, ChannelSpec, DecoderKind, ExperimentConfig,
};
use trellis_hmm::hmm::{InitialState, SupervisedTrainer, TrainingPair};
use trellis_hmm::model_file::ModelFile;
use trellis_hmm::soft::{train_soft, EmissionMode, SoftTrainingSequence};
use trellis_hmm::{Bit, Frames};

use rand::Rng;

/// Gaussian tail probability by composite Simpson integration of the density
/// over `[x, x + 12]`.
fn q_function(x: f64) -> f64 {
    let n = 20_000;
    let h = 12.0 / n as f64;
    let f = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut acc = f(x) + f(x + 12.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(x + i as f64 * h);
    }
    acc * h / 3.0
}

fn random_bits(n: usize, seed: u64) -> Vec<Bit> {
    let mut rng = stream_rng(seed, 99);
    (0..n).map(|_| rng.random::<bool>() as Bit).collect()
}

#[test]
fn q_function_oracle_sanity() {
    assert!((q_function(0.0) - 0.5).abs() < 1e-9);
    assert!((q_function(1.0) - 0.158_655_253_931_457).abs() < 1e-9);
}

#[test]
fn uncoded_bpsk_matches_q_function() {
    let ebn0 = 4.0;
    let bits = random_bits(1_000_000, 1);
    let ch = ChannelConfig::new(vec![1.0], ebn0, false, 0, 1.0).unwrap();
    let mut rng = stream_rng(3, 3);
    let rx = ch.transmit(&bits, &mut rng);
    let errors = hard_demod(&rx)
        .iter()
        .zip(&bits)
        .filter(|(a, b)| a != b)
        .count();
    let ber = errors as f64 / bits.len() as f64;
    let theory = q_function((2.0 * 10f64.powf(ebn0 / 10.0)).sqrt());
    assert!((theory - 1.25e-2).abs() < 1e-4, "oracle {theory}");
    assert!(
        (ber - theory).abs() / theory < 0.10,
        "measured {ber}, theory {theory}"
    );
}

fn awgn_config(decoders: Vec<DecoderKind>, grid: Vec<f64>) -> ExperimentConfig {
    let code = CodeSpec::from_octal(3, &[7, 7, 5], false).unwrap();
    let mut c = ExperimentConfig::new(code, ChannelSpec::awgn(), grid, decoders);
    c.test_bits = 100_000;
    c.seed = 5;
    c
}

#[test]
fn soft_viterbi_beats_hard_on_awgn() {
    let cfg = awgn_config(
        vec![DecoderKind::ViterbiHard, DecoderKind::ViterbiSoft],
        vec![1.0, 2.0, 3.0, 4.0],
    );
    let records = harness::run_sweep(&cfg).unwrap();
    let hard = harness::curve(&records, "viterbi_hard");
    let soft = harness::curve(&records, "viterbi_soft");
    for ((e, h), (_, s)) in hard.iter().zip(&soft) {
        assert!(s <= h, "soft {s} > hard {h} at {e} dB");
    }
}

#[test]
fn trained_transitions_follow_the_trellis() {
    let spec = CodeSpec::from_octal(3, &[7, 7, 5], false).unwrap();
    let trellis = Trellis::new(&spec);
    let cfg = awgn_config(vec![DecoderKind::HmmHard], vec![3.0]);
    let models = train_models(&cfg, &[DecoderKind::HmmHard], 3.0).unwrap();
    let a = models.hard.unwrap();
    for i in 0..8 {
        for j in 0..8 {
            if trellis.is_edge(i, j) {
                assert!(
                    (a.a(i, j) - 0.5).abs() < 0.05,
                    "a[{i}][{j}] = {}",
                    a.a(i, j)
                );
            } else {
                assert_eq!(a.a(i, j), 0.0);
            }
        }
    }
}

#[test]
fn per_symbol_mixture_means_sit_on_the_constellation() {
    let spec = CodeSpec::from_octal(3, &[7, 5], false).unwrap();
    let trellis = Trellis::new(&spec);
    let bits = random_bits(10_000, 8);
    let enc = encode(&spec, &bits);
    let samples: Vec<f64> = enc
        .coded
        .iter()
        .map(|&b| if b == 1 { 1.0 } else { -1.0 })
        .collect();
    let symbols: Vec<usize> = enc
        .states
        .iter()
        .map(|&s| trellis.output_symbol(s))
        .collect();
    let seq = SoftTrainingSequence {
        states: enc.states.clone(),
        hard_symbols: symbols,
        samples: Frames::new(2, samples).unwrap(),
    };
    let model = train_soft(
        &SupervisedTrainer::for_trellis(&trellis),
        &trellis,
        &[seq],
        EmissionMode::GmmPerSymbol,
        2,
        Default::default(),
        &mut stream_rng(1, 1),
    )
    .unwrap();
    for (v, g) in model.gmms().iter().enumerate() {
        let expect: Vec<f64> = trellis
            .symbol_bits(v)
            .iter()
            .map(|&b| if b == 1 { 1.0 } else { -1.0 })
            .collect();
        for k in 0..g.components() {
            for (m, e) in g.mean(k).iter().zip(&expect) {
                assert!((m - e).abs() < 0.05, "symbol {v} component {k}: {m} vs {e}");
            }
        }
    }
}

#[test]
fn model_file_decode_matches_in_memory_decode() {
    let mut cfg = recipes::fig4b(11, 20_000);
    cfg.train_bits = 10_000;
    let trellis = Trellis::new(&cfg.code);
    let ebn0 = 4.0;
    for kind in [
        DecoderKind::HmmHard,
        DecoderKind::HmmSoft(EmissionMode::Bridge),
        DecoderKind::HmmSoft(EmissionMode::GmmPerState),
        DecoderKind::HmmSoft(EmissionMode::GmmPerSymbol),
    ] {
        let models = train_models(&cfg, &[kind], ebn0).unwrap();
        let mut rng = stream_rng(cfg.seed, 1234);
        let data = generate_dataset(&cfg, ebn0, 5_000, &mut rng).unwrap();
        let direct =
            harness::decode_dataset(kind, &trellis, &models, &data, InitialState::Zero).unwrap();
        let mut file = match kind {
            DecoderKind::HmmSoft(mode) => ModelFile::soft(models.soft_model(mode).unwrap()),
            _ => ModelFile::hard(models.hard.clone().unwrap()),
        };
        file.code = Some(cfg.code.clone());
        file.noise_variance = Some(data.noise_variance);
        file.start = Some(InitialState::Zero);
        let reread = ModelFile::parse(&file.to_text()).unwrap();
        let via_file = reread.decode_samples(&data.channel_out, None).unwrap();
        assert_eq!(via_file, direct, "{}", kind.name());
    }
}

#[test]
fn rsc_pipeline_recovers_noiseless_data() {
    let spec = CodeSpec::from_octal(3, &[7, 5], true).unwrap();
    let trellis = Trellis::new(&spec);
    let bits = random_bits(4_000, 21);
    let enc = encode(&spec, &bits);
    let obs: Vec<usize> = enc
        .states
        .iter()
        .map(|&s| trellis.output_symbol(s))
        .collect();
    let hmm = SupervisedTrainer::for_trellis(&trellis)
        .train(&[TrainingPair {
            observations: obs.clone(),
            states: enc.states.clone(),
        }])
        .unwrap();
    let path = trellis_hmm::hmm::decode_with(&hmm, &obs, InitialState::Zero).unwrap();
    assert_eq!(trellis.states_to_bits(&path), bits);
}

#[test]
fn hard_hmm_matches_viterbi_without_channel_memory() {
    // Plain AWGN, enough training that B is close to its ideal form.
    let mut cfg = awgn_config(
        vec![DecoderKind::ViterbiHard, DecoderKind::HmmHard],
        vec![2.0, 4.0],
    );
    cfg.train_bits = 200_000;
    let records = harness::run_sweep(&cfg).unwrap();
    let v = harness::curve(&records, "viterbi_hard");
    let h = harness::curve(&records, "hmm_hard");
    for ((e, vb), (_, hb)) in v.iter().zip(&h) {
        assert!((hb - vb).abs() / vb < 0.1, "{e} dB: hmm {hb} viterbi {vb}");
    }
}
