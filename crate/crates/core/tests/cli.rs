//! Drives the `trellis-hmm` binary through its subcommands.

use std::path::Path;
use std::process::{Command, Output};

use trellis_hmm::harness::{parse_csv, CSV_HEADER};
use trellis_hmm::model_file::ModelFile;
use trellis_hmm::stream_file::parse_bits;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trellis-hmm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = bin(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("exp.toml");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const MULTIPATH: &str = r#"
name = "small"
seed = 42
train_bits = 10000
test_bits = 20000
code = { K = 3, polys_octal = [7, 7, 5], rsc = false }
channel = { tau = 0.7, ebn0_db = [2, 6], nonlinear = false, seed = 42 }
decoders = [{ type = "viterbi_hard" }, { type = "hmm_hard" }, { type = "hmm_soft", mode = "gmm_state", q = 2 }]
"#;

fn error_rate(a: &[u8], b: &[u8]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).filter(|(x, y)| x != y).count() as f64 / a.len() as f64
}

#[test]
fn train_then_decode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MULTIPATH);
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    ok(&[
        "simulate",
        "--config",
        &cfg,
        "--ebn0",
        "6",
        "--bits",
        "20000",
        "--samples-out",
        &p("rx.txt"),
        "--bits-out",
        &p("tx.txt"),
    ]);
    let truth = parse_bits(&std::fs::read_to_string(p("tx.txt")).unwrap()).unwrap();
    assert_eq!(truth.len(), 20000);

    for decoder in ["hmm_hard", "hmm_soft_gmm_state", "hmm_soft_bridge"] {
        let model = p(&format!("{decoder}.model"));
        ok(&[
            "train",
            "--config",
            &cfg,
            "--out",
            &model,
            "--decoder",
            decoder,
            "--ebn0",
            "6",
        ]);
        let parsed = ModelFile::parse(&std::fs::read_to_string(&model).unwrap()).unwrap();
        assert!(parsed.code.is_some() && parsed.noise_variance.is_some());
        let out = p(&format!("{decoder}.bits"));
        ok(&[
            "decode",
            "--model",
            &model,
            "--in",
            &p("rx.txt"),
            "--out",
            &out,
        ]);
        let decoded = parse_bits(&std::fs::read_to_string(&out).unwrap()).unwrap();
        let ber = error_rate(&decoded, &truth);
        assert!(ber < 0.01, "{decoder}: BER {ber}");
    }
}

#[test]
fn train_defaults_to_first_hmm_decoder() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MULTIPATH);
    let model = dir.path().join("m.txt");
    ok(&["train", "--config", &cfg, "--out", model.to_str().unwrap()]);
    let parsed = ModelFile::parse(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert!(parsed.mode.is_none());
    assert_eq!(parsed.hmm.param_count(), 136);
}

#[test]
fn sweep_writes_a_ber_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MULTIPATH);
    let out_dir = dir.path().join("out");
    let stdout = ok(&[
        "sweep",
        "--config",
        &cfg,
        "--out-dir",
        out_dir.to_str().unwrap(),
    ])
    .stdout;
    assert!(String::from_utf8_lossy(&stdout).contains("small.csv"));
    let text = std::fs::read_to_string(out_dir.join("small.csv")).unwrap();
    assert!(text.starts_with(CSV_HEADER));
    let records = parse_csv(&text).unwrap();
    assert_eq!(records.len(), 6);
    assert!(records
        .iter()
        .all(|r| r.bits_tested == 20000 && r.channel == "multipath_tau0.7"));
    // untimed tables leave the seconds column empty
    assert!(text.lines().skip(1).all(|l| l.ends_with(',')));

    let timed = dir.path().join("timed");
    ok(&[
        "sweep",
        "--config",
        &cfg,
        "--out-dir",
        timed.to_str().unwrap(),
        "--timing",
    ]);
    let text = std::fs::read_to_string(timed.join("small.csv")).unwrap();
    assert!(text.lines().skip(1).all(|l| !l.ends_with(',')));
}

#[test]
fn seed_flag_changes_the_stream() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MULTIPATH);
    let run = |seed: &str, sub: &str| {
        let out = dir.path().join(sub);
        ok(&[
            "sweep",
            "--config",
            &cfg,
            "--out-dir",
            out.to_str().unwrap(),
            "--seed",
            seed,
            "--test-bits",
            "5000",
        ]);
        std::fs::read(out.join("small.csv")).unwrap()
    };
    let a = run("1", "a");
    let b = run("1", "b");
    let c = run("2", "c");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn repro_writes_figure_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig");
    ok(&[
        "repro",
        "fig8",
        "--out-dir",
        out.to_str().unwrap(),
        "--test-bits",
        "2000",
    ]);
    let records = parse_csv(&std::fs::read_to_string(out.join("fig8.csv")).unwrap()).unwrap();
    assert_eq!(records.len(), 6 * 15);
}

#[test]
fn errors_are_reported_not_panicked() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let r = bin(&["repro", "fig5", "--out-dir", out]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("unknown figure"));

    let bad = write_config(dir.path(), "code = { K = 3 }");
    let r = bin(&["sweep", "--config", &bad, "--out-dir", out]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).starts_with("error:"));

    let model = dir.path().join("m");
    std::fs::write(&model, "HMM 1 1\n1\n1\n1\n").unwrap();
    let samples = dir.path().join("s");
    std::fs::write(&samples, "0.5\n").unwrap();
    let r = bin(&[
        "decode",
        "--model",
        model.to_str().unwrap(),
        "--in",
        samples.to_str().unwrap(),
        "--out",
        out,
    ]);
    assert!(String::from_utf8_lossy(&r.stderr).contains("CODE"));
}
