//! Canned experiment definitions.

use std::path::{Path, PathBuf};

use super::{curve, run_sweep, write_csv, BerRecord, ChannelSpec, DecoderKind, ExperimentConfig};
use crate::codec::CodeSpec;
use crate::soft::EmissionMode;
use crate::{Error, Result};

pub const TAU: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig4a,
    Fig4b,
    Fig6,
    Fig7,
    Fig8,
}

impl Figure {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "fig4a" => Figure::Fig4a,
            "fig4b" => Figure::Fig4b,
            "fig6" => Figure::Fig6,
            "fig7" => Figure::Fig7,
            "fig8" => Figure::Fig8,
            other => return Err(Error::Config(format!("unknown figure '{other}'"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig4a => "fig4a",
            Figure::Fig4b => "fig4b",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
            Figure::Fig8 => "fig8",
        }
    }
}

/// Integer-dB grid `lo..=hi`.
pub fn grid(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(f64::from).collect()
}

pub fn hard_pair() -> Vec<DecoderKind> {
    vec![DecoderKind::ViterbiHard, DecoderKind::HmmHard]
}

pub fn soft_pair() -> Vec<DecoderKind> {
    vec![
        DecoderKind::ViterbiSoft,
        DecoderKind::HmmSoft(EmissionMode::default()),
    ]
}

/// Both decision modes for both decoder families, plus the mixture-emission
/// variants of the soft HMM.
pub fn all_decoders() -> Vec<DecoderKind> {
    vec![
        DecoderKind::ViterbiHard,
        DecoderKind::HmmHard,
        DecoderKind::ViterbiSoft,
        DecoderKind::HmmSoft(EmissionMode::Bridge),
        DecoderKind::HmmSoft(EmissionMode::GmmPerState),
        DecoderKind::HmmSoft(EmissionMode::GmmPerSymbol),
    ]
}

fn code(k: usize, polys: &[u32], rsc: bool) -> CodeSpec {
    CodeSpec::from_octal(k, polys, rsc).expect("recipe codes are valid")
}

fn base(
    code: CodeSpec,
    channel: ChannelSpec,
    grid: Vec<f64>,
    decoders: Vec<DecoderKind>,
    seed: u64,
    test_bits: usize,
) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(code, channel, grid, decoders);
    c.seed = seed;
    c.test_bits = test_bits;
    c
}

/// (3,1,3) [7,7,5] over pure AWGN.
pub fn fig4a(seed: u64, test_bits: usize) -> ExperimentConfig {
    base(
        code(3, &[7, 7, 5], false),
        ChannelSpec::awgn(),
        grid(0, 8),
        all_decoders(),
        seed,
        test_bits,
    )
}

/// (3,1,3) [7,7,5] over the three-path channel.
pub fn fig4b(seed: u64, test_bits: usize) -> ExperimentConfig {
    base(
        code(3, &[7, 7, 5], false),
        ChannelSpec::multipath(TAU, false),
        grid(0, 14),
        all_decoders(),
        seed,
        test_bits,
    )
}

/// Code family sweeps: `(group, config)` pairs.
pub fn fig6(seed: u64, test_bits: usize) -> Vec<(String, ExperimentConfig)> {
    let decoders = [hard_pair(), soft_pair()].concat();
    let families: [(&str, usize, &[u32]); 9] = [
        ("rate", 3, &[7, 5]),
        ("rate", 3, &[7, 7, 5]),
        ("rate", 3, &[7, 7, 7, 5]),
        ("constraint", 3, &[7, 5]),
        ("constraint", 4, &[15, 17]),
        ("constraint", 5, &[23, 35]),
        ("generator", 3, &[7, 5]),
        ("generator", 3, &[7, 6]),
        ("generator", 3, &[7, 3]),
    ];
    families
        .iter()
        .map(|(group, k, polys)| {
            let c = base(
                code(*k, polys, false),
                ChannelSpec::multipath(TAU, false),
                grid(0, 12),
                decoders.clone(),
                seed,
                test_bits,
            );
            (group.to_string(), c)
        })
        .collect()
}

/// Soft decoders over the three-path channel with the amplifier nonlinearity.
pub fn fig7(seed: u64, test_bits: usize) -> ExperimentConfig {
    let decoders = vec![
        DecoderKind::ViterbiSoft,
        DecoderKind::HmmSoft(EmissionMode::Bridge),
        DecoderKind::HmmSoft(EmissionMode::GmmPerState),
        DecoderKind::HmmSoft(EmissionMode::GmmPerSymbol),
    ];
    base(
        code(3, &[7, 7, 5], false),
        ChannelSpec::multipath(TAU, true),
        grid(0, 12),
        decoders,
        seed,
        test_bits,
    )
}

/// RSC(2,1,3), feedback 7, forward 5, over the three-path channel.
pub fn fig8(seed: u64, test_bits: usize) -> ExperimentConfig {
    base(
        code(3, &[7, 5], true),
        ChannelSpec::multipath(TAU, false),
        grid(0, 14),
        all_decoders(),
        seed,
        test_bits,
    )
}

/// One line of the HMM/Viterbi BER ratio table.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioRow {
    pub group: String,
    pub code: String,
    pub decision: &'static str,
    pub ebn0_db: f64,
    pub hmm_ber: f64,
    pub viterbi_ber: f64,
}

impl RatioRow {
    /// `hmm_ber / viterbi_ber`; `None` when the baseline made no errors.
    pub fn ratio(&self) -> Option<f64> {
        (self.viterbi_ber > 0.0).then(|| self.hmm_ber / self.viterbi_ber)
    }
}

pub const RATIO_HEADER: &str = "group,code,decision,ebn0_db,hmm_ber,viterbi_ber,ratio";

/// Pairs each HMM curve with the baseline of the same decision mode.
pub fn ratio_rows(group: &str, code: &CodeSpec, records: &[BerRecord]) -> Vec<RatioRow> {
    let mut rows = Vec::new();
    for (decision, hmm, vit) in [
        ("hard", DecoderKind::HmmHard, DecoderKind::ViterbiHard),
        (
            "soft",
            DecoderKind::HmmSoft(EmissionMode::default()),
            DecoderKind::ViterbiSoft,
        ),
    ] {
        let h = curve(records, &hmm.name());
        let v = curve(records, &vit.name());
        for ((e, hb), (_, vb)) in h.iter().zip(&v) {
            rows.push(RatioRow {
                group: group.to_string(),
                code: code.label(),
                decision,
                ebn0_db: *e,
                hmm_ber: *hb,
                viterbi_ber: *vb,
            });
        }
    }
    rows
}

pub fn ratio_csv(rows: &[RatioRow]) -> String {
    let mut out = format!("{RATIO_HEADER}\n");
    for r in rows {
        let ratio = r.ratio().map(|x| x.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},\"{}\",{},{},{},{},{}\n",
            r.group, r.code, r.decision, r.ebn0_db, r.hmm_ber, r.viterbi_ber, ratio
        ));
    }
    out
}

fn file_stem(code: &CodeSpec) -> String {
    let polys: Vec<String> = code.polys_octal().iter().map(u32::to_string).collect();
    format!(
        "{}_k{}_{}",
        if code.is_recursive() { "rsc" } else { "conv" },
        code.constraint_length(),
        polys.join("-")
    )
}

/// Runs a figure recipe and writes its CSV files into `out_dir`.
/// Returns the paths written.
pub fn run_figure(
    fig: Figure,
    seed: u64,
    test_bits: usize,
    timing: bool,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let single = match fig {
        Figure::Fig4a => Some(fig4a(seed, test_bits)),
        Figure::Fig4b => Some(fig4b(seed, test_bits)),
        Figure::Fig7 => Some(fig7(seed, test_bits)),
        Figure::Fig8 => Some(fig8(seed, test_bits)),
        Figure::Fig6 => None,
    };
    if let Some(cfg) = single {
        let records = run_sweep(&cfg)?;
        let path = out_dir.join(format!("{}.csv", fig.name()));
        write_csv(&path, &records, timing)?;
        written.push(path);
        return Ok(written);
    }
    let mut rows = Vec::new();
    for (group, cfg) in fig6(seed, test_bits) {
        let records = run_sweep(&cfg)?;
        let path = out_dir.join(format!("fig6_{group}_{}.csv", file_stem(&cfg.code)));
        write_csv(&path, &records, timing)?;
        written.push(path);
        rows.extend(ratio_rows(&group, &cfg.code, &records));
    }
    let path = out_dir.join("fig6_ratio.csv");
    std::fs::write(&path, ratio_csv(&rows))?;
    written.push(path);
    Ok(written)
}
