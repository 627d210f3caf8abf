use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use trellis_hmm::channel::stream_rng;
use trellis_hmm::harness::recipes::{run_figure, Figure};
use trellis_hmm::harness::{self, parse_config, DecoderKind, ExperimentConfig};
use trellis_hmm::model_file::ModelFile;
use trellis_hmm::stream_file::{format_bits, format_samples, parse_samples};
use trellis_hmm::{Error, Result};

#[derive(Parser)]
#[command(
    name = "trellis-hmm",
    version,
    about = "HMM and Viterbi decoding of convolutional codes"
)]
struct Cli {
    /// Master seed; overrides any seed in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Data bits per test point.
    #[arg(long, global = true)]
    test_bits: Option<usize>,
    /// Fill the `seconds` column of BER tables.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an HMM decoder and write it as a model file.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Which configured HMM decoder to train (default: the first one).
        #[arg(long)]
        decoder: Option<String>,
        /// Training Eb/N0; defaults to the shared training point or the
        /// first grid value.
        #[arg(long, allow_negative_numbers = true)]
        ebn0: Option<f64>,
    },
    /// Decode a file of channel samples with a trained model.
    Decode {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Noise variance for the soft demodulator (bridge models).
        #[arg(long)]
        noise_var: Option<f64>,
    },
    /// Run the BER sweep described by a config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Regenerate the BER tables of a canned experiment.
    Repro {
        /// fig4a, fig4b, fig6, fig7 or fig8.
        figure: String,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Write a test stream (channel samples and the data bits behind them).
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        ebn0: f64,
        #[arg(long)]
        bits: usize,
        #[arg(long)]
        samples_out: PathBuf,
        #[arg(long)]
        bits_out: PathBuf,
    },
}

fn load_config(path: &Path, cli: &Cli) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut cfg = parse_config(&text)?.experiment(cli.seed, cli.test_bits)?;
    cfg.timing |= cli.timing;
    Ok(cfg)
}

fn config_name(path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(path)?;
    let file = parse_config(&text)?;
    Ok(file.name.unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "sweep".into())
    }))
}

fn train(
    cli: &Cli,
    config: &Path,
    out: &Path,
    decoder: Option<&str>,
    ebn0: Option<f64>,
) -> Result<()> {
    let cfg = load_config(config, cli)?;
    let kind = match decoder {
        Some(name) => DecoderKind::parse(name)?,
        None => *cfg
            .decoders
            .iter()
            .find(|d| d.is_hmm())
            .ok_or_else(|| Error::Config("config lists no HMM decoder to train".into()))?,
    };
    if !kind.is_hmm() {
        return Err(Error::Config(format!(
            "{} has no trainable parameters",
            kind.name()
        )));
    }
    let at = ebn0
        .or(cfg.shared_training_ebn0)
        .unwrap_or(cfg.ebn0_grid[0]);
    log::info!(
        "training {} on {} bits at {at} dB",
        kind.name(),
        cfg.train_bits
    );
    let models = harness::train_models(&cfg, &[kind], at)?;
    let mut file = match kind {
        DecoderKind::HmmSoft(mode) => {
            ModelFile::soft(models.soft_model(mode).expect("trained above"))
        }
        _ => ModelFile::hard(models.hard.expect("trained above")),
    };
    file.code = Some(cfg.code.clone());
    file.noise_variance = Some(
        cfg.channel
            .at(at, cfg.seed, cfg.code.rate())?
            .noise_variance(),
    );
    file.start = Some(cfg.start);
    std::fs::write(out, file.to_text())?;
    Ok(())
}

fn decode(model: &Path, input: &Path, out: &Path, noise_var: Option<f64>) -> Result<()> {
    let file = ModelFile::parse(&std::fs::read_to_string(model)?)?;
    let samples = parse_samples(&std::fs::read_to_string(input)?)?;
    let bits = file.decode_samples(&samples, noise_var)?;
    std::fs::write(out, format_bits(&bits))?;
    Ok(())
}

fn sweep(cli: &Cli, config: &Path, out_dir: &Path) -> Result<()> {
    let cfg = load_config(config, cli)?;
    let records = harness::run_sweep(&cfg)?;
    let path = out_dir.join(format!("{}.csv", config_name(config)?));
    harness::write_csv(&path, &records, cfg.timing)?;
    println!("{}", path.display());
    Ok(())
}

fn repro(cli: &Cli, figure: &str, out_dir: &Path) -> Result<()> {
    let fig = Figure::parse(figure)?;
    let seed = cli.seed.unwrap_or(0);
    let test_bits = cli.test_bits.unwrap_or(harness::DEFAULT_TEST_BITS);
    for path in run_figure(fig, seed, test_bits, cli.timing, out_dir)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn simulate(
    cli: &Cli,
    config: &Path,
    ebn0: f64,
    bits: usize,
    samples_out: &Path,
    bits_out: &Path,
) -> Result<()> {
    let cfg = load_config(config, cli)?;
    let mut rng = stream_rng(cfg.seed, harness::point_stream(ebn0, harness::ROLE_TEST));
    let data = harness::generate_dataset(&cfg, ebn0, bits, &mut rng)?;
    std::fs::write(samples_out, format_samples(&data.channel_out))?;
    std::fs::write(bits_out, format_bits(&data.data_bits))?;
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.cmd {
        Command::Train {
            config,
            out,
            decoder,
            ebn0,
        } => train(cli, config, out, decoder.as_deref(), *ebn0),
        Command::Decode {
            model,
            input,
            out,
            noise_var,
        } => decode(model, input, out, *noise_var),
        Command::Sweep { config, out_dir } => sweep(cli, config, out_dir),
        Command::Repro { figure, out_dir } => repro(cli, figure, out_dir),
        Command::Simulate {
            config,
            ebn0,
            bits,
            samples_out,
            bits_out,
        } => simulate(cli, config, *ebn0, *bits, samples_out, bits_out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
