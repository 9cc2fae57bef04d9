//! Command-line front end for the unmangle toolkit.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (bad input files,
//! configs, or corpora), 3 model error (corrupt or mismatched bundles,
//! training divergence).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use unmangle::bundle::ModelBundle;
use unmangle::eval::round2;
use unmangle::js;
use unmangle::pipeline::{self, apply_config_file, CorpusManifest, TrainSettings};
use unmangle::recovery::recover_names;
use unmangle::Error;

#[derive(Parser)]
#[command(name = "unmangle", version, about = "Recovers natural names for minified JavaScript locals")]
struct Cli {
    /// Worker threads for per-file phases (ingest, evaluate).
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Scan a directory of .js files and emit the corpus manifest.
    Ingest {
        dir: PathBuf,
        /// Write the manifest here instead of stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Train both networks from an ingested manifest.
    Train {
        manifest: PathBuf,
        /// Output path for the model bundle.
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: TrainOverrides,
    },
    /// Recover names in a minified file; prints the result to stdout.
    Recover {
        bundle: PathBuf,
        file: PathBuf,
        /// Also write the prediction map as JSON.
        #[arg(short = 'm', long)]
        map_out: Option<PathBuf>,
    },
    /// Mangle, recover, and score every file in a directory.
    Evaluate { bundle: PathBuf, dir: PathBuf },
    /// Describe a bundle's vocabularies; with a directory, report coverage.
    VocabReport { bundle: PathBuf, dir: Option<PathBuf> },
    /// Replace local names with short ones; prints the result to stdout.
    Mangle {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also write the rename map as JSON.
        #[arg(short = 'm', long)]
        map_out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct TrainOverrides {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Context half-width.
    #[arg(long)]
    q: Option<usize>,
    /// Contexts per usage summary.
    #[arg(long)]
    l: Option<usize>,
    /// Input vocabulary size.
    #[arg(long)]
    vin: Option<usize>,
    /// Output vocabulary size.
    #[arg(long)]
    vout: Option<usize>,
    /// Embedding size.
    #[arg(long)]
    embed: Option<usize>,
    /// Predictor hidden size.
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes, not usage errors.
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_model_error() { 3 } else { 2 })
        }
    }
}

fn run(cli: Cli) -> unmangle::Result<()> {
    match cli.cmd {
        Cmd::Ingest { dir, out } => {
            let manifest = pipeline::ingest(&dir, cli.jobs)?;
            let accepted = manifest.accepted_paths().len();
            let text = manifest.to_ldjson();
            match out {
                Some(path) => fs::write(path, text)?,
                None => print!("{text}"),
            }
            eprintln!(
                "{} files: {} accepted, {} rejected",
                manifest.entries.len(),
                accepted,
                manifest.entries.len() - accepted
            );
            Ok(())
        }
        Cmd::Train { manifest, out, overrides } => {
            let manifest = CorpusManifest::from_ldjson(&fs::read_to_string(manifest)?)?;
            let settings = resolve_settings(overrides)?;
            let bundle = pipeline::train(&manifest, &settings, Some(&out))?;
            bundle.save(&out)?;
            let _ = fs::remove_file(out.with_extension("ckpt"));
            eprintln!("bundle written to {}", out.display());
            Ok(())
        }
        Cmd::Recover { bundle, file, map_out } => {
            let bundle = ModelBundle::load(&bundle)?;
            let source = fs::read_to_string(file)?;
            let output = recover_names(&source, &bundle)?;
            if let Some(path) = map_out {
                fs::write(path, output.map.to_json())?;
            }
            let t = &output.timings;
            eprintln!(
                "timings ms: extract {:.1}, embed {:.1}, predict {:.1}, assign {:.1}",
                t.extract_ms, t.embed_ms, t.predict_ms, t.assign_ms
            );
            print!("{}", output.source);
            Ok(())
        }
        Cmd::Evaluate { bundle, dir } => {
            let bundle = ModelBundle::load(&bundle)?;
            let manifest = pipeline::ingest(&dir, cli.jobs)?;
            let paths: Vec<PathBuf> =
                manifest.accepted_paths().iter().map(PathBuf::from).collect();
            let report = pipeline::evaluate_corpus(&bundle, &paths, cli.jobs)?;
            eprint!("{}", report.table());
            println!("{}", report.to_json());
            Ok(())
        }
        Cmd::VocabReport { bundle, dir } => {
            let bundle = ModelBundle::load(&bundle)?;
            for (label, vocab, digest) in [
                ("input", &bundle.input_vocab, &bundle.meta.vocab_in_digest),
                ("output", &bundle.output_vocab, &bundle.meta.vocab_out_digest),
            ] {
                println!(
                    "{label} vocabulary: {} entries{}  digest {}",
                    vocab.len(),
                    if vocab.truncated { " (truncated)" } else { "" },
                    digest
                );
                let head: Vec<&str> =
                    vocab.entries().iter().take(10).map(String::as_str).collect();
                println!("  head: {}", head.join(" "));
            }
            if let Some(dir) = dir {
                let manifest = pipeline::ingest(&dir, cli.jobs)?;
                let paths: Vec<PathBuf> =
                    manifest.accepted_paths().iter().map(PathBuf::from).collect();
                let (input_cov, output_cov) = pipeline::vocab_coverage(&bundle, &paths)?;
                println!(
                    "input coverage: unique {:.2}%, occurrences {:.2}%",
                    round2(input_cov.unique_pct),
                    round2(input_cov.occurrence_pct)
                );
                println!(
                    "output coverage: unique {:.2}%, occurrences {:.2}%",
                    round2(output_cov.unique_pct),
                    round2(output_cov.occurrence_pct)
                );
            }
            Ok(())
        }
        Cmd::Mangle { file, seed, map_out } => {
            let source = fs::read_to_string(file)?;
            let output = js::mangle(&source, seed)?;
            if let Some(path) = map_out {
                fs::write(path, output.map.to_json())?;
            }
            print!("{}", output.minified);
            Ok(())
        }
    }
}

/// Defaults, then the config file, then explicit flags.
fn resolve_settings(ov: TrainOverrides) -> unmangle::Result<TrainSettings> {
    let mut settings = TrainSettings::default();
    if let Some(path) = &ov.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        apply_config_file(&mut settings, &text)?;
    }
    if let Some(v) = ov.seed {
        settings.config.seed = v;
    }
    if let Some(v) = ov.q {
        settings.hyper.q = v;
    }
    if let Some(v) = ov.l {
        settings.hyper.l = v;
    }
    if let Some(v) = ov.vin {
        settings.hyper.vin = v;
    }
    if let Some(v) = ov.vout {
        settings.hyper.vout = v;
    }
    if let Some(v) = ov.embed {
        settings.hyper.embed = v;
    }
    if let Some(v) = ov.hidden {
        settings.hyper.hidden = v;
    }
    if let Some(v) = ov.epochs {
        settings.config.epochs = v;
    }
    if let Some(v) = ov.learning_rate {
        settings.config.learning_rate = v;
    }
    if let Some(v) = ov.batch_size {
        settings.config.batch_size = v;
    }
    Ok(settings)
}
