//! End-to-end orchestration: corpus ingestion with size/duplicate/minified
//! filters, training of both networks from mangled sources, bundle
//! persistence, and corpus evaluation.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autoencoder::{train_autoencoder_with, AutoencoderModel};
use crate::bundle::{sha256_hex, Hyperparams, ModelBundle, TrainMeta};
use crate::context::extract_all;
use crate::error::{Error, Result};
use crate::eval::{
    aggregate, baseline, score_file, EvalReport, TimingStats, ALL_ONCE, ALL_REPEAT, LOCAL_ONCE,
    LOCAL_REPEAT,
};
use crate::js::{analyze, filter_tokens, mangle};
use crate::nn::TrainConfig;
use crate::predictor::{train_predictor_with, PredictorModel};
use crate::recovery::recover_names;
use crate::vocab::{FreqTable, Vocabulary};

/// Character-count ceiling for accepted files.
pub const MAX_CHARS: usize = 131_072;
/// Files whose mean local-identifier length falls below this are treated as
/// already minified.
pub const MIN_MEAN_IDENT_LEN: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    TooLarge,
    ParseFailure,
    AlreadyMinified,
    Duplicate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IngestStatus {
    Accepted,
    Rejected,
}

/// One manifest record, serialized as a line of JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tokens: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub locals: Option<u64>,
    pub status: IngestStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<RejectReason>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn accepted_paths(&self) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|e| e.status == IngestStatus::Accepted)
            .map(|e| e.path.as_str())
            .collect()
    }

    /// Line-delimited JSON, one record per file.
    pub fn to_ldjson(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("manifest entry serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_ldjson(text: &str) -> Result<Self> {
        let entries = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                serde_json::from_str(l)
                    .map_err(|e| Error::Config(format!("invalid manifest line: {e}")))
            })
            .collect::<Result<Vec<ManifestEntry>>>()?;
        Ok(CorpusManifest { entries })
    }
}

/// Scans `dir` for `.js` files and applies the ingestion filters, in
/// deterministic path order: size cap, content-duplicate rejection, parse
/// check, and the already-minified heuristic.
pub fn ingest(dir: &Path, jobs: usize) -> Result<CorpusManifest> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().map(|x| x == "js").unwrap_or(false))
        .collect();
    paths.sort();

    struct FileCheck {
        path: String,
        bytes: u64,
        digest: String,
        outcome: std::result::Result<(u64, u64, f64), RejectReason>,
    }

    let check = |path: &PathBuf| -> Result<FileCheck> {
        let content = fs::read_to_string(path)?;
        let path_str = path.to_string_lossy().to_string();
        let bytes = content.len() as u64;
        let digest = sha256_hex(content.as_bytes());
        if content.chars().count() > MAX_CHARS {
            return Ok(FileCheck { path: path_str, bytes, digest, outcome: Err(RejectReason::TooLarge) });
        }
        let analysis = match analyze(&content) {
            Ok(a) => a,
            Err(_) => {
                return Ok(FileCheck {
                    path: path_str,
                    bytes,
                    digest,
                    outcome: Err(RejectReason::ParseFailure),
                })
            }
        };
        let tokens = analysis.tokens.len() as u64;
        let locals = analysis.names.len() as u64;
        let mean_len = if locals > 0 {
            analysis.names.iter().map(|n| n.name.chars().count()).sum::<usize>() as f64
                / locals as f64
        } else {
            f64::INFINITY
        };
        Ok(FileCheck { path: path_str, bytes, digest, outcome: Ok((tokens, locals, mean_len)) })
    };

    let checks: Vec<FileCheck> = run_parallel(jobs, || {
        paths.par_iter().map(check).collect::<Result<Vec<_>>>()
    })?;

    let mut seen = HashSet::new();
    let mut entries = Vec::with_capacity(checks.len());
    for c in checks {
        let (status, reason, tokens, locals) = match c.outcome {
            Err(reason) => (IngestStatus::Rejected, Some(reason), None, None),
            Ok((tokens, locals, mean_len)) => {
                if !seen.insert(c.digest.clone()) {
                    (IngestStatus::Rejected, Some(RejectReason::Duplicate), None, None)
                } else if locals > 0 && mean_len < MIN_MEAN_IDENT_LEN {
                    (
                        IngestStatus::Rejected,
                        Some(RejectReason::AlreadyMinified),
                        Some(tokens),
                        Some(locals),
                    )
                } else {
                    (IngestStatus::Accepted, None, Some(tokens), Some(locals))
                }
            }
        };
        entries.push(ManifestEntry { path: c.path, bytes: c.bytes, tokens, locals, status, reason });
    }
    Ok(CorpusManifest { entries })
}

fn run_parallel<T, F>(jobs: usize, work: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> Result<T> + Send,
{
    if jobs <= 1 {
        return work();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(work)
}

/// Everything `train` needs besides the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub hyper: Hyperparams,
    pub config: TrainConfig,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings { hyper: Hyperparams::desk(), config: TrainConfig::default() }
    }
}

/// Parses a flat `key = value` configuration file into overrides on top of
/// `base`. Unknown keys are errors.
pub fn apply_config_file(base: &mut TrainSettings, text: &str) -> Result<()> {
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        let key = key.trim();
        let value = value.trim();
        let bad =
            |what: &str| Error::Config(format!("line {}: bad {what}: {value}", lineno + 1));
        match key {
            "q" => base.hyper.q = value.parse().map_err(|_| bad("integer"))?,
            "l" => base.hyper.l = value.parse().map_err(|_| bad("integer"))?,
            "vin" => base.hyper.vin = value.parse().map_err(|_| bad("integer"))?,
            "vout" => base.hyper.vout = value.parse().map_err(|_| bad("integer"))?,
            "embed" => base.hyper.embed = value.parse().map_err(|_| bad("integer"))?,
            "hidden" => base.hyper.hidden = value.parse().map_err(|_| bad("integer"))?,
            "seed" => base.config.seed = value.parse().map_err(|_| bad("integer"))?,
            "epochs" => base.config.epochs = value.parse().map_err(|_| bad("integer"))?,
            "batch_size" => base.config.batch_size = value.parse().map_err(|_| bad("integer"))?,
            "learning_rate" => {
                base.config.learning_rate = value.parse().map_err(|_| bad("number"))?
            }
            "clip_norm" => base.config.clip_norm = value.parse().map_err(|_| bad("number"))?,
            "lr_decay" => base.config.lr_decay = value.parse().map_err(|_| bad("number"))?,
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
    }
    Ok(())
}

/// Per-file training data gathered before vocabulary construction.
struct FileData {
    contexts: Vec<crate::context::Context>,
    /// (context list per name, original name) pairs.
    pairs: Vec<(Vec<crate::context::Context>, String)>,
}

fn collect_file(source: &str, seed: u64, q: usize, l: usize) -> Result<FileData> {
    let mangled = mangle(source, seed)?;
    let analysis = analyze(&mangled.minified)?;
    let stream = filter_tokens(&analysis.tokens);
    let summaries = extract_all(&stream, &analysis.names, q, l)?;

    let mut contexts = Vec::new();
    let mut pairs = Vec::new();
    for summary in summaries {
        let b = analysis.scopes.binding(summary.owner.binding);
        let key_scope = analysis.scopes.path(b.scope);
        let orig = mangled
            .map
            .entries
            .iter()
            .find(|e| e.scope == key_scope && e.min == b.name)
            .map(|e| e.orig.clone())
            .ok_or_else(|| {
                Error::MapMismatch(format!("no rename entry for {key_scope}:{}", b.name))
            })?;
        contexts.extend(summary.contexts.iter().cloned());
        pairs.push((summary.contexts, orig));
    }
    Ok(FileData { contexts, pairs })
}

/// Trains both networks from the manifest's accepted files and assembles the
/// bundle. `checkpoint` gets a partial bundle written after every epoch.
pub fn train(
    manifest: &CorpusManifest,
    settings: &TrainSettings,
    checkpoint: Option<&Path>,
) -> Result<ModelBundle> {
    let paths = manifest.accepted_paths();
    if paths.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    settings.config.validate()?;
    let hyper = settings.hyper;
    let config = &settings.config;

    let mut corpus_digests = Vec::new();
    let mut files = Vec::new();
    for path in &paths {
        let content = fs::read_to_string(path)?;
        corpus_digests.push(sha256_hex(content.as_bytes()));
        files.push(collect_file(&content, config.seed, hyper.q, hyper.l)?);
    }
    corpus_digests.sort();
    let corpus_digest = sha256_hex(corpus_digests.join("\n").as_bytes());

    // Vocabularies from the full multisets.
    let mut token_freqs = FreqTable::new();
    let mut name_freqs = FreqTable::new();
    for f in &files {
        for c in &f.contexts {
            token_freqs.add_context(c);
        }
        for (_, orig) in &f.pairs {
            name_freqs.add(orig);
        }
    }
    let input_vocab = Vocabulary::build_input(&token_freqs, hyper.vin);
    let output_vocab = Vocabulary::build_output(&name_freqs, hyper.vout);
    info!(
        "vocabularies: input {} entries, output {} entries",
        input_vocab.len(),
        output_vocab.len()
    );

    // The autoencoder sees each distinct context once; duplicates add
    // nothing to reconstruction but multiply the epoch cost.
    let mut seen = HashSet::new();
    let mut ae_contexts = Vec::new();
    for f in &files {
        for c in &f.contexts {
            if seen.insert(c.clone()) {
                ae_contexts.push(input_vocab.encode_context(c));
            }
        }
    }
    info!("training autoencoder on {} distinct contexts", ae_contexts.len());

    let make_partial_bundle = |ae: &AutoencoderModel, pr: &PredictorModel| -> ModelBundle {
        ModelBundle {
            autoencoder: ae.clone(),
            predictor: pr.clone(),
            input_vocab: input_vocab.clone(),
            output_vocab: output_vocab.clone(),
            hyper,
            meta: TrainMeta {
                seed: config.seed,
                epochs: config.epochs,
                learning_rate: config.learning_rate,
                batch_size: config.batch_size,
                clip_norm: config.clip_norm,
                lr_decay: config.lr_decay,
                corpus_digest: corpus_digest.clone(),
                vocab_in_digest: input_vocab.digest(),
                vocab_out_digest: output_vocab.digest(),
            },
        }
    };

    let placeholder_predictor = PredictorModel::new(
        hyper.embed,
        hyper.l,
        hyper.hidden,
        output_vocab.len(),
        config.seed,
    );
    let (autoencoder, _) = train_autoencoder_with(
        &ae_contexts,
        input_vocab.len(),
        hyper.q,
        hyper.embed,
        config,
        |_, model, _| {
            if let Some(path) = checkpoint {
                let _ = make_partial_bundle(model, &placeholder_predictor)
                    .save(&path.with_extension("ckpt"));
            }
        },
    )?;

    // Embed every summary with the trained encoder.
    let mut train_pairs = Vec::new();
    for f in &files {
        for (contexts, orig) in &f.pairs {
            let embs = contexts
                .iter()
                .map(|c| autoencoder.encode(&input_vocab.encode_context(c)))
                .collect::<Result<Vec<_>>>()?;
            let target = output_vocab.position(orig).unwrap_or_else(|| output_vocab.unk_pos());
            train_pairs.push((embs, target));
        }
    }
    info!("training predictor on {} summaries", train_pairs.len());

    let (predictor, _) = train_predictor_with(
        &train_pairs,
        hyper.embed,
        hyper.l,
        hyper.hidden,
        output_vocab.len(),
        config,
        |_, model, _| {
            if let Some(path) = checkpoint {
                let _ =
                    make_partial_bundle(&autoencoder, model).save(&path.with_extension("ckpt"));
            }
        },
    )?;

    ModelBundle::new(
        autoencoder,
        predictor,
        input_vocab,
        output_vocab,
        hyper,
        config,
        corpus_digest,
    )
}

/// Mangles each original file with the bundle's seed, recovers it, and
/// scores against the rename map. Files run in parallel; the reduction is
/// order-independent.
pub fn evaluate_corpus(bundle: &ModelBundle, paths: &[PathBuf], jobs: usize) -> Result<EvalReport> {
    if paths.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    struct FileEval {
        local_once: crate::eval::FileScore,
        local_repeat: crate::eval::FileScore,
        all_once: crate::eval::FileScore,
        all_repeat: crate::eval::FileScore,
        baseline_all_once: crate::eval::FileScore,
        total_ms: f64,
    }
    let eval_one = |path: &PathBuf| -> Result<FileEval> {
        let content = fs::read_to_string(path)?;
        let mangled = mangle(&content, bundle.meta.seed)?;
        let output = recover_names(&mangled.minified, bundle)?;
        let analysis = analyze(&mangled.minified)?;
        Ok(FileEval {
            local_once: score_file(&mangled.map, &output.map, &analysis, LOCAL_ONCE)?,
            local_repeat: score_file(&mangled.map, &output.map, &analysis, LOCAL_REPEAT)?,
            all_once: score_file(&mangled.map, &output.map, &analysis, ALL_ONCE)?,
            all_repeat: score_file(&mangled.map, &output.map, &analysis, ALL_REPEAT)?,
            baseline_all_once: baseline(&mangled.map, &analysis, ALL_ONCE)?,
            total_ms: output.timings.total_ms(),
        })
    };
    let evals: Vec<FileEval> =
        run_parallel(jobs, || paths.par_iter().map(eval_one).collect::<Result<Vec<_>>>())?;

    let times: Vec<f64> = evals.iter().map(|e| e.total_ms).collect();
    Ok(EvalReport {
        local_once: aggregate(&evals.iter().map(|e| e.local_once).collect::<Vec<_>>())?,
        local_repeat: aggregate(&evals.iter().map(|e| e.local_repeat).collect::<Vec<_>>())?,
        all_once: aggregate(&evals.iter().map(|e| e.all_once).collect::<Vec<_>>())?,
        all_repeat: aggregate(&evals.iter().map(|e| e.all_repeat).collect::<Vec<_>>())?,
        baseline_all_once: aggregate(
            &evals.iter().map(|e| e.baseline_all_once).collect::<Vec<_>>(),
        )?,
        timing: TimingStats::from_samples(&times)?,
    })
}

/// Coverage of a directory's corpus by a bundle's vocabularies: the corpus
/// is mangled and summarized exactly as at training time.
pub fn vocab_coverage(
    bundle: &ModelBundle,
    paths: &[PathBuf],
) -> Result<(crate::vocab::Coverage, crate::vocab::Coverage)> {
    let mut token_freqs = FreqTable::new();
    let mut name_freqs = FreqTable::new();
    for path in paths {
        let content = fs::read_to_string(path)?;
        let data = collect_file(&content, bundle.meta.seed, bundle.hyper.q, bundle.hyper.l)?;
        for c in &data.contexts {
            token_freqs.add_context(c);
        }
        for (_, orig) in &data.pairs {
            name_freqs.add(orig);
        }
    }
    Ok((
        bundle.input_vocab.coverage(&token_freqs)?,
        bundle.output_vocab.coverage(&name_freqs)?,
    ))
}
