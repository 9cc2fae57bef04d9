//! Trained model bundle: both networks, both vocabularies (embedded and
//! digest-pinned), the hyperparameter record, and training metadata, all in
//! one container file.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::autoencoder::AutoencoderModel;
use crate::error::{Error, Result};
use crate::nn::{Container, LstmCell, Matrix, TrainConfig};
use crate::predictor::PredictorModel;
use crate::vocab::Vocabulary;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Network and extraction dimensions shared across the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hyperparams {
    /// Context half-width.
    pub q: usize,
    /// Contexts per usage summary.
    pub l: usize,
    /// Input vocabulary size.
    pub vin: usize,
    /// Output vocabulary size.
    pub vout: usize,
    /// Embedding size.
    pub embed: usize,
    /// Predictor hidden size.
    pub hidden: usize,
}

impl Hyperparams {
    /// Small dimensions that train in minutes on one core.
    pub fn desk() -> Self {
        Hyperparams { q: 3, l: 3, vin: 256, vout: 512, embed: 16, hidden: 64 }
    }

    /// Full-scale dimensions.
    pub fn paper() -> Self {
        Hyperparams { q: 5, l: 5, vin: 4096, vout: 60000, embed: 80, hidden: 3500 }
    }
}

/// Provenance of a trained bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainMeta {
    pub seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub clip_norm: f64,
    pub lr_decay: f64,
    pub corpus_digest: String,
    pub vocab_in_digest: String,
    pub vocab_out_digest: String,
}

#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub autoencoder: AutoencoderModel,
    pub predictor: PredictorModel,
    pub input_vocab: Vocabulary,
    pub output_vocab: Vocabulary,
    pub hyper: Hyperparams,
    pub meta: TrainMeta,
}

impl ModelBundle {
    /// Assembles a bundle, computing the vocabulary digests.
    pub fn new(
        autoencoder: AutoencoderModel,
        predictor: PredictorModel,
        input_vocab: Vocabulary,
        output_vocab: Vocabulary,
        hyper: Hyperparams,
        config: &TrainConfig,
        corpus_digest: String,
    ) -> Result<Self> {
        let meta = TrainMeta {
            seed: config.seed,
            epochs: config.epochs,
            learning_rate: config.learning_rate,
            batch_size: config.batch_size,
            clip_norm: config.clip_norm,
            lr_decay: config.lr_decay,
            corpus_digest,
            vocab_in_digest: input_vocab.digest(),
            vocab_out_digest: output_vocab.digest(),
        };
        let bundle =
            ModelBundle { autoencoder, predictor, input_vocab, output_vocab, hyper, meta };
        bundle.validate()?;
        Ok(bundle)
    }

    /// Cross-checks digests and shared dimensions.
    pub fn validate(&self) -> Result<()> {
        if self.input_vocab.digest() != self.meta.vocab_in_digest {
            return Err(Error::ModelMismatch("input vocabulary digest mismatch".into()));
        }
        if self.output_vocab.digest() != self.meta.vocab_out_digest {
            return Err(Error::ModelMismatch("output vocabulary digest mismatch".into()));
        }
        let h = &self.hyper;
        let ae = &self.autoencoder;
        let pr = &self.predictor;
        let consistent = ae.q == h.q
            && ae.embed_size == h.embed
            && ae.vocab_size == self.input_vocab.len()
            && pr.embed_size == h.embed
            && pr.summary_len == h.l
            && pr.hidden_size == h.hidden
            && pr.vocab_size == self.output_vocab.len();
        if !consistent {
            return Err(Error::ModelMismatch(
                "hyperparameters inconsistent across sub-models".into(),
            ));
        }
        Ok(())
    }

    fn to_container(&self) -> Container {
        let mut c = Container::default();
        let kv = &mut c.kv;
        kv.push(("q".into(), self.hyper.q.to_string()));
        kv.push(("l".into(), self.hyper.l.to_string()));
        kv.push(("vin".into(), self.hyper.vin.to_string()));
        kv.push(("vout".into(), self.hyper.vout.to_string()));
        kv.push(("embed".into(), self.hyper.embed.to_string()));
        kv.push(("hidden".into(), self.hyper.hidden.to_string()));
        kv.push(("seed".into(), self.meta.seed.to_string()));
        kv.push(("epochs".into(), self.meta.epochs.to_string()));
        kv.push(("learning_rate".into(), self.meta.learning_rate.to_string()));
        kv.push(("batch_size".into(), self.meta.batch_size.to_string()));
        kv.push(("clip_norm".into(), self.meta.clip_norm.to_string()));
        kv.push(("lr_decay".into(), self.meta.lr_decay.to_string()));
        kv.push(("corpus_digest".into(), self.meta.corpus_digest.clone()));
        kv.push(("vocab_in_digest".into(), self.meta.vocab_in_digest.clone()));
        kv.push(("vocab_out_digest".into(), self.meta.vocab_out_digest.clone()));
        c.blobs.push(("vocab.input".into(), self.input_vocab.serialize().into_bytes()));
        c.blobs.push(("vocab.output".into(), self.output_vocab.serialize().into_bytes()));
        for (prefix, cell) in [
            ("ae.enc", &self.autoencoder.encoder),
            ("ae.dec", &self.autoencoder.decoder),
            ("pr.lstm", &self.predictor.lstm),
        ] {
            for (suffix, rows, cols, data) in cell.tensors() {
                c.tensors.push((format!("{prefix}.{suffix}"), Matrix::from_vec(rows, cols, data)));
            }
        }
        c.tensors.push((
            "pr.out.w".into(),
            Matrix::from_vec(
                self.predictor.readout.out_size(),
                self.predictor.readout.in_size(),
                self.predictor.readout.weights.data().to_vec(),
            ),
        ));
        c.tensors
            .push(("pr.out.b".into(), Matrix::from_vec(1, self.predictor.readout.out_size(), self.predictor.readout.bias.clone())));
        c
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.to_container().write_to(&mut w)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let c = Container::read_from(&mut r)?;
        Self::from_container(&c)
    }

    fn from_container(c: &Container) -> Result<Self> {
        let hyper = Hyperparams {
            q: c.require_usize("q")?,
            l: c.require_usize("l")?,
            vin: c.require_usize("vin")?,
            vout: c.require_usize("vout")?,
            embed: c.require_usize("embed")?,
            hidden: c.require_usize("hidden")?,
        };
        let parse_f64 = |key: &str| -> Result<f64> {
            c.require(key)?
                .parse()
                .map_err(|_| Error::Model(format!("key `{key}` is not a number")))
        };
        let meta = TrainMeta {
            seed: c
                .require("seed")?
                .parse()
                .map_err(|_| Error::Model("key `seed` is not an integer".into()))?,
            epochs: c.require_usize("epochs")?,
            learning_rate: parse_f64("learning_rate")?,
            batch_size: c.require_usize("batch_size")?,
            clip_norm: parse_f64("clip_norm")?,
            lr_decay: parse_f64("lr_decay")?,
            corpus_digest: c.require("corpus_digest")?.to_string(),
            vocab_in_digest: c.require("vocab_in_digest")?.to_string(),
            vocab_out_digest: c.require("vocab_out_digest")?.to_string(),
        };

        let vocab_text = |name: &str| -> Result<String> {
            let bytes = c
                .blob(name)
                .ok_or_else(|| Error::Model(format!("missing blob `{name}`")))?;
            String::from_utf8(bytes.to_vec())
                .map_err(|_| Error::Model(format!("blob `{name}` is not UTF-8")))
        };
        let input_vocab = Vocabulary::deserialize(&vocab_text("vocab.input")?)?;
        let output_vocab = Vocabulary::deserialize(&vocab_text("vocab.output")?)?;

        let load_cell = |prefix: &str, input_size: usize, hidden_size: usize| -> Result<LstmCell> {
            let mut cell = LstmCell::zeros(input_size, hidden_size);
            let fields: [(&str, &mut Matrix); 8] = [
                ("wx_i", &mut cell.wx_i),
                ("wh_i", &mut cell.wh_i),
                ("wx_f", &mut cell.wx_f),
                ("wh_f", &mut cell.wh_f),
                ("wx_o", &mut cell.wx_o),
                ("wh_o", &mut cell.wh_o),
                ("wx_g", &mut cell.wx_g),
                ("wh_g", &mut cell.wh_g),
            ];
            for (suffix, slot) in fields {
                let t = c.tensor(&format!("{prefix}.{suffix}"))?;
                if (t.rows, t.cols) != (slot.rows, slot.cols) {
                    return Err(Error::Model(format!(
                        "tensor {prefix}.{suffix} has shape {}x{}, expected {}x{}",
                        t.rows, t.cols, slot.rows, slot.cols
                    )));
                }
                *slot = t.clone();
            }
            let biases: [(&str, &mut Vec<f64>); 4] = [
                ("b_i", &mut cell.b_i),
                ("b_f", &mut cell.b_f),
                ("b_o", &mut cell.b_o),
                ("b_g", &mut cell.b_g),
            ];
            for (suffix, slot) in biases {
                let t = c.tensor(&format!("{prefix}.{suffix}"))?;
                if t.data().len() != slot.len() {
                    return Err(Error::Model(format!("bias {prefix}.{suffix} has wrong length")));
                }
                *slot = t.data().to_vec();
            }
            Ok(cell)
        };

        let autoencoder = AutoencoderModel {
            encoder: load_cell("ae.enc", input_vocab.len(), hyper.embed)?,
            decoder: load_cell("ae.dec", hyper.embed, input_vocab.len())?,
            q: hyper.q,
            vocab_size: input_vocab.len(),
            embed_size: hyper.embed,
        };
        let mut readout =
            crate::nn::DenseSoftmax::zeros(output_vocab.len(), hyper.hidden);
        let w = c.tensor("pr.out.w")?;
        if (w.rows, w.cols) != (output_vocab.len(), hyper.hidden) {
            return Err(Error::Model("tensor pr.out.w has wrong shape".into()));
        }
        readout.weights = w.clone();
        let b = c.tensor("pr.out.b")?;
        if b.data().len() != output_vocab.len() {
            return Err(Error::Model("tensor pr.out.b has wrong length".into()));
        }
        readout.bias = b.data().to_vec();
        let predictor = PredictorModel {
            lstm: load_cell("pr.lstm", hyper.embed, hyper.hidden)?,
            readout,
            embed_size: hyper.embed,
            summary_len: hyper.l,
            hidden_size: hyper.hidden,
            vocab_size: output_vocab.len(),
        };

        let bundle =
            ModelBundle { autoencoder, predictor, input_vocab, output_vocab, hyper, meta };
        bundle.validate()?;
        Ok(bundle)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::FreqTable;

    fn tiny_bundle(seed: u64) -> ModelBundle {
        let mut in_freqs = FreqTable::new();
        for t in ["var", ";", "=", "+"] {
            in_freqs.add(t);
        }
        let mut out_freqs = FreqTable::new();
        for n in ["count", "index", "total"] {
            out_freqs.add(n);
        }
        let hyper = Hyperparams { q: 2, l: 2, vin: 8, vout: 4, embed: 4, hidden: 6 };
        let input_vocab = Vocabulary::build_input(&in_freqs, hyper.vin);
        let output_vocab = Vocabulary::build_output(&out_freqs, hyper.vout);
        let ae = AutoencoderModel::new(input_vocab.len(), hyper.q, hyper.embed, seed);
        let pr = PredictorModel::new(hyper.embed, hyper.l, hyper.hidden, output_vocab.len(), seed);
        let config = TrainConfig { seed, ..TrainConfig::default() };
        ModelBundle::new(ae, pr, input_vocab, output_vocab, hyper, &config, "none".into())
            .unwrap()
    }

    #[test]
    fn bundle_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        let bundle = tiny_bundle(42);
        bundle.save(&path).unwrap();
        let loaded = ModelBundle::load(&path).unwrap();

        let path2 = dir.path().join("model2.bin");
        loaded.save(&path2).unwrap();
        let a = std::fs::read(&path).unwrap();
        let b = std::fs::read(&path2).unwrap();
        assert_eq!(a, b);
        assert_eq!(loaded.meta, bundle.meta);
        assert_eq!(loaded.hyper, bundle.hyper);
    }

    #[test]
    fn corrupted_vocab_digest_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        let mut bundle = tiny_bundle(42);
        bundle.meta.vocab_in_digest = format!("{:064}", 0);
        assert!(matches!(bundle.validate(), Err(Error::ModelMismatch(_))));
        // A save of a tampered bundle still writes; the mismatch must be
        // caught at load.
        bundle.to_container().write_to(&mut std::io::BufWriter::new(
            File::create(&path).unwrap(),
        )).unwrap();
        assert!(matches!(ModelBundle::load(&path), Err(Error::ModelMismatch(_))));
    }

    #[test]
    fn inconsistent_dims_are_rejected() {
        let mut bundle = tiny_bundle(1);
        bundle.hyper.embed = 99;
        assert!(matches!(bundle.validate(), Err(Error::ModelMismatch(_))));
    }
}
