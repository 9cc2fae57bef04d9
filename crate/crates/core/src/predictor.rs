//! Name prediction network: the embedding sequence of a usage summary is
//! reversed (so padding embeddings come first), run through a single LSTM,
//! and the final hidden state is read out through a softmax over the output
//! vocabulary. The resulting distribution doubles as a ranked list.

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autoencoder::{Embedding, TrainLog};
use crate::error::{Error, Result};
use crate::nn::{cross_entropy, DenseGrads, DenseSoftmax, LstmCell, LstmGrads, MomentumSgd,
    StepInput, TrainConfig};
use crate::vocab::Vocabulary;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorModel {
    pub lstm: LstmCell,
    pub readout: DenseSoftmax,
    pub embed_size: usize,
    /// Number of embeddings per summary (`l`).
    pub summary_len: usize,
    pub hidden_size: usize,
    pub vocab_size: usize,
}

/// Names ordered by descending probability. Probability ties keep the lower
/// vocabulary index first. `<UNK>` stays in the ranking but is flagged, and
/// the recovery step never assigns it.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedPredictions {
    entries: Vec<RankedName>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedName {
    pub name: String,
    pub prob: f64,
    pub vocab_index: usize,
    pub unk: bool,
}

impl RankedPredictions {
    /// Wraps pre-sorted entries, for tests that inject fixed rankings.
    pub fn from_entries(entries: Vec<RankedName>) -> Self {
        RankedPredictions { entries }
    }

    pub fn entries(&self) -> &[RankedName] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl PredictorModel {
    pub fn new(
        embed_size: usize,
        summary_len: usize,
        hidden_size: usize,
        vocab_size: usize,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PredictorModel {
            lstm: LstmCell::init(embed_size, hidden_size, &mut rng),
            readout: DenseSoftmax::init(vocab_size, hidden_size, &mut rng),
            embed_size,
            summary_len,
            hidden_size,
            vocab_size,
        }
    }

    fn check_embeddings(&self, embeddings: &[Embedding]) -> Result<()> {
        if embeddings.len() != self.summary_len {
            return Err(Error::Shape(format!(
                "summary has {} embeddings, expected {}",
                embeddings.len(),
                self.summary_len
            )));
        }
        for e in embeddings {
            if e.len() != self.embed_size {
                return Err(Error::Shape(format!(
                    "embedding length {} != {}",
                    e.len(),
                    self.embed_size
                )));
            }
        }
        Ok(())
    }

    /// Probability distribution over the output vocabulary for one summary.
    /// The embedding sequence is reversed before entering the LSTM.
    pub fn predict_distribution(&self, embeddings: &[Embedding]) -> Result<Vec<f64>> {
        self.check_embeddings(embeddings)?;
        let inputs: Vec<StepInput> =
            embeddings.iter().rev().map(|e| StepInput::Dense(e.as_slice())).collect();
        let (state, _) = self.lstm.run(&inputs)?;
        self.readout.apply(&state.hidden)
    }

    /// Cross-entropy of one (summary, target) pair.
    pub fn example_loss(&self, embeddings: &[Embedding], target: usize) -> Result<f64> {
        let dist = self.predict_distribution(embeddings)?;
        Ok(cross_entropy(&dist, target))
    }

    /// Loss plus gradients flattened in [`PredictorModel::params_vec`] order.
    pub fn example_grads_flat(
        &self,
        embeddings: &[Embedding],
        target: usize,
    ) -> Result<(f64, Vec<f64>)> {
        self.check_embeddings(embeddings)?;
        let (loss, lg, dg, _) = self.example_grads(embeddings, target);
        let mut flat = lg.to_vec();
        flat.extend(dg.to_vec());
        Ok((loss, flat))
    }

    /// Loss and gradients for one (summary, target) pair.
    fn example_grads(
        &self,
        embeddings: &[Embedding],
        target: usize,
    ) -> (f64, LstmGrads, DenseGrads, bool) {
        let inputs: Vec<StepInput> =
            embeddings.iter().rev().map(|e| StepInput::Dense(e.as_slice())).collect();
        let trace = self.lstm.forward_trace(&inputs).expect("shapes checked");
        let hidden = trace.final_hidden().expect("non-empty summary");
        let probs = self.readout.apply(hidden).expect("shapes checked");
        let loss = cross_entropy(&probs, target);
        let correct = probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i == target)
            .unwrap_or(false);
        let (dense_grads, dh) = self.readout.backward(hidden, &probs, target);
        let mut d_hiddens = vec![vec![0.0; self.hidden_size]; trace.len()];
        *d_hiddens.last_mut().unwrap() = dh;
        let (lstm_grads, _) = self.lstm.backward(&trace, &d_hiddens, false);
        (loss, lstm_grads, dense_grads, correct)
    }

    pub fn params_vec(&self) -> Vec<f64> {
        let mut out = self.lstm.params_vec();
        out.extend(self.readout.params_vec());
        out
    }

    pub fn set_params(&mut self, params: &[f64]) {
        let n = self.lstm.param_count();
        self.lstm.set_params(&params[..n]);
        self.readout.set_params(&params[n..]);
    }

    /// Training top-1 accuracy over a pair corpus.
    pub fn top1_accuracy(&self, pairs: &[(Vec<Embedding>, usize)]) -> Result<f64> {
        if pairs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut correct = 0usize;
        for (embs, target) in pairs {
            let dist = self.predict_distribution(embs)?;
            let argmax = dist
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(i, _)| i)
                .unwrap();
            if argmax == *target {
                correct += 1;
            }
        }
        Ok(correct as f64 / pairs.len() as f64)
    }
}

/// Turns a probability vector into a ranked list over the vocabulary.
pub fn rank(dist: &[f64], vocab: &Vocabulary) -> Result<RankedPredictions> {
    if dist.len() != vocab.len() {
        return Err(Error::Shape(format!(
            "distribution width {} != vocab size {}",
            dist.len(),
            vocab.len()
        )));
    }
    let unk = vocab.unk_pos();
    let mut entries: Vec<RankedName> = dist
        .iter()
        .enumerate()
        .map(|(i, &p)| RankedName {
            name: vocab.entry(i).to_string(),
            prob: p,
            vocab_index: i,
            unk: i == unk,
        })
        .collect();
    entries.sort_by(|a, b| {
        b.prob.total_cmp(&a.prob).then_with(|| a.vocab_index.cmp(&b.vocab_index))
    });
    Ok(RankedPredictions { entries })
}

/// Trains a fresh predictor on (embedding sequence, target index) pairs.
pub fn train_predictor(
    pairs: &[(Vec<Embedding>, usize)],
    embed_size: usize,
    summary_len: usize,
    hidden_size: usize,
    vocab_size: usize,
    config: &TrainConfig,
) -> Result<(PredictorModel, TrainLog)> {
    train_predictor_with(
        pairs, embed_size, summary_len, hidden_size, vocab_size, config, |_, _, _| {},
    )
}

/// Like [`train_predictor`] with a per-epoch callback for checkpointing.
pub fn train_predictor_with<F>(
    pairs: &[(Vec<Embedding>, usize)],
    embed_size: usize,
    summary_len: usize,
    hidden_size: usize,
    vocab_size: usize,
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<(PredictorModel, TrainLog)>
where
    F: FnMut(usize, &PredictorModel, f64),
{
    if pairs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    config.validate()?;
    let mut model = PredictorModel::new(embed_size, summary_len, hidden_size, vocab_size, config.seed);
    for (embs, target) in pairs {
        model.check_embeddings(embs)?;
        if *target >= vocab_size {
            return Err(Error::Shape(format!(
                "target index {target} outside vocab of {vocab_size}"
            )));
        }
    }

    let mut log = TrainLog::default();
    let mut params = model.params_vec();
    let mut opt = MomentumSgd::new(params.len(), config.learning_rate, config.clip_norm);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(2));
    let mut order: Vec<usize> = (0..pairs.len()).collect();

    for epoch in 0..config.epochs {
        crate::autoencoder::shuffle(&mut order, &mut rng);
        let mut epoch_loss = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(config.batch_size) {
            let mut lstm_acc = LstmGrads::zeros(embed_size, hidden_size);
            let mut dense_acc = DenseGrads::zeros(vocab_size, hidden_size);
            for &idx in batch {
                let (embs, target) = &pairs[idx];
                let (loss, lg, dg, hit) = model.example_grads(embs, *target);
                epoch_loss += loss;
                correct += hit as usize;
                lstm_acc.accumulate(&lg);
                dense_acc.accumulate(&dg);
            }
            let scale = 1.0 / batch.len() as f64;
            let mut grads = lstm_acc.to_vec();
            grads.extend(dense_acc.to_vec());
            grads.iter_mut().for_each(|g| *g *= scale);
            opt.step(&mut params, &grads)?;
            model.set_params(&params);
        }
        epoch_loss /= pairs.len() as f64;
        let accuracy = correct as f64 / pairs.len() as f64;
        log.epoch_losses.push(epoch_loss);
        log.epoch_accuracy.push(accuracy);
        info!(
            "predictor epoch {}: loss {:.6}, top-1 {:.2}%",
            epoch + 1,
            epoch_loss,
            100.0 * accuracy
        );
        opt.learning_rate *= config.lr_decay;
        on_epoch(epoch, &model, epoch_loss);
    }
    Ok((model, log))
}
