//! Sequence autoencoder over one-hot context encodings.
//!
//! The encoder LSTM reads the `2·q` one-hot vectors of a context and its
//! final hidden state (length `E`) is the context's embedding. The decoder
//! receives that embedding repeated `2·q` times and its hidden state (width
//! `|V_inp|`) is read out through a per-step softmax directly, with no extra
//! dense layer. Both are trained jointly to minimize the mean per-step
//! cross-entropy of reconstructing the input tokens.

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::context::UsageSummary;
use crate::error::{Error, Result};
use crate::nn::{cross_entropy, softmax, LstmCell, LstmGrads, MomentumSgd, StepInput, TrainConfig};
use crate::vocab::{OneHot, Vocabulary};

/// Dense summary of one context, each entry in (−1, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(pub Vec<f64>);

impl Embedding {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Inverse temperature of the decoder's per-step softmax. Hidden states are
/// bounded in (−1, 1); without the scale the target probability is capped
/// near `e²/(e² + |V|−1)` and the cross-entropy gradient never subsides.
const READOUT_SCALE: f64 = 8.0;

#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderModel {
    pub encoder: LstmCell,
    pub decoder: LstmCell,
    pub q: usize,
    pub vocab_size: usize,
    pub embed_size: usize,
}

fn scaled_softmax(hidden: &[f64]) -> Vec<f64> {
    let scaled: Vec<f64> = hidden.iter().map(|&h| READOUT_SCALE * h).collect();
    softmax(&scaled)
}

/// Per-epoch numbers reported by the trainers.
#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    pub epoch_losses: Vec<f64>,
    pub epoch_accuracy: Vec<f64>,
}

impl AutoencoderModel {
    pub fn new(vocab_size: usize, q: usize, embed_size: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AutoencoderModel {
            encoder: LstmCell::init(vocab_size, embed_size, &mut rng),
            decoder: LstmCell::init(embed_size, vocab_size, &mut rng),
            q,
            vocab_size,
            embed_size,
        }
    }

    fn check_context(&self, c: &[OneHot]) -> Result<Vec<usize>> {
        if c.len() != 2 * self.q {
            return Err(Error::Shape(format!(
                "context has {} steps, expected {}",
                c.len(),
                2 * self.q
            )));
        }
        let mut hots = Vec::with_capacity(c.len());
        for oh in c {
            if oh.length != self.vocab_size || oh.hot >= oh.length {
                return Err(Error::Shape(format!(
                    "one-hot {}/{} does not fit vocab width {}",
                    oh.hot, oh.length, self.vocab_size
                )));
            }
            hots.push(oh.hot);
        }
        Ok(hots)
    }

    /// Runs the encoder over an encoded context; the embedding is the final
    /// hidden state.
    pub fn encode(&self, c: &[OneHot]) -> Result<Embedding> {
        let hots = self.check_context(c)?;
        Ok(self.encode_hots(&hots))
    }

    fn encode_hots(&self, hots: &[usize]) -> Embedding {
        let inputs: Vec<StepInput> = hots.iter().map(|&h| StepInput::OneHot(h)).collect();
        let (state, _) = self.encoder.run(&inputs).expect("shapes checked");
        Embedding(state.hidden)
    }

    /// Feeds the embedding to the decoder `2·q` times; each hidden state is
    /// softmaxed into a distribution over the input vocabulary.
    pub fn decode(&self, e: &Embedding) -> Result<Vec<Vec<f64>>> {
        if e.len() != self.embed_size {
            return Err(Error::Shape(format!(
                "embedding length {} != {}",
                e.len(),
                self.embed_size
            )));
        }
        let inputs: Vec<StepInput> = (0..2 * self.q).map(|_| StepInput::Dense(e.as_slice())).collect();
        let (_, hiddens) = self.decoder.run(&inputs)?;
        Ok(hiddens.iter().map(|h| scaled_softmax(h)).collect())
    }

    /// Embeds every context of a summary, in order. All-PAD positions share
    /// one embedding because encoding is deterministic.
    pub fn embed_summary(&self, u: &UsageSummary, v: &Vocabulary) -> Result<Vec<Embedding>> {
        let mut pad_embedding: Option<Embedding> = None;
        u.contexts
            .iter()
            .map(|ctx| {
                if ctx.is_all_pad() {
                    if pad_embedding.is_none() {
                        pad_embedding = Some(self.encode(&v.encode_context(ctx))?);
                    }
                    Ok(pad_embedding.clone().unwrap())
                } else {
                    self.encode(&v.encode_context(ctx))
                }
            })
            .collect()
    }

    /// Mean per-step reconstruction cross-entropy of one encoded context.
    pub fn example_loss(&self, c: &[OneHot]) -> Result<f64> {
        let hots = self.check_context(c)?;
        let e = self.encode_hots(&hots);
        let probs = self.decode(&e)?;
        let loss: f64 =
            probs.iter().zip(&hots).map(|(p, &t)| cross_entropy(p, t)).sum::<f64>();
        Ok(loss / hots.len() as f64)
    }

    /// Loss plus gradients flattened in [`AutoencoderModel::params_vec`]
    /// order, for one context.
    pub fn example_grads_flat(&self, c: &[OneHot]) -> Result<(f64, Vec<f64>)> {
        let hots = self.check_context(c)?;
        let (loss, enc, dec) = self.example_grads(&hots);
        let mut flat = enc.to_vec();
        flat.extend(dec.to_vec());
        Ok((loss, flat))
    }

    /// Mean per-step cross-entropy and gradients for one context.
    fn example_grads(&self, hots: &[usize]) -> (f64, LstmGrads, LstmGrads) {
        let steps = hots.len();
        let enc_inputs: Vec<StepInput> = hots.iter().map(|&h| StepInput::OneHot(h)).collect();
        let enc_trace = self.encoder.forward_trace(&enc_inputs).expect("shapes checked");
        let embedding = enc_trace.final_hidden().expect("non-empty context").to_vec();

        let dec_inputs: Vec<StepInput> = (0..steps).map(|_| StepInput::Dense(&embedding)).collect();
        let dec_trace = self.decoder.forward_trace(&dec_inputs).expect("shapes checked");

        let mut loss = 0.0;
        let mut d_hiddens = Vec::with_capacity(steps);
        for (t, &target) in hots.iter().enumerate() {
            let probs = scaled_softmax(dec_trace.hidden(t));
            loss += cross_entropy(&probs, target);
            let mut d = probs;
            d[target] -= 1.0;
            d.iter_mut().for_each(|v| *v *= READOUT_SCALE / steps as f64);
            d_hiddens.push(d);
        }
        loss /= steps as f64;

        let (dec_grads, dxs) = self.decoder.backward(&dec_trace, &d_hiddens, true);
        let mut d_embedding = vec![0.0; self.embed_size];
        for dx in dxs.expect("requested") {
            for (a, b) in d_embedding.iter_mut().zip(&dx) {
                *a += b;
            }
        }
        let mut enc_d_hiddens = vec![vec![0.0; self.embed_size]; steps];
        *enc_d_hiddens.last_mut().unwrap() = d_embedding;
        let (enc_grads, _) = self.encoder.backward(&enc_trace, &enc_d_hiddens, false);
        (loss, enc_grads, dec_grads)
    }

    pub fn params_vec(&self) -> Vec<f64> {
        let mut out = self.encoder.params_vec();
        out.extend(self.decoder.params_vec());
        out
    }

    pub fn set_params(&mut self, params: &[f64]) {
        let n = self.encoder.param_count();
        self.encoder.set_params(&params[..n]);
        self.decoder.set_params(&params[n..]);
    }

    /// Fraction of context steps whose reconstruction argmax matches the
    /// input token.
    pub fn reconstruction_accuracy(&self, contexts: &[Vec<OneHot>]) -> Result<f64> {
        let mut correct = 0usize;
        let mut total = 0usize;
        for c in contexts {
            let hots = self.check_context(c)?;
            let e = self.encode_hots(&hots);
            let probs = self.decode(&e)?;
            for (p, &target) in probs.iter().zip(&hots) {
                let argmax = p
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .map(|(i, _)| i)
                    .unwrap();
                if argmax == target {
                    correct += 1;
                }
                total += 1;
            }
        }
        if total == 0 {
            return Err(Error::EmptyCorpus);
        }
        Ok(correct as f64 / total as f64)
    }
}

/// Trains a fresh autoencoder on the given encoded contexts.
pub fn train_autoencoder(
    contexts: &[Vec<OneHot>],
    vocab_size: usize,
    q: usize,
    embed_size: usize,
    config: &TrainConfig,
) -> Result<(AutoencoderModel, TrainLog)> {
    train_autoencoder_with(contexts, vocab_size, q, embed_size, config, |_, _, _| {})
}

/// Like [`train_autoencoder`] but invokes `on_epoch(epoch, model, loss)`
/// after every epoch, for checkpointing.
pub fn train_autoencoder_with<F>(
    contexts: &[Vec<OneHot>],
    vocab_size: usize,
    q: usize,
    embed_size: usize,
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<(AutoencoderModel, TrainLog)>
where
    F: FnMut(usize, &AutoencoderModel, f64),
{
    if contexts.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    config.validate()?;
    let mut model = AutoencoderModel::new(vocab_size, q, embed_size, config.seed);
    let hot_seqs: Vec<Vec<usize>> =
        contexts.iter().map(|c| model.check_context(c)).collect::<Result<_>>()?;

    let mut log = TrainLog::default();
    let mut params = model.params_vec();
    let mut opt = MomentumSgd::new(params.len(), config.learning_rate, config.clip_norm);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..hot_seqs.len()).collect();

    for epoch in 0..config.epochs {
        shuffle(&mut order, &mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut enc_acc = LstmGrads::zeros(vocab_size, embed_size);
            let mut dec_acc = LstmGrads::zeros(embed_size, vocab_size);
            for &idx in batch {
                let (loss, eg, dg) = model.example_grads(&hot_seqs[idx]);
                epoch_loss += loss;
                enc_acc.accumulate(&eg);
                dec_acc.accumulate(&dg);
            }
            let scale = 1.0 / batch.len() as f64;
            let mut grads = enc_acc.to_vec();
            grads.extend(dec_acc.to_vec());
            grads.iter_mut().for_each(|g| *g *= scale);
            opt.step(&mut params, &grads)?;
            model.set_params(&params);
        }
        epoch_loss /= hot_seqs.len() as f64;
        log.epoch_losses.push(epoch_loss);
        info!("autoencoder epoch {}: loss {:.6}", epoch + 1, epoch_loss);
        opt.learning_rate *= config.lr_decay;
        on_epoch(epoch, &model, epoch_loss);
    }
    Ok((model, log))
}

/// Fisher-Yates with the trainer's own RNG, so shuffles are reproducible.
pub(crate) fn shuffle(order: &mut [usize], rng: &mut ChaCha8Rng) {
    use rand::Rng;
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn onehot(length: usize, hot: usize) -> OneHot {
        OneHot { length, hot }
    }

    fn random_contexts(n: usize, vocab: usize, q: usize, seed: u64) -> Vec<Vec<OneHot>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        while out.len() < n {
            let hots: Vec<usize> = (0..2 * q).map(|_| rng.gen_range(0..vocab)).collect();
            if seen.insert(hots.clone()) {
                out.push(hots.into_iter().map(|h| onehot(vocab, h)).collect());
            }
        }
        out
    }

    #[test]
    fn embedding_has_configured_length() {
        let model = AutoencoderModel::new(16, 2, 6, 1);
        let ctx: Vec<OneHot> = (0..4).map(|i| onehot(16, i)).collect();
        let e = model.encode(&ctx).unwrap();
        assert_eq!(e.len(), 6);
        assert!(e.as_slice().iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn encoding_is_deterministic() {
        let model = AutoencoderModel::new(16, 2, 6, 1);
        let ctx: Vec<OneHot> = (0..4).map(|i| onehot(16, i)).collect();
        assert_eq!(model.encode(&ctx).unwrap(), model.encode(&ctx).unwrap());
    }

    #[test]
    fn zero_parameter_model_embeds_to_zero() {
        let mut model = AutoencoderModel::new(8, 1, 4, 1);
        let zeros = vec![0.0; model.params_vec().len()];
        model.set_params(&zeros);
        let ctx = vec![onehot(8, 3), onehot(8, 5)];
        let e = model.encode(&ctx).unwrap();
        assert_eq!(e.as_slice(), &[0.0; 4]);
    }

    #[test]
    fn decode_emits_one_distribution_per_step() {
        let model = AutoencoderModel::new(8, 2, 4, 7);
        let e = Embedding(vec![0.1, -0.2, 0.3, 0.0]);
        let probs = model.decode(&e).unwrap();
        assert_eq!(probs.len(), 4);
        for p in &probs {
            assert_eq!(p.len(), 8);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn wrong_shapes_are_rejected() {
        let model = AutoencoderModel::new(8, 2, 4, 7);
        assert!(model.encode(&[onehot(8, 0)]).is_err());
        let bad_width: Vec<OneHot> = (0..4).map(|i| onehot(9, i)).collect();
        assert!(model.encode(&bad_width).is_err());
        assert!(model.decode(&Embedding(vec![0.0; 3])).is_err());
    }

    #[test]
    fn zero_epochs_returns_the_initialized_model() {
        let contexts = random_contexts(4, 8, 1, 3);
        let config = TrainConfig { epochs: 0, seed: 9, ..TrainConfig::default() };
        let (model, log) = train_autoencoder(&contexts, 8, 1, 4, &config).unwrap();
        assert_eq!(model, AutoencoderModel::new(8, 1, 4, 9));
        assert!(log.epoch_losses.is_empty());
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let config = TrainConfig::default();
        assert!(matches!(
            train_autoencoder(&[], 8, 1, 4, &config),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn memorizes_a_single_repeated_context() {
        let ctx = vec![onehot(8, 2), onehot(8, 5)];
        let contexts = vec![ctx.clone()];
        let config = TrainConfig {
            learning_rate: 0.5,
            batch_size: 1,
            epochs: 200,
            seed: 5,
            ..TrainConfig::default()
        };
        let (model, log) = train_autoencoder(&contexts, 8, 1, 4, &config).unwrap();
        assert_eq!(model.reconstruction_accuracy(&contexts).unwrap(), 1.0);
        assert!(log.epoch_losses.len() == 200);
    }

    #[test]
    fn loss_is_monotone_with_a_decaying_rate() {
        let contexts = random_contexts(6, 8, 1, 11);
        let config = TrainConfig {
            learning_rate: 0.2,
            lr_decay: 0.7,
            batch_size: 6,
            epochs: 12,
            seed: 2,
            ..TrainConfig::default()
        };
        let (_, log) = train_autoencoder(&contexts, 8, 1, 6, &config).unwrap();
        for pair in log.epoch_losses.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-9,
                "loss went up: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn training_is_bitwise_reproducible() {
        let contexts = random_contexts(5, 8, 1, 13);
        let config = TrainConfig { epochs: 3, seed: 21, ..TrainConfig::default() };
        let (a, _) = train_autoencoder(&contexts, 8, 1, 4, &config).unwrap();
        let (b, _) = train_autoencoder(&contexts, 8, 1, 4, &config).unwrap();
        assert_eq!(a.params_vec(), b.params_vec());
    }

    #[test]
    fn embed_summary_is_encode_composed_with_encode_context() {
        use crate::context::extract_all;
        use crate::js::{analyze, filter_tokens};
        use crate::vocab::{FreqTable, Vocabulary};

        let analysis = analyze("function f(acc, item){ return acc + item; }").unwrap();
        let stream = filter_tokens(&analysis.tokens);
        let summaries = extract_all(&stream, &analysis.names, 2, 3).unwrap();
        let mut freqs = FreqTable::new();
        for s in &summaries {
            for c in &s.contexts {
                freqs.add_context(c);
            }
        }
        let vocab = Vocabulary::build_input(&freqs, 16);
        let model = AutoencoderModel::new(vocab.len(), 2, 5, 3);

        for s in &summaries {
            let embs = model.embed_summary(s, &vocab).unwrap();
            assert_eq!(embs.len(), 3);
            for (ctx, e) in s.contexts.iter().zip(&embs) {
                let direct = model.encode(&vocab.encode_context(ctx)).unwrap();
                assert_eq!(*e, direct);
            }
        }
    }

    #[test]
    fn all_pad_positions_share_one_embedding() {
        use crate::context::Context;
        use crate::js::ScopedName;
        use crate::vocab::{FreqTable, Vocabulary};

        let vocab = Vocabulary::build_input(&FreqTable::new(), 8);
        let model = AutoencoderModel::new(vocab.len(), 1, 4, 3);
        let summary = UsageSummary {
            owner: ScopedName { name: "x".into(), scope: 0, binding: 0 },
            contexts: vec![Context::padding(1), Context::padding(1)],
        };
        let embs = model.embed_summary(&summary, &vocab).unwrap();
        assert_eq!(embs[0], embs[1]);
    }
}
