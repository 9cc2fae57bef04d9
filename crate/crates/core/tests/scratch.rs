// Temporary tuning harness; deleted before the suite is finalized.

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unmangle::autoencoder::{train_autoencoder, Embedding};
use unmangle::nn::TrainConfig;
use unmangle::predictor::train_predictor;
use unmangle::vocab::OneHot;

fn distinct_contexts(n: usize, vocab: usize, q: usize, seed: u64) -> Vec<Vec<OneHot>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    while out.len() < n {
        let hots: Vec<usize> = (0..2 * q).map(|_| rng.gen_range(0..vocab)).collect();
        if seen.insert(hots.clone()) {
            out.push(hots.into_iter().map(|h| OneHot { length: vocab, hot: h }).collect());
        }
    }
    out
}

#[test]
#[ignore]
fn tune_ae() {
    let contexts = distinct_contexts(50, 64, 2, 42);
    for (lr, epochs, batch, decay, clip) in [
        (0.3, 1500, 25, 1.0, 5.0),
        (0.5, 3000, 25, 0.999, 5.0),
        (0.2, 3000, 50, 1.0, 0.0),
        (0.1, 5000, 10, 1.0, 5.0),
    ] {
        let config = TrainConfig {
            learning_rate: lr,
            batch_size: batch,
            epochs,
            seed: 7,
            lr_decay: decay,
            clip_norm: clip,
            ..TrainConfig::default()
        };
        let t = std::time::Instant::now();
        let (model, log) = train_autoencoder(&contexts, 64, 2, 12, &config).unwrap();
        let acc = model.reconstruction_accuracy(&contexts).unwrap();
        println!(
            "lr={lr} epochs={epochs} batch={batch} decay={decay}: acc={acc:.3} loss={:.4} in {:?}",
            log.epoch_losses.last().unwrap(),
            t.elapsed()
        );
    }
}

#[test]
#[ignore]
fn tune_ae_adam() {
    use unmangle::autoencoder::AutoencoderModel;
    let contexts = distinct_contexts(50, 64, 2, 42);
    let per_step_acc = |model: &AutoencoderModel| -> Vec<f64> {
        let mut correct = vec![0usize; 4];
        for c in &contexts {
            let e = model.encode(c).unwrap();
            let probs = model.decode(&e).unwrap();
            for (t, p) in probs.iter().enumerate() {
                let argmax = p
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap()
                    .0;
                if argmax == c[t].hot {
                    correct[t] += 1;
                }
            }
        }
        correct.iter().map(|&c| c as f64 / contexts.len() as f64).collect()
    };
    for (lr, epochs, batch, wh_scale) in
        [(0.02, 6000, 25, 3.0), (0.02, 6000, 50, 5.0), (0.01, 6000, 25, 4.0)]
    {
        let t = std::time::Instant::now();
        let mut model = AutoencoderModel::new(64, 2, 12, 7);
        for m in [
            &mut model.decoder.wh_i,
            &mut model.decoder.wh_f,
            &mut model.decoder.wh_o,
            &mut model.decoder.wh_g,
        ] {
            m.data_mut().iter_mut().for_each(|v| *v *= wh_scale);
        }
        let mut params = model.params_vec();
        let n = params.len();
        let (mut m1, mut m2) = (vec![0.0; n], vec![0.0; n]);
        let (b1, b2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut order: Vec<usize> = (0..contexts.len()).collect();
        let mut step = 0usize;
        for epoch in 0..epochs {
            if epoch % 1000 == 0 {
                println!(
                    "  epoch {epoch}: acc={:.3} per-step {:?}",
                    model.reconstruction_accuracy(&contexts).unwrap(),
                    per_step_acc(&model)
                );
            }
            // Fisher-Yates
            for i in (1..order.len()).rev() {
                let j = rng.gen_range(0..=i);
                order.swap(i, j);
            }
            for chunk in order.chunks(batch) {
                let mut grads = vec![0.0; n];
                for &idx in chunk {
                    let (_, g) = model.example_grads_flat(&contexts[idx]).unwrap();
                    for (a, b) in grads.iter_mut().zip(&g) {
                        *a += b;
                    }
                }
                let scale = 1.0 / chunk.len() as f64;
                step += 1;
                let bc1 = 1.0 - b1.powi(step as i32);
                let bc2 = 1.0 - b2.powi(step as i32);
                for i in 0..n {
                    let g = grads[i] * scale;
                    m1[i] = b1 * m1[i] + (1.0 - b1) * g;
                    m2[i] = b2 * m2[i] + (1.0 - b2) * g * g;
                    params[i] -= lr * (m1[i] / bc1) / ((m2[i] / bc2).sqrt() + eps);
                }
                model.set_params(&params);
            }
        }
        let acc = model.reconstruction_accuracy(&contexts).unwrap();
        println!("adam lr={lr} epochs={epochs} batch={batch} whs={wh_scale}: acc={acc:.3} in {:?}", t.elapsed());
    }
}

#[test]
#[ignore]
fn probe_last_step() {
    use unmangle::autoencoder::AutoencoderModel;
    use unmangle::nn::{softmax, StepInput};

    // q=1: two steps. Does the final step still lag?
    let contexts = distinct_contexts(50, 64, 1, 42);
    let config = TrainConfig {
        learning_rate: 1.0,
        batch_size: 25,
        epochs: 4000,
        seed: 7,
        clip_norm: 0.0,
        ..TrainConfig::default()
    };
    let (model, _) = train_autoencoder(&contexts, 64, 1, 12, &config).unwrap();
    let mut correct = vec![0usize; 2];
    for c in &contexts {
        let e = model.encode(c).unwrap();
        let probs = model.decode(&e).unwrap();
        for (t, p) in probs.iter().enumerate() {
            let argmax =
                p.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
            if argmax == c[t].hot {
                correct[t] += 1;
            }
        }
    }
    println!("q=1 per-step: {:?}", correct);

    // Step-4-only loss on the q=2 task: manual training loop on the raw
    // cells, masking all but the last step.
    let contexts = distinct_contexts(50, 64, 2, 42);
    let mut model = AutoencoderModel::new(64, 2, 12, 7);
    let mut params = model.params_vec();
    let n = params.len();
    let (mut m1, mut m2) = (vec![0.0; n], vec![0.0; n]);
    let (b1, b2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
    let mut step = 0usize;
    for _ in 0..3000 {
        let mut grads = vec![0.0; n];
        for c in &contexts {
            let hots: Vec<usize> = c.iter().map(|o| o.hot).collect();
            let enc_inputs: Vec<StepInput> =
                hots.iter().map(|&h| StepInput::OneHot(h)).collect();
            let enc_trace = model.encoder.forward_trace(&enc_inputs).unwrap();
            let e = enc_trace.final_hidden().unwrap().to_vec();
            let dec_inputs: Vec<StepInput> = (0..4).map(|_| StepInput::Dense(&e)).collect();
            let dec_trace = model.decoder.forward_trace(&dec_inputs).unwrap();
            let mut d_hiddens = vec![vec![0.0; 64]; 4];
            let probs = softmax(dec_trace.hidden(3));
            let mut d = probs;
            d[hots[3]] -= 1.0;
            d_hiddens[3] = d;
            let (dec_g, dxs) = model.decoder.backward(&dec_trace, &d_hiddens, true);
            let mut d_e = vec![0.0; 12];
            for dx in dxs.unwrap() {
                for (a, b) in d_e.iter_mut().zip(&dx) {
                    *a += b;
                }
            }
            let mut enc_dh = vec![vec![0.0; 12]; 4];
            enc_dh[3] = d_e;
            let (enc_g, _) = model.encoder.backward(&enc_trace, &enc_dh, false);
            let mut flat = enc_g.to_vec();
            flat.extend(dec_g.to_vec());
            for (a, b) in grads.iter_mut().zip(&flat) {
                *a += b;
            }
        }
        step += 1;
        let bc1 = 1.0 - b1.powi(step as i32);
        let bc2 = 1.0 - b2.powi(step as i32);
        for i in 0..n {
            let g = grads[i] / 50.0;
            m1[i] = b1 * m1[i] + (1.0 - b1) * g;
            m2[i] = b2 * m2[i] + (1.0 - b2) * g * g;
            params[i] -= 0.02 * (m1[i] / bc1) / ((m2[i] / bc2).sqrt() + eps);
        }
        model.set_params(&params);
    }
    let mut hit = 0;
    for c in &contexts {
        let e = model.encode(c).unwrap();
        let probs = model.decode(&e).unwrap();
        let argmax = probs[3]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        if argmax == c[3].hot {
            hit += 1;
        }
    }
    println!("step-4-only training: {hit}/50");
}

#[test]
#[ignore]
fn tune_predictor() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pairs: Vec<(Vec<Embedding>, usize)> = (0..100)
        .map(|i| {
            let embs = (0..3)
                .map(|_| Embedding((0..16).map(|_| rng.gen_range(-0.9..0.9)).collect()))
                .collect();
            (embs, 1 + i) // targets 1..=100 inside a 512 vocab
        })
        .collect();
    for (lr, epochs, batch) in [(0.3, 300, 10), (0.5, 500, 20), (0.2, 1000, 10)] {
        let config = TrainConfig {
            learning_rate: lr,
            batch_size: batch,
            epochs,
            seed: 7,
            ..TrainConfig::default()
        };
        let t = std::time::Instant::now();
        let (model, log) = train_predictor(&pairs, 16, 3, 64, 512, &config).unwrap();
        let acc = model.top1_accuracy(&pairs).unwrap();
        println!(
            "lr={lr} epochs={epochs} batch={batch}: acc={acc:.3} loss={:.4} in {:?} (epochs run: {})",
            log.epoch_losses.last().unwrap(),
            t.elapsed(),
            log.epoch_accuracy.iter().position(|&a| a >= 1.0).map(|i| i + 1).unwrap_or(epochs)
        );
    }
}
