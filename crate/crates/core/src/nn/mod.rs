//! Minimal neural substrate shared by the autoencoder and the predictor:
//! an LSTM cell with backpropagation through time, a dense softmax readout,
//! cross-entropy, momentum SGD with gradient clipping, and the on-disk
//! weight container. All arithmetic is f64; weights persist as f32.

pub mod container;
pub mod dense;
pub mod lstm;
pub mod matrix;
pub mod optim;

pub use container::Container;
pub use dense::{cross_entropy, softmax, DenseGrads, DenseSoftmax};
pub use lstm::{LstmCell, LstmGrads, LstmState, LstmTrace, StepInput};
pub use matrix::Matrix;
pub use optim::{MomentumSgd, TrainConfig};

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_parameter_step_yields_zero_state() {
        // sigmoid(0) = 0.5 and tanh(0) = 0, so every product vanishes.
        let cell = LstmCell::zeros(3, 2);
        let state = LstmState::zeros(2);
        let next = cell.step(&state, StepInput::Dense(&[1.0, -2.0, 3.0])).unwrap();
        assert_eq!(next.hidden, vec![0.0, 0.0]);
        assert_eq!(next.cell, vec![0.0, 0.0]);
    }

    #[test]
    fn zero_input_weights_leave_only_the_recurrent_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut cell = LstmCell::init(3, 2, &mut rng);
        for m in [&mut cell.wx_i, &mut cell.wx_f, &mut cell.wx_o, &mut cell.wx_g] {
            m.data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
        let state = LstmState::zeros(2);
        let a = cell.step(&state, StepInput::Dense(&[1.0, 2.0, 3.0])).unwrap();
        let b = cell.step(&state, StepInput::Dense(&[-9.0, 0.0, 4.0])).unwrap();
        assert_eq!(a, b);
    }

    /// Straight-line reimplementation of the update equations, kept
    /// deliberately independent of the `LstmCell` code path.
    fn reference_step(
        cell: &LstmCell,
        h_prev: &[f64],
        c_prev: &[f64],
        x: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let hs = cell.hidden_size;
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let mut h = vec![0.0; hs];
        let mut c = vec![0.0; hs];
        for k in 0..hs {
            let mut ai = cell.b_i[k];
            let mut af = cell.b_f[k];
            let mut ao = cell.b_o[k];
            let mut ag = cell.b_g[k];
            for (j, xj) in x.iter().enumerate() {
                ai += cell.wx_i.get(k, j) * xj;
                af += cell.wx_f.get(k, j) * xj;
                ao += cell.wx_o.get(k, j) * xj;
                ag += cell.wx_g.get(k, j) * xj;
            }
            for (j, hj) in h_prev.iter().enumerate() {
                ai += cell.wh_i.get(k, j) * hj;
                af += cell.wh_f.get(k, j) * hj;
                ao += cell.wh_o.get(k, j) * hj;
                ag += cell.wh_g.get(k, j) * hj;
            }
            let (i, f, o, g) = (sig(ai), sig(af), sig(ao), ag.tanh());
            c[k] = f * c_prev[k] + i * g;
            h[k] = o * c[k].tanh();
        }
        (h, c)
    }

    #[test]
    fn step_matches_independent_reimplementation() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let cell = LstmCell::init(2, 3, &mut rng);
        let mut state = LstmState::zeros(3);
        for _ in 0..4 {
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let next = cell.step(&state, StepInput::Dense(&x)).unwrap();
            let (h_ref, c_ref) = reference_step(&cell, &state.hidden, &state.cell, &x);
            for (a, b) in next.hidden.iter().zip(&h_ref) {
                assert!((a - b).abs() < 1e-12);
            }
            for (a, b) in next.cell.iter().zip(&c_ref) {
                assert!((a - b).abs() < 1e-12);
            }
            state = next;
        }
    }

    #[test]
    fn run_of_empty_sequence_is_zero_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cell = LstmCell::init(4, 3, &mut rng);
        let (state, hiddens) = cell.run(&[]).unwrap();
        assert_eq!(state, LstmState::zeros(3));
        assert!(hiddens.is_empty());
    }

    #[test]
    fn run_of_length_one_equals_single_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cell = LstmCell::init(4, 3, &mut rng);
        let x = [0.25, -0.5, 0.75, 0.0];
        let (state, _) = cell.run(&[StepInput::Dense(&x)]).unwrap();
        let direct = cell.step(&LstmState::zeros(3), StepInput::Dense(&x)).unwrap();
        assert_eq!(state, direct);
    }

    #[test]
    fn run_of_length_three_matches_manual_fold() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cell = LstmCell::init(2, 2, &mut rng);
        let xs: Vec<Vec<f64>> =
            (0..3).map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let inputs: Vec<StepInput> = xs.iter().map(|x| StepInput::Dense(x)).collect();
        let (state, hiddens) = cell.run(&inputs).unwrap();
        let mut manual = LstmState::zeros(2);
        for x in &xs {
            manual = cell.step(&manual, StepInput::Dense(x)).unwrap();
        }
        assert_eq!(state, manual);
        assert_eq!(hiddens.len(), 3);
        assert_eq!(hiddens[2], manual.hidden);
    }

    #[test]
    fn onehot_path_matches_dense_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let cell = LstmCell::init(5, 3, &mut rng);
        let state = LstmState::zeros(3);
        let mut dense = vec![0.0; 5];
        dense[2] = 1.0;
        let a = cell.step(&state, StepInput::Dense(&dense)).unwrap();
        let b = cell.step(&state, StepInput::OneHot(2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hidden_entries_stay_inside_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let cell = LstmCell::init(3, 4, &mut rng);
        let mut state = LstmState::zeros(4);
        for _ in 0..50 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-10.0..10.0)).collect();
            state = cell.step(&state, StepInput::Dense(&x)).unwrap();
            assert!(state.hidden.iter().all(|&h| h > -1.0 && h < 1.0));
        }
    }

    #[test]
    fn shape_errors_are_reported() {
        let cell = LstmCell::zeros(3, 2);
        let state = LstmState::zeros(2);
        assert!(cell.step(&state, StepInput::Dense(&[1.0])).is_err());
        assert!(cell.step(&state, StepInput::OneHot(9)).is_err());
    }

    #[test]
    fn params_round_trip_through_flat_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let cell = LstmCell::init(3, 2, &mut rng);
        let params = cell.params_vec();
        assert_eq!(params.len(), cell.param_count());
        let mut other = LstmCell::zeros(3, 2);
        other.set_params(&params);
        assert_eq!(other, cell);
    }

    /// Loss of a tiny LSTM + softmax chain, used by the gradient check.
    fn chain_loss(cell: &LstmCell, readout: &DenseSoftmax, xs: &[Vec<f64>], target: usize) -> f64 {
        let inputs: Vec<StepInput> = xs.iter().map(|x| StepInput::Dense(x)).collect();
        let (state, _) = cell.run(&inputs).unwrap();
        let probs = readout.apply(&state.hidden).unwrap();
        cross_entropy(&probs, target)
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let mut cell = LstmCell::init(3, 4, &mut rng);
        let mut readout = DenseSoftmax::init(5, 4, &mut rng);
        let xs: Vec<Vec<f64>> =
            (0..3).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let target = 2;

        // Analytic pass.
        let inputs: Vec<StepInput> = xs.iter().map(|x| StepInput::Dense(x)).collect();
        let trace = cell.forward_trace(&inputs).unwrap();
        let probs = readout.apply(trace.final_hidden().unwrap()).unwrap();
        let (dense_grads, dh) = readout.backward(trace.final_hidden().unwrap(), &probs, target);
        let mut d_hiddens = vec![vec![0.0; 4]; trace.len()];
        *d_hiddens.last_mut().unwrap() = dh;
        let (lstm_grads, _) = cell.backward(&trace, &d_hiddens, false);

        let analytic: Vec<f64> = lstm_grads
            .to_vec()
            .into_iter()
            .chain(dense_grads.to_vec())
            .collect();

        // Central finite differences over every parameter.
        let delta = 1e-4;
        let mut cell_params = cell.params_vec();
        let mut dense_params = readout.params_vec();
        let n_cell = cell_params.len();
        let total = n_cell + dense_params.len();
        for idx in 0..total {
            let bump = |cell: &mut LstmCell, readout: &mut DenseSoftmax,
                        cp: &mut Vec<f64>, dp: &mut Vec<f64>, delta: f64| {
                if idx < n_cell {
                    cp[idx] += delta;
                    cell.set_params(cp);
                } else {
                    dp[idx - n_cell] += delta;
                    readout.set_params(dp);
                }
            };
            bump(&mut cell, &mut readout, &mut cell_params, &mut dense_params, delta);
            let plus = chain_loss(&cell, &readout, &xs, target);
            bump(&mut cell, &mut readout, &mut cell_params, &mut dense_params, -2.0 * delta);
            let minus = chain_loss(&cell, &readout, &xs, target);
            bump(&mut cell, &mut readout, &mut cell_params, &mut dense_params, delta);
            let numeric = (plus - minus) / (2.0 * delta);
            let denom = analytic[idx].abs().max(numeric.abs()).max(1e-6);
            assert!(
                (analytic[idx] - numeric).abs() / denom < 1e-3,
                "param {idx}: analytic {} vs numeric {numeric}",
                analytic[idx]
            );
        }
    }

    #[test]
    fn one_small_step_decreases_the_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mut cell = LstmCell::init(2, 3, &mut rng);
        let xs: Vec<Vec<f64>> = vec![vec![0.4, -0.3], vec![0.1, 0.9]];
        let target = 1;
        let readout_init = DenseSoftmax::init(4, 3, &mut rng);
        let mut readout = readout_init.clone();

        let before = chain_loss(&cell, &readout, &xs, target);
        let inputs: Vec<StepInput> = xs.iter().map(|x| StepInput::Dense(x)).collect();
        let trace = cell.forward_trace(&inputs).unwrap();
        let probs = readout.apply(trace.final_hidden().unwrap()).unwrap();
        let (dg, dh) = readout.backward(trace.final_hidden().unwrap(), &probs, target);
        let mut d_hiddens = vec![vec![0.0; 3]; trace.len()];
        *d_hiddens.last_mut().unwrap() = dh;
        let (lg, _) = cell.backward(&trace, &d_hiddens, false);

        let grads: Vec<f64> = lg.to_vec().into_iter().chain(dg.to_vec()).collect();
        let mut params: Vec<f64> =
            cell.params_vec().into_iter().chain(readout.params_vec()).collect();
        let n_cell = cell.param_count();
        let mut opt = MomentumSgd::new(params.len(), 1e-2, 0.0);
        opt.step(&mut params, &grads).unwrap();
        cell.set_params(&params[..n_cell]);
        readout.set_params(&params[n_cell..]);

        let after = chain_loss(&cell, &readout, &xs, target);
        assert!(after < before, "loss {after} did not drop below {before}");
    }

    #[test]
    fn training_step_is_reproducible_for_a_fixed_seed() {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let cell = LstmCell::init(3, 3, &mut rng);
            cell.params_vec()
        };
        assert_eq!(run(), run());
    }
}
