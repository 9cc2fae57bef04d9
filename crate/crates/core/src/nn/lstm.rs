//! Single LSTM cell: forward, sequence runs, and backpropagation through
//! time. Inputs may be dense vectors or one-hot indices; the one-hot path
//! avoids materializing vocabulary-sized vectors.

use rand::Rng;

use super::matrix::Matrix;
use crate::error::{Error, Result};

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Hidden and cell state of one LSTM.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub hidden: Vec<f64>,
    pub cell: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden_size: usize) -> Self {
        LstmState { hidden: vec![0.0; hidden_size], cell: vec![0.0; hidden_size] }
    }
}

/// One step's input.
#[derive(Debug, Clone, Copy)]
pub enum StepInput<'a> {
    Dense(&'a [f64]),
    OneHot(usize),
}

#[derive(Debug, Clone)]
enum OwnedInput {
    Dense(Vec<f64>),
    OneHot(usize),
}

/// LSTM cell parameters. Gate order is input, forget, output, candidate;
/// `wx_*` maps the input, `wh_*` the previous hidden state.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    pub input_size: usize,
    pub hidden_size: usize,
    pub wx_i: Matrix,
    pub wh_i: Matrix,
    pub b_i: Vec<f64>,
    pub wx_f: Matrix,
    pub wh_f: Matrix,
    pub b_f: Vec<f64>,
    pub wx_o: Matrix,
    pub wh_o: Matrix,
    pub b_o: Vec<f64>,
    pub wx_g: Matrix,
    pub wh_g: Matrix,
    pub b_g: Vec<f64>,
}

/// Parameter gradients, same shapes as the cell.
#[derive(Debug, Clone)]
pub struct LstmGrads {
    pub wx_i: Matrix,
    pub wh_i: Matrix,
    pub b_i: Vec<f64>,
    pub wx_f: Matrix,
    pub wh_f: Matrix,
    pub b_f: Vec<f64>,
    pub wx_o: Matrix,
    pub wh_o: Matrix,
    pub b_o: Vec<f64>,
    pub wx_g: Matrix,
    pub wh_g: Matrix,
    pub b_g: Vec<f64>,
}

impl LstmGrads {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        LstmGrads {
            wx_i: Matrix::zeros(hidden_size, input_size),
            wh_i: Matrix::zeros(hidden_size, hidden_size),
            b_i: vec![0.0; hidden_size],
            wx_f: Matrix::zeros(hidden_size, input_size),
            wh_f: Matrix::zeros(hidden_size, hidden_size),
            b_f: vec![0.0; hidden_size],
            wx_o: Matrix::zeros(hidden_size, input_size),
            wh_o: Matrix::zeros(hidden_size, hidden_size),
            b_o: vec![0.0; hidden_size],
            wx_g: Matrix::zeros(hidden_size, input_size),
            wh_g: Matrix::zeros(hidden_size, hidden_size),
            b_g: vec![0.0; hidden_size],
        }
    }

    /// Flattened in the cell's parameter order.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for m in [
            &self.wx_i, &self.wh_i, &self.wx_f, &self.wh_f, &self.wx_o, &self.wh_o, &self.wx_g,
            &self.wh_g,
        ] {
            out.extend_from_slice(m.data());
        }
        for b in [&self.b_i, &self.b_f, &self.b_o, &self.b_g] {
            out.extend_from_slice(b);
        }
        out
    }

    pub fn accumulate(&mut self, other: &LstmGrads) {
        let pairs = [
            (&mut self.wx_i, &other.wx_i),
            (&mut self.wh_i, &other.wh_i),
            (&mut self.wx_f, &other.wx_f),
            (&mut self.wh_f, &other.wh_f),
            (&mut self.wx_o, &other.wx_o),
            (&mut self.wh_o, &other.wh_o),
            (&mut self.wx_g, &other.wx_g),
            (&mut self.wh_g, &other.wh_g),
        ];
        for (a, b) in pairs {
            for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
                *x += y;
            }
        }
        let bias_pairs = [
            (&mut self.b_i, &other.b_i),
            (&mut self.b_f, &other.b_f),
            (&mut self.b_o, &other.b_o),
            (&mut self.b_g, &other.b_g),
        ];
        for (a, b) in bias_pairs {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

/// Per-step forward activations kept for the backward pass.
#[derive(Debug)]
pub struct LstmTrace {
    inputs: Vec<OwnedInput>,
    i: Vec<Vec<f64>>,
    f: Vec<Vec<f64>>,
    o: Vec<Vec<f64>>,
    g: Vec<Vec<f64>>,
    cells: Vec<Vec<f64>>,
    tanh_cells: Vec<Vec<f64>>,
    hiddens: Vec<Vec<f64>>,
}

impl LstmTrace {
    pub fn len(&self) -> usize {
        self.hiddens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hiddens.is_empty()
    }

    pub fn hidden(&self, t: usize) -> &[f64] {
        &self.hiddens[t]
    }

    pub fn final_hidden(&self) -> Option<&[f64]> {
        self.hiddens.last().map(Vec::as_slice)
    }
}

impl LstmCell {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        LstmCell {
            input_size,
            hidden_size,
            wx_i: Matrix::zeros(hidden_size, input_size),
            wh_i: Matrix::zeros(hidden_size, hidden_size),
            b_i: vec![0.0; hidden_size],
            wx_f: Matrix::zeros(hidden_size, input_size),
            wh_f: Matrix::zeros(hidden_size, hidden_size),
            b_f: vec![0.0; hidden_size],
            wx_o: Matrix::zeros(hidden_size, input_size),
            wh_o: Matrix::zeros(hidden_size, hidden_size),
            b_o: vec![0.0; hidden_size],
            wx_g: Matrix::zeros(hidden_size, input_size),
            wh_g: Matrix::zeros(hidden_size, hidden_size),
            b_g: vec![0.0; hidden_size],
        }
    }

    /// Fan-in scaled uniform init; the forget-gate bias starts at 1.0.
    pub fn init<R: Rng>(input_size: usize, hidden_size: usize, rng: &mut R) -> Self {
        let mut cell = LstmCell {
            input_size,
            hidden_size,
            wx_i: Matrix::uniform_init(hidden_size, input_size, rng),
            wh_i: Matrix::uniform_init(hidden_size, hidden_size, rng),
            b_i: vec![0.0; hidden_size],
            wx_f: Matrix::uniform_init(hidden_size, input_size, rng),
            wh_f: Matrix::uniform_init(hidden_size, hidden_size, rng),
            b_f: vec![0.0; hidden_size],
            wx_o: Matrix::uniform_init(hidden_size, input_size, rng),
            wh_o: Matrix::uniform_init(hidden_size, hidden_size, rng),
            b_o: vec![0.0; hidden_size],
            wx_g: Matrix::uniform_init(hidden_size, input_size, rng),
            wh_g: Matrix::uniform_init(hidden_size, hidden_size, rng),
            b_g: vec![0.0; hidden_size],
        };
        cell.b_f.iter_mut().for_each(|b| *b = 1.0);
        cell
    }

    fn check_input(&self, x: &StepInput) -> Result<()> {
        match x {
            StepInput::Dense(v) if v.len() != self.input_size => Err(Error::Shape(format!(
                "lstm input length {} != {}",
                v.len(),
                self.input_size
            ))),
            StepInput::OneHot(hot) if *hot >= self.input_size => Err(Error::Shape(format!(
                "one-hot index {hot} out of range {}",
                self.input_size
            ))),
            _ => Ok(()),
        }
    }

    /// Pre-activation `wx·x + wh·h + b` for one gate.
    fn gate_preact(&self, wx: &Matrix, wh: &Matrix, b: &[f64], x: &StepInput, h: &[f64]) -> Vec<f64> {
        let mut a = b.to_vec();
        match x {
            StepInput::Dense(v) => wx.matvec_into(v, &mut a),
            StepInput::OneHot(hot) => wx.col_into(*hot, &mut a),
        }
        wh.matvec_into(h, &mut a);
        a
    }

    /// One LSTM update: gates through the logistic sigmoid, candidate through
    /// tanh, `cell' = f⊙cell + i⊙g`, `hidden' = o⊙tanh(cell')`.
    pub fn step(&self, state: &LstmState, x: StepInput) -> Result<LstmState> {
        self.check_input(&x)?;
        if state.hidden.len() != self.hidden_size {
            return Err(Error::Shape(format!(
                "lstm state length {} != {}",
                state.hidden.len(),
                self.hidden_size
            )));
        }
        let i: Vec<f64> = self
            .gate_preact(&self.wx_i, &self.wh_i, &self.b_i, &x, &state.hidden)
            .into_iter()
            .map(sigmoid)
            .collect();
        let f: Vec<f64> = self
            .gate_preact(&self.wx_f, &self.wh_f, &self.b_f, &x, &state.hidden)
            .into_iter()
            .map(sigmoid)
            .collect();
        let o: Vec<f64> = self
            .gate_preact(&self.wx_o, &self.wh_o, &self.b_o, &x, &state.hidden)
            .into_iter()
            .map(sigmoid)
            .collect();
        let g: Vec<f64> = self
            .gate_preact(&self.wx_g, &self.wh_g, &self.b_g, &x, &state.hidden)
            .into_iter()
            .map(f64::tanh)
            .collect();
        let mut cell = vec![0.0; self.hidden_size];
        let mut hidden = vec![0.0; self.hidden_size];
        for k in 0..self.hidden_size {
            cell[k] = f[k] * state.cell[k] + i[k] * g[k];
            hidden[k] = o[k] * cell[k].tanh();
        }
        Ok(LstmState { hidden, cell })
    }

    /// Folds [`LstmCell::step`] over `inputs` from the zero state. Returns the
    /// final state and every step's hidden vector.
    pub fn run(&self, inputs: &[StepInput]) -> Result<(LstmState, Vec<Vec<f64>>)> {
        let mut state = LstmState::zeros(self.hidden_size);
        let mut hiddens = Vec::with_capacity(inputs.len());
        for x in inputs {
            state = self.step(&state, *x)?;
            hiddens.push(state.hidden.clone());
        }
        Ok((state, hiddens))
    }

    /// Forward pass that records everything the backward pass needs.
    pub fn forward_trace(&self, inputs: &[StepInput]) -> Result<LstmTrace> {
        let mut trace = LstmTrace {
            inputs: Vec::with_capacity(inputs.len()),
            i: Vec::with_capacity(inputs.len()),
            f: Vec::with_capacity(inputs.len()),
            o: Vec::with_capacity(inputs.len()),
            g: Vec::with_capacity(inputs.len()),
            cells: Vec::with_capacity(inputs.len()),
            tanh_cells: Vec::with_capacity(inputs.len()),
            hiddens: Vec::with_capacity(inputs.len()),
        };
        let mut state = LstmState::zeros(self.hidden_size);
        for x in inputs {
            self.check_input(x)?;
            let i: Vec<f64> = self
                .gate_preact(&self.wx_i, &self.wh_i, &self.b_i, x, &state.hidden)
                .into_iter()
                .map(sigmoid)
                .collect();
            let f: Vec<f64> = self
                .gate_preact(&self.wx_f, &self.wh_f, &self.b_f, x, &state.hidden)
                .into_iter()
                .map(sigmoid)
                .collect();
            let o: Vec<f64> = self
                .gate_preact(&self.wx_o, &self.wh_o, &self.b_o, x, &state.hidden)
                .into_iter()
                .map(sigmoid)
                .collect();
            let g: Vec<f64> = self
                .gate_preact(&self.wx_g, &self.wh_g, &self.b_g, x, &state.hidden)
                .into_iter()
                .map(f64::tanh)
                .collect();
            let mut cell = vec![0.0; self.hidden_size];
            let mut tanh_cell = vec![0.0; self.hidden_size];
            let mut hidden = vec![0.0; self.hidden_size];
            for k in 0..self.hidden_size {
                cell[k] = f[k] * state.cell[k] + i[k] * g[k];
                tanh_cell[k] = cell[k].tanh();
                hidden[k] = o[k] * tanh_cell[k];
            }
            state = LstmState { hidden: hidden.clone(), cell: cell.clone() };
            trace.inputs.push(match x {
                StepInput::Dense(v) => OwnedInput::Dense(v.to_vec()),
                StepInput::OneHot(h) => OwnedInput::OneHot(*h),
            });
            trace.i.push(i);
            trace.f.push(f);
            trace.o.push(o);
            trace.g.push(g);
            trace.cells.push(cell);
            trace.tanh_cells.push(tanh_cell);
            trace.hiddens.push(hidden);
        }
        Ok(trace)
    }

    /// Backpropagation through time. `d_hiddens[t]` is the loss gradient
    /// flowing into step `t`'s hidden output from outside the cell. Input
    /// gradients are only materialized when `want_dx` is set.
    pub fn backward(
        &self,
        trace: &LstmTrace,
        d_hiddens: &[Vec<f64>],
        want_dx: bool,
    ) -> (LstmGrads, Option<Vec<Vec<f64>>>) {
        assert_eq!(d_hiddens.len(), trace.len());
        let n = trace.len();
        let h = self.hidden_size;
        let mut grads = LstmGrads::zeros(self.input_size, self.hidden_size);
        let mut dxs = if want_dx { Some(vec![vec![0.0; self.input_size]; n]) } else { None };
        let mut dh_rec = vec![0.0; h];
        let mut dc_rec = vec![0.0; h];
        for t in (0..n).rev() {
            let i = &trace.i[t];
            let f = &trace.f[t];
            let o = &trace.o[t];
            let g = &trace.g[t];
            let tanh_c = &trace.tanh_cells[t];
            let c_prev: &[f64] = if t == 0 { &[] } else { &trace.cells[t - 1] };
            let h_prev: &[f64] = if t == 0 { &[] } else { &trace.hiddens[t - 1] };

            let mut da_i = vec![0.0; h];
            let mut da_f = vec![0.0; h];
            let mut da_o = vec![0.0; h];
            let mut da_g = vec![0.0; h];
            for k in 0..h {
                let dh = d_hiddens[t][k] + dh_rec[k];
                let do_ = dh * tanh_c[k];
                let dc = dh * o[k] * (1.0 - tanh_c[k] * tanh_c[k]) + dc_rec[k];
                let cp = if t == 0 { 0.0 } else { c_prev[k] };
                let df = dc * cp;
                let di = dc * g[k];
                let dg = dc * i[k];
                da_i[k] = di * i[k] * (1.0 - i[k]);
                da_f[k] = df * f[k] * (1.0 - f[k]);
                da_o[k] = do_ * o[k] * (1.0 - o[k]);
                da_g[k] = dg * (1.0 - g[k] * g[k]);
                dc_rec[k] = dc * f[k];
            }

            match &trace.inputs[t] {
                OwnedInput::Dense(x) => {
                    grads.wx_i.add_outer(&da_i, x);
                    grads.wx_f.add_outer(&da_f, x);
                    grads.wx_o.add_outer(&da_o, x);
                    grads.wx_g.add_outer(&da_g, x);
                }
                OwnedInput::OneHot(hot) => {
                    grads.wx_i.add_col(*hot, &da_i);
                    grads.wx_f.add_col(*hot, &da_f);
                    grads.wx_o.add_col(*hot, &da_o);
                    grads.wx_g.add_col(*hot, &da_g);
                }
            }
            if t > 0 {
                grads.wh_i.add_outer(&da_i, h_prev);
                grads.wh_f.add_outer(&da_f, h_prev);
                grads.wh_o.add_outer(&da_o, h_prev);
                grads.wh_g.add_outer(&da_g, h_prev);
            }
            for k in 0..h {
                grads.b_i[k] += da_i[k];
                grads.b_f[k] += da_f[k];
                grads.b_o[k] += da_o[k];
                grads.b_g[k] += da_g[k];
            }

            if let Some(dxs) = dxs.as_mut() {
                let dx = &mut dxs[t];
                self.wx_i.matvec_t_into(&da_i, dx);
                self.wx_f.matvec_t_into(&da_f, dx);
                self.wx_o.matvec_t_into(&da_o, dx);
                self.wx_g.matvec_t_into(&da_g, dx);
            }

            dh_rec.iter_mut().for_each(|v| *v = 0.0);
            self.wh_i.matvec_t_into(&da_i, &mut dh_rec);
            self.wh_f.matvec_t_into(&da_f, &mut dh_rec);
            self.wh_o.matvec_t_into(&da_o, &mut dh_rec);
            self.wh_g.matvec_t_into(&da_g, &mut dh_rec);
        }
        (grads, dxs)
    }

    /// Tensors in persistence order, as `(suffix, rows, cols, data)`.
    pub fn tensors(&self) -> Vec<(&'static str, usize, usize, Vec<f64>)> {
        vec![
            ("wx_i", self.hidden_size, self.input_size, self.wx_i.data().to_vec()),
            ("wh_i", self.hidden_size, self.hidden_size, self.wh_i.data().to_vec()),
            ("wx_f", self.hidden_size, self.input_size, self.wx_f.data().to_vec()),
            ("wh_f", self.hidden_size, self.hidden_size, self.wh_f.data().to_vec()),
            ("wx_o", self.hidden_size, self.input_size, self.wx_o.data().to_vec()),
            ("wh_o", self.hidden_size, self.hidden_size, self.wh_o.data().to_vec()),
            ("wx_g", self.hidden_size, self.input_size, self.wx_g.data().to_vec()),
            ("wh_g", self.hidden_size, self.hidden_size, self.wh_g.data().to_vec()),
            ("b_i", 1, self.hidden_size, self.b_i.clone()),
            ("b_f", 1, self.hidden_size, self.b_f.clone()),
            ("b_o", 1, self.hidden_size, self.b_o.clone()),
            ("b_g", 1, self.hidden_size, self.b_g.clone()),
        ]
    }

    /// Parameters flattened in the same order as [`LstmGrads::to_vec`].
    pub fn params_vec(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for m in [
            &self.wx_i, &self.wh_i, &self.wx_f, &self.wh_f, &self.wx_o, &self.wh_o, &self.wx_g,
            &self.wh_g,
        ] {
            out.extend_from_slice(m.data());
        }
        for b in [&self.b_i, &self.b_f, &self.b_o, &self.b_g] {
            out.extend_from_slice(b);
        }
        out
    }

    pub fn param_count(&self) -> usize {
        4 * (self.hidden_size * self.input_size + self.hidden_size * self.hidden_size)
            + 4 * self.hidden_size
    }

    /// Writes a flat parameter vector back into the cell.
    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.param_count());
        let mut at = 0;
        for m in [
            &mut self.wx_i, &mut self.wh_i, &mut self.wx_f, &mut self.wh_f, &mut self.wx_o,
            &mut self.wh_o, &mut self.wx_g, &mut self.wh_g,
        ] {
            let n = m.data().len();
            m.data_mut().copy_from_slice(&params[at..at + n]);
            at += n;
        }
        for b in [&mut self.b_i, &mut self.b_f, &mut self.b_o, &mut self.b_g] {
            let n = b.len();
            b.copy_from_slice(&params[at..at + n]);
            at += n;
        }
    }
}
