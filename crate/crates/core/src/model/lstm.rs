use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{glorot_uniform, Gradients};
use crate::error::{config_err, Error, Result};
use crate::numerics::{sigmoid, Matrix, RngState};

/// Single LSTM layer with separate input and recurrent weights per gate.
///
/// Per step, with `h_0 = c_0 = 0`:
///
/// ```text
/// i_t = sigmoid(W_xi x_t + W_hi h_{t-1} + b_i)
/// f_t = sigmoid(W_xf x_t + W_hf h_{t-1} + b_f)
/// c_t = f_t * c_{t-1} + i_t * tanh(W_xc x_t + W_hc h_{t-1} + b_c)
/// o_t = sigmoid(W_xo x_t + W_ho h_{t-1} + b_o)
/// h_t = o_t * tanh(c_t)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer {
    pub w_xi: Matrix,
    pub w_hi: Matrix,
    pub w_xf: Matrix,
    pub w_hf: Matrix,
    pub w_xc: Matrix,
    pub w_hc: Matrix,
    pub w_xo: Matrix,
    pub w_ho: Matrix,
    pub b_i: Matrix,
    pub b_f: Matrix,
    pub b_c: Matrix,
    pub b_o: Matrix,
}

/// Initial forget-gate bias.
pub const FORGET_BIAS: f64 = 1.0;

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCache {
    pub input: Matrix,
    pub h: Matrix,
    pub c: Matrix,
    pub tanh_c: Matrix,
    pub input_gate: Matrix,
    pub forget_gate: Matrix,
    pub candidate: Matrix,
    pub output_gate: Matrix,
}

impl LstmLayer {
    pub const PARAM_NAMES: [&'static str; 12] = [
        "w_xi", "w_hi", "w_xf", "w_hf", "w_xc", "w_hc", "w_xo", "w_ho", "b_i", "b_f", "b_c", "b_o",
    ];

    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let wx = || Matrix::zeros(hidden_dim, input_dim);
        let wh = || Matrix::zeros(hidden_dim, hidden_dim);
        let b = || Matrix::zeros(hidden_dim, 1);
        Self {
            w_xi: wx(),
            w_hi: wh(),
            w_xf: wx(),
            w_hf: wh(),
            w_xc: wx(),
            w_hc: wh(),
            w_xo: wx(),
            w_ho: wh(),
            b_i: b(),
            b_f: b(),
            b_c: b(),
            b_o: b(),
        }
    }

    /// Fan-based uniform weights, zero biases except `b_f = FORGET_BIAS`.
    pub fn init(input_dim: usize, hidden_dim: usize, rng: &mut RngState) -> Result<Self> {
        if input_dim == 0 || hidden_dim == 0 {
            return Err(config_err!(
                "LSTM dims must be >= 1 (input {input_dim}, hidden {hidden_dim})"
            ));
        }
        let mut layer = Self::zeros(input_dim, hidden_dim);
        layer.w_xi = glorot_uniform(hidden_dim, input_dim, rng);
        layer.w_hi = glorot_uniform(hidden_dim, hidden_dim, rng);
        layer.w_xf = glorot_uniform(hidden_dim, input_dim, rng);
        layer.w_hf = glorot_uniform(hidden_dim, hidden_dim, rng);
        layer.w_xc = glorot_uniform(hidden_dim, input_dim, rng);
        layer.w_hc = glorot_uniform(hidden_dim, hidden_dim, rng);
        layer.w_xo = glorot_uniform(hidden_dim, input_dim, rng);
        layer.w_ho = glorot_uniform(hidden_dim, hidden_dim, rng);
        layer.b_f.fill(FORGET_BIAS);
        Ok(layer)
    }

    pub fn input_dim(&self) -> usize {
        self.w_xi.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_xi.rows()
    }

    pub fn params(&self) -> Vec<&Matrix> {
        vec![
            &self.w_xi, &self.w_hi, &self.w_xf, &self.w_hf, &self.w_xc, &self.w_hc, &self.w_xo, &self.w_ho, &self.b_i,
            &self.b_f, &self.b_c, &self.b_o,
        ]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Matrix> {
        vec![
            &mut self.w_xi,
            &mut self.w_hi,
            &mut self.w_xf,
            &mut self.w_hf,
            &mut self.w_xc,
            &mut self.w_hc,
            &mut self.w_xo,
            &mut self.w_ho,
            &mut self.b_i,
            &mut self.b_f,
            &mut self.b_c,
            &mut self.b_o,
        ]
    }

    /// Runs the layer over the rows of `x` (`T x input_dim`).
    pub fn forward(&self, x: &Matrix) -> Result<(Matrix, LstmCache)> {
        let d = self.input_dim();
        let n = self.hidden_dim();
        if x.cols() != d {
            return Err(Error::shape("lstm_forward", format!("{d} input columns"), x.cols()));
        }
        let steps = x.rows();
        let mut cache = LstmCache {
            input: x.clone(),
            h: Matrix::zeros(steps, n),
            c: Matrix::zeros(steps, n),
            tanh_c: Matrix::zeros(steps, n),
            input_gate: Matrix::zeros(steps, n),
            forget_gate: Matrix::zeros(steps, n),
            candidate: Matrix::zeros(steps, n),
            output_gate: Matrix::zeros(steps, n),
        };
        let mut h_prev = vec![0.0; n];
        let mut c_prev = vec![0.0; n];
        let mut ai = vec![0.0; n];
        let mut af = vec![0.0; n];
        let mut ac = vec![0.0; n];
        let mut ao = vec![0.0; n];
        for t in 0..steps {
            let xt = x.row(t);
            gate_preactivation(&self.w_xi, &self.w_hi, &self.b_i, xt, &h_prev, &mut ai);
            gate_preactivation(&self.w_xf, &self.w_hf, &self.b_f, xt, &h_prev, &mut af);
            gate_preactivation(&self.w_xc, &self.w_hc, &self.b_c, xt, &h_prev, &mut ac);
            gate_preactivation(&self.w_xo, &self.w_ho, &self.b_o, xt, &h_prev, &mut ao);
            for k in 0..n {
                let i = sigmoid(ai[k]);
                let f = sigmoid(af[k]);
                let g = libm::tanh(ac[k]);
                let o = sigmoid(ao[k]);
                let c = f * c_prev[k] + i * g;
                let tc = libm::tanh(c);
                let h = o * tc;
                cache.input_gate[(t, k)] = i;
                cache.forget_gate[(t, k)] = f;
                cache.candidate[(t, k)] = g;
                cache.output_gate[(t, k)] = o;
                cache.c[(t, k)] = c;
                cache.tanh_c[(t, k)] = tc;
                cache.h[(t, k)] = h;
                c_prev[k] = c;
                h_prev[k] = h;
            }
        }
        cache.h.ensure_finite("lstm_forward output")?;
        Ok((cache.h.clone(), cache))
    }

    /// Full backpropagation through time for upstream `dh` (`T x hidden`).
    /// Returns gradients in [`LstmLayer::params`] order.
    pub fn backward(&self, cache: &LstmCache, dh: &Matrix) -> Result<Gradients> {
        let n = self.hidden_dim();
        let steps = cache.h.rows();
        if cache.input.cols() != self.input_dim() || cache.h.cols() != n {
            return Err(Error::State(format!(
                "LSTM cache dims {}x{} do not match layer {}->{}",
                cache.input.cols(),
                cache.h.cols(),
                self.input_dim(),
                n
            )));
        }
        if dh.shape() != (steps, n) {
            return Err(Error::shape(
                "lstm_backward upstream",
                format!("{steps}x{n}"),
                format!("{}x{}", dh.rows(), dh.cols()),
            ));
        }
        let mut grads = Gradients::zeros_like(self.params());
        let mut dh_next = vec![0.0; n];
        let mut dc_next = vec![0.0; n];
        let mut dai = vec![0.0; n];
        let mut daf = vec![0.0; n];
        let mut dac = vec![0.0; n];
        let mut dao = vec![0.0; n];
        let zeros = vec![0.0; n];
        for t in (0..steps).rev() {
            let h_prev = if t == 0 { &zeros[..] } else { cache.h.row(t - 1) };
            let c_prev = if t == 0 { &zeros[..] } else { cache.c.row(t - 1) };
            for k in 0..n {
                let i = cache.input_gate[(t, k)];
                let f = cache.forget_gate[(t, k)];
                let g = cache.candidate[(t, k)];
                let o = cache.output_gate[(t, k)];
                let tc = cache.tanh_c[(t, k)];
                let dht = dh[(t, k)] + dh_next[k];
                let d_o = dht * tc;
                let dc = dht * o * (1.0 - tc * tc) + dc_next[k];
                let di = dc * g;
                let dg = dc * i;
                let df = dc * c_prev[k];
                dc_next[k] = dc * f;
                dai[k] = di * i * (1.0 - i);
                daf[k] = df * f * (1.0 - f);
                dac[k] = dg * (1.0 - g * g);
                dao[k] = d_o * o * (1.0 - o);
            }
            let xt = cache.input.row(t);
            dh_next.fill(0.0);
            let gates: [(&[f64], usize, &Matrix); 4] = [
                (&dai, 0, &self.w_hi),
                (&daf, 2, &self.w_hf),
                (&dac, 4, &self.w_hc),
                (&dao, 6, &self.w_ho),
            ];
            for (da, wx_idx, w_h) in gates {
                grads.0[wx_idx].outer_acc(da, xt);
                grads.0[wx_idx + 1].outer_acc(da, h_prev);
                let bias = &mut grads.0[8 + wx_idx / 2];
                for (b, d) in bias.as_mut_slice().iter_mut().zip(da) {
                    *b += d;
                }
                w_h.t_matvec_acc(da, &mut dh_next);
            }
        }
        Ok(grads)
    }
}

#[inline]
fn gate_preactivation(wx: &Matrix, wh: &Matrix, b: &Matrix, x: &[f64], h: &[f64], out: &mut [f64]) {
    out.copy_from_slice(b.as_slice());
    wx.matvec_acc(x, out);
    wh.matvec_acc(h, out);
}

/// Free-function form of [`LstmLayer::forward`].
pub fn lstm_forward(layer: &LstmLayer, x: &Matrix) -> Result<(Matrix, LstmCache)> {
    layer.forward(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{finite_diff_grad, max_relative_error};

    #[test]
    fn zero_parameters_give_zero_output() {
        let layer = LstmLayer::zeros(3, 4);
        let x = Matrix::from_rows(&[[1.0, -2.0, 0.5], [0.3, 0.3, 9.0]]).unwrap();
        let (h, cache) = layer.forward(&x).unwrap();
        assert_eq!(h, Matrix::zeros(2, 4));
        assert!(cache.input_gate.as_slice().iter().all(|&g| g == 0.5));
        assert_eq!(cache.c, Matrix::zeros(2, 4));
    }

    #[test]
    fn saturated_scalar_unit() {
        let mut layer = LstmLayer::zeros(1, 1);
        layer.b_i.fill(10.0);
        layer.b_o.fill(10.0);
        layer.b_f.fill(-10.0);
        let (h, cache) = layer.forward(&Matrix::column(&[123.0])).unwrap();
        // Candidate is tanh(0) = 0 because every weight is zero.
        assert_eq!(cache.c[(0, 0)], 0.0);
        assert_eq!(h[(0, 0)], 0.0);
        assert!((cache.input_gate[(0, 0)] - sigmoid(10.0)).abs() < 1e-15);
    }

    #[test]
    fn rejects_wrong_input_width() {
        let layer = LstmLayer::zeros(3, 2);
        assert!(matches!(layer.forward(&Matrix::zeros(4, 2)), Err(Error::Shape { .. })));
        assert!(LstmLayer::init(0, 2, &mut RngState::new(0)).is_err());
    }

    #[test]
    fn init_sets_forget_bias_and_bounds() {
        let layer = LstmLayer::init(5, 3, &mut RngState::new(9)).unwrap();
        assert!(layer.b_f.as_slice().iter().all(|&b| b == FORGET_BIAS));
        assert!(layer.b_i.as_slice().iter().all(|&b| b == 0.0));
        let lim_x = libm::sqrt(6.0 / 8.0);
        let lim_h = libm::sqrt(6.0 / 6.0);
        assert!(layer.w_xi.max_abs() <= lim_x);
        assert!(layer.w_hc.max_abs() <= lim_h);
    }

    #[test]
    fn backward_matches_finite_differences() {
        for seed in 0..5 {
            let mut rng = RngState::new(100 + seed);
            let layer = LstmLayer::init(2, 2, &mut rng).unwrap();
            let x = Matrix::new(3, 2, (0..6).map(|_| rng.normal()).collect()).unwrap();
            let up = Matrix::new(3, 2, (0..6).map(|_| rng.normal()).collect()).unwrap();
            let objective = |l: &LstmLayer| {
                let (h, _) = l.forward(&x).unwrap();
                crate::numerics::dot(h.as_slice(), up.as_slice())
            };
            let (_, cache) = layer.forward(&x).unwrap();
            let grads = layer.backward(&cache, &up).unwrap();
            for (block, g) in grads.0.iter().enumerate() {
                let base = layer.params()[block].as_slice().to_vec();
                let numeric = finite_diff_grad(
                    |v| {
                        let mut l = layer.clone();
                        l.params_mut()[block].as_mut_slice().copy_from_slice(v);
                        objective(&l)
                    },
                    &base,
                    1e-5,
                )
                .unwrap();
                let err = max_relative_error(g.as_slice(), &numeric);
                assert!(err < 1e-4, "block {} err {err}", LstmLayer::PARAM_NAMES[block]);
            }
        }
    }
}
