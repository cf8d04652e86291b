//! Single-layer LSTM and its bidirectional wrapper, with backpropagation
//! through time.
//!
//! Gate pre-activations are packed along the last axis in the order
//! input, forget, candidate, output:
//!
//! ```text
//! z_t = x_t W + h_{t-1} U + b
//! i, f, o = sigmoid(z_i), sigmoid(z_f), sigmoid(z_o)    g = tanh(z_g)
//! c_t = f * c_{t-1} + i * g                              h_t = o * tanh(c_t)
//! ```
//!
//! with `h_0 = c_0 = 0`.

use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams<T> {
    /// `[input_dim, 4 * hidden]`
    pub w_input: Tensor<T>,
    /// `[hidden, 4 * hidden]`
    pub w_recurrent: Tensor<T>,
    /// `[4 * hidden]`
    pub bias: Tensor<T>,
}

impl<T: Scalar> LstmParams<T> {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        LstmParams {
            w_input: Tensor::zeros(&[input_dim, 4 * hidden]),
            w_recurrent: Tensor::zeros(&[hidden, 4 * hidden]),
            bias: Tensor::zeros(&[4 * hidden]),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_recurrent.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.w_input.rows()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_dim(), self.hidden())
    }

    fn validate(&self) -> Result<()> {
        let h = self.hidden();
        self.w_recurrent.expect_shape(&[h, 4 * h], "lstm recurrent weight")?;
        self.w_input.expect_shape(&[self.input_dim(), 4 * h], "lstm input weight")?;
        self.bias.expect_shape(&[4 * h], "lstm bias")
    }
}

#[derive(Clone, Debug)]
pub struct LstmCache<T> {
    input: Tensor<T>,
    /// Activated gates per step, `[time, 4 * hidden]`.
    gates: Vec<T>,
    cells: Vec<T>,
    hidden: Vec<T>,
    tanh_cells: Vec<T>,
    return_sequences: bool,
}

fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Runs the recurrence over `x: [time, input_dim]`. Returns all hidden
/// states `[time, hidden]` or only the last one `[hidden]`.
pub fn lstm_forward<T: Scalar>(
    params: &LstmParams<T>,
    x: &Tensor<T>,
    return_sequences: bool,
) -> Result<(Tensor<T>, LstmCache<T>)> {
    params.validate()?;
    if x.ndim() != 2 || x.row_len() != params.input_dim() {
        return Err(Error::Shape(format!(
            "lstm input {:?} does not match input dim {}",
            x.shape(),
            params.input_dim()
        )));
    }
    let steps = x.rows();
    let h = params.hidden();
    let mut gates = Vec::with_capacity(steps * 4 * h);
    let mut cells = Vec::with_capacity(steps * h);
    let mut hidden = Vec::with_capacity(steps * h);
    let mut tanh_cells = Vec::with_capacity(steps * h);
    let mut h_prev = vec![T::zero(); h];
    let mut c_prev = vec![T::zero(); h];
    let mut z = vec![T::zero(); 4 * h];

    for t in 0..steps {
        z.copy_from_slice(params.bias.data());
        for (d, &xv) in x.row(t).iter().enumerate() {
            if xv != T::zero() {
                axpy(xv, params.w_input.row(d), &mut z);
            }
        }
        for (k, &hv) in h_prev.iter().enumerate() {
            if hv != T::zero() {
                axpy(hv, params.w_recurrent.row(k), &mut z);
            }
        }
        for j in 0..h {
            let i_gate = sigmoid(z[j]);
            let f_gate = sigmoid(z[h + j]);
            let g_gate = z[2 * h + j].tanh();
            let o_gate = sigmoid(z[3 * h + j]);
            let c = f_gate * c_prev[j] + i_gate * g_gate;
            let tc = c.tanh();
            z[j] = i_gate;
            z[h + j] = f_gate;
            z[2 * h + j] = g_gate;
            z[3 * h + j] = o_gate;
            c_prev[j] = c;
            h_prev[j] = o_gate * tc;
            tanh_cells.push(tc);
        }
        gates.extend_from_slice(&z);
        cells.extend_from_slice(&c_prev);
        hidden.extend_from_slice(&h_prev);
    }

    let output =
        if return_sequences { Tensor::from_vec(&[steps, h], hidden.clone())? } else { Tensor::vector(h_prev)? };
    Ok((output, LstmCache { input: x.clone(), gates, cells, hidden, tanh_cells, return_sequences }))
}

/// Backpropagation through time. Accumulates into `grads` and returns the
/// gradient with respect to the input sequence.
pub fn lstm_grad<T: Scalar>(
    params: &LstmParams<T>,
    cache: &LstmCache<T>,
    grad_out: &Tensor<T>,
    grads: &mut LstmParams<T>,
) -> Result<Tensor<T>> {
    let h = params.hidden();
    let steps = cache.input.rows();
    if cache.return_sequences {
        grad_out.expect_shape(&[steps, h], "lstm grad")?;
    } else {
        grad_out.expect_shape(&[h], "lstm grad")?;
    }
    grads.w_input.expect_shape(params.w_input.shape(), "lstm input weight grad")?;
    grads.w_recurrent.expect_shape(params.w_recurrent.shape(), "lstm recurrent weight grad")?;

    let mut grad_x = cache.input.zeros_like();
    let mut dh_next = vec![T::zero(); h];
    let mut dc_next = vec![T::zero(); h];
    let mut dz = vec![T::zero(); 4 * h];
    let zeros = vec![T::zero(); h];

    for t in (0..steps).rev() {
        let gates = &cache.gates[t * 4 * h..(t + 1) * 4 * h];
        let c_prev = if t > 0 { &cache.cells[(t - 1) * h..t * h] } else { &zeros[..] };
        let h_prev = if t > 0 { &cache.hidden[(t - 1) * h..t * h] } else { &zeros[..] };
        let tanh_c = &cache.tanh_cells[t * h..(t + 1) * h];
        let upstream: Option<&[T]> = if cache.return_sequences {
            Some(grad_out.row(t))
        } else if t + 1 == steps {
            Some(grad_out.data())
        } else {
            None
        };

        for j in 0..h {
            let (i_gate, f_gate, g_gate, o_gate) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
            let dh = dh_next[j] + upstream.map_or(T::zero(), |u| u[j]);
            let tc = tanh_c[j];
            let d_o = dh * tc;
            let dc = dh * o_gate * (T::one() - tc * tc) + dc_next[j];
            let d_i = dc * g_gate;
            let d_g = dc * i_gate;
            let d_f = dc * c_prev[j];
            dz[j] = d_i * i_gate * (T::one() - i_gate);
            dz[h + j] = d_f * f_gate * (T::one() - f_gate);
            dz[2 * h + j] = d_g * (T::one() - g_gate * g_gate);
            dz[3 * h + j] = d_o * o_gate * (T::one() - o_gate);
            dc_next[j] = dc * f_gate;
        }

        axpy(T::one(), &dz, grads.bias.data_mut());
        let x_t = cache.input.row(t);
        let grad_x_t = grad_x.row_mut(t);
        for (d, &xv) in x_t.iter().enumerate() {
            axpy(xv, &dz, grads.w_input.row_mut(d));
            grad_x_t[d] = dot(params.w_input.row(d), &dz);
        }
        for k in 0..h {
            axpy(h_prev[k], &dz, grads.w_recurrent.row_mut(k));
            dh_next[k] = dot(params.w_recurrent.row(k), &dz);
        }
    }
    Ok(grad_x)
}

#[derive(Clone, Debug)]
pub struct BiLstmCache<T> {
    forward: LstmCache<T>,
    backward: LstmCache<T>,
    hidden: usize,
}

/// Forward and time-reversed LSTMs over the same input; step `t` of the
/// output is `[h_fwd(t), h_bwd(t)]`, shape `[time, 2 * hidden]`.
pub fn bilstm_forward<T: Scalar>(
    forward: &LstmParams<T>,
    backward: &LstmParams<T>,
    x: &Tensor<T>,
) -> Result<(Tensor<T>, BiLstmCache<T>)> {
    if forward.hidden() != backward.hidden() {
        return Err(Error::Shape("bilstm directions differ in hidden size".into()));
    }
    let h = forward.hidden();
    let (out_f, cache_f) = lstm_forward(forward, x, true)?;
    let (out_b, cache_b) = lstm_forward(backward, &x.reversed_rows(), true)?;
    let steps = x.rows();
    let mut data = Vec::with_capacity(steps * 2 * h);
    for t in 0..steps {
        data.extend_from_slice(out_f.row(t));
        data.extend_from_slice(out_b.row(steps - 1 - t));
    }
    Ok((Tensor::from_vec(&[steps, 2 * h], data)?, BiLstmCache { forward: cache_f, backward: cache_b, hidden: h }))
}

pub fn bilstm_grad<T: Scalar>(
    forward: &LstmParams<T>,
    backward: &LstmParams<T>,
    cache: &BiLstmCache<T>,
    grad_out: &Tensor<T>,
    grads_forward: &mut LstmParams<T>,
    grads_backward: &mut LstmParams<T>,
) -> Result<Tensor<T>> {
    let h = cache.hidden;
    let steps = cache.forward.input.rows();
    grad_out.expect_shape(&[steps, 2 * h], "bilstm grad")?;
    let mut g_f = Vec::with_capacity(steps * h);
    let mut g_b = Vec::with_capacity(steps * h);
    for t in 0..steps {
        g_f.extend_from_slice(&grad_out.row(t)[..h]);
    }
    for t in (0..steps).rev() {
        g_b.extend_from_slice(&grad_out.row(t)[h..]);
    }
    let dx_f = lstm_grad(forward, &cache.forward, &Tensor::from_vec(&[steps, h], g_f)?, grads_forward)?;
    let dx_b = lstm_grad(backward, &cache.backward, &Tensor::from_vec(&[steps, h], g_b)?, grads_backward)?;
    let mut dx = dx_f;
    dx.add_assign(&dx_b.reversed_rows())?;
    Ok(dx)
}
