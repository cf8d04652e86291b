//! Layer forward passes and their hand-derived gradients.
//!
//! Every `*_grad` function adds parameter gradients into the buffers it is
//! given and returns the gradient with respect to the layer input.
//! Sequences are `[time, channels]` tensors.

use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::scalar::Scalar;

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

// ---------------------------------------------------------------------------
// embedding

/// Row lookup: output row `t` is `table[ids[t]]`.
pub fn embedding_forward<T: Scalar>(table: &Tensor<T>, ids: &[usize]) -> Result<Tensor<T>> {
    if table.ndim() != 2 {
        return Err(Error::Shape("embedding table must be 2-D".into()));
    }
    if ids.is_empty() {
        return Err(Error::Shape("empty id sequence".into()));
    }
    let vocab = table.rows();
    let dim = table.row_len();
    let mut data = Vec::with_capacity(ids.len() * dim);
    for &id in ids {
        if id >= vocab {
            return Err(Error::IndexOutOfRange { index: id, bound: vocab });
        }
        data.extend_from_slice(table.row(id));
    }
    Tensor::from_vec(&[ids.len(), dim], data)
}

/// Scatters `grad_out` rows into `grad_table`; repeated ids accumulate.
pub fn embedding_grad<T: Scalar>(ids: &[usize], grad_out: &Tensor<T>, grad_table: &mut Tensor<T>) -> Result<()> {
    grad_out.expect_shape(&[ids.len(), grad_table.row_len()], "embedding grad")?;
    for (t, &id) in ids.iter().enumerate() {
        if id >= grad_table.rows() {
            return Err(Error::IndexOutOfRange { index: id, bound: grad_table.rows() });
        }
        axpy(T::one(), grad_out.row(t), grad_table.row_mut(id));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// dense

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Relu,
}

#[derive(Clone, Debug)]
pub struct DenseCache<T> {
    input: Tensor<T>,
    output: Tensor<T>,
    activation: Activation,
}

/// `y = act(W x + b)` with `W: [out, in]`.
pub fn dense_forward<T: Scalar>(
    weight: &Tensor<T>,
    bias: &Tensor<T>,
    x: &Tensor<T>,
    activation: Activation,
) -> Result<(Tensor<T>, DenseCache<T>)> {
    if weight.ndim() != 2 {
        return Err(Error::Shape("dense weight must be 2-D".into()));
    }
    let (outputs, inputs) = (weight.rows(), weight.row_len());
    bias.expect_shape(&[outputs], "dense bias")?;
    x.expect_shape(&[inputs], "dense input")?;
    let mut y: Vec<T> = (0..outputs).map(|o| dot(weight.row(o), x.data()) + bias.data()[o]).collect();
    if activation == Activation::Relu {
        y.iter_mut().for_each(|v| *v = v.max(T::zero()));
    }
    let output = Tensor::vector(y)?;
    Ok((output.clone(), DenseCache { input: x.clone(), output, activation }))
}

pub fn dense_grad<T: Scalar>(
    weight: &Tensor<T>,
    cache: &DenseCache<T>,
    grad_out: &Tensor<T>,
    grad_weight: &mut Tensor<T>,
    grad_bias: &mut Tensor<T>,
) -> Result<Tensor<T>> {
    grad_out.expect_shape(cache.output.shape(), "dense grad")?;
    grad_weight.expect_shape(weight.shape(), "dense weight grad")?;
    let x = cache.input.data();
    let mut grad_x = vec![T::zero(); x.len()];
    for o in 0..weight.rows() {
        let mut g = grad_out.data()[o];
        if cache.activation == Activation::Relu && cache.output.data()[o] <= T::zero() {
            g = T::zero();
        }
        if g == T::zero() {
            continue;
        }
        grad_bias.data_mut()[o] += g;
        axpy(g, x, grad_weight.row_mut(o));
        axpy(g, weight.row(o), &mut grad_x);
    }
    Tensor::vector(grad_x)
}

// ---------------------------------------------------------------------------
// conv1d

#[derive(Clone, Debug)]
pub struct Conv1dCache<T> {
    input: Tensor<T>,
    output: Tensor<T>,
}

/// Valid, stride-1 convolution followed by ReLU.
///
/// `kernel: [filters, width, channels]`, `x: [time, channels]`, output
/// `[time - width + 1, filters]`.
pub fn conv1d_forward<T: Scalar>(
    kernel: &Tensor<T>,
    bias: &Tensor<T>,
    x: &Tensor<T>,
) -> Result<(Tensor<T>, Conv1dCache<T>)> {
    let [filters, width, channels] = *kernel.shape() else {
        return Err(Error::Shape("conv kernel must be 3-D".into()));
    };
    bias.expect_shape(&[filters], "conv bias")?;
    if x.ndim() != 2 || x.row_len() != channels {
        return Err(Error::Shape(format!("conv input {:?} does not have {channels} channels", x.shape())));
    }
    let steps = x.rows();
    if steps < width {
        return Err(Error::Shape(format!("sequence of length {steps} is shorter than kernel width {width}")));
    }
    let out_steps = steps - width + 1;
    let window = width * channels;
    let mut out = Vec::with_capacity(out_steps * filters);
    for t in 0..out_steps {
        let patch = &x.data()[t * channels..t * channels + window];
        for f in 0..filters {
            let v = dot(kernel.row(f), patch) + bias.data()[f];
            out.push(v.max(T::zero()));
        }
    }
    let output = Tensor::from_vec(&[out_steps, filters], out)?;
    Ok((output.clone(), Conv1dCache { input: x.clone(), output }))
}

pub fn conv1d_grad<T: Scalar>(
    kernel: &Tensor<T>,
    cache: &Conv1dCache<T>,
    grad_out: &Tensor<T>,
    grad_kernel: &mut Tensor<T>,
    grad_bias: &mut Tensor<T>,
) -> Result<Tensor<T>> {
    grad_out.expect_shape(cache.output.shape(), "conv grad")?;
    grad_kernel.expect_shape(kernel.shape(), "conv kernel grad")?;
    let (filters, channels) = (kernel.shape()[0], kernel.shape()[2]);
    let window = kernel.row_len();
    let x = cache.input.data();
    let mut grad_x = cache.input.zeros_like();
    for t in 0..grad_out.rows() {
        let start = t * channels;
        for f in 0..filters {
            if cache.output.row(t)[f] <= T::zero() {
                continue;
            }
            let g = grad_out.row(t)[f];
            grad_bias.data_mut()[f] += g;
            axpy(g, &x[start..start + window], grad_kernel.row_mut(f));
            axpy(g, kernel.row(f), &mut grad_x.data_mut()[start..start + window]);
        }
    }
    Ok(grad_x)
}

// ---------------------------------------------------------------------------
// pooling

#[derive(Clone, Debug)]
pub struct MaxPoolCache {
    steps: usize,
    argmax: Vec<usize>,
}

/// Per-channel maximum over time. Ties resolve to the earliest step.
pub fn global_max_pool<T: Scalar>(x: &Tensor<T>) -> Result<(Tensor<T>, MaxPoolCache)> {
    if x.ndim() != 2 {
        return Err(Error::Shape("global pooling expects [time, channels]".into()));
    }
    let channels = x.row_len();
    let mut best = x.row(0).to_vec();
    let mut argmax = vec![0; channels];
    for t in 1..x.rows() {
        for (c, &v) in x.row(t).iter().enumerate() {
            if v > best[c] {
                best[c] = v;
                argmax[c] = t;
            }
        }
    }
    Ok((Tensor::vector(best)?, MaxPoolCache { steps: x.rows(), argmax }))
}

pub fn global_max_pool_grad<T: Scalar>(cache: &MaxPoolCache, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    let channels = cache.argmax.len();
    grad_out.expect_shape(&[channels], "max pool grad")?;
    let mut grad = Tensor::zeros(&[cache.steps, channels]);
    for (c, &t) in cache.argmax.iter().enumerate() {
        grad.row_mut(t)[c] = grad_out.data()[c];
    }
    Ok(grad)
}

#[derive(Clone, Debug)]
pub struct AvgPoolCache {
    steps: usize,
    channels: usize,
}

/// Per-channel mean over time.
pub fn global_avg_pool<T: Scalar>(x: &Tensor<T>) -> Result<(Tensor<T>, AvgPoolCache)> {
    if x.ndim() != 2 {
        return Err(Error::Shape("global pooling expects [time, channels]".into()));
    }
    let (steps, channels) = (x.rows(), x.row_len());
    let mut sum = vec![T::zero(); channels];
    for t in 0..steps {
        axpy(T::one(), x.row(t), &mut sum);
    }
    let inv = T::one() / T::lit(steps as f64);
    sum.iter_mut().for_each(|v| *v *= inv);
    Ok((Tensor::vector(sum)?, AvgPoolCache { steps, channels }))
}

pub fn global_avg_pool_grad<T: Scalar>(cache: &AvgPoolCache, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    grad_out.expect_shape(&[cache.channels], "avg pool grad")?;
    let inv = T::one() / T::lit(cache.steps as f64);
    let mut grad = Tensor::zeros(&[cache.steps, cache.channels]);
    for t in 0..cache.steps {
        for (g, &o) in grad.row_mut(t).iter_mut().zip(grad_out.data()) {
            *g = o * inv;
        }
    }
    Ok(grad)
}

// ---------------------------------------------------------------------------
// concat

#[derive(Clone, Debug)]
pub struct ConcatCache {
    shapes: Vec<Vec<usize>>,
    axis: usize,
}

/// Joins tensors along `axis`; all other dimensions must agree.
pub fn concat<T: Scalar>(xs: &[&Tensor<T>], axis: usize) -> Result<(Tensor<T>, ConcatCache)> {
    let first = xs.first().ok_or_else(|| Error::Shape("concat of no tensors".into()))?;
    let ndim = first.ndim();
    if axis >= ndim {
        return Err(Error::Shape(format!("axis {axis} out of range for {ndim}-D tensors")));
    }
    for x in xs {
        let same_off_axis = x.ndim() == ndim && (0..ndim).all(|d| d == axis || x.shape()[d] == first.shape()[d]);
        if !same_off_axis {
            return Err(Error::Shape(format!(
                "cannot concat {:?} with {:?} along axis {axis}",
                first.shape(),
                x.shape()
            )));
        }
    }
    let outer: usize = first.shape()[..axis].iter().product();
    let inner: usize = first.shape()[axis + 1..].iter().product();
    let mut shape = first.shape().to_vec();
    shape[axis] = xs.iter().map(|x| x.shape()[axis]).sum();
    let mut data = Vec::with_capacity(shape.iter().product());
    for o in 0..outer {
        for x in xs {
            let block = x.shape()[axis] * inner;
            data.extend_from_slice(&x.data()[o * block..(o + 1) * block]);
        }
    }
    let cache = ConcatCache { shapes: xs.iter().map(|x| x.shape().to_vec()).collect(), axis };
    Ok((Tensor::from_vec(&shape, data)?, cache))
}

/// Splits `grad_out` back into pieces shaped like the concat inputs.
pub fn concat_grad<T: Scalar>(cache: &ConcatCache, grad_out: &Tensor<T>) -> Result<Vec<Tensor<T>>> {
    let axis = cache.axis;
    let first = &cache.shapes[0];
    let outer: usize = first[..axis].iter().product();
    let inner: usize = first[axis + 1..].iter().product();
    let total: usize = cache.shapes.iter().map(|s| s[axis]).sum();
    let mut expected = first.clone();
    expected[axis] = total;
    grad_out.expect_shape(&expected, "concat grad")?;

    let mut pieces: Vec<Vec<T>> = cache.shapes.iter().map(|s| Vec::with_capacity(s.iter().product())).collect();
    let row = total * inner;
    for o in 0..outer {
        let mut offset = o * row;
        for (piece, shape) in pieces.iter_mut().zip(&cache.shapes) {
            let block = shape[axis] * inner;
            piece.extend_from_slice(&grad_out.data()[offset..offset + block]);
            offset += block;
        }
    }
    pieces.into_iter().zip(&cache.shapes).map(|(data, shape)| Tensor::from_vec(shape, data)).collect()
}

// ---------------------------------------------------------------------------
// softmax / cross-entropy

/// Numerically stable softmax of a logit vector.
pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Result<Tensor<T>> {
    logits.ensure_finite("logits")?;
    let max = logits.data().iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.data().iter().map(|&z| (z - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    Tensor::vector(exps.into_iter().map(|e| e / sum).collect())
}

/// Softmax probabilities and `-ln p[gold]`.
pub fn softmax_xent<T: Scalar>(logits: &Tensor<T>, gold: usize) -> Result<(T, Tensor<T>)> {
    if gold >= logits.len() {
        return Err(Error::IndexOutOfRange { index: gold, bound: logits.len() });
    }
    let probs = softmax(logits)?;
    // log-sum-exp form keeps the loss finite when p[gold] underflows
    let max = logits.data().iter().copied().fold(T::neg_infinity(), T::max);
    let lse = max + logits.data().iter().map(|&z| (z - max).exp()).sum::<T>().ln();
    Ok((lse - logits.data()[gold], probs))
}

/// Gradient of the loss with respect to the logits: `probs - onehot(gold)`.
pub fn softmax_xent_grad<T: Scalar>(probs: &Tensor<T>, gold: usize) -> Result<Tensor<T>> {
    if gold >= probs.len() {
        return Err(Error::IndexOutOfRange { index: gold, bound: probs.len() });
    }
    let mut grad = probs.clone();
    grad.data_mut()[gold] -= T::one();
    Ok(grad)
}
