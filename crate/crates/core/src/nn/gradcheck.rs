//! Central finite-difference checks of the analytic gradients.
//!
//! Each check draws random inputs and parameters from a seed, compares every
//! analytic partial derivative against `(L(x+h) - L(x-h)) / 2h` and returns
//! the largest relative error. Layers are reduced to a scalar with a random
//! projection `L = sum(r * out)`; whole models use their mean cross-entropy.
//!
//! ReLU and max pooling are not differentiable everywhere. When a random
//! draw lands within `STEP` of such a point, the forward and backward
//! one-sided slopes disagree and the central difference is meaningless;
//! those coordinates are detected from the loss values alone, skipped and
//! counted in [`GradCheck::kinks`].

use rand::Rng;

use crate::arch::{ArchId, Model, ModelConfig};
use crate::corpus::Sentiment;
use crate::error::Result;
use crate::nn::init::{rng_from_seed, uniform, SeededRng};
use crate::nn::{self, Activation, LstmParams, Tensor};

/// Finite-difference step.
pub const STEP: f64 = 1e-5;
/// Denominator floor for [`relative_error`], so that two vanishing
/// derivatives compare as equal instead of dividing noise by noise.
pub const ERROR_FLOOR: f64 = 1e-6;
/// One-sided slopes further apart than this mark a non-differentiable point.
/// On smooth coordinates they differ by about `STEP * |L''|`, which stays
/// below 1e-5 for the small models checked here.
pub const KINK_JUMP: f64 = 1e-5;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GradCheck {
    /// Largest relative error over the compared coordinates.
    pub max_error: f64,
    pub compared: usize,
    /// Coordinates skipped because the loss has a kink within `STEP`.
    pub kinks: usize,
}

impl GradCheck {
    pub fn merge(self, other: GradCheck) -> GradCheck {
        GradCheck {
            max_error: self.max_error.max(other.max_error),
            compared: self.compared + other.compared,
            kinks: self.kinks + other.kinks,
        }
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(ERROR_FLOOR)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerCase {
    Embedding,
    DenseLinear,
    DenseRelu,
    Conv1d,
    GlobalMaxPool,
    GlobalAvgPool,
    Concat,
    SoftmaxCrossEntropy,
    LstmFinal,
    LstmSequence,
    BiLstm,
}

impl LayerCase {
    pub const ALL: [LayerCase; 11] = [
        LayerCase::Embedding,
        LayerCase::DenseLinear,
        LayerCase::DenseRelu,
        LayerCase::Conv1d,
        LayerCase::GlobalMaxPool,
        LayerCase::GlobalAvgPool,
        LayerCase::Concat,
        LayerCase::SoftmaxCrossEntropy,
        LayerCase::LstmFinal,
        LayerCase::LstmSequence,
        LayerCase::BiLstm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LayerCase::Embedding => "embedding",
            LayerCase::DenseLinear => "dense-linear",
            LayerCase::DenseRelu => "dense-relu",
            LayerCase::Conv1d => "conv1d",
            LayerCase::GlobalMaxPool => "global-max-pool",
            LayerCase::GlobalAvgPool => "global-avg-pool",
            LayerCase::Concat => "concat",
            LayerCase::SoftmaxCrossEntropy => "softmax-xent",
            LayerCase::LstmFinal => "lstm-final",
            LayerCase::LstmSequence => "lstm-sequence",
            LayerCase::BiLstm => "bilstm",
        }
    }
}

fn rand_tensor(rng: &mut SeededRng, shape: &[usize]) -> Tensor<f64> {
    uniform(rng, shape, 1.0)
}

fn project(r: &Tensor<f64>, out: &Tensor<f64>) -> f64 {
    r.data().iter().zip(out.data()).map(|(a, b)| a * b).sum()
}

/// Perturbs every coordinate of every variable and compares against `analytic`.
fn compare(
    vars: &mut [Tensor<f64>],
    analytic: &[Tensor<f64>],
    loss: impl Fn(&[Tensor<f64>]) -> Result<f64>,
) -> Result<GradCheck> {
    let mut report = GradCheck::default();
    let center = loss(vars)?;
    for k in 0..vars.len() {
        analytic[k].expect_shape(vars[k].shape(), "analytic gradient")?;
        for j in 0..vars[k].len() {
            let orig = vars[k].data()[j];
            vars[k].data_mut()[j] = orig + STEP;
            let plus = loss(vars)?;
            vars[k].data_mut()[j] = orig - STEP;
            let minus = loss(vars)?;
            vars[k].data_mut()[j] = orig;
            if ((plus - center) / STEP - (center - minus) / STEP).abs() > KINK_JUMP {
                report.kinks += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * STEP);
            report.compared += 1;
            report.max_error = report.max_error.max(relative_error(analytic[k].data()[j], numeric));
        }
    }
    Ok(report)
}

fn lstm_vars(rng: &mut SeededRng, input: usize, hidden: usize) -> [Tensor<f64>; 3] {
    [rand_tensor(rng, &[input, 4 * hidden]), rand_tensor(rng, &[hidden, 4 * hidden]), rand_tensor(rng, &[4 * hidden])]
}

fn lstm_from(vars: &[Tensor<f64>]) -> LstmParams<f64> {
    LstmParams { w_input: vars[0].clone(), w_recurrent: vars[1].clone(), bias: vars[2].clone() }
}

/// Compares every parameter and input coordinate of one layer.
pub fn check_layer(case: LayerCase, seed: u64) -> Result<GradCheck> {
    let mut rng = rng_from_seed(seed);
    let (t, c, f, h) = (7, 4, 6, 5);
    match case {
        LayerCase::Embedding => {
            let ids: Vec<usize> = (0..t).map(|_| rng.gen_range(0..5)).collect();
            let mut vars = vec![rand_tensor(&mut rng, &[5, c])];
            let r = rand_tensor(&mut rng, &[t, c]);
            let mut g = vars[0].zeros_like();
            nn::embedding_grad(&ids, &r, &mut g)?;
            compare(&mut vars, &[g], |v| Ok(project(&r, &nn::embedding_forward(&v[0], &ids)?)))
        }
        LayerCase::DenseLinear | LayerCase::DenseRelu => {
            let act = if case == LayerCase::DenseRelu { Activation::Relu } else { Activation::Linear };
            let mut vars =
                vec![rand_tensor(&mut rng, &[f, c]), rand_tensor(&mut rng, &[f]), rand_tensor(&mut rng, &[c])];
            let r = rand_tensor(&mut rng, &[f]);
            let (_, cache) = nn::dense_forward(&vars[0], &vars[1], &vars[2], act)?;
            let (mut gw, mut gb) = (vars[0].zeros_like(), vars[1].zeros_like());
            let gx = nn::dense_grad(&vars[0], &cache, &r, &mut gw, &mut gb)?;
            compare(&mut vars, &[gw, gb, gx], |v| Ok(project(&r, &nn::dense_forward(&v[0], &v[1], &v[2], act)?.0)))
        }
        LayerCase::Conv1d => {
            let k = 3;
            let mut vars =
                vec![rand_tensor(&mut rng, &[f, k, c]), rand_tensor(&mut rng, &[f]), rand_tensor(&mut rng, &[t, c])];
            let r = rand_tensor(&mut rng, &[t - k + 1, f]);
            let (_, cache) = nn::conv1d_forward(&vars[0], &vars[1], &vars[2])?;
            let (mut gk, mut gb) = (vars[0].zeros_like(), vars[1].zeros_like());
            let gx = nn::conv1d_grad(&vars[0], &cache, &r, &mut gk, &mut gb)?;
            compare(&mut vars, &[gk, gb, gx], |v| Ok(project(&r, &nn::conv1d_forward(&v[0], &v[1], &v[2])?.0)))
        }
        LayerCase::GlobalMaxPool => {
            let mut vars = vec![rand_tensor(&mut rng, &[t, c])];
            let r = rand_tensor(&mut rng, &[c]);
            let (_, cache) = nn::global_max_pool(&vars[0])?;
            let gx = nn::global_max_pool_grad(&cache, &r)?;
            compare(&mut vars, &[gx], |v| Ok(project(&r, &nn::global_max_pool(&v[0])?.0)))
        }
        LayerCase::GlobalAvgPool => {
            let mut vars = vec![rand_tensor(&mut rng, &[t, c])];
            let r = rand_tensor(&mut rng, &[c]);
            let (_, cache) = nn::global_avg_pool(&vars[0])?;
            let gx = nn::global_avg_pool_grad(&cache, &r)?;
            compare(&mut vars, &[gx], |v| Ok(project(&r, &nn::global_avg_pool(&v[0])?.0)))
        }
        LayerCase::Concat => {
            let mut vars = vec![rand_tensor(&mut rng, &[c]), rand_tensor(&mut rng, &[f]), rand_tensor(&mut rng, &[h])];
            let r = rand_tensor(&mut rng, &[c + f + h]);
            let (_, cache) = nn::concat(&[&vars[0], &vars[1], &vars[2]], 0)?;
            let grads = nn::concat_grad(&cache, &r)?;
            compare(&mut vars, &grads, |v| Ok(project(&r, &nn::concat(&[&v[0], &v[1], &v[2]], 0)?.0)))
        }
        LayerCase::SoftmaxCrossEntropy => {
            let gold = rng.gen_range(0..3);
            let mut vars = vec![uniform(&mut rng, &[3], 3.0)];
            let (_, probs) = nn::softmax_xent(&vars[0], gold)?;
            let g = nn::softmax_xent_grad(&probs, gold)?;
            compare(&mut vars, &[g], |v| Ok(nn::softmax_xent(&v[0], gold)?.0))
        }
        LayerCase::LstmFinal | LayerCase::LstmSequence => {
            let seq = case == LayerCase::LstmSequence;
            let mut vars: Vec<Tensor<f64>> = lstm_vars(&mut rng, c, h).into();
            vars.push(rand_tensor(&mut rng, &[t, c]));
            let r = if seq { rand_tensor(&mut rng, &[t, h]) } else { rand_tensor(&mut rng, &[h]) };
            let params = lstm_from(&vars);
            let (_, cache) = nn::lstm_forward(&params, &vars[3], seq)?;
            let mut g = params.zeros_like();
            let gx = nn::lstm_grad(&params, &cache, &r, &mut g)?;
            compare(&mut vars, &[g.w_input, g.w_recurrent, g.bias, gx], |v| {
                Ok(project(&r, &nn::lstm_forward(&lstm_from(v), &v[3], seq)?.0))
            })
        }
        LayerCase::BiLstm => {
            let mut vars: Vec<Tensor<f64>> = lstm_vars(&mut rng, c, h).into();
            vars.extend(lstm_vars(&mut rng, c, h));
            vars.push(rand_tensor(&mut rng, &[t, c]));
            let r = rand_tensor(&mut rng, &[t, 2 * h]);
            let (fwd, bwd) = (lstm_from(&vars[..3]), lstm_from(&vars[3..6]));
            let (_, cache) = nn::bilstm_forward(&fwd, &bwd, &vars[6])?;
            let (mut gf, mut gb) = (fwd.zeros_like(), bwd.zeros_like());
            let gx = nn::bilstm_grad(&fwd, &bwd, &cache, &r, &mut gf, &mut gb)?;
            let analytic = [gf.w_input, gf.w_recurrent, gf.bias, gb.w_input, gb.w_recurrent, gb.bias, gx];
            compare(&mut vars, &analytic, |v| {
                Ok(project(&r, &nn::bilstm_forward(&lstm_from(&v[..3]), &lstm_from(&v[3..6]), &v[6])?.0))
            })
        }
    }
}

/// Compares the mean-loss gradient for every parameter of a freshly built
/// model on a random labeled batch.
pub fn check_architecture(arch: ArchId, config: ModelConfig, batch_size: usize, seed: u64) -> Result<GradCheck> {
    let model = Model::<f64>::build(arch, config, seed)?;
    let mut rng = rng_from_seed(seed ^ 0x9e37_79b9_7f4a_7c15);
    let batch: Vec<Vec<usize>> =
        (0..batch_size).map(|_| (0..config.seq_len).map(|_| rng.gen_range(0..config.vocab_size)).collect()).collect();
    let gold: Vec<Sentiment> = (0..batch_size).map(|_| Sentiment::ALL[rng.gen_range(0..3)]).collect();
    let refs: Vec<&[usize]> = batch.iter().map(Vec::as_slice).collect();

    let mut grads = model.zeros_like();
    model.accumulate_gradients(&refs, &gold, &mut grads)?;
    let analytic: Vec<Tensor<f64>> = grads.parameters().into_iter().map(|(_, t)| t.clone()).collect();
    let mut vars: Vec<Tensor<f64>> = model.parameters().into_iter().map(|(_, t)| t.clone()).collect();

    let mut probe = model.clone();
    let probe = std::cell::RefCell::new(&mut probe);
    compare(&mut vars, &analytic, |v| {
        let mut m = probe.borrow_mut();
        for (dst, src) in m.parameters_mut().into_iter().zip(v) {
            dst.data_mut().copy_from_slice(src.data());
        }
        m.mean_loss(&refs, &gold)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!(relative_error(1e-9, 2e-9) < 1e-2);
        assert!((relative_error(1.0, 1.1) - 0.1 / 1.1).abs() < 1e-15);
    }

    #[test]
    fn every_layer_once() {
        for case in LayerCase::ALL {
            let report = check_layer(case, 1).unwrap();
            assert!(report.max_error < 1e-4, "{}: {report:?}", case.name());
            assert!(report.compared > 0);
        }
    }
}
