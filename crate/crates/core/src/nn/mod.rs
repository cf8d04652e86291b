//! Dense tensors, layers with analytic gradients, and the optimizer.

pub mod gradcheck;
pub mod init;
pub mod lstm;
pub mod ops;
pub mod optim;
mod tensor;

pub use lstm::{bilstm_forward, bilstm_grad, lstm_forward, lstm_grad, BiLstmCache, LstmCache, LstmParams};
pub use ops::{
    concat, concat_grad, conv1d_forward, conv1d_grad, dense_forward, dense_grad, embedding_forward, embedding_grad,
    global_avg_pool, global_avg_pool_grad, global_max_pool, global_max_pool_grad, softmax, softmax_xent,
    softmax_xent_grad, Activation,
};
pub use optim::{optimizer_step, AdamConfig, AdamState};
pub use tensor::Tensor;
