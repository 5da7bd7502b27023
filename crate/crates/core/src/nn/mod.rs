//! A small tanh MLP with hand-written reverse-mode gradients, a two-blob toy
//! dataset, PGD evaluation attacks, and adversarial-training loops.

mod attack;
mod data;
mod format;
mod mlp;
mod train;

pub use attack::{evaluate, pgd_attack, AttackConfig, EvalReport};
pub use data::ToyDataset;
pub use format::{load_params, read_params, save_params, write_params, MAGIC};
pub use mlp::{loss_and_grads, predict, LossGrads, MlpParams, MlpShape};
pub use train::{at_train, EpochRecord, TrainConfig, TrainMethod, TrainOutcome};
