//! Contrastive fine-tuning of a linear projection head with a multiple
//! negatives ranking loss.
//!
//! Each positive pair `(src_i, tgt_i)` is contrasted against the targets in a
//! window around `i` plus a few random targets. The base embeddings stay
//! frozen; only the projection `W` is learned, and both sides share it.

mod loss;
mod model;
mod negatives;
mod train;

pub use loss::{batch_loss, batch_loss_and_gradient, log_sum_exp, mnr_loss};
pub use model::{
    decode_checkpoint, encode_checkpoint, forward_project, load_checkpoint, save_checkpoint,
    ProjectionModel, CHECKPOINT_MAGIC, MIN_PROJECTED_NORM,
};
pub use negatives::{
    build_negative_sets, build_negative_sets_for_epoch, ContrastiveBatch, ContrastiveItem,
    TrainConfig,
};
pub use train::{format_loss_trace, train_projection, write_loss_trace, TrainOutcome};
