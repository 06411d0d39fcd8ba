//! Stacked MTGRU encoder-decoder: model, bucketing, training and
//! checkpoints.

mod bucket;
mod checkpoint;
mod gradcheck;
mod model;
mod optim;
mod schedule;
mod train;

pub use bucket::{assign_bucket, format_buckets, parse_buckets, validate_buckets, Bucket, DEFAULT_BUCKETS};
pub use checkpoint::{Checkpoint, HEADER as CHECKPOINT_HEADER};
pub use gradcheck::model_finite_diff_check;
pub use model::{decoder_target, DecodeOutcome, ModelDims, Params, Seq2SeqModel, EOS, GO, NUM_SPECIAL, PAD, UNK};
pub use optim::{clip_global_norm, Optimizer, OptimizerKind};
pub use schedule::{TimescaleSchedule, PRESETS};
pub use train::{
    batch_gradients, batch_loss, fit, mean_loss, perplexity, train_step, Batch, BucketedData, Example, FitReport,
    LogRow, TrainConfig, TrainState,
};
