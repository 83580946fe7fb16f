//! Softmax-regression learner, dataset handling and federated rounds.

mod data;
mod idx;
mod model;
mod round;

pub use data::{gaussian_blobs, shard_dataset, BlobSpec, Dataset, Shard};
pub use idx::{idx_dataset, parse_idx_images, parse_idx_labels, read_idx_images, read_idx_labels, IdxImages};
pub use model::{evaluate, local_gradient, smoothness_bound, softmax_grad, softmax_loss, LrModel};
pub use round::{run_round, CellMetrics, DlScheme, FlState, RoundRecord, Scheme, UlScheme, World};
