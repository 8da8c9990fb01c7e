//! ReLU surrogate networks: representation and forward pass, dataset
//! generation, and projected-Adam training.

pub mod dataset;
pub mod network;
pub mod train;

pub use dataset::{
    make_dataset, DataError, Dataset, DEFAULT_BOUNDS, DEFAULT_DATASET_SIZE, FEASIBILITY_MARGIN,
};
pub use network::{NetError, NetKind, ReluNetwork};
pub use train::{fit, loss_and_grad, Gradients, TrainConfig, TrainError, TrainReport};
