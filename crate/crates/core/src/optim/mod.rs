//! Training engine: Adam, SGDR schedule, LR range test, staged fine-tuning,
//! early stopping and the epoch loop.

mod adam;
mod early_stop;
mod finetune;
mod range_test;
mod schedule;
mod train;

pub use adam::{adam_step, adam_step_masked, AdamConfig, AdamState};
pub use early_stop::{early_stop_update, EarlyStop, EarlyStopState, DEFAULT_MIN_DELTA};
pub use finetune::{
    make_finetune_plan, FineTunePlan, Stage, DEFAULT_HEAD_EPOCHS, DEFAULT_STAGES, DEFAULT_STAGE_EPOCHS,
};
pub use range_test::{lr_range_test, lr_sequence, range_test_with, RangePoint, RangeTest};
pub use schedule::{sgdr_lr, sgdr_position, CyclePosition, ScheduleConfig};
pub use train::{argmax, evaluate, frozen_layers, train, train_step, EpochRecord, TrainConfig, TrainHistory};

use crate::data::DataError;
use crate::nn::NnError;

#[derive(Debug, thiserror::Error)]
pub enum OptimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite gradient for {layer}/{param}")]
    NonFiniteGradient { layer: String, param: String },
    #[error("loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("range test loss diverged from the first step; try a lower start_lr than {start_lr}")]
    RangeTestDiverged { start_lr: f64 },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
