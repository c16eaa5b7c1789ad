//! Objective metrics and the subjective listening-study machinery: session
//! plans, rating storage, MOS tables and paired t-tests.

mod metrics;
mod mos;
mod ratings;
mod session;
mod ttest;

pub use metrics::{accuracy, accuracy_by_name, parse_label_lines, ConfusionMatrix};
pub use mos::{mos, per_subject_means, study_report, study_t_tests, Column, MosCell, MosReport, MosRow, StudyReport, StudyTest};
pub use ratings::{
    parse_rating_line, parse_ratings, PutOutcome, RatingKey, RatingRecord, RatingStore, RATING_MAX, RATING_MIN,
};
pub use session::{
    build_session, check_session, ClipSlot, Condition, PoolImage, SessionItem, SessionPlan, SessionView, ViewItem,
    CLIPS_PER_IMAGE, MIN_POOL_PER_CELL, PER_CELL, SESSION_IMAGES, SESSION_SLOTS,
};
pub use ttest::{beta_reg, ln_gamma, paired_t_test, student_t_two_tailed, TTestResult, DEFAULT_ALPHA};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("unknown class {0}")]
    UnknownClass(String),
    #[error("a paired t-test needs at least 2 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("rating {0} outside 1..5")]
    RatingOutOfRange(i64),
    #[error("image pool: {0}")]
    Pool(String),
    #[error("session plan: {0}")]
    Session(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
