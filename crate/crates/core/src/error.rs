use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("snapshot matrix is degenerate (no singular value survives truncation)")]
    DegenerateSnapshots,

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("duplicate channel name `{0}`")]
    DuplicateChannel(String),

    #[error("channel {index} (`{name}`) is not a candidate channel")]
    NotCandidate { index: usize, name: String },

    #[error("channel index {0} out of range")]
    ChannelOutOfRange(usize),

    #[error("realization {realization} has {steps} steps; at least {required} required")]
    TooShort {
        realization: usize,
        steps: usize,
        required: usize,
    },

    #[error("non-finite value in channel `{channel}` at step {step} of realization {realization}")]
    NonFinite {
        channel: String,
        realization: usize,
        step: usize,
    },

    #[error("search pool has {pool} variables; exhaustive sweep limit is {limit} (lower the cap or the pool)")]
    SearchTooLarge { pool: usize, limit: usize },

    #[error("continuous-time system matrix is not Hurwitz")]
    Unstable,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid dataset: {0}")]
    Dataset(String),
}
