use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("duplicate task id {0}")]
    DuplicateTaskId(u32),

    #[error("task {0} has non-positive processing time")]
    NonPositiveProcTime(u32),

    /// A zero-slack task was assigned with a positive wait (0/0 delay term).
    #[error("infeasible-term: task {task_id} has zero slack but waits {waiting} slots")]
    InfeasibleTerm { task_id: u32, waiting: i64 },

    #[error("schedule does not match task set: {0}")]
    ScheduleMismatch(String),

    #[error("invalid schedule: {count} violation(s), first: {first}")]
    InvalidSchedule { count: usize, first: String },

    #[error("insufficient-samples: need at least 2, got {0}")]
    InsufficientSamples(usize),

    #[error("time horizon overflow: {0} slots exceeds 2^53")]
    HorizonOverflow(u64),

    #[error("time {value_us} us of task {task_id} is not a multiple of the {slot_us} us slot")]
    NonDivisibleTime { task_id: u32, value_us: u64, slot_us: u64 },

    #[error("chromosome length {got} does not match instance (expected {expected})")]
    ChromosomeLength { expected: usize, got: usize },
}
