use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("unknown intervention target `{0}`")]
    UnknownTarget(String),
    #[error("invalid intervention: {0}")]
    InvalidIntervention(String),
    #[error("model is invalid: {0}")]
    InvalidModel(String),
    #[error("table too large: {cells} cells exceeds cap {cap}")]
    TableTooLarge { cells: u128, cap: u128 },
    #[error("positivity violation at {0}")]
    Positivity(String),
    #[error("model lacks required structure: {0}")]
    MissingStructure(String),
    #[error("{effect} is not identified under {class}: {reason}")]
    NotIdentified {
        effect: String,
        class: String,
        reason: String,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("constraints infeasible within budget: {0}")]
    Infeasible(String),
    #[error("unknown graph node `{0}`")]
    UnknownNode(String),
    #[error("node sets overlap at `{0}`")]
    OverlappingSets(String),
    #[error("graph is not acyclic")]
    Cyclic,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("value `{value}` outside support of column `{column}`")]
    OutOfSupport { column: String, value: String },
    #[error("bootstrap unstable under positivity gaps: {dropped} of {total} replicates dropped")]
    BootstrapUnstable { dropped: usize, total: usize },
    #[error("inconsistent answers: {0}")]
    InconsistentAnswers(String),
}
