use std::fmt;

use crate::lp::InfeasibleClass;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline stage an error originated from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Corpus,
    Embedding,
    Clustering,
    Strength,
    Lp,
    Map,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Corpus => "corpus",
            Stage::Embedding => "embedding",
            Stage::Clustering => "clustering",
            Stage::Strength => "strength",
            Stage::Lp => "lp",
            Stage::Map => "map",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("corrupt source: {malformed} of {total} lines malformed")]
    CorruptSource { malformed: usize, total: usize },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("unknown community `{0}`")]
    UnknownCommunity(String),
    #[error("empty filtered corpus")]
    EmptyFilteredCorpus,
    #[error("invalid window: start {start} is after end {end}")]
    InvalidWindow { start: i64, end: i64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("inconsistent dimension: expected {expected}, found {found}")]
    InconsistentDimension { expected: usize, found: usize },
    #[error("degenerate embedding for `{0}`")]
    DegenerateEmbedding(String),
    #[error("unembedded event(s): {}", .0.join(", "))]
    UnembeddedEvents(Vec<String>),

    #[error("invalid cluster count {requested} for {events} events")]
    InvalidClusterCount { requested: usize, events: usize },
    #[error("invalid cluster index {index} (num_clusters = {num_clusters})")]
    InvalidClusterIndex { index: usize, num_clusters: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("unclustered event `{0}`")]
    UnclusteredEvent(String),

    #[error("unscored event `{0}`")]
    UnscoredEvent(String),
    #[error("insufficient events: need at least 2, found {0}")]
    InsufficientEvents(usize),

    #[error("invalid K = {0}: must be at least 2")]
    InvalidK(usize),
    #[error("{0} constraint infeasible")]
    Infeasible(InfeasibleClass),
    #[error("solver inconsistency: {constraint} violated by {violation:e}")]
    SolverInconsistency { constraint: String, violation: f64 },
    #[error("solver failure: {0}")]
    Solver(String),

    #[error("empty map at tau = {tau}; try a lower tau")]
    EmptyMap { tau: f64 },
    #[error("no main route between start and end")]
    NoMainRoute,
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("foreign map: event `{0}` is not part of the planted corpus")]
    ForeignMap(String),

    #[error("{name} out of range: {value}")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("{stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn at(self, stage: Stage) -> Self {
        match self {
            already @ Error::Stage { .. } => already,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// The innermost error, with stage labels peeled off.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
