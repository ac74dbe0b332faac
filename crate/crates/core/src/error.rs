use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty cohort")]
    EmptyCohort,
    #[error("empty risk set")]
    EmptyRiskSet,
    #[error("invalid probability: {0}")]
    InvalidProbability(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("covariate arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("missing covariate value for subject {subject} in column '{covariate}'")]
    MissingCovariate { subject: usize, covariate: String },
    #[error("collinear case mix")]
    CollinearCaseMix,
    #[error("stratum '{0}' has no events")]
    StratumWithoutEvents(String),
    #[error("unknown stratum '{0}'")]
    UnknownStratum(String),
    #[error("pooled model required for the event probability")]
    PooledModelRequired,
    #[error("stratified model required for the follow-up probability")]
    StratifiedModelRequired,
    #[error("covariate '{0}' is missing for all favorable-outcome patients")]
    ImputationImpossible(String),
    #[error("Kaplan-Meier estimate undefined at horizon {0}: no subjects at risk")]
    UndefinedAtHorizon(f64),
    #[error("singular design matrix")]
    SingularDesign,
    #[error("zero-width prediction interval")]
    ZeroWidthInterval,
    #[error("shape unsolvable at this rate")]
    ShapeUnsolvable,
    #[error("no non-degenerate center summaries")]
    AllDegenerate,
    #[error("too many failed replicates: {dropped} of {total}")]
    TooManyDroppedReplicates { dropped: usize, total: usize },
    #[error("invalid scenario config: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
