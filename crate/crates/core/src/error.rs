use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty-state: the state has no nonzero amplitude")]
    EmptyState,
    #[error("subsystem-collision: subsystem `{0}` is declared twice")]
    SubsystemCollision(String),
    #[error("unknown-subsystem: `{0}`")]
    UnknownSubsystem(String),
    #[error("unknown-label: `{label}` is not in the alphabet of `{subsystem}`")]
    UnknownLabel { subsystem: String, label: String },
    #[error("impossible-outcome: `{subsystem}` = `{outcome}` has zero probability")]
    ImpossibleOutcome { subsystem: String, outcome: String },
    #[error("invalid-space: {0}")]
    InvalidSpace(String),
    #[error("not-normalized: squared norm {0} is outside tolerance")]
    NotNormalized(f64),
    #[error("wrong-space: {0}")]
    WrongSpace(String),
    #[error("singular-propagation: source and target coincide")]
    SingularPropagation,
    #[error("invalid-geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid-convention: {0}")]
    InvalidConvention(String),
    #[error("bad-config: {0}")]
    BadConfig(String),
    #[error("already-resolved: observer `{observer}` already resolved `{key}`")]
    AlreadyResolved { observer: String, key: String },
    #[error("no-record: observer `{observer}` never observed `{subsystem}`")]
    NoRecord { observer: String, subsystem: String },
    #[error("unknown-observer: `{0}`")]
    UnknownObserver(String),
    #[error("not-applicable: {0}")]
    NotApplicable(String),
    #[error("underdetermined-fit: {0}")]
    UnderdeterminedFit(String),
    #[error("non-commuting: events share subsystem `{0}`")]
    NonCommuting(String),
}
