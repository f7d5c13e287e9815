use thiserror::Error;

/// Errors raised by tree construction, elicitation, fitting and inference.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed document: {0}")]
    Format(String),

    #[error("duplicate event id `{0}`")]
    DuplicateId(String),
    #[error("event `{event}` lists unknown input `{input}`")]
    UnknownInput { event: String, input: String },
    #[error("unknown event id `{0}`")]
    UnknownEvent(String),
    #[error("top event `{0}` is not defined")]
    MissingTop(String),
    #[error("cycle detected through event `{0}`")]
    Cycle(String),
    #[error("gate `{event}` has {count} input(s); at least 2 are required")]
    GateArity { event: String, count: usize },
    #[error("event `{0}` lists inputs but has no gate")]
    PrimaryWithInputs(String),
    #[error("event `{event}` has unsupported gate `{gate}` (only AND and OR are allowed)")]
    UnsupportedGate { event: String, gate: String },
    #[error("event `{0}` feeds a gate but is the top event")]
    TopHasOutput(String),
    #[error("event `{0}` is neither the top event nor an input of any gate")]
    Dangling(String),
    #[error("event `{0}` is not a primary event")]
    NotPrimary(String),
    #[error("event `{0}` is a primary event")]
    IsPrimary(String),
    #[error("operation requires a pure tree, but the fault tree has shared causes")]
    NotPureTree,
    #[error("operation requires an OR-only tree, but gate `{0}` is AND")]
    AndGatePresent(String),

    #[error("comparison of `{0}` with itself")]
    SelfComparison(String),
    #[error("conflicting comparisons between `{from}` and `{to}`")]
    ConflictingComparison { from: String, to: String },
    #[error("event `{0}` has no recorded comparisons")]
    Disconnected(String),
    #[error("event `{event}` is not compared with the cornerstone `{cornerstone}`")]
    MissingCornerstoneComparison { event: String, cornerstone: String },
    #[error("cornerstone `{0}` is not in its group")]
    CornerstoneNotInGroup(String),
    #[error("invalid probability interval ({lower}, {upper})")]
    InvalidInterval { lower: f64, upper: f64 },
    #[error("primary event `{0}` is covered by more than one group")]
    OverlappingGroups(String),
    #[error("primary event `{0}` is not covered by any group")]
    UncoveredPrimary(String),
    #[error("scaled lower bound {lower} for `{event}` is not below 1")]
    NearCertain { event: String, lower: f64 },

    #[error("invalid beta parameters ({a}, {b})")]
    InvalidBeta { a: f64, b: f64 },
    #[error("interval ({lower}, {upper}) is too narrow to fit")]
    DegenerateInterval { lower: f64, upper: f64 },
    #[error("beta fit did not converge; quantile residuals ({0:e}, {1:e})")]
    FitNonConvergence(f64, f64),

    #[error("observation contradicts the tree logic at event `{0}`")]
    Contradiction(String),
    #[error("observation row {row}: {cause}")]
    ObservationRow { row: usize, cause: Box<Error> },
    #[error("{count} unobserved primary events exceed the enumeration limit of {limit}; use the tree likelihood")]
    EnumerationLimit { count: usize, limit: usize },

    #[error("prior does not cover primary event `{0}`")]
    MissingPrior(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("all importance weights are zero; the data are impossible under every prior draw")]
    AllWeightsZero,
    #[error("no initial state with finite posterior density after {0} prior draws")]
    NoValidStart(usize),
    #[error("summary needs at least {needed} draws, got {got}")]
    TooFewDraws { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Format(err.to_string())
    }
}
