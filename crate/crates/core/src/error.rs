use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CotaError {
    #[error("cycle detected through variables: {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),
    #[error("variable `{child}` lists unknown parent `{parent}`")]
    UnknownParent { child: String, parent: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("value `{value}` is not in the domain of `{variable}`")]
    ValueOutOfDomain { variable: String, value: String },
    #[error("joint domain has {size} states, above the enumeration cap of {cap}")]
    DomainTooLarge { size: u128, cap: usize },
    #[error("poset has {size} interventions, above the cap of {cap}")]
    PosetTooLarge { size: usize, cap: usize },
    #[error("omega is not defined for base intervention #{0}")]
    NotTotal(usize),
    #[error("abstracted intervention #{0} has no preimage under omega")]
    NotSurjective(usize),
    #[error("omega breaks the order between base interventions #{0} and #{1}")]
    NotOrderPreserving(usize, usize),
    #[error("interventions #{0} and #{1} are not comparable")]
    NotComparable(usize, usize),
    #[error("sample #{0} lies outside the declared domain")]
    SampleOutOfDomain(usize),
    #[error("invalid alignment: {0}")]
    InvalidAlignment(String),
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch { expected: (usize, usize), got: (usize, usize) },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty vector")]
    EmptyVector,
    #[error("empty list")]
    EmptyList,
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
    #[error("marginal has zero total mass")]
    ZeroMassMarginal,
    #[error("problem too large for the exact solver ({0} cells)")]
    SizeExceeded(usize),
    #[error("need at least two intervention pairs, got {0}")]
    InsufficientPairs(usize),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("class `{0}` has no rows")]
    EmptyClass(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("file is empty: {0}")]
    EmptyFile(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CotaError {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        use CotaError::*;
        match self {
            CycleDetected(_) => "CycleDetected",
            UnknownParent { .. } => "UnknownParent",
            UnknownVariable(_) => "UnknownVariable",
            ValueOutOfDomain { .. } => "ValueOutOfDomain",
            DomainTooLarge { .. } => "DomainTooLarge",
            PosetTooLarge { .. } => "PosetTooLarge",
            NotTotal(_) => "NotTotal",
            NotSurjective(_) => "NotSurjective",
            NotOrderPreserving(..) => "NotOrderPreserving",
            NotComparable(..) => "NotComparable",
            SampleOutOfDomain(_) => "SampleOutOfDomain",
            InvalidAlignment(_) => "InvalidAlignment",
            ShapeMismatch { .. } => "ShapeMismatch",
            LengthMismatch(..) => "LengthMismatch",
            EmptyVector => "EmptyVector",
            EmptyList => "EmptyList",
            DomainMismatch(_) => "DomainMismatch",
            NoConvergence(_) => "NoConvergence",
            ZeroMassMarginal => "ZeroMassMarginal",
            SizeExceeded(_) => "SizeExceeded",
            InsufficientPairs(_) => "InsufficientPairs",
            InvalidWeights(_) => "InvalidWeights",
            InvalidModel(_) => "InvalidModel",
            MissingColumn(_) => "MissingColumn",
            EmptyClass(_) => "EmptyClass",
            SchemaMismatch(_) => "SchemaMismatch",
            EmptyFile(_) => "EmptyFile",
            InvalidConfig(_) => "InvalidConfig",
            Io(_) => "Io",
        }
    }

    pub fn is_validation(&self) -> bool {
        use CotaError::*;
        matches!(
            self,
            CycleDetected(_)
                | UnknownParent { .. }
                | UnknownVariable(_)
                | ValueOutOfDomain { .. }
                | NotTotal(_)
                | NotSurjective(_)
                | NotOrderPreserving(..)
                | InvalidModel(_)
                | InvalidAlignment(_)
                | InvalidWeights(_)
                | InvalidConfig(_)
                | SchemaMismatch(_)
                | MissingColumn(_)
                | SampleOutOfDomain(_)
        )
    }
}

impl From<std::io::Error> for CotaError {
    fn from(e: std::io::Error) -> Self {
        CotaError::Io(e.to_string())
    }
}

impl From<csv::Error> for CotaError {
    fn from(e: csv::Error) -> Self {
        CotaError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CotaError {
    fn from(e: serde_json::Error) -> Self {
        CotaError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CotaError>;
