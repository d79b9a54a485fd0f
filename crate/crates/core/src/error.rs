use thiserror::Error;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The grammar or a declaration in it is malformed or unsupported.
    Spec,
    /// A numeric routine failed or the request has no answer.
    Numeric,
    /// A table would exceed the configured memory budget.
    Resource,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: class `{name}` is defined more than once")]
    DuplicateClass {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("axiom `{0}` is not defined by any rule")]
    UndeclaredAxiom(String),
    #[error("{line}:{column}: `{name}` is not an atom of the grammar")]
    NotAnAtom {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("class `{0}` generates no structure of any size")]
    UnproductiveClass(String),
    #[error("size-preserving cycle through classes {}", .0.join(" -> "))]
    EpsilonCycle(Vec<String>),
    #[error("class `{0}` is not in standard form")]
    NotStandard(String),
    #[error("not right-linear: {0}")]
    NotRegular(String),
    #[error("specification uses pointing constructs")]
    NotContextFree,
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("invalid weight for `{atom}`: {reason}")]
    InvalidWeight { atom: String, reason: String },
    #[error("class `{class}` has no structure of size {n}")]
    EmptyClassAtSize { class: String, n: usize },
    #[error("size {n} exceeds table limit {n_max}")]
    SizeOutOfRange { n: usize, n_max: usize },
    #[error("observed frequency of `{0}` is zero")]
    ZeroObservedFrequency(String),
    #[error("targets look unreachable: objective stalled at {objective:.3e}")]
    InfeasibleTarget { objective: f64 },
    #[error("argument out of domain: {0}")]
    DomainError(String),
    #[error("periodic specification: cycle gcd {gcd} in a strongly connected component")]
    PeriodicSpec { gcd: u64 },
    #[error("no positive root of the transfer determinant was found")]
    NoRootInRange,
    #[error("derivative of the transfer determinant vanishes at the dominant root")]
    DegenerateDerivative,
    #[error("no weights found for the asymptotic targets (best residual {residual:.3e})")]
    NoSolutionFound { residual: f64 },
    #[error("no structure matches the requested occurrence vector")]
    EmptyFiber,
    #[error("table needs about {needed} bytes, budget is {budget}")]
    ResourceBudget { needed: u128, budget: u128 },
    #[error("table cache: {0}")]
    Cache(String),
}

impl Error {
    /// Stable identifier for machine-readable error lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "SyntaxError",
            Error::DuplicateClass { .. } => "DuplicateClass",
            Error::UndeclaredAxiom(_) => "UndeclaredAxiom",
            Error::NotAnAtom { .. } => "NotAnAtom",
            Error::UnproductiveClass(_) => "UnproductiveClass",
            Error::EpsilonCycle(_) => "EpsilonCycle",
            Error::NotStandard(_) => "NotStandard",
            Error::NotRegular(_) => "NotRegular",
            Error::NotContextFree => "NotContextFree",
            Error::UnknownClass(_) => "UnknownClass",
            Error::UnknownAtom(_) => "UnknownAtom",
            Error::InvalidWeight { .. } => "InvalidWeight",
            Error::EmptyClassAtSize { .. } => "EmptyClassAtSize",
            Error::SizeOutOfRange { .. } => "SizeOutOfRange",
            Error::ZeroObservedFrequency(_) => "ZeroObservedFrequency",
            Error::InfeasibleTarget { .. } => "InfeasibleTarget",
            Error::DomainError(_) => "DomainError",
            Error::PeriodicSpec { .. } => "PeriodicSpec",
            Error::NoRootInRange => "NoRootInRange",
            Error::DegenerateDerivative => "DegenerateDerivative",
            Error::NoSolutionFound { .. } => "NoSolutionFound",
            Error::EmptyFiber => "EmptyFiber",
            Error::ResourceBudget { .. } => "ResourceBudget",
            Error::Cache(_) => "CacheError",
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Syntax { .. }
            | Error::DuplicateClass { .. }
            | Error::UndeclaredAxiom(_)
            | Error::NotAnAtom { .. }
            | Error::UnproductiveClass(_)
            | Error::EpsilonCycle(_)
            | Error::NotStandard(_)
            | Error::NotRegular(_)
            | Error::NotContextFree
            | Error::UnknownClass(_)
            | Error::UnknownAtom(_)
            | Error::InvalidWeight { .. }
            | Error::PeriodicSpec { .. }
            | Error::Cache(_) => ErrorKind::Spec,
            Error::ResourceBudget { .. } => ErrorKind::Resource,
            _ => ErrorKind::Numeric,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
