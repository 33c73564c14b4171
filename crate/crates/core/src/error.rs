use thiserror::Error;

/// Errors surfaced by the numerical kernels and state constructors.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum NcsError {
    /// A Laguerre denominator value came too close to zero for the ratio
    /// recurrence to be trusted.
    #[error("Laguerre value near zero at index {n}: ratio sequence unreliable")]
    PoleProximity { n: usize },

    /// The deformation h(n) is singular (or vanishes) at index `n`.
    #[error("deformation pole at n = {n}")]
    DeformationPole { n: usize },

    /// The deformation is not defined at this index (e.g. h_{N+1} below N+1).
    #[error("deformation undefined at n = {n}; smallest admissible index is {min}")]
    UndefinedIndex { n: usize, min: usize },

    /// A gamma-function argument hit a non-positive integer.
    #[error("gamma pole at argument {arg}")]
    GammaPole { arg: f64 },

    /// The hypergeometric series is formally divergent for these parameters.
    #[error("pFq series divergent: {numer} numerator vs {denom} denominator parameters at |x| = {x_abs}")]
    PfqDivergent { numer: usize, denom: usize, x_abs: f64 },

    /// A denominator parameter of a pFq series hits a non-positive integer
    /// before the series terminates.
    #[error("pFq denominator parameter {value} is a non-positive integer reached by the series")]
    PfqPoleParameter { value: f64 },

    /// A series failed to meet its tolerance within the term cap.
    #[error("series did not converge within {terms} terms")]
    NoConvergence { terms: usize },

    /// The asymptotic tangent form is evaluated too close to a pole of tan.
    #[error("asymptotic argument within guard distance of a tangent pole at n = {n}")]
    NearTangentPole { n: usize },

    /// A truncated expansion keeps growing through the truncation point.
    #[error("series divergent within the truncation window")]
    Divergent,

    /// A quantity left the representable floating-point range.
    #[error("magnitude overflow: log-magnitude {log_mag} exceeds floating range")]
    MagnitudeOverflow { log_mag: f64 },

    /// Mellin measure construction requires at least as many numerator roots
    /// as denominator roots.
    #[error("measure existence violated: A = {a_count} < B = {b_count}")]
    ExistenceViolated { a_count: usize, b_count: usize },

    /// More than two Mellin exponents coincide; the two-fold limit procedure
    /// does not apply.
    #[error("unresolved exponent degeneracy of multiplicity {multiplicity} at {value}")]
    UnresolvedDegeneracy { value: f64, multiplicity: usize },

    /// A rational-deformation root coincides with an integer in the working
    /// index range, so h vanishes or blows up there.
    #[error("rational root at evaluation point n = {n}")]
    RootAtEvaluationPoint { n: usize },

    /// Root finding produced a complex pair where real roots are required.
    #[error("polynomial has non-real roots; rational deformation requires real roots")]
    NonRealRoots,

    /// A required parameter was not supplied for the requested operator.
    #[error("missing parameter: {what}")]
    MissingParameter { what: &'static str },

    /// A density matrix input failed its trace/shape contract.
    #[error("invalid density matrix: {reason}")]
    InvalidDensity { reason: &'static str },

    /// Field boundary values are too large relative to the peak for the grid
    /// integral to be meaningful.
    #[error("field support exceeds grid: boundary magnitude {boundary} vs peak {peak}")]
    SupportExceedsGrid { boundary: f64, peak: f64 },

    /// A trend classification could not decide between summable and divergent.
    #[error("convergence trend inconclusive (slope {slope} within tolerance band)")]
    Inconclusive { slope: f64 },

    /// Catch-all for argument contract violations.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, NcsError>;
