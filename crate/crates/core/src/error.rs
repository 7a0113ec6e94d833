use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sphere dimension n = {0} is not supported (need n >= 2)")]
    Dimension(i64),

    #[error("argument t = {0} lies outside [-1, 1]")]
    ArgumentOutOfRange(f64),

    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("{0} overflows the f64 range")]
    Overflow(String),

    #[error("scale rho = {rho:e} is below the numeric summation floor {floor:e}")]
    RhoBelowFloor { rho: f64, floor: f64 },

    #[error("series did not certify its tail within {budget} terms")]
    SummationBudget { budget: u64 },

    #[error("denominator |{value:e}| at q = {q} is too close to a pole")]
    PoleProximity { q: f64, value: f64 },

    #[error("denominator polynomial is identically zero")]
    ZeroDenominator,

    #[error("center of mass is zero: x-moment {moment:e} is within its error bound {bound:e}")]
    CenterOfMassZero { moment: f64, bound: f64 },

    #[error("coefficient sequence has zero norm")]
    ZeroNorm,

    #[error(
        "decay certificate fails at degree {degree}: |f({degree})| = {value:e} > bound {bound:e}"
    )]
    DecayCertificate { degree: u64, value: f64, bound: f64 },

    #[error("variance {value:e} is negative beyond rounding ({tolerance:e})")]
    NegativeVariance { value: f64, tolerance: f64 },

    #[error("adaptive quadrature did not converge within {budget} panels")]
    QuadratureBudget { budget: usize },

    #[error("bound violated at rho = {rho}: {detail}")]
    BoundViolation { rho: f64, detail: String },
}
