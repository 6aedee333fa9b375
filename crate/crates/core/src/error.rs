use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failures reported by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its admissible range.
    InvalidParameter { name: &'static str, reason: &'static str },
    /// An iterate left the finite reals.
    NonFiniteState { step: usize },
    /// An iterate of one trajectory of an ensemble left the finite reals.
    NonFiniteTrajectory { trajectory: u64, step: usize },
    /// The action lies too close to a low-order resonance `p/q`.
    ResonantInput { r: f64, p: i64, q: i64 },
    /// A root-nondegeneracy margin fell inside the tolerance band.
    IllConditioned { what: &'static str, margin: f64 },
    /// More than one rational witness for an imaginary-rational strip.
    AmbiguousClass { first: (i64, i64), second: (i64, i64) },
    /// The rotation number is within `eps^nu` of a rational with small denominator.
    NotTiAdmissible { p: i64, q: i64 },
    /// The variance drops below the positivity threshold.
    DegenerateVariance { r: f64, sigma2: f64 },
    /// Not enough samples for the requested statistic.
    InsufficientSamples { got: usize, need: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, reason } => write!(f, "invalid parameter `{name}`: {reason}"),
            Error::NonFiniteState { step } => write!(f, "non-finite state at step {step}"),
            Error::NonFiniteTrajectory { trajectory, step } => {
                write!(f, "trajectory {trajectory}: non-finite state at step {step}")
            }
            Error::ResonantInput { r, p, q } => {
                write!(f, "r = {r} lies in the resonant zone of {p}/{q}")
            }
            Error::IllConditioned { what, margin } => {
                write!(f, "ill-conditioned {what}: margin {margin:e} inside the tolerance band")
            }
            Error::AmbiguousClass { first, second } => write!(
                f,
                "strip has two rational witnesses {}/{} and {}/{}",
                first.0, first.1, second.0, second.1
            ),
            Error::NotTiAdmissible { p, q } => {
                write!(f, "rotation number is too close to {p}/{q}")
            }
            Error::DegenerateVariance { r, sigma2 } => {
                write!(f, "variance {sigma2:e} at r = {r} is below the positivity threshold")
            }
            Error::InsufficientSamples { got, need } => {
                write!(f, "{got} samples given, at least {need} required")
            }
        }
    }
}

impl core::error::Error for Error {}
