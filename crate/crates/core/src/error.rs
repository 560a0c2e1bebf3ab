use crate::detection::Label;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("mode index {index} out of range for {modes} modes")]
    ModeOutOfRange { index: usize, modes: usize },
    #[error("a beam splitter needs two distinct modes, got mode {0} twice")]
    SameMode(usize),
    #[error("{name} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("transform acts on {transform} modes but the state has {state}")]
    DimensionMismatch { transform: usize, state: usize },
    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),
    #[error("invalid state: {0}")]
    InvalidState(&'static str),
    #[error("weights ({x0}, {x1}, {x2}) are not a point of the probability simplex")]
    InvalidWeights { x0: f64, x1: f64, x2: f64 },
    #[error("zero transmission: the Fisher information vanishes identically")]
    ZeroTransmission,
    #[error("target weights cannot be produced by the preparation network: {0}")]
    Unreachable(&'static str),
    #[error("expected a two-photon probe, found a component with {0} photons")]
    PhotonNumber(u32),
    #[error("Fisher information diverges: label {0} has vanishing probability but non-zero slope")]
    DivergentFisher(Label),
    #[error("distribution does not sum to one (sum {0})")]
    UnnormalizedDistribution(f64),
    #[error("no coincidences to estimate from")]
    EmptyCounts,
    #[error("likelihood is flat over the search interval")]
    DegenerateLikelihood,
    #[error("need at least two estimates per group, found {0}")]
    TooFewEstimates(usize),
    #[error("empty input")]
    EmptyInput,
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            lo: 0.0,
            hi: 1.0,
        })
    }
}
