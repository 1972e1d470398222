use crate::index::MultiIndex;

/// Errors raised by the core routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension {0} is not supported here")]
    InvalidDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("multiplier {component} is a root of unity of order {order}")]
    RootOfUnity { component: usize, order: u32 },
    #[error("extra resonance: exponent {exponent} against component {component}")]
    ExtraResonance { exponent: MultiIndex, component: usize },
    #[error("multiplier product is not 1 (angle sum {0} is not an integer)")]
    ProductNotOne(f64),
    #[error("tail term {exponent} has degree {degree} below the admissible order {min}")]
    TailTooLow {
        exponent: MultiIndex,
        degree: usize,
        min: usize,
    },
    #[error("series has a nonzero constant term")]
    NonzeroConstant,
    #[error("linear part is singular")]
    SingularLinearPart,
    #[error("divisor below threshold at exponent {exponent}, component {component}")]
    ZeroDivisor { exponent: MultiIndex, component: usize },
    #[error("exponent sets overlap at {0}")]
    OverlappingSets(MultiIndex),
    #[error("condition ({condition}) fails at {witness} (stage {stage:?})")]
    ConditionViolated {
        condition: u8,
        witness: MultiIndex,
        stage: Option<usize>,
    },
    #[error("resonant coefficient {exponent} (component {component}) differs from the normal form")]
    ResonantTail { exponent: MultiIndex, component: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("no R0 up to {0} passed the invariance check")]
    SearchExhausted(f64),
    #[error("domination annulus is empty")]
    EmptyAnnulus,
    #[error("point is not in the certified basin")]
    NotInBasin,
    #[error("no convergence after {0} iterates")]
    NoConvergence(usize),
    #[error("orbit did not enter the basin within {0} iterates")]
    NeverEntersBasin(usize),
    #[error("orbit data does not cover the requested window")]
    WindowOutOfRange,
    #[error("{p} does not divide {k}")]
    NotADivisor { p: usize, k: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
