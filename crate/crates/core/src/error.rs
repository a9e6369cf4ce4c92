use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("below threshold: |v1-v2|^2 = {rel_speed_sq} < 4*eps0 = {threshold}")]
    BelowThreshold { rel_speed_sq: f64, threshold: f64 },

    #[error("argument outside the reachable cone: a={a}, b={b}, c={c}")]
    DomainError { a: f64, b: f64, c: f64 },

    #[error("kernel evaluated at its singular point x = 0")]
    SingularPoint,

    #[error("singular denominator in {which} at T1={t1}, T2={t2} (value {value:e})")]
    SingularDenominator { which: &'static str, t1: f64, t2: f64, value: f64 },

    #[error("level {level} intersects no grid cell")]
    EmptyLevel { level: f64 },

    #[error("kernel norm {norm} >= 1: no contraction")]
    NonContraction { norm: f64 },

    #[error("fixed-point iteration did not converge in {iterations} sweeps (last update {last_update:e})")]
    NotConverged { iterations: usize, last_update: f64 },

    #[error("non-positive solution value {value} at {location}")]
    NonPositiveW { value: f64, location: String },

    #[error("point {point:?} is not strictly interior")]
    NotInterior { point: [f64; 3] },

    #[error("point {point:?} is within step {h} of the boundary (distance {distance})")]
    TooCloseToBoundary { point: [f64; 3], h: f64, distance: f64 },

    #[error("singular node system at y={y}: |det| = {det:e}, coefficients {coefficients:?}")]
    SingularSystem { y: f64, det: f64, coefficients: [[f64; 3]; 3] },

    #[error("dense linear solve failed: {0}")]
    LinearSolve(String),
}

pub(crate) fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParameter { name, reason: format!("must be finite and > 0, got {v}") })
    }
}
