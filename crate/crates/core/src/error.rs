use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GapError {
    #[error("pole: cs_k vanishes at s = {s} (k = {k})")]
    Pole { k: f64, s: f64 },

    #[error("domain: {0}")]
    Domain(String),

    #[error("antipodal points: k<p,q> + 1 = {gap:e}")]
    Antipodal { gap: f64 },

    #[error("coincident points (distance {distance:e}); mirror map undefined")]
    Coincident { distance: f64 },

    #[error("eigensolver did not converge: {0}")]
    Convergence(String),

    #[error("degenerate ground state: |phi1'(D/2)| = {slope:e}")]
    Degenerate { slope: f64 },

    #[error("point at radius {r} lies inside the boundary standoff (R = {radius}, standoff {standoff:e})")]
    Boundary { r: f64, radius: f64, standoff: f64 },

    #[error("trajectory stuck: {rejections} consecutive rejected steps at t = {t}")]
    Stuck { rejections: u32, t: f64 },

    #[error("only {remaining} uncoupled trajectories remain at t = {t} (need at least {required})")]
    InsufficientSamples {
        t: f64,
        remaining: usize,
        required: usize,
    },
}

pub type Result<T, E = GapError> = std::result::Result<T, E>;
