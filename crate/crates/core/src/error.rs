use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sector {sector} for {num_qubits} qubits (parity or range mismatch)")]
    InvalidSector { num_qubits: usize, sector: i64 },

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("pauli string changes the S^z sector; use a sector-free basis")]
    SectorViolation,

    #[error("dimension {dim} exceeds the dense limit {max}; use the iterative solver")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("eigensolver did not converge after {iterations} iterations (best residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("incomplete spectrum: got {got} eigenpairs, need {need}")]
    IncompleteSpectrum { got: usize, need: usize },

    #[error("particle-hole identity violated (defect {0:.3e}); refusing R-conjugated evolution")]
    ParticleHoleViolated(f64),

    #[error("Krylov substep underflow at dt = {0:.3e}")]
    StepUnderflow(f64),

    #[error("series never crosses 0.5 (minimum reached: {0:.6})")]
    NoCrossing(f64),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
