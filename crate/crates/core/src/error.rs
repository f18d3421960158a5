use thiserror::Error;

/// Errors shared by all channel-analysis modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (max deviation {dev:.3e})")]
    NotHermitian { dev: f64 },

    #[error("not a valid density matrix: {0}")]
    NotAState(String),

    #[error("not a valid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("rates do not define a completely positive map: {0}")]
    NotAChannel(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("channel eigenvalue lambda_{index} vanishes near t = {t}: generator undefined")]
    SingularSpectrum { index: String, t: f64 },

    #[error("inconsistent generator: zero-sum identity violated by {0:.3e}")]
    InconsistentGenerator(f64),

    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),

    #[error("degenerate state pair: rho_1 = rho_2")]
    DegeneratePair,

    #[error("trace-distance flow undefined: xi(t) = {0:.3e} below threshold")]
    FlowUndefined(f64),

    #[error("singular denominator: p_0(t) too close to 1/2 at t = {0}")]
    SingularDenominator(f64),

    #[error("mixture parameter outside (0, 1] at t = {0}")]
    InvalidMixture(f64),

    #[error("Weyl algebra identity violated for indices {0}")]
    Algebra(String),

    #[error("not a Weyl-channel spectrum: imaginary residue {0:.3e}")]
    InvalidSpectrum(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
