// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("point mass at x = {x} has zero weight")]
    DegeneratePointMass { x: f64 },

    #[error("position {x} outside [0, {n}]")]
    OutOfRange { x: f64, n: f64 },

    #[error("spectral parameter must lie in the open upper half plane (Im z = {im})")]
    NotUpperHalfPlane { im: f64 },

    #[error("vanishing Möbius denominator ({0:e})")]
    MobiusDenominator(f64),

    #[error("eigenvalue scan failed to stabilise after {refinements} refinements")]
    ScanTooCoarse { refinements: usize },

    #[error("|E(t)| = {modulus:e} at t = {t} is below the admissible floor")]
    SmallModulus { t: f64, modulus: f64 },

    #[error("Fourier tail |g| mean {tail:e} exceeds {limit:e} at window {omega}")]
    TailNotMet { omega: f64, tail: f64, limit: f64 },

    #[error("|1 + ĝ| = {value:e} at t = {t}: Wiener hypothesis violated numerically")]
    WienerDenominator { t: f64, value: f64 },

    #[error("spectral window too small for mollifier: Λ·w = {product}")]
    WindowTooSmall { product: f64 },

    #[error("φ fails the positivity test: min eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("Nyström system condition number {cond:e} exceeds {limit:e}")]
    IllConditioned { cond: f64, limit: f64 },

    #[error("Nyström residual {residual:e} exceeds {limit:e}")]
    Residual { residual: f64, limit: f64 },

    #[error("|D(x)| = {value:e} at x = {x}")]
    SmallD { x: f64, value: f64 },

    #[error("reconstructed H has imaginary residue {residue:e} at x = {x}")]
    ComplexH { x: f64, residue: f64 },

    #[error("recovered μ fails the symmetric-traceless check by {defect:e} at x = {x}")]
    Structure { x: f64, defect: f64 },

    #[error("series hypothesis violated: {0}")]
    SeriesHypothesis(String),

    #[error("linear solve failed: singular matrix")]
    Singular,

    #[error("io: {0}")]
    Io(String),

    #[error("parse: {0}")]
    Parse(String),
}

impl Error {
    /// True for malformed or out-of-contract inputs, false for numerical guard trips.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::NonFinite(_)
                | Error::DegeneratePointMass { .. }
                | Error::OutOfRange { .. }
                | Error::NotUpperHalfPlane { .. }
                | Error::SeriesHypothesis(_)
                | Error::Io(_)
                | Error::Parse(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
