use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("matrix determinant {det} is not 1 (tolerance {tol:e})")]
    NotUnimodular { det: f64, tol: f64 },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("negative radial coordinate {0}")]
    NegativeRadius(f64),

    #[error("quadrature did not converge within {panels} panels (achieved error estimate {error:e})")]
    QuadratureBudget { panels: usize, error: f64 },

    #[error("insufficient decay: estimated tail {tail:e} exceeds bound {bound:e}")]
    InsufficientDecay { tail: f64, bound: f64 },

    #[error("symbol is not integrable against the Plancherel density (measured tail exponent {exponent:.3}, tail {tail:e})")]
    NotIntegrable { exponent: f64, tail: f64 },

    #[error("ill-conditioned fit (condition number {condition:e}): {reason}")]
    IllConditioned { condition: f64, reason: String },

    #[error("evaluation at t = {t} is inside the refusal zone t < {limit}")]
    RefusalZone { t: f64, limit: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("symbol is not Weyl invariant (max deviation {deviation:e})")]
    NotWeylInvariant { deviation: f64 },

    #[error("pole detected inside a Cauchy circle at {re}+{im}i (circle discrepancy {discrepancy:e})")]
    PoleInCircle { re: f64, im: f64, discrepancy: f64 },

    #[error("symbol cannot be evaluated off the real axis: {0}")]
    RealAxisOnly(String),

    #[error("derivative order budget exceeded: requested {requested}, allowed {allowed}")]
    DerivativeBudget { requested: usize, allowed: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
