use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("pole of {what} at {at}")]
    Pole { what: &'static str, at: Complex64 },
    #[error("kernel pole at the difference s_{i} - s_{j} = {at}")]
    KernelPole { i: usize, j: usize, at: Complex64 },
    #[error("division by zero: {what} vanishes at {at}")]
    ZeroDivision { what: &'static str, at: Complex64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no convergence: {0}")]
    Convergence(String),
    #[error("sublattice is not primitive (invariant factors {0:?})")]
    NonPrimitive(Vec<i64>),
    #[error("quotient map is not surjective over Z (invariant factors {0:?})")]
    NonSurjective(Vec<i64>),
    #[error("enumeration budget of {cap} candidates exceeded")]
    Budget { cap: usize },
    #[error("{0} is not a codimension-one coface")]
    NotCoface(String),
    #[error("ill-conditioned rank decision: singular value ratio {ratio:e} too close to tolerance {tol:e}")]
    IllConditioned { ratio: f64, tol: f64 },
    #[error("zero set contains a directed cycle through {0:?}; no renumbering exists")]
    Renumber(Vec<usize>),
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite(s: Complex64) -> Result<()> {
    if s.re.is_finite() && s.im.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("non-finite input {s}")))
    }
}
