use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A target cannot be met by any member of the requested family.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The candidate grand-bundle distribution is not a mean-preserving
    /// contraction of the prior's.
    #[error("distribution is not induced by any signal (integrated-CDF gap {gap:e} at {at})")]
    NotInducible { gap: f64, at: f64 },

    #[error("bundle {bundle:#b} violates weak free disposal: kappa {kappa} > bound {bound}")]
    FreeDisposal { bundle: u32, kappa: f64, bound: f64 },

    #[error("invalid model: {0}")]
    Model(String),

    /// The robust mechanism could not be built because no interior touching
    /// point of the integrated CDFs was found.
    #[error("no interior touching point: minimal gap {min_gap:e} at {at}")]
    Construction { min_gap: f64, at: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("problem too large: {needed} variables exceeds limit {limit}")]
    Resource { needed: usize, limit: usize },

    #[error("linear program: {0}")]
    Lp(String),
}
