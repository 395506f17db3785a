use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },

    #[error("laser frequency is resonant with the atomic transition (relative detuning {relative_detuning:e})")]
    Resonant { relative_detuning: f64 },

    #[error("kr = {kr} is singular for the dipole-dipole potential")]
    SingularSeparation { kr: f64 },

    #[error("separation {separation:e} cm is below the short-range cutoff {cutoff:e} cm")]
    BelowCutoff { separation: f64, cutoff: f64 },

    #[error("near-zone expansion requires kr < 0.1, got kr = {kr}")]
    OutsideNearZone { kr: f64 },

    #[error("well depth {well_depth:e} erg does not exceed the recoil energy {recoil:e} erg")]
    TightBindingInvalid { well_depth: f64, recoil: f64 },

    #[error("pair basis is empty: cluster radius {r_max:e} is smaller than the lattice spacing {spacing:e}")]
    EmptyBasis { r_max: f64, spacing: f64 },

    #[error("energy E' = {e_prime} is on the wrong branch: {reason}")]
    WrongBranch { e_prime: f64, reason: &'static str },

    #[error("quadrature did not converge after {panels} panels: estimate {estimate_re}{estimate_im:+}i, error bound {error_bound:e}")]
    NonConvergence {
        panels: usize,
        estimate_re: f64,
        estimate_im: f64,
        error_bound: f64,
    },

    #[error("Bessel order {order} exceeds the table limit {max_order}")]
    OrderTooLarge { order: u32, max_order: u32 },

    #[error("derivative of Re D vanishes at E' = {e_prime} (|dRe D/dE'| = {slope:e})")]
    DegenerateRoot { e_prime: f64, slope: f64 },

    #[error("1 - G V is near singular at E' = {e_prime} (|D| = {det_abs:e}, condition estimate {condition:e})")]
    IllConditioned { e_prime: f64, det_abs: f64, condition: f64 },

    #[error("separation {0:?} is not part of the pair basis")]
    NotInBasis([i32; 3]),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}
