//! Special functions used by the detection analytics.
//!
//! Everything here is real-argument, double precision and pure. Series
//! evaluations report how they terminated through [`SeriesResult`].

mod gamma;
mod hyper;
mod marcum;

pub use gamma::{
    erf, erfc, gaussian_q, inv_reg_upper_gamma, ln_gamma, pochhammer, reg_inc_beta,
    reg_lower_gamma, reg_upper_gamma,
};
pub use hyper::{humbert_phi2, kummer_1f1, kummer_1f1_series, SeriesOptions};
pub use marcum::marcum_q;

/// Outcome of a truncated series evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesResult {
    pub value: f64,
    pub terms_used: usize,
    pub converged: bool,
    /// Estimated absolute truncation plus rounding error.
    pub est_abs_error: f64,
}

impl SeriesResult {
    /// Value if the series converged, otherwise a `NoConvergence` error
    /// carrying the best estimate.
    pub fn into_result(self, func: &'static str) -> crate::Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(crate::Error::NoConvergence {
                func,
                terms: self.terms_used,
                estimate: self.value,
            })
        }
    }
}
