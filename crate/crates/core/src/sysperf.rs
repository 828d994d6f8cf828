//! System-level metrics for identical detectors with sign-quantized
//! reports: success probabilities, binomial `P_D`/`P_F`, total error and
//! the optimal vote threshold.

use crate::channels::FadingLink;
use crate::error::domain;
use crate::fusion::report_density;
use crate::quad::{integrate_to_inf, QuadOptions};
use crate::specfun::{ln_gamma, reg_inc_beta};
use crate::Result;
use serde::{Deserialize, Serialize};

/// Probabilities that the FC observes `y ≥ 0` under each hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessProbs {
    pub p1: f64,
    pub p0: f64,
    /// Severity of the reporting link.
    pub m: f64,
}

/// How `P(y ≥ 0 | u = +1)` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessRoute {
    /// Incomplete-beta closed form, valid for every `m`.
    #[default]
    Exact,
    /// Quadrature of `P(y|+1)` over `[0, ∞)`.
    Numeric,
    /// Printed `m = 2` expression. Not a probability in general.
    Literal,
}

/// `c_m = P(y≥0|+1) - P(y<0|+1) = I_α(½, m)` with `α = σ_v²/(σ_v²+σ_n²)`.
pub fn sign_coefficient(link: &FadingLink) -> Result<f64> {
    reg_inc_beta(0.5, link.m, link.alpha())
}

/// `c_m` from the reporting density.
pub fn sign_coefficient_numeric(link: &FadingLink) -> Result<f64> {
    let opts = QuadOptions::tol(1e-14, 1e-12);
    let scale = link.total_var().sqrt();
    let err = std::cell::RefCell::new(None);
    let s = integrate_to_inf(
        |y| match report_density(y, 1, link) {
            Ok(v) => v,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        0.0,
        scale,
        opts,
    );
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(2.0 * s?.value - 1.0)
}

/// `p = ½ + (q - ½) c_m` for a local probability `q`.
pub fn success_prob(q: f64, c_m: f64) -> f64 {
    0.5 + (q - 0.5) * c_m
}

pub fn success_probs(pd: f64, pf: f64, link: &FadingLink, route: SuccessRoute) -> Result<SuccessProbs> {
    check_prob("success_probs", pd)?;
    check_prob("success_probs", pf)?;
    let (p1, p0) = match route {
        SuccessRoute::Exact => {
            let c = sign_coefficient(link)?;
            (success_prob(pd, c), success_prob(pf, c))
        }
        SuccessRoute::Numeric => {
            let c = sign_coefficient_numeric(link)?;
            (success_prob(pd, c), success_prob(pf, c))
        }
        SuccessRoute::Literal => {
            if link.m != 2.0 {
                return Err(domain("success_probs", "the literal route exists only for m = 2"));
            }
            (literal_m2(pd, link), literal_m2(pf, link))
        }
    };
    Ok(SuccessProbs { p1, p0, m: link.m })
}

fn literal_m2(q: f64, link: &FadingLink) -> f64 {
    let sv2 = link.sigma2;
    let sn = link.noise_sigma2.sqrt();
    let a = link.total_var();
    sv2 / (a * a) * (sv2 / (2.0 * sn) + sn) + (q - 0.5) * sv2.sqrt() / (sn * a.sqrt())
}

/// Rayleigh reporting: `p = ½ + (q - ½)√α`.
pub fn success_probs_m1(pd: f64, pf: f64, link: &FadingLink) -> Result<SuccessProbs> {
    if link.m != 1.0 {
        return Err(domain("success_probs_m1", format!("link has m = {}", link.m)));
    }
    success_probs(pd, pf, link, SuccessRoute::Exact)
}

/// `m = 2` reporting. `Numeric` is the default route.
pub fn success_probs_m2(pd: f64, pf: f64, link: &FadingLink, route: SuccessRoute) -> Result<SuccessProbs> {
    if link.m != 2.0 {
        return Err(domain("success_probs_m2", format!("link has m = {}", link.m)));
    }
    success_probs(pd, pf, link, route)
}

fn check_prob(func: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(domain(func, format!("{p} is not a probability")))
    }
}

fn ln_choose(n: usize, k: usize) -> f64 {
    // ln_gamma only fails for non-positive arguments.
    ln_gamma(n as f64 + 1.0).unwrap() - ln_gamma(k as f64 + 1.0).unwrap() - ln_gamma((n - k) as f64 + 1.0).unwrap()
}

fn ln_pmf(n: usize, j: usize, p: f64) -> f64 {
    let a = if j == 0 { 0.0 } else { j as f64 * p.ln() };
    let b = if j == n { 0.0 } else { (n - j) as f64 * (-p).ln_1p() };
    ln_choose(n, j) + a + b
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.collect();
    let mx = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + v.iter().map(|t| (t - mx).exp()).sum::<f64>().ln()
}

/// `P(Bin(k, p) ≥ k1)`, summed in log space over whichever tail has fewer terms.
pub fn binomial_upper_tail(k: usize, k1: usize, p: f64) -> Result<f64> {
    check_prob("binomial_upper_tail", p)?;
    if k1 > k {
        return Err(domain("binomial_upper_tail", format!("K1 = {k1} exceeds K = {k}")));
    }
    if k1 == 0 {
        return Ok(1.0);
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    if k - k1 < k1 {
        Ok(log_sum_exp((k1..=k).map(|j| ln_pmf(k, j, p))).exp().min(1.0))
    } else {
        let lower = log_sum_exp((0..k1).map(|j| ln_pmf(k, j, p))).exp();
        Ok((1.0 - lower).max(0.0))
    }
}

/// `P_D = P(at least K1 of K reports are non-negative | H1)`.
pub fn system_pd(k: usize, k1: usize, p1: f64) -> Result<f64> {
    binomial_upper_tail(k, k1, p1)
}

/// `P_F` counterpart of [`system_pd`].
pub fn system_pf(k: usize, k1: usize, p0: f64) -> Result<f64> {
    binomial_upper_tail(k, k1, p0)
}

/// `P(Σ Bernoulli(p_k) ≥ k1)` for non-identical branches.
pub fn poisson_binomial_upper_tail(ps: &[f64], k1: usize) -> Result<f64> {
    for &p in ps {
        check_prob("poisson_binomial_upper_tail", p)?;
    }
    if k1 > ps.len() {
        return Err(domain("poisson_binomial_upper_tail", "threshold exceeds branch count"));
    }
    let mut dist = vec![0.0; ps.len() + 1];
    dist[0] = 1.0;
    for (i, &p) in ps.iter().enumerate() {
        for j in (0..=i + 1).rev() {
            let stay = dist[j] * (1.0 - p);
            let up = if j > 0 { dist[j - 1] * p } else { 0.0 };
            dist[j] = stay + up;
        }
    }
    Ok(dist[k1..].iter().sum::<f64>().min(1.0))
}

/// One operating point of the counting rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemOperatingPoint {
    pub k: usize,
    pub k1: usize,
    pub p_d: f64,
    pub p_f: f64,
    pub p_m: f64,
    pub p_tot: f64,
}

pub fn operating_point(k: usize, k1: usize, sp: &SuccessProbs) -> Result<SystemOperatingPoint> {
    let p_d = system_pd(k, k1, sp.p1)?;
    let p_f = system_pf(k, k1, sp.p0)?;
    Ok(SystemOperatingPoint {
        k,
        k1,
        p_d,
        p_f,
        p_m: 1.0 - p_d,
        p_tot: 1.0 - p_d + p_f,
    })
}

/// `P_TOT(l) = P_M + P_F`.
pub fn total_error(k: usize, l: usize, p1: f64, p0: f64) -> Result<f64> {
    Ok(1.0 - system_pd(k, l, p1)? + system_pf(k, l, p0)?)
}

/// `β = ln(p1/p0) / ln((1-p0)/(1-p1))`.
pub fn beta_ratio(p1: f64, p0: f64) -> Result<f64> {
    if !(p0 > 0.0 && p1 > p0 && p1 < 1.0) {
        return Err(domain("optimal_l", format!("need 0 < p0 < p1 < 1, got p0 = {p0}, p1 = {p1}")));
    }
    Ok((p1 / p0).ln() / ((1.0 - p0) / (1.0 - p1)).ln())
}

/// `⌈K/(1+β)⌉` clamped to `[1, K]`.
pub fn optimal_l(k: usize, p1: f64, p0: f64) -> Result<usize> {
    if k == 0 {
        return Err(domain("optimal_l", "K must be positive"));
    }
    let beta = beta_ratio(p1, p0)?;
    let l = (k as f64 / (1.0 + beta)).ceil();
    Ok((l as usize).clamp(1, k))
}

/// Exhaustive argmin of `P_TOT` over `l ∈ 1..=K`; returns every minimizer
/// within `tie_tol` of the minimum.
pub fn brute_force_l(k: usize, p1: f64, p0: f64, tie_tol: f64) -> Result<Vec<usize>> {
    let vals: Vec<f64> = (1..=k).map(|l| total_error(k, l, p1, p0)).collect::<Result<_>>()?;
    let best = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((1..=k).filter(|&l| vals[l - 1] <= best + tie_tol).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tails_at_the_edges() {
        assert_eq!(system_pd(7, 0, 0.3).unwrap(), 1.0);
        assert!((system_pd(4, 4, 0.5).unwrap() - 1.0 / 16.0).abs() < 1e-15);
        assert!(system_pd(3, 4, 0.5).is_err());
    }

    #[test]
    fn majority_for_symmetric_channel() {
        assert_eq!(optimal_l(20, 0.8, 0.2).unwrap(), 10);
        assert_eq!(optimal_l(15, 0.8, 0.2).unwrap(), 8);
        assert!(optimal_l(10, 0.2, 0.3).is_err());
    }

    #[test]
    fn rayleigh_success_probability() {
        let link = FadingLink::new(1.0, 1.0, 1.0).unwrap();
        let s = success_probs_m1(0.9, 0.5, &link).unwrap();
        assert!((s.p1 - (0.5 + 0.4 / 2f64.sqrt())).abs() < 1e-12);
        assert!((s.p0 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn poisson_binomial_reduces_to_binomial() {
        let ps = vec![0.37; 9];
        for k1 in 0..=9 {
            let a = poisson_binomial_upper_tail(&ps, k1).unwrap();
            let b = binomial_upper_tail(9, k1, 0.37).unwrap();
            assert!((a - b).abs() < 1e-13);
        }
    }
}
