//! Fusion center: reporting densities, per-branch likelihoods, the LRT
//! statistic, threshold calibration and the suboptimal combining rules.
//!
//! The reporting channel is the real scalar model `y = u·h + g` with `h` a
//! Nakagami envelope and `g ~ N(0, σ_n²)`. In this module the link's
//! `sigma2` is σ_v² and `noise_sigma2` is σ_n². Shorthands:
//! `A = σ_v² + σ_n²`, `B = σ_v/(σ_n √A)`.

use crate::channels::FadingLink;
use crate::error::domain;
use crate::quad::{integrate_to_inf, QuadOptions};
use crate::rng::stream_rng;
use crate::specfun::{erf, gaussian_q, kummer_1f1, ln_gamma};
use crate::Result;
use rand::Rng;
use serde::{Deserialize, Serialize};

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Which conditional-density expression to use for `m = 1/2` and `m = 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportForm {
    /// Exact densities of `y = u·h + g`.
    #[default]
    Exact,
    /// Expressions as printed in the source derivation. For `m = 2` this is
    /// not a density; kept for comparison.
    Literal,
}

fn shorthands(link: &FadingLink) -> (f64, f64, f64) {
    let a = link.total_var();
    let sn = link.noise_sigma2.sqrt();
    let b = link.sigma2.sqrt() / (sn * a.sqrt());
    (a, b, sn)
}

fn check_sign(u: i8) -> Result<f64> {
    match u {
        1 => Ok(1.0),
        -1 => Ok(-1.0),
        _ => Err(domain("report_density", format!("decision {u} is not ±1"))),
    }
}

/// `P(y | u)` under the exact model.
pub fn report_density(y: f64, u: i8, link: &FadingLink) -> Result<f64> {
    report_density_with(y, u, link, ReportForm::Exact)
}

pub fn report_density_with(y: f64, u: i8, link: &FadingLink, form: ReportForm) -> Result<f64> {
    let us = check_sign(u)?;
    let (a, b, sn) = shorthands(link);
    let s2 = link.noise_sigma2;
    let m = link.m;
    if m == 1.0 {
        return Ok(sn / (a * SQRT_2PI) * (-y * y / (2.0 * s2)).exp()
            + us * sn * b * y / a * (-y * y / (2.0 * a)).exp() * gaussian_q(-us * b * y));
    }
    if m == 2.0 {
        let by = b * y;
        return Ok(match form {
            ReportForm::Exact => {
                sn.powi(3) / (2.0 * SQRT_2PI * a * a)
                    * ((2.0 + by * by) * (-y * y / (2.0 * s2)).exp()
                        + us * SQRT_2PI * by * (3.0 + by * by) * (-y * y / (2.0 * a)).exp() * gaussian_q(-us * by))
            }
            ReportForm::Literal => {
                sn.powi(3) * by / (2.0 * a * a)
                    * (by / SQRT_2PI * (-y * y / (2.0 * s2)).exp()
                        + us * (2.0 + by * by) * (-y * y / (2.0 * a)).exp() * gaussian_q(-us * by))
            }
        });
    }
    if m == 0.5 {
        let sv = link.sigma2.sqrt();
        return Ok(match form {
            ReportForm::Exact => {
                (-y * y / (2.0 * a)).exp() / (2.0 * std::f64::consts::PI * a).sqrt()
                    * (1.0 + erf(us * y * sv / (sn * (2.0 * a).sqrt())))
            }
            ReportForm::Literal => {
                (s2 / a).sqrt() / (2.0 * std::f64::consts::PI * s2).sqrt()
                    * (-y * y / (2.0 * a)).exp()
                    * (1.0 + (s2 / 2.0).sqrt() * erf(y * us / (2.0 * s2 * a).sqrt()))
            }
        });
    }
    report_density_template(y, u, link)
}

/// General-`m` density from the confluent-hypergeometric envelope template
/// with `(y, σ_v², σ_n²)`. Where `u·y < 0` the two template terms cancel, so
/// that side falls back to the convolution integral.
pub fn report_density_template(y: f64, u: i8, link: &FadingLink) -> Result<f64> {
    let us = check_sign(u)?;
    let x = us * y;
    let (a, _, sn) = shorthands(link);
    let s2 = link.noise_sigma2;
    let m = link.m;
    let d = link.sigma2 / (2.0 * s2 * a);
    if x < 0.0 || x * x * d > 600.0 {
        return report_density_convolution(y, u, link);
    }
    let f1 = kummer_1f1(m, 0.5, x * x * d)?.into_result("report_density")?;
    let f2 = kummer_1f1(m + 0.5, 1.5, x * x * d)?.into_result("report_density")?;
    let lg = ln_gamma(m)?;
    let lg_half = ln_gamma(m + 0.5)?;
    let pref = (m * (s2 / a).ln() - x * x / (2.0 * s2) - lg).exp() / (2.0 * std::f64::consts::PI * s2).sqrt();
    let second = x * std::f64::consts::SQRT_2 * lg_half.exp() * f2 / ((sn / link.sigma2.sqrt()) * a.sqrt());
    Ok(pref * (lg.exp() * f1 + second))
}

/// `P(y|u) = ∫ p_h(r) φ(y - u r; σ_n) dr` by quadrature.
pub fn report_density_convolution(y: f64, u: i8, link: &FadingLink) -> Result<f64> {
    let us = check_sign(u)?;
    let x = us * y;
    let m = link.m;
    let sv2 = link.sigma2;
    let s2 = link.noise_sigma2;
    let lg = ln_gamma(m)?;
    let log_c = std::f64::consts::LN_2 - lg - m * (2.0 * sv2).ln() - 0.5 * (2.0 * std::f64::consts::PI * s2).ln();
    let f = |r: f64| {
        if r <= 0.0 {
            return 0.0;
        }
        (log_c + (2.0 * m - 1.0) * r.ln() - r * r / (2.0 * sv2) - (x - r) * (x - r) / (2.0 * s2)).exp()
    };
    let scale = (sv2 * s2 / (sv2 + s2)).sqrt();
    // Split at the integrand's peak region so the map to [0,1) resolves it.
    let peak = (x * sv2 / (sv2 + s2)).max(0.0);
    let opts = QuadOptions::tol(1e-300, 1e-12);
    let head = crate::quad::integrate(f, 0.0, peak, opts)?.value;
    let tail = integrate_to_inf(f, peak, scale, opts)?.value;
    Ok(head + tail)
}

/// `(P(y|H0), P(y|H1))` for one branch:
/// `P(y|H_i) = P(y|-1)(1-p) + P(y|+1)p` with `p = p_f` or `p_d`.
pub fn branch_likelihoods(y: f64, pd: f64, pf: f64, link: &FadingLink) -> Result<(f64, f64)> {
    let minus = report_density(y, -1, link)?;
    let plus = report_density(y, 1, link)?;
    Ok((minus * (1.0 - pf) + plus * pf, minus * (1.0 - pd) + plus * pd))
}

/// Per-SU inputs of the fusion statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchStats {
    pub pd: f64,
    pub pf: f64,
    pub link: FadingLink,
}

// Each closed-form factor below is `P(y|H) · e^{y²/2A} · const`, which keeps
// both terms O(1) for large |y|; the constant cancels in the ratio.
fn scaled_factor_m1(y: f64, p: f64, b: f64) -> f64 {
    let by = b * y;
    (-0.5 * by * by).exp() + (p - gaussian_q(by)) * SQRT_2PI * by
}

fn scaled_factor_m2(y: f64, p: f64, b: f64, form: ReportForm) -> f64 {
    let by = b * y;
    match form {
        ReportForm::Exact => {
            (2.0 + by * by) * (-0.5 * by * by).exp() + (p - gaussian_q(by)) * SQRT_2PI * by * (3.0 + by * by)
        }
        ReportForm::Literal => by * (-0.5 * by * by).exp() + (p - gaussian_q(by)) * SQRT_2PI * (2.0 + by * by),
    }
}

fn factor_m_half(y: f64, p: f64, link: &FadingLink, form: ReportForm) -> f64 {
    let (a, _, sn) = shorthands(link);
    match form {
        ReportForm::Exact => 1.0 + (2.0 * p - 1.0) * erf(y * link.sigma2.sqrt() / (sn * (2.0 * a).sqrt())),
        ReportForm::Literal => {
            let s2 = link.noise_sigma2;
            1.0 + (2.0 * p - 1.0) * (s2 / 2.0).sqrt() * erf(y / (2.0 * s2 * a).sqrt())
        }
    }
}

/// `ln [P(y|H1)/P(y|H0)]` for one branch. Closed forms for `m ∈ {1/2, 1, 2}`,
/// the density route otherwise.
pub fn branch_log_ratio(y: f64, br: &BranchStats, form: ReportForm) -> Result<f64> {
    let m = br.link.m;
    let (_, b, _) = shorthands(&br.link);
    let (num, den) = if m == 1.0 {
        (scaled_factor_m1(y, br.pd, b), scaled_factor_m1(y, br.pf, b))
    } else if m == 2.0 {
        (scaled_factor_m2(y, br.pd, b, form), scaled_factor_m2(y, br.pf, b, form))
    } else if m == 0.5 {
        (factor_m_half(y, br.pd, &br.link, form), factor_m_half(y, br.pf, &br.link, form))
    } else {
        return branch_log_ratio_density(y, br);
    };
    Ok(num.ln() - den.ln())
}

/// `ln [P(y|H1)/P(y|H0)]` through the conditional densities.
pub fn branch_log_ratio_density(y: f64, br: &BranchStats) -> Result<f64> {
    let (h0, h1) = branch_likelihoods(y, br.pd, br.pf, &br.link)?;
    Ok(h1.ln() - h0.ln())
}

/// Log of the LRT statistic `L = Π_k P(y_k|H1)/P(y_k|H0)`.
pub fn lrt_log_statistic(ys: &[f64], branches: &[BranchStats]) -> Result<f64> {
    lrt_log_statistic_with(ys, branches, ReportForm::Exact)
}

pub fn lrt_log_statistic_with(ys: &[f64], branches: &[BranchStats], form: ReportForm) -> Result<f64> {
    if ys.len() != branches.len() {
        return Err(domain("lrt_statistic", "one report per branch required"));
    }
    let mut acc = 0.0;
    for (y, br) in ys.iter().zip(branches) {
        acc += branch_log_ratio(*y, br, form)?;
    }
    Ok(acc)
}

/// The LRT statistic `L` itself (may overflow for very confident reports;
/// prefer [`lrt_log_statistic`]).
pub fn lrt_statistic(ys: &[f64], branches: &[BranchStats]) -> Result<f64> {
    Ok(lrt_log_statistic(ys, branches)?.exp())
}

/// Equal-gain combining `Σ y_k`.
pub fn egc_statistic(ys: &[f64]) -> f64 {
    ys.iter().sum()
}

/// Maximal-ratio style combining `Σ w_k y_k`.
pub fn mrc_statistic(ys: &[f64], weights: &[f64]) -> f64 {
    ys.iter().zip(weights).map(|(y, w)| y * w).sum()
}

/// MRC weights `√α_sf` per reporting link.
pub fn mrc_weights(links: &[FadingLink]) -> Vec<f64> {
    links.iter().map(|l| l.alpha().sqrt()).collect()
}

/// J-out-of-K counting: `+1` iff at least `j` decisions are `+1`.
pub fn counting_fuse(us: &[i8], j: usize) -> i8 {
    if us.iter().filter(|&&u| u > 0).count() >= j {
        1
    } else {
        -1
    }
}

/// Sign-quantized LLR for identical branches:
/// `ln L = K1 ln(p1/p0) + (K-K1) ln((1-p1)/(1-p0))`.
pub fn sign_quantized_llr(k: usize, k1: usize, p1: f64, p0: f64) -> f64 {
    k1 as f64 * (p1 / p0).ln() + (k - k1) as f64 * ((1.0 - p1) / (1.0 - p0)).ln()
}

/// Smallest `K1` with `sign_quantized_llr(K, K1) ≥ log_lambda` (`K+1` when none).
pub fn counting_threshold(k: usize, p1: f64, p0: f64, log_lambda: f64) -> usize {
    (0..=k)
        .find(|&k1| sign_quantized_llr(k, k1, p1, p0) >= log_lambda)
        .unwrap_or(k + 1)
}

/// Fusion rules compared at the FC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FusionRule {
    /// Decide H1 when `ln L > log_lambda`.
    Lrt { log_lambda: f64 },
    Egc { threshold: f64 },
    Mrc { threshold: f64 },
    /// Decide H1 when at least `j` reports are non-negative.
    Counting { j: usize },
}

/// Result of threshold calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Threshold on the statistic; decide H1 when the statistic exceeds it.
    pub threshold: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Fraction of the calibration samples above the threshold.
    pub achieved: f64,
    pub trials: usize,
}

pub const MIN_CALIBRATION_TRIALS: usize = 10_000;
pub const MIN_TAIL_COUNT: f64 = 50.0;
const BOOTSTRAP_ROUNDS: u64 = 200;

fn quantile_threshold(sorted: &[f64], target_pf: f64) -> f64 {
    let n = sorted.len();
    let k = ((target_pf * n as f64).round() as usize).clamp(1, n - 1);
    // k samples lie strictly above the midpoint (barring ties).
    0.5 * (sorted[n - k - 1] + sorted[n - k])
}

/// Empirical `(1 - P_F)` quantile of a statistic's H0 samples, with a
/// bootstrap 95% interval. The sample order does not matter.
pub fn calibrate_threshold(h0_samples: &[f64], target_pf: f64, seed: u64) -> Result<Calibration> {
    if !(target_pf > 0.0 && target_pf < 1.0) {
        return Err(domain("calibrate_lambda", format!("target P_F = {target_pf} must lie in (0,1)")));
    }
    let n = h0_samples.len();
    if n < MIN_CALIBRATION_TRIALS {
        return Err(domain(
            "calibrate_lambda",
            format!("{n} trials given, at least {MIN_CALIBRATION_TRIALS} required"),
        ));
    }
    if target_pf * (n as f64) < MIN_TAIL_COUNT {
        return Err(domain(
            "calibrate_lambda",
            format!(
                "expected tail count {:.1} below {MIN_TAIL_COUNT}; increase trials",
                target_pf * n as f64
            ),
        ));
    }
    if h0_samples.iter().any(|v| v.is_nan()) {
        return Err(domain("calibrate_lambda", "NaN statistic in calibration samples"));
    }
    let mut sorted = h0_samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let threshold = quantile_threshold(&sorted, target_pf);
    let achieved = sorted.iter().filter(|&&v| v > threshold).count() as f64 / n as f64;

    let mut boot: Vec<f64> = (0..BOOTSTRAP_ROUNDS)
        .map(|b| {
            let mut rng = stream_rng(seed, b, 0xB007);
            let mut res: Vec<f64> = (0..n).map(|_| sorted[rng.random_range(0..n)]).collect();
            res.sort_by(f64::total_cmp);
            quantile_threshold(&res, target_pf)
        })
        .collect();
    boot.sort_by(f64::total_cmp);
    let lo = boot[(0.025 * BOOTSTRAP_ROUNDS as f64) as usize];
    let hi = boot[(0.975 * BOOTSTRAP_ROUNDS as f64) as usize - 1];
    Ok(Calibration {
        threshold,
        ci_low: lo,
        ci_high: hi,
        achieved,
        trials: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link(m: f64, db: f64) -> FadingLink {
        FadingLink::from_snr_db(m, db, 1.0).unwrap()
    }

    #[test]
    fn decision_sign_checked() {
        assert!(report_density(0.1, 0, &link(1.0, 0.0)).is_err());
    }

    #[test]
    fn indistinguishable_hypotheses() {
        for m in [0.5, 1.0, 2.0, 1.5] {
            let br = BranchStats {
                pd: 0.3,
                pf: 0.3,
                link: link(m, 3.0),
            };
            for y in [-2.0, 0.0, 0.4, 3.0] {
                assert!(branch_log_ratio(y, &br, ReportForm::Exact).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn origin_factor_is_one_for_m1() {
        let br = BranchStats {
            pd: 0.9,
            pf: 0.03,
            link: link(1.0, 7.0),
        };
        assert!(branch_log_ratio(0.0, &br, ReportForm::Exact).unwrap().abs() < 1e-15);
    }

    #[test]
    fn counting_rule_edges() {
        assert_eq!(counting_fuse(&[-1, -1, -1], 0), 1);
        assert_eq!(counting_fuse(&[-1, 1, -1], 2), -1);
        assert_eq!(counting_fuse(&[1, 1, -1], 2), 1);
    }

    #[test]
    fn calibration_guards() {
        let s: Vec<f64> = (0..20_000).map(|i| i as f64).collect();
        assert!(calibrate_threshold(&s[..5000], 0.5, 1).is_err());
        assert!(calibrate_threshold(&s, 0.001, 1).is_err());
        let c = calibrate_threshold(&s, 0.5, 1).unwrap();
        assert!((c.threshold - 9999.5).abs() < 1.0);
        assert!(c.ci_low <= c.threshold && c.threshold <= c.ci_high);
    }
}
