//! Energy detection at a single SU: thresholds, detection probabilities and
//! local ROC curves.
//!
//! Throughout, `x = τ/(2σ_w²)` is the normalized threshold and
//! `α = σ_z²/(σ_z²+σ_w²)`.

use crate::channels::{complex_regime, FadingLink, Regime};
use crate::error::domain;
use crate::quad::{integrate, QuadOptions};
use crate::roc::{Provenance, RocCurve, RocPoint};
use crate::specfun::{self, humbert_phi2, kummer_1f1, ln_gamma, marcum_q};
use crate::Result;
use serde::{Deserialize, Serialize};

/// Energy detector of one SU.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    /// Complex samples per sensing window.
    pub n: u32,
    pub target_pf: f64,
    /// Energy threshold.
    pub tau: f64,
    pub noise_sigma2: f64,
}

impl DetectorSpec {
    /// Detector whose threshold meets `pf` exactly.
    pub fn from_pf(n: u32, noise_sigma2: f64, pf: f64) -> Result<Self> {
        let tau = threshold_from_pf(n, noise_sigma2, pf)?;
        Ok(Self {
            n,
            target_pf: pf,
            tau,
            noise_sigma2,
        })
    }

    /// Detector with an explicit threshold.
    pub fn from_threshold(n: u32, noise_sigma2: f64, tau: f64) -> Result<Self> {
        let pf = pf_from_threshold(n, noise_sigma2, tau)?;
        Ok(Self {
            n,
            target_pf: pf,
            tau,
            noise_sigma2,
        })
    }

    /// `x = τ/(2σ_w²)`.
    pub fn normalized_threshold(&self) -> f64 {
        self.tau / (2.0 * self.noise_sigma2)
    }
}

/// Which formula produced a detection probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PdModel {
    Phi2General,
    MHalf,
    MOne,
    MTwo,
    ComplexRegime,
    Numeric,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalOperatingPoint {
    pub pf: f64,
    pub pd: f64,
    pub pm: f64,
    pub model: PdModel,
    /// Set when the raw value left [0,1] by more than 1e-6 before clamping.
    pub clamp_flag: bool,
}

impl LocalOperatingPoint {
    fn new(pf: f64, raw_pd: f64, model: PdModel) -> Self {
        let pd = raw_pd.clamp(0.0, 1.0);
        Self {
            pf,
            pd,
            pm: 1.0 - pd,
            model,
            clamp_flag: (raw_pd - pd).abs() > 1e-6,
        }
    }
}

fn check_n(func: &'static str, n: u32) -> Result<()> {
    if n == 0 {
        return Err(domain(func, "sample count N must be positive"));
    }
    Ok(())
}

/// `p_f = Q(N, τ/(2σ_w²))`.
pub fn pf_from_threshold(n: u32, noise_sigma2: f64, tau: f64) -> Result<f64> {
    check_n("pf_from_threshold", n)?;
    if !(tau >= 0.0) {
        return Err(domain("pf_from_threshold", format!("threshold {tau} must be non-negative")));
    }
    if !(noise_sigma2 > 0.0) {
        return Err(domain("pf_from_threshold", "noise variance must be positive"));
    }
    specfun::reg_upper_gamma(n as f64, tau / (2.0 * noise_sigma2))
}

/// `τ = 2σ_w² Q⁻¹(N, p_f)`.
pub fn threshold_from_pf(n: u32, noise_sigma2: f64, pf: f64) -> Result<f64> {
    check_n("threshold_from_pf", n)?;
    if !(pf > 0.0 && pf < 1.0) {
        return Err(domain("threshold_from_pf", format!("p_f = {pf} must lie in (0,1)")));
    }
    if !(noise_sigma2 > 0.0) {
        return Err(domain("threshold_from_pf", "noise variance must be positive"));
    }
    Ok(2.0 * noise_sigma2 * specfun::inv_reg_upper_gamma(n as f64, pf)?)
}

fn check_pair(func: &'static str, link: &FadingLink, spec: &DetectorSpec) -> Result<()> {
    check_n(func, spec.n)?;
    let (a, b) = (link.noise_sigma2, spec.noise_sigma2);
    if (a - b).abs() > 1e-12 * a.max(b) {
        return Err(domain(func, "link and detector disagree on the noise variance"));
    }
    Ok(())
}

fn check_m(func: &'static str, link: &FadingLink, m: f64) -> Result<()> {
    if link.m != m {
        return Err(domain(func, format!("requires m = {m}, link has m = {}", link.m)));
    }
    Ok(())
}

/// Detection probability for any `m ≥ 1/2` through Humbert's Φ2:
/// `p_d = 1 - (1-α)^m x^{N+1} e^{-x}/(N+1)! · Φ2(m, 1; N+2; αx, x)`.
pub fn pd_general_m(link: &FadingLink, spec: &DetectorSpec) -> Result<LocalOperatingPoint> {
    pd_phi2(link, spec, false)
}

/// The Φ2 expression with the index as printed in the source derivation,
/// `(N! , c = N+1)`. Not a probability; retained for comparison only.
pub fn pd_general_m_as_printed(link: &FadingLink, spec: &DetectorSpec) -> Result<f64> {
    pd_phi2_raw(link, spec, true)
}

fn pd_phi2(link: &FadingLink, spec: &DetectorSpec, printed: bool) -> Result<LocalOperatingPoint> {
    let raw = pd_phi2_raw(link, spec, printed)?;
    Ok(LocalOperatingPoint::new(spec.target_pf, raw, PdModel::Phi2General))
}

fn pd_phi2_raw(link: &FadingLink, spec: &DetectorSpec, printed: bool) -> Result<f64> {
    check_pair("pd_general_m", link, spec)?;
    let x = spec.normalized_threshold();
    if x == 0.0 {
        return Ok(1.0);
    }
    let (m, n, alpha) = (link.m, spec.n as f64, link.alpha());
    let (c, fact) = if printed { (n + 1.0, n + 1.0) } else { (n + 2.0, n + 2.0) };
    let series = humbert_phi2(m, 1.0, c, alpha * x, x)?;
    let phi = series.into_result("pd_general_m")?;
    let log_pref = m * (-alpha).ln_1p() + (n + 1.0) * x.ln() - x - ln_gamma(fact)?;
    Ok(1.0 - (log_pref + phi.ln()).exp())
}

/// `e^{-(1-α)x} α^{-k} P(k, αx)`, evaluated through `1F1` when `α^k` is tiny.
fn scaled_lower(k: f64, alpha: f64, x: f64) -> Result<f64> {
    if alpha > 0.0 && k * alpha.ln() > -600.0 {
        let p = specfun::reg_lower_gamma(k, alpha * x)?;
        return Ok((-(1.0 - alpha) * x).exp() * p / alpha.powf(k));
    }
    // P(k,z) = z^k e^{-z} 1F1(1;k+1;z)/Γ(k+1)
    let f = kummer_1f1(1.0, k + 1.0, alpha * x)?.into_result("pd_m_one")?;
    Ok((k * x.ln() - x - ln_gamma(k + 1.0)?).exp() * f)
}

/// `m = 1` closed form:
/// `p_d = 1 - P(N,x) + e^{-τ/(2A_w)} α^{-N} P(N, αx)`.
pub fn pd_m_one(link: &FadingLink, spec: &DetectorSpec) -> Result<LocalOperatingPoint> {
    check_pair("pd_m_one", link, spec)?;
    check_m("pd_m_one", link, 1.0)?;
    let x = spec.normalized_threshold();
    let n = spec.n as f64;
    let raw = 1.0 - specfun::reg_lower_gamma(n, x)? + scaled_lower(n, link.alpha(), x)?;
    Ok(LocalOperatingPoint::new(spec.target_pf, raw, PdModel::MOne))
}

/// `m = 2` closed form, with `β = 1-α`:
/// `p_d = 1 - P(N-1,x) + e^{-βx}α^{-(N-1)}P(N-1,αx)(1+βx) - (N-1)β e^{-βx}α^{-N}P(N,αx)`.
pub fn pd_m_two(link: &FadingLink, spec: &DetectorSpec) -> Result<LocalOperatingPoint> {
    let (base, last) = m_two_parts(link, spec)?;
    Ok(LocalOperatingPoint::new(spec.target_pf, base - last, PdModel::MTwo))
}

/// The `m = 2` expression as printed, whose last bracket carries an extra
/// `(N-1)(1-α)`; it exceeds one and is kept for comparison only.
pub fn pd_m_two_literal(link: &FadingLink, spec: &DetectorSpec) -> Result<f64> {
    let (base, last) = m_two_parts(link, spec)?;
    let beta = 1.0 - link.alpha();
    Ok(base + (spec.n as f64 - 1.0) * beta - last)
}

fn m_two_parts(link: &FadingLink, spec: &DetectorSpec) -> Result<(f64, f64)> {
    check_pair("pd_m_two", link, spec)?;
    check_m("pd_m_two", link, 2.0)?;
    if spec.n < 2 {
        return Err(domain("pd_m_two", "requires N >= 2"));
    }
    let x = spec.normalized_threshold();
    let n = spec.n as f64;
    let alpha = link.alpha();
    let beta = 1.0 - alpha;
    let base = 1.0 - specfun::reg_lower_gamma(n - 1.0, x)?
        + scaled_lower(n - 1.0, alpha, x)? * (1.0 + beta * x);
    let last = (n - 1.0) * beta * scaled_lower(n, alpha, x)?;
    Ok((base, last))
}

/// Route for the `m = 1/2` detection probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MHalfRoute {
    /// Numerical integration of the energy density.
    #[default]
    Numeric,
    /// `1 - (2A_w)^N P(N, τ/(2A_w))` as printed; not a probability in general.
    Literal,
}

pub fn pd_m_half(link: &FadingLink, spec: &DetectorSpec, route: MHalfRoute) -> Result<LocalOperatingPoint> {
    check_pair("pd_m_half", link, spec)?;
    check_m("pd_m_half", link, 0.5)?;
    match route {
        MHalfRoute::Numeric => {
            let raw = pd_numeric_raw(link, spec, QuadOptions::tol(1e-10, 1e-10))?;
            Ok(LocalOperatingPoint::new(spec.target_pf, raw, PdModel::MHalf))
        }
        MHalfRoute::Literal => {
            let raw = pd_m_half_literal(link, spec)?;
            // No clamping: the point of this route is to expose the raw value.
            Ok(LocalOperatingPoint {
                pf: spec.target_pf,
                pd: raw,
                pm: 1.0 - raw,
                model: PdModel::MHalf,
                clamp_flag: !(0.0..=1.0).contains(&raw),
            })
        }
    }
}

fn pd_m_half_literal(link: &FadingLink, spec: &DetectorSpec) -> Result<f64> {
    let aw = link.total_var();
    let n = spec.n as f64;
    let p = specfun::reg_lower_gamma(n, spec.tau / (2.0 * aw))?;
    Ok(1.0 - (2.0 * aw).powf(n) * p)
}

/// Density of the normalized energy `u = t/(2σ_w²)` under H1:
/// `u^N e^{-u} (1-α)^m 1F1(m; N+1; αu) / N!`.
pub fn h1_energy_density_normalized(m: f64, n: u32, alpha: f64, u: f64) -> f64 {
    if u <= 0.0 {
        return if n == 0 { (1.0 - alpha).powf(m) } else { 0.0 };
    }
    let nf = n as f64;
    let f = match kummer_1f1(m, nf + 1.0, alpha * u) {
        Ok(r) => r.value,
        Err(_) => return f64::NAN,
    };
    (nf * u.ln() - u + m * (-alpha).ln_1p() - specfun::ln_gamma(nf + 1.0).unwrap_or(f64::NAN)).exp() * f
}

/// Density of the energy statistic `t` under H1.
pub fn h1_energy_density(link: &FadingLink, n: u32, t: f64) -> f64 {
    let s = 2.0 * link.noise_sigma2;
    h1_energy_density_normalized(link.m, n, link.alpha(), t / s) / s
}

/// Detection probability by integrating the H1 energy density numerically.
pub fn pd_numeric(link: &FadingLink, spec: &DetectorSpec, opts: QuadOptions) -> Result<LocalOperatingPoint> {
    check_pair("pd_numeric", link, spec)?;
    let raw = pd_numeric_raw(link, spec, opts)?;
    Ok(LocalOperatingPoint::new(spec.target_pf, raw, PdModel::Numeric))
}

fn pd_numeric_raw(link: &FadingLink, spec: &DetectorSpec, opts: QuadOptions) -> Result<f64> {
    let x = spec.normalized_threshold();
    let (m, n, alpha) = (link.m, spec.n, link.alpha());
    let cdf = integrate(|u| h1_energy_density_normalized(m, n, alpha, u), 0.0, x, opts)?;
    Ok(1.0 - cdf.value)
}

/// Route for the approximate complex-envelope detection probability in the
/// Hoyt regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoytForm {
    /// Exact survival of the two-scale chi-square sum.
    #[default]
    Exact,
    /// `1 - P(N/2, τ/θ1) - P(N/2, τ/θ2)` as printed.
    Literal,
}

/// Detection probability under the Gaussian approximation of the envelope:
/// Hoyt for `m < 1`, Rayleigh for `m = 1`, Rician (Marcum Q) for `m > 1`.
pub fn pd_complex_regime(link: &FadingLink, spec: &DetectorSpec) -> Result<LocalOperatingPoint> {
    pd_complex_regime_with(link, spec, HoytForm::Exact)
}

pub fn pd_complex_regime_with(
    link: &FadingLink,
    spec: &DetectorSpec,
    hoyt: HoytForm,
) -> Result<LocalOperatingPoint> {
    check_pair("pd_complex_regime", link, spec)?;
    let p = complex_regime(link, spec.n)?;
    let n = spec.n as f64;
    let tau = spec.tau;
    let s2w = 2.0 * link.noise_sigma2;
    let raw = match p.regime {
        Regime::Rayleigh => specfun::reg_upper_gamma(n, tau / (2.0 * link.total_var()))?,
        Regime::Rician => {
            let b = (2.0 * tau / (p.omega_s + s2w)).sqrt();
            marcum_q(spec.n, p.mu_z.sqrt(), b)?
        }
        Regime::Hoyt => {
            let t1 = p.omega_z * (1.0 + p.b) + s2w;
            let t2 = p.omega_z * (1.0 - p.b) + s2w;
            match hoyt {
                HoytForm::Exact => 1.0 - two_scale_gamma_cdf(0.5 * n, t1, t2, tau)?,
                HoytForm::Literal => {
                    1.0 - specfun::reg_lower_gamma(0.5 * n, tau / t1)?
                        - specfun::reg_lower_gamma(0.5 * n, tau / t2)?
                }
            }
        }
    };
    if hoyt == HoytForm::Literal && p.regime == Regime::Hoyt {
        return Ok(LocalOperatingPoint {
            pf: spec.target_pf,
            pd: raw,
            pm: 1.0 - raw,
            model: PdModel::ComplexRegime,
            clamp_flag: !(0.0..=1.0).contains(&raw),
        });
    }
    Ok(LocalOperatingPoint::new(spec.target_pf, raw, PdModel::ComplexRegime))
}

/// Cdf at `tau` of `θ1 G1 + θ2 G2` with `G1, G2 ~ Gamma(k, 1)` independent.
///
/// The larger-scale term is a negative-binomial mixture of unit-scale gammas,
/// so the sum is `θ_min · Gamma(2k + J)` with `J ~ NB(k, 1 - θ_min/θ_max)`.
pub fn two_scale_gamma_cdf(k: f64, theta1: f64, theta2: f64, tau: f64) -> Result<f64> {
    let (lo, hi) = if theta1 <= theta2 { (theta1, theta2) } else { (theta2, theta1) };
    let z = tau / lo;
    let q = 1.0 - lo / hi;
    let mut w = (k * (lo / hi).ln()).exp();
    let mode = ((k - 1.0) * q / (1.0 - q)).max(0.0);
    let mut acc = 0.0;
    let mut j = 0.0;
    while j < 1e7 {
        acc += w * specfun::reg_lower_gamma(2.0 * k + j, z)?;
        if j > mode && w < 1e-18 {
            break;
        }
        w *= (k + j) * q / (j + 1.0);
        j += 1.0;
    }
    Ok(acc.clamp(0.0, 1.0))
}

/// Analytic model choices for local ROC curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PdRoute {
    /// Φ2 series, any `m`.
    #[default]
    Phi2,
    /// Specialized closed form where one exists (m = 1/2 numeric, 1, 2),
    /// otherwise Φ2.
    Closed,
    /// Gaussian approximation of the envelope.
    Complex,
    /// Direct quadrature of the H1 density.
    Numeric,
}

/// Detection probability through the selected analytic route.
pub fn pd_with(route: PdRoute, link: &FadingLink, spec: &DetectorSpec) -> Result<LocalOperatingPoint> {
    match route {
        PdRoute::Phi2 => pd_general_m(link, spec),
        PdRoute::Closed => {
            if link.m == 1.0 {
                pd_m_one(link, spec)
            } else if link.m == 2.0 && spec.n >= 2 {
                pd_m_two(link, spec)
            } else if link.m == 0.5 {
                pd_m_half(link, spec, MHalfRoute::Numeric)
            } else {
                pd_general_m(link, spec)
            }
        }
        PdRoute::Complex => pd_complex_regime(link, spec),
        PdRoute::Numeric => pd_numeric(link, spec, QuadOptions::tol(1e-11, 1e-11)),
    }
}

fn check_grid(pf_grid: &[f64]) -> Result<()> {
    if pf_grid.is_empty() {
        return Err(domain("local_roc", "empty p_f grid"));
    }
    if pf_grid.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
        return Err(domain("local_roc", "p_f grid values must lie in (0,1)"));
    }
    if pf_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain("local_roc", "p_f grid must be strictly increasing"));
    }
    Ok(())
}

/// Analytic ROC `(p_f, p_d)` over `pf_grid`, re-deriving the threshold at
/// each grid point.
pub fn local_roc(link: &FadingLink, n: u32, route: PdRoute, pf_grid: &[f64]) -> Result<RocCurve> {
    check_grid(pf_grid)?;
    let points = pf_grid
        .iter()
        .map(|&pf| {
            let spec = DetectorSpec::from_pf(n, link.noise_sigma2, pf)?;
            let op = pd_with(route, link, &spec)?;
            Ok(RocPoint {
                pf,
                pd: op.pd,
                ci95: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RocCurve {
        points,
        provenance: Provenance::Analytic {
            model: format!("{route:?}").to_lowercase(),
        },
    })
}

/// Complementary ROC `(p_f, p_m)`.
pub fn local_croc(link: &FadingLink, n: u32, route: PdRoute, pf_grid: &[f64]) -> Result<RocCurve> {
    Ok(local_roc(link, n, route, pf_grid)?.complementary())
}
