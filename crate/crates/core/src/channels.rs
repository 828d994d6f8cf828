//! Nakagami-m fading links, AWGN, and the approximate complex-envelope
//! parameters used for the regime detection probabilities.

use crate::error::domain;
use crate::Result;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

/// Statistics of one hop (PU→SU sensing or SU→FC reporting).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingLink {
    /// Fading severity, `m ≥ 1/2`.
    pub m: f64,
    /// Per-component scale σ² of the envelope; `E[h²] = 2mσ²`.
    pub sigma2: f64,
    /// Per-component noise variance.
    pub noise_sigma2: f64,
}

impl FadingLink {
    pub fn new(m: f64, sigma2: f64, noise_sigma2: f64) -> Result<Self> {
        if !(m >= 0.5) || !m.is_finite() {
            return Err(domain("FadingLink", format!("fading severity m = {m} must be at least 1/2")));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(domain("FadingLink", format!("scale sigma2 = {sigma2} must be positive")));
        }
        if !(noise_sigma2 > 0.0) || !noise_sigma2.is_finite() {
            return Err(domain(
                "FadingLink",
                format!("noise variance {noise_sigma2} must be positive"),
            ));
        }
        Ok(Self {
            m,
            sigma2,
            noise_sigma2,
        })
    }

    /// Link with average SNR `ρ̄ = mσ²/σ_noise²` given in dB.
    pub fn from_snr_db(m: f64, snr_db: f64, noise_sigma2: f64) -> Result<Self> {
        let rho = db_to_linear(snr_db);
        Self::new(m, rho * noise_sigma2 / m, noise_sigma2)
    }

    /// Average SNR `ρ̄ = mσ²/σ_noise²`.
    pub fn avg_snr(&self) -> f64 {
        self.m * self.sigma2 / self.noise_sigma2
    }

    pub fn avg_snr_db(&self) -> f64 {
        linear_to_db(self.avg_snr())
    }

    /// `α = σ²/(σ²+σ_noise²) = ρ̄/(m+ρ̄)`.
    pub fn alpha(&self) -> f64 {
        self.sigma2 / (self.sigma2 + self.noise_sigma2)
    }

    /// `A = σ² + σ_noise²`.
    pub fn total_var(&self) -> f64 {
        self.sigma2 + self.noise_sigma2
    }

    /// Mean envelope power `Ω = 2mσ²`.
    pub fn omega(&self) -> f64 {
        2.0 * self.m * self.sigma2
    }

    pub fn envelope_sampler(&self) -> NakagamiSampler {
        NakagamiSampler::new(self)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Returns `(ρ̄, σ²)` for a link of severity `m` at `rho_db` with unit-free
/// noise variance `noise_sigma2`.
pub fn snr_db_roundtrip(rho_db: f64, m: f64, noise_sigma2: f64) -> Result<(f64, f64)> {
    let link = FadingLink::from_snr_db(m, rho_db, noise_sigma2)?;
    Ok((link.avg_snr(), link.sigma2))
}

/// Draws Nakagami envelopes as square roots of gamma-distributed powers with
/// shape `m` and mean `2mσ²`.
#[derive(Debug, Clone, Copy)]
pub struct NakagamiSampler {
    power: Gamma<f64>,
}

impl NakagamiSampler {
    pub fn new(link: &FadingLink) -> Self {
        let power = Gamma::new(link.m, 2.0 * link.sigma2).expect("validated link parameters");
        Self { power }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.power.sample(rng).sqrt()
    }
}

pub fn sample_nakagami_envelope<R: Rng + ?Sized>(link: &FadingLink, rng: &mut R) -> f64 {
    NakagamiSampler::new(link).sample(rng)
}

/// Minimal complex sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Cplx {
    pub re: f64,
    pub im: f64,
}

impl Cplx {
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        Self::new(r * theta.cos(), r * theta.sin())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

impl std::ops::Add for Cplx {
    type Output = Cplx;
    fn add(self, o: Cplx) -> Cplx {
        Cplx::new(self.re + o.re, self.im + o.im)
    }
}

/// Circular complex Gaussian noise with per-component variance `sigma2`.
pub fn sample_awgn<R: Rng + ?Sized>(sigma2: f64, rng: &mut R) -> Cplx {
    let s = sigma2.sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Cplx::new(s * re, s * im)
}

/// Pdf of the Nakagami envelope, `2 c^{2m-1} e^{-c²/2σ²} / (Γ(m) (2σ²)^m)`.
pub fn nakagami_pdf(link: &FadingLink, c: f64) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    let m = link.m;
    let s2 = 2.0 * link.sigma2;
    let ln = std::f64::consts::LN_2 + (2.0 * m - 1.0) * c.ln()
        - c * c / s2
        - crate::specfun::ln_gamma(m).unwrap_or(f64::NAN)
        - m * s2.ln();
    ln.exp()
}

/// Cdf of the Nakagami envelope, `P(m, c²/2σ²)`.
pub fn nakagami_cdf(link: &FadingLink, c: f64) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    crate::specfun::reg_lower_gamma(link.m, c * c / (2.0 * link.sigma2)).unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `1/2 ≤ m < 1`
    Hoyt,
    /// `m = 1`
    Rayleigh,
    /// `m > 1`
    Rician,
}

/// Parameters of the Gaussian approximation of a Nakagami-m signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexRegimeParams {
    pub regime: Regime,
    /// Mean signal power `Ω_z = 2mσ_z²`.
    pub omega_z: f64,
    /// Hoyt shape `b = sqrt((1-m)/m)`; zero outside the Hoyt regime.
    pub b: f64,
    /// Diffuse power `Ω_s = 2σ_z²(m - sqrt(m²-m))`; Rician only.
    pub omega_s: f64,
    pub mu_i: f64,
    pub mu_q: f64,
    /// Non-centrality of the 2N-dof chi-square energy; Rician only.
    pub mu_z: f64,
}

pub fn complex_regime(link: &FadingLink, n: u32) -> Result<ComplexRegimeParams> {
    complex_regime_with_phase(link, n, 0.0)
}

/// As [`complex_regime`], with an explicit phase `φ` of the Rician mean.
pub fn complex_regime_with_phase(link: &FadingLink, n: u32, phi: f64) -> Result<ComplexRegimeParams> {
    if n == 0 {
        return Err(domain("complex_regime", "sample count N must be positive"));
    }
    let m = link.m;
    let omega_z = link.omega();
    let mut p = ComplexRegimeParams {
        regime: Regime::Rayleigh,
        omega_z,
        b: 0.0,
        omega_s: 0.0,
        mu_i: 0.0,
        mu_q: 0.0,
        mu_z: 0.0,
    };
    if m < 1.0 {
        p.regime = Regime::Hoyt;
        p.b = ((1.0 - m) / m).sqrt();
    } else if m > 1.0 {
        p.regime = Regime::Rician;
        let d = ((m - 1.0) / m).sqrt();
        p.omega_s = 2.0 * link.sigma2 * (m - (m * m - m).sqrt());
        let amp = (omega_z * d).sqrt();
        p.mu_i = amp * phi.cos();
        p.mu_q = amp * phi.sin();
        let comp_var = 0.5 * p.omega_s + link.noise_sigma2;
        p.mu_z = n as f64 * (p.mu_i * p.mu_i + p.mu_q * p.mu_q) / comp_var;
    }
    Ok(p)
}
