use super::gamma::{gamma_pq, ln_gamma_pos};
use crate::error::domain;
use crate::Result;

/// Generalized Marcum Q function `Q_N(a,b)` for integer order `N ≥ 1`.
///
/// Uses the Poisson mixture `Σ_k e^{-λ} λ^k/k! · Q(N+k, b²/2)` with
/// `λ = a²/2`, summed outward from the Poisson mode until the weights are
/// negligible on both sides.
pub fn marcum_q(order: u32, a: f64, b: f64) -> Result<f64> {
    if order == 0 {
        return Err(domain("marcum_q", "order must be at least 1"));
    }
    if !(a >= 0.0 && b >= 0.0) || !a.is_finite() {
        return Err(domain("marcum_q", format!("arguments a = {a}, b = {b} must be non-negative")));
    }
    if b == 0.0 {
        return Ok(1.0);
    }
    if b.is_infinite() {
        return Ok(0.0);
    }
    let n = order as f64;
    let x = 0.5 * b * b;
    let lam = 0.5 * a * a;
    if lam == 0.0 {
        return Ok(gamma_pq(n, x).1);
    }
    let mode = lam.floor();
    let w0 = (-lam + mode * lam.ln() - ln_gamma_pos(mode + 1.0)).exp();
    let cutoff = 1e-18;

    let mut sum = w0 * gamma_pq(n + mode, x).1;
    let mut w = w0;
    let mut k = mode;
    loop {
        w *= lam / (k + 1.0);
        k += 1.0;
        if w < cutoff * w0 {
            break;
        }
        sum += w * gamma_pq(n + k, x).1;
    }
    let mut w = w0;
    let mut k = mode;
    while k > 0.0 {
        w *= k / lam;
        k -= 1.0;
        if w < cutoff * w0 {
            break;
        }
        sum += w * gamma_pq(n + k, x).1;
    }
    Ok(sum.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_values() {
        assert_eq!(marcum_q(3, 1.2, 0.0).unwrap(), 1.0);
        let v = marcum_q(1, 0.0, 2.0).unwrap();
        assert!((v - (-2.0f64).exp()).abs() < 1e-15);
        assert!(marcum_q(0, 1.0, 1.0).is_err());
    }

    #[test]
    fn first_order_closed_form_at_equal_arguments() {
        // Q_1(a,a) = (1 + e^{-a^2} I_0(a^2)) / 2
        let a: f64 = 1.5;
        let z = a * a;
        let mut i0 = 0.0;
        let mut t = 1.0;
        for k in 0..60 {
            if k > 0 {
                t *= (z / 2.0) * (z / 2.0) / ((k * k) as f64);
            }
            i0 += t;
        }
        let expect = 0.5 * (1.0 + (-z).exp() * i0);
        assert!((marcum_q(1, a, a).unwrap() - expect).abs() < 1e-13);
    }
}
