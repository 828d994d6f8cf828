use super::SeriesResult;
use crate::error::domain;
use crate::Result;

/// Truncation controls shared by the hypergeometric series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    pub max_terms: usize,
    /// Stop once `|term| < stop_rel * |partial sum|` for three consecutive terms.
    pub stop_rel: f64,
    /// Relative accuracy requested of the result; `converged` requires the
    /// error estimate to be within it.
    pub rel_tol: f64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            max_terms: 10_000,
            stop_rel: 1e-15,
            rel_tol: 1e-10,
        }
    }
}

fn is_nonpositive_integer(b: f64) -> bool {
    b <= 0.0 && b.fract() == 0.0
}

/// Plain ascending series of `1F1(a;b;x)`, without the Kummer transform.
pub fn kummer_1f1_series(a: f64, b: f64, x: f64, opts: SeriesOptions) -> Result<SeriesResult> {
    if is_nonpositive_integer(b) {
        return Err(domain("kummer_1f1", format!("b = {b} is a non-positive integer")));
    }
    if !(a.is_finite() && b.is_finite() && x.is_finite()) {
        return Err(domain("kummer_1f1", "non-finite argument"));
    }
    Ok(ascending(a, b, x, opts))
}

fn ascending(a: f64, b: f64, x: f64, opts: SeriesOptions) -> SeriesResult {
    let mut sum = 1.0f64;
    let mut abs_sum = 1.0f64;
    let mut term = 1.0f64;
    let mut small = 0usize;
    let mut ratio = 0.0f64;
    let mut k = 0usize;
    let mut stopped = false;
    while k < opts.max_terms {
        let kf = k as f64;
        let next = term * (a + kf) / (b + kf) * x / (kf + 1.0);
        k += 1;
        if term != 0.0 {
            ratio = (next / term).abs();
        }
        term = next;
        sum += term;
        abs_sum += term.abs();
        if term == 0.0 {
            // Terminating series (a a non-positive integer) or x = 0.
            stopped = true;
            ratio = 0.0;
            break;
        }
        if term.abs() < opts.stop_rel * sum.abs() {
            small += 1;
            if small >= 3 {
                stopped = true;
                break;
            }
        } else {
            small = 0;
        }
    }
    let tail = if stopped && ratio < 1.0 {
        term.abs() * ratio / (1.0 - ratio)
    } else {
        f64::INFINITY
    };
    let est = tail + f64::EPSILON * abs_sum;
    SeriesResult {
        value: sum,
        terms_used: k + 1,
        converged: stopped && est <= opts.rel_tol * sum.abs(),
        est_abs_error: est,
    }
}

/// Kummer's confluent hypergeometric function `1F1(a;b;x)`.
///
/// Non-negative `x` uses the ascending series directly. For negative `x` the
/// series alternates and cancels, so `e^x 1F1(b-a;b;-x)` is summed instead.
pub fn kummer_1f1(a: f64, b: f64, x: f64) -> Result<SeriesResult> {
    let opts = SeriesOptions::default();
    if x >= 0.0 {
        return kummer_1f1_series(a, b, x, opts);
    }
    let inner = kummer_1f1_series(b - a, b, -x, opts)?;
    let scale = x.exp();
    Ok(SeriesResult {
        value: inner.value * scale,
        est_abs_error: inner.est_abs_error * scale,
        ..inner
    })
}

/// Humbert's confluent function
/// `Φ2(b1,b2;c;x,y) = Σ_{i,j} (b1)_i (b2)_j x^i y^j / ((c)_{i+j} i! j!)`.
///
/// Summed over `i` as `Σ_i (b1)_i x^i / ((c)_i i!) · 1F1(b2; c+i; y)`.
pub fn humbert_phi2(b1: f64, b2: f64, c: f64, x: f64, y: f64) -> Result<SeriesResult> {
    if is_nonpositive_integer(c) {
        return Err(domain("humbert_phi2", format!("c = {c} is a non-positive integer")));
    }
    if !(b1.is_finite() && b2.is_finite() && x.is_finite() && y.is_finite()) {
        return Err(domain("humbert_phi2", "non-finite argument"));
    }
    let opts = SeriesOptions::default();
    let mut coef = 1.0f64;
    let mut sum = 0.0f64;
    let mut err = 0.0f64;
    let mut small = 0usize;
    let mut inner_ok = true;
    let mut last = 0.0f64;
    let mut ratio = 0.0f64;
    let mut stopped = false;
    let mut i = 0usize;
    while i < opts.max_terms {
        let inner = kummer_1f1(b2, c + i as f64, y)?;
        inner_ok &= inner.converged;
        let term = coef * inner.value;
        if last != 0.0 {
            ratio = (term / last).abs();
        }
        last = term;
        sum += term;
        err += coef.abs() * inner.est_abs_error;
        i += 1;
        let fi = (i - 1) as f64;
        coef *= (b1 + fi) * x / ((c + fi) * (fi + 1.0));
        if coef == 0.0 {
            stopped = true;
            ratio = 0.0;
            break;
        }
        if term.abs() < opts.stop_rel * sum.abs() {
            small += 1;
            if small >= 3 {
                stopped = true;
                break;
            }
        } else {
            small = 0;
        }
    }
    if stopped && ratio < 1.0 {
        err += last.abs() * ratio / (1.0 - ratio);
    } else {
        err = f64::INFINITY;
    }
    Ok(SeriesResult {
        value: sum,
        terms_used: i,
        converged: stopped && inner_ok && err <= 1e-9 * sum.abs(),
        est_abs_error: err,
    })
}
