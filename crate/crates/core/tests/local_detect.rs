use ccss_core::channels::complex_regime_with_phase;
use ccss_core::local_detect::*;
use ccss_core::simkit::{simulate_energies, Hypothesis, SensingModel};
use ccss_core::specfun::marcum_q;
use ccss_core::FadingLink;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

fn link(m: f64, db: f64) -> FadingLink {
    FadingLink::from_snr_db(m, db, 1.0).unwrap()
}

/// `1 - Σ_i NB(i; m, α) P(N+1+i, x)` with statrs gamma functions.
fn mixture_oracle(m: f64, n: u32, alpha: f64, x: f64) -> f64 {
    let mut cdf = 0.0;
    for i in 0..20_000u32 {
        let i = i as f64;
        let lw = ln_gamma(m + i) - ln_gamma(m) - ln_gamma(i + 1.0) + m * (1.0 - alpha).ln() + i * alpha.ln();
        let w = lw.exp();
        cdf += w * gamma_lr(n as f64 + 1.0 + i, x);
        if i > 50.0 && w < 1e-18 {
            break;
        }
    }
    1.0 - cdf
}

/// Average of the conditional tail `Q_{N+1}(r/σ_w, √(2x))` over the
/// envelope density, composite Simpson on a truncated range.
fn envelope_oracle(l: &FadingLink, n: u32, x: f64) -> f64 {
    let sw = l.noise_sigma2.sqrt();
    let s2 = 2.0 * l.sigma2;
    let lg = ln_gamma(l.m);
    let pdf = |r: f64| {
        if r == 0.0 && l.m > 0.5 {
            return 0.0;
        }
        let pow = if l.m == 0.5 { 0.0 } else { (2.0 * l.m - 1.0) * r.ln() };
        (std::f64::consts::LN_2 + pow - r * r / s2 - lg - l.m * s2.ln()).exp()
    };
    let hi = (s2 * (l.m + 40.0 * l.m.sqrt() + 60.0)).sqrt();
    let steps = 4000;
    let h = hi / steps as f64;
    let f = |r: f64| pdf(r) * marcum_q(n + 1, r / sw, (2.0 * x).sqrt()).unwrap();
    let mut acc = f(0.0) + f(hi);
    for i in 1..steps {
        acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

#[test]
fn threshold_round_trip() {
    for n in [10, 20] {
        for pf in [0.01, 0.03, 0.1] {
            let tau = threshold_from_pf(n, 1.0, pf).unwrap();
            assert!((pf_from_threshold(n, 1.0, tau).unwrap() - pf).abs() < 1e-9);
            assert!((gamma_ur(n as f64, tau / 2.0) - pf).abs() < 1e-9);
        }
    }
}

#[test]
fn phi2_matches_closed_forms_on_threshold_grid() {
    for (m, db) in [(1.0, 0.0), (1.0, 10.0), (2.0, 4.0), (2.0, 20.0)] {
        let l = link(m, db);
        for i in 0..20 {
            let tau = 10.0 + 4.0 * i as f64;
            let spec = DetectorSpec::from_threshold(20, 1.0, tau).unwrap();
            let a = pd_general_m(&l, &spec).unwrap().pd;
            let b = if m == 1.0 { pd_m_one(&l, &spec) } else { pd_m_two(&l, &spec) }.unwrap().pd;
            assert!((a - b).abs() < 1e-7, "m={m} {db} dB tau={tau}: {a} vs {b}");
        }
    }
}

#[test]
fn phi2_matches_gamma_mixture_for_other_m() {
    for m in [0.5, 0.75, 1.5, 3.0, 5.5] {
        for db in [-5.0, 3.0, 15.0] {
            let l = link(m, db);
            let spec = DetectorSpec::from_pf(10, 1.0, 0.05).unwrap();
            let got = pd_general_m(&l, &spec).unwrap().pd;
            let want = mixture_oracle(m, 10, l.alpha(), spec.normalized_threshold());
            assert!((got - want).abs() < 1e-9, "m={m} {db} dB: {got} vs {want}");
        }
    }
}

#[test]
fn envelope_average_oracle_m2() {
    let l = link(2.0, 10.0);
    let spec = DetectorSpec::from_pf(10, 1.0, 0.1).unwrap();
    let want = envelope_oracle(&l, 10, spec.normalized_threshold());
    for route in [PdRoute::Phi2, PdRoute::Closed, PdRoute::Numeric] {
        let got = pd_with(route, &l, &spec).unwrap().pd;
        assert!((got - want).abs() < 1e-8, "{route:?}: {got} vs {want}");
    }
}

#[test]
fn m_half_numeric_route() {
    let l = link(0.5, 4.0);
    let spec = DetectorSpec::from_pf(10, 1.0, 0.1).unwrap();
    let want = envelope_oracle(&l, 10, spec.normalized_threshold());
    let got = pd_m_half(&l, &spec, MHalfRoute::Numeric).unwrap().pd;
    assert!((got - want).abs() < 1e-7, "{got} vs {want}");
}

#[test]
fn vanishing_snr_limit_is_one_extra_degree_of_freedom() {
    let spec = DetectorSpec::from_pf(10, 1.0, 0.05).unwrap();
    let x = spec.normalized_threshold();
    for m in [0.5, 1.0, 2.0] {
        let l = FadingLink::new(m, 1e-12, 1.0).unwrap();
        let pd = pd_general_m(&l, &spec).unwrap().pd;
        assert!((pd - gamma_ur(11.0, x)).abs() < 1e-9);
        assert!(pd > 0.05 + 0.02);
    }
}

#[test]
fn printed_forms_are_not_probabilities() {
    let spec = DetectorSpec::from_pf(10, 1.0, 0.1).unwrap();
    let l2 = link(2.0, 10.0);
    let lit = pd_m_two_literal(&l2, &spec).unwrap();
    let good = pd_m_two(&l2, &spec).unwrap().pd;
    assert!(lit > 1.0 && good < 1.0);
    let printed = pd_general_m_as_printed(&l2, &spec).unwrap();
    assert!((printed - good).abs() > 0.05);
    let lh = link(0.5, 4.0);
    let lit_half = pd_m_half(&lh, &spec, MHalfRoute::Literal).unwrap();
    assert!(lit_half.clamp_flag && lit_half.pd.abs() > 10.0);
}

#[test]
fn complex_model_agrees_only_at_high_snr() {
    let gap = |db: f64| {
        let l = link(2.0, db);
        ccss_core::roc::default_pf_grid()
            .into_iter()
            .map(|pf| {
                let spec = DetectorSpec::from_pf(10, 1.0, pf).unwrap();
                (pd_m_two(&l, &spec).unwrap().pd - pd_complex_regime(&l, &spec).unwrap().pd).abs()
            })
            .fold(0.0, f64::max)
    };
    assert!(gap(20.0) <= 0.02);
    assert!(gap(0.0) > 0.05);
}

#[test]
fn rician_noncentrality_is_phase_free() {
    let l = link(2.0, 10.0);
    // Ω_z = 2mσ², |μ|² = Ω_z √((m-1)/m), Ω_s = 2σ²(m - √(m²-m)).
    let s2 = l.sigma2;
    let omega = 4.0 * s2;
    let want = 20.0 * omega * 0.5f64.sqrt() / (0.5 * 2.0 * s2 * (2.0 - 2f64.sqrt()) + 1.0);
    for phi in [0.0, 0.4, 2.0, -1.1] {
        let p = complex_regime_with_phase(&l, 20, phi).unwrap();
        assert!((p.mu_z - want).abs() < 1e-9 * want);
    }
    assert!((want - 71.9897).abs() < 1e-4);
}

#[test]
fn hoyt_exact_matches_gaussian_component_simulation() {
    let l = link(0.6, 6.0);
    let n = 10;
    let spec = DetectorSpec::from_pf(n, 1.0, 0.1).unwrap();
    let p = complex_regime_with_phase(&l, n, 0.0).unwrap();
    let vi = 0.5 * p.omega_z * (1.0 + p.b) + 1.0;
    let vq = 0.5 * p.omega_z * (1.0 - p.b) + 1.0;
    let (gi, gq) = (Normal::new(0.0, vi.sqrt()).unwrap(), Normal::new(0.0, vq.sqrt()).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let trials = 200_000;
    let hits = (0..trials)
        .filter(|_| {
            let t: f64 = (0..n).map(|_| gi.sample(&mut rng).powi(2) + gq.sample(&mut rng).powi(2)).sum();
            t > spec.tau
        })
        .count();
    let est = hits as f64 / trials as f64;
    let ci = 1.96 * (est * (1.0 - est) / trials as f64).sqrt();
    let exact = pd_complex_regime(&l, &spec).unwrap().pd;
    assert!((exact - est).abs() < ci + 0.002, "{exact} vs {est}");
    let lit = pd_complex_regime_with(&l, &DetectorSpec::from_pf(n, 1.0, 1e-6).unwrap(), HoytForm::Literal).unwrap();
    assert!(lit.pd < 0.0);
}

#[test]
fn snapshot_simulation_matches_closed_forms() {
    for (m, db) in [(1.0, 4.0), (2.0, 0.0)] {
        let l = link(m, db);
        let spec = DetectorSpec::from_pf(10, 1.0, 0.1).unwrap();
        let e = simulate_energies(&l, 10, SensingModel::Snapshot, Hypothesis::H1, 200_000, 3, 1).unwrap();
        let est = e.iter().filter(|&&t| t > spec.normalized_threshold()).count() as f64 / e.len() as f64;
        let ci = 1.96 * (est * (1.0 - est) / e.len() as f64).sqrt();
        let pd = pd_with(PdRoute::Closed, &l, &spec).unwrap().pd;
        assert!((pd - est).abs() < ci + 0.002, "m={m}: {pd} vs {est}");
    }
}

#[test]
fn roc_and_croc() {
    let grid = ccss_core::roc::linear_grid(0.05, 0.95, 0.05);
    let r = local_roc(&link(1.0, 5.0), 10, PdRoute::Phi2, &grid).unwrap();
    assert!(r.is_monotone());
    let c = local_croc(&link(1.0, 5.0), 10, PdRoute::Phi2, &grid).unwrap();
    for (a, b) in r.points.iter().zip(&c.points) {
        assert!((a.pd + b.pd - 1.0).abs() < 1e-15);
    }
    assert!(local_roc(&link(1.0, 5.0), 10, PdRoute::Phi2, &[0.2, 0.1]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn detection_improves_with_snr(m in 0.5f64..4.0, db in -10.0f64..15.0, pf in 0.01f64..0.5) {
        let spec = DetectorSpec::from_pf(10, 1.0, pf).unwrap();
        let lo = pd_general_m(&link(m, db), &spec).unwrap().pd;
        let hi = pd_general_m(&link(m, db + 2.0), &spec).unwrap().pd;
        prop_assert!(hi >= lo - 1e-12);
        prop_assert!(lo >= pf);
    }

    #[test]
    fn detection_falls_with_threshold(m in 0.5f64..4.0, db in -5.0f64..15.0, tau in 5.0f64..60.0) {
        let l = link(m, db);
        let a = pd_general_m(&l, &DetectorSpec::from_threshold(10, 1.0, tau).unwrap()).unwrap().pd;
        let b = pd_general_m(&l, &DetectorSpec::from_threshold(10, 1.0, tau + 1.0).unwrap()).unwrap().pd;
        prop_assert!(b <= a + 1e-12);
    }
}
