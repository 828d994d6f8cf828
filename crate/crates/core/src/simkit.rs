//! End-to-end Monte Carlo of the PU → SU → FC chain.
//!
//! Trial `i` under hypothesis `h` draws SU `k` from
//! `stream_rng(derive_seed(seed, h), i, k)`. Trials are cut into fixed
//! chunks, evaluated on a rayon pool and concatenated in order, so every
//! result is bitwise independent of the worker count.

use crate::channels::{sample_awgn, Cplx, FadingLink, NakagamiSampler};
use crate::error::domain;
use crate::fusion::{
    calibrate_threshold, lrt_log_statistic, mrc_weights, BranchStats, Calibration, FusionRule,
};
use crate::local_detect::{pd_with, DetectorSpec, PdRoute};
use crate::rng::{derive_seed, stream_rng};
use crate::sysperf::{poisson_binomial_upper_tail, success_probs, SuccessRoute};
use crate::Result;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const CHUNK: usize = 1024;
pub const MIN_TRIALS: usize = 1000;

/// How the sensing energy is generated under H1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensingModel {
    /// N noise-only samples plus one sample carrying `h e^{jθ}`. Its energy
    /// law is exactly the gamma mixture behind the closed-form `p_d`.
    #[default]
    Snapshot,
    /// One envelope and phase per window, present in all N samples.
    BlockFading,
    /// Fresh envelope and phase in every sample.
    PerSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

impl Hypothesis {
    fn tag(self) -> u64 {
        match self {
            Hypothesis::H0 => 0x4830,
            Hypothesis::H1 => 0x4831,
        }
    }
}

/// Sensing and reporting links of one SU.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuLinks {
    pub sensing: FadingLink,
    pub reporting: FadingLink,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkScenario {
    pub sus: Vec<SuLinks>,
    /// Samples per sensing window.
    pub n: u32,
    pub local_pf: f64,
    pub rule: FusionRule,
    pub system_pf: f64,
    pub seed: u64,
    pub model: SensingModel,
    /// Route for the per-SU `p_d` fed to the LRT.
    pub pd_route: PdRoute,
}

impl NetworkScenario {
    pub fn validate(&self) -> Result<()> {
        if self.sus.is_empty() {
            return Err(domain("NetworkScenario", "at least one SU required"));
        }
        if self.n == 0 {
            return Err(domain("NetworkScenario", "N must be positive"));
        }
        for (name, p) in [("local p_f", self.local_pf), ("system P_F", self.system_pf)] {
            if !(p > 0.0 && p < 1.0) {
                return Err(domain("NetworkScenario", format!("{name} = {p} must lie in (0,1)")));
            }
        }
        if let FusionRule::Counting { j } = self.rule {
            if j > self.sus.len() {
                return Err(domain("NetworkScenario", format!("J = {j} exceeds K = {}", self.sus.len())));
            }
        }
        for s in &self.sus {
            FadingLink::new(s.sensing.m, s.sensing.sigma2, s.sensing.noise_sigma2)?;
            FadingLink::new(s.reporting.m, s.reporting.sigma2, s.reporting.noise_sigma2)?;
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.sus.len()
    }

    /// Derives thresholds and analytic `p_d` once per SU.
    pub fn prepare(&self) -> Result<Prepared> {
        self.validate()?;
        let mut detectors = Vec::with_capacity(self.k());
        let mut branches = Vec::with_capacity(self.k());
        for s in &self.sus {
            let spec = DetectorSpec::from_pf(self.n, s.sensing.noise_sigma2, self.local_pf)?;
            let pd = pd_with(self.pd_route, &s.sensing, &spec)?.pd;
            detectors.push(spec);
            branches.push(BranchStats {
                pd,
                pf: self.local_pf,
                link: s.reporting,
            });
        }
        let reporting: Vec<FadingLink> = self.sus.iter().map(|s| s.reporting).collect();
        Ok(Prepared {
            weights: mrc_weights(&reporting),
            scenario: self.clone(),
            detectors,
            branches,
        })
    }
}

/// A scenario with per-SU quantities derived.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub scenario: NetworkScenario,
    pub detectors: Vec<DetectorSpec>,
    pub branches: Vec<BranchStats>,
    pub weights: Vec<f64>,
}

impl Prepared {
    /// `(p1, p0)` per SU from the closed-form success probabilities.
    pub fn success_probs(&self) -> Result<Vec<(f64, f64)>> {
        self.branches
            .iter()
            .map(|b| success_probs(b.pd, b.pf, &b.link, SuccessRoute::Exact).map(|s| (s.p1, s.p0)))
            .collect()
    }

    /// Analytic `(P_F, P_D)` of the FC counting rule with threshold `k1`.
    pub fn counting_point(&self, k1: usize) -> Result<(f64, f64)> {
        let sp = self.success_probs()?;
        let p1: Vec<f64> = sp.iter().map(|s| s.0).collect();
        let p0: Vec<f64> = sp.iter().map(|s| s.1).collect();
        Ok((poisson_binomial_upper_tail(&p0, k1)?, poisson_binomial_upper_tail(&p1, k1)?))
    }
}

/// One simulated sensing + reporting round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub hypothesis: Hypothesis,
    pub decisions: Vec<i8>,
    pub reports: Vec<f64>,
    /// Statistic of the scenario's fusion rule (`ln L` for the LRT).
    pub statistic: f64,
    pub fc_decision: i8,
}

/// FC statistics of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialStats {
    pub lrt: f64,
    pub egc: f64,
    pub mrc: f64,
    /// Reports with `y ≥ 0`.
    pub k1: u32,
    /// Local decisions equal to `+1`.
    pub local_busy: u32,
}

impl TrialStats {
    pub fn value(&self, rule: &FusionRule) -> f64 {
        match rule {
            FusionRule::Lrt { .. } => self.lrt,
            FusionRule::Egc { .. } => self.egc,
            FusionRule::Mrc { .. } => self.mrc,
            FusionRule::Counting { .. } => self.k1 as f64,
        }
    }

    pub fn decide(&self, rule: &FusionRule) -> i8 {
        let busy = match *rule {
            FusionRule::Lrt { log_lambda } => self.lrt > log_lambda,
            FusionRule::Egc { threshold } => self.egc > threshold,
            FusionRule::Mrc { threshold } => self.mrc > threshold,
            FusionRule::Counting { j } => self.k1 as usize >= j,
        };
        if busy {
            1
        } else {
            -1
        }
    }
}

fn noise_energy<R: Rng + ?Sized>(n: u32, noise_sigma2: f64, rng: &mut R) -> f64 {
    // Σ|w|² over n circular samples with per-component variance σ² is
    // exactly Gamma(n, 2σ²).
    Gamma::new(n as f64, 2.0 * noise_sigma2).expect("n > 0").sample(rng)
}

fn faded<R: Rng + ?Sized>(env: &NakagamiSampler, rng: &mut R) -> Cplx {
    let h = env.sample(rng);
    Cplx::from_polar(h, rng.random_range(0.0..std::f64::consts::TAU))
}

/// Energy `t` of one sensing window.
pub fn sense_energy<R: Rng + ?Sized>(
    link: &FadingLink,
    n: u32,
    model: SensingModel,
    hyp: Hypothesis,
    rng: &mut R,
) -> f64 {
    let s2 = link.noise_sigma2;
    if hyp == Hypothesis::H0 {
        return noise_energy(n, s2, rng);
    }
    let env = link.envelope_sampler();
    match model {
        SensingModel::Snapshot => noise_energy(n, s2, rng) + (faded(&env, rng) + sample_awgn(s2, rng)).norm_sqr(),
        SensingModel::BlockFading => {
            let s = faded(&env, rng);
            (0..n).map(|_| (s + sample_awgn(s2, rng)).norm_sqr()).sum()
        }
        SensingModel::PerSample => (0..n).map(|_| (faded(&env, rng) + sample_awgn(s2, rng)).norm_sqr()).sum(),
    }
}

/// `y = u·h + g` with `h` the reporting envelope and `g ~ N(0, σ_n²)`.
pub fn report<R: Rng + ?Sized>(u: i8, link: &FadingLink, rng: &mut R) -> f64 {
    let h = link.envelope_sampler().sample(rng);
    let g = Normal::new(0.0, link.noise_sigma2.sqrt()).expect("validated").sample(rng);
    u as f64 * h + g
}

fn simulate_su<R: Rng + ?Sized>(prep: &Prepared, k: usize, hyp: Hypothesis, rng: &mut R) -> (i8, f64) {
    let sc = &prep.scenario;
    let t = sense_energy(&sc.sus[k].sensing, sc.n, sc.model, hyp, rng);
    let u = if t > prep.detectors[k].tau { 1 } else { -1 };
    (u, report(u, &sc.sus[k].reporting, rng))
}

fn draw_trial(prep: &Prepared, hyp: Hypothesis, trial: u64) -> (Vec<i8>, Vec<f64>) {
    let seed = derive_seed(prep.scenario.seed, hyp.tag());
    (0..prep.scenario.k())
        .map(|k| simulate_su(prep, k, hyp, &mut stream_rng(seed, trial, k as u64)))
        .unzip()
}

fn stats_of(prep: &Prepared, us: &[i8], ys: &[f64], with_lrt: bool) -> Result<TrialStats> {
    let lrt = if with_lrt {
        lrt_log_statistic(ys, &prep.branches)?
    } else {
        f64::NAN
    };
    Ok(TrialStats {
        lrt,
        egc: crate::fusion::egc_statistic(ys),
        mrc: crate::fusion::mrc_statistic(ys, &prep.weights),
        k1: ys.iter().filter(|&&y| y >= 0.0).count() as u32,
        local_busy: us.iter().filter(|&&u| u > 0).count() as u32,
    })
}

/// Runs trial number `trial` of the scenario.
pub fn run_trial(prep: &Prepared, hyp: Hypothesis, trial: u64) -> Result<TrialOutcome> {
    let (decisions, reports) = draw_trial(prep, hyp, trial);
    let st = stats_of(prep, &decisions, &reports, true)?;
    let rule = prep.scenario.rule;
    Ok(TrialOutcome {
        hypothesis: hyp,
        statistic: st.value(&rule),
        fc_decision: st.decide(&rule),
        decisions,
        reports,
    })
}

/// Same chain driven by a caller-supplied generator, all SUs in turn.
pub fn run_trial_with_rng<R: Rng + ?Sized>(prep: &Prepared, hyp: Hypothesis, rng: &mut R) -> Result<TrialOutcome> {
    let (decisions, reports): (Vec<i8>, Vec<f64>) =
        (0..prep.scenario.k()).map(|k| simulate_su(prep, k, hyp, rng)).unzip();
    let st = stats_of(prep, &decisions, &reports, true)?;
    let rule = prep.scenario.rule;
    Ok(TrialOutcome {
        hypothesis: hyp,
        statistic: st.value(&rule),
        fc_decision: st.decide(&rule),
        decisions,
        reports,
    })
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| domain("simkit", format!("thread pool: {e}")))
}

/// Maps `f` over `0..trials` in fixed chunks on `workers` threads; the
/// output is in trial order.
pub fn partitioned<T, F>(trials: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    let parts: Vec<Vec<T>> = pool(workers)?.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let lo = c * CHUNK;
                let hi = (lo + CHUNK).min(trials);
                (lo..hi).map(|i| f(i as u64)).collect::<Result<Vec<T>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(parts.into_iter().flatten().collect())
}

/// FC statistics for `trials` independent trials. The LRT is skipped
/// (left as NaN) when `with_lrt` is false.
pub fn simulate(prep: &Prepared, hyp: Hypothesis, trials: usize, workers: usize, with_lrt: bool) -> Result<Vec<TrialStats>> {
    partitioned(trials, workers, |i| {
        let (us, ys) = draw_trial(prep, hyp, i);
        stats_of(prep, &us, &ys, with_lrt)
    })
}

/// Normalized energies `t/(2σ_w²)` of a single detector.
pub fn simulate_energies(
    link: &FadingLink,
    n: u32,
    model: SensingModel,
    hyp: Hypothesis,
    trials: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<f64>> {
    let seed = derive_seed(seed, hyp.tag());
    let scale = 2.0 * link.noise_sigma2;
    partitioned(trials, workers, |i| {
        Ok(sense_energy(link, n, model, hyp, &mut stream_rng(seed, i, 0)) / scale)
    })
}

/// Frequency estimate with a normal-approximation 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithCI {
    pub p: f64,
    pub trials: usize,
    pub ci95: f64,
}

impl EstimateWithCI {
    pub fn from_counts(hits: usize, trials: usize) -> Self {
        let p = hits as f64 / trials as f64;
        Self {
            p,
            trials,
            ci95: 1.96 * (p * (1.0 - p) / trials as f64).sqrt(),
        }
    }

    /// Whether `reference` lies within the half-width plus `slack`.
    pub fn agrees(&self, reference: f64, slack: f64) -> bool {
        (self.p - reference).abs() <= self.ci95 + slack
    }
}

/// Fraction of trials satisfying `pred`.
pub fn estimate<F>(
    prep: &Prepared,
    hyp: Hypothesis,
    trials: usize,
    workers: usize,
    with_lrt: bool,
    pred: F,
) -> Result<EstimateWithCI>
where
    F: Fn(&TrialStats) -> bool,
{
    if trials < MIN_TRIALS {
        return Err(domain("estimate", format!("{trials} trials, at least {MIN_TRIALS} required")));
    }
    let s = simulate(prep, hyp, trials, workers, with_lrt)?;
    Ok(EstimateWithCI::from_counts(s.iter().filter(|t| pred(t)).count(), trials))
}

pub fn fraction_above(samples: &[f64], threshold: f64) -> EstimateWithCI {
    EstimateWithCI::from_counts(samples.iter().filter(|&&v| v > threshold).count(), samples.len())
}

/// Calibrates the FC threshold of `rule`'s statistic on H0 trials.
pub fn calibrate_lambda(prep: &Prepared, rule: &FusionRule, target_pf: f64, trials: usize, workers: usize) -> Result<Calibration> {
    let h0 = simulate(prep, Hypothesis::H0, trials, workers, matches!(rule, FusionRule::Lrt { .. }))?;
    let vals: Vec<f64> = h0.iter().map(|t| t.value(rule)).collect();
    calibrate_threshold(&vals, target_pf, derive_seed(prep.scenario.seed, 0xCA1B))
}

/// One row of a local ROC sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalRocRow {
    pub pf: f64,
    pub tau: f64,
    pub pd_analytic: f64,
    pub pd_complex_model: f64,
    pub pd_mc: f64,
    pub mc_ci: f64,
}

/// Local ROC for one detector: analytic route, complex-envelope model and
/// Monte Carlo with the threshold re-derived at each grid point.
#[allow(clippy::too_many_arguments)]
pub fn experiment_local_roc(
    link: &FadingLink,
    n: u32,
    pf_grid: &[f64],
    route: PdRoute,
    model: SensingModel,
    trials: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<LocalRocRow>> {
    let energies = if trials > 0 {
        simulate_energies(link, n, model, Hypothesis::H1, trials, seed, workers)?
    } else {
        Vec::new()
    };
    pf_grid
        .iter()
        .map(|&pf| {
            let spec = DetectorSpec::from_pf(n, link.noise_sigma2, pf)?;
            let x = spec.normalized_threshold();
            let (pd_mc, mc_ci) = if energies.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                let e = fraction_above(&energies, x);
                (e.p, e.ci95)
            };
            Ok(LocalRocRow {
                pf,
                tau: spec.tau,
                pd_analytic: pd_with(route, link, &spec)?.pd,
                pd_complex_model: pd_with(PdRoute::Complex, link, &spec)?.pd,
                pd_mc,
                mc_ci,
            })
        })
        .collect()
}

/// One row of a system ROC sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemRocRow {
    pub rule: String,
    pub pf_target: f64,
    pub threshold: f64,
    /// Closed-form value where one exists (counting rule), else NaN.
    pub pf_analytic: f64,
    pub pd_analytic: f64,
    pub pf_mc: f64,
    pub pd_mc: f64,
    pub pd_ci: f64,
}

/// Rules compared by [`experiment_system_roc`].
pub const ROC_RULES: [&str; 3] = ["lrt", "egc", "mrc"];

fn rule_with_threshold(name: &str, thr: f64) -> FusionRule {
    match name {
        "lrt" => FusionRule::Lrt { log_lambda: thr },
        "egc" => FusionRule::Egc { threshold: thr },
        _ => FusionRule::Mrc { threshold: thr },
    }
}

/// System ROC: LRT, EGC and MRC thresholds calibrated on H0 trials at each
/// `P_F` grid point, then `P_D` measured on H1 trials; followed by every
/// counting-rule threshold with its closed form.
pub fn experiment_system_roc(prep: &Prepared, pf_grid: &[f64], trials: usize, workers: usize) -> Result<Vec<SystemRocRow>> {
    let h0 = simulate(prep, Hypothesis::H0, trials, workers, true)?;
    let h1 = simulate(prep, Hypothesis::H1, trials, workers, true)?;
    let mut rows = Vec::new();
    for name in ROC_RULES {
        let probe = rule_with_threshold(name, 0.0);
        let v0: Vec<f64> = h0.iter().map(|t| t.value(&probe)).collect();
        let v1: Vec<f64> = h1.iter().map(|t| t.value(&probe)).collect();
        for (i, &pf) in pf_grid.iter().enumerate() {
            let cal = calibrate_threshold(&v0, pf, derive_seed(prep.scenario.seed, 0xCA1B + i as u64))?;
            let pd = fraction_above(&v1, cal.threshold);
            rows.push(SystemRocRow {
                rule: name.to_string(),
                pf_target: pf,
                threshold: cal.threshold,
                pf_analytic: f64::NAN,
                pd_analytic: f64::NAN,
                pf_mc: cal.achieved,
                pd_mc: pd.p,
                pd_ci: pd.ci95,
            });
        }
    }
    let k = prep.scenario.k();
    for k1 in (0..=k).rev() {
        let (pf_a, pd_a) = prep.counting_point(k1)?;
        let pf = EstimateWithCI::from_counts(h0.iter().filter(|t| t.k1 as usize >= k1).count(), trials);
        let pd = EstimateWithCI::from_counts(h1.iter().filter(|t| t.k1 as usize >= k1).count(), trials);
        rows.push(SystemRocRow {
            rule: format!("counting_{k1}"),
            pf_target: f64::NAN,
            threshold: k1 as f64,
            pf_analytic: pf_a,
            pd_analytic: pd_a,
            pf_mc: pf.p,
            pd_mc: pd.p,
            pd_ci: pd.ci95,
        });
    }
    Ok(rows)
}

/// Cooperative versus single-SU detection as the mean sensing SNR moves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PdVsSnrRow {
    pub mean_snr_db: f64,
    /// One SU at the mean SNR with local `p_f` equal to the system `P_F`.
    pub pd_single: f64,
    pub pd_coop_mc: f64,
    pub pd_coop_ci: f64,
    pub pf_coop_mc: f64,
}

/// Shifts every SU's sensing SNR (in dB) by `shift_db`.
pub fn shift_sensing_snr(sc: &NetworkScenario, shift_db: f64) -> Result<NetworkScenario> {
    let mut out = sc.clone();
    for s in &mut out.sus {
        s.sensing = FadingLink::from_snr_db(s.sensing.m, s.sensing.avg_snr_db() + shift_db, s.sensing.noise_sigma2)?;
    }
    Ok(out)
}

pub fn mean_sensing_snr_db(sc: &NetworkScenario) -> f64 {
    sc.sus.iter().map(|s| s.sensing.avg_snr_db()).sum::<f64>() / sc.k() as f64
}

/// For each target mean (dB), shifts the template's sensing vector to that
/// mean, calibrates the scenario rule's threshold at `system_pf` and
/// measures `P_D`. Calibration and measurement use disjoint trial streams.
pub fn experiment_pd_vs_snr(template: &NetworkScenario, means_db: &[f64], trials: usize, workers: usize) -> Result<Vec<PdVsSnrRow>> {
    let base = mean_sensing_snr_db(template);
    means_db
        .iter()
        .map(|&mean| {
            let sc = shift_sensing_snr(template, mean - base)?;
            let prep = sc.prepare()?;
            let rule = sc.rule;
            let with_lrt = matches!(rule, FusionRule::Lrt { .. });
            let probe: Vec<f64> = simulate(&prep, Hypothesis::H0, trials, workers, with_lrt)?
                .iter()
                .map(|t| t.value(&rule))
                .collect();
            let cal = calibrate_threshold(&probe, sc.system_pf, derive_seed(sc.seed, 0xCA1B))?;
            let thr_rule = match rule {
                FusionRule::Lrt { .. } => FusionRule::Lrt { log_lambda: cal.threshold },
                FusionRule::Egc { .. } => FusionRule::Egc { threshold: cal.threshold },
                FusionRule::Mrc { .. } => FusionRule::Mrc { threshold: cal.threshold },
                c @ FusionRule::Counting { .. } => c,
            };
            let fresh = Prepared {
                scenario: NetworkScenario {
                    seed: derive_seed(sc.seed, 0xF2E5),
                    ..sc.clone()
                },
                ..prep.clone()
            };
            let h1 = simulate(&fresh, Hypothesis::H1, trials, workers, with_lrt)?;
            let h0 = simulate(&fresh, Hypothesis::H0, trials, workers, with_lrt)?;
            let pd = EstimateWithCI::from_counts(h1.iter().filter(|t| t.decide(&thr_rule) > 0).count(), trials);
            let pf = EstimateWithCI::from_counts(h0.iter().filter(|t| t.decide(&thr_rule) > 0).count(), trials);
            let single_link = FadingLink::from_snr_db(sc.sus[0].sensing.m, mean, sc.sus[0].sensing.noise_sigma2)?;
            let spec = DetectorSpec::from_pf(sc.n, single_link.noise_sigma2, sc.system_pf)?;
            Ok(PdVsSnrRow {
                mean_snr_db: mean,
                pd_single: pd_with(sc.pd_route, &single_link, &spec)?.pd,
                pd_coop_mc: pd.p,
                pd_coop_ci: pd.ci95,
                pf_coop_mc: pf.p,
            })
        })
        .collect()
}

/// `P_TOT` against the vote threshold `l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LSweepRow {
    pub l: usize,
    pub p_d: f64,
    pub p_f: f64,
    pub p_tot: f64,
    pub p_tot_mc: f64,
}

/// Counting-rule sweep over `l ∈ 1..=K`. With `trials = 0` the Monte Carlo
/// column is NaN.
pub fn experiment_l_sweep(prep: &Prepared, trials: usize, workers: usize) -> Result<Vec<LSweepRow>> {
    let (h0, h1) = if trials > 0 {
        (
            simulate(prep, Hypothesis::H0, trials, workers, false)?,
            simulate(prep, Hypothesis::H1, trials, workers, false)?,
        )
    } else {
        (Vec::new(), Vec::new())
    };
    (1..=prep.scenario.k())
        .map(|l| {
            let (p_f, p_d) = prep.counting_point(l)?;
            let p_tot_mc = if trials > 0 {
                let miss = h1.iter().filter(|t| (t.k1 as usize) < l).count();
                let fa = h0.iter().filter(|t| t.k1 as usize >= l).count();
                (miss + fa) as f64 / trials as f64
            } else {
                f64::NAN
            };
            Ok(LSweepRow {
                l,
                p_d,
                p_f,
                p_tot: 1.0 - p_d + p_f,
                p_tot_mc,
            })
        })
        .collect()
}
