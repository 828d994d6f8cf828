use anyhow::{bail, Result};
use ccss_core::channels::FadingLink;
use ccss_core::local_detect::pd_with;
use ccss_core::nfg::{ccss_chain_graph, ccss_graph, complexity_explicit, complexity_fg};
use ccss_core::rng::derive_seed;
use ccss_core::simkit::{
    experiment_l_sweep, experiment_local_roc, experiment_pd_vs_snr, experiment_system_roc, fraction_above,
    simulate_energies, Hypothesis, Prepared, MIN_TRIALS,
};
use ccss_core::sysperf::{beta_ratio, brute_force_l, optimal_l};
use ccss_core::{DetectorSpec, PdRoute};

use crate::output::{col, Cell, Column, Table};
use crate::scenario::{config_err, ModelSel, Scenario};

/// Run parameters after applying command-line overrides to the scenario.
#[derive(Debug, Clone, Copy)]
pub struct RunOpts {
    pub trials: usize,
    pub seed: u64,
    pub model: ModelSel,
    pub workers: usize,
}

impl RunOpts {
    pub fn resolve(sc: &Scenario, trials: Option<usize>, seed: Option<u64>, model: Option<ModelSel>, workers: usize) -> Self {
        Self {
            trials: trials.unwrap_or(sc.file.trials),
            seed: seed.unwrap_or(sc.file.seed),
            model: model.unwrap_or(sc.file.model),
            workers: workers.max(1),
        }
    }

    fn params(&self, sc: &Scenario) -> Vec<(&'static str, Cell)> {
        let mut p = vec![
            ("trials", Cell::from(self.trials)),
            ("seed", Cell::Int(self.seed as u128)),
            ("model", self.model.name().into()),
            ("n", Cell::Int(sc.file.n.0 as u128)),
            ("noise_sigma2", sc.file.noise_sigma2.0.into()),
            ("sensing_model", format!("{:?}", sc.file.sensing_model).to_lowercase().into()),
        ];
        if let Some(name) = &sc.file.name {
            p.push(("scenario", name.as_str().into()));
        }
        p
    }

    fn need_mc(&self, what: &str) -> Result<()> {
        if self.trials < MIN_TRIALS {
            bail!(config_err(format!(
                "{what} needs at least {MIN_TRIALS} Monte Carlo trials, got {}",
                self.trials
            )));
        }
        Ok(())
    }
}

fn analytic_source(model: ModelSel) -> &'static str {
    match model {
        ModelSel::Phi2 => "analytic: general-m series",
        ModelSel::Closed => "analytic: specialized closed form",
        ModelSel::Complex => "analytic: complex-envelope approximation",
        ModelSel::Mc => "not computed (model = mc)",
    }
}

/// Local ROC (`complementary = false`) or complementary ROC per
/// `(m, SNR)` pair of the `[local]` table.
pub fn local_roc(sc: &Scenario, o: &RunOpts, complementary: bool) -> Result<Table> {
    let local = sc.local()?;
    let grid = sc.local_pf_grid()?;
    if o.model == ModelSel::Mc || o.trials > 0 {
        o.need_mc("the Monte Carlo columns")?;
    }
    let route = o.model.route().unwrap_or(PdRoute::Phi2);
    let (a, c, m, ci) = if complementary {
        ("pm_analytic", "pm_complex_model", "pm_mc", "mc_ci")
    } else {
        ("pd_analytic", "pd_complex_model", "pd_mc", "mc_ci")
    };
    let columns: Vec<Column> = vec![
        col("pf", "probability", "input grid"),
        col("tau", "energy (same units as sigma_w^2)", "threshold inverted from pf"),
        col(a, "probability", analytic_source(o.model)),
        col(c, "probability", "analytic: complex-envelope approximation"),
        col(m, "probability", "monte carlo"),
        col(ci, "probability", "monte carlo 95% half-width"),
        col("m", "1", "input"),
        col("snr_db", "dB", "input"),
    ];
    let mut table = Table::new(if complementary { "croc" } else { "local-roc" }, columns);
    table.params = o.params(sc);
    let s2 = sc.file.noise_sigma2.0;
    let mut curve = 0u64;
    for sev in local.m.values() {
        for snr in local.snr_db.values() {
            let link = FadingLink::from_snr_db(sev.0, snr.0, s2).map_err(|e| config_err(e.to_string()))?;
            let rows = experiment_local_roc(
                &link,
                sc.file.n.0,
                &grid,
                route,
                sc.file.sensing_model,
                o.trials,
                derive_seed(o.seed, curve),
                o.workers,
            )?;
            curve += 1;
            for r in rows {
                let analytic = if o.model == ModelSel::Mc { f64::NAN } else { r.pd_analytic };
                let flip = |p: f64| if complementary { 1.0 - p } else { p };
                table.push(vec![
                    r.pf.into(),
                    r.tau.into(),
                    flip(analytic).into(),
                    flip(r.pd_complex_model).into(),
                    flip(r.pd_mc).into(),
                    r.mc_ci.into(),
                    sev.0.into(),
                    snr.0.into(),
                ]);
            }
        }
    }
    Ok(table)
}

/// Prepares the `[network]` table. Under `--model mc` each SU's `p_d` is
/// replaced by a Monte Carlo estimate before it reaches the LRT.
pub fn prepared_network(sc: &Scenario, o: &RunOpts) -> Result<Prepared> {
    let mut net = sc.network(o.model.route().unwrap_or(PdRoute::Phi2))?;
    net.seed = o.seed;
    let mut prep = net.prepare()?;
    if o.model == ModelSel::Mc {
        o.need_mc("model = mc")?;
        for k in 0..prep.scenario.k() {
            let su = prep.scenario.sus[k];
            let e = simulate_energies(
                &su.sensing,
                net.n,
                net.model,
                Hypothesis::H1,
                o.trials,
                derive_seed(o.seed, 0x5D00 + k as u64),
                o.workers,
            )?;
            prep.branches[k].pd = fraction_above(&e, prep.detectors[k].normalized_threshold()).p;
        }
    }
    Ok(prep)
}

pub fn system_roc(sc: &Scenario, o: &RunOpts) -> Result<Table> {
    let prep = prepared_network(sc, o)?;
    let grid = sc.sweep_pf()?;
    o.need_mc("system-roc")?;
    let columns = vec![
        col("rule", "-", "lrt/egc/mrc calibrated on H0 trials; counting_<k1> closed form"),
        col("pf_target", "probability", "input grid (empty for counting rows)"),
        col("threshold", "statistic units (ln L for lrt, votes for counting)", "calibration"),
        col("pf_analytic", "probability", "analytic: Poisson-binomial (counting rows)"),
        col("pd_analytic", "probability", "analytic: Poisson-binomial (counting rows)"),
        col("pf_mc", "probability", "monte carlo"),
        col("pd_mc", "probability", "monte carlo"),
        col("pd_ci", "probability", "monte carlo 95% half-width"),
    ];
    let mut table = Table::new("system-roc", columns);
    table.params = o.params(sc);
    table.params.push(("k", prep.scenario.k().into()));
    for r in experiment_system_roc(&prep, &grid, o.trials, o.workers)? {
        table.push(vec![
            r.rule.into(),
            r.pf_target.into(),
            r.threshold.into(),
            r.pf_analytic.into(),
            r.pd_analytic.into(),
            r.pf_mc.into(),
            r.pd_mc.into(),
            r.pd_ci.into(),
        ]);
    }
    Ok(table)
}

pub fn lopt(sc: &Scenario, o: &RunOpts) -> Result<Table> {
    let prep = prepared_network(sc, o)?;
    if o.trials > 0 {
        o.need_mc("the Monte Carlo P_TOT column")?;
    }
    let k = prep.scenario.k();
    let rows = experiment_l_sweep(&prep, o.trials, o.workers)?;
    let sp = prep.success_probs()?;
    let identical = sp.iter().all(|s| (s.0 - sp[0].0).abs() < 1e-12 && (s.1 - sp[0].1).abs() < 1e-12);
    let argmin = rows
        .iter()
        .min_by(|a, b| a.p_tot.total_cmp(&b.p_tot))
        .map(|r| r.l)
        .expect("K >= 1");
    let (l_opt, method) = if identical {
        (optimal_l(k, sp[0].0, sp[0].1)?, "closed form ceil(K/(1+beta))")
    } else {
        (argmin, "argmin over l (heterogeneous SUs)")
    };

    let columns = vec![
        col("l", "SUs", "vote threshold"),
        col("p_d", "probability", "analytic: Poisson-binomial"),
        col("p_f", "probability", "analytic: Poisson-binomial"),
        col("p_tot", "probability", "analytic: 1 - p_d + p_f"),
        col("p_tot_mc", "probability", "monte carlo"),
        col("is_lopt", "flag", "1 on the optimal row"),
    ];
    let mut table = Table::new("lopt", columns);
    table.params = o.params(sc);
    table.params.push(("k", k.into()));
    for r in &rows {
        table.push(vec![
            r.l.into(),
            r.p_d.into(),
            r.p_f.into(),
            r.p_tot.into(),
            r.p_tot_mc.into(),
            usize::from(r.l == l_opt).into(),
        ]);
    }
    table.summary.push(("l_opt", l_opt.into()));
    table.summary.push(("method", method.into()));
    table.summary.push(("argmin_l", argmin.into()));
    if identical {
        table.summary.push(("p1", sp[0].0.into()));
        table.summary.push(("p0", sp[0].1.into()));
        table.summary.push(("beta", beta_ratio(sp[0].0, sp[0].1)?.into()));
        let ties = brute_force_l(k, sp[0].0, sp[0].1, 1e-12)?;
        table.summary.push((
            "brute_force_l",
            ties.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ").into(),
        ));
    }
    Ok(table)
}

pub fn pd_vs_snr(sc: &Scenario, o: &RunOpts) -> Result<Table> {
    if o.model == ModelSel::Mc {
        bail!(config_err("pd-vs-snr supports --model phi2, closed or complex"));
    }
    let mut net = sc.network(o.model.route().expect("not mc"))?;
    net.seed = o.seed;
    let means = sc.mean_snr_grid()?;
    o.need_mc("pd-vs-snr")?;
    let columns = vec![
        col("mean_snr_db", "dB", "input: mean of the shifted sensing SNR vector"),
        col("pd_single", "probability", analytic_source(o.model)),
        col("pd_coop_mc", "probability", "monte carlo, threshold calibrated on separate H0 trials"),
        col("pd_coop_ci", "probability", "monte carlo 95% half-width"),
        col("pf_coop_mc", "probability", "monte carlo on fresh H0 trials"),
    ];
    let mut table = Table::new("pd-vs-snr", columns);
    table.params = o.params(sc);
    table.params.push(("k", net.k().into()));
    for r in experiment_pd_vs_snr(&net, &means, o.trials, o.workers)? {
        table.push(vec![
            r.mean_snr_db.into(),
            r.pd_single.into(),
            r.pd_coop_mc.into(),
            r.pd_coop_ci.into(),
            r.pf_coop_mc.into(),
        ]);
    }
    Ok(table)
}

/// Cost of the sum-product schedule against explicit marginalization.
///
/// Rows run over K, then |X|, then the joint graph before the per-branch
/// chains. With `census` the rows are labelled and carry the graph census.
pub fn complexity(sc: &Scenario, cards: Option<&[u32]>, census: bool) -> Result<Table> {
    let cards = cards.unwrap_or(&sc.file.complexity.cards);
    let ks = &sc.file.complexity.k;
    if cards.is_empty() || ks.is_empty() {
        bail!(config_err("complexity needs at least one K and one |X|"));
    }
    if let Some(c) = cards.iter().find(|&&c| c < 2) {
        bail!(config_err(format!("alphabet size |X| = {c} must be at least 2")));
    }
    if let Some(k) = ks.iter().find(|&&k| k == 0) {
        bail!(config_err(format!("K = {k} must be at least 1")));
    }
    let mut columns = vec![
        col("variables", "count", "variables entering the marginalization"),
        col("c_fg", "operations", "sum over node degrees of i*d_i*|X|^i"),
        col("c_cn", "operations", "M*|X|^M per marginalized block"),
    ];
    let labels = [
        col("card", "|X|", "input"),
        col("k", "SUs", "input"),
        col("graph", "-", "full: joint CCSS graph; chain: per-branch likelihood chains"),
        col("nodes", "count", "census"),
        col("edges", "count", "census"),
        col("equality_nodes", "count", "census"),
        col("degrees", "degree:count", "census"),
    ];
    if census {
        columns.extend(labels);
    }
    let mut table = Table::new("complexity", columns);
    for &k in ks {
        for &card in cards {
            let full = ccss_graph(k, card as usize)?;
            let chain = ccss_chain_graph(k, card as usize)?;
            let m_full = 5 * k as u32 + 1;
            let entries = [
                ("full", &full, m_full, complexity_explicit(m_full, card)),
                ("chain", &chain, 4 * k as u32, complexity_explicit(4, card).map(|c| c * k as u128)),
            ];
            for (name, g, vars, cn) in entries {
                let cn = cn.map_err(|_| {
                    config_err(format!("C_CN overflows 128 bits for K = {k}, |X| = {card}"))
                })?;
                let cen = g.census();
                let degrees = cen
                    .degrees
                    .iter()
                    .map(|(d, c)| format!("{d}:{c}"))
                    .collect::<Vec<_>>()
                    .join(" ");
                let mut row = vec![Cell::Int(vars as u128), complexity_fg(g, card)?.into(), cn.into()];
                if !census {
                    table.push(row);
                    continue;
                }
                row.extend([
                    Cell::Int(card as u128),
                    k.into(),
                    name.into(),
                    cen.nodes.into(),
                    cen.edges.into(),
                    cen.equality_nodes.into(),
                    degrees.into(),
                ]);
                table.push(row);
            }
        }
    }
    Ok(table)
}

/// Single-SU detection probability; shared with the validation matrix.
pub fn single_pd(route: PdRoute, link: &FadingLink, n: u32, pf: f64) -> Result<f64> {
    let spec = DetectorSpec::from_pf(n, link.noise_sigma2, pf)?;
    Ok(pd_with(route, link, &spec)?.pd)
}
