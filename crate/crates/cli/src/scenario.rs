//! TOML scenario files.
//!
//! Field-level checks run during deserialization so their messages carry the
//! offending line. Cross-field checks use the spans kept in [`Spanned`].

use std::fmt;
use std::marker::PhantomData;
use std::path::Path;

use ccss_core::channels::FadingLink;
use ccss_core::fusion::FusionRule;
use ccss_core::simkit::{NetworkScenario, SuLinks};
use ccss_core::{PdRoute, SensingModel};
use serde::de::{self, value::SeqAccessDeserializer, IntoDeserializer, Visitor};
use serde::{Deserialize, Deserializer};
use toml::Spanned;

/// Scenario problems: malformed file, unknown keys or invalid values.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

macro_rules! checked_f64 {
    ($name:ident, $check:expr, $what:literal) => {
        #[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
        #[serde(try_from = "f64")]
        pub struct $name(pub f64);

        impl TryFrom<f64> for $name {
            type Error = String;
            fn try_from(v: f64) -> Result<Self, String> {
                let ok: fn(f64) -> bool = $check;
                if ok(v) {
                    Ok(Self(v))
                } else {
                    Err(format!(concat!($what, ", got {}"), v))
                }
            }
        }
    };
}

checked_f64!(
    Severity,
    |m| m.is_finite() && m >= 0.5,
    "Nakagami m must satisfy m >= 1/2"
);
checked_f64!(Probability, |p| p > 0.0 && p < 1.0, "probability must lie in (0,1)");
checked_f64!(Positive, |v| v.is_finite() && v > 0.0, "value must be finite and positive");
checked_f64!(Decibel, |v| v.is_finite(), "SNR in dB must be finite");

/// Samples per sensing window.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(try_from = "i64")]
pub struct Samples(pub u32);

impl TryFrom<i64> for Samples {
    type Error = String;
    fn try_from(v: i64) -> Result<Self, String> {
        match u32::try_from(v) {
            Ok(n) if (1..=100_000).contains(&n) => Ok(Self(n)),
            _ => Err(format!("N must be an integer in 1..=100000, got {v}")),
        }
    }
}

/// A scalar broadcast to every SU, or one value per SU.
#[derive(Debug, Clone, PartialEq)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn list_len(&self) -> Option<usize> {
        match self {
            OneOrMany::One(_) => None,
            OneOrMany::Many(v) => Some(v.len()),
        }
    }

    pub fn expand(&self, k: usize) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone(); k],
            OneOrMany::Many(v) => v.clone(),
        }
    }

    pub fn values(&self) -> Vec<T> {
        self.expand(1)
    }
}

// Hand-rolled so that the inner type's own error (e.g. the m >= 1/2 rule)
// reaches the user instead of an untagged-enum "no variant matched".
impl<'de, T: Deserialize<'de>> Deserialize<'de> for OneOrMany<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V<T>(PhantomData<T>);

        impl<'de, T: Deserialize<'de>> Visitor<'de> for V<T> {
            type Value = OneOrMany<T>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or an array of numbers")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
                T::deserialize(v.into_deserializer()).map(OneOrMany::One)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
                self.visit_f64(v as f64)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
                self.visit_f64(v as f64)
            }

            fn visit_seq<A: de::SeqAccess<'de>>(self, seq: A) -> Result<Self::Value, A::Error> {
                Vec::<T>::deserialize(SeqAccessDeserializer::new(seq)).map(OneOrMany::Many)
            }
        }

        d.deserialize_any(V(PhantomData))
    }
}

/// `--model` and the scenario `model` key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelSel {
    /// General-m series route.
    #[default]
    Phi2,
    /// Specialized closed forms for m = 1/2, 1, 2.
    Closed,
    /// Complex-envelope approximation.
    Complex,
    /// Monte Carlo estimate in place of the analytic value.
    Mc,
}

impl ModelSel {
    pub fn route(self) -> Option<PdRoute> {
        match self {
            ModelSel::Phi2 => Some(PdRoute::Phi2),
            ModelSel::Closed => Some(PdRoute::Closed),
            ModelSel::Complex => Some(PdRoute::Complex),
            ModelSel::Mc => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelSel::Phi2 => "phi2",
            ModelSel::Closed => "closed",
            ModelSel::Complex => "complex",
            ModelSel::Mc => "mc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleName {
    Lrt,
    Egc,
    Mrc,
    Counting,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub start: Probability,
    pub stop: Probability,
    pub step: Positive,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalSection {
    #[serde(default = "one_m")]
    pub m: OneOrMany<Severity>,
    pub snr_db: OneOrMany<Decibel>,
    #[serde(default)]
    pub pf: Option<Spanned<Vec<Probability>>>,
    #[serde(default)]
    pub pf_range: Option<Spanned<GridRange>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    /// Number of SUs when every per-SU entry is a scalar.
    #[serde(default)]
    pub k: Option<Spanned<usize>>,
    pub sensing_snr_db: Spanned<OneOrMany<Decibel>>,
    pub reporting_snr_db: Spanned<OneOrMany<Decibel>>,
    /// Severity of both links of each SU unless overridden below.
    #[serde(default = "one_m_spanned")]
    pub m: Spanned<OneOrMany<Severity>>,
    #[serde(default)]
    pub sensing_m: Option<Spanned<OneOrMany<Severity>>>,
    #[serde(default)]
    pub reporting_m: Option<Spanned<OneOrMany<Severity>>>,
    /// 1-based SU indices to keep, applied after expansion.
    #[serde(default)]
    pub select: Option<Spanned<Vec<usize>>>,
    #[serde(default = "default_local_pf")]
    pub local_pf: Probability,
    #[serde(default = "default_system_pf")]
    pub system_pf: Probability,
    #[serde(default = "default_rule")]
    pub rule: RuleName,
    /// Vote threshold of the counting rule.
    #[serde(default)]
    pub j: Option<Spanned<usize>>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// System false-alarm targets for `system-roc`.
    #[serde(default)]
    pub pf: Option<Spanned<Vec<Probability>>>,
    /// Mean sensing SNRs (dB) for `pd-vs-snr`.
    #[serde(default)]
    pub mean_snr_db: Option<Vec<Decibel>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexitySection {
    #[serde(default = "default_branches")]
    pub k: Vec<usize>,
    #[serde(default = "default_cards")]
    pub cards: Vec<u32>,
}

impl Default for ComplexitySection {
    fn default() -> Self {
        Self {
            k: default_branches(),
            cards: default_cards(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_n")]
    pub n: Samples,
    #[serde(default = "unit_noise")]
    pub noise_sigma2: Positive,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub model: ModelSel,
    #[serde(default)]
    pub sensing_model: SensingModel,
    #[serde(default)]
    pub local: Option<LocalSection>,
    #[serde(default)]
    pub network: Option<NetworkSection>,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub complexity: ComplexitySection,
}

fn one_m() -> OneOrMany<Severity> {
    OneOrMany::One(Severity(1.0))
}
fn one_m_spanned() -> Spanned<OneOrMany<Severity>> {
    Spanned::new(0..0, one_m())
}
fn default_local_pf() -> Probability {
    Probability(0.03)
}
fn default_system_pf() -> Probability {
    Probability(0.02)
}
fn default_rule() -> RuleName {
    RuleName::Lrt
}
fn default_branches() -> Vec<usize> {
    vec![1, 10]
}
fn default_cards() -> Vec<u32> {
    vec![2, 4]
}
fn default_n() -> Samples {
    Samples(20)
}
fn unit_noise() -> Positive {
    Positive(1.0)
}
fn default_seed() -> u64 {
    1
}
fn default_trials() -> usize {
    10_000
}

/// A loaded scenario plus its source text, kept for line lookups.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub source: String,
    pub origin: String,
}

impl Scenario {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let source = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read scenario {}: {e}", path.display())))?;
        Self::parse(&source, &path.display().to_string())
    }

    pub fn parse(source: &str, origin: &str) -> anyhow::Result<Self> {
        let file: ScenarioFile =
            toml::from_str(source).map_err(|e| config_err(format!("{origin}: {e}")))?;
        Ok(Self {
            file,
            source: source.to_string(),
            origin: origin.to_string(),
        })
    }

    /// Built-in defaults, used by commands that do not need a file.
    pub fn empty() -> Self {
        Self::parse("", "<defaults>").expect("defaults are valid")
    }

    fn at<T>(&self, span: &Spanned<T>, msg: impl fmt::Display) -> anyhow::Error {
        let start = span.span().start;
        if span.span().is_empty() && start == 0 {
            return config_err(format!("{}: {msg}", self.origin));
        }
        let line = self.source[..start.min(self.source.len())].matches('\n').count() + 1;
        config_err(format!("{}: line {line}: {msg}", self.origin))
    }

    pub fn local(&self) -> anyhow::Result<&LocalSection> {
        self.file
            .local
            .as_ref()
            .ok_or_else(|| config_err(format!("{}: missing [local] table", self.origin)))
    }

    /// `p_f` grid of the `[local]` table; 0.01..0.99 when absent.
    pub fn local_pf_grid(&self) -> anyhow::Result<Vec<f64>> {
        let local = self.local()?;
        match (&local.pf, &local.pf_range) {
            (Some(_), Some(r)) => Err(self.at(r, "give either `pf` or `pf_range`, not both")),
            (Some(list), None) => self.checked_grid(list, list.get_ref().iter().map(|p| p.0).collect()),
            (None, Some(r)) => {
                let g = r.get_ref();
                if g.stop.0 < g.start.0 {
                    return Err(self.at(r, "pf_range.stop is below pf_range.start"));
                }
                let grid = ccss_core::roc::linear_grid(g.start.0, g.stop.0, g.step.0);
                self.checked_grid(r, grid.into_iter().filter(|&p| p < 1.0).collect())
            }
            (None, None) => Ok(ccss_core::roc::default_pf_grid()),
        }
    }

    fn checked_grid<T>(&self, span: &Spanned<T>, grid: Vec<f64>) -> anyhow::Result<Vec<f64>> {
        if grid.is_empty() {
            return Err(self.at(span, "p_f grid is empty"));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(self.at(span, "p_f grid must be strictly increasing"));
        }
        Ok(grid)
    }

    /// System false-alarm targets; a default spread when absent.
    pub fn sweep_pf(&self) -> anyhow::Result<Vec<f64>> {
        match &self.file.sweep.pf {
            Some(list) => self.checked_grid(list, list.get_ref().iter().map(|p| p.0).collect()),
            None => Ok(vec![0.01, 0.02, 0.05, 0.1, 0.2]),
        }
    }

    pub fn mean_snr_grid(&self) -> anyhow::Result<Vec<f64>> {
        match &self.file.sweep.mean_snr_db {
            Some(v) if !v.is_empty() => Ok(v.iter().map(|d| d.0).collect()),
            _ => Err(config_err(format!("{}: [sweep] mean_snr_db is required", self.origin))),
        }
    }

    /// The `[network]` table as a core scenario. The LRT and the linear
    /// rules carry a placeholder threshold that the commands calibrate.
    pub fn network(&self, route: PdRoute) -> anyhow::Result<NetworkScenario> {
        let f = &self.file;
        let net = f
            .network
            .as_ref()
            .ok_or_else(|| config_err(format!("{}: missing [network] table", self.origin)))?;

        let sized: Vec<(&str, &Spanned<OneOrMany<Decibel>>)> = vec![
            ("sensing_snr_db", &net.sensing_snr_db),
            ("reporting_snr_db", &net.reporting_snr_db),
        ];
        let mut k: Option<(usize, &str)> = net.k.as_ref().map(|k| (*k.get_ref(), "k"));
        if let Some(kk) = &net.k {
            if *kk.get_ref() == 0 {
                return Err(self.at(kk, "k must be at least 1"));
            }
        }
        let mut check_len = |name: &'static str, len: Option<usize>, at: &dyn Fn(String) -> anyhow::Error| {
            if let Some(n) = len {
                match k {
                    None => k = Some((n, name)),
                    Some((k0, src)) if k0 != n => {
                        return Err(at(format!("{name} has {n} entries but {src} implies K = {k0}")))
                    }
                    _ => {}
                }
            }
            Ok(())
        };
        for (name, v) in &sized {
            check_len(name, v.get_ref().list_len(), &|m| self.at(*v, m))?;
        }
        check_len("m", net.m.get_ref().list_len(), &|m| self.at(&net.m, m))?;
        for (name, v) in [("sensing_m", &net.sensing_m), ("reporting_m", &net.reporting_m)] {
            if let Some(v) = v {
                check_len(name, v.get_ref().list_len(), &|m| self.at(v, m))?;
            }
        }
        let k = match k {
            Some((k, _)) => k,
            None => {
                return Err(self.at(
                    &net.sensing_snr_db,
                    "cannot infer K: give `k` or at least one per-SU array",
                ))
            }
        };
        if k == 0 {
            return Err(self.at(&net.sensing_snr_db, "per-SU arrays are empty"));
        }

        let m = net.m.get_ref().expand(k);
        let sm = net.sensing_m.as_ref().map_or_else(|| m.clone(), |v| v.get_ref().expand(k));
        let rm = net.reporting_m.as_ref().map_or_else(|| m.clone(), |v| v.get_ref().expand(k));
        let ss = net.sensing_snr_db.get_ref().expand(k);
        let rs = net.reporting_snr_db.get_ref().expand(k);
        let s2 = f.noise_sigma2.0;
        let mut sus = Vec::with_capacity(k);
        for i in 0..k {
            sus.push(SuLinks {
                sensing: FadingLink::from_snr_db(sm[i].0, ss[i].0, s2)
                    .map_err(|e| self.at(&net.sensing_snr_db, format!("SU {}: {e}", i + 1)))?,
                reporting: FadingLink::from_snr_db(rm[i].0, rs[i].0, s2)
                    .map_err(|e| self.at(&net.reporting_snr_db, format!("SU {}: {e}", i + 1)))?,
            });
        }
        if let Some(sel) = &net.select {
            let idx = sel.get_ref();
            if idx.is_empty() {
                return Err(self.at(sel, "select is empty"));
            }
            let mut picked = Vec::with_capacity(idx.len());
            for &i in idx {
                if i == 0 || i > k {
                    return Err(self.at(sel, format!("select index {i} outside 1..={k}")));
                }
                picked.push(sus[i - 1]);
            }
            sus = picked;
        }

        let rule = match net.rule {
            RuleName::Lrt => FusionRule::Lrt { log_lambda: 0.0 },
            RuleName::Egc => FusionRule::Egc { threshold: 0.0 },
            RuleName::Mrc => FusionRule::Mrc { threshold: 0.0 },
            RuleName::Counting => {
                let j = net
                    .j
                    .as_ref()
                    .ok_or_else(|| config_err(format!("{}: rule = \"counting\" needs `j`", self.origin)))?;
                if *j.get_ref() == 0 || *j.get_ref() > sus.len() {
                    return Err(self.at(j, format!("j = {} outside 1..={}", j.get_ref(), sus.len())));
                }
                FusionRule::Counting { j: *j.get_ref() }
            }
        };
        let sc = NetworkScenario {
            sus,
            n: f.n.0,
            local_pf: net.local_pf.0,
            rule,
            system_pf: net.system_pf.0,
            seed: f.seed,
            model: f.sensing_model,
            pd_route: route,
        };
        sc.validate().map_err(|e| config_err(format!("{}: {e}", self.origin)))?;
        Ok(sc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn severity_below_half_is_rejected_with_line() {
        let src = "n = 10\n\n[local]\nm = 0.3\nsnr_db = 4\n";
        let err = Scenario::parse(src, "s.toml").unwrap_err().to_string();
        assert!(err.contains("m >= 1/2"), "{err}");
        assert!(err.contains("line 4"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = Scenario::parse("n = 10\nbogus = 1\n", "s.toml").unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn length_mismatch_points_at_line() {
        let src = "[network]\nsensing_snr_db = [1, 2, 3]\nreporting_snr_db = [1, 2]\n";
        let sc = Scenario::parse(src, "s.toml").unwrap();
        let err = sc.network(PdRoute::Phi2).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn broadcast_and_select() {
        let src = "[network]\nk = 4\nsensing_snr_db = 5\nreporting_snr_db = [1, 2, 3, 4]\nselect = [2, 3]\n";
        let sc = Scenario::parse(src, "s.toml").unwrap().network(PdRoute::Phi2).unwrap();
        assert_eq!(sc.k(), 2);
        assert!((sc.sus[1].reporting.avg_snr_db() - 3.0).abs() < 1e-12);
    }
}
