use serde::{Deserialize, Serialize};

/// Where the points of a curve came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Analytic { model: String },
    MonteCarlo { trials: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub pf: f64,
    pub pd: f64,
    /// 95% half-width on `pd`, Monte Carlo curves only.
    pub ci95: Option<f64>,
}

/// Ordered (false alarm, detection) pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub provenance: Provenance,
}

impl RocCurve {
    pub fn pf(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.pf)
    }

    pub fn pd(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.pd)
    }

    /// Complementary curve: detection replaced by miss probability.
    pub fn complementary(&self) -> RocCurve {
        RocCurve {
            points: self
                .points
                .iter()
                .map(|p| RocPoint {
                    pf: p.pf,
                    pd: 1.0 - p.pd,
                    ci95: p.ci95,
                })
                .collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// True when detection never decreases along the curve.
    pub fn is_monotone(&self) -> bool {
        self.points.windows(2).all(|w| w[1].pd >= w[0].pd)
    }
}

/// `start, start+step, ...` up to and including `stop` (within rounding).
pub fn linear_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}

/// Default false-alarm grid for local ROC curves: 0.01, 0.02, ..., 0.99.
pub fn default_pf_grid() -> Vec<f64> {
    (1..=99).map(|i| i as f64 / 100.0).collect()
}
