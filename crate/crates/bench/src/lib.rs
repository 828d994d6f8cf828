//! Shared fixtures for the criterion benches.

use ccss_core::fusion::FusionRule;
use ccss_core::simkit::{NetworkScenario, SuLinks};
use ccss_core::{DetectorSpec, FadingLink, PdRoute, SensingModel};

/// Sensing link and detector used across the benches (N = 20, p_f = 0.03).
pub fn reference_pair(m: f64, snr_db: f64) -> (FadingLink, DetectorSpec) {
    let link = FadingLink::from_snr_db(m, snr_db, 1.0).expect("valid link");
    let spec = DetectorSpec::from_pf(20, 1.0, 0.03).expect("valid detector");
    (link, spec)
}

/// Ten SUs with the spread of sensing and reporting SNRs used by the presets.
pub fn ten_su_network(m: f64) -> NetworkScenario {
    let sens = [-4.0, -2.0, 0.0, 2.0, 3.0, 5.0, 10.0, 8.0, 7.0, 11.0];
    let rep = [-5.0, -3.0, -1.0, 0.0, 2.0, 4.0, 7.0, 12.0, 10.0, 14.0];
    let sus = sens
        .iter()
        .zip(rep)
        .map(|(&s, r)| SuLinks {
            sensing: FadingLink::from_snr_db(m, s, 1.0).expect("valid link"),
            reporting: FadingLink::from_snr_db(m, r, 1.0).expect("valid link"),
        })
        .collect();
    NetworkScenario {
        sus,
        n: 20,
        local_pf: 0.03,
        rule: FusionRule::Lrt { log_lambda: 0.0 },
        system_pf: 0.02,
        seed: 1,
        model: SensingModel::Snapshot,
        pd_route: PdRoute::Phi2,
    }
}
