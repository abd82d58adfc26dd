#![allow(dead_code)]

use coordbf::channel::complex_normal_vector;
use coordbf::{BeamformerSet, ScenarioConfig, SystemModel, C64, CVector};
use proptest::prelude::*;
use rand::Rng;

pub fn unit(v: CVector) -> CVector {
    let n = v.norm();
    v / C64::new(n, 0.0)
}

pub fn model_strategy() -> impl Strategy<Value = SystemModel> {
    prop_oneof![Just(SystemModel::Ic), Just(SystemModel::Bc), Just(SystemModel::Mac)]
}

/// Small scenarios with `n_p < n_t`.
pub fn config_strategy() -> impl Strategy<Value = ScenarioConfig> {
    (model_strategy(), 1usize..=4, 1usize..=4, 1usize..=3, 0usize..=2, 0.0f64..20.0, prop_oneof![Just(0.0), Just(5.0)])
        .prop_map(|(model, n_t, n_r, n_s, n_p, snr, dev)| {
            ScenarioConfig {
                model,
                n_t,
                n_r,
                n_s,
                n_p: n_p.min(n_t - 1),
                snr_dev_db: dev,
                ..ScenarioConfig::default()
            }
            .with_snr_db(snr)
        })
}

/// Random feasible beamformers: unit receive vectors, and transmit powers
/// inside the budget.
pub fn random_beamformers<R: Rng>(cfg: &ScenarioConfig, rng: &mut R) -> BeamformerSet {
    let per = match cfg.model {
        SystemModel::Bc => cfg.p_t / cfg.n_s as f64,
        _ => cfg.p_t,
    };
    let m = (0..cfg.n_s)
        .map(|_| {
            let scale = per * rng.random_range(0.05..1.0);
            unit(complex_normal_vector(rng, cfg.n_t)) * C64::new(scale.sqrt(), 0.0)
        })
        .collect();
    let w = (0..cfg.n_s).map(|_| unit(complex_normal_vector(rng, cfg.n_r))).collect();
    BeamformerSet { m, w }
}
