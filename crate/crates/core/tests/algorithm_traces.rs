mod common;

use common::model_strategy;
use coordbf::algorithms::Stage;
use coordbf::experiment::mix_seed;
use coordbf::sinr::{constraint_residuals, pu_interference_direct};
use coordbf::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn run(cfg: &ScenarioConfig, a: Algorithm, seed: u64) -> (ChannelSet, RunTrace) {
    let ch = generate_channels(cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    let tr = run_algorithm(cfg, &ch, a, &mut ChaCha8Rng::seed_from_u64(mix_seed(seed, 1))).unwrap();
    (ch, tr)
}

fn algorithm_strategy() -> impl Strategy<Value = Algorithm> {
    prop::sample::select(Algorithm::ALL.to_vec())
}

fn loop_config() -> impl Strategy<Value = ScenarioConfig> {
    (model_strategy(), 2usize..=3, 2usize..=3, 1usize..=2, prop_oneof![Just(0.0), Just(1e-10), Just(0.5)], 0.0f64..20.0)
        .prop_map(|(model, n_t, n_r, n_s, gamma, snr)| {
            ScenarioConfig {
                model,
                n_t,
                n_r,
                n_s,
                n_p: 1,
                gamma,
                max_outer_iters: 60,
                ..ScenarioConfig::default()
            }
            .with_snr_db(snr)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn tracked_objective_never_decreases(cfg in loop_config(), a in algorithm_strategy(), seed in any::<u64>()) {
        let (_, tr) = run(&cfg, a, seed);
        let series: Vec<f64> = tr
            .records
            .iter()
            .map(|r| if a.is_fairness() { r.min_sinr } else { r.sum_rate })
            .collect();
        for w in series.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-6 * w[0].abs().max(1.0), "{:?}", series);
        }
    }

    #[test]
    fn every_iterate_is_feasible(cfg in loop_config(), a in algorithm_strategy(), seed in any::<u64>()) {
        let (ch, tr) = run(&cfg, a, seed);
        let norms: f64 = (0..cfg.n_s).map(|k| ch.h_sp[k][0].norm_squared()).sum();
        for r in &tr.records {
            let load = r.pu_interference[0];
            prop_assert!(load <= cfg.gamma * (1.0 + 1e-6) || load <= 1e-8 * cfg.p_t * norms);
            match cfg.model {
                SystemModel::Bc => prop_assert!(r.tx_power.iter().sum::<f64>() <= cfg.p_t * (1.0 + 1e-6)),
                _ => prop_assert!(r.tx_power.iter().all(|&p| p <= cfg.p_t * (1.0 + 1e-6))),
            }
        }
        let report = constraint_residuals(&cfg, &ch, &tr.beamformers);
        prop_assert!(report.tx_power_slack.iter().all(|&s| s >= -1e-6 * cfg.p_t));
        prop_assert!(report.rx_norm_slack.iter().all(|&s| s >= -1e-9));
        prop_assert!(pu_interference_direct(&ch, &tr.beamformers.m, 0) <= cfg.gamma * (1.0 + 1e-6) + 1e-8 * cfg.p_t * norms);
    }
}

#[test]
fn same_inputs_give_identical_traces() {
    let cfg = ScenarioConfig {
        n_s: 2,
        n_p: 1,
        n_t: 3,
        n_r: 2,
        ..ScenarioConfig::default()
    };
    for a in Algorithm::ALL {
        let (_, x) = run(&cfg, a, 9);
        let (_, y) = run(&cfg, a, 9);
        assert_eq!(x.records, y.records);
        assert_eq!(x.beamformers, y.beamformers);
    }
}

#[test]
fn trace_stages_follow_the_mode() {
    let cfg = ScenarioConfig::default();
    for a in Algorithm::ALL {
        let (_, tr) = run(&cfg, a, 3);
        assert_eq!(tr.records[0].stage, Stage::Init);
        assert_eq!(tr.records[0].n, 0);
        let finals = tr.records.iter().filter(|r| r.stage == Stage::FinalReceive).count();
        assert_eq!(finals, usize::from(a.mode() == Mode::SuccessiveReduced), "{a}");
        assert_eq!(tr.loop_records().count(), tr.iterations);
        assert!(tr.iterations <= cfg.max_outer_iters);
    }
}

#[test]
fn threshold_stop_is_reported_as_converged() {
    let cfg = ScenarioConfig::default();
    let (_, tr) = run(&cfg, Algorithm::Srm, 1);
    assert!(tr.converged);
    assert!(matches!(tr.stop_reason, StopReason::Threshold | StopReason::Stalled));
    assert!(tr.failure.is_none());
}

#[test]
fn iteration_cap_is_honoured() {
    let cfg = ScenarioConfig {
        max_outer_iters: 1,
        epsilon: 1e-12,
        ..ScenarioConfig::default()
    };
    for a in Algorithm::ALL {
        let (_, tr) = run(&cfg, a, 2);
        assert!(tr.iterations <= 1);
        if tr.stop_reason == StopReason::MaxIters {
            assert!(!tr.converged);
        }
    }
}

#[test]
fn reduced_mode_is_not_better_on_average() {
    let cfg = ScenarioConfig {
        n_s: 2,
        n_p: 1,
        n_t: 3,
        n_r: 3,
        ..ScenarioConfig::default()
    };
    for (full, red) in [(Algorithm::Fairness, Algorithm::FairnessRed), (Algorithm::Srm, Algorithm::SrmRed)] {
        let (mut a, mut b) = (0.0, 0.0);
        for seed in 0..100 {
            a += run(&cfg, full, seed).1.final_sum_rate();
            b += run(&cfg, red, seed).1.final_sum_rate();
        }
        assert!(b / 100.0 <= a / 100.0 + 1e-6, "{red}: {} > {}", b / 100.0, a / 100.0);
    }
}

#[test]
fn invalid_configuration_is_rejected_before_running() {
    let cfg = ScenarioConfig {
        n_p: 2,
        n_t: 2,
        ..ScenarioConfig::default()
    };
    let ch = generate_channels(&ScenarioConfig::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert!(run_algorithm(&cfg, &ch, Algorithm::Srm, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
}
