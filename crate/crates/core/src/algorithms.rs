//! Alternating transmit/receive optimization loops.
//!
//! Each iteration solves a convex transmit subproblem for fixed receive
//! vectors, extracts rank-one beamformers and then refreshes every receive
//! vector with the MMSE filter. The reduced variants optimize the
//! receive-free lower bound with fixed forms and apply the receive filter
//! once at the end.

use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{complex_normal_vector, ChannelSet, ScenarioConfig, SystemModel};
use crate::convex::{
    enforce_pu_caps, extract_beamformer, mmse_receive, pu_load, solve_tx_subproblem, zero_cap_null_spaces,
    SolverSettings, SolverStatus, TxSubproblem,
};
use crate::error::ConfigError;
use crate::linalg::{CVector, C64};
use crate::sinr::{
    build_block_forms, build_reduced_forms, pu_blocks, sinr_reduced, sinrs_direct, sum_rate, BeamformerSet,
    TraceForms,
};

/// Relative progress below which a run with a rejected update has stalled.
const STALL_TOL: f64 = 1e-12;

/// Rank-one quality below which a run is flagged as having a relaxation gap.
const RANK_ONE_FLAG: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Fairness,
    Srm,
    FairnessRed,
    SrmRed,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Fairness, Algorithm::Srm, Algorithm::FairnessRed, Algorithm::SrmRed];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Fairness => "fairness",
            Algorithm::Srm => "srm",
            Algorithm::FairnessRed => "fairness_red",
            Algorithm::SrmRed => "srm_red",
        }
    }

    pub fn is_fairness(self) -> bool {
        matches!(self, Algorithm::Fairness | Algorithm::FairnessRed)
    }

    pub fn mode(self) -> Mode {
        match self {
            Algorithm::Fairness | Algorithm::Srm => Mode::Recursive,
            Algorithm::FairnessRed | Algorithm::SrmRed => Mode::SuccessiveReduced,
        }
    }
}

impl FromStr for Algorithm {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fairness" => Ok(Algorithm::Fairness),
            "srm" => Ok(Algorithm::Srm),
            "fairness_red" | "fairnessred" => Ok(Algorithm::FairnessRed),
            "srm_red" | "srmred" => Ok(Algorithm::SrmRed),
            other => Err(ConfigError::new(
                "algorithm",
                format!("unknown algorithm '{other}' (expected fairness, srm, fairness_red or srm_red)"),
            )),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Recursive,
    SuccessiveReduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Objective change or fairness slack fell to the threshold.
    Threshold,
    MaxIters,
    /// An extracted update would have lowered the tracked objective.
    Stalled,
    SolverFailure,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Threshold => "threshold",
            StopReason::MaxIters => "max_iters",
            StopReason::Stalled => "stalled",
            StopReason::SolverFailure => "solver_failure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Init,
    Iterate,
    /// Receive filter applied after a reduced loop; SINRs are actual.
    FinalReceive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub n: usize,
    pub stage: Stage,
    /// Actual SINRs, or receive-free lower bounds inside a reduced loop.
    pub sinrs: Vec<f64>,
    pub min_sinr: f64,
    pub sum_rate: f64,
    /// Fairness slack of this iteration's subproblem.
    pub tau: Option<f64>,
    pub pu_interference: Vec<f64>,
    pub tx_power: Vec<f64>,
    pub rank1_quality: Vec<f64>,
    pub status: Option<SolverStatus>,
    pub newton_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub algorithm: Algorithm,
    pub records: Vec<IterationRecord>,
    pub beamformers: BeamformerSet,
    pub converged: bool,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub relaxation_gap: bool,
    pub rejected_updates: usize,
    pub failure: Option<SolverStatus>,
    pub wall_time_s: f64,
}

impl RunTrace {
    pub fn final_record(&self) -> &IterationRecord {
        self.records.last().expect("a trace always holds the initial record")
    }

    pub fn final_sinrs(&self) -> &[f64] {
        &self.final_record().sinrs
    }

    pub fn final_sum_rate(&self) -> f64 {
        self.final_record().sum_rate
    }

    /// Loop records, excluding the initial point and the final receive step.
    pub fn loop_records(&self) -> impl Iterator<Item = &IterationRecord> {
        self.records.iter().filter(|r| r.stage == Stage::Iterate)
    }

    /// Tracked objective per loop iteration: `tau` for fairness runs, the
    /// (possibly reduced) sum rate for sum-rate runs.
    pub fn objective_series(&self) -> Vec<f64> {
        let fairness = self.algorithm.is_fairness();
        self.loop_records()
            .map(|r| if fairness { r.tau.unwrap_or(0.0) } else { r.sum_rate })
            .collect()
    }

    /// `|objective(n) - objective(final)|` per loop iteration.
    pub fn convergence_residuals(&self) -> Vec<f64> {
        let series = self.objective_series();
        let last = series.last().copied().unwrap_or(0.0);
        series.iter().map(|v| (v - last).abs()).collect()
    }

    /// First iteration from which every later residual is at most `r`.
    pub fn iterations_to_residual(&self, r: f64) -> usize {
        let res = self.convergence_residuals();
        let tail = res.iter().rev().take_while(|&&x| x <= r).count();
        res.len() - tail + 1
    }
}

fn unit(mut v: CVector) -> CVector {
    let n = v.norm();
    if n > 0.0 {
        v /= C64::new(n, 0.0);
    }
    v
}

/// Random unit receive vectors and random transmit vectors scaled to the
/// power rule, projected away from zero-cap PUs and scaled under the caps.
pub fn initialize_feasible<R: Rng + ?Sized>(config: &ScenarioConfig, channels: &ChannelSet, rng: &mut R) -> BeamformerSet {
    let (n_s, n_t, n_r) = (channels.n_s(), channels.n_t(), channels.n_r());
    let per_stream = match config.model {
        SystemModel::Bc => config.p_t / n_s as f64,
        SystemModel::Ic | SystemModel::Mac => config.p_t,
    };
    let w = (0..n_s).map(|_| unit(complex_normal_vector(rng, n_r))).collect();
    let x_p = pu_blocks(channels);
    let bases = zero_cap_null_spaces(&x_p, config.gamma, config.p_t, n_s, n_t);
    let mut m: Vec<CVector> = (0..n_s)
        .map(|k| {
            let raw = complex_normal_vector(rng, n_t);
            let b = &bases[k];
            let projected = if b.ncols() < n_t { b * (b.adjoint() * &raw) } else { raw };
            unit(projected) * C64::new(per_stream.sqrt(), 0.0)
        })
        .collect();
    enforce_pu_caps(&x_p, config.gamma, config.p_t, &mut m);
    BeamformerSet { m, w }
}

/// Statuses whose iterate is used. A stalled barrier counts when its gap
/// is already small.
fn usable(status: SolverStatus, gap: f64, objective: f64) -> bool {
    match status {
        SolverStatus::Optimal | SolverStatus::MaxIters => true,
        SolverStatus::NumericalTrouble => gap <= 1e-4 * objective.abs().max(1.0),
        SolverStatus::Infeasible => false,
    }
}

fn refresh_receivers(channels: &ChannelSet, bf: &mut BeamformerSet) {
    let fresh: Vec<Option<CVector>> = (0..bf.n_s()).map(|l| mmse_receive(channels, &bf.m, l).ok()).collect();
    for (w, f) in bf.w.iter_mut().zip(fresh) {
        if let Some(f) = f {
            *w = f;
        }
    }
}

fn sinrs_reduced(channels: &ChannelSet, m: &[CVector]) -> Vec<f64> {
    (0..m.len()).map(|l| sinr_reduced(channels, m, l)).collect()
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

struct Recorder {
    x_p: Vec<crate::linalg::BlockDiag>,
    records: Vec<IterationRecord>,
}

impl Recorder {
    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        n: usize,
        stage: Stage,
        sinrs: Vec<f64>,
        m: &[CVector],
        tau: Option<f64>,
        rank1_quality: Vec<f64>,
        status: Option<SolverStatus>,
        newton_steps: usize,
    ) {
        self.records.push(IterationRecord {
            n,
            stage,
            min_sinr: min_of(&sinrs),
            sum_rate: sum_rate(&sinrs),
            sinrs,
            tau,
            pu_interference: pu_load(&self.x_p, m),
            tx_power: m.iter().map(|v| v.norm_squared()).collect(),
            rank1_quality,
            status,
            newton_steps,
        });
    }
}

struct LoopOutcome {
    converged: bool,
    iterations: usize,
    stop_reason: StopReason,
    relaxation_gap: bool,
    rejected_updates: usize,
    failure: Option<SolverStatus>,
}

/// Runs one variant. `fairness` selects the Dinkelbach slack objective,
/// otherwise the linearized sum rate.
fn optimize<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    channels: &ChannelSet,
    algorithm: Algorithm,
    rng: &mut R,
) -> RunTrace {
    let start = Instant::now();
    let fairness = algorithm.is_fairness();
    let reduced = algorithm.mode() == Mode::SuccessiveReduced;
    let settings = SolverSettings::default();
    let rule = config.power_rule();
    let mut bf = initialize_feasible(config, channels, rng);
    let mut rec = Recorder {
        x_p: pu_blocks(channels),
        records: Vec::new(),
    };
    let reduced_forms = if reduced { Some(build_reduced_forms(channels)) } else { None };
    let tracked = |bf: &BeamformerSet| {
        if reduced {
            sinrs_reduced(channels, &bf.m)
        } else {
            sinrs_direct(channels, bf)
        }
    };

    let n_s = bf.n_s();
    let mut current = tracked(&bf);
    rec.push(0, Stage::Init, current.clone(), &bf.m, None, vec![1.0; n_s], None, 0);

    let mut out = LoopOutcome {
        converged: false,
        iterations: 0,
        stop_reason: StopReason::MaxIters,
        relaxation_gap: false,
        rejected_updates: 0,
        failure: None,
    };

    for n in 1..=config.max_outer_iters {
        let block_forms;
        let forms: &dyn TraceForms = match &reduced_forms {
            Some(f) => f,
            None => {
                block_forms = build_block_forms(channels, &bf.w).expect("receive vectors match the channel set");
                &block_forms
            }
        };
        let m_ref = bf.transmit_blocks();
        let delta = {
            let d = min_of(&current);
            if d.is_finite() && d > 0.0 {
                d
            } else {
                0.0
            }
        };
        let problem = if fairness {
            TxSubproblem::fairness(forms, delta, rule, config.gamma)
        } else {
            TxSubproblem::sum_rate(forms, &m_ref, rule, config.gamma)
        };
        let res = solve_tx_subproblem(&problem, &settings);
        if !usable(res.status, res.gap, res.objective_value) {
            out.failure = Some(res.status);
            out.stop_reason = StopReason::SolverFailure;
            break;
        }

        let mut quality: Vec<f64> = Vec::with_capacity(n_s);
        let mut m_new = Vec::with_capacity(n_s);
        for block in res.m_big.blocks() {
            let (v, q) = extract_beamformer(block);
            m_new.push(v);
            quality.push(q);
        }
        enforce_pu_caps(&rec.x_p, config.gamma, config.p_t, &mut m_new);

        // An extracted update that loses ground for the current receivers
        // is discarded; the receive refresh still runs.
        let candidate = BeamformerSet {
            m: m_new,
            w: bf.w.clone(),
        };
        let score = |s: &[f64]| if fairness { min_of(s) } else { sum_rate(s) };
        let before = score(&current);
        let after = if reduced {
            tracked(&candidate)
        } else {
            sinrs_direct(channels, &candidate)
        };
        let rejected = score(&after) < before;
        if rejected {
            out.rejected_updates += 1;
            quality = rec.records.last().map(|r| r.rank1_quality.clone()).unwrap_or(quality);
        } else {
            bf = candidate;
        }
        if !reduced {
            refresh_receivers(channels, &mut bf);
        }
        let next = tracked(&bf);
        if rejected && !(score(&next) > before + STALL_TOL * before.abs().max(1.0)) {
            out.converged = true;
            out.stop_reason = StopReason::Stalled;
            break;
        }
        let tau = fairness.then_some(res.objective_value);
        let gain = sum_rate(&next) - sum_rate(&current);
        out.relaxation_gap = quality.iter().any(|&q| q < RANK_ONE_FLAG);
        rec.push(n, Stage::Iterate, next.clone(), &bf.m, tau, quality, Some(res.status), res.newton_steps);
        current = next;
        out.iterations = n;

        let done = if fairness { res.objective_value <= config.epsilon } else { gain <= config.epsilon };
        if done {
            out.converged = true;
            out.stop_reason = StopReason::Threshold;
            break;
        }
    }

    if reduced {
        refresh_receivers(channels, &mut bf);
        let actual = sinrs_direct(channels, &bf);
        let quality = rec.records.last().map(|r| r.rank1_quality.clone()).unwrap_or_default();
        rec.push(out.iterations, Stage::FinalReceive, actual, &bf.m, None, quality, None, 0);
    }

    RunTrace {
        algorithm,
        records: rec.records,
        beamformers: bf,
        converged: out.converged,
        iterations: out.iterations,
        stop_reason: out.stop_reason,
        relaxation_gap: out.relaxation_gap,
        rejected_updates: out.rejected_updates,
        failure: out.failure,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

pub fn fairness_optimize<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    channels: &ChannelSet,
    mode: Mode,
    rng: &mut R,
) -> Result<RunTrace, ConfigError> {
    config.validate()?;
    config.validate_fairness()?;
    let algorithm = match mode {
        Mode::Recursive => Algorithm::Fairness,
        Mode::SuccessiveReduced => Algorithm::FairnessRed,
    };
    Ok(optimize(config, channels, algorithm, rng))
}

pub fn srm_optimize<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    channels: &ChannelSet,
    mode: Mode,
    rng: &mut R,
) -> Result<RunTrace, ConfigError> {
    config.validate()?;
    let algorithm = match mode {
        Mode::Recursive => Algorithm::Srm,
        Mode::SuccessiveReduced => Algorithm::SrmRed,
    };
    Ok(optimize(config, channels, algorithm, rng))
}

pub fn run_algorithm<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    channels: &ChannelSet,
    algorithm: Algorithm,
    rng: &mut R,
) -> Result<RunTrace, ConfigError> {
    if algorithm.is_fairness() {
        fairness_optimize(config, channels, algorithm.mode(), rng)
    } else {
        srm_optimize(config, channels, algorithm.mode(), rng)
    }
}
