//! Transmit subproblems over block-diagonal PSD covariances, plus the
//! receive filter, the DC-programming pieces and rank-one extraction.
//!
//! Both subproblems share one constraint set: a power rule, the PU caps
//! `tr(X_p(j) M) <= gamma` and `M_k >= 0` for every block. Caps that are
//! zero relative to the attainable interference are enforced exactly by
//! restricting each block to the null space of its PU channels; the rest
//! enter the barrier as scalar slacks.

mod barrier;
mod dc;
mod extract;
mod receive;

use serde::{Deserialize, Serialize};

use crate::linalg::{null_space_basis, real_trace, BlockDiag, CMatrix, C64};
use crate::sinr::TraceForms;
use barrier::{Affine, BarrierProblem, BarrierSettings, BarrierStatus, HermitianLayout};

pub use dc::{f_value, g_value, grad_g, linearized_objective};
pub use extract::{enforce_pu_caps, extract_beamformer, pu_load};
pub use receive::mmse_receive;

/// Caps at or below this fraction of `p_t * max_k tr(X_p(j)_k)` are
/// treated as zero caps.
pub const ZERO_CAP_RATIO: f64 = 1e-9;

/// Eigenvalues below this fraction of the trace count as null directions.
const NULL_SPACE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PowerRule {
    /// `tr(M_k) <= p_t` for every block.
    PerBlock(f64),
    /// `sum_k tr(M_k) <= p_t`.
    TotalTrace(f64),
}

impl PowerRule {
    pub fn budget(self) -> f64 {
        match self {
            PowerRule::PerBlock(p) | PowerRule::TotalTrace(p) => p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Optimal,
    Infeasible,
    MaxIters,
    NumericalTrouble,
}

impl SolverStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverStatus::Optimal => "optimal",
            SolverStatus::Infeasible => "infeasible",
            SolverStatus::MaxIters => "max_iters",
            SolverStatus::NumericalTrouble => "numerical_trouble",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Relative barrier gap at which a solve stops.
    pub gap_tol: f64,
    pub max_newton: usize,
    /// Barrier weight growth per outer step.
    pub mu: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            gap_tol: 1e-7,
            max_newton: 200,
            mu: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub m_big: BlockDiag,
    /// `tau` for the fairness subproblem, the linearized sum rate (bits)
    /// for the sum-rate subproblem.
    pub objective_value: f64,
    pub status: SolverStatus,
    /// Barrier bound on the suboptimality, in objective units.
    pub gap: f64,
    pub newton_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TxObjective {
    /// Maximize `tau` with `tr(Q_l M) - delta (tr(X_l M) + c_l) >= tau`.
    LinearMaxMin { delta_min: f64 },
    /// Maximize `f(M) - g_val - <grad_g, M - reference>`.
    LinearizedSumRate {
        g_val: f64,
        grad_g: BlockDiag,
        reference: BlockDiag,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TxSubproblem {
    pub objective: TxObjective,
    /// `(Q_s(l), X_s(l))` per stream.
    pub blocks: Vec<(BlockDiag, BlockDiag)>,
    /// `(X_p(j), gamma)` per PU.
    pub pu_caps: Vec<(BlockDiag, f64)>,
    pub power_rule: PowerRule,
    /// `i_ps(l) + sigma_l^2` per stream.
    pub consts: Vec<f64>,
}

impl TxSubproblem {
    fn from_forms<F: TraceForms + ?Sized>(forms: &F, objective: TxObjective, rule: PowerRule, gamma: f64) -> Self {
        let n = forms.n_streams();
        Self {
            objective,
            blocks: (0..n)
                .map(|l| (forms.signal(l).clone(), forms.interference(l).clone()))
                .collect(),
            pu_caps: forms.pu().iter().map(|x| (x.clone(), gamma)).collect(),
            power_rule: rule,
            consts: forms.offsets(),
        }
    }

    pub fn fairness<F: TraceForms + ?Sized>(forms: &F, delta_min: f64, rule: PowerRule, gamma: f64) -> Self {
        Self::from_forms(forms, TxObjective::LinearMaxMin { delta_min }, rule, gamma)
    }

    /// Linearizes `g` at `reference`, which must satisfy the constraints.
    pub fn sum_rate<F: TraceForms + ?Sized>(forms: &F, reference: &BlockDiag, rule: PowerRule, gamma: f64) -> Self {
        let objective = TxObjective::LinearizedSumRate {
            g_val: g_value(forms, reference),
            grad_g: grad_g(forms, reference),
            reference: reference.clone(),
        };
        Self::from_forms(forms, objective, rule, gamma)
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.first().map_or(0, |(q, _)| q.n_blocks())
    }

    fn block_size(&self) -> usize {
        self.blocks.first().map_or(0, |(q, _)| q.block(0).nrows())
    }

    /// `min_l tr(Q_l M) - delta (tr(X_l M) + c_l)`
    pub fn max_min_value(&self, delta: f64, m_big: &BlockDiag) -> f64 {
        self.blocks
            .iter()
            .zip(&self.consts)
            .map(|((q, x), c)| q.trace_product(m_big) - delta * (x.trace_product(m_big) + c))
            .fold(f64::INFINITY, f64::min)
    }

    /// Objective of this subproblem at `m_big`.
    pub fn evaluate(&self, m_big: &BlockDiag) -> f64 {
        match &self.objective {
            TxObjective::LinearMaxMin { delta_min } => self.max_min_value(*delta_min, m_big),
            TxObjective::LinearizedSumRate {
                g_val,
                grad_g,
                reference,
            } => {
                let f: f64 = self
                    .blocks
                    .iter()
                    .zip(&self.consts)
                    .map(|((q, x), c)| (q.trace_product(m_big) + x.trace_product(m_big) + c).log2())
                    .sum();
                let mut diff = m_big.clone();
                diff.add_scaled(-1.0, reference);
                f - g_val - grad_g.inner(&diff)
            }
        }
    }
}

pub fn solve_fairness_subproblem(p: &TxSubproblem) -> SolverResult {
    solve_tx_subproblem(p, &SolverSettings::default())
}

pub fn solve_srm_subproblem(p: &TxSubproblem) -> SolverResult {
    solve_tx_subproblem(p, &SolverSettings::default())
}

/// Restriction of every block to the joint null space of its zero-cap PU
/// channels: `M_k = p B_k Y_k B_k^H` with orthonormal `B_k`.
struct Reduction {
    bases: Vec<CMatrix>,
    scale: f64,
}

impl Reduction {
    fn project(&self, a: &BlockDiag) -> Vec<CMatrix> {
        a.blocks()
            .iter()
            .zip(&self.bases)
            .map(|(ak, b)| b.adjoint() * ak * b)
            .collect()
    }

    fn lift(&self, ys: &[CMatrix]) -> BlockDiag {
        let s = C64::new(self.scale, 0.0);
        BlockDiag::from_blocks(
            ys.iter()
                .zip(&self.bases)
                .map(|(y, b)| b * y * b.adjoint() * s)
                .collect(),
        )
    }
}

pub fn is_zero_cap(x_p: &BlockDiag, gamma: f64, p: f64) -> bool {
    let peak = x_p.blocks().iter().map(real_trace).fold(0.0, f64::max);
    peak > 0.0 && gamma <= ZERO_CAP_RATIO * p * peak
}

/// Orthonormal basis per block of the directions that leak nothing into
/// any zero-cap PU.
pub fn zero_cap_null_spaces(x_p: &[BlockDiag], gamma: f64, p: f64, n_blocks: usize, size: usize) -> Vec<CMatrix> {
    let mut zero_sum: Vec<CMatrix> = vec![CMatrix::zeros(size, size); n_blocks];
    for x in x_p.iter().filter(|x| is_zero_cap(x, gamma, p)) {
        for (acc, b) in zero_sum.iter_mut().zip(x.blocks()) {
            *acc += b;
        }
    }
    zero_sum.iter().map(|s| null_space_basis(s, NULL_SPACE_TOL)).collect()
}

/// Coordinates of `y -> coeff * p * sum_k Re tr(A_k Y_k)`.
fn scaled_coords(layout: &HermitianLayout, red: &Reduction, a: &BlockDiag, coeff: f64) -> Vec<f64> {
    let mut g = layout.linear_coords(&red.project(a));
    let s = coeff * red.scale;
    for v in &mut g {
        *v *= s;
    }
    g
}

fn padded(mut v: Vec<f64>, extra: usize) -> Vec<f64> {
    v.resize(v.len() + extra, 0.0);
    v
}

fn failure(p: &TxSubproblem, status: SolverStatus) -> SolverResult {
    let m_big = BlockDiag::zeros(p.n_blocks(), p.block_size());
    SolverResult {
        objective_value: p.evaluate(&m_big),
        m_big,
        status,
        gap: f64::INFINITY,
        newton_steps: 0,
    }
}

pub fn solve_tx_subproblem(p: &TxSubproblem, settings: &SolverSettings) -> SolverResult {
    let n_s = p.n_blocks();
    let n_t = p.block_size();
    let budget = p.power_rule.budget();
    if !(budget > 0.0) || p.pu_caps.iter().any(|(_, g)| !(*g >= 0.0)) || p.consts.iter().any(|c| !(*c > 0.0)) {
        return failure(p, SolverStatus::Infeasible);
    }

    let mut zero_sum: Vec<CMatrix> = vec![CMatrix::zeros(n_t, n_t); n_s];
    let mut soft_caps = Vec::new();
    for (x, gamma) in &p.pu_caps {
        if is_zero_cap(x, *gamma, budget) {
            for (acc, b) in zero_sum.iter_mut().zip(x.blocks()) {
                *acc += b;
            }
        } else if !x.is_zero() {
            soft_caps.push((x, *gamma));
        }
    }
    let red = Reduction {
        bases: zero_sum.iter().map(|s| null_space_basis(s, NULL_SPACE_TOL)).collect(),
        scale: budget,
    };
    let layout = HermitianLayout::new(red.bases.iter().map(|b| b.ncols()).collect());

    let mut slacks = Vec::new();
    let identity = BlockDiag::from_blocks(vec![CMatrix::identity(n_t, n_t); n_s]);
    match p.power_rule {
        PowerRule::PerBlock(_) => {
            for k in 0..n_s {
                let mut e = BlockDiag::zeros(n_s, n_t);
                *e.block_mut(k) = CMatrix::identity(n_t, n_t);
                slacks.push(Affine {
                    coeffs: scaled_coords(&layout, &red, &e, -1.0 / budget),
                    constant: 1.0,
                });
            }
        }
        PowerRule::TotalTrace(_) => slacks.push(Affine {
            coeffs: scaled_coords(&layout, &red, &identity, -1.0 / budget),
            constant: 1.0,
        }),
    }
    for (x, gamma) in &soft_caps {
        slacks.push(Affine {
            coeffs: scaled_coords(&layout, &red, x, -1.0 / gamma),
            constant: 1.0,
        });
    }

    // Start at a multiple of the identity, strictly inside every slack.
    let unit = layout.scaled_identity(1.0);
    let alpha = slacks
        .iter()
        .map(|s| {
            let load = -s.coeffs.iter().zip(&unit).map(|(a, b)| a * b).sum::<f64>();
            if load > 0.0 {
                0.5 / load
            } else {
                f64::INFINITY
            }
        })
        .fold(1.0, f64::min);
    let y0 = layout.scaled_identity(alpha);

    let barrier_settings = BarrierSettings {
        gap_tol: settings.gap_tol,
        max_newton: settings.max_newton,
        mu: settings.mu,
    };

    let (problem, z0, unit_scale) = match &p.objective {
        TxObjective::LinearMaxMin { delta_min } => {
            let delta = *delta_min;
            let rows: Vec<(Vec<f64>, f64)> = p
                .blocks
                .iter()
                .zip(&p.consts)
                .map(|((q, x), c)| {
                    let mut a = q.clone();
                    a.add_scaled(-delta, x);
                    (scaled_coords(&layout, &red, &a, 1.0), -delta * c)
                })
                .collect();
            let s = p
                .blocks
                .iter()
                .zip(&p.consts)
                .map(|((q, x), c)| budget * q.trace() + delta * (budget * x.trace() + c))
                .fold(0.0, f64::max);
            let s = if s > 0.0 { s } else { 1.0 };
            let n = layout.len();
            let mut slacks: Vec<Affine> = slacks
                .into_iter()
                .map(|a| Affine {
                    coeffs: padded(a.coeffs, 1),
                    constant: a.constant,
                })
                .collect();
            let mut start_rows = f64::INFINITY;
            for (coeffs, constant) in rows {
                let mut c: Vec<f64> = coeffs.iter().map(|v| v / s).collect();
                c.push(-1.0);
                let row = Affine {
                    coeffs: c,
                    constant: constant / s,
                };
                let mut probe = y0.clone();
                probe.push(0.0);
                start_rows = start_rows.min(row.eval(&probe));
                slacks.push(row);
            }
            let mut linear = vec![0.0; n + 1];
            linear[n] = -1.0;
            let mut z0 = y0.clone();
            z0.push(start_rows - 1.0);
            (
                BarrierProblem {
                    layout: layout.clone(),
                    extra: 1,
                    linear,
                    logs: Vec::new(),
                    slacks,
                },
                z0,
                s,
            )
        }
        TxObjective::LinearizedSumRate { grad_g, .. } => {
            let logs = p
                .blocks
                .iter()
                .zip(&p.consts)
                .map(|((q, x), c)| {
                    let mut a = q.clone();
                    a.add_scaled(1.0, x);
                    Affine {
                        coeffs: scaled_coords(&layout, &red, &a, 1.0 / c),
                        constant: 1.0,
                    }
                })
                .collect();
            let linear = scaled_coords(&layout, &red, grad_g, std::f64::consts::LN_2);
            (
                BarrierProblem {
                    layout: layout.clone(),
                    extra: 0,
                    linear,
                    logs,
                    slacks,
                },
                y0.clone(),
                1.0 / std::f64::consts::LN_2,
            )
        }
    };

    let out = problem.solve(z0, 1.0, &barrier_settings);
    let ys = layout.blocks(&out.z[..layout.len()]);
    let mut m_big = red.lift(&ys);
    for k in 0..n_s {
        let b = m_big.block_mut(k);
        *b = crate::linalg::hermitian_part(b);
    }
    let objective_value = p.evaluate(&m_big);
    let status = if !objective_value.is_finite() {
        SolverStatus::NumericalTrouble
    } else {
        match out.status {
            BarrierStatus::Converged => SolverStatus::Optimal,
            BarrierStatus::MaxIters => SolverStatus::MaxIters,
            BarrierStatus::Stalled => SolverStatus::NumericalTrouble,
        }
    };
    SolverResult {
        m_big,
        objective_value,
        status,
        gap: out.gap * unit_scale,
        newton_steps: out.newton_steps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{principal_eigenpair, CVector};

    fn vec_c(v: &[(f64, f64)]) -> CVector {
        CVector::from_iterator(v.len(), v.iter().map(|&(a, b)| C64::new(a, b)))
    }

    fn single_stream(q: CMatrix, c: f64, rule: PowerRule) -> TxSubproblem {
        let n_t = q.nrows();
        TxSubproblem {
            objective: TxObjective::LinearMaxMin { delta_min: 0.0 },
            blocks: vec![(BlockDiag::from_blocks(vec![q]), BlockDiag::zeros(1, n_t))],
            pu_caps: Vec::new(),
            power_rule: rule,
            consts: vec![c],
        }
    }

    #[test]
    fn single_stream_fairness_matches_eigen_oracle() {
        let h = vec_c(&[(1.0, 0.2), (-0.4, 0.9)]);
        let q = crate::linalg::outer(&h, &h) + CMatrix::identity(2, 2) * C64::new(0.3, 0.0);
        let (lmax, _) = principal_eigenpair(&q);
        let p = single_stream(q, 1.0, PowerRule::PerBlock(10.0));
        let r = solve_fairness_subproblem(&p);
        assert_eq!(r.status, SolverStatus::Optimal);
        assert!((r.objective_value - 10.0 * lmax).abs() < 1e-5 * 10.0 * lmax);
        assert!(r.m_big.trace() <= 10.0 * (1.0 + 1e-9));
    }

    #[test]
    fn zero_cap_forces_null_space() {
        let h_sp = vec_c(&[(0.7, -0.1), (0.2, 0.5)]);
        let g = vec_c(&[(1.0, 0.0), (0.3, 0.3)]);
        let mut p = single_stream(crate::linalg::outer(&g, &g), 1.0, PowerRule::PerBlock(5.0));
        p.pu_caps = vec![(BlockDiag::from_blocks(vec![crate::linalg::outer(&h_sp, &h_sp)]), 0.0)];
        let r = solve_fairness_subproblem(&p);
        let leak = p.pu_caps[0].0.trace_product(&r.m_big);
        assert!(leak.abs() <= 1e-8 * r.m_big.trace() * h_sp.norm_squared());
        assert!(r.m_big.trace() > 1.0);
    }

    #[test]
    fn zero_channels_give_constant_tau() {
        let delta = 0.7;
        let p = TxSubproblem {
            objective: TxObjective::LinearMaxMin { delta_min: delta },
            blocks: vec![(BlockDiag::zeros(2, 2), BlockDiag::zeros(2, 2)); 2],
            pu_caps: Vec::new(),
            power_rule: PowerRule::TotalTrace(3.0),
            consts: vec![1.0, 2.5],
        };
        let r = solve_fairness_subproblem(&p);
        assert!((r.objective_value + delta * 2.5).abs() < 1e-9);
    }

    #[test]
    fn total_trace_rule_is_respected() {
        let g = vec_c(&[(1.0, 0.0), (0.0, 1.0)]);
        let q = crate::linalg::outer(&g, &g);
        let p = TxSubproblem {
            objective: TxObjective::LinearMaxMin { delta_min: 0.0 },
            blocks: vec![
                (BlockDiag::from_blocks(vec![q.clone(), CMatrix::zeros(2, 2)]), BlockDiag::zeros(2, 2)),
                (BlockDiag::from_blocks(vec![CMatrix::zeros(2, 2), q]), BlockDiag::zeros(2, 2)),
            ],
            pu_caps: Vec::new(),
            power_rule: PowerRule::TotalTrace(4.0),
            consts: vec![1.0, 1.0],
        };
        let r = solve_fairness_subproblem(&p);
        assert!(r.m_big.trace() <= 4.0 * (1.0 + 1e-9));
        // Equal split of the budget over two equal links: tau = 2 * 2.
        assert!((r.objective_value - 4.0).abs() < 1e-5);
    }
}
