//! Trace forms of the SINR and PU interference, in both the
//! receive-dependent version and the receive-free lower-bound version.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSet, ScenarioConfig, SystemModel};
use crate::error::ModelError;
use crate::linalg::{outer, BlockDiag, CMatrix, CVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamformerSet {
    /// Transmit vectors, length `n_t` each.
    pub m: Vec<CVector>,
    /// Receive vectors, length `n_r` each.
    pub w: Vec<CVector>,
}

impl BeamformerSet {
    pub fn n_s(&self) -> usize {
        self.m.len()
    }

    /// `blkdiag(m_1 m_1^H, ..., m_N m_N^H)`
    pub fn transmit_blocks(&self) -> BlockDiag {
        BlockDiag::from_vectors(&self.m)
    }

    pub fn tx_powers(&self) -> Vec<f64> {
        self.m.iter().map(|m| m.norm_squared()).collect()
    }
}

/// Coefficient matrices of the trace-form SINR
/// `tr(Q_l M) / (tr(X_l M) + offset_l)` and of the PU caps `tr(X_p(j) M)`.
pub trait TraceForms {
    fn n_streams(&self) -> usize;
    /// `Q_s(l)`: only block `l` is nonzero.
    fn signal(&self, l: usize) -> &BlockDiag;
    /// `X_s(l)`: block `l` is zero.
    fn interference(&self, l: usize) -> &BlockDiag;
    fn pu(&self) -> &[BlockDiag];
    /// Reverse PU interference plus noise at receiver `l`.
    fn offset(&self, l: usize) -> f64;

    fn offsets(&self) -> Vec<f64> {
        (0..self.n_streams()).map(|l| self.offset(l)).collect()
    }
}

/// Trace forms for fixed receive vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockForms {
    pub q_s: Vec<BlockDiag>,
    pub x_s: Vec<BlockDiag>,
    pub x_p: Vec<BlockDiag>,
    /// `sum_i |w_l^H h_ps(i,l)|^2`
    pub i_ps: Vec<f64>,
    pub noise_var: Vec<f64>,
}

/// Receive-free trace forms built from `H^H H` Gram matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedForms {
    pub q_tbf: Vec<BlockDiag>,
    pub x_tbf: Vec<BlockDiag>,
    pub x_p: Vec<BlockDiag>,
    /// `sum_i ||h_ps(i,l)||^2`
    pub i_ps_tbf: Vec<f64>,
    pub noise_var: Vec<f64>,
}

impl TraceForms for BlockForms {
    fn n_streams(&self) -> usize {
        self.q_s.len()
    }
    fn signal(&self, l: usize) -> &BlockDiag {
        &self.q_s[l]
    }
    fn interference(&self, l: usize) -> &BlockDiag {
        &self.x_s[l]
    }
    fn pu(&self) -> &[BlockDiag] {
        &self.x_p
    }
    fn offset(&self, l: usize) -> f64 {
        self.i_ps[l] + self.noise_var[l]
    }
}

impl TraceForms for ReducedForms {
    fn n_streams(&self) -> usize {
        self.q_tbf.len()
    }
    fn signal(&self, l: usize) -> &BlockDiag {
        &self.q_tbf[l]
    }
    fn interference(&self, l: usize) -> &BlockDiag {
        &self.x_tbf[l]
    }
    fn pu(&self) -> &[BlockDiag] {
        &self.x_p
    }
    fn offset(&self, l: usize) -> f64 {
        self.i_ps_tbf[l] + self.noise_var[l]
    }
}

/// `X_p(j) = blkdiag(h_sp(1,j)^H h_sp(1,j), ...)`
pub fn pu_blocks(channels: &ChannelSet) -> Vec<BlockDiag> {
    let n_s = channels.n_s();
    (0..channels.n_p())
        .map(|j| {
            BlockDiag::from_blocks(
                (0..n_s)
                    .map(|k| {
                        let h = &channels.h_sp[k][j];
                        h.adjoint() * h
                    })
                    .collect(),
            )
        })
        .collect()
}

/// Places Gram matrix `gram(k)` in block `k` for the interference form and
/// block `l` alone for the signal form.
fn assemble(n_s: usize, n_t: usize, l: usize, gram: impl Fn(usize) -> CMatrix) -> (BlockDiag, BlockDiag) {
    let mut q = BlockDiag::zeros(n_s, n_t);
    let mut x = BlockDiag::zeros(n_s, n_t);
    for k in 0..n_s {
        if k == l {
            *q.block_mut(k) = gram(k);
        } else {
            *x.block_mut(k) = gram(k);
        }
    }
    (q, x)
}

pub fn build_block_forms(channels: &ChannelSet, w: &[CVector]) -> Result<BlockForms, ModelError> {
    let (n_s, n_t, n_r) = (channels.n_s(), channels.n_t(), channels.n_r());
    if w.len() != n_s {
        return Err(ModelError::DimensionMismatch {
            what: "receive vector count",
            expected: n_s,
            got: w.len(),
        });
    }
    if let Some(bad) = w.iter().find(|v| v.len() != n_r) {
        return Err(ModelError::DimensionMismatch {
            what: "receive vector length",
            expected: n_r,
            got: bad.len(),
        });
    }
    let mut q_s = Vec::with_capacity(n_s);
    let mut x_s = Vec::with_capacity(n_s);
    let mut i_ps = Vec::with_capacity(n_s);
    for l in 0..n_s {
        let wl = &w[l];
        // G_ss(k,l) = a a^H with a = H_ss(k,l)^H w_l
        let (q, x) = assemble(n_s, n_t, l, |k| {
            let a = channels.h_ss[k][l].adjoint() * wl;
            outer(&a, &a)
        });
        q_s.push(q);
        x_s.push(x);
        i_ps.push(
            (0..channels.n_p())
                .map(|i| wl.dotc(&channels.h_ps[i][l]).norm_sqr())
                .sum(),
        );
    }
    Ok(BlockForms {
        q_s,
        x_s,
        x_p: pu_blocks(channels),
        i_ps,
        noise_var: channels.noise_var.clone(),
    })
}

pub fn build_reduced_forms(channels: &ChannelSet) -> ReducedForms {
    let (n_s, n_t) = (channels.n_s(), channels.n_t());
    let mut q_tbf = Vec::with_capacity(n_s);
    let mut x_tbf = Vec::with_capacity(n_s);
    let mut i_ps_tbf = Vec::with_capacity(n_s);
    for l in 0..n_s {
        let (q, x) = assemble(n_s, n_t, l, |k| {
            let h = &channels.h_ss[k][l];
            h.adjoint() * h
        });
        q_tbf.push(q);
        x_tbf.push(x);
        i_ps_tbf.push((0..channels.n_p()).map(|i| channels.h_ps[i][l].norm_squared()).sum());
    }
    ReducedForms {
        q_tbf,
        x_tbf,
        x_p: pu_blocks(channels),
        i_ps_tbf,
        noise_var: channels.noise_var.clone(),
    }
}

/// SINR of stream `l` computed from the vectors directly.
pub fn sinr_direct(channels: &ChannelSet, bf: &BeamformerSet, l: usize) -> f64 {
    let wl = &bf.w[l];
    let signal = wl.dotc(&(&channels.h_ss[l][l] * &bf.m[l])).norm_sqr();
    let pu: f64 = (0..channels.n_p())
        .map(|i| wl.dotc(&channels.h_ps[i][l]).norm_sqr())
        .sum();
    let su: f64 = (0..bf.n_s())
        .filter(|&k| k != l)
        .map(|k| wl.dotc(&(&channels.h_ss[k][l] * &bf.m[k])).norm_sqr())
        .sum();
    signal / (pu + su + channels.noise_var[l])
}

pub fn sinrs_direct(channels: &ChannelSet, bf: &BeamformerSet) -> Vec<f64> {
    (0..bf.n_s()).map(|l| sinr_direct(channels, bf, l)).collect()
}

/// Receive-free SINR lower bound of stream `l` from the transmit vectors.
pub fn sinr_reduced(channels: &ChannelSet, m: &[CVector], l: usize) -> f64 {
    let signal = (&channels.h_ss[l][l] * &m[l]).norm_squared();
    let pu: f64 = (0..channels.n_p()).map(|i| channels.h_ps[i][l].norm_squared()).sum();
    let su: f64 = (0..m.len())
        .filter(|&k| k != l)
        .map(|k| (&channels.h_ss[k][l] * &m[k]).norm_squared())
        .sum();
    signal / (pu + su + channels.noise_var[l])
}

pub fn sinr_trace<F: TraceForms + ?Sized>(forms: &F, m_big: &BlockDiag, l: usize) -> f64 {
    let num = forms.signal(l).trace_product(m_big);
    let den = forms.interference(l).trace_product(m_big) + forms.offset(l);
    num / den
}

pub fn sinrs_trace<F: TraceForms + ?Sized>(forms: &F, m_big: &BlockDiag) -> Vec<f64> {
    (0..forms.n_streams()).map(|l| sinr_trace(forms, m_big, l)).collect()
}

/// `tr(X_p(j) M)`
pub fn pu_interference<F: TraceForms + ?Sized>(forms: &F, m_big: &BlockDiag, j: usize) -> f64 {
    forms.pu()[j].trace_product(m_big)
}

/// `sum_k |h_sp(k,j) m_k|^2`
pub fn pu_interference_direct(channels: &ChannelSet, m: &[CVector], j: usize) -> f64 {
    m.iter()
        .enumerate()
        .map(|(k, mk)| (&channels.h_sp[k][j] * mk)[(0, 0)].norm_sqr())
        .sum()
}

pub fn sum_rate(sinrs: &[f64]) -> f64 {
    sinrs.iter().map(|s| (1.0 + s).log2()).sum()
}

/// Slack (limit minus attained) for each constraint; negative means violated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    /// Per stream for IC/MAC, a single entry for BC.
    pub tx_power_slack: Vec<f64>,
    pub rx_norm_slack: Vec<f64>,
    pub pu_slack: Vec<f64>,
    pub p_t: f64,
    pub gamma: f64,
}

impl ConstraintReport {
    /// Slacks allowed to go negative by `rel_tol` times their limit.
    pub fn is_feasible(&self, rel_tol: f64) -> bool {
        self.tx_power_slack.iter().all(|&s| s >= -rel_tol * self.p_t)
            && self.rx_norm_slack.iter().all(|&s| s >= -rel_tol)
            && self.pu_slack.iter().all(|&s| s >= -rel_tol * self.gamma)
    }
}

fn tx_slacks(config: &ScenarioConfig, powers: &[f64]) -> Vec<f64> {
    match config.model {
        SystemModel::Bc => vec![config.p_t - powers.iter().sum::<f64>()],
        SystemModel::Ic | SystemModel::Mac => powers.iter().map(|p| config.p_t - p).collect(),
    }
}

pub fn constraint_residuals(config: &ScenarioConfig, channels: &ChannelSet, bf: &BeamformerSet) -> ConstraintReport {
    ConstraintReport {
        tx_power_slack: tx_slacks(config, &bf.tx_powers()),
        rx_norm_slack: bf.w.iter().map(|w| 1.0 - w.norm_squared()).collect(),
        pu_slack: (0..channels.n_p())
            .map(|j| config.gamma - pu_interference_direct(channels, &bf.m, j))
            .collect(),
        p_t: config.p_t,
        gamma: config.gamma,
    }
}

/// Residuals of a relaxed block-diagonal transmit covariance (no receive part).
pub fn transmit_residuals(config: &ScenarioConfig, channels: &ChannelSet, m_big: &BlockDiag) -> ConstraintReport {
    let powers: Vec<f64> = m_big.blocks().iter().map(crate::linalg::real_trace).collect();
    let x_p = pu_blocks(channels);
    ConstraintReport {
        tx_power_slack: tx_slacks(config, &powers),
        rx_norm_slack: Vec::new(),
        pu_slack: x_p.iter().map(|x| config.gamma - x.trace_product(m_big)).collect(),
        p_t: config.p_t,
        gamma: config.gamma,
    }
}
