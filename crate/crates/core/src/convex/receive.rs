use nalgebra::Cholesky;

use crate::channel::ChannelSet;
use crate::error::ModelError;
use crate::linalg::{outer, CMatrix, CVector, C64};

/// Unit-norm MMSE receiver `R^{-1} H_ll m_l / ||.||` for stream `l`, with
/// `R` the interference-plus-noise covariance at receiver `l`.
pub fn mmse_receive(channels: &ChannelSet, m: &[CVector], l: usize) -> Result<CVector, ModelError> {
    let n_r = channels.n_r();
    let a = &channels.h_ss[l][l] * &m[l];
    if a.norm_squared() == 0.0 {
        return Err(ModelError::ZeroEffectiveChannel { stream: l });
    }
    let mut r = CMatrix::identity(n_r, n_r) * C64::new(channels.noise_var[l], 0.0);
    for i in 0..channels.n_p() {
        let h = &channels.h_ps[i][l];
        r += outer(h, h);
    }
    for (k, mk) in m.iter().enumerate() {
        if k != l {
            let b = &channels.h_ss[k][l] * mk;
            r += outer(&b, &b);
        }
    }
    let chol = Cholesky::new(r).expect("noise term keeps the covariance positive definite");
    let w = chol.solve(&a);
    let n = w.norm();
    Ok(w / C64::new(n, 0.0))
}
