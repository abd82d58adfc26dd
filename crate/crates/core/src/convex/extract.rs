use crate::linalg::{principal_eigenpair, real_trace, BlockDiag, CMatrix, CVector, C64};

/// Streams whose block trace is below this are switched off.
const OFF_TRACE: f64 = 1e-12;

/// Principal-eigenvector beamformer `sqrt(lambda_1) u_1` of a PSD block and
/// its rank-one quality `lambda_1 / tr`. The largest-magnitude entry of the
/// result is real and nonnegative.
pub fn extract_beamformer(block: &CMatrix) -> (CVector, f64) {
    let n = block.nrows();
    let tr = real_trace(block);
    if tr < OFF_TRACE {
        return (CVector::zeros(n), 1.0);
    }
    let (lambda, u) = principal_eigenpair(block);
    let lambda = lambda.clamp(0.0, tr);
    let pivot = u
        .iter()
        .enumerate()
        .fold((0, 0.0), |best, (i, z)| if z.norm() > best.1 { (i, z.norm()) } else { best })
        .0;
    let phase = u[pivot].conj() / C64::new(u[pivot].norm(), 0.0);
    let mut m = u * (phase * C64::new(lambda.sqrt(), 0.0));
    m[pivot] = C64::new(m[pivot].re.max(0.0), 0.0);
    (m, lambda / tr)
}

/// `tr(X_p(j) blkdiag(m m^H))` for every PU.
pub fn pu_load(x_p: &[BlockDiag], m: &[CVector]) -> Vec<f64> {
    x_p.iter()
        .map(|x| {
            x.blocks()
                .iter()
                .zip(m)
                .map(|(b, v)| v.dotc(&(b * v)).re)
                .sum()
        })
        .collect()
}

/// Scales all transmit vectors by one common factor so that no cap is
/// exceeded beyond roundoff. Returns the factor applied.
///
/// A load counts as violating only above `gamma (1 + 1e-9)` and above the
/// roundoff floor `1e-14 * p_t * sum_k tr(X_p(j)_k)`.
pub fn enforce_pu_caps(x_p: &[BlockDiag], gamma: f64, p_t: f64, m: &mut [CVector]) -> f64 {
    let mut factor: f64 = 1.0;
    for (x, load) in x_p.iter().zip(pu_load(x_p, m)) {
        let floor = 1e-14 * p_t * x.trace();
        if load > gamma * (1.0 + 1e-9) && load > floor {
            factor = factor.min((gamma.max(floor) / load).sqrt());
        }
    }
    if factor < 1.0 {
        for v in m.iter_mut() {
            *v *= C64::new(factor, 0.0);
        }
    }
    factor
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::outer;

    #[test]
    fn rank_one_block_round_trips() {
        let v = CVector::from_vec(vec![C64::new(0.3, -1.2), C64::new(0.5, 0.4)]);
        let (m, q) = extract_beamformer(&outer(&v, &v));
        assert!((q - 1.0).abs() < 1e-12);
        assert!((outer(&m, &m) - outer(&v, &v)).norm() < 1e-12);
        let pivot = if m[0].norm() >= m[1].norm() { 0 } else { 1 };
        assert_eq!(m[pivot].im, 0.0);
        assert!(m[pivot].re >= 0.0);
    }

    #[test]
    fn identity_has_half_quality() {
        let (m, q) = extract_beamformer(&CMatrix::identity(2, 2));
        assert!((q - 0.5).abs() < 1e-12);
        assert!((m.norm_squared() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tiny_block_is_switched_off() {
        let (m, q) = extract_beamformer(&(CMatrix::identity(3, 3) * C64::new(1e-14, 0.0)));
        assert_eq!(q, 1.0);
        assert_eq!(m.norm(), 0.0);
    }

    #[test]
    fn cap_scaling_restores_feasibility() {
        let h = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        let x = vec![BlockDiag::from_blocks(vec![outer(&h, &h)])];
        let mut m = vec![CVector::from_vec(vec![C64::new(2.0, 0.0), C64::new(0.0, 0.0)])];
        let f = enforce_pu_caps(&x, 1.0, 10.0, &mut m);
        assert!(f < 1.0);
        assert!(pu_load(&x, &m)[0] <= 1.0 * (1.0 + 1e-12));
        let unchanged = enforce_pu_caps(&x, 100.0, 10.0, &mut m);
        assert_eq!(unchanged, 1.0);
    }
}
