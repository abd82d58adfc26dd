use std::f64::consts::LN_2;

use crate::linalg::BlockDiag;
use crate::sinr::TraceForms;

/// `sum_l log2(tr((Q_l + X_l) M) + c_l)`
pub fn f_value<F: TraceForms + ?Sized>(forms: &F, m_big: &BlockDiag) -> f64 {
    (0..forms.n_streams())
        .map(|l| {
            let total = forms.signal(l).trace_product(m_big) + forms.interference(l).trace_product(m_big);
            (total + forms.offset(l)).log2()
        })
        .sum()
}

/// `sum_l log2(tr(X_l M) + c_l)`
pub fn g_value<F: TraceForms + ?Sized>(forms: &F, m_big: &BlockDiag) -> f64 {
    (0..forms.n_streams())
        .map(|l| (forms.interference(l).trace_product(m_big) + forms.offset(l)).log2())
        .sum()
}

/// `sum_l X_l / ((tr(X_l M) + c_l) ln 2)`
pub fn grad_g<F: TraceForms + ?Sized>(forms: &F, m_big: &BlockDiag) -> BlockDiag {
    let first = forms.interference(0);
    let size = first.blocks().first().map_or(0, |b| b.nrows());
    let mut acc = BlockDiag::zeros(first.n_blocks(), size);
    for l in 0..forms.n_streams() {
        let x = forms.interference(l);
        let den = (x.trace_product(m_big) + forms.offset(l)) * LN_2;
        acc.add_scaled(1.0 / den, x);
    }
    acc
}

/// `f(M) - g(M_ref) - <grad_g(M_ref), M - M_ref>`
pub fn linearized_objective<F: TraceForms + ?Sized>(forms: &F, m_big: &BlockDiag, reference: &BlockDiag) -> f64 {
    let mut diff = m_big.clone();
    diff.add_scaled(-1.0, reference);
    f_value(forms, m_big) - g_value(forms, reference) - grad_g(forms, reference).inner(&diff)
}
