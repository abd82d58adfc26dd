//! Primal log-barrier path-following over a product of Hermitian PSD
//! blocks, with an optional trailing scalar variable.
//!
//! The decision vector `z` holds the real coordinates of every block
//! followed by `extra` free scalars. A `d x d` Hermitian block uses `d^2`
//! coordinates: the `d` diagonal entries, then `(re, im)` of each entry
//! above the diagonal.
//!
//! The problem solved is
//!
//! ```text
//! minimize    linear . z  -  sum_i ln(logs_i(z))
//! subject to  slacks_j(z) > 0,   Y_k(z) > 0
//! ```
//!
//! with every `logs_i` and `slacks_j` affine.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::linalg::{hpd_cholesky, CMatrix, C64};

#[derive(Debug, Clone)]
pub(crate) struct HermitianLayout {
    dims: Vec<usize>,
    offsets: Vec<usize>,
    len: usize,
}

impl HermitianLayout {
    pub fn new(dims: Vec<usize>) -> Self {
        let mut offsets = Vec::with_capacity(dims.len());
        let mut len = 0;
        for &d in &dims {
            offsets.push(len);
            len += d * d;
        }
        Self { dims, offsets, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Coordinates `g` with `g . x = sum_k Re tr(A_k Y_k(x))` for Hermitian `A_k`.
    pub fn linear_coords(&self, blocks: &[CMatrix]) -> Vec<f64> {
        let mut g = vec![0.0; self.len];
        for (k, a) in blocks.iter().enumerate() {
            write_linear(a, &mut g[self.offsets[k]..self.offsets[k] + self.dims[k] * self.dims[k]]);
        }
        g
    }

    pub fn block(&self, x: &[f64], k: usize) -> CMatrix {
        let d = self.dims[k];
        let c = &x[self.offsets[k]..self.offsets[k] + d * d];
        let mut y = CMatrix::zeros(d, d);
        for i in 0..d {
            y[(i, i)] = C64::new(c[i], 0.0);
        }
        let mut p = d;
        for i in 0..d {
            for j in i + 1..d {
                let v = C64::new(c[p], c[p + 1]);
                y[(i, j)] = v;
                y[(j, i)] = v.conj();
                p += 2;
            }
        }
        y
    }

    pub fn blocks(&self, x: &[f64]) -> Vec<CMatrix> {
        (0..self.dims.len()).map(|k| self.block(x, k)).collect()
    }

    pub fn scaled_identity(&self, alpha: f64) -> Vec<f64> {
        let mut x = vec![0.0; self.len];
        for (k, &d) in self.dims.iter().enumerate() {
            for i in 0..d {
                x[self.offsets[k] + i] = alpha;
            }
        }
        x
    }
}

/// Coordinates of `Y -> Re tr(A Y)` for one block.
fn write_linear(a: &CMatrix, out: &mut [f64]) {
    let d = a.nrows();
    for i in 0..d {
        out[i] = a[(i, i)].re;
    }
    let mut p = d;
    for i in 0..d {
        for j in i + 1..d {
            // A_ij conj(Y_ij) + A_ji Y_ij, with A Hermitian.
            let s = a[(i, j)] + a[(j, i)].conj();
            out[p] = s.re;
            out[p + 1] = s.im;
            p += 2;
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Affine {
    pub coeffs: Vec<f64>,
    pub constant: f64,
}

impl Affine {
    pub fn eval(&self, z: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().zip(z).map(|(a, b)| a * b).sum::<f64>()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BarrierProblem {
    pub layout: HermitianLayout,
    pub extra: usize,
    pub linear: Vec<f64>,
    pub logs: Vec<Affine>,
    pub slacks: Vec<Affine>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BarrierSettings {
    pub gap_tol: f64,
    pub max_newton: usize,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BarrierStatus {
    Converged,
    MaxIters,
    Stalled,
}

#[derive(Debug, Clone)]
pub(crate) struct BarrierOutcome {
    pub z: Vec<f64>,
    pub gap: f64,
    pub status: BarrierStatus,
    pub newton_steps: usize,
}

impl BarrierProblem {
    fn dim(&self) -> usize {
        self.layout.len() + self.extra
    }

    /// `nu` of the barrier: block sizes plus one per scalar slack.
    fn barrier_parameter(&self) -> f64 {
        (self.layout.dims().iter().sum::<usize>() + self.slacks.len()) as f64
    }

    pub fn objective(&self, z: &[f64]) -> f64 {
        let lin: f64 = self.linear.iter().zip(z).map(|(a, b)| a * b).sum();
        lin - self.logs.iter().map(|l| l.eval(z).ln()).sum::<f64>()
    }

    /// Cholesky factors of every block, or `None` outside the PSD interior.
    fn factor_blocks(&self, z: &[f64]) -> Option<Vec<Cholesky<C64, nalgebra::Dyn>>> {
        (0..self.layout.dims().len())
            .filter(|&k| self.layout.dims()[k] > 0)
            .map(|k| hpd_cholesky(self.layout.block(z, k)))
            .collect()
    }

    /// `t * objective + barrier`, or `None` if `z` is not strictly feasible.
    fn value(&self, z: &[f64], t: f64) -> Option<f64> {
        let mut v = 0.0;
        for s in &self.slacks {
            let x = s.eval(z);
            if !(x > 0.0) {
                return None;
            }
            v -= x.ln();
        }
        for l in &self.logs {
            let x = l.eval(z);
            if !(x > 0.0) {
                return None;
            }
        }
        for chol in self.factor_blocks(z)? {
            let ld: f64 = chol.l_dirty().diagonal().iter().map(|x| x.re.ln()).sum::<f64>() * 2.0;
            v -= ld;
        }
        let obj = self.objective(z);
        if !obj.is_finite() || !v.is_finite() {
            return None;
        }
        Some(t * obj + v)
    }

    /// Gradient and Hessian of `t * objective + barrier` at a feasible `z`.
    fn derivatives(&self, z: &[f64], t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.dim();
        let mut grad = DVector::from_iterator(n, self.linear.iter().map(|x| x * t));
        let mut hess = DMatrix::<f64>::zeros(n, n);

        let mut rank_one = |coeffs: &[f64], gscale: f64, hscale: f64| {
            for (i, &a) in coeffs.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                grad[i] += gscale * a;
                let ha = hscale * a;
                for (j, &b) in coeffs.iter().enumerate() {
                    hess[(i, j)] += ha * b;
                }
            }
        };
        for l in &self.logs {
            let v = l.eval(z);
            rank_one(&l.coeffs, -t / v, t / (v * v));
        }
        for s in &self.slacks {
            let v = s.eval(z);
            rank_one(&s.coeffs, -1.0 / v, 1.0 / (v * v));
        }

        // -ln det Y: gradient -Y^{-1}, Hessian D -> Y^{-1} D Y^{-1}.
        for (k, &d) in self.layout.dims().iter().enumerate() {
            if d == 0 {
                continue;
            }
            let off = self.layout.offsets[k];
            let y = self.layout.block(z, k);
            let zinv = match hpd_cholesky(y) {
                Some(c) => c.inverse(),
                None => continue,
            };
            let mut g = vec![0.0; d * d];
            write_linear(&zinv, &mut g);
            for (i, gi) in g.iter().enumerate() {
                grad[off + i] -= gi;
            }
            let mut col = vec![0.0; d * d];
            for (a, basis) in basis_pairs(d).enumerate() {
                let w = sandwich(&zinv, basis);
                write_linear(&w, &mut col);
                for (b, v) in col.iter().enumerate() {
                    hess[(off + a, off + b)] += v;
                }
            }
        }
        (grad, hess)
    }

    pub fn solve(&self, z0: Vec<f64>, t0: f64, settings: &BarrierSettings) -> BarrierOutcome {
        let nu = self.barrier_parameter().max(1.0);
        let mut z = z0;
        let mut t = t0.max(1e-12);
        let mut steps = 0;
        let mut status = BarrierStatus::Converged;

        'outer: loop {
            // Centering by damped Newton.
            loop {
                if steps >= settings.max_newton {
                    status = BarrierStatus::MaxIters;
                    break 'outer;
                }
                let (grad, hess) = self.derivatives(&z, t);
                let step = match newton_direction(&hess, &grad) {
                    Some(s) => s,
                    None => {
                        status = BarrierStatus::Stalled;
                        break 'outer;
                    }
                };
                steps += 1;
                let dec2 = -grad.dot(&step);
                if !(dec2.is_finite()) {
                    status = BarrierStatus::Stalled;
                    break 'outer;
                }
                if dec2 / 2.0 <= 1e-10 {
                    break;
                }
                let f0 = match self.value(&z, t) {
                    Some(v) => v,
                    None => {
                        status = BarrierStatus::Stalled;
                        break 'outer;
                    }
                };
                let mut alpha = 1.0;
                let mut accepted = None;
                for _ in 0..80 {
                    let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, b)| a + alpha * b).collect();
                    if let Some(f) = self.value(&trial, t) {
                        if f <= f0 - 0.25 * alpha * dec2 {
                            accepted = Some(trial);
                            break;
                        }
                    }
                    alpha *= 0.5;
                }
                match accepted {
                    Some(next) => z = next,
                    None => {
                        // Newton decrement this small is roundoff-level progress.
                        if dec2 < 1e-6 {
                            break;
                        }
                        status = BarrierStatus::Stalled;
                        break 'outer;
                    }
                }
            }
            let gap = nu / t;
            if gap <= settings.gap_tol * self.objective(&z).abs().max(1.0) {
                break;
            }
            t *= settings.mu;
        }
        BarrierOutcome {
            z,
            gap: nu / t,
            status,
            newton_steps: steps,
        }
    }
}

/// Hermitian basis matrices in coordinate order, as (i, j, kind) triples.
#[derive(Clone, Copy)]
enum Basis {
    Diag(usize),
    Re(usize, usize),
    Im(usize, usize),
}

fn basis_pairs(d: usize) -> impl Iterator<Item = Basis> {
    let diag = (0..d).map(Basis::Diag);
    let off = (0..d).flat_map(move |i| (i + 1..d).flat_map(move |j| [Basis::Re(i, j), Basis::Im(i, j)]));
    diag.chain(off)
}

/// `Z E Z` for a basis matrix `E`, with `Z` Hermitian.
fn sandwich(z: &CMatrix, basis: Basis) -> CMatrix {
    let d = z.nrows();
    match basis {
        // E = e_i e_i^T
        Basis::Diag(i) => CMatrix::from_fn(d, d, |p, q| z[(p, i)] * z[(i, q)]),
        // E = e_i e_j^T + e_j e_i^T
        Basis::Re(i, j) => CMatrix::from_fn(d, d, |p, q| z[(p, i)] * z[(j, q)] + z[(p, j)] * z[(i, q)]),
        // E = i (e_i e_j^T - e_j e_i^T)
        Basis::Im(i, j) => CMatrix::from_fn(d, d, |p, q| {
            (z[(p, i)] * z[(j, q)] - z[(p, j)] * z[(i, q)]) * C64::new(0.0, 1.0)
        }),
    }
}

fn newton_direction(hess: &DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = hess.diagonal().iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    let mut reg = 0.0;
    for _ in 0..6 {
        let mut h = hess.clone();
        if reg > 0.0 {
            for i in 0..h.nrows() {
                h[(i, i)] += reg;
            }
        }
        if let Some(c) = Cholesky::new(h) {
            let s = c.solve(&(-grad));
            if s.iter().all(|x| x.is_finite()) {
                return Some(s);
            }
        }
        reg = if reg == 0.0 { scale * 1e-14 } else { reg * 100.0 };
    }
    None
}
