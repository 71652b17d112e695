//! Truncated SVD by Golub-Kahan-Lanczos bidiagonalization with full
//! reorthogonalization. The matrix is only touched through products with
//! vectors, so the cost per step is `O(nnz)` plus `O(p·(m+n))` for
//! reorthogonalization against the `p` basis vectors built so far.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LsiError;

/// A linear operator known only through `A·x` and `Aᵀ·y`.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `y = A x`, `x.len() == ncols`.
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    /// `x = Aᵀ y`, `y.len() == nrows`.
    fn apply_transpose(&self, y: &[f64]) -> Vec<f64>;
    /// Frobenius norm, used to scale breakdown tests.
    fn frobenius_norm(&self) -> f64;
}

struct Transposed<'a, A: LinearOperator + ?Sized>(&'a A);

impl<A: LinearOperator + ?Sized> LinearOperator for Transposed<'_, A> {
    fn nrows(&self) -> usize {
        self.0.ncols()
    }
    fn ncols(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.0.apply_transpose(x)
    }
    fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        self.0.apply(y)
    }
    fn frobenius_norm(&self) -> f64 {
        self.0.frobenius_norm()
    }
}

#[derive(Debug, Clone)]
pub struct SvdOptions {
    /// Seed of the random starting vector (and of restart vectors after breakdown).
    pub seed: u64,
    /// Convergence threshold on the triplet residual, relative to σ₁.
    pub tol: f64,
    /// Cap on the Krylov dimension; `None` means `min(m, n)`, at which the
    /// factorization is exact and convergence is guaranteed.
    pub max_steps: Option<usize>,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions { seed: 0x5eed_5fc3, tol: 1e-11, max_steps: None }
    }
}

/// Top-`k` singular triplets. `u` is `m×k`, `vt` is `k×n`, `s` is non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdResult {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub vt: DMatrix<f64>,
}

impl SvdResult {
    pub fn k(&self) -> usize {
        self.s.len()
    }

    /// Keeps the leading `k` triplets.
    pub fn truncate(&self, k: usize) -> SvdResult {
        let k = k.min(self.k());
        SvdResult { u: self.u.columns(0, k).into_owned(), s: self.s[..k].to_vec(), vt: self.vt.rows(0, k).into_owned() }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Two passes of classical Gram-Schmidt against `basis`.
fn reorthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(w, q);
            w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
        }
    }
}

/// A random unit vector orthogonal to `basis`. Requires `basis.len() < dim`.
fn random_orthogonal(rng: &mut ChaCha8Rng, dim: usize, basis: &[Vec<f64>]) -> Vec<f64> {
    loop {
        let mut w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        reorthogonalize(&mut w, basis);
        let nw = norm(&w);
        if nw > 1e-8 {
            w.iter_mut().for_each(|x| *x /= nw);
            return w;
        }
    }
}

/// Normalizes `w` in place and returns its former norm, or substitutes a
/// fresh orthogonal direction (returning 0) when `w` has collapsed.
fn normalize_or_restart(w: &mut Vec<f64>, basis: &[Vec<f64>], breakdown: f64, rng: &mut ChaCha8Rng) -> f64 {
    let nw = norm(w);
    if nw <= breakdown {
        *w = random_orthogonal(rng, w.len(), basis);
        0.0
    } else {
        w.iter_mut().for_each(|x| *x /= nw);
        nw
    }
}

pub fn truncated_svd_op<A: LinearOperator + ?Sized>(a: &A, k: usize, opts: &SvdOptions) -> Result<SvdResult, LsiError> {
    let (m, n) = (a.nrows(), a.ncols());
    let kmax = m.min(n);
    if k == 0 || k > kmax {
        return Err(LsiError::KTooLarge { k, max: kmax });
    }
    let mut res = if m < n {
        // run on Aᵀ so the right basis lives in the smaller space
        let t = lanczos(&Transposed(a), k, opts)?;
        SvdResult { u: t.vt.transpose(), s: t.s, vt: t.u.transpose() }
    } else {
        lanczos(a, k, opts)?
    };
    fix_signs(&mut res);
    Ok(res)
}

/// Flips each pair so the largest-magnitude entry of the `u` column is positive.
fn fix_signs(res: &mut SvdResult) {
    for i in 0..res.k() {
        let col = res.u.column(i);
        let mut best = 0;
        for (r, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() {
                best = r;
            }
        }
        if col[best] < 0.0 {
            res.u.column_mut(i).neg_mut();
            res.vt.row_mut(i).neg_mut();
        }
    }
}

/// Core iteration; assumes `nrows >= ncols`.
fn lanczos<A: LinearOperator + ?Sized>(a: &A, k: usize, opts: &SvdOptions) -> Result<SvdResult, LsiError> {
    let (m, n) = (a.nrows(), a.ncols());
    debug_assert!(m >= n);
    let kmax = n;
    let cap = opts.max_steps.unwrap_or(kmax).clamp(k, kmax);
    let breakdown = 1e-13 * a.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut vs: Vec<Vec<f64>> = Vec::new();
    let mut us: Vec<Vec<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    let v0 = random_orthogonal(&mut rng, n, &[]);
    let mut u0 = a.apply(&v0);
    let alpha0 = normalize_or_restart(&mut u0, &us, breakdown, &mut rng);
    vs.push(v0);
    us.push(u0);
    alphas.push(alpha0);

    let mut p = (2 * k + 10).min(cap);
    loop {
        // residual direction for the current basis: Aᵀ u_p - α_p v_p
        let mut w;
        let mut beta;
        loop {
            let j = vs.len() - 1;
            w = a.apply_transpose(&us[j]);
            w.iter_mut().zip(&vs[j]).for_each(|(x, v)| *x -= alphas[j] * v);
            reorthogonalize(&mut w, &vs);
            beta = norm(&w);
            if vs.len() >= p {
                break;
            }
            let beta_j = normalize_or_restart(&mut w, &vs, breakdown, &mut rng);
            let mut z = a.apply(&w);
            z.iter_mut().zip(&us[j]).for_each(|(x, u)| *x -= beta_j * u);
            reorthogonalize(&mut z, &us);
            let alpha = normalize_or_restart(&mut z, &us, breakdown, &mut rng);
            vs.push(w);
            us.push(z);
            betas.push(beta_j);
            alphas.push(alpha);
        }

        let p_now = vs.len();
        let mut b = DMatrix::<f64>::zeros(p_now, p_now);
        for j in 0..p_now {
            b[(j, j)] = alphas[j];
            if j + 1 < p_now {
                b[(j, j + 1)] = betas[j];
            }
        }
        let svd = b.svd(true, true);
        let (bu, bvt) = (svd.u.expect("requested u"), svd.v_t.expect("requested v_t"));
        let mut order: Vec<usize> = (0..p_now).collect();
        order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
        let sigma1 = svd.singular_values[order[0]];

        let exhausted = p_now >= kmax;
        let residual = order[..k].iter().map(|&i| beta * bu[(p_now - 1, i)].abs()).fold(0.0, f64::max);
        // an exactly invariant subspace can hide repeated values; keep
        // extending (with a fresh direction) instead of accepting it
        let converged = exhausted || (beta > breakdown && residual <= opts.tol * sigma1.max(f64::MIN_POSITIVE));

        if converged {
            let mut u = DMatrix::<f64>::zeros(m, k);
            let mut vt = DMatrix::<f64>::zeros(k, n);
            let mut s = Vec::with_capacity(k);
            for (col, &i) in order[..k].iter().enumerate() {
                s.push(svd.singular_values[i]);
                for (j, basis) in us.iter().enumerate() {
                    let c = bu[(j, i)];
                    for r in 0..m {
                        u[(r, col)] += c * basis[r];
                    }
                }
                for (j, basis) in vs.iter().enumerate() {
                    let c = bvt[(i, j)];
                    for r in 0..n {
                        vt[(col, r)] += c * basis[r];
                    }
                }
            }
            return Ok(SvdResult { u, s, vt });
        }
        if p_now >= cap {
            return Err(LsiError::ConvergenceFailure { steps: p_now, residual: residual / sigma1 });
        }
        p = (p_now + k.max(10)).min(cap);
    }
}
