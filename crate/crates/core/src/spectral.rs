//! Dense Hermitian spectral calculus: eigen-decomposition, spectral
//! projections `1_[a,b](A)`, operator norms and orthonormal frames.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::{cr, CMat, Real, C};

/// Eigenvalues below this magnitude count as zero when forming kernels.
pub const ZERO_EIGENVALUE: f64 = 1e-9;

/// Relative Hermiticity tolerance for [`HermitianOperator::new`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Relative residual accepted from a dense factorization. nalgebra's complex
/// Householder reductions occasionally return a wrong factorization for
/// matrices with exact zero structure, so every result is checked and, when
/// the check fails, recomputed on the adjoint or on a randomly rotated copy.
const FACTORIZATION_TOL: f64 = 1e-9;
const ROTATION_ATTEMPTS: u64 = 6;

fn residual_ok<R: Real>(residual: R, scale: R) -> bool {
    let scale = scale.max(R::lit(f64::MIN_POSITIVE));
    residual.is_finite() && residual <= R::tol(FACTORIZATION_TOL) * scale
}

/// Haar-random unitary of size `n`, deterministic in `seed`.
fn random_unitary<R: Real>(n: usize, seed: u64) -> CMat<R> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = CMat::<R>::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C::new(R::lit(re), R::lit(im))
    });
    g.qr().q()
}

/// Dense Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator<R: Real> {
    entries: CMat<R>,
}

impl<R: Real> HermitianOperator<R> {
    /// Checks Hermiticity to [`HERMITIAN_TOL`] relative to the Frobenius norm
    /// and symmetrizes the stored entries.
    pub fn new(entries: CMat<R>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} is not square",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let deviation = hermitian_deviation(&entries);
        let scale = entries.norm().max(R::one());
        if deviation > R::tol(HERMITIAN_TOL) * scale {
            return Err(Error::NotHermitian {
                deviation: deviation.to_f64_lossy(),
            });
        }
        Ok(Self::new_unchecked(entries))
    }

    /// Wraps without validation; the matrix is symmetrized.
    pub fn new_unchecked(entries: CMat<R>) -> Self {
        let half = cr(R::lit(0.5));
        let sym = (&entries + entries.adjoint()) * half;
        HermitianOperator { entries: sym }
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianOperator {
            entries: CMat::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        HermitianOperator {
            entries: CMat::identity(dim, dim),
        }
    }

    pub fn dimension(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMat<R> {
        &self.entries
    }

    pub fn into_matrix(self) -> CMat<R> {
        self.entries
    }

    /// Eigenvalues in ascending order with matching eigenvector columns.
    pub fn eigh(&self) -> Eigh<R> {
        eigh(&self.entries)
    }
}

/// Frobenius norm of `A - A†`.
pub fn hermitian_deviation<R: Real>(a: &CMat<R>) -> R {
    (a - a.adjoint()).norm()
}

/// Sorted eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct Eigh<R: Real> {
    pub values: Vec<R>,
    pub vectors: CMat<R>,
}

impl<R: Real> Eigh<R> {
    /// Columns whose eigenvalue lies in `[lo, hi]`.
    pub fn select(&self, lo: R, hi: R) -> CMat<R> {
        let idx: Vec<usize> = (0..self.values.len())
            .filter(|&k| self.values[k] >= lo && self.values[k] <= hi)
            .collect();
        self.vectors.select_columns(idx.iter())
    }

    /// Rebuild `V f(Λ) V†`.
    pub fn apply_fn(&self, f: impl Fn(R) -> R) -> CMat<R> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for k in 0..n {
            let w = f(self.values[k]);
            scaled.column_mut(k).scale_mut(w);
        }
        scaled * self.vectors.adjoint()
    }
}

pub fn eigh<R: Real>(a: &CMat<R>) -> Eigh<R> {
    let n = a.nrows();
    if n == 0 {
        return Eigh {
            values: Vec::new(),
            vectors: CMat::zeros(0, 0),
        };
    }
    let half = cr(R::lit(0.5));
    let sym = (a + a.adjoint()) * half;
    let scale = sym.norm();
    let attempt = |m: &CMat<R>| {
        let dec = m.clone().symmetric_eigen();
        let mut lam = dec.eigenvectors.clone();
        for (k, &v) in dec.eigenvalues.iter().enumerate() {
            lam.column_mut(k).scale_mut(v);
        }
        let residual = (m * &dec.eigenvectors - lam).norm()
            + (dec.eigenvectors.adjoint() * &dec.eigenvectors - CMat::<R>::identity(n, n)).norm() * scale;
        (dec.eigenvalues.iter().copied().collect::<Vec<R>>(), dec.eigenvectors, residual)
    };
    let (mut values, mut vectors, mut residual) = attempt(&sym);
    let mut seed = 0;
    while !residual_ok(residual, scale) && seed < ROTATION_ATTEMPTS {
        let w = random_unitary::<R>(n, seed);
        let (v2, vec2, r2) = attempt(&(w.adjoint() * &sym * &w));
        if r2 < residual {
            (values, vectors, residual) = (v2, w * vec2, r2);
        }
        seed += 1;
    }
    if !residual_ok(residual, scale) {
        log::warn!("eigendecomposition residual {residual} on a matrix of norm {scale}");
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap_or(std::cmp::Ordering::Equal));
    let sorted = order.iter().map(|&k| values[k]).collect();
    let vectors = vectors.select_columns(order.iter());
    Eigh { values: sorted, vectors }
}

/// Sum of the eigenprojectors of `A` with eigenvalue in `[a, b]` (inclusive).
pub fn spectral_projection<R: Real>(op: &HermitianOperator<R>, a: R, b: R) -> CMat<R> {
    let frame = op.eigh().select(a, b);
    &frame * frame.adjoint()
}

/// Same as [`spectral_projection`] but validates a raw matrix first.
pub fn spectral_projection_checked<R: Real>(a: &CMat<R>, lo: R, hi: R) -> Result<CMat<R>> {
    let op = HermitianOperator::new(a.clone())?;
    Ok(spectral_projection(&op, lo, hi))
}

/// Projector onto the numerical kernel, `1_[-1e-9, 1e-9](A)`.
pub fn kernel_projector<R: Real>(op: &HermitianOperator<R>) -> CMat<R> {
    let z = R::tol(ZERO_EIGENVALUE);
    spectral_projection(op, -z, z)
}

/// Orthonormal basis of the numerical kernel.
pub fn kernel_frame<R: Real>(op: &HermitianOperator<R>) -> CMat<R> {
    let z = R::tol(ZERO_EIGENVALUE);
    op.eigh().select(-z, z)
}

/// Largest singular value.
pub fn operator_norm<R: Real>(a: &CMat<R>) -> R {
    if a.nrows() == 0 || a.ncols() == 0 {
        return R::zero();
    }
    svd(a).s.first().copied().unwrap_or(R::zero())
}

/// Singular values in descending order.
pub fn singular_values<R: Real>(a: &CMat<R>) -> Vec<R> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    svd(a).s
}

/// Thin SVD with singular values sorted in descending order.
pub struct Svd<R: Real> {
    pub u: CMat<R>,
    pub s: Vec<R>,
    pub v_t: CMat<R>,
}

pub fn svd<R: Real>(a: &CMat<R>) -> Svd<R> {
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return Svd {
            u: CMat::zeros(m, 0),
            s: Vec::new(),
            v_t: CMat::zeros(0, n),
        };
    }
    let scale = a.norm();
    let (mut best, mut residual) = raw_svd(a);
    if !residual_ok(residual, scale) {
        let (adj, r) = raw_svd(&a.adjoint());
        if r < residual {
            best = Svd { u: adj.v_t.adjoint(), s: adj.s, v_t: adj.u.adjoint() };
            residual = r;
        }
    }
    let mut seed = 0;
    while !residual_ok(residual, scale) && seed < ROTATION_ATTEMPTS {
        let w = random_unitary::<R>(n, seed);
        let (rot, r) = raw_svd(&(a * &w));
        if r < residual {
            best = Svd { u: rot.u, s: rot.s, v_t: rot.v_t * w.adjoint() };
            residual = r;
        }
        seed += 1;
    }
    if !residual_ok(residual, scale) {
        log::warn!("SVD residual {residual} on a matrix of norm {scale}");
    }
    best
}

/// nalgebra's SVD, sorted, with its reconstruction residual.
fn raw_svd<R: Real>(a: &CMat<R>) -> (Svd<R>, R) {
    let k = a.nrows().min(a.ncols());
    let dec = a.clone().svd(true, true);
    let u = dec.u.expect("requested U");
    let v_t = dec.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| {
        dec.singular_values[j]
            .partial_cmp(&dec.singular_values[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let s: Vec<R> = order.iter().map(|&i| dec.singular_values[i]).collect();
    let u = u.select_columns(order.iter());
    let v_t = v_t.select_rows(order.iter());
    let mut us = u.clone();
    for (c, &x) in s.iter().enumerate() {
        us.column_mut(c).scale_mut(x);
    }
    let residual = (us * &v_t - a).norm()
        + (u.adjoint() * &u - CMat::<R>::identity(k, k)).norm() * a.norm()
        + (&v_t * v_t.adjoint() - CMat::<R>::identity(k, k)).norm() * a.norm();
    (Svd { u, s, v_t }, residual)
}

/// Thin `A = Q R` with `Q` isometric. `R` is upper triangular unless the
/// Householder result fails its check, in which case `Q R` comes from the
/// SVD and `R` is a general matrix.
pub fn thin_qr<R: Real>(a: &CMat<R>) -> (CMat<R>, CMat<R>) {
    let qr = a.clone().qr();
    let (q, r) = (qr.q(), qr.r());
    let k = q.ncols();
    let residual = (&q * &r - a).norm() + (q.adjoint() * &q - CMat::<R>::identity(k, k)).norm() * a.norm();
    if residual_ok(residual, a.norm()) || a.nrows() == 0 || a.ncols() == 0 {
        return (q, r);
    }
    let dec = svd(a);
    let mut sv = dec.v_t.clone();
    for (row, &x) in dec.s.iter().enumerate() {
        sv.row_mut(row).scale_mut(x);
    }
    (dec.u, sv)
}

/// Orthonormal basis for the column span of `a`, dropping singular values at
/// or below `rel_tol` times the largest one.
pub fn orthonormal_span<R: Real>(a: &CMat<R>, rel_tol: R) -> CMat<R> {
    let dec = svd(a);
    let top = dec.s.first().copied().unwrap_or(R::zero());
    if top <= R::zero() {
        return CMat::zeros(a.nrows(), 0);
    }
    let keep = dec.s.iter().take_while(|&&s| s > rel_tol * top).count();
    dec.u.columns(0, keep).into_owned()
}

/// Projector onto the span of an orthonormal frame.
pub fn frame_projector<R: Real>(frame: &CMat<R>) -> CMat<R> {
    frame * frame.adjoint()
}

/// `max |F†F - I|` entrywise, the isometry defect of a frame.
pub fn isometry_defect<R: Real>(frame: &CMat<R>) -> R {
    let g = frame.adjoint() * frame;
    let n = g.nrows();
    let mut worst = R::zero();
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { R::one() } else { R::zero() };
            let d = g[(i, j)] - cr(target);
            let m = d.norm_sqr().sqrt();
            if m > worst {
                worst = m;
            }
        }
    }
    worst
}
