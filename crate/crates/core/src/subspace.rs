//! Overlap and viability between subspaces, restriction of operators to a
//! frame, and low-energy support extraction.
//!
//! Subspaces are given by frames: matrices whose columns span them. Frames
//! need not be orthonormal; they are orthonormalized on entry.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{CMat, Real, C};
use crate::spectral::{eigh, orthonormal_span, HermitianOperator, ZERO_EIGENVALUE};
use crate::tensor::{Mpo, SubspaceMps};

const FRAME_TOL: f64 = 1e-12;

fn ortho<R: Real>(a: &CMat<R>) -> CMat<R> {
    if a.ncols() == 0 {
        return a.clone();
    }
    orthonormal_span(a, R::tol(FRAME_TOL))
}

/// `μ = min_{a ∈ A, ‖a‖=1} ‖P_B a‖²`, the smallest eigenvalue of
/// `Γ_A P_B Γ_A†`. An empty `A` gives `μ = 1`.
pub fn overlap<R: Real>(a: &CMat<R>, b: &CMat<R>) -> Result<R> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "subspaces of spaces with dimensions {} and {}",
            a.nrows(),
            b.nrows()
        )));
    }
    let (a, b) = (ortho(a), ortho(b));
    if a.ncols() == 0 {
        return Ok(R::one());
    }
    if b.ncols() == 0 {
        return Ok(R::zero());
    }
    let m = a.adjoint() * &b;
    let g = &m * m.adjoint();
    let lo = eigh(&g).values.first().copied().unwrap_or(R::zero());
    Ok(lo.max(R::zero()).min(R::one()))
}

/// Viability error of `y` for `z`: `1 − min_{z} ‖P_Y z‖²`, i.e. how well `y`
/// covers every unit vector of `z`.
pub fn viability_error<R: Real>(y: &CMat<R>, z: &CMat<R>) -> Result<R> {
    Ok(R::one() - overlap(z, y)?)
}

/// Both one-sided viability errors between two subspaces.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ViabilityReport {
    /// `y` covering `z`.
    pub delta: f64,
    /// `1 − delta`.
    pub mu: f64,
    /// `z` covering `y`.
    pub reverse_delta: f64,
    /// `max(delta, reverse_delta)`.
    pub closeness: f64,
}

pub fn viability_report<R: Real>(y: &CMat<R>, z: &CMat<R>) -> Result<ViabilityReport> {
    let delta = viability_error(y, z)?.to_f64_lossy();
    let reverse_delta = viability_error(z, y)?.to_f64_lossy();
    Ok(ViabilityReport { delta, mu: 1.0 - delta, reverse_delta, closeness: delta.max(reverse_delta) })
}

/// Haar-random `v`-dimensional subspace of the span of `frame`.
pub fn random_dense_subspace<R: Real>(frame: &CMat<R>, v: usize, seed: u64) -> Result<CMat<R>> {
    let f = ortho(frame);
    if v > f.ncols() {
        return Err(Error::VTooLarge { requested: v, available: f.ncols() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = CMat::<R>::from_fn(f.ncols(), v, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C::new(R::lit(re), R::lit(im))
    });
    let q = g.qr().q();
    Ok(f * q.columns(0, v))
}

/// `Γ A Γ†` for an orthonormal frame `Γ†`.
pub fn restrict_operator<R: Real>(a: &CMat<R>, frame: &CMat<R>) -> Result<CMat<R>> {
    if a.ncols() != frame.nrows() || a.nrows() != frame.nrows() {
        return Err(Error::DimensionMismatch("operator and frame live in different spaces".into()));
    }
    Ok(frame.adjoint() * a * frame)
}

/// `Γ A Γ†` with `A` an MPO and `Γ†` an isometric subspace MPS.
pub fn restrict_mpo<R: Real>(a: &Mpo<R>, y: &SubspaceMps<R>) -> Result<CMat<R>> {
    y.restrict_mpo(a)
}

/// Eigenvectors of `hres` with eigenvalue in `[−1e-9, δ]`, as columns in
/// the frame's coordinates.
pub fn low_energy_support<R: Real>(hres: &CMat<R>, delta: R) -> Result<CMat<R>> {
    let op = HermitianOperator::new(hres.clone())?;
    Ok(op.eigh().select(-R::tol(ZERO_EIGENVALUE), delta))
}

/// `Z̃ = Y · U` for the low-energy coordinates `U` of `hres`.
pub fn low_energy_subspace<R: Real>(y: &SubspaceMps<R>, hres: &CMat<R>, delta: R) -> Result<SubspaceMps<R>> {
    let u = low_energy_support(hres, delta)?;
    y.apply_frame(&u)
}

/// Viability before and after applying an operator.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ErrorReduction {
    pub delta_before: f64,
    pub mu_before: f64,
    pub delta_after: f64,
    pub mu_after: f64,
    /// `‖κ P_{Z⊥}‖²`.
    pub shrinking: f64,
}

impl ErrorReduction {
    /// `δ′/μ′ ≤ Δ·δ/μ + tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.delta_after / self.mu_after <= self.shrinking * self.delta_before / self.mu_before + tol
    }
}

/// Measures the viability of `V` and `κV` for `Z`.
pub fn error_reduction_check<R: Real>(v: &CMat<R>, z: &CMat<R>, kappa: &CMat<R>) -> Result<ErrorReduction> {
    let delta_before = viability_error(v, z)?.to_f64_lossy();
    let kv = kappa * v;
    let delta_after = viability_error(&kv, z)?.to_f64_lossy();
    let zf = ortho(z);
    let n = kappa.nrows();
    let perp = CMat::<R>::identity(n, n) - &zf * zf.adjoint();
    let s = crate::spectral::operator_norm(&(kappa * perp)).to_f64_lossy();
    Ok(ErrorReduction {
        delta_before,
        mu_before: 1.0 - delta_before,
        delta_after,
        mu_after: 1.0 - delta_after,
        shrinking: s * s,
    })
}

/// Dense `trim_ε^A` for a bipartition `A ⊗ B` with `dim A = left_dim`.
/// Reference implementation of the tensor-network version.
pub fn dense_trim<R: Real>(y: &CMat<R>, left_dim: usize, eps: R) -> Result<CMat<R>> {
    let f = ortho(y);
    let n = f.nrows();
    if n % left_dim != 0 {
        return Err(Error::DimensionMismatch(format!("{left_dim} does not divide {n}")));
    }
    if eps <= R::zero() {
        return Ok(f);
    }
    let right = n / left_dim;
    let p = &f * f.adjoint();
    let rho = CMat::<R>::from_fn(left_dim, left_dim, |a, a2| {
        (0..right).fold(C::new(R::zero(), R::zero()), |acc, b| acc + p[(a * right + b, a2 * right + b)])
    });
    let keep = eigh(&rho).select(eps, R::lit(f64::INFINITY));
    let proj = (&keep * keep.adjoint()).kronecker(&CMat::<R>::identity(right, right));
    let image = proj * f;
    Ok(orthonormal_span(&image, R::tol(1e-10)))
}
