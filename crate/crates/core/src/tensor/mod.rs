//! Matrix product states and operators with one site per lattice column.
//!
//! A chain is a list of three-index tensors `T[l, s, r]` stored row-major,
//! flat index `(l·p + s)·r + r'`. Operator sites use `s = out·in_dim + in`.

mod io;
mod mpo;
mod mps;

pub use io::{LatticeInfo, MpoFile, MpsFile, TensorFile, FORMAT_NAME, FORMAT_VERSION};
pub use mpo::{Mpo, TrimReport};
pub use mps::{SubspaceMps, TrimStep, SPAN_TOL};

use crate::scalar::{cr, CMat, Real, C};
use crate::spectral::svd;

/// Relative singular-value floor used for "exact" rank compression.
pub const EXACT_FLOOR: f64 = 1e-12;

/// Three-index tensor `(left bond, physical, right bond)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3<R: Real> {
    pub l: usize,
    pub p: usize,
    pub r: usize,
    pub data: Vec<C<R>>,
}

impl<R: Real> Tensor3<R> {
    pub fn zeros(l: usize, p: usize, r: usize) -> Self {
        Tensor3 { l, p, r, data: vec![C::new(R::zero(), R::zero()); l * p * r] }
    }

    pub fn from_data(l: usize, p: usize, r: usize, data: Vec<C<R>>) -> Self {
        assert_eq!(data.len(), l * p * r, "tensor data length");
        Tensor3 { l, p, r, data }
    }

    #[inline]
    pub fn at(&self, a: usize, s: usize, b: usize) -> C<R> {
        self.data[(a * self.p + s) * self.r + b]
    }

    #[inline]
    pub fn at_mut(&mut self, a: usize, s: usize, b: usize) -> &mut C<R> {
        &mut self.data[(a * self.p + s) * self.r + b]
    }

    /// `(l·p) × r` view.
    pub fn left_matrix(&self) -> CMat<R> {
        CMat::from_row_slice(self.l * self.p, self.r, &self.data)
    }

    /// `l × (p·r)` view.
    pub fn right_matrix(&self) -> CMat<R> {
        CMat::from_row_slice(self.l, self.p * self.r, &self.data)
    }

    pub fn from_left_matrix(m: &CMat<R>, p: usize) -> Self {
        let l = m.nrows() / p;
        Tensor3::from_data(l, p, m.ncols(), to_row_major(m))
    }

    pub fn from_right_matrix(m: &CMat<R>, p: usize) -> Self {
        let r = m.ncols() / p;
        Tensor3::from_data(m.nrows(), p, r, to_row_major(m))
    }

    pub fn norm_sqr(&self) -> R {
        self.data.iter().fold(R::zero(), |acc, z| acc + z.norm_sqr())
    }
}

pub(crate) fn to_row_major<R: Real>(m: &CMat<R>) -> Vec<C<R>> {
    m.transpose().as_slice().to_vec()
}

/// Permutes the axes of a row-major array: output axis `k` is input axis
/// `perm[k]`.
pub(crate) fn permute<T: Copy>(data: &[T], dims: &[usize], perm: &[usize]) -> Vec<T> {
    let n = dims.len();
    debug_assert_eq!(perm.len(), n);
    let mut in_strides = vec![1usize; n];
    for k in (0..n.saturating_sub(1)).rev() {
        in_strides[k] = in_strides[k + 1] * dims[k + 1];
    }
    let out_dims: Vec<usize> = perm.iter().map(|&a| dims[a]).collect();
    let strides: Vec<usize> = perm.iter().map(|&a| in_strides[a]).collect();
    let total: usize = dims.iter().product();
    let mut out = Vec::with_capacity(total);
    if total == 0 {
        return out;
    }
    let mut counter = vec![0usize; n];
    let mut offset = 0usize;
    for _ in 0..total {
        out.push(data[offset]);
        for k in (0..n).rev() {
            counter[k] += 1;
            offset += strides[k];
            if counter[k] < out_dims[k] {
                break;
            }
            offset -= strides[k] * out_dims[k];
            counter[k] = 0;
        }
    }
    out
}

/// Left-canonicalizes sites `0..n-1` by QR, pushing the remainder into the
/// last site.
pub(crate) fn left_canonicalize<R: Real>(chain: &mut [Tensor3<R>]) {
    for j in 0..chain.len().saturating_sub(1) {
        let p = chain[j].p;
        let (q, r) = crate::spectral::thin_qr(&chain[j].left_matrix());
        chain[j] = Tensor3::from_left_matrix(&q, p);
        let next = &chain[j + 1];
        let merged = r * next.right_matrix();
        chain[j + 1] = Tensor3::from_right_matrix(&merged, next.p);
    }
}

/// Right-to-left SVD sweep over sites `n-1 ..= stop+1`. At the cut left of
/// site `j` the singular values are handed to `keep(j, s)`, which returns how
/// many to retain. Returns the singular values seen at each visited cut
/// (indexed by the site to the left of the cut) and the squared weight
/// dropped.
pub(crate) fn right_sweep<R: Real>(
    chain: &mut [Tensor3<R>],
    stop: usize,
    mut keep: impl FnMut(usize, &[R]) -> usize,
) -> (Vec<(usize, Vec<R>)>, R) {
    let mut seen = Vec::new();
    let mut dropped = R::zero();
    let n = chain.len();
    for j in (stop + 1..n).rev() {
        let p = chain[j].p;
        let dec = svd(&chain[j].right_matrix());
        let k = keep(j - 1, &dec.s).min(dec.s.len());
        for &s in &dec.s[k..] {
            dropped += s * s;
        }
        let vt = dec.v_t.rows(0, k).into_owned();
        let mut us = dec.u.columns(0, k).into_owned();
        for (c, &s) in dec.s[..k].iter().enumerate() {
            us.column_mut(c).scale_mut(s);
        }
        chain[j] = Tensor3::from_right_matrix(&vt, p);
        let prev = &chain[j - 1];
        let merged = prev.left_matrix() * us;
        chain[j - 1] = Tensor3::from_left_matrix(&merged, prev.p);
        seen.push((j - 1, dec.s));
    }
    seen.reverse();
    (seen, dropped)
}

/// Number of singular values above `rel · s_max` (and above zero).
pub(crate) fn count_above<R: Real>(s: &[R], rel: R) -> usize {
    let top = s.first().copied().unwrap_or(R::zero());
    if top <= R::zero() {
        return 0;
    }
    s.iter().take_while(|&&x| x > rel * top).count()
}

/// Contracts the chain into a matrix `(Π p) × r_last` (left bond must be 1).
pub(crate) fn contract_chain<R: Real>(chain: &[Tensor3<R>]) -> CMat<R> {
    let mut acc = CMat::<R>::from_element(1, 1, cr(R::one()));
    for t in chain {
        let rows = acc.nrows();
        let prod = acc * t.right_matrix();
        acc = CMat::from_row_slice(rows * t.p, t.r, &to_row_major(&prod));
    }
    acc
}

/// `E' = Σ_s X[:,s,:]† E Y[:,s,:]`: one step of the transfer-matrix product
/// for `⟨X|Y⟩`, with `E` of shape `l_X × l_Y`.
pub(crate) fn transfer<R: Real>(e: &CMat<R>, x: &Tensor3<R>, y: &Tensor3<R>) -> CMat<R> {
    debug_assert_eq!(x.p, y.p);
    // (E Y) as l_X × (p r_Y), reshaped to (l_X p) × r_Y
    let ey = e * y.right_matrix();
    let ey = CMat::from_row_slice(x.l * y.p, y.r, &to_row_major(&ey));
    x.left_matrix().adjoint() * ey
}
