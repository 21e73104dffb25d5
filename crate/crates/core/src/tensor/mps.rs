use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::{cr, CMat, Real, C};
use crate::spectral::svd;

use super::mpo::{tt_split, Mpo};
use super::{contract_chain, count_above, left_canonicalize, permute, right_sweep, to_row_major, transfer, Tensor3, EXACT_FLOOR};

/// Relative cutoff used when re-orthonormalizing a frame: directions whose
/// singular value falls at or below this fraction of the largest are dropped.
pub const SPAN_TOL: f64 = 1e-10;

/// A subspace of the first `n` columns, stored as an MPS whose rightmost
/// bond (the degeneracy index) enumerates a frame of the subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceMps<R: Real> {
    tensors: Vec<Tensor3<R>>,
    phys_dims: Vec<usize>,
    isometric: bool,
}

/// Result of one `trim_eps` step.
#[derive(Clone, Debug)]
pub struct TrimStep<R: Real> {
    pub cut: usize,
    pub kept: usize,
    pub discarded: usize,
    /// Sum of the discarded eigenvalues of the left reduced density matrix.
    pub discarded_weight: R,
}

impl<R: Real> SubspaceMps<R> {
    /// The one-dimensional space of the empty chain.
    pub fn empty() -> Self {
        SubspaceMps { tensors: Vec::new(), phys_dims: Vec::new(), isometric: true }
    }

    pub fn new(tensors: Vec<Tensor3<R>>, isometric: bool) -> Result<Self> {
        if let Some(first) = tensors.first() {
            if first.l != 1 {
                return Err(Error::ShapeMismatch("leftmost bond must be 1".into()));
            }
        }
        for w in tensors.windows(2) {
            if w[0].r != w[1].l {
                return Err(Error::ShapeMismatch("inconsistent bond dimensions".into()));
            }
        }
        let phys_dims = tensors.iter().map(|t| t.p).collect();
        Ok(SubspaceMps { tensors, phys_dims, isometric })
    }

    /// Computational basis state with digit `digits[j]` on column `j`.
    pub fn basis_state(digits: &[usize], phys_dims: &[usize]) -> Self {
        let tensors = digits
            .iter()
            .zip(phys_dims)
            .map(|(&s, &d)| {
                let mut t = Tensor3::zeros(1, d, 1);
                *t.at_mut(0, s, 0) = cr(R::one());
                t
            })
            .collect();
        SubspaceMps { tensors, phys_dims: phys_dims.to_vec(), isometric: true }
    }

    /// Compresses a dense frame (rows indexed by the columns' joint basis,
    /// first column most significant) into MPS form.
    pub fn from_dense(frame: &CMat<R>, phys_dims: &[usize]) -> Result<Self> {
        let total: usize = phys_dims.iter().product();
        if frame.nrows() != total || phys_dims.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "frame has {} rows, columns span {total}",
                frame.nrows()
            )));
        }
        let tensors = tt_split(to_row_major(frame), 1, phys_dims, frame.ncols(), R::zero());
        let isometric = crate::spectral::isometry_defect(frame) < R::tol(1e-8);
        Ok(SubspaceMps { tensors, phys_dims: phys_dims.to_vec(), isometric })
    }

    pub fn num_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn phys_dims(&self) -> &[usize] {
        &self.phys_dims
    }

    pub fn tensors(&self) -> &[Tensor3<R>] {
        &self.tensors
    }

    pub fn is_isometric(&self) -> bool {
        self.isometric
    }

    /// Dimension of the degeneracy bond.
    pub fn degeneracy(&self) -> usize {
        self.tensors.last().map_or(1, |t| t.r)
    }

    /// Bond dimensions at the internal cuts.
    pub fn bond_dims(&self) -> Vec<usize> {
        let n = self.tensors.len();
        self.tensors[..n.saturating_sub(1)].iter().map(|t| t.r).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Dense frame, `(Π d) × degeneracy`.
    pub fn to_dense(&self) -> CMat<R> {
        contract_chain(&self.tensors)
    }

    /// `Y ⊗ H_d`: appends a column whose basis joins the degeneracy index.
    pub fn extend(&self, d: usize) -> Self {
        let deg = self.degeneracy();
        let mut t = Tensor3::zeros(deg, d, deg * d);
        for a in 0..deg {
            for s in 0..d {
                *t.at_mut(a, s, a * d + s) = cr(R::one());
            }
        }
        let mut out = self.clone();
        out.tensors.push(t);
        out.phys_dims.push(d);
        out
    }

    /// Right-multiplies the frame by `u` (`degeneracy × k`).
    pub fn apply_frame(&self, u: &CMat<R>) -> Result<Self> {
        if u.nrows() != self.degeneracy() {
            return Err(Error::DimensionMismatch(format!(
                "frame map has {} rows, degeneracy is {}",
                u.nrows(),
                self.degeneracy()
            )));
        }
        let mut out = self.clone();
        match out.tensors.last_mut() {
            Some(last) => {
                let m = last.left_matrix() * u;
                *last = Tensor3::from_left_matrix(&m, last.p);
            }
            None => {
                // scalar chain: keep as a zero-site frame only when trivial
                if u.ncols() != 1 {
                    return Err(Error::DimensionMismatch("empty chain holds one vector".into()));
                }
            }
        }
        out.isometric = out.isometric && crate::spectral::isometry_defect(u) < R::tol(1e-10);
        Ok(out)
    }

    /// Haar-random `v`-dimensional subspace of an isometric frame.
    pub fn random_subspace(&self, v: usize, seed: u64) -> Result<Self> {
        let deg = self.degeneracy();
        if v > deg {
            return Err(Error::VTooLarge { requested: v, available: deg });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = CMat::<R>::from_fn(deg, v, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C::new(R::lit(re), R::lit(im))
        });
        let q = g.qr().q();
        self.apply_frame(&q.columns(0, v).into_owned())
    }

    /// `K·Y` without re-orthonormalization. An open right bond of `K` is
    /// merged into the degeneracy index (major position).
    pub fn apply_raw(&self, k: &Mpo<R>) -> Result<Self> {
        if k.len() != self.num_sites() || k.in_dims() != self.phys_dims.as_slice() {
            return Err(Error::ShapeMismatch(format!(
                "operator on {} sites cannot act on a {}-site subspace",
                k.len(),
                self.num_sites()
            )));
        }
        let tensors = k
            .tensors()
            .iter()
            .zip(&self.tensors)
            .enumerate()
            .map(|(j, (a, y))| {
                let (o, i) = (k.out_dims()[j], k.in_dims()[j]);
                let ap = permute(&a.data, &[a.l, o, i, a.r], &[0, 1, 3, 2]);
                let am = CMat::from_row_slice(a.l * o * a.r, i, &ap);
                let yp = permute(&y.data, &[y.l, i, y.r], &[1, 0, 2]);
                let ym = CMat::from_row_slice(i, y.l * y.r, &yp);
                let prod = to_row_major(&(am * ym)); // [aK, o, bK, aY, bY]
                let data = permute(&prod, &[a.l, o, a.r, y.l, y.r], &[0, 3, 1, 2, 4]);
                Tensor3::from_data(a.l * y.l, o, a.r * y.r, data)
            })
            .collect();
        Ok(SubspaceMps { tensors, phys_dims: k.out_dims().to_vec(), isometric: false })
    }

    /// `K·Y`, re-orthonormalized (the column space of the image).
    pub fn apply(&self, k: &Mpo<R>) -> Result<Self> {
        Ok(self.apply_raw(k)?.orthonormalize(R::tol(SPAN_TOL)))
    }

    /// Orthonormal frame for the span of the current frame vectors, with
    /// bonds compressed to their exact ranks. Directions with singular value
    /// at or below `span_tol · s_max` are dropped.
    pub fn orthonormalize(&self, span_tol: R) -> Self {
        let mut out = self.clone();
        out.isometric = true;
        let n = out.tensors.len();
        if n == 0 {
            return out;
        }
        left_canonicalize(&mut out.tensors);
        let last = &out.tensors[n - 1];
        let p = last.p;
        let dec = svd(&last.left_matrix());
        let keep = count_above(&dec.s, span_tol);
        if keep == 0 {
            out.tensors[n - 1] = Tensor3::zeros(last.l, p, 0);
            return out;
        }
        out.tensors[n - 1] = Tensor3::from_left_matrix(&dec.u.columns(0, keep).into_owned(), p);
        let floor = R::tol(EXACT_FLOOR);
        right_sweep(&mut out.tensors, 0, |_, s| count_above(s, floor).max(1));
        left_canonicalize(&mut out.tensors);
        let last = &out.tensors[n - 1];
        let (q, _) = crate::spectral::thin_qr(&last.left_matrix());
        out.tensors[n - 1] = Tensor3::from_left_matrix(&q.columns(0, keep).into_owned(), p);
        out
    }

    /// `⟨self|other⟩`, a `deg(self) × deg(other)` matrix.
    pub fn inner(&self, other: &SubspaceMps<R>) -> Result<CMat<R>> {
        if self.phys_dims != other.phys_dims {
            return Err(Error::DimensionMismatch("subspaces live in different spaces".into()));
        }
        let mut e = CMat::<R>::from_element(1, 1, cr(R::one()));
        for (x, y) in self.tensors.iter().zip(&other.tensors) {
            e = transfer(&e, x, y);
        }
        Ok(e)
    }

    pub fn gram(&self) -> CMat<R> {
        self.inner(self).expect("same space")
    }

    /// `⟨y_i|O|y_j⟩` for an operator `O` acting on columns `first..=last`
    /// (zero-based), dense on those columns.
    pub fn expectation(&self, op: &CMat<R>, first: usize, last: usize) -> Result<CMat<R>> {
        let n = self.num_sites();
        if first > last || last >= n {
            return Err(Error::DimensionMismatch(format!("columns {first}..={last} outside 0..{n}")));
        }
        let block_dim: usize = self.phys_dims[first..=last].iter().product();
        if op.nrows() != block_dim || op.ncols() != block_dim {
            return Err(Error::DimensionMismatch(format!(
                "observable is {}x{}, columns span {block_dim}",
                op.nrows(),
                op.ncols()
            )));
        }
        let mut e = CMat::<R>::from_element(1, 1, cr(R::one()));
        for t in &self.tensors[..first] {
            e = transfer(&e, t, t);
        }
        let mut block = self.tensors[first].clone();
        for t in &self.tensors[first + 1..=last] {
            let merged = block.left_matrix() * t.right_matrix();
            block = Tensor3::from_data(block.l, block.p * t.p, t.r, to_row_major(&merged));
        }
        let bp = permute(&block.data, &[block.l, block.p, block.r], &[1, 0, 2]);
        let moved = op * CMat::from_row_slice(block.p, block.l * block.r, &bp);
        let ket = permute(&to_row_major(&moved), &[block.p, block.l, block.r], &[1, 0, 2]);
        let ket = Tensor3::from_data(block.l, block.p, block.r, ket);
        e = transfer(&e, &block, &ket);
        for t in &self.tensors[last + 1..] {
            e = transfer(&e, t, t);
        }
        Ok(e)
    }

    /// `Γ K Γ†`: the operator compressed to the frame.
    pub fn restrict_mpo(&self, k: &Mpo<R>) -> Result<CMat<R>> {
        self.inner(&self.apply_raw(k)?)
    }

    /// Schmidt values of the frame state `Σ_k |y_k⟩|k⟩` at cut `cut`
    /// (between columns `cut` and `cut + 1`, one-based). Their squares are
    /// the eigenvalues of the left reduced density matrix of `P_Y`.
    pub fn schmidt_values(&self, cut: usize) -> Vec<R> {
        let mut work = self.tensors.clone();
        left_canonicalize(&mut work);
        let (seen, _) = right_sweep(&mut work, cut - 1, |_, s| s.len());
        seen.into_iter().next().map(|(_, s)| s).unwrap_or_default()
    }

    /// Schmidt values above `tol · s_max` at cut `cut`.
    pub fn schmidt_rank(&self, cut: usize, tol: R) -> usize {
        count_above(&self.schmidt_values(cut), tol.max(R::tol(EXACT_FLOOR)))
    }

    /// `trim_ε` on the left block of columns `1..=cut`: keeps the image of
    /// the frame under `1_{[ε,∞)}(ρ_A) ⊗ I`, re-orthonormalized.
    pub fn trim_eps(&self, cut: usize, eps: R) -> Result<(Self, TrimStep<R>)> {
        let n = self.num_sites();
        if eps <= R::zero() || n < 2 || cut == 0 || cut >= n || self.degeneracy() == 0 {
            let kept = if cut >= 1 && cut < n { self.tensors[cut - 1].r } else { 0 };
            return Ok((self.clone(), TrimStep { cut, kept, discarded: 0, discarded_weight: R::zero() }));
        }
        let mut work = self.clone();
        left_canonicalize(&mut work.tensors);
        let mut step = TrimStep { cut, kept: 0, discarded: 0, discarded_weight: R::zero() };
        let mut trace = R::zero();
        right_sweep(&mut work.tensors, cut - 1, |c, s| {
            if c + 1 != cut {
                return s.len();
            }
            trace = s.iter().fold(R::zero(), |a, &x| a + x * x);
            let keep = s.iter().take_while(|&&x| x * x >= eps).count();
            step.kept = keep;
            step.discarded = s.len() - keep;
            step.discarded_weight = s[keep..].iter().fold(R::zero(), |a, &x| a + x * x);
            keep
        });
        let budget = (trace / eps).to_f64_lossy().floor() as usize;
        if step.kept > budget.max(1) {
            return Err(Error::RankBudgetExceeded { cut, rank: step.kept, budget });
        }
        if step.kept == 0 {
            // everything discarded: the image is the zero space
            let mut empty = work;
            let last = empty.tensors.len() - 1;
            let l = empty.tensors[last].l;
            let p = empty.tensors[last].p;
            empty.tensors[last] = Tensor3::zeros(l, p, 0);
            empty.isometric = true;
            return Ok((empty, step));
        }
        Ok((work.orthonormalize(R::tol(SPAN_TOL)), step))
    }

    /// `Trim_ε`: `trim_ε` at cuts `n-1, n-2, …, 1`.
    pub fn trim_chain(&self, eps: R) -> Result<(Self, Vec<TrimStep<R>>)> {
        let mut y = self.clone();
        let mut steps = Vec::new();
        for cut in (1..self.num_sites()).rev() {
            let (next, step) = y.trim_eps(cut, eps)?;
            y = next;
            steps.push(step);
        }
        Ok((y, steps))
    }
}
