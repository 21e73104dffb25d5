use crate::error::{Error, Result};
use crate::scalar::{cr, CMat, Real, C};
use crate::spectral::svd;

use super::{
    contract_chain, count_above, left_canonicalize, permute, right_sweep, to_row_major, transfer, Tensor3,
    EXACT_FLOOR,
};

/// Matrix product operator. Site `j` maps `in_dims[j]` to `out_dims[j]`;
/// the rightmost bond may be left open.
#[derive(Clone, Debug, PartialEq)]
pub struct Mpo<R: Real> {
    tensors: Vec<Tensor3<R>>,
    out_dims: Vec<usize>,
    in_dims: Vec<usize>,
}

/// Outcome of a bond truncation sweep.
#[derive(Clone, Debug)]
pub struct TrimReport<R: Real> {
    /// `√(Σ dropped s²)`, an upper bound on the Frobenius error.
    pub frobenius_bound: R,
    pub bond_dims: Vec<usize>,
}

impl<R: Real> Mpo<R> {
    pub fn new(tensors: Vec<Tensor3<R>>, out_dims: Vec<usize>, in_dims: Vec<usize>) -> Result<Self> {
        let n = tensors.len();
        if n == 0 || out_dims.len() != n || in_dims.len() != n {
            return Err(Error::ShapeMismatch("site count disagrees with dimension lists".into()));
        }
        if tensors[0].l != 1 {
            return Err(Error::ShapeMismatch("leftmost bond must be 1".into()));
        }
        for j in 0..n {
            if tensors[j].p != out_dims[j] * in_dims[j] {
                return Err(Error::ShapeMismatch(format!("site {j}: physical dimension")));
            }
            if j + 1 < n && tensors[j].r != tensors[j + 1].l {
                return Err(Error::ShapeMismatch(format!("bond {j}: {} vs {}", tensors[j].r, tensors[j + 1].l)));
            }
        }
        Ok(Mpo { tensors, out_dims, in_dims })
    }

    pub fn identity(dims: &[usize]) -> Self {
        let tensors = dims
            .iter()
            .map(|&d| {
                let mut t = Tensor3::zeros(1, d * d, 1);
                for s in 0..d {
                    *t.at_mut(0, s * d + s, 0) = cr(R::one());
                }
                t
            })
            .collect();
        Mpo { tensors, out_dims: dims.to_vec(), in_dims: dims.to_vec() }
    }

    /// TT-SVD of a square dense operator on sites with the given dimensions.
    /// Singular values at or below `tol · s_max` are dropped (`tol = 0` keeps
    /// everything above the exact-rank floor).
    pub fn from_dense(op: &CMat<R>, dims: &[usize], tol: R) -> Result<Self> {
        let total: usize = dims.iter().product();
        if op.nrows() != total || op.ncols() != total {
            return Err(Error::ShapeMismatch(format!(
                "operator is {}x{}, sites span {total}",
                op.nrows(),
                op.ncols()
            )));
        }
        let n = dims.len();
        let mut axes = dims.to_vec();
        axes.extend_from_slice(dims);
        let perm: Vec<usize> = (0..n).flat_map(|k| [k, n + k]).collect();
        let flat = permute(&to_row_major(op), &axes, &perm);
        let phys: Vec<usize> = dims.iter().map(|d| d * d).collect();
        let tensors = tt_split(flat, 1, &phys, 1, tol);
        Ok(Mpo { tensors, out_dims: dims.to_vec(), in_dims: dims.to_vec() })
    }

    /// Tensor product of dense factors on disjoint, contiguous site ranges
    /// `[a, b]` (zero-based, inclusive); identity elsewhere.
    pub fn from_site_factors(dims: &[usize], factors: &[(usize, usize, CMat<R>)], tol: R) -> Result<Self> {
        let mut sorted: Vec<&(usize, usize, CMat<R>)> = factors.iter().collect();
        sorted.sort_by_key(|f| f.0);
        for w in sorted.windows(2) {
            if w[1].0 <= w[0].1 {
                return Err(Error::OverlappingSupports(w[0].0, w[1].0));
            }
        }
        let mut tensors = Vec::with_capacity(dims.len());
        let mut next = 0;
        for (a, b, op) in sorted {
            if *b >= dims.len() || a > b {
                return Err(Error::ShapeMismatch(format!("factor range [{a}, {b}]")));
            }
            tensors.extend(Mpo::identity(&dims[next..*a]).tensors);
            tensors.extend(Mpo::from_dense(op, &dims[*a..=*b], tol)?.tensors);
            next = b + 1;
        }
        tensors.extend(Mpo::identity(&dims[next..]).tensors);
        Mpo::new(tensors, dims.to_vec(), dims.to_vec())
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn tensors(&self) -> &[Tensor3<R>] {
        &self.tensors
    }

    pub fn out_dims(&self) -> &[usize] {
        &self.out_dims
    }

    pub fn in_dims(&self) -> &[usize] {
        &self.in_dims
    }

    /// Bond dimension at each internal cut (`len() - 1` entries).
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.len() - 1].iter().map(|t| t.r).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Dimension of the dangling right bond (1 for a closed operator).
    pub fn open_bond(&self) -> usize {
        self.tensors.last().map_or(1, |t| t.r)
    }

    /// The first `i` sites, with the bond at cut `i` left open.
    pub fn left_part(&self, i: usize) -> Mpo<R> {
        assert!(i >= 1 && i <= self.len(), "left part of {} sites from {}", i, self.len());
        Mpo {
            tensors: self.tensors[..i].to_vec(),
            out_dims: self.out_dims[..i].to_vec(),
            in_dims: self.in_dims[..i].to_vec(),
        }
    }

    /// Dense matrix of a closed operator.
    pub fn to_dense(&self) -> CMat<R> {
        assert_eq!(self.open_bond(), 1, "dense form needs a closed operator");
        self.to_dense_open().pop().expect("one component")
    }

    /// Dense component operators, one per value of the open right bond.
    pub fn to_dense_open(&self) -> Vec<CMat<R>> {
        let n = self.len();
        let v = contract_chain(&self.tensors);
        let rows: usize = self.out_dims.iter().product();
        let cols: usize = self.in_dims.iter().product();
        let mut axes = Vec::with_capacity(2 * n);
        for k in 0..n {
            axes.push(self.out_dims[k]);
            axes.push(self.in_dims[k]);
        }
        let perm: Vec<usize> = (0..n).map(|k| 2 * k).chain((0..n).map(|k| 2 * k + 1)).collect();
        (0..v.ncols())
            .map(|b| {
                let col: Vec<C<R>> = v.column(b).iter().copied().collect();
                CMat::from_row_slice(rows, cols, &permute(&col, &axes, &perm))
            })
            .collect()
    }

    pub fn scale(&self, c: C<R>) -> Mpo<R> {
        let mut out = self.clone();
        for z in &mut out.tensors[0].data {
            *z *= c;
        }
        out
    }

    pub fn adjoint(&self) -> Mpo<R> {
        let tensors = self
            .tensors
            .iter()
            .zip(self.out_dims.iter().zip(&self.in_dims))
            .map(|(t, (&o, &i))| {
                let data = permute(&t.data, &[t.l, o, i, t.r], &[0, 2, 1, 3]).into_iter().map(|z| z.conj()).collect();
                Tensor3::from_data(t.l, t.p, t.r, data)
            })
            .collect();
        Mpo { tensors, out_dims: self.in_dims.clone(), in_dims: self.out_dims.clone() }
    }

    fn check_composable(&self, other: &Mpo<R>) -> Result<()> {
        if self.len() != other.len() || self.in_dims != other.out_dims {
            return Err(Error::ShapeMismatch("operators act on different spaces".into()));
        }
        Ok(())
    }

    /// `self · other` with bond dimensions multiplied.
    pub fn multiply(&self, other: &Mpo<R>) -> Result<Mpo<R>> {
        self.check_composable(other)?;
        let tensors = (0..self.len())
            .map(|j| {
                site_product(
                    &self.tensors[j],
                    &other.tensors[j],
                    self.out_dims[j],
                    self.in_dims[j],
                    other.in_dims[j],
                )
            })
            .collect();
        Ok(Mpo { tensors, out_dims: self.out_dims.clone(), in_dims: other.in_dims.clone() })
    }

    /// `self · other`, compressed site by site while contracting (zip-up).
    /// Truncation is near-optimal when both inputs are right-canonical, as
    /// left by [`Mpo::trim`].
    pub fn multiply_compress(&self, other: &Mpo<R>, tol: R) -> Result<Mpo<R>> {
        self.check_composable(other)?;
        let n = self.len();
        let rel = tol.max(R::tol(EXACT_FLOOR));
        let mut tensors = Vec::with_capacity(n);
        // carry[k, aA, aB]
        let (mut k, mut carry) = (1usize, vec![cr(R::one())]);
        for j in 0..n {
            let (a, b) = (&self.tensors[j], &other.tensors[j]);
            let (o, m, i) = (self.out_dims[j], self.in_dims[j], other.in_dims[j]);
            let kp = CMat::from_row_slice(k * b.l, a.l, &permute(&carry, &[k, a.l, b.l], &[0, 2, 1]));
            let x = kp * a.right_matrix(); // [k, aB, o, m, bA]
            let x = permute(&to_row_major(&x), &[k, b.l, o, m, a.r], &[0, 2, 4, 1, 3]);
            let x = CMat::from_row_slice(k * o * a.r, b.l * m, &x);
            let bm = CMat::from_row_slice(b.l * m, i * b.r, &b.data);
            let y = x * bm; // [k, o, bA, i, bB]
            let y = permute(&to_row_major(&y), &[k, o, a.r, i, b.r], &[0, 1, 3, 2, 4]);
            if j + 1 == n {
                tensors.push(Tensor3::from_data(k, o * i, a.r * b.r, y));
                break;
            }
            let mat = CMat::from_row_slice(k * o * i, a.r * b.r, &y);
            let dec = svd(&mat);
            let keep = count_above(&dec.s, rel).max(1);
            tensors.push(Tensor3::from_left_matrix(&dec.u.columns(0, keep).into_owned(), o * i));
            let mut sv = dec.v_t.rows(0, keep).into_owned();
            for (r, &s) in dec.s[..keep].iter().enumerate() {
                sv.row_mut(r).scale_mut(s);
            }
            carry = to_row_major(&sv);
            k = keep;
        }
        Ok(Mpo { tensors, out_dims: self.out_dims.clone(), in_dims: other.in_dims.clone() })
    }

    /// Direct-sum addition of closed operators.
    pub fn add(&self, other: &Mpo<R>) -> Result<Mpo<R>> {
        if self.out_dims != other.out_dims || self.in_dims != other.in_dims {
            return Err(Error::ShapeMismatch("operators act on different spaces".into()));
        }
        if self.open_bond() != 1 || other.open_bond() != 1 {
            return Err(Error::ShapeMismatch("addition needs closed operators".into()));
        }
        let n = self.len();
        if n == 1 {
            let data = self.tensors[0].data.iter().zip(&other.tensors[0].data).map(|(x, y)| x + y).collect();
            let t = &self.tensors[0];
            return Mpo::new(vec![Tensor3::from_data(1, t.p, 1, data)], self.out_dims.clone(), self.in_dims.clone());
        }
        let mut tensors = Vec::with_capacity(n);
        for j in 0..n {
            let (a, b) = (&self.tensors[j], &other.tensors[j]);
            let l = if j == 0 { 1 } else { a.l + b.l };
            let r = if j + 1 == n { 1 } else { a.r + b.r };
            let (bl, br) = (if j == 0 { 0 } else { a.l }, if j + 1 == n { 0 } else { a.r });
            let mut t = Tensor3::zeros(l, a.p, r);
            for x in 0..a.l {
                for s in 0..a.p {
                    for y in 0..a.r {
                        *t.at_mut(x, s, y) = a.at(x, s, y);
                    }
                }
            }
            for x in 0..b.l {
                for s in 0..b.p {
                    for y in 0..b.r {
                        *t.at_mut(bl + x, s, br + y) += b.at(x, s, y);
                    }
                }
            }
            tensors.push(t);
        }
        Mpo::new(tensors, self.out_dims.clone(), self.in_dims.clone())
    }

    /// Bond truncation: left-canonicalize, then sweep right to left dropping
    /// singular values at or below `tol · s_max` at each cut.
    pub fn trim(&self, tol: R) -> (Mpo<R>, TrimReport<R>) {
        let mut out = self.clone();
        let rel = tol.max(R::tol(EXACT_FLOOR));
        left_canonicalize(&mut out.tensors);
        let (_, dropped) = right_sweep(&mut out.tensors, 0, |_, s| count_above(s, rel).max(1));
        let report = TrimReport { frobenius_bound: dropped.sqrt(), bond_dims: out.bond_dims() };
        (out, report)
    }

    /// Operator Schmidt values at every internal cut.
    pub fn schmidt_values(&self) -> Vec<Vec<R>> {
        let mut work = self.tensors.clone();
        left_canonicalize(&mut work);
        let (seen, _) = right_sweep(&mut work, 0, |_, s| s.len());
        seen.into_iter().map(|(_, s)| s).collect()
    }

    /// Count of Schmidt values above `tol · s_max` at cut `cut` (between
    /// sites `cut` and `cut + 1`, one-based).
    pub fn schmidt_rank(&self, cut: usize, tol: R) -> usize {
        let vals = self.schmidt_values();
        count_above(&vals[cut - 1], tol.max(R::tol(EXACT_FLOOR)))
    }

    /// Frobenius norm via transfer matrices.
    pub fn frobenius_norm(&self) -> R {
        let mut e = CMat::<R>::from_element(1, 1, cr(R::one()));
        for t in &self.tensors {
            e = transfer(&e, t, t);
        }
        e.trace().re.max(R::zero()).sqrt()
    }

    /// Merges consecutive runs of sites into single sites; `blocks` lists the
    /// run lengths.
    pub fn group(&self, blocks: &[usize]) -> Result<Mpo<R>> {
        if blocks.iter().sum::<usize>() != self.len() || blocks.contains(&0) {
            return Err(Error::ShapeMismatch("blocks do not partition the sites".into()));
        }
        let mut tensors = Vec::with_capacity(blocks.len());
        let (mut out_dims, mut in_dims) = (Vec::new(), Vec::new());
        let mut start = 0;
        for &len in blocks {
            let range = start..start + len;
            let mut acc = self.tensors[start].clone();
            for t in &self.tensors[start + 1..start + len] {
                let merged = acc.left_matrix() * t.right_matrix();
                acc = Tensor3::from_data(acc.l, acc.p * t.p, t.r, to_row_major(&merged));
            }
            let mut axes = vec![acc.l];
            for j in range.clone() {
                axes.push(self.out_dims[j]);
                axes.push(self.in_dims[j]);
            }
            axes.push(acc.r);
            let mut perm = vec![0];
            perm.extend((0..len).map(|k| 1 + 2 * k));
            perm.extend((0..len).map(|k| 2 + 2 * k));
            perm.push(2 * len + 1);
            let data = permute(&acc.data, &axes, &perm);
            tensors.push(Tensor3::from_data(acc.l, acc.p, acc.r, data));
            out_dims.push(self.out_dims[range.clone()].iter().product());
            in_dims.push(self.in_dims[range].iter().product());
            start += len;
        }
        Mpo::new(tensors, out_dims, in_dims)
    }

    /// Splits each coarse site back into `blocks[j]` sites of the given
    /// per-site dimensions by iterated SVD.
    pub fn refine(&self, blocks: &[usize], out_dims: &[usize], in_dims: &[usize], tol: R) -> Result<Mpo<R>> {
        if blocks.len() != self.len() || blocks.iter().sum::<usize>() != out_dims.len() || out_dims.len() != in_dims.len() {
            return Err(Error::ShapeMismatch("refinement blocks disagree with the operator".into()));
        }
        let mut tensors = Vec::with_capacity(out_dims.len());
        let mut start = 0;
        for (j, &len) in blocks.iter().enumerate() {
            let t = &self.tensors[j];
            let (outs, ins) = (&out_dims[start..start + len], &in_dims[start..start + len]);
            if outs.iter().product::<usize>() != self.out_dims[j] || ins.iter().product::<usize>() != self.in_dims[j] {
                return Err(Error::ShapeMismatch(format!("coarse site {j} dimensions")));
            }
            let mut axes = vec![t.l];
            axes.extend_from_slice(outs);
            axes.extend_from_slice(ins);
            axes.push(t.r);
            let mut perm = vec![0];
            for k in 0..len {
                perm.push(1 + k);
                perm.push(1 + len + k);
            }
            perm.push(2 * len + 1);
            let flat = permute(&t.data, &axes, &perm);
            let phys: Vec<usize> = outs.iter().zip(ins).map(|(o, i)| o * i).collect();
            tensors.extend(tt_split(flat, t.l, &phys, t.r, tol));
            start += len;
        }
        Mpo::new(tensors, out_dims.to_vec(), in_dims.to_vec())
    }
}

/// Splits a row-major array `[l, p_1, …, p_n, r]` into a chain by sequential
/// SVD, dropping singular values at or below `max(tol, floor) · s_max`.
pub(crate) fn tt_split<R: Real>(flat: Vec<C<R>>, l: usize, phys: &[usize], r: usize, tol: R) -> Vec<Tensor3<R>> {
    let rel = tol.max(R::tol(EXACT_FLOOR));
    let n = phys.len();
    let mut tensors = Vec::with_capacity(n);
    let mut rest = flat;
    let mut k = l;
    for (j, &p) in phys.iter().enumerate() {
        if j + 1 == n {
            tensors.push(Tensor3::from_data(k, p, r, rest));
            break;
        }
        let rows = k * p;
        let cols = rest.len() / rows;
        let dec = svd(&CMat::from_row_slice(rows, cols, &rest));
        let keep = count_above(&dec.s, rel).max(1);
        tensors.push(Tensor3::from_left_matrix(&dec.u.columns(0, keep).into_owned(), p));
        let mut sv = dec.v_t.rows(0, keep).into_owned();
        for (row, &s) in dec.s[..keep].iter().enumerate() {
            sv.row_mut(row).scale_mut(s);
        }
        rest = to_row_major(&sv);
        k = keep;
    }
    tensors
}

/// Site tensor of `A · B` with product bonds `(a_A, a_B)`.
fn site_product<R: Real>(a: &Tensor3<R>, b: &Tensor3<R>, out: usize, mid: usize, inn: usize) -> Tensor3<R> {
    let ap = permute(&a.data, &[a.l, out, mid, a.r], &[0, 1, 3, 2]);
    let am = CMat::from_row_slice(a.l * out * a.r, mid, &ap);
    let bp = permute(&b.data, &[b.l, mid, inn, b.r], &[1, 0, 2, 3]);
    let bm = CMat::from_row_slice(mid, b.l * inn * b.r, &bp);
    let prod = to_row_major(&(am * bm)); // [aA, o, bA, aB, i, bB]
    let data = permute(&prod, &[a.l, out, a.r, b.l, inn, b.r], &[0, 3, 1, 4, 2, 5]);
    Tensor3::from_data(a.l * b.l, out * inn, a.r * b.r, data)
}
