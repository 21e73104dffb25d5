//! Lattice Hamiltonians `H = Σ_i H_i` on a `W × h` grid of qudits.
//!
//! Sites are `(x, y)` with `1 ≤ x ≤ W` (column) and `1 ≤ y ≤ h` (row). Dense
//! operators on a set of sites use the sorted site order (column-major, so a
//! full column range is a Kronecker product of columns, left column most
//! significant).

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{c64_to, CMat, Real};
use crate::spectral::{eigh, hermitian_deviation, HermitianOperator, ZERO_EIGENVALUE};

/// Default ceiling on dense dimensions, `2^20`.
pub const DEFAULT_DENSE_CAP: usize = 1 << 20;

/// Tolerance for `0 ⪯ H_i ⪯ I` and Hermiticity of terms.
pub const TERM_TOL: f64 = 1e-10;

/// Lattice site `(x, y)`, one-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Site {
    pub x: usize,
    pub y: usize,
}

impl Site {
    pub fn new(x: usize, y: usize) -> Self {
        Site { x, y }
    }
}

impl std::fmt::Display for Site {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// A local interaction `H_i` with its support in sorted order.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionTerm<R: Real> {
    support: Vec<Site>,
    matrix: CMat<R>,
}

impl<R: Real> InteractionTerm<R> {
    /// Builds a term whose matrix factors follow the order of `sites`.
    /// The support is sorted and the matrix permuted to match.
    pub fn new(sites: Vec<Site>, matrix: CMat<R>, q: usize) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidTerm("empty support".into()));
        }
        let unique: BTreeSet<Site> = sites.iter().copied().collect();
        if unique.len() != sites.len() {
            return Err(Error::InvalidTerm("repeated site in support".into()));
        }
        let dim = checked_pow(q, sites.len())?;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::InvalidTerm(format!(
                "matrix is {}x{}, expected {dim}x{dim} for {} sites",
                matrix.nrows(),
                matrix.ncols(),
                sites.len()
            )));
        }
        let scale = R::one().max(matrix.norm());
        if hermitian_deviation(&matrix) > R::tol(TERM_TOL) * scale {
            return Err(Error::InvalidTerm("matrix is not Hermitian".into()));
        }
        let spectrum = eigh(&matrix).values;
        let tol = R::tol(TERM_TOL);
        if let (Some(&lo), Some(&hi)) = (spectrum.first(), spectrum.last()) {
            if lo < -tol || hi > R::one() + tol {
                return Err(Error::InvalidTerm(format!(
                    "spectrum [{lo}, {hi}] outside [0, 1]"
                )));
            }
        }
        let (support, matrix) = sort_factors(&sites, &matrix, q);
        let matrix = HermitianOperator::new_unchecked(matrix).into_matrix();
        Ok(InteractionTerm { support, matrix })
    }

    pub fn support(&self) -> &[Site] {
        &self.support
    }

    pub fn matrix(&self) -> &CMat<R> {
        &self.matrix
    }

    pub fn is_diagonal(&self) -> bool {
        let tiny = R::lit(1e-14);
        let n = self.matrix.nrows();
        (0..n).all(|i| (0..n).all(|j| i == j || self.matrix[(i, j)].norm_sqr() <= tiny))
    }

    /// First and last column touched, one-based.
    pub fn column_span(&self) -> (usize, usize) {
        let lo = self.support.iter().map(|s| s.x).min().unwrap_or(1);
        let hi = self.support.iter().map(|s| s.x).max().unwrap_or(1);
        (lo, hi)
    }
}

/// Axis-aligned rectangle `[a, b] × [c, d]` of lattice sites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rectangle {
    pub x_range: (usize, usize),
    pub y_range: (usize, usize),
}

impl Rectangle {
    pub fn new(x_range: (usize, usize), y_range: (usize, usize)) -> Self {
        Rectangle { x_range, y_range }
    }

    /// Intersection with the lattice; `None` when empty.
    pub fn clip(&self, width: usize, height: usize) -> Option<Rectangle> {
        let a = self.x_range.0.max(1);
        let b = self.x_range.1.min(width);
        let c = self.y_range.0.max(1);
        let d = self.y_range.1.min(height);
        (a <= b && c <= d).then_some(Rectangle::new((a, b), (c, d)))
    }

    pub fn site_count(&self) -> usize {
        (self.x_range.1 + 1 - self.x_range.0) * (self.y_range.1 + 1 - self.y_range.0)
    }

    pub fn sites(&self) -> Vec<Site> {
        let mut v = Vec::with_capacity(self.site_count());
        for x in self.x_range.0..=self.x_range.1 {
            for y in self.y_range.0..=self.y_range.1 {
                v.push(Site::new(x, y));
            }
        }
        v
    }
}

/// `H` restricted to a region, as a dense Hermitian operator.
#[derive(Clone, Debug)]
pub struct SubHamiltonian<R: Real> {
    pub sites: Vec<Site>,
    pub operator: HermitianOperator<R>,
    pub term_indices: Vec<usize>,
}

/// Result of [`GridHamiltonian::local_gap`].
#[derive(Clone, Debug)]
pub struct LocalGap<R: Real> {
    /// `None` when every examined rectangle has empty nonzero spectrum (the
    /// `+∞` convention).
    pub gamma: Option<R>,
    pub minimizer: Option<Rectangle>,
    pub rectangles_examined: usize,
}

/// Outcome of a full diagonalization.
#[derive(Clone, Debug)]
pub struct FrustrationReport<R: Real> {
    pub frustration_free: bool,
    pub ground_energy: R,
    pub degeneracy: usize,
}

/// A `W × h` lattice Hamiltonian with PSD terms bounded by the identity.
#[derive(Clone, Debug)]
pub struct GridHamiltonian<R: Real> {
    width: usize,
    height: usize,
    q: usize,
    terms: Vec<InteractionTerm<R>>,
    diameter_bound: usize,
    transposed: bool,
}

impl<R: Real> GridHamiltonian<R> {
    /// Validates sites against the lattice. When `height > width` the lattice
    /// is transposed so that `h ≤ W` holds afterwards.
    pub fn new(width: usize, height: usize, q: usize, terms: Vec<InteractionTerm<R>>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInstance("empty lattice".into()));
        }
        if q < 2 {
            return Err(Error::InvalidInstance(format!("local dimension {q} < 2")));
        }
        for t in &terms {
            for s in t.support() {
                if s.x < 1 || s.x > width || s.y < 1 || s.y > height {
                    return Err(Error::InvalidInstance(format!(
                        "site {s} outside the {width}x{height} lattice"
                    )));
                }
            }
            if t.matrix().nrows() != checked_pow(q, t.support().len())? {
                return Err(Error::InvalidInstance("term dimension does not match q".into()));
            }
        }
        let (width, height, terms, transposed) = if height > width {
            let swapped = terms
                .into_iter()
                .map(|t| {
                    let sites: Vec<Site> = t.support.iter().map(|s| Site::new(s.y, s.x)).collect();
                    let (support, matrix) = sort_factors(&sites, &t.matrix, q);
                    InteractionTerm { support, matrix }
                })
                .collect();
            (height, width, swapped, true)
        } else {
            (width, height, terms, false)
        };
        let diameter_bound = terms
            .iter()
            .map(|t| {
                let mut d = 0;
                for a in t.support() {
                    for b in t.support() {
                        d = d.max(a.x.abs_diff(b.x)).max(a.y.abs_diff(b.y));
                    }
                }
                d
            })
            .max()
            .unwrap_or(0);
        Ok(GridHamiltonian {
            width,
            height,
            q,
            terms,
            diameter_bound,
            transposed,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn local_dim(&self) -> usize {
        self.q
    }

    /// Physical dimension of one column, `q^h`.
    pub fn column_dim(&self) -> usize {
        self.q.pow(self.height as u32)
    }

    pub fn num_sites(&self) -> usize {
        self.width * self.height
    }

    pub fn terms(&self) -> &[InteractionTerm<R>] {
        &self.terms
    }

    /// Largest L∞ distance between two sites of one term.
    pub fn diameter_bound(&self) -> usize {
        self.diameter_bound
    }

    pub fn was_transposed(&self) -> bool {
        self.transposed
    }

    /// Metadata for serialized subspaces of this lattice.
    pub fn lattice_info(&self) -> crate::tensor::LatticeInfo {
        crate::tensor::LatticeInfo {
            width: self.width,
            height: self.height,
            q: self.q,
            transposed: self.transposed,
        }
    }

    pub fn all_sites(&self) -> Vec<Site> {
        Rectangle::new((1, self.width), (1, self.height)).sites()
    }

    /// Sites in columns `a..=b`, sorted.
    pub fn column_sites(&self, a: usize, b: usize) -> Vec<Site> {
        Rectangle::new((a, b), (1, self.height)).sites()
    }

    /// `C`: four times the largest number of terms touching a single qudit.
    pub fn interaction_constant(&self) -> usize {
        let mut counts = vec![0usize; self.width * self.height];
        for t in &self.terms {
            for s in t.support() {
                counts[(s.x - 1) * self.height + (s.y - 1)] += 1;
            }
        }
        4 * counts.into_iter().max().unwrap_or(0)
    }

    /// Terms whose horizontal extent spans `columns` or more columns.
    pub fn terms_wider_than(&self, columns: usize) -> usize {
        self.terms
            .iter()
            .filter(|t| {
                let (lo, hi) = t.column_span();
                hi + 1 - lo > columns
            })
            .count()
    }

    /// `H_S`: sum of the terms supported inside `sites`, embedded densely.
    pub fn restrict_to_region(&self, sites: &[Site], cap: usize) -> Result<SubHamiltonian<R>> {
        let region: Vec<Site> = sites.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let dim = checked_pow(self.q, region.len())?;
        if dim > cap {
            return Err(Error::CapExceeded { dim, cap });
        }
        let set: BTreeSet<Site> = region.iter().copied().collect();
        let mut op = CMat::<R>::zeros(dim, dim);
        let mut term_indices = Vec::new();
        for (k, t) in self.terms.iter().enumerate() {
            if t.support().iter().all(|s| set.contains(s)) {
                op += embed_operator(t.matrix(), t.support(), &region, self.q);
                term_indices.push(k);
            }
        }
        Ok(SubHamiltonian {
            sites: region,
            operator: HermitianOperator::new_unchecked(op),
            term_indices,
        })
    }

    /// Dense Hamiltonian on columns `a..=b` (full height).
    pub fn restrict_to_columns(&self, a: usize, b: usize, cap: usize) -> Result<SubHamiltonian<R>> {
        self.restrict_to_region(&self.column_sites(a, b), cap)
    }

    /// Minimum over rectangles `B` (with at most `max_sites` sites when given)
    /// of the smallest nonzero eigenvalue of `H_B`.
    pub fn local_gap(&self, max_sites: Option<usize>, cap: usize) -> Result<LocalGap<R>> {
        let zero = R::tol(ZERO_EIGENVALUE);
        let mut best: Option<(R, Rectangle)> = None;
        let mut examined = 0;
        for a in 1..=self.width {
            for b in a..=self.width {
                for c in 1..=self.height {
                    for d in c..=self.height {
                        let rect = Rectangle::new((a, b), (c, d));
                        if max_sites.is_some_and(|k| rect.site_count() > k) {
                            continue;
                        }
                        examined += 1;
                        let sub = self.restrict_to_region(&rect.sites(), cap)?;
                        if sub.term_indices.is_empty() {
                            continue;
                        }
                        let gap = sub.operator.eigh().values.into_iter().find(|&v| v > zero);
                        if let Some(g) = gap {
                            if best.as_ref().is_none_or(|(b, _)| g < *b) {
                                best = Some((g, rect));
                            }
                        }
                    }
                }
            }
        }
        Ok(LocalGap {
            gamma: best.map(|(g, _)| g),
            minimizer: best.map(|(_, r)| r),
            rectangles_examined: examined,
        })
    }

    /// Full diagonalization: frustration-free iff the smallest eigenvalue is
    /// below `1e-9`; the degeneracy counts eigenvalues below `1e-9`.
    pub fn verify_frustration_free(&self, cap: usize) -> Result<FrustrationReport<R>> {
        let full = self.restrict_to_region(&self.all_sites(), cap)?;
        let values = full.operator.eigh().values;
        let zero = R::tol(ZERO_EIGENVALUE);
        let ground = values.first().copied().unwrap_or(R::zero());
        let degeneracy = values.iter().filter(|&&v| v < zero).count();
        Ok(FrustrationReport {
            frustration_free: ground < zero,
            ground_energy: ground,
            degeneracy,
        })
    }

    /// Parses the JSON instance format.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        file.into_hamiltonian()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&InstanceFile::from_hamiltonian(self))?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// On-disk instance representation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    pub width: usize,
    pub height: usize,
    pub q: usize,
    pub terms: Vec<TermFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermFile {
    pub sites: Vec<[usize; 2]>,
    /// Row-major, each entry `[re, im]`.
    pub matrix: Vec<Vec<[f64; 2]>>,
}

impl InstanceFile {
    pub fn into_hamiltonian<R: Real>(self) -> Result<GridHamiltonian<R>> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (k, t) in self.terms.into_iter().enumerate() {
            let n = t.matrix.len();
            if t.matrix.iter().any(|row| row.len() != n) {
                return Err(Error::Parse(format!("term {k}: matrix rows have unequal length")));
            }
            let m = CMat::<R>::from_fn(n, n, |i, j| c64_to(t.matrix[i][j][0], t.matrix[i][j][1]));
            let sites = t.sites.iter().map(|s| Site::new(s[0], s[1])).collect();
            let term = InteractionTerm::new(sites, m, self.q)
                .map_err(|e| Error::Parse(format!("term {k}: {e}")))?;
            terms.push(term);
        }
        GridHamiltonian::new(self.width, self.height, self.q, terms)
    }

    pub fn from_hamiltonian<R: Real>(h: &GridHamiltonian<R>) -> Self {
        let terms = h
            .terms()
            .iter()
            .map(|t| {
                let m = t.matrix();
                TermFile {
                    sites: t.support().iter().map(|s| [s.x, s.y]).collect(),
                    matrix: (0..m.nrows())
                        .map(|i| {
                            (0..m.ncols())
                                .map(|j| [m[(i, j)].re.to_f64_lossy(), m[(i, j)].im.to_f64_lossy()])
                                .collect()
                        })
                        .collect(),
                }
            })
            .collect();
        InstanceFile {
            width: h.width(),
            height: h.height(),
            q: h.local_dim(),
            terms,
        }
    }
}

pub(crate) fn checked_pow(q: usize, n: usize) -> Result<usize> {
    let mut d: usize = 1;
    for _ in 0..n {
        d = d
            .checked_mul(q)
            .ok_or(Error::CapExceeded { dim: usize::MAX, cap: usize::MAX })?;
    }
    Ok(d)
}

/// Digits of `index` in base `q`, most significant first, `n` digits.
pub(crate) fn digits(mut index: usize, q: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for k in (0..n).rev() {
        out[k] = index % q;
        index /= q;
    }
    out
}

fn sort_factors<R: Real>(sites: &[Site], matrix: &CMat<R>, q: usize) -> (Vec<Site>, CMat<R>) {
    let n = sites.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&k| sites[k]);
    if order.iter().enumerate().all(|(i, &k)| i == k) {
        return (sites.to_vec(), matrix.clone());
    }
    let dim = matrix.nrows();
    // new position of old factor k
    let mut new_pos = vec![0; n];
    for (p, &k) in order.iter().enumerate() {
        new_pos[k] = p;
    }
    let remap: Vec<usize> = (0..dim)
        .map(|old| {
            let d = digits(old, q, n);
            let mut nd = vec![0; n];
            for k in 0..n {
                nd[new_pos[k]] = d[k];
            }
            nd.iter().fold(0, |acc, &x| acc * q + x)
        })
        .collect();
    let mut out = CMat::<R>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            out[(remap[i], remap[j])] = matrix[(i, j)];
        }
    }
    (order.iter().map(|&k| sites[k]).collect(), out)
}

/// Embeds `op` (acting on the sorted `op_sites`) into the sorted `region`,
/// tensoring with the identity elsewhere.
pub fn embed_operator<R: Real>(op: &CMat<R>, op_sites: &[Site], region: &[Site], q: usize) -> CMat<R> {
    let n = region.len();
    let k = op_sites.len();
    let dim = q.pow(n as u32);
    let local = q.pow(k as u32);
    let positions: Vec<usize> = op_sites
        .iter()
        .map(|s| region.iter().position(|r| r == s).expect("site outside region"))
        .collect();
    let weights: Vec<usize> = positions.iter().map(|&p| q.pow((n - 1 - p) as u32)).collect();
    let contribution: Vec<usize> = (0..local)
        .map(|b| {
            digits(b, q, k)
                .iter()
                .zip(&weights)
                .map(|(d, w)| d * w)
                .sum()
        })
        .collect();
    let mut out = CMat::<R>::zeros(dim, dim);
    for row in 0..dim {
        let a: usize = positions
            .iter()
            .fold(0, |acc, &p| acc * q + (row / q.pow((n - 1 - p) as u32)) % q);
        let rest = row - contribution[a];
        for b in 0..local {
            let v = op[(a, b)];
            if v.re != R::zero() || v.im != R::zero() {
                out[(row, rest + contribution[b])] += v;
            }
        }
    }
    out
}
