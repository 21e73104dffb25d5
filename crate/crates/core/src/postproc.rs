//! Expectation tables `T_ij^σ = ⟨z_i|σ|z_j⟩` over generalized Pauli words,
//! and assignment decoding for classical instances.
//!
//! For `q = 2` the letters are `I, X, Y, Z`; for `q > 2` they are the clock
//! and shift products `X^a Z^b` with `X|j⟩ = |j+1⟩` and `Z|j⟩ = ω^j|j⟩`.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{embed_operator, Rectangle, Site};
use crate::scalar::{c64_to, cr, kron, CMat, Real, C};
use crate::tensor::{LatticeInfo, SubspaceMps};

/// Default largest word weight.
pub const DEFAULT_MAX_WEIGHT: usize = 2;
/// Default cap on `D² · #words`.
pub const DEFAULT_MAX_ENTRIES: usize = 10_000_000;
/// `|⟨Z_v⟩|` below this cannot be decoded.
pub const SIGN_THRESHOLD: f64 = 0.1;

/// A single-site letter `X^a Z^b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Letter {
    pub a: usize,
    pub b: usize,
}

impl Letter {
    pub fn matrix<R: Real>(&self, q: usize) -> CMat<R> {
        if q == 2 && self.a == 1 && self.b == 1 {
            // Hermitian Pauli Y = i X Z
            let mut y = CMat::<R>::zeros(2, 2);
            y[(0, 1)] = C::new(R::zero(), -R::one());
            y[(1, 0)] = C::new(R::zero(), R::one());
            return y;
        }
        let mut m = CMat::<R>::zeros(q, q);
        for j in 0..q {
            let phase = 2.0 * PI * ((self.b * j) % q) as f64 / q as f64;
            m[((j + self.a) % q, j)] = c64_to(phase.cos(), phase.sin());
        }
        m
    }

    pub fn label(&self, q: usize) -> String {
        if q == 2 {
            return ["I", "Z", "X", "Y"][2 * self.a + self.b].to_string();
        }
        format!("X{}Z{}", self.a, self.b)
    }
}

fn letters(q: usize) -> Vec<Letter> {
    if q == 2 {
        return vec![Letter { a: 1, b: 0 }, Letter { a: 1, b: 1 }, Letter { a: 0, b: 1 }];
    }
    (0..q)
        .flat_map(|a| (0..q).map(move |b| Letter { a, b }))
        .filter(|l| l.a + l.b > 0)
        .collect()
}

/// A product of letters on distinct sites (stored orientation).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PauliWord {
    pub sites: Vec<Site>,
    pub letters: Vec<Letter>,
}

impl PauliWord {
    pub fn identity() -> Self {
        PauliWord { sites: Vec::new(), letters: Vec::new() }
    }

    pub fn weight(&self) -> usize {
        self.sites.len()
    }

    /// Matrix on the word's sites, in their sorted order.
    pub fn matrix<R: Real>(&self, q: usize) -> CMat<R> {
        self.letters
            .iter()
            .fold(CMat::<R>::from_element(1, 1, cr(R::one())), |acc, l| kron(&acc, &l.matrix(q)))
    }

    /// The word embedded densely on `region` (sorted sites).
    pub fn dense<R: Real>(&self, region: &[Site], q: usize) -> CMat<R> {
        if self.sites.is_empty() {
            let n = q.pow(region.len() as u32);
            return CMat::identity(n, n);
        }
        embed_operator(&self.matrix(q), &self.sites, region, q)
    }

    pub fn is_hermitian(&self, q: usize) -> bool {
        q == 2 || self.letters.iter().all(|l| (2 * l.a) % q == 0 && (2 * l.b) % q == 0)
    }

    /// Label in input coordinates, e.g. `X(1,2)Z(2,2)`; `I` for the identity.
    pub fn label(&self, q: usize, transposed: bool) -> String {
        if self.sites.is_empty() {
            return "I".into();
        }
        let mut parts: Vec<(Site, Letter)> = self
            .sites
            .iter()
            .map(|s| if transposed { Site::new(s.y, s.x) } else { *s })
            .zip(self.letters.iter().copied())
            .collect();
        parts.sort();
        parts.iter().map(|(s, l)| format!("{}{}", l.label(q), s)).collect()
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Identity first, then supports by size and lexicographically, then
/// letters lexicographically.
pub fn pauli_words(sites: &[Site], q: usize, k: usize) -> Vec<PauliWord> {
    let mut sorted = sites.to_vec();
    sorted.sort();
    sorted.dedup();
    let alphabet = letters(q);
    let mut words = vec![PauliWord::identity()];
    for size in 1..=k.min(sorted.len()) {
        for subset in subsets(sorted.len(), size) {
            let support: Vec<Site> = subset.iter().map(|&i| sorted[i]).collect();
            let mut idx = vec![0usize; size];
            loop {
                words.push(PauliWord { sites: support.clone(), letters: idx.iter().map(|&i| alphabet[i]).collect() });
                let mut pos = size;
                while pos > 0 {
                    pos -= 1;
                    idx[pos] += 1;
                    if idx[pos] < alphabet.len() {
                        break;
                    }
                    idx[pos] = 0;
                }
                if idx.iter().all(|&i| i == 0) {
                    break;
                }
            }
        }
    }
    words
}

/// Number of words of weight at most `k` on `n` sites.
pub fn word_count(n: usize, q: usize, k: usize) -> usize {
    let per = q * q - 1;
    (1..=k.min(n)).fold(1usize, |acc, s| acc.saturating_add(binomial(n, s).saturating_mul(per.saturating_pow(s as u32))))
}

#[derive(Clone, Copy, Debug)]
pub struct TableLimits {
    pub max_weight: usize,
    pub max_entries: usize,
}

impl Default for TableLimits {
    fn default() -> Self {
        TableLimits { max_weight: DEFAULT_MAX_WEIGHT, max_entries: DEFAULT_MAX_ENTRIES }
    }
}

#[derive(Clone, Debug)]
pub struct PauliEntry<R: Real> {
    pub word: PauliWord,
    /// `D × D` block `⟨z_i|σ|z_j⟩`.
    pub values: CMat<R>,
}

#[derive(Clone, Debug)]
pub struct PauliTable<R: Real> {
    pub lattice: LatticeInfo,
    pub dim: usize,
    pub max_weight: usize,
    pub entries: Vec<PauliEntry<R>>,
}

/// All `T_ij^σ` for words of weight `≤ k` supported on `filter` (or on the
/// whole lattice). `filter` is in stored coordinates.
pub fn pauli_table<R: Real>(
    z: &SubspaceMps<R>,
    lattice: LatticeInfo,
    k: usize,
    filter: Option<&[Site]>,
    limits: TableLimits,
) -> Result<PauliTable<R>> {
    if k > limits.max_weight {
        return Err(Error::InvalidParameter(format!("word weight {k} above the cap {}", limits.max_weight)));
    }
    if z.num_sites() != lattice.width || z.phys_dims().iter().any(|&p| Some(p) != lattice.q.checked_pow(lattice.height as u32)) {
        return Err(Error::DimensionMismatch("subspace does not match the lattice".into()));
    }
    let all = Rectangle::new((1, lattice.width), (1, lattice.height)).sites();
    let sites: Vec<Site> = match filter {
        Some(f) => {
            if let Some(bad) = f.iter().find(|s| !all.contains(s)) {
                return Err(Error::InvalidParameter(format!("site {bad} is outside the lattice")));
            }
            f.to_vec()
        }
        None => all,
    };
    let dim = z.degeneracy();
    let entries = word_count(sites.len(), lattice.q, k).saturating_mul(dim * dim);
    if entries > limits.max_entries {
        return Err(Error::TableTooLarge { entries, cap: limits.max_entries });
    }
    let words = pauli_words(&sites, lattice.q, k);
    let gram = z.gram();
    let entries = words
        .into_par_iter()
        .map(|word| {
            if word.sites.is_empty() {
                return Ok(PauliEntry { word, values: gram.clone() });
            }
            let lo = word.sites.iter().map(|s| s.x).min().unwrap_or(1);
            let hi = word.sites.iter().map(|s| s.x).max().unwrap_or(1);
            let region = Rectangle::new((lo, hi), (1, lattice.height)).sites();
            let op = word.dense(&region, lattice.q);
            let values = z.expectation(&op, lo - 1, hi - 1)?;
            Ok(PauliEntry { word, values })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PauliTable { lattice, dim, max_weight: k, entries })
}

#[derive(Serialize)]
struct WordJson {
    word: String,
    sites: Vec<[usize; 2]>,
    powers: Vec<[usize; 2]>,
    values: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize)]
struct TableJson {
    q: usize,
    width: usize,
    height: usize,
    dim: usize,
    max_weight: usize,
    words: Vec<WordJson>,
}

impl<R: Real> PauliTable<R> {
    pub fn find(&self, word: &PauliWord) -> Option<&PauliEntry<R>> {
        self.entries.iter().find(|e| &e.word == word)
    }

    /// Tab-separated `sigma_word, i, j, re, im` with one-based `i, j`.
    pub fn write_tsv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "sigma_word\ti\tj\tre\tim")?;
        for e in &self.entries {
            let label = e.word.label(self.lattice.q, self.lattice.transposed);
            for i in 0..self.dim {
                for j in 0..self.dim {
                    let v = e.values[(i, j)];
                    writeln!(out, "{label}\t{}\t{}\t{:e}\t{:e}", i + 1, j + 1, v.re.to_f64_lossy(), v.im.to_f64_lossy())?;
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let (width, height) = if self.lattice.transposed {
            (self.lattice.height, self.lattice.width)
        } else {
            (self.lattice.width, self.lattice.height)
        };
        let words = self
            .entries
            .iter()
            .map(|e| WordJson {
                word: e.word.label(self.lattice.q, self.lattice.transposed),
                sites: e
                    .word
                    .sites
                    .iter()
                    .map(|s| if self.lattice.transposed { [s.y, s.x] } else { [s.x, s.y] })
                    .collect(),
                powers: e.word.letters.iter().map(|l| [l.a, l.b]).collect(),
                values: (0..self.dim)
                    .map(|i| {
                        (0..self.dim)
                            .map(|j| [e.values[(i, j)].re.to_f64_lossy(), e.values[(i, j)].im.to_f64_lossy()])
                            .collect()
                    })
                    .collect(),
            })
            .collect();
        Ok(serde_json::to_string_pretty(&TableJson {
            q: self.lattice.q,
            width,
            height,
            dim: self.dim,
            max_weight: self.max_weight,
            words,
        })?)
    }
}

/// Reads each site's value from `T_11` of its single-site `Z` word: the
/// sign for qubits, the phase `ω^b` for qudits. Digits are returned in
/// sorted site order of the stored orientation.
pub fn read_assignment<R: Real>(table: &PauliTable<R>) -> Result<Vec<usize>> {
    if table.dim == 0 {
        return Err(Error::InvalidParameter("empty subspace".into()));
    }
    let q = table.lattice.q;
    let sites = Rectangle::new((1, table.lattice.width), (1, table.lattice.height)).sites();
    sites
        .iter()
        .map(|&s| {
            let word = PauliWord { sites: vec![s], letters: vec![Letter { a: 0, b: 1 }] };
            let entry = table
                .find(&word)
                .ok_or_else(|| Error::InvalidParameter(format!("table has no Z word on site {s}")))?;
            let v = entry.values[(0, 0)];
            let (re, im) = (v.re.to_f64_lossy(), v.im.to_f64_lossy());
            let modulus = re.hypot(im);
            let (x, y) = if table.lattice.transposed { (s.y, s.x) } else { (s.x, s.y) };
            if modulus < SIGN_THRESHOLD {
                return Err(Error::AmbiguousSign(x, y, modulus));
            }
            let turns = im.atan2(re) / (2.0 * PI) * q as f64;
            Ok((turns.round() as i64).rem_euclid(q as i64) as usize)
        })
        .collect()
}
