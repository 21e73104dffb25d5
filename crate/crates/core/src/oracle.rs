//! Exact-diagonalization ground truth and test-instance generators.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::hamiltonian::{digits, GridHamiltonian, InteractionTerm, Site, DEFAULT_DENSE_CAP};
use crate::scalar::{cr, CMat, CVec, Real, C};
use crate::spectral::{orthonormal_span, ZERO_EIGENVALUE};
use crate::subspace::overlap;

/// Give up on rejection sampling after this many draws.
const MAX_ATTEMPTS: usize = 20_000;

/// Orthonormal basis of `ker H` (eigenvalues below `1e-9`).
pub fn exact_ground_space<R: Real>(h: &GridHamiltonian<R>) -> Result<CMat<R>> {
    let full = h.restrict_to_region(&h.all_sites(), DEFAULT_DENSE_CAP)?;
    let dec = full.operator.eigh();
    Ok(dec.select(R::lit(-1.0), R::tol(ZERO_EIGENVALUE)))
}

/// Two-sided closeness: the larger of the two one-sided viability errors.
pub fn closeness<R: Real>(a: &CMat<R>, b: &CMat<R>) -> Result<R> {
    let ab = R::one() - overlap(b, a)?;
    let ba = R::one() - overlap(a, b)?;
    Ok(ab.max(ba).max(R::zero()))
}

/// Number of zero-energy basis states of a Hamiltonian with diagonal terms,
/// by direct enumeration of assignments.
pub fn count_satisfying_assignments<R: Real>(h: &GridHamiltonian<R>) -> Result<usize> {
    Ok(satisfying_assignments(h)?.len())
}

/// All zero-energy assignments of a diagonal Hamiltonian, each as digits in
/// sorted site order.
pub fn satisfying_assignments<R: Real>(h: &GridHamiltonian<R>) -> Result<Vec<Vec<usize>>> {
    if h.terms().iter().any(|t| !t.is_diagonal()) {
        return Err(Error::InvalidInstance("enumeration needs diagonal terms".into()));
    }
    let sites = h.all_sites();
    let n = sites.len();
    let q = h.local_dim();
    let total = crate::hamiltonian::checked_pow(q, n)?;
    if total > DEFAULT_DENSE_CAP {
        return Err(Error::CapExceeded { dim: total, cap: DEFAULT_DENSE_CAP });
    }
    let positions: Vec<Vec<usize>> = h
        .terms()
        .iter()
        .map(|t| t.support().iter().map(|s| sites.binary_search(s).expect("site on lattice")).collect())
        .collect();
    let zero = R::tol(ZERO_EIGENVALUE);
    let mut out = Vec::new();
    for idx in 0..total {
        let assignment = digits(idx, q, n);
        let ok = h.terms().iter().zip(&positions).all(|(t, pos)| {
            let local = pos.iter().fold(0, |acc, &p| acc * q + assignment[p]);
            t.matrix()[(local, local)].re < zero
        });
        if ok {
            out.push(assignment);
        }
    }
    Ok(out)
}

/// Nearest-neighbour pairs of the lattice, horizontal then vertical.
pub fn lattice_edges(width: usize, height: usize) -> Vec<(Site, Site)> {
    let mut edges = Vec::new();
    for x in 1..=width {
        for y in 1..=height {
            if x < width {
                edges.push((Site::new(x, y), Site::new(x + 1, y)));
            }
            if y < height {
                edges.push((Site::new(x, y), Site::new(x, y + 1)));
            }
        }
    }
    edges
}

/// A classical instance with a known satisfying assignment.
#[derive(Clone, Debug)]
pub struct PlantedInstance<R: Real> {
    pub hamiltonian: GridHamiltonian<R>,
    /// Planted bits in sorted site order.
    pub assignment: Vec<usize>,
    pub degeneracy: usize,
}

fn pattern_projector<R: Real>(rejected: &[usize], dim: usize) -> CMat<R> {
    let mut m = CMat::<R>::zeros(dim, dim);
    for &k in rejected {
        m[(k, k)] = cr(R::one());
    }
    m
}

/// Planted classical CSP on qubits: every nearest-neighbour pair carries a
/// diagonal projector rejecting a random subset of the patterns the plant
/// does not use. With `unique`, terms are redrawn until the plant is the only
/// satisfying assignment.
pub fn gen_planted_csp<R: Real>(width: usize, height: usize, seed: u64, unique: bool) -> Result<PlantedInstance<R>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sites = crate::hamiltonian::Rectangle::new((1, width), (1, height)).sites();
    let n = sites.len();
    let plant: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
    let bit = |s: &Site| plant[(s.x - 1) * height + (s.y - 1)];
    let edges = lattice_edges(width, height);
    for _ in 0..MAX_ATTEMPTS {
        let mut terms = Vec::new();
        for (a, b) in &edges {
            let keep = bit(a) * 2 + bit(b);
            let rejected: Vec<usize> = (0..4).filter(|&k| k != keep && rng.random_bool(0.6)).collect();
            if rejected.is_empty() {
                continue;
            }
            terms.push(InteractionTerm::new(vec![*a, *b], pattern_projector(&rejected, 4), 2)?);
        }
        if n == 1 && unique {
            let other = 1 - plant[0];
            terms.push(InteractionTerm::new(vec![sites[0]], pattern_projector(&[other], 2), 2)?);
        }
        let hamiltonian = GridHamiltonian::new(width, height, 2, terms)?;
        let degeneracy = count_satisfying_assignments(&hamiltonian)?;
        if !unique || degeneracy == 1 {
            return Ok(PlantedInstance { hamiltonian, assignment: plant, degeneracy });
        }
    }
    Err(Error::InvalidInstance(format!("no unique planted instance on {width}x{height} after {MAX_ATTEMPTS} draws")))
}

/// `Σ_edges |11⟩⟨11|`: hard-core constraint, plant all zeros.
pub fn hard_core_instance<R: Real>(width: usize, height: usize) -> Result<GridHamiltonian<R>> {
    let terms = lattice_edges(width, height)
        .into_iter()
        .map(|(a, b)| InteractionTerm::new(vec![a, b], pattern_projector(&[3], 4), 2))
        .collect::<Result<Vec<_>>>()?;
    GridHamiltonian::new(width, height, 2, terms)
}

/// A frustration-free instance whose kernel contains known product states.
#[derive(Clone, Debug)]
pub struct FfInstance<R: Real> {
    pub hamiltonian: GridHamiltonian<R>,
    /// Planted product states, dense over the whole lattice.
    pub planted: Vec<CVec<R>>,
    pub degeneracy: usize,
}

fn random_unit<R: Real>(rng: &mut ChaCha8Rng, dim: usize) -> CVec<R> {
    let v = CVec::<R>::from_fn(dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C::new(R::lit(re), R::lit(im))
    });
    let norm = v.norm();
    v.map(|z| z / norm)
}

/// Random frustration-free instance: `target_d` random product states are
/// planted, and each nearest-neighbour term projects onto a random
/// `rank`-dimensional subspace (default: all of it) of the complement of
/// the planted pair states. Redrawn until the exact degeneracy equals
/// `target_d`. `rank = Some(0)` gives `H = 0`.
pub fn gen_random_ff<R: Real>(
    width: usize,
    height: usize,
    q: usize,
    seed: u64,
    target_d: usize,
    rank: Option<usize>,
) -> Result<FfInstance<R>> {
    if target_d == 0 {
        return Err(Error::InvalidParameter("target degeneracy must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sites = crate::hamiltonian::Rectangle::new((1, width), (1, height)).sites();
    let index = |s: &Site| (s.x - 1) * height + (s.y - 1);
    let edges = lattice_edges(width, height);
    let total = crate::hamiltonian::checked_pow(q, sites.len())?;
    if total > DEFAULT_DENSE_CAP {
        return Err(Error::CapExceeded { dim: total, cap: DEFAULT_DENSE_CAP });
    }
    for _ in 0..MAX_ATTEMPTS / 100 {
        let locals: Vec<Vec<CVec<R>>> = (0..target_d)
            .map(|_| sites.iter().map(|_| random_unit(&mut rng, q)).collect())
            .collect();
        let mut terms = Vec::new();
        for (a, b) in &edges {
            let kernel = CMat::<R>::from_fn(q * q, target_d, |r, k| {
                locals[k][index(a)][r / q] * locals[k][index(b)][r % q]
            });
            let kernel = orthonormal_span(&kernel, R::tol(1e-10));
            let comp_dim = q * q - kernel.ncols();
            let want = rank.unwrap_or(comp_dim).min(comp_dim);
            if want == 0 {
                continue;
            }
            let g = CMat::<R>::from_fn(q * q, want, |_, _| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                C::new(R::lit(re), R::lit(im))
            });
            let g = &g - &kernel * (kernel.adjoint() * &g);
            let frame = orthonormal_span(&g, R::tol(1e-10));
            let proj = &frame * frame.adjoint();
            terms.push(InteractionTerm::new(vec![*a, *b], proj, q)?);
        }
        let hamiltonian = GridHamiltonian::new(width, height, q, terms)?;
        let planted: Vec<CVec<R>> = locals
            .iter()
            .map(|loc| {
                let mut v = CVec::<R>::from_element(1, cr(R::one()));
                for s in &sites {
                    v = v.kronecker(&loc[index(s)]);
                }
                v
            })
            .collect();
        let report = hamiltonian.verify_frustration_free(DEFAULT_DENSE_CAP)?;
        if rank == Some(0) || report.degeneracy == target_d {
            let degeneracy = report.degeneracy;
            return Ok(FfInstance { hamiltonian, planted, degeneracy });
        }
    }
    Err(Error::InvalidInstance(format!("no {width}x{height} instance with degeneracy {target_d}")))
}

/// Shuffles term order (for order-invariance checks).
pub fn shuffled_terms<R: Real>(h: &GridHamiltonian<R>, seed: u64) -> Result<GridHamiltonian<R>> {
    let mut terms = h.terms().to_vec();
    terms.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    GridHamiltonian::new(h.width(), h.height(), h.local_dim(), terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_hamiltonian_ground_space_is_everything() {
        let h = GridHamiltonian::<f64>::new(2, 1, 2, vec![]).unwrap();
        assert_eq!(exact_ground_space(&h).unwrap().ncols(), 4);
        let single = GridHamiltonian::<f64>::new(1, 1, 2, vec![]).unwrap();
        assert_eq!(count_satisfying_assignments(&single).unwrap(), 2);
    }

    #[test]
    fn planted_instances_contain_the_plant() {
        for seed in 0..5 {
            let inst = gen_planted_csp::<f64>(3, 2, seed, true).unwrap();
            assert_eq!(inst.degeneracy, 1);
            let sat = satisfying_assignments(&inst.hamiltonian).unwrap();
            assert_eq!(sat, vec![inst.assignment.clone()]);
            let z = exact_ground_space(&inst.hamiltonian).unwrap();
            assert_eq!(z.ncols(), 1);
        }
    }

    #[test]
    fn random_ff_is_reproducible_and_frustration_free() {
        let a = gen_random_ff::<f64>(3, 1, 2, 7, 1, None).unwrap();
        let b = gen_random_ff::<f64>(3, 1, 2, 7, 1, None).unwrap();
        assert_eq!(a.hamiltonian.terms(), b.hamiltonian.terms());
        let full = a.hamiltonian.restrict_to_region(&a.hamiltonian.all_sites(), 1 << 20).unwrap();
        let v = &a.planted[0];
        assert!((full.operator.matrix() * v).norm() < 1e-9);
        let zero = gen_random_ff::<f64>(3, 1, 2, 7, 1, Some(0)).unwrap();
        assert!(zero.hamiltonian.terms().is_empty());
    }

    #[test]
    fn closeness_extremes() {
        let e = CMat::<f64>::identity(4, 4);
        let a = e.columns(0, 2).into_owned();
        let b = e.columns(2, 2).into_owned();
        assert!(closeness(&a, &a).unwrap() < 1e-12);
        assert!((closeness(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }
}
