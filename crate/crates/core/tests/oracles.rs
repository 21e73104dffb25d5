//! Library results checked against independent computations.

use groundspace::agsp::{build_kappa, KappaConfig};
use groundspace::hamiltonian::DEFAULT_DENSE_CAP;
use groundspace::oracle::{
    closeness, count_satisfying_assignments, exact_ground_space, gen_random_ff, hard_core_instance, shuffled_terms,
};
use groundspace::scalar::{CMat, C};
use groundspace::spectral::{eigh, orthonormal_span, singular_values};
use groundspace::subspace::viability_error;
use groundspace::tensor::SubspaceMps;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn frame(n: usize, k: usize, seed: u64) -> CMat<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = CMat::<f64>::from_fn(n, k, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C::new(re, im)
    });
    orthonormal_span(&g, 1e-12)
}

/// Independent sets of the `w × h` grid graph by a column transfer matrix.
fn independent_sets(w: usize, h: usize) -> usize {
    let cols: Vec<usize> = (0..1usize << h).filter(|s| s & (s >> 1) == 0).collect();
    let mut count = vec![1usize; cols.len()];
    for _ in 1..w {
        count = cols
            .iter()
            .map(|&s| cols.iter().zip(&count).filter(|(&t, _)| s & t == 0).map(|(_, &c)| c).sum())
            .collect();
    }
    count.iter().sum()
}

#[test]
fn hard_core_degeneracy_matches_transfer_matrix() {
    for (w, h) in [(1, 1), (2, 1), (3, 1), (5, 1), (2, 2), (3, 2), (2, 3), (3, 3), (4, 2)] {
        let ham = hard_core_instance::<f64>(w, h).unwrap();
        let expected = independent_sets(w, h);
        assert_eq!(count_satisfying_assignments(&ham).unwrap(), expected, "{w}x{h}");
        assert_eq!(exact_ground_space(&ham).unwrap().ncols(), expected, "{w}x{h}");
    }
    assert_eq!(independent_sets(3, 3), 63);
}

#[test]
fn closeness_equals_largest_principal_angle() {
    for seed in 0..20 {
        let n = 6 + (seed as usize % 7);
        let k = 1 + (seed as usize % 3);
        let a = frame(n, k, seed);
        let b = frame(n, k, seed + 100);
        let s = singular_values(&(a.adjoint() * &b));
        let smallest = s.last().copied().unwrap();
        let expected = 1.0 - smallest * smallest;
        assert!((closeness(&a, &b).unwrap() - expected).abs() < 1e-10);
    }
}

#[test]
fn term_order_does_not_matter() {
    let h = gen_random_ff::<f64>(3, 2, 2, 5, 1, None).unwrap().hamiltonian;
    let shuffled = shuffled_terms(&h, 17).unwrap();
    let a = exact_ground_space(&h).unwrap();
    let b = exact_ground_space(&shuffled).unwrap();
    assert!(closeness(&a, &b).unwrap() < 1e-10);
    let ga = h.local_gap(None, DEFAULT_DENSE_CAP).unwrap().gamma.unwrap();
    let gb = shuffled.local_gap(None, DEFAULT_DENSE_CAP).unwrap().gamma.unwrap();
    assert!((ga - gb).abs() < 1e-10);
    let ka = build_kappa(&h, &KappaConfig::new(1, 1, 2, ga)).unwrap().kappa.to_dense();
    let kb = build_kappa(&shuffled, &KappaConfig::new(1, 1, 2, gb)).unwrap().kappa.to_dense();
    assert!((ka - kb).norm() < 1e-8);
}

#[test]
fn tensor_restriction_matches_dense_sandwich() {
    let h = gen_random_ff::<f64>(3, 2, 2, 8, 1, None).unwrap().hamiltonian;
    let gamma = h.local_gap(None, DEFAULT_DENSE_CAP).unwrap().gamma.unwrap();
    let kappa = build_kappa(&h, &KappaConfig::new(1, 1, 2, gamma)).unwrap().kappa;
    let f = frame(64, 3, 9);
    let y = SubspaceMps::from_dense(&f, &[4, 4, 4]).unwrap();
    let restricted = y.restrict_mpo(&kappa).unwrap();
    let dense = f.adjoint() * kappa.to_dense() * &f;
    assert!((restricted - dense).norm() < 1e-10);
}

/// A space containing the ground space, trimmed at every cut, stays within
/// `Σ_cuts √(ε r_cut)` of covering it, `r_cut` the ground space's Schmidt
/// rank at that cut.
#[test]
fn chain_trim_obeys_summed_bound() {
    let inst = gen_random_ff::<f64>(4, 1, 2, 21, 2, None).unwrap();
    let z = exact_ground_space(&inst.hamiltonian).unwrap();
    assert_eq!(z.ncols(), 2);
    let pz = &z * z.adjoint();
    let ranks: Vec<usize> = (1..4)
        .map(|cut| {
            let left = 1usize << cut;
            let right = 16 / left;
            let rho = CMat::<f64>::from_fn(left, left, |i, j| {
                (0..right).fold(C::new(0.0, 0.0), |s, r| s + pz[(i * right + r, j * right + r)])
            });
            eigh(&rho).values.iter().filter(|&&v| v > 1e-10).count()
        })
        .collect();
    for (k, eps) in [1e-4, 1e-3, 1e-2, 0.05].into_iter().enumerate() {
        let mut cols = CMat::<f64>::zeros(16, 4);
        cols.columns_mut(0, 2).copy_from(&z);
        cols.columns_mut(2, 2).copy_from(&frame(16, 2, 40 + k as u64));
        let y = orthonormal_span(&cols, 1e-12);
        let mps = SubspaceMps::from_dense(&y, &[2, 2, 2, 2]).unwrap();
        let (trimmed, _) = mps.trim_chain(eps).unwrap();
        let after = viability_error(&trimmed.to_dense(), &z).unwrap();
        let bound: f64 = ranks.iter().map(|&r| (eps * r as f64).sqrt()).sum();
        assert!(after <= bound + 1e-8, "eps {eps}: {after} > {bound}");
    }
}
