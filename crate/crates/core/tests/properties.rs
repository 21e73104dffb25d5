//! Invariants checked over random inputs.

use groundspace::agsp::{build_kappa, KappaConfig};
use groundspace::oracle::{closeness, exact_ground_space, gen_planted_csp, gen_random_ff};
use groundspace::scalar::{CMat, C};
use groundspace::spectral::{operator_norm, orthonormal_span};
use groundspace::subspace::{overlap, viability_error};
use groundspace::tensor::SubspaceMps;
use proptest::prelude::*;
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

fn projector(f: &CMat<f64>) -> CMat<f64> {
    f * f.adjoint()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn closeness_is_symmetric(n in 2usize..16, ka in 1usize..4, kb in 1usize..4, seed in any::<u64>()) {
        let a = frame(n, ka.min(n), seed);
        let b = frame(n, kb.min(n), seed.wrapping_add(1));
        let ab = closeness(&a, &b).unwrap();
        let ba = closeness(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn subspace_covers_itself_and_its_parts(n in 3usize..16, k in 1usize..3, seed in any::<u64>()) {
        let y = frame(n, k + 1, seed);
        let part = y.columns(0, k).into_owned();
        prop_assert!(viability_error(&y, &part).unwrap() < 1e-12);
        let o = overlap(&y, &part).unwrap();
        prop_assert!((0.0..=1.0).contains(&o));
    }

    #[test]
    fn trim_never_increases_dimension(k in 1usize..5, eps in 0.0f64..0.6, cut in 1usize..4, seed in any::<u64>()) {
        let y = frame(16, k, seed);
        let mps = SubspaceMps::from_dense(&y, &[2, 2, 2, 2]).unwrap();
        let (one, _) = mps.trim_eps(cut, eps).unwrap();
        prop_assert!(one.degeneracy() <= k);
        let (chain, _) = mps.trim_chain(eps).unwrap();
        prop_assert!(chain.degeneracy() <= k);
        let d = chain.to_dense();
        if d.ncols() > 0 {
            prop_assert!((d.adjoint() * &d - CMat::<f64>::identity(d.ncols(), d.ncols())).norm() < 1e-9);
        }
    }

    #[test]
    fn random_subspace_is_reproducible(v in 1usize..6, seed in any::<u64>()) {
        let base = SubspaceMps::<f64>::empty().extend(4).extend(2);
        let a = base.random_subspace(v, seed).unwrap().to_dense();
        let b = base.random_subspace(v, seed).unwrap().to_dense();
        prop_assert_eq!(a.clone(), b);
        prop_assert!((a.adjoint() * &a - CMat::<f64>::identity(v, v)).norm() < 1e-10);
    }

    #[test]
    fn projector_fixes_ground_space_and_keeps_it_invariant(seed in 0u64..1000, p in 1usize..4, planted in any::<bool>()) {
        let h = if planted {
            gen_planted_csp::<f64>(3, 2, seed, false).unwrap().hamiltonian
        } else {
            gen_random_ff::<f64>(4, 1, 2, seed, 1, None).unwrap().hamiltonian
        };
        let gamma = h.local_gap(None, 1 << 12).unwrap().gamma.unwrap_or(1.0);
        let kappa = build_kappa(&h, &KappaConfig::new(1, 1, p, gamma)).unwrap().kappa.to_dense();
        let z = exact_ground_space(&h).unwrap();
        let pz = projector(&z);
        let n = pz.nrows();
        let perp = CMat::<f64>::identity(n, n) - &pz;
        prop_assert!((&kappa * &pz - &pz).norm() < 1e-6);
        prop_assert!(operator_norm(&(&pz * &kappa * &perp)) < 1e-6);
    }
}
