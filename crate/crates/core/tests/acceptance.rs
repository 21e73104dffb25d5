//! Acceptance suite: one PASS/FAIL line per criterion. Pass a substring as
//! the first argument to run only the matching criteria.

use std::sync::OnceLock;
use std::time::Instant;

use groundspace::agsp::{
    band_operators, build_kappa, calibrate_shrink_constant, choose_parameters_practical, choose_parameters_theory,
    layout_bands, measured_shrinking, KappaConfig,
};
use groundspace::hamiltonian::{embed_operator, DEFAULT_DENSE_CAP};
use groundspace::oracle::{closeness, exact_ground_space, gen_planted_csp, gen_random_ff};
use groundspace::polynomial::{RobustAndPolynomial, StepPolynomial};
use groundspace::postproc::{pauli_table, read_assignment, PauliWord, TableLimits};
use groundspace::scalar::{CMat, C};
use groundspace::solver::{
    boost, prepare_projector, select_parameters, solve, theory_sampling, Mode, SelectionOptions, SolveOptions,
};
use groundspace::spectral::{eigh, operator_norm, orthonormal_span, HermitianOperator};
use groundspace::subspace::{dense_trim, error_reduction_check, overlap, viability_error};
use groundspace::tensor::SubspaceMps;
use groundspace::Hamiltonian;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type M = CMat<f64>;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> M {
    M::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C::new(re, im)
    })
}

fn frame(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> M {
    orthonormal_span(&gaussian(rng, rows, cols), 1e-12)
}

fn projector(f: &M) -> M {
    let f = orthonormal_span(f, 1e-12);
    &f * f.adjoint()
}

fn eye(n: usize) -> M {
    M::identity(n, n)
}

struct FfCase {
    label: String,
    h: Hamiltonian,
    gamma: f64,
    ground: M,
}

/// Random frustration-free instances with local gaps and exact ground spaces.
fn ff_cases() -> &'static [FfCase] {
    static CASES: OnceLock<Vec<FfCase>> = OnceLock::new();
    CASES.get_or_init(|| {
        let shapes = [(3, 1), (4, 1), (5, 1), (6, 1), (2, 2), (3, 2), (3, 2), (4, 2), (4, 2), (5, 2)];
        shapes
            .iter()
            .enumerate()
            .map(|(k, &(w, ht))| {
                let inst = gen_random_ff::<f64>(w, ht, 2, 100 + k as u64, 1, None).unwrap();
                let h = inst.hamiltonian;
                let gamma = h.local_gap(None, DEFAULT_DENSE_CAP).unwrap().gamma.unwrap();
                let ground = exact_ground_space(&h).unwrap();
                FfCase { label: format!("{w}x{ht}#{k}"), h, gamma, ground }
            })
            .collect()
    })
}

fn calibrated_c() -> f64 {
    static C_FIT: OnceLock<f64> = OnceLock::new();
    *C_FIT.get_or_init(|| {
        let inst: Vec<(&Hamiltonian, f64)> = ff_cases().iter().map(|c| (&c.h, c.gamma)).collect();
        calibrate_shrink_constant(&inst, 1).unwrap().unwrap_or(1.0)
    })
}

fn criterion_1() -> Outcome {
    let c = calibrated_c();
    let mut worst_identity = 0.0f64;
    let mut failures = Vec::new();
    let mut checked = 0;
    for case in ff_cases() {
        let practical = choose_parameters_practical(&case.h, case.gamma, 0.05, c, 3, 16, 16).unwrap();
        let points = [(1, 1, 1), (1, 2, 2), (practical.m, practical.t, practical.p)];
        for (m, t, p) in points {
            let mut config = KappaConfig::new(m, t, p, case.gamma);
            config.shrink_constant = c;
            let bundle = build_kappa(&case.h, &config).unwrap();
            let kappa = bundle.kappa.to_dense();
            let identity = (&kappa * &case.ground - &case.ground).norm();
            let measured = measured_shrinking(&kappa, &case.ground);
            worst_identity = worst_identity.max(identity);
            checked += 1;
            if identity > 1e-6 || measured > bundle.delta_bound {
                failures.push(format!(
                    "{} ({m},{t},{p}): |kz-z|={identity:.2e} measured={measured:.3e} bound={:.3e}",
                    case.label, bundle.delta_bound
                ));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "c={c:.4} on {checked} projectors, worst |kz-z|={worst_identity:.1e}{}",
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut worst_tail = 0.0f64;
    let mut problems = Vec::new();
    for eta in [0.5, 0.1, 0.01] {
        let step = StepPolynomial::<f64>::new(eta, 1.0 / 20.0).unwrap();
        if step.eval(0.0) != 1.0 {
            problems.push(format!("Step(0) = {} at eta {eta}", step.eval(0.0)));
        }
        for k in 0..10_000 {
            let x = eta + (1.0 - eta) * k as f64 / 9_999.0;
            worst_tail = worst_tail.max(step.eval(x).abs());
        }
    }
    if worst_tail > 0.05 {
        problems.push(format!("max |Step| on [eta,1] = {worst_tail}"));
    }
    let mut worst_err = 0.0f64;
    let mut worst_fix = 0.0f64;
    let mut bands = 0;
    for case in ff_cases() {
        for (m, t) in [(1, 1), (1, 2)] {
            let layout = layout_bands(case.h.width(), case.h.height(), m, t).unwrap();
            let config = KappaConfig::new(m, t, 1, case.gamma);
            for b in band_operators(&case.h, &layout, &config).unwrap() {
                bands += 1;
                let err = operator_norm(&(&b.approx - &b.projector));
                let fix = operator_norm(&(&b.approx * &b.projector - &b.projector));
                worst_err = worst_err.max(err);
                worst_fix = worst_fix.max(fix);
            }
        }
    }
    if worst_err > 1.0 / 20.0 || worst_fix > 1e-8 {
        problems.push(format!("bands: |Q^-Q|={worst_err:.3e}, |Q^Q-Q|={worst_fix:.1e}"));
    }
    outcome(
        problems.is_empty(),
        format!(
            "tail max {worst_tail:.4}; {bands} bands, max |Q^-Q|={worst_err:.4}, max |Q^Q-Q|={worst_fix:.1e}{}",
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let w = 1.0 / 20.0;
    let mut problems = Vec::new();
    let mut worst_ratio = 0.0f64;
    for m in 1..=8 {
        let and = RobustAndPolynomial::<f64>::new(m).unwrap();
        let ones = and.eval(&vec![1.0; m]).unwrap();
        if (ones - 1.0).abs() > 1e-12 {
            problems.push(format!("AND(1)={ones} at m={m}"));
        }
        let bound = (-(m as f64)).exp();
        for _ in 0..100_000 {
            let noisy = rng.random_range(0..m);
            let xs: Vec<f64> = (0..m)
                .map(|i| if i == noisy { rng.random_range(-w..=w) } else { rng.random_range(-w..=1.0) })
                .collect();
            let v = and.eval(&xs).unwrap().abs();
            worst_ratio = worst_ratio.max(v / bound);
        }
    }
    if worst_ratio > 1.0 {
        problems.push(format!("|AND|/e^-m reached {worst_ratio:.3}"));
    }
    outcome(
        problems.is_empty(),
        format!("m=1..8, 1e5 noise points each, max |AND|/e^-m = {worst_ratio:.3e}{}", problems.join("; ")),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = f64::NEG_INFINITY;
    let mut failures = 0;
    for _ in 0..20 {
        let n = rng.random_range(8..=64);
        let d = rng.random_range(1..=3);
        let z = frame(&mut rng, n, d);
        let pz = &z * z.adjoint();
        let perp = eye(n) - &pz;
        let mixer = &perp * gaussian(&mut rng, n, n) * &perp;
        let target: f64 = rng.random_range(0.01..0.5);
        let kappa = &pz + mixer.scale(target.sqrt() / operator_norm(&mixer));
        let extra = rng.random_range(0..=3);
        let noise: f64 = rng.random_range(0.1..1.5);
        let v = &z * gaussian(&mut rng, d, d + extra) + gaussian(&mut rng, n, d + extra).scale(noise);
        let r = error_reduction_check(&v, &z, &kappa).unwrap();
        let slack = r.delta_after / r.mu_after - r.shrinking * r.delta_before / r.mu_before;
        worst = worst.max(slack);
        if !r.holds(1e-8) {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("20 triples, max (d'/m' - D d/m) = {worst:.2e}, {failures} failures"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (a, b, c) = (4usize, 3usize, 2usize);
    let n = a * b * c;
    let mut worst = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    let mut mps_gap = 0.0f64;
    let mut checks = 0;
    for case in 0..20 {
        let d = rng.random_range(1..=2);
        let support_a = frame(&mut rng, a, 2);
        let mut zcols = M::zeros(n, d);
        for k in 0..d {
            let left = &support_a * gaussian(&mut rng, 2, 1);
            let rest = gaussian(&mut rng, b * c, 1);
            let mut col = left.kronecker(&rest);
            let spread = rng.random_range(0.0..0.3);
            col += gaussian(&mut rng, n, 1).scale(spread);
            zcols.set_column(k, &col.column(0));
        }
        let z = orthonormal_span(&zcols, 1e-12);
        let pz = &z * z.adjoint();
        let rho_a = M::from_fn(a, a, |i, j| (0..b * c).fold(C::new(0.0, 0.0), |s, r| s + pz[(i * b * c + r, j * b * c + r)]));
        let v_dim = rng.random_range(1..=3);
        let va = eigh(&rho_a).vectors.columns(a - v_dim, v_dim).into_owned();
        let alpha = viability_error(&va.kronecker(&eye(b * c)), &z).unwrap();
        let rho_ab = M::from_fn(a * b, a * b, |i, j| (0..c).fold(C::new(0.0, 0.0), |s, r| s + pz[(i * c + r, j * c + r)]));
        let ab_support = eigh(&rho_ab).select(1e-10, f64::INFINITY);
        let extra = rng.random_range(0..=3);
        let mut ycols = M::zeros(a * b, ab_support.ncols() + extra);
        ycols.columns_mut(0, ab_support.ncols()).copy_from(&ab_support);
        ycols.columns_mut(ab_support.ncols(), extra).copy_from(&gaussian(&mut rng, a * b, extra));
        let wobble = rng.random_range(0.0..0.2);
        let y = orthonormal_span(&(ycols.clone() + gaussian(&mut rng, a * b, ycols.ncols()).scale(wobble)), 1e-12);
        let delta = viability_error(&y.kronecker(&eye(c)), &z).unwrap();
        let spectrum = eigh(&M::from_fn(a, a, |i, j| {
            let py = &y * y.adjoint();
            (0..b).fold(C::new(0.0, 0.0), |s, r| s + py[(i * b + r, j * b + r)])
        }))
        .values;
        let mut eps_list: Vec<f64> = spectrum.windows(2).map(|w| 0.5 * (w[0] + w[1])).filter(|&e| e > 1e-6).collect();
        eps_list.push(1e-3);
        for eps in eps_list {
            let trimmed = dense_trim(&y, a, eps).unwrap();
            let after = viability_error(&trimmed.kronecker(&eye(c)), &z).unwrap();
            let allowed = delta + (eps * v_dim as f64).sqrt() + alpha.sqrt();
            worst = worst.max(after - allowed);
            checks += 1;
            if after > allowed + 1e-8 {
                failures.push(format!("case {case} eps {eps:.3}: d'={after:.4} > {allowed:.4}"));
            }
            let mps = SubspaceMps::from_dense(&y, &[a, b]).unwrap();
            let (t, _) = mps.trim_eps(1, eps).unwrap();
            let dense = t.to_dense();
            let gap = if dense.ncols() == 0 && trimmed.ncols() == 0 {
                0.0
            } else {
                (projector(&dense) - projector(&trimmed)).norm()
            };
            mps_gap = mps_gap.max(gap);
        }
    }
    let mut zero_gap = 0.0f64;
    for seed in 0..10 {
        let y = frame(&mut rng, 16, 1 + seed % 3);
        let mps = SubspaceMps::from_dense(&y, &[2, 2, 2, 2]).unwrap();
        for cut in 1..4 {
            let (t, _) = mps.trim_eps(cut, 0.0).unwrap();
            zero_gap = zero_gap.max((projector(&t.to_dense()) - projector(&y)).norm());
        }
        let (t, _) = mps.trim_chain(0.0).unwrap();
        zero_gap = zero_gap.max((projector(&t.to_dense()) - projector(&y)).norm());
    }
    let passed = failures.is_empty() && zero_gap <= 1e-9 && mps_gap <= 1e-8;
    outcome(
        passed,
        format!(
            "{checks} trims, max (d' - bound) = {worst:.2e}; eps=0 drift {zero_gap:.1e}; tensor vs dense trim {mps_gap:.1e}{}",
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (left, right) = (32usize, 2usize);
    let mut lines = Vec::new();
    let mut passed = true;
    for &(ydim, v, d) in &[(8usize, 2usize, 1usize), (16, 4, 1), (16, 8, 2), (32, 8, 2), (32, 16, 1)] {
        let y = frame(&mut rng, left, ydim);
        let mut zcols = M::zeros(left * right, d);
        for k in 0..d {
            let mat = &y * gaussian(&mut rng, ydim, right);
            let col = M::from_fn(left * right, 1, |i, _| mat[(i / right, i % right)]) + gaussian(&mut rng, left * right, 1).scale(0.15);
            zcols.set_column(k, &col.column(0));
        }
        let z = orthonormal_span(&zcols, 1e-12);
        let mu = overlap(&z, &y.kronecker(&eye(right))).unwrap();
        let nu = v as f64 / (8.0 * ydim as f64) * mu;
        let eta = (1.0 + 2.0 / nu.sqrt()).powi(d as i32) * ydim as f64 * (-(v as f64) / 16.0).exp();
        let mut hits = 0;
        for seed in 0..200u64 {
            let sample = groundspace::subspace::random_dense_subspace(&y, v, seed).unwrap();
            if overlap(&z, &sample.kronecker(&eye(right))).unwrap() >= nu {
                hits += 1;
            }
        }
        let fraction = hits as f64 / 200.0;
        let ok = fraction >= 1.0 - eta;
        passed &= ok;
        lines.push(format!("Y={ydim} V={v} D={d}: {hits}/200 >= nu, eta={eta:.2}"));
    }
    outcome(passed, lines.join("; "))
}

struct PlantedCase {
    label: String,
    h: Hamiltonian,
    assignment: Vec<usize>,
    ground: M,
}

fn planted_cases() -> Vec<PlantedCase> {
    [(3, 2, 11u64), (3, 2, 12), (3, 2, 13), (4, 2, 14), (4, 2, 15)]
        .iter()
        .map(|&(w, ht, seed)| {
            let inst = gen_planted_csp::<f64>(w, ht, seed, true).unwrap();
            let ground = exact_ground_space(&inst.hamiltonian).unwrap();
            PlantedCase { label: format!("{w}x{ht}/{seed}"), h: inst.hamiltonian, assignment: inst.assignment, ground }
        })
        .collect()
}

fn criterion_7() -> Outcome {
    let opts = SolveOptions::default();
    let mut passed = true;
    let mut lines = Vec::new();
    for (idx, case) in planted_cases().iter().enumerate() {
        let bundle = prepare_projector(&case.h, 1.0, 0.1, &opts).unwrap();
        let base = select_parameters(&case.h, &bundle, 1, 0.1, Mode::Practical, &SelectionOptions::default());
        let (mut close, mut decoded) = (0, 0);
        for trial in 0..100u64 {
            let mut params = base.clone();
            params.seed = 1_000_000 * idx as u64 + 5 * trial;
            let Ok(result) = boost(&case.h, &bundle, &params, 5) else { continue };
            if closeness(&result.z.to_dense(), &case.ground).unwrap() > 0.1 {
                continue;
            }
            close += 1;
            let table = pauli_table(&result.z, case.h.lattice_info(), 1, None, TableLimits::default()).unwrap();
            if read_assignment(&table).ok().as_ref() == Some(&case.assignment) {
                decoded += 1;
            }
        }
        passed &= close >= 95 && decoded == close;
        lines.push(format!("{} ({},{},{}): {close}/100 close, {decoded} decoded", case.label, base.m, base.t, base.p));
    }
    outcome(passed, lines.join("; "))
}

fn criterion_8() -> Outcome {
    let mut passed = true;
    let mut lines = Vec::new();
    for (k, &(w, ht)) in [(3usize, 2usize), (4, 2), (5, 1)].iter().enumerate() {
        let inst = gen_random_ff::<f64>(w, ht, 2, 800 + k as u64, 2, None).unwrap();
        let h = inst.hamiltonian;
        let gamma = h.local_gap(None, DEFAULT_DENSE_CAP).unwrap().gamma.unwrap();
        let opts = SolveOptions { repeats: 5, ..SolveOptions::default() };
        match solve(&h, gamma, 2, 0.1, 7 + k as u64, &opts) {
            Ok(r) => {
                let close = r.closeness.unwrap_or(f64::INFINITY);
                passed &= r.dim == 2 && close <= 0.1;
                lines.push(format!("{w}x{ht} gamma={gamma:.3}: dim={} closeness={close:.2e}", r.dim));
            }
            Err(e) => {
                passed = false;
                lines.push(format!("{w}x{ht} gamma={gamma:.3}: {e}"));
            }
        }
    }
    outcome(passed, lines.join("; "))
}

/// `(P̃ Q_even)^p` assembled densely from the band operators.
fn dense_kappa(h: &Hamiltonian, m: usize, t: usize, p: usize, gamma: f64) -> M {
    let layout = layout_bands(h.width(), h.height(), m, t).unwrap();
    let config = KappaConfig::new(m, t, p, gamma);
    let bands = band_operators(h, &layout, &config).unwrap();
    let all = h.all_sites();
    let q = h.local_dim();
    let n = q.pow(all.len() as u32);
    let and = RobustAndPolynomial::<f64>::new(m).unwrap();
    let mut p_tilde = eye(n);
    for xi in &layout.xi {
        for i in xi {
            if let Some(b) = bands.iter().find(|b| b.index == *i) {
                let factor = and.factor(&HermitianOperator::new_unchecked(b.approx.clone()));
                let sites = h.column_sites(b.columns.0, b.columns.1);
                p_tilde = p_tilde * embed_operator(&factor, &sites, &all, q);
            }
        }
    }
    let mut q_even = eye(n);
    for b in bands.iter().filter(|b| b.index % 2 == 0) {
        let sites = h.column_sites(b.columns.0, b.columns.1);
        q_even = q_even * embed_operator(&b.projector, &sites, &all, q);
    }
    let base = p_tilde * q_even;
    (0..p).fold(eye(n), |acc, _| acc * &base)
}

fn criterion_9() -> Outcome {
    let mut passed = true;
    let mut lines = Vec::new();
    let cases = [(3usize, 2usize, (1usize, 1usize, 3usize)), (4, 2, (1, 1, 4)), (6, 1, (1, 1, 5)), (8, 1, (2, 1, 2)), (5, 2, (1, 1, 3))];
    for (k, &(w, ht, (m, t, p))) in cases.iter().enumerate() {
        let h = gen_random_ff::<f64>(w, ht, 2, 900 + k as u64, 1, None).unwrap().hamiltonian;
        let gamma = h.local_gap(None, DEFAULT_DENSE_CAP).unwrap().gamma.unwrap();
        let bundle = build_kappa(&h, &KappaConfig::new(m, t, p, gamma)).unwrap();
        let reference = dense_kappa(&h, m, t, p, gamma);
        let err = operator_norm(&(bundle.kappa.to_dense() - &reference));
        let mut worst_round = 0.0f64;
        let mut cur = bundle.base.clone();
        for _ in 0..3 {
            let dense = cur.to_dense();
            let (sq, _) = cur.multiply_compress(&cur, 1e-10).unwrap().trim(1e-10);
            worst_round = worst_round.max(operator_norm(&(sq.to_dense() - &dense * &dense)));
            cur = sq;
        }
        passed &= err <= 1e-6 && worst_round <= 1e-8;
        lines.push(format!("{w}x{ht} ({m},{t},{p}): |k-ref|={err:.1e}, round drift {worst_round:.1e}"));
    }
    outcome(passed, lines.join("; "))
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    let mut problems = Vec::new();
    let shapes = [(3usize, 2usize, 2usize), (4, 1, 2), (2, 2, 3), (3, 1, 3)];
    for &(w, ht, q) in &shapes {
        let h = Hamiltonian::new(w, ht, q, vec![]).unwrap();
        let dcol = q.pow(ht as u32);
        let n = dcol.pow(w as u32);
        let d = rng.random_range(1..=3);
        let f = frame(&mut rng, n, d);
        let z = SubspaceMps::from_dense(&f, &vec![dcol; w]).unwrap();
        let table = pauli_table(&z, h.lattice_info(), 1, None, TableLimits::default()).unwrap();
        let all = h.all_sites();
        for entry in &table.entries {
            let op: M = entry.word.dense(&all, q);
            let expected = f.adjoint() * op * &f;
            worst = worst.max((expected - &entry.values).iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        let expected_words = 1 + all.len() * (q * q - 1);
        if table.entries.len() != expected_words {
            problems.push(format!("{w}x{ht} q={q}: {} words, expected {expected_words}", table.entries.len()));
        }
    }
    for case in planted_cases().iter().take(2) {
        let digits: Vec<usize> = {
            let mut col = Vec::new();
            for x in 0..case.h.width() {
                let mut v = 0;
                for y in 0..case.h.height() {
                    v = v * 2 + case.assignment[x * case.h.height() + y];
                }
                col.push(v);
            }
            col
        };
        let dcol = case.h.column_dim();
        let z = SubspaceMps::<f64>::basis_state(&digits, &vec![dcol; case.h.width()]);
        if viability_error(&z.to_dense(), &case.ground).unwrap() > 1e-10 {
            problems.push(format!("{}: plant is not the ground state", case.label));
        }
        let table = pauli_table(&z, case.h.lattice_info(), 1, None, TableLimits::default()).unwrap();
        if read_assignment(&table).unwrap() != case.assignment {
            problems.push(format!("{}: decoded assignment differs", case.label));
        }
        let id = table.find(&PauliWord::identity()).unwrap();
        worst = worst.max((id.values[(0, 0)] - C::new(1.0, 0.0)).norm());
    }
    let passed = worst <= 1e-8 && problems.is_empty();
    outcome(passed, format!("max entry error {worst:.1e}{}", problems.iter().map(|p| format!("; {p}")).collect::<String>()))
}

fn criterion_11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut mismatches = Vec::new();
    for _ in 0..20 {
        let h = rng.random_range(1..=4usize);
        let q = rng.random_range(2..=3usize);
        let gamma = rng.random_range(0.05..1.0);
        let delta = rng.random_range(0.01..0.5);
        let c = 4.0 * rng.random_range(1..=3) as f64;
        let n = h * rng.random_range(2..=12usize);
        let got = choose_parameters_theory(gamma, h, q, delta, c, n).unwrap();
        let hf = h as f64;
        let lg = (hf * q as f64 / gamma).ln();
        let ct = 4.0 * c * c * lg;
        let m1 = (ct * ct).cbrt() * hf.cbrt() / gamma.powf(1.0 / 6.0);
        let m2 = (gamma.sqrt().sqrt() * gamma.sqrt().sqrt() * 2.0 * c * (1.0 / delta).ln() / (ct * hf)).sqrt();
        let m3 = 2.0 * (n as f64).ln();
        let m = m1.max(m2).max(m3).ceil().max(1.0) as usize;
        let t = (m as f64 / gamma.sqrt()).ceil() as usize;
        let p = (ct * m as f64 * hf / gamma.sqrt()).ceil() as usize;
        if (got.m, got.t, got.p) != (m, t, p) {
            mismatches.push(format!("theory g={gamma:.3} h={h} q={q}: got ({},{},{}) want ({m},{t},{p})", got.m, got.t, got.p));
        }
        let width = rng.random_range(2..=40usize);
        let dbound = rng.random_range(1..=3usize);
        let rank = rng.random_range(1..=40usize);
        let goal = rng.random_range(0.01..0.5);
        let s = theory_sampling(width, q.pow(h as u32), dbound, goal, rank, 16.0);
        let half = goal / 2.0;
        let d = q.pow(h as u32) as f64;
        let v = (16.0 * (dbound as f64 * (rank as f64 * d).ln() + (width as f64).ln())).ceil() as usize;
        let v = v.max(dbound);
        let alpha = (half / (2.0 * width as f64)) * (half / (2.0 * width as f64));
        let vt = ((32.0 / alpha) * (rank as f64).powi(6) * dbound as f64 * (rank as f64).ln()).ceil().max(1.0);
        let eps = alpha / vt;
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1e-300);
        if s.v != v || !rel(s.alpha, alpha) || s.v_theory != vt || !rel(s.eps, eps) || s.delta != half {
            mismatches.push(format!("sampling W={width} R={rank}: got {:?}, want V={v} eps={eps:e}", s));
        }
    }
    outcome(mismatches.is_empty(), format!("20 tuples, {} mismatches{}", mismatches.len(), mismatches.iter().map(|m| format!("; {m}")).collect::<String>()))
}

fn main() {
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("1 shrinking and identity on ground space", criterion_1),
        ("2 step polynomial and band projectors", criterion_2),
        ("3 robust AND", criterion_3),
        ("4 error reduction", criterion_4),
        ("5 trim viability", criterion_5),
        ("6 random sampling", criterion_6),
        ("7 planted instances end to end", criterion_7),
        ("8 degenerate ground spaces", criterion_8),
        ("9 tensor network fidelity", criterion_9),
        ("10 pauli expectations", criterion_10),
        ("11 parameter formulas", criterion_11),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        if filter.as_ref().is_some_and(|f| !name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        println!(
            "criterion {name}: {} [{:.1}s] {}",
            if result.passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            result.detail
        );
        if !result.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
