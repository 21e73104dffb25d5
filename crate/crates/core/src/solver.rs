//! Column-by-column ground space search with a column MPO projector,
//! parameter selection and boosting by repetition.

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::agsp::{
    build_kappa, choose_parameters_practical, choose_parameters_theory, measured_shrinking, AgspBundle, KappaConfig,
    DEFAULT_SHRINK_CONSTANT,
};
use crate::error::{Error, Result};
use crate::hamiltonian::{embed_operator, GridHamiltonian};
use crate::oracle::{closeness, exact_ground_space};
use crate::scalar::{CMat, Real};
use crate::spectral::eigh;
use crate::subspace::{low_energy_support, viability_error};
use crate::tensor::SubspaceMps;

/// Default `c_V` in `V = ⌈c_V (D̄ ln(Rd) + ln W)⌉`.
pub const DEFAULT_SAMPLE_CONSTANT: f64 = 16.0;
/// Default trim threshold in practical mode.
pub const DEFAULT_PRACTICAL_EPS: f64 = 1e-8;
/// Largest Hilbert space dimension for which the oracle is consulted.
pub const DEFAULT_ORACLE_CAP: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Theory,
    Practical,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theory" => Ok(Mode::Theory),
            "practical" => Ok(Mode::Practical),
            _ => Err(Error::InvalidParameter(format!("unknown mode {s:?}"))),
        }
    }
}

/// Which `Δ` enters the `RΔ ≤ δ/(32d)` check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaSource {
    /// `‖κ P_{Z⊥}‖²` from exact diagonalization, falling back to the formula
    /// when the lattice is too large.
    Measured,
    Formula,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverParams {
    pub m: usize,
    pub t: usize,
    pub p: usize,
    /// Sample dimension `V`.
    pub v: usize,
    /// Trim threshold `ε`.
    pub eps: f64,
    /// Restriction threshold `δ`.
    pub delta: f64,
    pub delta_goal: f64,
    pub gamma: f64,
    /// Degeneracy bound `D̄`.
    pub dbound: usize,
    pub seed: u64,
    pub mode: Mode,
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_goal > 0.0 && self.delta_goal < 1.0) {
            return Err(Error::InvalidParameter(format!("δ_goal = {} outside (0, 1)", self.delta_goal)));
        }
        if self.dbound == 0 || self.v < self.dbound {
            return Err(Error::InvalidParameter(format!("need V ≥ D̄ ≥ 1 (V = {}, D̄ = {})", self.v, self.dbound)));
        }
        if !(self.eps >= 0.0) {
            return Err(Error::InvalidParameter(format!("ε = {} is negative", self.eps)));
        }
        if !(self.delta > 0.0) {
            return Err(Error::InvalidParameter(format!("δ = {} must be positive", self.delta)));
        }
        Ok(())
    }
}

/// Sampling parameters of theory mode, with the intermediate quantities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TheorySampling {
    pub delta: f64,
    pub v: usize,
    /// `α = (δ/2W)²`.
    pub alpha: f64,
    /// Dimension bound of an `α`-viable space, `max(1, ⌈(32/α) R⁶ D̄ ln R⌉)`.
    pub v_theory: f64,
    /// `ε = α / V_theory`.
    pub eps: f64,
}

/// `δ = δ_goal/2`, `V = ⌈c_V (D̄ ln(Rd) + ln W)⌉` (at least `D̄`),
/// `α = (δ/2W)²`, `ε = α / max(1, ⌈(32/α) R⁶ D̄ ln R⌉)`.
pub fn theory_sampling(
    width: usize,
    column_dim: usize,
    dbound: usize,
    delta_goal: f64,
    rank: usize,
    c_v: f64,
) -> TheorySampling {
    let delta = delta_goal / 2.0;
    let (w, d, db, r) = (width as f64, column_dim as f64, dbound as f64, rank as f64);
    let v = ((c_v * (db * (r * d).ln() + w.ln())).ceil().max(0.0) as usize).max(dbound);
    let alpha = (delta / (2.0 * w)).powi(2);
    let v_theory = ((32.0 / alpha) * r.powi(6) * db * r.ln()).ceil().max(1.0);
    TheorySampling { delta, v, alpha, v_theory, eps: alpha / v_theory }
}

/// Knobs of [`select_parameters`] beyond the instance data.
#[derive(Clone, Debug, Serialize)]
pub struct SelectionOptions {
    pub c_v: f64,
    /// Practical-mode `V`; default `2D̄ + 4`.
    pub v: Option<usize>,
    /// Practical-mode `ε`; default [`DEFAULT_PRACTICAL_EPS`].
    pub eps: Option<f64>,
    pub seed: u64,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        SelectionOptions { c_v: DEFAULT_SAMPLE_CONSTANT, v: None, eps: None, seed: 0 }
    }
}

/// Fills in `V`, `ε` and `δ` for a built projector.
pub fn select_parameters<R: Real>(
    h: &GridHamiltonian<R>,
    bundle: &AgspBundle<R>,
    dbound: usize,
    delta_goal: f64,
    mode: Mode,
    opts: &SelectionOptions,
) -> SolverParams {
    let (v, eps, delta) = match mode {
        Mode::Theory => {
            let s = theory_sampling(h.width(), h.column_dim(), dbound, delta_goal, bundle.max_rank(), opts.c_v);
            (s.v, s.eps, s.delta)
        }
        Mode::Practical => (
            opts.v.unwrap_or(2 * dbound + 4).max(dbound),
            opts.eps.unwrap_or(DEFAULT_PRACTICAL_EPS),
            delta_goal / 2.0,
        ),
    };
    SolverParams {
        m: bundle.config.m,
        t: bundle.config.t,
        p: bundle.config.p,
        v,
        eps,
        delta,
        delta_goal,
        gamma: bundle.config.gamma,
        dbound,
        seed: opts.seed,
        mode,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrimLog {
    pub cut: usize,
    pub kept: usize,
    pub discarded: usize,
    pub discarded_weight: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationLog {
    /// One-based column.
    pub column: usize,
    /// `dim(Y_{[1,i-1]} ⊗ H_i)`.
    pub available: usize,
    pub sampled: usize,
    /// Dimension after applying the left part of `κ`.
    pub applied: usize,
    /// Dimension after trimming.
    pub kept: usize,
    pub bond_dims: Vec<usize>,
    pub max_bond: usize,
    /// `d R² V / ε`.
    pub bond_bound: f64,
    pub trims: Vec<TrimLog>,
}

/// The `RΔ ≤ δ/(32d)` condition, as evaluated.
#[derive(Clone, Debug, Serialize)]
pub struct GateReport {
    pub rank: usize,
    pub delta_used: f64,
    pub source: DeltaSource,
    pub threshold: f64,
    pub satisfied: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AttemptSummary {
    pub seed: u64,
    pub dim: usize,
    pub residual_energy: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunLog {
    pub params: SolverParams,
    pub iterations: Vec<IterationLog>,
    /// Dimension of `Y_{[1,W]}`.
    pub final_dim: usize,
    /// Spectrum of `(I − κ†κ)|_Y`.
    pub restricted_spectrum: Vec<f64>,
    pub gate: Option<GateReport>,
    pub attempts: Vec<AttemptSummary>,
}

#[derive(Clone, Debug)]
pub struct SolveResult<R: Real> {
    /// Output subspace `Z̃`.
    pub z: SubspaceMps<R>,
    /// `Y_{[1,W]}` before the final restriction.
    pub y: SubspaceMps<R>,
    pub dim: usize,
    /// `‖H|_Z̃‖`.
    pub residual_energy: f64,
    pub log: RunLog,
    /// Two-sided closeness of `Z̃` to the exact ground space.
    pub closeness: Option<f64>,
    /// Viability error of `Y_{[1,W]}` for the exact ground space.
    pub final_viability: Option<f64>,
}

impl<R: Real> SolveResult<R> {
    pub fn accepted(&self) -> bool {
        self.dim > 0 && self.residual_energy <= self.log.params.delta
    }

    pub fn log_json(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            dim: usize,
            residual_energy: f64,
            closeness: Option<f64>,
            final_viability: Option<f64>,
            log: &'a RunLog,
        }
        serde_json::to_string_pretty(&Out {
            dim: self.dim,
            residual_energy: self.residual_energy,
            closeness: self.closeness,
            final_viability: self.final_viability,
            log: &self.log,
        })
        .unwrap_or_default()
    }
}

/// Terms of `H` summed per column range and embedded densely on those
/// columns: `(first, last, operator)`, zero-based.
pub fn column_blocks<R: Real>(h: &GridHamiltonian<R>) -> Vec<(usize, usize, CMat<R>)> {
    let mut blocks: BTreeMap<(usize, usize), CMat<R>> = BTreeMap::new();
    for term in h.terms() {
        let (lo, hi) = term.column_span();
        let region = h.column_sites(lo, hi);
        let op = embed_operator(term.matrix(), term.support(), &region, h.local_dim());
        blocks
            .entry((lo - 1, hi - 1))
            .and_modify(|acc| *acc += &op)
            .or_insert(op);
    }
    blocks.into_iter().map(|((a, b), op)| (a, b, op)).collect()
}

fn hermitize<R: Real>(a: &CMat<R>) -> CMat<R> {
    (a + a.adjoint()).map(|z| z * R::lit(0.5))
}

/// `‖H|_Z‖` for an isometric subspace MPS: the top eigenvalue of
/// `Σ_terms Γ H_term Γ†`.
pub fn residual_energy<R: Real>(h: &GridHamiltonian<R>, z: &SubspaceMps<R>) -> Result<f64> {
    residual_energy_blocks(&column_blocks(h), z)
}

fn residual_energy_blocks<R: Real>(blocks: &[(usize, usize, CMat<R>)], z: &SubspaceMps<R>) -> Result<f64> {
    let dim = z.degeneracy();
    if dim == 0 {
        return Ok(0.0);
    }
    let mut acc = CMat::<R>::zeros(dim, dim);
    for (a, b, op) in blocks {
        acc += z.expectation(op, *a, *b)?;
    }
    let top = eigh(&hermitize(&acc)).values.last().copied().unwrap_or(R::zero());
    Ok(top.to_f64_lossy().max(0.0))
}

/// One pass of the column sweep: sample, apply `κ_{[1,i]}`, trim; then keep
/// the low-energy part of `I − κ†κ` on the result.
pub fn run_algorithm1<R: Real>(
    h: &GridHamiltonian<R>,
    bundle: &AgspBundle<R>,
    params: &SolverParams,
) -> Result<SolveResult<R>> {
    run_with_blocks(h, bundle, params, &column_blocks(h))
}

fn run_with_blocks<R: Real>(
    h: &GridHamiltonian<R>,
    bundle: &AgspBundle<R>,
    params: &SolverParams,
    blocks: &[(usize, usize, CMat<R>)],
) -> Result<SolveResult<R>> {
    params.validate()?;
    let width = h.width();
    let d = h.column_dim();
    if bundle.kappa.len() != width || bundle.kappa.in_dims().iter().any(|&x| x != d) {
        return Err(Error::ShapeMismatch("projector was built for a different lattice".into()));
    }
    let rank = bundle.max_rank() as f64;
    let bond_bound = if params.eps > 0.0 { d as f64 * rank * rank * params.v as f64 / params.eps } else { f64::INFINITY };
    let eps = R::lit(params.eps);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut y = SubspaceMps::<R>::empty();
    let mut iterations = Vec::with_capacity(width);
    for i in 1..=width {
        let extended = y.extend(d);
        let available = extended.degeneracy();
        let column_seed = rng.next_u64();
        if available == 0 {
            y = extended;
            iterations.push(IterationLog {
                column: i,
                available,
                sampled: 0,
                applied: 0,
                kept: 0,
                bond_dims: y.bond_dims(),
                max_bond: y.max_bond(),
                bond_bound,
                trims: Vec::new(),
            });
            continue;
        }
        let sampled_dim = params.v.min(available);
        let sampled = extended.random_subspace(sampled_dim, column_seed)?;
        let applied = sampled.apply(&bundle.kappa.left_part(i))?;
        let applied_dim = applied.degeneracy();
        let (trimmed, steps) = applied.trim_chain(eps)?;
        y = trimmed;
        let max_bond = y.max_bond();
        if max_bond as f64 > bond_bound {
            return Err(Error::BoundViolated(format!(
                "column {i}: bond dimension {max_bond} above d R² V / ε = {bond_bound}"
            )));
        }
        log::debug!("column {i}: sampled {sampled_dim} of {available}, applied {applied_dim}, kept {}", y.degeneracy());
        iterations.push(IterationLog {
            column: i,
            available,
            sampled: sampled_dim,
            applied: applied_dim,
            kept: y.degeneracy(),
            bond_dims: y.bond_dims(),
            max_bond,
            bond_bound,
            trims: steps
                .into_iter()
                .map(|s| TrimLog {
                    cut: s.cut,
                    kept: s.kept,
                    discarded: s.discarded,
                    discarded_weight: s.discarded_weight.to_f64_lossy(),
                })
                .collect(),
        });
    }
    let final_dim = y.degeneracy();
    let (z, spectrum) = if final_dim == 0 {
        (y.clone(), Vec::new())
    } else {
        let ky = y.apply_raw(&bundle.kappa)?;
        let hres = CMat::<R>::identity(final_dim, final_dim) - hermitize(&ky.gram());
        let spectrum = eigh(&hres).values.iter().map(|x| x.to_f64_lossy()).collect();
        let u = low_energy_support(&hres, R::lit(params.delta))?;
        (y.apply_frame(&u)?, spectrum)
    };
    let residual = residual_energy_blocks(blocks, &z)?;
    let dim = z.degeneracy();
    let log = RunLog {
        params: params.clone(),
        iterations,
        final_dim,
        restricted_spectrum: spectrum,
        gate: None,
        attempts: vec![AttemptSummary {
            seed: params.seed,
            dim,
            residual_energy: residual,
            accepted: dim > 0 && residual <= params.delta,
        }],
    };
    Ok(SolveResult { z, y, dim, residual_energy: residual, log, closeness: None, final_viability: None })
}

/// Runs [`run_algorithm1`] with seeds `seed, seed+1, …, seed+k−1` and keeps
/// the output of largest dimension among those with `‖H|_Z̃‖ ≤ δ`.
pub fn boost<R: Real>(
    h: &GridHamiltonian<R>,
    bundle: &AgspBundle<R>,
    params: &SolverParams,
    k: usize,
) -> Result<SolveResult<R>> {
    if k == 0 {
        return Err(Error::InvalidParameter("at least one repetition is needed".into()));
    }
    let blocks = column_blocks(h);
    let runs: Vec<Result<SolveResult<R>>> = (0..k as u64)
        .into_par_iter()
        .map(|j| {
            let mut p = params.clone();
            p.seed = params.seed.wrapping_add(j);
            run_with_blocks(h, bundle, &p, &blocks)
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let attempts: Vec<AttemptSummary> = runs.iter().flat_map(|r| r.log.attempts.clone()).collect();
    let mut best: Option<SolveResult<R>> = None;
    for run in runs {
        if run.accepted() && best.as_ref().is_none_or(|b| run.dim > b.dim) {
            best = Some(run);
        }
    }
    let mut best = best.ok_or(Error::NoViableOutput { delta: params.delta })?;
    best.log.attempts = attempts;
    Ok(best)
}

/// Knobs of [`solve`].
#[derive(Clone, Debug, Serialize)]
pub struct SolveOptions {
    pub mode: Mode,
    pub repeats: usize,
    pub shrink_constant: f64,
    /// Fixed `(m, t, p)`, bypassing the parameter choice.
    pub agsp: Option<(usize, usize, usize)>,
    /// Practical grid limits `(m, t, p)`.
    pub grid: (usize, usize, usize),
    pub selection: SelectionOptions,
    pub gate_source: DeltaSource,
    /// Skip the oracle above this Hilbert space dimension.
    pub oracle_cap: usize,
    pub exact_projectors: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            mode: Mode::Practical,
            repeats: 1,
            shrink_constant: DEFAULT_SHRINK_CONSTANT,
            agsp: None,
            grid: (4, 64, 32),
            selection: SelectionOptions::default(),
            gate_source: DeltaSource::Measured,
            oracle_cap: DEFAULT_ORACLE_CAP,
            exact_projectors: false,
        }
    }
}

/// Builds the projector for `(m, t, p)` chosen by `opts.mode`.
pub fn prepare_projector<R: Real>(
    h: &GridHamiltonian<R>,
    gamma: f64,
    delta_goal: f64,
    opts: &SolveOptions,
) -> Result<AgspBundle<R>> {
    let delta = delta_goal / 2.0;
    let (m, t, p) = match (opts.agsp, opts.mode) {
        (Some(mtp), _) => mtp,
        (None, Mode::Theory) => {
            let c = h.interaction_constant().max(1) as f64;
            let th = choose_parameters_theory(gamma, h.height(), h.local_dim(), delta, c, h.num_sites())?;
            (th.m, th.t, th.p)
        }
        (None, Mode::Practical) => {
            let (mm, mt, mp) = opts.grid;
            let pr = choose_parameters_practical(h, gamma, delta, opts.shrink_constant, mm, mt, mp)?;
            if !pr.met {
                log::warn!("no grid point met Δ·R ≤ δ; using the best one found");
            }
            (pr.m, pr.t, pr.p)
        }
    };
    let mut config = KappaConfig::new(m, t, p, gamma);
    config.shrink_constant = opts.shrink_constant;
    config.exact_projectors = opts.exact_projectors;
    build_kappa(h, &config)
}

fn hilbert_dim<R: Real>(h: &GridHamiltonian<R>) -> Option<usize> {
    (0..h.width()).try_fold(1usize, |acc, _| acc.checked_mul(h.column_dim()))
}

/// Evaluates `RΔ ≤ δ/(32d)`.
pub fn gate_report<R: Real>(
    h: &GridHamiltonian<R>,
    bundle: &AgspBundle<R>,
    delta: f64,
    source: DeltaSource,
    oracle_cap: usize,
) -> Result<GateReport> {
    let rank = bundle.max_rank();
    let small = hilbert_dim(h).is_some_and(|n| n <= oracle_cap);
    let (delta_used, source) = if source == DeltaSource::Measured && small {
        let ground = exact_ground_space(h)?;
        (measured_shrinking(&bundle.kappa.to_dense(), &ground).to_f64_lossy(), DeltaSource::Measured)
    } else {
        (bundle.delta_bound, DeltaSource::Formula)
    };
    let threshold = delta / (32.0 * h.column_dim() as f64);
    Ok(GateReport { rank, delta_used, source, threshold, satisfied: rank as f64 * delta_used <= threshold })
}

/// Compares the output against exact diagonalization when the lattice is
/// small enough.
pub fn attach_oracle<R: Real>(h: &GridHamiltonian<R>, result: &mut SolveResult<R>, oracle_cap: usize) -> Result<()> {
    if !hilbert_dim(h).is_some_and(|n| n <= oracle_cap) {
        return Ok(());
    }
    let ground = exact_ground_space(h)?;
    result.closeness = Some(closeness(&result.z.to_dense(), &ground)?.to_f64_lossy());
    result.final_viability = Some(viability_error(&result.y.to_dense(), &ground)?.to_f64_lossy());
    Ok(())
}

/// Parameter choice, projector construction, sample parameters and boosted
/// search in one call.
pub fn solve<R: Real>(
    h: &GridHamiltonian<R>,
    gamma: f64,
    dbound: usize,
    delta_goal: f64,
    seed: u64,
    opts: &SolveOptions,
) -> Result<SolveResult<R>> {
    if !(delta_goal > 0.0 && delta_goal < 1.0) {
        return Err(Error::InvalidParameter(format!("δ_goal = {delta_goal} outside (0, 1)")));
    }
    let bundle = prepare_projector(h, gamma, delta_goal, opts)?;
    let mut sel = opts.selection.clone();
    sel.seed = seed;
    let params = select_parameters(h, &bundle, dbound, delta_goal, opts.mode, &sel);
    let gate = gate_report(h, &bundle, params.delta, opts.gate_source, opts.oracle_cap)?;
    if !gate.satisfied {
        log::info!(
            "R·Δ = {} exceeds δ/(32d) = {}; the success guarantee does not apply",
            gate.rank as f64 * gate.delta_used,
            gate.threshold
        );
    }
    let mut result = boost(h, &bundle, &params, opts.repeats.max(1))?;
    result.log.gate = Some(gate);
    attach_oracle(h, &mut result, opts.oracle_cap)?;
    Ok(result)
}
