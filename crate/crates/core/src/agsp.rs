//! The implementable projector `κ(m,t,p) = (P̃ Q_even)^p` as a column MPO.

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{GridHamiltonian, DEFAULT_DENSE_CAP};
use crate::polynomial::{eval_and_on_operators, RobustAndPolynomial, StepPolynomial, NOISE_WINDOW};
use crate::scalar::{CMat, Real};
use crate::spectral::{kernel_projector, operator_norm, HermitianOperator};
use crate::tensor::Mpo;

/// Default constant in `e^{-c t √γ}`.
pub const DEFAULT_SHRINK_CONSTANT: f64 = 0.1;
/// Default relative SVD tolerance for the squaring loop.
pub const DEFAULT_TRIM_TOL: f64 = 1e-10;

/// Column interval `[first, last]`, one-based and inclusive.
pub type Columns = (usize, usize);

#[derive(Clone, Debug, Serialize)]
pub struct NarrowBand {
    pub index: usize,
    pub columns: Columns,
}

/// Narrow bands `B_i`, wide bands `𝔹_j` and the odd index sets `Ξ_j`.
#[derive(Clone, Debug, Serialize)]
pub struct BandLayout {
    pub width: usize,
    pub height: usize,
    pub m: usize,
    pub t: usize,
    pub narrow: Vec<NarrowBand>,
    pub wide: Vec<Columns>,
    pub xi: Vec<Vec<usize>>,
}

impl BandLayout {
    pub fn wide_count(&self) -> usize {
        self.wide.len()
    }

    pub fn band(&self, index: usize) -> Option<&NarrowBand> {
        self.narrow.iter().find(|b| b.index == index)
    }

    pub fn odd(&self) -> impl Iterator<Item = &NarrowBand> {
        self.narrow.iter().filter(|b| b.index % 2 == 1)
    }

    pub fn even(&self) -> impl Iterator<Item = &NarrowBand> {
        self.narrow.iter().filter(|b| b.index % 2 == 0)
    }
}

fn clip(lo_open: i64, hi: i64, width: usize) -> Option<Columns> {
    let a = (lo_open + 1).max(1);
    let b = hi.min(width as i64);
    (a <= b).then_some((a as usize, b as usize))
}

/// Bands clipped to the `width` columns of the lattice. Grids narrower than
/// one wide band get a single clipped wide band.
pub fn layout_bands(width: usize, height: usize, m: usize, t: usize) -> Result<BandLayout> {
    if m == 0 || t == 0 {
        return Err(Error::InvalidParameter(format!("layout needs m, t ≥ 1 (m = {m}, t = {t})")));
    }
    if width == 0 || height == 0 {
        return Err(Error::InvalidParameter("empty lattice".into()));
    }
    let (m_i, t_i) = (m as i64, t as i64);
    let mut narrow = Vec::new();
    let mut i = 0i64;
    while 3 * i * t_i - 2 * t_i < width as i64 {
        if let Some(columns) = clip(3 * i * t_i - 2 * t_i, 3 * i * t_i + 2 * t_i, width) {
            narrow.push(NarrowBand { index: i as usize, columns });
        }
        i += 1;
    }
    let wide_count = width.div_ceil(6 * m * t);
    let wide = (1..=wide_count as i64)
        .filter_map(|j| clip(6 * (j - 1) * m_i * t_i, 6 * j * m_i * t_i, width))
        .collect();
    let xi = (1..=wide_count)
        .map(|j| {
            narrow
                .iter()
                .map(|b| b.index)
                .filter(|&i| i % 2 == 1 && i > 2 * (j - 1) * m && i < 2 * j * m)
                .collect()
        })
        .collect();
    Ok(BandLayout { width, height, m, t, narrow, wide, xi })
}

/// Dense operators attached to one narrow band.
#[derive(Clone, Debug)]
pub struct BandOperators<R: Real> {
    pub index: usize,
    pub columns: Columns,
    pub has_terms: bool,
    /// Exact ground projector `Q_i` of `H_{B_i}`.
    pub projector: CMat<R>,
    /// `Step(H_{B_i}/(C t h))`, or `Q_i` in exact mode.
    pub approx: CMat<R>,
    /// `‖Q̂_i − Q_i‖`.
    pub approx_error: R,
    pub step_degree: usize,
}

/// `Q_i`: kernel projector of `H_{B_i}`.
pub fn band_projector<R: Real>(h: &GridHamiltonian<R>, columns: Columns, cap: usize) -> Result<CMat<R>> {
    let sub = h.restrict_to_columns(columns.0, columns.1, cap)?;
    Ok(kernel_projector(&sub.operator))
}

/// `Q̂_i` with the two defining properties checked: `Q̂Q = Q` and
/// `‖Q̂ − Q‖ ≤ 1/20`.
pub fn approx_band_projector<R: Real>(
    h: &GridHamiltonian<R>,
    columns: Columns,
    t: usize,
    gamma: R,
    cap: usize,
) -> Result<BandOperators<R>> {
    let sub = h.restrict_to_columns(columns.0, columns.1, cap)?;
    let q = kernel_projector(&sub.operator);
    let dim = q.nrows();
    if sub.term_indices.is_empty() {
        return Ok(BandOperators {
            index: 0,
            columns,
            has_terms: false,
            approx: q.clone(),
            projector: q,
            approx_error: R::zero(),
            step_degree: 0,
        });
    }
    let scale = R::lit((h.interaction_constant() * t * h.height()) as f64);
    let eta = gamma / scale;
    let step = StepPolynomial::new(eta, R::lit(NOISE_WINDOW))?;
    let scaled = HermitianOperator::new_unchecked(sub.operator.matrix().map(|z| z / scale));
    let approx = step.eval_operator(&scaled).into_matrix();
    let fixed = operator_norm(&(&approx * &q - &q));
    if fixed > R::tol(1e-8) {
        return Err(Error::BoundViolated(format!(
            "band {columns:?}: ‖Q̂Q − Q‖ = {fixed}"
        )));
    }
    let err = operator_norm(&(&approx - &q));
    if err > R::lit(NOISE_WINDOW) + R::tol(1e-9) {
        return Err(Error::BoundViolated(format!(
            "band {columns:?}: ‖Q̂ − Q‖ = {err} exceeds 1/20; is γ = {gamma} above the local gap?"
        )));
    }
    debug_assert_eq!(approx.nrows(), dim);
    Ok(BandOperators {
        index: 0,
        columns,
        has_terms: true,
        projector: q,
        approx,
        approx_error: err,
        step_degree: step.degree,
    })
}

/// `Δ = (W′ e^{−m} + 2 e^{−c t √γ})^{2p}`.
pub fn shrinking_factor_bound(m: usize, t: usize, p: usize, wide_count: usize, gamma: f64, c: f64) -> f64 {
    let base = wide_count as f64 * (-(m as f64)).exp() + 2.0 * (-c * t as f64 * gamma.sqrt()).exp();
    base.powi(2 * p as i32)
}

/// Configuration of [`build_kappa`].
#[derive(Clone, Debug, Serialize)]
pub struct KappaConfig {
    pub m: usize,
    pub t: usize,
    pub p: usize,
    /// Local gap (or a lower bound for it).
    pub gamma: f64,
    /// Constant `c` in `e^{-c t √γ}`.
    pub shrink_constant: f64,
    pub trim_tol: f64,
    /// Replace `Q̂_i` by the exact `Q_i`.
    pub exact_projectors: bool,
    pub dense_cap: usize,
    pub rank_budget: Option<usize>,
}

impl KappaConfig {
    pub fn new(m: usize, t: usize, p: usize, gamma: f64) -> Self {
        KappaConfig {
            m,
            t,
            p,
            gamma,
            shrink_constant: DEFAULT_SHRINK_CONSTANT,
            trim_tol: DEFAULT_TRIM_TOL,
            exact_projectors: false,
            dense_cap: DEFAULT_DENSE_CAP,
            rank_budget: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BuildLogEntry {
    pub stage: String,
    pub bond_dims: Vec<usize>,
    pub trim_error_bound: f64,
    pub elapsed_ms: f64,
}

/// Output of [`build_kappa`].
#[derive(Clone, Debug)]
pub struct AgspBundle<R: Real> {
    pub config: KappaConfig,
    pub layout: BandLayout,
    pub kappa: Mpo<R>,
    /// `κ(m,t,1) = P̃ Q_even` before powering.
    pub base: Mpo<R>,
    pub delta_bound: f64,
    /// Measured bond dimension at each internal cut.
    pub rank_ledger: Vec<usize>,
    pub bands: Vec<BandOperators<R>>,
    /// Terms whose support is not contained in any narrow band.
    pub uncovered_terms: usize,
    pub build_log: Vec<BuildLogEntry>,
}

impl<R: Real> AgspBundle<R> {
    /// Largest cut rank `R`.
    pub fn max_rank(&self) -> usize {
        self.rank_ledger.iter().copied().max().unwrap_or(1)
    }

    pub fn build_log_json(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            config: &'a KappaConfig,
            wide_bands: usize,
            delta_bound: f64,
            rank_ledger: &'a [usize],
            uncovered_terms: usize,
            step_degrees: Vec<usize>,
            stages: &'a [BuildLogEntry],
        }
        serde_json::to_string_pretty(&Out {
            config: &self.config,
            wide_bands: self.layout.wide_count(),
            delta_bound: self.delta_bound,
            rank_ledger: &self.rank_ledger,
            uncovered_terms: self.uncovered_terms,
            step_degrees: self.bands.iter().map(|b| b.step_degree).collect(),
            stages: &self.build_log,
        })
        .unwrap_or_default()
    }
}

/// Exact and approximate projectors for every narrow band of the layout.
pub fn band_operators<R: Real>(
    h: &GridHamiltonian<R>,
    layout: &BandLayout,
    config: &KappaConfig,
) -> Result<Vec<BandOperators<R>>> {
    layout
        .narrow
        .iter()
        .map(|b| {
            let mut ops = if config.exact_projectors {
                let q = band_projector(h, b.columns, config.dense_cap)?;
                BandOperators {
                    index: 0,
                    columns: b.columns,
                    has_terms: true,
                    approx: q.clone(),
                    projector: q,
                    approx_error: R::zero(),
                    step_degree: 0,
                }
            } else {
                approx_band_projector(h, b.columns, layout.t, R::lit(config.gamma), config.dense_cap)?
            };
            ops.index = b.index;
            Ok(ops)
        })
        .collect()
}

fn count_uncovered<R: Real>(h: &GridHamiltonian<R>, layout: &BandLayout) -> usize {
    h.terms()
        .iter()
        .filter(|term| {
            let lo = term.support().iter().map(|s| s.x).min().unwrap_or(1);
            let hi = term.support().iter().map(|s| s.x).max().unwrap_or(1);
            !layout.narrow.iter().any(|b| b.columns.0 <= lo && hi <= b.columns.1)
        })
        .count()
}

/// `P̃` and `Q_even` as column MPOs.
pub fn factor_mpos<R: Real>(
    h: &GridHamiltonian<R>,
    layout: &BandLayout,
    bands: &[BandOperators<R>],
) -> Result<(Mpo<R>, Mpo<R>)> {
    let dims = vec![h.column_dim(); h.width()];
    let and = RobustAndPolynomial::<R>::new(layout.m)?;
    let mut odd = Vec::new();
    for xi in &layout.xi {
        let present: Vec<&BandOperators<R>> =
            xi.iter().filter_map(|&i| bands.iter().find(|b| b.index == i)).collect();
        let ops: Vec<_> = present
            .iter()
            .map(|b| (h.column_sites(b.columns.0, b.columns.1), HermitianOperator::new_unchecked(b.approx.clone())))
            .collect();
        let factored = eval_and_on_operators(&and, &ops)?;
        for ((_, mat), b) in factored.factors.into_iter().zip(present) {
            odd.push((b.columns.0 - 1, b.columns.1 - 1, mat));
        }
    }
    let even: Vec<_> = bands
        .iter()
        .filter(|b| b.index % 2 == 0)
        .map(|b| (b.columns.0 - 1, b.columns.1 - 1, b.projector.clone()))
        .collect();
    let p_tilde = Mpo::from_site_factors(&dims, &odd, R::zero())?;
    let q_even = Mpo::from_site_factors(&dims, &even, R::zero())?;
    Ok((p_tilde, q_even))
}

fn log_stage(log: &mut Vec<BuildLogEntry>, stage: String, mpo: &Mpo<impl Real>, err: f64, start: Instant) {
    log::debug!("{stage}: bonds {:?}", mpo.bond_dims());
    log.push(BuildLogEntry {
        stage,
        bond_dims: mpo.bond_dims(),
        trim_error_bound: err,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    });
}

/// `base^p` by repeated squaring; a non-power-of-two `p` multiplies the
/// largest square by the remaining factors. Every product is trimmed.
pub fn power_by_squaring<R: Real>(base: &Mpo<R>, p: usize, tol: R, log: &mut Vec<BuildLogEntry>) -> Result<Mpo<R>> {
    if p == 0 {
        return Ok(Mpo::identity(base.out_dims()));
    }
    let start = Instant::now();
    let top = usize::BITS - 1 - p.leading_zeros();
    let mut squares = vec![base.clone()];
    for k in 1..=top {
        let prev = &squares[k as usize - 1];
        let (sq, rep) = prev.multiply_compress(prev, tol)?.trim(tol);
        log_stage(log, format!("square 2^{k}"), &sq, rep.frobenius_bound.to_f64_lossy(), start);
        squares.push(sq);
    }
    let mut acc = squares[top as usize].clone();
    for k in (0..top).rev() {
        if p >> k & 1 == 1 {
            let (next, rep) = acc.multiply_compress(&squares[k as usize], tol)?.trim(tol);
            log_stage(log, format!("residual factor 2^{k}"), &next, rep.frobenius_bound.to_f64_lossy(), start);
            acc = next;
        }
    }
    Ok(acc)
}

/// Builds `κ(m,t,p)`.
pub fn build_kappa<R: Real>(h: &GridHamiltonian<R>, config: &KappaConfig) -> Result<AgspBundle<R>> {
    let start = Instant::now();
    let layout = layout_bands(h.width(), h.height(), config.m, config.t)?;
    if !h.terms().is_empty() && !config.exact_projectors && !(config.gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("γ = {} must be positive", config.gamma)));
    }
    let uncovered = count_uncovered(h, &layout);
    if uncovered > 0 {
        log::warn!("{uncovered} terms are wider than every narrow band; κ will not see them");
    }
    if h.height() > 1 && (h.height() as f64) < (h.num_sites() as f64).ln().powi(3) {
        log::debug!("h = {} is below (log n)^3; parameter bounds are not guaranteed", h.height());
    }
    let bands = band_operators(h, &layout, config)?;
    let mut log = Vec::new();
    let (p_tilde, q_even) = factor_mpos(h, &layout, &bands)?;
    log_stage(&mut log, "P~".into(), &p_tilde, 0.0, start);
    log_stage(&mut log, "Q_even".into(), &q_even, 0.0, start);
    let tol = R::lit(config.trim_tol);
    let (base, rep) = p_tilde.multiply(&q_even)?.trim(tol);
    log_stage(&mut log, "P~ Q_even".into(), &base, rep.frobenius_bound.to_f64_lossy(), start);
    let kappa = power_by_squaring(&base, config.p, tol, &mut log)?;
    let rank_ledger = kappa.bond_dims();
    if let Some(budget) = config.rank_budget {
        if let Some((cut, &rank)) = rank_ledger.iter().enumerate().find(|(_, &r)| r > budget) {
            return Err(Error::RankBudgetExceeded { cut: cut + 1, rank, budget });
        }
    }
    let delta_bound = shrinking_factor_bound(
        config.m,
        config.t,
        config.p,
        layout.wide_count(),
        config.gamma,
        config.shrink_constant,
    );
    Ok(AgspBundle {
        config: config.clone(),
        layout,
        kappa,
        base,
        delta_bound,
        rank_ledger,
        bands,
        uncovered_terms: uncovered,
        build_log: log,
    })
}

/// The same operator assembled through the coarse MPO with one site per wide
/// band: the base operator is grouped, powered at the coarse level and then
/// refined back to columns.
pub fn build_kappa_coarse<R: Real>(h: &GridHamiltonian<R>, config: &KappaConfig) -> Result<Mpo<R>> {
    let layout = layout_bands(h.width(), h.height(), config.m, config.t)?;
    let bands = band_operators(h, &layout, config)?;
    let (p_tilde, q_even) = factor_mpos(h, &layout, &bands)?;
    let tol = R::lit(config.trim_tol);
    let base = p_tilde.multiply(&q_even)?;
    let blocks: Vec<usize> = layout.wide.iter().map(|(a, b)| b + 1 - a).collect();
    let coarse = base.group(&blocks)?;
    let coarse_dim: usize = coarse.out_dims().iter().copied().max().unwrap_or(1);
    if coarse_dim * coarse_dim > config.dense_cap {
        return Err(Error::CapExceeded { dim: coarse_dim * coarse_dim, cap: config.dense_cap });
    }
    let (coarse, _) = coarse.trim(tol);
    let mut log = Vec::new();
    let powered = power_by_squaring(&coarse, config.p, tol, &mut log)?;
    let dims = vec![h.column_dim(); h.width()];
    powered.refine(&blocks, &dims, &dims, tol)
}

/// Explicit parameter choice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TheoryParameters {
    pub m: usize,
    pub t: usize,
    pub p: usize,
    /// Predicted `ln R`.
    pub log_rank: f64,
    pub c_tilde: f64,
}

/// Parameters from the explicit asymptotic recipe (natural logarithms):
/// `C̃ = 4C² ln(hq/γ)`,
/// `m = ⌈max(C̃^{2/3} γ^{-1/6} h^{1/3}, γ^{1/4} √(2C/(C̃h) · ln(1/δ)), 2 ln n)⌉`,
/// `t = ⌈m/√γ⌉`, `p = ⌈C̃ m γ^{-1/2} h⌉` and
/// `ln R = C (m² γ^{-1/2} h + p γ^{-1/4} √(h/m)) ln(hq/γ)`.
pub fn choose_parameters_theory(
    gamma: f64,
    h: usize,
    q: usize,
    delta: f64,
    c: f64,
    n: usize,
) -> Result<TheoryParameters> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("δ = {delta} outside (0, 1)")));
    }
    let hf = h as f64;
    let ratio = hf * q as f64 / gamma;
    if !(gamma > 0.0) || ratio <= 1.0 {
        return Err(Error::InvalidParameter(format!("need 0 < γ < hq (γ = {gamma})")));
    }
    let log_ratio = ratio.ln();
    let c_tilde = 4.0 * c * c * log_ratio;
    let a = c_tilde.powf(2.0 / 3.0) * gamma.powf(-1.0 / 6.0) * hf.powf(1.0 / 3.0);
    let b = gamma.powf(0.25) * ((2.0 * c / (c_tilde * hf)) * (1.0 / delta).ln()).sqrt();
    let e = 2.0 * (n as f64).ln();
    let m = a.max(b).max(e).ceil().max(1.0) as usize;
    let mf = m as f64;
    let t = (mf / gamma.sqrt()).ceil() as usize;
    let p = (c_tilde * mf * gamma.powf(-0.5) * hf).ceil() as usize;
    let log_rank = c * (mf * mf * gamma.powf(-0.5) * hf + p as f64 * gamma.powf(-0.25) * (hf / mf).sqrt()) * log_ratio;
    Ok(TheoryParameters { m, t, p, log_rank, c_tilde })
}

/// Result of the practical grid search.
#[derive(Clone, Debug, Serialize)]
pub struct PracticalParameters {
    pub m: usize,
    pub t: usize,
    pub p: usize,
    pub delta_bound: f64,
    pub measured_rank: usize,
    /// Whether `Δ·R ≤ δ` was achieved inside the grid.
    pub met: bool,
}

/// Smallest `(m, t, p)` on a grid, ordered by `m·t` and then `p`, with
/// `shrinking_factor_bound · R ≤ δ`, `R` measured by building `κ`.
pub fn choose_parameters_practical<R: Real>(
    h: &GridHamiltonian<R>,
    gamma: f64,
    delta: f64,
    shrink_constant: f64,
    max_m: usize,
    max_t: usize,
    max_p: usize,
) -> Result<PracticalParameters> {
    let mut pairs: Vec<(usize, usize)> = (1..=max_m).flat_map(|m| (1..=max_t).map(move |t| (m, t))).collect();
    pairs.sort_by_key(|&(m, t)| (m * t, m));
    let mut best: Option<PracticalParameters> = None;
    for (m, t) in pairs {
        let wide = h.width().div_ceil(6 * m * t);
        for p in 1..=max_p {
            let bound = shrinking_factor_bound(m, t, p, wide, gamma, shrink_constant);
            if bound > delta {
                continue;
            }
            let mut config = KappaConfig::new(m, t, p, gamma);
            config.shrink_constant = shrink_constant;
            let bundle = build_kappa(h, &config)?;
            let rank = bundle.max_rank();
            let candidate = PracticalParameters { m, t, p, delta_bound: bound, measured_rank: rank, met: bound * rank as f64 <= delta };
            if candidate.met {
                return Ok(candidate);
            }
            if best.as_ref().is_none_or(|b| bound * (rank as f64) < b.delta_bound * b.measured_rank as f64) {
                best = Some(candidate);
            }
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("no grid point brings the shrinking bound below δ".into()))
}

/// `‖κ P_{Z⊥}‖²` for a dense operator and an orthonormal ground frame.
pub fn measured_shrinking<R: Real>(kappa: &CMat<R>, ground: &CMat<R>) -> R {
    let n = kappa.nrows();
    let perp = CMat::<R>::identity(n, n) - ground * ground.adjoint();
    let v = operator_norm(&(kappa * perp));
    v * v
}

/// Fits `c` so that `‖DL(t) P_{Z⊥}‖ ≤ 2 e^{-c t √γ}` on every instance:
/// `c = min_k −ln(‖DL_k P_{Z⊥}‖ / 2) / (t √γ_k)`. Returns `None` when every
/// instance has `DL(t) = P_Z` exactly.
pub fn calibrate_shrink_constant<R: Real>(instances: &[(&GridHamiltonian<R>, f64)], t: usize) -> Result<Option<f64>> {
    let mut best: Option<f64> = None;
    for &(h, gamma) in instances {
        let mut config = KappaConfig::new(1, t, 1, gamma);
        config.exact_projectors = true;
        let dl = build_kappa(h, &config)?.kappa.to_dense();
        let ground = crate::oracle::exact_ground_space(h)?;
        let norm = measured_shrinking(&dl, &ground).sqrt().to_f64_lossy();
        if norm <= 1e-13 {
            continue;
        }
        let c = -(norm / 2.0).ln() / (t as f64 * gamma.sqrt());
        best = Some(best.map_or(c, |b: f64| b.min(c)));
    }
    Ok(best)
}
