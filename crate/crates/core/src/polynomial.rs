//! Chebyshev step polynomials and the robust AND combiner.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::hamiltonian::{embed_operator, Site};
use crate::scalar::{cr, eye, CMat, Real};
use crate::spectral::HermitianOperator;

/// Width of the noise window `[-1/20, 1/20]`.
pub const NOISE_WINDOW: f64 = 1.0 / 20.0;

/// Thresholds closer to 1 than this are rejected.
const THRESHOLD_MARGIN: f64 = 1e-9;

/// `p(x) = Σ_k c_k T_k(shift + scale·x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChebyshevSeries<R: Real> {
    pub coeffs: Vec<R>,
    pub scale: R,
    pub shift: R,
}

impl<R: Real> ChebyshevSeries<R> {
    pub fn new(coeffs: Vec<R>, scale: R, shift: R) -> Self {
        ChebyshevSeries { coeffs, scale, shift }
    }

    /// `p(x) = x`.
    pub fn identity() -> Self {
        Self::new(vec![R::zero(), R::one()], R::one(), R::zero())
    }

    pub fn constant(c: R) -> Self {
        Self::new(vec![c], R::one(), R::zero())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: R) -> R {
        let u = self.shift + self.scale * x;
        let two = R::lit(2.0);
        let (mut b1, mut b2) = (R::zero(), R::zero());
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = c + two * u * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        self.coeffs.first().copied().unwrap_or(R::zero()) + u * b1 - b2
    }

    /// Clenshaw recurrence with matrix argument.
    pub fn eval_matrix(&self, a: &CMat<R>) -> CMat<R> {
        let n = a.nrows();
        let id = eye::<R>(n);
        let u = &id * cr(self.shift) + a * cr(self.scale);
        let two_u = &u * cr(R::lit(2.0));
        let mut b1 = CMat::<R>::zeros(n, n);
        let mut b2 = CMat::<R>::zeros(n, n);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = &two_u * &b1 - &b2 + &id * cr(c);
            b2 = std::mem::replace(&mut b1, b0);
        }
        let c0 = self.coeffs.first().copied().unwrap_or(R::zero());
        &id * cr(c0) + &u * &b1 - b2
    }
}

/// `T_n(x)` by the three-term recurrence.
pub fn chebyshev_t<R: Real>(n: usize, x: R) -> R {
    let (mut a, mut b) = (R::one(), x);
    if n == 0 {
        return a;
    }
    for _ in 1..n {
        let c = R::lit(2.0) * x * b - a;
        a = b;
        b = c;
    }
    b
}

/// Smallest `f` with `T_f(x0) ≥ target`, for `x0 > 1`.
fn smallest_degree<R: Real>(x0: R, target: R) -> usize {
    let (mut a, mut b) = (R::one(), x0);
    if a >= target {
        return 0;
    }
    let mut f = 1;
    while b < target {
        let c = R::lit(2.0) * x0 * b - a;
        a = b;
        b = c;
        f += 1;
    }
    f
}

/// `Step(x) = T_f((1+η−2x)/(1−η)) / T_f((1+η)/(1−η))`.
#[derive(Clone, Debug)]
pub struct StepPolynomial<R: Real> {
    pub degree: usize,
    pub threshold: R,
    pub suppression_bound: R,
    series: ChebyshevSeries<R>,
    norm: R,
}

impl<R: Real> StepPolynomial<R> {
    pub fn new(eta: R, bound: R) -> Result<Self> {
        let eta_f = eta.to_f64_lossy();
        if !(eta_f > 0.0) || eta_f >= 1.0 - THRESHOLD_MARGIN {
            return Err(Error::DegenerateThreshold { eta: eta_f });
        }
        if !(bound > R::zero() && bound < R::one()) {
            return Err(Error::InvalidParameter(format!("suppression bound {bound} outside (0,1)")));
        }
        let one = R::one();
        let two = R::lit(2.0);
        let x0 = (one + eta) / (one - eta);
        let degree = smallest_degree(x0, one / bound);
        let mut coeffs = vec![R::zero(); degree + 1];
        coeffs[degree] = one;
        let series = ChebyshevSeries::new(coeffs, -two / (one - eta), x0);
        let norm = series.eval(R::zero());
        Ok(StepPolynomial {
            degree,
            threshold: eta,
            suppression_bound: bound,
            series,
            norm,
        })
    }

    pub fn eval(&self, x: R) -> R {
        self.series.eval(x) / self.norm
    }

    /// Normalized series, `Σ c_k T_k(·)` with `c_f = 1/T_f(x0)`.
    pub fn chebyshev(&self) -> ChebyshevSeries<R> {
        let mut s = self.series.clone();
        for c in &mut s.coeffs {
            *c /= self.norm;
        }
        s
    }

    pub fn coefficients(&self) -> Vec<R> {
        self.chebyshev().coeffs
    }

    pub fn eval_operator(&self, a: &HermitianOperator<R>) -> HermitianOperator<R> {
        eval_on_operator(&self.chebyshev(), a)
    }
}

/// `p(A)` by Clenshaw's recurrence; symmetrized.
pub fn eval_on_operator<R: Real>(p: &ChebyshevSeries<R>, a: &HermitianOperator<R>) -> HermitianOperator<R> {
    HermitianOperator::new_unchecked(p.eval_matrix(a.matrix()))
}

/// `AND(x⃗) = Π_i s(x_i)^{⌈m/2⌉}` with `s(x) = T_d(x/w)/T_d(1/w)`.
#[derive(Clone, Debug)]
pub struct RobustAndPolynomial<R: Real> {
    pub arity: usize,
    pub cleanup_degree: usize,
    pub power: usize,
    cleanup: ChebyshevSeries<R>,
    norm: R,
}

impl<R: Real> RobustAndPolynomial<R> {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("robust AND needs arity ≥ 1".into()));
        }
        let w = R::lit(NOISE_WINDOW);
        let inv = R::one() / w;
        let cleanup_degree = smallest_degree(inv, R::lit(std::f64::consts::E.powi(2))).max(1);
        let mut coeffs = vec![R::zero(); cleanup_degree + 1];
        coeffs[cleanup_degree] = R::one();
        let cleanup = ChebyshevSeries::new(coeffs, inv, R::zero());
        let norm = cleanup.eval(R::one());
        Ok(RobustAndPolynomial {
            arity: m,
            cleanup_degree,
            power: m.div_ceil(2),
            cleanup,
            norm,
        })
    }

    /// The cleanup polynomial `s`, with `s(1) = 1`.
    pub fn cleanup(&self) -> ChebyshevSeries<R> {
        let mut s = self.cleanup.clone();
        for c in &mut s.coeffs {
            *c /= self.norm;
        }
        s
    }

    pub fn cleanup_eval(&self, x: R) -> R {
        self.cleanup.eval(x) / self.norm
    }

    pub fn total_degree(&self) -> usize {
        self.arity * self.power * self.cleanup_degree
    }

    pub fn eval(&self, xs: &[R]) -> Result<R> {
        if xs.len() != self.arity {
            return Err(Error::DimensionMismatch(format!(
                "robust AND of arity {} given {} inputs",
                self.arity,
                xs.len()
            )));
        }
        Ok(xs.iter().fold(R::one(), |acc, &x| {
            let s = self.cleanup_eval(x);
            (0..self.power).fold(acc, |a, _| a * s)
        }))
    }

    /// The univariate factor `s(x)^{⌈m/2⌉}` applied to one operator.
    pub fn factor(&self, a: &HermitianOperator<R>) -> CMat<R> {
        let s = self.cleanup().eval_matrix(a.matrix());
        let mut out = eye::<R>(s.nrows());
        for _ in 0..self.power {
            out = &out * &s;
        }
        out
    }
}

/// Commuting product of operators on pairwise disjoint site sets.
#[derive(Clone, Debug)]
pub struct FactoredOperator<R: Real> {
    pub factors: Vec<(Vec<Site>, CMat<R>)>,
}

impl<R: Real> FactoredOperator<R> {
    pub fn sites(&self) -> Vec<Site> {
        let set: BTreeSet<Site> = self.factors.iter().flat_map(|(s, _)| s.iter().copied()).collect();
        set.into_iter().collect()
    }

    /// Dense matrix on `region` (sorted, containing every factor's sites).
    pub fn to_dense(&self, region: &[Site], q: usize) -> CMat<R> {
        let dim = q.pow(region.len() as u32);
        let mut out = eye::<R>(dim);
        for (sites, m) in &self.factors {
            out = embed_operator(m, sites, region, q) * out;
        }
        out
    }
}

/// `AND(A_1, …, A_m)` for operators with pairwise disjoint supports, kept
/// as per-operator factors. Inputs are `(sorted sites, operator)` pairs.
pub fn eval_and_on_operators<R: Real>(
    and: &RobustAndPolynomial<R>,
    ops: &[(Vec<Site>, HermitianOperator<R>)],
) -> Result<FactoredOperator<R>> {
    if ops.len() > and.arity {
        return Err(Error::DimensionMismatch(format!(
            "robust AND of arity {} given {} operators",
            and.arity,
            ops.len()
        )));
    }
    for i in 0..ops.len() {
        let a: BTreeSet<&Site> = ops[i].0.iter().collect();
        for j in i + 1..ops.len() {
            if ops[j].0.iter().any(|s| a.contains(s)) {
                return Err(Error::OverlappingSupports(i, j));
            }
        }
    }
    // Missing arguments are the constant 1, for which s(1)^k = 1.
    Ok(FactoredOperator {
        factors: ops.iter().map(|(s, a)| (s.clone(), and.factor(a))).collect(),
    })
}
