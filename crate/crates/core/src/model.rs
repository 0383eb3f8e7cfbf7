//! Growth-rate models `R(x, I)` and predation weights `psi(x)`.
//!
//! Every model is a finite sum of separable terms
//! `R(x, I) = sum_k f_k(x) Q_k(I[c_k])`, which covers the birth/death form
//! `b(x) Q1(I) - d(x) Q2(I)`, the multi-nutrient chemostat
//! `sum_i b_i(x) Q_i(I_i) - d(x)` and the two worked examples with a jump.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::poly::{EnvResponse, PiecewisePoly, Poly};
use crate::roots::{bisect, DEFAULT_MAX_ITER, DEFAULT_ROOT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormTag {
    General,
    BirthDeathFactored,
    ChemostatMulti,
}

impl FormTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            FormTag::General => "general",
            FormTag::BirthDeathFactored => "birth-death-factored",
            FormTag::ChemostatMulti => "chemostat-multi",
        }
    }
}

/// One separable contribution `factor(x) * response(I[component])`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTerm {
    pub factor: PiecewisePoly,
    pub response: EnvResponse,
    pub component: usize,
}

impl RateTerm {
    pub fn new(factor: PiecewisePoly, response: EnvResponse, component: usize) -> Self {
        Self {
            factor,
            response,
            component,
        }
    }
}

/// `(I_m, I_M)`, applied componentwise for vector environments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvBounds {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone)]
pub struct GrowthModel {
    name: String,
    form: FormTag,
    terms: Vec<RateTerm>,
    dfactors: Vec<PiecewisePoly>,
    d2factors: Vec<PiecewisePoly>,
    psi: Vec<PiecewisePoly>,
    dpsi: Vec<PiecewisePoly>,
    d2psi: Vec<PiecewisePoly>,
    bounds: EnvBounds,
    window: (f64, f64),
    domain: (f64, f64),
    lipschitz_budget: f64,
}

const SCAN_POINTS: usize = 2001;

impl GrowthModel {
    /// `window` defaults to `[I_m / 2, 2 I_M]`. The budget `K` is estimated by
    /// sampling `-dR/dI` over `domain` x window.
    pub fn new(
        name: impl Into<String>,
        form: FormTag,
        terms: Vec<RateTerm>,
        psi: Vec<PiecewisePoly>,
        bounds: EnvBounds,
        window: Option<(f64, f64)>,
        domain: (f64, f64),
    ) -> Result<Self> {
        if psi.is_empty() {
            return Err(Error::Invalid("model needs at least one weight psi".into()));
        }
        if let Some(t) = terms.iter().find(|t| t.component >= psi.len()) {
            return Err(Error::Invalid(format!(
                "rate term refers to environment component {} but only {} weight(s) given",
                t.component,
                psi.len()
            )));
        }
        if !(bounds.lower.is_finite() && bounds.upper.is_finite()) || bounds.lower > bounds.upper
        {
            return Err(Error::Invalid(format!(
                "environment bounds must satisfy I_m <= I_M, got ({}, {})",
                bounds.lower, bounds.upper
            )));
        }
        let window = window.unwrap_or((0.5 * bounds.lower, 2.0 * bounds.upper));
        if !(window.0 < window.1) {
            return Err(Error::Invalid(format!(
                "regularity window [{}, {}] is empty",
                window.0, window.1
            )));
        }
        if !(domain.0 < domain.1) {
            return Err(Error::Invalid("model domain is empty".into()));
        }
        let dfactors: Vec<_> = terms.iter().map(|t| t.factor.derivative()).collect();
        let d2factors = dfactors.iter().map(PiecewisePoly::derivative).collect();
        let dpsi: Vec<_> = psi.iter().map(PiecewisePoly::derivative).collect();
        let d2psi = dpsi.iter().map(PiecewisePoly::derivative).collect();
        let mut model = Self {
            name: name.into(),
            form,
            terms,
            dfactors,
            d2factors,
            psi,
            dpsi,
            d2psi,
            bounds,
            window,
            domain,
            lipschitz_budget: 1.0,
        };
        model.lipschitz_budget = model.estimate_budget();
        Ok(model)
    }

    /// `R(x, I) = x - I`, `psi = 1`: the linear model with closed-form
    /// constrained solutions. It is unbounded in `x`, so the window is taken
    /// wide enough to bracket every multiplier reachable on the domain.
    pub fn linear(domain: (f64, f64)) -> Result<Self> {
        let terms = vec![
            RateTerm::new(
                PiecewisePoly::single(Poly::linear(0.0, 1.0)),
                EnvResponse::Constant(1.0),
                0,
            ),
            RateTerm::new(
                PiecewisePoly::constant(-1.0),
                EnvResponse::Affine {
                    offset: 0.0,
                    slope: 1.0,
                },
                0,
            ),
        ];
        let bounds = EnvBounds {
            lower: domain.0.max(1e-3),
            upper: domain.1.max(2e-3),
        };
        let window = (domain.0.min(0.0) - 1.0, domain.1 + 1.0);
        Self::new(
            "linear",
            FormTag::BirthDeathFactored,
            terms,
            vec![PiecewisePoly::constant(1.0)],
            bounds,
            Some(window),
            domain,
        )
    }

    /// `R(x, I) = (x - x^2 + 3x^4)(9 - (1 + x)^3) - I`, `psi = 1`.
    pub fn polynomial_switch(domain: (f64, f64)) -> Result<Self> {
        let b = switch_birth();
        let (lo, hi) = scan_range(domain, |x| b.eval(x));
        let upper = hi;
        let lower = lo.max(1e-3 * upper);
        let terms = vec![
            RateTerm::new(PiecewisePoly::single(b), EnvResponse::Constant(1.0), 0),
            RateTerm::new(
                PiecewisePoly::constant(-1.0),
                EnvResponse::Affine {
                    offset: 0.0,
                    slope: 1.0,
                },
                0,
            ),
        ];
        Self::new(
            "polynomial",
            FormTag::BirthDeathFactored,
            terms,
            vec![PiecewisePoly::constant(1.0)],
            EnvBounds { lower, upper },
            Some((0.0, 2.0 * upper)),
            domain,
        )
    }

    /// `R(x, I) = b(x) Q1(I) - d(x) Q2(I)`. Bounds are scanned on the domain
    /// unless given.
    pub fn factored(
        b: PiecewisePoly,
        d: PiecewisePoly,
        q1: EnvResponse,
        q2: EnvResponse,
        psi: PiecewisePoly,
        domain: (f64, f64),
        bounds: Option<EnvBounds>,
        window: Option<(f64, f64)>,
    ) -> Result<Self> {
        let terms = vec![RateTerm::new(b, q1, 0), RateTerm::new(d.scale(-1.0), q2, 0)];
        Self::with_scanned_bounds("factored", FormTag::BirthDeathFactored, terms, vec![psi], domain, bounds, window)
    }

    /// `R(x, I) = 1 - x^2 - I`: strictly concave in `x`.
    pub fn concave(domain: (f64, f64)) -> Result<Self> {
        let mut m = Self::factored(
            PiecewisePoly::single(Poly::new(vec![1.0, 0.0, -1.0])),
            PiecewisePoly::constant(1.0),
            EnvResponse::Constant(1.0),
            EnvResponse::Affine {
                offset: 0.0,
                slope: 1.0,
            },
            PiecewisePoly::constant(1.0),
            domain,
            None,
            None,
        )?;
        m.name = "concave".into();
        Ok(m)
    }

    /// `R(x, I) = sum_i b_i(x) Q_i(I_i) - d(x)` with one weight per nutrient.
    pub fn chemostat(
        births: Vec<PiecewisePoly>,
        responses: Vec<EnvResponse>,
        death: PiecewisePoly,
        psi: Vec<PiecewisePoly>,
        domain: (f64, f64),
        bounds: Option<EnvBounds>,
        window: Option<(f64, f64)>,
    ) -> Result<Self> {
        if births.len() != responses.len() || births.len() != psi.len() || births.is_empty() {
            return Err(Error::Invalid(format!(
                "chemostat needs matching counts of births ({}), responses ({}) and weights ({})",
                births.len(),
                responses.len(),
                psi.len()
            )));
        }
        let mut terms: Vec<RateTerm> = births
            .into_iter()
            .zip(responses)
            .enumerate()
            .map(|(i, (b, q))| RateTerm::new(b, q, i))
            .collect();
        terms.push(RateTerm::new(death.scale(-1.0), EnvResponse::Constant(1.0), 0));
        Self::with_scanned_bounds("chemostat", FormTag::ChemostatMulti, terms, psi, domain, bounds, window)
    }

    fn with_scanned_bounds(
        name: &str,
        form: FormTag,
        terms: Vec<RateTerm>,
        psi: Vec<PiecewisePoly>,
        domain: (f64, f64),
        bounds: Option<EnvBounds>,
        window: Option<(f64, f64)>,
    ) -> Result<Self> {
        let bounds = match bounds {
            Some(b) => b,
            None => scan_diagonal_bounds(&terms, psi.len(), domain)?,
        };
        Self::new(name, form, terms, psi, bounds, window, domain)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn form(&self) -> FormTag {
        self.form
    }

    pub fn terms(&self) -> &[RateTerm] {
        &self.terms
    }

    pub fn env_count(&self) -> usize {
        self.psi.len()
    }

    pub fn bounds(&self) -> EnvBounds {
        self.bounds
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn lipschitz_budget(&self) -> f64 {
        self.lipschitz_budget
    }

    pub fn in_window(&self, env: &[f64]) -> bool {
        env.iter()
            .all(|&i| i >= self.window.0 && i <= self.window.1 && i.is_finite())
    }

    /// Unchecked `R(x, I)`.
    pub fn rate(&self, x: f64, env: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.factor.eval(x) * t.response.eval(env[t.component]))
            .sum()
    }

    /// `R(x, I)` for a scalar environment.
    pub fn rate1(&self, x: f64, i: f64) -> f64 {
        self.rate(x, &[i])
    }

    /// `R(x, I)` after checking that `I` lies in the regularity window.
    pub fn eval_growth(&self, x: f64, env: &[f64]) -> Result<f64> {
        if env.len() != self.env_count() {
            return Err(Error::Invalid(format!(
                "environment has {} component(s), model expects {}",
                env.len(),
                self.env_count()
            )));
        }
        if !self.in_window(env) {
            return Err(Error::OutOfWindow {
                env: env.to_vec(),
                lo: self.window.0,
                hi: self.window.1,
            });
        }
        Ok(self.rate(x, env))
    }

    /// Analytic `dR/dI_k`.
    pub fn d_rate_d_env(&self, x: f64, env: &[f64], k: usize) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.component == k)
            .map(|t| t.factor.eval(x) * t.response.derivative(env[k]))
            .sum()
    }

    pub fn d_rate_dx(&self, x: f64, env: &[f64]) -> f64 {
        self.terms
            .iter()
            .zip(&self.dfactors)
            .map(|(t, df)| df.eval(x) * t.response.eval(env[t.component]))
            .sum()
    }

    pub fn d2_rate_dx2(&self, x: f64, env: &[f64]) -> f64 {
        self.terms
            .iter()
            .zip(&self.d2factors)
            .map(|(t, d2f)| d2f.eval(x) * t.response.eval(env[t.component]))
            .sum()
    }

    pub fn psi(&self, k: usize, x: f64) -> f64 {
        self.psi[k].eval(x)
    }

    pub fn psi_dx(&self, k: usize, x: f64) -> f64 {
        self.dpsi[k].eval(x)
    }

    pub fn psi_dxx(&self, k: usize, x: f64) -> f64 {
        self.d2psi[k].eval(x)
    }

    /// True when the single weight is identically one (then `I = rho`).
    pub fn psi_is_unit(&self) -> bool {
        self.psi.len() == 1 && self.psi[0].as_constant() == Some(1.0)
    }

    /// Decomposition `R = h(x) + g(x) Q(I)` when exactly one term depends on
    /// a scalar environment.
    pub fn separable(&self) -> Option<SeparableForm> {
        if self.env_count() != 1 {
            return None;
        }
        let mut varying = self.terms.iter().filter(|t| !t.response.is_constant());
        let coupled = varying.next()?;
        if varying.next().is_some() {
            return None;
        }
        let samples = sample_points(self.domain, SCAN_POINTS);
        let g: Vec<f64> = samples.iter().map(|&x| coupled.factor.eval(x)).collect();
        let in_uniqueness_class = g.iter().all(|&v| v > 0.0) || g.iter().all(|&v| v < 0.0);
        Some(SeparableForm {
            coupling: coupled.factor.clone(),
            response: coupled.response,
            in_uniqueness_class,
        })
    }

    fn estimate_budget(&self) -> f64 {
        let xs = sample_points(self.domain, 201);
        let is = sample_points(self.window, 41);
        let mut k: f64 = 1.0;
        for &x in &xs {
            for &i in &is {
                let env = vec![i; self.env_count()];
                for c in 0..self.env_count() {
                    let slope = -self.d_rate_d_env(x, &env, c);
                    if slope > 0.0 {
                        k = k.max(slope).max(1.0 / slope);
                    }
                }
            }
        }
        k
    }
}

/// `R = h(x) + g(x) Q(I)`; `coupling` is `g`.
#[derive(Debug, Clone)]
pub struct SeparableForm {
    pub coupling: PiecewisePoly,
    pub response: EnvResponse,
    /// `g` keeps a strict sign on the domain: `b - d Q(I)` with `d > 0` or
    /// `b Q(I) - d` with `b > 0`.
    pub in_uniqueness_class: bool,
}

/// Term factors and weights tabulated on grid nodes. `fill` reproduces
/// `GrowthModel::rate` bit for bit (same terms, same summation order).
#[derive(Debug, Clone)]
pub struct NodalRates {
    factors: Vec<Vec<f64>>,
    dfactors: Vec<Vec<f64>>,
    d2factors: Vec<Vec<f64>>,
    responses: Vec<(EnvResponse, usize)>,
    pub psi: Vec<Vec<f64>>,
    pub psi_dxx: Vec<Vec<f64>>,
    pub psi_dx: Vec<Vec<f64>>,
}

impl NodalRates {
    pub fn new(model: &GrowthModel, nodes: &[f64]) -> Self {
        let tab = |f: &PiecewisePoly| nodes.iter().map(|&x| f.eval(x)).collect::<Vec<_>>();
        Self {
            factors: model.terms.iter().map(|t| tab(&t.factor)).collect(),
            dfactors: model.dfactors.iter().map(tab).collect(),
            d2factors: model.d2factors.iter().map(tab).collect(),
            responses: model.terms.iter().map(|t| (t.response, t.component)).collect(),
            psi: model.psi.iter().map(tab).collect(),
            psi_dx: model.dpsi.iter().map(tab).collect(),
            psi_dxx: model.d2psi.iter().map(tab).collect(),
        }
    }

    fn sum_into(&self, tables: &[Vec<f64>], q: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = tables.iter().zip(q).map(|(f, qk)| f[j] * qk).sum();
        }
    }

    fn responses_at(&self, env: &[f64]) -> Vec<f64> {
        self.responses.iter().map(|(r, c)| r.eval(env[*c])).collect()
    }

    /// `out[j] = R(x_j, env)`
    pub fn fill(&self, env: &[f64], out: &mut [f64]) {
        let q = self.responses_at(env);
        self.sum_into(&self.factors, &q, out);
    }

    pub fn fill_dx(&self, env: &[f64], out: &mut [f64]) {
        let q = self.responses_at(env);
        self.sum_into(&self.dfactors, &q, out);
    }

    pub fn fill_dxx(&self, env: &[f64], out: &mut [f64]) {
        let q = self.responses_at(env);
        self.sum_into(&self.d2factors, &q, out);
    }

    /// `out[j] = dR/dI_k (x_j, env)`
    pub fn fill_d_env(&self, env: &[f64], k: usize, out: &mut [f64]) {
        let q: Vec<f64> = self
            .responses
            .iter()
            .map(|(r, c)| if *c == k { r.derivative(env[k]) } else { 0.0 })
            .collect();
        self.sum_into(&self.factors, &q, out);
    }

    /// `R(x_j, env)` for a prepared response vector from `responses_for`.
    pub fn rate_with(&self, j: usize, q: &[f64]) -> f64 {
        self.factors.iter().zip(q).map(|(f, qk)| f[j] * qk).sum()
    }

    pub fn responses_for(&self, env: &[f64]) -> Vec<f64> {
        self.responses_at(env)
    }

    pub fn n_nodes(&self) -> usize {
        self.psi[0].len()
    }
}

/// `(x - x^2 + 3x^4)(9 - (1 + x)^3)` expanded.
fn switch_birth() -> Poly {
    let left = Poly::new(vec![0.0, 1.0, -1.0, 0.0, 3.0]);
    let right = Poly::new(vec![8.0, -3.0, -3.0, -1.0]);
    left.mul(&right)
}

fn sample_points(range: (f64, f64), n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64)
        .collect()
}

fn scan_range<F: Fn(f64) -> f64>(domain: (f64, f64), f: F) -> (f64, f64) {
    sample_points(domain, SCAN_POINTS)
        .into_iter()
        .map(f)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
}

fn rate_of(terms: &[RateTerm], x: f64, env: &[f64]) -> f64 {
    terms
        .iter()
        .map(|t| t.factor.eval(x) * t.response.eval(env[t.component]))
        .sum()
}

/// `I_m` solves `min_x R(x, s 1) = 0` and `I_M` solves `max_x R(x, s 1) = 0`
/// along the diagonal of environment space; `I_m` is clamped to stay positive.
fn scan_diagonal_bounds(
    terms: &[RateTerm],
    n_env: usize,
    domain: (f64, f64),
) -> Result<EnvBounds> {
    let xs = sample_points(domain, SCAN_POINTS);
    let extreme = |s: f64, take_max: bool| -> f64 {
        let env = vec![s; n_env];
        let vals = xs.iter().map(|&x| rate_of(terms, x, &env));
        if take_max {
            vals.fold(f64::NEG_INFINITY, f64::max)
        } else {
            vals.fold(f64::INFINITY, f64::min)
        }
    };
    let root = |take_max: bool| -> Result<f64> {
        let f = |s: f64| extreme(s, take_max);
        if f(0.0) <= 0.0 {
            return Ok(0.0);
        }
        let mut hi = 1.0;
        let mut tries = 0;
        while f(hi) > 0.0 {
            hi *= 2.0;
            tries += 1;
            if tries > 60 {
                return Err(Error::AssumptionViolation(
                    "R(x, s) stays positive for every scanned environment level".into(),
                ));
            }
        }
        Ok(bisect(f, 0.0, hi, 1e-13, DEFAULT_MAX_ITER).x)
    };
    let upper = root(true)?;
    if upper <= 0.0 {
        return Err(Error::AssumptionViolation(
            "max_x R(x, 0) <= 0: the population cannot persist".into(),
        ));
    }
    let lower = root(false)?.max(1e-3 * upper).min(upper);
    Ok(EnvBounds { lower, upper })
}

/// The unique zero trait `X(I)` of `R(., I)` on the model domain, found by a
/// sign-change scan followed by bisection.
pub fn find_zero_trait(model: &GrowthModel, i: f64) -> Result<f64> {
    find_zero_trait_with(model, i, SCAN_POINTS, DEFAULT_ROOT_TOL)
}

pub fn find_zero_trait_with(model: &GrowthModel, i: f64, scan: usize, tol: f64) -> Result<f64> {
    if model.env_count() != 1 {
        return Err(Error::Invalid("zero trait requires a scalar environment".into()));
    }
    let (x_min, x_max) = model.domain();
    let xs = sample_points((x_min, x_max), scan.max(3));
    let vals: Vec<f64> = xs.iter().map(|&x| model.rate1(x, i)).collect();
    let mut brackets = Vec::new();
    for k in 0..xs.len() - 1 {
        let (a, b) = (vals[k], vals[k + 1]);
        if a == 0.0 {
            if k == 0 || vals[k - 1] != 0.0 {
                brackets.push((xs[k], xs[k]));
            }
        } else if a * b < 0.0 {
            brackets.push((xs[k], xs[k + 1]));
        }
    }
    if *vals.last().unwrap() == 0.0 && vals[vals.len() - 2] != 0.0 {
        brackets.push((x_max, x_max));
    }
    match brackets.len() {
        0 => Err(Error::NoRoot { env: i, x_min, x_max }),
        1 => {
            let (a, b) = brackets[0];
            if a == b {
                return Ok(a);
            }
            Ok(bisect(|x| model.rate1(x, i), a, b, tol, DEFAULT_MAX_ITER).x)
        }
        count => Err(Error::NonMonomorphic { env: i, count }),
    }
}

/// Environment level `I` with `R(x, I) = 0`, by bisection on the window
/// using the strict decrease of `R` in `I`.
pub fn find_equilibrium_env(model: &GrowthModel, x: f64) -> Result<f64> {
    if model.env_count() != 1 {
        return Err(Error::Invalid("equilibrium environment requires a scalar environment".into()));
    }
    let (lo, hi) = model.window();
    let (r_lo, r_hi) = (model.rate1(x, lo), model.rate1(x, hi));
    if !(r_lo >= 0.0 && r_hi <= 0.0) {
        return Err(Error::AssumptionViolation(format!(
            "R({x}, .) is not bracketed on the window: R(x, {lo}) = {r_lo}, R(x, {hi}) = {r_hi}"
        )));
    }
    Ok(bisect(|i| model.rate1(x, i), lo, hi, DEFAULT_ROOT_TOL, DEFAULT_MAX_ITER).x)
}

/// Scale `s > 0` with `R(x, s * direction) = 0`; reduces to
/// `find_equilibrium_env` for scalar environments with `direction = [1]`.
pub fn find_equilibrium_scale(model: &GrowthModel, x: f64, direction: &[f64]) -> Result<f64> {
    if direction.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::Invalid("direction must be componentwise positive".into()));
    }
    let dmax = direction.iter().copied().fold(0.0, f64::max);
    let dmin = direction.iter().copied().fold(f64::INFINITY, f64::min);
    let (lo, hi) = model.window();
    let s_lo = lo.max(0.0) / dmin;
    let s_hi = hi / dmax;
    let f = |s: f64| {
        let env: Vec<f64> = direction.iter().map(|d| d * s).collect();
        model.rate(x, &env)
    };
    let (f_lo, f_hi) = (f(s_lo), f(s_hi));
    if !(f_lo >= 0.0 && f_hi <= 0.0) {
        return Err(Error::AssumptionViolation(format!(
            "R({x}, s d) has no sign change for s in [{s_lo}, {s_hi}]"
        )));
    }
    Ok(bisect(f, s_lo, s_hi, DEFAULT_ROOT_TOL, DEFAULT_MAX_ITER).x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Increasing,
    Decreasing,
}

/// Monomorphic structure: a unique zero trait `X(I)` for every `I` in
/// `(I_m, I_M)`, and the direction in which the reduced rate crosses zero.
#[derive(Debug, Clone)]
pub struct MonomorphicStructure {
    pub direction: Monotonicity,
}

impl MonomorphicStructure {
    pub fn detect(model: &GrowthModel, n_env_samples: usize) -> Result<Self> {
        let EnvBounds { lower, upper } = model.bounds();
        let n = n_env_samples.max(2);
        let mut direction = None;
        for k in 1..=n {
            let i = lower + (upper - lower) * k as f64 / (n + 1) as f64;
            let x = find_zero_trait(model, i)?;
            let h = 1e-6 * (model.domain().1 - model.domain().0);
            let dir = if model.rate1(x + h, i) > model.rate1(x - h, i) {
                Monotonicity::Increasing
            } else {
                Monotonicity::Decreasing
            };
            match direction {
                None => direction = Some(dir),
                Some(d) if d != dir => {
                    return Err(Error::AssumptionViolation(
                        "zero-crossing direction changes with I".into(),
                    ))
                }
                _ => {}
            }
        }
        Ok(Self {
            direction: direction.unwrap(),
        })
    }

    pub fn x_of_i(&self, model: &GrowthModel, i: f64) -> Result<f64> {
        find_zero_trait(model, i)
    }
}

/// One sampled assumption with its worst witness.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub name: String,
    pub passed: bool,
    pub witness: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<AssumptionCheck>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

const VALIDATION_TOL: f64 = 1e-6;

/// Samples the structural hypotheses on grid nodes and `n_env_samples`
/// uniformly spaced levels in `[I_m / 2, 2 I_M]`.
pub fn validate_assumptions(
    model: &GrowthModel,
    grid: &Grid,
    n_env_samples: usize,
) -> ValidationReport {
    let n_env = model.env_count();
    let EnvBounds { lower, upper } = model.bounds();
    let k_budget = model.lipschitz_budget();
    let mut checks = Vec::new();

    for k in 0..n_env {
        let (psi_min, x_at) = grid
            .nodes()
            .iter()
            .map(|&x| (model.psi(k, x), x))
            .fold((f64::INFINITY, 0.0), |acc, v| if v.0 < acc.0 { v } else { acc });
        checks.push(AssumptionCheck {
            name: format!("psi_positive[{}]", k + 1),
            passed: psi_min > 0.0 && psi_min.is_finite(),
            witness: psi_min,
            detail: format!("min psi = {psi_min} at x = {x_at}"),
        });
    }

    let levels: Vec<f64> = (0..n_env_samples.max(2))
        .map(|m| 0.5 * lower + (2.0 * upper - 0.5 * lower) * m as f64 / (n_env_samples.max(2) - 1) as f64)
        .collect();
    for k in 0..n_env {
        let mut worst = (f64::NEG_INFINITY, 0.0, 0.0, 0.0);
        let mut passed = true;
        for &x in grid.nodes() {
            for &s in &levels {
                let mut env = vec![s; n_env];
                let h = 1e-6 * s.abs().max(1.0);
                env[k] = s + h;
                let up = model.rate(x, &env);
                env[k] = s - h;
                let dn = model.rate(x, &env);
                let slope = (up - dn) / (2.0 * h);
                let ok = slope >= -k_budget - VALIDATION_TOL && slope <= -1.0 / k_budget + VALIDATION_TOL;
                // witness: the sample furthest outside, else the largest slope
                let score = if ok { slope.max(-k_budget - slope) - 1e9 } else { slope.max(-k_budget - slope) };
                if score > worst.0 {
                    worst = (score, slope, x, s);
                }
                passed &= ok;
            }
        }
        checks.push(AssumptionCheck {
            name: format!("env_monotonicity[{}]", k + 1),
            passed,
            witness: worst.1,
            detail: format!(
                "dR/dI = {} at x = {}, I = {} (budget K = {k_budget})",
                worst.1, worst.2, worst.3
            ),
        });
    }

    let max_at_lower = grid
        .nodes()
        .iter()
        .map(|&x| model.rate(x, &vec![lower; n_env]))
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(AssumptionCheck {
        name: "lower_bracket".into(),
        passed: max_at_lower >= -VALIDATION_TOL,
        witness: max_at_lower,
        detail: format!("max_x R(x, I_m = {lower}) = {max_at_lower}"),
    });
    let min_at_upper = grid
        .nodes()
        .iter()
        .map(|&x| model.rate(x, &vec![upper; n_env]))
        .fold(f64::INFINITY, f64::min);
    checks.push(AssumptionCheck {
        name: "upper_bracket".into(),
        passed: min_at_upper <= VALIDATION_TOL,
        witness: min_at_upper,
        detail: format!("min_x R(x, I_M = {upper}) = {min_at_upper}"),
    });
    ValidationReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine_model(b: Poly, slope_in_i: f64, domain: (f64, f64)) -> GrowthModel {
        GrowthModel::factored(
            PiecewisePoly::single(b),
            PiecewisePoly::constant(1.0),
            EnvResponse::Constant(1.0),
            EnvResponse::Affine {
                offset: 0.0,
                slope: slope_in_i,
            },
            PiecewisePoly::constant(1.0),
            domain,
            Some(EnvBounds {
                lower: 0.5,
                upper: 1.5,
            }),
            Some((0.0, 10.0)),
        )
        .unwrap()
    }

    #[test]
    fn factored_constant_birth_rate() {
        // b = 2, d = 1, Q1 = 1, Q2 = I  =>  R = 2 - I
        let m = affine_model(Poly::constant(2.0), 1.0, (0.0, 1.0));
        assert_eq!(m.eval_growth(0.3, &[2.0]).unwrap(), 0.0);
        assert_eq!(m.eval_growth(17.0, &[2.0]).unwrap(), 0.0);
    }

    #[test]
    fn switch_model_value_at_kink() {
        let m = GrowthModel::polynomial_switch((0.0, 1.0)).unwrap();
        // direct evaluation of the unexpanded product
        let x: f64 = 0.05;
        let direct = (x - x * x + 3.0 * x.powi(4)) * (9.0 - (1.0 + x).powi(3));
        let r = m.eval_growth(x, &[0.0]).unwrap();
        assert!((r - direct).abs() < 1e-14);
        assert!((r - 0.372_659_857_031_25).abs() < 1e-12);
    }

    #[test]
    fn linear_model_zero() {
        let m = GrowthModel::linear((-1.0, 4.0)).unwrap();
        assert_eq!(m.eval_growth(1.0, &[1.0]).unwrap(), 0.0);
    }

    #[test]
    fn out_of_window_is_an_error() {
        let m = affine_model(Poly::constant(2.0), 1.0, (0.0, 1.0));
        assert!(matches!(
            m.eval_growth(0.0, &[11.0]),
            Err(Error::OutOfWindow { .. })
        ));
        assert!(m.eval_growth(0.0, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn eval_is_bit_reproducible() {
        let m = GrowthModel::polynomial_switch((0.0, 1.0)).unwrap();
        let a = m.eval_growth(0.731, &[1.25]).unwrap();
        let b = m.eval_growth(0.731, &[1.25]).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn zero_trait_examples() {
        let lin = GrowthModel::linear((-1.0, 4.0)).unwrap();
        assert!((find_zero_trait(&lin, 0.7).unwrap() - 0.7).abs() < 1e-10);

        // b = 1 + x, d = 1, Q2 = I, I = 1.5  =>  X = 0.5
        let m = affine_model(Poly::linear(1.0, 1.0), 1.0, (0.0, 1.0));
        assert!((find_zero_trait(&m, 1.5).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn zero_trait_inverts_switch_model_against_fine_scan() {
        let m = GrowthModel::polynomial_switch((0.0, 1.0)).unwrap();
        let i = m.rate1(0.05, 0.0);
        // oracle: brute-force sign change at resolution 1e-6
        let mut scan_root = f64::NAN;
        let mut prev = m.rate1(0.0, i);
        for k in 1..=1_000_000 {
            let x = k as f64 * 1e-6;
            let v = m.rate1(x, i);
            if prev < 0.0 && v >= 0.0 || prev > 0.0 && v <= 0.0 {
                scan_root = x;
                break;
            }
            prev = v;
        }
        let x = find_zero_trait(&m, i).unwrap();
        assert!((x - scan_root).abs() <= 1e-6, "{x} vs {scan_root}");
        assert!((x - 0.05).abs() < 1e-9);
    }

    #[test]
    fn zero_trait_errors() {
        let m = affine_model(Poly::constant(2.0), 1.0, (0.0, 1.0));
        // R = 2 - I never vanishes in x unless I = 2
        assert!(matches!(find_zero_trait(&m, 1.0), Err(Error::NoRoot { .. })));
        let sw = GrowthModel::polynomial_switch((0.0, 1.0)).unwrap();
        // b rises to 4.52 at x ~ 0.854 and falls to 3 at x = 1
        assert!(matches!(
            find_zero_trait(&sw, 4.0),
            Err(Error::NonMonomorphic { count: 2, .. })
        ));
    }

    #[test]
    fn equilibrium_env_examples() {
        let m = affine_model(Poly::constant(2.0), 1.0, (0.0, 1.0));
        assert!((find_equilibrium_env(&m, 0.4).unwrap() - 2.0).abs() < 1e-10);
        let q = affine_model(Poly::new(vec![1.0, 0.0, 1.0]), 1.0, (0.0, 2.0));
        assert!((find_equilibrium_env(&q, 1.0).unwrap() - 2.0).abs() < 1e-10);
        let sw = GrowthModel::polynomial_switch((0.0, 1.0)).unwrap();
        let i = find_equilibrium_env(&sw, 0.05).unwrap();
        assert!((i - 0.372_659_857_031_25).abs() < 1e-9);
    }

    #[test]
    fn equilibrium_env_bracket_violation() {
        // R = 20 - I stays positive on the window [0, 10]
        let m = affine_model(Poly::constant(20.0), 1.0, (0.0, 1.0));
        assert!(matches!(
            find_equilibrium_env(&m, 0.5),
            Err(Error::AssumptionViolation(_))
        ));
    }

    #[test]
    fn validation_passes_for_decreasing_rate() {
        // R = 1 - I, I_m = 0.5, I_M = 1.5
        let m = affine_model(Poly::constant(1.0), 1.0, (0.0, 1.0));
        let g = Grid::new(0.0, 1.0, 32).unwrap();
        let rep = validate_assumptions(&m, &g, 11);
        assert!(rep.all_passed(), "{rep:?}");
    }

    #[test]
    fn validation_flags_increasing_rate() {
        // R = 1 + I
        let m = affine_model(Poly::constant(1.0), -1.0, (0.0, 1.0));
        let g = Grid::new(0.0, 1.0, 32).unwrap();
        let rep = validate_assumptions(&m, &g, 11);
        let c = rep.get("env_monotonicity[1]").unwrap();
        assert!(!c.passed);
        assert!((c.witness - 1.0).abs() < 1e-6);
    }

    #[test]
    fn validation_of_switch_model_with_scanned_bounds() {
        let m = GrowthModel::polynomial_switch((0.0, 1.0)).unwrap();
        let EnvBounds { lower, upper } = m.bounds();
        // dense-scan oracle for the range of b on [0, 1]
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for k in 0..=100_000 {
            let b = m.rate1(k as f64 * 1e-5, 0.0);
            lo = lo.min(b);
            hi = hi.max(b);
        }
        assert!(lo.abs() < 1e-12);
        assert!((upper - hi).abs() < 1e-4);
        assert!(lower > 0.0 && lower < 0.01);
        let g = Grid::new(0.0, 1.0, 200).unwrap();
        assert!(validate_assumptions(&m, &g, 21).all_passed());
    }

    #[test]
    fn monomorphic_direction() {
        let lin = GrowthModel::linear((-1.0, 4.0)).unwrap();
        let s = MonomorphicStructure::detect(&lin, 8).unwrap();
        assert_eq!(s.direction, Monotonicity::Increasing);
        let m = affine_model(Poly::linear(2.0, -1.0), 1.0, (0.0, 2.0));
        let s = MonomorphicStructure::detect(&m, 8).unwrap();
        assert_eq!(s.direction, Monotonicity::Decreasing);
    }

    #[test]
    fn separable_structure() {
        let lin = GrowthModel::linear((-1.0, 4.0)).unwrap();
        let sep = lin.separable().unwrap();
        assert!(sep.in_uniqueness_class);
        assert_eq!(sep.coupling.as_constant(), Some(-1.0));
        let chem = GrowthModel::chemostat(
            vec![PiecewisePoly::constant(1.0), PiecewisePoly::constant(1.0)],
            vec![
                EnvResponse::Reciprocal { scale: 1.0, shift: 1.0 },
                EnvResponse::Reciprocal { scale: 1.0, shift: 1.0 },
            ],
            PiecewisePoly::constant(0.5),
            vec![PiecewisePoly::constant(1.0), PiecewisePoly::constant(1.0)],
            (0.0, 1.0),
            None,
            None,
        )
        .unwrap();
        assert!(chem.separable().is_none());
    }

    #[test]
    fn scanned_bounds_for_chemostat() {
        // R = 2/(1+I1) + 2/(1+I2) - 1 on the diagonal: 4/(1+s) = 1 at s = 3
        let chem = GrowthModel::chemostat(
            vec![PiecewisePoly::constant(2.0), PiecewisePoly::constant(2.0)],
            vec![
                EnvResponse::Reciprocal { scale: 1.0, shift: 1.0 },
                EnvResponse::Reciprocal { scale: 1.0, shift: 1.0 },
            ],
            PiecewisePoly::constant(1.0),
            vec![PiecewisePoly::constant(1.0), PiecewisePoly::constant(1.0)],
            (0.0, 1.0),
            None,
            None,
        )
        .unwrap();
        assert!((chem.bounds().upper - 3.0).abs() < 1e-9);
        assert!((chem.bounds().lower - 3.0).abs() < 1e-9);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn fd_env_slope_within_budget(x in 0.0f64..1.0, s in 0.2f64..8.0) {
                let m = GrowthModel::polynomial_switch((0.0, 1.0)).unwrap();
                let k = m.lipschitz_budget();
                let h = 1e-6;
                let slope = (m.rate1(x, s + h) - m.rate1(x, s - h)) / (2.0 * h);
                prop_assert!(slope >= -k - 1e-6 && slope <= -1.0 / k + 1e-6);
            }

            #[test]
            fn zero_trait_inverts_equilibrium(x in -0.5f64..3.5) {
                let m = GrowthModel::linear((-1.0, 4.0)).unwrap();
                let i = find_equilibrium_env(&m, x).unwrap();
                let back = find_zero_trait(&m, i).unwrap();
                prop_assert!((back - x).abs() <= 2.0 * DEFAULT_ROOT_TOL);
            }
        }
    }
}
