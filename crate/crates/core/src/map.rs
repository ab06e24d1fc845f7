//! MAP estimation of the latent factors.
//!
//! Minimizes the regularized squared error
//!
//! ```text
//! E = 1/2 sum_obs (y - link(s))^2 + gu/2 |U|^2 + gv/2 |V|^2 + gr/2 |R|^2
//! s = sum_d U[i,d] V[j,d] R[t,d]
//! ```
//!
//! over all three factor blocks jointly, with Polak-Ribiere nonlinear
//! conjugate gradient (`beta = max(0, beta_PR)`) and Armijo backtracking.
//!
//! With residual `e = y - link(s)` and link slope `l` (1 for the identity,
//! `g(s)(1 - g(s))` for the logistic), the gradient rows are
//!
//! ```text
//! dE/dU[i] = -sum_{j,t} e l (V[j] * R[t]) + gu U[i]
//! dE/dV[j] = -sum_{i,t} e l (U[i] * R[t]) + gv V[j]
//! dE/dR[t] = -sum_{i,j} e l (U[i] * V[j]) + gr R[t]
//! ```
//!
//! where `*` is the elementwise product.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::model::{logistic, triple_dot, LatentFactors, ModelConfig};
use crate::rng::{substream, Stream};
use crate::tensor::{Entry, RelationalTensor};
use crate::{Error, FactorMatrix, Result};

/// Smallest step the line search will try before giving up.
pub const MIN_STEP: f64 = 1e-16;

/// Armijo backtracking parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchParams {
    pub initial_step: f64,
    pub shrink: f64,
    pub sufficient_decrease: f64,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        Self {
            initial_step: 1.0,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapConfig {
    pub gamma_u: f64,
    pub gamma_v: f64,
    pub gamma_r: f64,
    pub max_iterations: usize,
    pub rel_tolerance: f64,
    pub line_search: LineSearchParams,
    pub seed: u64,
    /// Standard deviation of the Gaussian initialization.
    pub init_scale: f64,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            gamma_u: 0.01,
            gamma_v: 0.01,
            gamma_r: 0.01,
            max_iterations: 500,
            rel_tolerance: 1e-6,
            line_search: LineSearchParams::default(),
            seed: 0,
            init_scale: 0.1,
        }
    }
}

impl MapConfig {
    /// Sets all three regularization weights.
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma_u = gamma;
        self.gamma_v = gamma;
        self.gamma_r = gamma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        for g in [self.gamma_u, self.gamma_v, self.gamma_r] {
            if !(g >= 0.0 && g.is_finite()) {
                return bad("regularization weights must be finite and nonnegative");
            }
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        if !(self.rel_tolerance > 0.0) {
            return bad("rel_tolerance must be positive");
        }
        let ls = &self.line_search;
        if !(ls.initial_step > 0.0 && ls.initial_step.is_finite()) {
            return bad("initial step must be positive");
        }
        if !(ls.shrink > 0.0 && ls.shrink < 1.0) {
            return bad("shrink factor must lie in (0, 1)");
        }
        if !(ls.sufficient_decrease > 0.0 && ls.sufficient_decrease < 1.0) {
            return bad("sufficient-decrease constant must lie in (0, 1)");
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return bad("init_scale must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Relative objective decrease fell below the tolerance.
    Converged,
    MaxIterations,
    /// The line search failed along the steepest-descent direction.
    Stalled,
    ZeroGradient,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max_iterations",
            Termination::Stalled => "stalled",
            Termination::ZeroGradient => "zero_gradient",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub objective: f64,
    pub gradient_norm: f64,
    /// Accepted step length; zero for the starting point.
    pub step: f64,
    /// Directional derivative `<grad, direction>` at the start of the step;
    /// zero for the starting point.
    pub slope: f64,
    /// Whether this step followed the steepest-descent direction.
    pub restarted: bool,
}

/// Per-iteration optimizer history. Entry 0 is the initial point.
#[derive(Debug, Clone, PartialEq)]
pub struct OptTrace {
    pub records: Vec<TraceRecord>,
    pub termination: Termination,
}

impl OptTrace {
    pub fn final_objective(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.objective)
    }

    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum LineSearchError {
    #[error("search direction is not a descent direction")]
    NotDescent,
    #[error("step size fell below {MIN_STEP:e}")]
    Stall,
}

/// Armijo backtracking along `direction` from `x`.
///
/// Returns a step `s` with `f(x + s d) <= f(x) + c s <grad, d>`.
pub fn line_search(
    mut f: impl FnMut(&[f64]) -> f64,
    x: &[f64],
    fx: f64,
    grad: &[f64],
    direction: &[f64],
    params: &LineSearchParams,
) -> core::result::Result<f64, LineSearchError> {
    let slope = dot(grad, direction);
    if !(slope < 0.0) {
        return Err(LineSearchError::NotDescent);
    }
    let mut trial = vec![0.0; x.len()];
    let mut step = params.initial_step;
    while step >= MIN_STEP {
        for ((t, xi), di) in trial.iter_mut().zip(x).zip(direction) {
            *t = xi + step * di;
        }
        let ft = f(&trial);
        if ft <= fx + params.sufficient_decrease * step * slope {
            return Ok(step);
        }
        step *= params.shrink;
    }
    Err(LineSearchError::Stall)
}

/// The MAP objective over a flat parameter vector `[U | V | R]`.
struct Problem<'a> {
    entries: &'a [Entry],
    n: usize,
    t: usize,
    d: usize,
    gammas: [f64; 3],
    logistic: bool,
}

impl<'a> Problem<'a> {
    fn new(tensor: &'a RelationalTensor, model: &ModelConfig, config: &MapConfig) -> Self {
        Self {
            entries: tensor.entries(),
            n: tensor.n_objects(),
            t: tensor.n_relations(),
            d: model.rank,
            gammas: [config.gamma_u, config.gamma_v, config.gamma_r],
            logistic: model.use_logistic,
        }
    }

    fn len(&self) -> usize {
        (2 * self.n + self.t) * self.d
    }

    fn blocks<'x>(&self, x: &'x [f64]) -> (&'x [f64], &'x [f64], &'x [f64]) {
        let nd = self.n * self.d;
        (&x[..nd], &x[nd..2 * nd], &x[2 * nd..])
    }

    fn rows<'x>(&self, x: &'x [f64], e: &Entry) -> (&'x [f64], &'x [f64], &'x [f64]) {
        let (u, v, r) = self.blocks(x);
        let d = self.d;
        (
            &u[e.i * d..(e.i + 1) * d],
            &v[e.j * d..(e.j + 1) * d],
            &r[e.t * d..(e.t + 1) * d],
        )
    }

    fn regularizer(&self, x: &[f64]) -> f64 {
        let (u, v, r) = self.blocks(x);
        let sq = |b: &[f64]| b.iter().map(|z| z * z).sum::<f64>();
        0.5 * (self.gammas[0] * sq(u) + self.gammas[1] * sq(v) + self.gammas[2] * sq(r))
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut sse = 0.0;
        for e in self.entries {
            let (ui, vj, rt) = self.rows(x, e);
            let s = triple_dot(ui, vj, rt);
            let m = if self.logistic { logistic(s) } else { s };
            let res = e.y() - m;
            sse += res * res;
        }
        0.5 * sse + self.regularizer(x)
    }

    /// Objective value; writes the gradient into `grad`.
    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.d;
        let nd = self.n * d;
        let (u, v, r) = self.blocks(x);
        for (k, (gk, pk)) in grad.iter_mut().zip(x).enumerate() {
            *gk = self.gammas[(k / nd).min(2)] * pk;
        }
        let (gu, rest) = grad.split_at_mut(nd);
        let (gv, gr) = rest.split_at_mut(nd);
        let mut sse = 0.0;
        for e in self.entries {
            let ui = &u[e.i * d..(e.i + 1) * d];
            let vj = &v[e.j * d..(e.j + 1) * d];
            let rt = &r[e.t * d..(e.t + 1) * d];
            let s = triple_dot(ui, vj, rt);
            let (m, slope) = if self.logistic {
                let g = logistic(s);
                (g, g * (1.0 - g))
            } else {
                (s, 1.0)
            };
            let res = e.y() - m;
            sse += res * res;
            let c = -res * slope;
            let gu = &mut gu[e.i * d..(e.i + 1) * d];
            let gv = &mut gv[e.j * d..(e.j + 1) * d];
            let gr = &mut gr[e.t * d..(e.t + 1) * d];
            for k in 0..d {
                gu[k] += c * vj[k] * rt[k];
                gv[k] += c * ui[k] * rt[k];
                gr[k] += c * ui[k] * vj[k];
            }
        }
        0.5 * sse + self.regularizer(x)
    }
}

fn flatten(f: &LatentFactors) -> Vec<f64> {
    let mut x = Vec::with_capacity((2 * f.n_objects() + f.n_relations()) * f.rank());
    x.extend_from_slice(f.u.as_slice());
    x.extend_from_slice(f.v.as_slice());
    x.extend_from_slice(f.r.as_slice());
    x
}

fn unflatten(x: &[f64], n: usize, t: usize, d: usize, alpha: f64) -> LatentFactors {
    let nd = n * d;
    LatentFactors {
        u: FactorMatrix::from_vec(n, d, x[..nd].to_vec()).expect("block length"),
        v: FactorMatrix::from_vec(n, d, x[nd..2 * nd].to_vec()).expect("block length"),
        r: FactorMatrix::from_vec(t, d, x[2 * nd..].to_vec()).expect("block length"),
        alpha,
    }
}

fn check_inputs(
    factors: &LatentFactors,
    tensor: &RelationalTensor,
    model: &ModelConfig,
) -> Result<()> {
    factors.check_shape(tensor)?;
    if factors.rank() != model.rank {
        return Err(Error::DimensionMismatch(format!(
            "factors have rank {}, model rank is {}",
            factors.rank(),
            model.rank
        )));
    }
    Ok(())
}

/// Regularized squared error of `factors` on the observed entries.
pub fn objective(
    factors: &LatentFactors,
    tensor: &RelationalTensor,
    model: &ModelConfig,
    config: &MapConfig,
) -> Result<f64> {
    check_inputs(factors, tensor, model)?;
    Ok(Problem::new(tensor, model, config).value(&flatten(factors)))
}

/// Gradient of [`objective`] with respect to `U`, `V` and `R`.
pub fn gradients(
    factors: &LatentFactors,
    tensor: &RelationalTensor,
    model: &ModelConfig,
    config: &MapConfig,
) -> Result<(FactorMatrix, FactorMatrix, FactorMatrix)> {
    check_inputs(factors, tensor, model)?;
    let problem = Problem::new(tensor, model, config);
    let x = flatten(factors);
    let mut g = vec![0.0; x.len()];
    problem.value_and_gradient(&x, &mut g);
    let grad = unflatten(&g, problem.n, problem.t, problem.d, 1.0);
    Ok((grad.u, grad.v, grad.r))
}

/// Gaussian initialization used by [`fit_map`].
pub fn initial_factors(
    n_objects: usize,
    n_relations: usize,
    rank: usize,
    scale: f64,
    seed: u64,
) -> LatentFactors {
    let mut rng = substream(seed, Stream::MapInit);
    let normal = Normal::new(0.0, scale).expect("positive scale");
    let mut draw = |rows| FactorMatrix::from_fn(rows, rank, |_, _| normal.sample(&mut rng));
    let u = draw(n_objects);
    let v = draw(n_objects);
    let r = draw(n_relations);
    LatentFactors {
        u,
        v,
        r,
        alpha: 1.0,
    }
}

/// Fits the factors by Polak-Ribiere conjugate gradient from a seeded
/// Gaussian start.
///
/// The returned `alpha` is the maximum-likelihood precision of the final
/// residuals, which gives the Gibbs sampler a sensible starting value.
pub fn fit_map(
    tensor: &RelationalTensor,
    model: &ModelConfig,
    config: &MapConfig,
) -> Result<(LatentFactors, OptTrace)> {
    model.validate()?;
    config.validate()?;
    if tensor.is_empty() {
        return Err(Error::EmptyTensor);
    }
    let start = initial_factors(
        tensor.n_objects(),
        tensor.n_relations(),
        model.rank,
        config.init_scale,
        config.seed,
    );
    fit_map_from(tensor, model, config, &start)
}

/// [`fit_map`] from caller-supplied starting factors.
pub fn fit_map_from(
    tensor: &RelationalTensor,
    model: &ModelConfig,
    config: &MapConfig,
    start: &LatentFactors,
) -> Result<(LatentFactors, OptTrace)> {
    model.validate()?;
    config.validate()?;
    check_inputs(start, tensor, model)?;
    if tensor.is_empty() {
        return Err(Error::EmptyTensor);
    }
    let problem = Problem::new(tensor, model, config);
    let len = problem.len();
    let restart_every = (problem.n + problem.t) * problem.d;

    let mut x = flatten(start);
    let mut grad = vec![0.0; len];
    let mut fx = problem.value_and_gradient(&x, &mut grad);
    if !fx.is_finite() {
        return Err(Error::Divergence { iteration: 0 });
    }
    let mut records = vec![TraceRecord {
        iteration: 0,
        objective: fx,
        gradient_norm: norm(&grad),
        step: 0.0,
        slope: 0.0,
        restarted: true,
    }];
    let mut dir: Vec<f64> = grad.iter().map(|g| -g).collect();
    let mut is_steepest = true;
    let mut since_restart = 0usize;
    let mut next_grad = vec![0.0; len];
    let mut termination = Termination::MaxIterations;

    let mut iteration = 1;
    while iteration <= config.max_iterations {
        if norm(&grad) == 0.0 {
            termination = Termination::ZeroGradient;
            break;
        }
        let step = match line_search(
            |p| problem.value(p),
            &x,
            fx,
            &grad,
            &dir,
            &config.line_search,
        ) {
            Ok(step) => step,
            Err(_) if !is_steepest => {
                // restart from steepest descent and retry this iteration
                set_steepest(&mut dir, &grad);
                is_steepest = true;
                since_restart = 0;
                continue;
            }
            Err(_) => {
                termination = Termination::Stalled;
                break;
            }
        };
        let slope = dot(&grad, &dir);
        for (xi, di) in x.iter_mut().zip(&dir) {
            *xi += step * di;
        }
        let f_new = problem.value_and_gradient(&x, &mut next_grad);
        if !f_new.is_finite() || next_grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence { iteration });
        }
        records.push(TraceRecord {
            iteration,
            objective: f_new,
            gradient_norm: norm(&next_grad),
            step,
            slope,
            restarted: is_steepest,
        });

        let decrease = fx - f_new;
        let f_old = fx;
        fx = f_new;

        // beta = max(0, <g+, g+ - g> / <g, g>)
        let gg = dot(&grad, &grad);
        let beta_pr = next_grad
            .iter()
            .zip(&grad)
            .map(|(gn, g)| gn * (gn - g))
            .sum::<f64>()
            / gg;
        core::mem::swap(&mut grad, &mut next_grad);

        if fx == 0.0 || decrease < config.rel_tolerance * f_old.abs() {
            termination = Termination::Converged;
            break;
        }

        since_restart += 1;
        let beta = if beta_pr.is_finite() {
            beta_pr.max(0.0)
        } else {
            0.0
        };
        if since_restart >= restart_every || beta == 0.0 {
            set_steepest(&mut dir, &grad);
            is_steepest = true;
            since_restart = 0;
        } else {
            for (di, gi) in dir.iter_mut().zip(&grad) {
                *di = -gi + beta * *di;
            }
            is_steepest = false;
            if dot(&grad, &dir) >= 0.0 {
                set_steepest(&mut dir, &grad);
                is_steepest = true;
                since_restart = 0;
            }
        }
        iteration += 1;
    }

    let alpha = residual_precision(&problem, &x);
    let factors = unflatten(&x, problem.n, problem.t, problem.d, alpha);
    Ok((
        factors,
        OptTrace {
            records,
            termination,
        },
    ))
}

/// `count / SSE`, kept finite when the fit is exact.
fn residual_precision(problem: &Problem<'_>, x: &[f64]) -> f64 {
    let count = problem.entries.len() as f64;
    let sse = 2.0 * (problem.value(x) - problem.regularizer(x));
    let alpha = count / sse.max(count * 1e-12);
    if alpha.is_finite() && alpha > 0.0 {
        alpha
    } else {
        1.0
    }
}

fn set_steepest(dir: &mut [f64], grad: &[f64]) {
    for (d, g) in dir.iter_mut().zip(grad) {
        *d = -g;
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Draws a random binary tensor and random factors; used by tests here and in
/// the integration suites.
#[doc(hidden)]
pub fn random_instance(
    seed: u64,
    n: usize,
    t: usize,
    d: usize,
    observe_prob: f64,
) -> (RelationalTensor, LatentFactors) {
    let mut rng = substream(seed, Stream::Evaluation);
    let mut triples = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..t {
                if rng.random::<f64>() < observe_prob {
                    triples.push((i, j, k, rng.random_range(0..2u8)));
                }
            }
        }
    }
    let tensor = RelationalTensor::build(n, t, triples).expect("valid triples");
    let mut m = |rows| FactorMatrix::from_fn(rows, d, |_, _| rng.random_range(-1.0..1.0));
    let (u, v, r) = (m(n), m(n), m(t));
    (
        tensor,
        LatentFactors {
            u,
            v,
            r,
            alpha: 1.0,
        },
    )
}
