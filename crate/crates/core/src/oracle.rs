//! Independent upper bounds: quadrature of the cost along explicit
//! piecewise-linear trajectories and an exhaustive dynamic program over a
//! time × state grid.
//!
//! Both only see pointwise-bounded controls, so their values bound the
//! optimum from above and sandwich the relaxation bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{Monomial, NVARS};
use crate::problem::{ControlSign, OcpProblem, ProblemSpec};

pub const DEFAULT_PANELS: usize = 129;
/// Simpson panels per edge inside the dynamic program.
pub const GRID_EDGE_PANELS: usize = 16;
pub const MAX_TRANSITIONS: u64 = 10_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("integrand is not integrable on segment {segment}")]
    SingularIntegrand { segment: usize },
    #[error("{transitions} transitions exceed the budget of {budget}")]
    BudgetExceeded { transitions: u64, budget: u64 },
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("panels and grid sizes must be at least 1")]
    ZeroResolution,
    #[error("no admissible path through the grid")]
    NoFeasiblePath,
}

/// Piecewise-linear trajectory through `(times[i], states[i])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
}

impl SampledTrajectory {
    pub fn new(times: Vec<f64>, states: Vec<f64>) -> Result<Self, OracleError> {
        if times.len() != states.len() || times.len() < 2 {
            return Err(OracleError::InvalidTrajectory("need at least two matching nodes".into()));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(OracleError::InvalidTrajectory("times must increase strictly".into()));
        }
        Ok(SampledTrajectory { times, states })
    }

    /// `N + 1` uniform nodes on `[a, b]` with `x(t_i) = f(t_i)`.
    pub fn sample(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self, OracleError> {
        let times: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
        let states = times.iter().map(|&t| f(t)).collect();
        Self::new(times, states)
    }

    pub fn segments(&self) -> usize {
        self.times.len() - 1
    }

    /// Constant control on segment `i`.
    pub fn control(&self, i: usize) -> f64 {
        (self.states[i + 1] - self.states[i]) / (self.times[i + 1] - self.times[i])
    }
}

/// Running cost seen by the oracle.
#[derive(Debug, Clone, PartialEq)]
pub enum CostModel {
    Polynomial(OcpProblem),
    /// `sqrt((1 + u^2) / x)` on `[0, 1]`, `x(0) = 0`, `x(1) = 1`, `x ∈ [0, 1]`.
    Brachistochrone,
}

impl CostModel {
    pub fn from_spec(spec: &ProblemSpec) -> Self {
        match spec {
            ProblemSpec::Ocp(p) => CostModel::Polynomial(p.clone()),
            ProblemSpec::Brachistochrone => CostModel::Brachistochrone,
        }
    }

    /// `(a, b, x_a, x_b, x_lo, x_hi)`.
    pub fn geometry(&self) -> (f64, f64, f64, f64, f64, f64) {
        match self {
            CostModel::Polynomial(p) => (p.a, p.b, p.x_a, p.x_b, p.x_lo, p.x_hi),
            CostModel::Brachistochrone => (0.0, 1.0, 0.0, 1.0, 0.0, 1.0),
        }
    }

    fn compile(&self) -> Integrand {
        match self {
            CostModel::Polynomial(p) => Integrand::Poly {
                terms: p.lagrangian.terms().map(|(m, c)| (*m, *c)).collect(),
                sign: p.control_sign,
            },
            CostModel::Brachistochrone => Integrand::Brachistochrone,
        }
    }
}

enum Integrand {
    Poly { terms: Vec<(Monomial, f64)>, sign: ControlSign },
    Brachistochrone,
}

impl Integrand {
    fn eval_poly(terms: &[(Monomial, f64)], t: f64, x: f64, u: f64) -> f64 {
        let mut point = [0.0; NVARS];
        point[0] = t;
        point[1] = x;
        point[2] = u;
        terms.iter().map(|(m, c)| c * m.eval_dense(&point)).sum()
    }

    /// Cost of the straight segment `(t0, x0) -> (t1, x1)`, `None` when the
    /// control violates its sign restriction or the integrand is singular.
    fn segment(&self, t0: f64, x0: f64, t1: f64, x1: f64, panels: usize) -> Option<f64> {
        let dt = t1 - t0;
        let u = (x1 - x0) / dt;
        match self {
            Integrand::Poly { terms, sign } => {
                if let Some(o) = sign.orientation() {
                    if o * u < 0.0 {
                        return None;
                    }
                }
                Some(simpson(|t| Self::eval_poly(terms, t, x0 + u * (t - t0), u), t0, t1, panels))
            }
            Integrand::Brachistochrone => {
                if x0 < 0.0 || x1 < 0.0 || (x0 == 0.0 && x1 == 0.0) {
                    return None;
                }
                let speed = (1.0 + u * u).sqrt();
                if x0 > 0.0 && x1 > 0.0 {
                    return Some(speed * simpson(|t| 1.0 / (x0 + u * (t - t0)).sqrt(), t0, t1, panels));
                }
                // One end sits on x = 0 where 1/sqrt(x) blows up. With the
                // distance τ = σ² from that end the integrand becomes smooth,
                // and the open midpoint rule never touches the endpoint.
                let slope = u.abs();
                let f = |sigma: f64| {
                    let tau = dt * sigma * sigma;
                    2.0 * dt * sigma / (slope * tau).sqrt()
                };
                Some(speed * midpoint(f, 0.0, 1.0, panels))
            }
        }
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    // Simpson needs an even number of subintervals: each panel is split in two.
    let n = 2 * panels;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + h * k as f64);
    }
    sum * h / 3.0
}

fn midpoint(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels).map(|k| f(a + h * (k as f64 + 0.5))).sum::<f64>() * h
}

/// `∫ l(t, x(t), x'(t)) dt` along `traj` with `panels` Simpson panels per segment.
pub fn quadrature_objective(model: &CostModel, traj: &SampledTrajectory, panels: usize) -> Result<f64, OracleError> {
    if panels == 0 {
        return Err(OracleError::ZeroResolution);
    }
    let integrand = model.compile();
    let mut total = 0.0;
    for i in 0..traj.segments() {
        let (t0, t1) = (traj.times[i], traj.times[i + 1]);
        let (x0, x1) = (traj.states[i], traj.states[i + 1]);
        let cost = match &integrand {
            // Sign violations are still integrable; only the grid search rejects them.
            Integrand::Poly { terms, .. } => {
                let u = traj.control(i);
                Some(simpson(|t| Integrand::eval_poly(terms, t, x0 + u * (t - t0), u), t0, t1, panels))
            }
            Integrand::Brachistochrone => integrand.segment(t0, x0, t1, x1, panels),
        };
        total += cost.ok_or(OracleError::SingularIntegrand { segment: i })?;
    }
    Ok(total)
}

/// Exhaustive dynamic program over `n_steps` uniform time steps and the
/// `levels + 1` equispaced states `x_lo + (x_hi - x_lo) k / levels`.
///
/// The path starts at `x_a` and ends at `x_b`; interior nodes lie on the
/// grid. Refining `levels` by doubling keeps every coarse state, so the value
/// cannot increase.
pub fn grid_search_upper_bound(
    model: &CostModel,
    n_steps: usize,
    levels: usize,
) -> Result<(f64, SampledTrajectory), OracleError> {
    if n_steps == 0 || levels == 0 {
        return Err(OracleError::ZeroResolution);
    }
    let states = (levels + 1) as u64;
    let transitions = n_steps as u64 * states * states;
    if transitions > MAX_TRANSITIONS {
        return Err(OracleError::BudgetExceeded { transitions, budget: MAX_TRANSITIONS });
    }
    let (a, b, x_a, x_b, x_lo, x_hi) = model.geometry();
    let integrand = model.compile();
    let times: Vec<f64> = (0..=n_steps).map(|i| a + (b - a) * (i as f64 / n_steps as f64)).collect();
    let grid: Vec<f64> = (0..=levels).map(|k| x_lo + (x_hi - x_lo) * (k as f64 / levels as f64)).collect();
    let layer = |i: usize| -> Vec<f64> {
        if i == 0 {
            vec![x_a]
        } else if i == n_steps {
            vec![x_b]
        } else {
            grid.clone()
        }
    };

    let mut prev_states = layer(0);
    let mut cost: Vec<f64> = vec![0.0];
    let mut parents: Vec<Vec<usize>> = Vec::with_capacity(n_steps);
    for i in 1..=n_steps {
        let next_states = layer(i);
        let (t0, t1) = (times[i - 1], times[i]);
        let best: Vec<(f64, usize)> = next_states
            .par_iter()
            .map(|&x1| {
                let mut best = (f64::INFINITY, usize::MAX);
                for (j, &x0) in prev_states.iter().enumerate() {
                    if !cost[j].is_finite() {
                        continue;
                    }
                    if let Some(c) = integrand.segment(t0, x0, t1, x1, GRID_EDGE_PANELS) {
                        let v = cost[j] + c;
                        if v < best.0 {
                            best = (v, j);
                        }
                    }
                }
                best
            })
            .collect();
        cost = best.iter().map(|b| b.0).collect();
        parents.push(best.iter().map(|b| b.1).collect());
        prev_states = next_states;
    }
    let value = cost[0];
    if !value.is_finite() {
        return Err(OracleError::NoFeasiblePath);
    }

    let mut path = vec![0usize; n_steps + 1];
    for i in (1..=n_steps).rev() {
        path[i - 1] = parents[i - 1][path[i]];
    }
    let states: Vec<f64> = path.iter().enumerate().map(|(i, &k)| layer(i)[k]).collect();
    Ok((value, SampledTrajectory::new(times, states)?))
}
