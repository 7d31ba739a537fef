//! Entropy functionals and multi-start first-order optimisation over pure
//! input states.
//!
//! The channel objectives are optimised over the unit sphere only. Entropy is
//! concave, so its minimum over density matrices is attained at a pure state;
//! the `L²` distance and the output operator norm are convex in the input, so
//! their maxima are attained at pure states as well.
//!
//! Estimator direction: [`minimize_output_entropy`] returns an upper bound on
//! the true minimum output entropy, the two `maximize_*` routines return lower
//! bounds on the true maxima.

mod entropy;
mod objectives;

pub use entropy::{
    entropy_deficit_rhs, spectrum_entropy, von_neumann_entropy, ENTROPY_EIGEN_FLOOR,
    NEGATIVE_EIGEN_TOL,
};
pub use objectives::{
    finite_difference_gradient, l2_distance_gradient, moe_gradient, L2Distance, OutputEntropy,
    OutputSupNorm, SphereObjective, FD_STEP, SUP_NORM_GAP,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{PureState, RandomChannel};
use crate::haar::Seed;
use crate::linalg::CVector;
use crate::scalar::Scalar;

/// Settings of the multi-start sphere optimiser.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptConfig {
    pub starts: usize,
    pub max_iters: usize,
    pub step_init: f64,
    pub armijo_c: f64,
    pub grad_tol: f64,
    /// Start `s` is drawn from stream `seed.stream_index + s`.
    pub seed: Seed,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            starts: 32,
            max_iters: 2000,
            step_init: 0.5,
            armijo_c: 1e-4,
            grad_tol: 1e-8,
            seed: Seed::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Outcome of a single start.
#[derive(Clone, Debug)]
pub struct StartOutcome<T: Scalar> {
    pub value: T,
    pub state: PureState<T>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every accepted step, starting with the initial value.
    pub trace: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct OptResult<T: Scalar> {
    pub best_value: T,
    /// Best state found (the minimiser or maximiser, depending on the sense).
    pub argmin: PureState<T>,
    pub best_start: usize,
    pub per_start_values: Vec<T>,
    pub iterations_used: Vec<usize>,
    pub converged_flags: Vec<bool>,
}

const MIN_STEP: f64 = 1e-20;
const MAX_STEP: f64 = 1e8;

/// Projected gradient descent (or ascent) with Armijo backtracking, retracting
/// onto the sphere by normalisation. Trial points are evaluated through the
/// objective's linear lift, so each iteration lifts only the gradient.
pub fn descend_from<T: Scalar, O: SphereObjective<T> + ?Sized>(
    objective: &O,
    start: PureState<T>,
    sense: Sense,
    cfg: &OptConfig,
) -> StartOutcome<T> {
    let sign = match sense {
        Sense::Minimize => T::one(),
        Sense::Maximize => -T::one(),
    };
    let armijo = T::lit(cfg.armijo_c);
    let grad_tol = T::lit(cfg.grad_tol);
    let mut psi: CVector<T> = start.vector().clone();
    let mut lifted = objective.lift(&psi);
    let mut value = objective.value_lifted(&psi, &lifted);
    let mut trace = vec![value];
    let mut step = T::lit(cfg.step_init);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        let grad = objective.gradient_lifted(&psi, &lifted).scale(sign);
        let g2 = grad.norm_squared();
        if g2.sqrt() <= grad_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let lifted_grad = objective.lift(&grad);
        let accepted = loop {
            let mut cand = &psi - grad.scale(step);
            let norm = cand.norm();
            cand.unscale_mut(norm);
            let cand_lifted = (&lifted - lifted_grad.scale(step)).unscale(norm);
            let cand_value = objective.value_lifted(&cand, &cand_lifted);
            // directional derivative along -grad is -2‖grad‖²
            if sign * cand_value <= sign * value - armijo * step * (g2 + g2) {
                break Some((cand, cand_lifted, cand_value));
            }
            step *= T::lit(0.5);
            if step < T::lit(MIN_STEP) {
                break None;
            }
        };
        match accepted {
            Some((cand, cand_lifted, cand_value)) => {
                psi = cand;
                lifted = cand_lifted;
                value = cand_value;
                trace.push(value);
                step = (step + step).min(T::lit(MAX_STEP));
            }
            None => break,
        }
    }
    lifted = objective.lift(&psi);
    value = objective.value_lifted(&psi, &lifted);
    if !converged {
        let g = objective.gradient_lifted(&psi, &lifted);
        converged = g.norm() <= grad_tol;
    }
    StartOutcome {
        value,
        state: PureState::normalized(psi).expect("iterates stay on the sphere"),
        iterations,
        converged,
        trace,
    }
}

/// Runs `cfg.starts` independent starts (uniform on the sphere) in parallel
/// and keeps the best; ties go to the lowest start index.
pub fn optimize_on_sphere<T: Scalar, O: SphereObjective<T>>(
    objective: &O,
    sense: Sense,
    cfg: &OptConfig,
) -> OptResult<T> {
    let dim = objective.dim();
    let outcomes: Vec<StartOutcome<T>> = (0..cfg.starts.max(1))
        .into_par_iter()
        .map(|s| {
            let start = PureState::random(dim, cfg.seed.offset(s as u64))
                .expect("objective dimension is positive");
            descend_from(objective, start, sense, cfg)
        })
        .collect();
    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate() {
        let better = match sense {
            Sense::Minimize => o.value < outcomes[best].value,
            Sense::Maximize => o.value > outcomes[best].value,
        };
        if better {
            best = i;
        }
    }
    OptResult {
        best_value: outcomes[best].value,
        argmin: outcomes[best].state.clone(),
        best_start: best,
        per_start_values: outcomes.iter().map(|o| o.value).collect(),
        iterations_used: outcomes.iter().map(|o| o.iterations).collect(),
        converged_flags: outcomes.iter().map(|o| o.converged).collect(),
    }
}

/// Smallest output entropy found; an upper bound on `H_min(Φ)`.
pub fn minimize_output_entropy<T: Scalar>(ch: &RandomChannel<T>, cfg: &OptConfig) -> OptResult<T> {
    optimize_on_sphere(&OutputEntropy { channel: ch }, Sense::Minimize, cfg)
}

/// Largest `‖Φ(ψψ^*) - I/k‖_2` found (values are distances, not squares).
pub fn maximize_l2_distance<T: Scalar>(ch: &RandomChannel<T>, cfg: &OptConfig) -> OptResult<T> {
    let mut res = optimize_on_sphere(&L2Distance { channel: ch }, Sense::Maximize, cfg);
    res.best_value = res.best_value.max(T::zero()).sqrt();
    res.per_start_values
        .iter_mut()
        .for_each(|v| *v = v.max(T::zero()).sqrt());
    res
}

/// Largest operator norm of a complementary-channel output found.
pub fn maximize_output_sup_norm<T: Scalar>(ch: &RandomChannel<T>, cfg: &OptConfig) -> OptResult<T> {
    optimize_on_sphere(&OutputSupNorm { channel: ch }, Sense::Maximize, cfg)
}
