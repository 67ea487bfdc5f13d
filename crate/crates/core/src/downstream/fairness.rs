use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid points per axis in each refinement stage.
pub const GRID_POINTS: usize = 101;
/// Coarse-to-fine refinement stages.
pub const GRID_STAGES: usize = 3;
const BOX_PADDING_TAUS: f64 = 10.0;

/// Group-threshold logistic post-processing of a score vector under a
/// demographic-parity constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessProblem {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Group attribute, each entry 0 or 1.
    pub s: Vec<u8>,
    pub tau: f64,
    pub epsilon: f64,
}

impl FairnessProblem {
    pub fn new(x: Vec<f64>, y: Vec<f64>, s: Vec<u8>, tau: f64, epsilon: f64) -> Result<Self> {
        let p = Self { x, y, s, tau, epsilon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.x.len();
        if self.y.len() != n {
            return Err(Error::shape(format!("{n} targets"), self.y.len()));
        }
        if self.s.len() != n {
            return Err(Error::shape(format!("{n} group labels"), self.s.len()));
        }
        if let Some(g) = self.s.iter().find(|&&g| g > 1) {
            return Err(Error::InvalidInput(format!("group label {g} is not 0 or 1")));
        }
        if self.y.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidInput("targets must lie in [0, 1]".into()));
        }
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("scores must be finite".into()));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidInput(format!("temperature τ = {} must be positive", self.tau)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidInput(format!("parity tolerance ε = {} outside [0, 1]", self.epsilon)));
        }
        group_sizes(&self.s)?;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Decisions at an arbitrary score vector with this problem's groups and τ.
    pub fn decisions_at(&self, x: &[f64], theta: [f64; 2]) -> Vec<f64> {
        x.iter()
            .zip(&self.s)
            .map(|(&xi, &g)| sigmoid((xi - theta[usize::from(g)]) / self.tau))
            .collect()
    }
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

fn group_sizes(s: &[u8]) -> Result<[usize; 2]> {
    let n1 = s.iter().filter(|&&g| g == 1).count();
    let n0 = s.len() - n1;
    if n0 == 0 {
        return Err(Error::EmptyGroup(0));
    }
    if n1 == 0 {
        return Err(Error::EmptyGroup(1));
    }
    Ok([n0, n1])
}

/// `d_i = σ((x_i − θ_{s_i})/τ)`.
pub fn logistic_decisions(problem: &FairnessProblem, theta: [f64; 2]) -> Vec<f64> {
    problem.decisions_at(&problem.x, theta)
}

/// `|mean_{s=0} d − mean_{s=1} d|`.
pub fn parity_gap(decisions: &[f64], s: &[u8]) -> Result<f64> {
    if decisions.len() != s.len() {
        return Err(Error::shape(format!("{} decisions", s.len()), decisions.len()));
    }
    let [n0, n1] = group_sizes(s)?;
    let mut sums = [0.0, 0.0];
    for (&d, &g) in decisions.iter().zip(s) {
        sums[usize::from(g == 1)] += d;
    }
    Ok((sums[0] / n0 as f64 - sums[1] / n1 as f64).abs())
}

/// `(1/n) Σ (d_i − y_i)²`.
pub fn surrogate_loss(decisions: &[f64], y: &[f64]) -> f64 {
    decisions.iter().zip(y).map(|(d, t)| (d - t) * (d - t)).sum::<f64>() / y.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairOptimum {
    pub theta_fair: [f64; 2],
    pub loss_fair: f64,
    pub gap_fair: f64,
    /// Best unconstrained point among everything evaluated.
    pub theta_un: [f64; 2],
    pub loss_un: f64,
    pub gap_un: f64,
    pub effective_epsilon: f64,
    pub evaluations: usize,
    /// No grid point was feasible and the all-reject witness `θ = (+∞, +∞)`
    /// was returned.
    pub used_witness: bool,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    theta: [f64; 2],
    loss: f64,
    gap: f64,
}

fn better(a: &Candidate, b: &Option<Candidate>) -> bool {
    match b {
        None => true,
        Some(b) => a.loss < b.loss || (a.loss == b.loss && a.theta < b.theta),
    }
}

struct Search<'a> {
    problem: &'a FairnessProblem,
    evaluations: usize,
    best_any: Option<Candidate>,
}

impl Search<'_> {
    fn evaluate(&mut self, theta: [f64; 2]) -> Candidate {
        let d = logistic_decisions(self.problem, theta);
        let c = Candidate {
            theta,
            loss: surrogate_loss(&d, &self.problem.y),
            gap: parity_gap(&d, &self.problem.s).expect("validated groups"),
        };
        self.evaluations += 1;
        if better(&c, &self.best_any) {
            self.best_any = Some(c);
        }
        c
    }

    /// Coarse-to-fine grid search restricted to points with gap ≤ `limit`.
    fn refine(&mut self, lo: f64, hi: f64, limit: f64) -> Option<Candidate> {
        let mut bounds = [[lo, hi], [lo, hi]];
        let mut best: Option<Candidate> = None;
        for _ in 0..GRID_STAGES {
            let steps = [0, 1].map(|a| (bounds[a][1] - bounds[a][0]) / (GRID_POINTS - 1) as f64);
            for i in 0..GRID_POINTS {
                for j in 0..GRID_POINTS {
                    let theta = [bounds[0][0] + i as f64 * steps[0], bounds[1][0] + j as f64 * steps[1]];
                    let c = self.evaluate(theta);
                    if c.gap <= limit && better(&c, &best) {
                        best = Some(c);
                    }
                }
            }
            let Some(b) = best else { break };
            for a in 0..2 {
                bounds[a] = [(b.theta[a] - 2.0 * steps[a]).max(lo), (b.theta[a] + 2.0 * steps[a]).min(hi)];
            }
        }
        best
    }
}

/// Deterministic grid search for the constrained optimum on
/// `[min x − 10τ, max x + 10τ]²`. The unconstrained optimum is searched the
/// same way and reported as the best point over every evaluation, so its loss
/// never exceeds the constrained one.
pub fn fair_optimize(problem: &FairnessProblem, effective_epsilon: f64) -> Result<FairOptimum> {
    problem.validate()?;
    if !(effective_epsilon >= 0.0) {
        return Err(Error::InvalidInput(format!("effective tolerance {effective_epsilon} must be ≥ 0")));
    }
    let xmin = problem.x.iter().copied().fold(f64::INFINITY, f64::min);
    let xmax = problem.x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = xmin - BOX_PADDING_TAUS * problem.tau;
    let hi = xmax + BOX_PADDING_TAUS * problem.tau;

    let mut search = Search { problem, evaluations: 0, best_any: None };
    let fair = search.refine(lo, hi, effective_epsilon);
    search.refine(lo, hi, f64::INFINITY);
    let (fair, used_witness) = match fair {
        Some(c) => (c, false),
        None => (search.evaluate([f64::INFINITY, f64::INFINITY]), true),
    };
    let un = search.best_any.expect("grid is nonempty");
    Ok(FairOptimum {
        theta_fair: fair.theta,
        loss_fair: fair.loss,
        gap_fair: fair.gap,
        theta_un: un.theta,
        loss_un: un.loss,
        gap_un: un.gap,
        effective_epsilon,
        evaluations: search.evaluations,
        used_witness,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferCheck {
    pub passed: bool,
    pub observed_gap: f64,
    /// `ε − r/τ`.
    pub required: f64,
}

/// Passes iff the parity gap at `x̂` is at most `ε − r/τ`, which certifies
/// parity `≤ ε` at every score vector within sup-distance `r` of `x̂`.
pub fn feasibility_transfer_check(
    theta: [f64; 2],
    x_hat: &[f64],
    s: &[u8],
    r: f64,
    tau: f64,
    epsilon: f64,
) -> Result<TransferCheck> {
    if !(tau > 0.0) || !(r >= 0.0) {
        return Err(Error::InvalidInput(format!("need τ > 0 and r ≥ 0, got τ = {tau}, r = {r}")));
    }
    if x_hat.len() != s.len() {
        return Err(Error::shape(format!("{} scores", s.len()), x_hat.len()));
    }
    let slack = r / tau;
    if epsilon < slack {
        return Err(Error::InsufficientTolerance { epsilon, slack });
    }
    let d: Vec<f64> = x_hat
        .iter()
        .zip(s)
        .map(|(&xi, &g)| sigmoid((xi - theta[usize::from(g == 1)]) / tau))
        .collect();
    let observed_gap = parity_gap(&d, s)?;
    let required = epsilon - slack;
    Ok(TransferCheck { passed: observed_gap <= required, observed_gap, required })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffBounds {
    /// `L(d_fair) − L(d_un)`.
    pub loss_gap: f64,
    /// `(2/√n)·‖d_fair − d_un‖₂`.
    pub bound_l2: f64,
    /// `(2/n)·‖d_fair − d_un‖₂`, recorded for comparison only.
    pub bound_l2_stated: f64,
    /// `Δθ/(2τ)`.
    pub bound_shift: f64,
    pub within_l2: bool,
    pub within_shift: bool,
    pub within_l2_stated: bool,
}

pub fn tradeoff_bounds(d_fair: &[f64], d_un: &[f64], y: &[f64], tau: f64, delta_theta: f64) -> Result<TradeoffBounds> {
    let n = y.len();
    if d_fair.len() != n || d_un.len() != n {
        return Err(Error::shape(format!("{n} decisions"), format!("{} and {}", d_fair.len(), d_un.len())));
    }
    if n == 0 || !(tau > 0.0) || !(delta_theta >= 0.0) {
        return Err(Error::InvalidInput("need n ≥ 1, τ > 0 and Δθ ≥ 0".into()));
    }
    if d_fair.iter().chain(d_un).chain(y).any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidInput("decisions and targets must lie in [0, 1]".into()));
    }
    let loss_gap = surrogate_loss(d_fair, y) - surrogate_loss(d_un, y);
    let diff = d_fair.iter().zip(d_un).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let nf = n as f64;
    let bound_l2 = 2.0 / nf.sqrt() * diff;
    let bound_l2_stated = 2.0 / nf * diff;
    let bound_shift = delta_theta / (2.0 * tau);
    let mag = loss_gap.abs();
    Ok(TradeoffBounds {
        loss_gap,
        bound_l2,
        bound_l2_stated,
        bound_shift,
        within_l2: mag <= bound_l2,
        within_shift: mag <= bound_shift,
        within_l2_stated: mag <= bound_l2_stated,
    })
}
