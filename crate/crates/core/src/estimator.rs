//! Steady-state probabilities from simulated trajectories with the
//! two-state Markov chain approach, plus the regression that predicts the
//! speedup of the grouped simulator.
//!
//! The trajectory is projected onto a 0/1 process by a predicate. Fitting a
//! two-state chain with switching probabilities `a = P(0 -> 1)` and
//! `b = P(1 -> 0)` gives the burn-in
//!
//! ```text
//! M = ceil( ln(eps (a + b) / max(a, b)) / ln|1 - a - b| )
//! ```
//!
//! and the sample size
//!
//! ```text
//! N = ceil( a b (2 - a - b) / (a + b)^3 * (z / r)^2 ),   z = Phi^-1((1 + c) / 2)
//! ```
//!
//! for precision `r` at confidence `c`. The projected process is rarely
//! Markov itself, so the fit uses the smallest lag `k` at which the process
//! sampled every `k` steps passes a first- against second-order BIC test,
//! and `M` and `N` are scaled by `k`. The run is extended and the fit redone
//! until it is at least `M + N` long, and the estimate is the frequency over
//! the `N` steps after burn-in.

use std::time::{Duration, Instant};

use statrs::distribution::{ContinuousCDF, Normal};

use crate::engine::{
    stationary_distribution, BoundPredicate, Draws, Predicate, Stepper, TransitionOperator,
    MAX_EXACT_NODES,
};
use crate::error::{PbnError, Result};
use crate::model::{Model, State};

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationRequest {
    /// Half-width of the confidence interval.
    pub precision: f64,
    pub confidence: f64,
    /// Steps in the first run.
    pub pilot_len: u64,
    /// Distance to stationarity tolerated after burn-in.
    pub burn_in_epsilon: f64,
    /// Upper bound on simulated steps.
    pub max_steps: u64,
    /// Times the pilot may double while the predicate never switches.
    pub max_pilot_doublings: u32,
}

impl EstimationRequest {
    pub fn new(precision: f64, confidence: f64) -> Result<Self> {
        if !(precision > 0.0 && precision < 1.0) {
            return Err(PbnError::InvalidArgument(format!(
                "precision {precision} not in (0,1)"
            )));
        }
        if !(confidence > 0.0 && confidence < 1.0) {
            return Err(PbnError::InvalidArgument(format!(
                "confidence {confidence} not in (0,1)"
            )));
        }
        Ok(EstimationRequest {
            precision,
            confidence,
            pilot_len: 10_000,
            burn_in_epsilon: 1e-10,
            max_steps: 10_000_000_000,
            max_pilot_doublings: 6,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub estimate: f64,
    /// Steps averaged over.
    pub sample_size: u64,
    pub burn_in: u64,
    /// All simulated steps, burn-in and any surplus included.
    pub steps: u64,
    pub wall_time: Duration,
    /// The predicate never switched, so the variance could not be fitted.
    pub degenerate: bool,
}

/// Burn-in and sample size for a fitted two-state chain.
pub fn two_state_sizes(
    a: f64,
    b: f64,
    precision: f64,
    confidence: f64,
    epsilon: f64,
) -> (u64, u64) {
    let s = a + b;
    let lambda = (1.0 - s).abs();
    let burn_in = if lambda == 0.0 {
        0
    } else {
        ((epsilon * s / a.max(b)).ln() / lambda.ln())
            .ceil()
            .max(0.0) as u64
    };
    let z = Normal::standard().inverse_cdf((1.0 + confidence) / 2.0);
    let n = a * b * (2.0 - s) / s.powi(3) * (z / precision).powi(2);
    (burn_in, n.ceil().max(1.0) as u64)
}

/// Fewest thinned samples a lag is tested on.
const MIN_THINNED: u64 = 1000;

/// The projected 0/1 process of one predicate.
struct Projection {
    predicate: BoundPredicate,
    bits: Vec<u64>,
    len: u64,
}

impl Projection {
    fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(64) {
            self.bits.push(0);
        }
        if bit {
            *self.bits.last_mut().unwrap() |= 1 << (self.len % 64);
        }
        self.len += 1;
    }

    #[inline]
    fn bit(&self, i: u64) -> usize {
        ((self.bits[(i / 64) as usize] >> (i % 64)) & 1) as usize
    }

    fn ones_in(&self, from: u64, to: u64) -> u64 {
        (from..to).map(|i| self.bit(i) as u64).sum()
    }

    /// Switching probabilities of the process sampled every `lag` steps.
    fn switching(&self, lag: u64) -> Option<(f64, f64)> {
        let mut counts = [[0u64; 2]; 2];
        let mut i = 0;
        while i + lag < self.len {
            counts[self.bit(i)][self.bit(i + lag)] += 1;
            i += lag;
        }
        let [[s00, s01], [s10, s11]] = counts;
        if s01 == 0 || s10 == 0 {
            return None;
        }
        Some((
            s01 as f64 / (s00 + s01) as f64,
            s10 as f64 / (s10 + s11) as f64,
        ))
    }

    /// Whether a first-order chain explains the process sampled every `lag`
    /// steps as well as a second-order one, by BIC on the G^2 statistic.
    fn first_order(&self, lag: u64) -> bool {
        let mut triples = [[[0f64; 2]; 2]; 2];
        let mut total = 0f64;
        let mut i = 0;
        while i + 2 * lag < self.len {
            triples[self.bit(i)][self.bit(i + lag)][self.bit(i + 2 * lag)] += 1.0;
            total += 1.0;
            i += lag;
        }
        let mut g2 = 0.0;
        for j in 0..2 {
            let mid: f64 = (0..2)
                .flat_map(|a| (0..2).map(move |c| (a, c)))
                .map(|(a, c)| triples[a][j][c])
                .sum();
            for a in 0..2 {
                let head = triples[a][j][0] + triples[a][j][1];
                for c in 0..2 {
                    let tail = triples[0][j][c] + triples[1][j][c];
                    let observed = triples[a][j][c];
                    if observed > 0.0 {
                        g2 += 2.0 * observed * (observed * mid / (head * tail)).ln();
                    }
                }
            }
        }
        g2 - 2.0 * total.ln() < 0.0
    }

    /// Smallest lag whose thinned process looks first order.
    fn thinning(&self) -> u64 {
        let mut lag = 1;
        while self.len / (lag + 1) >= MIN_THINNED && !self.first_order(lag) {
            lag += 1;
        }
        lag
    }

    /// Burn-in and sample size in steps, or `None` while the predicate has
    /// not switched both ways.
    fn sizes(&self, req: &EstimationRequest) -> Option<(u64, u64)> {
        self.switching(1)?;
        let lag = self.thinning();
        let (a, b) = self.switching(lag).or_else(|| self.switching(1))?;
        let (m, n) = two_state_sizes(a, b, req.precision, req.confidence, req.burn_in_epsilon);
        Some((m.saturating_mul(lag), n.saturating_mul(lag)))
    }
}

/// Estimates one steady-state probability from a single trajectory started
/// at the engine state `s0`.
pub fn estimate_steady_state<E, D>(
    engine: &E,
    s0: &State,
    predicate: &Predicate,
    req: &EstimationRequest,
    draws: &mut D,
) -> Result<EstimationResult>
where
    E: Stepper + ?Sized,
    D: Draws + ?Sized,
{
    let mut all = estimate_steady_states(engine, s0, std::slice::from_ref(predicate), req, draws)?;
    Ok(all.pop().unwrap())
}

/// Estimates several probabilities from one shared trajectory, run until
/// every one of them meets its stopping rule.
pub fn estimate_steady_states<E, D>(
    engine: &E,
    s0: &State,
    predicates: &[Predicate],
    req: &EstimationRequest,
    draws: &mut D,
) -> Result<Vec<EstimationResult>>
where
    E: Stepper + ?Sized,
    D: Draws + ?Sized,
{
    let start = Instant::now();
    let mut projections = predicates
        .iter()
        .map(|p| {
            Ok(Projection {
                predicate: p.bind(engine)?,
                bits: Vec::new(),
                len: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut state = s0.clone();
    let mut scratch = State::zeros(state.len());
    let mut run_to = |target: u64, projections: &mut Vec<Projection>| {
        let have = projections[0].len;
        for _ in have..target {
            engine.step(&mut state, &mut scratch, draws);
            for p in projections.iter_mut() {
                let bit = p.predicate.eval(&state);
                p.push(bit);
            }
        }
    };

    let mut pilot = req.pilot_len.max(2);
    run_to(pilot, &mut projections);
    let mut doublings = 0;
    while projections.iter().any(|p| p.switching(1).is_none())
        && doublings < req.max_pilot_doublings
    {
        pilot = pilot.saturating_mul(2).min(req.max_steps);
        run_to(pilot, &mut projections);
        doublings += 1;
    }

    // per predicate: Some((burn_in, n)) or None when degenerate
    let mut plan: Vec<Option<(u64, u64)>>;
    loop {
        plan = projections.iter().map(|p| p.sizes(req)).collect();
        let needed = plan
            .iter()
            .flatten()
            .map(|&(m, n)| m.saturating_add(n))
            .max()
            .unwrap_or(0);
        let have = projections[0].len;
        if needed <= have {
            break;
        }
        if needed > req.max_steps {
            return Err(PbnError::ResourceLimit(format!(
                "estimate needs {needed} steps, limit {}",
                req.max_steps
            )));
        }
        run_to(needed, &mut projections);
    }

    let wall_time = start.elapsed();
    Ok(projections
        .iter()
        .zip(plan)
        .map(|(p, sizes)| match sizes {
            Some((burn_in, n)) => EstimationResult {
                estimate: p.ones_in(burn_in, burn_in + n) as f64 / n as f64,
                sample_size: n,
                burn_in,
                steps: p.len,
                wall_time,
                degenerate: false,
            },
            None => EstimationResult {
                estimate: p.ones_in(0, p.len) as f64 / p.len as f64,
                sample_size: p.len,
                burn_in: 0,
                steps: p.len,
                wall_time,
                degenerate: true,
            },
        })
        .collect())
}

/// Polynomial regression of the grouped-over-node-by-node speedup on the
/// leaf fraction and the density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedupModel {
    pub coefficients: [f64; 5],
}

impl SpeedupModel {
    /// Coefficients fitted on 2307 random networks.
    pub const FITTED: SpeedupModel = SpeedupModel {
        coefficients: [2.89, 2.71, 2.40, -1.65, 0.71],
    };

    pub fn predict(&self, leaf_fraction: f64, density: f64) -> f64 {
        let [c0, c1, c2, c3, c4] = self.coefficients;
        c0 + c1 * leaf_fraction
            + c2 * leaf_fraction * leaf_fraction
            + c3 * density
            + c4 * density * density
    }
}

/// Predicted speedup for a leaf fraction in `[0, 1]` and a density `> 0`.
pub fn predict_speedup(leaf_fraction: f64, density: f64) -> f64 {
    SpeedupModel::FITTED.predict(leaf_fraction, density)
}

/// Exact stationary probability of `predicate` by power iteration.
pub fn marginal_steady_state_exact(m: &Model, predicate: &Predicate) -> Result<f64> {
    if m.len() > MAX_EXACT_NODES {
        return Err(PbnError::ResourceLimit(format!(
            "exact steady state limited to {MAX_EXACT_NODES} nodes, got {}",
            m.len()
        )));
    }
    let pi = stationary_distribution(&TransitionOperator::new(m)?, 1e-12, 10_000_000)?;
    Ok(pi
        .iter()
        .enumerate()
        .filter(|&(s, _)| predicate.eval_model(&State::from_index(m.len(), s as u64)))
        .map(|(_, w)| w)
        .sum())
}
