//! Bayesian phase estimation with rejection-sampling updates.
//!
//! The phase is tracked as an angle in radians under a normal prior, starting
//! from `N(π, π²)`. Each round samples a guess `θ` from the prior, sets
//! `M = ⌈1.25/σ⌉` (capped), runs a single shot of the checking circuit, and
//! refits the prior to the prior samples that survive rejection against the
//! measurement likelihood
//!
//! ```text
//! P(E = 0 | x; θ, M) = 1/2 + cos(M(θ − x))/2
//! P(E = 1 | x; θ, M) = 1/2 − cos(M(θ − x))/2
//! ```
//!
//! Samples are kept unwrapped; only the final mean is reduced to `[0, 2π)`.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::backend::Backend;
use crate::circuits::{append_controlled_power, Circuit, Eigenstate, Gate, HeisenbergParams, PowerMode};
use crate::error::{Error, Result};
use crate::estimators::{Method, PhaseEstimate};
use crate::rng::RngSeed;

/// Extra attempts at a round whose acceptance set is degenerate.
pub const MAX_RETRIES: usize = 10;

/// Normal prior over the phase angle (radians).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesPrior {
    pub mean: f64,
    pub variance: f64,
}

impl BayesPrior {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite() && mean.is_finite()) {
            return Err(Error::Input(format!("invalid prior N({mean}, {variance})")));
        }
        Ok(BayesPrior { mean, variance })
    }

    /// The wide starting prior `N(π, π²)`.
    pub fn initial() -> Self {
        BayesPrior { mean: PI, variance: PI * PI }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    fn normal(&self) -> Normal<f64> {
        Normal::new(self.mean, self.std_dev()).expect("validated prior")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BayesConfig {
    /// Number of rounds `N`.
    pub n_updates: usize,
    /// Prior samples drawn per update.
    pub n_samples: usize,
    /// Upper bound on the circuit power `M`.
    pub m_cap: u64,
    /// How prior samples are placed before the likelihood test.
    pub samples: SampleDomain,
}

/// Treatment of the angle samples drawn from the prior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleDomain {
    /// Reduce each sample into `[μ − π, μ + π)` around the prior mean.
    Window,
    /// Use samples as drawn from the (infinite-support) normal.
    Unwrapped,
    /// As `Window`, then re-centre the accepted set on its circular mean
    /// before taking mean and variance.
    #[default]
    Circular,
}

impl Default for BayesConfig {
    fn default() -> Self {
        BayesConfig { n_updates: 100, n_samples: 100, m_cap: 1 << 14, samples: SampleDomain::Circular }
    }
}

impl BayesConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_updates == 0 || self.n_samples == 0 || self.m_cap == 0 {
            return Err(Error::Input(format!("n_updates, n_samples and m_cap must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// Trace entry for one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesRound {
    pub theta: f64,
    pub m: u64,
    pub outcome: u8,
    pub posterior: BayesPrior,
    /// Accepted samples in the attempt that produced the posterior (0 if the
    /// round was discarded).
    pub accepted: usize,
    pub retries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesRun {
    pub estimate: PhaseEstimate,
    pub posterior: BayesPrior,
    pub rounds: Vec<BayesRound>,
}

/// Probability of reading `e` if the true phase angle were `x`.
pub fn likelihood(e: u8, x: f64, theta: f64, m: u64) -> f64 {
    let c = 0.5 * (m as f64 * (theta - x)).cos();
    if e == 0 {
        0.5 + c
    } else {
        0.5 - c
    }
}

/// `M = min(⌈1.25/σ⌉, m_cap)`.
pub fn choose_m(prior: &BayesPrior, m_cap: u64) -> u64 {
    let m = (1.25 / prior.std_dev()).ceil();
    if m >= m_cap as f64 {
        m_cap
    } else {
        (m as u64).max(1)
    }
}

/// Checking circuit: qubit 0 counts, qubits 1 and 2 hold the eigenstate.
/// `H`, controlled `U(Mτ)`, `Rz(−Mθ)`, `H`, measure. The counting qubit
/// reads 0 with probability `1/2 + cos(M(θ − 2πφ))/2`.
pub fn build_bayes_circuit(
    theta: f64,
    m: u64,
    params: HeisenbergParams,
    tau: f64,
    eigenstate: Eigenstate,
) -> Result<Circuit> {
    if m == 0 {
        return Err(Error::Precondition("M must be at least 1".into()));
    }
    let mut c = Circuit::new(3, 1);
    c.h(0);
    eigenstate.append_prep(&mut c, 1, 2);
    append_controlled_power(&mut c, params, tau, m, (1, 2), 0, PowerMode::Merged)?;
    c.push(Gate::Rz(-(m as f64) * theta), &[0], &[])?;
    c.h(0);
    c.measure(0, 0)?;
    Ok(c)
}

/// One rejection-sampling update: draw `n_samples` points from `prior`,
/// keep `x_i` when `likelihood(e, x_i, θ, M) > u_i`, and refit the normal.
///
/// Returns [`Error::DegenerateAcceptance`] when fewer than two samples (or
/// only identical samples) survive.
pub fn bayes_update(
    prior: &BayesPrior,
    e: u8,
    theta: f64,
    m: u64,
    n_samples: usize,
    domain: SampleDomain,
    rng: &mut impl Rng,
) -> Result<BayesPrior> {
    rejection_step(prior, e, theta, m, n_samples, domain, rng).map(|(post, _)| post)
}

fn rejection_step(
    prior: &BayesPrior,
    e: u8,
    theta: f64,
    m: u64,
    n_samples: usize,
    domain: SampleDomain,
    rng: &mut impl Rng,
) -> Result<(BayesPrior, usize)> {
    let normal = prior.normal();
    let place = |x: f64| match domain {
        SampleDomain::Unwrapped => x,
        SampleDomain::Window | SampleDomain::Circular => prior.mean + (x - prior.mean + PI).rem_euclid(TAU) - PI,
    };
    let xs: Vec<f64> = (0..n_samples).map(|_| place(normal.sample(rng))).collect();
    let us: Vec<f64> = (0..n_samples).map(|_| rng.random()).collect();
    let mut accepted: Vec<f64> =
        xs.into_iter().zip(us).filter(|&(x, u)| likelihood(e, x, theta, m) > u).map(|(x, _)| x).collect();
    if accepted.len() < 2 {
        return Err(Error::DegenerateAcceptance(accepted.len()));
    }
    if domain == SampleDomain::Circular {
        let (s, c) = accepted.iter().fold((0.0, 0.0), |(s, c), x| (s + x.sin(), c + x.cos()));
        let centre = s.atan2(c);
        for x in &mut accepted {
            *x = centre + (*x - centre + PI).rem_euclid(TAU) - PI;
        }
    }
    let n = accepted.len() as f64;
    let mean = accepted.iter().sum::<f64>() / n;
    let variance = accepted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if variance <= 0.0 {
        return Err(Error::DegenerateAcceptance(accepted.len()));
    }
    Ok((BayesPrior { mean, variance }, accepted.len()))
}

/// Full procedure from the `N(π, π²)` prior; `φ̂ = (μ_N mod 2π) / 2π`.
pub fn run_bayesian(
    cfg: &BayesConfig,
    params: HeisenbergParams,
    tau: f64,
    eigenstate: Eigenstate,
    seed: RngSeed,
    backend: &Backend,
) -> Result<BayesRun> {
    cfg.validate()?;
    let mut rng = seed.derive(0).rng();
    let mut prior = BayesPrior::initial();
    let mut rounds = Vec::with_capacity(cfg.n_updates);
    for round in 0..cfg.n_updates {
        let theta = prior.normal().sample(&mut rng);
        let m = choose_m(&prior, cfg.m_cap);
        let circuit = build_bayes_circuit(theta, m, params, tau, eigenstate)?;
        let outcome = backend.run_once(&circuit, seed.derive(1 + round as u64))? as u8;

        let mut retries = 0;
        let mut accepted = 0;
        loop {
            match rejection_step(&prior, outcome, theta, m, cfg.n_samples, cfg.samples, &mut rng) {
                Ok((post, kept)) => {
                    prior = post;
                    accepted = kept;
                    break;
                }
                // Out of retries: discard the round and keep the prior.
                Err(Error::DegenerateAcceptance(_)) if retries == MAX_RETRIES => break,
                Err(Error::DegenerateAcceptance(_)) => retries += 1,
                Err(e) => return Err(e),
            }
        }
        rounds.push(BayesRound { theta, m, outcome, posterior: prior, accepted, retries });
    }
    let estimate = PhaseEstimate::new(prior.mean.rem_euclid(TAU) / TAU, Method::Bayesian);
    Ok(BayesRun { estimate, posterior: prior, rounds })
}
