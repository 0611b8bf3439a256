//! τ sweeps and the analysis applied to them.
//!
//! A sweep estimates `φ(τ)` at every point of a grid. The energy follows from
//! `ε = −2π dφ/dτ`, taken as the mean finite-difference slope of the
//! unwrapped series, and `R²` scores the raw estimates against the exact
//! phase with circular residuals.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::{Backend, NoiseModel};
use crate::bayes::{run_bayesian, BayesConfig, BayesRound};
use crate::circuits::{wrap_unit, Eigenstate, HeisenbergParams, PowerMode};
use crate::error::{Error, Result};
use crate::estimators::{
    build_base_pea_circuit, estimate_from_distribution, run_iterative, wrapped_difference, wrapped_error,
    CountingConfig, Method, MAX_COUNTING_QUBITS,
};
use crate::rng::RngSeed;

/// Grids coarser than this alias the `1/8` staircase.
pub const MIN_RESOLVED_STEPS: usize = 16;

/// `steps` evenly spaced points on `[0, 2π)`.
pub fn default_tau_grid(steps: usize) -> Vec<f64> {
    (0..steps).map(|i| i as f64 * TAU / steps as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub algorithm: Method,
    pub lambda: f64,
    pub tau_grid: Vec<f64>,
    pub shots: u64,
    pub noise: NoiseModel,
    pub seed: RngSeed,
    pub bayes: BayesConfig,
    pub n_counting: usize,
    pub eigenstate: Eigenstate,
    /// Compilation of `U^{2^k}` in the base circuit.
    pub base_powers: PowerMode,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            algorithm: Method::Base,
            lambda: 4.0,
            tau_grid: default_tau_grid(64),
            shots: 8192,
            noise: NoiseModel::noiseless(),
            seed: RngSeed(0),
            bayes: BayesConfig::default(),
            n_counting: 3,
            eigenstate: Eigenstate::TripletZero,
            base_powers: PowerMode::Repeated,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau_grid.is_empty() {
            return Err(Error::Input("tau_grid is empty".into()));
        }
        if self.tau_grid.iter().any(|t| !t.is_finite()) {
            return Err(Error::Input("tau_grid contains a non-finite value".into()));
        }
        if self.tau_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Input("tau_grid must be strictly increasing".into()));
        }
        if self.shots == 0 {
            return Err(Error::Input("shots must be at least 1".into()));
        }
        if !self.lambda.is_finite() {
            return Err(Error::Input(format!("lambda = {} is not finite", self.lambda)));
        }
        if !(1..=MAX_COUNTING_QUBITS).contains(&self.n_counting) {
            return Err(Error::Input(format!("n_counting = {} outside 1..={MAX_COUNTING_QUBITS}", self.n_counting)));
        }
        self.noise.validate()?;
        self.bayes.validate()
    }

    pub fn params(&self) -> HeisenbergParams {
        HeisenbergParams { lambda: self.lambda }
    }

    /// Energy of the prepared eigenstate.
    pub fn true_energy(&self) -> f64 {
        self.eigenstate.energy(self.params())
    }

    pub fn true_phase(&self, tau: f64) -> f64 {
        self.eigenstate.phase(self.params(), tau)
    }

    pub fn is_low_resolution(&self) -> bool {
        self.tau_grid.len() < MIN_RESOLVED_STEPS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowFlag {
    #[default]
    Ok,
    /// The circular resultant vanished; no estimate.
    UndefinedMean,
}

impl RowFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            RowFlag::Ok => "ok",
            RowFlag::UndefinedMean => "undefined_mean",
        }
    }
}

impl std::str::FromStr for RowFlag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ok" => Ok(RowFlag::Ok),
            "undefined_mean" => Ok(RowFlag::UndefinedMean),
            other => Err(Error::Input(format!("unknown row flag {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub phi_hat: Option<f64>,
    pub method: Method,
    pub flag: RowFlag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesTrace {
    pub tau: f64,
    pub rounds: Vec<BayesRound>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    /// Per-point round logs; only the Bayesian algorithm fills these.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub traces: Vec<BayesTrace>,
}

impl SweepResult {
    /// Energy, percent error and `R²` against the configured eigenstate.
    pub fn report(&self) -> Result<EnergyReport> {
        let mut report = estimate_energy(&self.rows, Some(self.config.true_energy()))?;
        report.r_squared = r_squared_with(&self.rows, |t| self.config.true_phase(t));
        Ok(report)
    }
}

/// Run `cfg.algorithm` at every grid point. Point `i` draws from
/// `cfg.seed.derive(i)`; rows come back in grid order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let backend = Backend::with_noise(cfg.noise)?;
    let points: Vec<(SweepRow, Option<BayesTrace>)> = cfg
        .tau_grid
        .par_iter()
        .enumerate()
        .map(|(i, &tau)| run_point(cfg, &backend, tau, cfg.seed.derive(i as u64)))
        .collect::<Result<_>>()?;
    let (rows, traces): (Vec<_>, Vec<_>) = points.into_iter().unzip();
    Ok(SweepResult { config: cfg.clone(), rows, traces: traces.into_iter().flatten().collect() })
}

fn run_point(cfg: &SweepConfig, backend: &Backend, tau: f64, seed: RngSeed) -> Result<(SweepRow, Option<BayesTrace>)> {
    let params = cfg.params();
    let method = cfg.algorithm;
    let row = |phi_hat, flag| SweepRow { tau, phi_hat, method, flag };
    match method {
        Method::Base | Method::Circular => {
            let c = build_base_pea_circuit(cfg.n_counting, params, tau, cfg.eigenstate, cfg.base_powers)?;
            let dist = backend.run(&c, cfg.shots, seed)?;
            match estimate_from_distribution(&dist, cfg.n_counting, method) {
                Ok(est) => Ok((row(Some(est.value), RowFlag::Ok), None)),
                Err(Error::UndefinedMean(_)) => Ok((row(None, RowFlag::UndefinedMean), None)),
                Err(e) => Err(e),
            }
        }
        Method::Iterative => {
            let counting = CountingConfig { n_counting: cfg.n_counting, shots: cfg.shots };
            let (_, est) = run_iterative(&counting, params, tau, cfg.eigenstate, seed, backend)?;
            Ok((row(Some(est.value), RowFlag::Ok), None))
        }
        Method::Bayesian => {
            let run = run_bayesian(&cfg.bayes, params, tau, cfg.eigenstate, seed, backend)?;
            Ok((row(Some(run.estimate.value), RowFlag::Ok), Some(BayesTrace { tau, rounds: run.rounds })))
        }
    }
}

/// Shift each valid phase by an integer so consecutive valid values differ by
/// at most `1/2`. The first valid value is reduced into `[0, 1)`; missing
/// values stay missing and are bridged.
pub fn unwrap_phases(phases: &[Option<f64>]) -> Vec<Option<f64>> {
    let mut prev: Option<f64> = None;
    phases
        .iter()
        .map(|p| {
            p.map(|x| {
                let u = match prev {
                    None => wrap_unit(x),
                    Some(q) => {
                        let d = x - q;
                        q + d - d.round()
                    }
                };
                prev = Some(u);
                u
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub epsilon_hat: f64,
    pub percent_error: Option<f64>,
    pub r_squared: Option<f64>,
}

fn valid_points(rows: &[SweepRow]) -> Vec<(f64, f64)> {
    rows.iter().filter_map(|r| r.phi_hat.map(|p| (r.tau, p))).collect()
}

/// `ε̂ = −2π · mean(Δφ/Δτ)` over consecutive valid rows of the unwrapped
/// series. `r_squared` is left empty.
pub fn estimate_energy(rows: &[SweepRow], true_epsilon: Option<f64>) -> Result<EnergyReport> {
    let points = valid_points(rows);
    if points.len() < 2 {
        return Err(Error::Input(format!("energy needs at least 2 valid rows, got {}", points.len())));
    }
    let unwrapped = unwrap_phases(&points.iter().map(|&(_, p)| Some(p)).collect::<Vec<_>>());
    let slopes: Vec<f64> = points
        .windows(2)
        .zip(unwrapped.windows(2))
        .map(|(t, u)| (u[1].unwrap() - u[0].unwrap()) / (t[1].0 - t[0].0))
        .collect();
    let epsilon_hat = -TAU * slopes.iter().sum::<f64>() / slopes.len() as f64;
    let percent_error = true_epsilon.filter(|&e| e != 0.0).map(|e| 100.0 * (epsilon_hat - e).abs() / e.abs());
    Ok(EnergyReport { epsilon_hat, percent_error, r_squared: None })
}

fn r2(observed: &[f64], residuals: impl Iterator<Item = f64>) -> Option<f64> {
    if observed.iter().all(|&y| y == observed[0]) {
        return None;
    }
    let mean = observed.iter().sum::<f64>() / observed.len() as f64;
    let ss_tot: f64 = observed.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = residuals.map(|r| r * r).sum();
    (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot)
}

/// Plain `1 − SS_res/SS_tot`. `None` when the observations are constant.
pub fn coefficient_of_determination(observed: &[f64], predicted: &[f64]) -> Option<f64> {
    assert_eq!(observed.len(), predicted.len());
    r2(observed, observed.iter().zip(predicted).map(|(y, f)| y - f))
}

/// `R²` of the valid rows against `truth(τ)` using wrapped residuals.
pub fn r_squared_with(rows: &[SweepRow], truth: impl Fn(f64) -> f64) -> Option<f64> {
    let points = valid_points(rows);
    if points.len() < 2 {
        return None;
    }
    let observed: Vec<f64> = points.iter().map(|&(_, p)| p).collect();
    r2(&observed, points.iter().map(|&(t, p)| wrapped_difference(p, truth(t))))
}

/// `R²` against the default eigenstate's phase `(−(λ/4)τ/2π) mod 1`.
pub fn r_squared(rows: &[SweepRow], lambda: f64) -> Option<f64> {
    let params = HeisenbergParams { lambda };
    r_squared_with(rows, |t| Eigenstate::TripletZero.phase(params, t))
}

/// Mean circular distance between the valid rows and `truth(τ)`.
pub fn mean_wrapped_error(rows: &[SweepRow], truth: impl Fn(f64) -> f64) -> Option<f64> {
    let points = valid_points(rows);
    (!points.is_empty())
        .then(|| points.iter().map(|&(t, p)| wrapped_error(p, truth(t))).sum::<f64>() / points.len() as f64)
}

/// One line of the four-algorithm comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub algorithm: Method,
    pub epsilon_hat: f64,
    pub percent_error: Option<f64>,
    pub r_squared: Option<f64>,
}

/// Run every algorithm with `cfg` (its `algorithm` field is ignored).
pub fn compare(cfg: &SweepConfig) -> Result<Vec<CompareRow>> {
    Method::ALL
        .iter()
        .map(|&algorithm| {
            let result = run_sweep(&SweepConfig { algorithm, ..cfg.clone() })?;
            let report = result.report()?;
            Ok(CompareRow {
                algorithm,
                epsilon_hat: report.epsilon_hat,
                percent_error: report.percent_error,
                r_squared: report.r_squared,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(points: &[(f64, f64)]) -> Vec<SweepRow> {
        points
            .iter()
            .map(|&(tau, p)| SweepRow { tau, phi_hat: Some(p), method: Method::Base, flag: RowFlag::Ok })
            .collect()
    }

    fn exact(lambda: f64, steps: usize) -> Vec<SweepRow> {
        let params = HeisenbergParams { lambda };
        let pts: Vec<_> =
            default_tau_grid(steps).into_iter().map(|t| (t, Eigenstate::TripletZero.phase(params, t))).collect();
        rows(&pts)
    }

    #[test]
    fn grid_shape() {
        let g = default_tau_grid(64);
        assert_eq!(g.len(), 64);
        assert_eq!(g[0], 0.0);
        assert!((g[63] - TAU * 63.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn unwrap_examples() {
        let u = unwrap_phases(&[Some(0.9), Some(0.95), Some(0.0), Some(0.05)]);
        let want = [0.9, 0.95, 1.0, 1.05];
        for (a, b) in u.iter().zip(want) {
            assert!((a.unwrap() - b).abs() < 1e-12);
        }
        let c = vec![Some(0.3); 5];
        assert_eq!(unwrap_phases(&c), c);
    }

    #[test]
    fn unwrap_bridges_gaps() {
        let u = unwrap_phases(&[Some(1.2), None, Some(0.1), Some(0.95)]);
        assert!((u[0].unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(u[1], None);
        assert!((u[2].unwrap() - 0.1).abs() < 1e-12);
        assert!((u[3].unwrap() + 0.05).abs() < 1e-12);
    }

    #[test]
    fn exact_series_is_a_descending_line() {
        let r = exact(4.0, 64);
        let u = unwrap_phases(&r.iter().map(|r| r.phi_hat).collect::<Vec<_>>());
        for (row, p) in r.iter().zip(&u) {
            assert!((p.unwrap() + row.tau / TAU).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_of_exact_series() {
        let report = estimate_energy(&exact(4.0, 64), Some(1.0)).unwrap();
        assert!((report.epsilon_hat - 1.0).abs() < 1e-12);
        assert!(report.percent_error.unwrap() < 1e-9);
        let report = estimate_energy(&exact(2.0, 64), Some(0.5)).unwrap();
        assert!((report.epsilon_hat - 0.5).abs() < 1e-12);
    }

    #[test]
    fn energy_of_constant_series() {
        let r = rows(&[(0.0, 0.4), (1.0, 0.4), (2.0, 0.4)]);
        let report = estimate_energy(&r, Some(1.0)).unwrap();
        assert_eq!(report.epsilon_hat, 0.0);
        assert_eq!(report.percent_error, Some(100.0));
        assert_eq!(estimate_energy(&r, Some(0.0)).unwrap().percent_error, None);
    }

    #[test]
    fn energy_needs_two_valid_rows() {
        let mut r = rows(&[(0.0, 0.4), (1.0, 0.3)]);
        assert!(matches!(estimate_energy(&r[..1], None), Err(Error::Input(_))));
        r[1].phi_hat = None;
        assert!(matches!(estimate_energy(&r, None), Err(Error::Input(_))));
    }

    #[test]
    fn r_squared_examples() {
        assert_eq!(r_squared(&exact(4.0, 64), 4.0), Some(1.0));
        let obs = [0.1, 0.5, 0.3];
        assert_eq!(coefficient_of_determination(&obs, &[0.3; 3]), Some(0.0));
        assert_eq!(coefficient_of_determination(&[0.2; 3], &[0.2; 3]), None);
        let r = rows(&[(0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(r_squared(&r, 4.0), None);
    }

    #[test]
    fn r_squared_ignores_the_seam() {
        // Truth just below 1, estimate just above 0.
        let mut r = exact(4.0, 64);
        r[1].phi_hat = Some(0.001);
        let r2 = r_squared(&r, 4.0).unwrap();
        assert!(r2 > 0.99, "{r2}");
    }

    #[test]
    fn r_squared_can_go_negative() {
        // Estimates that run the wrong way round the circle.
        let params = HeisenbergParams::default();
        let pts: Vec<_> = default_tau_grid(64)
            .into_iter()
            .map(|t| (t, wrap_unit(0.5 - Eigenstate::TripletZero.phase(params, t))))
            .collect();
        assert!(r_squared(&rows(&pts), 4.0).unwrap() < 0.0);
    }

    #[test]
    fn base_sweep_is_a_staircase() {
        let cfg = SweepConfig { shots: 512, base_powers: PowerMode::Merged, ..Default::default() };
        let result = run_sweep(&cfg).unwrap();
        assert_eq!(result.rows.len(), 64);
        for row in &result.rows {
            let p = row.phi_hat.unwrap();
            assert_eq!((p * 8.0).fract(), 0.0);
            assert!(wrapped_error(p, cfg.true_phase(row.tau)) <= 1.0 / 16.0 + 1e-12);
        }
        let report = result.report().unwrap();
        assert!(report.percent_error.unwrap() < 5.0, "{report:?}");
    }

    #[test]
    fn circular_sweep_tracks_truth() {
        let cfg = SweepConfig {
            algorithm: Method::Circular,
            shots: 2048,
            base_powers: PowerMode::Merged,
            ..Default::default()
        };
        let result = run_sweep(&cfg).unwrap();
        let err = mean_wrapped_error(&result.rows, |t| cfg.true_phase(t)).unwrap();
        assert!(err < 0.02, "{err}");
        assert!(result.report().unwrap().r_squared.unwrap() > 0.99);
    }

    #[test]
    fn sweeps_are_deterministic() {
        for algorithm in Method::ALL {
            let cfg = SweepConfig {
                algorithm,
                tau_grid: default_tau_grid(8),
                shots: 256,
                bayes: BayesConfig { n_updates: 20, ..Default::default() },
                noise: NoiseModel::new(0.01, 0.01).unwrap(),
                ..Default::default()
            };
            assert_eq!(run_sweep(&cfg).unwrap(), run_sweep(&cfg).unwrap());
        }
    }

    #[test]
    fn single_point_grid() {
        for algorithm in Method::ALL {
            let cfg = SweepConfig { algorithm, tau_grid: vec![1.0], shots: 64, ..Default::default() };
            let result = run_sweep(&cfg).unwrap();
            assert_eq!(result.rows.len(), 1);
            assert_eq!(result.traces.len(), usize::from(algorithm == Method::Bayesian));
        }
    }

    #[test]
    fn config_validation() {
        let bad = [
            SweepConfig { tau_grid: vec![], ..Default::default() },
            SweepConfig { tau_grid: vec![1.0, 1.0], ..Default::default() },
            SweepConfig { shots: 0, ..Default::default() },
            SweepConfig { noise: NoiseModel { depolarizing_p: 2.0, readout_flip_p: 0.0 }, ..Default::default() },
        ];
        for cfg in bad {
            assert!(run_sweep(&cfg).is_err());
        }
        assert!(SweepConfig { tau_grid: default_tau_grid(2), ..Default::default() }.is_low_resolution());
        assert!(!SweepConfig::default().is_low_resolution());
    }

    #[test]
    fn config_json_fills_defaults() {
        let cfg: SweepConfig = serde_json::from_str(r#"{"algorithm": "iterative", "shots": 100}"#).unwrap();
        assert_eq!(cfg.algorithm, Method::Iterative);
        assert_eq!(cfg.shots, 100);
        assert_eq!(cfg.tau_grid.len(), 64);
        let back: SweepConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
