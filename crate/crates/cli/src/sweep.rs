//! Monte-Carlo comparison of the greedy allocator against the exact optimum
//! and the ALL / MANUAL strategies on random instances.
//!
//! Trial `i` of a sweep draws from `ChaCha8Rng::seed_from_u64(seed)` with
//! stream `i`, so results do not depend on thread count or trial order.

use afv_core::allocator::{baseline_all, baseline_manual, fap_exact, fap_greedy, FapInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n_devices: usize,
    pub n_requests: usize,
    pub fc_ratios: Vec<f64>,
    pub n_trials: usize,
    pub mu_c: f64,
    pub sigma_factor: f64,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_devices: 5,
            n_requests: 10,
            fc_ratios: vec![0.1, 0.5, 1.0, 2.0, 5.0, 10.0],
            n_trials: 1000,
            mu_c: 1.0,
            sigma_factor: 0.1,
            seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_trials < 1 {
            return Err("at least one trial is needed".into());
        }
        if !(self.sigma_factor >= 0.0) || !(self.mu_c > 0.0) {
            return Err("sigma factor must be non-negative and mu_c positive".into());
        }
        if self.n_devices < 1 || self.n_requests < 1 {
            return Err("need at least one device and one request".into());
        }
        if self.fc_ratios.iter().any(|r| !(*r >= 0.0)) {
            return Err("cost ratios must be non-negative".into());
        }
        Ok(())
    }
}

fn clamped_normal(rng: &mut ChaCha8Rng, mean: f64, sigma_factor: f64) -> f64 {
    let normal = Normal::new(mean, sigma_factor * mean).expect("finite parameters");
    normal.sample(rng).max(0.0)
}

/// One random function type: f ~ N(ratio·μc, σ·ratio·μc) per device and
/// c ~ N(μc, σ·μc) per (request, device), both clamped at zero. Each
/// request has a uniformly random origin where it is served for free.
pub fn random_instance(rng: &mut ChaCha8Rng, config: &SweepConfig, ratio: f64) -> FapInstance {
    let mu_f = ratio * config.mu_c;
    let impl_cost = (0..config.n_devices)
        .map(|_| clamped_normal(rng, mu_f, config.sigma_factor))
        .collect();
    let mut origins = Vec::with_capacity(config.n_requests);
    let comm = (0..config.n_requests)
        .map(|_| {
            let origin = rng.random_range(0..config.n_devices);
            origins.push(Some(origin as u64));
            (0..config.n_devices)
                .map(|d| {
                    let c = clamped_normal(rng, config.mu_c, config.sigma_factor);
                    if d == origin {
                        0.0
                    } else {
                        c
                    }
                })
                .collect()
        })
        .collect();
    let mut inst = FapInstance::dense(impl_cost, comm);
    inst.origins = origins;
    inst
}

/// Total cost of each strategy over the function types of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrialCosts {
    pub greedy: f64,
    pub exact: f64,
    pub all: f64,
    pub manual: f64,
}

pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

pub fn run_trial(config: &SweepConfig, ratio: f64, n_functions: usize, trial: usize) -> TrialCosts {
    let mut rng = trial_rng(config.seed, trial);
    let mut costs = TrialCosts::default();
    for _ in 0..n_functions {
        let inst = random_instance(&mut rng, config, ratio);
        let manual_seed: u64 = rng.random();
        costs.greedy += fap_greedy(&inst).expect("dense instance").total_cost;
        costs.exact += fap_exact(&inst).expect("small instance").total_cost;
        costs.all += baseline_all(&inst).expect("dense instance").total_cost;
        costs.manual += baseline_manual(&inst, manual_seed)
            .expect("dense instance")
            .total_cost;
    }
    costs
}

pub fn run_trials(config: &SweepConfig, ratio: f64, n_functions: usize) -> Vec<TrialCosts> {
    (0..config.n_trials)
        .into_par_iter()
        .map(|t| run_trial(config, ratio, n_functions, t))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Sample mean and standard deviation (n-1 denominator; 0 for one sample).
pub fn mean_std(values: impl IntoIterator<Item = f64>) -> MeanStd {
    let v: Vec<f64> = values.into_iter().collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    MeanStd { mean, std }
}

fn reduction_pct(baseline: f64, greedy: f64) -> f64 {
    if baseline > 0.0 {
        100.0 * (baseline - greedy) / baseline
    } else {
        0.0
    }
}

pub const STRATEGIES: [&str; 3] = ["optimal", "all", "manual"];

fn baseline_of(c: &TrialCosts, strategy: &str) -> f64 {
    match strategy {
        "optimal" => c.exact,
        "all" => c.all,
        "manual" => c.manual,
        _ => unreachable!("unknown strategy {strategy}"),
    }
}

/// Cost reduction of the greedy allocator relative to `strategy`.
pub fn reduction_stats(trials: &[TrialCosts], strategy: &str) -> MeanStd {
    mean_std(
        trials
            .iter()
            .map(|c| reduction_pct(baseline_of(c, strategy), c.greedy)),
    )
}

pub fn saving_stats(trials: &[TrialCosts], strategy: &str) -> MeanStd {
    mean_std(trials.iter().map(|c| baseline_of(c, strategy) - c.greedy))
}

/// Mean relative excess of the greedy cost over the optimum, in percent.
pub fn gap_pct(trials: &[TrialCosts]) -> f64 {
    mean_std(trials.iter().map(|c| {
        if c.exact > 0.0 {
            100.0 * (c.greedy - c.exact) / c.exact
        } else {
            0.0
        }
    }))
    .mean
}

/// Mean of |greedy - ALL| / ALL, in percent.
pub fn all_deviation_pct(trials: &[TrialCosts]) -> f64 {
    mean_std(trials.iter().map(|c| {
        if c.all > 0.0 {
            100.0 * (c.greedy - c.all).abs() / c.all
        } else {
            0.0
        }
    }))
    .mean
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRow {
    pub ratio: f64,
    pub strategy: &'static str,
    pub mean_cost_reduction_pct_vs_strategy: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionsRow {
    pub n_functions: usize,
    pub strategy: &'static str,
    pub mean_cost_reduction_pct_vs_strategy: f64,
    pub std: f64,
    pub mean_cost_saving: f64,
}

pub fn sweep_ratio(config: &SweepConfig) -> Vec<RatioRow> {
    let mut rows = Vec::new();
    for &ratio in &config.fc_ratios {
        let trials = run_trials(config, ratio, 1);
        for strategy in STRATEGIES {
            let s = reduction_stats(&trials, strategy);
            rows.push(RatioRow {
                ratio,
                strategy,
                mean_cost_reduction_pct_vs_strategy: s.mean,
                std: s.std,
            });
        }
    }
    rows
}

pub fn sweep_functions(config: &SweepConfig, ratio: f64, counts: &[usize]) -> Vec<FunctionsRow> {
    let mut rows = Vec::new();
    for &n in counts {
        let trials = run_trials(config, ratio, n);
        for strategy in STRATEGIES {
            let s = reduction_stats(&trials, strategy);
            rows.push(FunctionsRow {
                n_functions: n,
                strategy,
                mean_cost_reduction_pct_vs_strategy: s.mean,
                std: s.std,
                mean_cost_saving: saving_stats(&trials, strategy).mean,
            });
        }
    }
    rows
}

/// Least-squares slope of `y` against `x`.
pub fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(trials: usize) -> SweepConfig {
        SweepConfig {
            n_trials: trials,
            seed: 7,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn trials_do_not_depend_on_order() {
        let cfg = small(20);
        let parallel = run_trials(&cfg, 2.0, 3);
        let serial: Vec<_> = (0..20).map(|t| run_trial(&cfg, 2.0, 3, t)).collect();
        assert_eq!(parallel, serial);
        assert_ne!(serial[0], serial[1]);
    }

    #[test]
    fn instance_shape_and_origins() {
        let cfg = small(1);
        let inst = random_instance(&mut trial_rng(1, 0), &cfg, 5.0);
        assert_eq!(inst.n_devices(), 5);
        assert_eq!(inst.n_requests(), 10);
        for r in 0..10 {
            let o = inst.origin_index(r).unwrap();
            assert_eq!(inst.comm_cost[r][o], 0.0);
            assert!(inst.mappable[r].iter().all(|&m| m));
        }
        assert!(inst.impl_cost.iter().all(|&f| f >= 0.0));
    }

    #[test]
    fn noiseless_single_device_has_nothing_to_gain() {
        let cfg = SweepConfig {
            n_devices: 1,
            sigma_factor: 0.0,
            n_trials: 5,
            fc_ratios: vec![3.0],
            ..SweepConfig::default()
        };
        for row in sweep_ratio(&cfg) {
            assert_eq!(row.mean_cost_reduction_pct_vs_strategy, 0.0);
            assert_eq!(row.std, 0.0);
        }
        // f = 3 for the only device, every request local.
        assert_eq!(run_trial(&cfg, 3.0, 1, 0).exact, 3.0);
    }

    #[test]
    fn single_function_sweep_matches_ratio_sweep() {
        let cfg = SweepConfig {
            fc_ratios: vec![1.0],
            ..small(30)
        };
        let by_ratio = sweep_ratio(&cfg);
        let by_count = sweep_functions(&cfg, 1.0, &[1]);
        for (a, b) in by_ratio.iter().zip(&by_count) {
            assert_eq!(a.strategy, b.strategy);
            assert_eq!(
                a.mean_cost_reduction_pct_vs_strategy,
                b.mean_cost_reduction_pct_vs_strategy
            );
        }
    }

    #[test]
    fn stats_helpers() {
        let s = mean_std([1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std, 1.0);
        assert_eq!(mean_std([4.0]).std, 0.0);
        assert!((slope(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(SweepConfig::default().validate().is_ok());
        assert!(SweepConfig {
            n_trials: 0,
            ..SweepConfig::default()
        }
        .validate()
        .is_err());
        assert!(SweepConfig {
            sigma_factor: -1.0,
            ..SweepConfig::default()
        }
        .validate()
        .is_err());
    }
}
