//! Ground-truth ensemble simulator.
//!
//! Each realization draws a Poisson number of users with independent
//! stationary trajectories, one quenched obstacle field, and i.i.d.
//! Bernoulli activity and Exp(1) fading per user and slot, then evaluates
//! the interference at the probe locations. Statistics are estimated
//! across realizations at fixed post-burn-in slots, so obstacle fields are
//! redrawn per realization; holding one field fixed across the ensemble
//! biases the spread (see the quenched-bias test).
//!
//! Randomness is split into per-purpose ChaCha streams addressed by user
//! and slot, so execution order (and rayon scheduling) cannot change any
//! result: identical seeds give bit-identical series.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use std::collections::HashSet;

use crate::analytics::{MeasurementPoint, NetworkConfig};
use crate::blockage::sample_field_with;
use crate::error::{Error, Result};
use crate::mobility::{DisplacementLaw, FullState, MobilitySpec, TrajectorySimulator};

/// One simulation run: model, probes, warmup and recording window.
/// `horizon` counts recorded slots (burn_in slots are simulated first and
/// discarded). With `static_users` every user keeps its initial
/// steady-state position for the whole run. `field_seed` pins the obstacle
/// field for common-random-number experiments; leave `None` to derive it
/// from `seed` as usual.
#[derive(Debug, Clone)]
pub struct RealizationConfig {
    pub network: NetworkConfig,
    pub points: Vec<MeasurementPoint>,
    pub burn_in: u32,
    pub horizon: u32,
    pub seed: u64,
    pub static_users: bool,
    pub field_seed: Option<u64>,
}

impl RealizationConfig {
    pub fn new(network: NetworkConfig, points: Vec<MeasurementPoint>, seed: u64) -> Self {
        let burn_in = 10 * network.mobility().n_points();
        Self {
            network,
            points,
            burn_in,
            horizon: 4,
            seed,
            static_users: false,
            field_seed: None,
        }
    }

    pub fn with_horizon(mut self, horizon: u32) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_burn_in(mut self, burn_in: u32) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_static_users(mut self, yes: bool) -> Self {
        self.static_users = yes;
        self
    }
}

/// Interference per probe and recorded slot; I(t) >= 0, exactly zero when
/// no active user exists.
#[derive(Debug, Clone)]
pub struct InterferenceSeries {
    values: Vec<Vec<f64>>,
}

impl InterferenceSeries {
    pub fn n_points(&self) -> usize {
        self.values.len()
    }

    pub fn n_slots(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn value(&self, point: usize, slot: usize) -> f64 {
        self.values[point][slot]
    }

    pub fn slots(&self, point: usize) -> &[f64] {
        &self.values[point]
    }
}

// Stream layout inside one realization.
const STREAM_COUNT: u64 = 0;
const STREAM_FIELD: u64 = 1;
fn trajectory_stream(user: u64) -> u64 {
    2 + 2 * user
}
fn marks_stream(user: u64) -> u64 {
    3 + 2 * user
}
// Words reserved per slot in the marks stream (2 f64 draws fit in 4).
const MARK_WORDS_PER_SLOT: u128 = 8;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Simulate one realization. Prefer [`run_realization_with`] when running
/// many realizations of the same mobility spec.
pub fn run_realization(config: &RealizationConfig) -> Result<InterferenceSeries> {
    let sim = TrajectorySimulator::new(config.network.mobility())?;
    run_realization_with(config, &sim)
}

/// Simulate one realization reusing a prebuilt trajectory sampler.
pub fn run_realization_with(
    config: &RealizationConfig,
    sim: &TrajectorySimulator,
) -> Result<InterferenceSeries> {
    if sim.spec() != config.network.mobility() {
        return Err(Error::Unsupported(
            "trajectory sampler was built for a different mobility spec".into(),
        ));
    }
    if config.horizon < 1 {
        return Err(Error::Validation(vec![
            "horizon must cover at least one recorded slot".into(),
        ]));
    }
    let k = config.network.population().mean_users();
    let xi = config.network.population().activity();
    let n_users = if k == 0.0 {
        0
    } else {
        Poisson::new(k)
            .expect("positive Poisson mean")
            .sample(&mut stream_rng(config.seed, STREAM_COUNT)) as usize
    };
    let field = sample_field_with(
        config.network.blockage(),
        config.network.mobility().n_points(),
        &mut stream_rng(config.field_seed.unwrap_or(config.seed), STREAM_FIELD),
    );
    let mut values = vec![vec![0.0; config.horizon as usize]; config.points.len()];
    let gains: Vec<Vec<f64>> = config
        .points
        .iter()
        .map(|p| {
            (1..=config.network.mobility().n_points())
                .map(|n| config.network.pathloss().gain(n as f64 - p.coord()))
                .collect()
        })
        .collect();
    let total_slots = config.burn_in + config.horizon;
    for user in 0..n_users {
        let mut traj_rng = stream_rng(config.seed, trajectory_stream(user as u64));
        let mut marks_rng = stream_rng(config.seed, marks_stream(user as u64));
        let mut state = sim.sample_initial(&mut traj_rng);
        if config.static_users {
            // Pin the steady-state position: the marginal of the sampled
            // full state is exactly the steady-state pdf.
            state = FullState {
                destination: state.position,
                think_ticks: 0,
                ..state
            };
        }
        for slot in 0..total_slots {
            if slot >= config.burn_in {
                marks_rng.set_word_pos(slot as u128 * MARK_WORDS_PER_SLOT);
                let active = marks_rng.random::<f64>() < xi;
                let fading = -(1.0 - marks_rng.random::<f64>()).ln();
                if active {
                    let x = state.position;
                    let recorded = (slot - config.burn_in) as usize;
                    for (p, point) in config.points.iter().enumerate() {
                        let beta = field.link_loss(x as f64, point.coord());
                        values[p][recorded] += fading * beta * gains[p][(x - 1) as usize];
                    }
                }
            }
            if !config.static_users && slot + 1 < total_slots {
                state = sim.step_slot(state, &mut traj_rng);
            }
        }
    }
    Ok(InterferenceSeries { values })
}

/// Per-lag Pearson estimate with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct LagEstimate {
    pub lag: u32,
    pub rho: f64,
    pub se: f64,
}

/// Ensemble statistics for one probe.
#[derive(Debug, Clone)]
pub struct PointEstimate {
    pub mean: f64,
    pub mean_se: f64,
    pub std: f64,
    pub std_se: f64,
    pub rho: Vec<LagEstimate>,
}

/// Ensemble statistics for every probe; `low_confidence` flags runs with
/// fewer than 30 realizations, where the batch-means errors are crude.
#[derive(Debug, Clone)]
pub struct EstimatorOutput {
    pub points: Vec<PointEstimate>,
    pub n_realizations: usize,
    pub low_confidence: bool,
}

/// Realization configs with consecutive seeds off a base config.
pub fn ensemble(base: &RealizationConfig, count: usize) -> Vec<RealizationConfig> {
    (0..count)
        .map(|i| RealizationConfig {
            seed: base.seed.wrapping_add(i as u64),
            ..base.clone()
        })
        .collect()
}

fn mean_of(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_std(values: &[f64]) -> f64 {
    let m = mean_of(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean_of(x);
    let my = mean_of(y);
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    cov / (vx.sqrt() * vy.sqrt())
}

/// Mean, spread and lag correlations across independent realizations,
/// evaluated between the first recorded slot and the slot `lag` later.
/// Standard errors come from batch means over realization groups.
pub fn estimate_statistics(configs: &[RealizationConfig], lags: &[u32]) -> Result<EstimatorOutput> {
    if configs.len() < 2 {
        return Err(Error::Validation(vec![
            "ensemble needs at least two realizations".into(),
        ]));
    }
    let base = &configs[0];
    let max_lag = lags.iter().copied().max().unwrap_or(0);
    let mut problems = Vec::new();
    if base.horizon < max_lag + 1 {
        problems.push(format!(
            "horizon {} cannot serve lag {max_lag}",
            base.horizon
        ));
    }
    let mut seeds = HashSet::new();
    for c in configs {
        if !seeds.insert(c.seed) {
            problems.push(format!("duplicate realization seed {}", c.seed));
            break;
        }
        if c.horizon != base.horizon || c.points.len() != base.points.len() {
            problems.push("realizations disagree on horizon or probe set".into());
            break;
        }
    }
    if !problems.is_empty() {
        return Err(Error::Validation(problems));
    }

    let sim = TrajectorySimulator::new(base.network.mobility())?;
    let series: Vec<InterferenceSeries> = configs
        .par_iter()
        .map(|c| run_realization_with(c, &sim))
        .collect::<Result<_>>()?;

    let n = configs.len();
    let low_confidence = n < 30;
    let n_batches = if low_confidence { n } else { 30 };
    let batch_edges: Vec<(usize, usize)> = (0..n_batches)
        .map(|b| (b * n / n_batches, (b + 1) * n / n_batches))
        .collect();

    let points = (0..base.points.len())
        .map(|p| {
            let first: Vec<f64> = series.iter().map(|s| s.value(p, 0)).collect();
            let se_of = |stat: &dyn Fn(&[f64]) -> f64| -> f64 {
                let vals: Vec<f64> = batch_edges
                    .iter()
                    .map(|&(lo, hi)| stat(&first[lo..hi]))
                    .collect();
                sample_std(&vals) / (n_batches as f64).sqrt()
            };
            let mean = mean_of(&first);
            let mean_se = se_of(&mean_of);
            let std = sample_std(&first);
            let std_se = se_of(&|v: &[f64]| sample_std(v));
            let rho = lags
                .iter()
                .map(|&lag| {
                    let later: Vec<f64> = series.iter().map(|s| s.value(p, lag as usize)).collect();
                    let rho = pearson(&first, &later);
                    let batch_rhos: Vec<f64> = batch_edges
                        .iter()
                        .map(|&(lo, hi)| pearson(&first[lo..hi], &later[lo..hi]))
                        .collect();
                    LagEstimate {
                        lag,
                        rho,
                        se: sample_std(&batch_rhos) / (n_batches as f64).sqrt(),
                    }
                })
                .collect();
            PointEstimate {
                mean,
                mean_se,
                std,
                std_se,
                rho,
            }
        })
        .collect();

    Ok(EstimatorOutput {
        points,
        n_realizations: n,
        low_confidence,
    })
}

/// Empirical displacement kernel counted from one stationary trajectory.
/// Rows whose origin was never visited are flagged, not fabricated.
#[derive(Debug, Clone)]
pub struct EmpiricalKernel {
    n_points: u32,
    lag: u32,
    max_shift: i64,
    rows: Vec<Vec<f64>>,
    visits: Vec<u64>,
}

impl EmpiricalKernel {
    pub fn lag(&self) -> u32 {
        self.lag
    }

    pub fn max_shift(&self) -> i64 {
        self.max_shift
    }

    pub fn visits(&self, n: u32) -> u64 {
        self.visits[(n - 1) as usize]
    }

    /// Empirical P(n -> n+k, lag); zero for flagged rows.
    pub fn prob(&self, n: u32, k: i64) -> f64 {
        if n < 1 || n > self.n_points || k.abs() > self.max_shift {
            return 0.0;
        }
        self.rows[(n - 1) as usize][(k + self.max_shift) as usize]
    }

    /// Origins that were never observed.
    pub fn flagged_rows(&self) -> Vec<u32> {
        self.visits
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == 0)
            .map(|(i, _)| (i + 1) as u32)
            .collect()
    }
}

/// Estimate the displacement kernel from `samples` independent stationary
/// trajectories, one observed transition each (oracle for the exact chain).
/// Independence across observations keeps the per-entry errors binomial.
pub fn estimate_displacement_kernel(
    spec: &MobilitySpec,
    lag: u32,
    samples: u64,
    seed: u64,
) -> Result<EmpiricalKernel> {
    if lag < 1 {
        return Err(Error::Domain(
            "displacement kernel requires lag >= 1".into(),
        ));
    }
    if samples < 100_000 {
        return Err(Error::Domain(format!(
            "kernel estimation needs at least 1e5 samples, got {samples}"
        )));
    }
    let sim = TrajectorySimulator::new(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_shift = (spec.speed() * lag) as i64;
    let width = (2 * max_shift + 1) as usize;
    let mut counts = vec![vec![0u64; width]; spec.n_points() as usize];
    let mut visits = vec![0u64; spec.n_points() as usize];
    for _ in 0..samples {
        let mut state = sim.sample_initial(&mut rng);
        let origin = state.position;
        for _ in 0..lag {
            state = sim.step_slot(state, &mut rng);
        }
        visits[(origin - 1) as usize] += 1;
        let shift = state.position as i64 - origin as i64;
        counts[(origin - 1) as usize][(shift + max_shift) as usize] += 1;
    }
    let rows = counts
        .iter()
        .zip(&visits)
        .map(|(row, &v)| {
            if v == 0 {
                vec![0.0; width]
            } else {
                row.iter().map(|&c| c as f64 / v as f64).collect()
            }
        })
        .collect();
    Ok(EmpiricalKernel {
        n_points: spec.n_points(),
        lag,
        max_shift,
        rows,
        visits,
    })
}

/// Validate an empirical kernel into a [`DisplacementLaw`]; fails if any
/// row is starved.
pub fn empirical_law(kernel: &EmpiricalKernel) -> Result<DisplacementLaw> {
    let flagged = kernel.flagged_rows();
    if !flagged.is_empty() {
        return Err(Error::Domain(format!(
            "kernel rows never visited: {flagged:?}"
        )));
    }
    DisplacementLaw::new(
        kernel.n_points,
        kernel.lag,
        kernel.max_shift,
        kernel.rows.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{
        mean_interference, pearson_rho_with_law, std_interference, PathlossSpec, PopulationSpec,
    };
    use crate::mobility::displacement_law;

    fn network(n_o: f64, k: f64) -> NetworkConfig {
        NetworkConfig::new(
            MobilitySpec::new(20, 1, 4).unwrap(),
            n_o,
            0.5,
            PathlossSpec::new(2.0, 0.5).unwrap(),
            PopulationSpec::new(k, 1.0).unwrap(),
        )
        .unwrap()
    }

    fn probes(config: &NetworkConfig, bases: &[u32]) -> Vec<MeasurementPoint> {
        bases
            .iter()
            .map(|&b| config.point(b, 0.5).unwrap())
            .collect()
    }

    #[test]
    fn no_users_means_silence() {
        let config = network(10.0, 0.0);
        let points = probes(&config, &[3, 7]);
        let series = run_realization(&RealizationConfig::new(config, points, 1)).unwrap();
        for p in 0..2 {
            assert!(series.slots(p).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn identical_seeds_reproduce_bit_exactly() {
        let config = network(10.0, 8.0);
        let points = probes(&config, &[3, 9]);
        let rc = RealizationConfig::new(config, points, 77).with_horizon(3);
        let a = run_realization(&rc).unwrap();
        let b = run_realization(&rc).unwrap();
        for p in 0..2 {
            assert_eq!(a.slots(p), b.slots(p));
        }
        let c = run_realization(&RealizationConfig { seed: 78, ..rc }).unwrap();
        assert_ne!(a.slots(0), c.slots(0));
    }

    #[test]
    fn blockage_only_attenuates_under_coupled_randomness() {
        // Same seed => same users, trajectories, fading and activity; the
        // blocked series is then dominated pathwise by the clear one.
        let cfg = network(15.0, 10.0);
        let blocked = RealizationConfig::new(cfg.clone(), probes(&cfg, &[5]), 5).with_horizon(4);
        let clear = RealizationConfig {
            network: network(0.0, 10.0),
            ..blocked.clone()
        };
        let with_obstacles = run_realization(&blocked).unwrap();
        let without = run_realization(&clear).unwrap();
        let mut strict = 0;
        for t in 0..4 {
            assert!(with_obstacles.value(0, t) <= without.value(0, t) + 1e-12);
            if with_obstacles.value(0, t) < without.value(0, t) {
                strict += 1;
            }
        }
        assert!(strict > 0, "some slot should actually be attenuated");
    }

    #[test]
    fn single_pinned_user_reproduces_pathloss() {
        // One static user, full activity, no obstacles: the slot average of
        // I(t) is g(d) for the pinned position.
        let config = network(0.0, 1.0);
        let point = config.point(7, 0.3).unwrap();
        let slots = 40_000u32;
        // Seed chosen so the Poisson(1) draw yields exactly one user.
        let rc = RealizationConfig::new(config.clone(), vec![point], 3)
            .with_static_users(true)
            .with_burn_in(0)
            .with_horizon(slots);
        let series = run_realization(&rc).unwrap();
        assert!(
            series.slots(0).iter().all(|&v| v > 0.0),
            "needs one active user"
        );
        let mean = series.slots(0).iter().sum::<f64>() / slots as f64;
        let se = sample_std(series.slots(0)) / (slots as f64).sqrt();
        let best = (1..=20u32)
            .map(|n| config.pathloss().gain(n as f64 - point.coord()))
            .min_by(|a, b| (a - mean).abs().partial_cmp(&(b - mean).abs()).unwrap())
            .unwrap();
        assert!(
            (mean - best).abs() < 4.0 * se,
            "slot mean {mean} matches no lattice gain (closest {best}, se {se})"
        );
    }

    #[test]
    fn lag_zero_correlation_is_unity() {
        let config = network(10.0, 8.0);
        let points = probes(&config, &[5]);
        let base = RealizationConfig::new(config, points, 11).with_horizon(2);
        let out = estimate_statistics(&ensemble(&base, 200), &[0, 1]).unwrap();
        let rho0 = out.points[0].rho[0];
        assert_eq!(rho0.lag, 0);
        assert!((rho0.rho - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ensemble_statistics_match_analytics() {
        let config = network(5.0, 10.0);
        let points = probes(&config, &[4, 10]);
        let base = RealizationConfig::new(config.clone(), points.clone(), 1000).with_horizon(3);
        let out = estimate_statistics(&ensemble(&base, 6000), &[1, 2]).unwrap();
        assert!(!out.low_confidence);
        let law1 = displacement_law(config.mobility(), 1).unwrap();
        let law2 = displacement_law(config.mobility(), 2).unwrap();
        for (p, point) in points.iter().enumerate() {
            let est = &out.points[p];
            let mean = mean_interference(&config, point);
            assert!(
                (est.mean - mean).abs() < 4.0 * est.mean_se,
                "mean at {}: {} vs {mean} (se {})",
                point.coord(),
                est.mean,
                est.mean_se
            );
            let std = std_interference(&config, point);
            assert!(
                (est.std - std).abs() < 4.0 * est.std_se,
                "std at {}: {} vs {std} (se {})",
                point.coord(),
                est.std,
                est.std_se
            );
            for (law, lag_est) in [(&law1, est.rho[0]), (&law2, est.rho[1])] {
                let rho = pearson_rho_with_law(&config, point, law).unwrap();
                assert!(
                    (lag_est.rho - rho).abs() < 4.0 * lag_est.se,
                    "rho lag {} at {}: {} vs {rho} (se {})",
                    lag_est.lag,
                    point.coord(),
                    lag_est.rho,
                    lag_est.se
                );
            }
        }
    }

    #[test]
    fn shared_quenched_field_biases_the_spread() {
        // Holding one obstacle field fixed across the ensemble removes the
        // field-to-field variance and lands visibly below the analytic
        // standard deviation; redrawing per realization does not.
        let config = network(15.0, 10.0);
        let points = probes(&config, &[10]);
        let point = points[0];
        let base = RealizationConfig::new(config.clone(), points, 400).with_horizon(1);
        let honest = estimate_statistics(&ensemble(&base, 4000), &[]).unwrap();
        let mut frozen_cfgs = ensemble(&base, 4000);
        for c in &mut frozen_cfgs {
            c.field_seed = Some(424242);
        }
        let frozen = estimate_statistics(&frozen_cfgs, &[]).unwrap();
        let analytic = std_interference(&config, &point);
        let honest_err = (honest.points[0].std - analytic).abs();
        let frozen_err = (frozen.points[0].std - analytic).abs();
        assert!(
            honest_err <= 4.0 * honest.points[0].std_se,
            "redrawn fields should match: {honest_err} vs se {}",
            honest.points[0].std_se
        );
        assert!(
            frozen_err > 4.0 * frozen.points[0].std_se,
            "shared field should bias: {frozen_err} vs se {}",
            frozen.points[0].std_se
        );
    }

    #[test]
    fn stationarity_across_recorded_slots() {
        let config = network(8.0, 10.0);
        let points = probes(&config, &[6]);
        let base = RealizationConfig::new(config, points, 2000).with_horizon(2);
        let cfgs = ensemble(&base, 3000);
        let sim = TrajectorySimulator::new(cfgs[0].network.mobility()).unwrap();
        let series: Vec<InterferenceSeries> = cfgs
            .iter()
            .map(|c| run_realization_with(c, &sim).unwrap())
            .collect();
        let at = |slot: usize| -> Vec<f64> { series.iter().map(|s| s.value(0, slot)).collect() };
        let first = at(0);
        let second = at(1);
        let diff = mean_of(&first) - mean_of(&second);
        let se = (sample_std(&first).powi(2) + sample_std(&second).powi(2)).sqrt()
            / (series.len() as f64).sqrt();
        assert!(diff.abs() < 3.0 * se, "means drift: {diff} (se {se})");
    }

    #[test]
    fn standard_errors_shrink_like_root_n() {
        let config = network(8.0, 10.0);
        let points = probes(&config, &[6]);
        let base = RealizationConfig::new(config, points, 8000).with_horizon(1);
        let small = estimate_statistics(&ensemble(&base, 1000), &[]).unwrap();
        let big = estimate_statistics(&ensemble(&base, 4000), &[]).unwrap();
        let ratio = small.points[0].mean_se / big.points[0].mean_se;
        assert!(
            (1.3..=3.1).contains(&ratio),
            "quadrupling realizations should roughly halve the error, got {ratio}"
        );
    }

    #[test]
    fn estimator_rejects_bad_ensembles() {
        let config = network(8.0, 10.0);
        let points = probes(&config, &[6]);
        let base = RealizationConfig::new(config, points, 0).with_horizon(2);
        assert!(matches!(
            estimate_statistics(&[base.clone()], &[1]),
            Err(Error::Validation(_))
        ));
        let dup = vec![base.clone(), base.clone()];
        assert!(matches!(
            estimate_statistics(&dup, &[1]),
            Err(Error::Validation(_))
        ));
        let short = ensemble(&base.clone().with_horizon(1), 10);
        assert!(matches!(
            estimate_statistics(&short, &[1]),
            Err(Error::Validation(_))
        ));
        let tiny = estimate_statistics(&ensemble(&base, 10), &[1]).unwrap();
        assert!(tiny.low_confidence);
    }

    #[test]
    fn empirical_kernel_tracks_chain() {
        let spec = MobilitySpec::new(20, 1, 4).unwrap();
        let kernel = estimate_displacement_kernel(&spec, 1, 10_000_000, 9).unwrap();
        assert!(kernel.flagged_rows().is_empty());
        let law = displacement_law(&spec, 1).unwrap();
        for n in 1..=20u32 {
            let mut total = 0.0;
            for k in -1..=1i64 {
                let expected = law.prob(n, k);
                let observed = kernel.prob(n, k);
                total += observed;
                let visits = kernel.visits(n) as f64;
                let se = (expected * (1.0 - expected) / visits).sqrt().max(1e-9);
                assert!(
                    (observed - expected).abs() < 3.0 * se,
                    "entry ({n},{k}): {observed} vs {expected} (se {se})"
                );
            }
            assert!((total - 1.0).abs() < 1e-12, "row {n} sums to {total}");
            // Speed bound: two-step displacements cannot happen in one slot.
            assert_eq!(kernel.prob(n, 2), 0.0);
            assert_eq!(kernel.prob(n, -2), 0.0);
        }
        assert!(empirical_law(&kernel).is_ok());
    }

    #[test]
    fn kernel_flags_starved_rows() {
        // An origin that never shows up stays flagged and empty instead of
        // being fabricated, and refuses to validate into a law.
        let kernel = EmpiricalKernel {
            n_points: 3,
            lag: 1,
            max_shift: 1,
            rows: vec![
                vec![0.0, 0.5, 0.5],
                vec![0.0, 0.0, 0.0],
                vec![0.25, 0.75, 0.0],
            ],
            visits: vec![40, 0, 60],
        };
        assert_eq!(kernel.flagged_rows(), vec![2]);
        assert_eq!(kernel.visits(2), 0);
        for k in -1..=1i64 {
            assert_eq!(kernel.prob(2, k), 0.0);
        }
        assert!(empirical_law(&kernel).is_err());
    }

    #[test]
    fn kernel_rejects_thin_sampling() {
        let spec = MobilitySpec::new(12, 1, 0).unwrap();
        assert!(estimate_displacement_kernel(&spec, 1, 50_000, 1).is_err());
        assert!(estimate_displacement_kernel(&spec, 0, 200_000, 1).is_err());
    }
}
