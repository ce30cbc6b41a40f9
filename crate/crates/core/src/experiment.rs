//! Declarative experiment configuration, reproduction sweeps and reports.
//!
//! An experiment is one flat key/value file (TOML syntax, no nesting) with
//! explicit seeds, so every report is a reproducible artifact: re-running
//! the same config yields byte-identical CSV. The sweep runners pair the
//! closed-form statistics with ensemble Monte Carlo estimates; the
//! property runner re-checks the structural claims (user-count
//! independence without blockage, growth with user count under blockage,
//! the rational form, the lag-1 decomposition identity and the crossover
//! user count) and reports a machine-readable pass/fail table.

use serde::{Deserialize, Serialize};
use std::io::Write;
use std::ops::RangeInclusive;

use crate::analytics::{
    critical_user_count, mean_interference, pearson_rho_with_law, rho_coefficients,
    sigma_temporal, sigma_temporal_lag1_cases, std_interference, std_interference_no_spatial,
    MeasurementPoint, NetworkConfig, PathlossSpec, PopulationSpec,
};
use crate::error::{Error, Result};
use crate::mobility::{displacement_law, DisplacementLaw, MobilitySpec};
use crate::montecarlo::{ensemble, estimate_statistics, run_realization, RealizationConfig};

/// Flat experiment description. Defaults reproduce the reference setup:
/// N=50 lattice, K=50 users with continuous activity, pathloss 1/(0.5+d^2),
/// think time up to 5 slots, gamma=0.5 obstacles, probes at n+1/2.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lattice_size: u32,
    pub speed: u32,
    pub max_think: u32,
    pub mean_users: f64,
    pub activity: f64,
    pub pathloss_exponent: f64,
    pub epsilon: f64,
    pub gamma: f64,
    /// Fractional probe offset c; probes sit at n + c for n = 1..N/2.
    pub offset: f64,
    /// Obstacle mean for the single-blockage variants.
    pub mean_obstacles: f64,
    /// Obstacle means swept by the mean/std report.
    pub obstacle_sweep: Vec<f64>,
    /// User counts swept by the speed report.
    pub user_sweep: Vec<f64>,
    /// Speeds swept by the speed report.
    pub speed_sweep: Vec<u32>,
    pub lags: Vec<u32>,
    /// Monte Carlo realizations per variant.
    pub ensemble: usize,
    /// Warmup slots; defaults to 10 * lattice_size.
    pub burn_in: Option<u32>,
    pub seed: u64,
    /// Number of probes validated by simulation in the mean/std report.
    pub validation_points: usize,
    /// Number of probes spot-checked by simulation in the speed report.
    pub spot_checks: usize,
    /// Recorded slots per realization in the raw series dump.
    pub record_slots: u32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            lattice_size: 50,
            speed: 1,
            max_think: 5,
            mean_users: 50.0,
            activity: 1.0,
            pathloss_exponent: 2.0,
            epsilon: 0.5,
            gamma: 0.5,
            offset: 0.5,
            mean_obstacles: 10.0,
            obstacle_sweep: vec![0.0, 10.0, 40.0],
            user_sweep: vec![30.0, 300.0],
            speed_sweep: vec![1, 2, 5],
            lags: vec![1, 2],
            ensemble: 20_000,
            burn_in: None,
            seed: 1,
            validation_points: 7,
            spot_checks: 3,
            record_slots: 8,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self =
            toml::from_str(text).map_err(|e| Error::Validation(vec![e.to_string()]))?;
        config.validate()?;
        Ok(config)
    }

    /// Check every field against its model invariant; collects all
    /// offenders instead of stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.lattice_size < 3 {
            problems.push(format!("lattice_size {} below 3", self.lattice_size));
        }
        for &u in std::iter::once(&self.speed).chain(&self.speed_sweep) {
            if u < 1 || u >= self.lattice_size {
                problems.push(format!("speed {u} outside 1..{}", self.lattice_size));
            }
        }
        if !(self.offset > 0.0 && self.offset < 1.0) {
            problems.push(format!("offset {} outside (0, 1)", self.offset));
        }
        if !(0.0..=1.0).contains(&self.activity) {
            problems.push(format!("activity {} outside [0, 1]", self.activity));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            problems.push(format!("gamma {} outside [0, 1]", self.gamma));
        }
        if !(self.mean_users >= 0.0) {
            problems.push(format!("mean_users {} negative", self.mean_users));
        }
        for &k in &self.user_sweep {
            if !(k >= 0.0) {
                problems.push(format!("user_sweep entry {k} negative"));
            }
        }
        if !(self.mean_obstacles >= 0.0) {
            problems.push(format!("mean_obstacles {} negative", self.mean_obstacles));
        }
        for &n_o in &self.obstacle_sweep {
            if !(n_o >= 0.0) {
                problems.push(format!("obstacle_sweep entry {n_o} negative"));
            }
        }
        if !(self.pathloss_exponent > 0.0) {
            problems.push(format!(
                "pathloss_exponent {} not positive",
                self.pathloss_exponent
            ));
        }
        if !(self.epsilon > 0.0) {
            problems.push(format!("epsilon {} not positive", self.epsilon));
        }
        if self.ensemble < 2 {
            problems.push(format!("ensemble {} below 2", self.ensemble));
        }
        if self.lags.is_empty() || self.lags.contains(&0) {
            problems.push("lags must be non-empty and positive".into());
        }
        if self.validation_points < 1 || self.validation_points > (self.lattice_size / 2) as usize
        {
            problems.push(format!(
                "validation_points {} outside 1..={}",
                self.validation_points,
                self.lattice_size / 2
            ));
        }
        if self.record_slots < 1 {
            problems.push("record_slots must be at least 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    fn mobility(&self, speed: u32, max_think: u32) -> Result<MobilitySpec> {
        MobilitySpec::new(self.lattice_size, speed, max_think)
    }

    fn network(&self, mean_obstacles: f64, speed: u32, max_think: u32) -> Result<NetworkConfig> {
        NetworkConfig::new(
            self.mobility(speed, max_think)?,
            mean_obstacles,
            self.gamma,
            PathlossSpec::new(self.pathloss_exponent, self.epsilon)?,
            PopulationSpec::new(self.mean_users, self.activity)?,
        )
    }

    fn points(&self, network: &NetworkConfig) -> Result<Vec<MeasurementPoint>> {
        (1..=self.lattice_size / 2)
            .map(|n| network.point(n, self.offset))
            .collect()
    }

    fn burn_in(&self) -> u32 {
        self.burn_in.unwrap_or(10 * self.lattice_size)
    }
}

/// Evenly spaced indices into `total` probes, including both extremes
/// (and thereby the center for odd counts).
pub fn validation_indices(count: usize, total: usize) -> Vec<usize> {
    if count >= total {
        return (0..total).collect();
    }
    if count == 1 {
        return vec![total / 2];
    }
    (0..count)
        .map(|i| (i * (total - 1) + (count - 1) / 2) / (count - 1))
        .collect()
}

fn variant_seed(base: u64, variant: u64) -> u64 {
    base.wrapping_add(variant.wrapping_mul(0x1_0000_0000))
}

/// One row of the interference mean/std report.
#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    pub mean_obstacles: f64,
    pub y_p: f64,
    pub analytic_mean: f64,
    pub analytic_std: f64,
    pub analytic_std_no_spatial: f64,
    pub sim_mean: Option<f64>,
    pub sim_mean_se: Option<f64>,
    pub sim_std: Option<f64>,
    pub sim_std_se: Option<f64>,
}

/// One row of the correlation report.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationRow {
    pub variant: String,
    pub lag: u32,
    pub y_p: f64,
    pub analytic_rho: f64,
    pub sim_rho: Option<f64>,
    pub sim_rho_se: Option<f64>,
}

/// One row of the user-count/speed report (think time forced to zero).
#[derive(Debug, Clone, Serialize)]
pub struct SpeedRow {
    pub mean_users: f64,
    pub speed: u32,
    pub y_p: f64,
    pub rho_blockage: f64,
    pub rho_no_blockage: f64,
    pub rho_static_blockage: f64,
    pub rho_static_no_blockage: f64,
    pub sim_rho: Option<f64>,
    pub sim_rho_se: Option<f64>,
}

/// One row of the property suite table.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyRow {
    pub check: String,
    pub params: String,
    pub status: String,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct Report<R> {
    pub notes: Vec<String>,
    pub rows: Vec<R>,
}

pub type MomentReport = Report<MomentRow>;
pub type CorrelationReport = Report<CorrelationRow>;
pub type SpeedReport = Report<SpeedRow>;

#[derive(Debug, Clone)]
pub struct PropertyReport {
    pub notes: Vec<String>,
    pub rows: Vec<PropertyRow>,
    pub all_pass: bool,
}

impl<R: Serialize> Report<R> {
    /// CSV with `#`-prefixed note lines before the header; fixed column
    /// order and formatting keep reruns byte-identical.
    pub fn write_csv<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        for note in &self.notes {
            writeln!(writer, "# {note}")?;
        }
        let mut csv = csv::Writer::from_writer(writer);
        for row in &self.rows {
            csv.serialize(row)?;
        }
        csv.flush()
    }
}

impl PropertyReport {
    pub fn write_csv<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        for note in &self.notes {
            writeln!(writer, "# {note}")?;
        }
        let mut csv = csv::Writer::from_writer(writer);
        for row in &self.rows {
            csv.serialize(row)?;
        }
        csv.flush()
    }
}

/// Interference mean and standard deviation over the probe locations for
/// each obstacle density, with ensemble validation at a subset of probes.
pub fn run_moments(config: &ExperimentConfig) -> Result<MomentReport> {
    config.validate()?;
    let mut rows = Vec::new();
    let mut notes = vec![format!(
        "interference mean/std; lattice_size={} mean_users={} activity={} gamma={} seed={}",
        config.lattice_size, config.mean_users, config.activity, config.gamma, config.seed
    )];
    for (v, &n_o) in config.obstacle_sweep.iter().enumerate() {
        let network = config.network(n_o, config.speed, config.max_think)?;
        let points = config.points(&network)?;
        let chosen = validation_indices(config.validation_points, points.len());
        if v == 0 {
            notes.push(format!(
                "validated at {} evenly spaced probes (both extremes and center): {}",
                chosen.len(),
                chosen
                    .iter()
                    .map(|&i| format!("{}", points[i].coord()))
                    .collect::<Vec<_>>()
                    .join(" ")
            ));
        }
        let sim_points: Vec<MeasurementPoint> = chosen.iter().map(|&i| points[i]).collect();
        let base = RealizationConfig::new(network.clone(), sim_points, variant_seed(config.seed, v as u64))
            .with_burn_in(config.burn_in())
            .with_horizon(1);
        let stats = estimate_statistics(&ensemble(&base, config.ensemble), &[])?;
        for (i, point) in points.iter().enumerate() {
            let sim = chosen.iter().position(|&c| c == i).map(|s| &stats.points[s]);
            rows.push(MomentRow {
                mean_obstacles: n_o,
                y_p: point.coord(),
                analytic_mean: mean_interference(&network, point),
                analytic_std: std_interference(&network, point),
                analytic_std_no_spatial: std_interference_no_spatial(&network, point),
                sim_mean: sim.map(|s| s.mean),
                sim_mean_se: sim.map(|s| s.mean_se),
                sim_std: sim.map(|s| s.std),
                sim_std_se: sim.map(|s| s.std_se),
            });
        }
    }
    Ok(Report { notes, rows })
}

/// The correlation variants of the lag report.
const CORRELATION_VARIANTS: [&str; 5] = [
    "blockage",
    "no_blockage",
    "blockage_no_spatial",
    "static_blockage",
    "static_no_blockage",
];

/// Pearson coefficients per lag and probe for the with/without-blockage
/// and static variants, each validated by simulation except the
/// no-spatial-term surrogate (an analytic approximation, not a model).
pub fn run_correlations(config: &ExperimentConfig) -> Result<CorrelationReport> {
    config.validate()?;
    let notes = vec![format!(
        "temporal correlation; lattice_size={} mean_users={} mean_obstacles={} lags={:?} seed={}",
        config.lattice_size, config.mean_users, config.mean_obstacles, config.lags, config.seed
    )];
    let mobility = config.mobility(config.speed, config.max_think)?;
    let laws: Vec<DisplacementLaw> = config
        .lags
        .iter()
        .map(|&lag| displacement_law(&mobility, lag))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (v, &variant) in CORRELATION_VARIANTS.iter().enumerate() {
        let n_o = match variant {
            "no_blockage" | "static_no_blockage" => 0.0,
            _ => config.mean_obstacles,
        };
        let is_static = variant.starts_with("static");
        let network = config.network(n_o, config.speed, config.max_think)?;
        let points = config.points(&network)?;
        let simulated = variant != "blockage_no_spatial";
        let stats = if simulated {
            let horizon = config.lags.iter().max().unwrap() + 1;
            let base = RealizationConfig::new(
                network.clone(),
                points.clone(),
                variant_seed(config.seed, v as u64),
            )
            .with_burn_in(config.burn_in())
            .with_horizon(horizon)
            .with_static_users(is_static);
            Some(estimate_statistics(
                &ensemble(&base, config.ensemble),
                &config.lags,
            )?)
        } else {
            None
        };
        for (li, &lag) in config.lags.iter().enumerate() {
            let identity = DisplacementLaw::identity(config.lattice_size, lag);
            let law = if is_static { &identity } else { &laws[li] };
            for (i, point) in points.iter().enumerate() {
                let analytic = if variant == "blockage_no_spatial" {
                    // Dropping the cross-user term leaves c1/c3 at any K.
                    let coeffs = rho_coefficients(&network, point, law);
                    coeffs.c1 / coeffs.c3
                } else {
                    pearson_rho_with_law(&network, point, law)?
                };
                let sim = stats.as_ref().map(|s| s.points[i].rho[li]);
                rows.push(CorrelationRow {
                    variant: variant.to_string(),
                    lag,
                    y_p: point.coord(),
                    analytic_rho: analytic,
                    sim_rho: sim.map(|r| r.rho),
                    sim_rho_se: sim.map(|r| r.se),
                });
            }
        }
    }
    Ok(Report { notes, rows })
}

/// Lag-1 correlation against user count and speed with zero think time,
/// including the static baselines and Monte Carlo spot checks at a few
/// probes for the unit-speed rows.
pub fn run_speeds(config: &ExperimentConfig) -> Result<SpeedReport> {
    config.validate()?;
    let notes = vec![format!(
        "lag-1 correlation vs user count and speed; think time forced to 0; \
         user_sweep={:?} speed_sweep={:?} mean_obstacles={} seed={}",
        config.user_sweep, config.speed_sweep, config.mean_obstacles, config.seed
    )];
    let mut rows = Vec::new();
    let mut variant = 100u64;
    for &k in &config.user_sweep {
        for &u in &config.speed_sweep {
            let network = config
                .network(config.mean_obstacles, u, 0)?
                .with_mean_users(k)?;
            let clear = network.with_mean_obstacles(0.0)?;
            let points = config.points(&network)?;
            let law = displacement_law(network.mobility(), 1)?;
            let identity = DisplacementLaw::identity(config.lattice_size, 1);
            let spot = if u == config.speed_sweep[0] {
                let chosen = validation_indices(config.spot_checks, points.len());
                let sim_points: Vec<MeasurementPoint> =
                    chosen.iter().map(|&i| points[i]).collect();
                let base = RealizationConfig::new(
                    network.clone(),
                    sim_points,
                    variant_seed(config.seed, variant),
                )
                .with_burn_in(config.burn_in())
                .with_horizon(2);
                let stats = estimate_statistics(&ensemble(&base, config.ensemble), &[1])?;
                Some((chosen, stats))
            } else {
                None
            };
            variant += 1;
            for (i, point) in points.iter().enumerate() {
                let sim = spot.as_ref().and_then(|(chosen, stats)| {
                    chosen
                        .iter()
                        .position(|&c| c == i)
                        .map(|s| stats.points[s].rho[0])
                });
                rows.push(SpeedRow {
                    mean_users: k,
                    speed: u,
                    y_p: point.coord(),
                    rho_blockage: pearson_rho_with_law(&network, point, &law)?,
                    rho_no_blockage: pearson_rho_with_law(&clear, point, &law)?,
                    rho_static_blockage: pearson_rho_with_law(&network, point, &identity)?,
                    rho_static_no_blockage: pearson_rho_with_law(&clear, point, &identity)?,
                    sim_rho: sim.map(|r| r.rho),
                    sim_rho_se: sim.map(|r| r.se),
                });
            }
        }
    }
    Ok(Report { notes, rows })
}

/// First index in `range` where `value` fails to increase strictly.
pub fn first_non_increasing(
    mut value: impl FnMut(u32) -> f64,
    range: RangeInclusive<u32>,
) -> Option<u32> {
    let mut last: Option<f64> = None;
    for k in range {
        let v = value(k);
        if let Some(prev) = last {
            if v <= prev {
                return Some(k);
            }
        }
        last = Some(v);
    }
    None
}

struct PropertyTable {
    rows: Vec<PropertyRow>,
    all_pass: bool,
}

impl PropertyTable {
    fn push(&mut self, check: &str, params: String, pass: bool, detail: String) {
        self.all_pass &= pass;
        self.rows.push(PropertyRow {
            check: check.to_string(),
            params,
            status: if pass { "pass" } else { "fail" }.to_string(),
            detail,
        });
    }
}

/// Run the structural property suite on the configured grid and collect a
/// machine-readable pass/fail table.
pub fn run_properties(config: &ExperimentConfig) -> Result<PropertyReport> {
    config.validate()?;
    let notes = vec![format!(
        "property suite; lattice_size={} mean_obstacles={} lags={:?}",
        config.lattice_size, config.mean_obstacles, config.lags
    )];
    let mut table = PropertyTable {
        rows: Vec::new(),
        all_pass: true,
    };
    let mobility = config.mobility(config.speed, config.max_think)?;
    let laws: Vec<DisplacementLaw> = config
        .lags
        .iter()
        .map(|&lag| displacement_law(&mobility, lag))
        .collect::<Result<_>>()?;
    let clear = config.network(0.0, config.speed, config.max_think)?;
    let points = config.points(&clear)?;
    let probe_subset: Vec<&MeasurementPoint> =
        validation_indices(5.min(points.len()), points.len())
            .into_iter()
            .map(|i| &points[i])
            .collect();

    // Without blockage rho is user-count independent and at most xi/2.
    for (li, &lag) in config.lags.iter().enumerate() {
        for point in &probe_subset {
            let rho_single =
                pearson_rho_with_law(&clear.with_mean_users(1.0)?, point, &laws[li])?;
            let mut max_dev = 0.0f64;
            for k in [10.0, 100.0] {
                let rho = pearson_rho_with_law(&clear.with_mean_users(k)?, point, &laws[li])?;
                max_dev = max_dev.max((rho - rho_single).abs());
            }
            table.push(
                "lemma1_user_count_independence",
                format!("y_p={} lag={lag}", point.coord()),
                max_dev < 1e-12,
                format!("max deviation {max_dev:.3e}"),
            );
        }
    }
    for xi in [0.25, 0.5, 1.0] {
        let cfg = clear.with_activity(xi)?;
        let mut worst: f64 = f64::NEG_INFINITY;
        for point in &probe_subset {
            for law in &laws {
                worst = worst.max(pearson_rho_with_law(&cfg, point, law)? - xi / 2.0);
            }
        }
        table.push(
            "lemma1_activity_bound",
            format!("activity={xi}"),
            worst <= 1e-12,
            format!("max rho - xi/2 = {worst:.3e}"),
        );
    }

    let obstacle_grid: Vec<f64> = if config.mean_obstacles > 0.0 {
        vec![config.mean_obstacles, 4.0 * config.mean_obstacles]
    } else {
        vec![0.0]
    };
    for &n_o in &obstacle_grid {
        let network = config.network(n_o, config.speed, config.max_think)?;
        let law = &laws[0];

        if n_o > 0.0 {
            // With blockage rho grows strictly with the user count.
            for point in &points {
                let violation = first_non_increasing(
                    |k| {
                        pearson_rho_with_law(
                            &network.with_mean_users(k as f64).expect("valid"),
                            point,
                            law,
                        )
                        .expect("defined")
                    },
                    2..=500,
                );
                table.push(
                    "lemma2_user_count_monotonicity",
                    format!("y_p={} mean_obstacles={n_o}", point.coord()),
                    violation.is_none(),
                    match violation {
                        None => "strictly increasing over K=2..500".into(),
                        Some(k) => format!("first violation at K={k}"),
                    },
                );
            }

            // Rational form against the direct moment evaluation.
            for point in &probe_subset {
                let coeffs = rho_coefficients(&network, point, law);
                let mut max_dev = 0.0f64;
                for k in [2.0, 5.0, 50.0, 500.0] {
                    let direct =
                        pearson_rho_with_law(&network.with_mean_users(k)?, point, law)?;
                    max_dev = max_dev.max((direct - coeffs.rho_at(k)).abs());
                }
                table.push(
                    "rational_form_identity",
                    format!("y_p={} mean_obstacles={n_o}", point.coord()),
                    max_dev < 1e-10,
                    format!("max deviation {max_dev:.3e}"),
                );
            }
        }

        // Two independent code paths for the lag-1 temporal term.
        if config.speed == 1 {
            let mut max_dev = 0.0f64;
            for point in &points {
                let generic = sigma_temporal(&network, point, law);
                let cases = sigma_temporal_lag1_cases(&network, point, law)?;
                max_dev = max_dev.max((generic - cases).abs());
            }
            table.push(
                "lag1_decomposition_identity",
                format!("mean_obstacles={n_o}"),
                max_dev < 1e-12,
                format!("max deviation {max_dev:.3e}"),
            );
        }

        // Crossover user count and its sign change.
        for point in &probe_subset {
            let crossing = critical_user_count(&network, point, law)?;
            if n_o == 0.0 {
                table.push(
                    "crossover_user_count",
                    format!("y_p={} mean_obstacles={n_o}", point.coord()),
                    crossing.is_none(),
                    "no crossover: curves coincide".into(),
                );
                continue;
            }
            let pass = match crossing {
                Some(k_star) => {
                    let clear_net = network.with_mean_obstacles(0.0)?;
                    let below = (k_star * 0.9).max(2.0);
                    let above = (2.0 * k_star).max(k_star + 10.0);
                    let under = pearson_rho_with_law(
                        &network.with_mean_users(below)?,
                        point,
                        law,
                    )? < pearson_rho_with_law(
                        &clear_net.with_mean_users(below)?,
                        point,
                        law,
                    )?;
                    let over = pearson_rho_with_law(
                        &network.with_mean_users(above)?,
                        point,
                        law,
                    )? > pearson_rho_with_law(
                        &clear_net.with_mean_users(above)?,
                        point,
                        law,
                    )?;
                    under && over
                }
                None => false,
            };
            table.push(
                "crossover_user_count",
                format!("y_p={} mean_obstacles={n_o}", point.coord()),
                pass,
                match crossing {
                    Some(k_star) => format!("K* = {k_star:.2}"),
                    None => "no finite crossover found".into(),
                },
            );
        }

        // rho stays inside [0, 1] across the grid.
        let mut out_of_range = 0usize;
        for point in &points {
            for k in [1.0, 10.0, 200.0] {
                let rho =
                    pearson_rho_with_law(&network.with_mean_users(k)?, point, law)?;
                if !(0.0..=1.0 + 1e-12).contains(&rho) {
                    out_of_range += 1;
                }
            }
        }
        table.push(
            "rho_in_unit_interval",
            format!("mean_obstacles={n_o}"),
            out_of_range == 0,
            format!("{out_of_range} evaluations escaped [0, 1]"),
        );
    }

    Ok(PropertyReport {
        notes,
        rows: table.rows,
        all_pass: table.all_pass,
    })
}

/// Displacement law of the configured mobility model as (n, k, probability)
/// rows.
pub fn run_displacement(config: &ExperimentConfig, lag: u32) -> Result<Report<DisplacementRow>> {
    config.validate()?;
    let mobility = config.mobility(config.speed, config.max_think)?;
    let law = displacement_law(&mobility, lag)?;
    let notes = vec![format!(
        "displacement law; lattice_size={} speed={} max_think={} lag={lag}",
        config.lattice_size, config.speed, config.max_think
    )];
    let rows = law
        .entries()
        .map(|(n, k, probability)| DisplacementRow { n, k, probability })
        .collect();
    Ok(Report { notes, rows })
}

#[derive(Debug, Clone, Serialize)]
pub struct DisplacementRow {
    pub n: u32,
    pub k: i64,
    pub probability: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesRow {
    pub realization: usize,
    pub slot: u32,
    pub point_index: usize,
    pub interference: f64,
}

/// Raw interference series dump over the configured ensemble.
pub fn run_series_dump(config: &ExperimentConfig) -> Result<Report<SeriesRow>> {
    config.validate()?;
    let network = config.network(config.mean_obstacles, config.speed, config.max_think)?;
    let points = config.points(&network)?;
    let notes = vec![format!(
        "raw interference series; realizations={} recorded_slots={} burn_in={} seed={}",
        config.ensemble,
        config.record_slots,
        config.burn_in(),
        config.seed
    )];
    let base = RealizationConfig::new(network, points, config.seed)
        .with_burn_in(config.burn_in())
        .with_horizon(config.record_slots);
    let mut rows = Vec::new();
    for (r, cfg) in ensemble(&base, config.ensemble).iter().enumerate() {
        let series = run_realization(cfg)?;
        for slot in 0..config.record_slots {
            for p in 0..series.n_points() {
                rows.push(SeriesRow {
                    realization: r,
                    slot,
                    point_index: p,
                    interference: series.value(p, slot as usize),
                });
            }
        }
    }
    Ok(Report { notes, rows })
}
