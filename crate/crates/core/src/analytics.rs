//! Closed-form interference statistics at an off-lattice probe location.
//!
//! Interference is the sum over users of activity * fading * penetration
//! loss * pathloss. Averaging over the Poisson population, uniform activity,
//! unit-mean Rayleigh fading, the steady-state location pdf and the obstacle
//! process yields closed forms for the mean, the second moment, the spatial
//! cross-user term `sigma`, the temporal single-user term `sigma_l`, and the
//! lag-l Pearson coefficient
//!
//!   rho_l = (K xi^2 sigma_l + K^2 xi^2 sigma - E{I}^2) / (E{I^2} - E{I}^2).
//!
//! Two independent code paths compute sigma_1: the generic kernel sum
//! [`sigma_temporal`] and the four-case decomposition
//! [`sigma_temporal_lag1_cases`] around the probe; they must agree to
//! near machine precision, which the tests and the acceptance suite pin.

use crate::blockage::{beta_moment, spatial_cross_moment, BlockageSpec};
use crate::error::{Error, Result};
use crate::mobility::{displacement_law, DisplacementLaw, MobilitySpec};

/// Distance-based pathloss g(d) = 1 / (epsilon + d^a).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathlossSpec {
    exponent: f64,
    epsilon: f64,
}

impl PathlossSpec {
    pub fn new(exponent: f64, epsilon: f64) -> Result<Self> {
        if !(exponent > 0.0) {
            return Err(Error::Domain(format!(
                "pathloss exponent must be positive, got {exponent}"
            )));
        }
        if !(epsilon > 0.0) {
            return Err(Error::Domain(format!(
                "pathloss offset must be positive, got {epsilon}"
            )));
        }
        Ok(Self { exponent, epsilon })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn gain(&self, distance: f64) -> f64 {
        1.0 / (self.epsilon + distance.abs().powf(self.exponent))
    }
}

/// Poisson user population with i.i.d. Bernoulli activity; transmit power
/// is fixed to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationSpec {
    mean_users: f64,
    activity: f64,
}

impl PopulationSpec {
    pub fn new(mean_users: f64, activity: f64) -> Result<Self> {
        if !(mean_users >= 0.0) {
            return Err(Error::Domain(format!(
                "mean user count must be >= 0, got {mean_users}"
            )));
        }
        if !(0.0..=1.0).contains(&activity) {
            return Err(Error::Domain(format!(
                "activity must lie in [0, 1], got {activity}"
            )));
        }
        Ok(Self {
            mean_users,
            activity,
        })
    }

    pub fn mean_users(&self) -> f64 {
        self.mean_users
    }

    pub fn activity(&self) -> f64 {
        self.activity
    }
}

/// Probe location y_p = n + c strictly between lattice points, so every
/// user keeps a positive distance to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementPoint {
    base: u32,
    offset: f64,
}

impl MeasurementPoint {
    pub fn new(base: u32, offset: f64) -> Result<Self> {
        if base < 1 {
            return Err(Error::Domain("measurement base must be >= 1".into()));
        }
        if !(offset > 0.0 && offset < 1.0) {
            return Err(Error::Domain(format!(
                "measurement offset must lie strictly inside (0, 1), got {offset}"
            )));
        }
        Ok(Self { base, offset })
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn coord(&self) -> f64 {
        self.base as f64 + self.offset
    }
}

/// Full model parameterization: lattice/mobility, obstacles, pathloss and
/// population.
#[derive(Debug, Clone)]
pub struct NetworkConfig {
    mobility: MobilitySpec,
    blockage: BlockageSpec,
    pathloss: PathlossSpec,
    population: PopulationSpec,
}

impl NetworkConfig {
    pub fn new(
        mobility: MobilitySpec,
        mean_obstacles: f64,
        gamma: f64,
        pathloss: PathlossSpec,
        population: PopulationSpec,
    ) -> Result<Self> {
        let blockage = BlockageSpec::new(mean_obstacles, gamma, mobility.n_points())?;
        Ok(Self {
            mobility,
            blockage,
            pathloss,
            population,
        })
    }

    pub fn mobility(&self) -> &MobilitySpec {
        &self.mobility
    }

    pub fn blockage(&self) -> &BlockageSpec {
        &self.blockage
    }

    pub fn pathloss(&self) -> &PathlossSpec {
        &self.pathloss
    }

    pub fn population(&self) -> &PopulationSpec {
        &self.population
    }

    pub fn with_mean_users(&self, mean_users: f64) -> Result<Self> {
        Ok(Self {
            population: PopulationSpec::new(mean_users, self.population.activity)?,
            ..self.clone()
        })
    }

    pub fn with_activity(&self, activity: f64) -> Result<Self> {
        Ok(Self {
            population: PopulationSpec::new(self.population.mean_users, activity)?,
            ..self.clone()
        })
    }

    pub fn with_mean_obstacles(&self, mean_obstacles: f64) -> Result<Self> {
        Ok(Self {
            blockage: BlockageSpec::new(
                mean_obstacles,
                self.blockage.gamma(),
                self.mobility.n_points(),
            )?,
            ..self.clone()
        })
    }

    pub fn with_mobility(&self, mobility: MobilitySpec) -> Result<Self> {
        Ok(Self {
            blockage: BlockageSpec::new(
                self.blockage.mean_obstacles(),
                self.blockage.gamma(),
                mobility.n_points(),
            )?,
            mobility,
            ..self.clone()
        })
    }

    /// Probe at base + offset, restricted to the left half of the lattice
    /// (the model is symmetric in the probe location).
    pub fn point(&self, base: u32, offset: f64) -> Result<MeasurementPoint> {
        let point = MeasurementPoint::new(base, offset)?;
        if base > self.mobility.n_points() / 2 {
            return Err(Error::Domain(format!(
                "measurement base {base} outside 1..={}",
                self.mobility.n_points() / 2
            )));
        }
        Ok(point)
    }
}

fn distance(n: u32, point: &MeasurementPoint) -> f64 {
    (n as f64 - point.coord()).abs()
}

fn same_side(n: u32, m: u32, point: &MeasurementPoint) -> bool {
    (n as f64 - point.coord()) * (m as f64 - point.coord()) > 0.0
}

/// E{I} = K xi sum_n E{beta_n} g(d_n) f(n).
pub fn mean_interference(config: &NetworkConfig, point: &MeasurementPoint) -> f64 {
    let k = config.population.mean_users;
    let xi = config.population.activity;
    let mut total = 0.0;
    for n in 1..=config.mobility.n_points() {
        let d = distance(n, point);
        total += beta_moment(1.0, d, &config.blockage).expect("first moment")
            * config.pathloss.gain(d)
            * config.mobility.steady_state_pdf(n).expect("lattice point");
    }
    k * xi * total
}

/// sum_n E{beta_n^2} g^2(d_n) f(n): the single-user quadratic term shared
/// by the second moment and the coefficient c3 = 2 * this.
fn quadratic_term(config: &NetworkConfig, point: &MeasurementPoint) -> f64 {
    let mut total = 0.0;
    for n in 1..=config.mobility.n_points() {
        let d = distance(n, point);
        let g = config.pathloss.gain(d);
        total += beta_moment(2.0, d, &config.blockage).expect("second moment")
            * g
            * g
            * config.mobility.steady_state_pdf(n).expect("lattice point");
    }
    total
}

/// E{I^2} = 2 K xi sum_n E{beta_n^2} g^2 f + K^2 xi^2 sigma.
pub fn second_moment_interference(config: &NetworkConfig, point: &MeasurementPoint) -> f64 {
    let k = config.population.mean_users;
    let xi = config.population.activity;
    2.0 * k * xi * quadratic_term(config, point) + k * k * xi * xi * sigma_spatial(config, point)
}

/// Standard deviation of interference from the closed-form moments.
pub fn std_interference(config: &NetworkConfig, point: &MeasurementPoint) -> f64 {
    let mean = mean_interference(config, point);
    (second_moment_interference(config, point) - mean * mean)
        .max(0.0)
        .sqrt()
}

/// Standard deviation when the spatial correlation is ignored, i.e. sigma
/// replaced by (E{I} / (K xi))^2. Underestimates the true spread.
pub fn std_interference_no_spatial(config: &NetworkConfig, point: &MeasurementPoint) -> f64 {
    let k = config.population.mean_users;
    let xi = config.population.activity;
    (2.0 * k * xi * quadratic_term(config, point)).sqrt()
}

/// Spatial term sigma = sum_{n,m} E{beta_n beta_m} g(d_n) g(d_m) f(n) f(m)
/// over ordered lattice pairs; links on the same side of the probe share
/// obstacles.
pub fn sigma_spatial(config: &NetworkConfig, point: &MeasurementPoint) -> f64 {
    let size = config.mobility.n_points();
    let gains: Vec<f64> = (1..=size)
        .map(|n| config.pathloss.gain(distance(n, point)))
        .collect();
    let pdf: Vec<f64> = (1..=size)
        .map(|n| config.mobility.steady_state_pdf(n).expect("lattice point"))
        .collect();
    let mut total = 0.0;
    for n in 1..=size {
        let d_n = distance(n, point);
        let weight_n = gains[(n - 1) as usize] * pdf[(n - 1) as usize];
        for m in 1..=size {
            let d_m = distance(m, point);
            let cross = spatial_cross_moment(d_n, d_m, same_side(n, m, point), &config.blockage);
            total += cross * weight_n * gains[(m - 1) as usize] * pdf[(m - 1) as usize];
        }
    }
    total
}

/// Temporal term sigma_l = sum_{n,k} E{beta_n beta_{n+k}} g(d_n) g(d_{n+k})
/// P(n -> n+k, l) f(n): one user observed at lag l, the cross-moment of its
/// losses sharing the obstacles of the overlapping link segment and
/// factorizing when the two positions straddle the probe.
pub fn sigma_temporal(
    config: &NetworkConfig,
    point: &MeasurementPoint,
    law: &DisplacementLaw,
) -> f64 {
    let size = config.mobility.n_points();
    let mut total = 0.0;
    for n in 1..=size {
        let d_n = distance(n, point);
        let weight =
            config.pathloss.gain(d_n) * config.mobility.steady_state_pdf(n).expect("lattice point");
        let mut inner = 0.0;
        for k in -law.max_shift()..=law.max_shift() {
            let prob = law.prob(n, k);
            if prob == 0.0 {
                continue;
            }
            let m = (n as i64 + k) as u32;
            let d_m = distance(m, point);
            inner += spatial_cross_moment(d_n, d_m, same_side(n, m, point), &config.blockage)
                * config.pathloss.gain(d_m)
                * prob;
        }
        total += weight * inner;
    }
    total
}

/// Lag-1, speed-1 temporal term written as the explicit four-case sums
/// around the probe (think / move toward / move away, and the two cells
/// n1 = floor(y_p), n2 = ceil(y_p) where a move can pass over the probe).
/// Kept as an independent code path against [`sigma_temporal`].
pub fn sigma_temporal_lag1_cases(
    config: &NetworkConfig,
    point: &MeasurementPoint,
    law: &DisplacementLaw,
) -> Result<f64> {
    if config.mobility.speed() != 1 {
        return Err(Error::Unsupported(format!(
            "lag-1 case decomposition requires speed 1, got {}",
            config.mobility.speed()
        )));
    }
    if law.lag() != 1 || law.max_shift() != 1 {
        return Err(Error::Unsupported(
            "lag-1 case decomposition requires a lag-1 displacement law".into(),
        ));
    }
    let size = config.mobility.n_points();
    let alpha = config.blockage.density();
    let gamma = config.blockage.gamma();
    let lower = point.base(); // n1 = floor(y_p)
    let upper = point.base() + 1; // n2 = ceil(y_p)
    if upper > size {
        return Err(Error::Domain("probe lies beyond the lattice".into()));
    }
    let c = point.offset();
    let c_bar = 1.0 - c;
    let g = |d: f64| config.pathloss.gain(d);
    let f = |n: u32| config.mobility.steady_state_pdf(n).expect("lattice point");
    let second_rate = 1.0 - gamma * gamma / 3.0;
    let first_rate = 1.0 - gamma / 2.0;
    // Extra factor when the user steps one point toward the probe (the
    // bypassed obstacles leave the shared-segment second moment) and when
    // it steps away (one fresh uncorrelated unit of obstacles).
    let toward = (alpha * (gamma / 2.0 - gamma * gamma / 3.0)).exp();
    let away = (-alpha * first_rate).exp();

    // Case 1: n < n1, distances d_n = y_p - n shrink to the right.
    let mut sigma_11 = 0.0;
    for n in 1..lower {
        let d = point.coord() - n as f64;
        let mut inner = law.prob(n, 0) * g(d);
        inner += toward * law.prob(n, 1) * g(d - 1.0);
        if n > 1 {
            inner += away * law.prob(n, -1) * g(d + 1.0);
        }
        sigma_11 += g(d) * f(n) * (-second_rate * alpha * d).exp() * inner;
    }

    // Case 2: n > n2, mirrored.
    let mut sigma_12 = 0.0;
    for n in (upper + 1)..=size {
        let d = n as f64 - point.coord();
        let mut inner = law.prob(n, 0) * g(d);
        inner += toward * law.prob(n, -1) * g(d - 1.0);
        if n < size {
            inner += away * law.prob(n, 1) * g(d + 1.0);
        }
        sigma_12 += g(d) * f(n) * (-second_rate * alpha * d).exp() * inner;
    }

    // Case 3: n = n1, d = c; a right move passes over the probe and the two
    // obstacle sets decouple, leaving e^{-alpha(1-gamma/2)} independent of c.
    let pass_over = (-alpha * first_rate).exp();
    let mut inner_3 = law.prob(lower, 0) * g(c);
    inner_3 += pass_over * (alpha * c * second_rate).exp() * law.prob(lower, 1) * g(c_bar);
    if lower > 1 {
        inner_3 += away * law.prob(lower, -1) * g(1.0 + c);
    }
    let sigma_13 = g(c) * f(lower) * (-alpha * c * second_rate).exp() * inner_3;

    // Case 4: n = n2, d = 1 - c, mirrored.
    let mut inner_4 = law.prob(upper, 0) * g(c_bar);
    if upper < size {
        inner_4 += pass_over * law.prob(upper, 1) * g(1.0 + c_bar);
    }
    inner_4 += pass_over * (alpha * c_bar * second_rate).exp() * law.prob(upper, -1) * g(c);
    let sigma_14 = g(c_bar) * f(upper) * (-alpha * c_bar * second_rate).exp() * inner_4;

    Ok(sigma_11 + sigma_12 + sigma_13 + sigma_14)
}

/// Coefficients of the rational form rho_l = (c1 + c2 K) / (c3 + c2 K):
/// c1 = xi sigma_l, c2 = xi (sigma - (sum E{beta} g f)^2),
/// c3 = 2 sum E{beta^2} g^2 f.
#[derive(Debug, Clone, Copy)]
pub struct RhoCoefficients {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl RhoCoefficients {
    /// Evaluate the rational form at mean user count `k`.
    pub fn rho_at(&self, k: f64) -> f64 {
        (self.c1 + self.c2 * k) / (self.c3 + self.c2 * k)
    }
}

pub fn rho_coefficients(
    config: &NetworkConfig,
    point: &MeasurementPoint,
    law: &DisplacementLaw,
) -> RhoCoefficients {
    let xi = config.population.activity;
    let sigma = sigma_spatial(config, point);
    let sigma_l = sigma_temporal(config, point, law);
    let k = config.population.mean_users;
    let xi_guard = if xi > 0.0 { xi } else { 1.0 };
    let mean_single = if k > 0.0 && xi > 0.0 {
        mean_interference(config, point) / (k * xi_guard)
    } else {
        // Degenerate populations leave the per-user sum untouched.
        mean_interference(&config.with_mean_users(1.0).expect("valid").with_activity(1.0).expect("valid"), point)
    };
    RhoCoefficients {
        c1: xi * sigma_l,
        c2: xi * (sigma - mean_single * mean_single),
        c3: 2.0 * quadratic_term(config, point),
    }
}

/// Pearson correlation of interference at lag l with a caller-supplied
/// displacement law (use [`DisplacementLaw::identity`] for a static
/// network). A single deterministic user (K = 1) carries no cross-user
/// term and reduces to c1/c3.
pub fn pearson_rho_with_law(
    config: &NetworkConfig,
    point: &MeasurementPoint,
    law: &DisplacementLaw,
) -> Result<f64> {
    let k = config.population.mean_users;
    let xi = config.population.activity;
    if k <= 0.0 || xi <= 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    let coeffs = rho_coefficients(config, point, law);
    if k == 1.0 {
        return Ok(coeffs.c1 / coeffs.c3);
    }
    let mean = mean_interference(config, point);
    let second = second_moment_interference(config, point);
    let variance = second - mean * mean;
    if variance <= 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    let sigma = sigma_spatial(config, point);
    let sigma_l = sigma_temporal(config, point, law);
    let cross = k * xi * xi * sigma_l + k * k * xi * xi * sigma;
    Ok((cross - mean * mean) / variance)
}

/// Pearson correlation at lag l under the exact mobility chain.
pub fn pearson_rho(config: &NetworkConfig, point: &MeasurementPoint, lag: u32) -> Result<f64> {
    let law = displacement_law(&config.mobility, lag)?;
    pearson_rho_with_law(config, point, &law)
}

/// Smallest mean user count at which the blockage correlation overtakes the
/// blockage-free one, from inverting (c1 + c2 K)/(c3 + c2 K) = rho|_{alpha=0}.
/// `None` when the curves never cross for positive K (e.g. alpha -> 0).
pub fn critical_user_count(
    config: &NetworkConfig,
    point: &MeasurementPoint,
    law: &DisplacementLaw,
) -> Result<Option<f64>> {
    let clear = config.with_mean_obstacles(0.0)?;
    let baseline = rho_coefficients(&clear, point, law);
    let rho_clear = baseline.c1 / baseline.c3;
    if !(rho_clear < 1.0) {
        return Ok(None);
    }
    let coeffs = rho_coefficients(config, point, law);
    if coeffs.c2 <= 1e-13 * coeffs.c3 {
        return Ok(None);
    }
    let k_star = (rho_clear * coeffs.c3 - coeffs.c1) / (coeffs.c2 * (1.0 - rho_clear));
    if k_star.is_finite() && k_star > 0.0 {
        Ok(Some(k_star))
    } else {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// N=50, K=50, xi=1, a=2, eps=0.5, M=5, gamma=0.5, u=1.
    fn reference_config(mean_obstacles: f64) -> NetworkConfig {
        NetworkConfig::new(
            MobilitySpec::new(50, 1, 5).unwrap(),
            mean_obstacles,
            0.5,
            PathlossSpec::new(2.0, 0.5).unwrap(),
            PopulationSpec::new(50.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    fn midpoints(config: &NetworkConfig) -> Vec<MeasurementPoint> {
        (1..=config.mobility().n_points() / 2)
            .map(|n| config.point(n, 0.5).unwrap())
            .collect()
    }

    #[test]
    fn mean_reduces_without_blockage() {
        let config = reference_config(0.0);
        let point = config.point(12, 0.5).unwrap();
        let direct: f64 = (1..=50)
            .map(|n| {
                config.pathloss().gain(distance(n, &point))
                    * config.mobility().steady_state_pdf(n).unwrap()
            })
            .sum();
        assert_abs_diff_eq!(
            mean_interference(&config, &point),
            50.0 * direct,
            epsilon = 1e-12
        );
    }

    #[test]
    fn mean_scales_and_vanishes() {
        let config = reference_config(10.0);
        let point = config.point(10, 0.5).unwrap();
        let base = mean_interference(&config, &point);
        assert!(base > 0.0);
        let doubled = mean_interference(&config.with_mean_users(100.0).unwrap(), &point);
        assert_abs_diff_eq!(doubled, 2.0 * base, epsilon = 1e-12);
        let half_active = mean_interference(&config.with_activity(0.5).unwrap(), &point);
        assert_abs_diff_eq!(half_active, 0.5 * base, epsilon = 1e-12);
        assert_eq!(
            mean_interference(&config.with_mean_users(0.0).unwrap(), &point),
            0.0
        );
        assert_eq!(
            mean_interference(&config.with_activity(0.0).unwrap(), &point),
            0.0
        );
        // Denser obstacles only suppress.
        let denser = mean_interference(&config.with_mean_obstacles(40.0).unwrap(), &point);
        assert!(denser < base);
    }

    #[test]
    fn second_moment_dominates_squared_mean() {
        for n_o in [0.0, 10.0, 40.0] {
            let config = reference_config(n_o);
            for point in midpoints(&config) {
                let mean = mean_interference(&config, &point);
                let second = second_moment_interference(&config, &point);
                assert!(second > mean * mean, "variance must be positive");
            }
        }
        let empty = reference_config(10.0).with_mean_users(0.0).unwrap();
        let point = empty.point(5, 0.5).unwrap();
        assert_eq!(second_moment_interference(&empty, &point), 0.0);
    }

    #[test]
    fn sigma_factorizes_without_blockage() {
        // Lemma 1 proof step: at alpha = 0, sigma = (E{I} / (K xi))^2.
        let config = reference_config(0.0);
        for point in midpoints(&config) {
            let sigma = sigma_spatial(&config, &point);
            let mean_single = mean_interference(&config, &point) / 50.0;
            assert_abs_diff_eq!(sigma, mean_single * mean_single, epsilon = 1e-14);
        }
    }

    #[test]
    fn sigma_exceeds_squared_mean_under_blockage() {
        for n_o in [10.0, 40.0] {
            let config = reference_config(n_o);
            for point in midpoints(&config) {
                let sigma = sigma_spatial(&config, &point);
                let mean_single = mean_interference(&config, &point) / 50.0;
                assert!(sigma > mean_single * mean_single, "c2 must be positive");
            }
        }
    }

    #[test]
    fn ignoring_spatial_correlation_underestimates_std() {
        let config = reference_config(40.0);
        let point = config.point(25, 0.5).unwrap();
        let full = std_interference(&config, &point);
        let surrogate = std_interference_no_spatial(&config, &point);
        assert!(surrogate < full, "{surrogate} should undershoot {full}");
    }

    #[test]
    fn sigma_temporal_reductions() {
        let law = displacement_law(&MobilitySpec::new(50, 1, 5).unwrap(), 1).unwrap();
        let clear = reference_config(0.0);
        let point = clear.point(20, 0.5).unwrap();
        // Without blockage the kernel sum keeps only g g P f.
        let mut direct = 0.0;
        for n in 1..=50u32 {
            for k in -1..=1i64 {
                let p = law.prob(n, k);
                if p > 0.0 {
                    let m = (n as i64 + k) as u32;
                    direct += clear.pathloss().gain(distance(n, &point))
                        * clear.pathloss().gain(distance(m, &point))
                        * p
                        * clear.mobility().steady_state_pdf(n).unwrap();
                }
            }
        }
        assert_abs_diff_eq!(sigma_temporal(&clear, &point, &law), direct, epsilon = 1e-14);

        // A frozen user contributes its quadratic term: sigma_l = c3 / 2.
        let blocked = reference_config(10.0);
        let frozen = DisplacementLaw::identity(50, 1);
        let static_sigma = sigma_temporal(&blocked, &point, &frozen);
        assert_abs_diff_eq!(
            static_sigma,
            quadratic_term(&blocked, &point),
            epsilon = 1e-14
        );
    }

    #[test]
    fn lag1_cases_match_generic_kernel_sum() {
        let law = displacement_law(&MobilitySpec::new(50, 1, 5).unwrap(), 1).unwrap();
        for n_o in [0.0, 10.0, 40.0] {
            let config = reference_config(n_o);
            for point in midpoints(&config) {
                let generic = sigma_temporal(&config, &point, &law);
                let cases = sigma_temporal_lag1_cases(&config, &point, &law).unwrap();
                assert!(
                    (generic - cases).abs() < 1e-12,
                    "decomposition mismatch at y_p={}: {generic} vs {cases}",
                    point.coord()
                );
            }
        }
    }

    #[test]
    fn lag1_cases_reject_other_speeds() {
        let fast = NetworkConfig::new(
            MobilitySpec::new(50, 2, 5).unwrap(),
            10.0,
            0.5,
            PathlossSpec::new(2.0, 0.5).unwrap(),
            PopulationSpec::new(50.0, 1.0).unwrap(),
        )
        .unwrap();
        let law = displacement_law(fast.mobility(), 1).unwrap();
        let point = fast.point(10, 0.5).unwrap();
        assert!(matches!(
            sigma_temporal_lag1_cases(&fast, &point, &law),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn pass_over_cross_moment_is_offset_free() {
        // The straddling links of lengths c and 1-c always multiply to
        // e^{-alpha (1 - gamma/2)}.
        let config = reference_config(10.0);
        let alpha = config.blockage().density();
        let expected = (-alpha * (1.0 - 0.25)).exp();
        for c in [0.2, 0.5, 0.8] {
            let got = spatial_cross_moment(c, 1.0 - c, false, config.blockage());
            assert_abs_diff_eq!(got, expected, epsilon = 1e-15);
        }
    }

    #[test]
    fn rho_without_blockage_ignores_user_count() {
        let law = displacement_law(&MobilitySpec::new(50, 1, 5).unwrap(), 1).unwrap();
        let clear = reference_config(0.0);
        for point in [clear.point(2, 0.5).unwrap(), clear.point(25, 0.5).unwrap()] {
            let rho_1 =
                pearson_rho_with_law(&clear.with_mean_users(1.0).unwrap(), &point, &law).unwrap();
            for k in [10.0, 100.0] {
                let rho_k =
                    pearson_rho_with_law(&clear.with_mean_users(k).unwrap(), &point, &law).unwrap();
                assert!((rho_k - rho_1).abs() < 1e-12, "{rho_k} vs {rho_1}");
            }
            assert!(rho_1 <= 0.5 + 1e-12);
        }
        // The bound scales with the activity.
        for xi in [0.25, 0.5] {
            let cfg = clear.with_activity(xi).unwrap();
            let point = cfg.point(13, 0.5).unwrap();
            let rho = pearson_rho_with_law(&cfg, &point, &law).unwrap();
            assert!(rho <= xi / 2.0 + 1e-12);
        }
    }

    #[test]
    fn static_clear_network_has_rho_one_half() {
        let clear = reference_config(0.0);
        let frozen = DisplacementLaw::identity(50, 1);
        for point in midpoints(&clear) {
            let rho = pearson_rho_with_law(&clear, &point, &frozen).unwrap();
            assert_abs_diff_eq!(rho, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_user_rho_stays_below_clear_baseline() {
        let law = displacement_law(&MobilitySpec::new(50, 1, 5).unwrap(), 1).unwrap();
        let blocked = reference_config(10.0).with_mean_users(1.0).unwrap();
        let clear = reference_config(0.0).with_mean_users(1.0).unwrap();
        for point in midpoints(&blocked) {
            let rho_blocked = pearson_rho_with_law(&blocked, &point, &law).unwrap();
            let coeffs = rho_coefficients(&blocked, &point, &law);
            assert_abs_diff_eq!(rho_blocked, coeffs.c1 / coeffs.c3, epsilon = 1e-15);
            let rho_clear = pearson_rho_with_law(&clear, &point, &law).unwrap();
            assert!(rho_blocked <= rho_clear + 1e-12);
        }
    }

    #[test]
    fn rho_errors_on_degenerate_processes() {
        let law = DisplacementLaw::identity(50, 1);
        let config = reference_config(10.0);
        let point = config.point(10, 0.5).unwrap();
        assert!(matches!(
            pearson_rho_with_law(&config.with_mean_users(0.0).unwrap(), &point, &law),
            Err(Error::UndefinedCorrelation)
        ));
        assert!(matches!(
            pearson_rho_with_law(&config.with_activity(0.0).unwrap(), &point, &law),
            Err(Error::UndefinedCorrelation)
        ));
    }

    #[test]
    fn rational_form_matches_direct_evaluation() {
        let law = displacement_law(&MobilitySpec::new(50, 1, 5).unwrap(), 1).unwrap();
        for n_o in [10.0, 40.0] {
            let config = reference_config(n_o);
            for point in [config.point(3, 0.5).unwrap(), config.point(24, 0.5).unwrap()] {
                let coeffs = rho_coefficients(&config, &point, &law);
                assert!(coeffs.c1 > 0.0 && coeffs.c2 > 0.0 && coeffs.c3 > 0.0);
                assert!(coeffs.c3 >= coeffs.c1);
                for k in [2.0, 5.0, 50.0, 500.0] {
                    let direct =
                        pearson_rho_with_law(&config.with_mean_users(k).unwrap(), &point, &law)
                            .unwrap();
                    assert!(
                        (direct - coeffs.rho_at(k)).abs() < 1e-10,
                        "K={k}: {direct} vs {}",
                        coeffs.rho_at(k)
                    );
                }
            }
        }
    }

    #[test]
    fn rho_grows_with_user_count_and_tends_to_one() {
        let law = displacement_law(&MobilitySpec::new(50, 1, 5).unwrap(), 1).unwrap();
        let config = reference_config(10.0);
        let point = config.point(20, 0.5).unwrap();
        let mut last = 0.0;
        for k in 2..=500u32 {
            let rho = pearson_rho_with_law(&config.with_mean_users(k as f64).unwrap(), &point, &law)
                .unwrap();
            assert!(rho > last, "rho must grow strictly at K={k}");
            assert!((0.0..=1.0).contains(&rho));
            last = rho;
        }
        // Large-K expansion rho ~ 1 - (c3 - c1)/(K c2).
        let coeffs = rho_coefficients(&config, &point, &law);
        let k = 1e6;
        let direct =
            pearson_rho_with_law(&config.with_mean_users(k).unwrap(), &point, &law).unwrap();
        let expansion = 1.0 - (coeffs.c3 - coeffs.c1) / (k * coeffs.c2);
        assert!((direct - expansion).abs() < 1e-5);
    }

    #[test]
    fn crossover_count_behaves() {
        let law = displacement_law(&MobilitySpec::new(50, 1, 5).unwrap(), 1).unwrap();
        let config = reference_config(10.0);
        let near_edge = config.point(2, 0.5).unwrap();
        let central = config.point(25, 0.5).unwrap();
        let k_edge = critical_user_count(&config, &near_edge, &law)
            .unwrap()
            .expect("finite crossover");
        let k_center = critical_user_count(&config, &central, &law)
            .unwrap()
            .expect("finite crossover");
        assert!((k_edge - k_center).abs() > 1e-3, "K* should vary over space");

        // rho with blockage sits below the clear baseline just under K*,
        // above it just over K*.
        let clear = config.with_mean_obstacles(0.0).unwrap();
        for (point, k_star) in [(&near_edge, k_edge), (&central, k_center)] {
            let below = (k_star * 0.9).max(2.0);
            let above = k_star * 1.1;
            let rho_clear =
                pearson_rho_with_law(&clear.with_mean_users(below).unwrap(), point, &law).unwrap();
            let rho_below =
                pearson_rho_with_law(&config.with_mean_users(below).unwrap(), point, &law).unwrap();
            assert!(rho_below < rho_clear);
            let rho_clear_hi =
                pearson_rho_with_law(&clear.with_mean_users(above).unwrap(), point, &law).unwrap();
            let rho_above =
                pearson_rho_with_law(&config.with_mean_users(above).unwrap(), point, &law).unwrap();
            assert!(rho_above > rho_clear_hi);
        }

        // Without obstacles the curves coincide and no crossover exists.
        assert!(critical_user_count(&clear, &central, &law)
            .unwrap()
            .is_none());
    }

    #[test]
    fn point_validation() {
        let config = reference_config(10.0);
        assert!(config.point(0, 0.5).is_err());
        assert!(config.point(26, 0.5).is_err());
        assert!(config.point(10, 0.0).is_err());
        assert!(config.point(10, 1.0).is_err());
        assert!(config.point(25, 0.25).is_ok());
    }
}
