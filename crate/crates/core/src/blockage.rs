//! Poisson obstacle fields with per-obstacle uniform power retention.
//!
//! Obstacles are points on the continuous segment [1, N]; each one scales
//! the power of any link crossing it by an independent factor uniform on
//! [0, gamma] (gamma = 0.5 means at least 3 dB attenuation per obstacle).
//! The module provides quenched field sampling for the simulator together
//! with the exact moments and cross-moments of the aggregate penetration
//! loss used by the analytic side.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};

/// Obstacle process parameters. `density` is the per-lattice-unit rate
/// N_o / (N - 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockageSpec {
    mean_obstacles: f64,
    gamma: f64,
    density: f64,
}

impl BlockageSpec {
    pub fn new(mean_obstacles: f64, gamma: f64, n_points: u32) -> Result<Self> {
        if !(mean_obstacles >= 0.0) {
            return Err(Error::Domain(format!(
                "mean obstacle count must be >= 0, got {mean_obstacles}"
            )));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::Domain(format!(
                "gamma must lie in [0, 1], got {gamma}"
            )));
        }
        if n_points < 2 {
            return Err(Error::Domain("obstacle field needs a lattice of size >= 2".into()));
        }
        Ok(Self {
            mean_obstacles,
            gamma,
            density: mean_obstacles / (n_points - 1) as f64,
        })
    }

    pub fn mean_obstacles(&self) -> f64 {
        self.mean_obstacles
    }

    /// Upper end of the per-obstacle retained-power fraction.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Obstacle density alpha = N_o / (N - 1).
    pub fn density(&self) -> f64 {
        self.density
    }
}

/// One quenched realization: obstacle coordinates (kept sorted) with their
/// retained-power fractions, immutable after sampling.
#[derive(Debug, Clone)]
pub struct ObstacleField {
    positions: Vec<f64>,
    losses: Vec<f64>,
    log_prefix: Vec<f64>,
    zero_prefix: Vec<u32>,
}

impl ObstacleField {
    fn from_parts(mut pairs: Vec<(f64, f64)>) -> Self {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let positions: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let losses: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let mut log_prefix = Vec::with_capacity(losses.len() + 1);
        let mut zero_prefix = Vec::with_capacity(losses.len() + 1);
        log_prefix.push(0.0);
        zero_prefix.push(0);
        for &loss in &losses {
            let last_log = *log_prefix.last().unwrap();
            let last_zero = *zero_prefix.last().unwrap();
            if loss == 0.0 {
                log_prefix.push(last_log);
                zero_prefix.push(last_zero + 1);
            } else {
                log_prefix.push(last_log + loss.ln());
                zero_prefix.push(last_zero);
            }
        }
        Self {
            positions,
            losses,
            log_prefix,
            zero_prefix,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    /// Retained-power fraction of the link between `x` and `y`: the product
    /// of the losses of every obstacle strictly inside the open interval.
    /// An unobstructed link retains everything (beta = 1).
    pub fn link_loss(&self, x: f64, y: f64) -> f64 {
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        let start = self.positions.partition_point(|&p| p <= lo);
        let end = self.positions.partition_point(|&p| p < hi);
        if end <= start {
            return 1.0;
        }
        if self.zero_prefix[end] > self.zero_prefix[start] {
            return 0.0;
        }
        (self.log_prefix[end] - self.log_prefix[start]).exp()
    }
}

/// Draw a quenched field: a Poisson(N_o) number of obstacles placed
/// uniformly on [1, N] with losses uniform on [0, gamma].
pub fn sample_field(spec: &BlockageSpec, n_points: u32, seed: u64) -> ObstacleField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_field_with(spec, n_points, &mut rng)
}

/// Same as [`sample_field`] but drawing from a caller-owned stream.
pub fn sample_field_with<R: Rng>(spec: &BlockageSpec, n_points: u32, rng: &mut R) -> ObstacleField {
    let count = if spec.mean_obstacles == 0.0 {
        0
    } else {
        Poisson::new(spec.mean_obstacles)
            .expect("positive Poisson mean")
            .sample(rng) as usize
    };
    let span = (n_points - 1) as f64;
    let pairs = (0..count)
        .map(|_| {
            let position = 1.0 + span * rng.random::<f64>();
            let loss = spec.gamma * rng.random::<f64>();
            (position, loss)
        })
        .collect();
    ObstacleField::from_parts(pairs)
}

/// Density of the product of `n_obstacles` i.i.d. uniforms on [0, gamma],
/// h(b) = (log(gamma^n / b))^(n-1) / (gamma^n (n-1)!) on (0, gamma^n].
/// Outside the support the density is zero.
pub fn product_loss_pdf(n_obstacles: u32, gamma: f64, beta: f64) -> Result<f64> {
    if n_obstacles < 1 {
        return Err(Error::Domain("product needs at least one factor".into()));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Domain(format!(
            "product-loss pdf needs gamma in (0, 1]; gamma = {gamma} degenerates to a point mass at 0"
        )));
    }
    let n = n_obstacles as f64;
    let support_top = gamma.powi(n_obstacles as i32);
    if beta <= 0.0 || beta > support_top {
        return Ok(0.0);
    }
    if n_obstacles == 1 {
        return Ok(1.0 / gamma);
    }
    let log_ratio = n * gamma.ln() - beta.ln();
    let ln_factorial: f64 = (1..n_obstacles).map(|k| (k as f64).ln()).sum();
    let ln_density = (n - 1.0) * log_ratio.ln() - ln_factorial - n * gamma.ln();
    Ok(ln_density.exp())
}

/// s-th moment of the penetration loss over a link of length `d`:
/// E{beta^s} = exp(-alpha d (1 - gamma^s / (1 + s))), s > -1.
pub fn beta_moment(s: f64, d: f64, spec: &BlockageSpec) -> Result<f64> {
    if s <= -1.0 {
        return Err(Error::Domain(format!("moment order must exceed -1, got {s}")));
    }
    if d < 0.0 {
        return Err(Error::Domain(format!("link length must be >= 0, got {d}")));
    }
    Ok((-spec.density * d * (1.0 - spec.gamma.powf(s) / (1.0 + s))).exp())
}

/// Cross-moment E{beta_n beta_m} of the losses of two links from a common
/// endpoint. Links on opposite sides see disjoint obstacle sets and
/// factorize; links on the same side share the obstacles of the overlap.
pub fn spatial_cross_moment(d_n: f64, d_m: f64, same_side: bool, spec: &BlockageSpec) -> f64 {
    let alpha = spec.density;
    let gamma = spec.gamma;
    if same_side {
        let shared = d_n.min(d_m);
        let exclusive = (d_n - d_m).abs();
        (-alpha * (shared * (1.0 - gamma * gamma / 3.0) + exclusive * (1.0 - gamma / 2.0))).exp()
    } else {
        (-alpha * (d_n + d_m) * (1.0 - gamma / 2.0)).exp()
    }
}
