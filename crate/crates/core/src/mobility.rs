//! Discrete random-waypoint mobility on the bounded lattice {1, .., N}.
//!
//! A user picks a destination uniformly among the other N-1 lattice points,
//! travels toward it at constant speed `u` points per slot, then pauses
//! ("thinks") for a duration drawn uniformly from {0, .., M} slots and
//! repeats. The module provides the closed-form steady-state location pdf,
//! an exact full-state Markov chain with a stationary solver, displacement
//! laws at arbitrary lag, and a seeded trajectory simulator.
//!
//! Motion is resolved internally at 1/u-slot ticks (one lattice point per
//! tick, think durations of M*u ticks) and observed every u-th tick. This
//! keeps arrivals exact for u > 1: a whole-slot jump that clamps at the
//! destination inflates the expected travel time per leg from E[D]/u to
//! E[ceil(D/u)] and drags the chain's occupancy off the closed-form pdf.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Random-waypoint mobility parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MobilitySpec {
    n_points: u32,
    speed: u32,
    max_think: u32,
}

impl MobilitySpec {
    /// Lattice size `n_points` >= 3, speed in {1, .., n_points - 1} lattice
    /// points per slot, maximum think time `max_think` >= 0 slots.
    pub fn new(n_points: u32, speed: u32, max_think: u32) -> Result<Self> {
        if n_points < 3 {
            return Err(Error::Domain(format!(
                "lattice size must be at least 3, got {n_points}"
            )));
        }
        if speed < 1 || speed >= n_points {
            return Err(Error::Domain(format!(
                "speed must satisfy 1 <= u < N, got u={speed}, N={n_points}"
            )));
        }
        Ok(Self {
            n_points,
            speed,
            max_think,
        })
    }

    pub fn n_points(&self) -> u32 {
        self.n_points
    }

    pub fn speed(&self) -> u32 {
        self.speed
    }

    pub fn max_think(&self) -> u32 {
        self.max_think
    }

    /// Long-run fraction of slots a user spends thinking,
    /// p = (M/2) / (M/2 + (N+1)/(3u)). Zero iff M = 0.
    pub fn think_fraction(&self) -> f64 {
        let m = self.max_think as f64;
        let n = self.n_points as f64;
        let u = self.speed as f64;
        (m / 2.0) / (m / 2.0 + (n + 1.0) / (3.0 * u))
    }

    fn check_point(&self, n: u32) -> Result<()> {
        if n < 1 || n > self.n_points {
            return Err(Error::Domain(format!(
                "lattice point {n} outside 1..={}",
                self.n_points
            )));
        }
        Ok(())
    }

    /// Steady-state probability of finding a user at lattice point `n`:
    /// a p-weighted mix of the uniform think distribution and the quadratic
    /// travel occupancy. Symmetric under n <-> N+1-n and strictly positive.
    pub fn steady_state_pdf(&self, n: u32) -> Result<f64> {
        self.check_point(n)?;
        let p = self.think_fraction();
        let size = self.n_points as f64;
        let x = n as f64;
        let travel = (3.0 * size * (2.0 * x - 1.0) - 6.0 * x * (x - 1.0) - 3.0)
            / (size * (size * size - 1.0));
        Ok(p / size + (1.0 - p) * travel)
    }

    /// Probability that a user observed at `n` is thinking there,
    /// p / (N f(n)). With speed 1 this is also the probability of remaining
    /// at `n` for one more slot; at higher speeds a mid-slot turnaround can
    /// return a moving user to `n` as well.
    pub fn think_probability(&self, n: u32) -> Result<f64> {
        let f = self.steady_state_pdf(n)?;
        Ok(self.think_fraction() / (self.n_points as f64 * f))
    }

    /// Think durations are stored in ticks of 1/u slot.
    fn max_think_ticks(&self) -> u32 {
        self.max_think * self.speed
    }
}

/// Full Markov state of one user. `think_ticks` counts the remaining pause
/// in ticks of 1/u slot (so whole slots for u = 1); it is positive only at
/// the destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FullState {
    pub position: u32,
    pub destination: u32,
    pub think_ticks: u32,
}

impl FullState {
    fn next_toward(&self, dest: u32) -> u32 {
        if dest > self.position {
            self.position + 1
        } else {
            self.position - 1
        }
    }
}

/// Row-stochastic transition structure over [`FullState`], at tick
/// resolution. One observed slot equals `ticks_per_slot` applications.
pub struct FullChain {
    spec: MobilitySpec,
    states: Vec<FullState>,
    rows: Vec<Vec<(u32, f64)>>,
}

/// Exact Markovianization of the mobility model.
pub fn build_full_chain(spec: &MobilitySpec) -> FullChain {
    FullChain::build(spec)
}

impl FullChain {
    pub fn build(spec: &MobilitySpec) -> Self {
        let n = spec.n_points;
        let max_ticks = spec.max_think_ticks();
        let mut states = Vec::with_capacity((n * n + n * max_ticks) as usize);
        // Travel and decision states (think_ticks = 0), then think states.
        for pos in 1..=n {
            for dest in 1..=n {
                states.push(FullState {
                    position: pos,
                    destination: dest,
                    think_ticks: 0,
                });
            }
        }
        for pos in 1..=n {
            for ticks in 1..=max_ticks {
                states.push(FullState {
                    position: pos,
                    destination: pos,
                    think_ticks: ticks,
                });
            }
        }
        let chain = Self {
            spec: *spec,
            states,
            rows: Vec::new(),
        };
        let rows = chain
            .states
            .iter()
            .map(|s| {
                chain
                    .tick_transitions(s)
                    .into_iter()
                    .map(|(t, p)| (chain.index_of(&t) as u32, p))
                    .collect()
            })
            .collect();
        Self { rows, ..chain }
    }

    pub fn spec(&self) -> &MobilitySpec {
        &self.spec
    }

    pub fn states(&self) -> &[FullState] {
        &self.states
    }

    pub fn ticks_per_slot(&self) -> u32 {
        self.spec.speed
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    fn index_of(&self, s: &FullState) -> usize {
        let n = self.spec.n_points;
        if s.think_ticks == 0 {
            ((s.position - 1) * n + (s.destination - 1)) as usize
        } else {
            let max_ticks = self.spec.max_think_ticks();
            (n * n + (s.position - 1) * max_ticks + (s.think_ticks - 1)) as usize
        }
    }

    /// Successor states of one tick with their probabilities.
    fn tick_transitions(&self, s: &FullState) -> Vec<(FullState, f64)> {
        let spec = &self.spec;
        let n = spec.n_points;
        let m = spec.max_think;
        let mut out = Vec::new();
        if s.think_ticks > 0 {
            out.push((
                FullState {
                    think_ticks: s.think_ticks - 1,
                    ..*s
                },
                1.0,
            ));
            return out;
        }
        let arrivals = |pos: u32, dest: u32, weight: f64, out: &mut Vec<(FullState, f64)>| {
            if pos == dest {
                // Landing draws the think duration to start next tick.
                let w = weight / (m + 1) as f64;
                for think in 0..=m {
                    out.push((
                        FullState {
                            position: dest,
                            destination: dest,
                            think_ticks: think * spec.speed,
                        },
                        w,
                    ));
                }
            } else {
                out.push((
                    FullState {
                        position: pos,
                        destination: dest,
                        think_ticks: 0,
                    },
                    weight,
                ));
            }
        };
        if s.position == s.destination {
            // Think finished (or zero draw): pick a fresh destination and move.
            let w = 1.0 / (n - 1) as f64;
            for dest in 1..=n {
                if dest == s.position {
                    continue;
                }
                arrivals(s.next_toward(dest), dest, w, &mut out);
            }
        } else {
            arrivals(s.next_toward(s.destination), s.destination, 1.0, &mut out);
        }
        out
    }

    /// Stationary distribution by lazy power iteration, v <- (v + vP)/2;
    /// the contract is an L1 residual |vP - v| below 1e-12. The lazy step
    /// shares the fixed point with P and also converges when the chain is
    /// periodic (u even or M = 0 conserves the parity of position + tick).
    pub fn stationary_distribution(&self) -> Result<Vec<f64>> {
        const TOL: f64 = 1e-13;
        const MAX_ITERS: u64 = 500_000;
        let size = self.states.len();
        let mut current = vec![1.0 / size as f64; size];
        let mut image = vec![0.0; size];
        let mut residual = f64::INFINITY;
        for _ in 0..MAX_ITERS {
            image.iter_mut().for_each(|x| *x = 0.0);
            for (i, row) in self.rows.iter().enumerate() {
                let mass = current[i];
                if mass == 0.0 {
                    continue;
                }
                for &(j, p) in row {
                    image[j as usize] += mass * p;
                }
            }
            residual = current
                .iter()
                .zip(image.iter())
                .map(|(a, b)| (a - b).abs())
                .sum();
            for (c, im) in current.iter_mut().zip(image.iter()) {
                *c = 0.5 * (*c + im);
            }
            if residual < TOL {
                let total: f64 = current.iter().sum();
                current.iter_mut().for_each(|x| *x /= total);
                return Ok(current);
            }
        }
        Err(Error::NonConvergence {
            residual,
            iterations: MAX_ITERS,
        })
    }

    /// Marginal of a full-state distribution over position (index 0 is
    /// lattice point 1).
    pub fn position_marginal(&self, dist: &[f64]) -> Vec<f64> {
        let mut marginal = vec![0.0; self.spec.n_points as usize];
        for (s, w) in self.states.iter().zip(dist) {
            marginal[(s.position - 1) as usize] += w;
        }
        marginal
    }

    /// One application of the tick transition to a distribution over states.
    fn propagate_tick(&self, dist: &mut Vec<f64>, scratch: &mut Vec<f64>) {
        scratch.iter_mut().for_each(|x| *x = 0.0);
        for (i, row) in self.rows.iter().enumerate() {
            let mass = dist[i];
            if mass == 0.0 {
                continue;
            }
            for &(j, p) in row {
                scratch[j as usize] += mass * p;
            }
        }
        std::mem::swap(dist, scratch);
    }

    /// Displacement law at `lag` slots derived from a stationary full-state
    /// distribution: condition on the position, propagate lag*u ticks, and
    /// marginalize.
    pub fn displacement_law_from(&self, stationary: &[f64], lag: u32) -> Result<DisplacementLaw> {
        if lag == 0 {
            return Err(Error::Domain("displacement law requires lag >= 1".into()));
        }
        let n = self.spec.n_points;
        let max_shift = (self.spec.speed * lag) as i64;
        let width = (2 * max_shift + 1) as usize;
        let marginal = self.position_marginal(stationary);
        let mut rows = Vec::with_capacity(n as usize);
        let size = self.states.len();
        let mut dist = vec![0.0; size];
        let mut scratch = vec![0.0; size];
        for origin in 1..=n {
            let weight = marginal[(origin - 1) as usize];
            dist.iter_mut().for_each(|x| *x = 0.0);
            for (idx, s) in self.states.iter().enumerate() {
                if s.position == origin {
                    dist[idx] = stationary[idx] / weight;
                }
            }
            for _ in 0..self.spec.speed * lag {
                self.propagate_tick(&mut dist, &mut scratch);
            }
            let mut row = vec![0.0; width];
            for (idx, s) in self.states.iter().enumerate() {
                let mass = dist[idx];
                if mass == 0.0 {
                    continue;
                }
                let shift = s.position as i64 - origin as i64;
                debug_assert!(shift.abs() <= max_shift);
                row[(shift + max_shift) as usize] += mass;
            }
            rows.push(row);
        }
        DisplacementLaw::new(n, lag, max_shift, rows)
    }
}

/// Conditional law P(n -> n+k, l): probability that a stationary user seen
/// at lattice point n sits at n+k exactly l slots later.
#[derive(Debug, Clone)]
pub struct DisplacementLaw {
    n_points: u32,
    lag: u32,
    max_shift: i64,
    rows: Vec<Vec<f64>>,
}

impl DisplacementLaw {
    pub fn new(n_points: u32, lag: u32, max_shift: i64, rows: Vec<Vec<f64>>) -> Result<Self> {
        let law = Self {
            n_points,
            lag,
            max_shift,
            rows,
        };
        law.validate()?;
        Ok(law)
    }

    /// Kernel of a user that never moves: P(n -> n, l) = 1.
    pub fn identity(n_points: u32, lag: u32) -> Self {
        Self {
            n_points,
            lag,
            max_shift: 0,
            rows: vec![vec![1.0]; n_points as usize],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.rows.len() != self.n_points as usize {
            return Err(Error::Domain("displacement law has wrong row count".into()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            let origin = (i + 1) as i64;
            let mut total = 0.0;
            for (j, &p) in row.iter().enumerate() {
                if !(0.0..=1.0 + 1e-12).contains(&p) {
                    return Err(Error::Domain(format!(
                        "displacement probability {p} outside [0, 1]"
                    )));
                }
                let target = origin + j as i64 - self.max_shift;
                if (target < 1 || target > self.n_points as i64) && p != 0.0 {
                    return Err(Error::Domain(format!(
                        "displacement mass {p} escapes the lattice at {target}"
                    )));
                }
                total += p;
            }
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::Domain(format!(
                    "displacement row {origin} sums to {total}"
                )));
            }
        }
        Ok(())
    }

    pub fn n_points(&self) -> u32 {
        self.n_points
    }

    pub fn lag(&self) -> u32 {
        self.lag
    }

    pub fn max_shift(&self) -> i64 {
        self.max_shift
    }

    /// P(n -> n+k, l); zero outside the reachable band and the lattice.
    pub fn prob(&self, n: u32, k: i64) -> f64 {
        if n < 1 || n > self.n_points || k.abs() > self.max_shift {
            return 0.0;
        }
        self.rows[(n - 1) as usize][(k + self.max_shift) as usize]
    }

    /// (origin, shift, probability) triples in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (u32, i64, f64)> + '_ {
        self.rows.iter().enumerate().flat_map(move |(i, row)| {
            row.iter()
                .enumerate()
                .map(move |(j, &p)| ((i + 1) as u32, j as i64 - self.max_shift, p))
        })
    }
}

/// Displacement law of the exact chain under stationarity.
pub fn displacement_law(spec: &MobilitySpec, lag: u32) -> Result<DisplacementLaw> {
    let chain = FullChain::build(spec);
    let stationary = chain.stationary_distribution()?;
    chain.displacement_law_from(&stationary, lag)
}

/// Seeded sampler of stationary trajectories; builds the chain once and can
/// serve any number of independent users.
pub struct TrajectorySimulator {
    chain: FullChain,
    cdf: Vec<f64>,
}

impl TrajectorySimulator {
    pub fn new(spec: &MobilitySpec) -> Result<Self> {
        let chain = FullChain::build(spec);
        let stationary = chain.stationary_distribution()?;
        let mut cdf = Vec::with_capacity(stationary.len());
        let mut acc = 0.0;
        for w in &stationary {
            acc += w;
            cdf.push(acc);
        }
        Ok(Self { chain, cdf })
    }

    pub fn spec(&self) -> &MobilitySpec {
        &self.chain.spec
    }

    pub fn chain(&self) -> &FullChain {
        &self.chain
    }

    /// Draw a full state from the stationary distribution.
    pub fn sample_initial<R: Rng>(&self, rng: &mut R) -> FullState {
        let x: f64 = rng.random();
        let idx = self.cdf.partition_point(|&c| c < x);
        self.chain.states[idx.min(self.chain.states.len() - 1)]
    }

    /// Advance one tick (1/u slot).
    pub fn step_tick<R: Rng>(&self, state: FullState, rng: &mut R) -> FullState {
        let spec = &self.chain.spec;
        if state.think_ticks > 0 {
            return FullState {
                think_ticks: state.think_ticks - 1,
                ..state
            };
        }
        let destination = if state.position == state.destination {
            let mut draw = rng.random_range(1..spec.n_points);
            if draw >= state.position {
                draw += 1;
            }
            draw
        } else {
            state.destination
        };
        let position = state.next_toward(destination);
        let think_ticks = if position == destination {
            rng.random_range(0..=spec.max_think) * spec.speed
        } else {
            0
        };
        FullState {
            position,
            destination,
            think_ticks,
        }
    }

    /// Advance one observed slot (u ticks).
    pub fn step_slot<R: Rng>(&self, mut state: FullState, rng: &mut R) -> FullState {
        for _ in 0..self.chain.spec.speed {
            state = self.step_tick(state, rng);
        }
        state
    }
}

/// Stationary position sequence of one user, `slots` entries, deterministic
/// in the seed.
pub fn simulate_trajectory(spec: &MobilitySpec, seed: u64, slots: u32) -> Result<Vec<u32>> {
    if slots < 1 {
        return Err(Error::Domain("trajectory needs at least one slot".into()));
    }
    let sim = TrajectorySimulator::new(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = sim.sample_initial(&mut rng);
    let mut positions = Vec::with_capacity(slots as usize);
    positions.push(state.position);
    for _ in 1..slots {
        state = sim.step_slot(state, &mut rng);
        positions.push(state.position);
    }
    Ok(positions)
}
