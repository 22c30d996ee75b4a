//! Particle-swarm search over medoid sets.
//!
//! Each particle holds `K` continuous coordinates in dataset-index space.
//! Positions move under the standard inertia/cognitive/social velocity
//! update and are decoded to `K` distinct dataset ordinals before every
//! fitness evaluation. Fitness is the combined compactness/separation
//! measure of the induced partition; lower is better.
//!
//! Every particle draws from its own ChaCha stream derived from the seed, and
//! the global best is reduced in particle order after each sweep, so results
//! do not depend on how many threads evaluate the swarm.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distance::{DatasetDistance, DistanceSpec, PairDistance};
use crate::error::{Error, Result};
use crate::series::Dataset;
use crate::validity::{self, Partition};

#[derive(Debug, Clone, PartialEq)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub max_iters: usize,
    pub inertia_start: f64,
    pub inertia_end: f64,
    pub c1: f64,
    pub c2: f64,
    pub k: usize,
    pub w1: f64,
    pub w2: f64,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            swarm_size: 30,
            max_iters: 500,
            inertia_start: 1.2,
            inertia_end: 0.4,
            c1: 1.5,
            c2: 1.5,
            k: 2,
            w1: 0.5,
            w2: 0.5,
            seed: 0,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.swarm_size == 0 || self.max_iters == 0 {
            return Err(Error::invalid("swarm size and iteration count must be positive"));
        }
        if self.k < 2 {
            return Err(Error::invalid(format!("k must be at least 2, got {}", self.k)));
        }
        if self.inertia_end.is_nan() || self.inertia_start.is_nan() || self.inertia_end > self.inertia_start {
            return Err(Error::invalid(format!(
                "inertia must not increase: start {}, end {}",
                self.inertia_start, self.inertia_end
            )));
        }
        validity::check_weights(self.w1, self.w2)
    }

    /// Inertia weight used by the step that starts at `iteration`, decaying
    /// linearly from `inertia_start` towards `inertia_end`.
    pub fn inertia_at(&self, iteration: usize) -> f64 {
        let frac = iteration as f64 / self.max_iters as f64;
        self.inertia_start - (self.inertia_start - self.inertia_end) * frac
    }
}

#[derive(Debug, Clone)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub fitness: f64,
    pub personal_best_position: Vec<f64>,
    pub personal_best_fitness: f64,
    pub rng: ChaCha8Rng,
}

#[derive(Debug, Clone)]
pub struct SwarmState {
    pub particles: Vec<Particle>,
    pub global_best_position: Vec<f64>,
    pub global_best_fitness: f64,
    pub iteration: usize,
}

/// Map a continuous position to `K` distinct ordinals in `[0, t)`.
///
/// Coordinates are rounded and clamped; a coordinate landing on an ordinal
/// already taken by an earlier slot moves to the nearest free one, trying
/// `+1, -1, +2, -2, ...`.
pub fn decode_position(position: &[f64], t: usize) -> Result<Vec<usize>> {
    let k = position.len();
    if t < k {
        return Err(Error::invalid(format!("cannot pick {k} distinct medoids from {t} series")));
    }
    let max = (t - 1) as f64;
    let mut used = vec![false; t];
    let mut out = Vec::with_capacity(k);
    for &x in position {
        let x = if x.is_nan() { 0.0 } else { x };
        let base = x.round().clamp(0.0, max) as usize;
        let pick = (0..t)
            .flat_map(|off| [base.checked_add(off), base.checked_sub(off)])
            .flatten()
            .find(|&c| c < t && !used[c])
            .expect("t >= k leaves a free ordinal");
        used[pick] = true;
        out.push(pick);
    }
    Ok(out)
}

fn check_medoids(medoids: &[usize], t: usize) -> Result<()> {
    let mut seen = vec![false; t];
    for &m in medoids {
        if m >= t {
            return Err(Error::invalid(format!("medoid {m} out of range for {t} series")));
        }
        if std::mem::replace(&mut seen[m], true) {
            return Err(Error::invalid(format!("medoid {m} repeated")));
        }
    }
    Ok(())
}

/// Assign each series to its nearest medoid, ties to the lowest cluster.
/// Medoids always belong to their own cluster.
pub fn assign(dist: &impl PairDistance, t: usize, medoids: &[usize]) -> Result<Partition> {
    check_medoids(medoids, t)?;
    let assignment = (0..t)
        .map(|i| match medoids.iter().position(|&m| m == i) {
            Some(own) => own,
            None => {
                let mut best = (0, f64::INFINITY);
                for (k, &m) in medoids.iter().enumerate() {
                    let d = dist.between(i, m);
                    if d < best.1 {
                        best = (k, d);
                    }
                }
                best.0
            }
        })
        .collect();
    Partition::new(assignment, medoids.to_vec())
}

/// Combined measure of the partition induced by `medoids`.
pub fn fitness(dist: &impl PairDistance, t: usize, medoids: &[usize], w1: f64, w2: f64) -> Result<f64> {
    let p = assign(dist, t, medoids)?;
    validity::combined(&p, dist, w1, w2)
}

/// The member with the smallest sum of squared distances to the others,
/// ties to the lowest ordinal.
pub fn medoid(dist: &impl PairDistance, members: &[usize]) -> Result<usize> {
    if members.is_empty() {
        return Err(Error::invalid("medoid of an empty member list"));
    }
    let scores: Vec<(usize, f64)> = members
        .par_iter()
        .map(|&c| (c, members.iter().map(|&o| dist.between(c, o).powi(2)).sum()))
        .collect();
    let best = scores
        .into_iter()
        .reduce(|best, cur| {
            if cur.1 < best.1 || (cur.1 == best.1 && cur.0 < best.0) {
                cur
            } else {
                best
            }
        })
        .expect("non-empty");
    Ok(best.0)
}

/// Memoizes full distance columns `d(·, m)` for every medoid visited.
pub struct MedoidCache<'a, D> {
    inner: &'a D,
    t: usize,
    columns: RwLock<HashMap<usize, Arc<[f64]>>>,
}

impl<'a, D: PairDistance> MedoidCache<'a, D> {
    pub fn new(inner: &'a D, t: usize) -> Self {
        Self {
            inner,
            t,
            columns: RwLock::new(HashMap::new()),
        }
    }

    pub fn column(&self, m: usize) -> Arc<[f64]> {
        if let Some(col) = self.columns.read().expect("cache lock").get(&m) {
            return Arc::clone(col);
        }
        let col: Arc<[f64]> = (0..self.t)
            .into_par_iter()
            .map(|i| self.inner.between(i, m))
            .collect::<Vec<_>>()
            .into();
        // a racing thread may have inserted the same (identical) column
        Arc::clone(self.columns.write().expect("cache lock").entry(m).or_insert(col))
    }

    pub fn cached_columns(&self) -> usize {
        self.columns.read().expect("cache lock").len()
    }

    fn view(&self, medoids: &[usize]) -> ColumnView {
        ColumnView {
            medoids: medoids.to_vec(),
            columns: medoids.iter().map(|&m| self.column(m)).collect(),
        }
    }
}

/// Distances restricted to pairs that involve at least one of a fixed set of
/// medoids.
struct ColumnView {
    medoids: Vec<usize>,
    columns: Vec<Arc<[f64]>>,
}

impl PairDistance for ColumnView {
    fn between(&self, i: usize, j: usize) -> f64 {
        if let Some(k) = self.medoids.iter().position(|&m| m == j) {
            self.columns[k][i]
        } else if let Some(k) = self.medoids.iter().position(|&m| m == i) {
            self.columns[k][j]
        } else {
            unreachable!("pair ({i}, {j}) involves no medoid")
        }
    }
}

/// Search-time fitness of a continuous position.
fn evaluate<D: PairDistance>(cache: &MedoidCache<'_, D>, position: &[f64], cfg: &PsoConfig) -> Result<f64> {
    let medoids = decode_position(position, cache.t)?;
    fitness(&cache.view(&medoids), cache.t, &medoids, cfg.w1, cfg.w2)
}

fn particle_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

impl SwarmState {
    /// Scatter `swarm_size` particles uniformly over `[0, t - 1]^K` with
    /// velocities uniform in `±(t - 1)/10`, and evaluate them.
    pub fn init<D: PairDistance>(cache: &MedoidCache<'_, D>, cfg: &PsoConfig) -> Result<Self> {
        cfg.validate()?;
        let t = cache.t;
        if t < cfg.k {
            return Err(Error::invalid(format!("k = {} exceeds dataset size {t}", cfg.k)));
        }
        let span = (t - 1) as f64;
        let vmax = span / 10.0;
        let particles = (0..cfg.swarm_size)
            .into_par_iter()
            .map(|p| {
                let mut rng = particle_rng(cfg.seed, p);
                let position: Vec<f64> = (0..cfg.k).map(|_| rng.random_range(0.0..=span)).collect();
                let velocity: Vec<f64> = (0..cfg.k).map(|_| rng.random_range(-vmax..=vmax)).collect();
                let fitness = evaluate(cache, &position, cfg)?;
                Ok(Particle {
                    personal_best_position: position.clone(),
                    personal_best_fitness: fitness,
                    position,
                    velocity,
                    fitness,
                    rng,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut state = Self {
            global_best_position: particles[0].position.clone(),
            global_best_fitness: particles[0].fitness,
            particles,
            iteration: 0,
        };
        state.reduce_global_best();
        Ok(state)
    }

    fn reduce_global_best(&mut self) {
        for p in &self.particles {
            if p.personal_best_fitness < self.global_best_fitness {
                self.global_best_fitness = p.personal_best_fitness;
                self.global_best_position.clone_from(&p.personal_best_position);
            }
        }
    }

    /// Move every particle once, update personal bests, then the global best.
    pub fn step<D: PairDistance>(&mut self, cache: &MedoidCache<'_, D>, cfg: &PsoConfig) -> Result<()> {
        let span = (cache.t - 1) as f64;
        let vclamp = span / 2.0;
        let inertia = cfg.inertia_at(self.iteration);
        let global = &self.global_best_position;
        self.particles.par_iter_mut().try_for_each(|p| -> Result<()> {
            let r1: f64 = p.rng.random();
            let r2: f64 = p.rng.random();
            let dims = p.position.iter_mut().zip(p.velocity.iter_mut());
            for ((x, v), (&pb, &gb)) in dims.zip(p.personal_best_position.iter().zip(global)) {
                let raw = inertia * *v + cfg.c1 * r1 * (pb - *x) + cfg.c2 * r2 * (gb - *x);
                *v = raw.clamp(-vclamp, vclamp);
                *x = (*x + *v).clamp(0.0, span);
            }
            p.fitness = evaluate(cache, &p.position, cfg)?;
            if p.fitness < p.personal_best_fitness {
                p.personal_best_fitness = p.fitness;
                p.personal_best_position.clone_from(&p.position);
            }
            Ok(())
        })?;
        self.reduce_global_best();
        self.iteration += 1;
        Ok(())
    }
}

/// Outcome of a full swarm run.
#[derive(Debug, Clone)]
pub struct PsoOutcome {
    /// Partition induced by the global best, with each cluster's medoid
    /// recomputed as its true medoid.
    pub partition: Partition,
    /// Medoids decoded from the global best position.
    pub search_medoids: Vec<usize>,
    /// Fitness of `search_medoids`.
    pub best_fitness: f64,
    /// `(iteration, global best fitness)`, starting at iteration 0.
    pub trace: Vec<(usize, f64)>,
}

/// Run the swarm for `cfg.max_iters` steps over `t` items.
pub fn run_with<D: PairDistance>(dist: &D, t: usize, cfg: &PsoConfig) -> Result<PsoOutcome> {
    cfg.validate()?;
    if t < cfg.k {
        return Err(Error::invalid(format!("k = {} exceeds dataset size {t}", cfg.k)));
    }
    let cache = MedoidCache::new(dist, t);
    let mut state = SwarmState::init(&cache, cfg)?;
    let mut trace = Vec::with_capacity(cfg.max_iters + 1);
    trace.push((0, state.global_best_fitness));
    while state.iteration < cfg.max_iters {
        state.step(&cache, cfg)?;
        trace.push((state.iteration, state.global_best_fitness));
    }

    let search_medoids = decode_position(&state.global_best_position, t)?;
    let searched = assign(&cache.view(&search_medoids), t, &search_medoids)?;
    let medoids = searched
        .clusters()
        .iter()
        .map(|members| medoid(dist, members))
        .collect::<Result<Vec<_>>>()?;
    let partition = Partition::new(searched.assignment().to_vec(), medoids)?;
    Ok(PsoOutcome {
        partition,
        search_medoids,
        best_fitness: state.global_best_fitness,
        trace,
    })
}

/// Run the swarm over a dataset with the given sequence distance.
pub fn run(data: &Dataset, spec: DistanceSpec, cfg: &PsoConfig) -> Result<PsoOutcome> {
    spec.validate()?;
    run_with(&DatasetDistance::new(&data.series, spec), data.len(), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(xs: &[f64]) -> impl PairDistance + '_ {
        move |i: usize, j: usize| (xs[i] - xs[j]).abs()
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode_position(&[2.4, 7.6], 10).unwrap(), vec![2, 8]);
        assert_eq!(decode_position(&[2.4, 2.3], 10).unwrap(), vec![2, 3]);
        assert_eq!(decode_position(&[-5.0, 99.0], 10).unwrap(), vec![0, 9]);
        assert!(decode_position(&[0.0, 1.0, 2.0], 2).is_err());
    }

    #[test]
    fn decode_scans_down_when_up_is_taken() {
        assert_eq!(decode_position(&[9.0, 9.2], 10).unwrap(), vec![9, 8]);
        assert_eq!(decode_position(&[3.0, 3.0, 3.0], 10).unwrap(), vec![3, 4, 2]);
        assert_eq!(decode_position(&[f64::NAN, 0.0], 3).unwrap(), vec![0, 1]);
    }

    #[test]
    fn assign_identity_when_every_series_is_a_medoid() {
        let xs = [0.0, 1.0, 5.0];
        let p = assign(&line(&xs), 3, &[2, 0, 1]).unwrap();
        assert_eq!(p.assignment(), &[1, 2, 0]);
    }

    #[test]
    fn assign_recovers_level_groups() {
        let xs = [-0.8, -0.79, -0.82, 0.8, 0.81, 0.78];
        let p = assign(&line(&xs), 6, &[1, 4]).unwrap();
        assert_eq!(p.assignment(), &[0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn assign_breaks_ties_towards_first_cluster() {
        let xs = [0.0, -1.0, 1.0];
        let p = assign(&line(&xs), 3, &[2, 1]).unwrap();
        assert_eq!(p.assignment(), &[0, 1, 0]);
    }

    #[test]
    fn assign_keeps_duplicate_medoids_in_own_cluster() {
        let xs = [0.3, 0.3, 0.3];
        let p = assign(&line(&xs), 3, &[0, 1]).unwrap();
        assert_eq!(p.assignment(), &[0, 1, 0]);
        assert!(assign(&line(&xs), 3, &[0, 0]).is_err());
        assert!(assign(&line(&xs), 3, &[0, 3]).is_err());
    }

    #[test]
    fn fitness_examples() {
        // duplicate clusters sitting on medoids 4 apart
        let xs = [0.0, 0.0, 4.0, 4.0];
        let f = fitness(&line(&xs), 4, &[0, 2], 0.5, 0.5).unwrap();
        assert_eq!(f, -1.0);
        assert!(fitness(&line(&xs), 4, &[0], 0.5, 0.5).is_err());

        let spread = [0.0, 1.0, 4.0, 5.0];
        let tight = [0.0, 0.5, 4.0, 4.5];
        // same medoid separation, tighter clusters
        let a = fitness(&line(&spread), 4, &[0, 2], 0.5, 0.5).unwrap();
        let b = fitness(&line(&tight), 4, &[0, 2], 0.5, 0.5).unwrap();
        assert!(b < a);
    }

    #[test]
    fn medoid_examples() {
        let xs = [0.0, 1.0, 2.0];
        assert_eq!(medoid(&line(&xs), &[2]).unwrap(), 2);
        assert_eq!(medoid(&line(&xs), &[0, 1, 2]).unwrap(), 1);
        let same = [0.4, 0.4, 0.4];
        assert_eq!(medoid(&line(&same), &[2, 1, 0]).unwrap(), 0);
        assert!(medoid(&line(&xs), &[]).is_err());
    }

    #[test]
    fn inertia_decays_linearly() {
        let cfg = PsoConfig { max_iters: 4, ..PsoConfig::default() };
        assert_eq!(cfg.inertia_at(0), 1.2);
        assert!((cfg.inertia_at(2) - 0.8).abs() < 1e-12);
        assert!((cfg.inertia_at(4) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(PsoConfig::default().validate().is_ok());
        assert!(PsoConfig { k: 1, ..PsoConfig::default() }.validate().is_err());
        assert!(PsoConfig { swarm_size: 0, ..PsoConfig::default() }.validate().is_err());
        assert!(PsoConfig { inertia_end: 1.5, ..PsoConfig::default() }.validate().is_err());
        assert!(PsoConfig { w1: 0.7, ..PsoConfig::default() }.validate().is_err());
    }

    fn single_particle_state(position: Vec<f64>, velocity: Vec<f64>, fitness: f64) -> SwarmState {
        SwarmState {
            particles: vec![Particle {
                personal_best_position: position.clone(),
                personal_best_fitness: fitness,
                position: position.clone(),
                velocity,
                fitness,
                rng: particle_rng(7, 0),
            }],
            global_best_position: position,
            global_best_fitness: fitness,
            iteration: 0,
        }
    }

    #[test]
    fn step_fixed_point_with_zero_velocity() {
        let xs = [0.0, 0.1, 0.2, 3.0, 3.1, 3.2];
        let d = line(&xs);
        let cache = MedoidCache::new(&d, 6);
        let cfg = PsoConfig { swarm_size: 1, max_iters: 10, ..PsoConfig::default() };
        let f = evaluate(&cache, &[1.0, 4.0], &cfg).unwrap();
        let mut state = single_particle_state(vec![1.0, 4.0], vec![0.0, 0.0], f);
        state.step(&cache, &cfg).unwrap();
        assert_eq!(state.particles[0].position, vec![1.0, 4.0]);
        assert_eq!(state.particles[0].fitness, f);
        assert_eq!(state.global_best_fitness, f);
        assert_eq!(state.iteration, 1);
    }

    #[test]
    fn step_at_global_best_follows_inertia() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let d = line(&xs);
        let cache = MedoidCache::new(&d, 20);
        let cfg = PsoConfig { swarm_size: 1, max_iters: 10, ..PsoConfig::default() };
        let f = evaluate(&cache, &[3.0, 12.0], &cfg).unwrap();
        let mut state = single_particle_state(vec![3.0, 12.0], vec![1.5, -2.0], f);
        state.step(&cache, &cfg).unwrap();
        let w = cfg.inertia_at(0);
        assert_eq!(state.particles[0].position, vec![3.0 + w * 1.5, 12.0 - w * 2.0]);
        assert!(state.global_best_fitness <= f);
    }

    #[test]
    fn run_is_deterministic_and_monotone() {
        let xs: Vec<f64> = (0..12).map(|i| if i < 6 { i as f64 * 0.01 } else { 5.0 + i as f64 * 0.01 }).collect();
        let d = line(&xs);
        let cfg = PsoConfig { swarm_size: 8, max_iters: 30, seed: 11, ..PsoConfig::default() };
        let a = run_with(&d, 12, &cfg).unwrap();
        let b = run_with(&d, 12, &cfg).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.partition, b.partition);
        assert_eq!(a.trace.len(), 31);
        assert!(a.trace.windows(2).all(|w| w[1].1 <= w[0].1));
        let mut clusters = a.partition.clusters();
        clusters.sort();
        assert_eq!(clusters, vec![(0..6).collect::<Vec<_>>(), (6..12).collect()]);
    }

    #[test]
    fn run_rejects_too_few_series() {
        let xs = [0.0, 1.0];
        let cfg = PsoConfig { k: 3, ..PsoConfig::default() };
        assert!(run_with(&line(&xs), 2, &cfg).is_err());
    }

    #[test]
    fn cache_memoizes_columns() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let d = line(&xs);
        let cache = MedoidCache::new(&d, 4);
        assert_eq!(&*cache.column(2), &[2.0, 1.0, 0.0, 1.0]);
        cache.column(2);
        cache.column(0);
        assert_eq!(cache.cached_columns(), 2);
    }

    proptest! {
        #[test]
        fn decode_always_valid(
            pos in prop::collection::vec(-50.0f64..50.0, 1..8),
            extra in 0usize..10,
        ) {
            let t = pos.len() + extra;
            let out = decode_position(&pos, t).unwrap();
            prop_assert_eq!(out.len(), pos.len());
            prop_assert!(out.iter().all(|&m| m < t));
            let mut sorted = out.clone();
            sorted.sort_unstable();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), out.len());
        }

        #[test]
        fn personal_bests_dominate(seed in 0u64..1000) {
            let xs: Vec<f64> = (0..10).map(|i| ((i * 37) % 11) as f64 / 10.0).collect();
            let d = line(&xs);
            let cache = MedoidCache::new(&d, 10);
            let cfg = PsoConfig { swarm_size: 5, max_iters: 15, k: 3, seed, ..PsoConfig::default() };
            let mut state = SwarmState::init(&cache, &cfg).unwrap();
            for _ in 0..cfg.max_iters {
                let before = state.global_best_fitness;
                state.step(&cache, &cfg).unwrap();
                prop_assert!(state.global_best_fitness <= before);
                for p in &state.particles {
                    prop_assert!(p.personal_best_fitness <= p.fitness);
                    prop_assert!(state.global_best_fitness <= p.personal_best_fitness);
                }
            }
        }
    }
}
