//! Cost coefficient and exhaustive architecture search.
//!
//! The cost of a chain is the number of memory qubits it ties up times the
//! time it needs per secret bit, per kilometre covered:
//! `C′ = qubits_per_repeater · (repeater_count + 1) / (rate · L_tot)`.
//! The literal `rate · qubits_per_repeater / L₀` product is reported next to
//! it as `eq1_form`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{ModelError, Result};
use crate::generations::{evaluate, g1, Generation, PerformanceReport, RepeaterConfig};
use crate::protocols::PurificationSchedule;
use crate::state::{secret_fraction, BellDiagonalState};

#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    /// Qubit·seconds per secret bit per km; infinite when the rate is zero.
    pub cost_coefficient: f64,
    pub eq1_form: f64,
    pub config: RepeaterConfig,
    pub performance: PerformanceReport,
}

impl CostReport {
    pub fn is_viable(&self) -> bool {
        self.cost_coefficient.is_finite()
    }

    /// Memory qubits across the chain, end nodes included.
    pub fn total_qubits(&self) -> u64 {
        total_qubits(&self.performance)
    }
}

fn total_qubits(performance: &PerformanceReport) -> u64 {
    performance
        .qubits_per_repeater
        .saturating_mul(performance.repeater_count + 1)
}

/// `(C′, eq1_form)` for a performance report over `total_distance_km`.
pub fn cost_from_performance(performance: &PerformanceReport, total_distance_km: f64) -> (f64, f64) {
    let rate = performance.rate_secret_bits_per_s;
    let qubits = performance.qubits_per_repeater;
    let eq1 = rate * qubits as f64 / performance.link_length_km;
    (
        cost_value(rate, qubits, performance.repeater_count, total_distance_km),
        eq1,
    )
}

fn cost_value(rate: f64, qubits_per_repeater: u64, repeater_count: u64, total_distance_km: f64) -> f64 {
    if rate > 0.0 {
        qubits_per_repeater as f64 * (repeater_count + 1) as f64 / (rate * total_distance_km)
    } else {
        f64::INFINITY
    }
}

pub fn cost_coefficient(config: &RepeaterConfig) -> Result<CostReport> {
    let performance = evaluate(config)?;
    let (cost, eq1) = cost_from_performance(&performance, config.total_distance_km);
    Ok(CostReport {
        cost_coefficient: cost,
        eq1_form: eq1,
        config: config.clone(),
        performance,
    })
}

/// Repeater spacings tried for 2G/3G chains.
#[derive(Debug, Clone, PartialEq)]
pub enum SpacingGrid {
    Explicit(Vec<f64>),
    /// `points` log-spaced values from `min_km` up to
    /// `min(max_attenuation_lengths · L_att, L_tot)`.
    LogSpaced {
        points: usize,
        min_km: f64,
        max_attenuation_lengths: f64,
    },
}

impl Default for SpacingGrid {
    fn default() -> Self {
        SpacingGrid::LogSpaced {
            points: 24,
            min_km: 1.0,
            max_attenuation_lengths: 1.0,
        }
    }
}

impl SpacingGrid {
    pub fn resolve(&self, template: &RepeaterConfig) -> Result<Vec<f64>> {
        let values = match self {
            SpacingGrid::Explicit(v) => v.clone(),
            SpacingGrid::LogSpaced {
                points,
                min_km,
                max_attenuation_lengths,
            } => {
                let hi = (max_attenuation_lengths * template.channel.attenuation_length_km)
                    .min(template.total_distance_km);
                let lo = min_km.min(hi);
                if *points <= 1 || lo == hi {
                    vec![hi]
                } else {
                    let ratio = (hi / lo).ln();
                    (0..*points)
                        .map(|i| lo * (ratio * i as f64 / (*points - 1) as f64).exp())
                        .collect()
                }
            }
        };
        if values.is_empty() {
            return Err(ModelError::EmptySearch("spacing grid"));
        }
        if let Some(bad) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(ModelError::Domain {
                name: "spacing_km",
                value: *bad,
                constraint: "grid values must be finite and > 0",
            });
        }
        Ok(values)
    }
}

/// Architecture grid explored by [`optimize`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub min_nesting: u32,
    pub max_nesting: u32,
    /// Every level takes rounds in `0..=max_purification_rounds`.
    pub max_purification_rounds: u32,
    pub spacing: SpacingGrid,
    pub memory_qubits: Vec<u32>,
    pub attempts: Vec<u32>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            min_nesting: 0,
            max_nesting: 4,
            max_purification_rounds: 3,
            spacing: SpacingGrid::default(),
            memory_qubits: vec![1, 10, 100],
            attempts: vec![1],
        }
    }
}

/// One grid point, before it is applied to a template.
#[derive(Debug, Clone, PartialEq)]
struct Candidate {
    nesting: u32,
    schedule: Vec<u32>,
    spacing: Option<f64>,
    memory: u32,
    attempts: u32,
}

/// Resolved grid for one template.
struct Grid {
    generation: Generation,
    nestings: Vec<u32>,
    radix: u64,
    spacings: Vec<f64>,
    memory: Vec<u32>,
    attempts: Vec<u32>,
    /// Cumulative start index of each nesting level block (G1).
    offsets: Vec<u64>,
    size: u64,
}

impl Grid {
    fn new(space: &SearchSpace, template: &RepeaterConfig) -> Result<Self> {
        if space.memory_qubits.is_empty() {
            return Err(ModelError::EmptySearch("memory_qubits"));
        }
        if space.attempts.is_empty() {
            return Err(ModelError::EmptySearch("attempts"));
        }
        if space.memory_qubits.contains(&0) || space.attempts.contains(&0) {
            return Err(ModelError::InvalidConfig(
                "memory_qubits and attempts values must be >= 1".into(),
            ));
        }
        let mut memory = space.memory_qubits.clone();
        memory.sort_unstable();
        memory.dedup();
        let mut attempts = space.attempts.clone();
        attempts.sort_unstable();
        attempts.dedup();
        let per_arch = (memory.len() * attempts.len()) as u64;
        let radix = u64::from(space.max_purification_rounds) + 1;
        let generation = template.generation;
        let (nestings, spacings, offsets, size) = if generation == Generation::G1 {
            if space.min_nesting > space.max_nesting {
                return Err(ModelError::EmptySearch("nesting_levels"));
            }
            let nestings: Vec<u32> = (space.min_nesting..=space.max_nesting).collect();
            let mut offsets = Vec::with_capacity(nestings.len());
            let mut size = 0u64;
            for n in &nestings {
                offsets.push(size);
                let schedules = radix
                    .checked_pow(n + 1)
                    .ok_or(ModelError::InvalidConfig("search space too large".into()))?;
                size = schedules
                    .checked_mul(per_arch)
                    .and_then(|s| size.checked_add(s))
                    .ok_or(ModelError::InvalidConfig("search space too large".into()))?;
            }
            (nestings, Vec::new(), offsets, size)
        } else {
            let mut spacings = space.spacing.resolve(template)?;
            spacings.sort_by(f64::total_cmp);
            spacings.dedup();
            let size = spacings.len() as u64 * per_arch;
            (Vec::new(), spacings, Vec::new(), size)
        };
        Ok(Self {
            generation,
            nestings,
            radix,
            spacings,
            memory,
            attempts,
            offsets,
            size,
        })
    }

    fn candidate(&self, index: u64) -> Candidate {
        let per_arch = (self.memory.len() * self.attempts.len()) as u64;
        let arch = index / per_arch;
        let rest = index % per_arch;
        let memory = self.memory[(rest / self.attempts.len() as u64) as usize];
        let attempts = self.attempts[(rest % self.attempts.len() as u64) as usize];
        if self.generation != Generation::G1 {
            return Candidate {
                nesting: 0,
                schedule: vec![0],
                spacing: Some(self.spacings[arch as usize]),
                memory,
                attempts,
            };
        }
        let block = self.offsets.partition_point(|o| *o <= index) - 1;
        let nesting = self.nestings[block];
        let mut code = (index - self.offsets[block]) / per_arch;
        let mut schedule = vec![0u32; nesting as usize + 1];
        for slot in schedule.iter_mut().rev() {
            *slot = (code % self.radix) as u32;
            code /= self.radix;
        }
        Candidate {
            nesting,
            schedule,
            spacing: None,
            memory,
            attempts,
        }
    }
}

fn apply(template: &RepeaterConfig, c: &Candidate) -> RepeaterConfig {
    let mut config = template.clone();
    config.nesting_level = c.nesting;
    config.purification = PurificationSchedule::new(c.schedule.clone())
        .expect("grid schedules are nonempty");
    config.spacing_km = c.spacing;
    config.memory_qubits_per_half_node = c.memory;
    config.attempts_per_round = c.attempts;
    config
}

/// Grid points for `template` under `space`.
pub fn grid_size(space: &SearchSpace, template: &RepeaterConfig) -> Result<u64> {
    Ok(Grid::new(space, template)?.size)
}

/// Every configuration of the grid, in enumeration order.
pub fn grid_configs(space: &SearchSpace, template: &RepeaterConfig) -> Result<Vec<RepeaterConfig>> {
    let grid = Grid::new(space, template)?;
    Ok((0..grid.size).map(|i| apply(template, &grid.candidate(i))).collect())
}

/// Total order used to rank architectures: cost, then total qubits, nesting
/// level, spacing, schedule, multiplexing and attempts.
pub fn rank(a: &CostReport, b: &CostReport) -> Ordering {
    a.cost_coefficient
        .total_cmp(&b.cost_coefficient)
        .then_with(|| a.total_qubits().cmp(&b.total_qubits()))
        .then_with(|| a.config.nesting_level.cmp(&b.config.nesting_level))
        .then_with(|| {
            a.config
                .link_length_km()
                .total_cmp(&b.config.link_length_km())
        })
        .then_with(|| {
            a.config
                .purification
                .rounds_per_level()
                .cmp(b.config.purification.rounds_per_level())
        })
        .then_with(|| {
            a.config
                .memory_qubits_per_half_node
                .cmp(&b.config.memory_qubits_per_half_node)
        })
        .then_with(|| a.config.attempts_per_round.cmp(&b.config.attempts_per_round))
}

fn merge_top(mut a: Vec<CostReport>, b: Vec<CostReport>, k: usize) -> Vec<CostReport> {
    a.extend(b);
    a.sort_by(rank);
    a.truncate(k);
    a
}

/// Result of a grid search.
#[derive(Debug, Clone, PartialEq)]
pub enum Optimum {
    Found {
        /// Best `k` viable architectures, best first.
        ranked: Vec<CostReport>,
        evaluated: u64,
        viable: u64,
    },
    /// Every grid point delivers zero secret key.
    NoViable { evaluated: u64 },
}

impl Optimum {
    pub fn best(&self) -> Option<&CostReport> {
        match self {
            Optimum::Found { ranked, .. } => ranked.first(),
            Optimum::NoViable { .. } => None,
        }
    }

    pub fn evaluated(&self) -> u64 {
        match self {
            Optimum::Found { evaluated, .. } | Optimum::NoViable { evaluated } => *evaluated,
        }
    }
}

/// Exhaustive search of `space` around `template`, which fixes generation,
/// distance, gate error, channel and every parameter the grid does not vary.
///
/// First-generation grids are walked depth-first so that chains sharing a
/// schedule prefix share its purification and swap steps; every grid point
/// is still scored.
pub fn optimize(space: &SearchSpace, template: &RepeaterConfig, top_k: usize) -> Result<Optimum> {
    if template.generation == Generation::G1 {
        optimize_g1(space, template, top_k.max(1))
    } else {
        optimize_flat(space, template, top_k)
    }
}

/// Scores each grid point independently through [`cost_coefficient`].
pub fn optimize_flat(space: &SearchSpace, template: &RepeaterConfig, top_k: usize) -> Result<Optimum> {
    let top_k = top_k.max(1);
    let grid = Grid::new(space, template)?;
    if grid.size == 0 {
        return Err(ModelError::EmptySearch("search space"));
    }
    let (ranked, viable) = (0..grid.size)
        .into_par_iter()
        .map(|i| -> Result<(Vec<CostReport>, u64)> {
            let report = cost_coefficient(&apply(template, &grid.candidate(i)))?;
            Ok(if report.is_viable() {
                (vec![report], 1)
            } else {
                (Vec::new(), 0)
            })
        })
        .try_reduce(
            || (Vec::new(), 0),
            |(a, na), (b, nb)| Ok((merge_top(a, b, top_k), na + nb)),
        )?;
    Ok(finish(ranked, grid.size, viable))
}

fn finish(ranked: Vec<CostReport>, evaluated: u64, viable: u64) -> Optimum {
    if ranked.is_empty() {
        Optimum::NoViable { evaluated }
    } else {
        Optimum::Found {
            ranked,
            evaluated,
            viable,
        }
    }
}

/// Ranking key of a first-generation grid point, mirroring [`rank`].
#[derive(Debug, Clone)]
struct G1Key {
    cost: f64,
    total_qubits: u64,
    nesting: u32,
    schedule: Vec<u32>,
    memory: u32,
    attempts: u32,
}

impl G1Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then_with(|| self.total_qubits.cmp(&other.total_qubits))
            .then_with(|| self.nesting.cmp(&other.nesting))
            .then_with(|| self.schedule.cmp(&other.schedule))
            .then_with(|| self.memory.cmp(&other.memory))
            .then_with(|| self.attempts.cmp(&other.attempts))
    }
}

struct TopK {
    k: usize,
    items: Vec<G1Key>,
    viable: u64,
}

impl TopK {
    fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k + 1),
            viable: 0,
        }
    }

    fn offer(&mut self, key: G1Key) {
        if self.items.len() == self.k
            && self.items.last().is_some_and(|w| key.cmp(w) != Ordering::Less)
        {
            return;
        }
        let at = self.items.partition_point(|x| x.cmp(&key) == Ordering::Less);
        self.items.insert(at, key);
        self.items.truncate(self.k);
    }

    fn merge(mut self, other: TopK) -> TopK {
        self.viable += other.viable;
        for key in other.items {
            self.offer(key);
        }
        self
    }
}

struct G1Walk<'a> {
    config: RepeaterConfig,
    max_rounds: u32,
    schedule: Vec<u32>,
    top: &'a mut TopK,
}

impl G1Walk<'_> {
    fn descend(&mut self, level: u32, state: BellDiagonalState, time: f64, rounds: u32) -> Result<()> {
        let nesting = self.config.nesting_level;
        let (mut state, mut time) = (state, time);
        for r in 0..=self.max_rounds {
            if r > 0 {
                (state, time) = g1::purify_step(&self.config, &state, time, level)?;
            }
            self.schedule[level as usize] = r;
            if level == nesting {
                self.leaf(&state, time, rounds + r);
            } else {
                let (next, t) = g1::swap_step(&self.config, &state, time, level)?;
                self.descend(level + 1, next, t, rounds + r)?;
            }
        }
        Ok(())
    }

    fn leaf(&mut self, state: &BellDiagonalState, time: f64, rounds: u32) {
        let sf = secret_fraction(state);
        let rate = if time.is_finite() { sf / time } else { 0.0 };
        let qubits = g1::qubits_for(self.config.memory_qubits_per_half_node, rounds);
        let repeaters = self.config.repeater_count();
        let cost = cost_value(rate, qubits, repeaters, self.config.total_distance_km);
        if !cost.is_finite() {
            return;
        }
        self.top.viable += 1;
        if self.top.items.len() == self.top.k
            && self.top.items.last().is_some_and(|w| cost > w.cost)
        {
            return;
        }
        self.top.offer(G1Key {
            cost,
            total_qubits: qubits.saturating_mul(repeaters + 1),
            nesting: self.config.nesting_level,
            schedule: self.schedule.clone(),
            memory: self.config.memory_qubits_per_half_node,
            attempts: self.config.attempts_per_round,
        });
    }
}

fn optimize_g1(space: &SearchSpace, template: &RepeaterConfig, top_k: usize) -> Result<Optimum> {
    let grid = Grid::new(space, template)?;
    let mut roots = Vec::new();
    for &nesting in &grid.nestings {
        for &memory in &grid.memory {
            for &attempts in &grid.attempts {
                roots.push((nesting, memory, attempts));
            }
        }
    }
    let top = roots
        .into_par_iter()
        .map(|(nesting, memory, attempts)| -> Result<TopK> {
            let mut config = template.clone().with_nesting(nesting);
            config.memory_qubits_per_half_node = memory;
            config.attempts_per_round = attempts;
            config.validate()?;
            let mut top = TopK::new(top_k);
            if let Some((_, state, time)) = g1::elementary(&config)? {
                let mut walk = G1Walk {
                    config,
                    max_rounds: space.max_purification_rounds,
                    schedule: vec![0; nesting as usize + 1],
                    top: &mut top,
                };
                walk.descend(0, state, time, 0)?;
            }
            Ok(top)
        })
        .try_reduce(|| TopK::new(top_k), |a, b| Ok(a.merge(b)))?;
    let ranked = top
        .items
        .iter()
        .map(|key| {
            cost_coefficient(&apply(
                template,
                &Candidate {
                    nesting: key.nesting,
                    schedule: key.schedule.clone(),
                    spacing: None,
                    memory: key.memory,
                    attempts: key.attempts,
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    debug_assert!(ranked
        .iter()
        .zip(&top.items)
        .all(|(r, k)| r.cost_coefficient == k.cost));
    Ok(finish(ranked, grid.size, top.viable))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    CouplingEfficiency,
    TotalDistance,
    GateError,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::CouplingEfficiency => "coupling_efficiency",
            SweepAxis::TotalDistance => "total_distance_km",
            SweepAxis::GateError => "gate_error",
        }
    }

    pub fn apply(self, template: &RepeaterConfig, value: f64) -> RepeaterConfig {
        let mut config = template.clone();
        match self {
            SweepAxis::CouplingEfficiency => config.channel.coupling_efficiency = value,
            SweepAxis::TotalDistance => config.total_distance_km = value,
            SweepAxis::GateError => config.gate_error = value,
        }
        config
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coupling_efficiency" => Ok(SweepAxis::CouplingEfficiency),
            "total_distance_km" | "total_distance" => Ok(SweepAxis::TotalDistance),
            "gate_error" => Ok(SweepAxis::GateError),
            other => Err(ModelError::InvalidConfig(format!(
                "unknown sweep axis `{other}`, expected one of coupling_efficiency, \
                 total_distance_km, gate_error"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub optimum: Optimum,
}

/// Runs [`optimize`] at each axis value.
pub fn sweep(
    axis: SweepAxis,
    values: &[f64],
    template: &RepeaterConfig,
    space: &SearchSpace,
    top_k: usize,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(ModelError::EmptySearch("sweep values"));
    }
    if values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(ModelError::InvalidConfig(format!(
            "{axis} values must be sorted strictly ascending"
        )));
    }
    values
        .iter()
        .map(|&value| {
            let config = axis.apply(template, value);
            config.validate()?;
            Ok(SweepRow {
                value,
                optimum: optimize(space, &config, top_k)?,
            })
        })
        .collect()
}
