//! Strategy enumeration, exact and bucketed Pareto frontiers.
//!
//! Strategies are enumerated lexicographically over the group-size
//! assignment and then over the test composition; the position in that
//! order is the strategy id. Only canonical strategies are produced: a
//! category with no tests always carries group size 1.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::FrontierError;
use crate::model::{Evaluator, ObjectiveVector, Scenario, Strategy};

/// Smallest bucket size; stands in for a zero bucket.
pub const BUCKET_FLOOR: f64 = 1e-12;

/// Default cap on the number of feasible strategies a computation may visit.
pub const DEFAULT_FEASIBLE_CAP: u64 = 10_000_000;

/// Default iteration limit for the bucket-size search.
pub const DEFAULT_MAX_ITERS: u32 = 40;

/// Default acceptance window for the bucket-size search.
pub fn default_tolerance(desired: usize) -> usize {
    (desired / 10).max(1)
}

/// A strategy together with its objective values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedStrategy {
    pub id: u64,
    #[serde(flatten)]
    pub strategy: Strategy,
    #[serde(flatten)]
    pub objectives: ObjectiveVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bucketized_health: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bucketized_quarantine: Option<Vec<f64>>,
}

impl EvaluatedStrategy {
    pub fn new(id: u64, strategy: Strategy, objectives: ObjectiveVector) -> Self {
        Self {
            id,
            strategy,
            objectives,
            bucketized_health: None,
            bucketized_quarantine: None,
        }
    }
}

/// Bucket sizes for the health objective and each quarantine objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketSpec {
    pub rho_health: f64,
    pub rho_quarantine: Vec<f64>,
}

impl BucketSpec {
    pub fn new(rho_health: f64, rho_quarantine: Vec<f64>) -> Result<Self, FrontierError> {
        let spec = Self { rho_health, rho_quarantine };
        spec.validate()?;
        Ok(spec)
    }

    /// Same size for every objective.
    pub fn uniform(rho: f64, k: usize) -> Result<Self, FrontierError> {
        Self::new(rho, vec![rho; k])
    }

    pub fn validate(&self) -> Result<(), FrontierError> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if ok(self.rho_health) && self.rho_quarantine.iter().all(|&x| ok(x)) {
            Ok(())
        } else {
            Err(FrontierError::InvalidBucketSpec)
        }
    }

    /// `rho = max(alpha * range, BUCKET_FLOOR)` per objective.
    pub fn scaled(alpha: f64, ranges: &ObjectiveVector) -> Self {
        let size = |r: f64| (alpha * r).max(BUCKET_FLOOR);
        Self {
            rho_health: size(ranges.health),
            rho_quarantine: ranges.quarantine.iter().map(|&r| size(r)).collect(),
        }
    }
}

/// Outcome of the bucket-size search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetInfo {
    pub desired: usize,
    pub tolerance: usize,
    pub alpha: f64,
    pub iterations: u32,
    /// False when the count is outside the tolerance window, and always when
    /// `desired` exceeds the unbucketed frontier (the count is capped).
    pub reached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierResult {
    pub solutions: Vec<EvaluatedStrategy>,
    pub total_enumerated: u64,
    pub total_feasible: u64,
    pub bucket_spec: Option<BucketSpec>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetInfo>,
}

impl FrontierResult {
    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&EvaluatedStrategy> {
        self.solutions.iter().find(|s| s.id == id)
    }

    /// Per-objective minimum and maximum over the solutions.
    pub fn bounds(&self) -> Option<(ObjectiveVector, ObjectiveVector)> {
        let first = self.solutions.first()?;
        let mut lo = first.objectives.clone();
        let mut hi = first.objectives.clone();
        for s in &self.solutions[1..] {
            let o = &s.objectives;
            lo.health = lo.health.min(o.health);
            hi.health = hi.health.max(o.health);
            for (i, &q) in o.quarantine.iter().enumerate() {
                lo.quarantine[i] = lo.quarantine[i].min(q);
                hi.quarantine[i] = hi.quarantine[i].max(q);
            }
        }
        Some((lo, hi))
    }

    /// Objective ranges (max - min) over the solutions.
    pub fn ranges(&self) -> Option<ObjectiveVector> {
        let (lo, hi) = self.bounds()?;
        Some(ObjectiveVector {
            health: hi.health - lo.health,
            quarantine: hi.quarantine.iter().zip(&lo.quarantine).map(|(h, l)| h - l).collect(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("frontier serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

// ---------------------------------------------------------------------------
// Enumeration

/// Per-category bounds on `t_i` for a fixed group assignment.
fn t_bounds(scenario: &Scenario, g: &[u32]) -> (Vec<u32>, Vec<u32>) {
    let budget = scenario.budget();
    let mut lo = Vec::with_capacity(g.len());
    let mut hi = Vec::with_capacity(g.len());
    for (c, &gi) in scenario.categories().iter().zip(g) {
        // t_i = 0 is only canonical with g_i = 1
        lo.push(u32::from(gi != 1));
        hi.push((c.n / gi).min(budget));
    }
    (lo, hi)
}

/// Number of vectors `t` with `lo <= t <= hi` summing to `total`.
fn count_compositions(lo: &[u32], hi: &[u32], total: u32) -> u128 {
    let total = total as usize;
    let mut ways = vec![0u128; total + 1];
    ways[0] = 1;
    for (&l, &h) in lo.iter().zip(hi) {
        if l > h {
            return 0;
        }
        let mut next = vec![0u128; total + 1];
        for (s, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for t in l as usize..=(h as usize).min(total - s) {
                next[s + t] = next[s + t].saturating_add(w);
            }
        }
        ways = next;
    }
    ways[total]
}

/// Iterates over group-size assignments in lexicographic order.
fn group_assignments(scenario: &Scenario) -> Vec<Vec<u32>> {
    let groups = scenario.allowed_groups();
    let groups: Vec<u32> = groups.into_iter().filter(|&g| g <= scenario.max_group()).collect();
    let k = scenario.k();
    let mut out = Vec::new();
    let mut idx = vec![0usize; k];
    loop {
        out.push(idx.iter().map(|&i| groups[i]).collect());
        let mut pos = k;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < groups.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Lexicographic iterator over bounded compositions of a total.
#[derive(Debug, Clone)]
struct Compositions {
    lo: Vec<u32>,
    hi: Vec<u32>,
    total: u32,
    suffix_lo: Vec<u64>,
    suffix_hi: Vec<u64>,
    current: Option<Vec<u32>>,
    started: bool,
}

impl Compositions {
    fn new(lo: Vec<u32>, hi: Vec<u32>, total: u32) -> Self {
        let k = lo.len();
        let mut suffix_lo = vec![0u64; k + 1];
        let mut suffix_hi = vec![0u64; k + 1];
        for i in (0..k).rev() {
            suffix_lo[i] = suffix_lo[i + 1] + u64::from(lo[i]);
            suffix_hi[i] = suffix_hi[i + 1] + u64::from(hi[i].max(lo[i]));
        }
        let mut it = Self { lo, hi, total, suffix_lo, suffix_hi, current: None, started: false };
        let mut t = vec![0u32; k];
        if it.lo.iter().zip(&it.hi).all(|(l, h)| l <= h) && it.fill_min(&mut t, 0, 0) {
            it.current = Some(t);
        }
        it
    }

    /// Fills positions `from..` with the lexicographically smallest completion
    /// given that positions before `from` sum to `used`.
    fn fill_min(&self, t: &mut [u32], from: usize, used: u64) -> bool {
        let total = u64::from(self.total);
        let mut used = used;
        for i in from..t.len() {
            let rest = total.checked_sub(used);
            let Some(rest) = rest else { return false };
            let need = rest.saturating_sub(self.suffix_hi[i + 1]);
            let v = need.max(u64::from(self.lo[i]));
            if v > u64::from(self.hi[i]) || v > rest {
                return false;
            }
            t[i] = v as u32;
            used += v;
        }
        used == total
    }
}

impl Iterator for Compositions {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        if !self.started {
            self.started = true;
            return self.current.clone();
        }
        let mut t = self.current.take()?;
        let k = t.len();
        let total = u64::from(self.total);
        let mut used = 0u64;
        let prefix: Vec<u64> = std::iter::once(0)
            .chain(t.iter().map(|&x| {
                used += u64::from(x);
                used
            }))
            .collect();
        // rightmost position (excluding the last) that can grow
        for i in (0..k.saturating_sub(1)).rev() {
            let grown = u64::from(t[i]) + 1;
            if grown > u64::from(self.hi[i]) {
                continue;
            }
            let used = prefix[i] + grown;
            if used > total {
                continue;
            }
            let rest = total - used;
            if rest < self.suffix_lo[i + 1] || rest > self.suffix_hi[i + 1] {
                continue;
            }
            t[i] = grown as u32;
            if self.fill_min(&mut t, i + 1, used) {
                self.current = Some(t.clone());
                return Some(t);
            }
        }
        None
    }
}

/// Sizes of the strategy space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyCount {
    /// Canonical feasible strategies.
    pub feasible: u128,
    /// (group assignment, composition) pairs before collapsing zero-test
    /// placeholders, i.e. what a naive enumerator visits.
    pub enumerated: u128,
}

/// Counts the strategy space without enumerating it.
pub fn count_strategies(scenario: &Scenario) -> StrategyCount {
    let mut feasible = 0u128;
    let mut enumerated = 0u128;
    let budget = scenario.budget();
    for g in group_assignments(scenario) {
        let (lo, hi) = t_bounds(scenario, &g);
        feasible = feasible.saturating_add(count_compositions(&lo, &hi, budget));
        let zero = vec![0u32; lo.len()];
        enumerated = enumerated.saturating_add(count_compositions(&zero, &hi, budget));
    }
    StrategyCount { feasible, enumerated }
}

/// One block of the enumeration: a group assignment and the id of its first
/// strategy.
#[derive(Debug, Clone)]
struct Block {
    g: Vec<u32>,
    first_id: u64,
    lo: Vec<u32>,
    hi: Vec<u32>,
}

fn blocks(scenario: &Scenario) -> Vec<Block> {
    let mut next_id = 0u64;
    let mut out = Vec::new();
    for g in group_assignments(scenario) {
        let (lo, hi) = t_bounds(scenario, &g);
        let n = count_compositions(&lo, &hi, scenario.budget());
        if n == 0 {
            continue;
        }
        out.push(Block { g, first_id: next_id, lo, hi });
        next_id += n as u64;
    }
    out
}

impl Block {
    fn strategies(&self, budget: u32) -> impl Iterator<Item = (u64, Strategy)> + '_ {
        Compositions::new(self.lo.clone(), self.hi.clone(), budget)
            .enumerate()
            .map(move |(n, t)| (self.first_id + n as u64, Strategy::new(t, self.g.clone())))
    }
}

/// Every canonical feasible strategy exactly once, in id order.
#[derive(Debug)]
pub struct Enumeration {
    budget: u32,
    blocks: std::vec::IntoIter<Block>,
    current: Option<(Block, Compositions)>,
    count: StrategyCount,
}

impl Enumeration {
    pub fn new(scenario: &Scenario) -> Self {
        Self {
            budget: scenario.budget(),
            blocks: blocks(scenario).into_iter(),
            current: None,
            count: count_strategies(scenario),
        }
    }

    /// True when the budget cannot be spent by any feasible strategy.
    pub fn is_infeasible(&self) -> bool {
        self.count.feasible == 0
    }

    pub fn strategy_count(&self) -> StrategyCount {
        self.count
    }
}

impl Iterator for Enumeration {
    type Item = Strategy;

    fn next(&mut self) -> Option<Strategy> {
        loop {
            if let Some((block, comps)) = &mut self.current {
                if let Some(t) = comps.next() {
                    return Some(Strategy::new(t, block.g.clone()));
                }
            }
            let block = self.blocks.next()?;
            let comps = Compositions::new(block.lo.clone(), block.hi.clone(), self.budget);
            self.current = Some((block, comps));
        }
    }
}

/// Every canonical feasible strategy of `scenario`, in id order.
pub fn enumerate_strategies(scenario: &Scenario) -> Enumeration {
    Enumeration::new(scenario)
}

// ---------------------------------------------------------------------------
// Dominance

/// Pareto dominance: health no worse, every quarantine no worse, and at least
/// one strictly better.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> Result<bool, FrontierError> {
    if a.k() != b.k() {
        return Err(FrontierError::Dimension { left: a.k(), right: b.k() });
    }
    Ok(dominates_unchecked(a, b))
}

fn dominates_unchecked(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    if a.health < b.health {
        return false;
    }
    let mut strict = a.health > b.health;
    for (x, y) in a.quarantine.iter().zip(&b.quarantine) {
        if x > y {
            return false;
        }
        strict |= x < y;
    }
    strict
}

/// Incrementally maintained set of mutually non-dominated strategies.
#[derive(Debug, Clone, Default)]
pub struct ParetoArchive {
    members: Vec<EvaluatedStrategy>,
}

impl ParetoArchive {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `candidate` unless an existing member dominates it, dropping every
    /// member it dominates. Returns whether it was added.
    pub fn insert(&mut self, candidate: EvaluatedStrategy) -> bool {
        if self
            .members
            .iter()
            .any(|m| dominates_unchecked(&m.objectives, &candidate.objectives))
        {
            return false;
        }
        self.members
            .retain(|m| !dominates_unchecked(&candidate.objectives, &m.objectives));
        self.members.push(candidate);
        true
    }

    /// Union of two archives with dominated members removed.
    pub fn merge(mut self, other: ParetoArchive) -> ParetoArchive {
        if self.members.len() < other.members.len() {
            return other.merge(self);
        }
        for m in other.members {
            self.insert(m);
        }
        self
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Members sorted by id.
    pub fn into_sorted(mut self) -> Vec<EvaluatedStrategy> {
        self.members.sort_by_key(|m| m.id);
        self.members
    }
}

impl FromIterator<EvaluatedStrategy> for ParetoArchive {
    fn from_iter<I: IntoIterator<Item = EvaluatedStrategy>>(iter: I) -> Self {
        let mut archive = ParetoArchive::new();
        for s in iter {
            archive.insert(s);
        }
        archive
    }
}

// ---------------------------------------------------------------------------
// Frontier computation

/// Knobs for frontier computation.
#[derive(Debug, Clone)]
pub struct FrontierOptions {
    /// Reject scenarios with more feasible strategies than this.
    pub cap: Option<u64>,
    pub parallel: bool,
    /// Incremented once per evaluated strategy.
    pub progress: Option<Arc<AtomicU64>>,
}

impl Default for FrontierOptions {
    fn default() -> Self {
        Self { cap: Some(DEFAULT_FEASIBLE_CAP), parallel: true, progress: None }
    }
}

fn block_frontier(
    evaluator: &Evaluator<'_>,
    block: &Block,
    budget: u32,
    progress: Option<&AtomicU64>,
) -> ParetoArchive {
    let mut archive = ParetoArchive::new();
    for (id, strategy) in block.strategies(budget) {
        let objectives = evaluator.evaluate_unchecked(&strategy);
        archive.insert(EvaluatedStrategy::new(id, strategy, objectives));
        if let Some(p) = progress {
            p.fetch_add(1, Ordering::Relaxed);
        }
    }
    archive
}

/// The exact Pareto frontier, using default options.
pub fn pareto_frontier(scenario: &Scenario) -> Result<FrontierResult, FrontierError> {
    pareto_frontier_with(scenario, &FrontierOptions::default())
}

pub fn pareto_frontier_with(
    scenario: &Scenario,
    options: &FrontierOptions,
) -> Result<FrontierResult, FrontierError> {
    let count = count_strategies(scenario);
    if count.feasible == 0 {
        return Err(FrontierError::Infeasible { budget: scenario.budget() });
    }
    if let Some(cap) = options.cap {
        if count.feasible > u128::from(cap) {
            return Err(FrontierError::TooManyStrategies { count: count.feasible, cap });
        }
    }
    let evaluator = Evaluator::new(scenario);
    let budget = scenario.budget();
    let blocks = blocks(scenario);
    let progress = options.progress.as_deref();
    let archive = if options.parallel {
        blocks
            .par_iter()
            .map(|b| block_frontier(&evaluator, b, budget, progress))
            .reduce(ParetoArchive::new, ParetoArchive::merge)
    } else {
        blocks
            .iter()
            .map(|b| block_frontier(&evaluator, b, budget, progress))
            .fold(ParetoArchive::new(), ParetoArchive::merge)
    };
    Ok(FrontierResult {
        solutions: archive.into_sorted(),
        total_enumerated: count.enumerated.min(u128::from(u64::MAX)) as u64,
        total_feasible: count.feasible as u64,
        bucket_spec: None,
        seed: 0,
        target: None,
    })
}

// ---------------------------------------------------------------------------
// Bucketing

fn round_half_up(x: f64, rho: f64) -> f64 {
    (x / rho + 0.5).floor()
}

/// Rounds every objective to the nearest multiple of its bucket size, halves
/// rounding up.
pub fn bucketize(v: &ObjectiveVector, spec: &BucketSpec) -> ObjectiveVector {
    ObjectiveVector {
        health: round_half_up(v.health, spec.rho_health) * spec.rho_health,
        quarantine: v
            .quarantine
            .iter()
            .zip(&spec.rho_quarantine)
            .map(|(&x, &rho)| round_half_up(x, rho) * rho)
            .collect(),
    }
}

/// Bucket index per objective; dominance on indices equals dominance on the
/// bucketized values.
pub fn bucket_key(v: &ObjectiveVector, spec: &BucketSpec) -> Vec<i128> {
    std::iter::once(round_half_up(v.health, spec.rho_health) as i128)
        .chain(
            v.quarantine
                .iter()
                .zip(&spec.rho_quarantine)
                .map(|(&x, &rho)| round_half_up(x, rho) as i128),
        )
        .collect()
}

/// Dominance between bucket keys (health first, larger is better; the rest
/// smaller is better).
pub fn key_dominates(a: &[i128], b: &[i128]) -> bool {
    if a[0] < b[0] {
        return false;
    }
    let mut strict = a[0] > b[0];
    for (x, y) in a[1..].iter().zip(&b[1..]) {
        if x > y {
            return false;
        }
        strict |= x < y;
    }
    strict
}

/// Buckets an exact frontier: surviving buckets are those whose key is not
/// dominated, one seeded random representative is kept per bucket.
pub fn bucket_exact_frontier(
    exact: &FrontierResult,
    spec: &BucketSpec,
    seed: u64,
) -> Result<FrontierResult, FrontierError> {
    spec.validate()?;
    let mut buckets: BTreeMap<Vec<i128>, Vec<&EvaluatedStrategy>> = BTreeMap::new();
    for s in &exact.solutions {
        if s.objectives.k() != spec.rho_quarantine.len() {
            return Err(FrontierError::Dimension {
                left: s.objectives.k(),
                right: spec.rho_quarantine.len(),
            });
        }
        buckets.entry(bucket_key(&s.objectives, spec)).or_default().push(s);
    }
    let keys: Vec<&Vec<i128>> = buckets.keys().collect();
    let mut survivors: Vec<(&Vec<i128>, &Vec<&EvaluatedStrategy>)> = buckets
        .iter()
        .filter(|(key, _)| !keys.iter().any(|other| key_dominates(other, key)))
        .collect();
    // members are in id order; buckets are visited by smallest id so the
    // draw does not depend on key ordering
    survivors.sort_by_key(|(_, members)| members[0].id);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut solutions: Vec<EvaluatedStrategy> = survivors
        .into_iter()
        .map(|(_, members)| {
            let pick = members[rng.random_range(0..members.len())];
            let b = bucketize(&pick.objectives, spec);
            let mut rep = pick.clone();
            rep.bucketized_health = Some(b.health);
            rep.bucketized_quarantine = Some(b.quarantine);
            rep
        })
        .collect();
    solutions.sort_by_key(|s| s.id);
    Ok(FrontierResult {
        solutions,
        total_enumerated: exact.total_enumerated,
        total_feasible: exact.total_feasible,
        bucket_spec: Some(spec.clone()),
        seed,
        target: None,
    })
}

/// Frontier under bucketed dominance with one representative per bucket.
pub fn bucketed_frontier(
    scenario: &Scenario,
    spec: &BucketSpec,
    seed: u64,
) -> Result<FrontierResult, FrontierError> {
    bucketed_frontier_with(scenario, spec, seed, &FrontierOptions::default())
}

pub fn bucketed_frontier_with(
    scenario: &Scenario,
    spec: &BucketSpec,
    seed: u64,
    options: &FrontierOptions,
) -> Result<FrontierResult, FrontierError> {
    spec.validate()?;
    let exact = pareto_frontier_with(scenario, options)?;
    bucket_exact_frontier(&exact, spec, seed)
}

/// Parameters of the bucket-size search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TargetParams {
    pub desired: usize,
    pub tolerance: usize,
    pub max_iters: u32,
    pub seed: u64,
}

impl TargetParams {
    pub fn new(desired: usize, seed: u64) -> Self {
        Self {
            desired,
            tolerance: default_tolerance(desired),
            max_iters: DEFAULT_MAX_ITERS,
            seed,
        }
    }
}

/// Searches for bucket sizes `alpha * range` that leave about `desired`
/// solutions, starting from an already computed exact frontier.
///
/// If even `alpha = 1` leaves too many buckets (rounding to the nearest
/// multiple can split a range into two buckets), the upper end of the
/// search is doubled until the count drops to the target. `desired = 1`
/// therefore always ends with a single solution.
pub fn target_count_from_exact(
    exact: &FrontierResult,
    params: TargetParams,
) -> Result<(BucketSpec, FrontierResult), FrontierError> {
    let TargetParams { desired, tolerance, max_iters, seed } = params;
    let desired = desired.max(1);
    let ranges = exact.ranges().ok_or(FrontierError::Infeasible { budget: 0 })?;
    if desired >= exact.len() {
        let spec = BucketSpec::scaled(0.0, &ranges);
        let mut result = exact.clone();
        result.seed = seed;
        result.target = Some(TargetInfo {
            desired,
            tolerance,
            alpha: 0.0,
            iterations: 0,
            reached: desired <= exact.len(),
        });
        return Ok((spec, result));
    }

    let within = |n: usize| n.abs_diff(desired) <= tolerance;
    let mut best: Option<(f64, BucketSpec, FrontierResult)> = None;
    let consider = |alpha: f64, best: &mut Option<(f64, BucketSpec, FrontierResult)>| {
        let spec = BucketSpec::scaled(alpha, &ranges);
        let result = bucket_exact_frontier(exact, &spec, seed)?;
        let n = result.len();
        let better = match best {
            None => true,
            Some((_, _, b)) => {
                let (d_new, d_old) = (n.abs_diff(desired), b.len().abs_diff(desired));
                d_new < d_old || (d_new == d_old && n < b.len())
            }
        };
        if better {
            *best = Some((alpha, spec, result));
        }
        Ok::<usize, FrontierError>(n)
    };

    let mut iterations = 0u32;
    let mut hi = 1.0f64;
    let mut n_hi = consider(hi, &mut best)?;
    iterations += 1;
    // keep doubling until the upper end is at or below the target, so an
    // in-window count above it never hides an exact hit
    while n_hi > desired && hi < 1e6 {
        hi *= 2.0;
        n_hi = consider(hi, &mut best)?;
        iterations += 1;
    }
    let mut lo = 0.0f64;
    if !within(n_hi) {
        while iterations < max_iters {
            let mid = 0.5 * (lo + hi);
            let n = consider(mid, &mut best)?;
            iterations += 1;
            if within(n) {
                break;
            }
            if n > desired {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let (alpha, spec, mut result) = best.expect("at least one candidate evaluated");
    result.target = Some(TargetInfo {
        desired,
        tolerance,
        alpha,
        iterations,
        reached: within(result.len()),
    });
    Ok((spec, result))
}

/// Bucket sizes chosen by binary search so that roughly `desired` solutions
/// remain.
pub fn target_count_buckets(
    scenario: &Scenario,
    params: TargetParams,
) -> Result<(BucketSpec, FrontierResult), FrontierError> {
    target_count_buckets_with(scenario, params, &FrontierOptions::default())
}

pub fn target_count_buckets_with(
    scenario: &Scenario,
    params: TargetParams,
    options: &FrontierOptions,
) -> Result<(BucketSpec, FrontierResult), FrontierError> {
    let exact = pareto_frontier_with(scenario, options)?;
    target_count_from_exact(&exact, params)
}

/// Solutions with `health >= min_health` and `quarantine[i] <=
/// max_quarantine[i]`. Use infinities for unbounded thresholds; a short
/// `max_quarantine` leaves the remaining categories unbounded.
pub fn filter_by_thresholds(
    frontier: &FrontierResult,
    min_health: f64,
    max_quarantine: &[f64],
) -> FrontierResult {
    let keep = |s: &EvaluatedStrategy| {
        s.objectives.health >= min_health
            && s
                .objectives
                .quarantine
                .iter()
                .zip(max_quarantine)
                .all(|(q, max)| q <= max)
    };
    FrontierResult {
        solutions: frontier.solutions.iter().filter(|s| keep(s)).cloned().collect(),
        ..frontier.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{is_feasible, Category, ExposureMatrix};

    fn scenario(ns: &[u32], budget: u32, menu: Vec<u32>) -> Scenario {
        let k = ns.len();
        let cats = ns
            .iter()
            .enumerate()
            .map(|(i, &n)| Category::new(format!("c{i}"), n, 0.05 + 0.03 * i as f64, 1.0))
            .collect();
        Scenario::new(
            cats,
            ExposureMatrix::with_uniform_pi(vec![vec![2.0; k]; k], 0.1),
            budget,
            10,
            menu,
        )
        .unwrap()
    }

    fn ov(h: f64, q: &[f64]) -> ObjectiveVector {
        ObjectiveVector::new(h, q.to_vec())
    }

    #[test]
    fn single_category_enumeration() {
        let s = scenario(&[100], 3, vec![1, 3]);
        let all: Vec<Strategy> = enumerate_strategies(&s).collect();
        assert_eq!(
            all,
            vec![Strategy::new(vec![3], vec![1]), Strategy::new(vec![3], vec![3])]
        );
    }

    #[test]
    fn two_category_unit_budget() {
        let s = scenario(&[10, 10], 1, vec![1]);
        let all: Vec<Strategy> = enumerate_strategies(&s).collect();
        assert_eq!(
            all,
            vec![
                Strategy::new(vec![0, 1], vec![1, 1]),
                Strategy::new(vec![1, 0], vec![1, 1]),
            ]
        );
    }

    fn brute_force(s: &Scenario) -> Vec<Strategy> {
        let groups = s.allowed_groups();
        let k = s.k();
        let mut out = std::collections::BTreeSet::new();
        let t_space = (s.budget() + 1).pow(k as u32);
        let g_space = (groups.len() as u32).pow(k as u32);
        for ti in 0..t_space {
            let mut x = ti;
            let t: Vec<u32> = (0..k)
                .map(|_| {
                    let v = x % (s.budget() + 1);
                    x /= s.budget() + 1;
                    v
                })
                .collect();
            for gi in 0..g_space {
                let mut y = gi;
                let g: Vec<u32> = (0..k)
                    .map(|_| {
                        let v = groups[(y % groups.len() as u32) as usize];
                        y /= groups.len() as u32;
                        v
                    })
                    .collect();
                let st = Strategy::new(t.clone(), g);
                if is_feasible(s, &st).unwrap() {
                    out.insert(st.canonicalize());
                }
            }
        }
        out.into_iter().collect()
    }

    #[test]
    fn enumeration_matches_brute_force_with_binding_coverage() {
        let s = scenario(&[6, 100], 4, vec![1, 3]);
        let mut got: Vec<Strategy> = enumerate_strategies(&s).collect();
        let n = got.len();
        got.sort();
        got.dedup();
        assert_eq!(got.len(), n, "duplicates in enumeration");
        assert_eq!(got, brute_force(&s));
        assert_eq!(count_strategies(&s).feasible, n as u128);
        assert!(got.iter().all(|st| st.g[0] != 3 || st.t[0] <= 2));
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let s = scenario(&[20, 30, 9], 5, vec![1, 3, 5]);
        let all: Vec<Strategy> = enumerate_strategies(&s).collect();
        for w in all.windows(2) {
            assert!((&w[0].g, &w[0].t) < (&w[1].g, &w[1].t));
        }
    }

    #[test]
    fn infeasible_budget_is_flagged() {
        let s = scenario(&[3, 2], 10, vec![1, 3]);
        let e = enumerate_strategies(&s);
        assert!(e.is_infeasible());
        assert_eq!(e.strategy_count().feasible, 0);
        assert_eq!(enumerate_strategies(&s).count(), 0);
        assert!(matches!(pareto_frontier(&s), Err(FrontierError::Infeasible { .. })));
    }

    #[test]
    fn dominance_examples() {
        assert!(dominates(&ov(10.0, &[1.0, 1.0]), &ov(9.0, &[1.0, 1.0])).unwrap());
        assert!(!dominates(&ov(10.0, &[1.0, 1.0]), &ov(10.0, &[1.0, 1.0])).unwrap());
        let a = ov(10.0, &[2.0, 1.0]);
        let b = ov(9.0, &[1.0, 1.0]);
        assert!(!dominates(&a, &b).unwrap());
        assert!(!dominates(&b, &a).unwrap());
        assert!(dominates(&a, &ov(1.0, &[1.0])).is_err());
    }

    #[test]
    fn single_strategy_frontier() {
        let s = scenario(&[100], 3, vec![1]);
        let f = pareto_frontier(&s).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f.total_feasible, 1);
    }

    #[test]
    fn archive_keeps_the_dominator() {
        let mut a = ParetoArchive::new();
        a.insert(EvaluatedStrategy::new(0, Strategy::new(vec![1], vec![1]), ov(1.0, &[1.0])));
        a.insert(EvaluatedStrategy::new(1, Strategy::new(vec![1], vec![3]), ov(2.0, &[0.5])));
        let members = a.into_sorted();
        assert_eq!(members.len(), 1);
        assert_eq!(members[0].id, 1);
    }

    #[test]
    fn ids_follow_enumeration_order() {
        let s = scenario(&[20, 30, 9], 5, vec![1, 3, 5]);
        let all: Vec<Strategy> = enumerate_strategies(&s).collect();
        let f = pareto_frontier(&s).unwrap();
        for sol in &f.solutions {
            assert_eq!(all[sol.id as usize], sol.strategy);
        }
    }

    #[test]
    fn bucketize_examples() {
        let spec = BucketSpec::new(5.0, vec![1.0]).unwrap();
        assert_eq!(bucketize(&ov(12.0, &[3.0]), &spec), ov(10.0, &[3.0]));
        assert_eq!(bucketize(&ov(12.5, &[7.0]), &spec).health, 15.0);
        assert!(BucketSpec::new(0.0, vec![1.0]).is_err());
    }

    #[test]
    fn huge_buckets_collapse_to_one_solution() {
        let s = scenario(&[40, 60, 30], 8, vec![1, 3, 5, 10]);
        let exact = pareto_frontier(&s).unwrap();
        assert!(exact.len() > 1);
        let (_, hi) = exact.bounds().unwrap();
        let big = 2.0 * hi.quarantine.iter().copied().fold(hi.health, f64::max) + 1.0;
        let b = bucketed_frontier(&s, &BucketSpec::uniform(big, 3).unwrap(), 7).unwrap();
        assert_eq!(b.len(), 1);
    }

    #[test]
    fn target_one_and_cap() {
        let s = scenario(&[40, 60, 30], 8, vec![1, 3, 5, 10]);
        let exact = pareto_frontier(&s).unwrap();
        let (_, one) = target_count_buckets(&s, TargetParams::new(1, 3)).unwrap();
        assert_eq!(one.len(), 1);
        let (_, capped) =
            target_count_buckets(&s, TargetParams::new(exact.len() + 10, 3)).unwrap();
        assert_eq!(capped.len(), exact.len());
        assert!(!capped.target.unwrap().reached);
    }

    #[test]
    fn filter_examples() {
        let s = scenario(&[40, 60], 6, vec![1, 3, 5]);
        let f = pareto_frontier(&s).unwrap();
        let all = filter_by_thresholds(&f, f64::NEG_INFINITY, &[f64::INFINITY; 2]);
        assert_eq!(all, f);
        let (_, hi) = f.bounds().unwrap();
        assert!(filter_by_thresholds(&f, hi.health + 1.0, &[]).is_empty());
        let pick = &f.solutions[f.len() / 2];
        let hit = filter_by_thresholds(&f, pick.objectives.health, &pick.objectives.quarantine);
        assert!(hit.get(pick.id).is_some());
    }

    #[test]
    fn frontier_json_shape() {
        let s = scenario(&[40, 60], 6, vec![1, 3, 5]);
        let f = bucketed_frontier(&s, &BucketSpec::uniform(0.5, 2).unwrap(), 1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&f.to_json()).unwrap();
        let first = &v["solutions"][0];
        for key in ["id", "t", "g", "health", "quarantine", "bucketized_health", "bucketized_quarantine"] {
            assert!(first.get(key).is_some(), "missing {key}");
        }
        let back: FrontierResult = serde_json::from_value(v).unwrap();
        assert_eq!(back, f);
    }
}
