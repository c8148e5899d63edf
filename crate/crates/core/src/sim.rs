//! Discrete-time network SIRQ simulation.
//!
//! Used as a dynamic check on testing strategies: a contact network is drawn
//! so that a member of category `i` has on average `d[i][j]` neighbours in
//! category `j`, an outbreak is seeded, and every test period each category
//! draws disjoint random pools. Members of a positive pool are quarantined.
//!
//! A day runs: quarantine releases, testing (on test days), transmission,
//! recovery. Counts are recorded at the end of the day.

use std::io::Write;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::model::{violation, Scenario, Strategy};
use crate::ModelError;

/// Per-contact daily transmission probability of the reference campus.
pub const CAMPUS_BETA: f64 = 0.01;
/// Daily recovery probability of the reference campus.
pub const CAMPUS_GAMMA: f64 = 0.0427;

/// Default relative tolerance on `n_i d_ij` vs `n_j d_ji`.
pub const DEFAULT_CONSISTENCY_TOLERANCE: f64 = 0.10;

const STREAM_NETWORK: u64 = 1;
const STREAM_SEEDING: u64 = 2;
const STREAM_DYNAMICS: u64 = 3;

/// Derives an independent RNG for a (seed, replicate, purpose) triple.
fn stream(seed: u64, replicate: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ replicate.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(purpose);
    rng
}

/// Undirected simple graph in compressed adjacency form.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactNetwork {
    category: Vec<u16>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    k: usize,
}

impl ContactNetwork {
    fn from_edges(category: Vec<u16>, k: usize, edges: &[(u32, u32)]) -> Self {
        let n = category.len();
        let mut degree = vec![0usize; n];
        for &(a, b) in edges {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0u32; offsets[n]];
        for &(a, b) in edges {
            targets[fill[a as usize]] = b;
            fill[a as usize] += 1;
            targets[fill[b as usize]] = a;
            fill[b as usize] += 1;
        }
        for v in 0..n {
            targets[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        Self { category, offsets, targets, k }
    }

    pub fn node_count(&self) -> usize {
        self.category.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn category_of(&self, v: usize) -> usize {
        usize::from(self.category[v])
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Nodes of category `i`, in index order.
    pub fn members(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(move |&v| self.category_of(v) == i)
    }

    /// Realized mean number of category-`j` neighbours of a category-`i`
    /// node.
    pub fn block_mean_degree(&self) -> Vec<Vec<f64>> {
        let mut sums = vec![vec![0u64; self.k]; self.k];
        let mut sizes = vec![0u64; self.k];
        for v in 0..self.node_count() {
            let i = self.category_of(v);
            sizes[i] += 1;
            for &w in self.neighbors(v) {
                sums[i][self.category_of(w as usize)] += 1;
            }
        }
        sums.iter()
            .zip(&sizes)
            .map(|(row, &n)| row.iter().map(|&s| if n == 0 { 0.0 } else { s as f64 / n as f64 }).collect())
            .collect()
    }

    /// True when no node lists itself and every edge appears once per side.
    pub fn is_simple(&self) -> bool {
        (0..self.node_count()).all(|v| {
            let ns = self.neighbors(v);
            ns.windows(2).all(|w| w[0] < w[1])
                && !ns.contains(&(v as u32))
                && ns.iter().all(|&w| self.neighbors(w as usize).binary_search(&(v as u32)).is_ok())
        })
    }
}

/// Knobs for network generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkOptions {
    /// Maximum relative gap between `n_i d_ij` and `n_j d_ji`. Use
    /// `f64::INFINITY` to accept any matrix (the two directions are then
    /// averaged).
    pub consistency_tolerance: f64,
}

impl Default for NetworkOptions {
    fn default() -> Self {
        Self { consistency_tolerance: DEFAULT_CONSISTENCY_TOLERANCE }
    }
}

/// Visits the indices of a Bernoulli(p) subset of `0..len` by geometric
/// skipping.
fn bernoulli_indices(len: u64, p: f64, rng: &mut impl Rng, mut visit: impl FnMut(u64)) {
    if p <= 0.0 || len == 0 {
        return;
    }
    if p >= 1.0 {
        (0..len).for_each(visit);
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut pos: u64 = 0;
    loop {
        let u: f64 = rng.random::<f64>();
        let skip = ((1.0 - u).ln() / log_q).floor();
        if !skip.is_finite() || skip >= (len - pos) as f64 {
            return;
        }
        pos += skip as u64;
        visit(pos);
        pos += 1;
        if pos >= len {
            return;
        }
    }
}

/// Maps a linear index to the pair `(a, b)` with `a < b` in row-major order
/// of the strict upper triangle of an `n`-by-`n` matrix.
fn triangle_pair(index: u64, n: u64) -> (u64, u64) {
    // row a starts at a*n - a*(a+1)/2
    let nf = n as f64;
    let idx = index as f64;
    let mut a = ((2.0 * nf - 1.0 - ((2.0 * nf - 1.0).powi(2) - 8.0 * idx).max(0.0).sqrt()) / 2.0)
        .floor() as u64;
    let start = |a: u64| a * n - a * (a + 1) / 2;
    while a > 0 && start(a) > index {
        a -= 1;
    }
    while a + 1 < n && start(a + 1) <= index {
        a += 1;
    }
    let b = a + 1 + (index - start(a));
    (a, b)
}

/// Draws a stochastic block network whose expected block mean degrees equal
/// `d`. Nodes are laid out category by category in scenario order.
pub fn generate_network(
    scenario: &Scenario,
    d: &[Vec<f64>],
    seed: u64,
    options: NetworkOptions,
) -> Result<ContactNetwork, SimError> {
    let k = scenario.k();
    if d.len() != k || d.iter().any(|r| r.len() != k) {
        return Err(SimError::Dimension { k });
    }
    let sizes: Vec<u64> = scenario.categories().iter().map(|c| u64::from(c.n)).collect();
    let mut first = vec![0u64; k + 1];
    for i in 0..k {
        first[i + 1] = first[i] + sizes[i];
    }

    for i in 0..k {
        for j in i + 1..k {
            let forward = sizes[i] as f64 * d[i][j];
            let backward = sizes[j] as f64 * d[j][i];
            let scale = forward.max(backward);
            if scale > 0.0 && (forward - backward).abs() > options.consistency_tolerance * scale {
                return Err(SimError::InconsistentBlock { i, j, forward, backward });
            }
        }
    }

    let mut rng = stream(seed, 0, STREAM_NETWORK);
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for i in 0..k {
        for j in i..k {
            let (ni, nj) = (sizes[i], sizes[j]);
            if i == j {
                let pairs = ni * ni.saturating_sub(1) / 2;
                if pairs == 0 {
                    continue;
                }
                let density = ni as f64 * d[i][i] / 2.0 / pairs as f64;
                if density > 1.0 + 1e-12 {
                    return Err(SimError::TooDense { i, j, density });
                }
                bernoulli_indices(pairs, density, &mut rng, |idx| {
                    let (a, b) = triangle_pair(idx, ni);
                    edges.push(((first[i] + a) as u32, (first[i] + b) as u32));
                });
            } else {
                let pairs = ni * nj;
                let expected = (ni as f64 * d[i][j] + nj as f64 * d[j][i]) / 2.0;
                let density = expected / pairs as f64;
                if density > 1.0 + 1e-12 {
                    return Err(SimError::TooDense { i, j, density });
                }
                bernoulli_indices(pairs, density, &mut rng, |idx| {
                    let (a, b) = (idx / nj, idx % nj);
                    edges.push(((first[i] + a) as u32, (first[j] + b) as u32));
                });
            }
        }
    }
    let category = (0..k)
        .flat_map(|i| std::iter::repeat_n(i as u16, sizes[i] as usize))
        .collect();
    Ok(ContactNetwork::from_edges(category, k, &edges))
}

/// Simulation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub scenario: Scenario,
    /// Per-contact daily transmission probability.
    pub beta: f64,
    /// Daily recovery probability.
    pub gamma: f64,
    pub quarantine_days: u32,
    pub test_period_days: u32,
    pub horizon_days: u32,
    /// Initially infected members per category.
    pub initial_infected: Vec<u32>,
    pub rng_seed: u64,
    /// Contact matrix for the network; the scenario's `d` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network_d: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_tolerance")]
    pub consistency_tolerance: f64,
}

fn default_tolerance() -> f64 {
    DEFAULT_CONSISTENCY_TOLERANCE
}

impl SimConfig {
    /// Reference parameters: 14-day quarantine, weekly testing.
    pub fn new(scenario: Scenario, horizon_days: u32, initial_infected: Vec<u32>, rng_seed: u64) -> Self {
        Self {
            scenario,
            beta: CAMPUS_BETA,
            gamma: CAMPUS_GAMMA,
            quarantine_days: 14,
            test_period_days: 7,
            horizon_days,
            initial_infected,
            rng_seed,
            network_d: None,
            consistency_tolerance: DEFAULT_CONSISTENCY_TOLERANCE,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Parameter(m.to_string()));
        if !(0.0..=1.0).contains(&self.beta) {
            return bad("beta must be in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must be in [0, 1]");
        }
        if self.quarantine_days == 0 {
            return bad("quarantine_days must be at least 1");
        }
        if self.test_period_days == 0 {
            return bad("test_period_days must be at least 1");
        }
        if self.horizon_days == 0 {
            return bad("horizon_days must be at least 1");
        }
        let k = self.scenario.k();
        if self.initial_infected.len() != k {
            return bad("initial_infected must have one entry per category");
        }
        for (c, &x) in self.scenario.categories().iter().zip(&self.initial_infected) {
            if x > c.n {
                return bad("initial_infected exceeds a category size");
            }
        }
        Ok(())
    }

    pub fn contact_matrix(&self) -> &[Vec<f64>] {
        self.network_d.as_deref().unwrap_or(&self.scenario.exposure().d)
    }

    pub fn network(&self, replicate: u64) -> Result<ContactNetwork, SimError> {
        generate_network(
            &self.scenario,
            self.contact_matrix(),
            self.rng_seed.wrapping_add(replicate),
            NetworkOptions { consistency_tolerance: self.consistency_tolerance },
        )
    }
}

/// End-of-day counts for one category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Compartments {
    pub s: u32,
    pub i: u32,
    pub r: u32,
    /// Quarantined members, whatever their health state.
    pub q: u32,
}

/// Secondary infections caused by an initially infected node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexCase {
    pub node: u32,
    pub category: usize,
    pub secondary: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRun {
    pub label: String,
    pub replicate: u64,
    /// `days[d][i]`: counts at the end of day `d + 1` for category `i`.
    pub days: Vec<Vec<Compartments>>,
    pub index_cases: Vec<IndexCase>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Health {
    Susceptible,
    Infected,
    Recovered,
}

/// Runs one replicate on a given network.
pub fn run_on(
    network: &ContactNetwork,
    sim: &SimConfig,
    strategy: &Strategy,
    label: &str,
    replicate: u64,
) -> Result<SimRun, SimError> {
    sim.validate()?;
    if let Some(v) = violation(&sim.scenario, strategy)? {
        return Err(ModelError::Infeasible(v).into());
    }
    let k = sim.scenario.k();
    let n = network.node_count();
    let members: Vec<Vec<usize>> = (0..k).map(|i| network.members(i).collect()).collect();

    let mut health = vec![Health::Susceptible; n];
    // day on which quarantine ends; 0 = not quarantined
    let mut release = vec![0u32; n];
    let mut infector: Vec<Option<u32>> = vec![None; n];
    let mut secondary = vec![0u32; n];

    let mut seeding = stream(sim.rng_seed, replicate, STREAM_SEEDING);
    let mut index_nodes = Vec::new();
    for (i, &count) in sim.initial_infected.iter().enumerate() {
        for pick in sample(&mut seeding, members[i].len(), count as usize).into_iter() {
            let v = members[i][pick];
            health[v] = Health::Infected;
            index_nodes.push(v);
        }
    }
    index_nodes.sort_unstable();

    let mut rng = stream(sim.rng_seed, replicate, STREAM_DYNAMICS);
    let mut days = Vec::with_capacity(sim.horizon_days as usize);
    let mut newly: Vec<usize> = Vec::new();
    let mut marked = vec![false; n];

    for day in 1..=sim.horizon_days {
        for r in release.iter_mut() {
            if *r != 0 && *r <= day {
                *r = 0;
            }
        }

        if (day - 1) % sim.test_period_days == 0 {
            for i in 0..k {
                let (t, g) = (strategy.t[i] as usize, strategy.g[i] as usize);
                if t == 0 {
                    continue;
                }
                let pool: Vec<usize> = members[i].iter().copied().filter(|&v| release[v] == 0).collect();
                let groups = t.min(pool.len() / g);
                let drawn = sample(&mut rng, pool.len(), groups * g).into_vec();
                for chunk in drawn.chunks(g) {
                    if chunk.iter().any(|&idx| health[pool[idx]] == Health::Infected) {
                        for &idx in chunk {
                            release[pool[idx]] = day + sim.quarantine_days;
                        }
                    }
                }
            }
        }

        newly.clear();
        if sim.beta > 0.0 {
            for u in 0..n {
                if health[u] != Health::Infected || release[u] != 0 || marked[u] {
                    continue;
                }
                for &w in network.neighbors(u) {
                    let w = w as usize;
                    if health[w] == Health::Susceptible
                        && release[w] == 0
                        && !marked[w]
                        && rng.random_bool(sim.beta)
                    {
                        marked[w] = true;
                        newly.push(w);
                        infector[w] = Some(u as u32);
                        secondary[u] += 1;
                    }
                }
            }
        }
        for &w in &newly {
            health[w] = Health::Infected;
            marked[w] = false;
        }

        for h in health.iter_mut() {
            if *h == Health::Infected && rng.random_bool(sim.gamma) {
                *h = Health::Recovered;
            }
        }

        let mut counts = vec![Compartments::default(); k];
        for v in 0..n {
            let c = &mut counts[network.category_of(v)];
            match health[v] {
                Health::Susceptible => c.s += 1,
                Health::Infected => c.i += 1,
                Health::Recovered => c.r += 1,
            }
            if release[v] != 0 {
                c.q += 1;
            }
        }
        days.push(counts);
    }

    let index_cases = index_nodes
        .into_iter()
        .map(|v| IndexCase { node: v as u32, category: network.category_of(v), secondary: secondary[v] })
        .collect();
    Ok(SimRun { label: label.to_string(), replicate, days, index_cases })
}

/// Runs one replicate, drawing the network from the configured seed.
pub fn run(sim: &SimConfig, strategy: &Strategy) -> Result<SimRun, SimError> {
    let network = sim.network(0)?;
    run_on(&network, sim, strategy, "", 0)
}

/// Mean secondary infections of a single index case in an otherwise
/// susceptible population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct R0Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u32,
}

/// Seeds one uniformly random node per trial and counts the neighbours it
/// infects before recovering. Only the index case transmits, so every
/// neighbour stays susceptible until reached. A fresh network is drawn every
/// `trials_per_network` trials.
pub fn estimate_r0(
    scenario: &Scenario,
    d: &[Vec<f64>],
    beta: f64,
    gamma: f64,
    trials: u32,
    trials_per_network: u32,
    seed: u64,
) -> Result<R0Estimate, SimError> {
    if !(0.0..=1.0).contains(&beta) || !(0.0 < gamma && gamma <= 1.0) {
        return Err(SimError::Parameter("beta in [0,1], gamma in (0,1] required".into()));
    }
    let per = trials_per_network.max(1);
    let networks = trials.div_ceil(per);
    let counts: Vec<Vec<f64>> = (0..networks)
        .into_par_iter()
        .map(|b| {
            let net = generate_network(scenario, d, seed.wrapping_add(u64::from(b)), NetworkOptions::default())?;
            let mut rng = stream(seed, u64::from(b), STREAM_DYNAMICS);
            let this = per.min(trials - b * per);
            let mut out = Vec::with_capacity(this as usize);
            for _ in 0..this {
                let v = rng.random_range(0..net.node_count());
                let mut infected = vec![false; net.degree(v)];
                let mut count = 0u32;
                loop {
                    for slot in infected.iter_mut() {
                        if !*slot && rng.random_bool(beta) {
                            *slot = true;
                            count += 1;
                        }
                    }
                    if rng.random_bool(gamma) {
                        break;
                    }
                }
                out.push(f64::from(count));
            }
            Ok(out)
        })
        .collect::<Result<_, SimError>>()?;
    let all: Vec<f64> = counts.into_iter().flatten().collect();
    let n = all.len() as f64;
    let mean = all.iter().sum::<f64>() / n;
    let var = all.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(R0Estimate { mean, std_error: (var / n).sqrt(), trials })
}

/// Mean quarantined curves of several strategies under common random
/// numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileComparison {
    pub labels: Vec<String>,
    pub category_ids: Vec<String>,
    pub replicates: u64,
    /// `mean_quarantined[profile][day][category]`.
    pub mean_quarantined: Vec<Vec<Vec<f64>>>,
    pub runs: Vec<SimRun>,
}

impl ProfileComparison {
    /// Mean quarantined in `category` over days `from..=to` (1-based).
    pub fn window_mean(&self, profile: usize, category: usize, from: u32, to: u32) -> f64 {
        let days = &self.mean_quarantined[profile];
        let lo = (from.max(1) - 1) as usize;
        let hi = (to as usize).min(days.len());
        if hi <= lo {
            return 0.0;
        }
        days[lo..hi].iter().map(|d| d[category]).sum::<f64>() / (hi - lo) as f64
    }

    /// `window_mean(profile) - window_mean(0)` per category.
    pub fn deltas(&self, profile: usize, from: u32, to: u32) -> Vec<f64> {
        (0..self.category_ids.len())
            .map(|c| self.window_mean(profile, c, from, to) - self.window_mean(0, c, from, to))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        write_runs_csv(&self.runs, &self.category_ids, out)
    }
}

/// Runs every labelled strategy over `replicates` matched seeds: replicate
/// `r` uses the same network, initial infections and dynamics stream for
/// every strategy.
pub fn compare_profiles(
    sim: &SimConfig,
    strategies: &[(String, Strategy)],
    replicates: u64,
) -> Result<ProfileComparison, SimError> {
    sim.validate()?;
    for (_, s) in strategies {
        if let Some(v) = violation(&sim.scenario, s)? {
            return Err(ModelError::Infeasible(v).into());
        }
    }
    let per_replicate: Vec<Vec<SimRun>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let net = sim.network(r)?;
            strategies
                .iter()
                .map(|(label, s)| run_on(&net, sim, s, label, r))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, SimError>>()?;

    let k = sim.scenario.k();
    let horizon = sim.horizon_days as usize;
    let mut mean = vec![vec![vec![0.0; k]; horizon]; strategies.len()];
    for runs in &per_replicate {
        for (p, run) in runs.iter().enumerate() {
            for (d, counts) in run.days.iter().enumerate() {
                for (i, c) in counts.iter().enumerate() {
                    mean[p][d][i] += f64::from(c.q);
                }
            }
        }
    }
    let scale = 1.0 / replicates.max(1) as f64;
    for x in mean.iter_mut().flatten().flatten() {
        *x *= scale;
    }
    let mut runs: Vec<SimRun> = per_replicate.into_iter().flatten().collect();
    runs.sort_by(|a, b| (a.replicate, &a.label).cmp(&(b.replicate, &b.label)));
    Ok(ProfileComparison {
        labels: strategies.iter().map(|(l, _)| l.clone()).collect(),
        category_ids: sim.scenario.categories().iter().map(|c| c.id.clone()).collect(),
        replicates,
        mean_quarantined: mean,
        runs,
    })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    day: usize,
    category_id: &'a str,
    #[serde(rename = "S")]
    s: u32,
    #[serde(rename = "I")]
    i: u32,
    #[serde(rename = "R")]
    r: u32,
    #[serde(rename = "Q")]
    q: u32,
    strategy_label: &'a str,
    replicate: u64,
}

/// Writes `day,category_id,S,I,R,Q,strategy_label,replicate` rows.
pub fn write_runs_csv<W: Write>(runs: &[SimRun], category_ids: &[String], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for run in runs {
        for (d, counts) in run.days.iter().enumerate() {
            for (c, id) in counts.iter().zip(category_ids) {
                w.serialize(CsvRow {
                    day: d + 1,
                    category_id: id,
                    s: c.s,
                    i: c.i,
                    r: c.r,
                    q: c.q,
                    strategy_label: &run.label,
                    replicate: run.replicate,
                })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Category, ExposureMatrix};

    fn one_block(n: u32, d: f64) -> Scenario {
        Scenario::new(
            vec![Category::new("a", n, 0.05, 1.0)],
            ExposureMatrix::with_uniform_pi(vec![vec![d]], 0.1),
            5,
            10,
            vec![1, 3, 5],
        )
        .unwrap()
    }

    #[test]
    fn triangle_pairs_enumerate_upper_triangle() {
        let n = 7;
        let mut idx = 0;
        for a in 0..n {
            for b in a + 1..n {
                assert_eq!(triangle_pair(idx, n), (a, b));
                idx += 1;
            }
        }
    }

    #[test]
    fn zero_matrix_gives_empty_graph() {
        let s = one_block(50, 0.0);
        let net = generate_network(&s, &s.exposure().d, 1, NetworkOptions::default()).unwrap();
        assert_eq!(net.edge_count(), 0);
    }

    #[test]
    fn network_is_simple_and_deterministic() {
        let s = one_block(200, 6.0);
        let a = generate_network(&s, &s.exposure().d, 9, NetworkOptions::default()).unwrap();
        let b = generate_network(&s, &s.exposure().d, 9, NetworkOptions::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.is_simple());
    }

    #[test]
    fn inconsistent_matrix_names_the_block() {
        let s = Scenario::new(
            vec![Category::new("a", 100, 0.05, 1.0), Category::new("b", 10, 0.05, 1.0)],
            ExposureMatrix::with_uniform_pi(vec![vec![1.0, 1.0], vec![1.0, 1.0]], 0.1),
            5,
            10,
            vec![1],
        )
        .unwrap();
        let err = generate_network(&s, &s.exposure().d, 1, NetworkOptions::default()).unwrap_err();
        assert!(matches!(err, SimError::InconsistentBlock { i: 0, j: 1, .. }));
        let loose = NetworkOptions { consistency_tolerance: f64::INFINITY };
        assert!(generate_network(&s, &s.exposure().d, 1, loose).is_ok());
    }

    #[test]
    fn pure_recovery_clears_in_one_day_when_gamma_is_one() {
        let s = one_block(100, 4.0);
        let mut sim = SimConfig::new(s, 3, vec![10], 5);
        sim.beta = 0.0;
        sim.gamma = 1.0;
        let run = run(&sim, &Strategy::new(vec![5], vec![1])).unwrap();
        assert_eq!(run.days[0][0].i, 0);
        assert_eq!(run.days[0][0].r, 10);
    }

    #[test]
    fn frozen_dynamics_only_churn_quarantine() {
        let s = one_block(100, 4.0);
        let mut sim = SimConfig::new(s, 30, vec![10], 5);
        sim.beta = 0.0;
        sim.gamma = 0.0;
        let run = run(&sim, &Strategy::new(vec![5], vec![5])).unwrap();
        for day in &run.days {
            assert_eq!((day[0].s, day[0].i, day[0].r), (90, 10, 0));
        }
        assert!(run.days.iter().any(|d| d[0].q > 0));
    }

    #[test]
    fn quarantine_lasts_exactly_the_configured_days() {
        // everyone infected, individual tests: every tested person is
        // quarantined on day 1 and released at the start of day 1 + 14
        let s = one_block(20, 0.0);
        let mut sim = SimConfig::new(s, 20, vec![20], 3);
        sim.beta = 0.0;
        sim.gamma = 0.0;
        sim.test_period_days = 100;
        let run = run(&sim, &Strategy::new(vec![5], vec![1])).unwrap();
        assert_eq!(run.days[0][0].q, 5);
        assert_eq!(run.days[13][0].q, 5);
        assert_eq!(run.days[14][0].q, 0);
    }

    #[test]
    fn csv_export_has_expected_columns() {
        let s = one_block(30, 2.0);
        let sim = SimConfig::new(s, 2, vec![1], 3);
        let run = run(&sim, &Strategy::new(vec![5], vec![1])).unwrap();
        let mut buf = Vec::new();
        write_runs_csv(&[run], &["a".to_string()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("day,category_id,S,I,R,Q,strategy_label,replicate\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
