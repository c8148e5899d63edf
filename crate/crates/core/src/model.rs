//! Problem instance data model and the closed-form objectives.
//!
//! A [`Scenario`] describes the population (categories with their infection
//! prior and criticality probability), the exposure between categories and
//! the weekly test budget. A [`Strategy`] assigns `t_i` pooled tests of size
//! `g_i` to each category. Every function in this module is pure.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// One population segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub id: String,
    /// Category size.
    pub n: u32,
    /// Prior probability that a member is infected.
    pub p: f64,
    /// Probability that a contagion-step infection becomes critical.
    #[serde(default = "default_vulnerability")]
    pub v: f64,
}

fn default_vulnerability() -> f64 {
    1.0
}

impl Category {
    pub fn new(id: impl Into<String>, n: u32, p: f64, v: f64) -> Self {
        Self { id: id.into(), n, p, v }
    }

    /// Probability that a member is healthy.
    pub fn q(&self) -> f64 {
        1.0 - self.p
    }
}

/// Contact counts `d[i][j]` and per-contact transmission probabilities
/// `pi[i][j]`. Row `i` is the receiving category, column `j` the source.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExposureMatrix {
    pub d: Vec<Vec<f64>>,
    pub pi: Vec<Vec<f64>>,
}

impl ExposureMatrix {
    pub fn new(d: Vec<Vec<f64>>, pi: Vec<Vec<f64>>) -> Self {
        Self { d, pi }
    }

    /// Uniform `pi` with the given contact matrix.
    pub fn with_uniform_pi(d: Vec<Vec<f64>>, pi: f64) -> Self {
        let k = d.len();
        Self { d, pi: vec![vec![pi; k]; k] }
    }

    fn validate(&self, k: usize) -> Result<(), ModelError> {
        for (name, m) in [("d", &self.d), ("pi", &self.pi)] {
            if m.len() != k || m.iter().any(|row| row.len() != k) {
                return Err(ModelError::ExposureDimension {
                    matrix: name,
                    expected: k,
                });
            }
        }
        for (i, row) in self.d.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                if !(x.is_finite() && x >= 0.0) {
                    return Err(ModelError::ContactOutOfRange { i, j, value: x });
                }
            }
        }
        for (i, row) in self.pi.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&x) {
                    return Err(ModelError::TransmissionOutOfRange { i, j, value: x });
                }
            }
        }
        Ok(())
    }
}

/// Wire form of a scenario. Matrices are nested row-major arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScenarioDoc {
    categories: Vec<Category>,
    d: Vec<Vec<f64>>,
    pi: Vec<Vec<f64>>,
    budget: u32,
    max_group: u32,
    group_menu: Vec<u32>,
}

/// A full, validated problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioDoc", into = "ScenarioDoc")]
pub struct Scenario {
    categories: Vec<Category>,
    exposure: ExposureMatrix,
    budget: u32,
    max_group: u32,
    group_menu: Vec<u32>,
}

/// Group sizes used by the pilot deployment.
pub const PILOT_GROUP_MENU: [u32; 4] = [1, 3, 5, 10];

impl Scenario {
    /// Validates every invariant and builds the scenario. The group menu is
    /// stored sorted and deduplicated.
    pub fn new(
        categories: Vec<Category>,
        exposure: ExposureMatrix,
        budget: u32,
        max_group: u32,
        group_menu: Vec<u32>,
    ) -> Result<Self, ModelError> {
        if categories.is_empty() {
            return Err(ModelError::NoCategories);
        }
        let mut seen = HashSet::new();
        for c in &categories {
            if c.n == 0 {
                return Err(ModelError::EmptyCategory(c.id.clone()));
            }
            if !(0.0..=1.0).contains(&c.p) {
                return Err(ModelError::PriorOutOfRange { id: c.id.clone(), value: c.p });
            }
            if !(0.0..=1.0).contains(&c.v) {
                return Err(ModelError::VulnerabilityOutOfRange { id: c.id.clone(), value: c.v });
            }
            if !seen.insert(c.id.as_str()) {
                return Err(ModelError::DuplicateCategory(c.id.clone()));
            }
        }
        exposure.validate(categories.len())?;
        if budget == 0 {
            return Err(ModelError::ZeroBudget);
        }
        if max_group == 0 {
            return Err(ModelError::ZeroMaxGroup);
        }
        let mut group_menu = group_menu;
        group_menu.sort_unstable();
        group_menu.dedup();
        if let Some(&g) = group_menu.iter().find(|&&g| g == 0 || g > max_group) {
            return Err(ModelError::GroupMenu { size: g, max_group });
        }
        Ok(Self { categories, exposure, budget, max_group, group_menu })
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization is infallible")
    }

    pub fn k(&self) -> usize {
        self.categories.len()
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn category(&self, i: usize) -> &Category {
        &self.categories[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.categories.iter().position(|c| c.id == id)
    }

    pub fn exposure(&self) -> &ExposureMatrix {
        &self.exposure
    }

    pub fn budget(&self) -> u32 {
        self.budget
    }

    pub fn max_group(&self) -> u32 {
        self.max_group
    }

    pub fn group_menu(&self) -> &[u32] {
        &self.group_menu
    }

    /// Group sizes a strategy may use: the menu plus individual testing.
    pub fn allowed_groups(&self) -> Vec<u32> {
        let mut gs: Vec<u32> = self.group_menu.iter().copied().chain([1]).collect();
        gs.sort_unstable();
        gs.dedup();
        gs
    }

    /// Total population size.
    pub fn population(&self) -> u64 {
        self.categories.iter().map(|c| u64::from(c.n)).sum()
    }

    /// Copy with a different budget, re-validated.
    pub fn with_budget(&self, budget: u32) -> Result<Self, ModelError> {
        Self::new(
            self.categories.clone(),
            self.exposure.clone(),
            budget,
            self.max_group,
            self.group_menu.clone(),
        )
    }
}

/// Why a JSON value is not a scenario.
#[derive(Debug, thiserror::Error)]
pub enum ScenarioParseError {
    /// Fields missing or of the wrong type.
    #[error("malformed scenario: {0}")]
    Shape(#[from] serde_json::Error),
    /// Well-formed but violates an invariant.
    #[error(transparent)]
    Invalid(#[from] ModelError),
}

/// Parses a scenario, keeping shape errors apart from invariant violations.
pub fn parse_scenario(value: serde_json::Value) -> Result<Scenario, ScenarioParseError> {
    let doc: ScenarioDoc = serde_json::from_value(value)?;
    Ok(Scenario::try_from(doc)?)
}

impl TryFrom<ScenarioDoc> for Scenario {
    type Error = ModelError;

    fn try_from(doc: ScenarioDoc) -> Result<Self, Self::Error> {
        Scenario::new(
            doc.categories,
            ExposureMatrix::new(doc.d, doc.pi),
            doc.budget,
            doc.max_group,
            doc.group_menu,
        )
    }
}

impl From<Scenario> for ScenarioDoc {
    fn from(s: Scenario) -> Self {
        ScenarioDoc {
            categories: s.categories,
            d: s.exposure.d,
            pi: s.exposure.pi,
            budget: s.budget,
            max_group: s.max_group,
            group_menu: s.group_menu,
        }
    }
}

/// Tests `t[i]` and group size `g[i]` per category.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Strategy {
    pub t: Vec<u32>,
    pub g: Vec<u32>,
}

impl Strategy {
    pub fn new(t: Vec<u32>, g: Vec<u32>) -> Self {
        Self { t, g }
    }

    pub fn k(&self) -> usize {
        self.t.len()
    }

    /// Number of people covered by tests in category `i`.
    pub fn coverage(&self, i: usize) -> u64 {
        u64::from(self.t[i]) * u64::from(self.g[i])
    }

    /// Sets `g_i = 1` wherever `t_i = 0`.
    pub fn canonicalize(mut self) -> Self {
        for (t, g) in self.t.iter().zip(self.g.iter_mut()) {
            if *t == 0 {
                *g = 1;
            }
        }
        self
    }

    pub fn is_canonical(&self) -> bool {
        self.t.iter().zip(&self.g).all(|(&t, &g)| t != 0 || g == 1)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={:?} g={:?}", self.t, self.g)
    }
}

/// The constraint a strategy breaks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// `g_i` is not 1 and not in the menu.
    GroupNotInMenu { category: usize, g: u32 },
    /// `g_i` exceeds the laboratory cap.
    GroupAboveCap { category: usize, g: u32, max_group: u32 },
    /// `t_i * g_i > n_i`.
    CoverageExceedsCategory { category: usize, covered: u64, n: u32 },
    /// `sum t_i != T`.
    BudgetMismatch { used: u64, budget: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::GroupNotInMenu { category, g } => {
                write!(f, "group size {g} for category {category} is not in the group menu")
            }
            Violation::GroupAboveCap { category, g, max_group } => {
                write!(f, "group size {g} for category {category} exceeds max_group {max_group}")
            }
            Violation::CoverageExceedsCategory { category, covered, n } => {
                write!(f, "category {category} covers {covered} people but has only {n}")
            }
            Violation::BudgetMismatch { used, budget } => {
                write!(f, "strategy uses {used} tests but the budget is {budget}")
            }
        }
    }
}

fn check_dims(scenario: &Scenario, strategy: &Strategy) -> Result<(), ModelError> {
    let k = scenario.k();
    if strategy.t.len() != k || strategy.g.len() != k {
        return Err(ModelError::StrategyDimension {
            expected: k,
            t: strategy.t.len(),
            g: strategy.g.len(),
        });
    }
    Ok(())
}

/// First violated constraint, if any. Dimension mismatches are structural
/// errors rather than violations.
pub fn violation(scenario: &Scenario, strategy: &Strategy) -> Result<Option<Violation>, ModelError> {
    check_dims(scenario, strategy)?;
    let menu = scenario.group_menu();
    for (i, c) in scenario.categories().iter().enumerate() {
        let (t, g) = (strategy.t[i], strategy.g[i]);
        if t == 0 {
            // zero-test categories may carry any placeholder group size
            continue;
        }
        if g != 1 && !menu.contains(&g) {
            return Ok(Some(Violation::GroupNotInMenu { category: i, g }));
        }
        if g > scenario.max_group() {
            return Ok(Some(Violation::GroupAboveCap { category: i, g, max_group: scenario.max_group() }));
        }
        let covered = strategy.coverage(i);
        if covered > u64::from(c.n) {
            return Ok(Some(Violation::CoverageExceedsCategory { category: i, covered, n: c.n }));
        }
    }
    let used: u64 = strategy.t.iter().map(|&t| u64::from(t)).sum();
    if used != u64::from(scenario.budget()) {
        return Ok(Some(Violation::BudgetMismatch { used, budget: scenario.budget() }));
    }
    Ok(None)
}

pub fn is_feasible(scenario: &Scenario, strategy: &Strategy) -> Result<bool, ModelError> {
    Ok(violation(scenario, strategy)?.is_none())
}

/// Probability that a member of category `i` is not tested.
pub fn untested_fraction(scenario: &Scenario, strategy: &Strategy, i: usize) -> f64 {
    let n = f64::from(scenario.category(i).n);
    (n - strategy.coverage(i) as f64) / n
}

fn free_prob(u: f64, q: f64, g: u32) -> f64 {
    u * q + (1.0 - u) * q.powi(g as i32)
}

/// Probability that a member of category `i` is healthy and not quarantined
/// before the contagion step.
pub fn healthy_free_prob(scenario: &Scenario, strategy: &Strategy, i: usize) -> f64 {
    let u = untested_fraction(scenario, strategy, i);
    free_prob(u, scenario.category(i).q(), strategy.g[i])
}

fn escape(pi: f64, p_source: f64, u_source: f64, d: f64) -> f64 {
    if d == 0.0 {
        return 1.0;
    }
    (1.0 - pi * p_source * u_source).powf(d)
}

/// Probability that a free healthy member of category `i` escapes infection
/// from untested infected members of category `j`.
pub fn escape_prob(scenario: &Scenario, strategy: &Strategy, i: usize, j: usize) -> f64 {
    let e = scenario.exposure();
    escape(
        e.pi[i][j],
        scenario.category(j).p,
        untested_fraction(scenario, strategy, j),
        e.d[i][j],
    )
}

/// Expected critical infections in the contagion step, given per-category
/// untested fractions `u` and healthy-and-free probabilities `z`.
fn criticals_from(scenario: &Scenario, u: &[f64], z: &[f64]) -> f64 {
    let e = scenario.exposure();
    scenario
        .categories()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let survive: f64 = (0..scenario.k())
                .map(|j| escape(e.pi[i][j], scenario.category(j).p, u[j], e.d[i][j]))
                .product();
            f64::from(c.n) * c.v * z[i] * (1.0 - survive)
        })
        .sum()
}

/// Expected critical contagion-step infections under `strategy`.
pub fn expected_criticals(scenario: &Scenario, strategy: &Strategy) -> f64 {
    let k = scenario.k();
    let u: Vec<f64> = (0..k).map(|i| untested_fraction(scenario, strategy, i)).collect();
    let z: Vec<f64> = (0..k).map(|i| healthy_free_prob(scenario, strategy, i)).collect();
    criticals_from(scenario, &u, &z)
}

/// Expected critical infections when nobody is tested.
pub fn baseline_criticals(scenario: &Scenario) -> f64 {
    let u = vec![1.0; scenario.k()];
    let z: Vec<f64> = scenario.categories().iter().map(Category::q).collect();
    criticals_from(scenario, &u, &z)
}

/// Expected critical cases prevented relative to no testing.
pub fn health_objective(scenario: &Scenario, strategy: &Strategy) -> f64 {
    (baseline_criticals(scenario) - expected_criticals(scenario, strategy)).max(0.0)
}

/// Expected healthy members of category `i` quarantined by positive pools.
pub fn quarantine_objective(scenario: &Scenario, strategy: &Strategy, i: usize) -> f64 {
    let q = scenario.category(i).q();
    let g = strategy.g[i];
    strategy.coverage(i) as f64 * (q - q.powi(g as i32))
}

/// Objective values of one strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub health: f64,
    pub quarantine: Vec<f64>,
}

impl ObjectiveVector {
    pub fn new(health: f64, quarantine: Vec<f64>) -> Self {
        Self { health, quarantine }
    }

    pub fn k(&self) -> usize {
        self.quarantine.len()
    }
}

/// Evaluates a feasible strategy, rejecting infeasible ones with the
/// violated constraint.
pub fn evaluate(scenario: &Scenario, strategy: &Strategy) -> Result<ObjectiveVector, ModelError> {
    if let Some(v) = violation(scenario, strategy)? {
        return Err(ModelError::Infeasible(v));
    }
    Ok(Evaluator::new(scenario).evaluate_unchecked(strategy))
}

/// Caches the per-scenario quantities (baseline, priors, exposure) so that
/// enumerating many strategies does not recompute them.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    scenario: &'a Scenario,
    baseline: f64,
    n: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    nv: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    pub fn new(scenario: &'a Scenario) -> Self {
        let cats = scenario.categories();
        Self {
            scenario,
            baseline: baseline_criticals(scenario),
            n: cats.iter().map(|c| f64::from(c.n)).collect(),
            p: cats.iter().map(|c| c.p).collect(),
            q: cats.iter().map(Category::q).collect(),
            nv: cats.iter().map(|c| f64::from(c.n) * c.v).collect(),
        }
    }

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    /// Evaluates without feasibility checks. Produces bit-identical values to
    /// the free functions above.
    pub fn evaluate_unchecked(&self, strategy: &Strategy) -> ObjectiveVector {
        let k = self.n.len();
        let e = self.scenario.exposure();
        let mut u = [0.0f64; 16];
        let mut u_heap;
        let u: &mut [f64] = if k <= 16 {
            &mut u[..k]
        } else {
            u_heap = vec![0.0; k];
            &mut u_heap
        };
        let mut quarantine = Vec::with_capacity(k);
        for i in 0..k {
            let covered = strategy.coverage(i) as f64;
            u[i] = (self.n[i] - covered) / self.n[i];
            let qg = self.q[i].powi(strategy.g[i] as i32);
            quarantine.push(covered * (self.q[i] - qg));
        }
        let mut criticals = 0.0;
        for i in 0..k {
            let z = free_prob(u[i], self.q[i], strategy.g[i]);
            let survive: f64 = (0..k)
                .map(|j| escape(e.pi[i][j], self.p[j], u[j], e.d[i][j]))
                .product();
            criticals += self.nv[i] * z * (1.0 - survive);
        }
        ObjectiveVector {
            health: (self.baseline - criticals).max(0.0),
            quarantine,
        }
    }
}
