//! Scenario parameters from anonymized records.
//!
//! Contact counts come from co-presence at events (course sessions, office
//! slots): two people present at the same event count as one interaction,
//! and the same pair meeting at several events counts several times.
//! Infection priors come from recent pooled test results.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::EstimationError;
use crate::model::{Category, ExposureMatrix, Scenario};
use crate::ModelError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub person_id: String,
    pub category_id: String,
    pub event_id: String,
    /// Source line, 0 when not read from a file.
    #[serde(skip)]
    pub line: u64,
}

impl InteractionRecord {
    pub fn new(person: &str, category: &str, event: &str) -> Self {
        Self {
            person_id: person.into(),
            category_id: category.into(),
            event_id: event.into(),
            line: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestRecord {
    pub category_id: String,
    pub tested: u32,
    pub positive: u32,
    pub period_label: String,
    #[serde(skip)]
    pub line: u64,
}

impl TestRecord {
    pub fn new(category: &str, tested: u32, positive: u32, period: &str) -> Self {
        Self {
            category_id: category.into(),
            tested,
            positive,
            period_label: period.into(),
            line: 0,
        }
    }
}

/// A declared category: its id, size and criticality probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryDecl {
    pub id: String,
    pub n: u32,
    #[serde(default = "one")]
    pub v: f64,
}

fn one() -> f64 {
    1.0
}

impl CategoryDecl {
    pub fn new(id: &str, n: u32) -> Self {
        Self { id: id.into(), n, v: 1.0 }
    }
}

fn read_csv<T, R>(reader: R) -> Result<Vec<(u64, T)>, EstimationError>
where
    T: for<'de> Deserialize<'de>,
    R: Read,
{
    let csv_err = |line: u64, e: csv::Error| EstimationError::Csv { line, message: e.to_string() };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_err(1, e))?.clone();
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_err(line, e)
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let rec = row.deserialize(Some(&headers)).map_err(|e| csv_err(line, e))?;
        out.push((line, rec));
    }
    Ok(out)
}

fn with_lines<T>(rows: Vec<(u64, T)>, set: impl Fn(&mut T, u64)) -> Vec<T> {
    rows.into_iter()
        .map(|(line, mut rec)| {
            set(&mut rec, line);
            rec
        })
        .collect()
}

/// Reads `person_id,category_id,event_id` rows.
pub fn read_interactions<R: Read>(reader: R) -> Result<Vec<InteractionRecord>, EstimationError> {
    Ok(with_lines(read_csv(reader)?, |r: &mut InteractionRecord, l| r.line = l))
}

/// Reads `category_id,tested,positive,period_label` rows.
pub fn read_tests<R: Read>(reader: R) -> Result<Vec<TestRecord>, EstimationError> {
    let recs = with_lines(read_csv(reader)?, |r: &mut TestRecord, l| r.line = l);
    for r in &recs {
        if r.positive > r.tested {
            return Err(EstimationError::PositivesExceedTests {
                line: r.line,
                positive: r.positive,
                tested: r.tested,
            });
        }
    }
    Ok(recs)
}

/// Reads `id,n[,v]` rows.
pub fn read_categories<R: Read>(reader: R) -> Result<Vec<CategoryDecl>, EstimationError> {
    Ok(read_csv(reader)?.into_iter().map(|(_, c)| c).collect())
}

/// Estimated contact matrix with per-cell support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureEstimate {
    pub d: Vec<Vec<f64>>,
    /// Number of members of category `i` with at least one contact in `j`.
    pub support: Vec<Vec<u64>>,
    pub warnings: Vec<String>,
}

/// Mean number of co-presence interactions a member of category `i` has
/// with members of category `j`, averaged over all `n_i` members.
pub fn estimate_exposure(
    records: &[InteractionRecord],
    categories: &[CategoryDecl],
) -> Result<ExposureEstimate, EstimationError> {
    let k = categories.len();
    let index: HashMap<&str, usize> =
        categories.iter().enumerate().map(|(i, c)| (c.id.as_str(), i)).collect();

    let mut person_cat: HashMap<&str, usize> = HashMap::new();
    let mut events: BTreeMap<&str, Vec<BTreeSet<&str>>> = BTreeMap::new();
    for r in records {
        let Some(&ci) = index.get(r.category_id.as_str()) else {
            return Err(EstimationError::UnknownCategory {
                line: r.line,
                category: r.category_id.clone(),
            });
        };
        if let Some(&prev) = person_cat.get(r.person_id.as_str()) {
            if prev != ci {
                return Err(EstimationError::PersonInTwoCategories {
                    person: r.person_id.clone(),
                    first: categories[prev].id.clone(),
                    second: r.category_id.clone(),
                });
            }
        }
        person_cat.insert(&r.person_id, ci);
        events.entry(&r.event_id).or_insert_with(|| vec![BTreeSet::new(); k])[ci]
            .insert(&r.person_id);
    }

    let mut totals = vec![vec![0u64; k]; k];
    let mut contacted: Vec<Vec<HashSet<&str>>> = vec![vec![HashSet::new(); k]; k];
    for present in events.values() {
        for i in 0..k {
            let here = present[i].len() as u64;
            if here == 0 {
                continue;
            }
            for j in 0..k {
                let others = present[j].len() as u64 - u64::from(i == j);
                if others == 0 {
                    continue;
                }
                totals[i][j] += here * others;
                contacted[i][j].extend(present[i].iter().copied());
            }
        }
    }

    let mut warnings = Vec::new();
    let mut observed = vec![0u64; k];
    for &ci in person_cat.values() {
        observed[ci] += 1;
    }
    let mut d = vec![vec![0.0; k]; k];
    for (i, c) in categories.iter().enumerate() {
        let mut n = u64::from(c.n);
        if observed[i] > n {
            warnings.push(format!(
                "category {:?} declares n={} but {} distinct people appear in the records; using {}",
                c.id, c.n, observed[i], observed[i]
            ));
            n = observed[i];
        }
        if observed[i] == 0 || n == 0 {
            warnings.push(format!("category {:?} has no interaction records; row set to zero", c.id));
            continue;
        }
        for j in 0..k {
            d[i][j] = totals[i][j] as f64 / n as f64;
        }
    }
    let support = contacted
        .iter()
        .map(|row| row.iter().map(|s| s.len() as u64).collect())
        .collect();
    Ok(ExposureEstimate { d, support, warnings })
}

/// How priors are computed from test counts.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorConfig {
    /// Pseudo-count added to positives and negatives.
    pub smoothing: f64,
    /// Number of most recent periods to pool; labels are ordered as strings,
    /// so use sortable labels such as `2021-W07`.
    pub window: usize,
    /// Per-category manual overrides (e.g. from waste-water signals).
    pub overrides: BTreeMap<String, f64>,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self { smoothing: 1.0, window: 1, overrides: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorEstimate {
    pub p: Vec<f64>,
    /// True where the category had no tests and got the pooled estimate.
    pub fallback: Vec<bool>,
    pub warnings: Vec<String>,
}

fn smoothed(positive: u64, tested: u64, smoothing: f64) -> Option<f64> {
    let den = tested as f64 + 2.0 * smoothing;
    (den > 0.0).then(|| ((positive as f64 + smoothing) / den).clamp(0.0, 1.0))
}

/// Smoothed positive rate per category over the most recent periods.
pub fn estimate_prior(
    tests: &[TestRecord],
    categories: &[CategoryDecl],
    config: &PriorConfig,
) -> Result<PriorEstimate, EstimationError> {
    if !(config.smoothing.is_finite() && config.smoothing >= 0.0) {
        return Err(EstimationError::Smoothing);
    }
    let index: HashMap<&str, usize> =
        categories.iter().enumerate().map(|(i, c)| (c.id.as_str(), i)).collect();
    for t in tests {
        if !index.contains_key(t.category_id.as_str()) {
            return Err(EstimationError::UnknownCategory {
                line: t.line,
                category: t.category_id.clone(),
            });
        }
        if t.positive > t.tested {
            return Err(EstimationError::PositivesExceedTests {
                line: t.line,
                positive: t.positive,
                tested: t.tested,
            });
        }
    }
    let periods: BTreeSet<&str> = tests.iter().map(|t| t.period_label.as_str()).collect();
    let recent: HashSet<&str> = periods.iter().rev().take(config.window.max(1)).copied().collect();

    let k = categories.len();
    let mut pos = vec![0u64; k];
    let mut tested = vec![0u64; k];
    for t in tests.iter().filter(|t| recent.contains(t.period_label.as_str())) {
        let i = index[t.category_id.as_str()];
        pos[i] += u64::from(t.positive);
        tested[i] += u64::from(t.tested);
    }
    let mut warnings = Vec::new();
    let pooled = smoothed(pos.iter().sum(), tested.iter().sum(), config.smoothing)
        .unwrap_or_else(|| {
            warnings.push("no tests recorded at all; pooled prior set to 0.5".into());
            0.5
        });
    let mut p = Vec::with_capacity(k);
    let mut fallback = Vec::with_capacity(k);
    for (i, c) in categories.iter().enumerate() {
        if let Some(&v) = config.overrides.get(&c.id) {
            p.push(v.clamp(0.0, 1.0));
            fallback.push(false);
            continue;
        }
        if tested[i] == 0 {
            warnings.push(format!("category {:?} has no tests; using pooled prior {pooled}", c.id));
            p.push(pooled);
            fallback.push(true);
        } else {
            p.push(smoothed(pos[i], tested[i], config.smoothing).unwrap_or(pooled));
            fallback.push(false);
        }
    }
    Ok(PriorEstimate { p, fallback, warnings })
}

/// Estimated scenario fragment: categories with priors plus the contact
/// matrix. Serializes as the `categories` and `d` fields of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatedParameters {
    pub categories: Vec<Category>,
    pub d: Vec<Vec<f64>>,
    pub support: Vec<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl EstimatedParameters {
    pub fn combine(decls: &[CategoryDecl], exposure: ExposureEstimate, prior: PriorEstimate) -> Self {
        let categories = decls
            .iter()
            .zip(&prior.p)
            .map(|(c, &p)| Category::new(c.id.clone(), c.n, p, c.v))
            .collect();
        let mut warnings = exposure.warnings;
        warnings.extend(prior.warnings);
        Self { categories, d: exposure.d, support: exposure.support, warnings }
    }

    /// Completes the fragment into a scenario.
    pub fn into_scenario(
        self,
        pi: Vec<Vec<f64>>,
        budget: u32,
        max_group: u32,
        group_menu: Vec<u32>,
    ) -> Result<Scenario, ModelError> {
        Scenario::new(self.categories, ExposureMatrix::new(self.d, pi), budget, max_group, group_menu)
    }
}

/// Declares categories from the records alone: every category id seen, with
/// `n` the number of distinct people observed.
pub fn infer_categories(records: &[InteractionRecord], tests: &[TestRecord]) -> Vec<CategoryDecl> {
    let mut people: BTreeMap<&str, HashSet<&str>> = BTreeMap::new();
    for r in records {
        people.entry(&r.category_id).or_default().insert(&r.person_id);
    }
    for t in tests {
        people.entry(&t.category_id).or_default();
    }
    people
        .into_iter()
        .map(|(id, ps)| CategoryDecl::new(id, ps.len().max(1) as u32))
        .collect()
}
