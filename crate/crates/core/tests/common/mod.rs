#![allow(dead_code)]

use poolalloc::frontier::{dominates, enumerate_strategies, EvaluatedStrategy};
use poolalloc::model::{evaluate, Category, ExposureMatrix, Scenario, Strategy};
use proptest::prelude::*;
use proptest::strategy::Strategy as _;

/// Proptest settings without on-disk failure persistence.
pub fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(cases) }
}

/// Small random scenarios: k in 1..=max_k, n up to `max_n`, real contacts.
pub fn scenario(max_k: usize, max_n: u32, max_budget: u32) -> impl proptest::strategy::Strategy<Value = Scenario> {
    (1..=max_k).prop_flat_map(move |k| {
        (
            prop::collection::vec((1..=max_n, 0.0..=1.0f64, 0.0..=1.0f64), k),
            prop::collection::vec(prop::collection::vec(0.0..5.0f64, k), k),
            prop::collection::vec(prop::collection::vec(0.0..=1.0f64, k), k),
            1..=max_budget,
            1u32..=10,
            prop::collection::btree_set(1u32..=10, 0..4),
        )
            .prop_map(|(cats, d, pi, budget, g_max, menu)| {
                let categories = cats
                    .into_iter()
                    .enumerate()
                    .map(|(i, (n, p, v))| Category::new(format!("c{i}"), n, p, v))
                    .collect();
                let menu = menu.into_iter().filter(|&g| g <= g_max).collect();
                Scenario::new(categories, ExposureMatrix::new(d, pi), budget, g_max, menu)
                    .expect("generated scenario is valid")
            })
    })
}

/// A scenario together with one of its feasible strategies.
pub fn scenario_and_strategy(
    max_k: usize,
    max_n: u32,
    max_budget: u32,
) -> impl proptest::strategy::Strategy<Value = (Scenario, Strategy)> {
    (scenario(max_k, max_n, max_budget), any::<prop::sample::Index>()).prop_filter_map(
        "no feasible strategy",
        |(s, pick)| {
            let all: Vec<Strategy> = enumerate_strategies(&s).collect();
            if all.is_empty() {
                return None;
            }
            let st = all[pick.index(all.len())].clone();
            Some((s, st))
        },
    )
}

/// Every feasible strategy of the scenario, evaluated.
pub fn evaluate_all(s: &Scenario) -> Vec<EvaluatedStrategy> {
    enumerate_strategies(s)
        .enumerate()
        .map(|(id, st)| {
            let id = id as u64;
            let o = evaluate(s, &st).expect("enumerated strategies are feasible");
            EvaluatedStrategy::new(id, st, o)
        })
        .collect()
}

/// O(m^2) non-dominated filter.
pub fn brute_force_frontier(all: &[EvaluatedStrategy]) -> Vec<u64> {
    let mut ids: Vec<u64> = all
        .iter()
        .filter(|a| {
            !all.iter().any(|b| dominates(&b.objectives, &a.objectives).expect("same dimension"))
        })
        .map(|a| a.id)
        .collect();
    ids.sort_unstable();
    ids
}

/// The scenario with categories reordered so that new index `i` holds old
/// category `perm[i]`.
pub fn permute_scenario(s: &Scenario, perm: &[usize]) -> Scenario {
    let cats = perm.iter().map(|&i| s.category(i).clone()).collect();
    let e = s.exposure();
    let re = |m: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        perm.iter().map(|&i| perm.iter().map(|&j| m[i][j]).collect()).collect()
    };
    Scenario::new(
        cats,
        ExposureMatrix::new(re(&e.d), re(&e.pi)),
        s.budget(),
        s.max_group(),
        s.group_menu().to_vec(),
    )
    .expect("permutation keeps validity")
}

pub fn permute_strategy(st: &Strategy, perm: &[usize]) -> Strategy {
    Strategy::new(perm.iter().map(|&i| st.t[i]).collect(), perm.iter().map(|&i| st.g[i]).collect())
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}
