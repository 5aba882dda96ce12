//! Exact solvers for the minimum revisit-time walk with `k` visits.

mod bnb;
mod brute;
mod tsp;

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Instance, Target, Time};
use crate::walk::{Walk, WalkError};

pub use bnb::branch_and_bound;
pub use brute::{brute_force_optimal, brute_force_with_cap, DEFAULT_ENUMERATION_CAP};
pub use tsp::{solve_tsp, solve_tsp_with_cap, DEFAULT_TSP_CAP};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("k = {k} is below the number of targets n = {n}")]
    KBelowN { k: usize, n: usize },
    #[error("no closed walk with {k} visits exists over two targets (k must be even)")]
    Infeasible { k: usize },
    #[error("n = {n} exceeds the subset dynamic program capacity {cap}")]
    TooManyTargets { n: usize, cap: usize },
    #[error("enumeration of {count:.3e} sequences exceeds the cap {cap:.3e}")]
    EnumerationCap { count: f64, cap: f64 },
    #[error("warm-start walk rejected: {0}")]
    Incumbent(#[from] WalkError),
    #[error("warm-start walk has {got} visits, expected {expected}")]
    IncumbentLength { got: usize, expected: usize },
    #[error("time budget must be positive")]
    ZeroBudget,
    #[error("budget exhausted before any walk was found")]
    NoWalk,
}

/// Which global lower bound branch-and-bound may use to stop early.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GlobalBound {
    /// Exhaustive search only.
    None,
    /// The optimal tour length.
    Tsp,
    /// The optimal tour length, strengthened by known base values.
    #[default]
    Full,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub time_budget: Duration,
    pub parallel_width: usize,
    /// Warm-start walk with exactly `k` visits.
    pub incumbent: Option<Vec<Target>>,
    /// Known optimal values for `k` in `n..2n`, used by the global bound.
    pub base_values: Option<BTreeMap<usize, Time>>,
    pub global_bound: GlobalBound,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            time_budget: Duration::from_secs(300),
            parallel_width: default_threads(),
            incumbent: None,
            base_values: None,
            global_bound: GlobalBound::Full,
        }
    }
}

impl SolverOptions {
    pub fn with_budget(mut self, budget: Duration) -> Self {
        self.time_budget = budget;
        self
    }

    pub fn with_width(mut self, width: usize) -> Self {
        self.parallel_width = width.max(1);
        self
    }

    pub fn with_incumbent(mut self, seq: Vec<Target>) -> Self {
        self.incumbent = Some(seq);
        self
    }

    pub fn with_base_values(mut self, values: BTreeMap<usize, Time>) -> Self {
        self.base_values = Some(values);
        self
    }

    pub fn with_global_bound(mut self, bound: GlobalBound) -> Self {
        self.global_bound = bound;
        self
    }
}

/// Worker count: available parallelism, capped by `WALKPLAN_THREADS`.
pub fn default_threads() -> usize {
    let hw = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var("WALKPLAN_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
    {
        Some(cap) if cap > 0 => hw.min(cap),
        _ => hw,
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult<'a> {
    pub walk: Walk<'a>,
    pub value: Time,
    pub lower_bound_used: Time,
    pub nodes_explored: u64,
    pub elapsed: Duration,
    /// False when the budget ran out before optimality was established.
    pub certified: bool,
}

impl SolveResult<'_> {
    pub fn k(&self) -> usize {
        self.walk.visits()
    }

    pub fn to_record(&self) -> SolveRecord {
        SolveRecord {
            k: self.k(),
            value: self.value,
            walk: self.walk.seq().to_vec(),
            certified: self.certified,
            nodes: self.nodes_explored,
            seconds: self.elapsed.as_secs_f64(),
        }
    }
}

/// Serialized form of a [`SolveResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub k: usize,
    pub value: Time,
    pub walk: Vec<Target>,
    pub certified: bool,
    pub nodes: u64,
    pub seconds: f64,
}

/// `k = p n + q` with `p >= 1` and `0 <= q < n`.
pub fn quotient_remainder(k: usize, n: usize) -> (usize, usize) {
    (k / n, k % n)
}

pub(crate) fn check_k(inst: &Instance, k: usize) -> Result<(), SolveError> {
    let n = inst.n();
    if k < n {
        return Err(SolveError::KBelowN { k, n });
    }
    if n == 2 && k % 2 == 1 {
        return Err(SolveError::Infeasible { k });
    }
    Ok(())
}

/// Lower bound on the optimal revisit time with `k` visits: the optimal tour
/// length, raised to the optimum at `n + ceil(q / p)` visits when known.
pub fn lower_bound(
    inst: &Instance,
    k: usize,
    tsp_star: Time,
    base_values: Option<&BTreeMap<usize, Time>>,
) -> Result<Time, SolveError> {
    let n = inst.n();
    if k < n {
        return Err(SolveError::KBelowN { k, n });
    }
    let (p, q) = quotient_remainder(k, n);
    if q == 0 {
        return Ok(tsp_star);
    }
    let m = n + q.div_ceil(p);
    let base = base_values.and_then(|b| b.get(&m)).copied();
    Ok(base.map_or(tsp_star, |v| v.max(tsp_star)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1() -> Instance {
        Instance::parse(include_str!("../../../../data/table1.json")).unwrap()
    }

    #[test]
    fn quotient_remainder_form() {
        assert_eq!(quotient_remainder(14, 4), (3, 2));
        assert_eq!(quotient_remainder(4, 4), (1, 0));
        assert_eq!(quotient_remainder(7, 4), (1, 3));
    }

    #[test]
    fn lower_bound_cases() {
        let inst = table1();
        let base: BTreeMap<usize, Time> =
            [(4, 38.07), (5, 41.46), (6, 46.73), (7, 53.63)].into_iter().collect();
        assert_eq!(lower_bound(&inst, 8, 38.07, Some(&base)).unwrap(), 38.07);
        assert_eq!(lower_bound(&inst, 14, 38.07, Some(&base)).unwrap(), 41.46);
        assert_eq!(lower_bound(&inst, 4, 38.07, Some(&base)).unwrap(), 38.07);
        // 7 = 1*4 + 3 -> base[7]
        assert_eq!(lower_bound(&inst, 7, 38.07, Some(&base)).unwrap(), 53.63);
        // 11 = 2*4 + 3 -> base[6]
        assert_eq!(lower_bound(&inst, 11, 38.07, Some(&base)).unwrap(), 46.73);
        assert_eq!(lower_bound(&inst, 14, 38.07, None).unwrap(), 38.07);
        assert_eq!(
            lower_bound(&inst, 3, 38.07, None).unwrap_err(),
            SolveError::KBelowN { k: 3, n: 4 }
        );
    }

    #[test]
    fn two_targets_need_even_k() {
        let inst = Instance::new("pair", vec![vec![0.0, 3.0], vec![3.0, 0.0]], 1).unwrap();
        assert!(check_k(&inst, 2).is_ok());
        assert_eq!(check_k(&inst, 3).unwrap_err(), SolveError::Infeasible { k: 3 });
        assert!(check_k(&inst, 1).is_err());
    }

    #[test]
    fn record_round_trip() {
        let rec = SolveRecord {
            k: 5,
            value: 41.46,
            walk: vec![2, 3, 1, 4, 3, 2],
            certified: true,
            nodes: 17,
            seconds: 0.25,
        };
        let text = serde_json::to_string(&rec).unwrap();
        assert!(text.contains("\"walk\":[2,3,1,4,3,2]"));
        assert_eq!(serde_json::from_str::<SolveRecord>(&text).unwrap(), rec);
    }
}
