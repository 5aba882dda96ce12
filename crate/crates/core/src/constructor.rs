//! Optimal walks for any number of visits, assembled from the optima for
//! `n..2n` visits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Instance, Time};
use crate::solver::{
    branch_and_bound, quotient_remainder, solve_tsp, SolveError, SolveRecord, SolverOptions,
};
use crate::walk::{Walk, WalkError};

#[derive(Debug, Error)]
pub enum ConstructError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error("base table has no entry for {0} visits")]
    Incomplete(usize),
    #[error("base table belongs to instance {found:?}, not {expected:?}")]
    WrongInstance { expected: String, found: String },
    #[error("stored value {stored} for k = {k} does not match the walk's {actual}")]
    ValueMismatch { k: usize, stored: Time, actual: Time },
    #[error("malformed base table: {0}")]
    Format(#[from] serde_json::Error),
}

#[derive(Debug, Clone)]
pub struct BaseEntry<'a> {
    pub walk: Walk<'a>,
    pub value: Time,
    pub certified: bool,
}

/// Optimal walks for `k = n, ..., 2n - 1`.
#[derive(Debug, Clone)]
pub struct BaseSolutions<'a> {
    inst: &'a Instance,
    table: BTreeMap<usize, BaseEntry<'a>>,
}

#[derive(Serialize, Deserialize)]
struct TableDoc {
    instance: String,
    records: Vec<SolveRecord>,
}

/// Solves the base range: the tour for `k = n`, branch-and-bound above.
pub fn build_base<'a>(
    inst: &'a Instance,
    opts: &SolverOptions,
) -> Result<(BaseSolutions<'a>, Vec<SolveRecord>), ConstructError> {
    let n = inst.n();
    let tour = solve_tsp(inst)?;
    let mut records = vec![tour.to_record()];
    let mut table = BTreeMap::new();
    table.insert(
        n,
        BaseEntry {
            value: tour.value,
            walk: tour.walk,
            certified: true,
        },
    );
    // Two targets only admit even visit counts.
    let top = if n == 2 { n } else { 2 * n - 1 };
    for k in n + 1..=top {
        let r = branch_and_bound(inst, k, opts)?;
        records.push(r.to_record());
        table.insert(
            k,
            BaseEntry {
                value: r.value,
                walk: r.walk,
                certified: r.certified,
            },
        );
    }
    Ok((BaseSolutions { inst, table }, records))
}

impl<'a> BaseSolutions<'a> {
    pub fn instance(&self) -> &'a Instance {
        self.inst
    }

    pub fn get(&self, k: usize) -> Option<&BaseEntry<'a>> {
        self.table.get(&k)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, &BaseEntry<'a>)> {
        self.table.iter().map(|(&k, e)| (k, e))
    }

    pub fn all_certified(&self) -> bool {
        self.table.values().all(|e| e.certified)
    }

    pub fn values(&self) -> BTreeMap<usize, Time> {
        self.table.iter().map(|(&k, e)| (k, e.value)).collect()
    }

    pub fn to_json(&self) -> String {
        let doc = TableDoc {
            instance: self.inst.name().to_string(),
            records: self
                .table
                .iter()
                .map(|(&k, e)| SolveRecord {
                    k,
                    value: e.value,
                    walk: e.walk.seq().to_vec(),
                    certified: e.certified,
                    nodes: 0,
                    seconds: 0.0,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("table serializes")
    }

    /// Reloads a cached table, re-validating every walk and value.
    pub fn from_json(inst: &'a Instance, text: &str) -> Result<Self, ConstructError> {
        let doc: TableDoc = serde_json::from_str(text)?;
        if doc.instance != inst.name() {
            return Err(ConstructError::WrongInstance {
                expected: inst.name().to_string(),
                found: doc.instance,
            });
        }
        let mut table = BTreeMap::new();
        for rec in doc.records {
            let walk = Walk::new(inst, rec.walk)?;
            let actual = walk.revisit_time().value;
            if (actual - rec.value).abs() > 1e-6 || walk.visits() != rec.k {
                return Err(ConstructError::ValueMismatch {
                    k: rec.k,
                    stored: rec.value,
                    actual,
                });
            }
            table.insert(
                rec.k,
                BaseEntry {
                    walk,
                    value: rec.value,
                    certified: rec.certified,
                },
            );
        }
        Ok(Self { inst, table })
    }

    fn entry(&self, m: usize) -> Result<&BaseEntry<'a>, ConstructError> {
        self.table.get(&m).ok_or(ConstructError::Incomplete(m))
    }
}

/// An optimal walk with `k` visits and its value.
pub fn construct_optimal<'a>(
    base: &BaseSolutions<'a>,
    k: usize,
) -> Result<(Walk<'a>, Time), ConstructError> {
    let inst = base.inst;
    let n = inst.n();
    if k < n {
        return Err(SolveError::KBelowN { k, n }.into());
    }
    if n == 2 && k % 2 == 1 {
        return Err(SolveError::Infeasible { k }.into());
    }
    let (p, q) = quotient_remainder(k, n);
    if q == 0 {
        let e = base.entry(n)?;
        return Ok((e.walk.repeat(p), e.value));
    }
    let a = n + q.div_ceil(p);
    let b = n + q / p;
    let r = q % p;
    let full = base.entry(a)?;
    let short = if a == b {
        full.walk.clone()
    } else {
        shortcut_one_revisit(&full.walk)?
    };
    assert!(r > 0 || a == b, "r = 0 forces a = b");
    let mut walk = if r > 0 { full.walk.repeat(r) } else { short.repeat(p) };
    for _ in 0..(if r > 0 { p - r } else { 0 }) {
        walk = walk.concat(&short)?;
    }
    debug_assert_eq!(walk.visits(), k);
    debug_assert!((walk.revisit_time().value - full.value).abs() <= 1e-6);
    Ok((walk, full.value))
}

/// Drops one revisit: the latest visit, other than the closing one, to a
/// target visited at least twice whose neighbours differ.
pub fn shortcut_one_revisit<'a>(w: &Walk<'a>) -> Result<Walk<'a>, WalkError> {
    let counts = w.visit_counts();
    if counts.iter().all(|&c| c < 2) {
        return Err(WalkError::NoRepeatedTarget);
    }
    let seq = w.seq();
    let k = w.visits();
    let pos = (1..k)
        .rev()
        .find(|&i| counts[seq[i] - 1] >= 2 && seq[i - 1] != seq[i + 1])
        .ok_or(WalkError::NoDroppableRevisit)?;
    w.remove_visits(&[pos])
}

/// A walk with `n` more visits and the same revisit time: a binding subwalk
/// is shortcut to one visit per target and the copy inserted right after it.
pub fn extend_by_n<'a>(w: &Walk<'a>) -> Result<Walk<'a>, WalkError> {
    let k = w.visits();
    let binding = w
        .binding_subwalks()
        .into_iter()
        .next()
        .expect("the witness gap is always binding");
    let tour = binding.subwalk.keep_last_visits();
    let anchor = if binding.end <= k {
        binding.end
    } else {
        binding.end - k
    };
    w.insert_loop(anchor, &tour)
}
