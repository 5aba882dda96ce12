//! Structural property suite: solves an instance exactly over a range of
//! visit counts and checks the relations optimal values and walks obey.
//!
//! Exact values come from branch-and-bound without the global bound, so
//! no checked relation is assumed by the search that checks it.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::constructor::{build_base, construct_optimal, extend_by_n, ConstructError};
use crate::instance::{Instance, MetricReport, Time};
use crate::milp::{build_model, verify_assignment, walk_to_assignment};
use crate::solver::{
    branch_and_bound, brute_force_with_cap, lower_bound, quotient_remainder, solve_tsp,
    GlobalBound, SolveError, SolverOptions,
};
use crate::walk::Walk;

pub const VALUE_TOL: f64 = 1e-6;
pub const ALGEBRA_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("instance fails the triangle inequality at {} triple(s)", .0.violations.len())]
    Metric(MetricReport),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Construct(#[from] ConstructError),
}

#[derive(Debug, Clone)]
pub struct CheckOptions {
    /// Largest visit count solved exactly; defaults to `n^2 + n`.
    pub k_max: Option<usize>,
    pub solver: SolverOptions,
    /// Re-solve the base range from every depot.
    pub depots: bool,
    /// Cross-check with enumeration when it has at most this many sequences.
    pub brute_cap: f64,
    pub milp: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            k_max: None,
            solver: SolverOptions::default(),
            depots: true,
            brute_cap: 2e6,
            milp: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyResult {
    pub name: &'static str,
    pub description: &'static str,
    pub checks: usize,
    pub failures: usize,
    /// Largest deviation in the failing direction; negative means slack.
    pub worst: f64,
    pub first_failure: Option<String>,
}

impl PropertyResult {
    fn new(name: &'static str, description: &'static str) -> Self {
        Self {
            name,
            description,
            checks: 0,
            failures: 0,
            worst: f64::NEG_INFINITY,
            first_failure: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    /// Records one check whose deviation must not exceed `tol`.
    fn record(&mut self, deviation: f64, tol: f64, detail: impl FnOnce() -> String) {
        self.checks += 1;
        self.worst = self.worst.max(deviation);
        if deviation > tol || deviation.is_nan() {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(detail());
            }
        }
    }

    fn holds(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.record(if ok { 0.0 } else { 1.0 }, 0.5, detail);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremReport {
    pub instance: String,
    pub n: usize,
    pub k_max: usize,
    /// Every exact solve finished within budget.
    pub certified: bool,
    /// Exact optimal values by visit count.
    pub values: BTreeMap<usize, Time>,
    pub properties: Vec<PropertyResult>,
}

impl TheoremReport {
    pub fn all_passed(&self) -> bool {
        self.properties.iter().all(PropertyResult::passed)
    }

    pub fn property(&self, name: &str) -> Option<&PropertyResult> {
        self.properties.iter().find(|p| p.name == name)
    }
}

impl fmt::Display for TheoremReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "instance {} (n = {}, k <= {}){}",
            self.instance,
            self.n,
            self.k_max,
            if self.certified { "" } else { " [budget exhausted]" }
        )?;
        for p in &self.properties {
            let worst = if p.checks == 0 {
                "-".to_string()
            } else {
                format!("{:.3e}", p.worst)
            };
            writeln!(
                f,
                "  {:4} {:28} {:>5} checks  worst {:>10}  {}",
                if p.passed() { "PASS" } else { "FAIL" },
                p.name,
                p.checks,
                worst,
                p.description
            )?;
            if let Some(d) = &p.first_failure {
                writeln!(f, "       first failure: {d}")?;
            }
        }
        Ok(())
    }
}

/// Exact optimum for every feasible `k` in `n..=k_max` by pure search, each
/// warm-started from the constructed walk.
fn exact_values<'a>(
    inst: &'a Instance,
    k_max: usize,
    solver: &SolverOptions,
    warm: impl Fn(usize) -> Option<Vec<usize>>,
) -> Result<(BTreeMap<usize, Walk<'a>>, bool), SolveError> {
    let mut out = BTreeMap::new();
    let mut certified = true;
    for k in inst.n()..=k_max {
        if inst.n() == 2 && k % 2 == 1 {
            continue;
        }
        let mut o = solver.clone().with_global_bound(GlobalBound::None);
        o.base_values = None;
        o.incumbent = warm(k);
        let r = branch_and_bound(inst, k, &o)?;
        certified &= r.certified;
        out.insert(k, r.walk);
    }
    Ok((out, certified))
}

pub fn verify_theorems(inst: &Instance, opts: &CheckOptions) -> Result<TheoremReport, CheckError> {
    let metric = inst.validate_metric();
    if !metric.is_valid() {
        return Err(CheckError::Metric(metric));
    }
    let n = inst.n();
    let k_max = opts.k_max.unwrap_or(n * n + n).max(n);
    let tsp = solve_tsp(inst)?;
    let tsp_star = tsp.value;
    let (base, _) = build_base(inst, &opts.solver)?;
    let (walks, mut certified) = exact_values(inst, k_max, &opts.solver, |k| {
        construct_optimal(&base, k).ok().map(|(w, _)| w.into_seq())
    })?;
    certified &= base.all_certified();
    let value: BTreeMap<usize, Time> = walks
        .iter()
        .map(|(&k, w)| (k, w.revisit_time().value))
        .collect();
    let base_values = base.values();
    let mut props = Vec::new();

    let mut p = PropertyResult::new("tour-optimal-at-n", "optimum with n visits equals the optimal tour");
    p.record((value[&n] - tsp_star).abs(), VALUE_TOL, || {
        format!("R*({n}) = {} vs tour {tsp_star}", value[&n])
    });
    props.push(p);

    let mut p = PropertyResult::new("bound-sound", "optimum is at least the quotient-remainder lower bound");
    for (&k, &v) in &value {
        let lb = lower_bound(inst, k, tsp_star, Some(&base_values))?;
        p.record(lb - v, ALGEBRA_TOL, || format!("k={k}: bound {lb} above optimum {v}"));
    }
    props.push(p);

    let mut p = PropertyResult::new("multiples-of-n", "R*(pn) equals the tour for p = 1, 2, 3");
    for pk in (1..=3).map(|p| p * n).filter(|k| value.contains_key(k)) {
        p.record((value[&pk] - tsp_star).abs(), VALUE_TOL, || {
            format!("k={pk}: {} vs tour {tsp_star}", value[&pk])
        });
    }
    props.push(p);

    let mut p = PropertyResult::new("monotone-base-range", "R*(k) <= R*(k+1) for n <= k <= 2n-2");
    for k in n..=(2 * n).saturating_sub(2) {
        if let (Some(a), Some(b)) = (value.get(&k), value.get(&(k + 1))) {
            p.record(a - b, ALGEBRA_TOL, || format!("R*({k}) = {a} > R*({}) = {b}", k + 1));
        }
    }
    props.push(p);

    let mut p = PropertyResult::new("adding-n-visits", "R*(k+n) <= R*(k)");
    for (&k, &v) in &value {
        if let Some(&w) = value.get(&(k + n)) {
            p.record(w - v, ALGEBRA_TOL, || format!("R*({}) = {w} > R*({k}) = {v}", k + n));
        }
    }
    props.push(p);

    let mut p = PropertyResult::new(
        "two-valued-tail",
        "for n^2-n <= k <= n^2+n, R*(k) is R*(n) when n | k, else R*(n+1)",
    );
    if let (Some(&r_n), Some(&r_n1)) = (value.get(&n), value.get(&(n + 1))) {
        for k in (n * n - n).max(n)..=(n * n + n).min(k_max) {
            let Some(&v) = value.get(&k) else { continue };
            let expect = if k % n == 0 { r_n } else { r_n1 };
            p.record((v - expect).abs(), VALUE_TOL, || {
                format!("k={k}: {v}, expected {expect}")
            });
        }
    }
    props.push(p);

    let mut p = PropertyResult::new(
        "quotient-remainder-formula",
        "R*(pn+q) = R*(n + ceil(q/p)) where both are solved",
    );
    for (&k, &v) in &value {
        let (pp, q) = quotient_remainder(k, n);
        let m = if q == 0 { n } else { n + q.div_ceil(pp) };
        if let Some(&w) = value.get(&m) {
            p.record((v - w).abs(), VALUE_TOL, || format!("R*({k}) = {v}, R*({m}) = {w}"));
        }
    }
    props.push(p);

    let mut p = PropertyResult::new("construction-optimal", "constructed walks attain the exact optimum");
    for (&k, &v) in &value {
        let (w, claimed) = construct_optimal(&base, k)?;
        let actual = w.revisit_time().value;
        let dev = (actual - v).abs().max((claimed - actual).abs());
        p.record(dev, VALUE_TOL, || format!("k={k}: built {actual} (claimed {claimed}) vs {v}"));
        p.holds(w.visits() == k && w.start() == inst.depot(), || {
            format!("k={k}: built walk has {} visits", w.visits())
        });
    }
    props.push(p);

    let mut p = PropertyResult::new("binding-subwalks-span", "binding subwalks of optimal walks cover all targets");
    for (&k, w) in &walks {
        for b in w.binding_subwalks() {
            p.holds(b.spans_all && b.subwalk.spans_all(), || {
                format!("k={k}: binding subwalk {:?} misses a target", b.subwalk.seq())
            });
        }
    }
    props.push(p);

    let mut p = PropertyResult::new("extension-preserves-value", "inserting a shortcut binding subwalk keeps R");
    for (&k, w) in &walks {
        let ext = extend_by_n(w).map_err(ConstructError::from)?;
        let (a, b) = (w.revisit_time().value, ext.revisit_time().value);
        p.record((a - b).abs(), ALGEBRA_TOL, || format!("k={k}: {a} became {b}"));
        p.holds(ext.visits() == k + n, || format!("k={k}: extension has {} visits", ext.visits()));
    }
    props.push(p);

    let mut p = PropertyResult::new("self-concatenation", "repeating a walk keeps every target's revisit time");
    for (&k, w) in &walks {
        let rt = w.revisit_times();
        for times in [2, 3] {
            let rep = w.repeat(times).revisit_times();
            let dev = rt.iter().zip(&rep).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            p.record(dev, ALGEBRA_TOL, || format!("k={k}: x{times} deviates by {dev}"));
        }
    }
    props.push(p);

    let mut p = PropertyResult::new("rotation-invariance", "every cyclic permutation has the same R");
    for (&k, w) in &walks {
        let v = w.revisit_time().value;
        for r in 1..=k {
            let rv = w.cyclic_permutation(r).expect("in range").revisit_time().value;
            p.record((rv - v).abs(), ALGEBRA_TOL, || format!("k={k}, pivot {r}: {rv} vs {v}"));
        }
    }
    props.push(p);

    let mut p = PropertyResult::new("depot-invariance", "optima do not depend on the depot");
    if opts.depots {
        let top = if n == 2 { n } else { 2 * n - 1 };
        for d in (1..=n).filter(|&d| d != inst.depot()) {
            let moved = inst.with_depot(d).expect("depot in range");
            let (other, ok) = exact_values(&moved, top, &opts.solver, |_| None)?;
            certified &= ok;
            for (k, w) in other {
                let (a, b) = (w.revisit_time().value, value[&k]);
                p.record((a - b).abs(), VALUE_TOL, || format!("depot {d}, k={k}: {a} vs {b}"));
            }
        }
    }
    props.push(p);

    let mut p = PropertyResult::new("search-matches-enumeration", "branch-and-bound returns the enumerator's walk");
    for (&k, w) in &walks {
        match brute_force_with_cap(inst, k, opts.brute_cap) {
            Ok(b) => {
                p.record((b.value - w.revisit_time().value).abs(), 0.0, || {
                    format!("k={k}: enumeration {} vs search {}", b.value, w.revisit_time().value)
                });
                p.holds(b.walk.seq() == w.seq(), || {
                    format!("k={k}: walks differ, {} vs {}", b.walk, w)
                });
            }
            Err(SolveError::EnumerationCap { .. }) => {}
            Err(e) => return Err(e.into()),
        }
    }
    props.push(p);

    let mut p = PropertyResult::new("milp-round-trip", "walk assignments satisfy every model row");
    if opts.milp {
        for (&k, w) in &walks {
            let model = build_model(inst, k).expect("k >= n");
            let a = walk_to_assignment(&model, w).expect("walk matches model");
            let r = verify_assignment(&model, &a).expect("dimensions match");
            p.holds(r.is_feasible(), || {
                format!("k={k}: {} violated rows", r.violations.len())
            });
            p.record((r.objective - w.revisit_time().value).abs(), VALUE_TOL, || {
                format!("k={k}: objective {}", r.objective)
            });
        }
    }
    props.push(p);

    Ok(TheoremReport {
        instance: inst.name().to_string(),
        n,
        k_max,
        certified,
        values: value,
        properties: props,
    })
}
