//! Depth-first branch-and-bound over depot-anchored partial walks.
//!
//! Two phases. The first is a parallel search with a shared incumbent that
//! establishes the optimal value. The second is a single-threaded search in
//! lexicographic order that returns the first walk within tolerance of that
//! value, so the answer does not depend on scheduling and coincides with the
//! exhaustive enumerator's choice.

use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use super::tsp::{solve_tsp, DEFAULT_TSP_CAP};
use super::{check_k, lower_bound, GlobalBound, SolveError, SolveResult, SolverOptions};
use crate::instance::{Instance, Target, Time, TIME_TOL};
use crate::walk::{revisit_of_seq, Walk};

/// Pruning slack covering rounding differences between the incremental
/// bounds and the full evaluation of a finished walk.
const SLACK: f64 = TIME_TOL;

const CHECK_EVERY: u64 = 4096;

pub fn branch_and_bound<'a>(
    inst: &'a Instance,
    k: usize,
    opts: &SolverOptions,
) -> Result<SolveResult<'a>, SolveError> {
    check_k(inst, k)?;
    if opts.time_budget.is_zero() {
        return Err(SolveError::ZeroBudget);
    }
    let started = Instant::now();
    let deadline = started + opts.time_budget;
    let n = inst.n();

    let tour = if n <= DEFAULT_TSP_CAP {
        Some(solve_tsp(inst)?)
    } else {
        None
    };
    let tsp_star = tour.as_ref().map(|t| t.value);
    let global = match (opts.global_bound, tsp_star) {
        (GlobalBound::None, _) | (_, None) => f64::NEG_INFINITY,
        (GlobalBound::Tsp, Some(t)) => t,
        (GlobalBound::Full, Some(t)) => lower_bound(inst, k, t, opts.base_values.as_ref())?,
    };

    let mut scratch = (vec![0.0; n], vec![0.0; n]);
    let start_seq = match &opts.incumbent {
        Some(seq) => warm_start(inst, k, seq)?,
        None => {
            let tour_seq = match &tour {
                Some(t) => t.walk.seq().to_vec(),
                None => identity_tour(inst),
            };
            heuristic_walk(inst, k, &tour_seq)
        }
    };
    let start_value = revisit_of_seq(inst, &start_seq, &mut scratch.0, &mut scratch.1);

    let ctx = Ctx::new(inst, k);
    let shared = Shared {
        best_bits: AtomicU64::new(start_value.to_bits()),
        best: Mutex::new((start_value, start_seq)),
        stop: AtomicBool::new(start_value <= global + TIME_TOL),
        by_bound: AtomicBool::new(start_value <= global + TIME_TOL),
        timed_out: AtomicBool::new(false),
        nodes: AtomicU64::new(0),
        deadline,
        global,
    };

    if !shared.stop.load(Ordering::Relaxed) {
        let width = opts.parallel_width.max(1);
        let tasks = root_tasks(&ctx, &shared, width);
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..width {
                scope.spawn(|| {
                    let mut w = Worker::new(&ctx, &shared);
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= tasks.len() || shared.stop.load(Ordering::Relaxed) {
                            break;
                        }
                        w.run_task(&tasks[i]);
                    }
                    w.flush();
                });
            }
        });
    }

    let timed_out = shared.timed_out.load(Ordering::Relaxed);
    let (best_value, best_seq) = shared.best.into_inner().expect("poisoned incumbent");
    let mut nodes = shared.nodes.load(Ordering::Relaxed);
    let mut chosen = best_seq;
    if !timed_out {
        // Stopping on the global bound means the optimum lies between the
        // bound and the incumbent.
        let value = if shared.by_bound.load(Ordering::Relaxed) {
            best_value.min(global)
        } else {
            best_value
        };
        let mut lex = LexSearch::new(&ctx, value + TIME_TOL, deadline);
        if let Some(seq) = lex.run() {
            chosen = seq;
        }
        nodes += lex.nodes;
    }

    let walk = Walk::new(inst, chosen).expect("search produces valid walks");
    let value = walk.revisit_time().value;
    Ok(SolveResult {
        walk,
        value,
        lower_bound_used: global.max(0.0),
        nodes_explored: nodes,
        elapsed: started.elapsed(),
        certified: !timed_out,
    })
}

fn warm_start(inst: &Instance, k: usize, seq: &[Target]) -> Result<Vec<Target>, SolveError> {
    let walk = Walk::new(inst, seq.to_vec())?;
    if walk.visits() != k {
        return Err(SolveError::IncumbentLength {
            got: walk.visits(),
            expected: k,
        });
    }
    Ok(walk.rotate_to(inst.depot())?.into_seq())
}

fn identity_tour(inst: &Instance) -> Vec<Target> {
    let d = inst.depot();
    let mut seq = vec![d];
    seq.extend((1..=inst.n()).filter(|&t| t != d));
    seq.push(d);
    seq
}

/// Repeated tour plus greedy single-visit insertions up to `k` visits.
fn heuristic_walk(inst: &Instance, k: usize, tour: &[Target]) -> Vec<Target> {
    let n = inst.n();
    let (p, q) = (k / n, k % n);
    let mut seq = Vec::with_capacity(k + 1);
    for _ in 0..p {
        seq.extend_from_slice(&tour[..n]);
    }
    seq.push(tour[0]);
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for _ in 0..q {
        let mut best: Option<(Time, Vec<Target>)> = None;
        for i in 0..seq.len() - 1 {
            for y in 1..=n {
                if y == seq[i] || y == seq[i + 1] {
                    continue;
                }
                let mut cand = seq.clone();
                cand.insert(i + 1, y);
                let v = revisit_of_seq(inst, &cand, &mut a, &mut b);
                if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                    best = Some((v, cand));
                }
            }
        }
        seq = best.expect("three or more targets allow an insertion").1;
    }
    seq
}

struct Ctx<'i> {
    inst: &'i Instance,
    k: usize,
    n: usize,
    /// 0-based depot.
    d: usize,
    /// Shortest-path travel times, row-major.
    sp: Vec<f64>,
    /// Shortest closed excursion leaving and returning to each target.
    min_cycle: Vec<f64>,
    /// Targets sorted by travel time from each target, excluding itself.
    near: Vec<Vec<usize>>,
}

impl<'i> Ctx<'i> {
    fn new(inst: &'i Instance, k: usize) -> Self {
        let n = inst.n();
        let mut sp: Vec<f64> = (0..n * n).map(|i| inst.cost0(i / n, i % n)).collect();
        for m in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = sp[i * n + m] + sp[m * n + j];
                    if via < sp[i * n + j] {
                        sp[i * n + j] = via;
                    }
                }
            }
        }
        let min_cycle = (0..n)
            .map(|u| {
                (0..n)
                    .filter(|&j| j != u)
                    .map(|j| sp[u * n + j] + sp[j * n + u])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let near = (0..n)
            .map(|u| {
                let mut v: Vec<usize> = (0..n).filter(|&j| j != u).collect();
                v.sort_by(|&a, &b| inst.cost0(u, a).total_cmp(&inst.cost0(u, b)).then(a.cmp(&b)));
                v
            })
            .collect();
        Self {
            inst,
            k,
            n,
            d: inst.depot() - 1,
            sp,
            min_cycle,
            near,
        }
    }

    #[inline]
    fn sp(&self, u: usize, v: usize) -> f64 {
        self.sp[u * self.n + v]
    }
}

struct Shared {
    best_bits: AtomicU64,
    best: Mutex<(Time, Vec<Target>)>,
    stop: AtomicBool,
    by_bound: AtomicBool,
    timed_out: AtomicBool,
    nodes: AtomicU64,
    deadline: Instant,
    global: Time,
}

impl Shared {
    #[inline]
    fn best(&self) -> Time {
        f64::from_bits(self.best_bits.load(Ordering::Relaxed))
    }

    fn offer(&self, value: Time, seq: &[Target]) {
        if value >= self.best() {
            return;
        }
        let mut guard = self.best.lock().expect("poisoned incumbent");
        if value < guard.0 {
            guard.0 = value;
            guard.1.clear();
            guard.1.extend_from_slice(seq);
            self.best_bits.store(value.to_bits(), Ordering::Relaxed);
            if value <= self.global + TIME_TOL {
                self.by_bound.store(true, Ordering::Relaxed);
                self.stop.store(true, Ordering::Relaxed);
            }
        }
    }
}

/// Partial walk with per-target bookkeeping. Targets are 0-based inside,
/// `seq` holds 1-based ids.
struct State {
    seq: Vec<Target>,
    depth: usize,
    clock: Vec<f64>,
    first: Vec<f64>,
    last: Vec<f64>,
    count: Vec<u32>,
    unseen: usize,
    max_gap: f64,
}

struct Undo {
    last: f64,
    max_gap: f64,
}

impl State {
    fn new(ctx: &Ctx<'_>) -> Self {
        let mut s = Self {
            seq: vec![0; ctx.k + 1],
            depth: 0,
            clock: vec![0.0; ctx.k + 1],
            first: vec![0.0; ctx.n],
            last: vec![0.0; ctx.n],
            count: vec![0; ctx.n],
            unseen: ctx.n - 1,
            max_gap: 0.0,
        };
        s.seq[0] = ctx.d + 1;
        s.count[ctx.d] = 1;
        s
    }

    #[inline]
    fn cur(&self) -> usize {
        self.seq[self.depth] - 1
    }

    fn push(&mut self, ctx: &Ctx<'_>, t: usize) -> Undo {
        let undo = Undo {
            last: self.last[t],
            max_gap: self.max_gap,
        };
        let c = self.clock[self.depth] + ctx.inst.cost0(self.cur(), t);
        self.depth += 1;
        self.seq[self.depth] = t + 1;
        self.clock[self.depth] = c;
        if self.count[t] > 0 {
            self.max_gap = self.max_gap.max(c - self.last[t]);
        } else {
            self.first[t] = c;
            self.unseen -= 1;
        }
        self.last[t] = c;
        self.count[t] += 1;
        undo
    }

    fn pop(&mut self, t: usize, undo: Undo) {
        self.count[t] -= 1;
        if self.count[t] == 0 {
            self.unseen += 1;
        }
        self.last[t] = undo.last;
        self.max_gap = undo.max_gap;
        self.depth -= 1;
    }

    /// Lower bound on the revisit time of every completion, or infinity when
    /// no completion exists. Only meaningful before the final visit.
    fn bound(&self, ctx: &Ctx<'_>) -> f64 {
        let rem = ctx.k - self.depth;
        let cur = self.cur();
        if rem < self.unseen + 1 || (rem == 1 && cur == ctx.d) {
            return f64::INFINITY;
        }
        let tau = self.clock[self.depth];
        let mut b = self.max_gap.max(ctx.min_cycle[cur]);
        for t in 0..ctx.n {
            if self.count[t] > 0 {
                if t != cur {
                    b = b.max(tau - self.last[t] + ctx.sp(cur, t));
                }
                if t != ctx.d {
                    b = b.max(self.first[t] + ctx.sp(t, ctx.d));
                }
            } else {
                b = b.max(tau + ctx.sp(cur, t) + ctx.sp(t, ctx.d));
            }
        }
        b
    }
}

fn root_tasks(ctx: &Ctx<'_>, shared: &Shared, width: usize) -> Vec<Vec<usize>> {
    let mut tasks: Vec<Vec<usize>> = vec![vec![]];
    if width == 1 {
        return tasks;
    }
    let target = 16 * width;
    let mut state = State::new(ctx);
    let mut depth = 0;
    while tasks.len() < target && depth + 2 < ctx.k {
        let mut next = Vec::new();
        for prefix in &tasks {
            let undos: Vec<Undo> = prefix.iter().map(|&t| state.push(ctx, t)).collect();
            for t in candidates(ctx, &state) {
                let u = state.push(ctx, t);
                if state.bound(ctx) <= shared.best() + SLACK {
                    let mut p = prefix.clone();
                    p.push(t);
                    next.push(p);
                }
                state.pop(t, u);
            }
            for (&t, u) in prefix.iter().zip(undos).rev() {
                state.pop(t, u);
            }
        }
        tasks = next;
        depth += 1;
    }
    tasks
}

/// Unvisited targets first, then by travel time, then by id.
fn candidates(ctx: &Ctx<'_>, state: &State) -> Vec<usize> {
    let cur = state.cur();
    if ctx.k - state.depth == 1 {
        return if cur == ctx.d { vec![] } else { vec![ctx.d] };
    }
    let near = &ctx.near[cur];
    let mut out = Vec::with_capacity(near.len());
    out.extend(near.iter().copied().filter(|&t| state.count[t] == 0));
    out.extend(near.iter().copied().filter(|&t| state.count[t] > 0));
    out
}

struct Worker<'c, 'i> {
    ctx: &'c Ctx<'i>,
    shared: &'c Shared,
    state: State,
    scratch: (Vec<f64>, Vec<f64>),
    nodes: u64,
    flushed: u64,
}

impl<'c, 'i> Worker<'c, 'i> {
    fn new(ctx: &'c Ctx<'i>, shared: &'c Shared) -> Self {
        Self {
            ctx,
            shared,
            state: State::new(ctx),
            scratch: (vec![0.0; ctx.n], vec![0.0; ctx.n]),
            nodes: 0,
            flushed: 0,
        }
    }

    fn flush(&mut self) {
        self.shared
            .nodes
            .fetch_add(self.nodes - self.flushed, Ordering::Relaxed);
        self.flushed = self.nodes;
    }

    fn run_task(&mut self, prefix: &[usize]) {
        let ctx = self.ctx;
        let undos: Vec<Undo> = prefix.iter().map(|&t| self.state.push(ctx, t)).collect();
        if self.state.depth == 0 || self.state.bound(ctx) <= self.shared.best() + SLACK {
            self.dfs();
        }
        for (&t, u) in prefix.iter().zip(undos).rev() {
            self.state.pop(t, u);
        }
    }

    /// Returns false when the search must stop.
    fn dfs(&mut self) -> bool {
        self.nodes += 1;
        if self.nodes % CHECK_EVERY == 0 {
            self.flush();
            if self.shared.stop.load(Ordering::Relaxed) {
                return false;
            }
            if Instant::now() >= self.shared.deadline {
                self.shared.timed_out.store(true, Ordering::Relaxed);
                self.shared.stop.store(true, Ordering::Relaxed);
                return false;
            }
        }
        let ctx = self.ctx;
        for t in candidates(ctx, &self.state) {
            let u = self.state.push(ctx, t);
            let go_on = if self.state.depth == ctx.k {
                let v = revisit_of_seq(
                    ctx.inst,
                    &self.state.seq,
                    &mut self.scratch.0,
                    &mut self.scratch.1,
                );
                self.shared.offer(v, &self.state.seq);
                !self.shared.stop.load(Ordering::Relaxed)
            } else if self.state.bound(ctx) <= self.shared.best() + SLACK {
                self.dfs()
            } else {
                true
            };
            self.state.pop(t, u);
            if !go_on {
                return false;
            }
        }
        true
    }
}

/// Finds the lexicographically first walk with value at most `threshold`.
struct LexSearch<'c, 'i> {
    ctx: &'c Ctx<'i>,
    threshold: Time,
    deadline: Instant,
    state: State,
    scratch: (Vec<f64>, Vec<f64>),
    nodes: u64,
    expired: bool,
}

impl<'c, 'i> LexSearch<'c, 'i> {
    fn new(ctx: &'c Ctx<'i>, threshold: Time, deadline: Instant) -> Self {
        Self {
            ctx,
            threshold,
            deadline,
            state: State::new(ctx),
            scratch: (vec![0.0; ctx.n], vec![0.0; ctx.n]),
            nodes: 0,
            expired: false,
        }
    }

    fn run(&mut self) -> Option<Vec<Target>> {
        // A small grace period so a run that used its whole budget on the
        // first phase still gets a deterministic answer on easy cases.
        self.deadline = self.deadline.max(Instant::now() + Duration::from_millis(50));
        if self.dfs() {
            Some(self.state.seq.clone())
        } else {
            None
        }
    }

    /// Returns true once a walk is found; the state then holds it.
    fn dfs(&mut self) -> bool {
        self.nodes += 1;
        if self.nodes % CHECK_EVERY == 0 && Instant::now() >= self.deadline {
            self.expired = true;
        }
        if self.expired {
            return false;
        }
        let ctx = self.ctx;
        let cur = self.state.cur();
        let rem = ctx.k - self.state.depth;
        for t in 0..ctx.n {
            if t == cur || (rem == 1 && t != ctx.d) {
                continue;
            }
            let u = self.state.push(ctx, t);
            let found = if self.state.depth == ctx.k {
                let v = revisit_of_seq(
                    ctx.inst,
                    &self.state.seq,
                    &mut self.scratch.0,
                    &mut self.scratch.1,
                );
                self.state.unseen == 0 && v <= self.threshold
            } else if self.state.bound(ctx) <= self.threshold + SLACK {
                self.dfs()
            } else {
                false
            };
            if found {
                return true;
            }
            self.state.pop(t, u);
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{random_euclidean_instance, within_cents};
    use crate::solver::brute_force_optimal;

    fn table1() -> Instance {
        Instance::parse(include_str!("../../../../data/table1.json")).unwrap()
    }

    fn opts() -> SolverOptions {
        SolverOptions::default().with_budget(Duration::from_secs(60))
    }

    #[test]
    fn table1_values() {
        let inst = table1();
        for (k, expected) in [(4, 38.07), (5, 41.46), (6, 46.73), (7, 53.63), (12, 38.07)] {
            let r = branch_and_bound(&inst, k, &opts()).unwrap();
            assert!(within_cents(r.value, expected), "k={k}: {}", r.value);
            assert!(r.certified);
            assert_eq!(r.walk.visits(), k);
            assert_eq!(r.walk.start(), 2);
            assert!(r.value >= r.lower_bound_used - 1e-9);
        }
    }

    #[test]
    fn certified_by_tour_bound_for_multiples_of_n() {
        let inst = table1();
        let r = branch_and_bound(&inst, 12, &opts()).unwrap();
        assert!((r.lower_bound_used - r.value).abs() < 1e-9);
    }

    #[test]
    fn agrees_with_brute_force() {
        for seed in 0..6 {
            for n in 3..=4 {
                let inst = random_euclidean_instance(n, seed, 100.0).unwrap();
                for k in n..=7 {
                    let b = brute_force_optimal(&inst, k).unwrap();
                    let r = branch_and_bound(&inst, k, &opts()).unwrap();
                    assert_eq!(r.walk.seq(), b.walk.seq(), "n={n} seed={seed} k={k}");
                    assert_eq!(r.value, b.value);
                }
            }
        }
    }

    #[test]
    fn width_does_not_change_the_walk() {
        let inst = random_euclidean_instance(5, 4, 100.0).unwrap();
        for k in [6, 8] {
            let one = branch_and_bound(&inst, k, &opts().with_width(1)).unwrap();
            let four = branch_and_bound(&inst, k, &opts().with_width(4)).unwrap();
            assert_eq!(one.walk.seq(), four.walk.seq());
        }
    }

    #[test]
    fn pure_search_matches_bounded_search() {
        let inst = table1();
        for k in 4..=9 {
            let full = branch_and_bound(&inst, k, &opts()).unwrap();
            let none = branch_and_bound(&inst, k, &opts().with_global_bound(GlobalBound::None))
                .unwrap();
            assert_eq!(full.walk.seq(), none.walk.seq(), "k={k}");
        }
    }

    #[test]
    fn warm_start_is_validated_and_rotated() {
        let inst = table1();
        let bad = opts().with_incumbent(vec![2, 3, 1, 4, 2]);
        assert!(matches!(
            branch_and_bound(&inst, 5, &bad),
            Err(SolveError::IncumbentLength { got: 4, expected: 5 })
        ));
        let rotated = opts().with_incumbent(vec![1, 4, 3, 2, 3, 1]);
        let r = branch_and_bound(&inst, 5, &rotated).unwrap();
        assert!(within_cents(r.value, 41.46));
    }

    #[test]
    fn heuristic_walk_has_k_visits() {
        let inst = random_euclidean_instance(5, 2, 100.0).unwrap();
        let tour = solve_tsp(&inst).unwrap();
        for k in 5..=17 {
            let seq = heuristic_walk(&inst, k, tour.walk.seq());
            let w = Walk::new(&inst, seq).unwrap();
            assert_eq!(w.visits(), k);
        }
    }

    #[test]
    fn bound_is_below_every_completion() {
        // Every walk extending a prefix scores at least the prefix bound.
        let inst = random_euclidean_instance(4, 9, 100.0).unwrap();
        let k = 6;
        let ctx = Ctx::new(&inst, k);
        let mut state = State::new(&ctx);
        let mut scratch = (vec![0.0; 4], vec![0.0; 4]);
        fn rec(
            ctx: &Ctx<'_>,
            s: &mut State,
            bounds: &mut Vec<f64>,
            scratch: &mut (Vec<f64>, Vec<f64>),
        ) {
            if s.depth == ctx.k {
                if s.unseen == 0 && s.seq[ctx.k] == ctx.d + 1 {
                    let v = revisit_of_seq(ctx.inst, &s.seq, &mut scratch.0, &mut scratch.1);
                    for &b in bounds.iter() {
                        assert!(b <= v + 1e-9, "bound {b} above completion {v}");
                    }
                }
                return;
            }
            for t in 0..ctx.n {
                if t == s.cur() {
                    continue;
                }
                let u = s.push(ctx, t);
                if s.depth < ctx.k {
                    bounds.push(s.bound(ctx));
                    rec(ctx, s, bounds, scratch);
                    bounds.pop();
                } else {
                    rec(ctx, s, bounds, scratch);
                }
                s.pop(t, u);
            }
        }
        rec(&ctx, &mut state, &mut vec![], &mut scratch);
    }

    #[test]
    fn tiny_budget_is_reported() {
        let inst = random_euclidean_instance(6, 1, 100.0).unwrap();
        let o = opts()
            .with_budget(Duration::from_nanos(1))
            .with_global_bound(GlobalBound::None);
        let r = branch_and_bound(&inst, 11, &o).unwrap();
        assert!(!r.certified);
        assert_eq!(r.walk.visits(), 11);
        assert_eq!(
            branch_and_bound(&inst, 11, &opts().with_budget(Duration::ZERO)).unwrap_err(),
            SolveError::ZeroBudget
        );
    }
}
