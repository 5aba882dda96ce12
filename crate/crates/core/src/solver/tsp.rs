//! Held-Karp subset dynamic program for the optimal tour.

use std::time::Instant;

use super::{SolveError, SolveResult};
use crate::instance::Instance;
use crate::walk::Walk;

pub const DEFAULT_TSP_CAP: usize = 20;

pub fn solve_tsp(inst: &Instance) -> Result<SolveResult<'_>, SolveError> {
    solve_tsp_with_cap(inst, DEFAULT_TSP_CAP)
}

pub fn solve_tsp_with_cap(inst: &Instance, cap: usize) -> Result<SolveResult<'_>, SolveError> {
    let n = inst.n();
    if n > cap {
        return Err(SolveError::TooManyTargets { n, cap });
    }
    let started = Instant::now();
    let order = optimal_tour(inst);
    let mut seq: Vec<usize> = order.iter().map(|&i| i + 1).collect();
    seq.push(inst.depot());
    let walk = Walk::new(inst, seq).expect("a tour is a valid walk");
    let value = walk.revisit_time().value;
    let m = n - 1;
    Ok(SolveResult {
        walk,
        value,
        lower_bound_used: value,
        nodes_explored: ((1u64 << m) * m as u64).max(1),
        elapsed: started.elapsed(),
        certified: true,
    })
}

/// Optimal tour as 0-based ids, starting at the depot (not repeated).
fn optimal_tour(inst: &Instance) -> Vec<usize> {
    let n = inst.n();
    let d = inst.depot() - 1;
    let others: Vec<usize> = (0..n).filter(|&i| i != d).collect();
    let m = others.len();
    let full = 1usize << m;
    let mut dp = vec![f64::INFINITY; full * m];
    let mut parent = vec![u8::MAX; full * m];
    for j in 0..m {
        dp[(1 << j) * m + j] = inst.cost0(d, others[j]);
    }
    for mask in 1..full {
        for j in 0..m {
            if mask & (1 << j) == 0 {
                continue;
            }
            let here = dp[mask * m + j];
            if !here.is_finite() {
                continue;
            }
            for l in 0..m {
                if mask & (1 << l) != 0 {
                    continue;
                }
                let next = mask | (1 << l);
                let cand = here + inst.cost0(others[j], others[l]);
                if cand < dp[next * m + l] {
                    dp[next * m + l] = cand;
                    parent[next * m + l] = j as u8;
                }
            }
        }
    }
    let mut best = (f64::INFINITY, 0);
    for j in 0..m {
        let total = dp[(full - 1) * m + j] + inst.cost0(others[j], d);
        if total < best.0 {
            best = (total, j);
        }
    }
    let mut rev = Vec::with_capacity(m);
    let (mut mask, mut j) = (full - 1, best.1);
    loop {
        rev.push(others[j]);
        let p = parent[mask * m + j];
        mask &= !(1 << j);
        if p == u8::MAX {
            break;
        }
        j = p as usize;
    }
    let mut tour = vec![d];
    tour.extend(rev.into_iter().rev());
    tour
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{random_euclidean_instance, within_cents};

    /// All tours through the targets, by permutation.
    fn tour_brute(inst: &Instance) -> f64 {
        fn rec(inst: &Instance, path: &mut Vec<usize>, used: &mut [bool], best: &mut f64) {
            let n = inst.n();
            if path.len() == n {
                let mut total = 0.0;
                for w in path.windows(2) {
                    total += inst.cost(w[0], w[1]);
                }
                total += inst.cost(path[n - 1], path[0]);
                *best = best.min(total);
                return;
            }
            for t in 1..=n {
                if !used[t - 1] {
                    used[t - 1] = true;
                    path.push(t);
                    rec(inst, path, used, best);
                    path.pop();
                    used[t - 1] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        let mut used = vec![false; inst.n()];
        used[0] = true;
        rec(inst, &mut vec![1], &mut used, &mut best);
        best
    }

    #[test]
    fn table1_tour() {
        let inst = Instance::parse(include_str!("../../../../data/table1.json")).unwrap();
        let r = solve_tsp(&inst).unwrap();
        assert!(within_cents(r.value, 38.07));
        assert_eq!(r.walk.visits(), 4);
        assert_eq!(r.walk.start(), 2);
        assert!(r.walk.visit_counts().iter().all(|&c| c == 1));
        assert!(r.certified);
    }

    #[test]
    fn two_and_three_targets() {
        let pair = Instance::new("pair", vec![vec![0.0, 3.5], vec![3.5, 0.0]], 2).unwrap();
        let r = solve_tsp(&pair).unwrap();
        assert_eq!(r.walk.seq(), &[2, 1, 2]);
        assert_eq!(r.value, 7.0);

        let tri = random_euclidean_instance(3, 11, 50.0).unwrap();
        let r = solve_tsp(&tri).unwrap();
        let cycle = tri.cost(1, 2) + tri.cost(2, 3) + tri.cost(3, 1);
        assert!((r.value - cycle).abs() < 1e-9);
    }

    #[test]
    fn matches_permutation_search() {
        for seed in 0..15 {
            for n in 3..=7 {
                let inst = random_euclidean_instance(n, seed, 100.0).unwrap();
                let r = solve_tsp(&inst).unwrap();
                assert!((r.value - tour_brute(&inst)).abs() < 1e-9, "n={n} seed={seed}");
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let inst = random_euclidean_instance(6, 0, 10.0).unwrap();
        assert_eq!(
            solve_tsp_with_cap(&inst, 5).unwrap_err(),
            SolveError::TooManyTargets { n: 6, cap: 5 }
        );
    }
}
