//! Exhaustive enumeration of depot-anchored walks. Slow and obviously
//! correct; used as the reference for branch-and-bound.

use std::time::Instant;

use super::{check_k, SolveError, SolveResult};
use crate::instance::{Instance, Target, Time, TIME_TOL};
use crate::walk::{revisit_of_seq, Walk};

/// Largest number of candidate sequences enumerated by default.
pub const DEFAULT_ENUMERATION_CAP: f64 = 1e8;

pub fn brute_force_optimal(inst: &Instance, k: usize) -> Result<SolveResult<'_>, SolveError> {
    brute_force_with_cap(inst, k, DEFAULT_ENUMERATION_CAP)
}

pub fn brute_force_with_cap(
    inst: &Instance,
    k: usize,
    cap: f64,
) -> Result<SolveResult<'_>, SolveError> {
    check_k(inst, k)?;
    let n = inst.n();
    let count = ((n - 1) as f64).powi(k as i32 - 1);
    if count > cap {
        return Err(SolveError::EnumerationCap { count, cap });
    }
    let started = Instant::now();
    let mut e = Enumerator::new(inst, k);

    // First pass finds the optimum, the second the lexicographically first
    // walk within tolerance of it.
    e.run(&mut |_, _| false);
    let best = e.best;
    let mut chosen: Option<Vec<Target>> = None;
    e.run(&mut |value, seq| {
        if value <= best + TIME_TOL {
            chosen = Some(seq.to_vec());
            true
        } else {
            false
        }
    });
    let seq = chosen.ok_or(SolveError::NoWalk)?;
    let walk = Walk::new(inst, seq).expect("enumerated walks are valid");
    let value = walk.revisit_time().value;
    Ok(SolveResult {
        walk,
        value,
        lower_bound_used: 0.0,
        nodes_explored: e.leaves,
        elapsed: started.elapsed(),
        certified: true,
    })
}

struct Enumerator<'i> {
    inst: &'i Instance,
    k: usize,
    seq: Vec<Target>,
    counts: Vec<usize>,
    covered: usize,
    first: Vec<f64>,
    last: Vec<f64>,
    best: Time,
    leaves: u64,
}

impl<'i> Enumerator<'i> {
    fn new(inst: &'i Instance, k: usize) -> Self {
        let n = inst.n();
        let mut seq = vec![0; k + 1];
        seq[0] = inst.depot();
        seq[k] = inst.depot();
        let mut counts = vec![0; n];
        counts[inst.depot() - 1] = 1;
        Self {
            inst,
            k,
            seq,
            counts,
            covered: 1,
            first: vec![0.0; n],
            last: vec![0.0; n],
            best: f64::INFINITY,
            leaves: 0,
        }
    }

    /// Calls `leaf` on every covering walk in lexicographic order, stopping
    /// when it returns true. Also records the minimum value seen.
    fn run(&mut self, leaf: &mut dyn FnMut(Time, &[Target]) -> bool) {
        self.step(1, leaf);
    }

    fn step(&mut self, pos: usize, leaf: &mut dyn FnMut(Time, &[Target]) -> bool) -> bool {
        let n = self.inst.n();
        let d = self.inst.depot();
        if pos == self.k {
            if self.seq[pos - 1] == d || self.covered < n {
                return false;
            }
            self.leaves += 1;
            let value = revisit_of_seq(self.inst, &self.seq, &mut self.first, &mut self.last);
            if value < self.best {
                self.best = value;
            }
            return leaf(value, &self.seq);
        }
        let prev = self.seq[pos - 1];
        for t in 1..=n {
            if t == prev {
                continue;
            }
            self.seq[pos] = t;
            self.counts[t - 1] += 1;
            if self.counts[t - 1] == 1 {
                self.covered += 1;
            }
            let stop = self.step(pos + 1, leaf);
            if self.counts[t - 1] == 1 {
                self.covered -= 1;
            }
            self.counts[t - 1] -= 1;
            if stop {
                return true;
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::within_cents;

    #[test]
    fn table1_small_k() {
        let inst = Instance::parse(include_str!("../../../../data/table1.json")).unwrap();
        let r4 = brute_force_optimal(&inst, 4).unwrap();
        assert!(within_cents(r4.value, 38.07));
        let r5 = brute_force_optimal(&inst, 5).unwrap();
        assert!(within_cents(r5.value, 41.46));
        assert_eq!(r5.walk.start(), 2);
        assert_eq!(r5.walk.visits(), 5);
    }

    #[test]
    fn equilateral_triangle() {
        let ones = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        let inst = Instance::new("tri", ones, 1).unwrap();
        let r = brute_force_optimal(&inst, 4).unwrap();
        assert_eq!(r.value, 4.0);
        // Candidates start 1,2 or 1,3; the smallest covering one.
        assert_eq!(r.walk.seq(), &[1, 2, 1, 3, 1]);
        // 2^3 = 8 sequences, of which those closing at 1 and covering all.
        let mut e = Enumerator::new(&inst, 4);
        let mut seen = 0;
        e.run(&mut |v, _| {
            assert_eq!(v, 4.0);
            seen += 1;
            false
        });
        assert_eq!(seen, 4);
    }

    #[test]
    fn cap_and_infeasibility() {
        let inst = Instance::parse(include_str!("../../../../data/table1.json")).unwrap();
        assert!(matches!(
            brute_force_with_cap(&inst, 9, 100.0),
            Err(SolveError::EnumerationCap { .. })
        ));
        let pair = Instance::new("pair", vec![vec![0.0, 2.0], vec![2.0, 0.0]], 1).unwrap();
        assert_eq!(
            brute_force_optimal(&pair, 3).unwrap_err(),
            SolveError::Infeasible { k: 3 }
        );
        assert_eq!(brute_force_optimal(&pair, 4).unwrap().value, 4.0);
    }
}
