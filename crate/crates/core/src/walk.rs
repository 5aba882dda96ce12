//! Closed walks and the operations used to reason about them: durations,
//! revisit times, cyclic permutation, concatenation, shortcutting,
//! decomposition and binding subwalks.
//!
//! A walk `(v_1, ..., v_{k+1})` is stored as its full node sequence, so
//! `seq[0] == seq[k]`. The node `v_1` is the starting node and is not a
//! visit; visit `i` (for `1 <= i <= k`) arrives at `seq[i]`. When the walk is
//! repeated, visit `k` is also the starting node of the next repetition.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::instance::{Instance, Target, Time, TIME_TOL};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WalkError {
    #[error("a walk needs at least two nodes, got {0}")]
    TooShort(usize),
    #[error("target {0} is not in 1..={1}")]
    UnknownTarget(Target, usize),
    #[error("walk is not closed: starts at {first}, ends at {last}")]
    NotClosed { first: Target, last: Target },
    #[error("consecutive nodes {index} and {} are both target {target}", index + 1)]
    SelfLoop { index: usize, target: Target },
    #[error("target {0} is never visited")]
    Uncovered(Target),
    #[error("walk has {k} visits but the instance has {n} targets")]
    TooFewVisits { k: usize, n: usize },
    #[error("position {position} is out of range 1..={k}")]
    PositionOutOfRange { position: usize, k: usize },
    #[error("cannot join: left part ends at {left}, right part starts at {right}")]
    JunctionMismatch { left: Target, right: Target },
    #[error("visit {position} is the last visit to target {target} and cannot be shortcut")]
    LastVisit { position: usize, target: Target },
    #[error("subwalk must be closed with terminus {expected}")]
    NotALoop { expected: Target },
    #[error("walk has no repeated target to shortcut")]
    NoRepeatedTarget,
    #[error("no revisit can be dropped without creating a self-loop")]
    NoDroppableRevisit,
}

/// Duration of a node sequence: the sum of consecutive travel times.
pub fn path_duration(inst: &Instance, seq: &[Target]) -> Time {
    seq.windows(2).map(|e| inst.cost(e[0], e[1])).sum()
}

fn check_ids(inst: &Instance, seq: &[Target]) -> Result<(), WalkError> {
    let n = inst.n();
    if let Some(&t) = seq.iter().find(|&&t| t == 0 || t > n) {
        return Err(WalkError::UnknownTarget(t, n));
    }
    if let Some(index) = seq.windows(2).position(|e| e[0] == e[1]) {
        return Err(WalkError::SelfLoop {
            index,
            target: seq[index],
        });
    }
    Ok(())
}

/// Maximum revisit time of a walk together with the smallest target id
/// attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevisitTime {
    pub value: Time,
    pub witness: Target,
}

/// A closed covering walk over an instance.
#[derive(Clone)]
pub struct Walk<'a> {
    inst: &'a Instance,
    seq: Vec<Target>,
}

impl fmt::Debug for Walk<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Walk{:?}", self.seq)
    }
}

impl fmt::Display for Walk<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hyphen_join(&self.seq))
    }
}

impl PartialEq for Walk<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}

impl Eq for Walk<'_> {}

impl PartialOrd for Walk<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Walk<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.seq.cmp(&other.seq)
    }
}

/// Target ids joined with `-`, the CSV form of a walk.
pub fn hyphen_join(seq: &[Target]) -> String {
    seq.iter()
        .map(|t| t.to_string())
        .collect::<Vec<_>>()
        .join("-")
}

/// A contiguous gap between two consecutive visits to one target, expressed
/// on the doubled sequence: it runs from `seq[start]` to `seq[end % k]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub target: Target,
    pub start: usize,
    pub end: usize,
    pub duration: Time,
}

impl<'a> Walk<'a> {
    pub fn new(inst: &'a Instance, seq: Vec<Target>) -> Result<Self, WalkError> {
        if seq.len() < 2 {
            return Err(WalkError::TooShort(seq.len()));
        }
        check_ids(inst, &seq)?;
        let (first, last) = (seq[0], seq[seq.len() - 1]);
        if first != last {
            return Err(WalkError::NotClosed { first, last });
        }
        let k = seq.len() - 1;
        let mut seen = vec![false; inst.n()];
        for &t in &seq {
            seen[t - 1] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(WalkError::Uncovered(missing + 1));
        }
        if k < inst.n() {
            return Err(WalkError::TooFewVisits { k, n: inst.n() });
        }
        Ok(Self { inst, seq })
    }

    pub fn instance(&self) -> &'a Instance {
        self.inst
    }

    pub fn seq(&self) -> &[Target] {
        &self.seq
    }

    pub fn into_seq(self) -> Vec<Target> {
        self.seq
    }

    /// Number of visits `k`.
    pub fn visits(&self) -> usize {
        self.seq.len() - 1
    }

    pub fn start(&self) -> Target {
        self.seq[0]
    }

    /// Visits per target, indexed by `target - 1`.
    pub fn visit_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.inst.n()];
        for &t in &self.seq[1..] {
            counts[t - 1] += 1;
        }
        counts
    }

    /// Targets visited exactly once, ascending.
    pub fn visited_once(&self) -> Vec<Target> {
        self.visit_counts()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 1)
            .map(|(i, _)| i + 1)
            .collect()
    }

    pub fn duration(&self) -> Time {
        path_duration(self.inst, &self.seq)
    }

    #[inline]
    fn node(&self, doubled_index: usize) -> Target {
        self.seq[doubled_index % self.visits()]
    }

    fn span_duration(&self, start: usize, end: usize) -> Time {
        (start..end)
            .map(|e| self.inst.cost(self.node(e), self.node(e + 1)))
            .sum()
    }

    /// Every revisit gap of `t` in the repeated walk, in order of the
    /// opening visit.
    pub fn gaps(&self, t: Target) -> Result<Vec<Gap>, WalkError> {
        let n = self.inst.n();
        if t == 0 || t > n {
            return Err(WalkError::UnknownTarget(t, n));
        }
        let k = self.visits();
        let positions: Vec<usize> = (0..k).filter(|&i| self.seq[i] == t).collect();
        let gaps = positions
            .iter()
            .enumerate()
            .map(|(i, &start)| {
                let end = positions.get(i + 1).copied().unwrap_or(positions[0] + k);
                Gap {
                    target: t,
                    start,
                    end,
                    duration: self.span_duration(start, end),
                }
            })
            .collect();
        Ok(gaps)
    }

    /// Longest time between successive visits to `t` when the walk repeats.
    pub fn target_revisit_time(&self, t: Target) -> Result<Time, WalkError> {
        Ok(self
            .gaps(t)?
            .iter()
            .map(|g| g.duration)
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Revisit time of every target, indexed by `target - 1`.
    pub fn revisit_times(&self) -> Vec<Time> {
        (1..=self.inst.n())
            .map(|t| self.target_revisit_time(t).expect("target in range"))
            .collect()
    }

    pub fn revisit_time(&self) -> RevisitTime {
        let times = self.revisit_times();
        let value = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let witness = times
            .iter()
            .position(|&x| x >= value - TIME_TOL)
            .expect("non-empty")
            + 1;
        RevisitTime { value, witness }
    }

    /// Rotation `C(W, v_r)` starting at the node `v_r`, `1 <= r <= k`.
    pub fn cyclic_permutation(&self, occurrence: usize) -> Result<Walk<'a>, WalkError> {
        let k = self.visits();
        if occurrence == 0 || occurrence > k {
            return Err(WalkError::PositionOutOfRange {
                position: occurrence,
                k,
            });
        }
        let i = occurrence - 1;
        let mut seq = Vec::with_capacity(k + 1);
        seq.extend_from_slice(&self.seq[i..k]);
        seq.extend_from_slice(&self.seq[..=i]);
        Ok(Walk {
            inst: self.inst,
            seq,
        })
    }

    /// Rotation to the first occurrence of `t` among `v_1..v_k`.
    pub fn rotate_to(&self, t: Target) -> Result<Walk<'a>, WalkError> {
        let k = self.visits();
        let i = self.seq[..k]
            .iter()
            .position(|&x| x == t)
            .ok_or(WalkError::UnknownTarget(t, self.inst.n()))?;
        self.cyclic_permutation(i + 1)
    }

    /// Rotation to the last occurrence of `t` among `v_1..v_k`.
    pub fn rotate_to_last(&self, t: Target) -> Result<Walk<'a>, WalkError> {
        let k = self.visits();
        let i = self.seq[..k]
            .iter()
            .rposition(|&x| x == t)
            .ok_or(WalkError::UnknownTarget(t, self.inst.n()))?;
        self.cyclic_permutation(i + 1)
    }

    /// `self ∘ other`: both walks must start (and so end) at the same node.
    pub fn concat(&self, other: &Walk<'_>) -> Result<Walk<'a>, WalkError> {
        let (left, right) = (self.start(), other.start());
        if left != right {
            return Err(WalkError::JunctionMismatch { left, right });
        }
        let mut seq = self.seq.clone();
        seq.extend_from_slice(&other.seq[1..]);
        Ok(Walk {
            inst: self.inst,
            seq,
        })
    }

    /// The walk concatenated with itself `times` times (`times >= 1`).
    pub fn repeat(&self, times: usize) -> Walk<'a> {
        assert!(times >= 1, "repeat needs at least one copy");
        let k = self.visits();
        let mut seq = Vec::with_capacity(k * times + 1);
        for _ in 0..times {
            seq.extend_from_slice(&self.seq[..k]);
        }
        seq.push(self.seq[0]);
        Walk {
            inst: self.inst,
            seq,
        }
    }

    /// Removes the given visits (positions `1..=k`) with only structural
    /// checks: the result must stay closed, covering and free of self-loops.
    pub fn remove_visits(&self, drop: &[usize]) -> Result<Walk<'a>, WalkError> {
        let k = self.visits();
        let mut dropped = vec![false; k + 1];
        for &p in drop {
            if p == 0 || p > k {
                return Err(WalkError::PositionOutOfRange { position: p, k });
            }
            dropped[p] = true;
        }
        let seq: Vec<Target> = self
            .seq
            .iter()
            .enumerate()
            .filter(|(i, _)| !dropped[*i])
            .map(|(_, &t)| t)
            .collect();
        Walk::new(self.inst, seq)
    }

    /// Shortcut walk: drops the given visits while retaining the last visit
    /// to every target.
    pub fn shortcut(&self, drop: &[usize]) -> Result<Walk<'a>, WalkError> {
        let k = self.visits();
        let last = last_visits(&self.seq, self.inst.n());
        for &p in drop {
            if p == 0 || p > k {
                return Err(WalkError::PositionOutOfRange { position: p, k });
            }
            let target = self.seq[p];
            if last[target - 1] == Some(p) {
                return Err(WalkError::LastVisit {
                    position: p,
                    target,
                });
            }
        }
        self.remove_visits(drop)
    }

    /// Inserts a closed loop right after node `seq[after]`, which must be
    /// the loop's endpoint. `after == k` appends the loop at the end.
    pub fn insert_loop(&self, after: usize, lp: &Subwalk<'_>) -> Result<Walk<'a>, WalkError> {
        let k = self.visits();
        if after > k {
            return Err(WalkError::PositionOutOfRange { position: after, k });
        }
        let anchor = self.seq[after];
        if !lp.is_closed() || lp.first() != anchor {
            return Err(WalkError::NotALoop { expected: anchor });
        }
        let mut seq = Vec::with_capacity(self.seq.len() + lp.seq().len() - 1);
        seq.extend_from_slice(&self.seq[..=after]);
        seq.extend_from_slice(&lp.seq()[1..]);
        seq.extend_from_slice(&self.seq[after + 1..]);
        Walk::new(self.inst, seq)
    }

    /// Splits the walk at every occurrence of `v`.
    pub fn decompose(&self, v: Target) -> Result<Decomposition<'a>, WalkError> {
        let n = self.inst.n();
        if v == 0 || v > n {
            return Err(WalkError::UnknownTarget(v, n));
        }
        let k = self.visits();
        let occ: Vec<usize> = (0..=k).filter(|&i| self.seq[i] == v).collect();
        let piece = |a: usize, b: usize| Subwalk {
            inst: self.inst,
            seq: self.seq[a..=b].to_vec(),
        };
        let (first, last) = (occ[0], occ[occ.len() - 1]);
        Ok(Decomposition {
            pivot: v,
            prefix: (first > 0).then(|| piece(0, first)),
            loops: occ.windows(2).map(|w| piece(w[0], w[1])).collect(),
            suffix: (last < k).then(|| piece(last, k)),
        })
    }

    /// All closed subwalks of the repeated walk with a terminus whose
    /// duration equals the walk's revisit time, sorted by terminus, then by
    /// opening position.
    pub fn binding_subwalks(&self) -> Vec<BindingSubwalk<'a>> {
        let value = self.revisit_time().value;
        let mut out = Vec::new();
        for t in 1..=self.inst.n() {
            for gap in self.gaps(t).expect("target in range") {
                if (gap.duration - value).abs() <= TIME_TOL {
                    let seq: Vec<Target> = (gap.start..=gap.end).map(|i| self.node(i)).collect();
                    let sub = Subwalk {
                        inst: self.inst,
                        seq,
                    };
                    out.push(BindingSubwalk {
                        spans_all: sub.spans_all(),
                        subwalk: sub,
                        terminus: t,
                        start: gap.start,
                        end: gap.end,
                    });
                }
            }
        }
        out
    }
}

/// Position of the last visit (in `1..=k`) to each target.
fn last_visits(seq: &[Target], n: usize) -> Vec<Option<usize>> {
    let mut last = vec![None; n];
    for (i, &t) in seq.iter().enumerate().skip(1) {
        last[t - 1] = Some(i);
    }
    last
}

/// A contiguous fragment of a (repeated) walk. Not necessarily closed or
/// covering.
#[derive(Clone)]
pub struct Subwalk<'a> {
    inst: &'a Instance,
    seq: Vec<Target>,
}

impl fmt::Debug for Subwalk<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subwalk{:?}", self.seq)
    }
}

impl PartialEq for Subwalk<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}

impl<'a> Subwalk<'a> {
    pub fn new(inst: &'a Instance, seq: Vec<Target>) -> Result<Self, WalkError> {
        if seq.len() < 2 {
            return Err(WalkError::TooShort(seq.len()));
        }
        check_ids(inst, &seq)?;
        Ok(Self { inst, seq })
    }

    pub fn seq(&self) -> &[Target] {
        &self.seq
    }

    pub fn into_seq(self) -> Vec<Target> {
        self.seq
    }

    pub fn first(&self) -> Target {
        self.seq[0]
    }

    pub fn last(&self) -> Target {
        self.seq[self.seq.len() - 1]
    }

    pub fn visits(&self) -> usize {
        self.seq.len() - 1
    }

    /// Travel time `T(W_c)`.
    pub fn duration(&self) -> Time {
        path_duration(self.inst, &self.seq)
    }

    pub fn is_closed(&self) -> bool {
        self.first() == self.last()
    }

    /// The endpoint of a closed subwalk, if it is not visited in between.
    pub fn terminus(&self) -> Option<Target> {
        let end = self.first();
        let interior = &self.seq[1..self.seq.len() - 1];
        (self.is_closed() && !interior.contains(&end)).then_some(end)
    }

    pub fn spans_all(&self) -> bool {
        let mut seen = vec![false; self.inst.n()];
        for &t in &self.seq {
            seen[t - 1] = true;
        }
        seen.into_iter().all(|s| s)
    }

    /// `self ∘ other` with the junction node written once.
    pub fn concat(&self, other: &Subwalk<'_>) -> Result<Subwalk<'a>, WalkError> {
        let (left, right) = (self.last(), other.first());
        if left != right {
            return Err(WalkError::JunctionMismatch { left, right });
        }
        let mut seq = self.seq.clone();
        seq.extend_from_slice(&other.seq[1..]);
        Ok(Subwalk {
            inst: self.inst,
            seq,
        })
    }

    /// Shortcut of a closed subwalk retaining only the last visit to every
    /// target it contains. The opening node is not a visit.
    pub fn keep_last_visits(&self) -> Subwalk<'a> {
        let last = last_visits(&self.seq, self.inst.n());
        let mut seq = vec![self.seq[0]];
        seq.extend(
            self.seq
                .iter()
                .enumerate()
                .skip(1)
                .filter(|(i, &t)| last[t - 1] == Some(*i))
                .map(|(_, &t)| t),
        );
        Subwalk {
            inst: self.inst,
            seq,
        }
    }

    /// Removes visits (positions `1..len-1`, never the closing node) while
    /// retaining the last visit to every target.
    pub fn shortcut(&self, drop: &[usize]) -> Result<Subwalk<'a>, WalkError> {
        let k = self.visits();
        let last = last_visits(&self.seq, self.inst.n());
        let mut dropped = vec![false; k + 1];
        for &p in drop {
            if p == 0 || p > k {
                return Err(WalkError::PositionOutOfRange { position: p, k });
            }
            let target = self.seq[p];
            if last[target - 1] == Some(p) {
                return Err(WalkError::LastVisit {
                    position: p,
                    target,
                });
            }
            dropped[p] = true;
        }
        let seq: Vec<Target> = self
            .seq
            .iter()
            .enumerate()
            .filter(|(i, _)| !dropped[*i])
            .map(|(_, &t)| t)
            .collect();
        Subwalk::new(self.inst, seq)
    }
}

/// `S_1 ∘ W_1 ∘ ... ∘ W_{r-1} ∘ S_2` with respect to a pivot vertex.
#[derive(Debug, Clone)]
pub struct Decomposition<'a> {
    pub pivot: Target,
    /// From the start to the first occurrence; `None` when the walk starts
    /// at the pivot.
    pub prefix: Option<Subwalk<'a>>,
    /// Closed subwalks between consecutive occurrences, each with the pivot
    /// as terminus.
    pub loops: Vec<Subwalk<'a>>,
    /// From the last occurrence to the end; `None` when the walk ends at the
    /// pivot.
    pub suffix: Option<Subwalk<'a>>,
}

impl Decomposition<'_> {
    /// Joins the pieces back into a node sequence.
    pub fn reassemble(&self) -> Vec<Target> {
        let mut seq = vec![];
        let pieces = self
            .prefix
            .iter()
            .chain(self.loops.iter())
            .chain(self.suffix.iter());
        for piece in pieces {
            if seq.is_empty() {
                seq.extend_from_slice(piece.seq());
            } else {
                debug_assert_eq!(seq.last(), Some(&piece.first()));
                seq.extend_from_slice(&piece.seq()[1..]);
            }
        }
        if seq.is_empty() {
            seq.push(self.pivot);
        }
        seq
    }
}

/// A binding subwalk located on the doubled sequence of its walk.
#[derive(Debug, Clone)]
pub struct BindingSubwalk<'a> {
    pub subwalk: Subwalk<'a>,
    pub terminus: Target,
    /// Index of the opening terminus in `seq[0..k]`.
    pub start: usize,
    /// Index of the closing terminus on the doubled sequence.
    pub end: usize,
    pub spans_all: bool,
}

/// Revisit time of a raw node sequence using arrival-time differences, with
/// no allocation beyond two scratch buffers. For enumeration loops.
pub(crate) fn revisit_of_seq(
    inst: &Instance,
    seq: &[Target],
    first: &mut [f64],
    last: &mut [f64],
) -> Time {
    first.fill(f64::NAN);
    last.fill(f64::NAN);
    let k = seq.len() - 1;
    let mut clock = 0.0;
    let mut worst: f64 = 0.0;
    let start = seq[0] - 1;
    first[start] = 0.0;
    last[start] = 0.0;
    for i in 1..=k {
        clock += inst.cost(seq[i - 1], seq[i]);
        let t = seq[i] - 1;
        if last[t].is_nan() {
            first[t] = clock;
        } else {
            worst = worst.max(clock - last[t]);
        }
        last[t] = clock;
    }
    for t in 0..first.len() {
        if t != start && !first[t].is_nan() {
            worst = worst.max(clock - last[t] + first[t]);
        }
    }
    worst
}
