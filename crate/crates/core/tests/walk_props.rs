use proptest::collection::vec;
use proptest::prelude::*;

use walkplan::constructor::extend_by_n;
use walkplan::milp::{build_model, verify_assignment, walk_to_assignment};
use walkplan::{random_euclidean_instance, Instance, Target, Walk};

const TOL: f64 = 1e-9;

/// A permutation of the targets followed by extra visits, with consecutive
/// repeats removed and the walk closed on its first node.
fn close_sequence(perm: Vec<Target>, extra: Vec<Target>) -> Vec<Target> {
    let mut seq: Vec<Target> = Vec::new();
    for t in perm.into_iter().chain(extra) {
        if seq.last() != Some(&t) {
            seq.push(t);
        }
    }
    while seq.len() > 1 && seq.last() == seq.first() {
        seq.pop();
    }
    seq.push(seq[0]);
    seq
}

fn walk_case(max_n: usize, max_extra: usize) -> impl Strategy<Value = (usize, u64, Vec<Target>)> {
    (2..=max_n, 0u64..10_000)
        .prop_flat_map(move |(n, seed)| {
            (
                Just(n),
                Just(seed),
                Just((1..=n).collect::<Vec<_>>()).prop_shuffle(),
                vec(1..=n, 0..=max_extra),
            )
        })
        .prop_map(|(n, seed, perm, extra)| (n, seed, close_sequence(perm, extra)))
}

fn instance(n: usize, seed: u64) -> Instance {
    random_euclidean_instance(n, seed, 100.0).unwrap()
}

fn same_times(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= TOL * (1.0 + x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rotation_keeps_every_revisit_time((n, seed, seq) in walk_case(6, 12)) {
        let inst = instance(n, seed);
        let w = Walk::new(&inst, seq).unwrap();
        let times = w.revisit_times();
        for r in 1..=w.visits() {
            let c = w.cyclic_permutation(r).unwrap();
            prop_assert_eq!(c.visits(), w.visits());
            prop_assert!(same_times(&c.revisit_times(), &times));
        }
    }

    #[test]
    fn repetition_keeps_every_revisit_time((n, seed, seq) in walk_case(6, 10), m in 1usize..4) {
        let inst = instance(n, seed);
        let w = Walk::new(&inst, seq).unwrap();
        let rep = w.repeat(m);
        prop_assert_eq!(rep.visits(), m * w.visits());
        prop_assert!(same_times(&rep.revisit_times(), &w.revisit_times()));
    }

    #[test]
    fn gaps_partition_the_duration((n, seed, seq) in walk_case(6, 12)) {
        let inst = instance(n, seed);
        let w = Walk::new(&inst, seq).unwrap();
        let counts = w.visit_counts();
        let total = w.duration();
        for t in 1..=n {
            let gaps = w.gaps(t).unwrap();
            prop_assert_eq!(gaps.len(), counts[t - 1]);
            let sum: f64 = gaps.iter().map(|g| g.duration).sum();
            prop_assert!((sum - total).abs() <= TOL * (1.0 + total));
            let longest = gaps.iter().map(|g| g.duration).fold(0.0, f64::max);
            prop_assert!((longest - w.target_revisit_time(t).unwrap()).abs() <= TOL);
        }
        let r = w.revisit_time();
        prop_assert!((r.value - w.target_revisit_time(r.witness).unwrap()).abs() <= TOL);
        let fewest = *counts.iter().min().unwrap() as f64;
        prop_assert!(r.value >= total / fewest - TOL);
    }

    #[test]
    fn decomposition_reassembles((n, seed, seq) in walk_case(6, 12)) {
        let inst = instance(n, seed);
        let w = Walk::new(&inst, seq).unwrap();
        for v in 1..=n {
            let d = w.decompose(v).unwrap();
            prop_assert_eq!(d.reassemble(), w.seq().to_vec());
            prop_assert!(d.loops.iter().all(|l| l.terminus() == Some(v)));
            let occurrences = w.seq().iter().filter(|&&x| x == v).count();
            prop_assert_eq!(d.loops.len(), occurrences - 1);
        }
    }

    #[test]
    fn shortcuts_never_lengthen_untouched_targets(
        (n, seed, seq) in walk_case(6, 12),
        mask in vec(any::<bool>(), 20),
        keep in 1usize..=6,
    ) {
        let inst = instance(n, seed);
        let w = Walk::new(&inst, seq).unwrap();
        let keep = (keep - 1) % n + 1;
        let k = w.visits();
        let drop: Vec<usize> = (1..=k)
            .filter(|&p| mask[p % mask.len()] && w.seq()[p] != keep)
            .collect();
        if let Ok(s) = w.shortcut(&drop) {
            prop_assert!(s.duration() <= w.duration() + TOL);
            prop_assert!(
                s.target_revisit_time(keep).unwrap() <= w.target_revisit_time(keep).unwrap() + TOL
            );
        }
    }

    #[test]
    fn binding_subwalks_attain_the_value_and_span((n, seed, seq) in walk_case(6, 12)) {
        let inst = instance(n, seed);
        let w = Walk::new(&inst, seq).unwrap();
        let value = w.revisit_time().value;
        let binding = w.binding_subwalks();
        prop_assert!(!binding.is_empty());
        for b in &binding {
            prop_assert!((b.subwalk.duration() - value).abs() <= TOL);
            prop_assert!(b.spans_all);
            prop_assert_eq!(b.subwalk.first(), b.terminus);
            prop_assert_eq!(b.subwalk.last(), b.terminus);
        }
    }

    #[test]
    fn extension_adds_one_visit_per_target((n, seed, seq) in walk_case(6, 12)) {
        let inst = instance(n, seed);
        let w = Walk::new(&inst, seq).unwrap();
        let e = extend_by_n(&w).unwrap();
        prop_assert_eq!(e.visits(), w.visits() + n);
        let before = w.visit_counts();
        let after = e.visit_counts();
        prop_assert!(before.iter().zip(&after).all(|(b, a)| a == &(b + 1)));
        prop_assert!(e.revisit_time().value <= w.revisit_time().value + TOL);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn walk_assignments_satisfy_the_model((n, seed, seq) in walk_case(5, 6)) {
        let inst = instance(n, seed);
        let w = Walk::new(&inst, seq).unwrap();
        let w = w.rotate_to(inst.depot()).unwrap();
        let model = build_model(&inst, w.visits()).unwrap();
        let a = walk_to_assignment(&model, &w).unwrap();
        let report = verify_assignment(&model, &a).unwrap();
        prop_assert!(report.is_feasible(), "{:?}", report.violated_tags());
        prop_assert!((report.objective - w.revisit_time().value).abs() <= 1e-6);
    }
}
