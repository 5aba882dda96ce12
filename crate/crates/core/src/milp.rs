//! Mixed-integer model of the k-visit problem, LP text export, and a checker
//! for assignments derived from walks.
//!
//! Variables: `x[i][j][v]` is 1 when visit `v` travels from `i` to `j`;
//! `f[i][v]` is the time since the last visit to `i` after visit `v`;
//! `z[i][v]` equals `f[i][v]` if visit `v` arrives at `i` and 0 otherwise
//! (for `v < k`); `T` bounds every `f`. The product defining `z` is replaced
//! by its big-M linearization.

use std::fmt::Write as _;
use std::io;

use thiserror::Error;

use crate::instance::{Instance, Target, Time};
use crate::walk::Walk;

const VERIFY_TOL: f64 = 1e-6;
const LINE_WIDTH: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MilpError {
    #[error("k = {k} is below the number of targets n = {n}")]
    KBelowN { k: usize, n: usize },
    #[error("walk has {got} visits but the model has {expected}")]
    VisitMismatch { got: usize, expected: usize },
    #[error("walk starts at {got} but the model's depot is {expected}")]
    DepotMismatch { got: Target, expected: Target },
    #[error("walk belongs to instance {got:?}, model to {expected:?}")]
    InstanceMismatch { got: String, expected: String },
    #[error("assignment has {got} values, model has {expected} variables")]
    Dimension { got: usize, expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tag {
    DegFlow,
    NoSelf,
    Depot,
    Cover,
    UniqueEdge,
    Accum,
    WrapNondepot,
    WrapDepot,
    Proxy,
    BigM1,
    BigM2,
    BigM3,
    BigM4,
}

impl Tag {
    pub const ALL: [Tag; 13] = [
        Tag::DegFlow,
        Tag::NoSelf,
        Tag::Depot,
        Tag::Cover,
        Tag::UniqueEdge,
        Tag::Accum,
        Tag::WrapNondepot,
        Tag::WrapDepot,
        Tag::Proxy,
        Tag::BigM1,
        Tag::BigM2,
        Tag::BigM3,
        Tag::BigM4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Tag::DegFlow => "deg-flow",
            Tag::NoSelf => "no-self",
            Tag::Depot => "depot",
            Tag::Cover => "cover",
            Tag::UniqueEdge => "unique-edge",
            Tag::Accum => "accum",
            Tag::WrapNondepot => "wrap-nondepot",
            Tag::WrapDepot => "wrap-depot",
            Tag::Proxy => "proxy",
            Tag::BigM1 => "bigM-1",
            Tag::BigM2 => "bigM-2",
            Tag::BigM3 => "bigM-3",
            Tag::BigM4 => "bigM-4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn lp(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub tag: Tag,
    /// LP row name; encodes the tag and the row's indices.
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn lhs(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * values[v]).sum()
    }
}

#[derive(Debug, Clone)]
pub struct MilpModel<'a> {
    inst: &'a Instance,
    k: usize,
    depot: Target,
    big_m: Time,
    rows: Vec<Row>,
}

impl<'a> MilpModel<'a> {
    pub fn instance(&self) -> &'a Instance {
        self.inst
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn depot(&self) -> Target {
        self.depot
    }

    pub fn big_m(&self) -> Time {
        self.big_m
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn rows_with(&self, tag: Tag) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(move |r| r.tag == tag)
    }

    fn n(&self) -> usize {
        self.inst.n()
    }

    pub fn num_binaries(&self) -> usize {
        self.n() * self.n() * self.k
    }

    pub fn num_f(&self) -> usize {
        self.n() * self.k
    }

    pub fn num_z(&self) -> usize {
        self.n() * (self.k - 1)
    }

    pub fn num_continuous(&self) -> usize {
        self.num_f() + self.num_z() + 1
    }

    pub fn num_vars(&self) -> usize {
        self.num_binaries() + self.num_continuous()
    }

    /// `x[i][j][v]`, 1-based `i, j, v`.
    pub fn x(&self, i: Target, j: Target, v: usize) -> usize {
        ((i - 1) * self.n() + (j - 1)) * self.k + (v - 1)
    }

    /// `f[i][v]`, `1 <= v <= k`.
    pub fn f(&self, i: Target, v: usize) -> usize {
        self.num_binaries() + (i - 1) * self.k + (v - 1)
    }

    /// `z[i][v]`, `1 <= v <= k - 1`.
    pub fn z(&self, i: Target, v: usize) -> usize {
        self.num_binaries() + self.num_f() + (i - 1) * (self.k - 1) + (v - 1)
    }

    pub fn t(&self) -> usize {
        self.num_vars() - 1
    }

    pub fn is_binary(&self, var: usize) -> bool {
        var < self.num_binaries()
    }

    pub fn var_name(&self, var: usize) -> String {
        let (n, k) = (self.n(), self.k);
        if var < self.num_binaries() {
            let v = var % k + 1;
            let ij = var / k;
            format!("x_{}_{}_{}", ij / n + 1, ij % n + 1, v)
        } else if var < self.num_binaries() + self.num_f() {
            let r = var - self.num_binaries();
            format!("f_{}_{}", r / k + 1, r % k + 1)
        } else if var < self.t() {
            let r = var - self.num_binaries() - self.num_f();
            format!("z_{}_{}", r / (k - 1) + 1, r % (k - 1) + 1)
        } else {
            "T".to_string()
        }
    }

    pub fn count(&self, tag: Tag) -> usize {
        self.rows_with(tag).count()
    }
}

/// Builds every row of the formulation, with `M = k * max cost`.
pub fn build_model(inst: &Instance, k: usize) -> Result<MilpModel<'_>, MilpError> {
    let n = inst.n();
    if k < n {
        return Err(MilpError::KBelowN { k, n });
    }
    let mut m = MilpModel {
        inst,
        k,
        depot: inst.depot(),
        big_m: k as f64 * inst.max_cost(),
        rows: Vec::new(),
    };
    let d = m.depot;
    let big_m = m.big_m;
    let mut rows = Vec::new();
    let arrivals = |m: &MilpModel, i: Target, v: usize| -> Vec<(usize, f64)> {
        (1..=n).map(|l| (m.x(l, i, v), 1.0)).collect()
    };
    let departures = |m: &MilpModel, i: Target, v: usize| -> Vec<(usize, f64)> {
        (1..=n).map(|j| (m.x(i, j, v), 1.0)).collect()
    };
    let travel = |m: &MilpModel, v: usize, sign: f64| -> Vec<(usize, f64)> {
        let mut t = Vec::new();
        for a in 1..=n {
            for b in 1..=n {
                let c = inst.cost(a, b);
                if c != 0.0 {
                    t.push((m.x(a, b, v), sign * c));
                }
            }
        }
        t
    };
    let depot_travel = |m: &MilpModel, sign: f64| -> Vec<(usize, f64)> {
        (1..=n)
            .filter(|&j| inst.cost(d, j) != 0.0)
            .map(|j| (m.x(d, j, 1), sign * inst.cost(d, j)))
            .collect()
    };
    let row = |tag: Tag, name: String, terms, sense, rhs| Row {
        tag,
        name,
        terms,
        sense,
        rhs,
    };

    for i in 1..=n {
        for v in 2..=k {
            let mut t = arrivals(&m, i, v - 1);
            t.extend(departures(&m, i, v).into_iter().map(|(x, c)| (x, -c)));
            rows.push(row(Tag::DegFlow, format!("deg_flow_i{i}_v{v}"), t, Sense::Eq, 0.0));
        }
    }
    for i in 1..=n {
        for v in 1..=k {
            let t = vec![(m.x(i, i, v), 1.0)];
            rows.push(row(Tag::NoSelf, format!("no_self_i{i}_v{v}"), t, Sense::Eq, 0.0));
        }
    }
    rows.push(row(Tag::Depot, format!("depot_out_i{d}_v1"), departures(&m, d, 1), Sense::Eq, 1.0));
    rows.push(row(Tag::Depot, format!("depot_in_i{d}_v{k}"), arrivals(&m, d, k), Sense::Eq, 1.0));
    for i in 1..=n {
        let t: Vec<_> = (1..=k).flat_map(|v| departures(&m, i, v)).collect();
        rows.push(row(Tag::Cover, format!("cover_i{i}"), t, Sense::Ge, 1.0));
    }
    for v in 1..=k {
        let t: Vec<_> = (1..=n).flat_map(|i| departures(&m, i, v)).collect();
        rows.push(row(Tag::UniqueEdge, format!("unique_edge_v{v}"), t, Sense::Eq, 1.0));
    }
    for i in 1..=n {
        for v in 2..=k {
            let mut t = vec![(m.f(i, v), 1.0), (m.f(i, v - 1), -1.0), (m.z(i, v - 1), 1.0)];
            t.extend(travel(&m, v, -1.0));
            rows.push(row(Tag::Accum, format!("accum_i{i}_v{v}"), t, Sense::Eq, 0.0));
        }
    }
    for i in (1..=n).filter(|&i| i != d) {
        let mut t = vec![(m.f(i, 1), 1.0), (m.f(i, k), -1.0)];
        t.extend(depot_travel(&m, -1.0));
        rows.push(row(Tag::WrapNondepot, format!("wrap_nondepot_i{i}"), t, Sense::Eq, 0.0));
    }
    {
        let mut t = vec![(m.f(d, 1), 1.0)];
        t.extend(depot_travel(&m, -1.0));
        rows.push(row(Tag::WrapDepot, format!("wrap_depot_i{d}"), t, Sense::Eq, 0.0));
    }
    for i in 1..=n {
        for v in 1..=k {
            let t = vec![(m.f(i, v), 1.0), (m.t(), -1.0)];
            rows.push(row(Tag::Proxy, format!("proxy_i{i}_v{v}"), t, Sense::Le, 0.0));
        }
    }
    for i in 1..=n {
        for v in 1..k {
            let arr = arrivals(&m, i, v);
            let mut t = vec![(m.z(i, v), 1.0)];
            t.extend(arr.iter().map(|&(x, _)| (x, -big_m)));
            rows.push(row(Tag::BigM1, format!("bigM_1_i{i}_v{v}"), t, Sense::Le, 0.0));

            let mut t = vec![(m.z(i, v), 1.0), (m.f(i, v), -1.0)];
            t.extend(arr.iter().map(|&(x, _)| (x, -big_m)));
            rows.push(row(Tag::BigM2, format!("bigM_2_i{i}_v{v}"), t, Sense::Ge, -big_m));

            let t = vec![(m.z(i, v), 1.0), (m.f(i, v), -1.0)];
            rows.push(row(Tag::BigM3, format!("bigM_3_i{i}_v{v}"), t, Sense::Le, 0.0));

            let t = vec![(m.z(i, v), 1.0)];
            rows.push(row(Tag::BigM4, format!("bigM_4_i{i}_v{v}"), t, Sense::Ge, 0.0));
        }
    }
    m.rows = rows;
    Ok(m)
}

/// A number rounded to 12 significant digits, printed without trailing
/// zeros.
fn lp_number(x: f64) -> String {
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{rounded}")
}

/// Appends `piece` to `out`, breaking the line before it would pass the
/// width limit.
fn push_wrapped(out: &mut String, line_len: &mut usize, piece: &str) {
    if *line_len + piece.len() > LINE_WIDTH {
        out.push_str("\n ");
        *line_len = 1;
    }
    out.push_str(piece);
    *line_len += piece.len();
}

pub fn to_lp_string(model: &MilpModel<'_>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "\\ {} k={} depot={} M={}",
        model.inst.name(),
        model.k,
        model.depot,
        lp_number(model.big_m)
    );
    out.push_str("Minimize\n obj: T\nSubject To\n");
    for row in &model.rows {
        let head = format!(" {}:", row.name);
        let mut len = head.len();
        out.push_str(&head);
        for &(var, c) in &row.terms {
            let sign = if c < 0.0 { '-' } else { '+' };
            let piece = format!(" {sign} {} {}", lp_number(c.abs()), model.var_name(var));
            push_wrapped(&mut out, &mut len, &piece);
        }
        let tail = format!(" {} {}", row.sense.lp(), lp_number(row.rhs));
        push_wrapped(&mut out, &mut len, &tail);
        out.push('\n');
    }
    out.push_str("Bounds\n");
    for i in 1..=model.n() {
        for v in 1..=model.k {
            let _ = writeln!(out, " f_{i}_{v} >= 0");
        }
    }
    for i in 1..=model.n() {
        for v in 1..model.k {
            let _ = writeln!(out, " z_{i}_{v} free");
        }
    }
    out.push_str(" T >= 0\nBinary\n");
    let mut len = 0;
    for var in 0..model.num_binaries() {
        if len == 0 {
            out.push(' ');
            len = 1;
        }
        let piece = format!(" {}", model.var_name(var));
        push_wrapped(&mut out, &mut len, &piece);
    }
    out.push_str("\nEnd\n");
    out
}

pub fn export_lp(model: &MilpModel<'_>, sink: &mut impl io::Write) -> io::Result<()> {
    sink.write_all(to_lp_string(model).as_bytes())
}

/// Values for every variable of a model, indexed as the model's variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub values: Vec<f64>,
}

impl Assignment {
    pub fn get(&self, var: usize) -> f64 {
        self.values[var]
    }

    pub fn set(&mut self, var: usize, value: f64) {
        self.values[var] = value;
    }
}

/// The assignment a walk induces: edges as `x`, times since the last visit
/// as `f`, resets as `z`, and the walk's revisit time as `T`.
pub fn walk_to_assignment(model: &MilpModel<'_>, w: &Walk<'_>) -> Result<Assignment, MilpError> {
    if w.instance().name() != model.inst.name() || w.instance().n() != model.n() {
        return Err(MilpError::InstanceMismatch {
            got: w.instance().name().to_string(),
            expected: model.inst.name().to_string(),
        });
    }
    let k = model.k;
    if w.visits() != k {
        return Err(MilpError::VisitMismatch {
            got: w.visits(),
            expected: k,
        });
    }
    if w.start() != model.depot {
        return Err(MilpError::DepotMismatch {
            got: w.start(),
            expected: model.depot,
        });
    }
    let seq = w.seq();
    let inst = model.inst;
    let mut values = vec![0.0; model.num_vars()];
    let mut cum = vec![0.0; k + 1];
    for v in 1..=k {
        values[model.x(seq[v - 1], seq[v], v)] = 1.0;
        cum[v] = cum[v - 1] + inst.cost(seq[v - 1], seq[v]);
    }
    let total = cum[k];
    for i in 1..=model.n() {
        // Arrivals at `i`; the depot's departure counts as one.
        let arrivals: Vec<usize> = (0..=k)
            .filter(|&p| seq[p] == i && (p > 0 || i == model.depot))
            .collect();
        let last = *arrivals.last().expect("walks cover every target");
        for v in 1..=k {
            let f = match arrivals.iter().rev().find(|&&p| p < v) {
                Some(&p) => cum[v] - cum[p],
                None => cum[v] + total - cum[last],
            };
            values[model.f(i, v)] = f;
        }
        for v in 1..k {
            if seq[v] == i {
                values[model.z(i, v)] = values[model.f(i, v)];
            }
        }
    }
    values[model.t()] = w.revisit_time().value;
    Ok(Assignment { values })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowViolation {
    pub tag: Tag,
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub sense: Sense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub violations: Vec<RowViolation>,
    /// Variables breaking integrality or sign bounds.
    pub bad_domains: Vec<String>,
    pub objective: f64,
    pub rows_checked: usize,
}

impl VerifyReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty() && self.bad_domains.is_empty()
    }

    pub fn violated_tags(&self) -> Vec<Tag> {
        let mut tags: Vec<Tag> = self.violations.iter().map(|v| v.tag).collect();
        tags.sort();
        tags.dedup();
        tags
    }
}

/// Evaluates every row at tolerance `1e-6`.
pub fn verify_assignment(model: &MilpModel<'_>, a: &Assignment) -> Result<VerifyReport, MilpError> {
    if a.values.len() != model.num_vars() {
        return Err(MilpError::Dimension {
            got: a.values.len(),
            expected: model.num_vars(),
        });
    }
    let mut violations = Vec::new();
    for row in &model.rows {
        let lhs = row.lhs(&a.values);
        let ok = match row.sense {
            Sense::Le => lhs <= row.rhs + VERIFY_TOL,
            Sense::Ge => lhs >= row.rhs - VERIFY_TOL,
            Sense::Eq => (lhs - row.rhs).abs() <= VERIFY_TOL,
        };
        if !ok {
            violations.push(RowViolation {
                tag: row.tag,
                name: row.name.clone(),
                lhs,
                rhs: row.rhs,
                sense: row.sense,
            });
        }
    }
    let mut bad_domains = Vec::new();
    for (var, &x) in a.values.iter().enumerate() {
        let bad = if model.is_binary(var) {
            x.abs() > VERIFY_TOL && (x - 1.0).abs() > VERIFY_TOL
        } else {
            let free = var >= model.num_binaries() + model.num_f() && var < model.t();
            !free && x < -VERIFY_TOL
        };
        if bad {
            bad_domains.push(model.var_name(var));
        }
    }
    Ok(VerifyReport {
        violations,
        bad_domains,
        objective: a.values[model.t()],
        rows_checked: model.rows.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::within_cents;

    fn table1() -> Instance {
        Instance::parse(include_str!("../../../data/table1.json")).unwrap()
    }

    #[test]
    fn variable_counts() {
        let inst = table1();
        let m = build_model(&inst, 4).unwrap();
        assert_eq!((m.num_binaries(), m.num_f(), m.num_z()), (64, 16, 12));
        assert_eq!(m.num_continuous(), 16 + 12 + 1);
        let m = build_model(&inst, 5).unwrap();
        // 4*4*5, 4*5, 4*4
        assert_eq!((m.num_binaries(), m.num_f(), m.num_z()), (80, 20, 16));
        let m = build_model(&inst, 16).unwrap();
        assert_eq!(m.num_binaries(), 256);
        assert_eq!(build_model(&inst, 3).unwrap_err(), MilpError::KBelowN { k: 3, n: 4 });
    }

    #[test]
    fn row_counts_per_tag() {
        let inst = table1();
        let (n, k) = (4, 5);
        let m = build_model(&inst, k).unwrap();
        let expect = [
            (Tag::DegFlow, n * (k - 1)),
            (Tag::NoSelf, n * k),
            (Tag::Depot, 2),
            (Tag::Cover, n),
            (Tag::UniqueEdge, k),
            (Tag::Accum, n * (k - 1)),
            (Tag::WrapNondepot, n - 1),
            (Tag::WrapDepot, 1),
            (Tag::Proxy, n * k),
            (Tag::BigM1, n * (k - 1)),
            (Tag::BigM2, n * (k - 1)),
            (Tag::BigM3, n * (k - 1)),
            (Tag::BigM4, n * (k - 1)),
        ];
        for (tag, count) in expect {
            assert_eq!(m.count(tag), count, "{}", tag.as_str());
        }
        assert_eq!(m.rows().len(), expect.iter().map(|e| e.1).sum::<usize>());
        assert_eq!(m.big_m(), 5.0 * 13.89);
    }

    #[test]
    fn variable_names_round_trip_indices() {
        let inst = table1();
        let m = build_model(&inst, 4).unwrap();
        assert_eq!(m.var_name(m.x(2, 3, 4)), "x_2_3_4");
        assert_eq!(m.var_name(m.f(4, 1)), "f_4_1");
        assert_eq!(m.var_name(m.z(3, 3)), "z_3_3");
        assert_eq!(m.var_name(m.t()), "T");
        let mut names: Vec<String> = (0..m.num_vars()).map(|v| m.var_name(v)).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), m.num_vars());
    }

    #[test]
    fn tour_assignment_is_feasible() {
        let inst = table1();
        let m = build_model(&inst, 4).unwrap();
        let w = Walk::new(&inst, vec![2, 3, 4, 1, 2]).unwrap();
        let a = walk_to_assignment(&m, &w).unwrap();
        let r = verify_assignment(&m, &a).unwrap();
        assert!(r.is_feasible(), "{:?}", r.violations);
        assert!(within_cents(r.objective, 38.07));
    }

    #[test]
    fn five_visit_assignment() {
        let inst = table1();
        let m = build_model(&inst, 5).unwrap();
        let w = Walk::new(&inst, vec![2, 3, 1, 4, 3, 2]).unwrap();
        let a = walk_to_assignment(&m, &w).unwrap();
        let r = verify_assignment(&m, &a).unwrap();
        assert!(r.is_feasible(), "{:?}", r.violations);
        assert!(within_cents(r.objective, 41.46));
        // Target 1 is reached on visit 2; f there is its revisit time.
        assert!((a.get(m.f(1, 2)) - w.target_revisit_time(1).unwrap()).abs() < 1e-9);
        // Target 3 reached on visit 4 after 26.90.
        assert!((a.get(m.f(3, 4)) - 26.90).abs() < 1e-9);
        assert_eq!(a.get(m.z(3, 4)), a.get(m.f(3, 4)));
        assert_eq!(a.get(m.z(1, 4)), 0.0);
        for v in 1..=5 {
            for i in 1..=4 {
                assert!(a.get(m.f(i, v)) <= m.big_m());
            }
        }
    }

    #[test]
    fn corrupted_assignments_are_caught() {
        let inst = table1();
        let m = build_model(&inst, 4).unwrap();
        let w = Walk::new(&inst, vec![2, 3, 4, 1, 2]).unwrap();
        let mut a = walk_to_assignment(&m, &w).unwrap();
        a.set(m.x(1, 1, 1), 1.0);
        let r = verify_assignment(&m, &a).unwrap();
        assert!(r.violated_tags().contains(&Tag::NoSelf));

        // A four-visit sequence that never leaves target 1.
        let mut a = walk_to_assignment(&m, &w).unwrap();
        for v in 1..=4 {
            for i in 1..=4 {
                for j in 1..=4 {
                    a.set(m.x(i, j, v), 0.0);
                }
            }
        }
        for (v, (i, j)) in [(2, 3), (3, 4), (4, 3), (3, 2)].into_iter().enumerate() {
            a.set(m.x(i, j, v + 1), 1.0);
        }
        let r = verify_assignment(&m, &a).unwrap();
        let cover: Vec<&str> = r
            .violations
            .iter()
            .filter(|v| v.tag == Tag::Cover)
            .map(|v| v.name.as_str())
            .collect();
        assert_eq!(cover, vec!["cover_i1"]);

        a.values.push(0.0);
        assert!(verify_assignment(&m, &a).is_err());
    }

    #[test]
    fn walk_mismatches() {
        let inst = table1();
        let m = build_model(&inst, 5).unwrap();
        let w4 = Walk::new(&inst, vec![2, 3, 4, 1, 2]).unwrap();
        assert!(matches!(
            walk_to_assignment(&m, &w4),
            Err(MilpError::VisitMismatch { got: 4, expected: 5 })
        ));
        let w = Walk::new(&inst, vec![3, 1, 4, 3, 2, 3]).unwrap();
        assert!(matches!(
            walk_to_assignment(&m, &w),
            Err(MilpError::DepotMismatch { got: 3, expected: 2 })
        ));
    }

    #[test]
    fn two_targets_two_visits() {
        let inst = Instance::new("pair", vec![vec![0.0, 4.0], vec![4.0, 0.0]], 1).unwrap();
        let m = build_model(&inst, 2).unwrap();
        assert_eq!(m.num_binaries(), 8);
        let w = Walk::new(&inst, vec![1, 2, 1]).unwrap();
        let a = walk_to_assignment(&m, &w).unwrap();
        let r = verify_assignment(&m, &a).unwrap();
        assert!(r.is_feasible());
        assert_eq!(r.objective, 8.0);
        // Any other edge pattern breaks the depot rows.
        let mut bad = a.clone();
        bad.set(m.x(1, 2, 1), 0.0);
        bad.set(m.x(2, 1, 1), 1.0);
        assert!(verify_assignment(&m, &bad).unwrap().violated_tags().contains(&Tag::Depot));
    }

    #[test]
    fn lp_text_shape() {
        let inst = table1();
        let m = build_model(&inst, 4).unwrap();
        let text = to_lp_string(&m);
        assert_eq!(text, to_lp_string(&build_model(&inst, 4).unwrap()));
        let body: Vec<&str> = text
            .split("Subject To\n")
            .nth(1)
            .unwrap()
            .split("Bounds\n")
            .next()
            .unwrap()
            .lines()
            .collect();
        let named = body.iter().filter(|l| !l.starts_with("  ") && l.contains(':')).count();
        assert_eq!(named, m.rows().len());
        assert!(text.lines().all(|l| l.len() <= LINE_WIDTH + 1));
        assert!(text.contains(" wrap_depot_i2: + 1 f_2_1 - 13.89 x_2_1_1 - 7.28 x_2_3_1"));
        assert!(text.ends_with("End\n"));
        let mut sink = Vec::new();
        export_lp(&m, &mut sink).unwrap();
        assert_eq!(sink, text.as_bytes());
    }

    #[test]
    fn lp_numbers() {
        assert_eq!(lp_number(13.89), "13.89");
        assert_eq!(lp_number(1.0), "1");
        assert_eq!(lp_number(-55.56), "-55.56");
        assert_eq!(lp_number(0.1 + 0.2), "0.3");
        assert_eq!(lp_number(123456789.123456789), "123456789.123");
    }
}
