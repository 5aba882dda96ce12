//! Problem data: targets, travel times and the depot.
//!
//! Targets are identified by 1-based ids `1..=n` everywhere in the public
//! API, matching the instance documents and the walks printed by the CLI.
//! Travel times may be asymmetric; walks and the MILP read them directionally.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

/// 1-based target id.
pub type Target = usize;

/// Travel time, in the instance's time units.
pub type Time = f64;

/// Absolute tolerance used for all internal time comparisons.
pub const TIME_TOL: f64 = 1e-9;

/// Relative factor for the default triangle-inequality tolerance.
pub const METRIC_REL_TOL: f64 = 1e-6;

/// Agreement with a value published at two decimals: within one cent,
/// inclusive. The Table I matrix is itself rounded, so sums can land exactly
/// one cent off.
pub fn within_cents(value: Time, published: Time) -> bool {
    (value - published).abs() <= 0.01 + TIME_TOL
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("failed to read instance: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse instance document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("instance needs at least 2 targets, got {0}")]
    TooFewTargets(usize),
    #[error("declared n = {declared} but the document describes {found} targets")]
    CountMismatch { declared: usize, found: usize },
    #[error("cost row {row} has {found} entries, expected {expected}")]
    RowLength {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("depot {depot} is not a target id in 1..={n}")]
    Depot { depot: Target, n: usize },
    #[error("invalid travel time c({u},{v}) = {value}")]
    BadCost { u: Target, v: Target, value: f64 },
    #[error("document has neither a `cost` matrix nor `points`")]
    MissingData,
    #[error("weighted targets are not supported")]
    Weighted,
    #[error("box side must be positive, got {0}")]
    BadBox(f64),
    #[error(
        "triangle inequality violated by {count} triple(s); worst is ({u},{v},{w}) with \
         c({u},{v}) + c({v},{w}) short of c({u},{w}) by {magnitude:.6}"
    )]
    Metric {
        count: usize,
        u: Target,
        v: Target,
        w: Target,
        magnitude: f64,
    },
}

/// A single triangle-inequality failure `c(u,v) + c(v,w) < c(u,w) - eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricViolation {
    pub u: Target,
    pub v: Target,
    pub w: Target,
    /// `c(u,w) - c(u,v) - c(v,w)`, always positive.
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub tolerance: f64,
    pub violations: Vec<MetricViolation>,
    pub max_violation: f64,
}

impl MetricReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn worst(&self) -> Option<&MetricViolation> {
        self.violations
            .iter()
            .max_by(|a, b| a.magnitude.total_cmp(&b.magnitude))
    }
}

/// An immutable monitoring instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    name: String,
    n: usize,
    depot: Target,
    cost: Vec<Time>,
    points: Option<Vec<[f64; 2]>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    name: Option<String>,
    n: Option<usize>,
    depot: Option<Target>,
    cost: Option<Vec<Vec<f64>>>,
    points: Option<Vec<[f64; 2]>>,
    weights: Option<serde_json::Value>,
}

impl Instance {
    /// Builds an instance from a full matrix and checks every invariant,
    /// including the triangle inequality at the default tolerance.
    pub fn new(
        name: impl Into<String>,
        cost: Vec<Vec<f64>>,
        depot: Target,
    ) -> Result<Self, InstanceError> {
        let inst = Self::from_matrix_unchecked_metric(name.into(), cost, depot)?;
        inst.ensure_metric()?;
        Ok(inst)
    }

    /// Builds an instance from planar coordinates with Euclidean travel times.
    pub fn from_points(
        name: impl Into<String>,
        points: Vec<[f64; 2]>,
        depot: Target,
    ) -> Result<Self, InstanceError> {
        let n = points.len();
        let cost = points
            .iter()
            .map(|a| {
                points
                    .iter()
                    .map(|b| (a[0] - b[0]).hypot(a[1] - b[1]))
                    .collect()
            })
            .collect();
        let mut inst = Self::from_matrix_unchecked_metric(name.into(), cost, depot)?;
        debug_assert_eq!(inst.n, n);
        inst.points = Some(points);
        inst.ensure_metric()?;
        Ok(inst)
    }

    /// Structural checks only (shape, diagonal, positivity, depot). The
    /// triangle inequality is left to [`Instance::validate_metric`].
    fn from_matrix_unchecked_metric(
        name: String,
        rows: Vec<Vec<f64>>,
        depot: Target,
    ) -> Result<Self, InstanceError> {
        let n = rows.len();
        if n < 2 {
            return Err(InstanceError::TooFewTargets(n));
        }
        let mut cost = Vec::with_capacity(n * n);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(InstanceError::RowLength {
                    row: r + 1,
                    expected: n,
                    found: row.len(),
                });
            }
            for (c, &value) in row.iter().enumerate() {
                let ok = if r == c {
                    value == 0.0
                } else {
                    value.is_finite() && value > 0.0
                };
                if !ok {
                    return Err(InstanceError::BadCost {
                        u: r + 1,
                        v: c + 1,
                        value,
                    });
                }
                cost.push(value);
            }
        }
        if depot == 0 || depot > n {
            return Err(InstanceError::Depot { depot, n });
        }
        Ok(Self {
            name,
            n,
            depot,
            cost,
            points: None,
        })
    }

    /// Parses an instance document without enforcing the triangle inequality.
    pub fn parse_unchecked(text: &str) -> Result<Self, InstanceError> {
        let doc: InstanceDoc = serde_json::from_str(text)?;
        if doc.weights.is_some() {
            return Err(InstanceError::Weighted);
        }
        let name = doc.name.unwrap_or_else(|| "unnamed".to_string());
        let depot = doc.depot.unwrap_or(1);
        let inst = match (doc.cost, doc.points) {
            (Some(cost), _) => {
                if let Some(declared) = doc.n {
                    if declared != cost.len() {
                        return Err(InstanceError::CountMismatch {
                            declared,
                            found: cost.len(),
                        });
                    }
                }
                Self::from_matrix_unchecked_metric(name, cost, depot)?
            }
            (None, Some(points)) => {
                if let Some(declared) = doc.n {
                    if declared != points.len() {
                        return Err(InstanceError::CountMismatch {
                            declared,
                            found: points.len(),
                        });
                    }
                }
                let n = points.len();
                let rows = points
                    .iter()
                    .map(|a| {
                        points
                            .iter()
                            .map(|b| (a[0] - b[0]).hypot(a[1] - b[1]))
                            .collect()
                    })
                    .collect();
                let mut inst = Self::from_matrix_unchecked_metric(name, rows, depot)?;
                debug_assert_eq!(inst.n, n);
                inst.points = Some(points);
                inst
            }
            (None, None) => return Err(InstanceError::MissingData),
        };
        Ok(inst)
    }

    /// Parses and fully validates an instance document.
    pub fn parse(text: &str) -> Result<Self, InstanceError> {
        let inst = Self::parse_unchecked(text)?;
        inst.ensure_metric()?;
        Ok(inst)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn depot(&self) -> Target {
        self.depot
    }

    pub fn points(&self) -> Option<&[[f64; 2]]> {
        self.points.as_deref()
    }

    /// Travel time from `u` to `v` (1-based ids).
    #[inline]
    pub fn cost(&self, u: Target, v: Target) -> Time {
        self.cost[(u - 1) * self.n + (v - 1)]
    }

    /// Travel time with 0-based indices, for the solver's inner loops.
    #[inline]
    pub(crate) fn cost0(&self, u: usize, v: usize) -> Time {
        self.cost[u * self.n + v]
    }

    pub fn max_cost(&self) -> Time {
        self.cost.iter().copied().fold(0.0, f64::max)
    }

    pub fn matrix(&self) -> Vec<Vec<Time>> {
        self.cost.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (1..=self.n).all(|u| (1..=self.n).all(|v| self.cost(u, v) == self.cost(v, u)))
    }

    /// Same data with a different depot.
    pub fn with_depot(&self, depot: Target) -> Result<Self, InstanceError> {
        if depot == 0 || depot > self.n {
            return Err(InstanceError::Depot { depot, n: self.n });
        }
        Ok(Self {
            depot,
            ..self.clone()
        })
    }

    pub fn with_name(&self, name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..self.clone()
        }
    }

    /// Default triangle-inequality tolerance: `1e-6 * max cost`.
    pub fn metric_tolerance(&self) -> f64 {
        METRIC_REL_TOL * self.max_cost()
    }

    /// Lists every ordered triple of distinct targets violating the triangle
    /// inequality by more than `eps`. A reversed triple carrying the same
    /// three costs is reported once, under its smaller first id.
    pub fn validate_metric_with(&self, eps: f64) -> MetricReport {
        let n = self.n;
        let mut violations = Vec::new();
        let mut max_violation: f64 = 0.0;
        let short = |u: Target, v: Target, w: Target| {
            self.cost(u, w) - self.cost(u, v) - self.cost(v, w)
        };
        for u in 1..=n {
            for v in 1..=n {
                for w in 1..=n {
                    if u == v || v == w || u == w {
                        continue;
                    }
                    if self.cost(u, v) + self.cost(v, w) >= self.cost(u, w) - eps {
                        continue;
                    }
                    let magnitude = short(u, v, w);
                    max_violation = max_violation.max(magnitude);
                    let mirrored = self.cost(w, v) == self.cost(v, w)
                        && self.cost(v, u) == self.cost(u, v)
                        && self.cost(w, u) == self.cost(u, w);
                    if u > w && mirrored {
                        continue;
                    }
                    violations.push(MetricViolation { u, v, w, magnitude });
                }
            }
        }
        MetricReport {
            tolerance: eps,
            violations,
            max_violation,
        }
    }

    pub fn validate_metric(&self) -> MetricReport {
        self.validate_metric_with(self.metric_tolerance())
    }

    fn ensure_metric(&self) -> Result<(), InstanceError> {
        let report = self.validate_metric();
        match report.worst() {
            None => Ok(()),
            Some(worst) => Err(InstanceError::Metric {
                count: report.violations.len(),
                u: worst.u,
                v: worst.v,
                w: worst.w,
                magnitude: worst.magnitude,
            }),
        }
    }

    /// Canonical cost-matrix document. `parse(to_json())` reproduces the
    /// instance bit for bit, and re-serializing yields identical text.
    pub fn to_json(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n");
        let _ = writeln!(out, "  \"name\": {},", json_str(&self.name));
        let _ = writeln!(out, "  \"n\": {},", self.n);
        let _ = writeln!(out, "  \"depot\": {},", self.depot);
        out.push_str("  \"cost\": [\n");
        for (r, row) in self.cost.chunks(self.n).enumerate() {
            let cells: Vec<String> = row.iter().map(|&x| json_num(x)).collect();
            let sep = if r + 1 == self.n { "" } else { "," };
            let _ = writeln!(out, "    [{}]{}", cells.join(", "), sep);
        }
        out.push_str("  ]\n}\n");
        out
    }

    /// Points-form document, available for coordinate-backed instances.
    pub fn to_points_json(&self) -> Option<String> {
        let points = self.points.as_ref()?;
        let mut out = String::new();
        out.push_str("{\n");
        let _ = writeln!(out, "  \"name\": {},", json_str(&self.name));
        let _ = writeln!(out, "  \"n\": {},", self.n);
        let _ = writeln!(out, "  \"depot\": {},", self.depot);
        out.push_str("  \"points\": [\n");
        for (i, p) in points.iter().enumerate() {
            let sep = if i + 1 == points.len() { "" } else { "," };
            let _ = writeln!(out, "    [{}, {}]{}", json_num(p[0]), json_num(p[1]), sep);
        }
        out.push_str("  ]\n}\n");
        Some(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), InstanceError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn json_num(x: f64) -> String {
    serde_json::to_string(&x).expect("finite floats always serialize")
}

/// Reads and fully validates an instance document from disk.
pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance, InstanceError> {
    Instance::parse(&fs::read_to_string(path)?)
}

/// `n` points drawn uniformly from `[0, side)²` with Euclidean travel times.
///
/// The generator is `ChaCha8Rng::seed_from_u64(seed)`; for each target in
/// order it draws `x` then `y` with `gen_range(0.0..side)`. The depot is
/// target 1 and the instance is named `euclid-n{n}-s{seed}`.
pub fn random_euclidean_instance(n: usize, seed: u64, side: f64) -> Result<Instance, InstanceError> {
    if n < 2 {
        return Err(InstanceError::TooFewTargets(n));
    }
    if !(side.is_finite() && side > 0.0) {
        return Err(InstanceError::BadBox(side));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| {
            let x = rng.gen_range(0.0..side);
            let y = rng.gen_range(0.0..side);
            [x, y]
        })
        .collect();
    Instance::from_points(format!("euclid-n{n}-s{seed}"), points, 1)
}
