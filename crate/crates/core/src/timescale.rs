//! Finite time scales, their two-dimensional products, and delta derivatives.
//!
//! A time scale here is a finite, strictly increasing set of real points.
//! Dense regions of an ideal (closed, uncountable) time scale are represented
//! by refinement; the forward-difference formulas below are exact at scattered
//! points, so refinement changes resolution, never correctness.

use std::ops::{Mul, Sub};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for duplicate detection when merging scales.
pub const DUPLICATE_TOL: f64 = 1e-12;

/// Default threshold below which a step is reported as "dense-approximating"
/// rather than genuinely scattered. Reporting metadata only; no algorithm
/// branches on it.
pub const DENSE_EPSILON: f64 = 1e-3;

/// A finite one-dimensional time scale: strictly increasing points.
#[derive(Debug, Clone)]
pub struct TimeScale1D {
    points: Vec<f64>,
    label: String,
}

/// Equality is on the points; the label is reporting metadata.
impl PartialEq for TimeScale1D {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points
    }
}

/// Declarative construction recipe for a [`TimeScale1D`].
///
/// This is the JSON form used in pipeline configs, e.g.
/// `{"kind": "cantor", "level": 5, "a": 0.0, "b": 1.0}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TimeScaleSpec {
    /// `n` points starting at `t0` with constant spacing `step`.
    Uniform { t0: f64, step: f64, n: usize },
    /// `n` equally spaced points covering `[a, b]` inclusive.
    Interval { a: f64, b: f64, n: usize },
    /// The `2^(level+1)` endpoints of the level-`level` middle-thirds
    /// construction on `[a, b]`.
    Cantor { level: u32, a: f64, b: f64 },
    /// Merge of the parts, sorted and deduplicated.
    Union { parts: Vec<TimeScaleSpec> },
    /// Explicit strictly increasing point list.
    Explicit { points: Vec<f64> },
}

/// Build a time scale from its spec.
pub fn construct_timescale(spec: &TimeScaleSpec) -> Result<TimeScale1D> {
    match spec {
        TimeScaleSpec::Uniform { t0, step, n } => TimeScale1D::uniform(*t0, *step, *n),
        TimeScaleSpec::Interval { a, b, n } => TimeScale1D::interval(*a, *b, *n),
        TimeScaleSpec::Cantor { level, a, b } => TimeScale1D::cantor(*level, *a, *b),
        TimeScaleSpec::Union { parts } => {
            if parts.is_empty() {
                return Err(Error::Construction("union of zero time scales".into()));
            }
            let scales = parts
                .iter()
                .map(construct_timescale)
                .collect::<Result<Vec<_>>>()?;
            TimeScale1D::union(&scales)
        }
        TimeScaleSpec::Explicit { points } => TimeScale1D::from_points(points.clone(), "explicit"),
    }
}

impl TimeScale1D {
    /// Validate an explicit point list: strictly increasing, length >= 2,
    /// no near-duplicates within [`DUPLICATE_TOL`].
    pub fn from_points(points: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Construction(format!(
                "time scale needs at least 2 points, got {}",
                points.len()
            )));
        }
        for w in points.windows(2) {
            // NaN-rejecting: the step must exceed the duplicate tolerance
            if (w[1] - w[0]) <= DUPLICATE_TOL || (w[1] - w[0]).is_nan() {
                return Err(Error::Construction(format!(
                    "points not strictly increasing at {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::Construction("non-finite point".into()));
        }
        Ok(Self {
            points,
            label: label.into(),
        })
    }

    pub fn uniform(t0: f64, step: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Construction(format!("uniform: n = {n} < 2")));
        }
        if step <= 0.0 || step.is_nan() {
            return Err(Error::Construction(format!("uniform: step = {step} <= 0")));
        }
        let points = (0..n).map(|k| t0 + step * k as f64).collect();
        Self::from_points(points, format!("uniform({t0},{step},{n})"))
    }

    pub fn interval(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Construction(format!("interval: n = {n} < 2")));
        }
        if b <= a || a.is_nan() || b.is_nan() {
            return Err(Error::Construction(format!(
                "interval: degenerate [{a}, {b}]"
            )));
        }
        let h = (b - a) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|k| a + h * k as f64).collect();
        points[n - 1] = b; // pin the right endpoint exactly
        Self::from_points(points, format!("interval({a},{b},{n})"))
    }

    /// Endpoints of the level-`level` middle-thirds construction on `[a, b]`.
    /// Level 0 is `{a, b}`; each level splits every interval into its first
    /// and last thirds, so level `k` has `2^(k+1)` points.
    pub fn cantor(level: u32, a: f64, b: f64) -> Result<Self> {
        if b <= a || a.is_nan() || b.is_nan() {
            return Err(Error::Construction(format!(
                "cantor: degenerate [{a}, {b}]"
            )));
        }
        if level > 20 {
            return Err(Error::Construction(format!(
                "cantor: level {level} too deep"
            )));
        }
        let mut intervals = vec![(a, b)];
        for _ in 0..level {
            let mut next = Vec::with_capacity(intervals.len() * 2);
            for (x, y) in intervals {
                let third = (y - x) / 3.0;
                next.push((x, x + third));
                next.push((y - third, y));
            }
            intervals = next;
        }
        let mut points = Vec::with_capacity(intervals.len() * 2);
        for (x, y) in intervals {
            points.push(x);
            points.push(y);
        }
        points.sort_by(|p, q| p.partial_cmp(q).unwrap());
        points.dedup();
        Self::from_points(points, format!("cantor({level},{a},{b})"))
    }

    /// Merge several scales: sort and deduplicate within [`DUPLICATE_TOL`].
    pub fn union(scales: &[TimeScale1D]) -> Result<Self> {
        if scales.is_empty() {
            return Err(Error::Construction("union of zero time scales".into()));
        }
        let mut all: Vec<f64> = scales
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .collect();
        all.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let mut merged: Vec<f64> = Vec::with_capacity(all.len());
        for p in all {
            match merged.last() {
                Some(last) if p - last <= DUPLICATE_TOL => {}
                _ => merged.push(p),
            }
        }
        Self::from_points(merged, "union")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: length >= 2
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn point(&self, i: usize) -> f64 {
        self.points[i]
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.points.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: i,
                len: self.points.len(),
            })
        }
    }

    /// Forward jump at index `i`: `(sigma(t_i), graininess)`.
    ///
    /// At the maximal point the scale is treated as bounded, so `sigma`
    /// returns the point itself with zero graininess.
    pub fn jump(&self, i: usize) -> Result<(f64, f64)> {
        self.check_index(i)?;
        if i + 1 < self.points.len() {
            Ok((self.points[i + 1], self.points[i + 1] - self.points[i]))
        } else {
            Ok((self.points[i], 0.0))
        }
    }

    /// Backward jump at index `i`: `(rho(t_i), backward graininess)`.
    pub fn backward_jump(&self, i: usize) -> Result<(f64, f64)> {
        self.check_index(i)?;
        if i > 0 {
            Ok((self.points[i - 1], self.points[i] - self.points[i - 1]))
        } else {
            Ok((self.points[i], 0.0))
        }
    }

    /// Graininess of the step starting at `i`; zero at the last index.
    pub fn graininess(&self, i: usize) -> f64 {
        if i + 1 < self.points.len() {
            self.points[i + 1] - self.points[i]
        } else {
            0.0
        }
    }

    pub fn max_graininess(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    pub fn min_graininess(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Number of steps with graininess below `dense_epsilon`
    /// ("dense-approximating" steps; reporting metadata only).
    pub fn dense_step_count(&self, dense_epsilon: f64) -> usize {
        self.points
            .windows(2)
            .filter(|w| w[1] - w[0] < dense_epsilon)
            .count()
    }
}

impl Serialize for TimeScale1D {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.points.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TimeScale1D {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let points = Vec::<f64>::deserialize(d)?;
        TimeScale1D::from_points(points, "deserialized").map_err(serde::de::Error::custom)
    }
}

/// Product of two time scales; carrier of every grid quantity.
///
/// Node `(i, j)` refers to `(t1[i], t2[j])`. Direction 1 varies `i`,
/// direction 2 varies `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDomain {
    t1: TimeScale1D,
    t2: TimeScale1D,
}

/// Grid direction selector for partial delta derivatives and jumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    T1,
    T2,
}

impl GridDomain {
    pub fn new(t1: TimeScale1D, t2: TimeScale1D) -> Self {
        Self { t1, t2 }
    }

    pub fn t1(&self) -> &TimeScale1D {
        &self.t1
    }

    pub fn t2(&self) -> &TimeScale1D {
        &self.t2
    }

    pub fn n1(&self) -> usize {
        self.t1.len()
    }

    pub fn n2(&self) -> usize {
        self.t2.len()
    }

    pub fn node_count(&self) -> usize {
        self.n1() * self.n2()
    }

    /// Graininess of the step leaving node `(i, j)` in `dir`.
    pub fn graininess(&self, dir: Direction, i: usize, j: usize) -> f64 {
        match dir {
            Direction::T1 => self.t1.graininess(i),
            Direction::T2 => self.t2.graininess(j),
        }
    }

    /// Does node `(i, j)` have a successor in `dir`?
    pub fn has_successor(&self, dir: Direction, i: usize, j: usize) -> bool {
        match dir {
            Direction::T1 => i + 1 < self.n1(),
            Direction::T2 => j + 1 < self.n2(),
        }
    }
}

/// A value field over a [`GridDomain`], stored row-major (`i` slow, `j` fast).
#[derive(Debug, Clone)]
pub struct GridFunction<V> {
    domain: Arc<GridDomain>,
    values: Vec<V>,
}

impl<V: Copy> GridFunction<V> {
    pub fn fill(domain: Arc<GridDomain>, value: V) -> Self {
        let n = domain.node_count();
        Self {
            domain,
            values: vec![value; n],
        }
    }

    pub fn from_fn(domain: Arc<GridDomain>, mut f: impl FnMut(usize, usize) -> V) -> Self {
        let (n1, n2) = (domain.n1(), domain.n2());
        let mut values = Vec::with_capacity(n1 * n2);
        for i in 0..n1 {
            for j in 0..n2 {
                values.push(f(i, j));
            }
        }
        Self { domain, values }
    }

    pub fn from_values(domain: Arc<GridDomain>, values: Vec<V>) -> Result<Self> {
        if values.len() != domain.node_count() {
            return Err(Error::Construction(format!(
                "grid function has {} values for {} nodes",
                values.len(),
                domain.node_count()
            )));
        }
        Ok(Self { domain, values })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> V {
        self.values[i * self.domain.n2() + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: V) {
        let n2 = self.domain.n2();
        self.values[i * n2 + j] = v;
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn map<W: Copy>(&self, f: impl Fn(V) -> W) -> GridFunction<W> {
        GridFunction {
            domain: Arc::clone(&self.domain),
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }
}

/// Euclidean-style magnitude used for residual statistics.
pub trait Norm {
    fn norm(&self) -> f64;
}

impl Norm for f64 {
    fn norm(&self) -> f64 {
        self.abs()
    }
}

/// Partial delta derivative of a grid function: forward difference divided
/// by graininess. Nodes on the trailing boundary in `dir` have no successor
/// and are `None`.
pub fn delta_derivative<V>(f: &GridFunction<V>, dir: Direction) -> GridFunction<Option<V>>
where
    V: Copy + Sub<Output = V> + Mul<f64, Output = V>,
{
    let domain = Arc::clone(f.domain());
    GridFunction::from_fn(domain.clone(), |i, j| {
        if !domain.has_successor(dir, i, j) {
            return None;
        }
        let eps = domain.graininess(dir, i, j);
        let (fs, f0) = match dir {
            Direction::T1 => (f.get(i + 1, j), f.get(i, j)),
            Direction::T2 => (f.get(i, j + 1), f.get(i, j)),
        };
        Some((fs - f0) * (1.0 / eps))
    })
}

/// Maximum over interior nodes of `|D1 D2 f - D2 D1 f|`.
///
/// Both orderings reduce to the same symmetric second difference on a finite
/// scale, so the result is zero up to rounding for any grid function.
pub fn mixed_delta_commutator<V>(f: &GridFunction<V>) -> Result<f64>
where
    V: Copy + Sub<Output = V> + Mul<f64, Output = V> + Norm,
{
    let d = f.domain();
    if d.n1() < 2 || d.n2() < 2 {
        return Err(Error::GridTooSmall {
            need1: 2,
            need2: 2,
            got1: d.n1(),
            got2: d.n2(),
        });
    }
    let mut worst: f64 = 0.0;
    for i in 0..d.n1() - 1 {
        let inv1 = 1.0 / d.t1().graininess(i);
        for j in 0..d.n2() - 1 {
            let inv2 = 1.0 / d.t2().graininess(j);
            let d2_here = (f.get(i, j + 1) - f.get(i, j)) * inv2;
            let d2_next = (f.get(i + 1, j + 1) - f.get(i + 1, j)) * inv2;
            let d12 = (d2_next - d2_here) * inv1;
            let d1_here = (f.get(i + 1, j) - f.get(i, j)) * inv1;
            let d1_next = (f.get(i + 1, j + 1) - f.get(i, j + 1)) * inv1;
            let d21 = (d1_next - d1_here) * inv2;
            worst = worst.max((d12 - d21).norm());
        }
    }
    Ok(worst)
}
