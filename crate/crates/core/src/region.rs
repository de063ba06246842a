//! Finite unions of open intervals on the real line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite union of disjoint open intervals, kept sorted.
///
/// Endpoints may be infinite. Touching intervals are merged on
/// construction, so sets are only meaningful up to finitely many points.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct RegionSet {
    intervals: Vec<(f64, f64)>,
}

impl RegionSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn whole_line() -> Self {
        Self { intervals: vec![(f64::NEG_INFINITY, f64::INFINITY)] }
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![(a, b)])
    }

    /// Builds a set from arbitrary intervals. Empty intervals (`a >= b`) are
    /// dropped; NaN endpoints are rejected.
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.iter().any(|(a, b)| a.is_nan() || b.is_nan()) {
            return Err(Error::Argument("NaN interval endpoint".into()));
        }
        intervals.retain(|(a, b)| a < b);
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (a, b) in intervals {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        Ok(Self { intervals: merged })
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Lebesgue measure (may be infinite).
    pub fn length(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a < x && x < b)
    }

    /// Distance from `x` to the closure of the set.
    pub fn distance_to(&self, x: f64) -> f64 {
        self.intervals
            .iter()
            .map(|&(a, b)| {
                if x < a {
                    a - x
                } else if x > b {
                    x - b
                } else {
                    0.0
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn union(&self, other: &RegionSet) -> RegionSet {
        let mut all = self.intervals.clone();
        all.extend_from_slice(&other.intervals);
        RegionSet::new(all).expect("finite endpoints")
    }

    pub fn intersection(&self, other: &RegionSet) -> RegionSet {
        let mut out = Vec::new();
        for &(a, b) in &self.intervals {
            for &(c, d) in &other.intervals {
                let lo = a.max(c);
                let hi = b.min(d);
                if lo < hi {
                    out.push((lo, hi));
                }
            }
        }
        RegionSet::new(out).expect("finite endpoints")
    }

    /// Complement in the whole line (interior of it, i.e. boundary points
    /// are excluded from both the set and its complement).
    pub fn complement(&self) -> RegionSet {
        let mut out = Vec::with_capacity(self.intervals.len() + 1);
        let mut cursor = f64::NEG_INFINITY;
        for &(a, b) in &self.intervals {
            if cursor < a {
                out.push((cursor, a));
            }
            cursor = b;
        }
        if cursor < f64::INFINITY {
            out.push((cursor, f64::INFINITY));
        }
        RegionSet { intervals: out }
    }

    /// Complement restricted to the open window `(lo, hi)`.
    pub fn complement_within(&self, lo: f64, hi: f64) -> RegionSet {
        self.complement().intersection(&RegionSet { intervals: vec![(lo, hi)] })
    }

    /// Hausdorff distance between the closures of two sets.
    ///
    /// Two empty sets are at distance zero; an empty and a non-empty set are
    /// infinitely far apart.
    pub fn hausdorff(&self, other: &RegionSet) -> f64 {
        match (self.is_empty(), other.is_empty()) {
            (true, true) => 0.0,
            (true, false) | (false, true) => f64::INFINITY,
            _ => directed_hausdorff(self, other).max(directed_hausdorff(other, self)),
        }
    }
}

/// sup over x in closure(a) of dist(x, b). The supremum is attained at an
/// endpoint of `a` or at the midpoint of a gap of `b` lying inside `a`.
fn directed_hausdorff(a: &RegionSet, b: &RegionSet) -> f64 {
    let mut worst = 0.0f64;
    for &(lo, hi) in &a.intervals {
        worst = worst.max(b.distance_to(lo)).max(b.distance_to(hi));
        for w in b.intervals.windows(2) {
            let gap_lo = w[0].1;
            let gap_hi = w[1].0;
            let mid = 0.5 * (gap_lo + gap_hi);
            if lo <= mid && mid <= hi {
                worst = worst.max(b.distance_to(mid));
            }
        }
    }
    worst
}

impl TryFrom<Vec<(f64, f64)>> for RegionSet {
    type Error = Error;

    fn try_from(value: Vec<(f64, f64)>) -> Result<Self> {
        RegionSet::new(value)
    }
}

impl From<RegionSet> for Vec<(f64, f64)> {
    fn from(value: RegionSet) -> Self {
        value.intervals
    }
}
