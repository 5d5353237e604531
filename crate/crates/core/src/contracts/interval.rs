use std::fmt;

use crate::error::{Error, Result};

/// A finite union of closed real intervals, kept sorted and with overlapping
/// or touching pieces merged. Infinite endpoints stand for unbounded sides.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSet {
    parts: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { parts: Vec::new() }
    }

    pub fn full() -> Self {
        IntervalSet { parts: vec![(f64::NEG_INFINITY, f64::INFINITY)] }
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::from_parts([(lo, hi)])
    }

    pub fn point(x: f64) -> Self {
        IntervalSet { parts: vec![(x, x)] }
    }

    pub fn from_parts(parts: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut v: Vec<(f64, f64)> = parts.into_iter().collect();
        for &(lo, hi) in &v {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(Error::Value(format!("[{lo}, {hi}] is not an interval")));
            }
        }
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut parts: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (lo, hi) in v {
            match parts.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => parts.push((lo, hi)),
            }
        }
        Ok(IntervalSet { parts })
    }

    pub fn parts(&self) -> &[(f64, f64)] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.parts == [(f64::NEG_INFINITY, f64::INFINITY)]
    }

    pub fn contains(&self, x: f64) -> bool {
        self.parts.iter().any(|&(lo, hi)| lo <= x && x <= hi)
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.parts.len() && j < other.parts.len() {
            let (a, b) = (self.parts[i], other.parts[j]);
            let lo = a.0.max(b.0);
            let hi = a.1.min(b.1);
            if lo <= hi {
                out.push((lo, hi));
            }
            if a.1 < b.1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet { parts: out }
    }

    pub fn is_subset(&self, other: &IntervalSet) -> bool {
        self.intersect(other) == *self
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "∅");
        }
        let pieces: Vec<String> = self
            .parts
            .iter()
            .map(|&(lo, hi)| if lo == hi { format!("{{{lo}}}") } else { format!("[{lo}, {hi}]") })
            .collect();
        write!(f, "{}", pieces.join(" ∪ "))
    }
}
