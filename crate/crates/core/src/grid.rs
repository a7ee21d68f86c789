//! Uniform 1D mesh over the truncation box `[-L, L]` and its index sets.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// Half-open interval of node indices `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexRange {
    pub start: usize,
    pub end: usize,
}

impl IndexRange {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i < self.end
    }

    pub fn iter(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn intersects(&self, other: &IndexRange) -> bool {
        self.start < other.end && other.start < self.end
    }

    /// `self` is contained in `other` without sharing either end node.
    pub fn strictly_inside(&self, other: &IndexRange) -> bool {
        self.start > other.start && self.end < other.end
    }

    pub fn is_subset_of(&self, other: &IndexRange) -> bool {
        self.start >= other.start && self.end <= other.end
    }
}

/// Node range of `(a, b)` on the mesh of `n_nodes` nodes over `[-L, L]`,
/// widened to the enclosing nodes and clamped to the box.
pub fn snap_interval<T: Scalar>(half_width: T, n_nodes: usize, (a, b): (T, T)) -> Result<IndexRange> {
    if !(a < b) {
        return Err(Error::InvalidGrid(format!("interval ({a}, {b}) is empty or reversed")));
    }
    if n_nodes < 2 || !(half_width > T::zero()) {
        return Err(Error::InvalidGrid("mesh needs at least two nodes and a positive half width".into()));
    }
    let h = half_width * T::lit(2.0) / T::from_usize_lossy(n_nodes - 1);
    let slack = T::lit(1e-9);
    let last = T::from_usize_lossy(n_nodes - 1);
    let lo = ((a + half_width) / h + slack).floor().max(T::zero()).min(last).to_f64_lossy() as usize;
    let hi = ((b + half_width) / h - slack).ceil().max(T::zero()).min(last).to_f64_lossy() as usize;
    Ok(IndexRange::new(lo, hi + 1))
}

/// Uniform mesh `x_i = -L + i h`, `h = 2L / (n_nodes - 1)`, with the domain
/// `omega`, the excitation window `w1`, the measurement window `w2` and an
/// optional obstacle strictly inside `omega`.
///
/// Functions are taken to vanish outside the stored nodes, so neither `omega`
/// nor the windows may touch the two end nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    half_width: T,
    n_nodes: usize,
    spacing: T,
    omega: IndexRange,
    w1: IndexRange,
    w2: IndexRange,
    obstacle: Option<IndexRange>,
}

impl<T: Scalar> Grid<T> {
    pub fn new(
        half_width: T,
        n_nodes: usize,
        omega: IndexRange,
        w1: IndexRange,
        w2: IndexRange,
        obstacle: Option<IndexRange>,
    ) -> Result<Self> {
        let mut problems = Vec::new();
        if !(half_width > T::zero()) || !half_width.is_finite() {
            problems.push(format!("half width must be positive and finite, got {half_width}"));
        }
        if n_nodes < 5 || n_nodes.is_multiple_of(2) {
            problems.push(format!("n_nodes must be odd and at least 5, got {n_nodes}"));
        }
        let inner = IndexRange::new(1, n_nodes.saturating_sub(1));
        for (name, r) in [("omega", &omega), ("w1", &w1), ("w2", &w2)] {
            if r.is_empty() {
                problems.push(format!("{name} is empty"));
            } else if !r.is_subset_of(&inner) {
                problems.push(format!(
                    "{name} = [{}, {}) must stay inside the open box (nodes 1..{})",
                    r.start,
                    r.end,
                    n_nodes.saturating_sub(1)
                ));
            }
        }
        if w1.intersects(&omega) {
            problems.push("w1 overlaps omega; excitation window must lie in the exterior".into());
        }
        if w2.intersects(&omega) {
            problems.push("w2 overlaps omega; measurement window must lie in the exterior".into());
        }
        if let Some(d) = obstacle {
            if d.is_empty() {
                problems.push("obstacle interval is empty".into());
            } else if !d.strictly_inside(&omega) {
                problems.push(format!(
                    "obstacle [{}, {}) must lie strictly inside omega [{}, {})",
                    d.start, d.end, omega.start, omega.end
                ));
            }
        }
        if !problems.is_empty() {
            return Err(Error::InvalidGrid(problems.join("; ")));
        }
        let spacing = half_width * T::lit(2.0) / T::from_usize_lossy(n_nodes - 1);
        Ok(Self { half_width, n_nodes, spacing, omega, w1, w2, obstacle })
    }

    /// Builds a grid from physical intervals, snapping each one outward to
    /// the enclosing nodes.
    pub fn from_physical(
        half_width: T,
        n_nodes: usize,
        omega: (T, T),
        w1: (T, T),
        w2: (T, T),
        obstacle: Option<(T, T)>,
    ) -> Result<Self> {
        if n_nodes < 2 || !(half_width > T::zero()) {
            return Grid::new(half_width, n_nodes, IndexRange::new(0, 0), IndexRange::new(0, 0), IndexRange::new(0, 0), None);
        }
        let snap = |r| snap_interval(half_width, n_nodes, r);
        let obstacle = match obstacle {
            Some(d) => Some(snap(d)?),
            None => None,
        };
        Grid::new(half_width, n_nodes, snap(omega)?, snap(w1)?, snap(w2)?, obstacle)
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn omega(&self) -> IndexRange {
        self.omega
    }

    pub fn w1(&self) -> IndexRange {
        self.w1
    }

    pub fn w2(&self) -> IndexRange {
        self.w2
    }

    pub fn obstacle(&self) -> Option<IndexRange> {
        self.obstacle
    }

    pub fn x(&self, i: usize) -> T {
        -self.half_width + T::from_usize_lossy(i) * self.spacing
    }

    pub fn coordinates(&self) -> Vec<T> {
        (0..self.n_nodes).map(|i| self.x(i)).collect()
    }

    pub fn in_obstacle(&self, i: usize) -> bool {
        self.obstacle.is_some_and(|d| d.contains(i))
    }

    pub fn is_exterior(&self, i: usize) -> bool {
        !self.omega.contains(i)
    }

    /// Indices of the free nodes: `omega` minus the obstacle.
    pub fn unknowns(&self) -> Vec<usize> {
        self.omega.iter().filter(|&i| !self.in_obstacle(i)).collect()
    }

    /// Same grid with the obstacle replaced (validated again).
    pub fn with_obstacle(&self, obstacle: Option<IndexRange>) -> Result<Self> {
        Grid::new(self.half_width, self.n_nodes, self.omega, self.w1, self.w2, obstacle)
    }

    /// Same grid with different windows (validated again).
    pub fn with_windows(&self, w1: IndexRange, w2: IndexRange) -> Result<Self> {
        Grid::new(self.half_width, self.n_nodes, self.omega, w1, w2, self.obstacle)
    }

    /// Structural equality of the node set (box and count), ignoring index sets.
    pub fn same_nodes(&self, other: &Grid<T>) -> bool {
        self.n_nodes == other.n_nodes && self.half_width == other.half_width
    }
}
