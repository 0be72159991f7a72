//! Discrete charts: a torus-fibered slab and a cell-centered radial ball.
//!
//! The slab models `[0,1] x T^n` with two boundary faces `x0 = 0` and `x0 = 1`;
//! tangential axes are periodic with period `L`. The ball is one-dimensional in
//! the radial coordinate with cell-centered nodes `r_j = (j + 1/2) h0`, so the
//! coordinate singularity at `r = 0` is never a node and the boundary is the
//! face `r = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the number of axes (normal + up to 6 fiber directions).
pub const MAX_AXES: usize = 7;

/// Fixed-size multi-index; only the first `Chart::naxes()` entries are used.
pub type NodeIndex = [usize; MAX_AXES];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartKind {
    SlabTorus,
    RadialBall,
}

impl ChartKind {
    pub fn label(self) -> &'static str {
        match self {
            ChartKind::SlabTorus => "slab_torus",
            ChartKind::RadialBall => "radial_ball",
        }
    }
}

/// A boundary component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Slab face x0 = 0.
    Lower,
    /// Slab face x0 = 1.
    Upper,
    /// Ball face r = 1.
    Outer,
}

impl Side {
    /// Sign of the outward normal direction along the normal axis.
    pub fn orientation(self) -> f64 {
        match self {
            Side::Lower => -1.0,
            Side::Upper | Side::Outer => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub kind: ChartKind,
    /// Fiber/boundary dimension (the manifold has dimension n + 1).
    pub n: usize,
    /// Nodes along the normal/radial axis.
    pub n0: usize,
    /// Nodes per tangential axis (1 for the ball).
    pub nt: usize,
    /// Normal/radial spacing.
    pub h0: f64,
    /// Tangential spacing (slab only).
    pub ht: f64,
    /// Tangential period L = nt * ht (slab only).
    pub period: f64,
}

impl Chart {
    /// Slab [0,1] x T^n with `n0` normal nodes and `nt` nodes per tangential axis.
    pub fn slab(n: usize, n0: usize, nt: usize, period: f64) -> Result<Self> {
        if n < 1 || n + 1 > MAX_AXES {
            return Err(Error::InvalidParameter(format!(
                "fiber dimension n = {n} outside supported range 1..={}",
                MAX_AXES - 1
            )));
        }
        if n0 < 5 || nt < 4 {
            return Err(Error::InvalidParameter(format!(
                "slab needs n0 >= 5 and nt >= 4 (got n0 = {n0}, nt = {nt})"
            )));
        }
        if period <= 0.0 {
            return Err(Error::InvalidParameter(format!("period {period} <= 0")));
        }
        Ok(Chart {
            kind: ChartKind::SlabTorus,
            n,
            n0,
            nt,
            h0: 1.0 / (n0 as f64 - 1.0),
            ht: period / nt as f64,
            period,
        })
    }

    /// Cell-centered radial ball with `n0` nodes, fibered by round n-spheres.
    pub fn ball(n: usize, n0: usize) -> Result<Self> {
        if n < 1 || n + 1 > MAX_AXES {
            return Err(Error::InvalidParameter(format!(
                "fiber dimension n = {n} outside supported range 1..={}",
                MAX_AXES - 1
            )));
        }
        if n0 < 8 {
            return Err(Error::InvalidParameter(format!(
                "ball needs n0 >= 8 (got {n0})"
            )));
        }
        Ok(Chart {
            kind: ChartKind::RadialBall,
            n,
            n0,
            nt: 1,
            h0: 1.0 / n0 as f64,
            ht: 0.0,
            period: 0.0,
        })
    }

    /// Manifold dimension n + 1.
    pub fn dim(&self) -> usize {
        self.n + 1
    }

    /// Number of grid axes (n + 1 for the slab, 1 for the ball).
    pub fn naxes(&self) -> usize {
        match self.kind {
            ChartKind::SlabTorus => self.n + 1,
            ChartKind::RadialBall => 1,
        }
    }

    pub fn extent(&self, axis: usize) -> usize {
        if axis == 0 {
            self.n0
        } else {
            self.nt
        }
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        if axis == 0 {
            self.h0
        } else {
            self.ht
        }
    }

    pub fn min_spacing(&self) -> f64 {
        match self.kind {
            ChartKind::SlabTorus => self.h0.min(self.ht),
            ChartKind::RadialBall => self.h0,
        }
    }

    pub fn node_count(&self) -> usize {
        (0..self.naxes()).map(|a| self.extent(a)).product()
    }

    /// Nodes on one boundary face (tangential grid size for the slab, 1 for the ball).
    pub fn boundary_node_count(&self) -> usize {
        match self.kind {
            ChartKind::SlabTorus => self.nt.pow(self.n as u32),
            ChartKind::RadialBall => 1,
        }
    }

    pub fn sides(&self) -> &'static [Side] {
        match self.kind {
            ChartKind::SlabTorus => &[Side::Lower, Side::Upper],
            ChartKind::RadialBall => &[Side::Outer],
        }
    }

    /// Flat storage index of a multi-index (row-major, axis 0 slowest).
    pub fn flat(&self, idx: &NodeIndex) -> usize {
        let mut f = 0;
        for a in 0..self.naxes() {
            f = f * self.extent(a) + idx[a];
        }
        f
    }

    pub fn unflat(&self, mut flat: usize) -> NodeIndex {
        let mut idx = [0usize; MAX_AXES];
        for a in (0..self.naxes()).rev() {
            let e = self.extent(a);
            idx[a] = flat % e;
            flat /= e;
        }
        idx
    }

    /// Coordinates of a node.
    pub fn coord(&self, idx: &NodeIndex) -> [f64; MAX_AXES] {
        let mut x = [0.0; MAX_AXES];
        match self.kind {
            ChartKind::SlabTorus => {
                x[0] = idx[0] as f64 * self.h0;
                for a in 1..self.naxes() {
                    x[a] = idx[a] as f64 * self.ht;
                }
            }
            ChartKind::RadialBall => {
                x[0] = (idx[0] as f64 + 0.5) * self.h0;
            }
        }
        x
    }

    /// Iterate all node multi-indices in flat order.
    pub fn nodes(&self) -> NodeIter<'_> {
        NodeIter {
            chart: self,
            next: Some([0; MAX_AXES]),
        }
    }

    /// Whether a node lies on the given boundary side. Ball nodes never do
    /// (the ball boundary is the face r = 1, not a node).
    pub fn on_side(&self, idx: &NodeIndex, side: Side) -> bool {
        match (self.kind, side) {
            (ChartKind::SlabTorus, Side::Lower) => idx[0] == 0,
            (ChartKind::SlabTorus, Side::Upper) => idx[0] == self.n0 - 1,
            _ => false,
        }
    }

    /// Multi-indices of the nodes on a slab boundary face.
    pub fn boundary_nodes(&self, side: Side) -> Result<Vec<NodeIndex>> {
        if self.kind != ChartKind::SlabTorus {
            return Err(Error::ChartUnsupported(
                "boundary node enumeration is a slab operation".into(),
            ));
        }
        let i0 = match side {
            Side::Lower => 0,
            Side::Upper => self.n0 - 1,
            Side::Outer => {
                return Err(Error::ChartUnsupported(
                    "slab has no outer side".into(),
                ))
            }
        };
        let mut out = Vec::with_capacity(self.boundary_node_count());
        let mut tangential = [0usize; MAX_AXES];
        loop {
            let mut idx = [0usize; MAX_AXES];
            idx[0] = i0;
            idx[1..self.naxes()].copy_from_slice(&tangential[1..self.naxes()]);
            out.push(idx);
            // advance tangential odometer
            let mut a = self.naxes() - 1;
            loop {
                if a == 0 {
                    return Ok(out);
                }
                tangential[a] += 1;
                if tangential[a] < self.nt {
                    break;
                }
                tangential[a] = 0;
                a -= 1;
            }
        }
    }

    /// Wrap a tangential index into [0, nt).
    pub fn wrap_t(&self, i: isize) -> usize {
        let nt = self.nt as isize;
        (((i % nt) + nt) % nt) as usize
    }

    /// Neighbor of a node along `axis` at offset `off`, respecting periodicity.
    /// Returns None when the offset leaves the normal/radial range.
    pub fn neighbor(&self, idx: &NodeIndex, axis: usize, off: isize) -> Option<NodeIndex> {
        let mut out = *idx;
        if axis == 0 {
            let i = idx[0] as isize + off;
            if i < 0 || i >= self.n0 as isize {
                return None;
            }
            out[0] = i as usize;
        } else {
            out[axis] = self.wrap_t(idx[axis] as isize + off);
        }
        Some(out)
    }
}

pub struct NodeIter<'a> {
    chart: &'a Chart,
    next: Option<NodeIndex>,
}

impl<'a> Iterator for NodeIter<'a> {
    type Item = NodeIndex;

    fn next(&mut self) -> Option<NodeIndex> {
        let current = self.next?;
        let naxes = self.chart.naxes();
        let mut nxt = current;
        let mut a = naxes;
        loop {
            if a == 0 {
                self.next = None;
                break;
            }
            a -= 1;
            nxt[a] += 1;
            if nxt[a] < self.chart.extent(a) {
                self.next = Some(nxt);
                break;
            }
            nxt[a] = 0;
        }
        Some(current)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slab_spacing_convention() {
        let c = Chart::slab(2, 17, 16, 1.0).unwrap();
        assert!((c.h0 - 1.0 / 16.0).abs() < 1e-15);
        assert!((c.ht - 1.0 / 16.0).abs() < 1e-15);
        assert_eq!(c.node_count(), 17 * 16 * 16);
        assert_eq!(c.boundary_node_count(), 256);
    }

    #[test]
    fn ball_nodes_cell_centered() {
        let c = Chart::ball(2, 10).unwrap();
        assert!((c.h0 - 0.1).abs() < 1e-15);
        let first = c.coord(&[0; MAX_AXES])[0];
        let mut last_idx = [0; MAX_AXES];
        last_idx[0] = 9;
        let last = c.coord(&last_idx)[0];
        assert!((first - 0.05).abs() < 1e-15);
        assert!((last - 0.95).abs() < 1e-15);
    }

    #[test]
    fn flat_unflat_roundtrip() {
        let c = Chart::slab(2, 7, 5, 1.0).unwrap();
        for (k, idx) in c.nodes().enumerate() {
            assert_eq!(c.flat(&idx), k);
            assert_eq!(c.unflat(k), idx);
        }
        assert_eq!(c.nodes().count(), c.node_count());
    }

    #[test]
    fn periodic_wrap() {
        let c = Chart::slab(1, 9, 6, 1.0).unwrap();
        assert_eq!(c.wrap_t(-1), 5);
        assert_eq!(c.wrap_t(6), 0);
        let idx = [3usize, 5, 0, 0, 0, 0, 0];
        let nb = c.neighbor(&idx, 1, 1).unwrap();
        assert_eq!(nb[1], 0);
        assert!(c.neighbor(&idx, 0, 6).is_none());
    }

    #[test]
    fn boundary_enumeration() {
        let c = Chart::slab(2, 6, 4, 1.0).unwrap();
        let lows = c.boundary_nodes(Side::Lower).unwrap();
        assert_eq!(lows.len(), 16);
        assert!(lows.iter().all(|i| i[0] == 0));
        let ups = c.boundary_nodes(Side::Upper).unwrap();
        assert!(ups.iter().all(|i| i[0] == 5));
    }
}
