//! Tensor fields on a chart and the positive-definite metric wrapper.

use std::fmt::Write as _;
use std::path::Path;

use crate::chart::{Chart, ChartKind, NodeIndex, MAX_AXES};
use crate::error::{Error, Result};
use crate::smallmat::{self, Mat};

/// Rank signature of a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rank {
    Scalar,
    Vector,
    OneForm,
    Sym2,
}

impl Rank {
    pub fn ncomp(self, dim: usize) -> usize {
        match self {
            Rank::Scalar => 1,
            Rank::Vector | Rank::OneForm => dim,
            Rank::Sym2 => smallmat::sym_len(dim),
        }
    }

    /// Parity of component `c` under the radial reflection r -> -r.
    /// Even components reflect with +1, odd with -1; this encodes smoothness
    /// of rotationally symmetric tensors at the origin of the ball chart.
    pub fn parity(self, dim: usize, c: usize) -> f64 {
        match self {
            Rank::Scalar => 1.0,
            Rank::Vector | Rank::OneForm => -1.0,
            Rank::Sym2 => {
                let (i, j) = smallmat::sym_pair(dim, c);
                if (i == 0) ^ (j == 0) {
                    -1.0
                } else {
                    1.0
                }
            }
        }
    }
}

/// A tensor field stored node-major: `data[flat * ncomp + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorField {
    pub chart: Chart,
    pub rank: Rank,
    pub data: Vec<f64>,
}

impl SymTensorField {
    pub fn zeros(chart: &Chart, rank: Rank) -> Self {
        let len = chart.node_count() * rank.ncomp(chart.dim());
        SymTensorField {
            chart: chart.clone(),
            rank,
            data: vec![0.0; len],
        }
    }

    /// Build a field by evaluating `f` at every node coordinate.
    pub fn from_fn<F>(chart: &Chart, rank: Rank, mut f: F) -> Self
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let mut out = Self::zeros(chart, rank);
        let ncomp = out.ncomp();
        for idx in chart.nodes() {
            let x = chart.coord(&idx);
            let flat = chart.flat(&idx);
            f(&x[..chart.naxes()], &mut out.data[flat * ncomp..(flat + 1) * ncomp]);
        }
        out
    }

    pub fn ncomp(&self) -> usize {
        self.rank.ncomp(self.chart.dim())
    }

    pub fn at(&self, flat: usize) -> &[f64] {
        let nc = self.ncomp();
        &self.data[flat * nc..(flat + 1) * nc]
    }

    pub fn at_mut(&mut self, flat: usize) -> &mut [f64] {
        let nc = self.ncomp();
        &mut self.data[flat * nc..(flat + 1) * nc]
    }

    /// Symmetric component accessor; (i, j) and (j, i) address the same slot.
    pub fn get_sym(&self, idx: &NodeIndex, i: usize, j: usize) -> f64 {
        debug_assert_eq!(self.rank, Rank::Sym2);
        let flat = self.chart.flat(idx);
        self.at(flat)[smallmat::sym_index(self.chart.dim(), i, j)]
    }

    pub fn set_sym(&mut self, idx: &NodeIndex, i: usize, j: usize, v: f64) {
        debug_assert_eq!(self.rank, Rank::Sym2);
        let flat = self.chart.flat(idx);
        let k = smallmat::sym_index(self.chart.dim(), i, j);
        self.at_mut(flat)[k] = v;
    }

    pub fn sym_matrix(&self, flat: usize) -> Mat {
        smallmat::unpack(self.at(flat), self.chart.dim())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Componentwise a - b over matching charts.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.chart != other.chart || self.rank != other.rank {
            return Err(Error::ChartMismatch("field subtraction".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a -= b;
        }
        Ok(out)
    }

    /// Write the snapshot CSV (multi-index columns, then packed components,
    /// 17 significant digits).
    pub fn write_snapshot(&self, t: f64, path: &Path) -> Result<()> {
        let mut s = String::new();
        writeln!(
            s,
            "# chart={} n={} N0={} Nt={} t={:.16e}",
            self.chart.kind.label(),
            self.chart.n,
            self.chart.n0,
            self.chart.nt,
            t
        )
        .expect("string write");
        let naxes = self.chart.naxes();
        let nc = self.ncomp();
        for idx in self.chart.nodes() {
            let flat = self.chart.flat(&idx);
            for a in 0..naxes {
                if a > 0 {
                    s.push(',');
                }
                write!(s, "{}", idx[a]).expect("string write");
            }
            for c in 0..nc {
                write!(s, ",{:.16e}", self.data[flat * nc + c]).expect("string write");
            }
            s.push('\n');
        }
        std::fs::write(path, s)?;
        Ok(())
    }

    /// Read a symmetric 2-tensor snapshot written by `write_snapshot`.
    /// Slab charts are reconstructed with the default period 1.
    pub fn read_snapshot(path: &Path) -> Result<(Self, f64)> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::SnapshotFormat("empty file".into()))?;
        let mut kind = None;
        let mut n = None;
        let mut n0 = None;
        let mut nt = None;
        let mut t = None;
        for tok in header.trim_start_matches('#').split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::SnapshotFormat(format!("bad header token {tok}")))?;
            match k {
                "chart" => kind = Some(v.to_string()),
                "n" => n = v.parse::<usize>().ok(),
                "N0" => n0 = v.parse::<usize>().ok(),
                "Nt" => nt = v.parse::<usize>().ok(),
                "t" => t = v.parse::<f64>().ok(),
                _ => {}
            }
        }
        let (kind, n, n0, nt, t) = match (kind, n, n0, nt, t) {
            (Some(a), Some(b), Some(c), Some(d), Some(e)) => (a, b, c, d, e),
            _ => return Err(Error::SnapshotFormat("incomplete header".into())),
        };
        let chart = match kind.as_str() {
            "slab_torus" => Chart::slab(n, n0, nt, 1.0)?,
            "radial_ball" => Chart::ball(n, n0)?,
            other => return Err(Error::SnapshotFormat(format!("unknown chart kind {other}"))),
        };
        let mut field = SymTensorField::zeros(&chart, Rank::Sym2);
        let naxes = chart.naxes();
        let nc = field.ncomp();
        let mut seen = 0usize;
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != naxes + nc {
                return Err(Error::SnapshotFormat(format!(
                    "row has {} cells, expected {}",
                    cells.len(),
                    naxes + nc
                )));
            }
            let mut idx: NodeIndex = [0; MAX_AXES];
            for a in 0..naxes {
                idx[a] = cells[a]
                    .parse()
                    .map_err(|_| Error::SnapshotFormat(format!("bad index {}", cells[a])))?;
            }
            let flat = chart.flat(&idx);
            for c in 0..nc {
                field.data[flat * nc + c] = cells[naxes + c]
                    .parse()
                    .map_err(|_| Error::SnapshotFormat(format!("bad value {}", cells[naxes + c])))?;
            }
            seen += 1;
        }
        if seen != chart.node_count() {
            return Err(Error::SnapshotFormat(format!(
                "expected {} rows, found {seen}",
                chart.node_count()
            )));
        }
        Ok((field, t))
    }
}

/// A pointwise positive-definite symmetric 2-tensor with a cached inverse.
#[derive(Debug, Clone)]
pub struct MetricField {
    tensor: SymTensorField,
    inv: Vec<f64>,
}

impl MetricField {
    /// Validates positive definiteness (Cholesky per node) and caches the
    /// inverse; the cache satisfies |g g^-1 - id| <= 1e-12 componentwise.
    pub fn new(tensor: SymTensorField) -> Result<Self> {
        if tensor.rank != Rank::Sym2 {
            return Err(Error::InvalidParameter(
                "metric must be a symmetric 2-tensor".into(),
            ));
        }
        if !tensor.is_finite() {
            return Err(Error::NonFinite("metric field".into()));
        }
        let dim = tensor.chart.dim();
        let nc = tensor.ncomp();
        let mut inv = vec![0.0; tensor.data.len()];
        for flat in 0..tensor.chart.node_count() {
            let m = tensor.sym_matrix(flat);
            let mi = smallmat::invert_spd(&m, dim).ok_or(Error::SingularMetric {
                node: flat,
                detail: "Cholesky factorization failed".into(),
            })?;
            smallmat::pack_into(&mi, dim, &mut inv[flat * nc..(flat + 1) * nc]);
        }
        Ok(MetricField { tensor, inv })
    }

    pub fn from_fn<F>(chart: &Chart, f: F) -> Result<Self>
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        Self::new(SymTensorField::from_fn(chart, Rank::Sym2, f))
    }

    pub fn chart(&self) -> &Chart {
        &self.tensor.chart
    }

    pub fn dim(&self) -> usize {
        self.tensor.chart.dim()
    }

    pub fn tensor(&self) -> &SymTensorField {
        &self.tensor
    }

    pub fn into_tensor(self) -> SymTensorField {
        self.tensor
    }

    pub fn mat(&self, flat: usize) -> Mat {
        self.tensor.sym_matrix(flat)
    }

    pub fn inv_mat(&self, flat: usize) -> Mat {
        smallmat::unpack(self.inv_at(flat), self.dim())
    }

    pub fn inv_at(&self, flat: usize) -> &[f64] {
        let nc = self.tensor.ncomp();
        &self.inv[flat * nc..(flat + 1) * nc]
    }

    /// Overwrite the packed components at one node and refresh its cached
    /// inverse.
    pub fn set_node_values(&mut self, flat: usize, vals: &[f64]) -> Result<()> {
        let dim = self.dim();
        let nc = self.tensor.ncomp();
        self.tensor.at_mut(flat).copy_from_slice(vals);
        let m = self.tensor.sym_matrix(flat);
        let mi = smallmat::invert_spd(&m, dim).ok_or(Error::SingularMetric {
            node: flat,
            detail: "node update left the positive-definite cone".into(),
        })?;
        smallmat::pack_into(&mi, dim, &mut self.inv[flat * nc..(flat + 1) * nc]);
        Ok(())
    }

    /// Smallest metric eigenvalue over all nodes, with the attaining node.
    pub fn min_eigenvalue(&self) -> (f64, usize) {
        let dim = self.dim();
        let mut min = f64::INFINITY;
        let mut argmin = 0;
        for flat in 0..self.chart().node_count() {
            let (lo, _) = smallmat::sym_eigen_range(&self.mat(flat), dim);
            if lo < min {
                min = lo;
                argmin = flat;
            }
        }
        (min, argmin)
    }

    /// Largest eigenvalue of g^-1 over all nodes (parabolic stiffness bound).
    pub fn max_inverse_eigenvalue(&self) -> f64 {
        let dim = self.dim();
        let mut max = 0.0_f64;
        for flat in 0..self.chart().node_count() {
            let (_, hi) = smallmat::sym_eigen_range(&self.inv_mat(flat), dim);
            max = max.max(hi);
        }
        max
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_metric(chart: &Chart) -> MetricField {
        let dim = chart.dim();
        MetricField::from_fn(chart, |_, out| {
            for i in 0..dim {
                out[smallmat::sym_index(dim, i, i)] = 1.0;
            }
        })
        .unwrap()
    }

    #[test]
    fn sym_storage_roundtrip() {
        let chart = Chart::slab(2, 6, 4, 1.0).unwrap();
        let mut f = SymTensorField::zeros(&chart, Rank::Sym2);
        let idx = [3usize, 1, 2, 0, 0, 0, 0];
        f.set_sym(&idx, 0, 2, 1.25);
        assert_eq!(f.get_sym(&idx, 2, 0), 1.25);
        f.set_sym(&idx, 2, 1, -4.0);
        assert_eq!(f.get_sym(&idx, 1, 2), -4.0);
    }

    #[test]
    fn metric_inverse_cache() {
        let chart = Chart::slab(2, 6, 4, 1.0).unwrap();
        let dim = chart.dim();
        let g = MetricField::from_fn(&chart, |x, out| {
            out[smallmat::sym_index(dim, 0, 0)] = 2.0 + 0.3 * (x[0] - 0.5);
            out[smallmat::sym_index(dim, 1, 1)] = 1.5;
            out[smallmat::sym_index(dim, 2, 2)] = 1.0 + 0.1 * x[0];
            out[smallmat::sym_index(dim, 0, 1)] = 0.2;
        })
        .unwrap();
        for flat in 0..chart.node_count() {
            let m = g.mat(flat);
            let mi = g.inv_mat(flat);
            for i in 0..dim {
                for j in 0..dim {
                    let mut s = 0.0;
                    for k in 0..dim {
                        s += m[i][k] * mi[k][j];
                    }
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((s - expect).abs() <= 1e-12, "inverse cache violated");
                }
            }
        }
    }

    #[test]
    fn metric_rejects_indefinite() {
        let chart = Chart::slab(1, 6, 4, 1.0).unwrap();
        let dim = chart.dim();
        let bad = SymTensorField::from_fn(&chart, Rank::Sym2, |x, out| {
            out[smallmat::sym_index(dim, 0, 0)] = 1.0;
            // flips sign halfway across the slab
            out[smallmat::sym_index(dim, 1, 1)] = 0.5 - x[0];
        });
        let err = MetricField::new(bad).unwrap_err();
        match err {
            Error::SingularMetric { node, .. } => {
                let idx = chart.unflat(node);
                assert!(chart.coord(&idx)[0] >= 0.5);
            }
            other => panic!("expected SingularMetric, got {other:?}"),
        }
    }

    #[test]
    fn snapshot_roundtrip_bitexact() {
        let dir = tempfile::tempdir().unwrap();
        let chart = Chart::ball(2, 10).unwrap();
        let dim = chart.dim();
        let f = SymTensorField::from_fn(&chart, Rank::Sym2, |x, out| {
            out[smallmat::sym_index(dim, 0, 0)] = 1.0 + x[0] / 3.0;
            out[smallmat::sym_index(dim, 1, 1)] = (x[0] * 1.7).sin().powi(2) + 0.5;
            out[smallmat::sym_index(dim, 2, 2)] = out[smallmat::sym_index(dim, 1, 1)];
        });
        let p = dir.path().join("snap.csv");
        f.write_snapshot(0.125, &p).unwrap();
        let (g, t) = SymTensorField::read_snapshot(&p).unwrap();
        assert_eq!(t, 0.125);
        assert_eq!(f.data, g.data);
        // writing again produces an identical payload
        let p2 = dir.path().join("snap2.csv");
        g.write_snapshot(t, &p2).unwrap();
        assert_eq!(
            std::fs::read(&p).unwrap(),
            std::fs::read(&p2).unwrap()
        );
        let _ = flat_metric(&chart);
    }
}
