//! Differential-geometric operators on metric fields: connection, Ricci and
//! Riemann curvature, boundary normal / mean curvature (two routes) and its
//! linearization, the Bianchi operator, the gauge vector field, Lie
//! derivatives, and the two assemblies of the evolution right-hand side.
//!
//! Slab charts use the generic coordinate formulas; ball charts dispatch to
//! the rotationally symmetric closed forms in [`crate::warped`].

use crate::chart::{Chart, ChartKind, NodeIndex, Side, MAX_AXES};
use crate::error::{Error, Result};
use crate::field::{MetricField, Rank, SymTensorField};
use crate::smallmat::{self, Mat};
use crate::stencil::{self, partial_derivative};
use crate::warped;

pub type Gamma3 = [[[f64; MAX_AXES]; MAX_AXES]; MAX_AXES];

/// Christoffel symbols per node, `data[node][k * symlen + sym(i,j)]`.
#[derive(Debug, Clone)]
pub struct ConnectionField {
    pub chart: Chart,
    pub data: Vec<f64>,
}

impl ConnectionField {
    pub fn ncomp(&self) -> usize {
        let dim = self.chart.dim();
        dim * smallmat::sym_len(dim)
    }

    pub fn gamma(&self, flat: usize, k: usize, i: usize, j: usize) -> f64 {
        let dim = self.chart.dim();
        let sl = smallmat::sym_len(dim);
        self.data[flat * dim * sl + k * sl + smallmat::sym_index(dim, i, j)]
    }

    pub fn gamma3(&self, flat: usize) -> Gamma3 {
        let dim = self.chart.dim();
        let mut out = [[[0.0; MAX_AXES]; MAX_AXES]; MAX_AXES];
        for k in 0..dim {
            for i in 0..dim {
                for j in i..dim {
                    let v = self.gamma(flat, k, i, j);
                    out[k][i][j] = v;
                    out[k][j][i] = v;
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// First derivatives of a symmetric 2-tensor field along every axis.
pub(crate) fn first_derivatives(f: &SymTensorField) -> Result<Vec<SymTensorField>> {
    (0..f.chart.naxes())
        .map(|a| partial_derivative(f, a, 1))
        .collect()
}

/// Unpack the per-node derivative matrices D_k g. Axes beyond the grid
/// dimension (never present on the slab) stay zero.
pub(crate) fn dg_at(dg: &[SymTensorField], flat: usize, dim: usize) -> [Mat; MAX_AXES] {
    let mut out = [[[0.0; MAX_AXES]; MAX_AXES]; MAX_AXES];
    for (k, f) in dg.iter().enumerate() {
        out[k] = smallmat::unpack(f.at(flat), dim);
    }
    out
}

// ---------------------------------------------------------------------------
// pointwise jet functions (shared with the boundary Newton solver)
// ---------------------------------------------------------------------------

/// First-order jet of the metric at a node: values, inverse, and the stencil
/// first derivatives along every coordinate direction.
#[derive(Debug, Clone)]
pub(crate) struct Jet1 {
    pub dim: usize,
    pub g: Mat,
    pub ginv: Mat,
    pub dg: [Mat; MAX_AXES],
}

impl Jet1 {
    pub fn new(dim: usize, g: Mat, dg: [Mat; MAX_AXES]) -> Result<Self> {
        let ginv = smallmat::invert_spd(&g, dim).ok_or(Error::SingularMetric {
            node: usize::MAX,
            detail: "jet metric not positive definite".into(),
        })?;
        Ok(Jet1 { dim, g, ginv, dg })
    }

    pub fn christoffel(&self) -> Gamma3 {
        let d = self.dim;
        let mut out = [[[0.0; MAX_AXES]; MAX_AXES]; MAX_AXES];
        for k in 0..d {
            for i in 0..d {
                for j in i..d {
                    let mut s = 0.0;
                    for l in 0..d {
                        s += self.ginv[k][l]
                            * (self.dg[i][j][l] + self.dg[j][i][l] - self.dg[l][i][j]);
                    }
                    out[k][i][j] = 0.5 * s;
                    out[k][j][i] = 0.5 * s;
                }
            }
        }
        out
    }

    /// Outward unit normal nu^i = sigma g^{0i} / sqrt(g^{00}).
    pub fn normal(&self, sigma: f64) -> Result<[f64; MAX_AXES]> {
        let g00 = self.ginv[0][0];
        if g00 <= 0.0 {
            return Err(Error::InvalidNormal {
                node: usize::MAX,
                g00inv: g00,
            });
        }
        let s = g00.sqrt();
        let mut nu = [0.0; MAX_AXES];
        for i in 0..self.dim {
            nu[i] = sigma * self.ginv[0][i] / s;
        }
        Ok(nu)
    }

    /// Inverse of the tangential block; entries indexed by full coordinates
    /// (1..dim), row/column 0 unused.
    fn tangential_inverse(&self) -> Result<Mat> {
        let d = self.dim;
        let mut tb = [[0.0; MAX_AXES]; MAX_AXES];
        for a in 1..d {
            for b in 1..d {
                tb[a - 1][b - 1] = self.g[a][b];
            }
        }
        let tbi = smallmat::invert_spd(&tb, d - 1).ok_or(Error::SingularMetric {
            node: usize::MAX,
            detail: "tangential block not positive definite".into(),
        })?;
        let mut out = [[0.0; MAX_AXES]; MAX_AXES];
        for a in 1..d {
            for b in 1..d {
                out[a][b] = tbi[a - 1][b - 1];
            }
        }
        Ok(out)
    }

    /// Derivative of g^{pq} in tangential direction `a` (algebraic in dg).
    fn dginv(&self, a: usize, p: usize, q: usize) -> f64 {
        let d = self.dim;
        let mut s = 0.0;
        for k in 0..d {
            for l in 0..d {
                s -= self.ginv[p][k] * self.dg[a][k][l] * self.ginv[l][q];
            }
        }
        s
    }

    /// d_a nu^i expanded algebraically.
    fn dnormal(&self, a: usize, i: usize, sigma: f64) -> f64 {
        let s = self.ginv[0][0].sqrt();
        sigma * (self.dginv(a, 0, i) / s - 0.5 * self.ginv[0][i] * self.dginv(a, 0, 0) / (s * s * s))
    }

    /// Mean curvature from the local-coordinate closed form (the returned
    /// route); `sigma` selects the boundary side orientation.
    pub fn mean_curvature(&self, sigma: f64) -> Result<f64> {
        let d = self.dim;
        let nu = self.normal(sigma)?;
        let gti = self.tangential_inverse()?;
        let s = self.ginv[0][0].sqrt();
        let mut h2 = 0.0;
        for a in 1..d {
            for b in 1..d {
                let mut acc = 0.0;
                for i in 0..d {
                    acc += nu[i] * self.dg[i][a][b];
                }
                h2 += gti[a][b] * acc;
            }
        }
        for a in 1..d {
            for k in 0..d {
                for l in 0..d {
                    let mut coeff = 2.0 * self.ginv[0][l] * self.ginv[a][k] / s
                        - self.ginv[0][l] * self.ginv[0][k] * self.ginv[0][a] / (s * s * s);
                    for b in 1..d {
                        coeff += gti[a][b] * self.g[0][b] * self.ginv[0][l] * self.ginv[0][k] / s;
                    }
                    h2 += -sigma * coeff * self.dg[a][k][l];
                }
            }
        }
        Ok(0.5 * h2)
    }

    /// Linearized mean curvature in direction (h, dh). Every spatial
    /// derivative is expanded down to the stencil values of g and h, so this
    /// is the exact directional derivative of `mean_curvature`.
    pub fn mean_curvature_linearized(
        &self,
        h: &Mat,
        dh: &[Mat; MAX_AXES],
        sigma: f64,
    ) -> Result<f64> {
        let d = self.dim;
        let nu = self.normal(sigma)?;
        let gti = self.tangential_inverse()?;
        let gam = self.christoffel();

        // tr_{gT} (nabla_nu h)
        let mut t1 = 0.0;
        for a in 1..d {
            for b in 1..d {
                let mut inner = 0.0;
                for k in 0..d {
                    let mut e = dh[k][a][b];
                    for l in 0..d {
                        e -= gam[l][k][a] * h[l][b] + gam[l][k][b] * h[a][l];
                    }
                    inner += nu[k] * e;
                }
                t1 += gti[a][b] * inner;
            }
        }

        // -2 div_{bd}(h(nu)^T): boundary connection from the tangential block
        let mut hnu = [0.0; MAX_AXES];
        for b in 0..d {
            let mut s = 0.0;
            for i in 0..d {
                s += h[i][b] * nu[i];
            }
            hnu[b] = s;
        }
        let mut t2 = 0.0;
        for a in 1..d {
            for b in 1..d {
                let mut da = 0.0;
                for i in 0..d {
                    da += dh[a][i][b] * nu[i] + h[i][b] * self.dnormal(a, i, sigma);
                }
                let mut cov = da;
                for m in 1..d {
                    let mut gbar = 0.0;
                    for l in 1..d {
                        gbar += gti[m][l]
                            * (self.dg[a][b][l] + self.dg[b][a][l] - self.dg[l][a][b]);
                    }
                    cov -= 0.5 * gbar * hnu[m];
                }
                t2 += -2.0 * gti[a][b] * cov;
            }
        }

        // -h(nu, nu) H(g)
        let mut hnn = 0.0;
        for i in 0..d {
            for j in 0..d {
                hnn += h[i][j] * nu[i] * nu[j];
            }
        }
        let t3 = -hnn * self.mean_curvature(sigma)?;

        Ok(0.5 * (t1 + t2) + 0.5 * t3)
    }

    /// Lowered gauge field W_l = g_{lr} g^{pq} (Gamma - Gamma~)^r_{pq}.
    pub fn deturck_w_lower(&self, gamma_bg: &Gamma3) -> [f64; MAX_AXES] {
        let d = self.dim;
        let gam = self.christoffel();
        let mut w_up = [0.0; MAX_AXES];
        for r in 0..d {
            let mut s = 0.0;
            for p in 0..d {
                for q in 0..d {
                    s += self.ginv[p][q] * (gam[r][p][q] - gamma_bg[r][p][q]);
                }
            }
            w_up[r] = s;
        }
        let mut w = [0.0; MAX_AXES];
        for l in 0..d {
            let mut s = 0.0;
            for r in 0..d {
                s += self.g[l][r] * w_up[r];
            }
            w[l] = s;
        }
        w
    }
}

/// Jet of the metric field at a grid node, using the precomputed derivative
/// fields.
pub(crate) fn jet_at(g: &MetricField, dg: &[SymTensorField], flat: usize) -> Jet1 {
    let dim = g.dim();
    Jet1 {
        dim,
        g: g.mat(flat),
        ginv: g.inv_mat(flat),
        dg: dg_at(dg, flat, dim),
    }
}

// ---------------------------------------------------------------------------
// connection and curvature
// ---------------------------------------------------------------------------

fn require_slab(chart: &Chart, what: &str) -> Result<()> {
    if chart.kind != ChartKind::SlabTorus {
        return Err(Error::ChartUnsupported(format!(
            "{what} uses the generic coordinate formulas and needs a slab chart"
        )));
    }
    Ok(())
}

/// Christoffel symbols of g (slab charts).
pub fn christoffel(g: &MetricField) -> Result<ConnectionField> {
    require_slab(g.chart(), "christoffel")?;
    let chart = g.chart().clone();
    let dim = chart.dim();
    let sl = smallmat::sym_len(dim);
    let dg = first_derivatives(g.tensor())?;
    let mut data = vec![0.0; chart.node_count() * dim * sl];
    for flat in 0..chart.node_count() {
        let ginv = g.inv_mat(flat);
        let d = dg_at(&dg, flat, dim);
        for k in 0..dim {
            for i in 0..dim {
                for j in i..dim {
                    let mut s = 0.0;
                    for l in 0..dim {
                        s += ginv[k][l] * (d[i][j][l] + d[j][i][l] - d[l][i][j]);
                    }
                    data[flat * dim * sl + k * sl + smallmat::sym_index(dim, i, j)] = 0.5 * s;
                }
            }
        }
    }
    Ok(ConnectionField { chart, data })
}

fn connection_derivatives(gam: &ConnectionField) -> Result<Vec<Vec<f64>>> {
    let nc = gam.ncomp();
    let parity = |_c: usize| 1.0;
    (0..gam.chart.naxes())
        .map(|a| stencil::derive_raw(&gam.chart, &gam.data, nc, &parity, a, 1))
        .collect()
}

fn dgamma_at(
    gam: &ConnectionField,
    dgam: &[Vec<f64>],
    flat: usize,
) -> [[[[f64; MAX_AXES]; MAX_AXES]; MAX_AXES]; MAX_AXES] {
    let dim = gam.chart.dim();
    let sl = smallmat::sym_len(dim);
    let mut out = [[[[0.0; MAX_AXES]; MAX_AXES]; MAX_AXES]; MAX_AXES];
    for (a, d) in dgam.iter().enumerate() {
        for k in 0..dim {
            for i in 0..dim {
                for j in i..dim {
                    let v = d[flat * dim * sl + k * sl + smallmat::sym_index(dim, i, j)];
                    out[a][k][i][j] = v;
                    out[a][k][j][i] = v;
                }
            }
        }
    }
    out
}

/// Ricci tensor. Slab charts assemble the standard Gamma formula; ball charts
/// use the rotationally symmetric closed form.
pub fn ricci(g: &MetricField) -> Result<SymTensorField> {
    match g.chart().kind {
        ChartKind::SlabTorus => {
            let gam = christoffel(g)?;
            ricci_from_connection(g, &gam)
        }
        ChartKind::RadialBall => {
            let (phi, psi) = ball_profiles(g)?;
            let chart = g.chart();
            let dim = chart.dim();
            let (rr, ff) = warped::ricci_components(&phi, &psi, chart.n, chart.h0);
            let mut out = SymTensorField::zeros(chart, Rank::Sym2);
            for j in 0..chart.n0 {
                let row = out.at_mut(j);
                row[smallmat::sym_index(dim, 0, 0)] = rr[j];
                for a in 1..dim {
                    row[smallmat::sym_index(dim, a, a)] = ff[j];
                }
            }
            Ok(out)
        }
    }
}

pub(crate) fn ricci_from_connection(
    g: &MetricField,
    gam: &ConnectionField,
) -> Result<SymTensorField> {
    let chart = g.chart();
    let dim = chart.dim();
    let dgam = connection_derivatives(gam)?;
    let mut out = SymTensorField::zeros(chart, Rank::Sym2);
    for flat in 0..chart.node_count() {
        let gm = gam.gamma3(flat);
        let dgm = dgamma_at(gam, &dgam, flat);
        let raw = |i: usize, j: usize| -> f64 {
            let mut s = 0.0;
            for k in 0..dim {
                s += dgm[k][k][i][j] - dgm[i][k][k][j];
                for l in 0..dim {
                    s += gm[k][k][l] * gm[l][i][j] - gm[k][i][l] * gm[l][k][j];
                }
            }
            s
        };
        let row = out.at_mut(flat);
        for i in 0..dim {
            for j in i..dim {
                row[smallmat::sym_index(dim, i, j)] = 0.5 * (raw(i, j) + raw(j, i));
            }
        }
    }
    Ok(out)
}

/// Extract (phi, psi) arrays from a rotationally symmetric ball metric.
pub(crate) fn ball_profiles(g: &MetricField) -> Result<(Vec<f64>, Vec<f64>)> {
    if g.chart().kind != ChartKind::RadialBall {
        return Err(Error::ChartUnsupported("ball profile extraction".into()));
    }
    let dim = g.dim();
    let scale = g.tensor().max_abs().max(1.0);
    let mut phi = Vec::with_capacity(g.chart().n0);
    let mut psi = Vec::with_capacity(g.chart().n0);
    for flat in 0..g.chart().n0 {
        let m = g.mat(flat);
        for i in 0..dim {
            for j in i + 1..dim {
                if m[i][j].abs() > 1e-10 * scale {
                    return Err(Error::ChartUnsupported(format!(
                        "ball metric must be diagonal in the radial frame (node {flat})"
                    )));
                }
            }
        }
        for a in 2..dim {
            if (m[a][a] - m[1][1]).abs() > 1e-10 * scale {
                return Err(Error::ChartUnsupported(format!(
                    "ball metric must be isotropic on the fiber (node {flat})"
                )));
            }
        }
        phi.push(m[0][0].sqrt());
        psi.push(m[1][1].sqrt());
    }
    Ok((phi, psi))
}

// ---------------------------------------------------------------------------
// boundary geometry
// ---------------------------------------------------------------------------

fn side_sigma(chart: &Chart, side: Side) -> Result<f64> {
    match (chart.kind, side) {
        (ChartKind::SlabTorus, Side::Lower) => Ok(-1.0),
        (ChartKind::SlabTorus, Side::Upper) => Ok(1.0),
        (ChartKind::RadialBall, Side::Outer) => Ok(1.0),
        _ => Err(Error::ChartUnsupported(format!(
            "side {side:?} does not exist on a {:?} chart",
            chart.kind
        ))),
    }
}

/// Outward unit normal per boundary node (single face value on the ball).
pub fn outward_normal(g: &MetricField, side: Side) -> Result<Vec<[f64; MAX_AXES]>> {
    let sigma = side_sigma(g.chart(), side)?;
    match g.chart().kind {
        ChartKind::SlabTorus => {
            let chart = g.chart();
            let dim = chart.dim();
            let mut out = Vec::with_capacity(chart.boundary_node_count());
            for idx in chart.boundary_nodes(side)? {
                let flat = chart.flat(&idx);
                let ginv = g.inv_mat(flat);
                let g00 = ginv[0][0];
                if g00 <= 0.0 {
                    return Err(Error::InvalidNormal { node: flat, g00inv: g00 });
                }
                let s = g00.sqrt();
                let mut nu = [0.0; MAX_AXES];
                for i in 0..dim {
                    nu[i] = sigma * ginv[0][i] / s;
                }
                out.push(nu);
            }
            Ok(out)
        }
        ChartKind::RadialBall => {
            let (phi, _) = ball_profiles(g)?;
            let mut nu = [0.0; MAX_AXES];
            nu[0] = 1.0 / warped::face_value(&phi);
            Ok(vec![nu])
        }
    }
}

/// Unit normal extended to every node of the slab (for the Lie-derivative
/// route of the mean curvature).
pub fn normal_field(g: &MetricField, side: Side) -> Result<SymTensorField> {
    require_slab(g.chart(), "normal_field")?;
    let sigma = side_sigma(g.chart(), side)?;
    let chart = g.chart().clone();
    let dim = chart.dim();
    let mut out = SymTensorField::zeros(&chart, Rank::Vector);
    for flat in 0..chart.node_count() {
        let ginv = g.inv_mat(flat);
        let g00 = ginv[0][0];
        if g00 <= 0.0 {
            return Err(Error::InvalidNormal { node: flat, g00inv: g00 });
        }
        let s = g00.sqrt();
        for i in 0..dim {
            out.at_mut(flat)[i] = sigma * ginv[0][i] / s;
        }
    }
    Ok(out)
}

/// Mean curvature per boundary node, local-coordinate route.
pub fn mean_curvature(g: &MetricField, side: Side) -> Result<Vec<f64>> {
    let sigma = side_sigma(g.chart(), side)?;
    match g.chart().kind {
        ChartKind::SlabTorus => {
            let dg = first_derivatives(g.tensor())?;
            let chart = g.chart();
            let mut out = Vec::with_capacity(chart.boundary_node_count());
            for idx in chart.boundary_nodes(side)? {
                let flat = chart.flat(&idx);
                out.push(jet_at(g, &dg, flat).mean_curvature(sigma)?);
            }
            Ok(out)
        }
        ChartKind::RadialBall => {
            let (phi, psi) = ball_profiles(g)?;
            Ok(vec![warped::mean_curvature_face(
                &phi,
                &psi,
                g.chart().n,
                g.chart().h0,
            )])
        }
    }
}

/// Mean curvature assembled from the Lie derivative and the induced metric
/// (consistency route).
pub fn mean_curvature_route_ii(g: &MetricField, side: Side) -> Result<Vec<f64>> {
    match g.chart().kind {
        ChartKind::SlabTorus => {
            let chart = g.chart();
            let dim = chart.dim();
            let nu = normal_field(g, side)?;
            let lie = lie_derivative_metric(g, &nu)?;
            let mut out = Vec::with_capacity(chart.boundary_node_count());
            for idx in chart.boundary_nodes(side)? {
                let flat = chart.flat(&idx);
                let gm = g.mat(flat);
                let lm = smallmat::unpack(lie.at(flat), dim);
                let mut tb = [[0.0; MAX_AXES]; MAX_AXES];
                for a in 1..dim {
                    for b in 1..dim {
                        tb[a - 1][b - 1] = gm[a][b];
                    }
                }
                let tbi = smallmat::invert_spd(&tb, dim - 1).ok_or(Error::SingularMetric {
                    node: flat,
                    detail: "tangential block".into(),
                })?;
                let mut tr = 0.0;
                for a in 1..dim {
                    for b in 1..dim {
                        tr += tbi[a - 1][b - 1] * lm[a][b];
                    }
                }
                out.push(0.5 * tr);
            }
            Ok(out)
        }
        ChartKind::RadialBall => {
            // (L_N g)_fiber = d_s(psi^2) ghat; trace with psi^{-2} at the face
            let (phi, psi) = ball_profiles(g)?;
            let n = g.chart().n;
            let h = g.chart().h0;
            let psi2: Vec<f64> = psi.iter().map(|v| v * v).collect();
            let d_face = warped::face_d1(&psi2, h) / warped::face_value(&phi);
            Ok(vec![
                0.5 * n as f64 * d_face / warped::face_value(&psi2),
            ])
        }
    }
}

/// Linearized mean curvature H'_g(h) per boundary node.
pub fn mean_curvature_linearized(
    g: &MetricField,
    hdir: &SymTensorField,
    side: Side,
) -> Result<Vec<f64>> {
    if hdir.chart != *g.chart() || hdir.rank != Rank::Sym2 {
        return Err(Error::ChartMismatch("mean_curvature_linearized".into()));
    }
    let sigma = side_sigma(g.chart(), side)?;
    match g.chart().kind {
        ChartKind::SlabTorus => {
            let chart = g.chart();
            let dim = chart.dim();
            let dg = first_derivatives(g.tensor())?;
            let dh = first_derivatives(hdir)?;
            let mut out = Vec::with_capacity(chart.boundary_node_count());
            for idx in chart.boundary_nodes(side)? {
                let flat = chart.flat(&idx);
                let jet = jet_at(g, &dg, flat);
                let hm = smallmat::unpack(hdir.at(flat), dim);
                let dhm = dg_at(&dh, flat, dim);
                out.push(jet.mean_curvature_linearized(&hm, &dhm, sigma)?);
            }
            Ok(out)
        }
        ChartKind::RadialBall => {
            let (phi, psi) = ball_profiles(g)?;
            let chart = g.chart();
            let dim = chart.dim();
            let mut a = Vec::with_capacity(chart.n0);
            let mut b = Vec::with_capacity(chart.n0);
            for j in 0..chart.n0 {
                let m = smallmat::unpack(hdir.at(j), dim);
                a.push(m[0][0]);
                b.push(m[1][1]);
            }
            Ok(vec![warped::mean_curvature_linearized_face(
                &phi, &psi, &a, &b, chart.n, chart.h0,
            )])
        }
    }
}

// ---------------------------------------------------------------------------
// Bianchi operator, gauge field, Lie derivative
// ---------------------------------------------------------------------------

/// Bianchi operator beta_g(u)_l = g^{ij}(d_i u_jl - u_rl Gam^r_ij
/// - u_jr Gam^r_il) - 1/2 d_l (g^{ij} u_ij), returned as a one-form field.
pub fn bianchi(g: &MetricField, u: &SymTensorField) -> Result<SymTensorField> {
    require_slab(g.chart(), "bianchi")?;
    if u.chart != *g.chart() || u.rank != Rank::Sym2 {
        return Err(Error::ChartMismatch("bianchi".into()));
    }
    let chart = g.chart().clone();
    let dim = chart.dim();
    let gam = christoffel(g)?;
    let du = first_derivatives(u)?;
    // trace field g^{ij} u_ij and its derivatives
    let mut tr = SymTensorField::zeros(&chart, Rank::Scalar);
    for flat in 0..chart.node_count() {
        let ginv = g.inv_mat(flat);
        let um = smallmat::unpack(u.at(flat), dim);
        let mut s = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                s += ginv[i][j] * um[i][j];
            }
        }
        tr.at_mut(flat)[0] = s;
    }
    let dtr: Vec<SymTensorField> = (0..chart.naxes())
        .map(|a| partial_derivative(&tr, a, 1))
        .collect::<Result<_>>()?;
    let mut out = SymTensorField::zeros(&chart, Rank::OneForm);
    for flat in 0..chart.node_count() {
        let ginv = g.inv_mat(flat);
        let gm = gam.gamma3(flat);
        let um = smallmat::unpack(u.at(flat), dim);
        let dum = dg_at(&du, flat, dim);
        for l in 0..dim {
            let mut s = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    let mut e = dum[i][j][l];
                    for r in 0..dim {
                        e -= um[r][l] * gm[r][i][j] + um[j][r] * gm[r][i][l];
                    }
                    s += ginv[i][j] * e;
                }
            }
            s -= 0.5 * dtr[l].at(flat)[0];
            out.at_mut(flat)[l] = s;
        }
    }
    Ok(out)
}

/// Gauge vector field W(g, gt): raised (vector) and lowered (one-form).
pub fn deturck_field(g: &MetricField, gt: &MetricField) -> Result<(SymTensorField, SymTensorField)> {
    let gam_t = christoffel(gt)?;
    deturck_field_with(g, &gam_t)
}

/// Same, reusing a precomputed background connection.
pub fn deturck_field_with(
    g: &MetricField,
    gam_bg: &ConnectionField,
) -> Result<(SymTensorField, SymTensorField)> {
    require_slab(g.chart(), "deturck_field")?;
    if gam_bg.chart != *g.chart() {
        return Err(Error::ChartMismatch("deturck_field".into()));
    }
    let chart = g.chart().clone();
    let dim = chart.dim();
    let gam = christoffel(g)?;
    let mut vector = SymTensorField::zeros(&chart, Rank::Vector);
    let mut oneform = SymTensorField::zeros(&chart, Rank::OneForm);
    for flat in 0..chart.node_count() {
        let ginv = g.inv_mat(flat);
        let gm = g.mat(flat);
        let ga = gam.gamma3(flat);
        let gb = gam_bg.gamma3(flat);
        let mut up = [0.0; MAX_AXES];
        for r in 0..dim {
            let mut s = 0.0;
            for p in 0..dim {
                for q in 0..dim {
                    s += ginv[p][q] * (ga[r][p][q] - gb[r][p][q]);
                }
            }
            up[r] = s;
        }
        for r in 0..dim {
            vector.at_mut(flat)[r] = up[r];
        }
        for l in 0..dim {
            let mut s = 0.0;
            for r in 0..dim {
                s += gm[l][r] * up[r];
            }
            oneform.at_mut(flat)[l] = s;
        }
    }
    Ok((vector, oneform))
}

/// (L_X g)_ij = X^k d_k g_ij + g_kj d_i X^k + g_ik d_j X^k.
pub fn lie_derivative_metric(g: &MetricField, xvec: &SymTensorField) -> Result<SymTensorField> {
    require_slab(g.chart(), "lie_derivative_metric")?;
    if xvec.chart != *g.chart() || xvec.rank != Rank::Vector {
        return Err(Error::ChartMismatch("lie_derivative_metric".into()));
    }
    if !xvec.is_finite() {
        return Err(Error::NonFinite("vector field".into()));
    }
    let chart = g.chart().clone();
    let dim = chart.dim();
    let dg = first_derivatives(g.tensor())?;
    let dx: Vec<SymTensorField> = (0..chart.naxes())
        .map(|a| partial_derivative(xvec, a, 1))
        .collect::<Result<_>>()?;
    let mut out = SymTensorField::zeros(&chart, Rank::Sym2);
    for flat in 0..chart.node_count() {
        let gm = g.mat(flat);
        let dgm = dg_at(&dg, flat, dim);
        let x = xvec.at(flat);
        for i in 0..dim {
            for j in i..dim {
                let mut s = 0.0;
                for k in 0..dim {
                    s += x[k] * dgm[k][i][j];
                    s += gm[k][j] * dx[i].at(flat)[k] + gm[i][k] * dx[j].at(flat)[k];
                }
                out.at_mut(flat)[smallmat::sym_index(dim, i, j)] = s;
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// evolution right-hand side, two routes
// ---------------------------------------------------------------------------

/// Route (A): -2 Ric(g) + L_{W(g,gt)} g by direct assembly.
pub fn deturck_rhs(g: &MetricField, gt: &MetricField) -> Result<SymTensorField> {
    let gam_bg = christoffel(gt)?;
    deturck_rhs_with(g, &gam_bg)
}

/// Route (A) with a precomputed background connection.
pub fn deturck_rhs_with(g: &MetricField, gam_bg: &ConnectionField) -> Result<SymTensorField> {
    require_slab(g.chart(), "deturck_rhs")?;
    let ric = ricci(g)?;
    let (w, _) = deturck_field_with(g, gam_bg)?;
    let lw = lie_derivative_metric(g, &w)?;
    let mut out = lw;
    for (o, r) in out.data.iter_mut().zip(ric.data.iter()) {
        *o -= 2.0 * r;
    }
    Ok(out)
}

/// Route (B): the background-connection expansion
/// tr_g d^2 g + Q(g, dg) - L_{V(g)} g with the flat chart connection,
/// V(g)^k = g^{pq} Gamma~^k_{pq}. The quadratic form Q was derived by
/// computer algebra so that route (B) is an algebraic identity with route (A)
/// in the continuum.
pub fn deturck_rhs_background(g: &MetricField, gt: &MetricField) -> Result<SymTensorField> {
    require_slab(g.chart(), "deturck_rhs_background")?;
    let chart = g.chart().clone();
    let dim = chart.dim();
    let dg = first_derivatives(g.tensor())?;
    // coordinate Hessian contracted with g^{-1}
    let mut hess_fields = Vec::new();
    for p in 0..chart.naxes() {
        let mut row = Vec::new();
        for q in 0..=p {
            let f = if p == q {
                partial_derivative(g.tensor(), p, 2)?
            } else {
                partial_derivative(&dg[q], p, 1)?
            };
            row.push(f);
        }
        hess_fields.push(row);
    }
    let gam_bg = christoffel(gt)?;
    // V^k = g^{pq} Gamma~^k_pq
    let mut v = SymTensorField::zeros(&chart, Rank::Vector);
    for flat in 0..chart.node_count() {
        let ginv = g.inv_mat(flat);
        let gb = gam_bg.gamma3(flat);
        for k in 0..dim {
            let mut s = 0.0;
            for p in 0..dim {
                for q in 0..dim {
                    s += ginv[p][q] * gb[k][p][q];
                }
            }
            v.at_mut(flat)[k] = s;
        }
    }
    let lv = lie_derivative_metric(g, &v)?;

    let mut out = SymTensorField::zeros(&chart, Rank::Sym2);
    for flat in 0..chart.node_count() {
        let ginv = g.inv_mat(flat);
        let dgm = dg_at(&dg, flat, dim);
        let q_form = quadratic_form(&ginv, &dgm, dim);
        let row = out.at_mut(flat);
        for i in 0..dim {
            for j in i..dim {
                let k = smallmat::sym_index(dim, i, j);
                let mut hess = 0.0;
                for p in 0..dim {
                    for q in 0..dim {
                        let f = if p >= q {
                            &hess_fields[p][q]
                        } else {
                            &hess_fields[q][p]
                        };
                        hess += ginv[p][q] * f.at(flat)[k];
                    }
                }
                row[k] = hess + q_form[i][j] - smallmat::unpack(lv.at(flat), dim)[i][j];
            }
        }
    }
    Ok(out)
}

/// The first-derivative quadratic form Q with
/// -2 Ric(g) + L_{X(g)} g = g^{pq} d_p d_q g + Q(g, dg), X^k = g^{pq} Gam^k_pq.
fn quadratic_form(ginv: &Mat, dg: &[Mat; MAX_AXES], dim: usize) -> Mat {
    let gam1 = |j: usize, p: usize, q: usize| 0.5 * (dg[p][q][j] + dg[q][p][j] - dg[j][p][q]);
    let mut out = [[0.0; MAX_AXES]; MAX_AXES];
    for i in 0..dim {
        for j in i..dim {
            let mut t = 0.0;
            // T1
            for k in 0..dim {
                for l in 0..dim {
                    let mut dk_ginv = 0.0;
                    for a in 0..dim {
                        for b in 0..dim {
                            dk_ginv += ginv[k][a] * ginv[l][b] * dg[k][a][b];
                        }
                    }
                    t += dk_ginv * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                }
            }
            // T2
            for k in 0..dim {
                for l in 0..dim {
                    for a in 0..dim {
                        for b in 0..dim {
                            t -= ginv[k][a] * ginv[l][b] * dg[i][a][b] * dg[j][k][l];
                        }
                    }
                }
            }
            // T3
            for l in 0..dim {
                let mut trdl = 0.0;
                for k in 0..dim {
                    for a in 0..dim {
                        trdl += ginv[k][a] * dg[l][k][a];
                    }
                }
                for b in 0..dim {
                    t -= 0.5 * trdl * ginv[l][b] * (dg[i][j][b] + dg[j][i][b] - dg[b][i][j]);
                }
            }
            // T4
            for k in 0..dim {
                for a in 0..dim {
                    for l in 0..dim {
                        for b in 0..dim {
                            t += 0.5
                                * ginv[k][a]
                                * ginv[l][b]
                                * (dg[i][l][a] + dg[l][i][a] - dg[a][i][l])
                                * (dg[k][j][b] + dg[j][k][b] - dg[b][k][j]);
                        }
                    }
                }
            }
            // T5
            for p in 0..dim {
                for q in 0..dim {
                    for k in 0..dim {
                        for l in 0..dim {
                            t += ginv[p][q]
                                * ginv[k][l]
                                * (dg[p][q][l] - 0.5 * dg[l][p][q])
                                * dg[k][i][j];
                        }
                    }
                }
            }
            // T6 + T7 (symmetrized in i, j)
            for (ii, jj) in [(i, j), (j, i)] {
                for p in 0..dim {
                    for q in 0..dim {
                        for a in 0..dim {
                            for b in 0..dim {
                                t -= ginv[p][a] * ginv[q][b] * dg[ii][a][b] * gam1(jj, p, q);
                            }
                        }
                    }
                }
                for l in 0..dim {
                    for dd in 0..dim {
                        for p in 0..dim {
                            for q in 0..dim {
                                t -= 0.5
                                    * ginv[l][dd]
                                    * dg[ii][jj][dd]
                                    * ginv[p][q]
                                    * (2.0 * dg[p][q][l] - dg[l][p][q]);
                            }
                        }
                    }
                }
            }
            out[i][j] = t;
            out[j][i] = t;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// curvature norms
// ---------------------------------------------------------------------------

/// Pointwise |Rm|_g as a scalar field.
pub fn riemann_norm(g: &MetricField) -> Result<SymTensorField> {
    match g.chart().kind {
        ChartKind::SlabTorus => {
            let chart = g.chart().clone();
            let dim = chart.dim();
            let gam = christoffel(g)?;
            let dgam = connection_derivatives(&gam)?;
            let mut out = SymTensorField::zeros(&chart, Rank::Scalar);
            for flat in 0..chart.node_count() {
                let gm = g.mat(flat);
                let ginv = g.inv_mat(flat);
                let ga = gam.gamma3(flat);
                let dgm = dgamma_at(&gam, &dgam, flat);
                // R^l_{ijk}
                let mut u = [[[[0.0; MAX_AXES]; MAX_AXES]; MAX_AXES]; MAX_AXES];
                for l in 0..dim {
                    for i in 0..dim {
                        for j in 0..dim {
                            for k in 0..dim {
                                let mut e = dgm[i][l][j][k] - dgm[j][l][i][k];
                                for m in 0..dim {
                                    e += ga[l][i][m] * ga[m][j][k] - ga[l][j][m] * ga[m][i][k];
                                }
                                u[l][i][j][k] = e;
                            }
                        }
                    }
                }
                // raise the three lower indices
                let mut e1 = [[[[0.0; MAX_AXES]; MAX_AXES]; MAX_AXES]; MAX_AXES];
                for l in 0..dim {
                    for i in 0..dim {
                        for j in 0..dim {
                            for k in 0..dim {
                                let mut s = 0.0;
                                for a in 0..dim {
                                    s += ginv[i][a] * u[l][a][j][k];
                                }
                                e1[l][i][j][k] = s;
                            }
                        }
                    }
                }
                let mut e2 = [[[[0.0; MAX_AXES]; MAX_AXES]; MAX_AXES]; MAX_AXES];
                for l in 0..dim {
                    for i in 0..dim {
                        for j in 0..dim {
                            for k in 0..dim {
                                let mut s = 0.0;
                                for a in 0..dim {
                                    s += ginv[j][a] * e1[l][i][a][k];
                                }
                                e2[l][i][j][k] = s;
                            }
                        }
                    }
                }
                let mut e3 = [[[[0.0; MAX_AXES]; MAX_AXES]; MAX_AXES]; MAX_AXES];
                for l in 0..dim {
                    for i in 0..dim {
                        for j in 0..dim {
                            for k in 0..dim {
                                let mut s = 0.0;
                                for a in 0..dim {
                                    s += ginv[k][a] * e2[l][i][j][a];
                                }
                                e3[l][i][j][k] = s;
                            }
                        }
                    }
                }
                // norm^2 = g_{lm} U^m_{ijk} E^{l ijk}
                let mut n2 = 0.0;
                for l in 0..dim {
                    for m in 0..dim {
                        for i in 0..dim {
                            for j in 0..dim {
                                for k in 0..dim {
                                    n2 += gm[l][m] * u[m][i][j][k] * e3[l][i][j][k];
                                }
                            }
                        }
                    }
                }
                out.at_mut(flat)[0] = n2.max(0.0).sqrt();
            }
            Ok(out)
        }
        ChartKind::RadialBall => {
            let (phi, psi) = ball_profiles(g)?;
            let chart = g.chart();
            let vals = warped::riemann_norm(&phi, &psi, chart.n, chart.h0);
            let mut out = SymTensorField::zeros(chart, Rank::Scalar);
            out.data.copy_from_slice(&vals);
            Ok(out)
        }
    }
}

/// Pointwise |A|_g per boundary node.
pub fn second_form_norm(g: &MetricField, side: Side) -> Result<Vec<f64>> {
    match g.chart().kind {
        ChartKind::SlabTorus => {
            let chart = g.chart();
            let dim = chart.dim();
            let nu = normal_field(g, side)?;
            let lie = lie_derivative_metric(g, &nu)?;
            let mut out = Vec::with_capacity(chart.boundary_node_count());
            for idx in chart.boundary_nodes(side)? {
                let flat = chart.flat(&idx);
                let gm = g.mat(flat);
                let lm = smallmat::unpack(lie.at(flat), dim);
                let mut tb = [[0.0; MAX_AXES]; MAX_AXES];
                for a in 1..dim {
                    for b in 1..dim {
                        tb[a - 1][b - 1] = gm[a][b];
                    }
                }
                let tbi = smallmat::invert_spd(&tb, dim - 1).ok_or(Error::SingularMetric {
                    node: flat,
                    detail: "tangential block".into(),
                })?;
                // A = (L_nu g)^T / 2; |A|^2 = gT^{am} gT^{bn} A_ab A_mn
                let mut n2 = 0.0;
                for a in 1..dim {
                    for b in 1..dim {
                        for m in 1..dim {
                            for n in 1..dim {
                                n2 += tbi[a - 1][m - 1]
                                    * tbi[b - 1][n - 1]
                                    * (0.5 * lm[a][b])
                                    * (0.5 * lm[m][n]);
                            }
                        }
                    }
                }
                out.push(n2.max(0.0).sqrt());
            }
            Ok(out)
        }
        ChartKind::RadialBall => {
            side_sigma(g.chart(), side)?;
            let (phi, psi) = ball_profiles(g)?;
            Ok(vec![warped::second_form_norm_face(
                &phi,
                &psi,
                g.chart().n,
                g.chart().h0,
            )])
        }
    }
}

/// Convenience: sup over nodes of |Rm| and sup over all boundary nodes of |A|.
pub fn curvature_sups(g: &MetricField) -> Result<(f64, f64)> {
    let rm = riemann_norm(g)?;
    let sup_rm = rm.data.iter().fold(0.0_f64, |m, v| m.max(*v));
    let mut sup_a = 0.0_f64;
    for &side in g.chart().sides() {
        for v in second_form_norm(g, side)? {
            sup_a = sup_a.max(v);
        }
    }
    Ok((sup_rm, sup_a))
}

#[allow(dead_code)]
pub(crate) fn boundary_index_list(chart: &Chart, side: Side) -> Result<Vec<NodeIndex>> {
    chart.boundary_nodes(side)
}
