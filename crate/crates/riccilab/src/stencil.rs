//! Second-order finite-difference stencils and multilinear interpolation.
//!
//! Interior nodes use centered differences; the non-periodic ends of the
//! normal/radial axis use one-sided stencils of matching order (3-point for
//! first derivatives, 4-point for second). Tangential axes wrap around. On the
//! ball chart the inner end is closed by parity reflection across r = 0.

use crate::chart::{ChartKind, NodeIndex};
use crate::error::{Error, Result};
use crate::field::SymTensorField;

/// Stencil-differentiate a raw node-major component array along `axis`.
/// `parity` gives the sign each component picks up under radial reflection
/// (only consulted on the ball chart).
pub(crate) fn derive_raw(
    chart: &crate::chart::Chart,
    data: &[f64],
    nc: usize,
    parity: &dyn Fn(usize) -> f64,
    axis: usize,
    order: usize,
) -> Result<Vec<f64>> {
    let naxes = chart.naxes();
    if axis >= naxes {
        return Err(Error::AxisOutOfRange { axis, naxes });
    }
    if order != 1 && order != 2 {
        return Err(Error::BadDerivativeOrder(order));
    }
    let h = chart.spacing(axis);
    let mut out = vec![0.0; data.len()];

    let n_axis = chart.extent(axis);
    let radial = chart.kind == ChartKind::RadialBall;
    let periodic = axis > 0;

    for idx in chart.nodes() {
        let flat = chart.flat(&idx);
        let i = idx[axis];
        // fetch a neighbor component value at offset `off`, honoring
        // periodicity and radial parity
        let sample = |off: isize, c: usize| -> f64 {
            let j = i as isize + off;
            if periodic {
                let mut nb = idx;
                nb[axis] = chart.wrap_t(j);
                return data[chart.flat(&nb) * nc + c];
            }
            if radial && j < 0 {
                // parity ghost: node at -(j+1) with component parity sign
                let mut nb = idx;
                nb[axis] = (-j - 1) as usize;
                return parity(c) * data[chart.flat(&nb) * nc + c];
            }
            let mut nb = idx;
            nb[axis] = j as usize;
            data[chart.flat(&nb) * nc + c]
        };

        // choose the stencil: centered where it fits, one-sided at ends
        let centered_ok = if periodic {
            true
        } else if radial {
            i + 1 < n_axis // inner end always ok via parity
        } else {
            i >= 1 && i + 1 < n_axis
        };

        for c in 0..nc {
            let v = if centered_ok {
                match order {
                    1 => (sample(1, c) - sample(-1, c)) / (2.0 * h),
                    _ => (sample(1, c) - 2.0 * sample(0, c) + sample(-1, c)) / (h * h),
                }
            } else if i == 0 {
                match order {
                    1 => (-3.0 * sample(0, c) + 4.0 * sample(1, c) - sample(2, c)) / (2.0 * h),
                    _ => {
                        (2.0 * sample(0, c) - 5.0 * sample(1, c) + 4.0 * sample(2, c)
                            - sample(3, c))
                            / (h * h)
                    }
                }
            } else {
                match order {
                    1 => (3.0 * sample(0, c) - 4.0 * sample(-1, c) + sample(-2, c)) / (2.0 * h),
                    _ => {
                        (2.0 * sample(0, c) - 5.0 * sample(-1, c) + 4.0 * sample(-2, c)
                            - sample(-3, c))
                            / (h * h)
                    }
                }
            };
            out[flat * nc + c] = v;
        }
    }
    Ok(out)
}

/// Stencil-differentiate every component of `f` along `axis`.
pub fn partial_derivative(f: &SymTensorField, axis: usize, order: usize) -> Result<SymTensorField> {
    if !f.is_finite() {
        return Err(Error::NonFinite("field to differentiate".into()));
    }
    let dim = f.chart.dim();
    let rank = f.rank;
    let parity = move |c: usize| rank.parity(dim, c);
    let data = derive_raw(&f.chart, &f.data, f.ncomp(), &parity, axis, order)?;
    Ok(SymTensorField {
        chart: f.chart.clone(),
        rank: f.rank,
        data,
    })
}

/// Multilinear interpolation of all components at a continuous point.
/// Tangential coordinates are reduced modulo the period; the normal/radial
/// coordinate must stay inside the chart.
pub fn interpolate(f: &SymTensorField, point: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; f.ncomp()];
    interpolate_into(f, point, &mut out)?;
    Ok(out)
}

pub fn interpolate_into(f: &SymTensorField, point: &[f64], out: &mut [f64]) -> Result<()> {
    let chart = &f.chart;
    let naxes = chart.naxes();
    let nc = f.ncomp();
    let dim = chart.dim();

    // cell index, local weight and (for the radial inner cell) parity flags
    let mut cell = [0usize; crate::chart::MAX_AXES];
    let mut weight = [0.0f64; crate::chart::MAX_AXES];
    let mut reflect_low = false;

    match chart.kind {
        ChartKind::SlabTorus => {
            let x0 = point[0];
            if !(0.0..=1.0).contains(&x0) {
                return Err(Error::PointOutsideDomain { axis: 0, value: x0 });
            }
            let mut i = (x0 / chart.h0).floor() as usize;
            if i >= chart.n0 - 1 {
                i = chart.n0 - 2;
            }
            cell[0] = i;
            weight[0] = x0 / chart.h0 - i as f64;
            for a in 1..naxes {
                let mut xa = point[a] % chart.period;
                if xa < 0.0 {
                    xa += chart.period;
                }
                let i = (xa / chart.ht).floor() as usize % chart.nt;
                cell[a] = i;
                weight[a] = xa / chart.ht - ((xa / chart.ht).floor());
            }
        }
        ChartKind::RadialBall => {
            let r = point[0];
            let r_last = (chart.n0 as f64 - 0.5) * chart.h0;
            if !(0.0..=r_last).contains(&r) {
                return Err(Error::PointOutsideDomain { axis: 0, value: r });
            }
            let r0 = 0.5 * chart.h0;
            if r < r0 {
                // between the reflected ghost at -h/2 and the first node
                reflect_low = true;
                cell[0] = 0;
                weight[0] = (r + r0) / chart.h0;
            } else {
                let mut j = ((r - r0) / chart.h0).floor() as usize;
                if j >= chart.n0 - 1 {
                    j = chart.n0 - 2;
                }
                cell[0] = j;
                weight[0] = (r - r0) / chart.h0 - j as f64;
            }
        }
    }

    for v in out.iter_mut() {
        *v = 0.0;
    }
    let corners = 1usize << naxes;
    // snap near-integer weights so node-coincident points return stored
    // values bit-exactly even when coordinates carry rounding noise
    for a in 0..naxes {
        if weight[a].abs() < 1e-12 {
            weight[a] = 0.0;
        } else if (1.0 - weight[a]).abs() < 1e-12 {
            weight[a] = 1.0;
        }
    }
    for corner in 0..corners {
        let mut w = 1.0;
        let mut idx: NodeIndex = [0; crate::chart::MAX_AXES];
        let mut parity_sign = 1.0;
        for a in 0..naxes {
            let hi = (corner >> a) & 1 == 1;
            w *= if hi { weight[a] } else { 1.0 - weight[a] };
            if a == 0 && reflect_low {
                if hi {
                    idx[0] = 0;
                } else {
                    idx[0] = 0;
                    parity_sign = -1.0; // marks the reflected ghost corner
                }
            } else if a == 0 {
                idx[0] = cell[0] + hi as usize;
            } else {
                idx[a] = if hi {
                    chart.wrap_t(cell[a] as isize + 1)
                } else {
                    cell[a]
                };
            }
        }
        if w == 0.0 {
            continue;
        }
        let flat = chart.flat(&idx);
        for c in 0..nc {
            let sign = if parity_sign < 0.0 {
                f.rank.parity(dim, c)
            } else {
                1.0
            };
            out[c] += w * sign * f.data[flat * nc + c];
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;
    use crate::field::Rank;
    use std::f64::consts::PI;

    fn scalar_field<F: FnMut(&[f64]) -> f64>(chart: &Chart, mut f: F) -> SymTensorField {
        SymTensorField::from_fn(chart, Rank::Scalar, |x, out| out[0] = f(x))
    }

    #[test]
    fn constant_annihilation() {
        let chart = Chart::slab(2, 9, 6, 1.0).unwrap();
        let f = scalar_field(&chart, |_| 3.25);
        for axis in 0..3 {
            for order in [1, 2] {
                let d = partial_derivative(&f, axis, order).unwrap();
                assert_eq!(d.max_abs(), 0.0);
            }
        }
    }

    #[test]
    fn linear_exact_including_boundary() {
        let chart = Chart::slab(1, 11, 5, 1.0).unwrap();
        let a = -1.7;
        let f = scalar_field(&chart, |x| a * x[0]);
        let d = partial_derivative(&f, 0, 1).unwrap();
        for v in &d.data {
            assert!((v - a).abs() < 1e-13, "d0 of linear field: {v}");
        }
        let d2 = partial_derivative(&f, 0, 2).unwrap();
        assert!(d2.max_abs() < 1e-12);
    }

    #[test]
    fn quadratic_exact_second_derivative() {
        let chart = Chart::slab(1, 9, 5, 1.0).unwrap();
        let f = scalar_field(&chart, |x| 2.0 * x[0] * x[0] - x[0]);
        let d2 = partial_derivative(&f, 0, 2).unwrap();
        for v in &d2.data {
            assert!((v - 4.0).abs() < 1e-11, "d2 of quadratic: {v}");
        }
    }

    #[test]
    fn sine_derivative_second_order_convergence() {
        // error shrinks by a factor in [3.6, 4.4] when h is halved
        let mut errs = Vec::new();
        for n0 in [33usize, 65] {
            let chart = Chart::slab(1, n0, 4, 1.0).unwrap();
            let f = scalar_field(&chart, |x| (PI * x[0]).sin());
            let d = partial_derivative(&f, 0, 1).unwrap();
            let mut err = 0.0_f64;
            for idx in chart.nodes() {
                let x = chart.coord(&idx)[0];
                let exact = PI * (PI * x).cos();
                err = err.max((d.data[chart.flat(&idx)] - exact).abs());
            }
            errs.push(err);
        }
        let ratio = errs[0] / errs[1];
        assert!(
            (3.6..=4.4).contains(&ratio),
            "convergence ratio {ratio} outside [3.6, 4.4]"
        );
    }

    #[test]
    fn tangential_periodic_derivative() {
        let chart = Chart::slab(1, 7, 48, 1.0).unwrap();
        let l = chart.period;
        let f = scalar_field(&chart, |x| (2.0 * PI * x[1] / l).sin());
        let d = partial_derivative(&f, 1, 1).unwrap();
        let mut err = 0.0_f64;
        for idx in chart.nodes() {
            let x = chart.coord(&idx)[1];
            let exact = 2.0 * PI / l * (2.0 * PI * x / l).cos();
            err = err.max((d.data[chart.flat(&idx)] - exact).abs());
        }
        assert!(err < 2.0 * PI * PI * (chart.ht / l) * (chart.ht / l) * 40.0);
    }

    #[test]
    fn translation_invariance_bitexact() {
        let chart = Chart::slab(1, 7, 12, 1.0).unwrap();
        let f = scalar_field(&chart, |x| (2.0 * PI * x[1]).sin() + x[0]);
        // translate by one node along axis 1
        let mut g = f.clone();
        for idx in chart.nodes() {
            let mut src = idx;
            src[1] = chart.wrap_t(idx[1] as isize - 1);
            g.data[chart.flat(&idx)] = f.data[chart.flat(&src)];
        }
        for order in [1, 2] {
            let df = partial_derivative(&f, 1, order).unwrap();
            let dg = partial_derivative(&g, 1, order).unwrap();
            for idx in chart.nodes() {
                let mut src = idx;
                src[1] = chart.wrap_t(idx[1] as isize - 1);
                assert_eq!(
                    dg.data[chart.flat(&idx)],
                    df.data[chart.flat(&src)],
                    "translated derivative differs"
                );
            }
        }
    }

    #[test]
    fn radial_parity_ghosts() {
        let chart = Chart::ball(2, 40).unwrap();
        // odd scalar-like profile handled through a vector component
        let f = SymTensorField::from_fn(&chart, Rank::Vector, |x, out| {
            out[0] = x[0]; // odd: vector radial component
        });
        let d = partial_derivative(&f, 0, 1).unwrap();
        for idx in chart.nodes() {
            let v = d.data[chart.flat(&idx) * 3];
            assert!((v - 1.0).abs() < 1e-12, "radial derivative of r: {v}");
        }
        // even scalar: r^2 has derivative 2r, exact for the centered interior
        let s = scalar_field(&chart, |x| x[0] * x[0]);
        let ds = partial_derivative(&s, 0, 1).unwrap();
        for idx in chart.nodes() {
            let r = chart.coord(&idx)[0];
            let v = ds.data[chart.flat(&idx)];
            assert!((v - 2.0 * r).abs() < 1e-11, "derivative of r^2 at {r}: {v}");
        }
    }

    #[test]
    fn interpolation_affine_exact_and_node_identity() {
        let chart = Chart::slab(2, 9, 6, 1.0).unwrap();
        let f = scalar_field(&chart, |x| 0.5 + 1.5 * x[0] - 0.25 * x[1] + 0.75 * x[2]);
        // tangential coordinates away from the wrap cell: an affine test
        // function is not periodic, so exactness holds inside interior cells
        let p = [0.3217, 0.411, 0.79];
        let v = interpolate(&f, &p).unwrap();
        let exact = 0.5 + 1.5 * p[0] - 0.25 * p[1] + 0.75 * p[2];
        assert!((v[0] - exact).abs() < 1e-13);
        // node coincidence is bit-exact
        let idx = [4usize, 2, 5, 0, 0, 0, 0];
        let x = chart.coord(&idx);
        let v = interpolate(&f, &x[..3]).unwrap();
        assert_eq!(v[0], f.data[chart.flat(&idx)]);
        // out of range
        assert!(interpolate(&f, &[1.2, 0.0, 0.0]).is_err());
    }

    #[test]
    fn interpolation_midpoint_second_order() {
        let l = 1.0;
        let mut errs = Vec::new();
        for nt in [16usize, 32] {
            let chart = Chart::slab(1, 5, nt, l).unwrap();
            let f = scalar_field(&chart, |x| (2.0 * PI * x[1] / l).sin());
            let mut err = 0.0_f64;
            for j in 0..nt {
                let xm = (j as f64 + 0.5) * chart.ht;
                let v = interpolate(&f, &[0.5, xm]).unwrap()[0];
                err = err.max((v - (2.0 * PI * xm / l).sin()).abs());
            }
            errs.push(err);
        }
        let ratio = errs[0] / errs[1];
        assert!(ratio > 3.3 && ratio < 4.7, "interpolation order ratio {ratio}");
    }
}
