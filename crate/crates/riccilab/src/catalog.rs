//! Closed-form initial data families and seeded synthetic test fields.
//!
//! Every entry is an analytic object sampled onto a chart, so the same datum
//! can be evaluated at any resolution (refinement studies) and differentiated
//! exactly where a test needs an analytic oracle.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::chart::{Chart, ChartKind};
use crate::error::{Error, Result};
use crate::field::{MetricField, Rank, SymTensorField};
use crate::smallmat::sym_index;

/// Radial profile (phi, psi) of a rotationally symmetric ball metric with
/// analytic first derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name")]
pub enum RadialProfile {
    /// phi = 1, psi = r: the flat unit ball.
    FlatBall,
    /// phi = pi/2, psi = sin(pi r / 2): round hemisphere, equator at r = 1.
    Hemisphere,
}

impl RadialProfile {
    pub fn phi(&self, _r: f64) -> f64 {
        match self {
            RadialProfile::FlatBall => 1.0,
            RadialProfile::Hemisphere => PI / 2.0,
        }
    }

    pub fn psi(&self, r: f64) -> f64 {
        match self {
            RadialProfile::FlatBall => r,
            RadialProfile::Hemisphere => (PI * r / 2.0).sin(),
        }
    }

    pub fn dpsi(&self, r: f64) -> f64 {
        match self {
            RadialProfile::FlatBall => 1.0,
            RadialProfile::Hemisphere => PI / 2.0 * (PI * r / 2.0).cos(),
        }
    }

    /// Mean curvature of the face r = 1 (analytic).
    pub fn face_mean_curvature(&self, n: usize) -> f64 {
        let psi_s = self.dpsi(1.0) / self.phi(1.0);
        n as f64 * psi_s / self.psi(1.0)
    }

    pub fn sample(&self, chart: &Chart) -> Result<MetricField> {
        if chart.kind != ChartKind::RadialBall {
            return Err(Error::ChartUnsupported(
                "radial profiles sample onto ball charts".into(),
            ));
        }
        let dim = chart.dim();
        MetricField::from_fn(chart, |x, out| {
            let r = x[0];
            let p = self.phi(r);
            let s = self.psi(r);
            out[sym_index(dim, 0, 0)] = p * p;
            for a in 1..dim {
                out[sym_index(dim, a, a)] = s * s;
            }
        })
    }

    /// The (phi, psi) arrays on the nodes of a ball chart.
    pub fn sample_arrays(&self, chart: &Chart) -> (Vec<f64>, Vec<f64>) {
        let mut phi = Vec::with_capacity(chart.n0);
        let mut psi = Vec::with_capacity(chart.n0);
        for j in 0..chart.n0 {
            let r = (j as f64 + 0.5) * chart.h0;
            phi.push(self.phi(r));
            psi.push(self.psi(r));
        }
        (phi, psi)
    }
}

/// Warped slab profile psi0(x0) with analytic derivatives:
/// g = (dx0)^2 + psi0(x0)^2 delta on the torus fiber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name")]
pub enum SlabProfile {
    /// psi0 = 1 (flat slab).
    Flat,
    /// psi0 = 1 + amplitude * sin(pi x0).
    WarpedSin { amplitude: f64 },
    /// psi0 = 1 + amplitude * exp(-((x0 - 1/2)/width)^2).
    WarpedGauss { amplitude: f64, width: f64 },
}

impl SlabProfile {
    pub fn psi(&self, x0: f64) -> f64 {
        match self {
            SlabProfile::Flat => 1.0,
            SlabProfile::WarpedSin { amplitude } => 1.0 + amplitude * (PI * x0).sin(),
            SlabProfile::WarpedGauss { amplitude, width } => {
                let u = (x0 - 0.5) / width;
                1.0 + amplitude * (-u * u).exp()
            }
        }
    }

    pub fn dpsi(&self, x0: f64) -> f64 {
        match self {
            SlabProfile::Flat => 0.0,
            SlabProfile::WarpedSin { amplitude } => amplitude * PI * (PI * x0).cos(),
            SlabProfile::WarpedGauss { amplitude, width } => {
                let u = (x0 - 0.5) / width;
                amplitude * (-2.0 * u / width) * (-u * u).exp()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            SlabProfile::Flat => true,
            SlabProfile::WarpedSin { amplitude } => amplitude.abs() < 1.0,
            SlabProfile::WarpedGauss { amplitude, width } => amplitude.abs() < 1.0 && *width > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "slab profile parameters leave the positive-definite range: {self:?}"
            )))
        }
    }

    pub fn sample(&self, chart: &Chart) -> Result<MetricField> {
        if chart.kind != ChartKind::SlabTorus {
            return Err(Error::ChartUnsupported(
                "slab profiles sample onto slab charts".into(),
            ));
        }
        self.validate()?;
        let dim = chart.dim();
        MetricField::from_fn(chart, |x, out| {
            let s = self.psi(x[0]);
            out[sym_index(dim, 0, 0)] = 1.0;
            for a in 1..dim {
                out[sym_index(dim, a, a)] = s * s;
            }
        })
    }
}

/// An analytic symmetric 2-tensor on the slab, resolution-independent.
pub struct AnalyticField {
    pub n: usize,
    eval: Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>,
}

impl AnalyticField {
    pub fn new<F>(n: usize, eval: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        AnalyticField {
            n,
            eval: Box::new(eval),
        }
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        (self.eval)(x, out)
    }

    pub fn sample_metric(&self, chart: &Chart) -> Result<MetricField> {
        MetricField::from_fn(chart, |x, out| (self.eval)(x, out))
    }

    pub fn sample_tensor(&self, chart: &Chart) -> SymTensorField {
        SymTensorField::from_fn(chart, Rank::Sym2, |x, out| (self.eval)(x, out))
    }
}

struct Mode {
    comp: usize,
    amplitude: f64,
    k0: f64,
    phase0: f64,
    kt: [f64; 6],
    phaset: [f64; 6],
}

fn random_modes(
    n: usize,
    seed: u64,
    amplitude: f64,
    period: f64,
    modes_per_comp: usize,
) -> Vec<Mode> {
    let dim = n + 1;
    let ncomp = dim * (dim + 1) / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::new();
    for comp in 0..ncomp {
        for _ in 0..modes_per_comp {
            let mut kt = [0.0; 6];
            let mut phaset = [0.0; 6];
            for a in 0..n {
                kt[a] = rng.gen_range(1..=2) as f64 * 2.0 * PI / period;
                phaset[a] = rng.gen_range(0.0..2.0 * PI);
            }
            modes.push(Mode {
                comp,
                amplitude: amplitude / modes_per_comp as f64 * rng.gen_range(0.4..1.0),
                k0: rng.gen_range(1..=2) as f64 * PI,
                phase0: rng.gen_range(0.0..2.0 * PI),
                kt,
                phaset,
            });
        }
    }
    modes
}

fn eval_modes(modes: &[Mode], n: usize, x: &[f64], out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = 0.0;
    }
    for m in modes {
        let mut v = m.amplitude * (m.k0 * x[0] + m.phase0).sin();
        for a in 0..n {
            v *= (m.kt[a] * x[a + 1] + m.phaset[a]).sin();
        }
        out[m.comp] += v;
    }
}

/// Seeded random smooth positive-definite metric on the slab: identity plus a
/// small trigonometric perturbation, periodic in the tangential directions.
pub fn random_smooth_metric(n: usize, seed: u64, amplitude: f64, period: f64) -> AnalyticField {
    let dim = n + 1;
    let modes = random_modes(n, seed, amplitude, period, 2);
    AnalyticField::new(n, move |x, out| {
        eval_modes(&modes, n, x, out);
        for i in 0..dim {
            out[sym_index(dim, i, i)] += 1.0;
        }
    })
}

/// Seeded random smooth symmetric perturbation (mean zero, same mode family).
pub fn random_smooth_perturbation(
    n: usize,
    seed: u64,
    amplitude: f64,
    period: f64,
) -> AnalyticField {
    let modes = random_modes(n, seed, amplitude, period, 2);
    AnalyticField::new(n, move |x, out| eval_modes(&modes, n, x, out))
}

/// Conformally flat slab metric exp(2 x0) delta (test family with a
/// hand-derivable connection).
pub fn conformal_exp_metric(n: usize) -> AnalyticField {
    let dim = n + 1;
    AnalyticField::new(n, move |x, out| {
        let c = (2.0 * x[0]).exp();
        for v in out.iter_mut() {
            *v = 0.0;
        }
        for i in 0..dim {
            out[sym_index(dim, i, i)] = c;
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_metric_is_positive_definite() {
        let chart = Chart::slab(2, 9, 8, 1.0).unwrap();
        for seed in 0..5 {
            let m = random_smooth_metric(2, seed, 0.15, 1.0);
            assert!(m.sample_metric(&chart).is_ok(), "seed {seed} not PD");
        }
    }

    #[test]
    fn hemisphere_profile_equator() {
        let p = RadialProfile::Hemisphere;
        assert!((p.psi(1.0) - 1.0).abs() < 1e-15);
        assert!(p.dpsi(1.0).abs() < 1e-15);
        assert!(p.face_mean_curvature(2).abs() < 1e-15);
        let f = RadialProfile::FlatBall;
        assert!((f.face_mean_curvature(3) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn profiles_sample_positive() {
        let ball = Chart::ball(2, 32).unwrap();
        RadialProfile::Hemisphere.sample(&ball).unwrap();
        RadialProfile::FlatBall.sample(&ball).unwrap();
        let slab = Chart::slab(2, 9, 6, 1.0).unwrap();
        SlabProfile::WarpedSin { amplitude: 0.3 }.sample(&slab).unwrap();
        assert!(SlabProfile::WarpedSin { amplitude: 1.5 }.sample(&slab).is_err());
    }
}
