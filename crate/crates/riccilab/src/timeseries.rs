//! Piecewise-linear tabulated time dependence for boundary data and
//! background families.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub ts: Vec<f64>,
    pub vals: Vec<f64>,
}

impl TimeSeries {
    pub fn new(ts: Vec<f64>, vals: Vec<f64>) -> Result<Self> {
        if ts.len() != vals.len() || ts.len() < 2 {
            return Err(Error::InvalidParameter(
                "time series needs matching ts/vals with at least two samples".into(),
            ));
        }
        if !ts.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter(
                "time series abscissae must increase".into(),
            ));
        }
        Ok(TimeSeries { ts, vals })
    }

    /// Linear ramp a + b t sampled exactly by its two endpoints.
    pub fn linear(a: f64, b: f64, t_max: f64) -> Self {
        TimeSeries {
            ts: vec![0.0, t_max],
            vals: vec![a, a + b * t_max],
        }
    }

    pub fn t_max(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if t < self.ts[0] - 1e-12 || t > self.t_max() + 1e-12 {
            return Err(Error::TabulationOutOfRange(t));
        }
        let t = t.clamp(self.ts[0], self.t_max());
        let k = match self.ts.iter().position(|&s| s >= t) {
            Some(0) => 1,
            Some(k) => k,
            None => self.ts.len() - 1,
        };
        let (t0, t1) = (self.ts[k - 1], self.ts[k]);
        let w = (t - t0) / (t1 - t0);
        Ok((1.0 - w) * self.vals[k - 1] + w * self.vals[k])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_ramp_exact() {
        let s = TimeSeries::linear(1.0, -4.0, 0.5);
        assert_eq!(s.eval(0.0).unwrap(), 1.0);
        assert!((s.eval(0.125).unwrap() - 0.5).abs() < 1e-15);
        assert!(s.eval(0.75).is_err());
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(TimeSeries::new(vec![0.0], vec![1.0]).is_err());
        assert!(TimeSeries::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
    }
}
