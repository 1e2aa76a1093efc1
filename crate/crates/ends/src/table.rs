//! Tabulated radial densities with monotone (Fritsch-Carlson) cubic
//! interpolation. Monotone interpolation keeps interpolated values between
//! the node values, so positive samples stay positive.

use crate::error::{EndsError, Result};

/// How a tabulated profile behaves past its last sample. The default is a
/// range error: tails dominate every criterion, so extending silently would
/// be unsound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extrapolation {
    None,
    /// Constant continuation at the last sample value.
    Constant,
    /// Continue `ln omega_bar` linearly using the slope of the last segment.
    LogLinear,
}

#[derive(Debug, Clone)]
pub struct Table {
    r: Vec<f64>,
    v: Vec<f64>,
    /// PCHIP node slopes.
    d: Vec<f64>,
    pub extrapolation: Extrapolation,
}

impl Table {
    /// Like [`Table::new`], but with exact node slopes supplied by the caller
    /// (e.g. from differentiating under an integral) instead of estimated
    /// shape-preserving ones. Interpolation error improves an order and the
    /// derivative is exact at the nodes.
    pub fn new_with_slopes(
        samples: &[(f64, f64)],
        slopes: &[f64],
        extrapolation: Extrapolation,
    ) -> Result<Table> {
        let mut t = Table::new(samples, extrapolation)?;
        if slopes.len() != samples.len() {
            return Err(EndsError::Config(format!(
                "{} slopes for {} samples",
                slopes.len(),
                samples.len()
            )));
        }
        t.d = slopes.to_vec();
        Ok(t)
    }

    pub fn new(samples: &[(f64, f64)], extrapolation: Extrapolation) -> Result<Table> {
        if samples.len() < 2 {
            return Err(EndsError::Config("table needs at least two samples".into()));
        }
        if samples[0].0 != 0.0 {
            return Err(EndsError::Config(format!(
                "first table abscissa must be 0, got {}",
                samples[0].0
            )));
        }
        for w in samples.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(EndsError::Config(format!(
                    "table abscissae must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        for &(r, v) in samples {
            if !(v > 0.0) || !v.is_finite() {
                return Err(EndsError::NonPositive { r, value: v });
            }
        }
        let r: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let v: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let d = pchip_slopes(&r, &v);
        Ok(Table { r, v, d, extrapolation })
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap()
    }

    fn segment(&self, x: f64) -> usize {
        match self.r.binary_search_by(|a| a.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.r.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.r.len() - 2),
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Err(EndsError::Range(format!("r = {x} is negative")));
        }
        if x > self.r_max() {
            let n = self.r.len();
            return match self.extrapolation {
                Extrapolation::None => Err(EndsError::Range(format!(
                    "r = {x} beyond table range [0, {}] (no extrapolation requested)",
                    self.r_max()
                ))),
                Extrapolation::Constant => Ok(self.v[n - 1]),
                Extrapolation::LogLinear => {
                    let slope = (self.v[n - 1].ln() - self.v[n - 2].ln())
                        / (self.r[n - 1] - self.r[n - 2]);
                    Ok((self.v[n - 1].ln() + slope * (x - self.r_max())).exp())
                }
            };
        }
        let i = self.segment(x);
        let h = self.r[i + 1] - self.r[i];
        let t = (x - self.r[i]) / h;
        let (h00, h10, h01, h11) = hermite_basis(t);
        Ok(h00 * self.v[i] + h10 * h * self.d[i] + h01 * self.v[i + 1] + h11 * h * self.d[i + 1])
    }

    pub fn derivative(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Err(EndsError::Range(format!("r = {x} is negative")));
        }
        if x > self.r_max() {
            let n = self.r.len();
            return match self.extrapolation {
                Extrapolation::None => Err(EndsError::Range(format!(
                    "r = {x} beyond table range [0, {}]",
                    self.r_max()
                ))),
                Extrapolation::Constant => Ok(0.0),
                Extrapolation::LogLinear => {
                    let slope = (self.v[n - 1].ln() - self.v[n - 2].ln())
                        / (self.r[n - 1] - self.r[n - 2]);
                    Ok(slope * self.eval(x)?)
                }
            };
        }
        let i = self.segment(x);
        let h = self.r[i + 1] - self.r[i];
        let t = (x - self.r[i]) / h;
        // derivatives of the Hermite basis, divided by h
        let d00 = (6.0 * t * t - 6.0 * t) / h;
        let d10 = 3.0 * t * t - 4.0 * t + 1.0;
        let d01 = (-6.0 * t * t + 6.0 * t) / h;
        let d11 = 3.0 * t * t - 2.0 * t;
        Ok(d00 * self.v[i] + d10 * self.d[i] + d01 * self.v[i + 1] + d11 * self.d[i + 1])
    }
}

fn hermite_basis(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        2.0 * t3 - 3.0 * t2 + 1.0,
        t3 - 2.0 * t2 + t,
        -2.0 * t3 + 3.0 * t2,
        t3 - t2,
    )
}

/// Fritsch-Carlson slopes: shape-preserving, C1.
fn pchip_slopes(r: &[f64], v: &[f64]) -> Vec<f64> {
    let n = r.len();
    let h: Vec<f64> = (0..n - 1).map(|i| r[i + 1] - r[i]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (v[i + 1] - v[i]) / h[i]).collect();
    let mut d = vec![0.0; n];

    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    d[0] = end_slope(h[0], if n > 2 { h[1] } else { h[0] }, delta[0], if n > 2 { delta[1] } else { delta[0] });
    d[n - 1] = end_slope(
        h[n - 2],
        if n > 2 { h[n - 3] } else { h[n - 2] },
        delta[n - 2],
        if n > 2 { delta[n - 3] } else { delta[n - 2] },
    );
    d
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let mut d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        d = 0.0;
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        d = 3.0 * d0;
    }
    d
}
