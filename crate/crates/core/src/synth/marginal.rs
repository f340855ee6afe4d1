use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GRID: usize = 4096;

/// Target moments and support of one trait column.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraitDist {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl TraitDist {
    pub fn validate(&self) -> Result<()> {
        if !(self.sd > 0.0) || !(self.min < self.mean && self.mean < self.max) {
            return Err(Error::invalid(format!(
                "trait distribution needs sd > 0 and min < mean < max, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Standardized score.
    pub fn z(&self, v: f64) -> f64 {
        (v - self.mean) / self.sd
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Normal,
    /// `min + exp(Y)` with `Y` normal; used when the target mean sits too
    /// close to the lower bound for any truncated normal.
    LogNormal,
}

/// A two-parameter density truncated to [min, max], tabulated on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Marginal {
    pub shape: Shape,
    pub mu: f64,
    pub sigma: f64,
    pub min: f64,
    pub max: f64,
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

fn log_density(shape: Shape, mu: f64, sigma: f64, min: f64, x: f64) -> f64 {
    match shape {
        Shape::Normal => -0.5 * ((x - mu) / sigma).powi(2),
        Shape::LogNormal => {
            let d = x - min;
            if d <= 0.0 {
                f64::NEG_INFINITY
            } else {
                -0.5 * ((d.ln() - mu) / sigma).powi(2) - d.ln()
            }
        }
    }
}

impl Marginal {
    pub fn new(shape: Shape, mu: f64, sigma: f64, min: f64, max: f64) -> Self {
        let step = (max - min) / (GRID - 1) as f64;
        let xs: Vec<f64> = (0..GRID).map(|i| min + step * i as f64).collect();
        let logs: Vec<f64> = xs.iter().map(|&x| log_density(shape, mu, sigma, min, x)).collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let dens: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let mut cdf = vec![0.0; GRID];
        for i in 1..GRID {
            cdf[i] = cdf[i - 1] + 0.5 * (dens[i] + dens[i - 1]) * step;
        }
        let total = cdf[GRID - 1];
        for c in &mut cdf {
            *c /= total;
        }
        Marginal {
            shape,
            mu,
            sigma,
            min,
            max,
            xs,
            cdf,
        }
    }

    /// Mean and SD of the tabulated distribution (piecewise-linear CDF).
    pub fn moments(&self) -> (f64, f64) {
        let (mut m1, mut m2) = (0.0, 0.0);
        for i in 1..GRID {
            let p = self.cdf[i] - self.cdf[i - 1];
            let (a, b) = (self.xs[i - 1], self.xs[i]);
            m1 += p * (a + b) / 2.0;
            m2 += p * (a * a + a * b + b * b) / 3.0;
        }
        (m1, (m2 - m1 * m1).max(0.0).sqrt())
    }

    /// Inverse CDF by linear interpolation on the grid.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let i = self.cdf.partition_point(|c| *c < u).clamp(1, GRID - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        self.xs[i - 1] + t * (self.xs[i] - self.xs[i - 1])
    }

    /// Fits location and scale so the truncated distribution has the
    /// target mean and SD. Tries a normal first.
    pub fn fit(target: &TraitDist) -> Result<Self> {
        target.validate()?;
        for shape in [Shape::Normal, Shape::LogNormal] {
            if let Some(m) = fit_shape(shape, target) {
                return Ok(m);
            }
        }
        Err(Error::invalid(format!("cannot match moments of {target:?} on its support")))
    }

    /// `n` draws stratified over the unit interval: one uniform per
    /// equal-probability slice, in shuffled order.
    pub fn sample_stratified<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let mut v: Vec<f64> = (0..n)
            .map(|i| self.quantile((i as f64 + rng.random::<f64>()) / n as f64))
            .collect();
        v.shuffle(rng);
        v
    }
}

fn residual(shape: Shape, p: (f64, f64), t: &TraitDist) -> Option<(f64, f64)> {
    let sigma = p.1.exp();
    if !p.0.is_finite() || !sigma.is_finite() || sigma <= 0.0 {
        return None;
    }
    let (m, s) = Marginal::new(shape, p.0, sigma, t.min, t.max).moments();
    if !m.is_finite() || !s.is_finite() {
        return None;
    }
    Some(((m - t.mean) / t.sd, (s - t.sd) / t.sd))
}

/// Damped Newton on (mu, ln sigma) with a finite-difference Jacobian.
fn fit_shape(shape: Shape, t: &TraitDist) -> Option<Marginal> {
    let mut p = match shape {
        Shape::Normal => (t.mean, t.sd.ln()),
        Shape::LogNormal => {
            let d = t.mean - t.min;
            let s2 = (1.0 + (t.sd / d).powi(2)).ln();
            (d.ln() - s2 / 2.0, 0.5 * s2.ln())
        }
    };
    let norm = |r: (f64, f64)| (r.0 * r.0 + r.1 * r.1).sqrt();
    let mut r = residual(shape, p, t)?;
    for _ in 0..100 {
        if norm(r) < 1e-7 {
            return Some(Marginal::new(shape, p.0, p.1.exp(), t.min, t.max));
        }
        let h = 1e-6;
        let r0 = residual(shape, (p.0 + h * t.sd.max(1e-3), p.1), t)?;
        let r1 = residual(shape, (p.0, p.1 + h), t)?;
        let hx = h * t.sd.max(1e-3);
        let j = [
            [(r0.0 - r.0) / hx, (r1.0 - r.0) / h],
            [(r0.1 - r.1) / hx, (r1.1 - r.1) / h],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-300 {
            return None;
        }
        let d0 = -(j[1][1] * r.0 - j[0][1] * r.1) / det;
        let d1 = -(-j[1][0] * r.0 + j[0][0] * r.1) / det;
        let mut step = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let q = (p.0 + step * d0, p.1 + step * d1.clamp(-2.0, 2.0));
            if let Some(rq) = residual(shape, q, t) {
                if norm(rq) < norm(r) {
                    p = q;
                    r = rq;
                    improved = true;
                    break;
                }
            }
            step /= 2.0;
        }
        if !improved {
            break;
        }
    }
    (norm(r) < 1e-4).then(|| Marginal::new(shape, p.0, p.1.exp(), t.min, t.max))
}
