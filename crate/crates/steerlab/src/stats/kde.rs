//! Gaussian kernel density estimation for human-baseline comparison plots.

use crate::error::{Error, Result};

/// Bandwidth selection rule.
#[derive(Debug, Clone, Copy)]
pub enum BandwidthRule {
    /// `0.9 * min(sd, IQR / 1.34) * n^(-1/5)`.
    Silverman,
    Fixed(f64),
}

/// A density curve on a uniform grid, or a spike marker when every sample is
/// identical (zero bandwidth).
#[derive(Debug, Clone)]
pub enum KdeEstimate {
    Curve {
        grid: Vec<f64>,
        density: Vec<f64>,
        bandwidth: f64,
    },
    Spike {
        at: f64,
    },
}

// Four bandwidths of padding keep the truncated tail mass (~6e-5) well
// inside the 1e-3 integral tolerance.
const GRID_POINTS: usize = 512;
const GRID_PAD_BANDWIDTHS: f64 = 4.0;

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Estimate a density with a Gaussian kernel on a 512-point grid padded by
/// three bandwidths. The curve integrates to 1 within
/// [`crate::consts::DENSITY_INTEGRAL_TOL`] on its grid.
pub fn kde(samples: &[f64], rule: BandwidthRule) -> Result<KdeEstimate> {
    if samples.len() < 2 {
        return Err(Error::SampleTooSmall {
            needed: 2,
            got: samples.len(),
        });
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("non-finite sample in KDE input".into()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let sd = (samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();

    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);

    let bandwidth = match rule {
        BandwidthRule::Fixed(h) => h,
        BandwidthRule::Silverman => {
            let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
            0.9 * spread * n.powf(-0.2)
        }
    };
    if bandwidth <= 0.0 {
        // All values identical (or a degenerate fixed bandwidth): emit a
        // spike marker instead of a curve.
        return Ok(KdeEstimate::Spike { at: sorted[0] });
    }

    let lo = sorted[0] - GRID_PAD_BANDWIDTHS * bandwidth;
    let hi = sorted[sorted.len() - 1] + GRID_PAD_BANDWIDTHS * bandwidth;
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let norm = 1.0 / (n * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    let mut grid = Vec::with_capacity(GRID_POINTS);
    let mut density = Vec::with_capacity(GRID_POINTS);
    for i in 0..GRID_POINTS {
        let x = lo + step * i as f64;
        let mut acc = 0.0;
        for &s in samples {
            let z = (x - s) / bandwidth;
            acc += (-0.5 * z * z).exp();
        }
        grid.push(x);
        density.push(acc * norm);
    }
    Ok(KdeEstimate::Curve {
        grid,
        density,
        bandwidth,
    })
}

/// Trapezoid integral of a curve, for normalization checks.
pub fn integrate(grid: &[f64], density: &[f64]) -> f64 {
    grid.windows(2)
        .zip(density.windows(2))
        .map(|(x, y)| 0.5 * (y[0] + y[1]) * (x[1] - x[0]))
        .sum()
}
