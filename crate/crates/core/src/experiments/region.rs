//! Boundary curves of the admissible `(sigma_min, sigma_max)` region.

use std::io::Write;

use crate::bounds::case1_threshold;
use crate::error::{Error, Result};

/// One row of the region table. `None` marks a condition that does not
/// apply at this `sigma_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionRow {
    pub sigma_min: f64,
    pub sigma_max_weak: f64,
    pub sigma_max_case1: Option<f64>,
    pub sigma_max_case2: Option<f64>,
}

/// Largest `s <= 1` with `case1_threshold(s) <= sigma_min`.
fn case1_boundary(sigma_min: f64) -> Option<f64> {
    if sigma_min > 1.0 {
        return None;
    }
    if case1_threshold(1.0) <= sigma_min {
        return Some(1.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if case1_threshold(mid) <= sigma_min {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Tabulates the three boundaries over `resolution` evenly spaced
/// `sigma_min` values in `[0, 2]`.
pub fn region_curves(resolution: usize) -> Result<Vec<RegionRow>> {
    if resolution < 2 {
        return Err(Error::InvalidParams(format!("region resolution must be at least 2, got {resolution}")));
    }
    Ok((0..resolution)
        .map(|i| {
            let s = 2.0 * i as f64 / (resolution - 1) as f64;
            RegionRow {
                sigma_min: s,
                sigma_max_weak: 0.5 * (1.0 + s * s),
                sigma_max_case1: case1_boundary(s),
                sigma_max_case2: (s >= 1.0).then(|| s * s - s + 1.0),
            }
        })
        .collect())
}

pub fn write_region_csv(rows: &[RegionRow], mut out: impl Write) -> Result<()> {
    writeln!(out, "sigma_min,sigma_max_weak,sigma_max_case1,sigma_max_case2")?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.sigma_min,
            r.sigma_max_weak,
            opt(r.sigma_max_case1),
            opt(r.sigma_max_case2)
        )?;
    }
    Ok(())
}
