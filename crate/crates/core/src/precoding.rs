//! Feeder beamformers and transmit power allocation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::linalg::{norm, CMatrix, CanonicalSvd};

/// Feeder precoder `B = directions * diag(sqrt(powers))`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    /// `N_T x K`, unit-norm columns.
    pub directions: CMatrix,
    /// Per-stream power in watts.
    pub powers: Vec<f64>,
    pub total_power: f64,
}

impl BeamformerSet {
    pub fn streams(&self) -> usize {
        self.powers.len()
    }

    pub fn matrix(&self) -> CMatrix {
        let scale: Vec<Complex64> = self
            .powers
            .iter()
            .map(|&p| Complex64::new(libm::sqrt(p), 0.0))
            .collect();
        self.directions.scale_columns(&scale)
    }

    /// Column `k` of `B`.
    pub fn beam(&self, k: usize) -> Vec<Complex64> {
        let s = libm::sqrt(self.powers[k]);
        self.directions.column(k).into_iter().map(|v| v * s).collect()
    }
}

/// The first `k` right singular vectors of the feeder channel.
pub fn amaf_directions(g_svd: &CanonicalSvd, k: usize) -> Result<CMatrix> {
    if k == 0 {
        return Err(invalid("at least one stream is required"));
    }
    if k > g_svd.rank_used {
        return Err(invalid(format!(
            "{k} streams requested but the feeder channel has rank {}",
            g_svd.rank_used
        )));
    }
    Ok(g_svd.right.leading_columns(k))
}

pub fn allocate_uniform(total_power: f64, k: usize) -> Result<Vec<f64>> {
    check_power(total_power)?;
    if k == 0 {
        return Err(invalid("at least one stream is required"));
    }
    Ok(vec![total_power / k as f64; k])
}

/// Water-filling `P_k = max(0, mu - noise / g_k^2)` with `sum P_k = total_power`.
///
/// Solved exactly over the floors sorted ascending (ties by index). Streams
/// with zero gain get no power.
pub fn allocate_waterfilling(gains_sq: &[f64], noise_power: f64, total_power: f64) -> Result<Vec<f64>> {
    check_power(total_power)?;
    if !(noise_power >= 0.0 && noise_power.is_finite()) {
        return Err(invalid(format!("noise power must be non-negative, got {noise_power}")));
    }
    if let Some(g) = gains_sq.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
        return Err(invalid(format!(
            "channel gains must be non-negative and finite, got {g}"
        )));
    }
    let mut order: Vec<usize> = (0..gains_sq.len()).filter(|&i| gains_sq[i] > 0.0).collect();
    if order.is_empty() {
        return Err(Error::InfeasibleAllocation);
    }
    let floors: Vec<f64> = gains_sq.iter().map(|&g| noise_power / g).collect();
    order.sort_by(|&a, &b| floors[a].total_cmp(&floors[b]));

    // Work with offsets above the lowest floor so that equal floors give
    // exactly total_power / m.
    let base = floors[order[0]];
    let offsets: Vec<f64> = order.iter().map(|&i| floors[i] - base).collect();
    let mut active = 1;
    let mut level = total_power;
    let mut offset_sum = 0.0;
    for m in 1..=order.len() {
        offset_sum += offsets[m - 1];
        let candidate = (total_power + offset_sum) / m as f64;
        if candidate > offsets[m - 1] {
            active = m;
            level = candidate;
        } else {
            break;
        }
    }

    let mut powers = vec![0.0; gains_sq.len()];
    for (rank, &i) in order.iter().enumerate().take(active) {
        powers[i] = level - offsets[rank];
    }
    Ok(powers)
}

pub fn assemble_b(directions: &CMatrix, powers: &[f64]) -> Result<BeamformerSet> {
    if directions.cols() != powers.len() {
        return Err(invalid(format!(
            "{} beam directions but {} powers",
            directions.cols(),
            powers.len()
        )));
    }
    if let Some(p) = powers.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
        return Err(invalid(format!("stream power must be non-negative, got {p}")));
    }
    for c in 0..directions.cols() {
        let n = norm(&directions.column(c));
        if (n - 1.0).abs() > 1e-10 {
            return Err(invalid(format!("beam direction {c} has norm {n}, expected 1")));
        }
    }
    Ok(BeamformerSet {
        directions: directions.clone(),
        powers: powers.to_vec(),
        total_power: powers.iter().sum(),
    })
}

fn check_power(p: f64) -> Result<()> {
    if p > 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("total power must be positive, got {p}")))
    }
}
