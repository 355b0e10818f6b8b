//! Achievable rates and fairness.

use alloc::format;
use alloc::vec::Vec;

use crate::channel::EffectiveChannel;
use crate::error::{invalid, Error, Result};
use crate::linalg::{dot_conj, CMatrix};
use crate::precoding::BeamformerSet;
use crate::tris::Strategy;

/// Noise power in watts for a PSD in dBm/Hz integrated over `bandwidth_hz`.
pub fn noise_power(psd_dbm_per_hz: f64, bandwidth_hz: f64) -> Result<f64> {
    if !(bandwidth_hz > 0.0 && bandwidth_hz.is_finite()) {
        return Err(invalid(format!("bandwidth must be positive, got {bandwidth_hz}")));
    }
    let dbm = psd_dbm_per_hz + 10.0 * libm::log10(bandwidth_hz);
    Ok(libm::pow(10.0, (dbm - 30.0) / 10.0))
}

/// `log2(1 + |h_k b_k|^2 / (noise + sum_{i != k} |h_k b_i|^2))` per user.
pub fn per_ue_sinr_rates(he: &EffectiveChannel, beams: &BeamformerSet, noise: f64) -> Result<Vec<f64>> {
    check_noise(noise)?;
    let received = received_powers(he, beams)?;
    let k = he.users();
    Ok((0..k)
        .map(|u| {
            let signal = received[(u, u)].re;
            let interference: f64 = (0..k).filter(|&i| i != u).map(|i| received[(u, i)].re).sum();
            libm::log2(1.0 + signal / (noise + interference))
        })
        .collect())
}

/// `|h_k b_i|^2` as a real-valued `K x K` matrix (stored complex).
fn received_powers(he: &EffectiveChannel, beams: &BeamformerSet) -> Result<CMatrix> {
    if !he.entries.is_finite() {
        return Err(Error::Numerical("effective channel has non-finite entries".into()));
    }
    let b = beams.matrix();
    if he.antennas() != b.rows() || he.users() != b.cols() {
        return Err(invalid(format!(
            "effective channel is {}x{} but the beamformer is {}x{}",
            he.users(),
            he.antennas(),
            b.rows(),
            b.cols()
        )));
    }
    let mut amp = he.entries.mul(&b)?;
    for r in 0..amp.rows() {
        for c in 0..amp.cols() {
            let p = amp[(r, c)].norm_sqr();
            amp[(r, c)] = p.into();
        }
    }
    Ok(amp)
}

/// Rates after ideal receive combining with the columns of `combiners`:
/// `log2(1 + |p_k^H H_E b_k|^2 / noise)`.
pub fn cooperative_rates(
    combiners: &CMatrix,
    he: &EffectiveChannel,
    beams: &BeamformerSet,
    noise: f64,
) -> Result<Vec<f64>> {
    check_noise(noise)?;
    let k = beams.streams();
    if combiners.rows() != he.users() || combiners.cols() < k {
        return Err(invalid(format!(
            "combiner is {}x{}, need {} rows and at least {k} columns",
            combiners.rows(),
            combiners.cols(),
            he.users()
        )));
    }
    if he.antennas() != beams.directions.rows() {
        return Err(invalid("beamformer does not match the effective channel"));
    }
    let hb = he.entries.mul(&beams.matrix())?;
    Ok((0..k)
        .map(|s| {
            let gain = dot_conj(&combiners.column(s), &hb.column(s)).norm_sqr();
            libm::log2(1.0 + gain / noise)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JainIndex {
    pub value: f64,
    /// All rates were zero; `value` is reported as 1.
    pub degenerate: bool,
}

/// `(sum r)^2 / (K sum r^2)`.
pub fn jain_index(rates: &[f64]) -> JainIndex {
    let sum: f64 = rates.iter().sum();
    let sum_sq: f64 = rates.iter().map(|r| r * r).sum();
    if sum_sq == 0.0 {
        return JainIndex {
            value: 1.0,
            degenerate: true,
        };
    }
    JainIndex {
        value: sum * sum / (rates.len() as f64 * sum_sq),
        degenerate: false,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub per_ue_rates: Vec<f64>,
    pub sum_rate: f64,
    pub jain: JainIndex,
    pub strategy: Strategy,
    pub scenario_digest: u64,
}

impl RateReport {
    pub fn new(per_ue_rates: Vec<f64>, strategy: Strategy, scenario_digest: u64) -> Self {
        let sum_rate = per_ue_rates.iter().sum();
        let jain = jain_index(&per_ue_rates);
        RateReport {
            per_ue_rates,
            sum_rate,
            jain,
            strategy,
            scenario_digest,
        }
    }
}

fn check_noise(noise: f64) -> Result<()> {
    if noise > 0.0 && noise.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("noise power must be positive, got {noise}")))
    }
}
