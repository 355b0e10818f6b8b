//! Scenarios, the strategy dispatcher and the four studies.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::hash::Hasher;

use fnv::FnvHasher;
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::channel::{
    build_channel_matrix, effective_channel, svd_canonical, ChannelMatrix, EffectiveChannel, GainModel,
};
use crate::error::{invalid, Result};
use crate::geometry::{build_upa, place_ue_ring, Axis, ElementGrid, Vec3};
use crate::linalg::{CMatrix, CanonicalSvd};
use crate::metrics::{cooperative_rates, noise_power, per_ue_sinr_rates, RateReport};
use crate::precoding::{allocate_uniform, allocate_waterfilling, amaf_directions, assemble_b, BeamformerSet};
use crate::tris::{
    combine_diagonal, mmse_matrix, nf_focusing_vector, partition_sectors, phi_eigenmode, phi_mmse_nondiag,
    psi_focusing, psi_mmse, psi_peb, PsiVector, Strategy, SurfaceConfig, SurfaceForm,
};

/// Azimuth of the first user in the two-user studies, degrees.
pub const FIRST_UE_AZIMUTH_DEG: f64 = 60.0;

/// Link and array parameters from which scenarios are built.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub total_power_w: f64,
    pub noise_psd_dbm_hz: f64,
    pub amaf_rows: usize,
    pub amaf_cols: usize,
    pub tris_rows: usize,
    pub tris_cols: usize,
    /// Element spacing of both arrays, in wavelengths.
    pub spacing_wavelengths: f64,
    /// Feeder-to-surface distance along +y, in wavelengths.
    pub feed_offset_wavelengths: f64,
    pub delta_tx: f64,
    pub seed: u64,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            carrier_hz: 28e9,
            bandwidth_hz: 120e6,
            total_power_w: 10e-3,
            noise_psd_dbm_hz: -170.0,
            amaf_rows: 4,
            amaf_cols: 4,
            tris_rows: 50,
            tris_cols: 50,
            spacing_wavelengths: 0.5,
            feed_offset_wavelengths: 8.0,
            delta_tx: 1e-8,
            seed: 0,
        }
    }
}

impl SystemParams {
    pub fn wavelength(&self) -> f64 {
        crate::wavelength(self.carrier_hz)
    }

    /// Feeder in the xz-plane at the origin facing +y, surface parallel to it
    /// at `feed_offset_wavelengths`.
    pub fn scenario(&self, ue_positions: Vec<Vec3>, strategy: Strategy) -> Result<Scenario> {
        if !(self.carrier_hz > 0.0 && self.carrier_hz.is_finite()) {
            return Err(invalid(format!(
                "carrier frequency must be positive, got {}",
                self.carrier_hz
            )));
        }
        let lambda = self.wavelength();
        let spacing = self.spacing_wavelengths * lambda;
        let amaf = build_upa(self.amaf_rows, self.amaf_cols, spacing, Vec3::ZERO, Axis::Y)?;
        let tris = build_upa(
            self.tris_rows,
            self.tris_cols,
            spacing,
            Vec3::new(0.0, self.feed_offset_wavelengths * lambda, 0.0),
            Axis::Y,
        )?;
        let scenario = Scenario {
            carrier_hz: self.carrier_hz,
            bandwidth_hz: self.bandwidth_hz,
            total_power_w: self.total_power_w,
            noise_psd_dbm_hz: self.noise_psd_dbm_hz,
            amaf,
            tris,
            ue_positions,
            strategy,
            delta_tx: self.delta_tx,
            seed: self.seed,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub total_power_w: f64,
    pub noise_psd_dbm_hz: f64,
    pub amaf: ElementGrid,
    pub tris: ElementGrid,
    pub ue_positions: Vec<Vec3>,
    pub strategy: Strategy,
    pub delta_tx: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn wavelength(&self) -> f64 {
        crate::wavelength(self.carrier_hz)
    }

    pub fn users(&self) -> usize {
        self.ue_positions.len()
    }

    pub fn noise_power(&self) -> Result<f64> {
        noise_power(self.noise_psd_dbm_hz, self.bandwidth_hz)
    }

    pub fn with_users(&self, ue_positions: Vec<Vec3>) -> Scenario {
        Scenario {
            ue_positions,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("carrier frequency", self.carrier_hz),
            ("bandwidth", self.bandwidth_hz),
            ("total power", self.total_power_w),
            ("regularisation", self.delta_tx),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.noise_psd_dbm_hz.is_finite() {
            return Err(invalid("noise PSD must be finite"));
        }
        if self.ue_positions.is_empty() {
            return Err(invalid("at least one user is required"));
        }
        if let Some(p) = self.ue_positions.iter().find(|p| !p.is_finite()) {
            return Err(invalid(format!(
                "user position ({}, {}, {}) is not finite",
                p.x, p.y, p.z
            )));
        }
        if self.users() > self.amaf.len() {
            return Err(invalid(format!(
                "{} users exceed the {} feeder antennas",
                self.users(),
                self.amaf.len()
            )));
        }
        Ok(())
    }

    /// FNV-1a 64 over the link parameters, both grids and the user
    /// positions (little-endian IEEE-754 bytes). The strategy and seed are
    /// not part of the digest.
    pub fn digest(&self) -> u64 {
        let mut h = FnvHasher::default();
        for v in [
            self.carrier_hz,
            self.bandwidth_hz,
            self.total_power_w,
            self.noise_psd_dbm_hz,
            self.delta_tx,
        ] {
            h.write(&v.to_le_bytes());
        }
        for grid in [&self.amaf, &self.tris] {
            h.write(&(grid.rows as u64).to_le_bytes());
            h.write(&(grid.cols as u64).to_le_bytes());
            for v in [grid.spacing, grid.center.x, grid.center.y, grid.center.z] {
                h.write(&v.to_le_bytes());
            }
        }
        for p in &self.ue_positions {
            for v in [p.x, p.y, p.z] {
                h.write(&v.to_le_bytes());
            }
        }
        h.finish()
    }
}

/// Feeder-to-surface channel and its SVD; independent of the users.
#[derive(Debug, Clone, PartialEq)]
pub struct FeederLink {
    pub g: ChannelMatrix,
    pub svd: CanonicalSvd,
}

impl FeederLink {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let g = build_channel_matrix(
            &scenario.amaf.positions,
            &scenario.tris.positions,
            scenario.wavelength(),
            GainModel::Transmit {
                boresight: scenario.amaf.normal,
            },
        )?;
        let svd = svd_canonical(&g)?;
        Ok(FeederLink { g, svd })
    }
}

pub fn user_channel(scenario: &Scenario) -> Result<ChannelMatrix> {
    build_channel_matrix(
        &scenario.tris.positions,
        &scenario.ue_positions,
        scenario.wavelength(),
        GainModel::ReceiveToward {
            target: scenario.tris.center,
        },
    )
}

/// A configured link ready for rate evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Configured {
    pub strategy: Strategy,
    pub beams: BeamformerSet,
    pub surface: SurfaceConfig,
    pub effective: EffectiveChannel,
}

/// Feeder precoder and surface configuration for `strategy`.
pub fn configure(strategy: Strategy, scenario: &Scenario) -> Result<(BeamformerSet, SurfaceConfig)> {
    scenario.validate()?;
    let feeder = FeederLink::new(scenario)?;
    let c = configure_with(strategy, scenario, &feeder)?;
    Ok((c.beams, c.surface))
}

/// As [`configure`], reusing a precomputed feeder link.
pub fn configure_with(strategy: Strategy, scenario: &Scenario, feeder: &FeederLink) -> Result<Configured> {
    scenario.validate()?;
    let k = scenario.users();
    let lambda = scenario.wavelength();
    let h = user_channel(scenario)?;
    let uniform = || allocate_uniform(scenario.total_power_w, k);

    let (beams, surface) = match strategy {
        Strategy::DFocU | Strategy::DFocW => {
            let directions = amaf_directions(&feeder.svd, k)?;
            let psis = (0..k)
                .map(|i| {
                    let f = nf_focusing_vector(&scenario.tris, scenario.ue_positions[i], lambda)?;
                    psi_focusing(&feeder.svd.left_vector(i), &f, i)
                })
                .collect::<Result<Vec<_>>>()?;
            let surface = combine_diagonal(&psis)?;
            let powers = if strategy == Strategy::DFocW {
                let he = effective_channel(&h, &surface, &feeder.g)?;
                let gains: Vec<f64> = CanonicalSvd::compute(&he.entries)?
                    .singular_values
                    .iter()
                    .map(|s| s * s)
                    .collect();
                allocate_waterfilling(&gains[..k], scenario.noise_power()?, scenario.total_power_w)?
            } else {
                uniform()?
            };
            (assemble_b(&directions, &powers)?, surface)
        }
        Strategy::DMmseU => {
            let directions = amaf_directions(&feeder.svd, k)?;
            let l = mmse_matrix(&h, scenario.delta_tx)?;
            let psis = (0..k)
                .map(|i| psi_mmse(&feeder.svd.left_vector(i), &l.column(i), i))
                .collect::<Result<Vec<_>>>()?;
            (assemble_b(&directions, &uniform()?)?, combine_diagonal(&psis)?)
        }
        Strategy::DPebU => {
            let partition = partition_sectors(&scenario.tris, k)?;
            let order = azimuth_order(&scenario.ue_positions, scenario.tris.center);
            let mut psis: Vec<Option<PsiVector>> = (0..k).map(|_| None).collect();
            let mut columns: Vec<Vec<Complex64>> = (0..k).map(|_| Vec::new()).collect();
            for (sector, &ue) in partition.index_sets.iter().zip(&order) {
                let (psi, v) = psi_peb(&feeder.g, sector, &scenario.tris, scenario.ue_positions[ue], ue)?;
                psis[ue] = Some(psi);
                columns[ue] = v;
            }
            let psis: Vec<PsiVector> = psis.into_iter().flatten().collect();
            let directions = CMatrix::from_columns(scenario.amaf.len(), &columns)?;
            (assemble_b(&directions, &uniform()?)?, combine_diagonal(&psis)?)
        }
        Strategy::NdEigW => {
            let h_svd = svd_canonical(&h)?;
            let modes = k.min(feeder.svd.singular_values.len());
            let gains: Vec<f64> = (0..modes)
                .map(|i| {
                    let g = feeder.svd.singular_values[i] * h_svd.singular_values[i];
                    g * g
                })
                .collect();
            let powers = allocate_waterfilling(&gains, scenario.noise_power()?, scenario.total_power_w)?;
            let directions = amaf_directions(&feeder.svd, k)?;
            (
                assemble_b(&directions, &powers)?,
                phi_eigenmode(&feeder.svd, &h_svd, false)?,
            )
        }
        Strategy::NdMmseU => {
            let l = mmse_matrix(&h, scenario.delta_tx)?;
            let directions = amaf_directions(&feeder.svd, k)?;
            (
                assemble_b(&directions, &uniform()?)?,
                phi_mmse_nondiag(&l, &feeder.svd)?,
            )
        }
    };
    let surface = surface.tagged(strategy);
    let effective = effective_channel(&h, &surface, &feeder.g)?;
    Ok(Configured {
        strategy,
        beams,
        surface,
        effective,
    })
}

/// User indices sorted by azimuth around `center` (ties by index).
pub fn azimuth_order(ue_positions: &[Vec3], center: Vec3) -> Vec<usize> {
    let az: Vec<f64> = ue_positions
        .iter()
        .map(|p| libm::atan2(p.y - center.y, p.x - center.x))
        .collect();
    let mut order: Vec<usize> = (0..ue_positions.len()).collect();
    order.sort_by(|&a, &b| az[a].total_cmp(&az[b]));
    order
}

/// Per-user rates of a configured link: cooperative rates for the
/// eigenmode benchmark, SINR rates otherwise.
pub fn rates(configured: &Configured, noise: f64) -> Result<Vec<f64>> {
    match &configured.surface.form {
        SurfaceForm::ImplicitEigenmode { users, .. } if configured.strategy == Strategy::NdEigW => {
            cooperative_rates(&users.left, &configured.effective, &configured.beams, noise)
        }
        _ => per_ue_sinr_rates(&configured.effective, &configured.beams, noise),
    }
}

pub fn evaluate(strategy: Strategy, scenario: &Scenario, feeder: &FeederLink) -> Result<RateReport> {
    let configured = configure_with(strategy, scenario, feeder)?;
    let r = rates(&configured, scenario.noise_power()?)?;
    Ok(RateReport::new(r, strategy, scenario.digest()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Angular,
    Distance,
    PowerAlloc,
    Scalability,
    Single,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Angular => "angular",
            StudyKind::Distance => "distance",
            StudyKind::PowerAlloc => "power-alloc",
            StudyKind::Scalability => "scalability",
            StudyKind::Single => "single",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub distance_m: f64,
    pub delta_phi_deg: f64,
    pub report: RateReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub kind: StudyKind,
    pub rows: Vec<StudyRow>,
}

impl StudyResult {
    pub fn for_strategy(&self, strategy: Strategy) -> impl Iterator<Item = &StudyRow> {
        self.rows.iter().filter(move |r| r.report.strategy == strategy)
    }
}

/// `k` users on a ring of radius `d` around the surface center, the first at
/// 60 degrees and each next one `delta_phi_deg` further.
pub fn ring_users(scenario: &Scenario, d: f64, delta_phi_deg: f64, k: usize) -> Result<Vec<Vec3>> {
    let az: Vec<f64> = (0..k)
        .map(|i| (FIRST_UE_AZIMUTH_DEG + i as f64 * delta_phi_deg) * PI / 180.0)
        .collect();
    place_ue_ring(d, &az, scenario.tris.center)
}

fn sweep(kind: StudyKind, base: &Scenario, points: &[(f64, f64)], strategies: &[Strategy]) -> Result<StudyResult> {
    let feeder = FeederLink::new(base)?;
    let mut rows = Vec::with_capacity(points.len() * strategies.len());
    for &strategy in strategies {
        for &(d, dphi) in points {
            let scenario = base.with_users(ring_users(base, d, dphi, 2)?);
            rows.push(StudyRow {
                distance_m: d,
                delta_phi_deg: dphi,
                report: evaluate(strategy, &scenario, &feeder)?,
            });
        }
    }
    Ok(StudyResult { kind, rows })
}

/// Two users at distance `d`, angular separation swept over `delta_phis`.
pub fn run_angular_sweep(base: &Scenario, d: f64, delta_phis: &[f64], strategies: &[Strategy]) -> Result<StudyResult> {
    let points: Vec<(f64, f64)> = delta_phis.iter().map(|&p| (d, p)).collect();
    sweep(StudyKind::Angular, base, &points, strategies)
}

/// Two users at fixed separation, moved radially over `distances`.
pub fn run_distance_sweep(
    base: &Scenario,
    distances: &[f64],
    delta_phi: f64,
    strategies: &[Strategy],
) -> Result<StudyResult> {
    let points: Vec<(f64, f64)> = distances.iter().map(|&d| (d, delta_phi)).collect();
    sweep(StudyKind::Distance, base, &points, strategies)
}

/// Distance sweeps repeated for each separation in `delta_phis`.
pub fn run_power_allocation(
    base: &Scenario,
    distances: &[f64],
    delta_phis: &[f64],
    strategies: &[Strategy],
) -> Result<StudyResult> {
    let points: Vec<(f64, f64)> = delta_phis
        .iter()
        .flat_map(|&p| distances.iter().map(move |&d| (d, p)))
        .collect();
    sweep(StudyKind::PowerAlloc, base, &points, strategies)
}

/// Sampling box for the Monte Carlo study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McRanges {
    pub distance_m: (f64, f64),
    pub azimuth_deg: (f64, f64),
}

impl Default for McRanges {
    fn default() -> Self {
        McRanges {
            distance_m: (5.0, 30.0),
            azimuth_deg: (30.0, 150.0),
        }
    }
}

/// Generator for trial `trial` with `k` users: ChaCha8 keyed by the seed
/// (little-endian in the first 8 key bytes, rest zero) on stream
/// `(k << 32) | trial`.
pub fn trial_rng(seed: u64, k: usize, trial: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(((k as u64) << 32) | (trial as u64 & 0xffff_ffff));
    rng
}

/// Uniform in [0, 1) from the top 53 bits of the next word.
fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// User positions for one trial; per user the distance is drawn first,
/// then the azimuth, both uniform on their ranges.
pub fn trial_positions(base: &Scenario, k: usize, trial: usize, ranges: &McRanges) -> Result<Vec<Vec3>> {
    let mut rng = trial_rng(base.seed, k, trial);
    let (d0, d1) = ranges.distance_m;
    let (a0, a1) = ranges.azimuth_deg;
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let d = d0 + (d1 - d0) * unit(&mut rng);
        let az = (a0 + (a1 - a0) * unit(&mut rng)) * PI / 180.0;
        out.extend(place_ue_ring(d, &[az], base.tris.center)?);
    }
    Ok(out)
}

/// Reports for every strategy on one Monte Carlo trial.
pub fn scalability_trial(
    base: &Scenario,
    feeder: &FeederLink,
    k: usize,
    trial: usize,
    ranges: &McRanges,
    strategies: &[Strategy],
) -> Result<Vec<RateReport>> {
    let scenario = base.with_users(trial_positions(base, k, trial, ranges)?);
    strategies.iter().map(|&s| evaluate(s, &scenario, feeder)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalabilityRow {
    pub k: usize,
    pub strategy: Strategy,
    pub trials: usize,
    pub mean_ue_rate: f64,
    /// Population variance of all per-user rates pooled over trials.
    pub ue_rate_variance: f64,
    pub mean_sum_rate: f64,
    pub mean_jain: f64,
}

/// Aggregates reports in the given (trial) order.
pub fn aggregate_trials(k: usize, strategy: Strategy, reports: &[RateReport]) -> Result<ScalabilityRow> {
    if reports.is_empty() {
        return Err(invalid("at least one trial is required"));
    }
    let n = reports.len() as f64;
    let samples = reports.iter().map(|r| r.per_ue_rates.len()).sum::<usize>() as f64;
    let mean_ue_rate = reports.iter().flat_map(|r| r.per_ue_rates.iter()).sum::<f64>() / samples;
    let ue_rate_variance = reports
        .iter()
        .flat_map(|r| r.per_ue_rates.iter())
        .map(|x| (x - mean_ue_rate) * (x - mean_ue_rate))
        .sum::<f64>()
        / samples;
    Ok(ScalabilityRow {
        k,
        strategy,
        trials: reports.len(),
        mean_ue_rate,
        ue_rate_variance,
        mean_sum_rate: reports.iter().map(|r| r.sum_rate).sum::<f64>() / n,
        mean_jain: reports.iter().map(|r| r.jain.value).sum::<f64>() / n,
    })
}

/// Sequential Monte Carlo over `k_values`; rows ordered by K, then strategy.
pub fn run_scalability_mc(
    base: &Scenario,
    k_values: &[usize],
    n_trials: usize,
    ranges: &McRanges,
    strategies: &[Strategy],
) -> Result<Vec<ScalabilityRow>> {
    if n_trials == 0 {
        return Err(invalid("at least one trial is required"));
    }
    let feeder = FeederLink::new(base)?;
    let mut rows = Vec::new();
    for &k in k_values {
        let per_trial = (0..n_trials)
            .map(|t| scalability_trial(base, &feeder, k, t, ranges, strategies))
            .collect::<Result<Vec<_>>>()?;
        rows.extend(collect_rows(k, strategies, &per_trial)?);
    }
    Ok(rows)
}

/// Turns per-trial report lists (one entry per strategy) into one row per
/// strategy.
pub fn collect_rows(k: usize, strategies: &[Strategy], per_trial: &[Vec<RateReport>]) -> Result<Vec<ScalabilityRow>> {
    strategies
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let reports: Vec<RateReport> = per_trial.iter().map(|t| t[i].clone()).collect();
            aggregate_trials(k, s, &reports)
        })
        .collect()
}
