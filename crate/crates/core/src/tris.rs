//! Surface configurations: the diagonal designs (focusing, MMSE, sector
//! eigenmode) and the non-diagonal benchmarks (eigenmode, MMSE).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;

use crate::channel::ChannelMatrix;
use crate::error::{invalid, Error, Result};
use crate::geometry::{ElementGrid, Vec3};
use crate::linalg::{CMatrix, CanonicalSvd};

/// Explicit eigenmode surfaces are only built up to this many elements.
pub const MAX_EXPLICIT_ELEMENTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    /// Diagonal, focusing, uniform power.
    DFocU,
    /// Diagonal, focusing, water-filling on the realised channel.
    DFocW,
    /// Diagonal, MMSE-weighted, uniform power.
    DMmseU,
    /// Diagonal, per-sector principal eigenmode, uniform power.
    DPebU,
    /// Non-diagonal eigenmode alignment, water-filling.
    NdEigW,
    /// Non-diagonal MMSE, uniform power.
    NdMmseU,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::DFocU,
        Strategy::DFocW,
        Strategy::DMmseU,
        Strategy::DPebU,
        Strategy::NdEigW,
        Strategy::NdMmseU,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::DFocU => "D-FOC-U",
            Strategy::DFocW => "D-FOC-W",
            Strategy::DMmseU => "D-MMSE-U",
            Strategy::DPebU => "D-PEB-U",
            Strategy::NdEigW => "ND-EIG-W",
            Strategy::NdMmseU => "ND-MMSE-U",
        }
    }

    pub fn is_diagonal(self) -> bool {
        !matches!(self, Strategy::NdEigW | Strategy::NdMmseU)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                let names: Vec<&str> = Strategy::ALL.iter().map(|s| s.name()).collect();
                invalid(format!("unknown strategy '{s}', expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceForm {
    /// Per-element unit-modulus weights.
    Diagonal(Vec<Complex64>),
    /// Full `N x N` matrix.
    Dense(CMatrix),
    /// `left * right^H`, both `N x K`.
    LowRank { left: CMatrix, right: CMatrix },
    /// `Q U^H` held through the SVDs of the feeder (`U`) and user (`Q`)
    /// channels; never materialised.
    ImplicitEigenmode { feeder: CanonicalSvd, users: CanonicalSvd },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceConfig {
    pub form: SurfaceForm,
    pub strategy: Option<Strategy>,
}

impl SurfaceConfig {
    pub fn elements(&self) -> usize {
        match &self.form {
            SurfaceForm::Diagonal(p) => p.len(),
            SurfaceForm::Dense(m) => m.rows(),
            SurfaceForm::LowRank { left, .. } => left.rows(),
            SurfaceForm::ImplicitEigenmode { feeder, .. } => feeder.left.rows(),
        }
    }

    pub fn tagged(mut self, strategy: Strategy) -> Self {
        self.strategy = Some(strategy);
        self
    }

    pub fn phases(&self) -> Option<&[Complex64]> {
        match &self.form {
            SurfaceForm::Diagonal(p) => Some(p),
            _ => None,
        }
    }

    /// Dense `N x N` matrix. Fails for the implicit eigenmode form.
    pub fn to_dense(&self) -> Result<CMatrix> {
        match &self.form {
            SurfaceForm::Diagonal(p) => {
                let mut m = CMatrix::zeros(p.len(), p.len());
                for (i, v) in p.iter().enumerate() {
                    m[(i, i)] = *v;
                }
                Ok(m)
            }
            SurfaceForm::Dense(m) => Ok(m.clone()),
            SurfaceForm::LowRank { left, right } => left.mul(&right.adjoint()),
            SurfaceForm::ImplicitEigenmode { .. } => Err(invalid(
                "the implicit eigenmode surface has no dense form; build it with explicit = true",
            )),
        }
    }
}

/// A user's desired contribution to the surface weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiVector {
    pub values: Vec<Complex64>,
    pub ue_index: usize,
}

/// Disjoint element index sets, one per sector, ordered along +x.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorPartition {
    pub index_sets: Vec<Vec<usize>>,
}

/// `exp(+j k d_j)`: conjugate of the propagation phase from each element to `ue`.
pub fn nf_focusing_vector(surface: &ElementGrid, ue: Vec3, wavelength: f64) -> Result<Vec<Complex64>> {
    check_wavelength(wavelength)?;
    let kappa = 2.0 * PI / wavelength;
    surface
        .positions
        .iter()
        .map(|&p| {
            let d = p.distance(ue);
            if d > 0.0 {
                Ok(Complex64::cis(kappa * d))
            } else {
                Err(Error::DegenerateGeometry(format!(
                    "user at ({}, {}, {}) coincides with a surface element",
                    ue.x, ue.y, ue.z
                )))
            }
        })
        .collect()
}

/// Plane-wave phase profile `exp(+j k n(theta, phi) . p_j)`.
pub fn ff_steering_vector(surface: &ElementGrid, theta: f64, phi: f64, wavelength: f64) -> Result<Vec<Complex64>> {
    check_wavelength(wavelength)?;
    let kappa = 2.0 * PI / wavelength;
    let st = libm::sin(theta);
    let n = Vec3::new(st * libm::cos(phi), st * libm::sin(phi), libm::cos(theta));
    Ok(surface
        .positions
        .iter()
        .map(|&p| Complex64::cis(kappa * n.dot(p)))
        .collect())
}

/// `conj(u_k) .* f`.
pub fn psi_focusing(u_k: &[Complex64], f_nf: &[Complex64], ue_index: usize) -> Result<PsiVector> {
    conj_product(u_k, f_nf, ue_index)
}

/// `conj(u_k) .* l_k`.
pub fn psi_mmse(u_k: &[Complex64], l_k: &[Complex64], ue_index: usize) -> Result<PsiVector> {
    conj_product(u_k, l_k, ue_index)
}

fn conj_product(u: &[Complex64], w: &[Complex64], ue_index: usize) -> Result<PsiVector> {
    if u.len() != w.len() {
        return Err(invalid(format!("vector lengths differ: {} vs {}", u.len(), w.len())));
    }
    Ok(PsiVector {
        values: u.iter().zip(w).map(|(a, b)| a.conj() * b).collect(),
        ue_index,
    })
}

/// Regularised MMSE precoder `L = eta (s I_N + H^H H)^-1 H^H`, `s = delta ||H||_F^2 / N`,
/// scaled to unit Frobenius norm. Computed as `H^H (s I_K + H H^H)^-1`.
pub fn mmse_matrix(h: &ChannelMatrix, delta_tx: f64) -> Result<CMatrix> {
    if !(delta_tx > 0.0 && delta_tx.is_finite()) {
        return Err(invalid(format!("regularisation must be positive, got {delta_tx}")));
    }
    let h = &h.entries;
    let fro2 = h.frobenius_norm_sqr();
    if !(fro2 > 0.0) {
        return Err(invalid("user channel is identically zero"));
    }
    let k = h.rows();
    let sigma = delta_tx * fro2 / h.cols() as f64;
    let mut gram = h.mul(&h.adjoint())?;
    for i in 0..k {
        gram[(i, i)] += sigma;
    }
    let inv = gram.solve(&CMatrix::identity(k))?;
    let l = h.adjoint().mul(&inv)?;
    let n = l.frobenius_norm();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::Numerical(format!("MMSE precoder has norm {n}")));
    }
    Ok(l.scale(1.0 / n))
}

/// `K` contiguous column stripes whose widths differ by at most one; the
/// first `cols % K` stripes are the wider ones.
pub fn partition_sectors(surface: &ElementGrid, k: usize) -> Result<SectorPartition> {
    if k == 0 {
        return Err(invalid("at least one sector is required"));
    }
    if k > surface.cols {
        return Err(invalid(format!(
            "{k} sectors requested but the surface has only {} columns",
            surface.cols
        )));
    }
    let base = surface.cols / k;
    let extra = surface.cols % k;
    let mut index_sets = Vec::with_capacity(k);
    let mut start = 0;
    for s in 0..k {
        let width = base + usize::from(s < extra);
        let mut set = Vec::with_capacity(width * surface.rows);
        for r in 0..surface.rows {
            for c in start..start + width {
                set.push(surface.index(r, c));
            }
        }
        index_sets.push(set);
        start += width;
    }
    Ok(SectorPartition { index_sets })
}

/// Principal eigenmode of the feeder channel restricted to `sector`.
///
/// Returns `psi_k = conj(u_1) .* f_nf(ue)`, zero outside the sector, and the
/// matching feeder direction `v_1`.
pub fn psi_peb(
    g: &ChannelMatrix,
    sector: &[usize],
    surface: &ElementGrid,
    ue: Vec3,
    ue_index: usize,
) -> Result<(PsiVector, Vec<Complex64>)> {
    if sector.is_empty() {
        return Err(invalid(format!("sector {ue_index} is empty")));
    }
    let n = g.rows();
    if surface.len() != n {
        return Err(invalid(format!(
            "surface has {} elements but the feeder channel has {n} rows",
            surface.len()
        )));
    }
    if let Some(&i) = sector.iter().find(|&&i| i >= n) {
        return Err(invalid(format!("sector index {i} out of range for {n} elements")));
    }
    let n_t = g.cols();
    let mut data = Vec::with_capacity(sector.len() * n_t);
    for &i in sector {
        data.extend_from_slice(g.entries.row(i));
    }
    let masked = CMatrix::from_row_major(sector.len(), n_t, data)?;
    if masked.frobenius_norm_sqr() == 0.0 {
        return Err(Error::DegenerateSector(ue_index));
    }
    let svd = CanonicalSvd::compute(&masked)?;
    let f = nf_focusing_vector(surface, ue, g.wavelength)?;
    let mut values = vec![Complex64::new(0.0, 0.0); n];
    for (r, &i) in sector.iter().enumerate() {
        values[i] = svd.left[(r, 0)].conj() * f[i];
    }
    Ok((PsiVector { values, ue_index }, svd.right_vector(0)))
}

/// `phi_n = exp(j arg(sum_k psi_k,n))`, with phase 0 where the sum vanishes.
pub fn combine_diagonal(psis: &[PsiVector]) -> Result<SurfaceConfig> {
    let first = psis
        .first()
        .ok_or_else(|| invalid("at least one user contribution is required"))?;
    let n = first.values.len();
    if let Some(p) = psis.iter().find(|p| p.values.len() != n) {
        return Err(invalid(format!(
            "user {} contribution has {} entries, expected {n}",
            p.ue_index,
            p.values.len()
        )));
    }
    let phases = (0..n)
        .map(|j| {
            let sum: Complex64 = psis.iter().map(|p| p.values[j]).sum();
            if sum.norm_sqr() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::cis(sum.arg())
            }
        })
        .collect();
    Ok(SurfaceConfig {
        form: SurfaceForm::Diagonal(phases),
        strategy: None,
    })
}

/// Eigenmode alignment `Phi = Q U^H`. With `explicit`, the dense unitary
/// matrix is built from completed bases (small surfaces only).
pub fn phi_eigenmode(g_svd: &CanonicalSvd, h_svd: &CanonicalSvd, explicit: bool) -> Result<SurfaceConfig> {
    let n = g_svd.left.rows();
    if h_svd.right.rows() != n {
        return Err(invalid(format!(
            "feeder channel has {n} surface elements, user channel has {}",
            h_svd.right.rows()
        )));
    }
    let form = if explicit {
        if n > MAX_EXPLICIT_ELEMENTS {
            return Err(invalid(format!(
                "explicit eigenmode surface limited to {MAX_EXPLICIT_ELEMENTS} elements, got {n}"
            )));
        }
        let q = h_svd.completed_right();
        let u = g_svd.completed_left();
        SurfaceForm::Dense(q.mul(&u.adjoint())?)
    } else {
        SurfaceForm::ImplicitEigenmode {
            feeder: g_svd.clone(),
            users: h_svd.clone(),
        }
    };
    Ok(SurfaceConfig { form, strategy: None })
}

/// Non-diagonal MMSE surface `Phi = L U_K^H`, kept in factored form.
pub fn phi_mmse_nondiag(l: &CMatrix, g_svd: &CanonicalSvd) -> Result<SurfaceConfig> {
    let k = l.cols();
    if l.rows() != g_svd.left.rows() {
        return Err(invalid(format!(
            "precoder has {} rows but the surface has {} elements",
            l.rows(),
            g_svd.left.rows()
        )));
    }
    if k > g_svd.left.cols() {
        return Err(invalid(format!(
            "{k} users exceed the {} feeder modes",
            g_svd.left.cols()
        )));
    }
    Ok(SurfaceConfig {
        form: SurfaceForm::LowRank {
            left: l.clone(),
            right: g_svd.left.leading_columns(k),
        },
        strategy: None,
    })
}

fn check_wavelength(wavelength: f64) -> Result<()> {
    if wavelength > 0.0 && wavelength.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("wavelength must be positive, got {wavelength}")))
    }
}

/// Comma-separated strategy list.
pub fn parse_strategies(list: &str) -> Result<Vec<Strategy>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(Strategy::from_str)
        .collect::<Result<Vec<_>>>()
        .and_then(|v| {
            if v.is_empty() {
                Err(invalid(String::from("empty strategy list")))
            } else {
                Ok(v)
            }
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_upa, Axis};

    const DEG: f64 = PI / 180.0;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("D-FOO".parse::<Strategy>().is_err());
        assert_eq!(
            parse_strategies("D-FOC-U, nd-eig-w").unwrap(),
            vec![Strategy::DFocU, Strategy::NdEigW]
        );
    }

    #[test]
    fn steering_examples() {
        let grid = build_upa(4, 4, 0.5, Vec3::ZERO, Axis::Y).unwrap();
        let v = ff_steering_vector(&grid, 90.0 * DEG, 90.0 * DEG, 1.0).unwrap();
        assert!(v.iter().all(|x| (x - c(1.0, 0.0)).norm() < 1e-12));

        let pair = build_upa(1, 2, 0.5, Vec3::ZERO, Axis::Y).unwrap();
        let v = ff_steering_vector(&pair, 90.0 * DEG, 0.0, 1.0).unwrap();
        let diff = (v[1] / v[0]).arg().abs();
        assert!((diff - PI).abs() < 1e-12);
        assert!(v.iter().all(|x| (x.norm() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn focusing_conjugates_propagation() {
        let grid = build_upa(3, 3, 0.5, Vec3::ZERO, Axis::Y).unwrap();
        let ue = Vec3::new(1.0, 4.0, 0.3);
        let f = nf_focusing_vector(&grid, ue, 1.0).unwrap();
        for (p, fj) in grid.positions.iter().zip(&f) {
            let prop = Complex64::cis(-2.0 * PI * p.distance(ue));
            let prod = fj * prop;
            assert!(prod.arg().abs() < 1e-9 && (prod.re - 1.0).abs() < 1e-9);
        }
        assert!(matches!(
            nf_focusing_vector(&grid, grid.positions[4], 1.0),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn psi_examples() {
        let ones = vec![c(1.0, 0.0); 4];
        assert_eq!(psi_focusing(&ones, &ones, 0).unwrap().values, ones);
        let u = vec![c(0.3, 0.4), c(0.0, 0.0), c(-1.0, 2.0)];
        let l = vec![c(2.0, -1.0), c(5.0, 5.0), c(0.0, 0.0)];
        let psi = psi_mmse(&u, &l, 1).unwrap();
        for j in 0..3 {
            assert!((psi.values[j].norm() - u[j].norm() * l[j].norm()).abs() < 1e-15);
        }
        assert_eq!(psi.values[1], c(0.0, 0.0));
        assert_eq!(psi.values[2], c(0.0, 0.0));
        assert!(psi_focusing(&u, &ones, 0).is_err());
    }

    #[test]
    fn sector_examples() {
        let grid = build_upa(2, 50, 0.5, Vec3::ZERO, Axis::Y).unwrap();
        let one = partition_sectors(&grid, 1).unwrap();
        assert_eq!(one.index_sets.len(), 1);
        assert_eq!(one.index_sets[0].len(), 100);

        let two = partition_sectors(&grid, 2).unwrap();
        assert_eq!(two.index_sets.iter().map(Vec::len).collect::<Vec<_>>(), vec![50, 50]);
        assert!(two.index_sets[0].iter().all(|&i| grid.positions[i].x < 0.0));

        let three = partition_sectors(&grid, 3).unwrap();
        let widths: Vec<usize> = three.index_sets.iter().map(|s| s.len() / 2).collect();
        assert_eq!(widths, vec![17, 17, 16]);
        let mut all: Vec<usize> = three.index_sets.concat();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());

        assert!(partition_sectors(&grid, 51).is_err());
    }

    #[test]
    fn combine_examples() {
        let psi = PsiVector {
            values: vec![c(2.0, 0.0), c(0.0, 0.5), c(-3.0, 0.0)],
            ue_index: 0,
        };
        let cfg = combine_diagonal(core::slice::from_ref(&psi)).unwrap();
        let phases = cfg.phases().unwrap();
        for (p, v) in phases.iter().zip(&psi.values) {
            assert!((p.norm() - 1.0).abs() < 1e-12);
            assert!((p.arg() - v.arg()).abs() < 1e-12);
        }
        let a = PsiVector {
            values: vec![c(1.0, 1.0)],
            ue_index: 0,
        };
        let b = PsiVector {
            values: vec![c(-1.0, -1.0)],
            ue_index: 1,
        };
        assert_eq!(combine_diagonal(&[a, b]).unwrap().phases().unwrap(), &[c(1.0, 0.0)]);
    }

    #[test]
    fn mmse_single_user_is_matched_filter() {
        let h = CMatrix::from_row_major(1, 3, vec![c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 3.0)]).unwrap();
        let l = mmse_matrix(
            &ChannelMatrix {
                entries: h.clone(),
                wavelength: 1.0,
            },
            1e-8,
        )
        .unwrap();
        assert!((l.frobenius_norm() - 1.0).abs() < 1e-14);
        let hh = h.adjoint().scale(1.0 / h.frobenius_norm());
        assert!(l.sub(&hh).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn mmse_regularisation_dominated_limit() {
        // Orthogonal rows of unequal norm: a huge regulariser makes L a scaled H^H.
        let h = CMatrix::from_row_major(
            2,
            3,
            vec![
                c(2.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 1.0),
                c(0.0, 0.0),
            ],
        )
        .unwrap();
        let l = mmse_matrix(
            &ChannelMatrix {
                entries: h.clone(),
                wavelength: 1.0,
            },
            1e12,
        )
        .unwrap();
        let mf = h.adjoint().scale(1.0 / h.frobenius_norm());
        assert!(l.sub(&mf).unwrap().frobenius_norm() < 1e-9);
    }

    #[test]
    fn explicit_eigenmode_too_large_rejected() {
        let g = CanonicalSvd::compute(&CMatrix::identity(65)).unwrap();
        let h = CanonicalSvd::compute(&CMatrix::from_fn(1, 65, |_, j| c(j as f64, 1.0))).unwrap();
        assert!(phi_eigenmode(&g, &h, true).is_err());
        assert!(phi_eigenmode(&g, &h, false).is_ok());
    }
}
