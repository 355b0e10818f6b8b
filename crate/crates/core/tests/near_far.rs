use std::f64::consts::PI;

use atris_core::geometry::{build_upa, fraunhofer_distance, relative_spherical, Axis, ElementGrid, Vec3};
use atris_core::tris::{ff_steering_vector, nf_focusing_vector};
use atris_core::{wavelength, Complex64};

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

/// Largest phase gap between focusing on `ue` and the plane-wave profile
/// towards it, after removing the common phase. The focusing vector
/// conjugates the channel while the steering vector follows it, so the two
/// are compared through their product.
fn phase_gap(surface: &ElementGrid, ue: Vec3, lambda: f64) -> f64 {
    let nf = nf_focusing_vector(surface, ue, lambda).unwrap();
    let dir = relative_spherical(surface.center, ue, Vec3::Y).unwrap();
    let ff = ff_steering_vector(surface, dir.polar, dir.azimuth, lambda).unwrap();
    let prod: Vec<Complex64> = nf.iter().zip(&ff).map(|(a, b)| a * b).collect();
    let reference = prod.iter().sum::<Complex64>().arg();
    prod.iter().map(|p| wrap(p.arg() - reference).abs()).fold(0.0, f64::max)
}

fn paper_surface() -> (ElementGrid, f64) {
    let lambda = wavelength(28e9);
    let center = Vec3::new(0.0, 8.0 * lambda, 0.0);
    (build_upa(50, 50, 0.5 * lambda, center, Axis::Y).unwrap(), lambda)
}

#[test]
fn focusing_converges_to_steering() {
    let (surface, lambda) = paper_surface();
    let d_ff = fraunhofer_distance(&surface, lambda).unwrap();
    for az in [60.0f64, 90.0, 120.0] {
        let gaps: Vec<f64> = [1.0, 2.0, 5.0, 10.0, 50.0, 100.0]
            .iter()
            .map(|m| {
                let phi = az.to_radians();
                let ue = surface.center + Vec3::new(m * d_ff * phi.cos(), m * d_ff * phi.sin(), 0.0);
                phase_gap(&surface, ue, lambda)
            })
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
        assert!(gaps[5] < 0.05, "{gaps:?}");
    }
}

#[test]
fn focusing_differs_from_steering_in_the_near_field() {
    let (surface, lambda) = paper_surface();
    let ue = surface.center + Vec3::new(0.0, 2.0, 0.0);
    assert!(phase_gap(&surface, ue, lambda) > 1.0);
}

#[test]
fn surface_fraunhofer_distance() {
    let (surface, lambda) = paper_surface();
    let d = fraunhofer_distance(&surface, lambda).unwrap();
    // Diagonal of a 25 x 25 wavelength aperture.
    let diag = 25.0 * lambda * 2f64.sqrt();
    assert!((d - 2.0 * diag * diag / lambda).abs() < 1e-9);
    assert!((d - 27.0).abs() < 1.5);
}
