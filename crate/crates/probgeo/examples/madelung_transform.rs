//! The polar map between canonical fields and wavefunctions.
//!
//! `to_wavefunction` sends `(P, S)` to `psi = sqrt(P) exp(i S / alpha)`;
//! `from_wavefunction` inverts it, unwrapping the phase into a smooth
//! single-valued `S`. The map is gauge-covariant — shifting `S` by a
//! constant multiplies `psi` by a global phase — and its inverse reports
//! exactly the two things a polar chart cannot represent: nodes (no phase
//! to read) and windings (phase that climbs by `2 pi k` around a periodic
//! axis).
//!
//! Run with `cargo run --example madelung_transform`.

use num_complex::Complex64;
use probgeo::fields::{from_wavefunction, gauge_offset, to_wavefunction, ComplexField};
use probgeo::grid::GridSpec;
use probgeo::scenario::states::fourier_bump;

fn main() -> probgeo::Result<()> {
    let alpha = 0.8;
    let grid = GridSpec::periodic(&[128], &[6.0])?;
    let state = fourier_bump(&grid, 5)?;

    // Round trip: the density comes back exactly, the phase comes back up
    // to the constant the gauge fixing chose.
    let psi = to_wavefunction(&state, alpha)?;
    let (back, report) = from_wavefunction(&psi, alpha)?;
    let p_dev = state
        .p()
        .iter()
        .zip(back.p().iter())
        .map(|(&a, &b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let offset = gauge_offset(&grid, state.p(), state.s(), back.s())?;
    let s_dev = state
        .s()
        .iter()
        .zip(back.s().iter())
        .map(|(&a, &b)| (a - b - offset).abs())
        .fold(0.0f64, f64::max);
    println!("round trip on a smooth bump:");
    println!("  density deviation              {p_dev:e}");
    println!("  phase deviation (gauge-aligned) {s_dev:e}");
    println!(
        "  masked points {}, max neighbor jump {:.3} rad, windings {:?}",
        report.masked_points, report.max_neighbor_jump, report.windings
    );

    // Gauge covariance: S -> S + c is psi -> exp(i c / alpha) psi.
    let c = 1.9;
    let shifted = state.shift_phase(c)?;
    let psi_shifted = to_wavefunction(&shifted, alpha)?;
    let phase = Complex64::from_polar(1.0, c / alpha);
    let gauge_dev = psi
        .data()
        .iter()
        .zip(psi_shifted.data().iter())
        .map(|(&a, &b)| (phase * a - b).norm())
        .fold(0.0f64, f64::max);
    println!("gauge covariance: |exp(ic/alpha) psi - psi_shifted| <= {gauge_dev:e}");

    // A winding field: psi with unit density and phase 2 pi x / L climbs
    // by one full turn around the box. No single-valued S reproduces that;
    // the unwrapping keeps S smooth away from the seam and reports the
    // winding it had to drop.
    let extent = grid.extent(0)?;
    let winding = ComplexField::from_fn(grid, |x| {
        Complex64::from_polar(
            (1.0 / extent).sqrt(),
            2.0 * std::f64::consts::PI * x[0] / extent,
        )
    })?;
    let (_, report) = from_wavefunction(&winding, alpha)?;
    println!(
        "unit-winding field: reported windings {:?} (the part of the phase a \
         single-valued S cannot carry)",
        report.windings
    );
    Ok(())
}
