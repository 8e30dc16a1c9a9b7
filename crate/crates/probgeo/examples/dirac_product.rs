//! The inner product induced by the flat complex chart.
//!
//! In the chart `psi = sqrt(P) exp(iS/alpha)` the Kähler blocks become one
//! constant Hermitian form, and contracting two field variations with it
//! gives `(alpha/2) integral of conj(phi) psi` — the Dirac product, up to
//! the fixed scale. `dirac_product_routes` computes it both ways: through
//! the geometric contraction and through the plain pointwise integral.
//! The product is conjugate-linear in its first slot, Hermitian, positive,
//! and invariant under unitary evolution.
//!
//! Run with `cargo run --example dirac_product`.

use num_complex::Complex64;
use probgeo::dynamics::evolve_schrodinger;
use probgeo::fields::ComplexField;
use probgeo::grid::GridSpec;
use probgeo::hilbert::{dirac_product, dirac_product_routes, norm};
use probgeo::scenario::states::random_wavefunction;

fn main() -> probgeo::Result<()> {
    let alpha = 1.1;
    let grid = GridSpec::periodic(&[96], &[6.0])?;
    let phi = random_wavefunction(&grid, 1)?;
    let psi = random_wavefunction(&grid, 2)?;

    let (geometric, pointwise) = dirac_product_routes(&phi, &psi, alpha)?;
    println!("two routes to <phi, psi>:");
    println!("  geometric contraction  {geometric:.12}");
    println!("  pointwise integral     {pointwise:.12}");
    println!("  difference             {:e}", (geometric - pointwise).norm());

    // Conjugate-linear in the first slot, linear in the second.
    let (a, b) = (Complex64::new(0.6, -0.3), Complex64::new(-0.2, 0.9));
    let chi = random_wavefunction(&grid, 3)?;
    let combo_data: Vec<Complex64> = phi
        .data()
        .iter()
        .zip(chi.data().iter())
        .map(|(&f, &c)| a * f + b * c)
        .collect();
    let combo = ComplexField::new(grid, combo_data)?;
    let left = dirac_product(&combo, &psi, alpha)?;
    let left_expected = a.conj() * dirac_product(&phi, &psi, alpha)?
        + b.conj() * dirac_product(&chi, &psi, alpha)?;
    let right = dirac_product(&psi, &combo, alpha)?;
    let right_expected =
        a * dirac_product(&psi, &phi, alpha)? + b * dirac_product(&psi, &chi, alpha)?;
    println!(
        "sesquilinearity: first-slot deviation {:e}, second-slot deviation {:e}",
        (left - left_expected).norm(),
        (right - right_expected).norm()
    );

    // Hermitian symmetry and positivity.
    let forward = dirac_product(&phi, &psi, alpha)?;
    let reverse = dirac_product(&psi, &phi, alpha)?;
    println!(
        "hermitian symmetry: |<phi,psi> - conj(<psi,phi>)| = {:e}",
        (forward - reverse.conj()).norm()
    );
    println!(
        "positivity: <psi,psi> = {:.12} (norm {:.12})",
        dirac_product(&psi, &psi, alpha)?,
        norm(&psi, alpha)?
    );

    // Unitary evolution preserves every product, not just norms.
    let phi_t = evolve_schrodinger(&phi, 1.0, alpha, 1e-3, 400)?;
    let psi_t = evolve_schrodinger(&psi, 1.0, alpha, 1e-3, 400)?;
    let after = dirac_product(&phi_t, &psi_t, alpha)?;
    println!(
        "evolution invariance: |<phi,psi>(t) - <phi,psi>(0)| = {:e}",
        (after - forward).norm()
    );
    Ok(())
}
