//! The Dirac product induced by the phase-space geometry, and the Hilbert
//! space it puts on complex fields.
//!
//! In the complex coordinates `(ψ, ψ̄)` the Kähler triple is constant
//! (module [`kahler`](crate::kahler) verifies the cancellation), and the
//! natural pairing of two fields contracts the tangent vectors
//! `(φ, φ̄)` and `(ψ, ψ̄)` against `(g_c + iΩ_c)/2`:
//!
//! ```text
//! <phi|psi> = (1/2α) Σ_x ΔV (φ, φ̄) · [g_c + iΩ_c] · (ψ, ψ̄)ᵀ
//! ```
//!
//! With `g_c = [[0, α], [α, 0]]` and `Ω_c = [[0, iα], [−iα, 0]]` the
//! kernel collapses to `[[0, 0], [2α, 0]]`, so the contraction equals the
//! flat integral `∫ φ̄ ψ` — the Dirac product of standard quantum
//! mechanics, conjugate-linear in the **first** argument. The `1/α` factor
//! is part of this library's convention: the blocks are usually displayed
//! with their α suppressed (i.e. divided by α), and we keep α explicit in
//! the geometry, so the product must divide it back out to land on
//! `∫ φ̄ ψ` for every α.
//!
//! [`dirac_product`] computes **both** routes every time and returns the
//! contraction value after checking the two agree to twelve digits — the
//! equality of geometry and flat integral is a theorem here, so a
//! disagreement is an internal inconsistency, not data.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{check_positive_parameter, ComplexField};

/// The constant contraction kernel `(1/2α)(g_c + iΩ_c)` in `(ψ, ψ̄)`
/// coordinates, row-major. Algebraically `[[0, 0], [1, 0]]` for every α;
/// built here from the α-carrying blocks so the cancellation is computed,
/// not assumed.
pub fn contraction_kernel(alpha: f64) -> [[Complex64; 2]; 2] {
    let zero = Complex64::new(0.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let g_c = [
        [zero, Complex64::new(alpha, 0.0)],
        [Complex64::new(alpha, 0.0), zero],
    ];
    let omega_c = [[zero, i * alpha], [-i * alpha, zero]];
    let mut out = [[zero; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = (g_c[r][c] + i * omega_c[r][c]) / (2.0 * alpha);
        }
    }
    out
}

/// Both evaluations of the Dirac product: the geometric contraction and
/// the flat integral `∫ φ̄ ψ`. Exposed so consistency tests can inspect
/// the raw pair; most callers want [`dirac_product`].
///
/// # Errors
///
/// [`Error::GridMismatch`] unless both fields share a grid;
/// [`Error::InvalidParameter`] for a non-positive `alpha`.
pub fn dirac_product_routes(
    phi: &ComplexField,
    psi: &ComplexField,
    alpha: f64,
) -> Result<(Complex64, Complex64)> {
    check_positive_parameter("alpha", alpha)?;
    if phi.grid() != psi.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = phi.grid();
    let kernel = contraction_kernel(alpha);
    let mut contraction = Vec::with_capacity(phi.data().len());
    let mut flat = Vec::with_capacity(phi.data().len());
    for (&f, &g) in phi.data().iter().zip(psi.data().iter()) {
        let u = [f, f.conj()];
        let v = [g, g.conj()];
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..2 {
            for c in 0..2 {
                acc += kernel[r][c] * u[r] * v[c];
            }
        }
        contraction.push(acc);
        flat.push(f.conj() * g);
    }
    Ok((
        grid.integrate_complex(&contraction)?,
        grid.integrate_complex(&flat)?,
    ))
}

/// The Dirac product `<phi|psi>`, conjugate-linear in `phi`. Evaluates the
/// geometric contraction and the flat integral and returns the former.
///
/// # Errors
///
/// As in [`dirac_product_routes`], plus [`Error::Inconsistent`] if the two
/// routes disagree beyond `1e-12 · max(1, |value|)` — they are the same
/// number by construction, so that would mean the geometry is corrupted.
pub fn dirac_product(phi: &ComplexField, psi: &ComplexField, alpha: f64) -> Result<Complex64> {
    let (contraction, flat) = dirac_product_routes(phi, psi, alpha)?;
    let scale = contraction.norm().max(1.0);
    if (contraction - flat).norm() > 1e-12 * scale {
        return Err(Error::Inconsistent(format!(
            "Dirac product routes disagree: contraction {contraction}, \
             flat integral {flat}"
        )));
    }
    Ok(contraction)
}

/// The induced norm `√Re<psi|psi>`.
///
/// # Errors
///
/// As in [`dirac_product`], plus [`Error::Inconsistent`] if `<psi|psi>`
/// has an imaginary part above `1e-12 · max(1, |value|)` or a negative
/// real part beyond rounding — the product is positive-definite.
pub fn norm(psi: &ComplexField, alpha: f64) -> Result<f64> {
    let value = dirac_product(psi, psi, alpha)?;
    let scale = value.norm().max(1.0);
    if value.im.abs() > 1e-12 * scale {
        return Err(Error::Inconsistent(format!(
            "<psi|psi> = {value} has a non-real part"
        )));
    }
    if value.re < -1e-12 * scale {
        return Err(Error::Inconsistent(format!(
            "<psi|psi> = {value} is negative"
        )));
    }
    Ok(value.re.max(0.0).sqrt())
}
