//! The finite-dimensional kernel of the compatibility algebra.
//!
//! Given an antisymmetric nondegenerate `omega` and a symmetric
//! positive-definite `g` on an even-dimensional space, the only candidate
//! complex structure is `j = g^-1 omega`. The pair is Kähler-compatible
//! exactly when `j^2 = -I` and `j' g j = g`; `complex_structure_from_pair` builds
//! `j` and reports both residuals, flagging incompatible pairs instead of
//! failing on them.
//!
//! Run with `cargo run --example matrix_compatibility`.

use nalgebra::DMatrix;
use probgeo::kahler::complex_structure_from_pair;
use probgeo::scenario::states::rng;
use rand::Rng;

fn main() -> probgeo::Result<()> {
    // Compatible by construction: congruence images (T' J0 T, T' T) of the
    // standard pair, with T a random perturbation of the identity.
    println!("congruence images of the standard pair (compatible):");
    for n in [2usize, 4, 8] {
        let mut r = rng(31 + n as u64);
        let spread = 0.25 / (n as f64).sqrt();
        let t = DMatrix::from_fn(n, n, |i, j| {
            let base = if i == j { 1.0 } else { 0.0 };
            base + spread * r.random_range(-1.0..1.0)
        });
        let mut j0 = DMatrix::zeros(n, n);
        for k in 0..n / 2 {
            j0[(2 * k, 2 * k + 1)] = 1.0;
            j0[(2 * k + 1, 2 * k)] = -1.0;
        }
        let omega_raw = t.transpose() * &j0 * &t;
        let omega = 0.5 * (&omega_raw - omega_raw.transpose());
        let g_raw = t.transpose() * &t;
        let g = 0.5 * (&g_raw + g_raw.transpose());
        let report = complex_structure_from_pair(&omega, &g)?;
        println!(
            "  n = {n}: |j^2 + I| = {:e}, |j'gj - g| = {:e}, compatible at 1e-12: {}",
            report.complex_structure_residual,
            report.isometry_residual,
            report.is_compatible(1e-12)
        );
    }

    // Incompatible: block symplectic scalings 1 and 2 against the identity
    // metric. Then j = g^-1 omega squares to diag(-1, -1, -4, -4); no
    // complex structure exists for this pair and the residual says so.
    let mut omega = DMatrix::zeros(4, 4);
    omega[(0, 1)] = 1.0;
    omega[(1, 0)] = -1.0;
    omega[(2, 3)] = 2.0;
    omega[(3, 2)] = -2.0;
    let g = DMatrix::identity(4, 4);
    let report = complex_structure_from_pair(&omega, &g)?;
    println!("mismatched block scalings against the identity metric (incompatible):");
    println!(
        "  |j^2 + I| = {:e}, |j'gj - g| = {:e}, compatible at 1e-3: {}",
        report.complex_structure_residual,
        report.isometry_residual,
        report.is_compatible(1e-3)
    );
    println!("  candidate j was still constructed; its square has diagonal:");
    let jj = &report.j * &report.j;
    let diag: Vec<String> = (0..4).map(|i| format!("{:+.1}", jj[(i, i)])).collect();
    println!("    [{}]", diag.join(", "));
    Ok(())
}
