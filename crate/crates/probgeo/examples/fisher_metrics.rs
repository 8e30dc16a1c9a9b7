//! Three routes to the information metric of a translated density family.
//!
//! For a family `P_theta(x) = P(x - theta)` the parameter metric can be
//! computed as the Fisher matrix of the family, or by contracting the
//! Jeffreys line element with the translation perturbations
//! `dP_j = d_j P`, or from any rigidly shifted copy of the same density.
//! All three must agree, and for a Gaussian the matrix is
//! `(alpha/2)/sigma^2 * identity`.
//!
//! Run with `cargo run --example fisher_metrics`.

use nalgebra::DMatrix;
use probgeo::grid::GridSpec;
use probgeo::infogeo::{fisher_metric_translation, jeffreys_line_element};
use probgeo::scenario::states::{fourier_bump, gaussian_packet};

fn main() -> probgeo::Result<()> {
    let alpha = 1.3;

    // A smooth strictly positive periodic density in two dimensions.
    let grid = GridSpec::periodic(&[40, 36], &[3.0, 2.5])?;
    let p = fourier_bump(&grid, 11)?.p().to_vec();

    let fisher = fisher_metric_translation(&grid, &p, alpha)?;
    println!("translation Fisher matrix (2D fourier bump, alpha = {alpha}):");
    for j in 0..2 {
        println!(
            "  [ {:>12.6}  {:>12.6} ]",
            fisher.entry(j, 0)?,
            fisher.entry(j, 1)?
        );
    }

    // Route two: the line element Q(dP) on translation perturbations.
    // Diagonal entries are Q(d_j P) directly; off-diagonal entries follow
    // from the polarization identity 2 g_jk = Q(u + v) - Q(u) - Q(v).
    let gx = grid.gradient(&p, 0)?;
    let gy = grid.gradient(&p, 1)?;
    let sum: Vec<f64> = gx.iter().zip(gy.iter()).map(|(&u, &v)| u + v).collect();
    let q_x = jeffreys_line_element(&grid, &p, &gx, alpha)?;
    let q_y = jeffreys_line_element(&grid, &p, &gy, alpha)?;
    let q_sum = jeffreys_line_element(&grid, &p, &sum, alpha)?;
    let line = DMatrix::from_row_slice(
        2,
        2,
        &[
            q_x,
            0.5 * (q_sum - q_x - q_y),
            0.5 * (q_sum - q_x - q_y),
            q_y,
        ],
    );
    let scale = fisher.matrix().amax();
    println!(
        "line-element route agrees to     {:e} (relative)",
        (fisher.matrix() - &line).amax() / scale
    );

    // Route three: the metric cannot see where the density sits.
    let mut rolled = p.clone();
    for axis in 0..2 {
        let shift = (grid.points(axis)? / 3) as isize;
        rolled = grid.translate(&rolled, axis, shift)?;
    }
    let fisher_rolled = fisher_metric_translation(&grid, &rolled, alpha)?;
    println!(
        "rolled-density route agrees to   {:e} (relative)",
        (fisher.matrix() - fisher_rolled.matrix()).amax() / scale
    );

    // Gaussian closed form: gamma = (alpha/2)/sigma^2 per axis.
    let grid = GridSpec::periodic(&[512], &[16.0])?;
    for sigma in [0.7, 1.0, 1.4] {
        let state = gaussian_packet(&grid, &[8.0], &[sigma], &[0.0])?;
        let gamma = fisher_metric_translation(&grid, state.p(), alpha)?.entry(0, 0)?;
        let exact = 0.5 * alpha / (sigma * sigma);
        println!(
            "gaussian sigma = {sigma}: gamma = {gamma:.9} vs (alpha/2)/sigma^2 = {exact:.9} \
             (relative deviation {:e})",
            (gamma - exact).abs() / exact
        );
    }
    Ok(())
}
