//! The ten Galilean generators and their bracket table.
//!
//! In three dimensions the generators are the Hamiltonian, three momenta
//! `A_i`, three rotations `L_i`, and three boosts `G_i`. Their functional
//! Poisson brackets close on the Galilean algebra with the mass as the
//! central charge: `{A_i, G_j} = -m delta_ij`. The table below evaluates
//! every relation on a random compactly supported ensemble using analytic
//! variational derivatives; nothing about the state is special, which is
//! the point — the algebra holds on all of them.
//!
//! Run with `cargo run --example galilean_algebra`.

use probgeo::canonical::{build_galilean_generators, galilean_algebra_residual};
use probgeo::dynamics::HamiltonianKind;
use probgeo::grid::GridSpec;
use probgeo::scenario::states::centered_algebra_state;

fn main() -> probgeo::Result<()> {
    let (mass, alpha, time) = (1.3, 0.9, 0.35);
    let grid = GridSpec::vanishing_centered(&[24, 24, 24], &[9.0, 9.0, 9.0])?;
    let set = build_galilean_generators(3, mass, time, alpha, HamiltonianKind::QuantumFree)?;
    let state = centered_algebra_state(&grid, 7)?;

    let report = galilean_algebra_residual(&set, &state)?;
    println!(
        "bracket table on a seeded 3D ensemble (m = {mass}, alpha = {alpha}, t = {time}):"
    );
    println!("  {:<22} {:>13} {:>13} {:>11}", "relation", "lhs", "rhs", "residual");
    for r in &report.relations {
        println!(
            "  {:<22} {:>13.6e} {:>13.6e} {:>11.3e}",
            r.relation, r.lhs, r.rhs, r.residual
        );
    }
    println!(
        "{} relations, max relative residual {:e}",
        report.relations.len(),
        report.max_relative_residual()
    );

    // The central charge, read off directly: {A_x, G_x} = -m.
    let bracket = probgeo::canonical::poisson_bracket(
        &set.translations[0],
        &set.boosts[0],
        &state,
    )?;
    println!("central charge: {{A_x, G_x}} = {bracket:.12} (mass is {mass})");
    Ok(())
}
