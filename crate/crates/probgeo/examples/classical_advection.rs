//! The classical limit: a packet that moves without spreading.
//!
//! Dropping the quantum term from the ensemble Hamiltonian leaves the
//! classical free flow: a Gaussian with a linear phase `S = p x` advects
//! rigidly at velocity `p/m`, its width frozen. The same packet under the
//! full quantum flow spreads (see `wavepacket_spreading`); the difference
//! between the two limits is the whole story of the quantum potential.
//!
//! Run with `cargo run --example classical_advection`.

use probgeo::canonical::position_observable;
use probgeo::dynamics::{evolve, EvolutionConfig, HamiltonianKind};
use probgeo::grid::GridSpec;
use probgeo::scenario::states::gaussian_packet;

fn main() -> probgeo::Result<()> {
    let (mass, momentum) = (1.0, 1.0);
    let grid = GridSpec::vanishing_centered(&[384], &[24.0])?;
    let state = gaussian_packet(&grid, &[-4.0], &[1.0], &[momentum])?;

    let mut config = EvolutionConfig::new(HamiltonianKind::ClassicalFree, mass, 1.0, 5e-3, 1600);
    config.sample_every = 20;
    config.snapshot_every = 200;
    let traj = evolve(&state, &config)?;

    let center = position_observable(0);
    let x0 = center.value(&state)?;
    println!("classical advection at velocity p/m = {}:", momentum / mass);
    println!("  {:>6} {:>12} {:>12} {:>10}", "t", "center", "x0 + vt", "width");
    for (t, snapshot) in &traj.snapshots {
        let x = center.value(snapshot)?;
        let w = {
            // Width from the trajectory sample nearest this snapshot time.
            traj.samples
                .iter()
                .min_by(|a, b| {
                    (a.time - t).abs().total_cmp(&(b.time - t).abs())
                })
                .unwrap()
                .width[0]
        };
        println!(
            "  {:>6.2} {:>12.6} {:>12.6} {:>10.6}",
            t,
            x,
            x0 + momentum / mass * t,
            w
        );
    }

    let finish = center.value(&traj.final_state)?;
    let predicted = x0 + momentum / mass * traj.final_time;
    let w0 = traj.samples[0].width[0];
    let width_change = traj
        .samples
        .iter()
        .map(|s| (s.width[0] - w0).abs() / w0)
        .fold(0.0f64, f64::max);
    println!(
        "center error {:e} (one spacing is {:e}), relative width change {:e}",
        (finish - predicted).abs(),
        grid.spacing(0)?,
        width_change
    );
    println!(
        "norm drift {:e}, energy drift {:e}",
        traj.norm_drift(),
        traj.energy_drift()
    );
    Ok(())
}
