//! End-to-end acceptance gate.
//!
//! Each test below is one numbered shipping criterion for the toolkit. A
//! criterion prints one aligned line per measured quantity and a final
//! `criterion NN <name>: PASS|FAIL` verdict, then asserts the verdict, so
//! `cargo test --test acceptance` is the release gate and
//! `cargo test --test acceptance -- --nocapture` shows the measured numbers.
//!
//! Tolerances are pinned here, not imported, so a regression in the library
//! cannot silently relax the gate.

#![allow(clippy::needless_range_loop)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use probgeo::canonical::{
    angular_momentum_observable, boost_observable, build_galilean_generators,
    galilean_algebra_residual, gauge_invariance_residual, homogeneity_check,
    momentum_observable, normalization_observable, position_observable, Observable,
};
use probgeo::dynamics::{
    convergence_order, cross_validate, evolve, evolve_schrodinger, free_particle_hamiltonian,
    gaussian_width_prediction, hamiltonian_observable, wavefunction_polar_energy,
    EvolutionConfig, HamiltonianKind,
};
use probgeo::fields::{to_wavefunction, ComplexField, EnsembleState};
use probgeo::grid::GridSpec;
use probgeo::hilbert::{dirac_product, dirac_product_routes};
use probgeo::infogeo::{fisher_metric_translation, induced_param_metric, jeffreys_line_element};
use probgeo::kahler::{complex_structure_from_pair, build_general_triple, intermediate_j, verify_kahler};
use probgeo::scenario::config::parse_config;
use probgeo::scenario::runner::run;
use probgeo::scenario::states::{
    centered_algebra_state, fourier_bump, gaussian_packet, positive_modulation,
    random_wavefunction, rng, smooth_field,
};

// ---------------------------------------------------------------------------
// Reporting scaffold
// ---------------------------------------------------------------------------

/// Accumulates one criterion's check lines and prints them in a single call,
/// so parallel test output stays grouped.
struct Gate {
    number: u32,
    name: &'static str,
    buf: String,
    ok: bool,
}

impl Gate {
    fn new(number: u32, name: &'static str) -> Self {
        Self {
            number,
            name,
            buf: String::new(),
            ok: true,
        }
    }

    fn line(&mut self, label: &str, value: f64, tol: f64, op: &str, pass: bool) {
        self.buf.push_str(&format!(
            "  {label:<34} {value:>13.6e} {op} {tol:>9e}  {}\n",
            if pass { "PASS" } else { "FAIL" }
        ));
        self.ok &= pass;
    }

    /// Records `value <= tol` (non-finite values never pass).
    fn at_most(&mut self, label: &str, value: f64, tol: f64) {
        self.line(label, value, tol, "<=", value.is_finite() && value <= tol);
    }

    /// Records `value >= tol` (non-finite values never pass).
    fn at_least(&mut self, label: &str, value: f64, tol: f64) {
        self.line(label, value, tol, ">=", value.is_finite() && value >= tol);
    }

    fn finish(self) {
        let verdict = if self.ok { "PASS" } else { "FAIL" };
        print!(
            "criterion {:02} {}\n{}criterion {:02} {}: {verdict}\n",
            self.number, self.name, self.buf, self.number, self.name
        );
        assert!(
            self.ok,
            "criterion {:02} {} failed; see the lines above",
            self.number, self.name
        );
    }
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

// ---------------------------------------------------------------------------
// 1. Metric equivalence
// ---------------------------------------------------------------------------

/// Three routes to the translation metric — the Fisher matrix of the
/// translated family, the line element contracted with translation
/// perturbations, and the Fisher matrix of a rolled copy of the density —
/// agree pairwise within 1e-6 relative on 20 seeded smooth densities
/// (1D and 2D), and the Gaussian closed form (alpha/2)/sigma^2 is
/// reproduced to 1e-6 relative.
#[test]
fn criterion_01_metric_equivalence() {
    let mut gate = Gate::new(1, "metric equivalence");
    let alpha = 1.3;
    let grid_1d = GridSpec::periodic(&[96], &[5.0]).unwrap();
    let grid_2d = GridSpec::periodic(&[40, 36], &[3.0, 2.5]).unwrap();

    let mut max_line_dev = 0.0f64;
    let mut max_translation_dev = 0.0f64;
    for trial in 0..20 {
        let grid = if trial % 2 == 0 { grid_1d } else { grid_2d };
        let p = fourier_bump(&grid, 1000 + trial).unwrap().p().to_vec();
        let dim = grid.dim();

        let fisher = fisher_metric_translation(&grid, &p, alpha).unwrap();
        let scale = fisher.matrix().amax();

        // Line element route: diagonal entries are the quadratic form on a
        // single translation perturbation dP_j = d_j P; off-diagonal entries
        // come from the same form through the polarization identity.
        let grads: Vec<Vec<f64>> = (0..dim)
            .map(|a| grid.gradient(&p, a).unwrap())
            .collect();
        let mut line = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            line[(j, j)] = jeffreys_line_element(&grid, &p, &grads[j], alpha).unwrap();
            for k in (j + 1)..dim {
                let sum: Vec<f64> = grads[j]
                    .iter()
                    .zip(grads[k].iter())
                    .map(|(&u, &v)| u + v)
                    .collect();
                let q_sum = jeffreys_line_element(&grid, &p, &sum, alpha).unwrap();
                let q_j = jeffreys_line_element(&grid, &p, &grads[j], alpha).unwrap();
                let q_k = jeffreys_line_element(&grid, &p, &grads[k], alpha).unwrap();
                let off = 0.5 * (q_sum - q_j - q_k);
                line[(j, k)] = off;
                line[(k, j)] = off;
            }
        }
        max_line_dev = max_line_dev.max(max_abs_diff(fisher.matrix(), &line) / scale);

        // Translation invariance: rolling the density a third of the way
        // around every axis must leave the matrix unchanged.
        let mut rolled = p.clone();
        for a in 0..dim {
            let shift = (grid.points(a).unwrap() / 3) as isize;
            rolled = grid.translate(&rolled, a, shift).unwrap();
        }
        let fisher_rolled = fisher_metric_translation(&grid, &rolled, alpha).unwrap();
        max_translation_dev =
            max_translation_dev.max(max_abs_diff(fisher.matrix(), fisher_rolled.matrix()) / scale);
    }
    gate.at_most("fisher_vs_line_element", max_line_dev, 1e-6);
    gate.at_most("fisher_translation_invariance", max_translation_dev, 1e-6);

    // Gaussian closed form gamma = (alpha/2)/sigma^2, on a box wide enough
    // that the wrapped tails are negligible and fine enough that the
    // discrete-gradient correction sits below the tolerance.
    let grid = GridSpec::periodic(&[512], &[16.0]).unwrap();
    let state = gaussian_packet(&grid, &[8.0], &[1.0], &[0.0]).unwrap();
    let gamma = fisher_metric_translation(&grid, state.p(), alpha)
        .unwrap()
        .entry(0, 0)
        .unwrap();
    let exact = 0.5 * alpha;
    gate.at_most("gaussian_closed_form", (gamma - exact).abs() / exact, 1e-6);

    gate.finish();
}

// ---------------------------------------------------------------------------
// 2. Kähler solutions
// ---------------------------------------------------------------------------

/// For 50 seeded (density, mixing) pairs the constructed triple passes all
/// three compatibility conditions to 1e-12, the intermediate complex
/// structure squares to -I to 1e-13, and a 1e-2 defect injected into the
/// metric block is detected with residual >= 1e-3.
#[test]
fn criterion_02_kahler_solutions() {
    let mut gate = Gate::new(2, "kahler solutions");
    let alpha = 0.9;
    let grid = GridSpec::periodic(&[64], &[4.0]).unwrap();

    let mut max_triple = 0.0f64;
    let mut max_square = 0.0f64;
    let mut min_defect = f64::INFINITY;
    for trial in 0..50u64 {
        let state = fourier_bump(&grid, 2000 + trial).unwrap();
        let mixing = smooth_field(&grid, 2000 + trial + 0x5851_F42D, 0.8).unwrap();
        let triple = build_general_triple(&state, &mixing, alpha).unwrap();
        max_triple = max_triple.max(verify_kahler(&triple).max_residual());

        let c = positive_modulation(&grid, 2000 + trial + 0x9E37_79B9, 0.5).unwrap();
        let blocks = intermediate_j(&mixing, &c).unwrap();
        for b in &blocks {
            // J^2 + I, entrywise.
            let sq = [
                [
                    b[0][0] * b[0][0] + b[0][1] * b[1][0] + 1.0,
                    b[0][0] * b[0][1] + b[0][1] * b[1][1],
                ],
                [
                    b[1][0] * b[0][0] + b[1][1] * b[1][0],
                    b[1][0] * b[0][1] + b[1][1] * b[1][1] + 1.0,
                ],
            ];
            for row in &sq {
                for &v in row {
                    max_square = max_square.max(v.abs());
                }
            }
        }

        let mut defective = triple.clone();
        let mid = grid.num_points() / 2;
        defective.g[mid][1][1] *= 1.01;
        min_defect = min_defect.min(verify_kahler(&defective).max_residual());
    }
    gate.at_most("triple_conditions", max_triple, 1e-12);
    gate.at_most("intermediate_J_squares", max_square, 1e-13);
    gate.at_least("defect_detected", min_defect, 1e-3);
    gate.finish();
}

// ---------------------------------------------------------------------------
// 3. Flat coordinates
// ---------------------------------------------------------------------------

/// The complex-coordinate transform of the canonical triple lands on the
/// constant flat blocks within 1e-12 pointwise, for 10 seeded states.
#[test]
fn criterion_03_flat_coordinates() {
    let mut gate = Gate::new(3, "flat coordinates");
    let alpha = 0.8;
    let grid = GridSpec::periodic(&[64], &[4.0]).unwrap();

    let mut max_dev = 0.0f64;
    for trial in 0..10u64 {
        let state = fourier_bump(&grid, 3000 + trial).unwrap();
        let mixing = vec![0.0; grid.num_points()];
        let triple = build_general_triple(&state, &mixing, alpha).unwrap();
        let flat = probgeo::kahler::to_complex_coordinates(&triple, &state).unwrap();
        max_dev = max_dev.max(flat.max_flat_deviation);
    }
    gate.at_most("flat_block_deviation", max_dev, 1e-12);
    gate.finish();
}

// ---------------------------------------------------------------------------
// 4. Matrix-pair construction
// ---------------------------------------------------------------------------

/// For compatible seeded pairs (omega, g) of dimension up to 10 the
/// candidate complex structure g^-1 omega squares to -I and preserves g
/// within 1e-12; an incompatible pair is flagged with residual >= 1e-3.
#[test]
fn criterion_04_matrix_pair_construction() {
    let mut gate = Gate::new(4, "matrix-pair construction");

    let mut max_residual = 0.0f64;
    for (trial, &n) in [2usize, 4, 6, 8, 10, 2, 4, 6, 8, 10].iter().enumerate() {
        let mut r = rng(7000 + trial as u64);
        // T = I + (small)·random is safely invertible; any congruence image
        // (T' J0 T, T' T) of the standard pair is compatible by construction.
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
        let report = complex_structure_from_pair(&omega, &g).unwrap();
        max_residual = max_residual
            .max(report.complex_structure_residual)
            .max(report.isometry_residual);
    }
    gate.at_most("compatible_pairs", max_residual, 1e-12);

    // Mismatched block scalings against the identity metric: g^-1 omega
    // squares to diag(-1,-1,-4,-4), nowhere near -I.
    let mut omega = DMatrix::zeros(4, 4);
    omega[(0, 1)] = 1.0;
    omega[(1, 0)] = -1.0;
    omega[(2, 3)] = 2.0;
    omega[(3, 2)] = -2.0;
    let g = DMatrix::identity(4, 4);
    let report = complex_structure_from_pair(&omega, &g).unwrap();
    let flagged = report
        .complex_structure_residual
        .max(report.isometry_residual);
    gate.at_least("incompatible_flagged", flagged, 1e-3);
    assert!(!report.is_compatible(1e-3));
    gate.finish();
}

// ---------------------------------------------------------------------------
// 5. Galilean algebra
// ---------------------------------------------------------------------------

/// All nine bracket relation families — including {A_i, G_j} = -m delta_ij
/// and {H, G_i} = -A_i with the quantum Hamiltonian — hold on 10 seeded
/// compact 3D states with max relative residual <= 1e-6, using analytic
/// variational derivatives throughout.
#[test]
fn criterion_05_galilean_algebra() {
    let mut gate = Gate::new(5, "galilean algebra");
    let grid = GridSpec::vanishing_centered(&[24, 24, 24], &[9.0, 9.0, 9.0]).unwrap();
    let set = build_galilean_generators(3, 1.3, 0.35, 0.9, HamiltonianKind::QuantumFree).unwrap();
    assert!(set.translations.iter().all(Observable::is_analytic));
    assert!(set.boosts.iter().all(Observable::is_analytic));
    assert!(set.hamiltonian.is_analytic());

    // A relation's family is the pair of generator letters in its label,
    // e.g. "{A_x,G_y} = 0" belongs to (A, G). All nine must show up.
    let family = |relation: &str| -> (char, char) {
        let mut parts = relation.trim_start_matches('{').split(',');
        let first = parts.next().unwrap().chars().next().unwrap();
        let second = parts.next().unwrap().chars().next().unwrap();
        (first, second)
    };

    let mut worst = 0.0f64;
    for trial in 0..10u64 {
        let state = centered_algebra_state(&grid, 4000 + trial).unwrap();
        let report = galilean_algebra_residual(&set, &state).unwrap();
        let seen: std::collections::BTreeSet<(char, char)> =
            report.relations.iter().map(|r| family(&r.relation)).collect();
        for pair in [
            ('H', 'A'),
            ('H', 'L'),
            ('H', 'G'),
            ('A', 'A'),
            ('L', 'A'),
            ('A', 'G'),
            ('L', 'L'),
            ('L', 'G'),
            ('G', 'G'),
        ] {
            assert!(
                seen.contains(&pair),
                "relation family {{{},{}}} missing from the 3D table",
                pair.0,
                pair.1
            );
        }
        worst = worst.max(report.max_relative_residual());
    }
    gate.at_most("bracket_relations", worst, 1e-6);
    gate.finish();
}

// ---------------------------------------------------------------------------
// 6. Hamiltonian identities
// ---------------------------------------------------------------------------

/// The free-particle Hamiltonian equals (alpha/4m) times the trace of the
/// induced parameter metric within 1e-10 and the polar-route wavefunction
/// kinetic energy within 1e-8, on 10 seeded states; the Gaussian value
/// alpha^2/(8 m sigma^2) is reproduced to 1e-6 relative.
#[test]
fn criterion_06_hamiltonian_identities() {
    let mut gate = Gate::new(6, "hamiltonian identities");
    let (mass, alpha) = (1.4, 0.9);
    let grid = GridSpec::periodic(&[128], &[6.0]).unwrap();

    let mut max_trace_dev = 0.0f64;
    let mut max_polar_dev = 0.0f64;
    for trial in 0..10u64 {
        let state = fourier_bump(&grid, 5000 + trial).unwrap();
        let h = free_particle_hamiltonian(&state, mass, alpha).unwrap();

        let metric = induced_param_metric(&state, alpha).unwrap();
        let traced = alpha / (4.0 * mass) * metric.trace();
        max_trace_dev = max_trace_dev.max((h - traced).abs() / h.abs());

        let psi = to_wavefunction(&state, alpha).unwrap();
        let polar = wavefunction_polar_energy(&psi, mass, alpha).unwrap();
        max_polar_dev = max_polar_dev.max((h - polar).abs() / h.abs());
    }
    gate.at_most("trace_identity", max_trace_dev, 1e-10);
    gate.at_most("polar_energy_identity", max_polar_dev, 1e-8);

    let grid = GridSpec::periodic(&[512], &[16.0]).unwrap();
    let state = gaussian_packet(&grid, &[8.0], &[1.0], &[0.0]).unwrap();
    let h = free_particle_hamiltonian(&state, mass, alpha).unwrap();
    let exact = alpha * alpha / (8.0 * mass);
    gate.at_most("gaussian_value", (h - exact).abs() / exact, 1e-6);
    gate.finish();
}

// ---------------------------------------------------------------------------
// 7. Dynamics equivalence
// ---------------------------------------------------------------------------

/// Over a horizon where the packet width grows by more than 50%, the
/// canonical rk4 flow and the unitary wavefunction oracle agree in psi-space
/// L2 within 1e-4 at the reference resolution and converge at order >= 2
/// under spatial refinement; the measured width tracks the closed form
/// within 1e-4 relative; norm is conserved to 1e-9 and energy to 1e-6.
///
/// The least-squares slope over dyadic resolutions estimates the order from
/// below: the discrepancy is A*h^2*(1 + q*h^2) with q < 0 here, so the
/// estimate rises toward 2 under refinement (1.9947, then 1.9982 for the
/// pair slopes) without reaching it at any finite h. The gate therefore
/// pins the standard verification margin (>= 1.95) together with the
/// structural signature that separates genuine second order from a
/// fractional order: the pair slope must increase under refinement.
#[test]
fn criterion_07_dynamics_equivalence() {
    let mut gate = Gate::new(7, "dynamics equivalence");
    let (mass, alpha, sigma0) = (1.0, 1.0, 1.0);
    let horizon = 2.3;

    let growth = gaussian_width_prediction(sigma0, mass, alpha, horizon) / sigma0;
    gate.at_least("width_growth_factor", growth, 1.5);

    // Cross-validation at three resolutions. The time step scales with h^2
    // (a fixed fraction of the stability bound), which keeps the schemes'
    // O(dt^2)/O(dt^4) time errors at h^4 and below, so the measured
    // discrepancy is purely spatial. The box keeps the lowest density at
    // 3e-8 of the peak: node-free at every resolution, and light enough in
    // the tails that the periodic seam carries no measurable weight.
    let mut spacings = Vec::new();
    let mut errors = Vec::new();
    let mut norm_drift = 0.0f64;
    let mut energy_drift = 0.0f64;
    for &n in &[128usize, 256, 512] {
        let grid = GridSpec::periodic(&[n], &[12.0]).unwrap();
        let state = gaussian_packet(&grid, &[6.0], &[sigma0], &[0.0]).unwrap();
        let dt = 5e-5 * (512.0 / n as f64).powi(2);
        let config = EvolutionConfig::new(HamiltonianKind::QuantumFree, mass, alpha, dt, 1);
        let report = cross_validate(&state, &config, horizon).unwrap();
        assert!(report.applicable);
        spacings.push(grid.spacing(0).unwrap());
        errors.push(report.max_psi_l2);
        norm_drift = norm_drift.max(report.rk4_norm_drift).max(report.oracle_norm_drift);
        energy_drift = energy_drift.max(report.rk4_energy_drift);
    }
    gate.at_most("psi_l2_at_reference", errors[2], 1e-4);
    let order = convergence_order(&spacings, &errors).unwrap();
    gate.at_least("refinement_order", order, 1.95);
    let coarse_slope = (errors[0] / errors[1]).ln() / 2f64.ln();
    let fine_slope = (errors[1] / errors[2]).ln() / 2f64.ln();
    gate.at_least("order_estimate_rise", fine_slope - coarse_slope, 0.0);

    // Width against the closed form, on a box wide enough that the wrapped
    // tails stay above the node threshold for the whole horizon.
    let grid = GridSpec::periodic(&[512], &[14.0]).unwrap();
    let state = gaussian_packet(&grid, &[7.0], &[sigma0], &[0.0]).unwrap();
    let mut config = EvolutionConfig::new(HamiltonianKind::QuantumFree, mass, alpha, 7e-5, 32858);
    config.sample_every = 250;
    let traj = evolve(&state, &config).unwrap();
    let w0 = traj.samples[0].width[0];
    let mut width_dev = 0.0f64;
    for s in &traj.samples {
        let predicted = gaussian_width_prediction(w0, mass, alpha, s.time);
        width_dev = width_dev.max((s.width[0] - predicted).abs() / predicted);
    }
    gate.at_most("width_closed_form", width_dev, 1e-4);
    norm_drift = norm_drift.max(traj.norm_drift());
    energy_drift = energy_drift.max(traj.energy_drift());

    gate.at_most("norm_drift", norm_drift, 1e-9);
    gate.at_most("energy_drift", energy_drift, 1e-6);
    gate.finish();
}

// ---------------------------------------------------------------------------
// 8. Classical limit
// ---------------------------------------------------------------------------

/// Under the classical free flow a Gaussian with linear phase advects
/// rigidly: center error <= one grid spacing over the horizon, width change
/// <= 1e-3 relative.
#[test]
fn criterion_08_classical_limit() {
    let mut gate = Gate::new(8, "classical limit");
    let grid = GridSpec::vanishing_centered(&[384], &[24.0]).unwrap();
    let (mass, momentum) = (1.0, 1.0);
    let state = gaussian_packet(&grid, &[-4.0], &[1.0], &[momentum]).unwrap();
    let mut config = EvolutionConfig::new(HamiltonianKind::ClassicalFree, mass, 1.0, 5e-3, 1600);
    config.sample_every = 20;
    let traj = evolve(&state, &config).unwrap();

    let center_obs = position_observable(0);
    let start = center_obs.value(&state).unwrap();
    let finish = center_obs.value(&traj.final_state).unwrap();
    let predicted = start + momentum / mass * traj.final_time;
    gate.at_most(
        "center_error",
        (finish - predicted).abs(),
        grid.spacing(0).unwrap(),
    );

    let w0 = traj.samples[0].width[0];
    let mut width_change = 0.0f64;
    for s in &traj.samples {
        width_change = width_change.max((s.width[0] - w0).abs() / w0);
    }
    gate.at_most("width_change", width_change, 1e-3);
    gate.finish();
}

// ---------------------------------------------------------------------------
// 9. Observable admissibility
// ---------------------------------------------------------------------------

/// Every built-in observable is gauge-invariant (1e-10), homogeneous of
/// degree one (1e-10), and satisfies the local-density identity (1e-9);
/// the deliberate counterexample (integral of P)^2 fails homogeneity.
#[test]
fn criterion_09_observable_admissibility() {
    let mut gate = Gate::new(9, "observable admissibility");
    let grid = GridSpec::vanishing_centered(&[16, 16, 16], &[8.0, 8.0, 8.0]).unwrap();
    let state = centered_algebra_state(&grid, 6000).unwrap();
    let (mass, alpha, time) = (1.3, 0.9, 0.45);

    let mut built_ins = vec![normalization_observable()];
    for axis in 0..3 {
        built_ins.push(position_observable(axis));
        built_ins.push(momentum_observable(axis));
        built_ins.push(angular_momentum_observable(axis));
        built_ins.push(boost_observable(axis, mass, time));
    }
    built_ins.push(hamiltonian_observable(HamiltonianKind::QuantumFree, mass, alpha).unwrap());

    let mut gauge = 0.0f64;
    let mut scaling = 0.0f64;
    let mut local_density = 0.0f64;
    for f in &built_ins {
        let value = f.value(&state).unwrap();
        let scale = value.abs().max(1.0);
        gauge = gauge.max(gauge_invariance_residual(f, &state, 0.7).unwrap() / scale);
        let report = homogeneity_check(f, &state, 1.7).unwrap();
        scaling = scaling.max(report.scaling_residual / scale);
        let euler = report
            .local_density_residual
            .expect("every built-in claims homogeneity");
        local_density = local_density.max(euler / scale);
    }
    gate.at_most("gauge_invariance", gauge, 1e-10);
    gate.at_most("homogeneity", scaling, 1e-10);
    gate.at_most("local_density_identity", local_density, 1e-9);

    // The square of the total probability is gauge-invariant and positive
    // but degree two in P; the homogeneity check must reject it.
    let counterexample = Observable::from_value("squared_norm", true, |st: &EnsembleState| {
        let n = st.grid().integrate(st.p())?;
        Ok(n * n)
    });
    let report = homogeneity_check(&counterexample, &state, 1.7).unwrap();
    gate.at_least("counterexample_rejected", report.scaling_residual, 1e-2);
    gate.finish();
}

// ---------------------------------------------------------------------------
// 10. Dirac product
// ---------------------------------------------------------------------------

/// The two computation routes for the Dirac product agree within 1e-12 on
/// 20 seeded pairs; the product is conjugate-linear in its first slot,
/// linear in its second, Hermitian, and positive; and it is invariant under
/// unitary evolution of both fields to 1e-8.
#[test]
fn criterion_10_dirac_product() {
    let mut gate = Gate::new(10, "dirac product");
    let alpha = 1.1;
    let grid = GridSpec::periodic(&[96], &[6.0]).unwrap();
    let a = Complex64::new(0.6, -0.3);
    let b = Complex64::new(-0.2, 0.9);

    let mut route_dev = 0.0f64;
    let mut sesqui_dev = 0.0f64;
    let mut hermitian_dev = 0.0f64;
    let mut min_self = f64::INFINITY;
    let mut evolution_dev = 0.0f64;
    for trial in 0..20u64 {
        let phi = random_wavefunction(&grid, 8000 + trial).unwrap();
        let psi = random_wavefunction(&grid, 9000 + trial).unwrap();
        let chi = random_wavefunction(&grid, 10_000 + trial).unwrap();

        let (geometric, pointwise) = dirac_product_routes(&phi, &psi, alpha).unwrap();
        route_dev = route_dev.max((geometric - pointwise).norm() / (1.0 + geometric.norm()));

        let combo_data: Vec<Complex64> = phi
            .data()
            .iter()
            .zip(chi.data().iter())
            .map(|(&f, &c)| a * f + b * c)
            .collect();
        let combo = ComplexField::new(grid, combo_data).unwrap();
        let left = dirac_product(&combo, &psi, alpha).unwrap();
        let left_expected = a.conj() * dirac_product(&phi, &psi, alpha).unwrap()
            + b.conj() * dirac_product(&chi, &psi, alpha).unwrap();
        let right = dirac_product(&psi, &combo, alpha).unwrap();
        let right_expected = a * dirac_product(&psi, &phi, alpha).unwrap()
            + b * dirac_product(&psi, &chi, alpha).unwrap();
        sesqui_dev = sesqui_dev
            .max((left - left_expected).norm())
            .max((right - right_expected).norm());

        let forward = dirac_product(&phi, &psi, alpha).unwrap();
        let reverse = dirac_product(&psi, &phi, alpha).unwrap();
        hermitian_dev = hermitian_dev.max((forward - reverse.conj()).norm());

        min_self = min_self.min(dirac_product(&psi, &psi, alpha).unwrap().re);

        let phi_t = evolve_schrodinger(&phi, 1.0, alpha, 1e-3, 200).unwrap();
        let psi_t = evolve_schrodinger(&psi, 1.0, alpha, 1e-3, 200).unwrap();
        let after = dirac_product(&phi_t, &psi_t, alpha).unwrap();
        evolution_dev = evolution_dev.max((after - forward).norm());
    }
    gate.at_most("route_agreement", route_dev, 1e-12);
    gate.at_most("sesquilinearity", sesqui_dev, 1e-12);
    gate.at_most("hermitian_symmetry", hermitian_dev, 1e-12);
    gate.at_least("positivity", min_self, 1e-12);
    gate.at_most("evolution_invariance", evolution_dev, 1e-8);
    gate.finish();
}

// ---------------------------------------------------------------------------
// 11. Determinism
// ---------------------------------------------------------------------------

/// Running a scenario twice with the same seed produces byte-identical CSV
/// artifacts.
#[test]
fn criterion_11_determinism() {
    let mut gate = Gate::new(11, "determinism");
    let tmp = tempfile::tempdir().unwrap();

    let mut differing = 0usize;
    let mut compared = 0usize;
    for (name, body) in [
        (
            "kahler_check",
            "seed = 42\n\n[grid]\npoints = 48\nlengths = 3.0\n\n[physics]\nmass = 1.0\nalpha = 0.9\n",
        ),
        (
            "dirac_check",
            "seed = 3\n\n[grid]\npoints = 96\nlengths = 6.0\n\n[physics]\nmass = 1.0\nalpha = 1.1\n",
        ),
    ] {
        let mut outputs = Vec::new();
        for pass in ["a", "b"] {
            let dir = tmp.path().join(name).join(pass);
            let text = format!(
                "scenario = {name}\noutput_dir = {}\n{body}",
                dir.display()
            );
            let config = parse_config(&text).unwrap();
            let report = run(&config).unwrap();
            assert!(report.all_pass(), "{name} scenario failed while checking determinism");

            let mut files: Vec<_> = std::fs::read_dir(&dir)
                .unwrap()
                .map(|e| e.unwrap().path())
                .collect();
            files.sort();
            outputs.push(files);
        }
        let names = |files: &[std::path::PathBuf]| -> Vec<String> {
            files
                .iter()
                .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
                .collect()
        };
        assert_eq!(names(&outputs[0]), names(&outputs[1]));
        assert!(!outputs[0].is_empty(), "{name} wrote no artifacts");
        for (left, right) in outputs[0].iter().zip(outputs[1].iter()) {
            compared += 1;
            if std::fs::read(left).unwrap() != std::fs::read(right).unwrap() {
                differing += 1;
            }
        }
    }
    assert!(compared >= 5, "expected at least five artifact files, saw {compared}");
    gate.at_most("differing_artifact_bytes", differing as f64, 0.0);
    gate.finish();
}
