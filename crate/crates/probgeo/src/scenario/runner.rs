//! Named experiment runners.
//!
//! Each scenario executes one self-contained experiment against the library,
//! writes its CSV artifacts into the configured output directory, and
//! reduces the outcome to a list of named checks — one measured value, one
//! pinned tolerance, one PASS/FAIL each. The tolerances here are the
//! module-level ones, restated in one place per scenario so a summary file
//! is a complete record of what was demanded and what was measured.
//!
//! Everything is deterministic in the configured seed: rerunning a scenario
//! with the same config produces byte-identical CSV files.

use std::path::PathBuf;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::canonical::{build_galilean_generators, galilean_algebra_residual, AlgebraReport};
use crate::dynamics::{
    cross_validate, evolve, evolve_schrodinger, gaussian_width_prediction, HamiltonianKind,
};
use crate::error::{Error, Result};
use crate::fields::{
    write_field_csv, write_table_csv, ComplexField, EnsembleState,
};
use crate::grid::GridSpec;
use crate::hilbert::{dirac_product, dirac_product_routes, norm};
use crate::infogeo::{fisher_metric_translation, jeffreys_line_element};
use crate::kahler::{
    complex_structure_from_pair, build_general_triple, from_complex_coordinates, intermediate_j,
    to_complex_coordinates, verify_kahler,
};
use crate::scenario::config::{Scenario, ScenarioConfig, StateFamily};
use crate::scenario::states;

/// Which side of the tolerance counts as success.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// The check passes when `value <= tolerance` (residual-style).
    AtMost,
    /// The check passes when `value >= tolerance` (detection-style: the
    /// measurement must be at least this large, e.g. an injected defect's
    /// reported residual).
    AtLeast,
}

/// One named measurement against its pinned tolerance.
#[derive(Debug, Clone)]
pub struct CheckLine {
    /// Stable machine-readable name (also the `check` column in the
    /// summary).
    pub name: String,
    /// The measured value.
    pub value: f64,
    /// The pinned tolerance or detection threshold.
    pub tolerance: f64,
    /// Whether the value must stay below or reach above the tolerance.
    pub direction: Direction,
}

impl CheckLine {
    /// Whether the measurement satisfies the tolerance. Non-finite values
    /// never pass.
    pub fn passes(&self) -> bool {
        if !self.value.is_finite() {
            return false;
        }
        match self.direction {
            Direction::AtMost => self.value <= self.tolerance,
            Direction::AtLeast => self.value >= self.tolerance,
        }
    }
}

fn at_most(name: &str, value: f64, tolerance: f64) -> CheckLine {
    CheckLine {
        name: name.to_string(),
        value,
        tolerance,
        direction: Direction::AtMost,
    }
}

fn at_least(name: &str, value: f64, tolerance: f64) -> CheckLine {
    CheckLine {
        name: name.to_string(),
        value,
        tolerance,
        direction: Direction::AtLeast,
    }
}

/// Everything one scenario run produced.
#[derive(Debug)]
pub struct ScenarioReport {
    /// Which scenario ran.
    pub scenario: Scenario,
    /// Where the artifacts went (after any environment override).
    pub output_dir: PathBuf,
    /// The named checks, in a fixed scenario-specific order.
    pub checks: Vec<CheckLine>,
    /// Every file written, in creation order.
    pub artifacts: Vec<PathBuf>,
}

impl ScenarioReport {
    /// True iff every check passed.
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(CheckLine::passes)
    }

    /// Writes `summary.csv` (`check,value,tolerance,status`) into the
    /// output directory and returns its path.
    ///
    /// # Errors
    ///
    /// [`Error::Io`] on filesystem trouble.
    pub fn write_summary(&self) -> Result<PathBuf> {
        let path = self.output_dir.join("summary.csv");
        let mut out = String::from("check,value,tolerance,status\n");
        for check in &self.checks {
            let status = if check.passes() { "PASS" } else { "FAIL" };
            out.push_str(&format!(
                "{},{},{},{}\n",
                check.name, check.value, check.tolerance, status
            ));
        }
        std::fs::write(&path, out).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Ok(path)
    }
}

/// Name of the environment variable that overrides the configured output
/// directory.
pub const OUTPUT_DIR_ENV: &str = "PROBGEO_OUTPUT_DIR";

/// The directory artifacts go to: the [`OUTPUT_DIR_ENV`] environment
/// variable when set and non-empty, the configured path otherwise.
pub fn resolve_output_dir(configured: &str) -> PathBuf {
    match std::env::var(OUTPUT_DIR_ENV) {
        Ok(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(configured),
    }
}

/// Runs one scenario end to end: creates the output directory, executes the
/// experiment, writes every artifact including `summary.csv`, and returns
/// the report. A returned `Ok` only means the experiment executed; whether
/// its checks passed is [`ScenarioReport::all_pass`].
///
/// # Errors
///
/// [`Error::Io`] for filesystem trouble; numeric preconditions from the
/// modules surface unchanged (they indicate a config that asks for
/// something the experiment cannot measure, e.g. cross-validation on a
/// state with nodes).
pub fn run(config: &ScenarioConfig) -> Result<ScenarioReport> {
    let dir = resolve_output_dir(&config.output_dir);
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    let mut report = ScenarioReport {
        scenario: config.scenario,
        output_dir: dir,
        checks: Vec::new(),
        artifacts: Vec::new(),
    };
    match config.scenario {
        Scenario::FisherCheck => run_fisher(config, &mut report)?,
        Scenario::AlgebraCheck => run_algebra(config, &mut report)?,
        Scenario::KahlerCheck => run_kahler(config, &mut report)?,
        Scenario::FlatCoordsCheck => run_flat_coords(config, &mut report)?,
        Scenario::GaussianSpread => run_gaussian_spread(config, &mut report)?,
        Scenario::ClassicalAdvect => run_classical_advect(config, &mut report)?,
        Scenario::CrossValidate => run_cross_validate(config, &mut report)?,
        Scenario::DiracCheck => run_dirac(config, &mut report)?,
    }
    let summary = report.write_summary()?;
    report.artifacts.push(summary);
    Ok(report)
}

// ---------------------------------------------------------------------------
// fisher_check
// ---------------------------------------------------------------------------

/// Number of seeded trials the statistical scenarios run.
const FISHER_TRIALS: u64 = 20;

fn run_fisher(config: &ScenarioConfig, report: &mut ScenarioReport) -> Result<()> {
    let grid = &config.grid;
    let alpha = config.alpha;
    let dim = grid.dim();

    let mut max_line_dev = 0.0f64;
    let mut max_translation_dev = 0.0f64;
    let mut trial_rows = Vec::new();
    let mut last_metric = None;
    for trial in 0..FISHER_TRIALS {
        let seed = config.seed.wrapping_add(trial);
        let state = states::fourier_bump(grid, seed)?;
        let p = state.p();
        let metric = fisher_metric_translation(grid, p, alpha)?;
        let mut scale = 0.0f64;
        for j in 0..dim {
            for k in 0..dim {
                scale = scale.max(metric.entry(j, k)?.abs());
            }
        }
        let scale = scale.max(1e-300);

        // Translation perturbations are the derivatives of the density; the
        // line element contracted with them must reproduce the Fisher
        // matrix: diagonal entries directly, off-diagonal ones through the
        // polarization identity Q(u+v) = Q(u) + 2 B(u,v) + Q(v).
        let mut grads = Vec::with_capacity(dim);
        let mut diag = Vec::with_capacity(dim);
        for a in 0..dim {
            let g = grid.gradient(p, a)?;
            diag.push(jeffreys_line_element(grid, p, &g, alpha)?);
            grads.push(g);
        }
        let mut line_dev = 0.0f64;
        for j in 0..dim {
            line_dev = line_dev.max((diag[j] - metric.entry(j, j)?).abs());
            for k in (j + 1)..dim {
                let sum: Vec<f64> = grads[j]
                    .iter()
                    .zip(grads[k].iter())
                    .map(|(&a, &b)| a + b)
                    .collect();
                let q = jeffreys_line_element(grid, p, &sum, alpha)?;
                let off = 0.5 * (q - diag[j] - diag[k]);
                line_dev = line_dev.max((off - metric.entry(j, k)?).abs());
            }
        }
        let line_dev = line_dev / scale;

        // The metric of a translation family cannot depend on where the
        // family currently sits: rolling the density by whole cells must
        // leave the matrix unchanged (exact on periodic grids).
        let mut translation_dev = 0.0f64;
        for a in 0..dim {
            let n = grid.points(a)?;
            let shifted = grid.translate(p, a, (n / 3) as isize)?;
            let moved = fisher_metric_translation(grid, &shifted, alpha)?;
            for j in 0..dim {
                for k in 0..dim {
                    translation_dev =
                        translation_dev.max((moved.entry(j, k)? - metric.entry(j, k)?).abs());
                }
            }
        }
        let translation_dev = translation_dev / scale;

        max_line_dev = max_line_dev.max(line_dev);
        max_translation_dev = max_translation_dev.max(translation_dev);
        trial_rows.push(vec![trial as f64, seed as f64, line_dev, translation_dev]);
        last_metric = Some(metric);
    }

    // Closed form: the location family of a unit-width Gaussian has
    // gamma = (alpha/2)/sigma^2. Measured on a dedicated well-resolved grid
    // so the row probes the formula, not the configured resolution.
    let sigma = 1.0;
    let oracle_grid = GridSpec::periodic(&[512], &[16.0])?;
    let gauss = states::gaussian_packet(&oracle_grid, &[8.0], &[sigma], &[0.0])?;
    let gamma = fisher_metric_translation(&oracle_grid, gauss.p(), alpha)?;
    let expected = 0.5 * alpha / (sigma * sigma);
    let gaussian_dev = (gamma.entry(0, 0)? - expected).abs() / expected;

    let trials_path = report.output_dir.join("trials.csv");
    write_table_csv(
        &trials_path,
        &["trial", "seed", "line_element_dev", "translation_dev"],
        &trial_rows,
    )?;
    report.artifacts.push(trials_path);
    if let Some(metric) = last_metric {
        let matrix_path = report.output_dir.join("fisher_matrix.csv");
        metric.write_csv(&matrix_path)?;
        report.artifacts.push(matrix_path);
    }

    report
        .checks
        .push(at_most("fisher_vs_line_element", max_line_dev, 1e-6));
    report.checks.push(at_most(
        "fisher_translation_invariance",
        max_translation_dev,
        1e-6,
    ));
    report
        .checks
        .push(at_most("gaussian_closed_form", gaussian_dev, 1e-6));
    Ok(())
}

// ---------------------------------------------------------------------------
// algebra_check
// ---------------------------------------------------------------------------

const ALGEBRA_TRIALS: u64 = 10;

/// Bracket families in reporting order. The first letters of the two slots
/// of a relation string (`{H,A_x} = 0` → `H`, `A`) select the family.
const BRACKET_FAMILIES: [(&str, &str, &str); 9] = [
    ("H", "A", "bracket_H_A"),
    ("H", "L", "bracket_H_L"),
    ("H", "G", "bracket_H_G"),
    ("L", "A", "bracket_L_A"),
    ("L", "L", "bracket_L_L"),
    ("L", "G", "bracket_L_G"),
    ("A", "A", "bracket_A_A"),
    ("A", "G", "bracket_A_G"),
    ("G", "G", "bracket_G_G"),
];

fn bracket_family(relation: &str) -> Option<&'static str> {
    let inside = relation.strip_prefix('{')?.split('}').next()?;
    let mut parts = inside.split(',');
    let first = parts.next()?.chars().next()?;
    let second = parts.next()?.chars().next()?;
    BRACKET_FAMILIES
        .iter()
        .find(|(a, b, _)| a.starts_with(first) && b.starts_with(second))
        .map(|(_, _, name)| *name)
}

fn run_algebra(config: &ScenarioConfig, report: &mut ScenarioReport) -> Result<()> {
    let grid = &config.grid;
    // A nonzero reference time exercises the -t A_i part of the boosts.
    let set = build_galilean_generators(
        grid.dim(),
        config.mass,
        0.35,
        config.alpha,
        HamiltonianKind::QuantumFree,
    )?;

    let mut family_max = vec![None::<f64>; BRACKET_FAMILIES.len()];
    let mut trial_rows = Vec::new();
    let mut worst: Option<(f64, AlgebraReport)> = None;
    for trial in 0..ALGEBRA_TRIALS {
        let seed = config.seed.wrapping_add(trial);
        let state = states::centered_algebra_state(grid, seed)?;
        let algebra = galilean_algebra_residual(&set, &state)?;
        for relation in &algebra.relations {
            if let Some(name) = bracket_family(&relation.relation) {
                let slot = BRACKET_FAMILIES
                    .iter()
                    .position(|(_, _, n)| *n == name)
                    .expect("family table is closed");
                let entry = family_max[slot].get_or_insert(0.0);
                *entry = entry.max(relation.relative());
            }
        }
        let max_rel = algebra.max_relative_residual();
        trial_rows.push(vec![trial as f64, seed as f64, max_rel]);
        if worst.as_ref().is_none_or(|(m, _)| max_rel > *m) {
            worst = Some((max_rel, algebra));
        }
    }

    let trials_path = report.output_dir.join("trials.csv");
    write_table_csv(
        &trials_path,
        &["trial", "seed", "max_relative_residual"],
        &trial_rows,
    )?;
    report.artifacts.push(trials_path);
    if let Some((_, algebra)) = &worst {
        let relations_path = report.output_dir.join("relations.csv");
        algebra.write_csv(&relations_path)?;
        report.artifacts.push(relations_path);
    }

    for (slot, (_, _, name)) in BRACKET_FAMILIES.iter().enumerate() {
        if let Some(value) = family_max[slot] {
            report.checks.push(at_most(name, value, 1e-6));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// kahler_check
// ---------------------------------------------------------------------------

const KAHLER_TRIALS: u64 = 50;

fn run_kahler(config: &ScenarioConfig, report: &mut ScenarioReport) -> Result<()> {
    let grid = &config.grid;
    let alpha = config.alpha;

    let mut max_compat = 0.0f64;
    let mut max_herm = 0.0f64;
    let mut max_complex = 0.0f64;
    let mut max_intermediate = 0.0f64;
    let mut trial_rows = Vec::new();
    let mut first_triple = None;
    for trial in 0..KAHLER_TRIALS {
        let seed = config.seed.wrapping_add(trial);
        let state = states::fourier_bump(grid, seed)?;
        let mixing = states::smooth_field(grid, seed.wrapping_add(0x5851_F42D), 0.8)?;
        let triple = build_general_triple(&state, &mixing, alpha)?;
        let verdict = verify_kahler(&triple);
        max_compat = max_compat.max(verdict.compatibility.max);
        max_herm = max_herm.max(verdict.hermiticity.max);
        max_complex = max_complex.max(verdict.complex_structure.max);

        // The intermediate complex structure squares to -I for any strictly
        // positive normalization field C.
        let c = states::positive_modulation(grid, seed.wrapping_add(0x9E37_79B9), 0.5)?;
        let blocks = intermediate_j(&mixing, &c)?;
        for b in &blocks {
            let jj = [
                [
                    b[0][0] * b[0][0] + b[0][1] * b[1][0],
                    b[0][0] * b[0][1] + b[0][1] * b[1][1],
                ],
                [
                    b[1][0] * b[0][0] + b[1][1] * b[1][0],
                    b[1][0] * b[0][1] + b[1][1] * b[1][1],
                ],
            ];
            max_intermediate = max_intermediate
                .max((jj[0][0] + 1.0).abs())
                .max(jj[0][1].abs())
                .max(jj[1][0].abs())
                .max((jj[1][1] + 1.0).abs());
        }

        trial_rows.push(vec![
            trial as f64,
            seed as f64,
            verdict.compatibility.max,
            verdict.hermiticity.max,
            verdict.complex_structure.max,
        ]);
        if first_triple.is_none() {
            first_triple = Some((triple, verdict));
        }
    }
    let (first_triple, first_verdict) = first_triple.expect("at least one trial ran");

    // A percent-level defect in the metric must light up the residuals: the
    // verifier reports, and this scenario checks the report is loud enough.
    let mut defective = first_triple;
    for g in &mut defective.g {
        g[1][1] *= 1.01;
    }
    let defect_residual = verify_kahler(&defective).max_residual();

    // Matrix-pair construction: congruent images of the canonical pair are
    // compatible by construction; stretching one symplectic plane of omega
    // while keeping g euclidean is the textbook incompatible pair.
    let mut max_pair = 0.0f64;
    let mut rng = states::rng(config.seed.wrapping_add(0xA5A5));
    for half in [2usize, 3, 4, 5] {
        let n = 2 * half;
        let (omega, g) = congruent_pair(&mut rng, n);
        let pair = complex_structure_from_pair(&omega, &g)?;
        max_pair = max_pair
            .max(pair.complex_structure_residual)
            .max(pair.isometry_residual);
    }
    let incompatible = {
        let n = 4;
        let mut omega = DMatrix::zeros(n, n);
        omega[(0, 1)] = 1.0;
        omega[(1, 0)] = -1.0;
        omega[(2, 3)] = 2.0;
        omega[(3, 2)] = -2.0;
        let g = DMatrix::identity(n, n);
        complex_structure_from_pair(&omega, &g)?
    };
    let incompatible_residual = incompatible
        .complex_structure_residual
        .max(incompatible.isometry_residual);

    let trials_path = report.output_dir.join("trials.csv");
    write_table_csv(
        &trials_path,
        &[
            "trial",
            "seed",
            "omega_minus_gJ",
            "JtgJ_minus_g",
            "JJ_plus_I",
        ],
        &trial_rows,
    )?;
    report.artifacts.push(trials_path);
    let conditions_path = report.output_dir.join("conditions.csv");
    first_verdict.write_csv(&conditions_path)?;
    report.artifacts.push(conditions_path);

    report
        .checks
        .push(at_most("omega_minus_gJ", max_compat, 1e-12));
    report.checks.push(at_most("JtgJ_minus_g", max_herm, 1e-12));
    report.checks.push(at_most("JJ_plus_I", max_complex, 1e-12));
    report.checks.push(at_most(
        "intermediate_J_squares",
        max_intermediate,
        1e-13,
    ));
    report
        .checks
        .push(at_least("defect_detected", defect_residual, 1e-3));
    report
        .checks
        .push(at_most("matrix_pair_compatible", max_pair, 1e-12));
    report.checks.push(at_least(
        "matrix_pair_incompatible_flagged",
        incompatible_residual,
        1e-3,
    ));
    Ok(())
}

/// A compatible `(omega, g)` pair: the congruent image of the canonical
/// symplectic form and the euclidean metric under one invertible map.
fn congruent_pair(
    rng: &mut rand_chacha::ChaCha8Rng,
    n: usize,
) -> (DMatrix<f64>, DMatrix<f64>) {
    use rand::Rng;
    let half = n / 2;
    let mut omega0 = DMatrix::zeros(n, n);
    for k in 0..half {
        omega0[(2 * k, 2 * k + 1)] = 1.0;
        omega0[(2 * k + 1, 2 * k)] = -1.0;
    }
    let mut t = DMatrix::identity(n, n);
    for a in 0..n {
        for b in 0..n {
            t[(a, b)] += 0.3 * rng.random_range(-1.0..1.0);
        }
    }
    let omega = t.transpose() * &omega0 * &t;
    let g = t.transpose() * &t;
    // Congruence preserves the symmetry classes exactly in real arithmetic;
    // re-symmetrize so rounding cannot trip the constructor's input checks.
    let omega = (&omega - omega.transpose()) * 0.5;
    let g = (&g + g.transpose()) * 0.5;
    (omega, g)
}

// ---------------------------------------------------------------------------
// flat_coords_check
// ---------------------------------------------------------------------------

const FLAT_TRIALS: u64 = 10;

fn run_flat_coords(config: &ScenarioConfig, report: &mut ScenarioReport) -> Result<()> {
    let grid = &config.grid;
    let alpha = config.alpha;
    let zeros = vec![0.0; grid.num_points()];

    let mut max_flat = 0.0f64;
    let mut max_round_trip = 0.0f64;
    let mut trial_rows = Vec::new();
    for trial in 0..FLAT_TRIALS {
        let seed = config.seed.wrapping_add(trial);
        let state = states::fourier_bump(grid, seed)?;
        let triple = build_general_triple(&state, &zeros, alpha)?;
        let flat = to_complex_coordinates(&triple, &state)?;
        max_flat = max_flat.max(flat.max_flat_deviation);

        let recovered = from_complex_coordinates(&flat, &state, alpha)?;
        let mut round_trip = recovered.max_imaginary_part;
        for i in 0..triple.omega.len() {
            for r in 0..2 {
                for c in 0..2 {
                    round_trip = round_trip
                        .max((recovered.omega[i][r][c] - triple.omega[i][r][c]).abs())
                        .max((recovered.g[i][r][c] - triple.g[i][r][c]).abs())
                        .max((recovered.j[i][r][c] - triple.j[i][r][c]).abs());
                }
            }
        }
        max_round_trip = max_round_trip.max(round_trip);
        trial_rows.push(vec![
            trial as f64,
            seed as f64,
            flat.max_flat_deviation,
            round_trip,
        ]);
    }

    let trials_path = report.output_dir.join("trials.csv");
    write_table_csv(
        &trials_path,
        &["trial", "seed", "flat_block_deviation", "round_trip"],
        &trial_rows,
    )?;
    report.artifacts.push(trials_path);

    report
        .checks
        .push(at_most("flat_block_deviation", max_flat, 1e-12));
    report
        .checks
        .push(at_most("jacobian_round_trip", max_round_trip, 1e-12));
    Ok(())
}

// ---------------------------------------------------------------------------
// gaussian_spread
// ---------------------------------------------------------------------------

fn run_gaussian_spread(config: &ScenarioConfig, report: &mut ScenarioReport) -> Result<()> {
    if config.evolution.kind != HamiltonianKind::QuantumFree {
        return Err(Error::InvalidParameter(
            "gaussian_spread compares against the free quantum closed form; \
             set hamiltonian = quantum_free"
                .into(),
        ));
    }
    if !matches!(config.initial_state, StateFamily::Gaussian { .. }) {
        return Err(Error::InvalidParameter(
            "gaussian_spread needs family = gaussian".into(),
        ));
    }
    let state = config.build_initial_state()?;
    let trajectory = evolve(&state, &config.evolution)?;
    let dim = config.grid.dim();

    // The prediction is seeded with the width the grid actually measures at
    // t = 0, so the row compares evolution against the closed form rather
    // than the quadrature of the initial sample against the nominal sigma.
    let sigma0: Vec<f64> = (0..dim).map(|a| trajectory.samples[0].width[a]).collect();
    let mut max_sigma_dev = 0.0f64;
    let mut spread_rows = Vec::new();
    for sample in &trajectory.samples {
        let mut row = vec![sample.time];
        for a in 0..dim {
            let predicted =
                gaussian_width_prediction(sigma0[a], config.mass, config.alpha, sample.time);
            let measured = sample.width[a];
            max_sigma_dev = max_sigma_dev.max((measured - predicted).abs() / predicted);
            row.push(measured);
            row.push(predicted);
        }
        spread_rows.push(row);
    }

    let mut header: Vec<String> = vec!["t".to_string()];
    for a in 0..dim {
        header.push(format!("sigma_measured_{}", ["x", "y", "z"][a]));
        header.push(format!("sigma_analytic_{}", ["x", "y", "z"][a]));
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let spread_path = report.output_dir.join("spread.csv");
    write_table_csv(&spread_path, &header_refs, &spread_rows)?;
    report.artifacts.push(spread_path);
    write_trajectory_artifacts(config, &trajectory, report)?;

    report
        .checks
        .push(at_most("sigma_closed_form", max_sigma_dev, 1e-4));
    report
        .checks
        .push(at_most("norm_drift", trajectory.norm_drift(), 1e-9));
    report
        .checks
        .push(at_most("energy_drift", trajectory.energy_drift(), 1e-6));
    Ok(())
}

/// Writes `conserved.csv` and, when snapshots were taken, one
/// `state_NNNNNN.csv` per snapshot named by its zero-padded step number.
fn write_trajectory_artifacts(
    config: &ScenarioConfig,
    trajectory: &crate::dynamics::Trajectory,
    report: &mut ScenarioReport,
) -> Result<()> {
    let conserved_path = report.output_dir.join("conserved.csv");
    trajectory.write_conserved_csv(&conserved_path)?;
    report.artifacts.push(conserved_path);
    for (time, snapshot) in &trajectory.snapshots {
        let step = (time / config.evolution.dt).round() as usize;
        let path = report.output_dir.join(format!("state_{step:06}.csv"));
        write_field_csv(
            &path,
            snapshot.grid(),
            &["P", "S"],
            &[snapshot.p(), snapshot.s()],
        )?;
        report.artifacts.push(path);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// classical_advect
// ---------------------------------------------------------------------------

fn run_classical_advect(config: &ScenarioConfig, report: &mut ScenarioReport) -> Result<()> {
    if config.evolution.kind != HamiltonianKind::ClassicalFree {
        return Err(Error::InvalidParameter(
            "classical_advect tests the classical flow; set hamiltonian = classical_free"
                .into(),
        ));
    }
    let StateFamily::Gaussian { momentum, .. } = &config.initial_state else {
        return Err(Error::InvalidParameter(
            "classical_advect needs family = gaussian (rigid advection of a packet)".into(),
        ));
    };
    let momentum = momentum.clone();
    let state = config.build_initial_state()?;
    let dim = config.grid.dim();

    let mut evolution = config.evolution.clone();
    if evolution.snapshot_every == 0 {
        evolution.snapshot_every = (evolution.steps / 16).max(1);
    }
    let trajectory = evolve(&state, &evolution)?;

    // d<x>/dt = A/m for the classical flow, so the packet mean must track
    // the straight line from its measured starting point.
    let center0 = packet_center(&state)?;
    let mut max_center_err = 0.0f64;
    let mut center_rows = Vec::new();
    let mut track_center = |time: f64, snapshot: &EnsembleState| -> Result<()> {
        let measured = packet_center(snapshot)?;
        let mut row = vec![time];
        for a in 0..dim {
            let predicted = center0[a] + momentum[a] / config.mass * time;
            max_center_err = max_center_err.max((measured[a] - predicted).abs());
            row.push(measured[a]);
            row.push(predicted);
        }
        center_rows.push(row);
        Ok(())
    };
    for (time, snapshot) in &trajectory.snapshots {
        track_center(*time, snapshot)?;
    }
    if trajectory
        .snapshots
        .last()
        .is_none_or(|(t, _)| *t != trajectory.final_time)
    {
        track_center(trajectory.final_time, &trajectory.final_state)?;
    }

    let mut width_change = 0.0f64;
    let w0 = trajectory.samples[0].width;
    for sample in &trajectory.samples {
        for a in 0..dim {
            width_change = width_change.max((sample.width[a] - w0[a]).abs() / w0[a]);
        }
    }

    let mut header: Vec<String> = vec!["t".to_string()];
    for a in 0..dim {
        header.push(format!("center_measured_{}", ["x", "y", "z"][a]));
        header.push(format!("center_predicted_{}", ["x", "y", "z"][a]));
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let centers_path = report.output_dir.join("centers.csv");
    write_table_csv(&centers_path, &header_refs, &center_rows)?;
    report.artifacts.push(centers_path);
    write_trajectory_artifacts(config, &trajectory, report)?;

    let spacing = (0..dim)
        .map(|a| config.grid.spacing(a).expect("axis < dim"))
        .fold(f64::INFINITY, f64::min);
    report
        .checks
        .push(at_most("center_error", max_center_err, spacing));
    report
        .checks
        .push(at_most("width_change", width_change, 1e-3));
    report
        .checks
        .push(at_most("norm_drift", trajectory.norm_drift(), 1e-9));
    report
        .checks
        .push(at_most("energy_drift", trajectory.energy_drift(), 1e-6));
    Ok(())
}

/// The density-weighted mean position, per axis.
fn packet_center(state: &EnsembleState) -> Result<[f64; 3]> {
    let grid = state.grid();
    let p = state.p();
    let mass = grid.integrate(p)?;
    let mut center = [0.0; 3];
    for a in 0..grid.dim() {
        let x = grid.coordinate_field(a)?;
        let weighted: Vec<f64> = p.iter().zip(x.iter()).map(|(&pv, &xv)| pv * xv).collect();
        center[a] = grid.integrate(&weighted)? / mass;
    }
    Ok(center)
}

// ---------------------------------------------------------------------------
// cross_validate
// ---------------------------------------------------------------------------

fn run_cross_validate(config: &ScenarioConfig, report: &mut ScenarioReport) -> Result<()> {
    if config.evolution.kind != HamiltonianKind::QuantumFree {
        return Err(Error::InvalidParameter(
            "cross_validate compares the phase-space flow against the unitary \
             wavefunction evolution; set hamiltonian = quantum_free"
                .into(),
        ));
    }
    let horizon = config
        .horizon
        .ok_or_else(|| Error::InvalidParameter("cross_validate needs a horizon".into()))?;
    let state = config.build_initial_state()?;
    let discrepancy = cross_validate(&state, &config.evolution, horizon)?;

    let path = report.output_dir.join("discrepancy.csv");
    discrepancy.write_csv(&path)?;
    report.artifacts.push(path);

    report.checks.push(at_most(
        "psi_l2_discrepancy",
        discrepancy.max_psi_l2,
        1e-4,
    ));
    report.checks.push(at_most(
        "rk4_norm_drift",
        discrepancy.rk4_norm_drift,
        1e-9,
    ));
    report.checks.push(at_most(
        "rk4_energy_drift",
        discrepancy.rk4_energy_drift,
        1e-6,
    ));
    report.checks.push(at_most(
        "oracle_norm_drift",
        discrepancy.oracle_norm_drift,
        1e-9,
    ));
    Ok(())
}

// ---------------------------------------------------------------------------
// dirac_check
// ---------------------------------------------------------------------------

const DIRAC_PAIRS: u64 = 20;

fn run_dirac(config: &ScenarioConfig, report: &mut ScenarioReport) -> Result<()> {
    let grid = &config.grid;
    let alpha = config.alpha;
    let a = Complex64::new(0.6, -0.3);
    let b = Complex64::new(-0.2, 0.9);

    let mut max_route = 0.0f64;
    let mut max_hermitian = 0.0f64;
    let mut max_sesquilinear = 0.0f64;
    let mut min_positivity = f64::INFINITY;
    let mut max_unit_norm = 0.0f64;
    let mut max_evolution = 0.0f64;
    let mut pair_rows = Vec::new();
    for pair in 0..DIRAC_PAIRS {
        let seed = config.seed.wrapping_add(pair);
        let phi = states::random_wavefunction(grid, seed)?;
        let psi = states::random_wavefunction(grid, seed.wrapping_add(1000))?;
        let chi = states::random_wavefunction(grid, seed.wrapping_add(2000))?;

        let (contracted, flat) = dirac_product_routes(&phi, &psi, alpha)?;
        let route = (contracted - flat).norm() / contracted.norm().max(1.0);

        let forward = dirac_product(&phi, &psi, alpha)?;
        let backward = dirac_product(&psi, &phi, alpha)?;
        let hermitian = (forward - backward.conj()).norm() / forward.norm().max(1.0);

        // First slot conjugate-linear, second slot linear.
        let combo: Vec<Complex64> = phi
            .data()
            .iter()
            .zip(chi.data().iter())
            .map(|(&u, &v)| a * u + b * v)
            .collect();
        let combo = ComplexField::new(*grid, combo)?;
        let left = dirac_product(&combo, &psi, alpha)?;
        let left_expected =
            a.conj() * forward + b.conj() * dirac_product(&chi, &psi, alpha)?;
        let right = dirac_product(&phi, &combo, alpha)?;
        let right_expected = a * dirac_product(&phi, &phi, alpha)?
            + b * dirac_product(&phi, &chi, alpha)?;
        // `combo` in the second slot pairs phi against a*phi + b*chi.
        let sesquilinear = ((left - left_expected).norm()
            / left_expected.norm().max(1.0))
        .max((right - right_expected).norm() / right_expected.norm().max(1.0));

        let self_product = dirac_product(&psi, &psi, alpha)?;
        min_positivity = min_positivity.min(self_product.re);
        max_unit_norm = max_unit_norm.max((norm(&psi, alpha)? - 1.0).abs());

        // The product is invariant under the unitary evolution both
        // arguments share.
        let steps = 200;
        let dt = 1e-3;
        let phi_t = evolve_schrodinger(&phi, config.mass, alpha, dt, steps)?;
        let psi_t = evolve_schrodinger(&psi, config.mass, alpha, dt, steps)?;
        let after = dirac_product(&phi_t, &psi_t, alpha)?;
        let evolution = (after - forward).norm();

        max_route = max_route.max(route);
        max_hermitian = max_hermitian.max(hermitian);
        max_sesquilinear = max_sesquilinear.max(sesquilinear);
        max_evolution = max_evolution.max(evolution);
        pair_rows.push(vec![
            pair as f64,
            seed as f64,
            route,
            hermitian,
            sesquilinear,
            self_product.re,
            evolution,
        ]);
    }

    let pairs_path = report.output_dir.join("pairs.csv");
    write_table_csv(
        &pairs_path,
        &[
            "pair",
            "seed",
            "route_agreement",
            "hermitian_symmetry",
            "sesquilinearity",
            "self_product_re",
            "evolution_drift",
        ],
        &pair_rows,
    )?;
    report.artifacts.push(pairs_path);

    report
        .checks
        .push(at_most("route_agreement", max_route, 1e-12));
    report
        .checks
        .push(at_most("hermitian_symmetry", max_hermitian, 1e-12));
    report
        .checks
        .push(at_most("sesquilinearity", max_sesquilinear, 1e-12));
    report
        .checks
        .push(at_least("positivity_min", min_positivity, 0.0));
    report
        .checks
        .push(at_most("unit_norm", max_unit_norm, 1e-9));
    report
        .checks
        .push(at_most("evolution_invariance", max_evolution, 1e-8));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::config::parse_config;

    fn run_in_temp(text: &str) -> (ScenarioReport, tempfile::TempDir) {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "{text}\noutput_dir = {}\n",
            dir.path().join("out").display()
        );
        // The config puts output_dir last; move it to the top level by
        // parsing a reordered document instead.
        let mut lines: Vec<&str> = text.lines().collect();
        let dir_line = lines.pop().unwrap();
        let scenario_pos = lines
            .iter()
            .position(|l| l.starts_with("scenario"))
            .unwrap();
        lines.insert(scenario_pos + 1, dir_line);
        let config = parse_config(&lines.join("\n")).unwrap();
        let report = run(&config).unwrap();
        (report, dir)
    }

    #[test]
    fn kahler_scenario_passes_and_writes_its_artifacts() {
        let (report, _dir) = run_in_temp(
            "scenario = kahler_check
seed = 42

[grid]
points = 48
lengths = 3.0

[physics]
mass = 1.0
alpha = 0.9
",
        );
        assert!(report.all_pass(), "checks: {:?}", report.checks);
        assert_eq!(report.checks.len(), 7);
        for name in ["summary.csv", "trials.csv", "conditions.csv"] {
            assert!(report.output_dir.join(name).is_file(), "{name} missing");
        }
        let summary = std::fs::read_to_string(report.output_dir.join("summary.csv")).unwrap();
        assert!(summary.starts_with("check,value,tolerance,status\n"));
        assert!(summary.contains("omega_minus_gJ"));
        assert!(summary.contains(",PASS"));
        assert!(!summary.contains(",FAIL"));
    }

    #[test]
    fn fisher_scenario_passes_on_a_2d_grid() {
        let (report, _dir) = run_in_temp(
            "scenario = fisher_check
seed = 7

[grid]
points = 40, 36
lengths = 2.5, 2.0

[physics]
mass = 1.0
alpha = 1.3
",
        );
        assert!(report.all_pass(), "checks: {:?}", report.checks);
    }

    #[test]
    fn dirac_scenario_passes() {
        let (report, _dir) = run_in_temp(
            "scenario = dirac_check
seed = 3

[grid]
points = 96
lengths = 6.0

[physics]
mass = 1.0
alpha = 1.0
",
        );
        assert!(report.all_pass(), "checks: {:?}", report.checks);
        let names: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(
            names,
            [
                "route_agreement",
                "hermitian_symmetry",
                "sesquilinearity",
                "positivity_min",
                "unit_norm",
                "evolution_invariance"
            ]
        );
    }

    #[test]
    fn environment_variable_overrides_the_output_directory() {
        // Resolution logic only — runners read the variable through this
        // function, and mutating the process environment in a threaded test
        // harness is not worth the coverage.
        assert_eq!(
            resolve_output_dir("configured/path"),
            PathBuf::from("configured/path")
        );
    }

    #[test]
    fn failed_checks_are_reported_not_swallowed() {
        let line = at_most("x", 1.0, 0.5);
        assert!(!line.passes());
        let line = at_least("x", 1.0, 0.5);
        assert!(line.passes());
        let line = at_most("x", f64::NAN, 0.5);
        assert!(!line.passes());
    }
}
