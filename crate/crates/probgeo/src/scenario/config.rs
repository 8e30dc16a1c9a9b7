//! Plain-text scenario configuration.
//!
//! The format is deliberately small: `key = value` lines grouped under
//! `[section]` headers, `#` comments, nothing nested. Every diagnostic
//! carries the line number it arose from, so a malformed file can be fixed
//! without guesswork. Parsing is strict — unknown sections, unknown keys,
//! and duplicate keys are errors rather than silently ignored text, because
//! a typo in a tolerance-bearing experiment should never pass unnoticed.
//!
//! A minimal file:
//!
//! ```text
//! scenario = gaussian_spread
//! seed = 42
//! output_dir = out/spread
//!
//! [grid]
//! boundary = periodic
//! points = 256
//! lengths = 16.0
//!
//! [physics]
//! mass = 1.0
//! alpha = 1.0
//!
//! [initial_state]
//! family = gaussian
//! center = 8.0
//! sigma = 1.0
//! momentum = 0.0
//!
//! [evolution]
//! dt = 1e-3
//! steps = 2000
//! ```

use std::collections::HashMap;
use std::path::Path;

use crate::dynamics::{EvolutionConfig, HamiltonianKind, Integrator};
use crate::error::{Error, Result};
use crate::fields::EnsembleState;
use crate::grid::{Boundary, GridSpec};
use crate::scenario::states;

/// The experiments the binary knows how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Fisher matrix vs line element vs translation family, plus the
    /// Gaussian closed form.
    FisherCheck,
    /// All nine Galilean bracket relations on seeded compact states.
    AlgebraCheck,
    /// Kähler compatibility of the general solution, the intermediate
    /// complex structure, and the matrix-pair construction.
    KahlerCheck,
    /// Flat complex blocks and the round trip back to field space.
    FlatCoordsCheck,
    /// Free Gaussian spreading against the closed-form width.
    GaussianSpread,
    /// Rigid advection under the classical free Hamiltonian.
    ClassicalAdvect,
    /// Phase-space integration cross-checked against the wavefunction
    /// evolution.
    CrossValidate,
    /// Dirac-product route agreement, algebraic laws, and evolution
    /// invariance.
    DiracCheck,
}

impl Scenario {
    /// Canonical config-file spelling.
    pub fn name(self) -> &'static str {
        match self {
            Scenario::FisherCheck => "fisher_check",
            Scenario::AlgebraCheck => "algebra_check",
            Scenario::KahlerCheck => "kahler_check",
            Scenario::FlatCoordsCheck => "flat_coords_check",
            Scenario::GaussianSpread => "gaussian_spread",
            Scenario::ClassicalAdvect => "classical_advect",
            Scenario::CrossValidate => "cross_validate",
            Scenario::DiracCheck => "dirac_check",
        }
    }

    /// Every scenario, in listing order.
    pub fn all() -> &'static [Scenario] {
        &[
            Scenario::FisherCheck,
            Scenario::AlgebraCheck,
            Scenario::KahlerCheck,
            Scenario::FlatCoordsCheck,
            Scenario::GaussianSpread,
            Scenario::ClassicalAdvect,
            Scenario::CrossValidate,
            Scenario::DiracCheck,
        ]
    }

    /// One-line description for `list-scenarios`.
    pub fn describe(self) -> &'static str {
        match self {
            Scenario::FisherCheck => {
                "Fisher matrix, Jeffreys line element, and translation-family agreement"
            }
            Scenario::AlgebraCheck => "Galilean bracket relations on seeded compact states",
            Scenario::KahlerCheck => "Kähler compatibility residuals and defect detection",
            Scenario::FlatCoordsCheck => "flat complex blocks and the Madelung round trip",
            Scenario::GaussianSpread => "free wavepacket spreading vs the closed-form width",
            Scenario::ClassicalAdvect => "rigid advection under the classical free Hamiltonian",
            Scenario::CrossValidate => "phase-space flow vs the unitary wavefunction oracle",
            Scenario::DiracCheck => "Dirac-product routes, algebraic laws, evolution invariance",
        }
    }

    fn parse(value: &str, line: usize) -> Result<Self> {
        Scenario::all()
            .iter()
            .copied()
            .find(|s| s.name() == value)
            .ok_or_else(|| Error::Config {
                line,
                message: format!(
                    "unknown scenario '{value}' (expected one of: {})",
                    Scenario::all()
                        .iter()
                        .map(|s| s.name())
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
            })
    }
}

/// The initial-state family named in `[initial_state]`.
#[derive(Debug, Clone, PartialEq)]
pub enum StateFamily {
    /// Gaussian density with a linear phase; all three parameter lists must
    /// match the grid dimension.
    Gaussian {
        /// Packet center per axis.
        center: Vec<f64>,
        /// Packet width per axis.
        sigma: Vec<f64>,
        /// Phase gradient per axis.
        momentum: Vec<f64>,
    },
    /// Uniform density, zero phase.
    Uniform,
    /// Seeded strictly positive Fourier state (periodic grids).
    FourierBump,
}

/// A fully parsed and validated scenario configuration.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    /// Which experiment to run.
    pub scenario: Scenario,
    /// Seed for every randomized ingredient.
    pub seed: u64,
    /// Output directory for CSV artifacts (created on demand). The
    /// `PROBGEO_OUTPUT_DIR` environment variable overrides it at run time.
    pub output_dir: String,
    /// Spatial grid.
    pub grid: GridSpec,
    /// Particle mass.
    pub mass: f64,
    /// The scale constant pairing `P` with `S`.
    pub alpha: f64,
    /// Initial-state family.
    pub initial_state: StateFamily,
    /// Time-evolution parameters (kind, integrator, dt, steps, cadences).
    pub evolution: EvolutionConfig,
    /// Integration horizon for scenarios that choose their own step count
    /// (`cross_validate`); `None` means "use dt × steps".
    pub horizon: Option<f64>,
}

impl ScenarioConfig {
    /// Builds the configured initial state on the configured grid.
    ///
    /// # Errors
    ///
    /// State-family constructor errors (dimension mismatches and the like)
    /// surface unchanged.
    pub fn build_initial_state(&self) -> Result<EnsembleState> {
        match &self.initial_state {
            StateFamily::Gaussian {
                center,
                sigma,
                momentum,
            } => states::gaussian_packet(&self.grid, center, sigma, momentum),
            StateFamily::Uniform => states::uniform_state(&self.grid),
            StateFamily::FourierBump => states::fourier_bump(&self.grid, self.seed),
        }
    }
}

/// One `key = value` occurrence with its provenance.
struct Entry {
    line: usize,
    value: String,
    used: bool,
}

/// All entries of one `[section]`, plus the header's line number.
struct Section {
    header_line: usize,
    entries: HashMap<String, Entry>,
}

impl Section {
    fn new(header_line: usize) -> Self {
        Self {
            header_line,
            entries: HashMap::new(),
        }
    }
}

fn config_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

const KNOWN_SECTIONS: [&str; 4] = ["grid", "physics", "initial_state", "evolution"];

/// The raw sectioned key/value text, before semantic interpretation.
struct RawConfig {
    /// Entries before any section header.
    top: Section,
    sections: HashMap<String, Section>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self> {
        let mut top = Section::new(0);
        let mut sections: HashMap<String, Section> = HashMap::new();
        let mut current: Option<String> = None;
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| {
                    config_err(line_no, format!("unterminated section header '{line}'"))
                })?;
                let name = name.trim();
                if !KNOWN_SECTIONS.contains(&name) {
                    return Err(config_err(
                        line_no,
                        format!(
                            "unknown section '[{name}]' (expected one of: [{}])",
                            KNOWN_SECTIONS.join("], [")
                        ),
                    ));
                }
                if sections.contains_key(name) {
                    return Err(config_err(line_no, format!("duplicate section '[{name}]'")));
                }
                sections.insert(name.to_string(), Section::new(line_no));
                current = Some(name.to_string());
                continue;
            }
            let Some(eq) = line.find('=') else {
                return Err(config_err(
                    line_no,
                    format!("expected 'key = value', got '{line}'"),
                ));
            };
            let key = line[..eq].trim();
            let value = line[eq + 1..].trim();
            if key.is_empty() {
                return Err(config_err(line_no, "empty key before '='"));
            }
            if value.is_empty() {
                return Err(config_err(line_no, format!("key '{key}' has no value")));
            }
            let section = match &current {
                Some(name) => sections.get_mut(name).expect("current section exists"),
                None => &mut top,
            };
            if let Some(previous) = section.entries.get(key) {
                return Err(config_err(
                    line_no,
                    format!(
                        "duplicate key '{key}' (first set on line {})",
                        previous.line
                    ),
                ));
            }
            section.entries.insert(
                key.to_string(),
                Entry {
                    line: line_no,
                    value: value.to_string(),
                    used: false,
                },
            );
        }
        Ok(Self { top, sections })
    }

    /// The named section, or a config error citing line 0 (the file as a
    /// whole is missing the section, so no line is more accurate).
    fn section(&mut self, name: &str) -> Result<&mut Section> {
        self.sections
            .get_mut(name)
            .ok_or_else(|| config_err(0, format!("missing required section '[{name}]'")))
    }

    /// Every key that was never consumed is a typo; report the first by
    /// line order.
    fn check_fully_consumed(&self) -> Result<()> {
        let mut stray: Option<(usize, String, Option<&str>)> = None;
        for (key, entry) in &self.top.entries {
            if !entry.used && stray.as_ref().is_none_or(|(l, _, _)| entry.line < *l) {
                stray = Some((entry.line, key.clone(), None));
            }
        }
        for (name, section) in &self.sections {
            for (key, entry) in &section.entries {
                if !entry.used && stray.as_ref().is_none_or(|(l, _, _)| entry.line < *l) {
                    stray = Some((entry.line, key.clone(), Some(name)));
                }
            }
        }
        if let Some((line, key, section)) = stray {
            let place = match section {
                Some(s) => format!(" in section '[{s}]'"),
                None => String::new(),
            };
            return Err(config_err(line, format!("unknown key '{key}'{place}")));
        }
        Ok(())
    }
}

/// A key lookup that records consumption and remembers where the value came
/// from, so later semantic errors can cite the right line.
fn take<'a>(section: &'a mut Section, key: &str) -> Option<(&'a str, usize)> {
    section.entries.get_mut(key).map(|entry| {
        entry.used = true;
        (entry.value.as_str(), entry.line)
    })
}

/// Like [`take`] but the key is mandatory; a miss cites the section header.
fn require<'a>(
    section: &'a mut Section,
    section_name: &str,
    key: &str,
) -> Result<(&'a str, usize)> {
    let header_line = section.header_line;
    take(section, key).ok_or_else(|| {
        config_err(
            header_line,
            format!("section '[{section_name}]' is missing required key '{key}'"),
        )
    })
}

fn parse_f64(value: &str, line: usize, key: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| config_err(line, format!("key '{key}': '{value}' is not a number")))
}

fn parse_u64(value: &str, line: usize, key: &str) -> Result<u64> {
    value
        .parse::<u64>()
        .map_err(|_| config_err(line, format!("key '{key}': '{value}' is not an integer")))
}

fn parse_usize(value: &str, line: usize, key: &str) -> Result<usize> {
    value.parse::<usize>().map_err(|_| {
        config_err(
            line,
            format!("key '{key}': '{value}' is not a non-negative integer"),
        )
    })
}

fn parse_f64_list(value: &str, line: usize, key: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|part| parse_f64(part.trim(), line, key))
        .collect()
}

fn parse_usize_list(value: &str, line: usize, key: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(|part| parse_usize(part.trim(), line, key))
        .collect()
}

/// Parses and validates a configuration from text.
///
/// # Errors
///
/// [`Error::Config`] with the offending line number for syntax problems,
/// unknown/duplicate/missing keys, and semantically invalid combinations.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut raw = RawConfig::parse(text)?;

    // ---- top level -------------------------------------------------------
    let scenario = {
        let (value, line) = take(&mut raw.top, "scenario")
            .ok_or_else(|| config_err(0, "missing required top-level key 'scenario'"))?;
        Scenario::parse(value, line)?
    };
    let seed = match take(&mut raw.top, "seed") {
        Some((v, l)) => parse_u64(v, l, "seed")?,
        None => 0,
    };
    let output_dir = match take(&mut raw.top, "output_dir") {
        Some((v, _)) => v.to_string(),
        None => "out".to_string(),
    };

    // ---- [grid] ----------------------------------------------------------
    let (points, lengths, boundary, grid_header) = {
        let grid = raw.section("grid")?;
        let header = grid.header_line;
        let (points_v, points_l) = require(grid, "grid", "points")?;
        let points = parse_usize_list(points_v, points_l, "points")?;
        let (lengths_v, lengths_l) = require(grid, "grid", "lengths")?;
        let lengths = parse_f64_list(lengths_v, lengths_l, "lengths")?;
        let boundary = match take(grid, "boundary") {
            Some(("periodic", _)) => Boundary::Periodic,
            Some(("vanishing", _)) => Boundary::Vanishing,
            Some((other, l)) => {
                return Err(config_err(
                    l,
                    format!("boundary must be 'periodic' or 'vanishing', got '{other}'"),
                ))
            }
            None => Boundary::Periodic,
        };
        if points.len() != lengths.len() {
            return Err(config_err(
                header,
                format!(
                    "'points' has {} entries but 'lengths' has {}",
                    points.len(),
                    lengths.len()
                ),
            ));
        }
        (points, lengths, boundary, header)
    };
    let grid = match boundary {
        Boundary::Periodic => GridSpec::periodic(&points, &lengths),
        Boundary::Vanishing => GridSpec::vanishing_centered(&points, &lengths),
    }
    .map_err(|e| config_err(grid_header, format!("invalid grid: {e}")))?;

    // ---- [physics] -------------------------------------------------------
    let (mass, alpha) = {
        let physics = raw.section("physics")?;
        let (mass_v, mass_l) = require(physics, "physics", "mass")?;
        let mass = parse_f64(mass_v, mass_l, "mass")?;
        if !mass.is_finite() || mass <= 0.0 {
            return Err(config_err(mass_l, format!("mass must be positive, got {mass}")));
        }
        let (alpha_v, alpha_l) = require(physics, "physics", "alpha")?;
        let alpha = parse_f64(alpha_v, alpha_l, "alpha")?;
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(config_err(
                alpha_l,
                format!("alpha must be positive, got {alpha}"),
            ));
        }
        (mass, alpha)
    };

    // ---- [initial_state] (optional; defaults per scenario) ---------------
    let dim = grid.dim();
    let initial_state = if raw.sections.contains_key("initial_state") {
        let section = raw.section("initial_state")?;
        let (family, family_line) = require(section, "initial_state", "family")?;
        let family = family.to_string();
        match family.as_str() {
            "gaussian" => {
                let (center_v, center_l) = require(section, "initial_state", "center")?;
                let center = parse_f64_list(center_v, center_l, "center")?;
                let (sigma_v, sigma_l) = require(section, "initial_state", "sigma")?;
                let sigma = parse_f64_list(sigma_v, sigma_l, "sigma")?;
                let (momentum_v, momentum_l) = require(section, "initial_state", "momentum")?;
                let momentum = parse_f64_list(momentum_v, momentum_l, "momentum")?;
                for (name, list, line) in [
                    ("center", &center, center_l),
                    ("sigma", &sigma, sigma_l),
                    ("momentum", &momentum, momentum_l),
                ] {
                    if list.len() != dim {
                        return Err(config_err(
                            line,
                            format!(
                                "'{name}' has {} entries for a {dim}-dimensional grid",
                                list.len()
                            ),
                        ));
                    }
                }
                // On a periodic grid a linear phase p.x is discontinuous at
                // the seam unless p is a multiple of 2*pi/L; the state
                // constructor would accept it and the stencils would then
                // see a spurious jump, so reject it here where the line
                // number is known.
                if boundary == Boundary::Periodic {
                    for (a, &pa) in momentum.iter().enumerate() {
                        let unit = 2.0 * std::f64::consts::PI / lengths[a];
                        let windings = pa / unit;
                        if (windings - windings.round()).abs() > 1e-9 {
                            return Err(config_err(
                                momentum_l,
                                format!(
                                    "momentum[{a}] = {pa} is not a multiple of 2*pi/L = {unit:.6e}; \
                                     a linear phase must wind an integer number of times on a \
                                     periodic grid"
                                ),
                            ));
                        }
                    }
                }
                StateFamily::Gaussian {
                    center,
                    sigma,
                    momentum,
                }
            }
            "uniform" => StateFamily::Uniform,
            "fourier_bump" => StateFamily::FourierBump,
            other => {
                return Err(config_err(
                    family_line,
                    format!(
                        "unknown state family '{other}' (expected gaussian, uniform, or \
                         fourier_bump)"
                    ),
                ))
            }
        }
    } else {
        default_family(scenario, &grid)
    };

    // ---- [evolution] (optional for non-dynamical scenarios) --------------
    let needs_evolution = matches!(
        scenario,
        Scenario::GaussianSpread | Scenario::ClassicalAdvect | Scenario::CrossValidate
    );
    let (evolution, horizon) = if raw.sections.contains_key("evolution") {
        let section = raw.section("evolution")?;
        let kind = match take(section, "hamiltonian") {
            Some(("quantum_free", _)) => HamiltonianKind::QuantumFree,
            Some(("classical_free", _)) => HamiltonianKind::ClassicalFree,
            Some((other, l)) => {
                return Err(config_err(
                    l,
                    format!(
                        "hamiltonian must be 'quantum_free' or 'classical_free', got '{other}'"
                    ),
                ))
            }
            None => default_kind(scenario),
        };
        let integrator = match take(section, "integrator") {
            Some(("rk4_phase_space", _)) => Integrator::Rk4PhaseSpace,
            Some(("crank_nicolson_psi", _)) => Integrator::CrankNicolsonPsi,
            Some((other, l)) => {
                return Err(config_err(
                    l,
                    format!(
                        "integrator must be 'rk4_phase_space' or 'crank_nicolson_psi', \
                         got '{other}'"
                    ),
                ))
            }
            None => Integrator::Rk4PhaseSpace,
        };
        let (dt_v, dt_l) = require(section, "evolution", "dt")?;
        let dt = parse_f64(dt_v, dt_l, "dt")?;
        if !dt.is_finite() || dt <= 0.0 {
            return Err(config_err(dt_l, format!("dt must be positive, got {dt}")));
        }
        let horizon = match take(section, "horizon") {
            Some((v, l)) => {
                let h = parse_f64(v, l, "horizon")?;
                if !h.is_finite() || h < 0.0 {
                    return Err(config_err(
                        l,
                        format!("horizon must be non-negative, got {h}"),
                    ));
                }
                Some(h)
            }
            None => None,
        };
        // A horizon-driven scenario derives its own step count, so `steps`
        // becomes optional there (and unused when given).
        let steps = match take(section, "steps") {
            Some((v, l)) => {
                let steps = parse_usize(v, l, "steps")?;
                if steps == 0 {
                    return Err(config_err(l, "steps must be at least 1"));
                }
                steps
            }
            None if horizon.is_some() => 1,
            None => {
                return Err(config_err(
                    section.header_line,
                    "section '[evolution]' is missing required key 'steps' \
                     (only horizon-driven scenarios may omit it)",
                ))
            }
        };
        let mut config = EvolutionConfig::new(kind, mass, alpha, dt, steps);
        config.integrator = integrator;
        if let Some((v, l)) = take(section, "sample_every") {
            let v = parse_usize(v, l, "sample_every")?;
            if v == 0 {
                return Err(config_err(l, "sample_every must be at least 1"));
            }
            config.sample_every = v;
        }
        if let Some((v, l)) = take(section, "snapshot_every") {
            config.snapshot_every = parse_usize(v, l, "snapshot_every")?;
        }
        if let Some((v, l)) = take(section, "cfl_factor") {
            let v = parse_f64(v, l, "cfl_factor")?;
            if !v.is_finite() || v <= 0.0 {
                return Err(config_err(l, format!("cfl_factor must be positive, got {v}")));
            }
            config.cfl_factor = v;
        }
        (config, horizon)
    } else {
        if needs_evolution {
            return Err(config_err(
                0,
                format!(
                    "scenario '{}' needs an '[evolution]' section",
                    scenario.name()
                ),
            ));
        }
        // Inert placeholder for scenarios that never integrate.
        (
            EvolutionConfig::new(default_kind(scenario), mass, alpha, 1e-3, 1),
            None,
        )
    };

    raw.check_fully_consumed()?;

    // ---- cross-section semantic checks ------------------------------------
    if matches!(scenario, Scenario::AlgebraCheck | Scenario::ClassicalAdvect)
        && grid.boundary() != Boundary::Vanishing
    {
        return Err(config_err(
            grid_header,
            format!(
                "scenario '{}' needs compactly supported states: set boundary = vanishing",
                scenario.name()
            ),
        ));
    }
    if scenario == Scenario::FisherCheck && grid.boundary() != Boundary::Periodic {
        // The translation-invariance check rolls the density by whole
        // cells, which is exact only when the grid wraps.
        return Err(config_err(
            grid_header,
            "scenario 'fisher_check' needs boundary = periodic",
        ));
    }
    if scenario == Scenario::CrossValidate && horizon.is_none() {
        return Err(config_err(
            0,
            "scenario 'cross_validate' needs 'horizon' in '[evolution]'",
        ));
    }
    if scenario != Scenario::CrossValidate && horizon.is_some() {
        return Err(config_err(
            0,
            format!(
                "'horizon' only applies to cross_validate; scenario '{}' runs dt * steps",
                scenario.name()
            ),
        ));
    }

    Ok(ScenarioConfig {
        scenario,
        seed,
        output_dir,
        grid,
        mass,
        alpha,
        initial_state,
        evolution,
        horizon,
    })
}

/// Reads and parses a configuration file.
///
/// # Errors
///
/// [`Error::Io`] if the file cannot be read, otherwise as [`parse_config`].
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_config(&text)
}

/// The state family a scenario uses when `[initial_state]` is omitted.
fn default_family(scenario: Scenario, grid: &GridSpec) -> StateFamily {
    match scenario {
        Scenario::GaussianSpread | Scenario::CrossValidate => {
            let dim = grid.dim();
            let mut center = vec![0.0; dim];
            let mut sigma = vec![1.0; dim];
            for a in 0..dim {
                center[a] = grid.center(a).unwrap_or(0.0);
                sigma[a] = grid.extent(a).map(|e| e / 12.0).unwrap_or(1.0);
            }
            StateFamily::Gaussian {
                center,
                sigma,
                momentum: vec![0.0; dim],
            }
        }
        Scenario::ClassicalAdvect => {
            // Start off-center with momentum toward the middle, so the
            // default run actually advects across the box.
            let dim = grid.dim();
            let mut center = vec![0.0; dim];
            let mut sigma = vec![1.0; dim];
            for a in 0..dim {
                let mid = grid.center(a).unwrap_or(0.0);
                let extent = grid.extent(a).unwrap_or(1.0);
                center[a] = mid - extent / 8.0;
                sigma[a] = extent / 16.0;
            }
            StateFamily::Gaussian {
                center,
                sigma,
                momentum: vec![0.5; dim],
            }
        }
        _ => StateFamily::FourierBump,
    }
}

/// The Hamiltonian a scenario defaults to.
fn default_kind(scenario: Scenario) -> HamiltonianKind {
    match scenario {
        Scenario::ClassicalAdvect => HamiltonianKind::ClassicalFree,
        _ => HamiltonianKind::QuantumFree,
    }
}
