//! Probability densities paired with conjugate phase fields, complex
//! wavefunctions, and the polar map between the two descriptions.
//!
//! The central type is [`EnsembleState`]: a normalized density `P` and a
//! phase `S` sampled on a shared [`GridSpec`]. The pair `(P, S)` is the
//! canonical chart used throughout the crate — `P` is the configuration
//! variable, `S` its conjugate momentum field.
//!
//! [`ComplexField`] holds a wavefunction on the same grids. The two charts
//! are connected by the polar map
//!
//! ```text
//! psi = sqrt(P) * exp(i S / alpha)
//! ```
//!
//! implemented by [`to_wavefunction`] and inverted by [`from_wavefunction`].
//! The inverse has to reconstruct a single-valued `S` from a phase that is
//! only defined modulo `2 pi alpha`: it unwraps breadth-first from the
//! density maximum, refuses to jump across nodes (`P` below
//! [`node_threshold`]), and reports what it had to mask or could not reach in
//! a [`PhaseReport`]. On periodic grids it also measures the integer phase
//! winding around each axis, which is exactly the information a single-valued
//! `S` cannot carry.
//!
//! The module also hosts the plain-text serialization used by the scenario
//! runner and the examples: one CSV row per grid point, coordinates first,
//! shortest round-trip float formatting.

use num_complex::Complex64;
use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Boundary, GridSpec};

/// How far the total probability may deviate from 1 before
/// [`EnsembleState::new`] refuses to silently rescale it.
pub const MASS_TOLERANCE: f64 = 1e-6;

/// Density samples below zero but above this floor are treated as rounding
/// debris and clamped to zero; anything below it is rejected.
pub const NEGATIVITY_FLOOR: f64 = -1e-12;

/// Relative cutoff under which a density sample counts as a node.
pub const NODE_RELATIVE_THRESHOLD: f64 = 1e-12;

/// Node cutoff for a concrete density: [`NODE_RELATIVE_THRESHOLD`] times its
/// maximum value.
pub fn node_threshold(p: &[f64]) -> f64 {
    NODE_RELATIVE_THRESHOLD * p.iter().fold(0.0f64, |m, &v| m.max(v))
}

pub(crate) fn check_finite(data: &[f64]) -> Result<()> {
    for (index, v) in data.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { index });
        }
    }
    Ok(())
}

pub(crate) fn check_positive_parameter(name: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "{name} must be finite and positive, got {value}"
        )));
    }
    Ok(())
}

fn validate_density(mut p: Vec<f64>) -> Result<Vec<f64>> {
    for (index, v) in p.iter_mut().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if *v < NEGATIVITY_FLOOR {
            return Err(Error::NegativeProbability { index, value: *v });
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(p)
}

/// A normalized probability density `P` and its conjugate phase field `S`
/// on a shared grid.
///
/// Construction validates everything once — lengths, finiteness, positivity,
/// normalization — so downstream code can treat the pair as well-formed.
/// States are immutable; operations that change them return new states.
#[derive(Debug, Clone)]
pub struct EnsembleState {
    grid: GridSpec,
    p: Vec<f64>,
    s: Vec<f64>,
}

impl EnsembleState {
    /// Builds a state from fields that are already normalized (up to
    /// [`MASS_TOLERANCE`]); the residual deviation is rescaled away.
    ///
    /// # Errors
    ///
    /// * [`Error::LengthMismatch`] if either field does not fit the grid.
    /// * [`Error::NonFinite`] for NaN or infinite samples.
    /// * [`Error::NegativeProbability`] for density samples below
    ///   [`NEGATIVITY_FLOOR`] (small negative rounding debris is clamped).
    /// * [`Error::Normalization`] if the total mass is further than
    ///   [`MASS_TOLERANCE`] from 1.
    pub fn new(grid: GridSpec, p: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        grid.check_len(p.len())?;
        grid.check_len(s.len())?;
        let p = validate_density(p)?;
        check_finite(&s)?;
        let mass = grid.integrate(&p)?;
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Normalization {
                mass,
                limit: MASS_TOLERANCE,
            });
        }
        Ok(Self::rescaled(grid, p, s, mass))
    }

    /// Builds a state from an unnormalized density, rescaling it to unit
    /// mass. Use this when sampling an analytic profile whose discrete sum
    /// is not exactly 1.
    ///
    /// # Errors
    ///
    /// Validation as in [`EnsembleState::new`], except that any finite,
    /// strictly positive mass is accepted; zero or negative total mass is an
    /// [`Error::InvalidParameter`].
    pub fn normalized(grid: GridSpec, p: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        grid.check_len(p.len())?;
        grid.check_len(s.len())?;
        let p = validate_density(p)?;
        check_finite(&s)?;
        let mass = grid.integrate(&p)?;
        if !mass.is_finite() || mass <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "cannot normalize a density with total mass {mass}"
            )));
        }
        Ok(Self::rescaled(grid, p, s, mass))
    }

    /// Samples analytic density and phase profiles on the grid and
    /// normalizes the result (see [`EnsembleState::normalized`]).
    ///
    /// # Errors
    ///
    /// As in [`EnsembleState::normalized`].
    pub fn from_functions<FP, FS>(grid: GridSpec, density: FP, phase: FS) -> Result<Self>
    where
        FP: Fn([f64; 3]) -> f64,
        FS: Fn([f64; 3]) -> f64,
    {
        let n = grid.num_points();
        let mut p = Vec::with_capacity(n);
        let mut s = Vec::with_capacity(n);
        for flat in 0..n {
            let x = grid.position(flat);
            p.push(density(x));
            s.push(phase(x));
        }
        Self::normalized(grid, p, s)
    }

    /// Internal constructor for fields that are known-good by construction
    /// (integrator stages, variational probes). Skips all validation.
    pub(crate) fn new_unchecked(grid: GridSpec, p: Vec<f64>, s: Vec<f64>) -> Self {
        debug_assert_eq!(p.len(), grid.num_points());
        debug_assert_eq!(s.len(), grid.num_points());
        Self { grid, p, s }
    }

    /// Takes the fields back out without copying (probe loops re-use them).
    pub(crate) fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.p, self.s)
    }

    fn rescaled(grid: GridSpec, mut p: Vec<f64>, s: Vec<f64>, mass: f64) -> Self {
        let inv = 1.0 / mass;
        for v in &mut p {
            *v *= inv;
        }
        Self { grid, p, s }
    }

    /// The grid both fields live on.
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// The probability density, one sample per grid point.
    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// The phase field, one sample per grid point.
    pub fn s(&self) -> &[f64] {
        &self.s
    }

    /// Total probability; 1 up to rounding for every validated state.
    pub fn mass(&self) -> f64 {
        self.grid
            .integrate(&self.p)
            .expect("state fields match their grid by construction")
    }

    /// The same state with a constant added to the phase. `S` enters every
    /// structure in this crate only through derivatives and differences, so
    /// this is a gauge transformation.
    pub fn shift_phase(&self, offset: f64) -> Result<Self> {
        if !offset.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "phase offset must be finite, got {offset}"
            )));
        }
        let s = self.s.iter().map(|v| v + offset).collect();
        Ok(Self {
            grid: self.grid,
            p: self.p.clone(),
            s,
        })
    }
}

/// A complex wavefunction on a grid.
#[derive(Debug, Clone)]
pub struct ComplexField {
    grid: GridSpec,
    data: Vec<Complex64>,
}

impl ComplexField {
    /// Wraps raw samples, checking length and finiteness.
    ///
    /// # Errors
    ///
    /// [`Error::LengthMismatch`] or [`Error::NonFinite`].
    pub fn new(grid: GridSpec, data: Vec<Complex64>) -> Result<Self> {
        grid.check_len(data.len())?;
        for (index, z) in data.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite { index });
            }
        }
        Ok(Self { grid, data })
    }

    /// Samples an analytic profile on the grid.
    ///
    /// # Errors
    ///
    /// [`Error::NonFinite`] if the profile produces NaN or infinities.
    pub fn from_fn<F>(grid: GridSpec, f: F) -> Result<Self>
    where
        F: Fn([f64; 3]) -> Complex64,
    {
        let n = grid.num_points();
        let mut data = Vec::with_capacity(n);
        for flat in 0..n {
            data.push(f(grid.position(flat)));
        }
        Self::new(grid, data)
    }

    pub(crate) fn new_unchecked(grid: GridSpec, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), grid.num_points());
        Self { grid, data }
    }

    /// The grid the samples live on.
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// The samples in row-major order.
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// The pointwise density `|psi|^2`.
    pub fn density(&self) -> Vec<f64> {
        self.data.iter().map(Complex64::norm_sqr).collect()
    }

    /// The L2 norm `sqrt(integral of |psi|^2)`.
    pub fn norm(&self) -> f64 {
        let d = self.density();
        self.grid
            .integrate(&d)
            .expect("density length matches the grid by construction")
            .sqrt()
    }
}

/// What the phase unwrapping in [`from_wavefunction`] had to do.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseReport {
    /// Grid points whose density sat below the node threshold; their phase
    /// is undefined and was set to zero.
    pub masked_points: usize,
    /// Largest single-step phase difference (radians) consumed while
    /// unwrapping. Values approaching pi mean the grid barely resolves the
    /// phase and the reconstruction is at the edge of being ambiguous.
    pub max_neighbor_jump: f64,
    /// On periodic grids, the integer phase winding around each axis,
    /// measured on the grid line through the density maximum (zero when that
    /// line touches a node, and always zero on vanishing grids). A nonzero
    /// winding is exactly the part of the phase a single-valued `S` cannot
    /// represent.
    pub windings: Vec<i64>,
}

/// Polar map from the canonical chart to the wavefunction chart:
/// `psi = sqrt(P) exp(i S / alpha)`.
///
/// # Errors
///
/// [`Error::InvalidParameter`] unless `alpha` is finite and positive.
pub fn to_wavefunction(state: &EnsembleState, alpha: f64) -> Result<ComplexField> {
    check_positive_parameter("alpha", alpha)?;
    let data: Vec<Complex64> = state
        .p()
        .iter()
        .zip(state.s().iter())
        .map(|(&p, &s)| Complex64::from_polar(p.sqrt(), s / alpha))
        .collect();
    Ok(ComplexField::new_unchecked(*state.grid(), data))
}

/// Inverse polar map: recovers `(P, S)` from a wavefunction.
///
/// `P` is `|psi|^2` rescaled to unit mass. `S` is `alpha` times the phase,
/// unwrapped breadth-first from the density maximum so that neighbouring
/// samples never differ by more than `pi alpha`; the unwrapping only walks
/// through points whose density exceeds [`node_threshold`], because across a
/// node the phase carries no information. Points below the threshold get
/// `S = 0` and are counted in the report.
///
/// # Errors
///
/// * [`Error::InvalidParameter`] unless `alpha` is finite and positive.
/// * [`Error::Node`] if the wavefunction vanishes identically, or if its
///   support is split by nodes into disconnected pieces — the phase offset
///   between pieces is genuinely undetermined, and this map refuses to
///   invent one.
pub fn from_wavefunction(psi: &ComplexField, alpha: f64) -> Result<(EnsembleState, PhaseReport)> {
    let p = psi.density();
    let (seed, pmax) = p
        .iter()
        .enumerate()
        .fold((0usize, 0.0f64), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        });
    if pmax <= 0.0 {
        return Err(Error::Node(
            "wavefunction vanishes identically; no phase to recover".into(),
        ));
    }
    from_wavefunction_at(psi, alpha, seed)
}

/// [`from_wavefunction`] with an explicit gauge point: the unwrapping starts
/// at flat index `gauge_point`, whose recovered phase is pinned to the
/// principal value `alpha * arg(psi)` there.
///
/// # Errors
///
/// As in [`from_wavefunction`], plus [`Error::Node`] if the gauge point
/// itself sits below the node threshold (its phase means nothing), and
/// [`Error::LengthMismatch`] if it is outside the grid.
pub fn from_wavefunction_at(
    psi: &ComplexField,
    alpha: f64,
    gauge_point: usize,
) -> Result<(EnsembleState, PhaseReport)> {
    check_positive_parameter("alpha", alpha)?;
    let grid = *psi.grid();
    let data = psi.data();
    let n = data.len();
    if gauge_point >= n {
        return Err(Error::LengthMismatch {
            got: gauge_point,
            expected: n,
        });
    }
    let p: Vec<f64> = data.iter().map(Complex64::norm_sqr).collect();
    let pmax = p.iter().fold(0.0f64, |m, &v| m.max(v));
    let eps = NODE_RELATIVE_THRESHOLD * pmax;
    let seed = gauge_point;
    if pmax <= 0.0 || p[seed] <= eps {
        return Err(Error::Node(
            "gauge point sits below the node threshold; its phase is undefined".into(),
        ));
    }

    let mut s = vec![0.0f64; n];
    let mut visited = vec![false; n];
    let mut queue = VecDeque::new();
    let mut max_jump = 0.0f64;
    s[seed] = alpha * data[seed].arg();
    visited[seed] = true;
    queue.push_back(seed);
    let mut nbrs = Vec::with_capacity(6);
    while let Some(i) = queue.pop_front() {
        axis_neighbors(&grid, i, &mut nbrs);
        for &j in &nbrs {
            if visited[j] || p[j] <= eps {
                continue;
            }
            let d = wrap_angle(data[j].arg() - data[i].arg());
            s[j] = s[i] + alpha * d;
            max_jump = max_jump.max(d.abs());
            visited[j] = true;
            queue.push_back(j);
        }
    }

    let mut masked_points = 0usize;
    for i in 0..n {
        if p[i] <= eps {
            masked_points += 1;
        } else if !visited[i] {
            return Err(Error::Node(
                "wavefunction support is disconnected; the relative phase \
                 between its pieces is undetermined"
                    .into(),
            ));
        }
    }

    let windings = match grid.boundary() {
        Boundary::Periodic => (0..grid.dim())
            .map(|axis| ring_winding(&grid, data, &p, eps, seed, axis))
            .collect(),
        Boundary::Vanishing => vec![0; grid.dim()],
    };

    let state = EnsembleState::normalized(grid, p, s)?;
    Ok((
        state,
        PhaseReport {
            masked_points,
            max_neighbor_jump: max_jump,
            windings,
        },
    ))
}

/// The constant phase offset that best aligns `s1` with `s2` when both
/// describe the same physical state: the `P`-weighted mean of `s1 - s2`.
/// Subtracting it from `s1` removes the gauge freedom before comparing
/// phase fields sample by sample.
///
/// # Errors
///
/// [`Error::LengthMismatch`] if the fields do not fit the grid.
pub fn gauge_offset(grid: &GridSpec, p: &[f64], s1: &[f64], s2: &[f64]) -> Result<f64> {
    grid.check_len(p.len())?;
    grid.check_len(s1.len())?;
    grid.check_len(s2.len())?;
    let weighted: Vec<f64> = p
        .iter()
        .zip(s1.iter().zip(s2.iter()))
        .map(|(&p, (&a, &b))| p * (a - b))
        .collect();
    let num = grid.integrate(&weighted)?;
    let mass = grid.integrate(p)?;
    if mass <= 0.0 {
        return Err(Error::InvalidParameter(
            "gauge alignment needs a density with positive mass".into(),
        ));
    }
    Ok(num / mass)
}

fn wrap_angle(d: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = d.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

/// Nearest-neighbour flat indices of `flat`, respecting the boundary.
/// Vanishing grids simply have fewer neighbours at the faces.
fn axis_neighbors(grid: &GridSpec, flat: usize, out: &mut Vec<usize>) {
    out.clear();
    for axis in 0..grid.dim() {
        let n = grid.points(axis).expect("axis < dim");
        let s = grid.axis_stride(axis);
        let k = (flat / s) % n;
        match grid.boundary() {
            Boundary::Periodic => {
                out.push(if k == 0 { flat + (n - 1) * s } else { flat - s });
                out.push(if k == n - 1 { flat - (n - 1) * s } else { flat + s });
            }
            Boundary::Vanishing => {
                if k > 0 {
                    out.push(flat - s);
                }
                if k < n - 1 {
                    out.push(flat + s);
                }
            }
        }
    }
}

/// Integer phase winding around the periodic axis `axis`, measured along the
/// grid line through `seed`. Returns 0 if the line touches a node.
fn ring_winding(
    grid: &GridSpec,
    data: &[Complex64],
    p: &[f64],
    eps: f64,
    seed: usize,
    axis: usize,
) -> i64 {
    let n = grid.points(axis).expect("axis < dim");
    let s = grid.axis_stride(axis);
    let k0 = (seed / s) % n;
    let base = seed - k0 * s;
    let mut total = 0.0f64;
    let mut prev = data[base + k0 * s];
    if p[base + k0 * s] <= eps {
        return 0;
    }
    for step in 1..=n {
        let k = (k0 + step) % n;
        let idx = base + k * s;
        if p[idx] <= eps {
            return 0;
        }
        total += wrap_angle(data[idx].arg() - prev.arg());
        prev = data[idx];
    }
    (total / (2.0 * std::f64::consts::PI)).round() as i64
}

// ---------------------------------------------------------------------------
// Plain-text output
// ---------------------------------------------------------------------------

const COORD_NAMES: [&str; 3] = ["x", "y", "z"];

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes named columns against the grid coordinates, one CSV row per grid
/// point: `x[,y[,z]],<names...>`. Floats use shortest round-trip formatting,
/// so equal data produces byte-identical files.
///
/// # Errors
///
/// [`Error::LengthMismatch`] for misfitting columns,
/// [`Error::InvalidParameter`] if names and columns disagree in number, and
/// [`Error::Io`] for filesystem trouble.
pub fn write_field_csv(
    path: &Path,
    grid: &GridSpec,
    names: &[&str],
    columns: &[&[f64]],
) -> Result<()> {
    if names.len() != columns.len() {
        return Err(Error::InvalidParameter(format!(
            "{} column names for {} columns",
            names.len(),
            columns.len()
        )));
    }
    for c in columns {
        grid.check_len(c.len())?;
    }
    let mut out = String::new();
    let mut header: Vec<&str> = COORD_NAMES[..grid.dim()].to_vec();
    header.extend_from_slice(names);
    out.push_str(&header.join(","));
    out.push('\n');
    for flat in 0..grid.num_points() {
        let pos = grid.position(flat);
        for (a, x) in pos.iter().take(grid.dim()).enumerate() {
            if a > 0 {
                out.push(',');
            }
            let _ = write!(out, "{x}");
        }
        for c in columns {
            let _ = write!(out, ",{}", c[flat]);
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Writes a wavefunction as `x[,y[,z]],re,im` rows.
///
/// # Errors
///
/// As in [`write_field_csv`].
pub fn write_complex_field_csv(path: &Path, field: &ComplexField) -> Result<()> {
    let re: Vec<f64> = field.data().iter().map(|z| z.re).collect();
    let im: Vec<f64> = field.data().iter().map(|z| z.im).collect();
    write_field_csv(path, field.grid(), &["re", "im"], &[&re, &im])
}

/// Writes a table whose first column is a label: `header` then rows of
/// `label,<values...>`. Every value row must have `header.len() - 1` entries.
/// Labels containing commas, quotes, or newlines are quoted per RFC 4180.
///
/// # Errors
///
/// [`Error::InvalidParameter`] for ragged rows, [`Error::Io`] for filesystem
/// trouble.
pub fn write_labeled_table_csv(
    path: &Path,
    header: &[&str],
    rows: &[(String, Vec<f64>)],
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for (i, (label, values)) in rows.iter().enumerate() {
        if values.len() + 1 != header.len() {
            return Err(Error::InvalidParameter(format!(
                "row {i} has {} values for {} columns",
                values.len() + 1,
                header.len()
            )));
        }
        if label.contains([',', '"', '\n']) {
            out.push('"');
            out.push_str(&label.replace('"', "\"\""));
            out.push('"');
        } else {
            out.push_str(label);
        }
        for v in values {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Writes a free-form numeric table: `header` then one row per entry of
/// `rows`. Every row must have `header.len()` values.
///
/// # Errors
///
/// [`Error::InvalidParameter`] for ragged rows, [`Error::Io`] for filesystem
/// trouble.
pub fn write_table_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for (i, row) in rows.iter().enumerate() {
        if row.len() != header.len() {
            return Err(Error::InvalidParameter(format!(
                "row {i} has {} values for {} columns",
                row.len(),
                header.len()
            )));
        }
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn gaussian_1d(n: usize, extent: f64, sigma: f64) -> EnsembleState {
        let grid = GridSpec::vanishing_centered(&[n], &[extent]).unwrap();
        EnsembleState::from_functions(
            grid,
            |x| (-x[0] * x[0] / (2.0 * sigma * sigma)).exp(),
            |x| 0.3 * x[0] + 0.1 * x[0] * x[0],
        )
        .unwrap()
    }

    #[test]
    fn construction_validates_density() {
        let grid = GridSpec::periodic(&[8], &[1.0]).unwrap();
        let uniform = vec![1.0; 8];
        let s = vec![0.0; 8];

        let mut negative = uniform.clone();
        negative[3] = -1e-6;
        assert!(matches!(
            EnsembleState::new(grid, negative, s.clone()),
            Err(Error::NegativeProbability { index: 3, .. })
        ));

        let mut debris = vec![8.0 / 7.0; 8];
        debris[2] = -1e-14;
        let st = EnsembleState::new(grid, debris, s.clone()).unwrap();
        assert_eq!(st.p()[2], 0.0);

        let mut nan = uniform.clone();
        nan[5] = f64::NAN;
        assert!(matches!(
            EnsembleState::new(grid, nan, s.clone()),
            Err(Error::NonFinite { index: 5 })
        ));

        let off_mass = vec![2.0; 8];
        assert!(matches!(
            EnsembleState::new(grid, off_mass.clone(), s.clone()),
            Err(Error::Normalization { .. })
        ));
        // normalized() accepts the same field and rescales it.
        let st = EnsembleState::normalized(grid, off_mass, s).unwrap();
        assert!((st.mass() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn new_rescales_small_mass_deviation() {
        let grid = GridSpec::periodic(&[8], &[1.0]).unwrap();
        let p = vec![1.0 + 5e-7; 8];
        let st = EnsembleState::new(grid, p, vec![0.0; 8]).unwrap();
        assert!((st.mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn polar_map_round_trips_a_smooth_state() {
        let state = gaussian_1d(64, 16.0, 1.3);
        let alpha = 0.7;
        let psi = to_wavefunction(&state, alpha).unwrap();
        let (back, report) = from_wavefunction(&psi, alpha).unwrap();

        let dp: f64 = state
            .p()
            .iter()
            .zip(back.p().iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(dp < 1e-13, "density discrepancy {dp}");

        // S is recovered up to one global constant on the unmasked points.
        let offset = gauge_offset(state.grid(), state.p(), back.s(), state.s()).unwrap();
        let eps = node_threshold(state.p());
        let ds = state
            .p()
            .iter()
            .zip(state.s().iter().zip(back.s().iter()))
            .filter(|(&p, _)| p > eps)
            .map(|(_, (&a, &b))| (b - offset - a).abs())
            .fold(0.0, f64::max);
        assert!(ds < 1e-10, "phase discrepancy {ds}");
        assert_eq!(report.windings, vec![0]);
        assert!(report.max_neighbor_jump < std::f64::consts::PI / 2.0);
    }

    #[test]
    fn plane_wave_winding_is_detected() {
        let n = 32;
        let extent = 4.0;
        let grid = GridSpec::periodic(&[n], &[extent]).unwrap();
        let winding = 3.0;
        let k = 2.0 * std::f64::consts::PI * winding / extent;
        let psi = ComplexField::from_fn(grid, |x| {
            Complex64::from_polar((1.0 / extent).sqrt(), k * x[0])
        })
        .unwrap();
        let (state, report) = from_wavefunction(&psi, 1.0).unwrap();
        assert_eq!(report.windings, vec![3]);
        assert_eq!(report.masked_points, 0);
        // The recovered S is single-valued, so it cannot equal k*x globally,
        // but its gradient must be k away from the one unwrapping seam.
        let ds = state.grid().gradient(state.s(), 0).unwrap();
        let matches = ds.iter().filter(|&&d| (d - k).abs() < 1e-9).count();
        assert!(matches >= n - 3, "only {matches} of {n} samples saw slope k");
    }

    #[test]
    fn disconnected_support_is_refused() {
        let grid = GridSpec::vanishing_centered(&[32], &[8.0]).unwrap();
        let psi = ComplexField::from_fn(grid, |x| {
            let left = (-(x[0] + 2.5) * (x[0] + 2.5) * 8.0).exp();
            let right = (-(x[0] - 2.5) * (x[0] - 2.5) * 8.0).exp();
            // Hard-zero the gap so the two bumps share no support at all.
            let v = if x[0].abs() < 1.0 { 0.0 } else { left + right };
            Complex64::new(v, 0.0)
        })
        .unwrap();
        assert!(matches!(
            from_wavefunction(&psi, 1.0),
            Err(Error::Node(_))
        ));
    }

    #[test]
    fn masked_nodes_are_reported_not_fatal() {
        let grid = GridSpec::vanishing_centered(&[64], &[32.0]).unwrap();
        let psi = ComplexField::from_fn(grid, |x| {
            let v = (-x[0] * x[0] / 2.0).exp();
            Complex64::new(if v < 1e-12 { 0.0 } else { v }, 0.0)
        })
        .unwrap();
        let (_, report) = from_wavefunction(&psi, 1.0).unwrap();
        assert!(report.masked_points > 0);
    }

    #[test]
    fn alpha_must_be_positive_and_finite() {
        let state = gaussian_1d(16, 8.0, 1.0);
        for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                to_wavefunction(&state, bad),
                Err(Error::InvalidParameter(_))
            ));
        }
    }

    #[test]
    fn gauge_shift_changes_nothing_but_the_phase() {
        let state = gaussian_1d(32, 12.0, 1.0);
        let shifted = state.shift_phase(5.5).unwrap();
        assert_eq!(state.p(), shifted.p());
        let d = state.s()[7] - shifted.s()[7];
        assert!((d + 5.5).abs() < 1e-15);
    }

    #[test]
    fn field_csv_is_deterministic_and_exact() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridSpec::periodic(&[8], &[2.0]).unwrap();
        let vals: Vec<f64> = (0..8).map(|k| k as f64 * 0.25).collect();
        let path = dir.path().join("field.csv");
        write_field_csv(&path, &grid, &["v"], &[&vals]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let expected = "x,v\n0,0\n0.25,0.25\n0.5,0.5\n0.75,0.75\n1,1\n1.25,1.25\n1.5,1.5\n1.75,1.75\n";
        assert_eq!(text, expected);

        // Same data, second write: byte-identical.
        let path2 = dir.path().join("field2.csv");
        write_field_csv(&path2, &grid, &["v"], &[&vals]).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn table_csv_rejects_ragged_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let rows = vec![vec![1.0, 2.0], vec![3.0]];
        assert!(matches!(
            write_table_csv(&path, &["a", "b"], &rows),
            Err(Error::InvalidParameter(_))
        ));
    }
}
