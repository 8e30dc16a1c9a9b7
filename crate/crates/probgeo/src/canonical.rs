//! Canonical structure over `(P, S)`: functional Poisson brackets, the
//! observable abstraction with its admissibility conditions, and the
//! Galilean generators with their bracket algebra.
//!
//! The bracket of two functionals is
//!
//! ```text
//! {F, G} = integral of ( dF/dP dG/dS - dF/dS dG/dP )
//! ```
//!
//! where `dF/dP`, `dF/dS` are variational derivatives. An [`Observable`]
//! carries its value and both derivative fields; built-in generators supply
//! the derivatives in closed form, and [`numeric_variational_derivative`]
//! provides an independent oracle to check any of them against.
//!
//! ## Discrete exactness
//!
//! The closed-form derivative fields are the derivatives *of the discrete
//! functionals*, not discretizations of continuum expressions. On periodic
//! grids the central difference satisfies `transpose(D) = -D` exactly, so
//! e.g. the momentum functional `A = sum P DS dV` has exact gradient
//! `dA/dS = -DP`; on vanishing grids the same holds up to terms carrying the
//! field values at the box faces (negligible for compactly supported
//! states). This is what lets bracket identities hold at rounding level
//! instead of at truncation level.
//!
//! ## Why the algebra states are special
//!
//! The product rule is the one identity second-order stencils do *not*
//! satisfy exactly: `D(fg) - f Dg - g Df` is `O(dx^2)` for generic smooth
//! fields. Several Galilean relations — `{H, A_i}`, `{H, L_i}`,
//! `{L_i, A_j}`, `{L_i, L_j}` — cancel in the continuum only through the
//! product rule, so on generic states they close with an `O(dx^2)` anomaly,
//! far above the rounding floor. The anomaly terms all carry either a second
//! derivative of `S` beyond quadratic order or an odd-parity integrand in
//! `P`. States with a mirror-even density and an exactly quadratic phase
//! (see `scenario::states::centered_algebra_state`) therefore kill every
//! anomaly identically, and the nine relations close at rounding level —
//! the discrete algebra genuinely holds there, rather than being declared
//! "close enough".

use std::path::Path;

use crate::dynamics::{hamiltonian_observable, HamiltonianKind};
use crate::error::{Error, Result};
use crate::fields::{
    check_positive_parameter, node_threshold, write_labeled_table_csv, EnsembleState,
};
use crate::grid::Boundary;

const AXIS_LABEL: [&str; 3] = ["x", "y", "z"];

/// Which canonical field a perturbation applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldChoice {
    /// Vary the density `P`.
    P,
    /// Vary the phase `S`.
    S,
}

/// A state functional returning a scalar: the value side of an observable.
pub type ValueFn = Box<dyn Fn(&EnsembleState) -> Result<f64> + Send + Sync>;
/// A state functional returning a field: a variational-derivative side.
pub type DerivativeFn = Box<dyn Fn(&EnsembleState) -> Result<Vec<f64>> + Send + Sync>;

/// A functional `F[P, S]` together with its two variational-derivative
/// fields.
///
/// The derivative fields are what the Poisson bracket consumes, so an
/// observable is exactly "a thing that can act as a canonical generator and
/// as an expectation value" at the same time.
pub struct Observable {
    name: String,
    homogeneous: bool,
    analytic: bool,
    value_fn: ValueFn,
    d_dp_fn: DerivativeFn,
    d_ds_fn: DerivativeFn,
}

impl std::fmt::Debug for Observable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Observable")
            .field("name", &self.name)
            .field("homogeneous", &self.homogeneous)
            .field("analytic", &self.analytic)
            .finish_non_exhaustive()
    }
}

impl Observable {
    /// Assembles an observable from a value function and closed-form
    /// derivative fields. `homogeneous` declares degree-one homogeneity in
    /// `P` (checked by [`homogeneity_check`], not assumed).
    pub fn new<V, DP, DS>(
        name: impl Into<String>,
        homogeneous: bool,
        value: V,
        d_dp: DP,
        d_ds: DS,
    ) -> Self
    where
        V: Fn(&EnsembleState) -> Result<f64> + Send + Sync + 'static,
        DP: Fn(&EnsembleState) -> Result<Vec<f64>> + Send + Sync + 'static,
        DS: Fn(&EnsembleState) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            homogeneous,
            analytic: true,
            value_fn: Box::new(value),
            d_dp_fn: Box::new(d_dp),
            d_ds_fn: Box::new(d_ds),
        }
    }

    /// Wraps a bare value function, deriving both variational derivatives
    /// numerically. Flagged non-analytic; fine for exploration, too slow and
    /// too noisy for algebra runs.
    pub fn from_value<V>(name: impl Into<String>, homogeneous: bool, value: V) -> Self
    where
        V: Fn(&EnsembleState) -> Result<f64> + Send + Sync + Clone + 'static,
    {
        let v_value = value.clone();
        let v_dp = value.clone();
        let v_ds = value;
        Self {
            name: name.into(),
            homogeneous,
            analytic: false,
            value_fn: Box::new(move |st| v_value(st)),
            d_dp_fn: Box::new(move |st| {
                numeric_variational_derivative(&v_dp, st, FieldChoice::P)
            }),
            d_ds_fn: Box::new(move |st| {
                numeric_variational_derivative(&v_ds, st, FieldChoice::S)
            }),
        }
    }

    /// Display name, used in reports.
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Whether this observable claims degree-one homogeneity in `P`.
    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    /// Whether the derivative fields are closed-form (true) or numeric
    /// differences (false).
    pub fn is_analytic(&self) -> bool {
        self.analytic
    }

    /// Evaluates `F[P, S]`.
    ///
    /// # Errors
    ///
    /// Whatever the underlying functional raises (axis mismatches, nodes).
    pub fn value(&self, state: &EnsembleState) -> Result<f64> {
        (self.value_fn)(state)
    }

    /// The variational derivative `dF/dP` as a field.
    ///
    /// # Errors
    ///
    /// As in [`Observable::value`].
    pub fn d_dp(&self, state: &EnsembleState) -> Result<Vec<f64>> {
        (self.d_dp_fn)(state)
    }

    /// The variational derivative `dF/dS` as a field.
    ///
    /// # Errors
    ///
    /// As in [`Observable::value`].
    pub fn d_ds(&self, state: &EnsembleState) -> Result<Vec<f64>> {
        (self.d_ds_fn)(state)
    }
}

/// The functional Poisson bracket
/// `{F, G} = integral of (dF/dP dG/dS - dF/dS dG/dP)` evaluated at `state`.
///
/// # Errors
///
/// Propagates derivative-field errors from either observable.
pub fn poisson_bracket(f: &Observable, g: &Observable, state: &EnsembleState) -> Result<f64> {
    let fp = f.d_dp(state)?;
    let fs = f.d_ds(state)?;
    let gp = g.d_dp(state)?;
    let gs = g.d_ds(state)?;
    let grid = state.grid();
    grid.check_len(fp.len())?;
    grid.check_len(fs.len())?;
    grid.check_len(gp.len())?;
    grid.check_len(gs.len())?;
    let integrand: Vec<f64> = (0..fp.len())
        .map(|i| fp[i] * gs[i] - fs[i] * gp[i])
        .collect();
    grid.integrate(&integrand)
}

/// Central-difference variational derivative of an arbitrary functional:
/// component `i` is `[F(field_i + h) - F(field_i - h)] / (2 h dV)` with
/// `h = 1e-6 * max(1, |field|_inf)`.
///
/// This is the oracle the closed-form derivatives are checked against. Its
/// own accuracy is limited by rounding in `F` (about `|F| * 1e-16 / (h dV)`
/// per component), which is why algebra runs use the closed forms.
///
/// # Errors
///
/// [`Error::NonFinite`] if a probe evaluation returns NaN/inf, plus whatever
/// the functional itself raises.
pub fn numeric_variational_derivative<F>(
    f: &F,
    state: &EnsembleState,
    which: FieldChoice,
) -> Result<Vec<f64>>
where
    F: Fn(&EnsembleState) -> Result<f64> + ?Sized,
{
    let grid = *state.grid();
    let n = grid.num_points();
    let dv = grid.cell_volume();
    let mut p = state.p().to_vec();
    let mut s = state.s().to_vec();
    let probed_scale = match which {
        FieldChoice::P => p.iter().fold(0.0f64, |m, &v| m.max(v.abs())),
        FieldChoice::S => s.iter().fold(0.0f64, |m, &v| m.max(v.abs())),
    };
    let h = 1e-6 * probed_scale.max(1.0);
    let mut out = vec![0.0; n];
    for i in 0..n {
        let original = match which {
            FieldChoice::P => p[i],
            FieldChoice::S => s[i],
        };
        let eval = |value: f64, p: &mut Vec<f64>, s: &mut Vec<f64>| -> Result<f64> {
            match which {
                FieldChoice::P => p[i] = value,
                FieldChoice::S => s[i] = value,
            }
            let probe = EnsembleState::new_unchecked(grid, std::mem::take(p), std::mem::take(s));
            let result = f(&probe);
            let (pp, ss) = probe.into_parts();
            *p = pp;
            *s = ss;
            result
        };
        let plus = eval(original + h, &mut p, &mut s)?;
        let minus = eval(original - h, &mut p, &mut s)?;
        match which {
            FieldChoice::P => p[i] = original,
            FieldChoice::S => s[i] = original,
        }
        let d = (plus - minus) / (2.0 * h * dv);
        if !d.is_finite() {
            return Err(Error::NonFinite { index: i });
        }
        out[i] = d;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Built-in observables
// ---------------------------------------------------------------------------

/// `N = integral of P`: the normalization functional. Its derivative pair
/// `(1, 0)` makes it generate pure gauge shifts of `S`.
pub fn normalization_observable() -> Observable {
    Observable::new(
        "N",
        true,
        |st| st.grid().integrate(st.p()),
        |st| Ok(vec![1.0; st.grid().num_points()]),
        |st| Ok(vec![0.0; st.grid().num_points()]),
    )
}

/// `A_axis = integral of P d_axis S`: the momentum functional, canonical
/// generator of translations along `axis`. Derivatives: `dA/dP = d_axis S`,
/// `dA/dS = -d_axis P` (summation by parts, exact on periodic grids).
pub fn momentum_observable(axis: usize) -> Observable {
    let name = format!("A_{}", AXIS_LABEL[axis.min(2)]);
    Observable::new(
        name,
        true,
        move |st: &EnsembleState| {
            let ds = st.grid().gradient(st.s(), axis)?;
            let integrand: Vec<f64> = st.p().iter().zip(ds.iter()).map(|(&p, &d)| p * d).collect();
            st.grid().integrate(&integrand)
        },
        move |st: &EnsembleState| st.grid().gradient(st.s(), axis),
        move |st: &EnsembleState| {
            let dp = st.grid().gradient(st.p(), axis)?;
            Ok(dp.into_iter().map(|v| -v).collect())
        },
    )
}

/// `Q_axis = integral of P x_axis`: the mean position along `axis`.
/// Meaningful on vanishing-boundary grids (the coordinate is not a periodic
/// function).
pub fn position_observable(axis: usize) -> Observable {
    let name = format!("Q_{}", AXIS_LABEL[axis.min(2)]);
    Observable::new(
        name,
        true,
        move |st: &EnsembleState| {
            let x = st.grid().coordinate_field(axis)?;
            let integrand: Vec<f64> = st.p().iter().zip(x.iter()).map(|(&p, &x)| p * x).collect();
            st.grid().integrate(&integrand)
        },
        move |st: &EnsembleState| st.grid().coordinate_field(axis),
        move |st: &EnsembleState| Ok(vec![0.0; st.grid().num_points()]),
    )
}

/// The two axes completing `axis` to a positively oriented triple, i.e.
/// `(a, b)` with `epsilon(axis, a, b) = +1`.
fn complement_axes(axis: usize) -> (usize, usize) {
    match axis {
        0 => (1, 2),
        1 => (2, 0),
        _ => (0, 1),
    }
}

/// `L_axis = integral of P (x_a d_b S - x_b d_a S)` with `(a, b)` the axes
/// completing `axis` to a right-handed triple: the angular momentum about
/// the coordinate origin. Available when both complementary axes exist on
/// the grid (all three components in 3D, only `L_z` in 2D).
pub fn angular_momentum_observable(axis: usize) -> Observable {
    let name = format!("L_{}", AXIS_LABEL[axis.min(2)]);
    let (a, b) = complement_axes(axis);
    Observable::new(
        name,
        true,
        move |st: &EnsembleState| {
            let w = rotation_weight(st, a, b, st.s())?;
            let integrand: Vec<f64> = st.p().iter().zip(w.iter()).map(|(&p, &w)| p * w).collect();
            st.grid().integrate(&integrand)
        },
        move |st: &EnsembleState| rotation_weight(st, a, b, st.s()),
        move |st: &EnsembleState| {
            let w = rotation_weight(st, a, b, st.p())?;
            Ok(w.into_iter().map(|v| -v).collect())
        },
    )
}

/// `x_a d_b f - x_b d_a f` — the angular derivative weight shared by the
/// value and both derivatives of `L`. Because `x_a` is constant along axis
/// `b`, `d_b (x_a f) = x_a d_b f` holds exactly on the grid, which is what
/// makes `dL/dS = -(x_a d_b P - x_b d_a P)` the exact discrete gradient.
fn rotation_weight(state: &EnsembleState, a: usize, b: usize, f: &[f64]) -> Result<Vec<f64>> {
    let grid = state.grid();
    let xa = grid.coordinate_field(a)?;
    let xb = grid.coordinate_field(b)?;
    let dbf = grid.gradient(f, b)?;
    let daf = grid.gradient(f, a)?;
    Ok((0..f.len())
        .map(|i| xa[i] * dbf[i] - xb[i] * daf[i])
        .collect())
}

/// `G_axis = m Q_axis - t A_axis`: the Galilean boost generator at external
/// time parameter `t`.
pub fn boost_observable(axis: usize, mass: f64, time: f64) -> Observable {
    let name = format!("G_{}", AXIS_LABEL[axis.min(2)]);
    Observable::new(
        name,
        true,
        move |st: &EnsembleState| {
            let x = st.grid().coordinate_field(axis)?;
            let ds = st.grid().gradient(st.s(), axis)?;
            let integrand: Vec<f64> = (0..x.len())
                .map(|i| st.p()[i] * (mass * x[i] - time * ds[i]))
                .collect();
            st.grid().integrate(&integrand)
        },
        move |st: &EnsembleState| {
            let x = st.grid().coordinate_field(axis)?;
            let ds = st.grid().gradient(st.s(), axis)?;
            Ok((0..x.len()).map(|i| mass * x[i] - time * ds[i]).collect())
        },
        move |st: &EnsembleState| {
            let dp = st.grid().gradient(st.p(), axis)?;
            Ok(dp.into_iter().map(|v| time * v).collect())
        },
    )
}

// ---------------------------------------------------------------------------
// Galilean generator set and algebra verification
// ---------------------------------------------------------------------------

/// The ten (in 3D) Galilean generators, built for a fixed spatial dimension:
/// translations `A_i`, rotations `L_i` (those whose plane fits in the
/// dimension), boosts `G_i = m Q_i - t A_i`, the positions `Q_i` they are
/// built from, and the time-translation generator `H`.
pub struct GeneratorSet {
    /// Particle mass `m > 0`.
    pub mass: f64,
    /// External time parameter entering the boosts.
    pub time: f64,
    /// The scale constant pairing `P` with `S`.
    pub alpha: f64,
    /// Spatial dimension the set was built for.
    pub dim: usize,
    /// `A_i`, one per axis.
    pub translations: Vec<Observable>,
    /// `(axis, L_axis)` for each rotation whose plane fits the dimension.
    pub rotations: Vec<(usize, Observable)>,
    /// `G_i`, one per axis.
    pub boosts: Vec<Observable>,
    /// `Q_i`, one per axis.
    pub positions: Vec<Observable>,
    /// The ensemble Hamiltonian (quantum or classical free particle).
    pub hamiltonian: Observable,
}

impl GeneratorSet {
    /// The rotation observable about `axis`, if that rotation exists in
    /// this dimension.
    pub fn rotation(&self, axis: usize) -> Option<&Observable> {
        self.rotations
            .iter()
            .find(|(a, _)| *a == axis)
            .map(|(_, o)| o)
    }
}

/// Rotation axes available in `dim` spatial dimensions.
fn rotation_axes(dim: usize) -> &'static [usize] {
    match dim {
        3 => &[0, 1, 2],
        2 => &[2],
        _ => &[],
    }
}

/// Builds the Galilean generator set for `dim` spatial dimensions.
///
/// # Errors
///
/// [`Error::InvalidParameter`] for a bad dimension, non-positive mass or
/// alpha, or non-finite time.
pub fn build_galilean_generators(
    dim: usize,
    mass: f64,
    time: f64,
    alpha: f64,
    kind: HamiltonianKind,
) -> Result<GeneratorSet> {
    if dim == 0 || dim > 3 {
        return Err(Error::InvalidParameter(format!(
            "generator sets exist for 1-3 dimensions, got {dim}"
        )));
    }
    check_positive_parameter("mass", mass)?;
    check_positive_parameter("alpha", alpha)?;
    if !time.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "time must be finite, got {time}"
        )));
    }
    Ok(GeneratorSet {
        mass,
        time,
        alpha,
        dim,
        translations: (0..dim).map(momentum_observable).collect(),
        rotations: rotation_axes(dim)
            .iter()
            .map(|&a| (a, angular_momentum_observable(a)))
            .collect(),
        boosts: (0..dim).map(|a| boost_observable(a, mass, time)).collect(),
        positions: (0..dim).map(position_observable).collect(),
        hamiltonian: hamiltonian_observable(kind, mass, alpha)?,
    })
}

/// One verified bracket relation.
#[derive(Debug, Clone)]
pub struct RelationResidual {
    /// Human-readable relation, e.g. `{L_x,A_y} = A_z`.
    pub relation: String,
    /// The bracket value (left-hand side).
    pub lhs: f64,
    /// The target value (right-hand side observable, or 0).
    pub rhs: f64,
    /// `|lhs - rhs|`.
    pub residual: f64,
    /// `max(1, |lhs|, |rhs|)` — the scale relative residuals are quoted
    /// against.
    pub scale: f64,
}

impl RelationResidual {
    fn new(relation: String, lhs: f64, rhs: f64) -> Self {
        Self {
            relation,
            lhs,
            rhs,
            residual: (lhs - rhs).abs(),
            scale: lhs.abs().max(rhs.abs()).max(1.0),
        }
    }

    /// Residual divided by the relation's scale.
    pub fn relative(&self) -> f64 {
        self.residual / self.scale
    }
}

/// The full bracket table of one algebra run.
#[derive(Debug, Clone)]
pub struct AlgebraReport {
    /// Every evaluated relation, in a fixed deterministic order.
    pub relations: Vec<RelationResidual>,
}

impl AlgebraReport {
    /// Largest relative residual across all relations.
    pub fn max_relative_residual(&self) -> f64 {
        self.relations
            .iter()
            .map(RelationResidual::relative)
            .fold(0.0, f64::max)
    }

    /// Writes `relation,lhs,rhs,residual` rows.
    ///
    /// # Errors
    ///
    /// [`Error::Io`] on filesystem trouble.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<(String, Vec<f64>)> = self
            .relations
            .iter()
            .map(|r| (r.relation.clone(), vec![r.lhs, r.rhs, r.residual]))
            .collect();
        write_labeled_table_csv(path, &["relation", "lhs", "rhs", "residual"], &rows)
    }
}

fn epsilon(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Evaluates all nine Galilean bracket relation families at `state` and
/// reports every residual. Large residuals are data, not errors.
///
/// The relations:
///
/// ```text
/// {H, A_i} = 0          {L_i, A_j} = eps_ijk A_k     {A_i, A_j} = 0
/// {H, L_i} = 0          {L_i, L_j} = eps_ijk L_k     {A_i, G_j} = -m delta_ij
/// {H, G_i} = -A_i       {L_i, G_j} = eps_ijk G_k     {G_i, G_j} = 0
/// ```
///
/// # Errors
///
/// [`Error::InvalidParameter`] if the set was built for a different
/// dimension than the state's grid; otherwise propagates evaluation errors.
pub fn galilean_algebra_residual(
    set: &GeneratorSet,
    state: &EnsembleState,
) -> Result<AlgebraReport> {
    let dim = state.grid().dim();
    if dim != set.dim {
        return Err(Error::InvalidParameter(format!(
            "generator set built for dimension {}, state has dimension {dim}",
            set.dim
        )));
    }
    let mut relations = Vec::new();
    let h = &set.hamiltonian;

    // {H, A_i} = 0
    for (i, a) in set.translations.iter().enumerate() {
        let lhs = poisson_bracket(h, a, state)?;
        relations.push(RelationResidual::new(
            format!("{{H,A_{}}} = 0", AXIS_LABEL[i]),
            lhs,
            0.0,
        ));
    }
    // {H, L_i} = 0
    for (axis, l) in &set.rotations {
        let lhs = poisson_bracket(h, l, state)?;
        relations.push(RelationResidual::new(
            format!("{{H,L_{}}} = 0", AXIS_LABEL[*axis]),
            lhs,
            0.0,
        ));
    }
    // {H, G_i} = -A_i
    for (i, g) in set.boosts.iter().enumerate() {
        let lhs = poisson_bracket(h, g, state)?;
        let rhs = -set.translations[i].value(state)?;
        relations.push(RelationResidual::new(
            format!("{{H,G_{0}}} = -A_{0}", AXIS_LABEL[i]),
            lhs,
            rhs,
        ));
    }
    // {L_i, A_j} = eps_ijk A_k  and  {L_i, G_j} = eps_ijk G_k
    for (i, l) in &set.rotations {
        for j in 0..dim {
            let lhs = poisson_bracket(l, &set.translations[j], state)?;
            let rhs = eps_contract(*i, j, &set.translations, state)?;
            relations.push(RelationResidual::new(
                format!(
                    "{{L_{},A_{}}} = eps.A",
                    AXIS_LABEL[*i], AXIS_LABEL[j]
                ),
                lhs,
                rhs,
            ));
            let lhs = poisson_bracket(l, &set.boosts[j], state)?;
            let rhs = eps_contract(*i, j, &set.boosts, state)?;
            relations.push(RelationResidual::new(
                format!(
                    "{{L_{},G_{}}} = eps.G",
                    AXIS_LABEL[*i], AXIS_LABEL[j]
                ),
                lhs,
                rhs,
            ));
        }
    }
    // {L_i, L_j} = eps_ijk L_k
    for a in 0..set.rotations.len() {
        for b in (a + 1)..set.rotations.len() {
            let (i, li) = &set.rotations[a];
            let (j, lj) = &set.rotations[b];
            let lhs = poisson_bracket(li, lj, state)?;
            let mut rhs = 0.0;
            for (k, lk) in &set.rotations {
                let e = epsilon(*i, *j, *k);
                if e != 0.0 {
                    rhs += e * lk.value(state)?;
                }
            }
            relations.push(RelationResidual::new(
                format!(
                    "{{L_{},L_{}}} = eps.L",
                    AXIS_LABEL[*i], AXIS_LABEL[*j]
                ),
                lhs,
                rhs,
            ));
        }
    }
    // {A_i, A_j} = 0
    for i in 0..dim {
        for j in (i + 1)..dim {
            let lhs = poisson_bracket(&set.translations[i], &set.translations[j], state)?;
            relations.push(RelationResidual::new(
                format!("{{A_{},A_{}}} = 0", AXIS_LABEL[i], AXIS_LABEL[j]),
                lhs,
                0.0,
            ));
        }
    }
    // {A_i, G_j} = -m delta_ij
    for i in 0..dim {
        for j in 0..dim {
            let lhs = poisson_bracket(&set.translations[i], &set.boosts[j], state)?;
            let rhs = if i == j { -set.mass } else { 0.0 };
            relations.push(RelationResidual::new(
                format!(
                    "{{A_{},G_{}}} = -m.delta",
                    AXIS_LABEL[i], AXIS_LABEL[j]
                ),
                lhs,
                rhs,
            ));
        }
    }
    // {G_i, G_j} = 0
    for i in 0..dim {
        for j in (i + 1)..dim {
            let lhs = poisson_bracket(&set.boosts[i], &set.boosts[j], state)?;
            relations.push(RelationResidual::new(
                format!("{{G_{},G_{}}} = 0", AXIS_LABEL[i], AXIS_LABEL[j]),
                lhs,
                0.0,
            ));
        }
    }
    Ok(AlgebraReport { relations })
}

fn eps_contract(
    i: usize,
    j: usize,
    family: &[Observable],
    state: &EnsembleState,
) -> Result<f64> {
    let mut rhs = 0.0;
    for (k, obs) in family.iter().enumerate() {
        let e = epsilon(i, j, k);
        if e != 0.0 {
            rhs += e * obs.value(state)?;
        }
    }
    Ok(rhs)
}

// ---------------------------------------------------------------------------
// Canonical flows and admissibility checks
// ---------------------------------------------------------------------------

/// One explicit Euler step of the canonical flow generated by `gen`:
/// `P += eps dG/dS`, `S -= eps dG/dP`. The result passes through full state
/// validation, so positivity violations and normalization drift beyond the
/// constructor's tolerance surface as errors.
///
/// # Errors
///
/// [`Error::InvalidParameter`] for non-finite `eps`;
/// [`Error::NegativeProbability`] / [`Error::Normalization`] if the step is
/// too violent; evaluation errors from the generator.
pub fn apply_generator(
    gen: &Observable,
    state: &EnsembleState,
    epsilon: f64,
) -> Result<EnsembleState> {
    if !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "generator step must be finite, got {epsilon}"
        )));
    }
    let dp = gen.d_ds(state)?;
    let ds = gen.d_dp(state)?;
    let p: Vec<f64> = state
        .p()
        .iter()
        .zip(dp.iter())
        .map(|(&p, &d)| p + epsilon * d)
        .collect();
    let s: Vec<f64> = state
        .s()
        .iter()
        .zip(ds.iter())
        .map(|(&s, &d)| s - epsilon * d)
        .collect();
    EnsembleState::new(*state.grid(), p, s)
}

/// Outcome of [`homogeneity_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneityReport {
    /// `|F(lambda P, S) - lambda F(P, S)|`.
    pub scaling_residual: f64,
    /// `|F - integral of P dF/dP|`, evaluated only for observables that
    /// claim homogeneity (for them, Euler's identity must hold).
    pub local_density_residual: Option<f64>,
    /// The value `F(P, S)` the residuals are relative to.
    pub value: f64,
}

/// Checks degree-one homogeneity in `P` at `state`: evaluates the raw
/// functional on `lambda P` without renormalization, and — for observables
/// claiming homogeneity — Euler's identity `F = integral of P dF/dP`
/// (the "expectation of a local density" form).
///
/// # Errors
///
/// [`Error::InvalidParameter`] unless `lambda` is finite and positive.
pub fn homogeneity_check(
    f: &Observable,
    state: &EnsembleState,
    lambda: f64,
) -> Result<HomogeneityReport> {
    check_positive_parameter("lambda", lambda)?;
    let value = f.value(state)?;
    let scaled_p: Vec<f64> = state.p().iter().map(|&v| lambda * v).collect();
    let scaled = EnsembleState::new_unchecked(*state.grid(), scaled_p, state.s().to_vec());
    let scaled_value = f.value(&scaled)?;
    let scaling_residual = (scaled_value - lambda * value).abs();
    let local_density_residual = if f.is_homogeneous() {
        let dp = f.d_dp(state)?;
        let integrand: Vec<f64> = state
            .p()
            .iter()
            .zip(dp.iter())
            .map(|(&p, &d)| p * d)
            .collect();
        let euler = state.grid().integrate(&integrand)?;
        Some((euler - value).abs())
    } else {
        None
    };
    Ok(HomogeneityReport {
        scaling_residual,
        local_density_residual,
        value,
    })
}

/// `|F(P, S + offset) - F(P, S)|` — the gauge-invariance residual. Every
/// admissible observable must be insensitive to a constant phase shift.
///
/// # Errors
///
/// As in [`Observable::value`]; non-finite offsets rejected.
pub fn gauge_invariance_residual(
    f: &Observable,
    state: &EnsembleState,
    offset: f64,
) -> Result<f64> {
    let base = f.value(state)?;
    let shifted = f.value(&state.shift_phase(offset)?)?;
    Ok((shifted - base).abs())
}

/// Outcome of [`node_phase_derivative_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeCheck {
    /// Points tested (node points whose whole stencil neighbourhood is also
    /// below threshold).
    pub tested_points: usize,
    /// Largest `|dF/dS|` over those points — 0 for admissible observables.
    pub max_abs: f64,
}

/// Verifies the admissibility condition "`dF/dS = 0` where `P = 0`": at
/// every point whose full stencil neighbourhood (3 cells each way per axis)
/// sits below the node threshold, the phase derivative must vanish exactly
/// — deep inside a dead region there is no probability for the phase to
/// push around.
///
/// # Errors
///
/// Propagates derivative evaluation errors.
pub fn node_phase_derivative_check(f: &Observable, state: &EnsembleState) -> Result<NodeCheck> {
    let grid = state.grid();
    let p = state.p();
    let eps = node_threshold(p);
    let ds = f.d_ds(state)?;
    let mut tested_points = 0;
    let mut max_abs = 0.0f64;
    'points: for flat in 0..p.len() {
        if p[flat] > eps {
            continue;
        }
        for axis in 0..grid.dim() {
            let n = grid.points(axis)?;
            let stride = grid.axis_stride(axis);
            let k = (flat / stride) % n;
            for step in 1..=3usize {
                for dir in [-1isize, 1] {
                    let kk = k as isize + dir * step as isize;
                    let neighbor = match grid.boundary() {
                        Boundary::Periodic => {
                            let wrapped = kk.rem_euclid(n as isize) as usize;
                            flat - k * stride + wrapped * stride
                        }
                        Boundary::Vanishing => {
                            if kk < 0 || kk >= n as isize {
                                continue;
                            }
                            flat - k * stride + kk as usize * stride
                        }
                    };
                    if p[neighbor] > eps {
                        continue 'points;
                    }
                }
            }
        }
        tested_points += 1;
        max_abs = max_abs.max(ds[flat].abs());
    }
    Ok(NodeCheck {
        tested_points,
        max_abs,
    })
}

/// Jacobi residual `|{F,{G,H}} + {G,{H,F}} + {H,{F,G}}|` at `state`.
///
/// The inner brackets are differentiated numerically (they are genuine
/// functionals of the state), so the residual floor is set by the numeric
/// oracle, around `1e-8` times the observable scales — far below the
/// `1e-6 * scale` acceptance line but well above exact zero.
///
/// # Errors
///
/// Propagates evaluation and probe errors.
pub fn jacobi_residual(
    f: &Observable,
    g: &Observable,
    h: &Observable,
    state: &EnsembleState,
) -> Result<f64> {
    fn term(
        outer: &Observable,
        b: &Observable,
        c: &Observable,
        state: &EnsembleState,
    ) -> Result<f64> {
        let inner = |st: &EnsembleState| poisson_bracket(b, c, st);
        let kp = numeric_variational_derivative(&inner, state, FieldChoice::P)?;
        let ks = numeric_variational_derivative(&inner, state, FieldChoice::S)?;
        let op = outer.d_dp(state)?;
        let os = outer.d_ds(state)?;
        let integrand: Vec<f64> = (0..kp.len())
            .map(|i| op[i] * ks[i] - os[i] * kp[i])
            .collect();
        state.grid().integrate(&integrand)
    }
    let t1 = term(f, g, h, state)?;
    let t2 = term(g, h, f, state)?;
    let t3 = term(h, f, g, state)?;
    Ok((t1 + t2 + t3).abs())
}
