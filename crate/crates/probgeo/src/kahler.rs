//! The Kähler triple on the `(P, S)` phase space: symplectic form, metric,
//! and complex structure, their compatibility conditions, and the
//! finite-dimensional construction that forces a complex structure on any
//! space carrying both a symplectic form and a metric.
//!
//! Everything here is pointwise. The geometric objects on the full field
//! space carry a `δ(x − x′)` kernel — the locality assumption — so the
//! implementation stores one 2×2 block per grid point and never
//! materializes a field-space matrix. With the symplectic block fixed to
//! `Ω = [[0, 1], [−1, 0]]`, the compatible pairs form a one-functional
//! family parameterized by the mixing field `A`:
//!
//! ```text
//! g = [[ α/2P,            A           ],      J = [[  A,   (2P/α)(1+A²) ],
//!      [  A,    (2P/α)(1 + A²) ]]                  [ −α/2P,     −A      ]]
//! ```
//!
//! satisfying the three compatibility conditions
//!
//! * `Ω = g·J` — the symplectic form, metric, and complex structure fit;
//! * `Jᵀ·g·J = g` — the metric is Hermitian under `J`;
//! * `J·J = −I` — `J` is a complex structure.
//!
//! `A = 0` is the simplest choice; transforming it with the Madelung
//! Jacobian `∂(ψ, ψ̄)/∂(P, S)` lands every point on the same constant
//! flat-space blocks — the coordinates in which the geometry *is* standard
//! quantum mechanics. The state dependence cancels exactly; the transform
//! here performs the cancellation numerically rather than assuming it.
//!
//! [`complex_structure_from_pair`] is the finite-dimensional version of the same
//! story: given an antisymmetric nondegenerate `ω` and a symmetric
//! positive-definite `g` on an even-dimensional space, the candidate
//! complex structure is forced to be `j = g⁻¹ω`, and the pair is Kähler
//! exactly when `j² = −I` and `jᵀgj = g`. The function reports those
//! residuals instead of asserting them — the construction proves what a
//! compatible pair must look like, not that every pair is compatible.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{
    check_positive_parameter, node_threshold, write_labeled_table_csv, EnsembleState,
};
use crate::grid::GridSpec;

/// One real 2×2 block in `(P, S)` coordinates, row-major.
pub type Block = [[f64; 2]; 2];

/// One complex 2×2 block in `(ψ, ψ̄)` coordinates, row-major.
pub type ComplexBlock = [[Complex64; 2]; 2];

fn mul2(a: &Block, b: &Block) -> Block {
    let mut out = [[0.0; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn transpose2(a: &Block) -> Block {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

fn mul2c(a: &ComplexBlock, b: &ComplexBlock) -> ComplexBlock {
    let zero = Complex64::new(0.0, 0.0);
    let mut out = [[zero; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn transpose2c(a: &ComplexBlock) -> ComplexBlock {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

fn to_complex_block(a: &Block) -> ComplexBlock {
    let c = |v: f64| Complex64::new(v, 0.0);
    [[c(a[0][0]), c(a[0][1])], [c(a[1][0]), c(a[1][1])]]
}

/// The symplectic/metric/complex-structure triple, one block per grid
/// point. The block fields are public so that defect-injection tests can
/// perturb them; [`verify_kahler`] treats whatever is stored as data.
#[derive(Debug, Clone)]
pub struct KahlerTriple {
    grid: GridSpec,
    alpha: f64,
    mixing: Vec<f64>,
    /// Symplectic blocks — `[[0, 1], [−1, 0]]` at every point as built.
    pub omega: Vec<Block>,
    /// Metric blocks.
    pub g: Vec<Block>,
    /// Complex-structure blocks.
    pub j: Vec<Block>,
}

impl KahlerTriple {
    /// The grid the blocks live on.
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// The scale constant the triple was built with.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The mixing field `A` the triple was built with.
    pub fn mixing(&self) -> &[f64] {
        &self.mixing
    }
}

/// Builds the general compatible triple for a density and a mixing field
/// `A` (one sample per grid point).
///
/// # Errors
///
/// * [`Error::Node`] if any density sample sits at or below the node
///   threshold — the metric's `α/2P` block is singular there.
/// * [`Error::LengthMismatch`] if `mixing` does not fit the grid.
/// * [`Error::NonFinite`] for bad mixing samples;
///   [`Error::InvalidParameter`] for a non-positive `alpha`.
pub fn build_general_triple(
    state: &EnsembleState,
    mixing: &[f64],
    alpha: f64,
) -> Result<KahlerTriple> {
    check_positive_parameter("alpha", alpha)?;
    let grid = *state.grid();
    let p = state.p();
    if mixing.len() != p.len() {
        return Err(Error::LengthMismatch {
            got: mixing.len(),
            expected: p.len(),
        });
    }
    for (index, &a) in mixing.iter().enumerate() {
        if !a.is_finite() {
            return Err(Error::NonFinite { index });
        }
    }
    let eps = node_threshold(p);
    let mut omega = Vec::with_capacity(p.len());
    let mut g = Vec::with_capacity(p.len());
    let mut j = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        if p[i] <= eps {
            return Err(Error::Node(format!(
                "density at flat index {i} ({:e}) is at or below the node \
                 threshold ({eps:e}); the metric block diverges there",
                p[i]
            )));
        }
        let a = mixing[i];
        let g_pp = alpha / (2.0 * p[i]);
        let g_ss = 2.0 * p[i] / alpha * (1.0 + a * a);
        omega.push([[0.0, 1.0], [-1.0, 0.0]]);
        g.push([[g_pp, a], [a, g_ss]]);
        j.push([[a, g_ss], [-g_pp, -a]]);
    }
    Ok(KahlerTriple {
        grid,
        alpha,
        mixing: mixing.to_vec(),
        omega,
        g,
        j,
    })
}

/// The one-step-earlier complex structure, before the metric fixes the
/// remaining functional: `J = [[A, C(1+A²)], [−1/C, −A]]`, which squares
/// to `−I` for every `A` and every nonzero `C`.
///
/// # Errors
///
/// * [`Error::DivisionByZero`] where `C = 0`.
/// * [`Error::LengthMismatch`] for mismatched slices;
///   [`Error::NonFinite`] for bad samples.
pub fn intermediate_j(mixing: &[f64], c: &[f64]) -> Result<Vec<Block>> {
    if mixing.len() != c.len() {
        return Err(Error::LengthMismatch {
            got: c.len(),
            expected: mixing.len(),
        });
    }
    let mut out = Vec::with_capacity(mixing.len());
    for i in 0..mixing.len() {
        let (a, cv) = (mixing[i], c[i]);
        if !a.is_finite() || !cv.is_finite() {
            return Err(Error::NonFinite { index: i });
        }
        if cv == 0.0 {
            return Err(Error::DivisionByZero { index: i });
        }
        out.push([[a, cv * (1.0 + a * a)], [-1.0 / cv, -a]]);
    }
    Ok(out)
}

/// Largest residual of one compatibility condition, with the grid point
/// where it occurs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionResidual {
    /// Maximum over grid points of the entrywise-max block residual.
    pub max: f64,
    /// Flat index of the worst point.
    pub location: usize,
}

/// Residuals of the three Kähler conditions over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KahlerReport {
    /// `Ω − g·J`.
    pub compatibility: ConditionResidual,
    /// `Jᵀ·g·J − g`.
    pub hermiticity: ConditionResidual,
    /// `J·J + I`.
    pub complex_structure: ConditionResidual,
}

impl KahlerReport {
    /// The largest of the three condition maxima.
    pub fn max_residual(&self) -> f64 {
        self.compatibility
            .max
            .max(self.hermiticity.max)
            .max(self.complex_structure.max)
    }

    /// Writes `condition,max_residual,location` rows.
    ///
    /// # Errors
    ///
    /// [`Error::Io`] on filesystem trouble.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows = vec![
            (
                "omega_minus_gJ".to_string(),
                vec![self.compatibility.max, self.compatibility.location as f64],
            ),
            (
                "JtgJ_minus_g".to_string(),
                vec![self.hermiticity.max, self.hermiticity.location as f64],
            ),
            (
                "JJ_plus_I".to_string(),
                vec![
                    self.complex_structure.max,
                    self.complex_structure.location as f64,
                ],
            ),
        ];
        write_labeled_table_csv(path, &["condition", "max_residual", "location"], &rows)
    }
}

fn block_max_abs(a: &Block) -> f64 {
    a.iter()
        .flatten()
        .fold(0.0f64, |m, &v| m.max(v.abs()))
}

/// Measures the three Kähler conditions on whatever blocks the triple
/// holds. Residuals are data, not assertions: a perturbed triple reports
/// large numbers instead of failing.
pub fn verify_kahler(triple: &KahlerTriple) -> KahlerReport {
    let mut worst = [ConditionResidual {
        max: -1.0,
        location: 0,
    }; 3];
    for i in 0..triple.omega.len() {
        let (om, g, j) = (&triple.omega[i], &triple.g[i], &triple.j[i]);
        let gj = mul2(g, j);
        let jtgj = mul2(&transpose2(j), &mul2(g, j));
        let jj = mul2(j, j);
        let compat = [
            [om[0][0] - gj[0][0], om[0][1] - gj[0][1]],
            [om[1][0] - gj[1][0], om[1][1] - gj[1][1]],
        ];
        let herm = [
            [jtgj[0][0] - g[0][0], jtgj[0][1] - g[0][1]],
            [jtgj[1][0] - g[1][0], jtgj[1][1] - g[1][1]],
        ];
        let complex = [
            [jj[0][0] + 1.0, jj[0][1]],
            [jj[1][0], jj[1][1] + 1.0],
        ];
        for (slot, residual) in [compat, herm, complex].iter().enumerate() {
            let r = block_max_abs(residual);
            if r > worst[slot].max {
                worst[slot] = ConditionResidual {
                    max: r,
                    location: i,
                };
            }
        }
    }
    KahlerReport {
        compatibility: worst[0],
        hermiticity: worst[1],
        complex_structure: worst[2],
    }
}

// ---------------------------------------------------------------------------
// Complex coordinates
// ---------------------------------------------------------------------------

/// The triple transformed to `(ψ, ψ̄)` coordinates. For an unperturbed
/// `A = 0` triple every point carries the same constant blocks
/// `Ω_c = [[0, iα], [−iα, 0]]`, `g_c = [[0, α], [α, 0]]`,
/// `J_c = diag(−i, i)`.
#[derive(Debug, Clone)]
pub struct FlatBlocks {
    /// Transformed symplectic blocks.
    pub omega_c: Vec<ComplexBlock>,
    /// Transformed metric blocks.
    pub g_c: Vec<ComplexBlock>,
    /// Transformed complex-structure blocks.
    pub j_c: Vec<ComplexBlock>,
    /// Maximum entrywise deviation, over every point and all three blocks,
    /// from the constant flat-space form for the `alpha` of the transform.
    pub max_flat_deviation: f64,
}

/// The real blocks recovered by the inverse Jacobian, plus the largest
/// imaginary part discarded on the way back (a round-trip health number).
#[derive(Debug, Clone)]
pub struct RecoveredBlocks {
    /// Recovered symplectic blocks.
    pub omega: Vec<Block>,
    /// Recovered metric blocks.
    pub g: Vec<Block>,
    /// Recovered complex-structure blocks.
    pub j: Vec<Block>,
    /// Largest `|Im|` over all recovered entries.
    pub max_imaginary_part: f64,
}

struct PointJacobian {
    m: ComplexBlock,
    m_inv: ComplexBlock,
}

fn madelung_jacobian(p: f64, s: f64, alpha: f64) -> PointJacobian {
    let psi = Complex64::from_polar(p.sqrt(), s / alpha);
    let psi_bar = psi.conj();
    let i = Complex64::new(0.0, 1.0);
    let m = [
        [psi / (2.0 * p), i * psi / alpha],
        [psi_bar / (2.0 * p), -i * psi_bar / alpha],
    ];
    // Closed-form inverse (det M = −i/α exactly in the algebra).
    let m_inv = [
        [psi_bar, psi],
        [-i * alpha * psi_bar / (2.0 * p), i * alpha * psi / (2.0 * p)],
    ];
    PointJacobian { m, m_inv }
}

/// Transforms the triple's blocks to `(ψ, ψ̄)` coordinates with the
/// Madelung Jacobian of `state`: covariant blocks (`Ω`, `g`) by
/// `M⁻ᵀ · X · M⁻¹`, the mixed block (`J`) by `M · J · M⁻¹`. The state
/// dependence of an `A = 0` triple cancels pointwise; the residual of that
/// cancellation is reported in [`FlatBlocks::max_flat_deviation`].
///
/// # Errors
///
/// * [`Error::InvalidParameter`] unless the triple was built with `A = 0`
///   (only that choice lands on the flat form) or if `state` does not
///   match the triple's grid shape.
/// * [`Error::Node`] if the state has dead points (the Jacobian divides
///   by `P`).
pub fn to_complex_coordinates(triple: &KahlerTriple, state: &EnsembleState) -> Result<FlatBlocks> {
    if triple.mixing.iter().any(|&a| a != 0.0) {
        return Err(Error::InvalidParameter(
            "complex coordinates require the A = 0 triple; general mixing \
             does not transform to the flat blocks"
                .into(),
        ));
    }
    let p = state.p();
    let s = state.s();
    if p.len() != triple.omega.len() {
        return Err(Error::LengthMismatch {
            got: p.len(),
            expected: triple.omega.len(),
        });
    }
    let eps = node_threshold(p);
    let alpha = triple.alpha;
    let mut omega_c = Vec::with_capacity(p.len());
    let mut g_c = Vec::with_capacity(p.len());
    let mut j_c = Vec::with_capacity(p.len());
    let mut deviation = 0.0f64;
    let i = Complex64::new(0.0, 1.0);
    let zero = Complex64::new(0.0, 0.0);
    let flat_omega = [[zero, i * alpha], [-i * alpha, zero]];
    let flat_g = [
        [zero, Complex64::new(alpha, 0.0)],
        [Complex64::new(alpha, 0.0), zero],
    ];
    let flat_j = [[-i, zero], [zero, i]];
    for idx in 0..p.len() {
        if p[idx] <= eps {
            return Err(Error::Node(format!(
                "density at flat index {idx} ({:e}) is at or below the node \
                 threshold; the Madelung Jacobian is singular there",
                p[idx]
            )));
        }
        let jac = madelung_jacobian(p[idx], s[idx], alpha);
        let m_inv_t = transpose2c(&jac.m_inv);
        let om = mul2c(&m_inv_t, &mul2c(&to_complex_block(&triple.omega[idx]), &jac.m_inv));
        let gc = mul2c(&m_inv_t, &mul2c(&to_complex_block(&triple.g[idx]), &jac.m_inv));
        let jc = mul2c(&jac.m, &mul2c(&to_complex_block(&triple.j[idx]), &jac.m_inv));
        for (got, want) in [(&om, &flat_omega), (&gc, &flat_g), (&jc, &flat_j)] {
            for r in 0..2 {
                for c in 0..2 {
                    deviation = deviation.max((got[r][c] - want[r][c]).norm());
                }
            }
        }
        omega_c.push(om);
        g_c.push(gc);
        j_c.push(jc);
    }
    Ok(FlatBlocks {
        omega_c,
        g_c,
        j_c,
        max_flat_deviation: deviation,
    })
}

/// Inverts [`to_complex_coordinates`]: covariant blocks by `Mᵀ · X · M`,
/// the mixed block by `M⁻¹ · J_c · M`. Imaginary parts of the results are
/// rounding debris; their maximum is reported, and the real parts are
/// returned.
///
/// # Errors
///
/// [`Error::LengthMismatch`] / [`Error::Node`] /
/// [`Error::InvalidParameter`] as in the forward transform.
pub fn from_complex_coordinates(
    flat: &FlatBlocks,
    state: &EnsembleState,
    alpha: f64,
) -> Result<RecoveredBlocks> {
    check_positive_parameter("alpha", alpha)?;
    let p = state.p();
    let s = state.s();
    if p.len() != flat.omega_c.len() {
        return Err(Error::LengthMismatch {
            got: p.len(),
            expected: flat.omega_c.len(),
        });
    }
    let eps = node_threshold(p);
    let mut omega = Vec::with_capacity(p.len());
    let mut g = Vec::with_capacity(p.len());
    let mut j = Vec::with_capacity(p.len());
    let mut max_im = 0.0f64;
    for idx in 0..p.len() {
        if p[idx] <= eps {
            return Err(Error::Node(format!(
                "density at flat index {idx} is at or below the node threshold"
            )));
        }
        let jac = madelung_jacobian(p[idx], s[idx], alpha);
        let m_t = transpose2c(&jac.m);
        let om = mul2c(&m_t, &mul2c(&flat.omega_c[idx], &jac.m));
        let gr = mul2c(&m_t, &mul2c(&flat.g_c[idx], &jac.m));
        let jr = mul2c(&jac.m_inv, &mul2c(&flat.j_c[idx], &jac.m));
        let mut take_real = |cb: &ComplexBlock| -> Block {
            let mut out = [[0.0; 2]; 2];
            for r in 0..2 {
                for c in 0..2 {
                    max_im = max_im.max(cb[r][c].im.abs());
                    out[r][c] = cb[r][c].re;
                }
            }
            out
        };
        omega.push(take_real(&om));
        g.push(take_real(&gr));
        j.push(take_real(&jr));
    }
    Ok(RecoveredBlocks {
        omega,
        g,
        j,
        max_imaginary_part: max_im,
    })
}

// ---------------------------------------------------------------------------
// Finite-dimensional construction
// ---------------------------------------------------------------------------

/// Result of [`complex_structure_from_pair`]: the forced candidate `j = g⁻¹ω` and
/// the residuals of the two conditions it satisfies exactly when the pair
/// `(ω, g)` is compatible.
#[derive(Debug, Clone)]
pub struct MatrixPairReport {
    /// The candidate complex structure `g⁻¹ω`.
    pub j: DMatrix<f64>,
    /// `max |(j² + I)_{ab}|`.
    pub complex_structure_residual: f64,
    /// `max |(jᵀgj − g)_{ab}|`.
    pub isometry_residual: f64,
}

impl MatrixPairReport {
    /// Whether both residuals sit below `tol` — i.e. whether `(ω, g)` is a
    /// Kähler-compatible pair at that tolerance.
    pub fn is_compatible(&self, tol: f64) -> bool {
        self.complex_structure_residual <= tol && self.isometry_residual <= tol
    }
}

/// The construction behind the phase-space triple, in bare linear algebra:
/// an antisymmetric nondegenerate `ω` and a symmetric positive-definite
/// `g` on an even-dimensional space force the candidate complex structure
/// `j = g⁻¹ω`. The report carries the residuals of `j² = −I` and
/// `jᵀgj = g` — zero exactly when the pair is compatible — computed by
/// direct multiplication. It reports rather than asserts: the construction
/// says what a compatible pair must produce, not that every pair is
/// compatible.
///
/// # Errors
///
/// [`Error::InvalidMatrixPair`] for non-square/mismatched shapes, odd
/// dimension, an asymmetric `g` or non-antisymmetric `ω` (beyond
/// `1e-12·scale`), a `g` that is not positive-definite, or a degenerate
/// `ω`.
pub fn complex_structure_from_pair(
    omega: &DMatrix<f64>,
    g: &DMatrix<f64>,
) -> Result<MatrixPairReport> {
    let n = omega.nrows();
    if omega.ncols() != n || g.nrows() != n || g.ncols() != n {
        return Err(Error::InvalidMatrixPair(format!(
            "need square matrices of matching size, got {}x{} and {}x{}",
            omega.nrows(),
            omega.ncols(),
            g.nrows(),
            g.ncols()
        )));
    }
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidMatrixPair(format!(
            "a complex structure needs a positive even dimension, got {n}"
        )));
    }
    let scale_omega = omega.amax().max(1.0);
    let skew_defect = (omega + omega.transpose()).amax();
    if skew_defect > 1e-12 * scale_omega {
        return Err(Error::InvalidMatrixPair(format!(
            "omega is not antisymmetric (defect {skew_defect:e})"
        )));
    }
    let scale_g = g.amax().max(1.0);
    let sym_defect = (g - g.transpose()).amax();
    if sym_defect > 1e-12 * scale_g {
        return Err(Error::InvalidMatrixPair(format!(
            "g is not symmetric (defect {sym_defect:e})"
        )));
    }
    if !omega.clone().full_piv_lu().is_invertible() {
        return Err(Error::InvalidMatrixPair(
            "omega is degenerate: some direction pairs to zero against \
             every other"
                .into(),
        ));
    }
    let chol = g.clone().cholesky().ok_or_else(|| {
        Error::InvalidMatrixPair("g is not positive-definite".into())
    })?;
    let j = chol.solve(omega);
    let jj = &j * &j;
    let identity = DMatrix::<f64>::identity(n, n);
    let complex_structure_residual = (&jj + &identity).amax();
    let isometry_residual = (j.transpose() * g * &j - g).amax();
    Ok(MatrixPairReport {
        j,
        complex_structure_residual,
        isometry_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::states;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bump_and_mixing(seed: u64) -> (EnsembleState, Vec<f64>) {
        let grid = GridSpec::periodic(&[48], &[4.0]).unwrap();
        let state = states::fourier_bump(&grid, seed).unwrap();
        let mixing = states::smooth_field(&grid, seed.wrapping_add(1000), 0.8).unwrap();
        (state, mixing)
    }

    #[test]
    fn uniform_flat_triple_has_identity_blocks() {
        // Unit alpha and P = 1/2 on a volume-2 box: alpha/2P = 2P/alpha = 1,
        // so the A = 0 metric is the identity and J is the symplectic block.
        let grid = GridSpec::periodic(&[16], &[2.0]).unwrap();
        let state = states::uniform_state(&grid).unwrap();
        let mixing = vec![0.0; 16];
        let triple = build_general_triple(&state, &mixing, 1.0).unwrap();
        for i in 0..16 {
            assert_eq!(triple.g[i], [[1.0, 0.0], [0.0, 1.0]]);
            assert_eq!(triple.j[i], [[0.0, 1.0], [-1.0, 0.0]]);
            assert_eq!(triple.omega[i], [[0.0, 1.0], [-1.0, 0.0]]);
        }
    }

    #[test]
    fn unit_mixing_blocks_match_hand_substitution() {
        let grid = GridSpec::periodic(&[16], &[2.0]).unwrap();
        let state = states::uniform_state(&grid).unwrap();
        let mixing = vec![1.0; 16];
        let triple = build_general_triple(&state, &mixing, 1.0).unwrap();
        for i in 0..16 {
            assert_eq!(triple.g[i], [[1.0, 1.0], [1.0, 2.0]]);
            assert_eq!(triple.j[i], [[1.0, 2.0], [-1.0, -1.0]]);
        }
    }

    #[test]
    fn general_triple_satisfies_all_three_conditions() {
        for seed in [5u64, 17, 90] {
            let (state, mixing) = bump_and_mixing(seed);
            let triple = build_general_triple(&state, &mixing, 1.3).unwrap();
            let report = verify_kahler(&triple);
            assert!(
                report.max_residual() <= 1e-12,
                "seed {seed}: residual {:e}",
                report.max_residual()
            );
        }
    }

    #[test]
    fn triple_rejects_dead_densities() {
        let grid = GridSpec::vanishing_centered(&[96], &[48.0]).unwrap();
        // Narrow packet on a huge box: tails fall below the node threshold.
        let state = states::gaussian_packet(&grid, &[0.0], &[1.0], &[0.0]).unwrap();
        let mixing = vec![0.0; 96];
        assert!(matches!(
            build_general_triple(&state, &mixing, 1.0),
            Err(Error::Node(_))
        ));
    }

    #[test]
    fn intermediate_j_squares_to_minus_identity() {
        let grid = GridSpec::periodic(&[64], &[4.0]).unwrap();
        let mixing = states::smooth_field(&grid, 7, 1.5).unwrap();
        let c: Vec<f64> = states::smooth_field(&grid, 8, 0.5)
            .unwrap()
            .iter()
            .map(|v| 1.0 + v)
            .collect();
        let blocks = intermediate_j(&mixing, &c).unwrap();
        for b in &blocks {
            let sq = mul2(b, b);
            let residual = [
                [sq[0][0] + 1.0, sq[0][1]],
                [sq[1][0], sq[1][1] + 1.0],
            ];
            assert!(block_max_abs(&residual) <= 1e-13);
        }
        // The canonical point: A = 0, C = 1.
        let simple = intermediate_j(&[0.0], &[1.0]).unwrap();
        assert_eq!(simple[0], [[0.0, 1.0], [-1.0, 0.0]]);
        // C = 0 is a genuine division by zero, not a silent infinity.
        assert!(matches!(
            intermediate_j(&[0.3], &[0.0]),
            Err(Error::DivisionByZero { index: 0 })
        ));
    }

    #[test]
    fn fixing_c_recovers_the_general_complex_structure() {
        let (state, mixing) = bump_and_mixing(23);
        let alpha = 0.9;
        let triple = build_general_triple(&state, &mixing, alpha).unwrap();
        let c: Vec<f64> = state.p().iter().map(|&p| 2.0 * p / alpha).collect();
        let blocks = intermediate_j(&mixing, &c).unwrap();
        for (general, fixed) in triple.j.iter().zip(blocks.iter()) {
            for r in 0..2 {
                for col in 0..2 {
                    let scale = general[r][col].abs().max(1.0);
                    assert!(
                        (general[r][col] - fixed[r][col]).abs() <= 1e-14 * scale,
                        "entry ({r},{col}): {} vs {}",
                        general[r][col],
                        fixed[r][col]
                    );
                }
            }
        }
    }

    #[test]
    fn verify_kahler_detects_an_injected_metric_defect() {
        let (state, mixing) = bump_and_mixing(41);
        let mut triple = build_general_triple(&state, &mixing, 1.0).unwrap();
        for block in &mut triple.g {
            block[1][1] *= 1.01;
        }
        let report = verify_kahler(&triple);
        // (gJ)_{10} shifts by 0.01 * (2P/alpha)(1+A^2) * (alpha/2P) = 0.01(1+A^2).
        assert!(
            report.compatibility.max >= 9e-3,
            "defect went unnoticed: {:e}",
            report.compatibility.max
        );
        assert!(report.hermiticity.max >= 9e-3);
    }

    #[test]
    fn complex_coordinates_are_flat_and_state_independent() {
        for (seed, alpha) in [(3u64, 1.0), (11, 0.7), (29, 2.3)] {
            let grid = GridSpec::periodic(&[48], &[4.0]).unwrap();
            let state = states::fourier_bump(&grid, seed).unwrap();
            let mixing = vec![0.0; 48];
            let triple = build_general_triple(&state, &mixing, alpha).unwrap();
            let flat = to_complex_coordinates(&triple, &state).unwrap();
            assert!(
                flat.max_flat_deviation <= 1e-12,
                "seed {seed}, alpha {alpha}: deviation {:e}",
                flat.max_flat_deviation
            );
        }
    }

    #[test]
    fn complex_coordinates_require_zero_mixing() {
        let (state, mixing) = bump_and_mixing(55);
        let triple = build_general_triple(&state, &mixing, 1.0).unwrap();
        assert!(matches!(
            to_complex_coordinates(&triple, &state),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn jacobian_round_trip_recovers_the_real_blocks() {
        let grid = GridSpec::periodic(&[48], &[4.0]).unwrap();
        let state = states::fourier_bump(&grid, 61).unwrap();
        let mixing = vec![0.0; 48];
        let alpha = 1.4;
        let triple = build_general_triple(&state, &mixing, alpha).unwrap();
        let flat = to_complex_coordinates(&triple, &state).unwrap();
        let back = from_complex_coordinates(&flat, &state, alpha).unwrap();
        assert!(back.max_imaginary_part <= 1e-13);
        for i in 0..48 {
            for (got, want) in [
                (&back.omega[i], &triple.omega[i]),
                (&back.g[i], &triple.g[i]),
                (&back.j[i], &triple.j[i]),
            ] {
                for r in 0..2 {
                    for c in 0..2 {
                        let scale = want[r][c].abs().max(1.0);
                        assert!(
                            (got[r][c] - want[r][c]).abs() <= 1e-12 * scale,
                            "block entry ({r},{c}) at point {i}: {} vs {}",
                            got[r][c],
                            want[r][c]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn canonical_matrix_pair_is_exactly_compatible() {
        let omega = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let g = DMatrix::<f64>::identity(2, 2);
        let report = complex_structure_from_pair(&omega, &g).unwrap();
        assert_eq!(report.j, omega);
        assert_eq!(report.complex_structure_residual, 0.0);
        assert_eq!(report.isometry_residual, 0.0);
        assert!(report.is_compatible(1e-12));
    }

    #[test]
    fn reciprocal_diagonal_metric_stays_compatible() {
        // g = diag(a, 1/a) forces j = [[0, 1/a], [-a, 0]] — the 2x2 shadow
        // of the alpha/2P metric block.
        let a = 0.37;
        let omega = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let g = DMatrix::from_row_slice(2, 2, &[a, 0.0, 0.0, 1.0 / a]);
        let report = complex_structure_from_pair(&omega, &g).unwrap();
        assert!((report.j[(0, 1)] - 1.0 / a).abs() <= 1e-14);
        assert!((report.j[(1, 0)] + a).abs() <= 1e-14);
        assert!(report.j[(0, 0)].abs() <= 1e-14 && report.j[(1, 1)].abs() <= 1e-14);
        assert!(report.is_compatible(1e-13));
    }

    #[test]
    fn incompatible_pair_is_flagged_not_asserted() {
        let omega = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let report = complex_structure_from_pair(&omega, &g).unwrap();
        assert!((report.complex_structure_residual - 0.5).abs() <= 1e-14);
        assert!((report.isometry_residual - 1.0).abs() <= 1e-14);
        assert!(!report.is_compatible(1e-3));
    }

    #[test]
    fn congruent_canonical_pairs_are_compatible_up_to_dimension_ten() {
        for (n, seed) in [(4usize, 1u64), (6, 2), (8, 3), (10, 4)] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut omega0 = DMatrix::<f64>::zeros(n, n);
            for k in 0..n / 2 {
                omega0[(2 * k, 2 * k + 1)] = 1.0;
                omega0[(2 * k + 1, 2 * k)] = -1.0;
            }
            let t = DMatrix::<f64>::from_fn(n, n, |r, c| {
                let jitter: f64 = rng.random_range(-1.0..1.0);
                if r == c {
                    1.0 + 0.3 * jitter
                } else {
                    0.3 * jitter
                }
            });
            let g = t.transpose() * &t;
            let g = (&g + g.transpose()) * 0.5;
            let omega = t.transpose() * &omega0 * &t;
            let omega = (&omega - omega.transpose()) * 0.5;
            let report = complex_structure_from_pair(&omega, &g).unwrap();
            assert!(
                report.is_compatible(1e-12),
                "n = {n}: residuals {:e} / {:e}",
                report.complex_structure_residual,
                report.isometry_residual
            );
        }
    }

    #[test]
    fn matrix_pair_validation_rejects_malformed_input() {
        let omega2 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let id2 = DMatrix::<f64>::identity(2, 2);
        // Odd dimension.
        let id3 = DMatrix::<f64>::identity(3, 3);
        assert!(matches!(
            complex_structure_from_pair(&id3.clone(), &id3),
            Err(Error::InvalidMatrixPair(_))
        ));
        // Non-antisymmetric omega.
        assert!(matches!(
            complex_structure_from_pair(&id2, &id2),
            Err(Error::InvalidMatrixPair(_))
        ));
        // Degenerate omega.
        let zero2 = DMatrix::<f64>::zeros(2, 2);
        assert!(matches!(
            complex_structure_from_pair(&zero2, &id2),
            Err(Error::InvalidMatrixPair(_))
        ));
        // Indefinite g.
        let indefinite = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            complex_structure_from_pair(&omega2, &indefinite),
            Err(Error::InvalidMatrixPair(_))
        ));
        // Asymmetric g.
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(
            complex_structure_from_pair(&omega2, &asym),
            Err(Error::InvalidMatrixPair(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn random_triples_verify_to_twelve_digits(
            seed in 0u64..1_000_000,
            alpha in 0.2f64..4.0,
        ) {
            let (state, mixing) = bump_and_mixing(seed);
            let triple = build_general_triple(&state, &mixing, alpha).unwrap();
            let report = verify_kahler(&triple);
            prop_assert!(report.max_residual() <= 1e-12);
        }
    }
}
