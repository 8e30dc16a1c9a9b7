//! Seeded families of smooth test states.
//!
//! Everything here is deterministic in the seed (a counter-mode generator,
//! no platform dependence), strictly positive where positivity matters, and
//! smooth enough that second-order stencils behave as advertised. Two
//! families matter most:
//!
//! * [`fourier_bump`] — generic strictly positive periodic states built from
//!   a few low-order Fourier modes. Used wherever "20 seeded smooth states"
//!   are called for.
//! * [`centered_algebra_state`] — compactly supported states on centered
//!   vanishing grids with a mirror-even density and a quadratic phase. The
//!   parity of the density and the polynomial degree of the phase are chosen
//!   so that every Galilean bracket relation holds at the rounding level on
//!   the discrete grid (see the module docs of `canonical` for why generic
//!   states cannot do this at second order).

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fields::{ComplexField, EnsembleState};
use crate::grid::GridSpec;

/// The crate-wide deterministic generator: one seed, one stream.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A smooth field `sum of a few random Fourier modes` with amplitude bounded
/// by `amplitude`, sampled on the grid. Mean-free up to the random phases.
pub fn smooth_field(grid: &GridSpec, seed: u64, amplitude: f64) -> Result<Vec<f64>> {
    let mut r = rng(seed);
    let n = grid.num_points();
    let mut out = vec![0.0; n];
    let mut coords = Vec::new();
    for axis in 0..grid.dim() {
        coords.push(grid.coordinate_field(axis)?);
    }
    let mut total_weight = 0.0;
    let mut modes = Vec::new();
    for axis in 0..grid.dim() {
        let tau = 2.0 * std::f64::consts::PI / grid.extent(axis)?;
        for k in 1..=2u32 {
            let c: f64 = r.random_range(-1.0..1.0);
            let phase: f64 = r.random_range(0.0..2.0 * std::f64::consts::PI);
            total_weight += c.abs();
            modes.push((axis, k as f64 * tau, c, phase));
        }
    }
    let scale = if total_weight > 0.0 {
        amplitude / total_weight
    } else {
        0.0
    };
    for (axis, freq, c, phase) in modes {
        let x = &coords[axis];
        for i in 0..n {
            out[i] += scale * c * (freq * x[i] + phase).cos();
        }
    }
    Ok(out)
}

/// A strictly positive smooth field: `(1 + bounded Fourier sum)^2 + floor`.
/// The bound keeps the squared term away from zero, so the minimum is at
/// least `floor` plus a state-dependent margin.
pub fn positive_modulation(grid: &GridSpec, seed: u64, floor: f64) -> Result<Vec<f64>> {
    let base = smooth_field(grid, seed, 0.8)?;
    Ok(base.iter().map(|&v| (1.0 + v) * (1.0 + v) + floor).collect())
}

/// Generic strictly positive periodic test state: density
/// `(1 + Fourier modes)^2 + 0.05` (normalized), phase a bounded Fourier sum.
pub fn fourier_bump(grid: &GridSpec, seed: u64) -> Result<EnsembleState> {
    let p = positive_modulation(grid, seed, 0.05)?;
    let s = smooth_field(grid, seed.wrapping_add(0x9E37_79B9_7F4A_7C15), 0.5)?;
    EnsembleState::normalized(*grid, p, s)
}

/// Compactly supported state for Galilean-algebra runs, built on a
/// [`GridSpec::vanishing_centered`] grid:
///
/// * density = Gaussian envelope (per-axis widths between `L/20` and `L/16`)
///   times an even cosine modulation — mirror-even along every axis, with
///   face values around `1e-14` of the peak so the box truncates nothing
///   that matters;
/// * phase = `b.u + u.C.u/2` in centered coordinates `u` — exactly quadratic,
///   so second-order stencils differentiate it without error.
pub fn centered_algebra_state(grid: &GridSpec, seed: u64) -> Result<EnsembleState> {
    let mut r = rng(seed);
    let dim = grid.dim();
    let n = grid.num_points();

    let mut centers = [0.0; 3];
    let mut sigmas = [1.0; 3];
    let mut omegas = [0.0; 3];
    let mut mod_amps = [[0.0; 2]; 3];
    for a in 0..dim {
        let extent = grid.extent(a)?;
        centers[a] = grid.center(a)?;
        sigmas[a] = extent / r.random_range(16.0..20.0);
        omegas[a] = 2.0 * std::f64::consts::PI / extent;
        for k in 0..2 {
            mod_amps[a][k] = r.random_range(-0.1..0.1);
        }
    }
    let mut b = [0.0; 3];
    let mut c = [[0.0; 3]; 3];
    for i in 0..dim {
        b[i] = r.random_range(-0.5..0.5);
        for j in i..dim {
            let v = r.random_range(-0.05..0.05);
            c[i][j] = v;
            c[j][i] = v;
        }
    }

    let mut p = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    for flat in 0..n {
        let pos = grid.position(flat);
        let mut envelope = 0.0;
        let mut modulation = 1.0;
        let mut phase = 0.0;
        for a in 0..dim {
            let u = pos[a] - centers[a];
            envelope += u * u / (2.0 * sigmas[a] * sigmas[a]);
            for (k, &amp) in mod_amps[a].iter().enumerate() {
                // cos of an even multiple of u: even under u -> -u.
                modulation += amp * ((k as f64 + 1.0) * omegas[a] * u).cos();
            }
            phase += b[a] * u;
            for j in 0..dim {
                let w = pos[j] - centers[j];
                phase += 0.5 * c[a][j] * u * w;
            }
        }
        p.push((-envelope).exp() * modulation * modulation);
        s.push(phase);
    }
    EnsembleState::normalized(*grid, p, s)
}

/// Gaussian packet: density `exp(-sum (x_a - c_a)^2 / 2 sigma_a^2)`
/// (normalized on the grid), phase `p . x`.
///
/// On a periodic grid the density sums the packet's wrapped images, so the
/// field is smooth across the seam; a bare Gaussian sampled on a circle has
/// a derivative kink there of the size of its tails, and the quantum term
/// amplifies any such kink into grid-scale dynamics.
///
/// # Errors
///
/// [`Error::InvalidParameter`](crate::Error::InvalidParameter) for
/// mismatched parameter lengths or non-positive widths.
pub fn gaussian_packet(
    grid: &GridSpec,
    center: &[f64],
    sigma: &[f64],
    momentum: &[f64],
) -> Result<EnsembleState> {
    let dim = grid.dim();
    if center.len() != dim || sigma.len() != dim || momentum.len() != dim {
        return Err(crate::Error::InvalidParameter(format!(
            "gaussian packet parameters must have {dim} components"
        )));
    }
    for (a, &s) in sigma.iter().enumerate() {
        if !s.is_finite() || s <= 0.0 {
            return Err(crate::Error::InvalidParameter(format!(
                "sigma[{a}] must be finite and positive, got {s}"
            )));
        }
    }
    let wrap = grid.boundary() == crate::grid::Boundary::Periodic;
    let n = grid.num_points();
    let mut p = Vec::with_capacity(n);
    let mut s_field = Vec::with_capacity(n);
    for flat in 0..n {
        let pos = grid.position(flat);
        let mut density = 1.0;
        let mut phase = 0.0;
        for a in 0..dim {
            let u = pos[a] - center[a];
            let two_var = 2.0 * sigma[a] * sigma[a];
            let mut factor = (-u * u / two_var).exp();
            if wrap {
                let extent = grid.extent(a)?;
                for image in [-2.0f64, -1.0, 1.0, 2.0] {
                    let v = u + image * extent;
                    factor += (-v * v / two_var).exp();
                }
            }
            density *= factor;
            phase += momentum[a] * pos[a];
        }
        p.push(density);
        s_field.push(phase);
    }
    EnsembleState::normalized(*grid, p, s_field)
}

/// The maximum-entropy state: uniform density, zero phase.
pub fn uniform_state(grid: &GridSpec) -> Result<EnsembleState> {
    let n = grid.num_points();
    let volume: f64 = (0..grid.dim())
        .map(|a| grid.extent(a).expect("axis < dim"))
        .product();
    EnsembleState::new(*grid, vec![1.0 / volume; n], vec![0.0; n])
}

/// A smooth random wavefunction on a periodic grid: a product of low-order
/// random trigonometric polynomials per axis, normalized to unit norm.
pub fn random_wavefunction(grid: &GridSpec, seed: u64) -> Result<ComplexField> {
    let mut r = rng(seed);
    let n = grid.num_points();
    let mut data = vec![Complex64::new(1.0, 0.0); n];
    for axis in 0..grid.dim() {
        let x = grid.coordinate_field(axis)?;
        let tau = 2.0 * std::f64::consts::PI / grid.extent(axis)?;
        let mut coeffs = Vec::new();
        for k in -2i32..=2 {
            let re: f64 = r.random_range(-1.0..1.0);
            let im: f64 = r.random_range(-1.0..1.0);
            // Favour low modes so the field stays well resolved.
            let damp = 1.0 / (1.0 + (k * k) as f64);
            coeffs.push((k, Complex64::new(re, im) * damp));
        }
        for i in 0..n {
            let mut factor = Complex64::new(0.0, 0.0);
            for &(k, c) in &coeffs {
                factor += c * Complex64::from_polar(1.0, k as f64 * tau * x[i]);
            }
            data[i] *= factor;
        }
    }
    let field = ComplexField::new(*grid, data)?;
    let norm = field.norm();
    if norm <= 0.0 {
        return Err(crate::Error::InvalidParameter(
            "random wavefunction degenerated to zero norm".into(),
        ));
    }
    let scaled: Vec<Complex64> = field.data().iter().map(|z| z / norm).collect();
    Ok(ComplexField::new_unchecked(*grid, scaled))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, GridSpec};

    #[test]
    fn fourier_bump_is_positive_normalized_and_seed_deterministic() {
        let grid = GridSpec::periodic(&[48, 32], &[3.0, 2.0]).unwrap();
        let a = fourier_bump(&grid, 7).unwrap();
        let b = fourier_bump(&grid, 7).unwrap();
        let c = fourier_bump(&grid, 8).unwrap();
        assert_eq!(a.p(), b.p());
        assert_eq!(a.s(), b.s());
        assert_ne!(a.p(), c.p());
        assert!((a.mass() - 1.0).abs() < 1e-12);
        assert!(a.p().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn algebra_state_density_is_mirror_even_and_supported_inside() {
        let grid = GridSpec::vanishing_centered(&[24, 24, 24], &[9.0, 9.0, 9.0]).unwrap();
        assert_eq!(grid.boundary(), Boundary::Vanishing);
        let st = centered_algebra_state(&grid, 3).unwrap();
        let p = st.p();
        // Mirror symmetry along axis 0, bit-exact.
        let n0 = 24;
        let stride = grid.axis_stride(0);
        for flat in 0..p.len() {
            let k = (flat / stride) % n0;
            let mirrored = flat - k * stride + (n0 - 1 - k) * stride;
            assert_eq!(p[flat], p[mirrored]);
        }
        // Face values are negligible compared to the peak.
        let pmax = p.iter().fold(0.0f64, |m, &v| m.max(v));
        let mut face_max = 0.0f64;
        for flat in 0..p.len() {
            let idx = grid.multi_index(flat);
            if (0..3).any(|a| idx[a] == 0 || idx[a] == 23) {
                face_max = face_max.max(p[flat]);
            }
        }
        assert!(face_max < 1e-10 * pmax, "face leak {}", face_max / pmax);
    }

    #[test]
    fn gaussian_packet_validates_parameters() {
        let grid = GridSpec::vanishing_centered(&[16], &[8.0]).unwrap();
        assert!(gaussian_packet(&grid, &[0.0, 0.0], &[1.0], &[0.0]).is_err());
        assert!(gaussian_packet(&grid, &[0.0], &[-1.0], &[0.0]).is_err());
        let st = gaussian_packet(&grid, &[0.0], &[1.0], &[0.5]).unwrap();
        assert!((st.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_wavefunction_is_normalized_and_deterministic() {
        let grid = GridSpec::periodic(&[64], &[4.0]).unwrap();
        let a = random_wavefunction(&grid, 11).unwrap();
        let b = random_wavefunction(&grid, 11).unwrap();
        assert_eq!(a.data(), b.data());
        assert!((a.norm() - 1.0).abs() < 1e-12);
    }
}
