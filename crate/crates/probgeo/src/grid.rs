//! Uniform grids on rectangular boxes, with the difference operators the rest
//! of the crate is built from.
//!
//! A [`GridSpec`] describes a regular lattice in one to three dimensions:
//! `points[a]` samples along axis `a`, spacing `extent[a] / points[a]`, and a
//! boundary condition shared by all axes. Fields over the grid are plain
//! `Vec<f64>` (or `Vec<Complex64>`) slices in row-major order; the grid owns
//! the geometry, the stencils, and the quadrature.
//!
//! Two boundary conditions are supported:
//!
//! * [`Boundary::Periodic`] — indices wrap. Central differences are exactly
//!   antisymmetric (`transpose(D) = -D` under the grid inner product), which
//!   makes summation by parts an identity rather than an approximation.
//! * [`Boundary::Vanishing`] — the field is treated as compactly supported
//!   inside the box. Interior points use central differences; the two faces
//!   use mirrored one-sided second-order stencils, so the operators stay
//!   second-order accurate up to the edge and preserve even/odd symmetry
//!   about the box centre exactly (in floating point, not just in theory).
//!
//! All stencils are second order. `gradient` and `laplacian` are exact on
//! polynomials of degree two along the differentiated axis, including the
//! one-sided rows; the unit tests pin this down.

use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Maximum number of spatial dimensions.
pub const MAX_DIM: usize = 3;

/// Minimum number of samples per axis (the one-sided stencils need depth,
/// and coarser grids are numerically meaningless for the quantities here).
pub const MIN_POINTS: usize = 8;

/// Boundary condition applied on every axis of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Indices wrap around: the box is a torus.
    Periodic,
    /// The field is assumed to vanish smoothly towards the faces; stencils
    /// fall back to one-sided differences at the first and last sample.
    Vanishing,
}

/// Geometry of a uniform rectangular grid in 1–3 dimensions.
///
/// Construct one with [`GridSpec::new`], or the [`GridSpec::periodic`] /
/// [`GridSpec::vanishing_centered`] shorthands. The spec is `Copy` and cheap
/// to pass around; fields are stored separately as flat vectors of length
/// [`GridSpec::num_points`].
///
/// Sample `k` along axis `a` sits at `origin[a] + k * spacing(a)`, for
/// `k = 0..points[a]`. On a periodic axis the point at `origin + extent`
/// is identified with the origin and is not stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dim: usize,
    points: [usize; MAX_DIM],
    extent: [f64; MAX_DIM],
    origin: [f64; MAX_DIM],
    boundary: Boundary,
}

impl GridSpec {
    /// Builds a grid from per-axis sample counts, box lengths, and origin.
    ///
    /// `points`, `extent`, and `origin` must all have the same length, which
    /// fixes the dimension (1 to 3). Every axis needs at least
    /// [`MIN_POINTS`] samples and a strictly positive, finite length.
    ///
    /// # Errors
    ///
    /// Returns [`Error::InvalidGrid`] if the dimension is outside 1–3, the
    /// slice lengths disagree, a sample count is below [`MIN_POINTS`], or an
    /// extent/origin entry is non-finite or non-positive.
    pub fn new(
        points: &[usize],
        extent: &[f64],
        origin: &[f64],
        boundary: Boundary,
    ) -> Result<Self> {
        let dim = points.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidGrid(format!(
                "dimension must be between 1 and {MAX_DIM}, got {dim}"
            )));
        }
        if extent.len() != dim || origin.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "points/extent/origin lengths disagree: {} / {} / {}",
                dim,
                extent.len(),
                origin.len()
            )));
        }
        let mut p = [1usize; MAX_DIM];
        let mut e = [1.0f64; MAX_DIM];
        let mut o = [0.0f64; MAX_DIM];
        for a in 0..dim {
            if points[a] < MIN_POINTS {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} has {} samples; at least {MIN_POINTS} are required",
                    points[a]
                )));
            }
            if !extent[a].is_finite() || extent[a] <= 0.0 {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} extent must be finite and positive, got {}",
                    extent[a]
                )));
            }
            if !origin[a].is_finite() {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} origin must be finite, got {}",
                    origin[a]
                )));
            }
            p[a] = points[a];
            e[a] = extent[a];
            o[a] = origin[a];
        }
        Ok(Self {
            dim,
            points: p,
            extent: e,
            origin: o,
            boundary,
        })
    }

    /// Periodic box with the origin at zero.
    ///
    /// # Errors
    ///
    /// Same validation as [`GridSpec::new`].
    pub fn periodic(points: &[usize], extent: &[f64]) -> Result<Self> {
        let origin = vec![0.0; points.len()];
        Self::new(points, extent, &origin, Boundary::Periodic)
    }

    /// Vanishing-boundary box whose sampled points are symmetric about zero.
    ///
    /// The origin is chosen as `-(n - 1)/2 * spacing` per axis, so the sample
    /// at index `k` sits at `(k - (n-1)/2) * spacing` and index reflection
    /// `k -> n-1-k` negates every coordinate exactly. States built as even
    /// functions of these coordinates are mirror-symmetric to the bit.
    ///
    /// # Errors
    ///
    /// Same validation as [`GridSpec::new`].
    pub fn vanishing_centered(points: &[usize], extent: &[f64]) -> Result<Self> {
        let dim = points.len();
        if dim == 0 || dim > MAX_DIM || extent.len() != dim {
            // Delegate the detailed message to the main constructor.
            return Self::new(points, extent, &vec![0.0; extent.len().max(1)], Boundary::Vanishing);
        }
        let mut origin = vec![0.0; dim];
        for a in 0..dim {
            if points[a] == 0 || !extent[a].is_finite() || extent[a] <= 0.0 {
                return Self::new(points, extent, &origin, Boundary::Vanishing);
            }
            let h = extent[a] / points[a] as f64;
            origin[a] = -(points[a] as f64 - 1.0) / 2.0 * h;
        }
        Self::new(points, extent, &origin, Boundary::Vanishing)
    }

    /// Number of spatial dimensions (1–3).
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Samples along `axis`.
    ///
    /// # Errors
    ///
    /// [`Error::AxisOutOfRange`] if `axis >= dim`.
    pub fn points(&self, axis: usize) -> Result<usize> {
        self.check_axis(axis)?;
        Ok(self.points[axis])
    }

    /// Box length along `axis`.
    ///
    /// # Errors
    ///
    /// [`Error::AxisOutOfRange`] if `axis >= dim`.
    pub fn extent(&self, axis: usize) -> Result<f64> {
        self.check_axis(axis)?;
        Ok(self.extent[axis])
    }

    /// Coordinate of sample 0 along `axis`.
    ///
    /// # Errors
    ///
    /// [`Error::AxisOutOfRange`] if `axis >= dim`.
    pub fn origin(&self, axis: usize) -> Result<f64> {
        self.check_axis(axis)?;
        Ok(self.origin[axis])
    }

    /// Grid spacing `extent / points` along `axis`.
    ///
    /// # Errors
    ///
    /// [`Error::AxisOutOfRange`] if `axis >= dim`.
    pub fn spacing(&self, axis: usize) -> Result<f64> {
        self.check_axis(axis)?;
        Ok(self.extent[axis] / self.points[axis] as f64)
    }

    /// Midpoint of the sampled coordinates along `axis`:
    /// `origin + (n - 1)/2 * spacing`. For [`GridSpec::vanishing_centered`]
    /// grids this is exactly zero.
    ///
    /// # Errors
    ///
    /// [`Error::AxisOutOfRange`] if `axis >= dim`.
    pub fn center(&self, axis: usize) -> Result<f64> {
        self.check_axis(axis)?;
        let h = self.extent[axis] / self.points[axis] as f64;
        Ok(self.origin[axis] + (self.points[axis] as f64 - 1.0) / 2.0 * h)
    }

    /// Boundary condition shared by all axes.
    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Total number of grid points (the length of every field vector).
    pub fn num_points(&self) -> usize {
        self.points[..self.dim].iter().product()
    }

    /// Volume of one grid cell — the quadrature weight of [`GridSpec::integrate`].
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim)
            .map(|a| self.extent[a] / self.points[a] as f64)
            .product()
    }

    /// Flat row-major index of the multi-index `idx` (unused axes ignored).
    pub fn flat_index(&self, idx: [usize; MAX_DIM]) -> usize {
        let mut flat = 0;
        for a in 0..self.dim {
            flat = flat * self.points[a] + idx[a];
        }
        flat
    }

    /// Multi-index of the flat row-major index `flat`.
    pub fn multi_index(&self, flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0usize; MAX_DIM];
        let mut rest = flat;
        for a in (0..self.dim).rev() {
            idx[a] = rest % self.points[a];
            rest /= self.points[a];
        }
        idx
    }

    /// Physical position of the sample at flat index `flat`.
    pub fn position(&self, flat: usize) -> [f64; MAX_DIM] {
        let idx = self.multi_index(flat);
        let mut x = [0.0f64; MAX_DIM];
        for a in 0..self.dim {
            let h = self.extent[a] / self.points[a] as f64;
            x[a] = self.origin[a] + idx[a] as f64 * h;
        }
        x
    }

    /// The coordinate `x_axis` evaluated at every grid point.
    ///
    /// # Errors
    ///
    /// [`Error::AxisOutOfRange`] if `axis >= dim`.
    pub fn coordinate_field(&self, axis: usize) -> Result<Vec<f64>> {
        self.check_axis(axis)?;
        let n = self.points[axis];
        let h = self.extent[axis] / n as f64;
        let o = self.origin[axis];
        let stride = self.axis_stride(axis);
        let len = self.num_points();
        let mut out = vec![0.0; len];
        for (flat, slot) in out.iter_mut().enumerate() {
            let k = (flat / stride) % n;
            *slot = o + k as f64 * h;
        }
        Ok(out)
    }

    /// Midpoint-rule integral of a real field: `cell_volume * sum(f)`.
    ///
    /// # Errors
    ///
    /// [`Error::LengthMismatch`] if `f` has the wrong length.
    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f.len())?;
        Ok(self.cell_volume() * f.iter().sum::<f64>())
    }

    /// Midpoint-rule integral of a complex field.
    ///
    /// # Errors
    ///
    /// [`Error::LengthMismatch`] if `f` has the wrong length.
    pub fn integrate_complex(&self, f: &[Complex64]) -> Result<Complex64> {
        self.check_len(f.len())?;
        Ok(self.cell_volume() * f.iter().sum::<Complex64>())
    }

    /// Second-order first derivative of `f` along `axis`.
    ///
    /// Interior points use the central difference
    /// `(f[k+1] - f[k-1]) / (2 h)`. Periodic axes wrap; vanishing axes use
    /// the one-sided stencil `(-3 f[0] + 4 f[1] - f[2]) / (2 h)` at the first
    /// sample and its mirror image at the last, evaluated so that reflecting
    /// the data negates the result exactly.
    ///
    /// # Errors
    ///
    /// [`Error::AxisOutOfRange`] or [`Error::LengthMismatch`].
    pub fn gradient(&self, f: &[f64], axis: usize) -> Result<Vec<f64>> {
        self.check_axis(axis)?;
        self.check_len(f.len())?;
        Ok(self.gradient_impl(f, axis))
    }

    /// [`GridSpec::gradient`] for complex fields, with the same stencils.
    ///
    /// # Errors
    ///
    /// [`Error::AxisOutOfRange`] or [`Error::LengthMismatch`].
    pub fn gradient_complex(&self, f: &[Complex64], axis: usize) -> Result<Vec<Complex64>> {
        self.check_axis(axis)?;
        self.check_len(f.len())?;
        Ok(self.gradient_impl(f, axis))
    }

    /// Second-order second derivative of `f` along a single axis.
    ///
    /// Interior points use `(f[k+1] + f[k-1] - 2 f[k]) / h^2` (grouped
    /// symmetrically, so mirror-even data stays even to the bit). Vanishing
    /// axes use the four-point one-sided stencil
    /// `(2 f[0] - 5 f[1] + 4 f[2] - f[3]) / h^2` at the faces, which is still
    /// exact on quadratics.
    ///
    /// # Errors
    ///
    /// [`Error::AxisOutOfRange`] or [`Error::LengthMismatch`].
    pub fn laplacian_axis(&self, f: &[f64], axis: usize) -> Result<Vec<f64>> {
        self.check_axis(axis)?;
        self.check_len(f.len())?;
        Ok(self.laplacian_axis_impl(f, axis))
    }

    /// Full Laplacian: the sum of [`GridSpec::laplacian_axis`] over all axes.
    ///
    /// # Errors
    ///
    /// [`Error::LengthMismatch`] if `f` has the wrong length.
    pub fn laplacian(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len(f.len())?;
        let mut out = vec![0.0; f.len()];
        for axis in 0..self.dim {
            let part = self.laplacian_axis_impl(f, axis);
            for (o, p) in out.iter_mut().zip(part.iter()) {
                *o += *p;
            }
        }
        Ok(out)
    }

    /// [`GridSpec::laplacian`] for complex fields.
    ///
    /// # Errors
    ///
    /// [`Error::LengthMismatch`] if `f` has the wrong length.
    pub fn laplacian_complex(&self, f: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(f.len())?;
        let mut out = vec![Complex64::new(0.0, 0.0); f.len()];
        for axis in 0..self.dim {
            let part = self.laplacian_axis_impl(f, axis);
            for (o, p) in out.iter_mut().zip(part.iter()) {
                *o += *p;
            }
        }
        Ok(out)
    }

    /// Shifts `f` by `shift` whole cells along `axis`: the output at index
    /// `k` is the input at index `k - shift`.
    ///
    /// Periodic grids roll the data around; vanishing grids shift zeros in
    /// from the exposed face (consistent with a compactly supported field
    /// moving through a stationary box).
    ///
    /// # Errors
    ///
    /// [`Error::AxisOutOfRange`] or [`Error::LengthMismatch`].
    pub fn translate(&self, f: &[f64], axis: usize, shift: isize) -> Result<Vec<f64>> {
        self.check_axis(axis)?;
        self.check_len(f.len())?;
        let n = self.points[axis] as isize;
        let stride = self.axis_stride(axis);
        let mut out = vec![0.0; f.len()];
        for (flat, slot) in out.iter_mut().enumerate() {
            let k = ((flat / stride) % self.points[axis]) as isize;
            let src = k - shift;
            match self.boundary {
                Boundary::Periodic => {
                    let wrapped = src.rem_euclid(n) as usize;
                    let src_flat = flat - (k as usize) * stride + wrapped * stride;
                    *slot = f[src_flat];
                }
                Boundary::Vanishing => {
                    if (0..n).contains(&src) {
                        let src_flat = flat - (k as usize) * stride + src as usize * stride;
                        *slot = f[src_flat];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Stride, in flat-index units, between neighbouring samples along `axis`.
    pub(crate) fn axis_stride(&self, axis: usize) -> usize {
        self.points[axis + 1..self.dim].iter().product()
    }

    pub(crate) fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.dim {
            Err(Error::AxisOutOfRange {
                axis,
                dim: self.dim,
            })
        } else {
            Ok(())
        }
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        let expected = self.num_points();
        if len != expected {
            Err(Error::LengthMismatch {
                got: len,
                expected,
            })
        } else {
            Ok(())
        }
    }

    fn gradient_impl<T>(&self, f: &[T], axis: usize) -> Vec<T>
    where
        T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    {
        let n = self.points[axis];
        let s = self.axis_stride(axis);
        let h = self.extent[axis] / n as f64;
        let inv2h = 1.0 / (2.0 * h);
        let mut out = Vec::with_capacity(f.len());
        for flat in 0..f.len() {
            let k = (flat / s) % n;
            let v = if k > 0 && k < n - 1 {
                (f[flat + s] - f[flat - s]) * inv2h
            } else {
                match self.boundary {
                    Boundary::Periodic => {
                        let prev = if k == 0 { flat + (n - 1) * s } else { flat - s };
                        let next = if k == n - 1 { flat - (n - 1) * s } else { flat + s };
                        (f[next] - f[prev]) * inv2h
                    }
                    Boundary::Vanishing => {
                        if k == 0 {
                            (f[flat + s] * 4.0 - f[flat] * 3.0 - f[flat + 2 * s]) * inv2h
                        } else {
                            // Mirror image of the k == 0 stencil, written as the
                            // same expression on reflected samples times -1/(2h),
                            // so reflected data produces an exactly negated value.
                            (f[flat - s] * 4.0 - f[flat] * 3.0 - f[flat - 2 * s]) * (-inv2h)
                        }
                    }
                }
            };
            out.push(v);
        }
        out
    }

    fn laplacian_axis_impl<T>(&self, f: &[T], axis: usize) -> Vec<T>
    where
        T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    {
        let n = self.points[axis];
        let s = self.axis_stride(axis);
        let h = self.extent[axis] / n as f64;
        let inv_h2 = 1.0 / (h * h);
        let mut out = Vec::with_capacity(f.len());
        for flat in 0..f.len() {
            let k = (flat / s) % n;
            let v = if k > 0 && k < n - 1 {
                ((f[flat + s] + f[flat - s]) - f[flat] * 2.0) * inv_h2
            } else {
                match self.boundary {
                    Boundary::Periodic => {
                        let prev = if k == 0 { flat + (n - 1) * s } else { flat - s };
                        let next = if k == n - 1 { flat - (n - 1) * s } else { flat + s };
                        ((f[next] + f[prev]) - f[flat] * 2.0) * inv_h2
                    }
                    Boundary::Vanishing => {
                        if k == 0 {
                            (f[flat] * 2.0 - f[flat + s] * 5.0 + f[flat + 2 * s] * 4.0
                                - f[flat + 3 * s])
                                * inv_h2
                        } else {
                            // Same expression on reflected samples: even data
                            // yields an exactly even Laplacian.
                            (f[flat] * 2.0 - f[flat - s] * 5.0 + f[flat - 2 * s] * 4.0
                                - f[flat - 3 * s])
                                * inv_h2
                        }
                    }
                }
            };
            out.push(v);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn rejects_bad_dimensions_and_sizes() {
        assert!(matches!(
            GridSpec::new(&[], &[], &[], Boundary::Periodic),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            GridSpec::new(
                &[16, 16, 16, 16],
                &[1.0; 4],
                &[0.0; 4],
                Boundary::Periodic
            ),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            GridSpec::new(&[4], &[1.0], &[0.0], Boundary::Periodic),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            GridSpec::new(&[16], &[-1.0], &[0.0], Boundary::Periodic),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            GridSpec::new(&[16, 16], &[1.0], &[0.0], Boundary::Periodic),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            GridSpec::new(&[16], &[1.0], &[f64::NAN], Boundary::Periodic),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn flat_and_multi_index_round_trip() {
        let g = GridSpec::periodic(&[8, 12, 9], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(g.num_points(), 8 * 12 * 9);
        for flat in 0..g.num_points() {
            let idx = g.multi_index(flat);
            assert_eq!(g.flat_index(idx), flat);
        }
        // Row-major: the last axis is contiguous.
        assert_eq!(g.flat_index([0, 0, 1]), 1);
        assert_eq!(g.flat_index([0, 1, 0]), 9);
        assert_eq!(g.flat_index([1, 0, 0]), 12 * 9);
        assert_eq!(g.axis_stride(0), 12 * 9);
        assert_eq!(g.axis_stride(1), 9);
        assert_eq!(g.axis_stride(2), 1);
    }

    #[test]
    fn centered_grid_coordinates_negate_under_reflection() {
        let g = GridSpec::vanishing_centered(&[32], &[7.0]).unwrap();
        let x = g.coordinate_field(0).unwrap();
        let n = x.len();
        for k in 0..n {
            assert_eq!(x[k], -x[n - 1 - k], "reflection must negate exactly");
        }
        assert_eq!(g.center(0).unwrap(), 0.0);
    }

    #[test]
    fn gradient_exact_on_quadratics_including_edges() {
        let g = GridSpec::vanishing_centered(&[24, 16], &[3.0, 2.0]).unwrap();
        let x = g.coordinate_field(0).unwrap();
        let y = g.coordinate_field(1).unwrap();
        let f: Vec<f64> = x
            .iter()
            .zip(y.iter())
            .map(|(&x, &y)| 3.0 + 2.0 * x - 0.5 * x * x + 0.25 * x * y)
            .collect();
        let expect_dx: Vec<f64> = x
            .iter()
            .zip(y.iter())
            .map(|(&x, &y)| 2.0 - x + 0.25 * y)
            .collect();
        let expect_dy: Vec<f64> = x.iter().map(|&x| 0.25 * x).collect();
        let dx = g.gradient(&f, 0).unwrap();
        let dy = g.gradient(&f, 1).unwrap();
        assert!(max_abs_diff(&dx, &expect_dx) < 1e-12);
        assert!(max_abs_diff(&dy, &expect_dy) < 1e-12);
    }

    #[test]
    fn laplacian_exact_on_quadratics_including_edges() {
        let g = GridSpec::vanishing_centered(&[20], &[4.0]).unwrap();
        let x = g.coordinate_field(0).unwrap();
        let f: Vec<f64> = x.iter().map(|&x| 1.0 + x - 0.5 * x * x).collect();
        let lap = g.laplacian(&f).unwrap();
        for v in lap {
            assert!((v + 1.0).abs() < 1e-11, "got {v}");
        }
    }

    #[test]
    fn gradient_second_order_on_periodic_sine() {
        let errs: Vec<f64> = [64usize, 128]
            .iter()
            .map(|&n| {
                let g = GridSpec::periodic(&[n], &[2.0 * std::f64::consts::PI]).unwrap();
                let x = g.coordinate_field(0).unwrap();
                let f: Vec<f64> = x.iter().map(|&x| x.sin()).collect();
                let df = g.gradient(&f, 0).unwrap();
                x.iter()
                    .zip(df.iter())
                    .map(|(&x, &d)| (d - x.cos()).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        let order = (errs[0] / errs[1]).log2();
        assert!(
            (order - 2.0).abs() < 0.05,
            "observed order {order}, errors {errs:?}"
        );
    }

    #[test]
    fn periodic_gradient_is_antisymmetric() {
        // transpose(D) = -D: integral of f Dg + g Df vanishes to roundoff.
        let g = GridSpec::periodic(&[48], &[3.0]).unwrap();
        let x = g.coordinate_field(0).unwrap();
        let tau = 2.0 * std::f64::consts::PI / 3.0;
        let f: Vec<f64> = x.iter().map(|&x| (tau * x).sin() + 0.3 * (2.0 * tau * x).cos()).collect();
        let w: Vec<f64> = x.iter().map(|&x| (tau * x).cos() - 0.4 * (3.0 * tau * x).sin()).collect();
        let df = g.gradient(&f, 0).unwrap();
        let dw = g.gradient(&w, 0).unwrap();
        let lhs: Vec<f64> = f.iter().zip(dw.iter()).map(|(a, b)| a * b).collect();
        let rhs: Vec<f64> = w.iter().zip(df.iter()).map(|(a, b)| a * b).collect();
        let total = g.integrate(&lhs).unwrap() + g.integrate(&rhs).unwrap();
        assert!(total.abs() < 1e-13, "summation by parts left {total}");
    }

    #[test]
    fn periodic_derivative_integrates_to_zero() {
        let g = GridSpec::periodic(&[40, 24], &[2.0, 5.0]).unwrap();
        let x = g.coordinate_field(0).unwrap();
        let y = g.coordinate_field(1).unwrap();
        let f: Vec<f64> = x
            .iter()
            .zip(y.iter())
            .map(|(&x, &y)| (std::f64::consts::PI * x).sin().exp() + 0.5 * (0.4 * std::f64::consts::PI * y).cos())
            .collect();
        for axis in 0..2 {
            let df = g.gradient(&f, axis).unwrap();
            let total = g.integrate(&df).unwrap();
            assert!(total.abs() < 1e-12, "axis {axis} left {total}");
        }
    }

    #[test]
    fn periodic_laplacian_is_symmetric() {
        let g = GridSpec::periodic(&[32], &[1.0]).unwrap();
        let x = g.coordinate_field(0).unwrap();
        let tau = 2.0 * std::f64::consts::PI;
        let f: Vec<f64> = x.iter().map(|&x| (tau * x).sin() + 0.2 * (3.0 * tau * x).cos()).collect();
        let w: Vec<f64> = x.iter().map(|&x| 1.0 + 0.5 * (2.0 * tau * x).sin()).collect();
        let lf = g.laplacian(&f).unwrap();
        let lw = g.laplacian(&w).unwrap();
        let a: Vec<f64> = f.iter().zip(lw.iter()).map(|(p, q)| p * q).collect();
        let b: Vec<f64> = w.iter().zip(lf.iter()).map(|(p, q)| p * q).collect();
        let diff = (g.integrate(&a).unwrap() - g.integrate(&b).unwrap()).abs();
        assert!(diff < 1e-11, "asymmetry {diff}");
    }

    #[test]
    fn mirrored_edge_stencils_negate_exactly_on_even_data() {
        let g = GridSpec::vanishing_centered(&[32], &[6.0]).unwrap();
        let x = g.coordinate_field(0).unwrap();
        // Even field with no special structure beyond parity.
        let f: Vec<f64> = x.iter().map(|&x| (-0.7 * x * x).exp() * (1.0 + 0.3 * (x * x).cos())).collect();
        let df = g.gradient(&f, 0).unwrap();
        let lf = g.laplacian(&f).unwrap();
        let n = f.len();
        for k in 0..n {
            assert_eq!(df[k], -df[n - 1 - k], "gradient of even data must be odd to the bit");
            assert_eq!(lf[k], lf[n - 1 - k], "Laplacian of even data must be even to the bit");
        }
    }

    #[test]
    fn translate_rolls_periodically_and_zero_fills_vanishing() {
        let gp = GridSpec::periodic(&[8], &[1.0]).unwrap();
        let f: Vec<f64> = (0..8).map(|k| k as f64).collect();
        let rolled = gp.translate(&f, 0, 3).unwrap();
        assert_eq!(rolled, vec![5.0, 6.0, 7.0, 0.0, 1.0, 2.0, 3.0, 4.0]);
        let back = gp.translate(&rolled, 0, -3).unwrap();
        assert_eq!(back, f);

        let gv = GridSpec::vanishing_centered(&[8], &[1.0]).unwrap();
        let shifted = gv.translate(&f, 0, 2).unwrap();
        assert_eq!(shifted, vec![0.0, 0.0, 0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn complex_gradient_matches_componentwise_real_gradients() {
        let g = GridSpec::periodic(&[24], &[2.0]).unwrap();
        let x = g.coordinate_field(0).unwrap();
        let tau = std::f64::consts::PI;
        let re: Vec<f64> = x.iter().map(|&x| (tau * x).sin()).collect();
        let im: Vec<f64> = x.iter().map(|&x| (2.0 * tau * x).cos()).collect();
        let z: Vec<Complex64> = re
            .iter()
            .zip(im.iter())
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect();
        let dz = g.gradient_complex(&z, 0).unwrap();
        let dre = g.gradient(&re, 0).unwrap();
        let dim_ = g.gradient(&im, 0).unwrap();
        for k in 0..z.len() {
            assert_eq!(dz[k].re, dre[k]);
            assert_eq!(dz[k].im, dim_[k]);
        }
    }

    #[test]
    fn axis_checks_and_length_checks_fire() {
        let g = GridSpec::periodic(&[8, 8], &[1.0, 1.0]).unwrap();
        assert!(matches!(
            g.gradient(&vec![0.0; 64], 2),
            Err(Error::AxisOutOfRange { axis: 2, dim: 2 })
        ));
        assert!(matches!(
            g.gradient(&vec![0.0; 63], 0),
            Err(Error::LengthMismatch { got: 63, expected: 64 })
        ));
    }
}
