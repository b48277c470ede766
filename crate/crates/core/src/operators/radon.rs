//! Parallel-beam discrete Radon transform.
//!
//! Pixels are unit squares; the image center is the origin, `x` grows with
//! the column index and `y` grows upward (towards row 0). For angle `θ` the
//! detector coordinate of a point is `s = x cos θ + y sin θ`; bin `b` is the
//! single line `s = b - (bins - 1) / 2`. The matrix entry for (ray, pixel) is
//! the exact length of the ray inside the pixel, computed by walking the
//! ray's crossings with the grid lines.
//!
//! Pixels are half-open (`[x0, x1) × [y0, y1)`), so a ray lying exactly on a
//! grid line is charged to the pixel on its positive side only.
//!
//! The adjoint scatters through the same sparse rows, so it is the exact
//! transpose of the forward map.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use super::LinearOperator;
use crate::grid::validate_angles;
use crate::{Error, GridImage, Result, Sinogram};

/// `count` equally spaced angles `kπ/count`, `k = 0..count`.
pub fn default_angles(count: usize) -> Vec<f64> {
    (0..count).map(|k| k as f64 * PI / count as f64).collect()
}

/// `ceil(√2 · n)` unit bins for `n = max(width, height)`, rounded up to the
/// parity of `n` so that axis-aligned rays pass through pixel centers rather
/// than along pixel edges.
pub fn default_bins(width: usize, height: usize) -> usize {
    let n = width.max(height);
    let bins = libm::ceil(SQRT_2 * n as f64) as usize;
    bins + (bins + n) % 2
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadonGeometry {
    pub width: usize,
    pub height: usize,
    pub angles: Vec<f64>,
    pub bins: usize,
}

impl RadonGeometry {
    pub fn new(width: usize, height: usize, angles: Vec<f64>, bins: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Empty("image dimensions must be positive"));
        }
        if bins == 0 {
            return Err(Error::Empty("detector bin count must be positive"));
        }
        validate_angles(&angles)?;
        Ok(RadonGeometry {
            width,
            height,
            angles,
            bins,
        })
    }

    pub fn rays(&self) -> usize {
        self.angles.len() * self.bins
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    /// Detector offset of bin `b`.
    pub fn bin_offset(&self, b: usize) -> f64 {
        b as f64 - (self.bins as f64 - 1.0) / 2.0
    }
}

/// Unit normal `(cos θ, sin θ)` with components below 1e-15 snapped to zero,
/// so rays at 90° are exactly axis-aligned.
pub(crate) fn ray_normal(theta: f64) -> (f64, f64) {
    let snap = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
    (snap(libm::cos(theta)), snap(libm::sin(theta)))
}

/// The Radon transform for one geometry, precomputed as a sparse matrix in
/// compressed-row form (one row per ray).
#[derive(Debug, Clone)]
pub struct RadonTransform {
    geometry: RadonGeometry,
    row_ptr: Vec<usize>,
    pixel: Vec<u32>,
    weight: Vec<f64>,
}

impl RadonTransform {
    pub fn new(geometry: RadonGeometry) -> Self {
        let mut row_ptr = Vec::with_capacity(geometry.rays() + 1);
        row_ptr.push(0);
        let mut pixel = Vec::new();
        let mut weight = Vec::new();
        let mut scratch = Vec::new();
        for &theta in &geometry.angles {
            let normal = ray_normal(theta);
            for b in 0..geometry.bins {
                trace_ray(
                    &geometry,
                    normal,
                    geometry.bin_offset(b),
                    &mut scratch,
                    &mut pixel,
                    &mut weight,
                );
                row_ptr.push(pixel.len());
            }
        }
        RadonTransform {
            geometry,
            row_ptr,
            pixel,
            weight,
        }
    }

    pub fn with_defaults(width: usize, height: usize, angle_count: usize) -> Result<Self> {
        let g = RadonGeometry::new(
            width,
            height,
            default_angles(angle_count),
            default_bins(width, height),
        )?;
        Ok(RadonTransform::new(g))
    }

    pub fn geometry(&self) -> &RadonGeometry {
        &self.geometry
    }

    pub fn nonzeros(&self) -> usize {
        self.weight.len()
    }

    /// `(pixel index, intersection length)` pairs of one ray.
    pub fn ray(&self, ray: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[ray]..self.row_ptr[ray + 1];
        self.pixel[span.clone()]
            .iter()
            .zip(&self.weight[span])
            .map(|(&p, &w)| (p as usize, w))
    }

    pub fn forward(&self, image: &GridImage) -> Result<Sinogram> {
        let g = &self.geometry;
        if image.width() != g.width || image.height() != g.height {
            return Err(Error::GeometryMismatch(format!(
                "image is {}x{}, transform expects {}x{}",
                image.width(),
                image.height(),
                g.width,
                g.height
            )));
        }
        image.check_finite("image")?;
        Sinogram::new(g.angles.clone(), g.bins, self.apply(image.values()))
    }

    pub fn adjoint(&self, sino: &Sinogram) -> Result<GridImage> {
        let g = &self.geometry;
        if sino.bins() != g.bins || sino.angles() != g.angles.as_slice() {
            return Err(Error::GeometryMismatch(format!(
                "sinogram has {} angles x {} bins, transform expects {} x {}",
                sino.angles().len(),
                sino.bins(),
                g.angles.len(),
                g.bins
            )));
        }
        sino.values()
            .iter()
            .position(|v| !v.is_finite())
            .map_or(Ok(()), |index| {
                Err(Error::NonFinite {
                    field: "sinogram",
                    index,
                })
            })?;
        GridImage::new(g.width, g.height, self.apply_adjoint(sino.values()))
    }
}

impl LinearOperator for RadonTransform {
    fn domain_dim(&self) -> usize {
        self.geometry.pixels()
    }

    fn range_dim(&self) -> usize {
        self.geometry.rays()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.domain_dim());
        for (r, o) in out.iter_mut().enumerate() {
            let span = self.row_ptr[r]..self.row_ptr[r + 1];
            *o = self.pixel[span.clone()]
                .iter()
                .zip(&self.weight[span])
                .fold(0.0, |acc, (&p, &w)| acc + w * x[p as usize]);
        }
    }

    fn apply_adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.range_dim());
        out.iter_mut().for_each(|v| *v = 0.0);
        for (r, &yr) in y.iter().enumerate() {
            let span = self.row_ptr[r]..self.row_ptr[r + 1];
            for (&p, &w) in self.pixel[span.clone()].iter().zip(&self.weight[span]) {
                out[p as usize] += w * yr;
            }
        }
    }
}

/// Appends the pixel intersections of one ray to `pixel`/`weight`.
fn trace_ray(
    g: &RadonGeometry,
    (c, s): (f64, f64),
    offset: f64,
    ts: &mut Vec<f64>,
    pixel: &mut Vec<u32>,
    weight: &mut Vec<f64>,
) {
    let (w, h) = (g.width as f64, g.height as f64);
    // Grid shifted to [0, w] x [0, h]; ray p(t) = p0 + t d with d = (-s, c).
    let (x0, y0) = (offset * c + w / 2.0, offset * s + h / 2.0);
    let (dx, dy) = (-s, c);

    let Some((x_lo, x_hi)) = slab(x0, dx, w) else {
        return;
    };
    let Some((y_lo, y_hi)) = slab(y0, dy, h) else {
        return;
    };
    let t_lo = x_lo.max(y_lo);
    let t_hi = x_hi.min(y_hi);
    if !(t_hi > t_lo) {
        return;
    }

    ts.clear();
    ts.push(t_lo);
    crossings(x0, dx, g.width, t_lo, t_hi, ts);
    crossings(y0, dy, g.height, t_lo, t_hi, ts);
    ts.push(t_hi);
    ts.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite ray parameters"));

    let start = pixel.len();
    for seg in ts.windows(2) {
        let len = seg[1] - seg[0];
        if !(len > 0.0) {
            continue;
        }
        let mid = 0.5 * (seg[0] + seg[1]);
        let col = libm::floor(x0 + mid * dx);
        let band = libm::floor(y0 + mid * dy);
        if col < 0.0 || col >= w || band < 0.0 || band >= h {
            continue;
        }
        let row = g.height - 1 - band as usize;
        let idx = (row * g.width + col as usize) as u32;
        if pixel.len() > start && *pixel.last().unwrap() == idx {
            *weight.last_mut().unwrap() += len;
        } else {
            pixel.push(idx);
            weight.push(len);
        }
    }
}

/// Parameter interval where `p0 + t d` lies in `[0, extent]`. A ray parallel
/// to the slab is inside only if `0 <= p0 < extent`.
fn slab(p0: f64, d: f64, extent: f64) -> Option<(f64, f64)> {
    if d == 0.0 {
        if (0.0..extent).contains(&p0) {
            Some((f64::NEG_INFINITY, f64::INFINITY))
        } else {
            None
        }
    } else {
        let a = -p0 / d;
        let b = (extent - p0) / d;
        Some((a.min(b), a.max(b)))
    }
}

fn crossings(p0: f64, d: f64, lines: usize, t_lo: f64, t_hi: f64, ts: &mut Vec<f64>) {
    if d == 0.0 {
        return;
    }
    for i in 0..=lines {
        let t = (i as f64 - p0) / d;
        if t > t_lo && t < t_hi {
            ts.push(t);
        }
    }
}

/// One-shot forward projection on a fresh geometry.
pub fn radon_forward(image: &GridImage, angles: &[f64], bins: usize) -> Result<Sinogram> {
    image.check_finite("image")?;
    let g = RadonGeometry::new(image.width(), image.height(), angles.to_vec(), bins)?;
    RadonTransform::new(g).forward(image)
}

/// One-shot back projection (exact adjoint of [`radon_forward`]).
pub fn radon_adjoint(sino: &Sinogram, width: usize, height: usize) -> Result<GridImage> {
    let g = RadonGeometry::new(width, height, sino.angles().to_vec(), sino.bins())?;
    RadonTransform::new(g).adjoint(sino)
}
