use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::linalg;
use crate::{Error, Result};

/// A 2-D raster on a `width × height` pixel grid, stored row-major.
///
/// Row 0 is the top of the image. Values are arbitrary reals; ingestion paths
/// (IDX files, phantoms) additionally guarantee finite nonnegative pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct GridImage {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl GridImage {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Empty("image dimensions must be positive"));
        }
        if values.len() != width * height {
            return Err(Error::DimensionMismatch {
                what: "image values",
                expected: width * height,
                found: values.len(),
            });
        }
        Ok(GridImage {
            width,
            height,
            values,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        GridImage {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    /// Builds an image from `f(row, col)`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut values = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                values.push(f(row, col));
            }
        }
        GridImage {
            width,
            height,
            values,
        }
    }

    /// Same geometry as `self`, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        GridImage::new(self.width, self.height, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn same_geometry(&self, other: &GridImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn check_geometry(&self, other: &GridImage, what: &str) -> Result<()> {
        if self.same_geometry(other) {
            Ok(())
        } else {
            Err(Error::GeometryMismatch(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.values)
    }

    /// Euclidean distance; panics on a geometry mismatch.
    pub fn distance(&self, other: &GridImage) -> f64 {
        assert!(self.same_geometry(other), "geometry mismatch");
        linalg::distance(&self.values, &other.values)
    }

    pub fn check_finite(&self, field: &'static str) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { field, index }),
            None => Ok(()),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }
}

/// Projection data indexed by (angle, detector bin), stored angle-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    angles: Vec<f64>,
    bins: usize,
    values: Vec<f64>,
}

impl Sinogram {
    pub fn new(angles: Vec<f64>, bins: usize, values: Vec<f64>) -> Result<Self> {
        validate_angles(&angles)?;
        if bins == 0 {
            return Err(Error::Empty("detector bin count must be positive"));
        }
        if values.len() != angles.len() * bins {
            return Err(Error::DimensionMismatch {
                what: "sinogram values",
                expected: angles.len() * bins,
                found: values.len(),
            });
        }
        Ok(Sinogram {
            angles,
            bins,
            values,
        })
    }

    pub fn zeros(angles: Vec<f64>, bins: usize) -> Result<Self> {
        let n = angles.len() * bins;
        Sinogram::new(angles, bins, vec![0.0; n])
    }

    /// Same geometry as `self`, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::DimensionMismatch {
                what: "sinogram values",
                expected: self.values.len(),
                found: values.len(),
            });
        }
        Ok(Sinogram {
            angles: self.angles.clone(),
            bins: self.bins,
            values,
        })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// The projection recorded at angle index `a`.
    pub fn row(&self, a: usize) -> &[f64] {
        &self.values[a * self.bins..(a + 1) * self.bins]
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.values)
    }

    pub fn same_geometry(&self, other: &Sinogram) -> bool {
        self.bins == other.bins && self.angles == other.angles
    }
}

pub(crate) fn validate_angles(angles: &[f64]) -> Result<()> {
    if angles.is_empty() {
        return Err(Error::Empty("angle list"));
    }
    for (i, &a) in angles.iter().enumerate() {
        if !a.is_finite() {
            return Err(Error::NonFinite {
                field: "angles",
                index: i,
            });
        }
        if !(0.0..PI).contains(&a) {
            return Err(Error::invalid("angle", a, "must lie in [0, pi)"));
        }
        if i > 0 && a <= angles[i - 1] {
            return Err(Error::invalid(
                "angle",
                a,
                "angles must be strictly increasing",
            ));
        }
    }
    Ok(())
}
