//! Training/validation data: IDX decoding, synthetic digit phantoms, noise
//! injection and error metrics.

mod idx;
mod noise;
mod phantom;

pub use idx::{
    encode_idx_images, encode_idx_labels, parse_idx_images, parse_idx_labels, IDX_IMAGES_MAGIC,
    IDX_LABELS_MAGIC,
};
pub use noise::{add_noise, add_noise_masked, relative_error, NoiseSpec};
pub use phantom::{generate_phantoms, stroke_template, PhantomSpec, MIN_PHANTOM_GRID};

use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, GridImage, Result};

/// Where a [`Dataset`] came from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Idx {
        images: String,
        labels: Option<String>,
    },
    Phantom {
        spec: PhantomSpec,
        seed: u64,
    },
}

/// Candidate priors (`train`) and reconstruction targets (`validation`).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<GridImage>,
    pub train_labels: Vec<u8>,
    pub validation: Vec<GridImage>,
    pub validation_labels: Vec<u8>,
    pub source: DataSource,
}

impl Dataset {
    /// Checks label counts, common geometry, finiteness, nonnegativity and
    /// that no validation image also appears in `train`.
    pub fn validate(&self) -> Result<()> {
        if self.train.len() != self.train_labels.len() {
            return Err(Error::DimensionMismatch {
                what: "train labels",
                expected: self.train.len(),
                found: self.train_labels.len(),
            });
        }
        if self.validation.len() != self.validation_labels.len() {
            return Err(Error::DimensionMismatch {
                what: "validation labels",
                expected: self.validation.len(),
                found: self.validation_labels.len(),
            });
        }
        let first = self
            .train
            .first()
            .or(self.validation.first())
            .ok_or(Error::Empty("dataset"))?;
        for img in self.train.iter().chain(&self.validation) {
            first.check_geometry(img, "dataset image")?;
            img.check_finite("dataset image")?;
            if !img.is_nonnegative() {
                return Err(Error::invalid(
                    "pixel",
                    img.values().iter().copied().fold(0.0, f64::min),
                    "dataset images must be nonnegative",
                ));
            }
        }
        if !self.splits_disjoint() {
            return Err(Error::GeometryMismatch(String::from(
                "a validation image also appears in the training split",
            )));
        }
        Ok(())
    }

    /// No validation image equals a training image value-for-value.
    pub fn splits_disjoint(&self) -> bool {
        self.validation
            .iter()
            .all(|v| self.train.iter().all(|t| t.values() != v.values()))
    }

    /// Training images (with their indices) of class `label`.
    pub fn train_of_class(&self, label: u8) -> impl Iterator<Item = (usize, &GridImage)> + '_ {
        self.train
            .iter()
            .zip(&self.train_labels)
            .enumerate()
            .filter(move |(_, (_, &l))| l == label)
            .map(|(i, (img, _))| (i, img))
    }

    /// Validation images (with their indices) of class `label`.
    pub fn validation_of_class(&self, label: u8) -> impl Iterator<Item = (usize, &GridImage)> + '_ {
        self.validation
            .iter()
            .zip(&self.validation_labels)
            .enumerate()
            .filter(move |(_, (_, &l))| l == label)
            .map(|(i, (img, _))| (i, img))
    }
}
