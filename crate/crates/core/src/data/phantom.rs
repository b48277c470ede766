use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardUniform};

use super::{DataSource, Dataset};
use crate::{Error, GridImage, Result};

/// Smallest supported phantom side length.
pub const MIN_PHANTOM_GRID: usize = 8;

const MAX_REDRAWS: usize = 64;

/// Parameters of the synthetic digit generator.
///
/// Each phantom is a stroke template of its class under a random affine map
/// (rotation, anisotropic scale, shear, shift about the grid center),
/// rasterized as a binary image.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    /// Digit classes to generate, each in `0..=9`.
    pub classes: Vec<u8>,
    pub train_per_class: usize,
    pub validation_per_class: usize,
    /// Maximum absolute rotation in radians.
    pub max_rotation: f64,
    /// Scale factors are drawn from `[1 − s, 1 + s]`.
    pub scale_jitter: f64,
    /// Maximum absolute shear.
    pub max_shear: f64,
    /// Maximum absolute shift, as a fraction of the grid side.
    pub max_shift: f64,
    /// Stroke width as a fraction of the smaller grid side.
    pub stroke_width: f64,
}

impl PhantomSpec {
    pub fn new(width: usize, height: usize, classes: Vec<u8>) -> Self {
        PhantomSpec {
            width,
            height,
            classes,
            train_per_class: 20,
            validation_per_class: 2,
            max_rotation: 0.2,
            scale_jitter: 0.1,
            max_shear: 0.15,
            max_shift: 0.06,
            stroke_width: 0.11,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < MIN_PHANTOM_GRID || self.height < MIN_PHANTOM_GRID {
            return Err(Error::invalid(
                "grid",
                self.width.min(self.height) as f64,
                "phantom grids must be at least 8x8",
            ));
        }
        if self.classes.is_empty() {
            return Err(Error::Empty("phantom classes"));
        }
        if let Some(&c) = self.classes.iter().find(|&&c| c > 9) {
            return Err(Error::invalid(
                "class",
                f64::from(c),
                "must be a digit 0..=9",
            ));
        }
        if self.train_per_class + self.validation_per_class == 0 {
            return Err(Error::Empty("per-class counts"));
        }
        let ranges = [
            (
                "max_rotation",
                self.max_rotation,
                0.0,
                core::f64::consts::PI,
            ),
            ("scale_jitter", self.scale_jitter, 0.0, 0.5),
            ("max_shear", self.max_shear, 0.0, 1.0),
            ("max_shift", self.max_shift, 0.0, 0.25),
        ];
        for (name, v, lo, hi) in ranges {
            if !(v >= lo && v <= hi) {
                return Err(Error::invalid(name, v, "outside the supported range"));
            }
        }
        if !(self.stroke_width > 0.0 && self.stroke_width <= 0.5) {
            return Err(Error::invalid(
                "stroke_width",
                self.stroke_width,
                "must lie in (0, 0.5]",
            ));
        }
        Ok(())
    }
}

type Polyline = Vec<(f64, f64)>;

fn ellipse(cx: f64, cy: f64, rx: f64, ry: f64) -> Polyline {
    (0..=32)
        .map(|i| {
            let t = 2.0 * core::f64::consts::PI * i as f64 / 32.0;
            (cx + rx * libm::cos(t), cy + ry * libm::sin(t))
        })
        .collect()
}

/// Stroke polylines of digit `class` in unit coordinates (`x` right, `y`
/// down, digit roughly inside `[0.25, 0.75] × [0.15, 0.85]`).
pub fn stroke_template(class: u8) -> Vec<Polyline> {
    match class {
        0 => vec![ellipse(0.5, 0.5, 0.2, 0.32)],
        1 => vec![vec![(0.4, 0.28), (0.52, 0.17), (0.52, 0.83)]],
        2 => vec![vec![
            (0.3, 0.3),
            (0.38, 0.2),
            (0.55, 0.17),
            (0.68, 0.26),
            (0.67, 0.42),
            (0.3, 0.82),
            (0.72, 0.82),
        ]],
        3 => vec![vec![
            (0.3, 0.22),
            (0.5, 0.16),
            (0.66, 0.25),
            (0.64, 0.41),
            (0.47, 0.49),
            (0.64, 0.57),
            (0.68, 0.72),
            (0.52, 0.83),
            (0.3, 0.78),
        ]],
        4 => vec![vec![(0.62, 0.83), (0.62, 0.17), (0.28, 0.62), (0.74, 0.62)]],
        5 => vec![vec![
            (0.7, 0.18),
            (0.36, 0.18),
            (0.33, 0.47),
            (0.5, 0.43),
            (0.66, 0.52),
            (0.68, 0.7),
            (0.52, 0.82),
            (0.3, 0.78),
        ]],
        6 => vec![
            vec![(0.64, 0.19), (0.46, 0.25), (0.34, 0.45), (0.32, 0.65)],
            ellipse(0.5, 0.65, 0.18, 0.17),
        ],
        7 => vec![vec![(0.28, 0.18), (0.72, 0.18), (0.42, 0.83)]],
        8 => vec![
            ellipse(0.5, 0.32, 0.15, 0.15),
            ellipse(0.5, 0.66, 0.18, 0.17),
        ],
        _ => vec![
            ellipse(0.5, 0.35, 0.17, 0.16),
            vec![(0.67, 0.35), (0.6, 0.83)],
        ],
    }
}

struct Affine {
    m: [[f64; 2]; 2],
    t: (f64, f64),
}

impl Affine {
    fn apply(&self, (x, y): (f64, f64)) -> (f64, f64) {
        let (dx, dy) = (x - 0.5, y - 0.5);
        (
            0.5 + self.m[0][0] * dx + self.m[0][1] * dy + self.t.0,
            0.5 + self.m[1][0] * dx + self.m[1][1] * dy + self.t.1,
        )
    }
}

fn symmetric(rng: &mut ChaCha8Rng, half_width: f64) -> f64 {
    let u: f64 = StandardUniform.sample(rng);
    (2.0 * u - 1.0) * half_width
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (abx, aby) = (b.0 - a.0, b.1 - a.1);
    let (apx, apy) = (p.0 - a.0, p.1 - a.1);
    let len2 = abx * abx + aby * aby;
    let t = if len2 > 0.0 {
        ((apx * abx + apy * aby) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    libm::hypot(apx - t * abx, apy - t * aby)
}

fn draw(spec: &PhantomSpec, class: u8, rng: &mut ChaCha8Rng) -> GridImage {
    let angle = symmetric(rng, spec.max_rotation);
    let sx = 1.0 + symmetric(rng, spec.scale_jitter);
    let sy = 1.0 + symmetric(rng, spec.scale_jitter);
    let shear = symmetric(rng, spec.max_shear);
    let shift = (
        symmetric(rng, spec.max_shift),
        symmetric(rng, spec.max_shift),
    );
    let width_scale = 1.0 + symmetric(rng, 0.15);
    let (c, s) = (libm::cos(angle), libm::sin(angle));
    // rotation · shear · scale
    let m = [
        [c * sx, (c * shear - s) * sy],
        [s * sx, (s * shear + c) * sy],
    ];
    let map = Affine { m, t: shift };

    let (w, h) = (spec.width as f64, spec.height as f64);
    let to_pixels = |p: (f64, f64)| (p.0 * w, p.1 * h);
    let strokes: Vec<Vec<(f64, f64)>> = stroke_template(class)
        .into_iter()
        .map(|line| line.into_iter().map(|p| to_pixels(map.apply(p))).collect())
        .collect();
    let half = 0.5 * spec.stroke_width * width_scale * w.min(h);

    GridImage::from_fn(spec.width, spec.height, |row, col| {
        let p = (col as f64 + 0.5, row as f64 + 0.5);
        let hit = strokes.iter().any(|line| {
            line.windows(2)
                .any(|seg| segment_distance(p, seg[0], seg[1]) <= half)
        });
        if hit {
            1.0
        } else {
            0.0
        }
    })
}

/// Generates a reproducible phantom dataset.
///
/// Images are drawn class by class (train first, then validation) from one
/// ChaCha8 stream seeded with `seed`; a draw that is empty or repeats an
/// earlier image is redrawn, so the splits are disjoint.
pub fn generate_phantoms(spec: &PhantomSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: Vec<GridImage> = Vec::new();
    let mut train = Vec::new();
    let mut train_labels = Vec::new();
    let mut validation = Vec::new();
    let mut validation_labels = Vec::new();

    for &class in &spec.classes {
        for slot in 0..spec.train_per_class + spec.validation_per_class {
            let img = (0..MAX_REDRAWS)
                .map(|_| draw(spec, class, &mut rng))
                .find(|img| img.norm() > 0.0 && !seen.iter().any(|s| s == img))
                .ok_or(Error::invalid(
                    "grid",
                    spec.width.min(spec.height) as f64,
                    "too small to produce distinct phantoms",
                ))?;
            seen.push(img.clone());
            if slot < spec.train_per_class {
                train.push(img);
                train_labels.push(class);
            } else {
                validation.push(img);
                validation_labels.push(class);
            }
        }
    }

    Ok(Dataset {
        train,
        train_labels,
        validation,
        validation_labels,
        source: DataSource::Phantom {
            spec: spec.clone(),
            seed,
        },
    })
}
