//! Seeded geometric and photometric augmentation of annotated pages.
//!
//! Geometric steps (flip, rotation and scaling about the page centre,
//! crop-and-zoom) form one affine map applied to pixels and boxes alike.
//! The optical distortion is a small sinusoidal displacement applied to
//! pixels only; its amplitude is capped below 2 px so boxes stay valid.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{Element, PageAnnotation};
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::raster::{PageImage, WHITE};
use crate::seed::rng_for;

/// Largest displacement the optical distortion may cause, in pixels.
pub const MAX_DISTORTION_PX: f64 = 1.9;

/// Share of a transformed box that must remain on the page to keep it.
pub const MIN_SURVIVING_AREA: f64 = 0.2;

/// `x' = a x + b y + c`, `y' = d x + e y + f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl Affine {
    pub const IDENTITY: Affine = Affine {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 0.0,
        e: 1.0,
        f: 0.0,
    };

    pub fn translation(dx: f64, dy: f64) -> Affine {
        Affine {
            c: dx,
            f: dy,
            ..Affine::IDENTITY
        }
    }

    pub fn scaling(sx: f64, sy: f64) -> Affine {
        Affine {
            a: sx,
            e: sy,
            ..Affine::IDENTITY
        }
    }

    /// Mirror across the vertical axis of a page `width` wide.
    pub fn hflip(width: f64) -> Affine {
        Affine {
            a: -1.0,
            c: width,
            ..Affine::IDENTITY
        }
    }

    /// Rotation by `degrees` about `(cx, cy)`. Positive angles turn
    /// clockwise on screen (y grows downward).
    pub fn rotation_about(degrees: f64, cx: f64, cy: f64) -> Affine {
        let (s, c) = degrees.to_radians().sin_cos();
        let r = Affine {
            a: c,
            b: -s,
            c: 0.0,
            d: s,
            e: c,
            f: 0.0,
        };
        Affine::translation(-cx, -cy)
            .then(&r)
            .then(&Affine::translation(cx, cy))
    }

    pub fn scaling_about(s: f64, cx: f64, cy: f64) -> Affine {
        Affine::translation(-cx, -cy)
            .then(&Affine::scaling(s, s))
            .then(&Affine::translation(cx, cy))
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Affine) -> Affine {
        let n = next;
        Affine {
            a: n.a * self.a + n.b * self.d,
            b: n.a * self.b + n.b * self.e,
            c: n.a * self.c + n.b * self.f + n.c,
            d: n.d * self.a + n.e * self.d,
            e: n.d * self.b + n.e * self.e,
            f: n.d * self.c + n.e * self.f + n.f,
        }
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.a * x + self.b * y + self.c,
            self.d * x + self.e * y + self.f,
        )
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.e - self.b * self.d
    }

    pub fn invert(&self) -> Result<Affine> {
        let det = self.determinant();
        if !det.is_finite() || det.abs() < 1e-12 {
            return Err(Error::SingularTransform);
        }
        let a = self.e / det;
        let b = -self.b / det;
        let d = -self.d / det;
        let e = self.a / det;
        Ok(Affine {
            a,
            b,
            c: -(a * self.c + b * self.f),
            d,
            e,
            f: -(d * self.c + e * self.f),
        })
    }
}

/// Hull of the four transformed corners, clipped to the page. `None` when
/// less than [`MIN_SURVIVING_AREA`] of the hull stays on the page.
pub fn transform_bbox(
    b: &BoundingBox,
    t: &Affine,
    page_w: f64,
    page_h: f64,
) -> Result<Option<BoundingBox>> {
    t.invert()?;
    let corners = [
        t.apply(b.x_min, b.y_min),
        t.apply(b.x_max, b.y_min),
        t.apply(b.x_min, b.y_max),
        t.apply(b.x_max, b.y_max),
    ];
    let hull = BoundingBox {
        x_min: corners.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        y_min: corners.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
        x_max: corners
            .iter()
            .map(|p| p.0)
            .fold(f64::NEG_INFINITY, f64::max),
        y_max: corners
            .iter()
            .map(|p| p.1)
            .fold(f64::NEG_INFINITY, f64::max),
    };
    Ok(hull
        .clip(page_w, page_h)
        .filter(|c| c.area() >= MIN_SURVIVING_AREA * hull.area()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentParams {
    pub rotation_min_deg: f64,
    pub rotation_max_deg: f64,
    pub scale_min: f64,
    pub scale_max: f64,
    /// Fraction of each side removed by the crop before zooming back.
    pub crop_min: f64,
    pub crop_max: f64,
    /// Peak displacement of the optical distortion in pixels.
    pub distortion_px: f64,
    /// Largest box-blur kernel side in pixels (1 disables blurring).
    pub blur_max_px: u32,
    pub noise_std: f64,
    pub flip_prob: f64,
    pub seed: u64,
}

impl Default for AugmentParams {
    fn default() -> Self {
        AugmentParams {
            rotation_min_deg: -5.0,
            rotation_max_deg: 5.0,
            scale_min: 0.9,
            scale_max: 1.1,
            crop_min: 0.0,
            crop_max: 0.08,
            distortion_px: 1.5,
            blur_max_px: 3,
            noise_std: 8.0,
            flip_prob: 0.0,
            seed: 0,
        }
    }
}

impl AugmentParams {
    /// Parameters that leave every page unchanged.
    pub fn identity() -> Self {
        AugmentParams {
            rotation_min_deg: 0.0,
            rotation_max_deg: 0.0,
            scale_min: 1.0,
            scale_max: 1.0,
            crop_min: 0.0,
            crop_max: 0.0,
            distortion_px: 0.0,
            blur_max_px: 1,
            noise_std: 0.0,
            flip_prob: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        let all = [
            self.rotation_min_deg,
            self.rotation_max_deg,
            self.scale_min,
            self.scale_max,
            self.crop_min,
            self.crop_max,
            self.distortion_px,
            self.noise_std,
            self.flip_prob,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("augmentation parameters must be finite");
        }
        if self.rotation_min_deg > self.rotation_max_deg
            || self.scale_min > self.scale_max
            || self.crop_min > self.crop_max
        {
            return bad("augmentation ranges must be ordered min <= max");
        }
        if self.scale_min <= 0.0 {
            return bad("scale must be positive");
        }
        if self.crop_min < 0.0 || self.crop_max >= 0.5 {
            return bad("crop fraction must lie in [0, 0.5)");
        }
        if !(0.0..=MAX_DISTORTION_PX).contains(&self.distortion_px) {
            return bad("distortion must lie in [0, 1.9] px");
        }
        if !(0.0..=1.0).contains(&self.flip_prob) {
            return bad("flip probability must lie in [0, 1]");
        }
        if self.noise_std < 0.0 || self.blur_max_px == 0 {
            return bad("noise must be nonnegative and blur at least 1 px");
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let p: AugmentParams = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
        };
        p.validate()?;
        Ok(p)
    }
}

/// Concrete draws for one page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentPlan {
    pub flip: bool,
    pub rotation_deg: f64,
    pub scale: f64,
    pub crop: f64,
    /// Position of the crop window within the removable margin, in [0, 1].
    pub crop_offset: (f64, f64),
    pub distortion_px: f64,
    pub distortion_phase: (f64, f64),
    /// Wavelength of the distortion in pixels.
    pub distortion_period: f64,
    pub blur_px: u32,
    pub noise_std: f64,
    pub noise_seed: u64,
}

impl AugmentPlan {
    pub fn identity() -> Self {
        AugmentPlan {
            flip: false,
            rotation_deg: 0.0,
            scale: 1.0,
            crop: 0.0,
            crop_offset: (0.5, 0.5),
            distortion_px: 0.0,
            distortion_phase: (0.0, 0.0),
            distortion_period: 400.0,
            blur_px: 1,
            noise_std: 0.0,
            noise_seed: 0,
        }
    }

    /// Geometric map from source to output page coordinates.
    pub fn affine(&self, w: f64, h: f64) -> Affine {
        let (cx, cy) = (w / 2.0, h / 2.0);
        let mut t = Affine::IDENTITY;
        if self.flip {
            t = t.then(&Affine::hflip(w));
        }
        t = t
            .then(&Affine::rotation_about(self.rotation_deg, cx, cy))
            .then(&Affine::scaling_about(self.scale, cx, cy));
        if self.crop > 0.0 {
            let keep = 1.0 - 2.0 * self.crop;
            let ox = 2.0 * self.crop * w * self.crop_offset.0;
            let oy = 2.0 * self.crop * h * self.crop_offset.1;
            t = t
                .then(&Affine::translation(-ox, -oy))
                .then(&Affine::scaling(1.0 / keep, 1.0 / keep));
        }
        t
    }

    /// Pixel displacement of the distortion at output position `(x, y)`.
    /// Each axis is capped at `distortion_px / sqrt(2)` so the vector norm
    /// never exceeds `distortion_px`.
    pub fn displacement(&self, x: f64, y: f64) -> (f64, f64) {
        if self.distortion_px == 0.0 {
            return (0.0, 0.0);
        }
        let amp = self.distortion_px / 2f64.sqrt();
        let k = 2.0 * PI / self.distortion_period;
        (
            amp * (k * y + self.distortion_phase.0).sin(),
            amp * (k * x + self.distortion_phase.1).sin(),
        )
    }
}

pub fn sample_plan<R: Rng>(p: &AugmentParams, rng: &mut R) -> AugmentPlan {
    let range = |rng: &mut R, lo: f64, hi: f64| {
        if lo < hi {
            rng.random_range(lo..=hi)
        } else {
            lo
        }
    };
    AugmentPlan {
        flip: p.flip_prob > 0.0 && rng.random_bool(p.flip_prob),
        rotation_deg: range(rng, p.rotation_min_deg, p.rotation_max_deg),
        scale: range(rng, p.scale_min, p.scale_max),
        crop: range(rng, p.crop_min, p.crop_max),
        crop_offset: (rng.random(), rng.random()),
        distortion_px: range(rng, 0.0, p.distortion_px),
        distortion_phase: (
            rng.random_range(0.0..2.0 * PI),
            rng.random_range(0.0..2.0 * PI),
        ),
        distortion_period: rng.random_range(300.0..900.0),
        blur_px: rng.random_range(1..=p.blur_max_px.max(1)),
        noise_std: p.noise_std,
        noise_seed: rng.random(),
    }
}

/// Source coordinates (continuous, pixel centres at `i + 0.5`) feeding
/// output pixel `(x, y)`.
fn source_of(inv: &Affine, plan: &AugmentPlan, x: u32, y: u32) -> (f64, f64) {
    let (ox, oy) = (x as f64 + 0.5, y as f64 + 0.5);
    let (dx, dy) = plan.displacement(ox, oy);
    inv.apply(ox + dx, oy + dy)
}

fn box_blur(img: &PageImage, k: u32) -> PageImage {
    if k <= 1 {
        return img.clone();
    }
    let (w, h) = (img.width() as i64, img.height() as i64);
    let r0 = (k as i64 - 1) / 2;
    let r1 = k as i64 - 1 - r0;
    let src = img.pixels();
    let mut tmp = vec![0f64; src.len()];
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for xx in x - r0..=x + r1 {
                s += src[(y * w + xx.clamp(0, w - 1)) as usize] as f64;
            }
            tmp[(y * w + x) as usize] = s / k as f64;
        }
    }
    let mut out = img.clone();
    let px = out.pixels_mut();
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for yy in y - r0..=y + r1 {
                s += tmp[(yy.clamp(0, h - 1) * w + x) as usize];
            }
            px[(y * w + x) as usize] = (s / k as f64).round().clamp(0.0, 255.0) as u8;
        }
    }
    out
}

/// Applies a plan to a page and its annotation. Boxes follow the affine
/// part only; elements mostly moved off the page are dropped.
pub fn apply_plan(
    image: &PageImage,
    annotation: &PageAnnotation,
    plan: &AugmentPlan,
) -> Result<(PageImage, PageAnnotation)> {
    let (w, h) = (image.width(), image.height());
    let t = plan.affine(w as f64, h as f64);
    let inv = t.invert()?;
    let geometric = plan.flip
        || plan.rotation_deg != 0.0
        || plan.scale != 1.0
        || plan.crop != 0.0
        || plan.distortion_px != 0.0;
    let mut out = if geometric {
        let mut px = Vec::with_capacity(w as usize * h as usize);
        for y in 0..h {
            for x in 0..w {
                let (sx, sy) = source_of(&inv, plan, x, y);
                let v = image.sample_bilinear(sx - 0.5, sy - 0.5, WHITE as f64);
                px.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
        PageImage::from_pixels(w, h, px)?
    } else {
        image.clone()
    };
    out = box_blur(&out, plan.blur_px);
    if plan.noise_std > 0.0 {
        let normal =
            Normal::new(0.0, plan.noise_std).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mut rng = rng_for(plan.noise_seed, "noise", "");
        for p in out.pixels_mut() {
            *p = (*p as f64 + normal.sample(&mut rng))
                .round()
                .clamp(0.0, 255.0) as u8;
        }
    }

    let mut ann = PageAnnotation::new(annotation.page_id.clone(), w, h);
    for e in &annotation.elements {
        if let Some(b) = transform_bbox(&e.bbox, &t, w as f64, h as f64)? {
            ann.elements.push(Element {
                bbox: b,
                label: e.label,
            });
        }
    }
    Ok((out, ann))
}

/// Draws a plan from `params.seed` and the page id, then applies it.
pub fn augment(
    image: &PageImage,
    annotation: &PageAnnotation,
    params: &AugmentParams,
) -> Result<(PageImage, PageAnnotation)> {
    params.validate()?;
    let mut rng = rng_for(params.seed, "augment", &annotation.page_id);
    let plan = sample_plan(params, &mut rng);
    apply_plan(image, annotation, &plan)
}

/// Warps a per-pixel label map with the plan's geometry (nearest
/// neighbour, distortion included).
pub fn warp_labels(
    labels: &[Option<u32>],
    w: u32,
    h: u32,
    plan: &AugmentPlan,
) -> Result<Vec<Option<u32>>> {
    let inv = plan.affine(w as f64, h as f64).invert()?;
    let mut out = Vec::with_capacity(labels.len());
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = source_of(&inv, plan, x, y);
            let (xi, yi) = (sx.floor() as i64, sy.floor() as i64);
            out.push(if xi >= 0 && yi >= 0 && xi < w as i64 && yi < h as i64 {
                labels[(yi * w as i64 + xi) as usize]
            } else {
                None
            });
        }
    }
    Ok(out)
}
