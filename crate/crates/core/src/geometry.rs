//! Planar geometry in wavelength units.
//!
//! Every length in this crate is expressed in carrier wavelengths, so a
//! half-wavelength antenna spacing is `0.5` and the steering phase of a plane
//! wave across an offset `v` along direction `u` is simply `2π (u · v)`.

use std::f64::consts::TAU;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{invalid, Error, Result};

/// Tolerance on `|x² + y² − 1|` for a vector to count as a unit direction.
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// Default spacing of array elements, in wavelengths.
pub const HALF_WAVELENGTH: f64 = 0.5;

/// A point or direction in the x–y plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Unit vector at `angle` radians counter-clockwise from the +x axis.
    pub fn from_angle(angle: f64) -> Self {
        let (sin, cos) = angle.sin_cos();
        Vec2 { x: cos, y: sin }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Angle in `(-π, π]` measured from the +x axis.
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Counter-clockwise rotation by `angle` radians.
    pub fn rotate(self, angle: f64) -> Self {
        let (sin, cos) = angle.sin_cos();
        Vec2 {
            x: cos * self.x - sin * self.y,
            y: sin * self.x + cos * self.y,
        }
    }

    /// Rotation by +90°.
    pub fn perp(self) -> Self {
        Vec2 {
            x: -self.y,
            y: self.x,
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn is_unit(self) -> bool {
        (self.x * self.x + self.y * self.y - 1.0).abs() <= UNIT_TOLERANCE
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, rhs: Vec2) -> Vec2 {
        rhs * self
    }
}

/// A uniform linear array.
///
/// `element_offsets[i]` is the vector from the first element to element `i`;
/// the first offset is always the zero vector. Absolute element positions are
/// `origin + element_offsets[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayLayout {
    pub origin: Vec2,
    pub orientation: Vec2,
    pub spacing: f64,
    pub element_offsets: Vec<Vec2>,
}

impl ArrayLayout {
    pub fn element_count(&self) -> usize {
        self.element_offsets.len()
    }

    /// Absolute position of element `index`.
    pub fn position(&self, index: usize) -> Vec2 {
        self.origin + self.element_offsets[index]
    }

    pub fn positions(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.element_offsets.iter().map(move |&o| self.origin + o)
    }
}

/// Builds a uniform linear array of `count` elements, `spacing` wavelengths
/// apart, laid out from `origin` along the unit vector `orientation`.
pub fn linear_array(
    count: usize,
    spacing: f64,
    orientation: Vec2,
    origin: Vec2,
) -> Result<ArrayLayout> {
    if count == 0 {
        return Err(invalid("element_count", "must be at least 1"));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(invalid(
            "spacing",
            format!("must be positive, got {spacing}"),
        ));
    }
    if !orientation.is_unit() {
        return Err(Error::NonUnitOrientation {
            x: orientation.x,
            y: orientation.y,
        });
    }
    if !origin.is_finite() {
        return Err(invalid("origin", "must be finite"));
    }
    let element_offsets = (0..count)
        .map(|i| orientation * (i as f64 * spacing))
        .collect();
    Ok(ArrayLayout {
        origin,
        orientation,
        spacing,
        element_offsets,
    })
}

/// The exposure limit circle around the base station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitCircle {
    pub radius: f64,
    pub center: Vec2,
    pub sample_count: usize,
}

impl LimitCircle {
    pub const MIN_SAMPLES: usize = 8;

    pub fn new(radius: f64, center: Vec2, sample_count: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(
                "circle_radius",
                format!("must be positive, got {radius}"),
            ));
        }
        if sample_count < Self::MIN_SAMPLES {
            return Err(invalid(
                "circle_samples",
                format!("must be at least {}, got {sample_count}", Self::MIN_SAMPLES),
            ));
        }
        Ok(LimitCircle {
            radius,
            center,
            sample_count,
        })
    }

    /// Point on the circle at `angle` radians.
    pub fn point_at(&self, angle: f64) -> Vec2 {
        self.center + Vec2::from_angle(angle) * self.radius
    }

    /// Angle of the `index`-th uniform sample.
    pub fn sample_angle(&self, index: usize) -> f64 {
        TAU * index as f64 / self.sample_count as f64
    }

    pub fn contains_strictly_outside(&self, p: Vec2) -> bool {
        p.distance(self.center) > self.radius
    }
}

/// Uniform angular samples of the limit circle, starting at angle 0 and
/// proceeding counter-clockwise.
pub fn circle_samples(circle: &LimitCircle) -> Vec<Vec2> {
    circle_points(circle.center, circle.radius, circle.sample_count)
}

/// `count` points evenly spaced in angle on a circle; no minimum density.
pub fn circle_points(center: Vec2, radius: f64, count: usize) -> Vec<Vec2> {
    (0..count)
        .map(|i| center + Vec2::from_angle(TAU * i as f64 / count as f64) * radius)
        .collect()
}

/// Square grid of evaluation points around the limit-circle center.
///
/// Points are stored row-major: row `r` has `y = center.y + (r − n)·step`
/// (rows ascending in y) and column `c` has `x = center.x + (c − n)·step`,
/// where `n = floor(half_extent / step)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrid {
    pub half_extent: f64,
    pub step: f64,
    pub side: usize,
    pub points: Vec<Vec2>,
    pub outside_circle_mask: Vec<bool>,
}

impl ScanGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn outside_count(&self) -> usize {
        self.outside_circle_mask.iter().filter(|&&m| m).count()
    }
}

pub fn scan_grid(half_extent: f64, step: f64, circle: &LimitCircle) -> Result<ScanGrid> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(invalid(
            "grid_step",
            format!("must be positive, got {step}"),
        ));
    }
    if !(half_extent >= step && half_extent.is_finite()) {
        return Err(invalid(
            "grid_half_extent",
            format!("must be at least the grid step ({step}), got {half_extent}"),
        ));
    }
    // Guard against 700/5 landing a hair below an integer.
    let n = (half_extent / step + 1e-9).floor() as i64;
    let side = (2 * n + 1) as usize;
    let mut points = Vec::with_capacity(side * side);
    for row in -n..=n {
        for col in -n..=n {
            points.push(circle.center + Vec2::new(col as f64 * step, row as f64 * step));
        }
    }
    let outside_circle_mask = points
        .iter()
        .map(|&p| circle.contains_strictly_outside(p))
        .collect();
    Ok(ScanGrid {
        half_extent,
        step,
        side,
        points,
        outside_circle_mask,
    })
}
