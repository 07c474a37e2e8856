//! Small planar geometry helpers shared by every stage.

use core::f64::consts::{PI, TAU};
use core::ops::{Add, Mul, Neg, Sub};

/// Grid used to store planned waypoints, in metres (2^-10 m, just under 1 mm).
///
/// Waypoints and offsets that are multiples of this quantum, with magnitude
/// below 2^40 m, add and subtract exactly in `f64`.
pub const WAYPOINT_QUANTUM: f64 = 1.0 / 1024.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(self) -> f64 {
        libm::sqrt(self.norm_sq())
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Unit vector, or `None` for (near) zero length.
    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        if n > 1e-12 && n.is_finite() {
            Some(Vec2::new(self.x / n, self.y / n))
        } else {
            None
        }
    }

    /// Left-hand perpendicular in the x-forward, y-right frame: rotating the
    /// heading (1, 0) yields (0, 1), i.e. the lateral "right" axis.
    pub fn lateral(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    /// Snap both components onto the [`WAYPOINT_QUANTUM`] grid.
    pub fn quantized(self) -> Vec2 {
        Vec2::new(quantize(self.x), quantize(self.y))
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
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl From<(f64, f64)> for Vec2 {
    fn from((x, y): (f64, f64)) -> Self {
        Vec2::new(x, y)
    }
}

pub fn quantize(v: f64) -> f64 {
    libm::round(v / WAYPOINT_QUANTUM) * WAYPOINT_QUANTUM
}

/// Wrap an angle into (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let mut w = libm::fmod(a + PI, TAU);
    if w < 0.0 {
        w += TAU;
    }
    let w = w - PI;
    // fmod maps odd multiples of pi onto -pi; the interval is open there.
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}
