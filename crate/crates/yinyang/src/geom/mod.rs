//! Planar vector algebra, sampled curves, discrete differential geometry
//! and polygon area operations. Everything here is generic over the scalar
//! type; the crate root exports `f64` aliases which the rest of the crate
//! uses.

mod area;
mod curve;

pub use area::{
    enclosed_area, intersection_area, is_simple, self_intersection_point,
    symmetric_difference_area,
};
pub use curve::{compute_geometry, resample_by_arclength, CurveGeometry, SampledCurve};

use num_traits::{Float, FloatConst, FromPrimitive};
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

/// Scalar type for the geometric kernel: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + AddAssign + SubAssign + Debug + Default + 'static
{
    /// Shorthand for lossy conversion of an `f64` constant.
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("consecutive curve points coincide (separation < 1e-12) at index {0}")]
    DegenerateSegment(usize),
    #[error("operation requires a closed curve")]
    OpenCurve,
    #[error("curve has too few points: got {got}, need {need}")]
    TooFewPoints { got: usize, need: usize },
    #[error("non-finite coordinate in input")]
    NonFinite,
    #[error("parameter values must be strictly monotone")]
    NonMonotoneParams,
    #[error("polygon self-intersects near ({0}, {1})")]
    SelfIntersecting(f64, f64),
}

use thiserror::Error;

/// Point / vector in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Vec2 { x, y }
    }

    pub fn zero() -> Self {
        Vec2 {
            x: T::zero(),
            y: T::zero(),
        }
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product.
    pub fn cross(self, other: Self) -> T {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    /// Counterclockwise rotation by pi/2 (the matrix J).
    pub fn rot90(self) -> Self {
        Vec2 {
            x: -self.y,
            y: self.x,
        }
    }

    pub fn scale(self, s: T) -> Self {
        Vec2 {
            x: self.x * s,
            y: self.y * s,
        }
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        self.scale(T::one() / n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Polar angle in (-pi, pi].
    pub fn angle(self) -> T {
        self.y.atan2(self.x)
    }
}

impl<T: Real> Add for Vec2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<T: Real> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<T: Real> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Vec2::new(-self.x, -self.y)
    }
}

impl<T: Real> Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

impl<T: Real> Div<T> for Vec2<T> {
    type Output = Self;
    fn div(self, s: T) -> Self {
        Vec2::new(self.x / s, self.y / s)
    }
}

/// Counterclockwise rotation of `v` by `angle`: e^{angle J} v.
pub fn rotate<T: Real>(v: Vec2<T>, angle: T) -> Vec2<T> {
    let (s, c) = angle.sin_cos();
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rotate_quarter_turns() {
        let e1 = Vec2::new(1.0f64, 0.0);
        let e2 = Vec2::new(0.0f64, 1.0);
        let r = rotate(e1, std::f64::consts::FRAC_PI_2);
        assert_abs_diff_eq!(r.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.y, 1.0, epsilon = 1e-15);
        let r = rotate(e2, std::f64::consts::FRAC_PI_2);
        assert_abs_diff_eq!(r.x, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.y, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rotate_identity() {
        let v = Vec2::new(0.3f64, -1.7);
        let r = rotate(v, 0.0);
        assert_eq!(r, v);
    }

    #[test]
    fn rotate_f32_norm_preserved() {
        let v = Vec2::new(3.0f32, 4.0);
        let r = rotate(v, 1.234);
        assert_abs_diff_eq!(r.norm(), 5.0, epsilon = 1e-5);
    }
}
