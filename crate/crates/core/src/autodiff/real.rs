use std::ops::{Add, Div, Mul, Neg, Sub};

use super::Var;

/// Scalar arithmetic shared by plain `f64` and taped [`Var`]s.
///
/// Kinematics and network code is written once against this trait and runs
/// either as a plain evaluation or as a recorded, differentiable one.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn value(self) -> f64;
    /// A constant living in the same context as `self`.
    fn constant_like(self, c: f64) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tanh(self) -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn square(self) -> Self;
    fn atan2(self, x: Self) -> Self;
}

impl Real for f64 {
    fn value(self) -> f64 {
        self
    }
    fn constant_like(self, c: f64) -> Self {
        c
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn square(self) -> Self {
        self * self
    }
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
}

impl<'t> Real for Var<'t> {
    fn value(self) -> f64 {
        Var::value(self)
    }
    fn constant_like(self, c: f64) -> Self {
        self.tape().constant(c)
    }
    fn sin(self) -> Self {
        Var::sin(self)
    }
    fn cos(self) -> Self {
        Var::cos(self)
    }
    fn tanh(self) -> Self {
        Var::tanh(self)
    }
    fn exp(self) -> Self {
        Var::exp(self)
    }
    fn sqrt(self) -> Self {
        Var::sqrt(self)
    }
    fn square(self) -> Self {
        Var::square(self)
    }
    fn atan2(self, x: Self) -> Self {
        Var::atan2(self, x)
    }
}

/// Sum of a non-empty slice.
pub fn sum<T: Real>(xs: &[T]) -> T {
    let mut it = xs.iter().copied();
    let first = it.next().expect("sum of empty slice");
    it.fold(first, |acc, x| acc + x)
}

/// Euclidean norm with a tiny floor under the root, so the derivative stays
/// finite when the vector vanishes.
pub fn smooth_norm<T: Real>(xs: &[T]) -> T {
    let s = sum(&xs.iter().map(|&x| x.square()).collect::<Vec<_>>());
    (s + 1e-24).sqrt()
}
