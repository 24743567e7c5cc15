use num_complex::{Complex64, ComplexFloat};

/// Field the steppers and shape formulas are generic over: `f64` for
/// integration, `Complex64` for exact amplification factors.
pub trait Scalar: ComplexFloat<Real = f64> + From<f64> + Send + Sync + 'static {
    /// Radicand the real stepper must refuse (`rho <= floor`). Complex
    /// radicands are never rejected here: the principal root is used.
    fn below_floor(self, floor: f64) -> bool;

    /// Embed a real number.
    #[inline]
    fn lift(x: f64) -> Self {
        <Self as From<f64>>::from(x)
    }
}

impl Scalar for f64 {
    fn below_floor(self, floor: f64) -> bool {
        self <= floor
    }
}

impl Scalar for Complex64 {
    fn below_floor(self, _floor: f64) -> bool {
        false
    }
}
