/// An odd, bounded, increasing response function `b` with up to three derivatives.
///
/// Only [`Response::eval`] is required; the derivatives default to central
/// finite differences of the next-lower derivative.
pub trait Response {
    fn eval(&self, z: f64) -> f64;

    fn deriv1(&self, z: f64) -> f64 {
        let h = 1e-5;
        (self.eval(z + h) - self.eval(z - h)) / (2.0 * h)
    }

    fn deriv2(&self, z: f64) -> f64 {
        let h = 1e-4;
        (self.eval(z + h) - 2.0 * self.eval(z) + self.eval(z - h)) / (h * h)
    }

    fn deriv3(&self, z: f64) -> f64 {
        let h = 1e-3;
        (self.eval(z + 2.0 * h) - 2.0 * self.eval(z + h) + 2.0 * self.eval(z - h)
            - self.eval(z - 2.0 * h))
            / (2.0 * h * h * h)
    }
}

/// `b(z) = tanh(nu * z)` with closed-form derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatingFunction {
    nu: f64,
}

impl RatingFunction {
    /// Panics unless `nu` is positive and finite.
    pub fn new(nu: f64) -> Self {
        assert!(
            nu.is_finite() && nu > 0.0,
            "nu must be positive and finite, got {nu}"
        );
        Self { nu }
    }

    pub fn try_new(nu: f64) -> crate::Result<Self> {
        if nu.is_finite() && nu > 0.0 {
            Ok(Self { nu })
        } else {
            Err(crate::Error::Domain(format!(
                "nu must be positive and finite, got {nu}"
            )))
        }
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    // sech^2 via cosh so that large |z| underflows to 0 instead of cancelling in 1 - tanh^2
    fn sech2(&self, z: f64) -> f64 {
        let c = (self.nu * z).cosh();
        1.0 / (c * c)
    }
}

impl Response for RatingFunction {
    fn eval(&self, z: f64) -> f64 {
        (self.nu * z).tanh()
    }

    fn deriv1(&self, z: f64) -> f64 {
        self.nu * self.sech2(z)
    }

    fn deriv2(&self, z: f64) -> f64 {
        let t = (self.nu * z).tanh();
        -2.0 * self.nu * self.nu * t * self.sech2(z)
    }

    fn deriv3(&self, z: f64) -> f64 {
        let t = (self.nu * z).tanh();
        let s2 = self.sech2(z);
        -2.0 * self.nu.powi(3) * s2 * (s2 - 2.0 * t * t)
    }
}

/// Wraps an arbitrary closure; derivatives come from finite differences.
pub struct FnResponse<F>(pub F);

impl<F: Fn(f64) -> f64> Response for FnResponse<F> {
    fn eval(&self, z: f64) -> f64 {
        (self.0)(z)
    }
}

impl<R: Response + ?Sized> Response for &R {
    fn eval(&self, z: f64) -> f64 {
        (**self).eval(z)
    }
    fn deriv1(&self, z: f64) -> f64 {
        (**self).deriv1(z)
    }
    fn deriv2(&self, z: f64) -> f64 {
        (**self).deriv2(z)
    }
    fn deriv3(&self, z: f64) -> f64 {
        (**self).deriv3(z)
    }
}
