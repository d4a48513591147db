use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the models compute in.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }

    /// Tolerance for "sums to one" checks: 1e-9, or a few ulps for narrow types.
    fn stochastic_tol() -> Self {
        Self::of(1e-9).max(Self::epsilon() * Self::of(64.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}
