use crate::math;

/// Smallest argument used when differentiating `sqrt`, whose slope is unbounded at zero.
pub(crate) const SQRT_FLOOR: f64 = 1e-12;

/// One-dimensional concave pieces of a separable objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarTerm {
    /// `w·x` (any sign of `w`).
    Linear { weight: f64 },
    /// `w·sqrt(x)`.
    Sqrt { weight: f64 },
    /// `w·ln(1 + x)`.
    Log1p { weight: f64 },
    /// `w·(1 − (x − a)²)`.
    Quadratic { weight: f64, center: f64 },
}

impl ScalarTerm {
    pub fn is_concave(&self) -> bool {
        match *self {
            ScalarTerm::Linear { weight } => weight.is_finite(),
            ScalarTerm::Sqrt { weight } | ScalarTerm::Log1p { weight } | ScalarTerm::Quadratic { weight, .. } => {
                weight >= 0.0 && weight.is_finite()
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            ScalarTerm::Linear { weight } => weight * x,
            ScalarTerm::Sqrt { weight } => weight * math::sqrt(x),
            ScalarTerm::Log1p { weight } => weight * math::ln(1.0 + x),
            ScalarTerm::Quadratic { weight, center } => weight * (1.0 - (x - center) * (x - center)),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            ScalarTerm::Linear { weight } => weight,
            ScalarTerm::Sqrt { weight } => weight / (2.0 * math::sqrt(x.max(SQRT_FLOOR))),
            ScalarTerm::Log1p { weight } => weight / (1.0 + x),
            ScalarTerm::Quadratic { weight, center } => -2.0 * weight * (x - center),
        }
    }

    /// `sup |φ'|` over `[0, 1]`.
    pub fn max_slope(&self) -> f64 {
        match *self {
            ScalarTerm::Linear { weight } => math::abs(weight),
            ScalarTerm::Sqrt { weight } => {
                if weight == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ScalarTerm::Log1p { weight } => weight,
            ScalarTerm::Quadratic { weight, center } => 2.0 * weight * f64::max(math::abs(center), math::abs(1.0 - center)),
        }
    }

    /// `sup |φ''|` over `[0, 1]`, or `None` if unbounded.
    pub fn curvature(&self) -> Option<f64> {
        match *self {
            ScalarTerm::Linear { .. } => Some(0.0),
            ScalarTerm::Sqrt { weight } => (weight == 0.0).then_some(0.0),
            ScalarTerm::Log1p { weight } => Some(weight),
            ScalarTerm::Quadratic { weight, .. } => Some(2.0 * weight),
        }
    }

    /// Maximizer over `[0, 1]` of `y·θ + φ(y)`, the gradient of the conjugate.
    pub fn conjugate_argmax(&self, theta: f64) -> f64 {
        let y = match *self {
            ScalarTerm::Linear { weight } => {
                if theta + weight > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ScalarTerm::Sqrt { weight } => {
                if theta >= 0.0 {
                    1.0
                } else {
                    weight * weight / (4.0 * theta * theta)
                }
            }
            ScalarTerm::Log1p { weight } => {
                if theta >= 0.0 {
                    1.0
                } else {
                    -weight / theta - 1.0
                }
            }
            ScalarTerm::Quadratic { weight, center } => {
                if weight == 0.0 {
                    if theta > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    center + theta / (2.0 * weight)
                }
            }
        };
        math::clamp01(y)
    }

    /// `max_{y ∈ [0,1]} y·θ + φ(y)`.
    pub fn conjugate(&self, theta: f64) -> f64 {
        let y = self.conjugate_argmax(theta);
        y * theta + self.value(y)
    }

    /// Maximizer of `φ` over `[lo, hi]`.
    pub fn argmax_on(&self, lo: f64, hi: f64) -> f64 {
        match *self {
            ScalarTerm::Linear { weight } => {
                if weight > 0.0 {
                    hi
                } else {
                    lo
                }
            }
            ScalarTerm::Sqrt { weight } | ScalarTerm::Log1p { weight } => {
                if weight > 0.0 {
                    hi
                } else {
                    lo
                }
            }
            ScalarTerm::Quadratic { center, .. } => center.clamp(lo, hi),
        }
    }
}
