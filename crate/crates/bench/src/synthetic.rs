//! Small synthetic functions used to illustrate relaxation.

/// One-dimensional function on `[0, 10]` with a wide valley holding the
/// global minimum near `x = 8`, a shallower local minimum near `x = 3.2`,
/// and steep variations near `x = 0` that dominate its range.
pub fn steep(x: f64) -> f64 {
    0.1 * (x - 8.0).powi(2) - 1.5 * (-2.0 * (x - 3.0).powi(2)).exp() + 500.0 * (-3.0 * x).exp()
}

pub const STEEP_DOMAIN: (f64, f64) = (0.0, 10.0);

/// Two-dimensional function on `[0, 1]²` whose values cluster around
/// `±10`: a smoothed step across the line `x₁ + x₂ = 1` plus a gentle
/// tilt.
pub fn bimodal(x: &[f64]) -> f64 {
    10.0 * (12.0 * (x[0] + x[1] - 1.0)).tanh() + 0.5 * (x[0] - x[1])
}
