//! Closed forms at half-integer arguments.

use std::f64::consts::PI;

/// `Gamma(k / 2)` for `k >= 1`, by the recurrence `Gamma(s + 1) = s Gamma(s)`
/// from `Gamma(1/2) = sqrt(pi)` or `Gamma(1) = 1`.
pub fn gamma_half(k: u32) -> f64 {
    assert!(k >= 1, "gamma_half needs k >= 1");
    let (mut s, mut g) = if k.is_multiple_of(2) { (1.0, 1.0) } else { (0.5, PI.sqrt()) };
    while s < k as f64 / 2.0 {
        g *= s;
        s += 1.0;
    }
    g
}

/// Volume of the unit ball in `d` dimensions.
pub fn unit_ball_volume(d: u32) -> f64 {
    PI.powf(d as f64 / 2.0) / gamma_half(d + 2)
}
