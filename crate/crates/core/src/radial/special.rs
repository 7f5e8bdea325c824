use std::f64::consts::PI;

/// Γ(x) for positive integer or half-integer `x`, by exact recursion from
/// Γ(1) = 1 and Γ(1/2) = √π.
pub fn gamma_half_integer(x: f64) -> f64 {
    let twice = (2.0 * x).round();
    assert!(
        twice >= 1.0 && (2.0 * x - twice).abs() < 1e-12,
        "gamma_half_integer needs a positive integer or half-integer, got {x}"
    );
    let (mut acc, mut y) = if twice as i64 % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    while y < x - 0.25 {
        acc *= y;
        y += 1.0;
    }
    acc
}

/// Surface measure of the unit sphere S^{n-1} ⊂ ℝⁿ, `2π^{n/2} / Γ(n/2)`.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half_integer(n as f64 / 2.0)
}

/// Volume of the unit ball in ℝⁿ.
pub fn ball_volume(n: usize) -> f64 {
    sphere_area(n) / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_values() {
        assert_eq!(gamma_half_integer(1.0), 1.0);
        assert_eq!(gamma_half_integer(5.0), 24.0);
        assert!((gamma_half_integer(0.5) - PI.sqrt()).abs() < 1e-15);
        assert!((gamma_half_integer(2.5) - 0.75 * PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-13);
    }
}
