/// Composite trapezoid for `∫_a^b f ds` from samples at increasing `s`
/// inside `[a, b]`. The stretches between `a` and the first sample and
/// between the last sample and `b` use the linear extrapolation of the two
/// nearest samples (clamped at zero when `nonneg`).
pub fn s_integral(s: &[f64], f: &[f64], a: f64, b: f64, nonneg: bool) -> f64 {
    let n = s.len();
    assert_eq!(n, f.len());
    if n == 0 || b <= a {
        return 0.0;
    }
    if n == 1 {
        return f[0] * (b - a);
    }
    let clamp = |v: f64| if nonneg { v.max(0.0) } else { v };
    let mut acc = 0.0;
    for k in 0..n - 1 {
        acc += 0.5 * (f[k] + f[k + 1]) * (s[k + 1] - s[k]);
    }
    let slope0 = (f[1] - f[0]) / (s[1] - s[0]);
    let fa = clamp(f[0] - slope0 * (s[0] - a));
    acc += 0.5 * (fa + f[0]) * (s[0] - a);
    let slope1 = (f[n - 1] - f[n - 2]) / (s[n - 1] - s[n - 2]);
    let fb = clamp(f[n - 1] + slope1 * (b - s[n - 1]));
    acc += 0.5 * (fb + f[n - 1]) * (b - s[n - 1]);
    acc
}

/// Same closure restricted to `[a, b]` when the samples may extend past it:
/// samples outside are dropped and the ends interpolated.
pub fn s_integral_window(s: &[f64], f: &[f64], a: f64, b: f64, nonneg: bool) -> f64 {
    let inside: Vec<usize> = (0..s.len()).filter(|&k| s[k] >= a && s[k] <= b).collect();
    if inside.len() < 2 {
        return 0.0;
    }
    let ss: Vec<f64> = inside.iter().map(|&k| s[k]).collect();
    let ff: Vec<f64> = inside.iter().map(|&k| f[k]).collect();
    s_integral(&ss, &ff, a, b, nonneg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_integrands_are_exact() {
        let s: Vec<f64> = (1..10).map(|k| k as f64 * 0.1).collect();
        let f: Vec<f64> = s.iter().map(|v| 3.0 - 2.0 * v).collect();
        assert!((s_integral(&s, &f, 0.0, 1.0, true) - 2.0).abs() < 1e-14);
        assert!((s_integral_window(&s, &f, 0.25, 0.75, false) - (1.5 - 0.5)).abs() < 1e-14);
    }
}
