//! Oracles shared by the integration tests.

/// Spherical Bessel functions `j_0..=j_n(x)` by Miller's backward recurrence,
/// normalised with `j_0 = sin(x) / x`.
pub fn spherical_bessel(n: usize, x: f64) -> Vec<f64> {
    if x == 0.0 {
        let mut v = vec![0.0; n + 1];
        v[0] = 1.0;
        return v;
    }
    let start = n + 20 + x as usize * 2;
    let mut f = vec![0.0; start + 2];
    f[start] = 1e-30;
    for l in (1..=start).rev() {
        f[l - 1] = (2 * l + 1) as f64 / x * f[l] - f[l + 1];
        if f[l - 1].abs() > 1e250 {
            for v in f.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let scale = (x.sin() / x) / f[0];
    f.truncate(n + 1);
    f.iter().map(|v| v * scale).collect()
}
