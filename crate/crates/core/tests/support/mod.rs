//! Shared oracles for the integration suites, kept independent of the
//! library's own numeric paths: fixed-grid composite Simpson instead of
//! adaptive refinement, plain central differences instead of the
//! differentiate-under-the-integral machinery.

// Each test binary compiles this module separately and uses its own subset.
#![allow(dead_code)]

/// Composite Simpson on a fixed grid of `panels` panels (2·panels+1 nodes).
pub fn composite_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels * 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Plain two-point central difference.
pub fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Five-point central first difference, O(h⁴).
pub fn central_diff1_o4(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// Five-point central second difference, O(h⁴).
pub fn central_diff2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h))
        / (12.0 * h * h)
}

/// Seven-point central third difference, O(h⁴).
pub fn central_diff3(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (0.125 * f(x - 3.0 * h) - f(x - 2.0 * h) + 1.625 * f(x - h) - 1.625 * f(x + h)
        + f(x + 2.0 * h)
        - 0.125 * f(x + 3.0 * h))
        / (h * h * h)
}

/// Relative-or-absolute agreement: |a − b| ≤ tol·max(1, |b|).
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}
