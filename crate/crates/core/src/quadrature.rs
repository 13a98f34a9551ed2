//! Composite Simpson rule on uniform panels.

use num_complex::Complex64;

/// Node count for `panels` Simpson panels (each panel carries a midpoint).
pub fn simpson_node_count(panels: usize) -> usize {
    2 * panels + 1
}

/// Equispaced nodes on `[a, b]` matching [`simpson_weights`].
pub fn simpson_nodes(a: f64, b: f64, panels: usize) -> Vec<f64> {
    let m = 2 * panels;
    let h = (b - a) / m as f64;
    (0..=m).map(|k| if k == m { b } else { a + h * k as f64 }).collect()
}

/// Simpson weights for `panels` panels of width `2h` on `[a, b]`.
pub fn simpson_weights(a: f64, b: f64, panels: usize) -> Vec<f64> {
    assert!(panels > 0, "Simpson rule needs at least one panel");
    let m = 2 * panels;
    let h = (b - a) / m as f64;
    (0..=m)
        .map(|k| {
            let w = if k == 0 || k == m {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}

pub fn simpson<F>(mut f: F, a: f64, b: f64, panels: usize) -> Complex64
where
    F: FnMut(f64) -> Complex64,
{
    simpson_nodes(a, b, panels)
        .into_iter()
        .zip(simpson_weights(a, b, panels))
        .map(|(x, w)| f(x) * w)
        .sum()
}

pub fn simpson_real<F>(mut f: F, a: f64, b: f64, panels: usize) -> f64
where
    F: FnMut(f64) -> f64,
{
    simpson_nodes(a, b, panels)
        .into_iter()
        .zip(simpson_weights(a, b, panels))
        .map(|(x, w)| f(x) * w)
        .sum()
}
