//! Composite Gauss–Legendre quadrature.

const NODES: [f64; 5] =
    [-0.906_179_845_938_664, -0.538_469_310_105_683, 0.0, 0.538_469_310_105_683, 0.906_179_845_938_664];
const WEIGHTS: [f64; 5] =
    [0.236_926_885_056_189, 0.478_628_670_499_366, 0.568_888_888_888_889, 0.478_628_670_499_366, 0.236_926_885_056_189];

/// Five-point rule on a single panel.
pub fn gauss5(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    NODES.iter().zip(WEIGHTS.iter()).map(|(x, w)| w * f(m + r * x)).sum::<f64>() * r
}

/// Composite rule with panels no wider than `max_panel`.
pub fn composite(f: impl Fn(f64) -> f64, a: f64, b: f64, max_panel: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let n = ((b - a).abs() / max_panel).ceil().max(1.0) as usize;
    let h = (b - a) / n as f64;
    (0..n).map(|k| gauss5(&f, a + k as f64 * h, a + (k + 1) as f64 * h)).sum()
}
