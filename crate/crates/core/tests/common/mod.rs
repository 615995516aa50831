#![allow(dead_code)]

pub mod golden;
pub mod oracle;

/// Seven-point Gauss–Legendre rule on one interval.
pub fn gauss(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const X: [f64; 4] = [0.0, 0.405_845_151_377_397_2, 0.741_531_185_599_394_4, 0.949_107_912_342_758_5];
    const W: [f64; 4] =
        [0.417_959_183_673_469_4, 0.381_830_050_505_118_9, 0.279_705_391_489_276_7, 0.129_484_966_168_869_7];
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    let mut acc = W[0] * f(m);
    for k in 1..4 {
        acc += W[k] * (f(m - r * X[k]) + f(m + r * X[k]));
    }
    acc * r
}
