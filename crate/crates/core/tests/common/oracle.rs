//! Brute-force reference for the steady-state phase plane.
//!
//! Fixed-step classical RK4 with h = 1e-5 and plain bisection. Shares no
//! code with the library so the two can be compared.

#![allow(dead_code)]

pub const H: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Returns,
    Escapes,
    Decays,
    Budget,
}

#[derive(Clone, Copy, Debug)]
pub struct Oracle {
    pub v0: f64,
    pub d: f64,
    pub h: f64,
    pub s_max: f64,
    pub l_floor: f64,
}

impl Oracle {
    pub fn unit() -> Self {
        Self { v0: 1.0, d: 1.0, h: H, s_max: 400.0, l_floor: -25.0 }
    }

    fn rhs(&self, omega: f64, l: f64, v: f64) -> (f64, f64) {
        let k = l.exp();
        let g = k * k - self.v0 / self.d * k;
        (v, -g + omega / self.d / k * v)
    }

    pub fn energy(&self, l: f64, v: f64) -> f64 {
        let k = l.exp();
        0.5 * v * v + 0.5 * k * k - self.v0 / self.d * k
    }

    pub fn step(&self, omega: f64, l: f64, v: f64, h: f64) -> (f64, f64) {
        let (a1, b1) = self.rhs(omega, l, v);
        let (a2, b2) = self.rhs(omega, l + 0.5 * h * a1, v + 0.5 * h * b1);
        let (a3, b3) = self.rhs(omega, l + 0.5 * h * a2, v + 0.5 * h * b2);
        let (a4, b4) = self.rhs(omega, l + h * a3, v + h * b3);
        (l + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4), v + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4))
    }

    /// First terminal event of the forward orbit from (l, v).
    pub fn classify(&self, omega: f64, l: f64, v: f64) -> Kind {
        if omega > 0.0 && self.energy(l, v) >= 0.0 {
            return Kind::Escapes;
        }
        let (mut l, mut v) = (l, v);
        let mut sign = if v != 0.0 { v.signum() } else { 0.0 };
        let n = (self.s_max / self.h) as usize;
        for _ in 0..n {
            let (nl, nv) = self.step(omega, l, v, self.h);
            l = nl;
            v = nv;
            if omega > 0.0 && self.energy(l, v) >= 0.0 {
                return Kind::Escapes;
            }
            if v != 0.0 {
                if sign != 0.0 && v.signum() != sign {
                    return Kind::Returns;
                }
                sign = v.signum();
            }
            if l <= self.l_floor && v < 0.0 {
                return Kind::Decays;
            }
        }
        Kind::Budget
    }

    /// Bisection for the separatrix intercept inside [lo, hi].
    pub fn l_star_in(&self, omega: f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            match self.classify(omega, mid, 0.0) {
                Kind::Escapes => hi = mid,
                _ => lo = mid,
            }
        }
        0.5 * (lo + hi)
    }

    pub fn l_star(&self, omega: f64, tol: f64) -> f64 {
        let lf = (self.v0 / self.d).ln();
        let lz = (2.0 * self.v0 / self.d).ln();
        self.l_star_in(omega, lf, lz, tol)
    }

    /// v where the forward tail from (l_star, 0) first reaches l = target.
    pub fn tail_value(&self, omega: f64, l_star: f64, target: f64) -> f64 {
        let (mut l, mut v) = (l_star, 0.0);
        loop {
            let (nl, nv) = self.step(omega, l, v, self.h);
            if nl <= target {
                // land exactly on the level with a shortened step
                let mut h = (target - l) / v;
                for _ in 0..3 {
                    let (tl, tv) = self.step(omega, l, v, h);
                    h -= (tl - target) / tv;
                }
                return self.step(omega, l, v, h).1;
            }
            l = nl;
            v = nv;
        }
    }

    /// Two-level bisection for omega with i = 0 and the tip on the tail.
    /// `(w_lo, w_hi)` must bracket the root.
    pub fn omega_i0(&self, l0: f64, g: f64, mut w_lo: f64, mut w_hi: f64, rel: f64) -> f64 {
        let lf = (self.v0 / self.d).ln();
        let lz = (2.0 * self.v0 / self.d).ln();
        let tol_l = 1e-10;
        let mut ls_lo = self.l_star_in(w_lo, lf, lz, tol_l);
        let mut ls_hi = self.l_star_in(w_hi, lf, lz, tol_l);
        while w_hi - w_lo > rel * w_hi {
            let w = 0.5 * (w_lo + w_hi);
            let ls = self.l_star_in(w, ls_hi - 1e-9, ls_lo + 1e-9, tol_l);
            let f = self.tail_value(w, ls, l0) - (-w / self.d * (-l0).exp() + g / self.d);
            if f > 0.0 {
                w_hi = w;
                ls_hi = ls;
            } else {
                w_lo = w;
                ls_lo = ls;
            }
        }
        0.5 * (w_lo + w_hi)
    }
}
