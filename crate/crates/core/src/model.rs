//! Medium, phase-plane state and the scalar functions of the steady problem.
//!
//! The steady curvature profile is written in log form, `l = ln κ`, with
//! `v = dl/ds`:
//!
//! ```text
//! l' = v
//! v' = -g(l) + (ω/D) e^{-l} v,      g(l) = e^{2l} - (V0/D) e^{l}
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `-l` for which `e^{-l}` is evaluated.
pub const NEG_EXP_LIMIT: f64 = 700.0;
/// Largest `l` for which `e^{2l}` is evaluated.
pub const POS_EXP_LIMIT: f64 = 350.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Medium {
    pub v0: f64,
    pub d: f64,
}

impl Medium {
    pub fn new(v0: f64, d: f64) -> Result<Self> {
        if !(v0.is_finite() && v0 > 0.0) {
            return Err(Error::invalid(format!("v0 must be finite and positive, got {v0}")));
        }
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::invalid(format!("d must be finite and positive, got {d}")));
        }
        Ok(Self { v0, d })
    }

    pub fn unit() -> Self {
        Self { v0: 1.0, d: 1.0 }
    }

    /// `V0/D`, the focus curvature.
    pub fn ratio(&self) -> f64 {
        self.v0 / self.d
    }

    /// Log-curvature of the equilibrium, `ln(V0/D)`.
    pub fn l_focus(&self) -> f64 {
        self.ratio().ln()
    }

    /// Where the level set `E = 0` meets the axis, `ln(2 V0/D)`.
    pub fn l_zero(&self) -> f64 {
        (2.0 * self.ratio()).ln()
    }

    /// Minimiser of `g`, `ln(V0/(2D))`.
    pub fn l_gmin(&self) -> f64 {
        (0.5 * self.ratio()).ln()
    }

    /// Upper end of the rotating window, `2 V0²/D`.
    pub fn omega_max(&self) -> f64 {
        2.0 * self.v0 * self.v0 / self.d
    }

    /// Minimum of the energy, attained at the focus.
    pub fn energy_floor(&self) -> f64 {
        -0.5 * self.ratio() * self.ratio()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        Medium::new(self.v0, self.d).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub l: f64,
    pub v: f64,
    pub s: f64,
}

impl PhaseState {
    pub fn new(l: f64, v: f64) -> Self {
        Self { l, v, s: 0.0 }
    }

    pub fn at(s: f64, l: f64, v: f64) -> Self {
        Self { l, v, s }
    }

    pub fn kappa(&self) -> f64 {
        self.l.exp()
    }

    pub fn is_valid(&self) -> bool {
        self.l.is_finite() && self.v.is_finite() && self.s.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TipData {
    pub l0: f64,
    pub g: f64,
    pub osc_index: u32,
}

impl TipData {
    pub fn new(l0: f64, g: f64, osc_index: u32) -> Result<Self> {
        if !l0.is_finite() {
            return Err(Error::invalid(format!("l0 must be finite, got {l0}")));
        }
        if !g.is_finite() {
            return Err(Error::invalid(format!("g must be finite, got {g}")));
        }
        Ok(Self { l0, g, osc_index })
    }

    pub fn from_kappa(kappa0: f64, g: f64, osc_index: u32) -> Result<Self> {
        if !(kappa0.is_finite() && kappa0 > 0.0) {
            return Err(Error::invalid(format!("kappa0 must be positive, got {kappa0}")));
        }
        Self::new(kappa0.ln(), g, osc_index)
    }

    pub fn kappa0(&self) -> f64 {
        self.l0.exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocusAnalysis {
    pub l_focus: f64,
    pub trace: f64,
    pub det: f64,
    pub eig_real: f64,
    pub eig_imag: f64,
    pub unstable_focus: bool,
}

impl FocusAnalysis {
    /// Factor by which the distance of consecutive same-side axis crossings
    /// to the focus shrinks per half turn in backward time.
    pub fn half_turn_ratio(&self) -> Option<f64> {
        if self.eig_imag > 0.0 {
            Some((-std::f64::consts::PI * self.trace / (2.0 * self.eig_imag)).exp())
        } else {
            None
        }
    }
}

fn exp_checked(x: f64, l: f64) -> Result<f64> {
    if x > NEG_EXP_LIMIT || !x.is_finite() {
        return Err(Error::Range { l });
    }
    Ok(x.exp())
}

pub fn g_of(l: f64, medium: &Medium) -> f64 {
    let k = l.exp();
    k * k - medium.ratio() * k
}

/// `g'(l) = 2e^{2l} - (V0/D)e^{l}`.
pub fn g_prime(l: f64, medium: &Medium) -> f64 {
    let k = l.exp();
    2.0 * k * k - medium.ratio() * k
}

pub fn energy(state: &PhaseState, medium: &Medium) -> f64 {
    energy_lv(state.l, state.v, medium)
}

pub fn energy_lv(l: f64, v: f64, medium: &Medium) -> f64 {
    let k = l.exp();
    0.5 * v * v + k * (0.5 * k - medium.ratio())
}

/// Closed form of `dE/ds` along an orbit.
pub fn energy_rate(state: &PhaseState, omega: f64, medium: &Medium) -> f64 {
    omega / medium.d * (-state.l).exp() * state.v * state.v
}

pub fn vector_field(state: &PhaseState, omega: f64, medium: &Medium) -> Result<(f64, f64)> {
    let [a, b] = field(state.l, state.v, omega, medium)?;
    Ok((a, b))
}

#[inline]
pub(crate) fn field(l: f64, v: f64, omega: f64, medium: &Medium) -> Result<[f64; 2]> {
    if l > POS_EXP_LIMIT || !l.is_finite() || !v.is_finite() {
        return Err(Error::Range { l });
    }
    let k = l.exp();
    let g = k * k - medium.ratio() * k;
    let damp = if omega == 0.0 { 0.0 } else { omega / medium.d * exp_checked(-l, l)? };
    Ok([v, -g + damp * v])
}

pub fn intercept(l: f64, omega: f64, g_tip: f64, medium: &Medium) -> f64 {
    -omega / medium.d * (-l).exp() + g_tip / medium.d
}

pub fn focus_analysis(omega: f64, medium: &Medium) -> FocusAnalysis {
    let trace = omega / medium.v0;
    let det = medium.ratio() * medium.ratio();
    let disc = trace * trace - 4.0 * det;
    let (eig_real, eig_imag) =
        if disc < 0.0 { (0.5 * trace, 0.5 * (-disc).sqrt()) } else { (0.5 * (trace + disc.sqrt()), 0.0) };
    FocusAnalysis {
        l_focus: medium.l_focus(),
        trace,
        det,
        eig_real,
        eig_imag,
        unstable_focus: trace > 0.0 && disc < 0.0,
    }
}

/// Signed parameters of a steady solution.
///
/// `orientation = +1` is the positive-curvature convention the solver works
/// in; `-1` is its mirror image with κ, ω and V0 negated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyFrame {
    pub v0: f64,
    pub d: f64,
    pub omega: f64,
    pub orientation: f64,
}

impl SteadyFrame {
    pub fn positive(medium: &Medium, omega: f64) -> Self {
        Self { v0: medium.v0, d: medium.d, omega, orientation: 1.0 }
    }

    pub fn kappa(&self, l: f64) -> f64 {
        self.orientation * l.exp()
    }
}

pub fn sign_symmetry(frame: &SteadyFrame) -> SteadyFrame {
    SteadyFrame { v0: -frame.v0, d: frame.d, omega: -frame.omega, orientation: -frame.orientation }
}

/// Residual of `-Dκ'' + κ²(V0 - Dκ) + (κ'/κ)(ω + Dκ') = 0`, with the
/// derivatives obtained from `(l, v, v')`.
pub fn steady_residual(frame: &SteadyFrame, l: f64, v: f64, dv: f64) -> f64 {
    let k = frame.kappa(l);
    let k1 = k * v;
    let k2 = k * (v * v + dv);
    -frame.d * k2 + k * k * (frame.v0 - frame.d * k) + k1 / k * (frame.omega + frame.d * k1)
}
