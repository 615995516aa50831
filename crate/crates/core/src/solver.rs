//! Outer shooting level: the rotating frequency for given tip data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Profile;
use crate::integrator::{self, Direction, IntegrationControls, OutcomeKind};
use crate::model::{intercept, Medium, PhaseState, TipData};
use crate::quadrature::gauss5;
use crate::separatrix::SeparatrixOrbit;

pub const DEFAULT_TOL_OMEGA: f64 = 1e-8;
/// Bisection is carried at least this far regardless of `tol_omega`.
const POLISH_TOL: f64 = 1e-12;
/// Lowest frequency probed, relative to `2 V0²/D`.
const OMEGA_FLOOR: f64 = 1e-6;
/// Highest frequency probed, relative to `2 V0²/D`.
const OMEGA_CEIL: f64 = 1.0 - 1e-9;
const UPPER_SCAN: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveCase {
    RotatingGrowing,
    Nonrotating,
    RotatingContracting,
    NoSolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveRequest {
    pub medium: Medium,
    pub tip: TipData,
    pub tol_omega: f64,
    pub controls: IntegrationControls,
}

impl SolveRequest {
    pub fn new(medium: Medium, tip: TipData) -> Self {
        Self { medium, tip, tol_omega: DEFAULT_TOL_OMEGA, controls: IntegrationControls::default() }
    }

    pub fn validate(&self) -> Result<()> {
        self.medium.validate()?;
        TipData::new(self.tip.l0, self.tip.g, self.tip.osc_index)?;
        if !(self.tol_omega > 0.0 && self.tol_omega < 1.0) {
            return Err(Error::invalid(format!("tol_omega must lie in (0, 1), got {}", self.tol_omega)));
        }
        self.controls.validate(&self.medium)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub case: SolveCase,
    pub omega: f64,
    pub crossing_count: u32,
    /// `|ṽ - I|` at the returned frequency.
    pub residual: f64,
    pub feasible_window: Option<(f64, f64)>,
    /// Whether the tip starts on an upper-half-plane arc (`v(0) > 0`).
    pub upper_start: bool,
    /// Frequencies where the arc value is defined, as probed.
    pub definedness: Option<(f64, f64)>,
    /// Smallest and largest `F` seen while searching for a sign change.
    pub f_range: Option<(f64, f64)>,
    pub diagnostic: Option<String>,
    #[serde(skip)]
    pub profile: Option<Profile>,
}

impl SolveResult {
    fn no_solution(msg: impl Into<String>, window: Option<(f64, f64)>) -> Self {
        Self {
            case: SolveCase::NoSolution,
            omega: f64::NAN,
            crossing_count: 0,
            residual: f64::NAN,
            feasible_window: window,
            upper_start: false,
            definedness: None,
            f_range: None,
            diagnostic: Some(msg.into()),
            profile: None,
        }
    }
}

/// Tip curvatures admitting a rotating solution for tip velocity `g`.
/// `None` when no tip curvature works; the lower end is `-∞` for `g ≥ 0`.
pub fn feasibility_window(g_tip: f64, medium: &Medium) -> Option<(f64, f64)> {
    let v0 = medium.v0;
    if g_tip <= -v0 {
        None
    } else if g_tip < 0.0 {
        let r = (v0 * v0 - g_tip * g_tip).sqrt();
        Some((((v0 - r) / medium.d).ln(), ((v0 + r) / medium.d).ln()))
    } else {
        Some((f64::NEG_INFINITY, medium.l_zero()))
    }
}

/// Rejects a prescribed negative frequency.
pub fn check_frequency(omega: f64) -> Result<()> {
    if omega < 0.0 {
        return Err(Error::invalid(
            "negative frequencies admit no global solution (energy decreases along every orbit); \
             solve for omega > 0 and mirror the result",
        ));
    }
    Ok(())
}

/// Value of `F(ω) = ṽ(l0; ω) - I(l0; ω, G)` on a chosen arc.
enum Probe {
    Defined(f64, Box<SeparatrixOrbit>),
    /// `l0` lies above the arc.
    TooHigh,
    /// `l0` lies below the arc.
    TooLow,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Arc {
    Lower(usize),
    Upper(usize),
}

struct Shooter<'a> {
    req: &'a SolveRequest,
    arc: Arc,
    f_min: f64,
    f_max: f64,
    def_lo: f64,
    def_hi: f64,
}

impl<'a> Shooter<'a> {
    fn new(req: &'a SolveRequest, arc: Arc) -> Self {
        Self { req, arc, f_min: f64::INFINITY, f_max: f64::NEG_INFINITY, def_lo: f64::INFINITY, def_hi: 0.0 }
    }

    fn probe(&mut self, omega: f64) -> Result<Probe> {
        let m = &self.req.medium;
        let l0 = self.req.tip.l0;
        let depth = match self.arc {
            Arc::Lower(i) => i,
            Arc::Upper(j) => j,
        };
        let orbit = match SeparatrixOrbit::compute(omega, m, &self.req.controls, depth) {
            Ok(o) => o,
            Err(Error::FocusStall { .. }) => return Ok(Probe::TooHigh),
            Err(e) => return Err(e),
        };
        let span = match self.arc {
            Arc::Lower(i) => orbit.arc_span(i),
            Arc::Upper(j) => orbit.upper_span(j),
        };
        let (lo, hi) = span.ok_or(Error::FocusStall { found: 0, wanted: depth })?;
        if l0 >= hi {
            return Ok(Probe::TooHigh);
        }
        if l0 <= lo {
            return Ok(Probe::TooLow);
        }
        let v = match self.arc {
            Arc::Lower(i) => orbit.branch_value(l0, i),
            Arc::Upper(j) => orbit.upper_value(l0, j),
        };
        let v = match v {
            Ok(v) => v,
            Err(Error::OutOfRange { .. }) => {
                return Ok(if l0 > 0.5 * (lo + hi) { Probe::TooHigh } else { Probe::TooLow })
            }
            Err(e) => return Err(e),
        };
        let f = v - intercept(l0, omega, self.req.tip.g, m);
        self.f_min = self.f_min.min(f);
        self.f_max = self.f_max.max(f);
        self.def_lo = self.def_lo.min(omega);
        self.def_hi = self.def_hi.max(omega);
        Ok(Probe::Defined(f, Box::new(orbit)))
    }

    fn definedness(&self) -> Option<(f64, f64)> {
        (self.def_lo <= self.def_hi).then_some((self.def_lo, self.def_hi))
    }
}

struct Root {
    omega: f64,
    residual: f64,
    orbit: Box<SeparatrixOrbit>,
}

/// Sign change of the increasing `F` on a lower arc, found by bisecting on
/// definedness and sign together.
fn lower_root(sh: &mut Shooter, tol: f64) -> Result<Option<Root>> {
    let wmax = sh.req.medium.omega_max();
    let (mut lo, mut hi) = (OMEGA_FLOOR * wmax, OMEGA_CEIL * wmax);
    // (omega, F, orbit) at the ends once defined
    let mut neg: Option<(f64, f64, Box<SeparatrixOrbit>)> = None;
    let mut pos: Option<(f64, f64, Box<SeparatrixOrbit>)> = None;
    for (w, edge_low) in [(lo, true), (hi, false)] {
        match sh.probe(w)? {
            Probe::Defined(f, o) if f < 0.0 => {
                if edge_low {
                    neg = Some((w, f, o));
                } else {
                    return Ok(None);
                }
            }
            Probe::Defined(f, o) => {
                if edge_low {
                    return Ok(None);
                }
                pos = Some((w, f, o));
            }
            _ => {}
        }
    }
    if neg.is_none() && pos.is_none() {
        for k in 1..UPPER_SCAN {
            let w = lo + (hi - lo) * k as f64 / UPPER_SCAN as f64;
            if let Probe::Defined(f, o) = sh.probe(w)? {
                if f < 0.0 {
                    neg = Some((w, f, o));
                } else {
                    pos = Some((w, f, o));
                }
                break;
            }
        }
    }
    loop {
        let a = neg.as_ref().map_or(lo, |n| n.0);
        let b = pos.as_ref().map_or(hi, |p| p.0);
        if b - a <= tol * b {
            break;
        }
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        match sh.probe(mid)? {
            Probe::Defined(f, o) => {
                if f < 0.0 {
                    neg = Some((mid, f, o));
                } else {
                    pos = Some((mid, f, o));
                }
            }
            _ => {
                // the defined set is an interval, so an undefined probe sits on one side of it
                let below = neg.iter().map(|n| n.0).chain(pos.iter().map(|p| p.0)).all(|w| mid < w);
                let above = neg.iter().map(|n| n.0).chain(pos.iter().map(|p| p.0)).all(|w| mid > w);
                match (neg.is_some() || pos.is_some(), below, above) {
                    (true, true, _) => lo = mid,
                    (true, _, true) => hi = mid,
                    (true, _, _) => {
                        return Err(Error::NoBracket("arc undefined between defined frequencies".into()));
                    }
                    (false, ..) => return Ok(None),
                }
            }
        }
    }
    Ok(match (neg, pos) {
        (Some(n), Some(p)) => {
            let (omega, residual, orbit) = if n.1.abs() <= p.1.abs() { n } else { p };
            Some(Root { omega, residual: residual.abs(), orbit })
        }
        _ => None,
    })
}

/// First sign change of `F` on an upper arc, by scanning then bisecting.
fn upper_root(sh: &mut Shooter, tol: f64) -> Result<Option<Root>> {
    let wmax = sh.req.medium.omega_max();
    let grid: Vec<f64> = (1..UPPER_SCAN).map(|k| wmax * k as f64 / UPPER_SCAN as f64).collect();
    let mut prev: Option<(f64, f64)> = None;
    for &w in &grid {
        if let Probe::Defined(f, _) = sh.probe(w)? {
            if let Some((wp, fp)) = prev {
                if (fp < 0.0) != (f < 0.0) {
                    let (mut a, mut b, mut fa) = (wp, w, fp);
                    let mut best: Option<Root> = None;
                    while b - a > tol * b {
                        let mid = 0.5 * (a + b);
                        match sh.probe(mid)? {
                            Probe::Defined(fm, o) => {
                                best = Some(Root { omega: mid, residual: fm.abs(), orbit: o });
                                if (fm < 0.0) == (fa < 0.0) {
                                    a = mid;
                                    fa = fm;
                                } else {
                                    b = mid;
                                }
                            }
                            _ => return Ok(None),
                        }
                    }
                    return Ok(best);
                }
            }
            prev = Some((w, f));
        } else {
            prev = None;
        }
    }
    Ok(None)
}

/// `F(ω)` on the lower arc selected by the tip's oscillation index, or
/// `None` where the arc does not reach `l0`.
pub fn shooting_residual(request: &SolveRequest, omega: f64) -> Result<Option<f64>> {
    request.validate()?;
    let mut sh = Shooter::new(request, Arc::Lower(request.tip.osc_index as usize));
    Ok(match sh.probe(omega)? {
        Probe::Defined(f, _) => Some(f),
        _ => None,
    })
}

pub fn solve_omega(request: &SolveRequest) -> Result<SolveResult> {
    request.validate()?;
    let m = &request.medium;
    let tip = request.tip;
    let window = feasibility_window(tip.g, m);

    if tip.g <= -m.v0 {
        return Ok(SolveResult::no_solution(
            "tip contraction at or beyond the plane-wave speed: the intercept curve lies outside E = 0",
            None,
        ));
    }
    if tip.l0 >= m.l_zero() {
        return nonrotating(request);
    }
    let (wl, wh) = window.expect("window exists for g > -v0");
    if !(tip.l0 > wl && tip.l0 < wh) {
        return Ok(SolveResult::no_solution(
            format!("l0 = {} outside the feasibility window ({wl}, {wh})", tip.l0),
            window,
        ));
    }
    let case = if tip.g >= 0.0 { SolveCase::RotatingGrowing } else { SolveCase::RotatingContracting };
    let i = tip.osc_index as usize;
    let tol = request.tol_omega.min(POLISH_TOL);

    let mut sh = Shooter::new(request, Arc::Lower(i));
    let lower = lower_root(&mut sh, tol)?;
    let f_range = (sh.f_min <= sh.f_max).then_some((sh.f_min, sh.f_max));
    let definedness = sh.definedness();

    let (root, upper) = match lower {
        Some(r) => (r, false),
        None if tip.g > 0.0 => {
            let mut up = Shooter::new(request, Arc::Upper(i + 1));
            match upper_root(&mut up, tol)? {
                Some(r) => (r, true),
                None => return Ok(no_bracket(f_range, definedness, window)),
            }
        }
        None => return Ok(no_bracket(f_range, definedness, window)),
    };

    let profile = if upper {
        let arc = *root.orbit.ladder.as_ref().and_then(|l| l.upper_arc(i + 1)).expect("arc exists");
        Profile::on_arc(&root.orbit, m, tip, &arc, true)?
    } else if i == 0 {
        Profile::on_tail(&root.orbit, m, tip)?
    } else {
        let arc = *root.orbit.ladder.as_ref().and_then(|l| l.arc(i)).expect("arc exists");
        Profile::on_arc(&root.orbit, m, tip, &arc, false)?
    };
    Ok(SolveResult {
        case,
        omega: root.omega,
        crossing_count: if upper { 2 * i as u32 + 1 } else { 2 * i as u32 },
        residual: root.residual,
        feasible_window: if case == SolveCase::RotatingContracting { window } else { None },
        upper_start: upper,
        definedness,
        f_range,
        diagnostic: None,
        profile: Some(profile),
    })
}

fn no_bracket(f_range: Option<(f64, f64)>, def: Option<(f64, f64)>, window: Option<(f64, f64)>) -> SolveResult {
    let msg = match f_range {
        Some((lo, _)) if lo > 0.0 => {
            format!("F > 0 on the whole definedness interval (min F = {lo:e}): tip velocity below the feasible range")
        }
        Some((_, hi)) if hi < 0.0 => {
            format!("F < 0 on the whole definedness interval (max F = {hi:e}): tip velocity above the feasible bound")
        }
        Some((lo, hi)) => format!("no resolvable sign change, F in [{lo:e}, {hi:e}]"),
        None => "the arc is undefined for every probed frequency".to_string(),
    };
    SolveResult { definedness: def, f_range, ..SolveResult::no_solution(msg, window) }
}

fn nonrotating(request: &SolveRequest) -> Result<SolveResult> {
    let m = &request.medium;
    let tip = request.tip;
    let start = PhaseState::new(tip.l0, intercept(tip.l0, 0.0, tip.g, m));
    let t = integrator::integrate(start, 0.0, m, &request.controls, Direction::Forward)?;
    if t.outcome.kind != OutcomeKind::Decays {
        return Err(Error::NoBracket(format!("nonrotating profile ended with {:?}", t.outcome.kind)));
    }
    let profile = Profile::from_trajectory(&t, m, tip);
    Ok(SolveResult {
        case: SolveCase::Nonrotating,
        omega: 0.0,
        crossing_count: t.crossings.len() as u32,
        residual: 0.0,
        feasible_window: None,
        upper_start: start.v > 0.0,
        definedness: None,
        f_range: None,
        diagnostic: None,
        profile: Some(profile),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Relative residual of `κ'(0) = (G/D)κ0 - ω/D`.
    pub slope_residual: f64,
    /// Largest relative residual of the integral identity at the checkpoints.
    pub integral_residual: f64,
    pub crossing_count: u32,
    /// Crossings seen when re-integrating forward from the tip.
    pub observed_crossings: u32,
    pub reintegration: OutcomeKind,
}

/// Independent checks of a solved profile.
pub fn verify_solution(result: &SolveResult, request: &SolveRequest) -> Result<Diagnostics> {
    let p = result.profile.as_ref().ok_or_else(|| Error::invalid("result carries no profile"))?;
    let m = &request.medium;
    let (v0, d, g, w) = (m.v0, m.d, request.tip.g, result.omega);
    let kappa = |s: f64| p.state_at(s).map_or(f64::NAN, |q| q.l.exp());

    // one-sided fourth-order difference at the tip
    let h = 1e-3;
    let k: Vec<f64> = (0..5).map(|j| kappa(j as f64 * h)).collect();
    let dk0 = (-25.0 * k[0] + 48.0 * k[1] - 36.0 * k[2] + 16.0 * k[3] - 3.0 * k[4]) / (12.0 * h);
    let rhs = g / d * k[0] - w / d;
    let scale = rhs.abs().max((g / d * k[0]).abs()).max((w / d).abs()).max(1e-300);
    let slope_residual = (dk0 - rhs).abs() / scale;

    // κ(s)(∫κ(V0 - Dκ) + G) - Dκ'(s) = ω at ten checkpoints
    let span = p.last().s.min(40.0 * d / v0);
    let mut acc = 0.0;
    let mut s_prev = 0.0;
    let mut integral_residual: f64 = 0.0;
    for j in 1..=10 {
        let s = span * j as f64 / 10.0;
        let n = ((s - s_prev) / 0.01).ceil() as usize;
        let step = (s - s_prev) / n as f64;
        for q in 0..n {
            let a = s_prev + q as f64 * step;
            acc += gauss5(|u| kappa(u) * (v0 - d * kappa(u)), a, a + step);
        }
        s_prev = s;
        let e = 1e-4;
        let dk = (kappa(s - 2.0 * e) - 8.0 * kappa(s - e) + 8.0 * kappa(s + e) - kappa(s + 2.0 * e)) / (12.0 * e);
        let lhs = kappa(s) * (acc + g) - d * dk;
        let scale = w.abs().max((kappa(s) * (acc + g)).abs()).max((d * dk).abs()).max(1e-300);
        integral_residual = integral_residual.max((lhs - w).abs() / scale);
    }

    let start = PhaseState::new(request.tip.l0, intercept(request.tip.l0, w, g, m));
    let t = integrator::integrate(start, w, m, &request.controls, Direction::Forward)?;
    Ok(Diagnostics {
        slope_residual,
        integral_residual,
        crossing_count: result.crossing_count,
        observed_crossings: t.crossings.len() as u32,
        reintegration: t.outcome.kind,
    })
}
