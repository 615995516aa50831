//! Adaptive Dormand–Prince 5(4) integration of the phase-plane system with
//! dense output and event location.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, Medium, PhaseState};

/// Growth allowed inside the tail region before a forward orbit is declared
/// to be following the decaying branch.
pub const DEFAULT_MAX_GROWTH: f64 = 16.0;
/// Focus-contact threshold on |l - ln(v0/d)| at an axis crossing.
pub const FOCUS_TOL: f64 = 1e-10;
const MAX_STEPS: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationControls {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Arclength budget; `None` scales with the frequency.
    pub s_max: Option<f64>,
    /// Tail threshold; `None` means `ln(v0/d) - 25`.
    pub l_floor: Option<f64>,
    pub event_tol: f64,
    /// Cap on the accumulated expansion `∫ (ω/d) e^{-l} ds` in the tail.
    pub max_growth: f64,
}

impl Default for IntegrationControls {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            s_max: None,
            l_floor: None,
            event_tol: 1e-12,
            max_growth: DEFAULT_MAX_GROWTH,
        }
    }
}

impl IntegrationControls {
    pub fn budget(&self, medium: &Medium, omega: f64) -> f64 {
        self.s_max.unwrap_or_else(|| {
            let w = omega.abs();
            let scale = if w > 0.0 && w < 1.0 { 1.0 / w } else { 1.0 };
            1000.0 * medium.d / (medium.v0 * medium.v0) * scale
        })
    }

    pub fn floor(&self, medium: &Medium) -> f64 {
        self.l_floor.unwrap_or(medium.l_focus() - 25.0)
    }

    pub fn validate(&self, medium: &Medium) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-6) {
            return Err(Error::invalid(format!("rel_tol must lie in (0, 1e-6], got {}", self.rel_tol)));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::invalid("abs_tol must be positive"));
        }
        if !(self.event_tol > 0.0 && self.event_tol.is_finite()) {
            return Err(Error::invalid("event_tol must be positive"));
        }
        if let Some(s) = self.s_max {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid("s_max must be positive"));
            }
        }
        if !(self.floor(medium) < medium.l_gmin()) {
            return Err(Error::invalid("l_floor must lie below ln(v0/(2d))"));
        }
        if !(self.max_growth > 0.0) {
            return Err(Error::invalid("max_growth must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutcomeKind {
    Returns,
    Escapes,
    Decays,
    BudgetExceeded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutcomeFlag {
    None,
    /// An axis crossing landed on the focus.
    FocusContact,
    /// Decays was declared by the growth cap, not by reaching `l_floor`.
    GrowthLimited,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub kind: OutcomeKind,
    pub s_event: f64,
    pub state_event: PhaseState,
    pub flag: OutcomeFlag,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub s: f64,
    pub l: f64,
}

/// One accepted step with its quartic-in-time interpolant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseSegment {
    pub s0: f64,
    pub h: f64,
    c: [[f64; 2]; 5],
}

impl DenseSegment {
    pub fn eval(&self, s: f64) -> [f64; 2] {
        self.eval_theta((s - self.s0) / self.h)
    }

    fn eval_theta(&self, t: f64) -> [f64; 2] {
        let t1 = 1.0 - t;
        let c = &self.c;
        let mut y = [0.0; 2];
        for i in 0..2 {
            y[i] = c[0][i] + t * (c[1][i] + t1 * (c[2][i] + t * (c[3][i] + t1 * c[4][i])));
        }
        y
    }

    pub fn s_end(&self) -> f64 {
        self.s0 + self.h
    }

    pub fn s_range(&self) -> (f64, f64) {
        let e = self.s_end();
        (self.s0.min(e), self.s0.max(e))
    }

    /// Same interpolant with arclength shifted by `ds`.
    pub fn shifted(&self, ds: f64) -> Self {
        Self { s0: self.s0 + ds, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub omega: f64,
    pub direction: Direction,
    /// States at accepted steps and events, ordered along the direction of
    /// integration (decreasing s when backward).
    pub samples: Vec<PhaseState>,
    pub outcome: Outcome,
    pub crossings: Vec<Crossing>,
    pub segments: Vec<DenseSegment>,
}

impl Trajectory {
    pub fn s_span(&self) -> (f64, f64) {
        let a = self.samples.first().map_or(0.0, |p| p.s);
        let b = self.samples.last().map_or(0.0, |p| p.s);
        (a.min(b), a.max(b))
    }

    /// Interpolated state at arclength `s`, if covered by the dense output.
    pub fn state_at(&self, s: f64) -> Option<PhaseState> {
        let seg = find_segment(&self.segments, s, self.direction)?;
        let [l, v] = seg.eval(s);
        Some(PhaseState::at(s, l, v))
    }
}

pub(crate) fn find_segment(segs: &[DenseSegment], s: f64, dir: Direction) -> Option<&DenseSegment> {
    let sg = dir.sign();
    let lo_key = |g: &DenseSegment| (g.s0 * sg).min(g.s_end() * sg);
    let hi_key = |g: &DenseSegment| (g.s0 * sg).max(g.s_end() * sg);
    let (first, last) = (segs.first()?, segs.last()?);
    let key = s * sg;
    let slack = 1e-12 * key.abs().max(1.0);
    if key < lo_key(first) - slack || key > hi_key(last) + slack {
        return None;
    }
    let idx = segs.partition_point(|g| hi_key(g) < key);
    Some(&segs[idx.min(segs.len() - 1)])
}

pub(crate) struct RunOptions {
    pub stop_after_crossings: Option<usize>,
    pub dense: bool,
    pub focus_tol: f64,
    pub max_growth: f64,
    /// Stop at the first crossing of `l = level`.
    pub stop_at_level: Option<f64>,
}

impl RunOptions {
    pub fn full(controls: &IntegrationControls) -> Self {
        Self {
            stop_after_crossings: None,
            dense: true,
            focus_tol: FOCUS_TOL,
            max_growth: controls.max_growth,
            stop_at_level: None,
        }
    }
}

pub fn integrate(
    start: PhaseState,
    omega: f64,
    medium: &Medium,
    controls: &IntegrationControls,
    direction: Direction,
) -> Result<Trajectory> {
    run(start, omega, medium, controls, direction, &RunOptions::full(controls))
}

pub fn classify(start: PhaseState, omega: f64, medium: &Medium, controls: &IntegrationControls) -> Result<Outcome> {
    classify_with_growth(start, omega, medium, controls, controls.max_growth)
}

pub(crate) fn classify_with_growth(
    start: PhaseState,
    omega: f64,
    medium: &Medium,
    controls: &IntegrationControls,
    max_growth: f64,
) -> Result<Outcome> {
    let opts = RunOptions {
        stop_after_crossings: Some(1),
        dense: false,
        focus_tol: FOCUS_TOL,
        max_growth,
        stop_at_level: None,
    };
    Ok(run(start, omega, medium, controls, Direction::Forward, &opts)?.outcome)
}

// Dormand–Prince tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

type V2 = [f64; 2];

#[inline]
fn axpy(y: &V2, terms: &[(f64, &V2)], h: f64) -> V2 {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

struct Stepper<'a> {
    omega: f64,
    medium: &'a Medium,
    rel_tol: f64,
    abs_tol: f64,
}

struct StepResult {
    y1: V2,
    k7: V2,
    err: f64,
    seg: DenseSegment,
}

impl Stepper<'_> {
    fn f(&self, y: &V2) -> Result<V2> {
        model::field(y[0], y[1], self.omega, self.medium)
    }

    fn norm(&self, a: &V2, y0: &V2, y1: &V2) -> f64 {
        let mut acc = 0.0;
        for i in 0..2 {
            let sc = self.abs_tol + self.rel_tol * y0[i].abs().max(y1[i].abs());
            acc += (a[i] / sc).powi(2);
        }
        (acc / 2.0).sqrt()
    }

    fn try_step(&self, s: f64, y: &V2, k1: &V2, h: f64) -> Result<StepResult> {
        let k2 = self.f(&axpy(y, &[(A21, k1)], h))?;
        let k3 = self.f(&axpy(y, &[(A31, k1), (A32, &k2)], h))?;
        let k4 = self.f(&axpy(y, &[(A41, k1), (A42, &k2), (A43, &k3)], h))?;
        let k5 = self.f(&axpy(y, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)], h))?;
        let k6 = self.f(&axpy(y, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h))?;
        let y1 = axpy(y, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)], h);
        let k7 = self.f(&y1)?;
        let mut e = [0.0; 2];
        for i in 0..2 {
            e[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let err = self.norm(&e, y, &y1);
        let mut c = [[0.0; 2]; 5];
        for i in 0..2 {
            let dy = y1[i] - y[i];
            let bspl = h * k1[i] - dy;
            c[0][i] = y[i];
            c[1][i] = dy;
            c[2][i] = bspl;
            c[3][i] = dy - h * k7[i] - bspl;
            c[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        Ok(StepResult { y1, k7, err, seg: DenseSegment { s0: s, h, c } })
    }

    fn initial_step(&self, y: &V2, k1: &V2, dir: f64, h_max: f64) -> f64 {
        let sc = |i: usize| self.abs_tol + self.rel_tol * y[i].abs();
        let d0 = ((y[0] / sc(0)).powi(2) + (y[1] / sc(1)).powi(2)).sqrt() / 2f64.sqrt();
        let d1 = ((k1[0] / sc(0)).powi(2) + (k1[1] / sc(1)).powi(2)).sqrt() / 2f64.sqrt();
        let mut h0 = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(h_max);
        let y1 = axpy(y, &[(1.0, k1)], dir * h0);
        let d2 = match self.f(&y1) {
            Ok(k2) => {
                let a = [(k2[0] - k1[0]) / sc(0), (k2[1] - k1[1]) / sc(1)];
                (a[0] * a[0] + a[1] * a[1]).sqrt() / 2f64.sqrt() / h0
            }
            Err(_) => return 1e-6f64.min(h_max),
        };
        let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
        (100.0 * h0).min(h1).min(h_max)
    }
}

/// Root of `f` on the segment between local parameters 0 and 1, where the
/// sign of `f(0)` differs from `f(1)`.
fn locate(seg: &DenseSegment, f: impl Fn(&V2) -> f64, tol_s: f64) -> f64 {
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut fa = f(&seg.eval_theta(a));
    let mut fb = f(&seg.eval_theta(b));
    if fb == 0.0 {
        return 1.0;
    }
    let tol = tol_s / seg.h.abs();
    let mut side = 0i8;
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        // Illinois-modified regula falsi, bisection as a safeguard
        let mut m = (a * fb - b * fa) / (fb - fa);
        if !(m > a && m < b) || (b - a) > 0.5 {
            m = 0.5 * (a + b);
        }
        let fm = f(&seg.eval_theta(m));
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = m;
            fb = fm;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    // report the far side of the bracket so the event is not missed
    b
}

enum Event {
    Crossing,
    Escape,
    Floor,
    Level,
}

pub(crate) fn run(
    start: PhaseState,
    omega: f64,
    medium: &Medium,
    controls: &IntegrationControls,
    direction: Direction,
    opts: &RunOptions,
) -> Result<Trajectory> {
    medium.validate()?;
    controls.validate(medium)?;
    if !start.is_valid() {
        return Err(Error::invalid("start state is not finite"));
    }
    if !omega.is_finite() {
        return Err(Error::invalid("omega is not finite"));
    }

    let forward = direction == Direction::Forward;
    let dir = direction.sign();
    let budget = controls.budget(medium, omega);
    let s_stop = start.s + dir * budget;
    let l_floor = controls.floor(medium);
    let l_focus = medium.l_focus();
    let l_tail = medium.l_focus() - std::f64::consts::LN_2;
    let energy = |y: &V2| model::energy_lv(y[0], y[1], medium);
    let escapes_on = forward && omega > 0.0;
    let floor_on = forward;
    let growth_on = forward && omega > 0.0;
    let h_max = (0.5 * medium.d / medium.v0).min(budget);

    let stepper = Stepper { omega, medium, rel_tol: controls.rel_tol, abs_tol: controls.abs_tol };

    let mut traj = Trajectory {
        omega,
        direction,
        samples: vec![start],
        outcome: Outcome {
            kind: OutcomeKind::BudgetExceeded,
            s_event: s_stop,
            state_event: start,
            flag: OutcomeFlag::None,
        },
        crossings: Vec::new(),
        segments: Vec::new(),
    };

    let finish = |mut traj: Trajectory, kind, state: PhaseState, flag| {
        if traj.samples.last().map_or(true, |p| p.s != state.s) {
            traj.samples.push(state);
        }
        traj.outcome = Outcome { kind, s_event: state.s, state_event: state, flag };
        Ok(traj)
    };

    let mut y: V2 = [start.l, start.v];
    let mut s = start.s;
    if escapes_on && energy(&y) >= 0.0 {
        return finish(traj, OutcomeKind::Escapes, start, OutcomeFlag::None);
    }
    if let Some(level) = opts.stop_at_level {
        if y[0] == level {
            return finish(traj, OutcomeKind::BudgetExceeded, start, OutcomeFlag::None);
        }
    }

    let mut k1 = stepper.f(&y)?;
    let mut h = stepper.initial_step(&y, &k1, dir, h_max);
    let mut facold = 1e-4f64;
    let mut last_rejected = false;
    let mut growth = 0.0f64;
    let tail_rate = |y: &V2| -> f64 {
        if y[1] < 0.0 && y[0] < l_tail {
            omega / medium.d * (-y[0]).exp()
        } else {
            0.0
        }
    };
    let mut rate_a = if growth_on { tail_rate(&y) } else { 0.0 };

    for _ in 0..MAX_STEPS {
        let remaining = (s_stop - s) * dir;
        if remaining <= 0.0 {
            break;
        }
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        let hs = dir * h;
        let step = match stepper.try_step(s, &y, &k1, hs) {
            Ok(st) if st.err.is_finite() => st,
            Ok(_) | Err(Error::Range { .. }) => {
                h *= 0.25;
                last_rejected = true;
                if h < 1e-14 * s.abs().max(1.0) {
                    return Err(match stepper.f(&y) {
                        Err(e) => e,
                        Ok(_) => Error::StepSizeUnderflow { s, h },
                    });
                }
                continue;
            }
            Err(e) => return Err(e),
        };

        if step.err > 1.0 {
            let fac11 = step.err.powf(0.17);
            h /= (fac11 / 0.9).clamp(1.0, 5.0);
            last_rejected = true;
            if h < 1e-14 * s.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { s, h });
            }
            continue;
        }

        // accepted step
        let seg = step.seg;
        let y1 = step.y1;
        let s1 = if last { s_stop } else { s + hs };

        // candidate events in order along the step
        let mut events: Vec<(f64, Event)> = Vec::with_capacity(2);
        let crossed = (y[1] < 0.0 && y1[1] >= 0.0) || (y[1] > 0.0 && y1[1] <= 0.0);
        if crossed {
            events.push((locate(&seg, |z| z[1], controls.event_tol), Event::Crossing));
        }
        if escapes_on && energy(&y1) >= 0.0 {
            events.push((locate(&seg, energy, controls.event_tol), Event::Escape));
        }
        if floor_on && y1[0] <= l_floor && y[0] > l_floor {
            events.push((locate(&seg, |z| z[0] - l_floor, controls.event_tol), Event::Floor));
        }
        if let Some(level) = opts.stop_at_level {
            if (y[0] - level) * (y1[0] - level) <= 0.0 {
                events.push((locate(&seg, |z| z[0] - level, controls.event_tol), Event::Level));
            }
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut stop: Option<(OutcomeKind, PhaseState, OutcomeFlag, f64)> = None;
        for (theta, ev) in events {
            let z = seg.eval_theta(theta);
            let se = seg.s0 + theta * seg.h;
            let p = PhaseState::at(se, z[0], z[1]);
            match ev {
                Event::Crossing => {
                    if (p.l - l_focus).abs() < opts.focus_tol {
                        stop = Some((OutcomeKind::BudgetExceeded, p, OutcomeFlag::FocusContact, theta));
                        break;
                    }
                    traj.crossings.push(Crossing { s: se, l: p.l });
                    growth = 0.0;
                    if let Some(n) = opts.stop_after_crossings {
                        if traj.crossings.len() >= n {
                            stop = Some((OutcomeKind::Returns, PhaseState::at(se, p.l, 0.0), OutcomeFlag::None, theta));
                            break;
                        }
                    }
                }
                Event::Escape => {
                    stop = Some((OutcomeKind::Escapes, p, OutcomeFlag::None, theta));
                    break;
                }
                Event::Floor => {
                    if p.v < 0.0 && (!escapes_on || energy(&z) < 0.0) {
                        stop = Some((OutcomeKind::Decays, p, OutcomeFlag::None, theta));
                        break;
                    }
                }
                Event::Level => {
                    stop = Some((OutcomeKind::BudgetExceeded, p, OutcomeFlag::None, theta));
                    break;
                }
            }
        }

        if opts.dense {
            traj.segments.push(seg);
        }
        if let Some((kind, p, flag, _)) = stop {
            return finish(traj, kind, p, flag);
        }

        // expansion accumulated since the last crossing
        if growth_on {
            let rate_b = tail_rate(&y1);
            growth += 0.5 * h * (rate_a + rate_b);
            rate_a = rate_b;
            if growth > opts.max_growth && y1[1] < 0.0 && y1[0] < l_tail {
                let p = PhaseState::at(s1, y1[0], y1[1]);
                return finish(traj, OutcomeKind::Decays, p, OutcomeFlag::GrowthLimited);
            }
        }

        traj.samples.push(PhaseState::at(s1, y1[0], y1[1]));
        s = s1;
        y = y1;
        k1 = step.k7;

        if last {
            let p = PhaseState::at(s, y[0], y[1]);
            return finish(traj, OutcomeKind::BudgetExceeded, p, OutcomeFlag::None);
        }

        let fac11 = step.err.powf(0.17);
        let mut fac = fac11 / facold.powf(0.04);
        fac = (fac / 0.9).clamp(0.1, 5.0);
        let mut h_new = h / fac;
        if last_rejected {
            h_new = h_new.min(h);
        }
        facold = step.err.max(1e-4);
        last_rejected = false;
        h = h_new.min(h_max);
    }
    if (s_stop - s) * dir <= 0.0 {
        let p = PhaseState::at(s, y[0], y[1]);
        return finish(traj, OutcomeKind::BudgetExceeded, p, OutcomeFlag::None);
    }
    Err(Error::StepLimit(MAX_STEPS))
}
