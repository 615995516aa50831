//! Inner shooting level: the decaying separatrix, its backward crossing
//! ladder and the lower-arc branch values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{
    self, classify_with_growth, Crossing, DenseSegment, Direction, IntegrationControls, Outcome, OutcomeFlag,
    OutcomeKind, RunOptions, Trajectory,
};
use crate::model::{self, focus_analysis, Medium, PhaseState};

pub const DEFAULT_TOL_L: f64 = 1e-11;
/// Ladder crossings closer than this to the focus are noise.
pub const FOCUS_STALL_AMPLITUDE: f64 = 1e-12;
/// Growth cap used while bisecting; large enough that only a start within
/// rounding of the separatrix can reach it.
const BISECTION_GROWTH: f64 = 40.0;
const SERIES_TERMS: usize = 40;
/// Size of the first correction term relative to the leading one at the
/// junction between the series and the integrated tail.
const JUNCTION_EPS: f64 = 1e-4;

/// Power series of the decaying branch in `x = e^l`,
/// `v = Σ a_k x^k` with `a_2 = -V0/ω`, `a_3 = D/ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailSeries {
    pub omega: f64,
    a: Vec<f64>,
    /// `1/v = x^{-2}/a_2 · Σ c_m x^m`
    c: Vec<f64>,
}

impl TailSeries {
    pub fn new(omega: f64, medium: &Medium, terms: usize) -> Self {
        let n = terms.max(5);
        let mut a = vec![0.0; n + 1];
        a[2] = -medium.v0 / omega;
        a[3] = medium.d / omega;
        for k in 5..=n {
            let mut acc = 0.0;
            for j in 2..=(k - 1 - 2) {
                let m = k - 1 - j;
                acc += a[j] * a[m] * m as f64;
            }
            a[k] = medium.d / omega * acc;
        }
        let mut c = vec![0.0; n - 1];
        c[0] = 1.0;
        for m in 1..c.len() {
            let mut acc = 0.0;
            for j in 1..=m {
                acc -= a[j + 2] / a[2] * c[m - j];
            }
            c[m] = acc;
        }
        Self { omega, a, c }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.a
    }

    pub fn v(&self, l: f64) -> f64 {
        let x = l.exp();
        self.a.iter().rev().fold(0.0, |acc, &ak| acc * x + ak)
    }

    /// Magnitude of the last retained term relative to `|v|`.
    pub fn truncation(&self, l: f64) -> f64 {
        let x = l.exp();
        let n = self.a.len() - 1;
        let last = (self.a[n] * x.powi(n as i32)).abs().max((self.a[n - 1] * x.powi(n as i32 - 1)).abs());
        last / self.v(l).abs()
    }

    /// Antiderivative of `1/v` in `l`, fixed up to an additive constant.
    pub fn arclength(&self, l: f64) -> f64 {
        let x = l.exp();
        let mut acc = 0.0;
        let mut xp = x.powi(-2);
        for (m, &cm) in self.c.iter().enumerate() {
            if m == 2 {
                acc += cm * l;
            } else {
                acc += cm * xp / (m as f64 - 2.0);
            }
            xp *= x;
        }
        acc / self.a[2]
    }

    /// Inverse of `arclength`, starting from a nearby `l`.
    pub fn l_at_arclength(&self, target: f64, guess: f64) -> f64 {
        let mut l = guess;
        for _ in 0..100 {
            let f = self.arclength(l) - target;
            let step = f * self.v(l);
            l -= step;
            if step.abs() <= 4.0 * f64::EPSILON * l.abs().max(1.0) {
                break;
            }
        }
        l
    }

    /// A junction depth where the series is accurate to rounding.
    pub fn junction(&self, medium: &Medium) -> f64 {
        let w = self.omega;
        let x3 = JUNCTION_EPS * w * w / (2.0 * medium.d * medium.v0);
        let mut l = x3.ln() / 3.0;
        l = l.min(medium.l_gmin() - 1.0);
        while self.truncation(l) > 1e-17 {
            l -= 0.25;
        }
        l
    }
}

/// The decaying orbit from its axis intercept, integrated down to the series
/// junction and continued analytically.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatrixTail {
    pub omega: f64,
    /// Intercept obtained by integrating backward from the junction.
    pub l_star: f64,
    pub junction: PhaseState,
    pub series: TailSeries,
    /// Forward-ordered tail with `s = 0` at `(l_star, 0)`; dense output
    /// covers `[0, junction.s]`, samples continue on the series to `l_floor`.
    pub trajectory: Trajectory,
}

impl SeparatrixTail {
    /// State on the tail at arclength `s ≥ 0`.
    pub fn state_at(&self, s: f64) -> Option<PhaseState> {
        if s < 0.0 {
            return None;
        }
        if s <= self.junction.s {
            return self.trajectory.state_at(s);
        }
        let target = self.series.arclength(self.junction.l) + (s - self.junction.s);
        // leading order: s ≈ (ω/2V0) e^{-2l}
        let guess = self.junction.l.min(-0.5 * ((s - self.junction.s) / self.series.a[2].abs() * 2.0).ln());
        let l = self.series.l_at_arclength(target, guess.min(self.junction.l));
        Some(PhaseState::at(s, l, self.series.v(l)))
    }

    /// Arclength at which the tail reaches level `l < l_star`.
    pub fn s_at_level(&self, l: f64) -> Option<f64> {
        if l >= self.l_star {
            return None;
        }
        if l <= self.junction.l {
            return Some(self.junction.s + self.series.arclength(l) - self.series.arclength(self.junction.l));
        }
        level_on(&self.trajectory, l, 0.0, self.junction.s)
    }

    pub fn v_at_level(&self, l: f64) -> Option<f64> {
        if l <= self.junction.l {
            return if l < self.l_star { Some(self.series.v(l)) } else { None };
        }
        let s = self.s_at_level(l)?;
        self.trajectory.state_at(s).map(|p| p.v)
    }
}

/// Arclength in `[a, b]` where the monotone-in-l trajectory piece crosses `l`.
pub(crate) fn level_on(t: &Trajectory, l: f64, a: f64, b: f64) -> Option<f64> {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let fl = |s: f64| t.state_at(s).map(|p| p.l - l);
    let f_lo = fl(lo)?;
    let f_hi = fl(hi)?;
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if (f_lo > 0.0) == (f_hi > 0.0) {
        return None;
    }
    let lo_positive = f_lo > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f = fl(mid)?;
        if f == 0.0 {
            return Some(mid);
        }
        if (f > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

fn check_omega(omega: f64, medium: &Medium) -> Result<()> {
    medium.validate()?;
    if !(omega > 0.0 && omega < medium.omega_max()) {
        return Err(Error::invalid(format!("omega must lie in (0, {}), got {omega}", medium.omega_max())));
    }
    Ok(())
}

/// Builds the separatrix tail from the deep-tail series.
pub fn separatrix_tail(omega: f64, medium: &Medium, controls: &IntegrationControls) -> Result<SeparatrixTail> {
    check_omega(omega, medium)?;
    controls.validate(medium)?;
    let series = TailSeries::new(omega, medium, SERIES_TERMS);
    let lj = series.junction(medium);
    let vj = series.v(lj);
    // slow-manifold transit time v ≈ -(V0/ω) e^{2l}
    let transit = omega / (2.0 * medium.v0) * (-2.0 * lj).exp();
    let budget = 10.0 * transit + controls.budget(medium, omega);
    let c = IntegrationControls { s_max: Some(budget), ..*controls };
    let opts = RunOptions {
        stop_after_crossings: Some(1),
        dense: true,
        focus_tol: 0.0,
        max_growth: f64::INFINITY,
        stop_at_level: None,
    };
    let back = integrator::run(PhaseState::new(lj, vj), omega, medium, &c, Direction::Backward, &opts)?;
    if back.outcome.kind != OutcomeKind::Returns {
        let end = back.outcome.state_event;
        if (end.l - medium.l_focus()).abs() < 1e-9 && end.v.abs() < 1e-9 {
            return Err(Error::FocusStall { found: 0, wanted: 0 });
        }
        return Err(Error::NoBracket(format!(
            "backward tail from l = {lj} did not reach the axis ({:?})",
            back.outcome.kind
        )));
    }
    let shift = -back.outcome.s_event;
    let l_star = back.outcome.state_event.l;

    let mut segments: Vec<DenseSegment> = back.segments.iter().rev().map(|g| g.shifted(shift)).collect();
    // trim nothing: the last backward segment extends past the axis, which
    // is harmless because lookups never go below s = 0
    segments.shrink_to_fit();
    let mut samples: Vec<PhaseState> =
        back.samples.iter().rev().map(|p| PhaseState::at(p.s + shift, p.l, p.v)).collect();
    samples[0] = PhaseState::at(0.0, l_star, 0.0);
    let junction = PhaseState::at(shift, lj, vj);
    if let Some(last) = samples.last_mut() {
        *last = junction;
    }

    let floor = controls.floor(medium);
    let s_j = series.arclength(lj);
    let mut l = lj;
    while l > floor {
        l = (l - 0.25).max(floor);
        samples.push(PhaseState::at(shift + series.arclength(l) - s_j, l, series.v(l)));
    }
    let end = *samples.last().unwrap_or(&junction);
    let trajectory = Trajectory {
        omega,
        direction: Direction::Forward,
        samples,
        outcome: Outcome { kind: OutcomeKind::Decays, s_event: end.s, state_event: end, flag: OutcomeFlag::None },
        crossings: Vec::new(),
        segments,
    };
    Ok(SeparatrixTail { omega, l_star, junction, series, trajectory })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparatrixResult {
    pub omega: f64,
    pub l_star: f64,
    pub bracket_width: f64,
    /// Intercept of the tail integrated backward from the series junction.
    pub l_star_tail: f64,
    pub tail: SeparatrixTail,
}

pub fn find_separatrix(
    omega: f64,
    medium: &Medium,
    controls: &IntegrationControls,
    tol_l: f64,
) -> Result<SeparatrixResult> {
    check_omega(omega, medium)?;
    if !(tol_l > 0.0) {
        return Err(Error::invalid("tol_l must be positive"));
    }
    let tail = separatrix_tail(omega, medium, controls)?;
    let (lo, hi) = (medium.l_focus(), medium.l_zero());
    let k_lo = classify_with_growth(PhaseState::new(lo, 0.0), omega, medium, controls, BISECTION_GROWTH)?.kind;
    let k_hi = classify_with_growth(PhaseState::new(hi, 0.0), omega, medium, controls, BISECTION_GROWTH)?.kind;
    if k_lo == k_hi || k_hi != OutcomeKind::Escapes {
        return Err(Error::NoBracket(format!("window ends classify as {k_lo:?} and {k_hi:?}")));
    }
    let (l_star, width) = bisect(omega, medium, controls, lo, hi, tol_l)?;
    Ok(SeparatrixResult { omega, l_star, bracket_width: width, l_star_tail: tail.l_star, tail })
}

/// Same as [`find_separatrix`] but bisects a small verified bracket around
/// the tail intercept.
pub(crate) fn find_separatrix_seeded(
    omega: f64,
    medium: &Medium,
    controls: &IntegrationControls,
    tol_l: f64,
) -> Result<SeparatrixResult> {
    check_omega(omega, medium)?;
    let tail = separatrix_tail(omega, medium, controls)?;
    let (wlo, whi) = (medium.l_focus(), medium.l_zero());
    let mut w = 1e-8f64;
    let escapes = |l: f64| -> Result<bool> {
        let o = classify_with_growth(PhaseState::new(l, 0.0), omega, medium, controls, BISECTION_GROWTH)?;
        Ok(o.kind == OutcomeKind::Escapes)
    };
    loop {
        let lo = (tail.l_star - w).max(wlo);
        let hi = (tail.l_star + w).min(whi);
        if !escapes(lo)? && (hi >= whi || escapes(hi)?) {
            let (l_star, width) = bisect(omega, medium, controls, lo, hi, tol_l)?;
            return Ok(SeparatrixResult { omega, l_star, bracket_width: width, l_star_tail: tail.l_star, tail });
        }
        if lo <= wlo && hi >= whi {
            return Err(Error::NoBracket("separatrix bracket search exhausted the window".into()));
        }
        w *= 64.0;
    }
}

fn bisect(
    omega: f64,
    medium: &Medium,
    controls: &IntegrationControls,
    mut lo: f64,
    mut hi: f64,
    tol_l: f64,
) -> Result<(f64, f64)> {
    while hi - lo > tol_l {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let o = classify_with_growth(PhaseState::new(mid, 0.0), omega, medium, controls, BISECTION_GROWTH)?;
        match o.kind {
            OutcomeKind::Escapes => hi = mid,
            OutcomeKind::Returns | OutcomeKind::BudgetExceeded => lo = mid,
            OutcomeKind::Decays => {
                lo = mid;
                hi = mid;
            }
        }
    }
    Ok((0.5 * (lo + hi), hi - lo))
}

/// Arc of the separatrix orbit between two consecutive axis crossings, as an
/// arclength interval of the backward ladder trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcSegment {
    pub index: usize,
    /// Arclength (negative, backward time) at the lower-l endpoint.
    pub s_left: f64,
    /// Arclength at the higher-l endpoint.
    pub s_right: f64,
    pub l_left: f64,
    pub l_right: f64,
}

impl ArcSegment {
    pub fn contains(&self, l: f64) -> bool {
        self.l_left < l && l < self.l_right
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingLadder {
    pub omega: f64,
    /// `l*_1R > l*_2R > …`, with `right[0] = l_star`.
    pub right: Vec<f64>,
    /// `l*_1L < l*_2L < …`.
    pub left: Vec<f64>,
    /// Lower arcs; `arcs[k]` has index `k + 1` and joins `l*_{(k+2)R}` to `l*_{(k+1)L}`.
    pub arcs: Vec<ArcSegment>,
    /// Upper arcs; `upper[k]` has index `k + 1` and joins `l*_{(k+1)L}` to `l*_{(k+1)R}`.
    pub upper: Vec<ArcSegment>,
    pub trajectory: Trajectory,
}

impl CrossingLadder {
    pub fn from_separatrix(
        sep: &SeparatrixResult,
        medium: &Medium,
        controls: &IntegrationControls,
        max_index: usize,
    ) -> Result<Self> {
        if max_index == 0 {
            return Err(Error::invalid("max_index must be at least 1"));
        }
        let omega = sep.omega;
        let wanted = 2 * max_index;
        let fa = focus_analysis(omega, medium);
        let half_turn = std::f64::consts::PI / fa.eig_imag.max(1e-6);
        let budget = controls.budget(medium, omega).max(4.0 * wanted as f64 * half_turn + 100.0);
        let c = IntegrationControls { s_max: Some(budget), ..*controls };
        let opts = RunOptions {
            stop_after_crossings: Some(wanted),
            dense: true,
            focus_tol: FOCUS_STALL_AMPLITUDE,
            max_growth: f64::INFINITY,
            stop_at_level: None,
        };
        let t = integrator::run(PhaseState::new(sep.l_star, 0.0), omega, medium, &c, Direction::Backward, &opts)?;
        let cr: &[Crossing] = &t.crossings;
        // the last crossings must resolve above noise as well
        let stalled = cr.iter().position(|x| (x.l - medium.l_focus()).abs() < FOCUS_STALL_AMPLITUDE);
        let usable = stalled.unwrap_or(cr.len());
        if usable < wanted {
            return Err(Error::FocusStall { found: usable, wanted });
        }
        let mut right = vec![sep.l_star];
        let mut left = Vec::with_capacity(max_index);
        for (k, x) in cr.iter().enumerate().take(wanted) {
            if k % 2 == 0 {
                left.push(x.l);
            } else {
                right.push(x.l);
            }
        }
        right.truncate(max_index);
        let arcs = (1..=max_index)
            .map(|i| {
                let l = &cr[2 * i - 2];
                let r = &cr[2 * i - 1];
                ArcSegment { index: i, s_left: l.s, s_right: r.s, l_left: l.l, l_right: r.l }
            })
            .collect();
        let upper = (1..=max_index)
            .map(|j| {
                let l = &cr[2 * j - 2];
                let (rs, rl) = if j == 1 { (0.0, sep.l_star) } else { (cr[2 * j - 3].s, cr[2 * j - 3].l) };
                ArcSegment { index: j, s_left: l.s, s_right: rs, l_left: l.l, l_right: rl }
            })
            .collect();
        Ok(Self { omega, right, left, arcs, upper, trajectory: t })
    }

    pub fn arc(&self, i: usize) -> Option<&ArcSegment> {
        self.arcs.get(i.checked_sub(1)?)
    }

    pub fn upper_arc(&self, j: usize) -> Option<&ArcSegment> {
        self.upper.get(j.checked_sub(1)?)
    }

    fn value_on(&self, arc: &ArcSegment, l: f64) -> Result<f64> {
        if !arc.contains(l) {
            return Err(Error::OutOfRange { l, lo: arc.l_left, hi: arc.l_right });
        }
        let s = level_on(&self.trajectory, l, arc.s_left, arc.s_right).ok_or(Error::OutOfRange {
            l,
            lo: arc.l_left,
            hi: arc.l_right,
        })?;
        let p = self.trajectory.state_at(s).ok_or(Error::OutOfRange { l, lo: arc.l_left, hi: arc.l_right })?;
        Ok(p.v)
    }

    /// Lower-arc value `ṽ_i(l)` for `i ≥ 1`.
    pub fn branch_value(&self, l: f64, i: usize) -> Result<f64> {
        let arc = self.arc(i).ok_or_else(|| Error::invalid(format!("arc {i} not in ladder")))?;
        self.value_on(arc, l)
    }

    /// Upper-arc value for `j ≥ 1`.
    pub fn upper_value(&self, l: f64, j: usize) -> Result<f64> {
        let arc = self.upper_arc(j).ok_or_else(|| Error::invalid(format!("upper arc {j} not in ladder")))?;
        self.value_on(arc, l)
    }
}

pub fn crossing_ladder(
    omega: f64,
    medium: &Medium,
    controls: &IntegrationControls,
    max_index: usize,
) -> Result<CrossingLadder> {
    let sep = find_separatrix(omega, medium, controls, DEFAULT_TOL_L)?;
    CrossingLadder::from_separatrix(&sep, medium, controls, max_index)
}

/// Separatrix orbit at one frequency: tail plus, optionally, the ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatrixOrbit {
    pub separatrix: SeparatrixResult,
    pub ladder: Option<CrossingLadder>,
}

impl SeparatrixOrbit {
    /// `max_index = 0` skips the ladder.
    pub fn compute(omega: f64, medium: &Medium, controls: &IntegrationControls, max_index: usize) -> Result<Self> {
        let separatrix = find_separatrix_seeded(omega, medium, controls, DEFAULT_TOL_L)?;
        let ladder = if max_index > 0 {
            Some(CrossingLadder::from_separatrix(&separatrix, medium, controls, max_index)?)
        } else {
            None
        };
        Ok(Self { separatrix, ladder })
    }

    pub fn omega(&self) -> f64 {
        self.separatrix.omega
    }

    fn ladder_for(&self, i: usize) -> Result<&CrossingLadder> {
        self.ladder
            .as_ref()
            .filter(|l| l.arcs.len() >= i)
            .ok_or_else(|| Error::invalid(format!("arc {i} not in ladder")))
    }

    /// `l`-span of lower arc `i` (`i = 0` is the tail).
    pub fn arc_span(&self, i: usize) -> Option<(f64, f64)> {
        if i == 0 {
            return Some((f64::NEG_INFINITY, self.separatrix.tail.l_star));
        }
        self.ladder.as_ref()?.arc(i).map(|a| (a.l_left, a.l_right))
    }

    /// `l`-span of upper arc `j ≥ 1`.
    pub fn upper_span(&self, j: usize) -> Option<(f64, f64)> {
        self.ladder.as_ref()?.upper_arc(j).map(|a| (a.l_left, a.l_right))
    }

    pub fn branch_value(&self, l: f64, i: usize) -> Result<f64> {
        if i == 0 {
            let hi = self.separatrix.tail.l_star;
            return self.separatrix.tail.v_at_level(l).ok_or(Error::OutOfRange { l, lo: f64::NEG_INFINITY, hi });
        }
        self.ladder_for(i)?.branch_value(l, i)
    }

    pub fn upper_value(&self, l: f64, j: usize) -> Result<f64> {
        self.ladder_for(j)?.upper_value(l, j)
    }
}

pub fn branch_value(
    l_query: f64,
    i: usize,
    omega: f64,
    medium: &Medium,
    controls: &IntegrationControls,
) -> Result<f64> {
    SeparatrixOrbit::compute(omega, medium, controls, i)?.branch_value(l_query, i)
}

/// `E` along the tail samples, for output.
pub fn tail_energy(tail: &SeparatrixTail, medium: &Medium) -> Vec<f64> {
    tail.trajectory.samples.iter().map(|p| model::energy(p, medium)).collect()
}
