//! From a solved log-curvature profile to planar curves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{find_segment, DenseSegment, Direction, Trajectory};
use crate::model::{sign_symmetry, Medium, PhaseState, SteadyFrame, TipData};
use crate::quadrature::gauss5;
use crate::separatrix::{ArcSegment, SeparatrixOrbit, TailSeries};

/// Largest turning per quadrature panel, in radians.
pub const MAX_PANEL_TURN: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
enum TailModel {
    /// Series of the decaying branch beyond the dense output, then the
    /// Archimedean law past the last sample.
    Series(TailSeries),
    /// Constant slope beyond the last sample.
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub frame: SteadyFrame,
    pub medium: Medium,
    pub tip: TipData,
    pub crossing_count: u32,
    /// `(s, l, v)` from the tip to the end of the tail.
    pub samples: Vec<PhaseState>,
    segments: Vec<DenseSegment>,
    /// End of the dense-output coverage.
    s_dense: f64,
    tail: TailModel,
}

impl Profile {
    /// Profile of a decaying forward trajectory started at the tip.
    pub fn from_trajectory(traj: &Trajectory, medium: &Medium, tip: TipData) -> Self {
        let segments = traj.segments.clone();
        let s_dense = segments.last().map_or(0.0, |g| g.s_end());
        Self {
            frame: SteadyFrame::positive(medium, traj.omega),
            medium: *medium,
            tip,
            crossing_count: traj.crossings.len() as u32,
            samples: traj.samples.clone(),
            segments,
            s_dense,
            tail: TailModel::Linear,
        }
    }

    /// Profile starting on the tail of the separatrix orbit at level `l0`.
    pub fn on_tail(orbit: &SeparatrixOrbit, medium: &Medium, tip: TipData) -> Result<Self> {
        let tail = &orbit.separatrix.tail;
        let s0 =
            tail.s_at_level(tip.l0).ok_or(Error::OutOfRange { l: tip.l0, lo: f64::NEG_INFINITY, hi: tail.l_star })?;
        Ok(Self::assemble(orbit, medium, tip, None, s0, 0))
    }

    /// Profile starting on a ladder arc; `upper` selects the upper-half-plane arc.
    pub fn on_arc(
        orbit: &SeparatrixOrbit,
        medium: &Medium,
        tip: TipData,
        arc: &ArcSegment,
        upper: bool,
    ) -> Result<Self> {
        let lad = orbit.ladder.as_ref().ok_or_else(|| Error::invalid("orbit has no ladder"))?;
        let sb = crate::separatrix::level_on(&lad.trajectory, tip.l0, arc.s_left, arc.s_right)
            .ok_or(Error::OutOfRange { l: tip.l0, lo: arc.l_left, hi: arc.l_right })?;
        let count = if upper { 2 * arc.index as u32 - 1 } else { 2 * arc.index as u32 };
        Ok(Self::assemble(orbit, medium, tip, Some(sb), 0.0, count))
    }

    /// `ladder_start` is the (negative) ladder arclength of the tip, or
    /// `None` when the tip sits on the tail at tail arclength `tail_start`.
    fn assemble(
        orbit: &SeparatrixOrbit,
        medium: &Medium,
        tip: TipData,
        ladder_start: Option<f64>,
        tail_start: f64,
        crossing_count: u32,
    ) -> Self {
        let tail = &orbit.separatrix.tail;
        let mut segments = Vec::new();
        let mut samples = Vec::new();
        // profile s = tail s + offset
        let offset = match ladder_start {
            Some(sb) => {
                let lad = &orbit.ladder.as_ref().expect("ladder start needs a ladder").trajectory;
                for g in lad.segments.iter().rev() {
                    let (lo, hi) = g.s_range();
                    if hi > sb && lo < 0.0 {
                        segments.push(g.shifted(-sb));
                    }
                }
                for p in lad.samples.iter().rev() {
                    if p.s > sb && p.s < 0.0 {
                        samples.push(PhaseState::at(p.s - sb, p.l, p.v));
                    }
                }
                -sb
            }
            None => -tail_start,
        };
        let start_state = match ladder_start {
            Some(sb) => orbit.ladder.as_ref().and_then(|l| l.trajectory.state_at(sb)),
            None => tail.state_at(tail_start),
        }
        .unwrap_or(PhaseState::new(tip.l0, 0.0));
        samples.insert(0, PhaseState::at(0.0, tip.l0, start_state.v));

        let from = if ladder_start.is_some() { 0.0 } else { tail_start };
        for g in &tail.trajectory.segments {
            let (_, hi) = g.s_range();
            if hi > from {
                segments.push(g.shifted(offset));
            }
        }
        for p in &tail.trajectory.samples {
            if p.s > from {
                samples.push(PhaseState::at(p.s + offset, p.l, p.v));
            }
        }
        let s_dense = (tail.junction.s + offset).max(0.0);
        Self {
            frame: SteadyFrame::positive(medium, orbit.omega()),
            medium: *medium,
            tip,
            crossing_count,
            samples,
            segments,
            s_dense,
            tail: TailModel::Series(tail.series.clone()),
        }
    }

    pub fn omega(&self) -> f64 {
        self.frame.omega
    }

    pub fn mirrored(&self) -> Self {
        Self { frame: sign_symmetry(&self.frame), ..self.clone() }
    }

    pub fn last(&self) -> PhaseState {
        *self.samples.last().expect("profile has samples")
    }

    /// `(l, v)` at arclength `s ≥ 0`, continued past the last sample.
    pub fn state_at(&self, s: f64) -> Option<PhaseState> {
        if !(s >= 0.0) || !s.is_finite() {
            return None;
        }
        if s <= self.s_dense && !self.segments.is_empty() {
            if let Some(g) = find_segment(&self.segments, s, Direction::Forward) {
                let [l, v] = g.eval(s);
                return Some(PhaseState::at(s, l, v));
            }
        }
        let end = self.last();
        match &self.tail {
            TailModel::Linear => {
                if s <= end.s {
                    return self.interpolate_samples(s);
                }
                Some(PhaseState::at(s, end.l + end.v * (s - end.s), end.v))
            }
            TailModel::Series(series) => {
                if s <= end.s {
                    // anchor the series arclength at the closest earlier sample
                    let k = self.samples.partition_point(|p| p.s <= s).max(1) - 1;
                    let a = self.samples[k];
                    let target = series.arclength(a.l) + (s - a.s);
                    let l = series.l_at_arclength(target, a.l);
                    return Some(PhaseState::at(s, l, series.v(l)));
                }
                // Archimedean law κ² (s - s_shift) = ω/(2 v0), matched at the end
                let c = self.frame.omega.abs() / (2.0 * self.frame.v0.abs());
                let shift = end.s - c * (-2.0 * end.l).exp();
                let l = 0.5 * (c / (s - shift)).ln();
                Some(PhaseState::at(s, l, -0.5 / (s - shift)))
            }
        }
    }

    fn interpolate_samples(&self, s: f64) -> Option<PhaseState> {
        let k = self.samples.partition_point(|p| p.s <= s);
        if k == 0 || k >= self.samples.len() {
            return self.samples.last().copied();
        }
        let (a, b) = (self.samples[k - 1], self.samples[k]);
        let w = (s - a.s) / (b.s - a.s);
        Some(PhaseState::at(s, a.l + w * (b.l - a.l), a.v + w * (b.v - a.v)))
    }

    /// Signed curvature at `s`.
    pub fn kappa(&self, s: f64) -> f64 {
        self.state_at(s).map_or(0.0, |p| self.frame.kappa(p.l))
    }

    /// Number of sign changes of `v` along the samples.
    pub fn monotonicity_changes(&self) -> usize {
        let mut last = 0.0f64;
        let mut n = 0;
        for p in &self.samples {
            if p.v != 0.0 {
                if last != 0.0 && p.v.signum() != last {
                    n += 1;
                }
                last = p.v.signum();
            }
        }
        n
    }
}

pub fn archimedean_residual_at(profile: &Profile, s: f64) -> Result<f64> {
    if profile.omega() == 0.0 {
        return Err(Error::NotRotating);
    }
    let p = profile.state_at(s).ok_or(Error::TailTooShort { needed: 0.0 })?;
    let target = profile.frame.omega.abs() / (2.0 * profile.frame.v0.abs());
    Ok(((s * (2.0 * p.l).exp()) - target).abs() / target)
}

pub fn archimedean_residual(profile: &Profile) -> Result<f64> {
    if profile.omega() == 0.0 {
        return Err(Error::NotRotating);
    }
    let needed = 1e-3 * profile.medium.ratio();
    let deepest = profile.last();
    if deepest.l.exp() >= needed {
        return Err(Error::TailTooShort { needed });
    }
    archimedean_residual_at(profile, deepest.s)
}

/// Cumulative `∫ κ` and, optionally, `∫ (cos θ, sin θ)` along increasing
/// arclengths, with panels turning at most `MAX_PANEL_TURN`.
struct March<'a> {
    profile: &'a Profile,
    theta0: f64,
    s: f64,
    turn: f64,
    x: f64,
    y: f64,
}

impl<'a> March<'a> {
    fn new(profile: &'a Profile, theta0: f64) -> Self {
        Self { profile, theta0, s: 0.0, turn: 0.0, x: 0.0, y: 0.0 }
    }

    fn advance(&mut self, to: f64, with_xy: bool) {
        while self.s < to {
            let a = self.s;
            let k = self.profile.kappa(a).abs().max(1e-300);
            let mut w = (MAX_PANEL_TURN / k).min(to - a);
            // shrink until the far end turns slowly as well
            while w > 1e-9 && self.profile.kappa(a + w).abs() * w > 2.0 * MAX_PANEL_TURN {
                w *= 0.5;
            }
            let b = if to - a - w < 1e-12 * to.abs().max(1.0) { to } else { a + w };
            if with_xy {
                let kap = |u: f64| self.profile.kappa(u);
                let t0 = self.turn;
                let theta = |u: f64| self.theta0 - (t0 + gauss5(kap, a, u));
                self.x += gauss5(|u| theta(u).cos(), a, b);
                self.y += gauss5(|u| theta(u).sin(), a, b);
            }
            self.turn += gauss5(|u| self.profile.kappa(u), a, b);
            self.s = b;
        }
    }
}

/// `∫_0^s κ` at each of the non-decreasing arclengths `s`.
pub fn turning(profile: &Profile, s: &[f64]) -> Vec<f64> {
    let mut m = March::new(profile, 0.0);
    s.iter()
        .map(|&si| {
            m.advance(si, false);
            m.turn
        })
        .collect()
}

/// `θ(s, t) = ω t + θ00 - ∫_0^s κ` at the non-decreasing arclengths `s`.
pub fn front_angle(profile: &Profile, t: f64, theta00: f64, s: &[f64]) -> Vec<f64> {
    let th0 = profile.frame.omega * t + theta00;
    turning(profile, s).into_iter().map(|tu| th0 - tu).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TipSample {
    pub t: f64,
    pub x0: f64,
    pub y0: f64,
    pub theta0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TipPath {
    pub samples: Vec<TipSample>,
    pub center: Option<(f64, f64)>,
    pub radius: Option<f64>,
}

impl TipPath {
    /// Shoelace area of the sampled path, positive when counterclockwise.
    pub fn signed_area(&self) -> f64 {
        let p = &self.samples;
        let mut a = 0.0;
        for k in 0..p.len() {
            let (u, w) = (&p[k], &p[(k + 1) % p.len()]);
            a += u.x0 * w.y0 - w.x0 * u.y0;
        }
        0.5 * a
    }
}

/// Closed-form tip motion: position, angle, and the circle for ω ≠ 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TipMotion {
    pub omega: f64,
    pub theta00: f64,
    pub origin: (f64, f64),
    /// `D κ0 - V0` in the signed frame.
    pub a: f64,
    pub g: f64,
}

impl TipMotion {
    pub fn new(profile: &Profile, origin: (f64, f64), theta00: f64) -> Self {
        let f = &profile.frame;
        Self { omega: f.omega, theta00, origin, a: f.d * f.kappa(profile.tip.l0) - f.v0, g: profile.tip.g }
    }

    pub fn theta0(&self, t: f64) -> f64 {
        self.omega * t + self.theta00
    }

    pub fn center(&self) -> Option<(f64, f64)> {
        if self.omega == 0.0 {
            return None;
        }
        let (c, s) = (self.theta00.cos(), self.theta00.sin());
        Some((
            self.origin.0 + (self.a * c + self.g * s) / self.omega,
            self.origin.1 + (self.a * s - self.g * c) / self.omega,
        ))
    }

    pub fn radius(&self) -> Option<f64> {
        (self.omega != 0.0).then(|| self.a.hypot(self.g) / self.omega.abs())
    }

    pub fn position(&self, t: f64) -> (f64, f64) {
        let th = self.theta0(t);
        match self.center() {
            Some((xc, yc)) => (
                xc + (-self.a * th.cos() - self.g * th.sin()) / self.omega,
                yc + (-self.a * th.sin() + self.g * th.cos()) / self.omega,
            ),
            None => {
                let (c, s) = (th.cos(), th.sin());
                (self.origin.0 + (self.a * s - self.g * c) * t, self.origin.1 + (-self.a * c - self.g * s) * t)
            }
        }
    }
}

pub fn tip_path(profile: &Profile, t_max: f64, n: usize, origin: (f64, f64), theta00: f64) -> Result<TipPath> {
    if n < 2 {
        return Err(Error::invalid("tip path needs at least two samples"));
    }
    let m = TipMotion::new(profile, origin, theta00);
    let samples = (0..n)
        .map(|k| {
            let t = t_max * k as f64 / (n - 1) as f64;
            let (x0, y0) = m.position(t);
            TipSample { t, x0, y0, theta0: m.theta0(t) }
        })
        .collect();
    Ok(TipPath { samples, center: m.center(), radius: m.radius() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub s: f64,
    pub kappa: f64,
    pub theta: f64,
    pub x: f64,
    pub y: f64,
}

/// `n` samples of the front at time `t`, uniform in `s ∈ [0, s_max]`,
/// starting from the tip position `tip_point`.
pub fn sample_curve(
    profile: &Profile,
    t: f64,
    theta00: f64,
    s_max: f64,
    n: usize,
    tip_point: (f64, f64),
) -> Result<Vec<CurveSample>> {
    if n < 2 || !(s_max > 0.0) {
        return Err(Error::invalid("curve needs n ≥ 2 and s_max > 0"));
    }
    let th0 = profile.frame.omega * t + theta00;
    let mut m = March::new(profile, th0);
    Ok((0..n)
        .map(|k| {
            let s = if k == n - 1 { s_max } else { s_max * k as f64 / (n - 1) as f64 };
            m.advance(s, true);
            CurveSample { s, kappa: profile.kappa(s), theta: th0 - m.turn, x: tip_point.0 + m.x, y: tip_point.1 + m.y }
        })
        .collect())
}
