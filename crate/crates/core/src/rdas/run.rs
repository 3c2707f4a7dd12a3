//! Spiral initiation, time stepping with tip recording, and loop centers.

use std::io::Write;

use super::field::Field2D;
use super::model::{RdasModel, Stepper};
use super::tip::tip_locate;
use crate::config::RdasConfig;
use crate::error::{Error, Result};
use crate::num::{cst, Real};

/// One recorded tip position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TipSample<T> {
    pub step: u64,
    pub t: T,
    pub x1: T,
    pub x2: T,
}

/// One full turn of the tip and the mean position over it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Revolution<T> {
    pub t_start: T,
    pub t_end: T,
    pub center: (T, T),
}

/// Recorded tip positions with the derived loop centers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TipPath<T> {
    pub samples: Vec<TipSample<T>>,
    /// Steps at which a record was due but no tip was found.
    pub missing: Vec<u64>,
    pub revolutions: Vec<Revolution<T>>,
    pub loop_center: Option<(T, T)>,
}

impl<T: Real> TipPath<T> {
    /// Recomputes revolutions and the loop center from the samples.
    pub fn finish(&mut self) {
        self.revolutions = revolutions(&self.samples);
        self.loop_center = self.revolutions.last().map(|r| r.center);
    }

    /// Largest distance between consecutive centers among the last `k` revolutions.
    pub fn center_spread(&self, k: usize) -> Option<T> {
        let revs = &self.revolutions;
        if revs.len() < k.max(2) {
            return None;
        }
        let tail = &revs[revs.len() - k.max(2)..];
        Some(
            tail.windows(2)
                .map(|w| (w[1].center.0 - w[0].center.0).hypot(w[1].center.1 - w[0].center.1))
                .fold(T::zero(), T::max),
        )
    }

    /// CSV with columns `step,t,x1,x2`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "step,t,x1,x2")?;
        for s in &self.samples {
            writeln!(out, "{},{:e},{:e},{:e}", s.step, s.t, s.x1, s.x2)?;
        }
        Ok(())
    }
}

/// Splits the tip path into turns by accumulating the heading of successive
/// displacements; each `2pi` of winding closes one revolution.
pub fn revolutions<T: Real>(samples: &[TipSample<T>]) -> Vec<Revolution<T>> {
    let mut out = Vec::new();
    if samples.len() < 3 {
        return out;
    }
    let tau = T::TAU();
    let pi = T::PI();
    let mut start = 0;
    let mut winding = T::zero();
    let mut previous: Option<T> = None;
    for k in 1..samples.len() {
        let (a, b) = (&samples[k - 1], &samples[k]);
        let (dx, dy) = (b.x1 - a.x1, b.x2 - a.x2);
        if dx == T::zero() && dy == T::zero() {
            continue;
        }
        let heading = dy.atan2(dx);
        if let Some(p) = previous {
            let mut d = heading - p;
            while d > pi {
                d -= tau;
            }
            while d < -pi {
                d += tau;
            }
            winding += d;
        }
        previous = Some(heading);
        if winding.abs() >= tau {
            let span = &samples[start..k];
            let count: T = cst(span.len() as f64);
            let cx = span.iter().map(|s| s.x1).sum::<T>() / count;
            let cy = span.iter().map(|s| s.x2).sum::<T>() / count;
            out.push(Revolution { t_start: samples[start].t, t_end: samples[k].t, center: (cx, cy) });
            start = k;
            winding -= tau.copysign(winding);
        }
    }
    out
}

/// Broken-front initial data: `u` excited on `x2 > c2`, `v` ramped in `x1`
/// from rest to refractory across `c1`.
pub fn init_spiral<T: Real>(cfg: &RdasConfig, model: &RdasModel<T>) -> Result<(Field2D<T>, Field2D<T>)> {
    let init = &cfg.init;
    let (ur, vr) = model.rest;
    let (c1, c2): (T, T) = (cst(init.center[0]), cst(init.center[1]));
    let ue: T = cst(init.u_excited);
    let dv: T = cst(init.v_offset);
    let w: T = cst(init.ramp_width);
    let half: T = cst(0.5);
    let u = Field2D::from_fn(model.n, model.h, model.origin, |_, x2| if x2 > c2 { ue } else { ur })?;
    let v = Field2D::from_fn(model.n, model.h, model.origin, |x1, _| {
        let s = ((x1 - c1) / w + half).max(T::zero()).min(T::one());
        vr + dv * s
    })?;
    Ok((u, v))
}

/// Fields at a given step.
#[derive(Debug, Clone, PartialEq)]
pub struct RdasState<T> {
    pub u: Field2D<T>,
    pub v: Field2D<T>,
    pub step: u64,
}

/// A running simulation.
pub struct Simulation<T> {
    pub model: RdasModel<T>,
    pub state: RdasState<T>,
    pub path: TipPath<T>,
    u_star: T,
    v_star: T,
    record_stride: u64,
    stepper: Stepper<T>,
    last_tip: Option<(T, T)>,
}

impl<T: Real> Simulation<T> {
    pub fn new(cfg: &RdasConfig, model: RdasModel<T>, state: RdasState<T>) -> Result<Self> {
        if state.u.n() != model.n || state.v.n() != model.n {
            return Err(Error::Config("initial fields do not match the configured grid".into()));
        }
        if !(state.u.all_finite() && state.v.all_finite()) {
            return Err(Error::NonFinite(0.0));
        }
        let stepper = Stepper::new(model.n);
        Ok(Self {
            model,
            state,
            path: TipPath::default(),
            u_star: cst(cfg.u_star),
            v_star: cst(cfg.v_star),
            record_stride: cfg.record_stride,
            stepper,
            last_tip: None,
        })
    }

    /// A fresh run from the broken-front initial data.
    pub fn start(cfg: &RdasConfig) -> Result<Self> {
        let model = RdasModel::new(cfg)?;
        let (u, v) = init_spiral(cfg, &model)?;
        Self::new(cfg, model, RdasState { u, v, step: 0 })
    }

    pub fn time(&self) -> T {
        self.model.dt * cst(self.state.step as f64)
    }

    fn record(&mut self) {
        let step = self.state.step;
        match tip_locate(&self.state.u, &self.state.v, self.u_star, self.v_star, self.last_tip) {
            Some((x1, x2)) => {
                self.last_tip = Some((x1, x2));
                self.path.samples.push(TipSample { step, t: self.time(), x1, x2 });
            }
            None => self.path.missing.push(step),
        }
    }

    /// Steps until `target`, recording the tip on every stride boundary
    /// (including the current step if it is one and nothing was recorded yet).
    pub fn advance_to(&mut self, target: u64, mut on_step: impl FnMut(&RdasState<T>) -> Result<()>) -> Result<()> {
        let already = |p: &TipPath<T>, s: u64| p.samples.last().map(|x| x.step) == Some(s) || p.missing.last() == Some(&s);
        if self.state.step.is_multiple_of(self.record_stride) && !already(&self.path, self.state.step) {
            self.record();
        }
        while self.state.step < target {
            let step = self.state.step + 1;
            self.stepper.rk2_step(&self.model, &mut self.state.u, &mut self.state.v, step)?;
            self.state.step = step;
            if step.is_multiple_of(self.record_stride) {
                self.record();
            }
            on_step(&self.state)?;
        }
        Ok(())
    }

    /// Finalizes the tip path and checks that the spiral survived the late part of the run.
    pub fn finish(mut self, late_fraction: f64) -> Result<(TipPath<T>, RdasState<T>)> {
        self.path.finish();
        let end = self.state.step;
        let late_from = ((1.0 - late_fraction) * end as f64).floor() as u64;
        let found = self.path.samples.iter().filter(|s| s.step >= late_from).count();
        let missing = self.path.missing.iter().filter(|s| **s >= late_from).count();
        let total = found + missing;
        if total > 0 && missing * 10 > total {
            return Err(Error::LostSpiral { missing, total });
        }
        Ok((self.path, self.state))
    }
}

/// Runs the configured experiment to `t_end`.
pub fn run<T: Real>(cfg: &RdasConfig) -> Result<(TipPath<T>, RdasState<T>)> {
    let mut sim = Simulation::<T>::start(cfg)?;
    sim.advance_to(cfg.steps(), |_| Ok(()))?;
    sim.finish(cfg.late_fraction)
}
