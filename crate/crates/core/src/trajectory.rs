//! Uniformly sampled trajectories in the disk: RK4 simulation, velocity
//! estimates and the `t,re,im` CSV format.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::symbols::RationalSymbol;

pub const DEFAULT_DISK_MARGIN: f64 = 1e-3;
pub const DEFAULT_POLE_BALL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dt: f64,
    samples: Vec<Complex64>,
    meta: Option<String>,
}

impl Trajectory {
    pub fn new(dt: f64, samples: Vec<Complex64>, meta: Option<String>) -> Result<Self> {
        Self::with_margin(dt, samples, meta, DEFAULT_DISK_MARGIN)
    }

    pub fn with_margin(dt: f64, samples: Vec<Complex64>, meta: Option<String>, disk_margin: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvariantViolation(format!("time step {dt} must be positive")));
        }
        if samples.len() < 3 {
            return Err(Error::InvariantViolation(format!(
                "a trajectory needs at least 3 samples, got {}",
                samples.len()
            )));
        }
        let limit = 1.0 - disk_margin;
        if let Some((s, z)) = samples
            .iter()
            .enumerate()
            .find(|(_, z)| !(z.norm() <= limit))
        {
            return Err(Error::InvariantViolation(format!(
                "sample {s} = {z} has modulus {} > {limit}",
                z.norm()
            )));
        }
        Ok(Self { dt, samples, meta })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn meta(&self) -> Option<&str> {
        self.meta.as_deref()
    }

    /// `T = dt (len - 1)`.
    pub fn duration(&self) -> f64 {
        self.dt * (self.samples.len() - 1) as f64
    }

    pub fn time(&self, s: usize) -> f64 {
        s as f64 * self.dt
    }

    pub fn first(&self) -> Complex64 {
        self.samples[0]
    }

    pub fn last(&self) -> Complex64 {
        self.samples[self.samples.len() - 1]
    }

    /// Contiguous sub-trajectory over samples `start..=end`.
    pub fn window(&self, start: usize, end: usize) -> Result<Self> {
        if end >= self.samples.len() || start >= end {
            return Err(Error::InvalidInput(format!(
                "window {start}..={end} outside 0..{}",
                self.samples.len()
            )));
        }
        Self::with_margin(self.dt, self.samples[start..=end].to_vec(), self.meta.clone(), 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Guards {
    pub pole_ball: f64,
    pub disk_margin: f64,
}

impl Default for Guards {
    fn default() -> Self {
        Self {
            pole_ball: DEFAULT_POLE_BALL,
            disk_margin: DEFAULT_DISK_MARGIN,
        }
    }
}

impl Guards {
    fn violation(&self, f: &RationalSymbol, z: Complex64) -> Option<String> {
        if !(z.norm() <= 1.0 - self.disk_margin) {
            return Some(format!("|z| = {} exceeds 1 - {}", z.norm(), self.disk_margin));
        }
        let (d, pole) = f.pole_distance(z);
        if d < self.pole_ball {
            return Some(format!(
                "distance {d:.3e} to pole {} is below {}",
                pole.unwrap_or_default(),
                self.pole_ball
            ));
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuardTrip {
    /// Time of the RK stage (or accepted point) that violated a guard.
    pub at_time: f64,
    pub reason: String,
}

/// Result of [`simulate_rk4`]: the trajectory up to the last valid sample,
/// plus the guard trip that stopped integration early, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub trajectory: Trajectory,
    pub guard_trip: Option<GuardTrip>,
}

/// Classical fixed-step RK4 for `z' = f(z)` on the grid `0, dt, ..., T`.
///
/// Every stage point is checked against the guards, so a step cannot jump
/// across a pole. On a trip the integration stops at the last accepted
/// sample; fewer than 3 accepted samples is an error.
pub fn simulate_rk4(f: &RationalSymbol, z0: Complex64, t_end: f64, dt: f64, guards: Guards) -> Result<Simulation> {
    if !(dt > 0.0 && dt.is_finite() && t_end.is_finite()) || dt > t_end {
        return Err(Error::InvalidStart(format!("need 0 < dt <= T, got dt = {dt}, T = {t_end}")));
    }
    if let Some(reason) = guards.violation(f, z0) {
        return Err(Error::InvalidStart(format!("z0 = {z0}: {reason}")));
    }

    let steps = (t_end / dt).round() as usize;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(z0);
    let mut guard_trip = None;

    let eval = |z: Complex64, t: f64| -> std::result::Result<Complex64, GuardTrip> {
        if let Some(reason) = guards.violation(f, z) {
            return Err(GuardTrip { at_time: t, reason });
        }
        f.eval(z).map_err(|e| GuardTrip {
            at_time: t,
            reason: e.to_string(),
        })
    };

    let mut z = z0;
    for s in 0..steps {
        let t = s as f64 * dt;
        let step = || -> std::result::Result<Complex64, GuardTrip> {
            let k1 = eval(z, t)?;
            let k2 = eval(z + k1 * (0.5 * dt), t + 0.5 * dt)?;
            let k3 = eval(z + k2 * (0.5 * dt), t + 0.5 * dt)?;
            let k4 = eval(z + k3 * dt, t + dt)?;
            let next = z + (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (dt / 6.0);
            if let Some(reason) = guards.violation(f, next) {
                return Err(GuardTrip { at_time: t + dt, reason });
            }
            Ok(next)
        };
        match step() {
            Ok(next) => {
                z = next;
                samples.push(z);
            }
            Err(trip) => {
                guard_trip = Some(trip);
                break;
            }
        }
    }

    if samples.len() < 3 {
        let at_time = guard_trip.as_ref().map_or(0.0, |g| g.at_time);
        return Err(Error::GuardTripped { at_time });
    }
    let meta = Some(format!("z' = ({}) / ({}), z0 = {z0}", f.p(), f.q()));
    let trajectory = Trajectory::with_margin(dt, samples, meta, guards.disk_margin)?;
    Ok(Simulation { trajectory, guard_trip })
}

/// Second-order finite-difference velocity: central in the interior,
/// one-sided three-point stencils at both ends.
pub fn velocity_estimate(traj: &Trajectory) -> Vec<Complex64> {
    let g = traj.samples();
    let n = g.len();
    let h2 = 2.0 * traj.dt();
    let mut v = Vec::with_capacity(n);
    v.push((4.0 * (g[1] - g[0]) - (g[2] - g[0])) / h2);
    for s in 1..n - 1 {
        v.push((g[s + 1] - g[s - 1]) / h2);
    }
    v.push((4.0 * (g[n - 1] - g[n - 2]) - (g[n - 1] - g[n - 3])) / h2);
    v
}

/// `f(gamma(t_s))` along the trajectory.
pub fn exact_velocity(traj: &Trajectory, f: &RationalSymbol) -> Result<Vec<Complex64>> {
    traj.samples().iter().map(|&z| f.eval(z)).collect()
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_csv_string(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(64 * (traj.len() + 1));
    if let Some(meta) = traj.meta() {
        for line in meta.lines() {
            let _ = writeln!(out, "# {line}");
        }
    }
    out.push_str("t,re,im\n");
    for (s, z) in traj.samples().iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", fmt_f64(traj.time(s)), fmt_f64(z.re), fmt_f64(z.im));
    }
    out
}

pub fn write_csv(traj: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_csv_string(traj))?;
    Ok(())
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Trajectory> {
    parse_csv(&fs::read_to_string(path)?)
}

pub fn parse_csv(text: &str) -> Result<Trajectory> {
    let mut meta = Vec::new();
    let mut header_seen = false;
    let mut times = Vec::new();
    let mut samples = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if !header_seen {
            if let Some(comment) = line.strip_prefix('#') {
                meta.push(comment.trim_start().to_string());
                continue;
            }
            if line.trim() != "t,re,im" {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected header 't,re,im', found '{line}'"),
                });
            }
            header_seen = true;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let mut nums = [0.0; 3];
        for (slot, field) in nums.iter_mut().zip(&fields) {
            *slot = field.parse::<f64>().map_err(|e| Error::Parse {
                line: line_no,
                message: format!("'{field}': {e}"),
            })?;
            if !slot.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("non-finite value '{field}'"),
                });
            }
        }
        times.push((line_no, nums[0]));
        samples.push(Complex64::new(nums[1], nums[2]));
    }

    if !header_seen {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            message: "missing header 't,re,im'".into(),
        });
    }
    if samples.len() < 3 {
        return Err(Error::Parse {
            line: text.lines().count(),
            message: format!("need at least 3 samples, found {}", samples.len()),
        });
    }
    let (first_line, t0) = times[0];
    if t0 != 0.0 {
        return Err(Error::Parse {
            line: first_line,
            message: format!("time must start at 0, found {t0}"),
        });
    }
    let dt = times[1].1;
    if !(dt > 0.0) {
        return Err(Error::Parse {
            line: times[1].0,
            message: format!("non-increasing time {dt}"),
        });
    }
    for (s, &(line, t)) in times.iter().enumerate() {
        let expected = s as f64 * dt;
        if (t - expected).abs() > 1e-9 * expected.abs().max(1.0) {
            return Err(Error::Parse {
                line,
                message: format!("non-uniform grid: t = {t}, expected {expected}"),
            });
        }
    }
    let meta = if meta.is_empty() { None } else { Some(meta.join("\n")) };
    Trajectory::new(dt, samples, meta)
}

/// Plot data: `t,dist` with the distance to the nearest of `points`.
pub fn distance_csv_string(traj: &Trajectory, points: &[Complex64]) -> String {
    let mut out = String::from("t,dist\n");
    for (s, z) in traj.samples().iter().enumerate() {
        let d = points
            .iter()
            .map(|p| (z - p).norm())
            .fold(f64::INFINITY, f64::min);
        let _ = writeln!(out, "{},{}", fmt_f64(traj.time(s)), fmt_f64(d));
    }
    out
}
