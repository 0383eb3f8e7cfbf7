//! Sampled trajectories and jump detection.

use crate::error::{Error, Result};

pub const JUMP_ENV: u8 = 1;
pub const JUMP_ARGMAX: u8 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub env: Vec<f64>,
    pub rho: f64,
    pub xbar_left: f64,
    pub xbar_right: f64,
    pub j: f64,
    pub k: f64,
    pub residual: f64,
    pub lipschitz: f64,
    pub min_second_diff: f64,
}

/// Column-oriented time series; every column has one entry per sample.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    /// `env[k][m]` is component `k` at sample `m`.
    pub env: Vec<Vec<f64>>,
    pub rho: Vec<f64>,
    pub xbar_left: Vec<f64>,
    pub xbar_right: Vec<f64>,
    pub j: Vec<f64>,
    pub k: Vec<f64>,
    pub residual: Vec<f64>,
    pub lipschitz: Vec<f64>,
    pub min_second_diff: Vec<f64>,
    pub jump_flags: Vec<u8>,
}

impl TimeSeries {
    pub fn new(n_env: usize) -> Self {
        Self {
            env: vec![Vec::new(); n_env],
            ..Default::default()
        }
    }

    pub fn n_env(&self) -> usize {
        self.env.len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, s: Sample) {
        debug_assert_eq!(s.env.len(), self.env.len());
        self.times.push(s.t);
        for (col, v) in self.env.iter_mut().zip(s.env) {
            col.push(v);
        }
        self.rho.push(s.rho);
        self.xbar_left.push(s.xbar_left);
        self.xbar_right.push(s.xbar_right);
        self.j.push(s.j);
        self.k.push(s.k);
        self.residual.push(s.residual);
        self.lipschitz.push(s.lipschitz);
        self.min_second_diff.push(s.min_second_diff);
        self.jump_flags.push(0);
    }

    pub fn env_at(&self, m: usize) -> Vec<f64> {
        self.env.iter().map(|c| c[m]).collect()
    }

    /// Times strictly increasing and all columns of equal length.
    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        let lens = [
            self.rho.len(),
            self.xbar_left.len(),
            self.xbar_right.len(),
            self.j.len(),
            self.k.len(),
            self.residual.len(),
            self.lipschitz.len(),
            self.min_second_diff.len(),
            self.jump_flags.len(),
        ];
        if lens.iter().any(|&l| l != n) || self.env.iter().any(|c| c.len() != n) {
            return Err(Error::Invalid("time series columns differ in length".into()));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("time series times are not strictly increasing".into()));
        }
        Ok(())
    }

    /// Recomputes `jump_flags` from the environment and left argmax columns.
    pub fn flag_jumps(&mut self, env_detector: &JumpDetector, argmax_detector: &JumpDetector) {
        let mut flags = vec![0u8; self.len()];
        for col in &self.env {
            for (m, hit) in env_detector.flags(&self.times, col).into_iter().enumerate() {
                if hit {
                    flags[m] |= JUMP_ENV;
                }
            }
        }
        for (m, hit) in argmax_detector
            .flags(&self.times, &self.xbar_left)
            .into_iter()
            .enumerate()
        {
            if hit {
                flags[m] |= JUMP_ARGMAX;
            }
        }
        self.jump_flags = flags;
    }

    /// True when no sample within `radius` samples of `m` carries a flag.
    pub fn far_from_jumps(&self, m: usize, radius: usize) -> bool {
        let lo = m.saturating_sub(radius);
        let hi = (m + radius + 1).min(self.len());
        self.jump_flags[lo..hi].iter().all(|&f| f == 0)
    }
}

/// A detected discontinuity: the value moves from `before` (sample
/// `start`) to `after` (sample `end`) faster than the trailing trend allows.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpEvent {
    pub start: usize,
    pub end: usize,
    pub t_before: f64,
    pub t_after: f64,
    pub before: f64,
    pub after: f64,
}

impl JumpEvent {
    pub fn time(&self) -> f64 {
        0.5 * (self.t_before + self.t_after)
    }

    pub fn size(&self) -> f64 {
        self.after - self.before
    }
}

/// An increment `|v[m] - v[m-1]|` is a jump when it exceeds `ratio` times
/// the median of the trailing `window` unflagged increments and also the
/// floor `max(floor_per_time * (t[m] - t[m-1]), extra_floor)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpDetector {
    pub ratio: f64,
    pub window: usize,
    pub floor_per_time: f64,
    pub extra_floor: f64,
    pub min_history: usize,
    /// Flagged increments at most this many samples apart form one event.
    pub merge_gap: usize,
}

impl Default for JumpDetector {
    fn default() -> Self {
        Self {
            ratio: 20.0,
            window: 50,
            floor_per_time: 10.0,
            extra_floor: 0.0,
            min_history: 5,
            merge_gap: 2,
        }
    }
}

impl JumpDetector {
    /// Detector for argmax trajectories: a move of a few cells is never a jump.
    pub fn for_argmax(dx: f64) -> Self {
        Self {
            extra_floor: 5.0 * dx,
            ..Self::default()
        }
    }

    /// Detector for environment trajectories with a grid-scale floor.
    pub fn for_env(extra_floor: f64) -> Self {
        Self {
            extra_floor,
            ..Self::default()
        }
    }

    pub fn flags(&self, times: &[f64], values: &[f64]) -> Vec<bool> {
        let n = values.len();
        let mut flags = vec![false; n];
        let mut history: Vec<f64> = Vec::with_capacity(self.window);
        let mut scratch = Vec::with_capacity(self.window);
        for m in 1..n {
            let inc = (values[m] - values[m - 1]).abs();
            let floor = (self.floor_per_time * (times[m] - times[m - 1])).max(self.extra_floor);
            let jump = if history.len() >= self.min_history {
                scratch.clear();
                scratch.extend_from_slice(&history);
                scratch.sort_by(|a, b| a.total_cmp(b));
                let med = median_sorted(&scratch);
                inc > self.ratio * med && inc > floor
            } else {
                false
            };
            if jump {
                flags[m] = true;
            } else {
                if history.len() == self.window {
                    history.remove(0);
                }
                history.push(inc);
            }
        }
        flags
    }

    pub fn events(&self, times: &[f64], values: &[f64]) -> Vec<JumpEvent> {
        let flags = self.flags(times, values);
        let mut events: Vec<JumpEvent> = Vec::new();
        for (m, &hit) in flags.iter().enumerate() {
            if !hit {
                continue;
            }
            match events.last_mut() {
                Some(e) if m - e.end <= self.merge_gap => {
                    e.end = m;
                    e.t_after = times[m];
                    e.after = values[m];
                }
                _ => events.push(JumpEvent {
                    start: m - 1,
                    end: m,
                    t_before: times[m - 1],
                    t_after: times[m],
                    before: values[m - 1],
                    after: values[m],
                }),
            }
        }
        events
    }
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
