use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::OptimError;

/// SGDR: cosine-annealed cycles with warm restarts. Cycle `i` lasts
/// `t0 * t_mult^i` steps and its peak amplitude above `lr_min` shrinks by
/// `decay` at every restart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub lr_min: f64,
    pub lr_max: f64,
    pub t0: f64,
    pub t_mult: f64,
    pub decay: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            lr_min: 1e-4,
            lr_max: 1e-3,
            t0: 50.0,
            t_mult: 2.0,
            decay: 0.85,
        }
    }
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        let bad = |m: String| Err(OptimError::InvalidConfig(m));
        // lr_min == lr_max is allowed and means a constant rate.
        if !(self.lr_min > 0.0 && self.lr_min <= self.lr_max && self.lr_max.is_finite()) {
            return bad(format!(
                "need 0 < lr_min <= lr_max, got {} and {}",
                self.lr_min, self.lr_max
            ));
        }
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return bad(format!("t0 must be positive, got {}", self.t0));
        }
        if !(self.t_mult >= 1.0 && self.t_mult.is_finite()) {
            return bad(format!("t_mult must be at least 1, got {}", self.t_mult));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return bad(format!("decay must be in (0, 1], got {}", self.decay));
        }
        Ok(())
    }

    pub fn constant(lr: f64) -> Self {
        Self {
            lr_min: lr,
            lr_max: lr,
            t0: 1.0,
            t_mult: 1.0,
            decay: 1.0,
        }
    }
}

/// Position within the schedule: cycle index, steps into the cycle, cycle
/// length and the cycle's peak rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CyclePosition {
    pub cycle: u32,
    pub t_cur: f64,
    pub length: f64,
    pub peak: f64,
}

pub fn sgdr_position(global_step: u64, config: &ScheduleConfig) -> CyclePosition {
    let mut t_cur = global_step as f64;
    let mut length = config.t0;
    let mut amplitude = config.lr_max - config.lr_min;
    let mut cycle = 0;
    while t_cur >= length {
        t_cur -= length;
        length *= config.t_mult;
        amplitude *= config.decay;
        cycle += 1;
    }
    CyclePosition {
        cycle,
        t_cur,
        length,
        peak: config.lr_min + amplitude,
    }
}

pub fn sgdr_lr(global_step: u64, config: &ScheduleConfig) -> f64 {
    if config.lr_max == config.lr_min {
        return config.lr_max;
    }
    let pos = sgdr_position(global_step, config);
    if pos.t_cur == 0.0 {
        return pos.peak;
    }
    let cos = (PI * pos.t_cur / pos.length).cos();
    config.lr_min + 0.5 * (pos.peak - config.lr_min) * (1.0 + cos)
}
