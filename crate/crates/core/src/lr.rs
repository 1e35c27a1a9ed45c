//! Two-phase learning-rate schedule as a function of tokens seen.
//!
//! Phase 1 follows a half-cosine from `lr_max` toward `lr_min` laid out over
//! the whole run, so at the phase boundary it has only reached some
//! intermediate value `L1`. Phase 2 restarts the decay from `L1` and lands on
//! the final LR at the last token.

use std::f64::consts::PI;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::blend::TrainingPlan;
use crate::error::{Error, Result};

pub const DEFAULT_LR_MAX: f64 = 3e-4;
pub const DEFAULT_LR_MIN: f64 = 3e-6;
pub const GLOBAL_BATCH: u64 = 1536;
pub const SEQUENCE_LENGTH: u64 = 4096;
pub const TOKENS_PER_STEP: u64 = GLOBAL_BATCH * SEQUENCE_LENGTH;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decay {
    Cosine,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrConfig {
    pub lr_max: f64,
    pub lr_min: f64,
    /// Where phase 2 ends; `lr_min` when unset. Zero gives decay-to-zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_lr: Option<f64>,
    pub decay: Decay,
    pub total_tokens: u64,
    pub phase1_tokens: u64,
}

impl LrConfig {
    pub fn new(total_tokens: u64, phase1_tokens: u64) -> Result<Self> {
        let cfg = LrConfig {
            lr_max: DEFAULT_LR_MAX,
            lr_min: DEFAULT_LR_MIN,
            final_lr: None,
            decay: Decay::Cosine,
            total_tokens,
            phase1_tokens,
        };
        cfg.check()?;
        Ok(cfg)
    }

    /// Horizon and phase boundary taken from a plan.
    pub fn from_plan(plan: &TrainingPlan) -> Result<Self> {
        LrConfig::new(plan.total_tokens, plan.phase1.token_budget)
    }

    pub fn with_decay(mut self, decay: Decay) -> Self {
        self.decay = decay;
        self
    }

    pub fn final_lr(&self) -> f64 {
        self.final_lr.unwrap_or(self.lr_min)
    }

    pub fn check(&self) -> Result<()> {
        let ok = self.lr_min >= 0.0
            && self.lr_min <= self.lr_max
            && self.lr_max.is_finite()
            && (0.0..=self.lr_min).contains(&self.final_lr())
            && self.phase1_tokens > 0
            && self.phase1_tokens <= self.total_tokens;
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "LR config needs 0 <= final <= lr_min <= lr_max and 0 < T1 <= T: {self:?}"
            )))
        }
    }
}

/// Fraction of the way down a decay curve at position `x` in [0, 1].
fn drop(decay: Decay, x: f64) -> f64 {
    match decay {
        Decay::Cosine => (1.0 - (PI * x).cos()) / 2.0,
        Decay::Linear => x,
    }
}

/// Learning rate after `t` tokens.
pub fn lr_at(cfg: &LrConfig, t: u64) -> Result<f64> {
    cfg.check()?;
    if t > cfg.total_tokens {
        return Err(Error::Domain(format!("t = {t} is past the horizon {}", cfg.total_tokens)));
    }
    if t == cfg.total_tokens {
        return Ok(cfg.final_lr());
    }
    let total = cfg.total_tokens as f64;
    if t <= cfg.phase1_tokens {
        let x = t as f64 / total;
        return Ok(cfg.lr_max - (cfg.lr_max - cfg.lr_min) * drop(cfg.decay, x));
    }
    let start = phase_boundary_lr(cfg)?;
    let x = (t - cfg.phase1_tokens) as f64 / (cfg.total_tokens - cfg.phase1_tokens) as f64;
    Ok(start - (start - cfg.final_lr()) * drop(cfg.decay, x))
}

/// LR at the end of phase 1, where phase 2 starts.
pub fn phase_boundary_lr(cfg: &LrConfig) -> Result<f64> {
    cfg.check()?;
    if cfg.phase1_tokens == cfg.total_tokens {
        return Ok(cfg.final_lr());
    }
    let x = cfg.phase1_tokens as f64 / cfg.total_tokens as f64;
    Ok(cfg.lr_max - (cfg.lr_max - cfg.lr_min) * drop(cfg.decay, x))
}

/// `(tokens, lr)` every `stride` tokens, always ending at the horizon.
pub fn sample(cfg: &LrConfig, stride: u64) -> Result<Vec<(u64, f64)>> {
    if stride == 0 {
        return Err(Error::Domain("stride must be positive".to_string()));
    }
    let mut out = Vec::new();
    let mut t = 0u64;
    loop {
        out.push((t, lr_at(cfg, t)?));
        if t == cfg.total_tokens {
            break;
        }
        t = t.saturating_add(stride).min(cfg.total_tokens);
    }
    Ok(out)
}

pub fn write_csv<W: Write>(points: &[(u64, f64)], mut out: W) -> io::Result<()> {
    writeln!(out, "tokens,lr")?;
    for (t, lr) in points {
        writeln!(out, "{t},{lr:e}")?;
    }
    Ok(())
}

/// Tokens consumed after `step` optimizer steps at the default batch shape.
pub fn tokens_at_step(step: u64) -> u64 {
    step * TOKENS_PER_STEP
}
