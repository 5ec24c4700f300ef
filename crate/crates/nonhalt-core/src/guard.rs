//! Sampler-side countermeasures: a hard output limit and an online loop
//! detector that terminates degenerate streams.

use crate::cycle::StreamingDetector;
use crate::error::{Error, Result};
use crate::symbol::Symbol;

/// Guard configuration.
///
/// `loop_min_repeats` must be at least 2: a single occurrence is never a
/// loop. The default of 3 treats one repetition as legitimate emphasis and
/// two as possibly stylistic; three full cycles terminate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GuardPolicy {
    pub hard_limit: usize,
    pub loop_c_max: usize,
    pub loop_min_repeats: usize,
    pub hard_limit_enabled: bool,
    pub loop_detection_enabled: bool,
}

impl Default for GuardPolicy {
    fn default() -> Self {
        Self {
            hard_limit: 4096,
            loop_c_max: 64,
            loop_min_repeats: 3,
            hard_limit_enabled: true,
            loop_detection_enabled: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminationReason {
    HardLimit,
    Loop { b: usize, c: usize, r_obs: usize },
}

impl std::fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TerminationReason::HardLimit => write!(f, "HARD_LIMIT"),
            TerminationReason::Loop { b, c, r_obs } => {
                write!(f, "LOOP(b={b} c={c} r_obs={r_obs})")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GuardAction {
    Pass,
    Terminate(TerminationReason),
}

/// Per-stream guard state; feed each output unit before emitting it.
#[derive(Debug)]
pub struct GuardState {
    policy: GuardPolicy,
    detector: StreamingDetector,
    fed: usize,
    terminated: Option<TerminationReason>,
}

impl GuardState {
    pub fn new(policy: GuardPolicy) -> Result<Self> {
        if policy.hard_limit == 0 {
            return Err(Error::InvalidGuardPolicy(
                "hard_limit must be at least 1".into(),
            ));
        }
        if policy.loop_min_repeats < 2 {
            return Err(Error::InvalidGuardPolicy(
                "loop_min_repeats must be at least 2".into(),
            ));
        }
        if policy.loop_c_max == 0 {
            return Err(Error::InvalidGuardPolicy(
                "loop_c_max must be at least 1".into(),
            ));
        }
        Ok(Self {
            policy,
            detector: StreamingDetector::new(policy.loop_c_max, policy.loop_min_repeats),
            fed: 0,
            terminated: None,
        })
    }

    pub fn policy(&self) -> &GuardPolicy {
        &self.policy
    }

    pub fn terminated(&self) -> Option<TerminationReason> {
        self.terminated
    }

    pub fn fed(&self) -> usize {
        self.fed
    }

    /// Inspect the next output unit. The hard limit is checked before the
    /// unit is admitted, so no stream ever passes more than `hard_limit`
    /// units; feeding after termination is a usage error.
    pub fn feed(&mut self, next: Symbol) -> Result<GuardAction> {
        if self.terminated.is_some() {
            return Err(Error::GuardTerminated);
        }
        self.fed += 1;
        if self.policy.hard_limit_enabled && self.fed > self.policy.hard_limit {
            let reason = TerminationReason::HardLimit;
            self.terminated = Some(reason);
            return Ok(GuardAction::Terminate(reason));
        }
        if let Some(summary) = self.detector.feed(next) {
            if self.policy.loop_detection_enabled {
                let reason = TerminationReason::Loop {
                    b: summary.b,
                    c: summary.c,
                    r_obs: summary.r_obs,
                };
                self.terminated = Some(reason);
                return Ok(GuardAction::Terminate(reason));
            }
        }
        Ok(GuardAction::Pass)
    }

    /// Symbols admitted so far (the guarded stream).
    pub fn stream(&self) -> &[Symbol] {
        self.detector.stream()
    }
}
