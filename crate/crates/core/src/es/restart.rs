use rand::Rng;

use crate::configuration::RestartRegime;

/// Population size and initial step size for the next local run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalPlan {
    pub lambda: usize,
    pub sigma0: f64,
}

/// Restart bookkeeping across the local runs of one ES run.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartState {
    pub regime: RestartRegime,
    pub restarts_done: u32,
    pub lambda_default: usize,
    pub sigma_default: f64,
    /// Latest large-regime population size (BIPOP); starts at the default.
    pub lambda_large: usize,
    pub budget_large: u64,
    pub budget_small: u64,
    current_is_large: bool,
    /// Best objective value of each generation in the current local run.
    pub stagnation_history: Vec<f64>,
}

impl RestartState {
    pub fn new(regime: RestartRegime, lambda_default: usize, sigma_default: f64) -> Self {
        RestartState {
            regime,
            restarts_done: 0,
            lambda_default,
            sigma_default,
            lambda_large: lambda_default,
            budget_large: 0,
            budget_small: 0,
            current_is_large: true,
            stagnation_history: Vec::new(),
        }
    }

    pub fn initial_plan(&self) -> LocalPlan {
        LocalPlan {
            lambda: self.lambda_default,
            sigma0: self.sigma_default,
        }
    }

    /// Records the end of a local run that consumed `consumed` evaluations and
    /// returns the plan for the next one, or `None` when no restart happens.
    pub fn next_plan<R: Rng + ?Sized>(&mut self, consumed: u64, rng: &mut R) -> Option<LocalPlan> {
        self.stagnation_history.clear();
        match self.regime {
            RestartRegime::None => None,
            RestartRegime::Ipop => {
                self.restarts_done += 1;
                let factor = 1usize
                    .checked_shl(self.restarts_done.min(40))
                    .unwrap_or(usize::MAX);
                Some(LocalPlan {
                    lambda: self.lambda_default.saturating_mul(factor),
                    sigma0: self.sigma_default,
                })
            }
            RestartRegime::Bipop => {
                self.restarts_done += 1;
                if self.current_is_large {
                    self.budget_large += consumed;
                } else {
                    self.budget_small += consumed;
                }
                if self.budget_small < self.budget_large {
                    let u: f64 = rng.random();
                    let ratio = self.lambda_large as f64 / (2.0 * self.lambda_default as f64);
                    let lambda = (self.lambda_default as f64 * ratio.powf(u * u)).floor() as usize;
                    self.current_is_large = false;
                    Some(LocalPlan {
                        lambda: lambda.max(self.lambda_default),
                        sigma0: self.sigma_default * 10f64.powf(-2.0 * u),
                    })
                } else {
                    self.lambda_large = self.lambda_large.saturating_mul(2);
                    self.current_is_large = true;
                    Some(LocalPlan {
                        lambda: self.lambda_large,
                        sigma0: self.sigma_default,
                    })
                }
            }
        }
    }
}
