use serde::{Deserialize, Serialize};

use crate::error::{BclError, Result};

/// Increasing attack budgets `ε₁ < … < ε_L` above a base `ε₀`, ending at
/// the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curriculum {
    pub eps0: f64,
    pub budgets: Vec<f64>,
    pub increment: f64,
}

/// `ε₀ + inc, ε₀ + 2·inc, …` with the last element snapped to `target`.
///
/// A step that lands within `1e-9 · inc` of the target is the target.
pub fn make_curriculum(eps0: f64, target: f64, increment: f64) -> Result<Curriculum> {
    if !(eps0 >= 0.0 && eps0 < target) {
        return Err(BclError::config(
            "curriculum.eps0",
            format!("need 0 <= eps0 < target, got eps0 = {eps0}, target = {target}"),
        ));
    }
    if !(increment > 0.0) {
        return Err(BclError::config("curriculum.increment", "increment must be > 0"));
    }
    let mut budgets = Vec::new();
    let mut i = 1u64;
    loop {
        let b = eps0 + i as f64 * increment;
        if b >= target - 1e-9 * increment {
            budgets.push(target);
            break;
        }
        budgets.push(b);
        i += 1;
    }
    Ok(Curriculum {
        eps0,
        budgets,
        increment,
    })
}

impl Curriculum {
    /// A one-budget curriculum, as used by plain adversarial training.
    pub fn singleton(eps0: f64, target: f64) -> Result<Self> {
        if !(eps0 >= 0.0 && eps0 < target) {
            return Err(BclError::config(
                "curriculum.eps0",
                "need 0 <= eps0 < target",
            ));
        }
        Ok(Self {
            eps0,
            budgets: vec![target],
            increment: target - eps0,
        })
    }

    /// `L`.
    pub fn len(&self) -> usize {
        self.budgets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.budgets.is_empty()
    }

    pub fn target(&self) -> f64 {
        *self.budgets.last().expect("curricula are never empty")
    }

    /// `ε_i` for `0 ≤ i ≤ L`; index 0 is the base.
    pub fn budget(&self, i: usize) -> f64 {
        if i == 0 {
            self.eps0
        } else {
            self.budgets[i - 1]
        }
    }
}
