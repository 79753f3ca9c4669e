use serde::{Deserialize, Serialize};

use crate::nn::{OBS_HIGH, OBS_LOW};

/// An additive observation perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub delta: Vec<f64>,
}

impl Perturbation {
    pub fn zeros(dim: usize) -> Self {
        Self {
            delta: vec![0.0; dim],
        }
    }

    pub fn linf(&self) -> f64 {
        self.delta.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    /// `x + delta`. For a projected perturbation this already lies in the
    /// observation box.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.delta).map(|(a, b)| a + b).collect()
    }

    /// Both constraints, checked exactly: `‖δ‖∞ ≤ ε` and `x + δ ∈ [0, 1]^d`.
    pub fn is_admissible(&self, x: &[f64], epsilon: f64) -> bool {
        self.delta.len() == x.len()
            && self.delta.iter().zip(x).all(|(d, xi)| {
                d.abs() <= epsilon && (OBS_LOW..=OBS_HIGH).contains(&(xi + d))
            })
    }
}

/// Project one coordinate onto the ε-ball, then into the box, so that both
/// `|d| ≤ ε` and `x + d ∈ [0, 1]` hold exactly in floating point.
#[inline]
pub(crate) fn project_coord(x: f64, d: f64, epsilon: f64) -> f64 {
    let d = d.clamp(-epsilon, epsilon);
    let y = (x + d).clamp(OBS_LOW, OBS_HIGH);
    let mut d = (y - x).clamp(-epsilon, epsilon);
    while x + d > OBS_HIGH {
        d = d.next_down();
    }
    while x + d < OBS_LOW {
        d = d.next_up();
    }
    d
}

/// Ball-then-box projection of a whole perturbation vector.
pub fn project(x: &[f64], delta: &mut [f64], epsilon: f64) {
    for (d, xi) in delta.iter_mut().zip(x) {
        *d = project_coord(*xi, *d, epsilon);
    }
}

/// `sign(0) = 0`.
#[inline]
pub(crate) fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn projection_is_admissible(
            x in prop::collection::vec(0.0f64..=1.0, 1..16),
            raw in prop::collection::vec(-2.0f64..2.0, 16),
            eps in 0.0f64..0.5,
        ) {
            let mut delta: Vec<f64> = raw[..x.len()].to_vec();
            project(&x, &mut delta, eps);
            let p = Perturbation { delta };
            prop_assert!(p.is_admissible(&x, eps));
        }
    }

    #[test]
    fn tricky_rounding_case() {
        // 0.3 + 0.1 - 0.3 rounds above 0.1; the projection must not.
        let d = project_coord(0.3, 0.1, 0.1);
        assert!(d.abs() <= 0.1);
        assert!((0.0..=1.0).contains(&(0.3 + d)));
    }
}
