use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{BclError, Result};

/// An l∞ attack budget in `[0, 1)`.
///
/// Serialized as a plain number; deserializes from a number or from an
/// `"n/255"` string so configs can use the pixel-scale notation.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "BudgetRepr", into = "f64")]
pub struct EpsilonBudget(f64);

impl EpsilonBudget {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&value) {
            return Err(BclError::Domain(format!(
                "attack budget must lie in [0, 1), got {value}"
            )));
        }
        Ok(Self(value))
    }

    pub fn over_255(n: u32) -> Result<Self> {
        Self::new(n as f64 / 255.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Parse `"0.05"` or `"25/255"`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let value = if let Some((num, den)) = s.split_once('/') {
            let num: f64 = num
                .trim()
                .parse()
                .map_err(|_| BclError::Domain(format!("bad budget `{s}`")))?;
            let den: f64 = den
                .trim()
                .parse()
                .map_err(|_| BclError::Domain(format!("bad budget `{s}`")))?;
            if den == 0.0 {
                return Err(BclError::Domain(format!("bad budget `{s}`")));
            }
            num / den
        } else {
            s.parse()
                .map_err(|_| BclError::Domain(format!("bad budget `{s}`")))?
        };
        Self::new(value)
    }
}

impl From<EpsilonBudget> for f64 {
    fn from(b: EpsilonBudget) -> f64 {
        b.0
    }
}

impl fmt::Display for EpsilonBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.0 * 255.0;
        if (n - n.round()).abs() < 1e-9 {
            write!(f, "{}/255", n.round() as i64)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BudgetRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<BudgetRepr> for EpsilonBudget {
    type Error = BclError;
    fn try_from(r: BudgetRepr) -> Result<Self> {
        match r {
            BudgetRepr::Number(v) => EpsilonBudget::new(v),
            BudgetRepr::Text(s) => EpsilonBudget::parse(&s),
        }
    }
}

/// `deserialize_with` helpers for plain `f64` budget fields that should also
/// accept the `"n/255"` notation.
pub mod budget_serde {
    use serde::{Deserialize, Deserializer};

    use super::{BudgetRepr, EpsilonBudget};

    fn value<E: serde::de::Error>(r: BudgetRepr) -> Result<f64, E> {
        EpsilonBudget::try_from(r)
            .map(|b| b.value())
            .map_err(E::custom)
    }

    pub fn one<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        value(BudgetRepr::deserialize(d)?)
    }

    pub fn three<'de, D: Deserializer<'de>>(d: D) -> Result<[f64; 3], D::Error> {
        let [a, b, c] = <[BudgetRepr; 3]>::deserialize(d)?;
        Ok([value(a)?, value(b)?, value(c)?])
    }

    pub fn opt_three<'de, D: Deserializer<'de>>(d: D) -> Result<Option<[f64; 3]>, D::Error> {
        match Option::<[BudgetRepr; 3]>::deserialize(d)? {
            Some([a, b, c]) => Ok(Some([value(a)?, value(b)?, value(c)?])),
            None => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_notations() {
        assert_eq!(EpsilonBudget::parse("25/255").unwrap().value(), 25.0 / 255.0);
        assert_eq!(EpsilonBudget::parse("0.05").unwrap().value(), 0.05);
        assert!(EpsilonBudget::parse("1.5").is_err());
        assert!(EpsilonBudget::parse("-1/255").is_err());
        let b: EpsilonBudget = serde_json::from_str("\"3/255\"").unwrap();
        assert_eq!(b, EpsilonBudget::over_255(3).unwrap());
        let b: EpsilonBudget = serde_json::from_str("0.1").unwrap();
        assert_eq!(b.value(), 0.1);
        assert_eq!(EpsilonBudget::over_255(25).unwrap().to_string(), "25/255");
    }
}
