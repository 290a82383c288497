use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A relative entropy that may be `+∞`.
///
/// Infinite values short-circuit sums instead of travelling through
/// floating-point arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Entropy {
    Finite(f64),
    Infinite,
}

impl Entropy {
    pub fn zero() -> Self {
        Entropy::Finite(0.0)
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Entropy::Finite(_))
    }

    /// The finite value, or `None` for `+∞`.
    pub fn finite(&self) -> Option<f64> {
        match *self {
            Entropy::Finite(v) => Some(v),
            Entropy::Infinite => None,
        }
    }

    /// Converts to `f64`, mapping `Infinite` to `f64::INFINITY`.
    pub fn to_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn scale(self, alpha: f64) -> Self {
        match self {
            Entropy::Finite(v) => Entropy::Finite(alpha * v),
            Entropy::Infinite => Entropy::Infinite,
        }
    }
}

impl std::ops::Add for Entropy {
    type Output = Entropy;
    fn add(self, rhs: Entropy) -> Entropy {
        match (self, rhs) {
            (Entropy::Finite(a), Entropy::Finite(b)) => Entropy::Finite(a + b),
            _ => Entropy::Infinite,
        }
    }
}

impl std::iter::Sum for Entropy {
    fn sum<I: Iterator<Item = Entropy>>(iter: I) -> Entropy {
        iter.fold(Entropy::zero(), |a, b| a + b)
    }
}

impl std::fmt::Display for Entropy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Entropy::Finite(v) => write!(f, "{v}"),
            Entropy::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Entropy {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Entropy::Finite(v) => s.serialize_f64(*v),
            Entropy::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Entropy {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Entropy::Finite(v)),
            Raw::Str(s) if s == "inf" => Ok(Entropy::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("invalid entropy value `{s}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_absorbs_sums() {
        let s: Entropy = [Entropy::Finite(1.0), Entropy::Infinite, Entropy::Finite(2.0)]
            .into_iter()
            .sum();
        assert_eq!(s, Entropy::Infinite);
        assert_eq!(Entropy::Finite(1.0) + Entropy::Finite(2.0), Entropy::Finite(3.0));
        let j = serde_json::to_string(&vec![Entropy::Finite(0.5), Entropy::Infinite]).unwrap();
        assert_eq!(j, r#"[0.5,"inf"]"#);
        let back: Vec<Entropy> = serde_json::from_str(&j).unwrap();
        assert_eq!(back, vec![Entropy::Finite(0.5), Entropy::Infinite]);
    }
}
