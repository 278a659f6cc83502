use serde::Serialize;

use crate::{Error, Result};

/// Integrability exponents `q ≤ p` in dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentPair {
    pub p: f64,
    pub q: f64,
    pub n: usize,
}

/// An exponent derived from a pair, with its feasibility flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedAlpha {
    pub value: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExponentFlags {
    /// `q < p`: κ and the regularity exponent are defined.
    pub decreasing: bool,
    /// `q > n`: the metric exponent is feasible and `1 − n/q > 0`.
    pub above_dimension: bool,
}

impl ExponentPair {
    pub fn new(p: f64, q: f64, n: usize) -> Result<ExponentPair> {
        if !(p.is_finite() && q.is_finite()) {
            return Err(Error::InvalidArgument(format!("exponents must be finite, got p={p}, q={q}")));
        }
        if q < 1.0 || q > p {
            return Err(Error::InvalidArgument(format!("need 1 <= q <= p, got p={p}, q={q}")));
        }
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        Ok(ExponentPair { p, q, n })
    }

    pub fn flags(&self) -> ExponentFlags {
        ExponentFlags {
            decreasing: self.q < self.p,
            above_dimension: self.q > self.n as f64,
        }
    }

    /// `κ = pq/(p−q)`, i.e. `1/κ = 1/q − 1/p`.
    pub fn kappa(&self) -> Result<f64> {
        kappa(self.p, self.q)
    }

    /// `q/(p−q)`, the integrability exponent for `K`.
    pub fn reg_alpha(&self) -> Result<f64> {
        regularity_alpha(self.p, self.q)
    }

    /// `(pq − pn)/(p−q)`, the integrability exponent for `M`.
    pub fn m_alpha(&self) -> Result<DerivedAlpha> {
        m_alpha(self.p, self.q, self.n)
    }

    /// Fails unless `q < p` and, when `above_dimension` is set, `q > n`.
    pub fn require(&self, check: &'static str, above_dimension: bool) -> Result<()> {
        if self.q >= self.p {
            return Err(Error::Hypothesis {
                check,
                detail: format!("needs q < p, got p={}, q={}", self.p, self.q),
            });
        }
        if above_dimension && self.q <= self.n as f64 {
            return Err(Error::Hypothesis {
                check,
                detail: format!("needs q > n, got q={}, n={}", self.q, self.n),
            });
        }
        Ok(())
    }
}

pub fn kappa(p: f64, q: f64) -> Result<f64> {
    if !(q >= 1.0 && q < p && p.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "kappa undefined (use 1 <= q < p), got p={p}, q={q}"
        )));
    }
    Ok(p * q / (p - q))
}

pub fn regularity_alpha(p: f64, q: f64) -> Result<f64> {
    kappa(p, q)?;
    Ok(q / (p - q))
}

pub fn m_alpha(p: f64, q: f64, n: usize) -> Result<DerivedAlpha> {
    kappa(p, q)?;
    let value = (p * q - p * n as f64) / (p - q);
    Ok(DerivedAlpha {
        value,
        feasible: q > n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_values() {
        assert_eq!(kappa(4.0, 2.0).unwrap(), 4.0);
        assert_eq!(kappa(6.0, 2.0).unwrap(), 3.0);
        assert!(kappa(3.0, 3.0).is_err());
        assert!(kappa(2.0, 3.0).is_err());
    }

    #[test]
    fn alpha_values() {
        assert_eq!(regularity_alpha(4.0, 2.0).unwrap(), 1.0);
        let m = m_alpha(6.0, 4.0, 2).unwrap();
        assert_eq!(m.value, 6.0);
        assert!(m.feasible);
        assert!(!m_alpha(6.0, 4.0, 5).unwrap().feasible);
    }

    #[test]
    fn defining_identities() {
        for &(p, q) in &[(4.0, 2.0), (6.0, 4.0), (3.5, 1.25), (8.0, 7.0)] {
            let k = kappa(p, q).unwrap();
            assert!((1.0 / k - (1.0 / q - 1.0 / p)).abs() < 1e-15);
            let r = regularity_alpha(p, q).unwrap();
            assert!((r * (p - q) - q).abs() < 1e-12);
            let m = m_alpha(p, q, 2).unwrap().value;
            assert!((m - p * (q - 2.0) / (p - q)).abs() < 1e-12);
        }
    }

    #[test]
    fn guards() {
        let pq = ExponentPair::new(6.0, 2.0, 2).unwrap();
        assert!(pq.require("metric", true).is_err());
        assert!(pq.require("metric", false).is_ok());
        let eq = ExponentPair::new(4.0, 4.0, 2).unwrap();
        assert!(eq.require("density", false).is_err());
        assert!(ExponentPair::new(2.0, 0.5, 2).is_err());
    }
}
