use serde::Serialize;

use crate::{Error, Extended, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LAlphaNorm {
    pub value: Extended,
    pub alpha: f64,
    /// Sample indices carrying `+inf`.
    pub infinite_at: Vec<usize>,
}

/// `(Σ vᵅ · w)^{1/α}` for samples `v` each representing a cell of volume `w`.
pub fn lalpha_norm(values: &[Extended], cell_volume: f64, alpha: f64) -> Result<LAlphaNorm> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be > 0, got {alpha}")));
    }
    if !(cell_volume.is_finite() && cell_volume > 0.0) {
        return Err(Error::InvalidArgument(format!("cell volume must be > 0, got {cell_volume}")));
    }
    let infinite_at: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_infinite())
        .map(|(k, _)| k)
        .collect();
    let value = if infinite_at.is_empty() {
        let sum: f64 = values.iter().map(|v| v.value().powf(alpha)).sum();
        Extended::new((sum * cell_volume).powf(1.0 / alpha))
    } else {
        Extended::INFINITY
    };
    Ok(LAlphaNorm {
        value,
        alpha,
        infinite_at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_field_on_unit_square() {
        let n = 100;
        let v = vec![Extended::finite(1.0); n * n];
        for alpha in [0.5, 1.0, 3.0] {
            let r = lalpha_norm(&v, 1.0 / (n * n) as f64, alpha).unwrap();
            assert!((r.value.value() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn half_support() {
        let v: Vec<Extended> = (0..100)
            .map(|k| Extended::finite(if k < 50 { 2.0 } else { 0.0 }))
            .collect();
        let r = lalpha_norm(&v, 0.01, 1.0).unwrap();
        assert!((r.value.value() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infinite_marker_propagates() {
        let v = vec![Extended::finite(1.0), Extended::INFINITY, Extended::finite(2.0)];
        let r = lalpha_norm(&v, 1.0, 2.0).unwrap();
        assert!(r.value.is_infinite());
        assert_eq!(r.infinite_at, vec![1]);
    }
}
