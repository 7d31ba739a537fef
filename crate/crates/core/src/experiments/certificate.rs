use serde::{Deserialize, Serialize};

/// Arithmetic comparison of the two sides of the additivity inequality.
///
/// `single_lower = 2(ln k - k s_hat^2)` bounds `H_min(Φ) + H_min(Φ̄)` from
/// below, `product_upper = 2 ln k - ln k / k` bounds `H_min(Φ ⊗ Φ̄)` from
/// above, and a violation is witnessed when
/// `min(product_upper, bell_entropy) < single_lower`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateVerdict {
    pub k: u64,
    /// `None` for arithmetic-only verdicts.
    pub n: Option<usize>,
    pub s_hat: f64,
    pub single_lower: f64,
    pub product_upper: f64,
    pub bell_entropy: Option<f64>,
    /// `single_lower - min(product_upper, bell_entropy)`.
    pub margin: f64,
    pub violation: bool,
}

impl CertificateVerdict {
    pub fn evaluate(k: u64, n: Option<usize>, s_hat: f64, bell_entropy: Option<f64>) -> Self {
        let kf = k as f64;
        let log_k = kf.ln();
        let single_lower = 2.0 * (log_k - kf * s_hat * s_hat);
        let product_upper = 2.0 * log_k - log_k / kf;
        let margin = match bell_entropy {
            Some(h) if h < product_upper => single_lower - h,
            _ => log_k / kf - 2.0 * kf * s_hat * s_hat,
        };
        Self {
            k,
            n,
            s_hat,
            single_lower,
            product_upper,
            bell_entropy,
            margin,
            violation: margin > 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.s_hat.is_finite()
            && self.single_lower.is_finite()
            && self.product_upper.is_finite()
            && self.bell_entropy.is_none_or(f64::is_finite)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(k: u64) -> CertificateVerdict {
        CertificateVerdict::evaluate(k, None, 3.0 / k as f64, None)
    }

    #[test]
    fn threshold_is_e_to_the_eighteen() {
        let e18 = 18f64.exp();
        assert!(!synthetic(e18.floor() as u64).violation);
        assert!(synthetic(e18.ceil() as u64).violation);
        assert!(!synthetic(100).violation);
        assert!(synthetic(19f64.exp() as u64).violation);
    }

    #[test]
    fn bell_entropy_only_tightens() {
        let base = CertificateVerdict::evaluate(50, Some(8), 0.1, None);
        let with_bell = CertificateVerdict::evaluate(50, Some(8), 0.1, Some(1.0));
        assert!(with_bell.margin > base.margin);
        let loose = CertificateVerdict::evaluate(50, Some(8), 0.1, Some(100.0));
        assert_eq!(loose.margin, base.margin);
    }

    #[test]
    fn margin_matches_direct_difference_away_from_threshold() {
        let v = CertificateVerdict::evaluate(9, Some(4), 0.2, None);
        let direct = v.single_lower - v.product_upper;
        assert!((v.margin - direct).abs() < 1e-12);
        assert_eq!(v.violation, direct > 0.0);
    }
}
