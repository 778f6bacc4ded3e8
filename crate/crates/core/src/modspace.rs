//! Dispersive modulation norms on lattice coefficients and the associated
//! weight and window-independence diagnostics.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::frame::{CoefficientField, Frame};
use crate::geometry::SubdyadicLattice;
use crate::grid::SampledField;

/// Exponents `(p, q)` and weight order `β` of `M^{p,q}_{α,β}`.
/// `f64::INFINITY` encodes the sup-norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModNormSpec {
    #[serde(serialize_with = "ser_exponent", deserialize_with = "de_exponent")]
    pub p: f64,
    #[serde(serialize_with = "ser_exponent", deserialize_with = "de_exponent")]
    pub q: f64,
    pub beta: f64,
}

impl ModNormSpec {
    pub fn new(p: f64, q: f64, beta: f64) -> Result<Self> {
        let s = ModNormSpec { p, q, beta };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0 && self.q >= 1.0) || !self.beta.is_finite() {
            return Err(Error::Invalid(format!("need p, q >= 1 and finite beta, got {self:?}")));
        }
        Ok(())
    }
}

/// Writes `f64::INFINITY` as the string `"inf"`.
pub fn ser_exponent<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

/// Accepts a number or one of `"inf"`, `"infinity"`.
pub fn de_exponent<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Num(v) => Ok(v),
        Raw::Text(t) => parse_exponent(&t).map_err(serde::de::Error::custom),
    }
}

pub fn parse_exponent(t: &str) -> std::result::Result<f64, String> {
    match t.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        other => other.parse::<f64>().map_err(|e| format!("bad exponent {t:?}: {e}")),
    }
}

/// Radial weight `w_β(ξ) = (1+|ξ|)^β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialWeight {
    pub beta: f64,
}

impl RadialWeight {
    pub fn at(&self, freq_norm: f64) -> f64 {
        (1.0 + freq_norm).powf(self.beta)
    }
}

fn lp(values: impl Iterator<Item = f64>, p: f64) -> f64 {
    if p.is_infinite() {
        values.fold(0.0, f64::max)
    } else if p == 1.0 {
        values.sum()
    } else if p == 2.0 {
        values.map(|v| v * v).sum::<f64>().sqrt()
    } else {
        values.map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// `‖c‖_{M^{p,q}_{α,β}}`: ℓ^q over frequency centers of
/// `w_β(ξ_c)·‖(c_{j,c})_j‖_{ℓ^p}`.
pub fn mod_norm(lattice: &SubdyadicLattice, c: &CoefficientField, spec: &ModNormSpec) -> Result<f64> {
    spec.validate()?;
    if c.len() != lattice.len() {
        return Err(Error::GridMismatch(format!("{} coefficients for {} nodes", c.len(), lattice.len())));
    }
    let weight = RadialWeight { beta: spec.beta };
    let layers = lattice.centers.iter().map(|center| {
        let inner = lp(center.nodes.iter().map(|&w| c.values[w].norm()), spec.p);
        inner * weight.at(center.freq_norm())
    });
    Ok(lp(layers, spec.q))
}

/// Measured moderation constant of `w_β` over node pairs at quasi-distance ≤ 1.
pub fn weight_moderation_check(lattice: &SubdyadicLattice, beta: f64) -> f64 {
    weight_moderation_per_corona(lattice, beta).into_iter().map(|(_, v)| v).fold(1.0, f64::max)
}

/// Moderation constant restricted to pairs whose first node lies in each corona.
pub fn weight_moderation_per_corona(lattice: &SubdyadicLattice, beta: f64) -> Vec<(i32, f64)> {
    let n = lattice.len();
    // the ratio is (max/min)^|β| of 1+|ξ|, so β and −β agree exactly
    let base: Vec<f64> = (0..n).map(|i| 1.0 + lattice.node_freq(i)).collect();
    let mut per: std::collections::BTreeMap<i32, f64> = Default::default();
    for a in 0..n {
        let entry = per.entry(lattice.nodes[a].corona).or_insert(1.0);
        for b in 0..n {
            if lattice.distance(a, b) <= 1.0 {
                let r = (base[a].max(base[b]) / base[a].min(base[b])).powf(beta.abs());
                if r > *entry {
                    *entry = r;
                }
            }
        }
    }
    per.into_iter().collect()
}

/// `(min, max)` over `signals` of `‖V_{φ₂} f‖ / ‖V_{φ₁} f‖` in `M^{p,q}_{α,β}`.
pub fn window_independence_ratio(
    signals: &[SampledField],
    frame1: &Frame,
    frame2: &Frame,
    spec: &ModNormSpec,
) -> Result<(f64, f64)> {
    if signals.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for f in signals {
        let n1 = mod_norm(frame1.lattice, &frame1.analyze(f)?, spec)?;
        let n2 = mod_norm(frame2.lattice, &frame2.analyze(f)?, spec)?;
        let r = n2 / n1;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AlphaParams;
    use crate::grid::GridSpec;
    use num_complex::Complex64;

    fn lattice() -> SubdyadicLattice {
        SubdyadicLattice::build_for_window(GridSpec::new(1, 128, 16.0).unwrap(), AlphaParams::default(), 2.0).unwrap()
    }

    #[test]
    fn single_node_norm_is_weighted_modulus() {
        let lat = lattice();
        let w = lat.len() / 2;
        let mut c = CoefficientField::zeros(lat.len());
        c.values[w] = Complex64::new(3.0, -4.0);
        let expect = 5.0 * (1.0 + lat.node_freq(w)).powf(1.5);
        for (p, q) in [(1.0, 1.0), (2.0, f64::INFINITY), (f64::INFINITY, 3.0)] {
            let v = mod_norm(&lat, &c, &ModNormSpec::new(p, q, 1.5).unwrap()).unwrap();
            assert!((v - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn l2_case_is_euclidean_norm() {
        let lat = lattice();
        let c = CoefficientField {
            values: (0..lat.len()).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect(),
        };
        let v = mod_norm(&lat, &c, &ModNormSpec::new(2.0, 2.0, 0.0).unwrap()).unwrap();
        assert!((v - c.energy().sqrt()).abs() < 1e-12 * v);
    }

    #[test]
    fn exponent_parsing() {
        assert_eq!(parse_exponent("inf").unwrap(), f64::INFINITY);
        assert_eq!(parse_exponent("2").unwrap(), 2.0);
        let s: ModNormSpec = serde_json::from_str(r#"{"p": "inf", "q": 1, "beta": 0}"#).unwrap();
        assert!(s.p.is_infinite());
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"{"p":"inf","q":1.0,"beta":0.0}"#);
    }

    #[test]
    fn zero_beta_weight_is_trivially_moderate() {
        assert_eq!(weight_moderation_check(&lattice(), 0.0), 1.0);
    }

    #[test]
    fn rejects_invalid_exponents() {
        assert!(ModNormSpec::new(0.5, 1.0, 0.0).is_err());
    }
}
