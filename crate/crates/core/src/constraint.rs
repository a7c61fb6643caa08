//! Delay-reliability constraint: the exponential surrogate, its dual
//! multiplier and empirical delay statistics.

use crate::error::{Error, Result};

/// Inputs of the delay surrogate for one HRLLC user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateParams {
    pub packet_bits: f64,
    pub d_max_s: f64,
    pub d_proc_s: f64,
    pub chi_h: f64,
    /// Exponents above this value are clamped before `exp`.
    pub exp_cap: f64,
}

/// `exp(((arrivals - service) / p) * (D_max - D_proc)) - (1 - chi_h)`.
///
/// `arrivals` and `service` must be in the same unit; with bit rates the
/// exponent counts the packets by which arrivals outrun service over the
/// remaining delay budget.
pub fn surrogate_y(arrivals: f64, service: f64, params: &SurrogateParams) -> f64 {
    let exponent = (arrivals - service) / params.packet_bits * (params.d_max_s - params.d_proc_s);
    exponent.min(params.exp_cap).exp() - (1.0 - params.chi_h)
}

/// Non-negative Lagrange multiplier on the delay constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualVariable {
    pub value: f64,
    /// Ascent step applied to a positive surrogate.
    pub step: f64,
    /// Descent step applied to the magnitude of a negative surrogate.
    pub decay: f64,
    /// Upper end of the projection interval.
    pub max: f64,
}

impl DualVariable {
    pub fn new(value: f64, step: f64, decay: f64, max: f64) -> Self {
        Self {
            value: value.clamp(0.0, max),
            step,
            decay,
            max,
        }
    }

    /// Projected update; returns the new value.
    pub fn update(&mut self, y: f64) -> f64 {
        self.value = dual_update(self, y);
        self.value
    }
}

/// `clip(lambda + step * max(y, 0) - decay * max(-y, 0), 0, max)`.
pub fn dual_update(dv: &DualVariable, y: f64) -> f64 {
    let raw = if y >= 0.0 {
        dv.value + dv.step * y
    } else {
        dv.value - dv.decay * (-y)
    };
    if raw.is_nan() {
        return dv.value;
    }
    raw.clamp(0.0, dv.max)
}

/// Fraction of delays at or below `d_max_s`.
pub fn reliability(delays: &[f64], d_max_s: f64) -> Result<f64> {
    if delays.is_empty() {
        return Err(Error::EmptySamples);
    }
    let ok = delays.iter().filter(|&&d| d <= d_max_s).count();
    Ok(ok as f64 / delays.len() as f64)
}

/// Empirical CDF as `(value, fraction <= value)` at each distinct sample.
pub fn delay_cdf(delays: &[f64]) -> Result<Vec<(f64, f64)>> {
    if delays.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut sorted = delays.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &d) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == d => last.1 = frac,
            _ => out.push((d, frac)),
        }
    }
    Ok(out)
}

/// Evaluates a step CDF from [`delay_cdf`] at `x`.
pub fn cdf_at(cdf: &[(f64, f64)], x: f64) -> f64 {
    match cdf.partition_point(|&(d, _)| d <= x) {
        0 => 0.0,
        i => cdf[i - 1].1,
    }
}

/// Pooled delay samples against a reliability target. Partial pools from
/// separate evaluation runs merge by concatenation.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityStats {
    pub samples: Vec<f64>,
    pub d_max_s: f64,
    pub chi_h: f64,
}

impl ReliabilityStats {
    pub fn new(d_max_s: f64, chi_h: f64) -> Self {
        Self {
            samples: Vec::new(),
            d_max_s,
            chi_h,
        }
    }

    pub fn extend(&mut self, delays: &[f64]) {
        self.samples.extend_from_slice(delays);
    }

    pub fn merge(&mut self, other: &ReliabilityStats) {
        self.samples.extend_from_slice(&other.samples);
    }

    pub fn reliability(&self) -> Result<f64> {
        reliability(&self.samples, self.d_max_s)
    }

    pub fn meets_target(&self) -> Result<bool> {
        Ok(self.reliability()? >= self.chi_h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> SurrogateParams {
        SurrogateParams {
            packet_bits: 1000.0,
            d_max_s: 0.020,
            d_proc_s: 0.005,
            chi_h: 0.98,
            exp_cap: 50.0,
        }
    }

    #[test]
    fn surrogate_examples() {
        let p = params();
        assert_eq!(surrogate_y(7.0, 7.0, &p), 0.98);
        // (A - S) / 1000 * 0.015 = 1  ->  A - S = 200000 / 3
        let y = surrogate_y(200_000.0 / 3.0, 0.0, &p);
        assert!((y - (std::f64::consts::E - 0.02)).abs() < 1e-12, "{y}");
        assert!((surrogate_y(0.0, 1e9, &p) + 0.02).abs() < 1e-12);
    }

    #[test]
    fn surrogate_cap_keeps_values_finite() {
        let y = surrogate_y(1e300, -1e300, &params());
        assert!(y.is_finite());
        assert_eq!(y, 50f64.exp() - 0.02);
    }

    #[test]
    fn dual_examples() {
        let mut dv = DualVariable::new(0.5, 0.1, 0.0, f64::INFINITY);
        assert!((dv.update(0.98) - 0.598).abs() < 1e-15);
        let mut dv = DualVariable::new(0.0, 0.1, 0.1, f64::INFINITY);
        assert_eq!(dv.update(-0.02), 0.0);
        let mut dv = DualVariable::new(0.3, 0.1, 0.1, f64::INFINITY);
        assert_eq!(dv.update(0.0), 0.3);
        let mut dv = DualVariable::new(0.3, 0.1, 0.1, 0.35);
        assert_eq!(dv.update(5.0), 0.35);
    }

    #[test]
    fn reliability_examples() {
        let r = reliability(&[0.010, 0.015, 0.030], 0.020).unwrap();
        assert!((r - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(reliability(&[0.001, 0.002], 0.020).unwrap(), 1.0);
        assert_eq!(reliability(&[0.001, 0.002], 0.0).unwrap(), 0.0);
        assert!(matches!(reliability(&[], 0.02), Err(Error::EmptySamples)));
    }

    #[test]
    fn cdf_examples() {
        let cdf = delay_cdf(&[0.005, 0.005, 0.010]).unwrap();
        assert_eq!(cdf.len(), 2);
        assert_eq!(cdf[0].0, 0.005);
        assert!((cdf[0].1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(cdf[1], (0.010, 1.0));
        assert_eq!(delay_cdf(&[0.004]).unwrap(), vec![(0.004, 1.0)]);
        assert!(delay_cdf(&[]).is_err());
    }

    #[test]
    fn stats_merge() {
        let mut a = ReliabilityStats::new(0.02, 0.98);
        a.extend(&[0.01, 0.03]);
        let mut b = ReliabilityStats::new(0.02, 0.98);
        b.extend(&[0.01, 0.01]);
        a.merge(&b);
        assert_eq!(a.reliability().unwrap(), 0.75);
        assert!(!a.meets_target().unwrap());
    }

    proptest! {
        #[test]
        fn surrogate_monotone(a in 0.0f64..1e6, da in 1e-3f64..1e5, s in 0.0f64..1e6) {
            let p = SurrogateParams { exp_cap: 700.0, ..params() };
            prop_assert!(surrogate_y(a + da, s, &p) >= surrogate_y(a, s, &p));
        }

        #[test]
        fn surrogate_increases_with_budget_for_positive_excess(excess in 1.0f64..1e5, dm in 0.0f64..0.05) {
            let base = SurrogateParams { exp_cap: 700.0, ..params() };
            let wider = SurrogateParams { d_max_s: base.d_max_s + dm + 1e-3, ..base };
            prop_assert!(surrogate_y(excess, 0.0, &wider) > surrogate_y(excess, 0.0, &base));
        }

        #[test]
        fn cdf_matches_reliability(samples in proptest::collection::vec(0.0f64..0.05, 1..200), thr in 0.0f64..0.05) {
            let cdf = delay_cdf(&samples).unwrap();
            prop_assert!(cdf.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
            prop_assert!(cdf.iter().all(|&(_, f)| (0.0..=1.0).contains(&f)));
            prop_assert_eq!(cdf.last().unwrap().1, 1.0);
            let rel = reliability(&samples, thr).unwrap();
            prop_assert!((cdf_at(&cdf, thr) - rel).abs() < 1e-12);
        }

        #[test]
        fn dual_never_negative(ys in proptest::collection::vec(-1e3f64..1e3, 1..500), step in 1e-4f64..1.0, decay in 0.0f64..1.0) {
            let mut dv = DualVariable::new(0.0, step, decay, f64::INFINITY);
            for y in ys {
                prop_assert!(dv.update(y) >= 0.0);
            }
        }
    }
}
