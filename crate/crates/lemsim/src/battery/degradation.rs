//! Battery depreciation from counted cycles.
//!
//! Regular cycles (anchored at 100% SoC) consume life according to the
//! manufacturer cycle count at their depth of discharge. Irregular cycles
//! consume the difference of inverse cycle counts at the equivalent depths of
//! their two endpoints. The total depreciation factor is the sum of both
//! parts and feeds the usage-vs-calendar battery cost.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::battery::rainflow::{CycleKind, CycleRecord};
use crate::error::{Error, Result};
use crate::profiles::BatterySpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    /// Linear in log(cycle count); cycle-life data is close to exponential
    /// in depth of discharge.
    #[default]
    LogLinear,
    Linear,
}

/// Monotone map from depth of discharge (percent) to the maximum number of
/// cycles the battery sustains at that depth. Piecewise interpolation between
/// knots, clamped at the end knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleLifeCurve {
    knots: Vec<(f64, f64)>,
    interpolation: Interpolation,
}

impl CycleLifeCurve {
    pub fn new(knots: Vec<(f64, f64)>, interpolation: Interpolation) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::Validation("cycle-life curve needs knots".into()));
        }
        for pair in knots.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::Validation(
                    "cycle-life knots must be strictly ascending in DoD".into(),
                ));
            }
            if pair[1].1 > pair[0].1 {
                return Err(Error::Validation(
                    "cycle counts must be non-increasing in DoD".into(),
                ));
            }
        }
        if knots.iter().any(|(_, n)| *n <= 0.0) {
            return Err(Error::Validation("cycle counts must be positive".into()));
        }
        Ok(CycleLifeCurve {
            knots,
            interpolation,
        })
    }

    /// Lithium-ion shaped default used by tests and shipped scenarios.
    pub fn default_lithium_ion() -> Self {
        CycleLifeCurve::new(
            vec![
                (10.0, 15000.0),
                (20.0, 10000.0),
                (40.0, 6000.0),
                (60.0, 4000.0),
                (80.0, 3400.0),
                (100.0, 3000.0),
            ],
            Interpolation::LogLinear,
        )
        .expect("default curve is valid")
    }

    /// Loads a curve from a CSV file with header `dod_pct,max_cycles`, rows
    /// ascending by DoD.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let mut knots = Vec::new();
        for (i, record) in reader.deserialize::<(f64, f64)>().enumerate() {
            let (dod, cycles) = record.map_err(|e| Error::Parse {
                path: path.display().to_string(),
                row: i + 2,
                message: e.to_string(),
            })?;
            knots.push((dod, cycles));
        }
        CycleLifeCurve::new(knots, Interpolation::LogLinear)
    }

    /// Maximum cycle count at the given depth of discharge, clamped at the
    /// end knots.
    pub fn max_cycles(&self, dod_pct: f64) -> f64 {
        let first = self.knots[0];
        let last = self.knots[self.knots.len() - 1];
        if dod_pct <= first.0 {
            return first.1;
        }
        if dod_pct >= last.0 {
            return last.1;
        }
        let idx = self
            .knots
            .windows(2)
            .position(|w| dod_pct <= w[1].0)
            .expect("dod inside knot range");
        let (x0, y0) = self.knots[idx];
        let (x1, y1) = self.knots[idx + 1];
        let frac = (dod_pct - x0) / (x1 - x0);
        match self.interpolation {
            Interpolation::Linear => y0 + frac * (y1 - y0),
            Interpolation::LogLinear => (y0.ln() + frac * (y1.ln() - y0.ln())).exp(),
        }
    }
}

/// Equivalent depth of discharge of an SoC level: the depth of a cycle that
/// starts full and ends at that level.
fn equivalent_dod(soc_pct: f64, soc_max_pct: f64) -> f64 {
    100.0 - (soc_pct / soc_max_pct) * 100.0
}

/// Total depreciation factor over the counted cycles.
///
/// `soc_max_pct` is the battery's maximum SoC in percent, used for the
/// equivalent-depth conversion of irregular cycle endpoints.
pub fn depreciation_factor(
    cycles: &[CycleRecord],
    curve: &CycleLifeCurve,
    soc_max_pct: f64,
) -> f64 {
    let mut regular = 0.0;
    let mut irregular = 0.0;
    for cycle in cycles {
        match cycle.kind {
            CycleKind::Regular => {
                regular += cycle.weight / curve.max_cycles(cycle.dod_pct());
            }
            CycleKind::Irregular => {
                let start = 1.0 / curve.max_cycles(equivalent_dod(cycle.start_soc_pct, soc_max_pct));
                let end = 1.0 / curve.max_cycles(equivalent_dod(cycle.end_soc_pct, soc_max_pct));
                irregular += cycle.weight * (start - end).abs();
            }
        }
    }
    regular + irregular
}

/// Battery depreciation cost in pence over the horizon.
///
/// The battery's effective life is the longer of its cycle-implied life
/// (1/DF) and the calendar lifetime; an idle battery still depreciates on
/// calendar life.
pub fn battery_depreciation_cost(spec: &BatterySpec, horizon_years: f64, df: f64) -> f64 {
    let denominator = if df > 0.0 {
        (1.0 / df).max(spec.lifetime_years)
    } else {
        spec.lifetime_years
    };
    spec.capacity_kwh * spec.cost_p_per_kwh * horizon_years / denominator
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::battery::rainflow::rainflow_count;

    /// Curve declared for this suite: N(20)=10000, N(60)=4000, N(100)=3000,
    /// linear in between.
    fn test_curve() -> CycleLifeCurve {
        CycleLifeCurve::new(
            vec![(20.0, 10000.0), (60.0, 4000.0), (100.0, 3000.0)],
            Interpolation::Linear,
        )
        .unwrap()
    }

    #[test]
    fn regular_full_cycle_full_depth() {
        let cycles = [CycleRecord::full(100.0, 0.0)];
        let df = depreciation_factor(&cycles, &test_curve(), 100.0);
        assert!((df - 1.0 / 3000.0).abs() / (1.0 / 3000.0) < 1e-12);
    }

    #[test]
    fn irregular_half_cycle_uses_equivalent_depths() {
        let cycles = [CycleRecord::half(80.0, 40.0)];
        let df = depreciation_factor(&cycles, &test_curve(), 100.0);
        let expected = 0.5 * (1.0 / 10000.0 - 1.0 / 4000.0f64).abs();
        assert!((df - expected).abs() / expected < 1e-12);
        assert!((df - 7.5e-5).abs() < 1e-18);
    }

    #[test]
    fn empty_cycle_list_is_zero() {
        assert_eq!(depreciation_factor(&[], &test_curve(), 100.0), 0.0);
    }

    #[test]
    fn two_halves_equal_one_full() {
        let curve = test_curve();
        let halves = [CycleRecord::half(80.0, 40.0), CycleRecord::half(40.0, 80.0)];
        let full = [CycleRecord::full(80.0, 40.0)];
        let df_halves = depreciation_factor(&halves, &curve, 100.0);
        let df_full = depreciation_factor(&full, &curve, 100.0);
        assert!((df_halves - df_full).abs() < 1e-15);
    }

    #[test]
    fn depreciation_cost_cases() {
        let spec = BatterySpec {
            capacity_kwh: 2.0,
            cost_p_per_kwh: 15000.0,
            lifetime_years: 20.0,
            ..BatterySpec::none()
        };
        // Usage-implied life 100 years beats the 20-year calendar.
        assert!((battery_depreciation_cost(&spec, 1.0, 0.01) - 300.0).abs() < 1e-9);
        // Heavy usage: calendar life binds.
        assert!((battery_depreciation_cost(&spec, 1.0, 0.2) - 1500.0).abs() < 1e-9);
        // Idle battery still depreciates on calendar life.
        assert!((battery_depreciation_cost(&spec, 1.0, 0.0) - 1500.0).abs() < 1e-9);
    }

    #[test]
    fn df_invariant_under_time_reversal() {
        use rand::{Rng, SeedableRng};
        let curve = CycleLifeCurve::default_lithium_ion();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(2..50);
            // Quantised levels so exact 100% endpoints (regular cycles) occur.
            let series: Vec<f64> = (0..n).map(|_| rng.gen_range(0..=20) as f64 * 5.0).collect();
            let mut reversed = series.clone();
            reversed.reverse();
            let forward = depreciation_factor(&rainflow_count(&series), &curve, 100.0);
            let backward = depreciation_factor(&rainflow_count(&reversed), &curve, 100.0);
            assert!(
                (forward - backward).abs() < 1e-12,
                "forward {forward} vs backward {backward} on {series:?}"
            );
        }
    }

    #[test]
    fn curve_interpolation_and_clamping() {
        let curve = test_curve();
        assert_eq!(curve.max_cycles(20.0), 10000.0);
        assert_eq!(curve.max_cycles(60.0), 4000.0);
        // Linear midpoint.
        assert!((curve.max_cycles(40.0) - 7000.0).abs() < 1e-9);
        // Clamped outside the knots.
        assert_eq!(curve.max_cycles(5.0), 10000.0);
        assert_eq!(curve.max_cycles(120.0), 3000.0);

        let log_curve = CycleLifeCurve::new(
            vec![(20.0, 10000.0), (60.0, 4000.0)],
            Interpolation::LogLinear,
        )
        .unwrap();
        let mid = log_curve.max_cycles(40.0);
        assert!((mid - (10000.0f64.ln() * 0.5 + 4000.0f64.ln() * 0.5).exp()).abs() < 1e-6);
    }

    #[test]
    fn curve_rejects_bad_knots() {
        assert!(CycleLifeCurve::new(vec![], Interpolation::Linear).is_err());
        assert!(
            CycleLifeCurve::new(vec![(20.0, 100.0), (10.0, 200.0)], Interpolation::Linear).is_err()
        );
        assert!(
            CycleLifeCurve::new(vec![(10.0, 100.0), (20.0, 200.0)], Interpolation::Linear).is_err()
        );
        assert!(CycleLifeCurve::new(vec![(10.0, 0.0)], Interpolation::Linear).is_err());
    }
}
