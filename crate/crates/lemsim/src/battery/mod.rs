//! Heuristic battery dispatch and degradation accounting.
//!
//! Dispatch follows a greedy self-consumption rule per step: surplus
//! generation charges the battery (leftover exported), deficits discharge it
//! (shortfall imported). Battery power is charging-positive throughout; the
//! efficiency losses live in the SoC update only, so the grid-side energy
//! balance `(d - g + p_bat) * dt == imports - exports` holds exactly.

pub mod degradation;
pub mod rainflow;

use crate::error::Result;
use crate::profiles::{BatterySpec, TimeSeries};

/// Per-step outcome of dispatching one battery against a demand/generation
/// pair: battery power, state of charge, and the resulting grid exchange.
#[derive(Debug, Clone)]
pub struct BatteryTrace {
    /// Battery power in kW, charging positive.
    pub power: TimeSeries,
    /// State of charge as percent of capacity.
    pub soc_pct: TimeSeries,
    /// State of charge in kWh.
    pub soc_kwh: TimeSeries,
    /// Energy imported from the grid per step, kWh.
    pub imports: TimeSeries,
    /// Energy exported to the grid per step, kWh.
    pub exports: TimeSeries,
}

impl BatteryTrace {
    pub fn horizon(&self) -> usize {
        self.power.horizon()
    }

    pub fn step_hours(&self) -> f64 {
        self.power.step_hours()
    }
}

/// Greedy self-consumption dispatch.
///
/// Per step, with surplus `g(t) > d(t)` the charge power is the surplus
/// capped by the power rating and the remaining headroom; the rest is
/// exported. With a deficit the discharge power is the deficit capped by the
/// power rating and the energy still stored; the rest is imported.
pub fn dispatch(
    demand: &TimeSeries,
    generation: &TimeSeries,
    spec: &BatterySpec,
) -> Result<BatteryTrace> {
    demand.check_conformable(generation)?;
    spec.validate()?;

    let dt = demand.step_hours();
    let horizon = demand.horizon();
    let soc_min = spec.soc_min_kwh();
    let soc_max = spec.soc_max_kwh();
    let capacity = spec.capacity_kwh;

    let mut power = Vec::with_capacity(horizon);
    let mut soc_pct = Vec::with_capacity(horizon);
    let mut soc_kwh = Vec::with_capacity(horizon);
    let mut imports = Vec::with_capacity(horizon);
    let mut exports = Vec::with_capacity(horizon);

    let mut soc = spec.initial_soc_kwh();
    for t in 0..horizon {
        let d = demand.get(t);
        let g = generation.get(t);
        let mut p_bat = 0.0;
        let mut import = 0.0;
        let mut export = 0.0;

        if g > d {
            // Surplus charges the battery up to power and headroom limits.
            let surplus = g - d;
            let headroom_kw = (soc_max - soc) / (spec.charge_efficiency * dt);
            p_bat = surplus.min(spec.max_power_kw).min(headroom_kw).max(0.0);
            soc += spec.charge_efficiency * p_bat * dt;
            export = (g - d - p_bat) * dt;
        } else if d > g {
            // Deficit discharges the battery up to power and stored energy.
            let deficit = d - g;
            let available_kw = spec.discharge_efficiency * (soc - soc_min) / dt;
            let discharge = deficit.min(spec.max_power_kw).min(available_kw).max(0.0);
            soc -= discharge / spec.discharge_efficiency * dt;
            p_bat = -discharge;
            import = (d - g - discharge) * dt;
        }

        // Clamp float drift back onto the feasible band.
        soc = soc.clamp(soc_min, soc_max);

        power.push(p_bat);
        soc_kwh.push(soc);
        soc_pct.push(if capacity > 0.0 {
            soc / capacity * 100.0
        } else {
            0.0
        });
        imports.push(import.max(0.0));
        exports.push(export.max(0.0));
    }

    Ok(BatteryTrace {
        power: TimeSeries::new(dt, power)?,
        soc_pct: TimeSeries::new(dt, soc_pct)?,
        soc_kwh: TimeSeries::new(dt, soc_kwh)?,
        imports: TimeSeries::new(dt, imports)?,
        exports: TimeSeries::new(dt, exports)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::net_demand;
    use proptest::prelude::*;

    fn hh(values: &[f64]) -> TimeSeries {
        TimeSeries::half_hourly(values.to_vec()).unwrap()
    }

    #[test]
    fn charge_then_discharge_hand_trace() {
        // 2 kWh / 2 kW ideal battery, starting empty, half-hour steps.
        let spec = BatterySpec::ideal(2.0, 2.0);
        let g = hh(&[2.0, 2.0, 2.0, 0.0]);
        let d = hh(&[0.0, 0.0, 0.0, 2.0]);
        let trace = dispatch(&d, &g, &spec).unwrap();

        assert_eq!(trace.soc_kwh.values(), &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(trace.exports.values(), &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(trace.imports.values(), &[0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn idle_battery_stays_put() {
        let spec = BatterySpec::ideal(2.0, 2.0);
        let zero = hh(&[0.0, 0.0]);
        let trace = dispatch(&zero, &zero, &spec).unwrap();
        assert_eq!(trace.power.values(), &[0.0, 0.0]);
        assert_eq!(trace.soc_kwh.values(), &[0.0, 0.0]);
        assert_eq!(trace.imports.sum(), 0.0);
        assert_eq!(trace.exports.sum(), 0.0);
    }

    #[test]
    fn empty_battery_forces_full_import() {
        let spec = BatterySpec::ideal(2.0, 2.0);
        let trace = dispatch(&hh(&[4.0]), &hh(&[0.0]), &spec).unwrap();
        assert_eq!(trace.power.values(), &[0.0]);
        assert_eq!(trace.imports.values(), &[2.0]);
    }

    #[test]
    fn efficiency_losses_stay_inside_soc() {
        let mut spec = BatterySpec::ideal(10.0, 10.0);
        spec.charge_efficiency = 0.8;
        spec.discharge_efficiency = 0.5;
        // One step of 2 kW surplus: charge power 2 kW, stored 0.8 kWh.
        let trace = dispatch(&hh(&[0.0, 2.0]), &hh(&[2.0, 0.0]), &spec).unwrap();
        assert!((trace.soc_kwh.get(0) - 0.8).abs() < 1e-12);
        assert_eq!(trace.exports.get(0), 0.0);
        // Discharge: deficit 2 kW, available = 0.5 * 0.8 / 0.5 = 0.8 kW.
        assert!((trace.power.get(1) - (-0.8)).abs() < 1e-12);
        assert!((trace.imports.get(1) - (2.0 - 0.8) * 0.5).abs() < 1e-12);
        assert!(trace.soc_kwh.get(1).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn dispatch_invariants_hold(
            steps in 1usize..40,
            capacity in 0.0f64..6.0,
            max_power in 0.0f64..4.0,
            eta_c in 0.5f64..1.0,
            eta_d in 0.5f64..1.0,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let d: Vec<f64> = (0..steps).map(|_| rng.gen_range(0.0..5.0)).collect();
            let g: Vec<f64> = (0..steps).map(|_| rng.gen_range(0.0..5.0)).collect();
            let spec = BatterySpec {
                capacity_kwh: capacity,
                max_power_kw: max_power,
                charge_efficiency: eta_c,
                discharge_efficiency: eta_d,
                ..BatterySpec::none()
            };
            let demand = hh(&d);
            let generation = hh(&g);
            let trace = dispatch(&demand, &generation, &spec)?;
            let dt = trace.step_hours();

            for t in 0..steps {
                // SoC stays inside the configured band.
                prop_assert!(trace.soc_kwh.get(t) >= spec.soc_min_kwh() - 1e-9);
                prop_assert!(trace.soc_kwh.get(t) <= spec.soc_max_kwh() + 1e-9);
                // Power rating respected.
                prop_assert!(trace.power.get(t).abs() <= spec.max_power_kw + 1e-9);
                // Never import and export in the same step.
                prop_assert!(trace.imports.get(t) >= 0.0);
                prop_assert!(trace.exports.get(t) >= 0.0);
                prop_assert!(
                    trace.imports.get(t).min(trace.exports.get(t)) == 0.0,
                    "import {} and export {} both positive at t={}",
                    trace.imports.get(t), trace.exports.get(t), t
                );
            }

            // Grid-side energy balance: e(t) * dt == imports - exports.
            let e = net_demand(&demand, &generation, &trace.power)?;
            for t in 0..steps {
                let balance = e.get(t) * dt - (trace.imports.get(t) - trace.exports.get(t));
                prop_assert!(balance.abs() < 1e-9, "balance {} at t={}", balance, t);
            }
        }
    }
}
