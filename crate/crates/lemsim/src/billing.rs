//! Bill computation for individual prosumers and coalitions, and the Gains
//! from Trade between the two.

use serde::{Deserialize, Serialize};

use crate::battery::degradation::{battery_depreciation_cost, depreciation_factor};
use crate::battery::rainflow::rainflow_count;
use crate::battery::BatteryTrace;
use crate::error::Result;
use crate::profiles::{GeneratorSpec, ProsumerSpec, TariffSchedule, HOURS_PER_YEAR};

/// Itemised bill in pence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BillBreakdown {
    pub import_cost: f64,
    pub export_revenue: f64,
    pub battery_depreciation: f64,
    pub generator_depreciation: f64,
    /// Net value received from energy contracts; zero for a standalone bill.
    pub trade_payments: f64,
    pub total: f64,
}

impl BillBreakdown {
    pub fn new(
        import_cost: f64,
        export_revenue: f64,
        battery_depreciation: f64,
        generator_depreciation: f64,
        trade_payments: f64,
    ) -> Self {
        BillBreakdown {
            import_cost,
            export_revenue,
            battery_depreciation,
            generator_depreciation,
            trade_payments,
            total: import_cost - export_revenue + battery_depreciation + generator_depreciation
                - trade_payments,
        }
    }

    pub fn zero() -> Self {
        BillBreakdown::new(0.0, 0.0, 0.0, 0.0, 0.0)
    }
}

/// Generator depreciation in pence over the horizon.
pub fn generator_cost(spec: &GeneratorSpec, horizon_years: f64) -> f64 {
    spec.installed_power_kw * spec.cost_p_per_kw * horizon_years / spec.lifetime_years
}

/// Converts a step count at the given step duration into years.
pub fn horizon_years(steps: usize, step_hours: f64) -> f64 {
    steps as f64 * step_hours / HOURS_PER_YEAR
}

/// Grid energy cost over a dispatched trace: imports priced at the import
/// tariff, exports credited at the export tariff.
pub fn grid_energy_cost(trace: &BatteryTrace, tariffs: &TariffSchedule) -> Result<(f64, f64)> {
    trace.imports.check_conformable(&tariffs.import_tariff)?;
    let import_cost: f64 = trace
        .imports
        .iter()
        .zip(tariffs.import_tariff.iter())
        .map(|(e, p)| e * p)
        .sum();
    let export_revenue: f64 = trace
        .exports
        .iter()
        .zip(tariffs.export_tariff.iter())
        .map(|(e, p)| e * p)
        .sum();
    Ok((import_cost, export_revenue))
}

/// Standalone bill of a prosumer for a dispatched trace: grid energy plus
/// battery and generator depreciation, no trade payments.
pub fn bill(
    trace: &BatteryTrace,
    tariffs: &TariffSchedule,
    spec: &ProsumerSpec,
) -> Result<BillBreakdown> {
    let (import_cost, export_revenue) = grid_energy_cost(trace, tariffs)?;
    let years = horizon_years(trace.horizon(), trace.step_hours());

    let df = trace_depreciation_factor(trace, &spec.battery);
    let battery_dep = battery_depreciation_cost(&spec.battery, years, df);
    let generator_dep = generator_cost(&spec.generator, years);

    Ok(BillBreakdown::new(
        import_cost,
        export_revenue,
        battery_dep,
        generator_dep,
        0.0,
    ))
}

/// Depreciation factor of a dispatched trace. The battery's initial state of
/// charge is prepended so the first excursion is counted in full.
pub fn trace_depreciation_factor(
    trace: &BatteryTrace,
    battery: &crate::profiles::BatterySpec,
) -> f64 {
    let mut soc = Vec::with_capacity(trace.horizon() + 1);
    soc.push(battery.initial_soc_pct);
    soc.extend_from_slice(trace.soc_pct.values());
    let cycles = rainflow_count(&soc);
    depreciation_factor(&cycles, &battery.cycle_life_curve, battery.soc_max_pct)
}

/// Gains from Trade: the reduction in total bills achieved by the group
/// relative to its members operating alone.
pub fn gains_from_trade(individual_bills: &[f64], group_bill: f64) -> f64 {
    debug_assert!(!individual_bills.is_empty());
    individual_bills.iter().sum::<f64>() - group_bill
}
