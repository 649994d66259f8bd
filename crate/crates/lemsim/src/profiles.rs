//! Core domain types: time series, tariffs, and prosumer asset specifications.
//!
//! Everything here is an immutable value object after construction, safe to
//! share across worker threads. Demand and generation series are powers in kW;
//! billing converts to energy through the step duration.

use serde::{Deserialize, Serialize};

use crate::battery::degradation::CycleLifeCurve;
use crate::error::{Error, Result};

/// Hours per (non-leap) year, used to convert simulation horizons to years
/// for asset depreciation.
pub const HOURS_PER_YEAR: f64 = 8760.0;

/// Identifier of a prosumer. Ordering is lexicographic, which is what every
/// deterministic tie-break in the market layer relies on.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProsumerId(pub String);

impl ProsumerId {
    pub fn new(id: impl Into<String>) -> Self {
        ProsumerId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for ProsumerId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ProsumerId {
    fn from(s: &str) -> Self {
        ProsumerId(s.to_string())
    }
}

/// Fixed-step sequence of values over a horizon. The step duration is in
/// hours (0.5 for the default 30-minute granularity).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    step_hours: f64,
    values: Vec<f64>,
}

impl TimeSeries {
    /// Default step duration: 30 minutes.
    pub const DEFAULT_STEP_HOURS: f64 = 0.5;

    pub fn new(step_hours: f64, values: Vec<f64>) -> Result<Self> {
        if !(step_hours > 0.0) {
            return Err(Error::Validation(format!(
                "step duration must be positive, got {step_hours}"
            )));
        }
        if values.is_empty() {
            return Err(Error::Validation("series must have horizon >= 1".into()));
        }
        Ok(TimeSeries { step_hours, values })
    }

    /// Series with the default 30-minute step.
    pub fn half_hourly(values: Vec<f64>) -> Result<Self> {
        Self::new(Self::DEFAULT_STEP_HOURS, values)
    }

    /// Constant series.
    pub fn constant(step_hours: f64, value: f64, horizon: usize) -> Result<Self> {
        Self::new(step_hours, vec![value; horizon])
    }

    pub fn zeros_like(other: &TimeSeries) -> Self {
        TimeSeries {
            step_hours: other.step_hours,
            values: vec![0.0; other.values.len()],
        }
    }

    pub fn step_hours(&self) -> f64 {
        self.step_hours
    }

    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, t: usize) -> f64 {
        self.values[t]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.values.iter()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// True when every value is >= 0 (demand and generation requirement).
    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|v| *v >= 0.0)
    }

    /// Checks this series is conformable with another (same horizon and step).
    pub fn check_conformable(&self, other: &TimeSeries) -> Result<()> {
        if self.horizon() != other.horizon() {
            return Err(Error::Dimension(format!(
                "horizon mismatch: {} vs {}",
                self.horizon(),
                other.horizon()
            )));
        }
        if self.step_hours != other.step_hours {
            return Err(Error::Dimension(format!(
                "step duration mismatch: {} vs {}",
                self.step_hours, other.step_hours
            )));
        }
        Ok(())
    }

    /// Elementwise sum of several conformable series.
    pub fn sum_of(series: &[&TimeSeries]) -> Result<TimeSeries> {
        let first = series
            .first()
            .ok_or_else(|| Error::Validation("cannot sum zero series".into()))?;
        let mut values = vec![0.0; first.horizon()];
        for s in series {
            first.check_conformable(s)?;
            for (acc, v) in values.iter_mut().zip(s.values.iter()) {
                *acc += v;
            }
        }
        TimeSeries::new(first.step_hours, values)
    }

    pub(crate) fn from_parts_unchecked(step_hours: f64, values: Vec<f64>) -> Self {
        TimeSeries { step_hours, values }
    }
}

/// Per-step import and export tariffs in pence/kWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TariffSchedule {
    pub import_tariff: TimeSeries,
    pub export_tariff: TimeSeries,
}

impl TariffSchedule {
    pub fn new(import_tariff: TimeSeries, export_tariff: TimeSeries) -> Result<Self> {
        import_tariff.check_conformable(&export_tariff)?;
        if !import_tariff.is_nonnegative() || !export_tariff.is_nonnegative() {
            return Err(Error::Validation("tariffs must be nonnegative".into()));
        }
        Ok(TariffSchedule {
            import_tariff,
            export_tariff,
        })
    }

    pub fn horizon(&self) -> usize {
        self.import_tariff.horizon()
    }

    pub fn step_hours(&self) -> f64 {
        self.import_tariff.step_hours()
    }
}

/// Flat tariff schedule: constant import and export price over the horizon.
pub fn flat_tariffs(
    import_p_per_kwh: f64,
    export_p_per_kwh: f64,
    horizon: usize,
    step_hours: f64,
) -> Result<TariffSchedule> {
    if import_p_per_kwh < 0.0 || export_p_per_kwh < 0.0 {
        return Err(Error::Validation(format!(
            "tariffs must be nonnegative, got import {import_p_per_kwh}, export {export_p_per_kwh}"
        )));
    }
    TariffSchedule::new(
        TimeSeries::constant(step_hours, import_p_per_kwh, horizon)?,
        TimeSeries::constant(step_hours, export_p_per_kwh, horizon)?,
    )
}

/// Net grid position per step: e(t) = d(t) - g(t) + p_bat(t).
///
/// Positive means importing from the grid, negative exporting. Battery power
/// is charging-positive.
pub fn net_demand(
    demand: &TimeSeries,
    generation: &TimeSeries,
    battery_power: &TimeSeries,
) -> Result<TimeSeries> {
    demand.check_conformable(generation)?;
    demand.check_conformable(battery_power)?;
    let values = demand
        .iter()
        .zip(generation.iter())
        .zip(battery_power.iter())
        .map(|((d, g), p)| d - g + p)
        .collect();
    TimeSeries::new(demand.step_hours(), values)
}

/// Battery asset specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatterySpec {
    /// Usable capacity in kWh.
    pub capacity_kwh: f64,
    /// Maximum charge/discharge power in kW.
    pub max_power_kw: f64,
    pub soc_min_pct: f64,
    pub soc_max_pct: f64,
    /// Charging efficiency in (0, 1].
    pub charge_efficiency: f64,
    /// Discharging efficiency in (0, 1].
    pub discharge_efficiency: f64,
    /// Capital cost in pence per kWh of capacity.
    pub cost_p_per_kwh: f64,
    /// Calendar lifetime in years.
    pub lifetime_years: f64,
    /// Map from depth of discharge to sustainable cycle count.
    pub cycle_life_curve: CycleLifeCurve,
    /// Starting state of charge, percent of capacity.
    pub initial_soc_pct: f64,
}

impl BatterySpec {
    /// Battery with no capacity; dispatch degenerates to direct import/export.
    pub fn none() -> Self {
        BatterySpec {
            capacity_kwh: 0.0,
            max_power_kw: 0.0,
            soc_min_pct: 0.0,
            soc_max_pct: 100.0,
            charge_efficiency: 1.0,
            discharge_efficiency: 1.0,
            cost_p_per_kwh: 0.0,
            lifetime_years: 20.0,
            cycle_life_curve: CycleLifeCurve::default_lithium_ion(),
            initial_soc_pct: 0.0,
        }
    }

    /// Lossless battery covering the full SoC range, starting empty.
    pub fn ideal(capacity_kwh: f64, max_power_kw: f64) -> Self {
        BatterySpec {
            capacity_kwh,
            max_power_kw,
            ..BatterySpec::none()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.capacity_kwh < 0.0 || self.max_power_kw < 0.0 {
            return Err(Error::Validation(
                "battery capacity and power must be >= 0".into(),
            ));
        }
        let in_pct = |v: f64| (0.0..=100.0).contains(&v);
        if !in_pct(self.soc_min_pct) || !in_pct(self.soc_max_pct) || !in_pct(self.initial_soc_pct) {
            return Err(Error::Validation(
                "SoC percentages must lie in [0, 100]".into(),
            ));
        }
        if !(self.soc_min_pct <= self.initial_soc_pct && self.initial_soc_pct <= self.soc_max_pct) {
            return Err(Error::Validation(format!(
                "SoC ordering violated: min {} <= initial {} <= max {}",
                self.soc_min_pct, self.initial_soc_pct, self.soc_max_pct
            )));
        }
        let eff_ok = |e: f64| e > 0.0 && e <= 1.0;
        if !eff_ok(self.charge_efficiency) || !eff_ok(self.discharge_efficiency) {
            return Err(Error::Validation("efficiencies must be in (0, 1]".into()));
        }
        if self.lifetime_years <= 0.0 {
            return Err(Error::Validation("battery lifetime must be positive".into()));
        }
        if self.cost_p_per_kwh < 0.0 {
            return Err(Error::Validation("battery cost must be >= 0".into()));
        }
        Ok(())
    }

    pub fn soc_min_kwh(&self) -> f64 {
        self.soc_min_pct / 100.0 * self.capacity_kwh
    }

    pub fn soc_max_kwh(&self) -> f64 {
        self.soc_max_pct / 100.0 * self.capacity_kwh
    }

    pub fn initial_soc_kwh(&self) -> f64 {
        self.initial_soc_pct / 100.0 * self.capacity_kwh
    }
}

/// Renewable generator specification. Actual generation at time t is
/// `installed_power_kw * resource_profile(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub installed_power_kw: f64,
    /// Capital cost in pence per rated kW.
    pub cost_p_per_kw: f64,
    pub lifetime_years: f64,
    /// Normalised output per installed kW, values in [0, 1].
    pub resource_profile: TimeSeries,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.installed_power_kw < 0.0 {
            return Err(Error::Validation("installed power must be >= 0".into()));
        }
        if self.cost_p_per_kw < 0.0 {
            return Err(Error::Validation("generator cost must be >= 0".into()));
        }
        if self.lifetime_years <= 0.0 {
            return Err(Error::Validation(
                "generator lifetime must be positive".into(),
            ));
        }
        if !self
            .resource_profile
            .iter()
            .all(|v| (0.0..=1.0).contains(v))
        {
            return Err(Error::Validation(
                "resource profile values must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Generation power series in kW.
    pub fn generation(&self) -> TimeSeries {
        TimeSeries::from_parts_unchecked(
            self.resource_profile.step_hours(),
            self.resource_profile
                .iter()
                .map(|v| v * self.installed_power_kw)
                .collect(),
        )
    }
}

/// One household: demand profile plus generation and storage assets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProsumerSpec {
    pub id: ProsumerId,
    pub demand: TimeSeries,
    pub generator: GeneratorSpec,
    pub battery: BatterySpec,
}

impl ProsumerSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.demand.is_nonnegative() {
            return Err(Error::Validation(format!(
                "prosumer {} has negative demand values",
                self.id
            )));
        }
        self.generator.validate()?;
        self.battery.validate()?;
        self.demand
            .check_conformable(&self.generator.resource_profile)?;
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.demand.horizon()
    }

    pub fn step_hours(&self) -> f64 {
        self.demand.step_hours()
    }
}
