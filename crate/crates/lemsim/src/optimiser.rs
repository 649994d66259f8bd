//! Joint profile optimiser: coalition aggregation, pairwise trade valuation,
//! per-step trade derivation, and asset sizing.
//!
//! A coalition is valued by dispatching its aggregate demand, generation and
//! combined battery as if it were a single prosumer. The gain of a candidate
//! pair is the difference between the parties' current bills and the joint
//! bill; the per-member allocation splits the joint battery's power pro-rata
//! to each member's headroom (charging) or stored energy (discharging), which
//! keeps both the net-demand and state-of-charge sum constraints exact.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::battery::degradation::battery_depreciation_cost;
use crate::battery::{dispatch, BatteryTrace};
use crate::billing::{
    bill, generator_cost, grid_energy_cost, horizon_years, trace_depreciation_factor,
};
use crate::error::{Error, Result};
use crate::profiles::{BatterySpec, ProsumerId, ProsumerSpec, TariffSchedule, TimeSeries};

/// Per-step energy exchanged under a contract, kWh, nonnegative, flowing
/// from the provider to the receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeSchedule {
    energy_kwh: TimeSeries,
}

impl TradeSchedule {
    pub fn new(energy_kwh: TimeSeries) -> Result<Self> {
        if energy_kwh.iter().any(|v| *v < -1e-9) {
            return Err(Error::Validation(
                "trade schedule quantities must be nonnegative".into(),
            ));
        }
        let cleaned = TimeSeries::new(
            energy_kwh.step_hours(),
            energy_kwh.iter().map(|v| v.max(0.0)).collect(),
        )?;
        Ok(TradeSchedule { energy_kwh: cleaned })
    }

    pub fn series(&self) -> &TimeSeries {
        &self.energy_kwh
    }

    pub fn get(&self, t: usize) -> f64 {
        self.energy_kwh.get(t)
    }

    pub fn horizon(&self) -> usize {
        self.energy_kwh.horizon()
    }

    pub fn total_kwh(&self) -> f64 {
        self.energy_kwh.sum()
    }

    pub fn is_zero(&self) -> bool {
        self.energy_kwh.iter().all(|v| *v == 0.0)
    }
}

/// Bilateral energy contract: receiver, provider, and the per-step schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyContract {
    pub receiver: ProsumerId,
    pub provider: ProsumerId,
    pub schedule: TradeSchedule,
}

/// Aggregate view of a trading coalition.
#[derive(Debug, Clone)]
pub struct CoalitionProfile {
    pub members: BTreeSet<ProsumerId>,
    pub demand: TimeSeries,
    pub generation: TimeSeries,
    /// Combined battery: summed capacity and power, capacity-weighted
    /// efficiencies and SoC bounds.
    pub battery: BatterySpec,
    /// Generator depreciation across members, pence per year.
    pub generator_cost_rate: f64,
    /// Sum of the members' standalone bills, pence.
    pub standalone_bill_sum: f64,
}

impl CoalitionProfile {
    /// Coalition representative: the smallest member id.
    pub fn representative(&self) -> &ProsumerId {
        self.members.iter().next().expect("coalition is non-empty")
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// Union of two disjoint coalitions.
    pub fn merge(a: &CoalitionProfile, b: &CoalitionProfile) -> Result<CoalitionProfile> {
        if a.members.intersection(&b.members).next().is_some() {
            return Err(Error::Validation(
                "cannot merge overlapping coalitions".into(),
            ));
        }
        Ok(CoalitionProfile {
            members: a.members.union(&b.members).cloned().collect(),
            demand: TimeSeries::sum_of(&[&a.demand, &b.demand])?,
            generation: TimeSeries::sum_of(&[&a.generation, &b.generation])?,
            battery: combine_batteries(&a.battery, &b.battery),
            generator_cost_rate: a.generator_cost_rate + b.generator_cost_rate,
            standalone_bill_sum: a.standalone_bill_sum + b.standalone_bill_sum,
        })
    }
}

/// Combined battery of two parties: capacities and power ratings add,
/// efficiencies and SoC percentage bounds are capacity-weighted means.
fn combine_batteries(a: &BatterySpec, b: &BatterySpec) -> BatterySpec {
    let capacity = a.capacity_kwh + b.capacity_kwh;
    let weighted = |fa: f64, fb: f64, neutral: f64| {
        if capacity > 0.0 {
            (fa * a.capacity_kwh + fb * b.capacity_kwh) / capacity
        } else {
            neutral
        }
    };
    // The parties share one cycle-life dataset in every shipped scenario;
    // keep the curve of the larger battery for the combined asset.
    let curve = if b.capacity_kwh > a.capacity_kwh {
        b.cycle_life_curve.clone()
    } else {
        a.cycle_life_curve.clone()
    };
    BatterySpec {
        capacity_kwh: capacity,
        max_power_kw: a.max_power_kw + b.max_power_kw,
        soc_min_pct: weighted(a.soc_min_pct, b.soc_min_pct, 0.0),
        soc_max_pct: weighted(a.soc_max_pct, b.soc_max_pct, 100.0),
        charge_efficiency: weighted(a.charge_efficiency, b.charge_efficiency, 1.0),
        discharge_efficiency: weighted(a.discharge_efficiency, b.discharge_efficiency, 1.0),
        cost_p_per_kwh: weighted(a.cost_p_per_kwh, b.cost_p_per_kwh, 0.0),
        lifetime_years: weighted(a.lifetime_years, b.lifetime_years, 20.0),
        cycle_life_curve: curve,
        initial_soc_pct: weighted(a.initial_soc_pct, b.initial_soc_pct, 0.0),
    }
}

/// Builds a coalition profile from raw prosumer specs, computing and caching
/// each member's standalone bill under the given tariffs.
pub fn aggregate(members: &[ProsumerSpec], tariffs: &TariffSchedule) -> Result<CoalitionProfile> {
    let first = members
        .first()
        .ok_or_else(|| Error::Validation("coalition needs at least one member".into()))?;
    let mut profile = singleton_profile(first, tariffs)?;
    for member in &members[1..] {
        let next = singleton_profile(member, tariffs)?;
        profile = CoalitionProfile::merge(&profile, &next)?;
    }
    Ok(profile)
}

/// Coalition of one.
pub fn singleton_profile(
    member: &ProsumerSpec,
    tariffs: &TariffSchedule,
) -> Result<CoalitionProfile> {
    member.validate()?;
    let trace = dispatch(&member.demand, &member.generator.generation(), &member.battery)?;
    let standalone = bill(&trace, tariffs, member)?;
    Ok(CoalitionProfile {
        members: BTreeSet::from([member.id.clone()]),
        demand: member.demand.clone(),
        generation: member.generator.generation(),
        battery: member.battery.clone(),
        generator_cost_rate: generator_cost(&member.generator, 1.0),
        standalone_bill_sum: standalone.total,
    })
}

/// Dispatches the coalition's aggregate assets and returns its bill and the
/// joint battery trace. Deterministic: identical inputs give identical bills.
pub fn evaluate(
    coalition: &CoalitionProfile,
    tariffs: &TariffSchedule,
) -> Result<(f64, BatteryTrace)> {
    let trace = dispatch(&coalition.demand, &coalition.generation, &coalition.battery)?;
    let (import_cost, export_revenue) = grid_energy_cost(&trace, tariffs)?;
    let years = horizon_years(trace.horizon(), trace.step_hours());
    let df = trace_depreciation_factor(&trace, &coalition.battery);
    let battery_dep = battery_depreciation_cost(&coalition.battery, years, df);
    let generator_dep = coalition.generator_cost_rate * years;
    Ok((
        import_cost - export_revenue + battery_dep + generator_dep,
        trace,
    ))
}

/// Valuation of a candidate pair: the gain, the merged profile, and the
/// derived trade schedules in both directions.
#[derive(Debug, Clone)]
pub struct PairEvaluation {
    pub gt: f64,
    pub joint: CoalitionProfile,
    pub joint_bill: f64,
    pub a_to_b: TradeSchedule,
    pub b_to_a: TradeSchedule,
}

/// Gains from Trade of merging two disjoint coalitions, along with the
/// derived trade schedules. Reports `None` instead of a negative-gain
/// contract.
pub fn pairwise_gt(
    a: &CoalitionProfile,
    b: &CoalitionProfile,
    tariffs: &TariffSchedule,
) -> Result<Option<PairEvaluation>> {
    let (bill_a, _) = evaluate(a, tariffs)?;
    let (bill_b, _) = evaluate(b, tariffs)?;
    pairwise_gt_with_bills(a, bill_a, b, bill_b, tariffs)
}

/// As [`pairwise_gt`], with the parties' current bills already known.
pub fn pairwise_gt_with_bills(
    a: &CoalitionProfile,
    bill_a: f64,
    b: &CoalitionProfile,
    bill_b: f64,
    tariffs: &TariffSchedule,
) -> Result<Option<PairEvaluation>> {
    let joint = CoalitionProfile::merge(a, b)?;
    let (joint_bill, joint_trace) = evaluate(&joint, tariffs)?;
    let gt = bill_a + bill_b - joint_bill;
    if gt < 0.0 {
        return Ok(None);
    }
    let allocation = derive_pair_allocation(a, b, &joint_trace)?;
    Ok(Some(PairEvaluation {
        gt,
        joint,
        joint_bill,
        a_to_b: allocation.a_to_b,
        b_to_a: allocation.b_to_a,
    }))
}

/// Virtual per-member outcome when a pair operates jointly.
#[derive(Debug, Clone)]
pub struct MemberAllocation {
    pub power: TimeSeries,
    pub soc_kwh: TimeSeries,
    /// Net position before trading, kW.
    pub net: TimeSeries,
    /// Net position after applying the derived trades, kW.
    pub post_trade_net: TimeSeries,
}

#[derive(Debug, Clone)]
pub struct PairAllocation {
    pub member_a: MemberAllocation,
    pub member_b: MemberAllocation,
    pub a_to_b: TradeSchedule,
    pub b_to_a: TradeSchedule,
}

/// Allocates a joint dispatch back to the two parties.
///
/// The joint battery power is split pro-rata to each side's remaining
/// headroom when charging and stored energy when discharging, so the member
/// SoC series sum to the joint SoC series exactly. Each side first
/// self-consumes; one side's remaining surplus then covers the other's
/// remaining deficit, which defines the per-step trade.
pub fn derive_pair_allocation(
    a: &CoalitionProfile,
    b: &CoalitionProfile,
    joint_trace: &BatteryTrace,
) -> Result<PairAllocation> {
    let horizon = joint_trace.horizon();
    let dt = joint_trace.step_hours();
    if a.demand.horizon() != horizon || b.demand.horizon() != horizon {
        return Err(Error::Dimension(
            "allocation horizon does not match joint trace".into(),
        ));
    }

    let joint_battery = combine_batteries(&a.battery, &b.battery);
    let eta_c = joint_battery.charge_efficiency;
    let eta_d = joint_battery.discharge_efficiency;

    let mut state = [
        MemberState::new(&a.battery),
        MemberState::new(&b.battery),
    ];
    let mut out = [MemberSeries::with_capacity(horizon), MemberSeries::with_capacity(horizon)];
    let mut a_to_b = Vec::with_capacity(horizon);
    let mut b_to_a = Vec::with_capacity(horizon);

    for t in 0..horizon {
        let p_joint = joint_trace.power.get(t);
        let shares = if p_joint > 0.0 {
            let headrooms = [state[0].headroom(), state[1].headroom()];
            split_pro_rata(p_joint, headrooms, [a.battery.capacity_kwh, b.battery.capacity_kwh])
        } else if p_joint < 0.0 {
            let stored = [state[0].stored(), state[1].stored()];
            split_pro_rata(p_joint, stored, [a.battery.capacity_kwh, b.battery.capacity_kwh])
        } else {
            [0.0, 0.0]
        };

        for m in 0..2 {
            let p = shares[m];
            if p > 0.0 {
                state[m].soc += eta_c * p * dt;
            } else if p < 0.0 {
                state[m].soc += p / eta_d * dt;
            }
        }

        let demands = [a.demand.get(t), b.demand.get(t)];
        let generations = [a.generation.get(t), b.generation.get(t)];
        let mut nets = [0.0; 2];
        for m in 0..2 {
            nets[m] = demands[m] - generations[m] + shares[m];
        }

        // Surplus of one side covers the deficit of the other.
        let flow_ab = (-nets[0]).max(0.0).min(nets[1].max(0.0)) * dt;
        let flow_ba = (-nets[1]).max(0.0).min(nets[0].max(0.0)) * dt;
        let post = [
            nets[0] + (flow_ab - flow_ba) / dt,
            nets[1] + (flow_ba - flow_ab) / dt,
        ];

        for m in 0..2 {
            out[m].power.push(shares[m]);
            out[m].soc_kwh.push(state[m].soc);
            out[m].net.push(nets[m]);
            out[m].post_trade_net.push(post[m]);
        }
        a_to_b.push(flow_ab);
        b_to_a.push(flow_ba);
    }

    let [series_a, series_b] = out;
    Ok(PairAllocation {
        member_a: series_a.into_allocation(dt)?,
        member_b: series_b.into_allocation(dt)?,
        a_to_b: TradeSchedule::new(TimeSeries::new(dt, a_to_b)?)?,
        b_to_a: TradeSchedule::new(TimeSeries::new(dt, b_to_a)?)?,
    })
}

/// The provider-to-receiver schedule of a pair: energy flowing from `a` to
/// `b` after both sides self-consume.
pub fn derive_trades(
    a: &CoalitionProfile,
    b: &CoalitionProfile,
    joint_trace: &BatteryTrace,
) -> Result<TradeSchedule> {
    Ok(derive_pair_allocation(a, b, joint_trace)?.a_to_b)
}

struct MemberState {
    soc: f64,
    soc_min: f64,
    soc_max: f64,
}

impl MemberState {
    fn new(battery: &BatterySpec) -> Self {
        MemberState {
            soc: battery.initial_soc_kwh(),
            soc_min: battery.soc_min_kwh(),
            soc_max: battery.soc_max_kwh(),
        }
    }

    fn headroom(&self) -> f64 {
        (self.soc_max - self.soc).max(0.0)
    }

    fn stored(&self) -> f64 {
        (self.soc - self.soc_min).max(0.0)
    }
}

struct MemberSeries {
    power: Vec<f64>,
    soc_kwh: Vec<f64>,
    net: Vec<f64>,
    post_trade_net: Vec<f64>,
}

impl MemberSeries {
    fn with_capacity(n: usize) -> Self {
        MemberSeries {
            power: Vec::with_capacity(n),
            soc_kwh: Vec::with_capacity(n),
            net: Vec::with_capacity(n),
            post_trade_net: Vec::with_capacity(n),
        }
    }

    fn into_allocation(self, dt: f64) -> Result<MemberAllocation> {
        Ok(MemberAllocation {
            power: TimeSeries::new(dt, self.power)?,
            soc_kwh: TimeSeries::new(dt, self.soc_kwh)?,
            net: TimeSeries::new(dt, self.net)?,
            post_trade_net: TimeSeries::new(dt, self.post_trade_net)?,
        })
    }
}

fn split_pro_rata(total: f64, weights: [f64; 2], fallback: [f64; 2]) -> [f64; 2] {
    let sum = weights[0] + weights[1];
    if sum > 1e-12 {
        [total * weights[0] / sum, total * weights[1] / sum]
    } else {
        let fsum = fallback[0] + fallback[1];
        if fsum > 0.0 {
            [total * fallback[0] / fsum, total * fallback[1] / fsum]
        } else {
            [total / 2.0, total / 2.0]
        }
    }
}

/// Picks the battery capacity minimising the prosumer's standalone bill,
/// depreciation included, over the candidate grid. The power rating scales
/// proportionally with capacity; ties go to the smaller capacity.
pub fn size_battery(
    prosumer: &ProsumerSpec,
    tariffs: &TariffSchedule,
    candidates_kwh: &[f64],
    power_kw_per_kwh: f64,
) -> Result<f64> {
    if candidates_kwh.is_empty() {
        return Err(Error::Validation("candidate grid is empty".into()));
    }
    let mut sorted = candidates_kwh.to_vec();
    sorted.sort_by(f64::total_cmp);

    let generation = prosumer.generator.generation();
    let mut best = (f64::INFINITY, sorted[0]);
    for &capacity in &sorted {
        let mut candidate = prosumer.clone();
        candidate.battery.capacity_kwh = capacity;
        candidate.battery.max_power_kw = capacity * power_kw_per_kwh;
        let trace = dispatch(&candidate.demand, &generation, &candidate.battery)?;
        let total = bill(&trace, tariffs, &candidate)?.total;
        if total < best.0 {
            best = (total, capacity);
        }
    }
    Ok(best.1)
}

/// Picks the installed generation share minimising the standalone bill with
/// no storage; ties go to the smaller share.
pub fn size_generation(
    prosumer: &ProsumerSpec,
    resource_profile: &TimeSeries,
    tariffs: &TariffSchedule,
    candidates_kw: &[f64],
) -> Result<f64> {
    if candidates_kw.is_empty() {
        return Err(Error::Validation("candidate grid is empty".into()));
    }
    let mut sorted = candidates_kw.to_vec();
    sorted.sort_by(f64::total_cmp);

    let mut best = (f64::INFINITY, sorted[0]);
    for &installed in &sorted {
        let mut candidate = prosumer.clone();
        candidate.generator.installed_power_kw = installed;
        candidate.generator.resource_profile = resource_profile.clone();
        candidate.battery.capacity_kwh = 0.0;
        candidate.battery.max_power_kw = 0.0;
        let generation = candidate.generator.generation();
        let trace = dispatch(&candidate.demand, &generation, &candidate.battery)?;
        let total = bill(&trace, tariffs, &candidate)?.total;
        if total < best.0 {
            best = (total, installed);
        }
    }
    Ok(best.1)
}
