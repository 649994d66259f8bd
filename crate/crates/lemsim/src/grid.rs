//! Local-grid constraint validation for candidate trades.
//!
//! The market layer asks a [`GridConstraint`] whether a candidate trade is
//! admissible before accepting it. The default [`Unconstrained`] checker
//! always passes. [`RadialFeeder`] models a radial network with per-line
//! thermal limits and DC-style capacity routing: baseline prosumer flows plus
//! all previously accepted trade schedules are superposed with the candidate
//! flow along the unique path between the trading parties.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::optimiser::TradeSchedule;
use crate::profiles::{ProsumerId, TimeSeries};

/// Outcome of a grid check.
#[derive(Debug, Clone, PartialEq)]
pub enum GridCheckResult {
    Pass,
    Violation {
        /// Index of the overloaded node whose feeder line is exceeded.
        line: usize,
        step: usize,
        overload_kw: f64,
    },
}

impl GridCheckResult {
    pub fn passed(&self) -> bool {
        matches!(self, GridCheckResult::Pass)
    }
}

/// A candidate bilateral trade as seen by the grid layer.
#[derive(Debug, Clone)]
pub struct GridTrade<'a> {
    /// Reference prosumer of the providing side.
    pub provider: &'a ProsumerId,
    /// Reference prosumer of the receiving side.
    pub receiver: &'a ProsumerId,
    pub schedule: &'a TradeSchedule,
}

/// Constraint interface the markets call before accepting a contract.
pub trait GridConstraint {
    /// Validates a candidate trade against the current grid state.
    fn check(&self, trade: &GridTrade<'_>) -> GridCheckResult;

    /// Records an accepted trade so later checks superpose its flows.
    fn commit(&mut self, trade: &GridTrade<'_>);
}

/// No grid model: every trade passes.
#[derive(Debug, Default, Clone, Copy)]
pub struct Unconstrained;

impl GridConstraint for Unconstrained {
    fn check(&self, _trade: &GridTrade<'_>) -> GridCheckResult {
        GridCheckResult::Pass
    }

    fn commit(&mut self, _trade: &GridTrade<'_>) {}
}

/// Radial feeder with per-line capacity limits.
///
/// Node 0 is the root (grid connection). Every other node has exactly one
/// parent; the line towards the parent carries the node's subtree flow.
#[derive(Debug, Clone)]
pub struct FeederModel {
    /// parent[i] is the parent node of node i; parent[root] == root.
    parent: Vec<usize>,
    /// Thermal limit of the line from node i to its parent, kW. The root
    /// entry is unused.
    limit_kw: Vec<f64>,
    /// Prosumer to node assignment.
    node_of: BTreeMap<ProsumerId, usize>,
}

impl FeederModel {
    pub fn new(
        parent: Vec<usize>,
        limit_kw: Vec<f64>,
        node_of: BTreeMap<ProsumerId, usize>,
    ) -> Result<Self> {
        if parent.len() != limit_kw.len() {
            return Err(Error::Validation(
                "parent and limit arrays must have equal length".into(),
            ));
        }
        let n = parent.len();
        if n == 0 {
            return Err(Error::Validation("feeder needs at least the root node".into()));
        }
        if parent[0] != 0 {
            return Err(Error::Validation("node 0 must be the feeder root".into()));
        }
        for (i, &p) in parent.iter().enumerate().skip(1) {
            if p >= n {
                return Err(Error::Validation(format!(
                    "node {i} has out-of-range parent {p}"
                )));
            }
            if p == i {
                return Err(Error::Validation(format!(
                    "node {i} cannot be its own parent"
                )));
            }
        }
        // Radiality: walking up from any node must reach the root.
        for start in 1..n {
            let mut seen = 0;
            let mut node = start;
            while node != 0 {
                node = parent[node];
                seen += 1;
                if seen > n {
                    return Err(Error::Validation(format!(
                        "cycle detected walking up from node {start}"
                    )));
                }
            }
        }
        if limit_kw.iter().skip(1).any(|l| *l <= 0.0) {
            return Err(Error::Validation("line limits must be positive".into()));
        }
        for (id, &node) in &node_of {
            if node >= n {
                return Err(Error::Validation(format!(
                    "prosumer {id} mapped to unknown node {node}"
                )));
            }
        }
        Ok(FeederModel {
            parent,
            limit_kw,
            node_of,
        })
    }

    /// Loads the topology from `node,parent,limit_kw` rows (root row has
    /// parent -1) plus a `prosumer_id,node` mapping file.
    pub fn from_csv(topology: &Path, mapping: &Path) -> Result<Self> {
        #[derive(serde::Deserialize)]
        struct TopologyRow {
            node: usize,
            parent: i64,
            limit_kw: f64,
        }
        let mut rows: Vec<TopologyRow> = Vec::new();
        let mut reader = csv::Reader::from_path(topology)?;
        for (i, record) in reader.deserialize::<TopologyRow>().enumerate() {
            rows.push(record.map_err(|e| Error::Parse {
                path: topology.display().to_string(),
                row: i + 2,
                message: e.to_string(),
            })?);
        }
        rows.sort_by_key(|r| r.node);
        for (i, row) in rows.iter().enumerate() {
            if row.node != i {
                return Err(Error::Validation(format!(
                    "feeder nodes must be 0..n-1 without gaps; missing node {i}"
                )));
            }
        }
        let parent = rows
            .iter()
            .map(|r| if r.parent < 0 { r.node } else { r.parent as usize })
            .collect();
        let limit_kw = rows.iter().map(|r| r.limit_kw).collect();

        #[derive(serde::Deserialize)]
        struct MapRow {
            prosumer_id: String,
            node: usize,
        }
        let mut node_of = BTreeMap::new();
        let mut reader = csv::Reader::from_path(mapping)?;
        for (i, record) in reader.deserialize::<MapRow>().enumerate() {
            let row: MapRow = record.map_err(|e| Error::Parse {
                path: mapping.display().to_string(),
                row: i + 2,
                message: e.to_string(),
            })?;
            node_of.insert(ProsumerId::new(row.prosumer_id), row.node);
        }
        FeederModel::new(parent, limit_kw, node_of)
    }

    fn node(&self, id: &ProsumerId) -> Result<usize> {
        self.node_of.get(id).copied().ok_or_else(|| {
            Error::Config(format!("prosumer {id} is not mapped to a feeder node"))
        })
    }

    /// Path from a node up to the root, as the sequence of visited nodes.
    fn path_to_root(&self, mut node: usize) -> Vec<usize> {
        let mut path = vec![node];
        while node != 0 {
            node = self.parent[node];
            path.push(node);
        }
        path
    }

    /// Lines (identified by their child node) on the unique path between two
    /// nodes, with +1 when traversed child-to-parent and -1 otherwise.
    fn path_lines(&self, from: usize, to: usize) -> Vec<(usize, f64)> {
        let up_from = self.path_to_root(from);
        let up_to = self.path_to_root(to);
        let common: std::collections::BTreeSet<usize> = up_to.iter().copied().collect();
        let mut lines = Vec::new();
        // Climb from `from` until the lowest common ancestor, then descend.
        for &node in &up_from {
            if common.contains(&node) {
                let lca = node;
                for &node in up_to.iter().take_while(|n| **n != lca) {
                    lines.push((node, -1.0));
                }
                return lines;
            }
            lines.push((node, 1.0));
        }
        lines
    }
}

/// Stateful checker over a feeder: baseline prosumer net-demand flows plus
/// committed trade flows, superposed with each candidate.
pub struct RadialFeeder {
    model: FeederModel,
    /// Flow on the line above each node, kW, per step; positive towards the
    /// root.
    line_flow: Vec<Vec<f64>>,
    horizon: usize,
    step_hours: f64,
}

impl RadialFeeder {
    /// Builds the checker with the community's baseline net-demand series
    /// (kW, import-positive), one per prosumer.
    pub fn new(model: FeederModel, baselines: &[(ProsumerId, TimeSeries)]) -> Result<Self> {
        let first = baselines
            .first()
            .ok_or_else(|| Error::Validation("feeder baseline needs prosumers".into()))?;
        let horizon = first.1.horizon();
        let step_hours = first.1.step_hours();
        let mut line_flow = vec![vec![0.0; horizon]; model.parent.len()];
        for (id, series) in baselines {
            first.1.check_conformable(series)?;
            let node = model.node(id)?;
            // An importing prosumer draws from the root: flow towards the
            // node, i.e. negative towards-root flow on its path.
            for &line in &model.path_to_root(node) {
                if line == 0 {
                    continue;
                }
                for t in 0..horizon {
                    line_flow[line][t] -= series.get(t);
                }
            }
        }
        Ok(RadialFeeder {
            model,
            line_flow,
            horizon,
            step_hours,
        })
    }

    fn trade_flows(&self, trade: &GridTrade<'_>) -> Result<Vec<(usize, f64)>> {
        let provider = self.model.node(trade.provider)?;
        let receiver = self.model.node(trade.receiver)?;
        Ok(self.model.path_lines(provider, receiver))
    }
}

impl GridConstraint for RadialFeeder {
    fn check(&self, trade: &GridTrade<'_>) -> GridCheckResult {
        let lines = match self.trade_flows(trade) {
            Ok(lines) => lines,
            Err(_) => {
                // Unmapped prosumers are a configuration error; surfaced as a
                // violation on the root line so the market skips the trade.
                return GridCheckResult::Violation {
                    line: 0,
                    step: 0,
                    overload_kw: f64::INFINITY,
                };
            }
        };
        for t in 0..self.horizon.min(trade.schedule.horizon()) {
            let theta_kw = trade.schedule.get(t) / self.step_hours;
            if theta_kw == 0.0 {
                continue;
            }
            for &(line, direction) in &lines {
                if line == 0 {
                    continue;
                }
                let flow = self.line_flow[line][t] + direction * theta_kw;
                let limit = self.model.limit_kw[line];
                if flow.abs() > limit {
                    return GridCheckResult::Violation {
                        line,
                        step: t,
                        overload_kw: flow.abs() - limit,
                    };
                }
            }
        }
        GridCheckResult::Pass
    }

    fn commit(&mut self, trade: &GridTrade<'_>) {
        if let Ok(lines) = self.trade_flows(trade) {
            for t in 0..self.horizon.min(trade.schedule.horizon()) {
                let theta_kw = trade.schedule.get(t) / self.step_hours;
                for &(line, direction) in &lines {
                    self.line_flow[line][t] += direction * theta_kw;
                }
            }
        }
    }
}
