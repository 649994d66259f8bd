//! Cycle extraction from a state-of-charge trajectory.
//!
//! The SoC series is reduced to monotone charge/discharge segments, and each
//! new segment is matched against the still-open opposing segments in
//! last-in-first-out order, splitting ranges at the matched levels. A
//! discharge portion re-filled by a later charge (or vice versa) closes as a
//! full cycle; whatever remains open at the end of the series counts as half
//! cycles. A counted cycle whose high endpoint sits at 100% SoC is a regular
//! cycle, anything else is irregular.

use serde::{Deserialize, Serialize};

/// A cycle counts as regular when its high endpoint is within this distance
/// of 100% SoC.
pub const REGULAR_SOC_TOLERANCE: f64 = 1e-6;

/// Ranges smaller than this are treated as no movement at all.
const LEVEL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CycleKind {
    /// Cycle anchored at 100% SoC.
    Regular,
    /// Cycle whose high endpoint is below 100% SoC.
    Irregular,
}

/// One counted charge/discharge cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub start_soc_pct: f64,
    pub end_soc_pct: f64,
    /// 1.0 for a full cycle, 0.5 for a half cycle.
    pub weight: f64,
    pub kind: CycleKind,
}

impl CycleRecord {
    pub fn full(start_soc_pct: f64, end_soc_pct: f64) -> Self {
        Self::with_weight(start_soc_pct, end_soc_pct, 1.0)
    }

    pub fn half(start_soc_pct: f64, end_soc_pct: f64) -> Self {
        Self::with_weight(start_soc_pct, end_soc_pct, 0.5)
    }

    fn with_weight(start_soc_pct: f64, end_soc_pct: f64, weight: f64) -> Self {
        let kind = if start_soc_pct.max(end_soc_pct) >= 100.0 - REGULAR_SOC_TOLERANCE {
            CycleKind::Regular
        } else {
            CycleKind::Irregular
        };
        CycleRecord {
            start_soc_pct,
            end_soc_pct,
            weight,
            kind,
        }
    }

    /// Depth of discharge swept by the cycle, percent.
    pub fn dod_pct(&self) -> f64 {
        (self.start_soc_pct - self.end_soc_pct).abs()
    }

    pub fn is_full(&self) -> bool {
        self.weight == 1.0
    }

    pub fn high(&self) -> f64 {
        self.start_soc_pct.max(self.end_soc_pct)
    }

    pub fn low(&self) -> f64 {
        self.start_soc_pct.min(self.end_soc_pct)
    }
}

/// Open monotone segment awaiting a match; `from` is the level at which the
/// unmatched portion begins, `to` the level where the series moved on.
#[derive(Debug, Clone, Copy)]
struct OpenSegment {
    from: f64,
    to: f64,
}

impl OpenSegment {
    fn rising(&self) -> bool {
        self.to > self.from
    }

    fn range(&self) -> f64 {
        (self.to - self.from).abs()
    }
}

/// Counts charge/discharge cycles in an SoC-percent series.
///
/// A constant series produces no cycles.
pub fn rainflow_count(soc_pct: &[f64]) -> Vec<CycleRecord> {
    let turning = turning_points(soc_pct);
    let mut cycles = Vec::new();
    let mut open: Vec<OpenSegment> = Vec::new();

    for window in turning.windows(2) {
        let mut seg = OpenSegment {
            from: window[0],
            to: window[1],
        };
        loop {
            match open.last_mut() {
                None => {
                    open.push(seg);
                    break;
                }
                Some(top) if top.rising() == seg.rising() => {
                    // Same direction and contiguous at top.to == seg.from:
                    // extend the open segment.
                    top.to = seg.to;
                    break;
                }
                Some(top) => {
                    // Opposing segment retraces the top starting from its end.
                    let matched = seg.range().min(top.range());
                    if matched > LEVEL_EPS {
                        // The retraced portion spans [top.to, top.to +/- matched]:
                        // the first phase ran top.to -> origin side, the second
                        // re-traced it, so record the cycle from the matched
                        // portion's origin on the top segment.
                        let origin = if top.rising() {
                            top.to - matched
                        } else {
                            top.to + matched
                        };
                        cycles.push(CycleRecord::full(origin, top.to));
                    }
                    if seg.range() < top.range() - LEVEL_EPS {
                        // Top survives with its unmatched head portion.
                        top.to = seg.to;
                        break;
                    }
                    let leftover = seg.range() - top.range();
                    let top_from = top.from;
                    open.pop();
                    if leftover <= LEVEL_EPS {
                        break;
                    }
                    // Remainder continues past the consumed segment; it is
                    // contiguous with (and same-directed as) the element below.
                    seg = OpenSegment {
                        from: top_from,
                        to: seg.to,
                    };
                }
            }
        }
    }

    // Whatever never closed counts as half cycles, oldest first.
    for seg in open {
        if seg.range() > LEVEL_EPS {
            cycles.push(CycleRecord::half(seg.from, seg.to));
        }
    }
    cycles
}

/// Collapses a series to its turning points (direction reversals); equal
/// consecutive values are treated as a continuation.
fn turning_points(values: &[f64]) -> Vec<f64> {
    let mut points: Vec<f64> = Vec::new();
    let mut dir: Option<bool> = None; // Some(true) = rising
    for &v in values {
        match points.last() {
            None => points.push(v),
            Some(&last) => {
                if (v - last).abs() <= LEVEL_EPS {
                    continue;
                }
                let rising = v > last;
                if dir == Some(rising) {
                    *points.last_mut().unwrap() = v;
                } else {
                    points.push(v);
                    dir = Some(rising);
                }
            }
        }
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total_travel(series: &[f64]) -> f64 {
        series.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    fn cycle_travel(cycles: &[CycleRecord]) -> f64 {
        cycles.iter().map(|c| 2.0 * c.weight * c.dod_pct()).sum()
    }

    #[test]
    fn single_excursion_closes_one_regular_full_cycle() {
        let cycles = rainflow_count(&[100.0, 60.0, 100.0]);
        assert_eq!(cycles.len(), 1);
        let c = cycles[0];
        assert!(c.is_full());
        assert_eq!(c.kind, CycleKind::Regular);
        assert!((c.dod_pct() - 40.0).abs() < 1e-12);
    }

    #[test]
    fn constant_series_counts_nothing() {
        assert!(rainflow_count(&[50.0, 50.0, 50.0]).is_empty());
        assert!(rainflow_count(&[50.0]).is_empty());
        assert!(rainflow_count(&[]).is_empty());
    }

    #[test]
    fn nested_excursions_split_at_matched_levels() {
        let cycles = rainflow_count(&[100.0, 0.0, 100.0, 80.0, 40.0, 80.0]);
        let fulls: Vec<_> = cycles.iter().filter(|c| c.is_full()).collect();
        assert_eq!(fulls.len(), 2);
        // Deep regular cycle over the whole range.
        assert_eq!(fulls[0].kind, CycleKind::Regular);
        assert!((fulls[0].dod_pct() - 100.0).abs() < 1e-12);
        // Shallow irregular cycle 80 -> 40.
        assert_eq!(fulls[1].kind, CycleKind::Irregular);
        assert!((fulls[1].high() - 80.0).abs() < 1e-12);
        assert!((fulls[1].low() - 40.0).abs() < 1e-12);
        // The unmatched descent 100 -> 80 survives as a regular half cycle.
        let halves: Vec<_> = cycles.iter().filter(|c| !c.is_full()).collect();
        assert_eq!(halves.len(), 1);
        assert_eq!(halves[0].kind, CycleKind::Regular);
        assert!((halves[0].high() - 100.0).abs() < 1e-12);
        assert!((halves[0].low() - 80.0).abs() < 1e-12);
    }

    #[test]
    fn charge_led_excursion_counts_too() {
        let cycles = rainflow_count(&[20.0, 80.0, 20.0]);
        assert_eq!(cycles.len(), 1);
        assert!(cycles[0].is_full());
        assert_eq!(cycles[0].kind, CycleKind::Irregular);
        assert!((cycles[0].dod_pct() - 60.0).abs() < 1e-12);
    }

    #[test]
    fn monotone_series_is_a_single_half_cycle() {
        let cycles = rainflow_count(&[90.0, 70.0, 40.0, 10.0]);
        assert_eq!(cycles.len(), 1);
        assert!(!cycles[0].is_full());
        assert!((cycles[0].dod_pct() - 80.0).abs() < 1e-12);
    }

    #[test]
    fn travel_is_conserved_on_random_walks() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let n = rng.gen_range(2..60);
            let series: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..100.0)).collect();
            let cycles = rainflow_count(&series);
            let expected = total_travel(&series);
            let counted = cycle_travel(&cycles);
            assert!(
                (expected - counted).abs() < 1e-6,
                "travel {expected} vs counted {counted}"
            );
        }
    }

    #[test]
    fn regular_classification_uses_tolerance() {
        let c = CycleRecord::full(100.0 - 1e-9, 40.0);
        assert_eq!(c.kind, CycleKind::Regular);
        let c = CycleRecord::full(99.9, 40.0);
        assert_eq!(c.kind, CycleKind::Irregular);
    }
}
