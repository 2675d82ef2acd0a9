//! Grids of runs over demand multipliers, seeds and controllers.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::{run, Scenario};
use crate::control::ControllerKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub multipliers: Vec<f64>,
    pub seeds: Vec<u64>,
    pub controllers: Vec<ControllerKind>,
    /// Worker threads; 0 lets rayon pick.
    pub jobs: usize,
}

impl SweepSpec {
    fn check(&self) -> Result<()> {
        if self.multipliers.is_empty() || self.seeds.is_empty() || self.controllers.is_empty() {
            return Err(Error::config(
                "sweep needs at least one multiplier, seed and controller",
            ));
        }
        if let Some(m) = self.multipliers.iter().find(|m| !(**m >= 0.0) || !m.is_finite()) {
            return Err(Error::config(format!("sweep multiplier must be >= 0, got {m}")));
        }
        for (i, c) in self.controllers.iter().enumerate() {
            if self.controllers[..i].contains(c) {
                return Err(Error::config(format!("controller `{}` listed twice", c.short_name())));
            }
        }
        Ok(())
    }
}

/// Summary of one run of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub multiplier: f64,
    pub seed: u64,
    #[serde(serialize_with = "short_name")]
    pub controller: ControllerKind,
    pub mean_total_queue: f64,
    pub final_total_queue: f64,
    pub mean_avg_time_spent_seconds: f64,
    pub final_avg_time_spent_slots: f64,
    pub final_avg_time_spent_seconds: f64,
    pub total_wc_violations: u64,
}

fn short_name<S: serde::Serializer>(k: &ControllerKind, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(k.short_name())
}

pub const SWEEP_CSV_HEADER: &str = "multiplier,seed,controller,mean_total_queue,final_total_queue,\
mean_avg_time_spent_seconds,final_avg_time_spent_slots,final_avg_time_spent_seconds,total_wc_violations";

/// Runs every (multiplier, seed, controller) combination. Results come back
/// in that nested order regardless of scheduling, and each cell is a pure
/// function of the base scenario and its coordinates.
pub fn sweep(base: &Scenario, spec: &SweepSpec) -> Result<Vec<SweepCell>> {
    spec.check()?;
    base.compile()?;
    let mut cells = Vec::new();
    for &m in &spec.multipliers {
        for &seed in &spec.seeds {
            for &kind in &spec.controllers {
                cells.push((m, seed, kind));
            }
        }
    }
    let work = || {
        cells
            .par_iter()
            .map(|&(multiplier, seed, controller)| {
                let scenario = base
                    .clone()
                    .with_demand_scale(multiplier)
                    .with_seed(seed)
                    .with_controller(controller);
                let trace = run(&scenario)?;
                let last = trace.last().copied().unwrap_or_else(|| unreachable!("horizon >= 1"));
                Ok(SweepCell {
                    multiplier,
                    seed,
                    controller,
                    mean_total_queue: trace.mean_total_queue(),
                    final_total_queue: last.total_queue,
                    mean_avg_time_spent_seconds: trace.mean_avg_time_spent_seconds(),
                    final_avg_time_spent_slots: last.avg_time_spent_slots,
                    final_avg_time_spent_seconds: last.avg_time_spent_seconds,
                    total_wc_violations: trace.total_violations(),
                })
            })
            .collect::<Result<Vec<_>>>()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    pool.install(work)
}

pub fn write_sweep_csv<W: Write>(cells: &[SweepCell], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_CSV_HEADER.split(','))?;
    for c in cells {
        w.write_record([
            c.multiplier.to_string(),
            c.seed.to_string(),
            c.controller.short_name().to_string(),
            c.mean_total_queue.to_string(),
            c.final_total_queue.to_string(),
            c.mean_avg_time_spent_seconds.to_string(),
            c.final_avg_time_spent_slots.to_string(),
            c.final_avg_time_spent_seconds.to_string(),
            c.total_wc_violations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::fixture_deadlock_ring;

    fn spec(jobs: usize) -> SweepSpec {
        SweepSpec {
            multipliers: vec![1.0, 2.0],
            seeds: vec![1, 2, 3],
            controllers: ControllerKind::ALL.to_vec(),
            jobs,
        }
    }

    #[test]
    fn ordered_and_independent_of_threads() {
        let base = fixture_deadlock_ring().with_horizon(30);
        let one = sweep(&base, &spec(1)).unwrap();
        let four = sweep(&base, &spec(4)).unwrap();
        assert_eq!(one, four);
        assert_eq!(one.len(), 18);
        assert_eq!(
            (one[0].multiplier, one[0].seed, one[0].controller),
            (1.0, 1, ControllerKind::FixedCycle)
        );
        assert_eq!(one[17].controller, ControllerKind::CapacityAware);
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_sweep_csv(&one, &mut a).unwrap();
        write_sweep_csv(&four, &mut b).unwrap();
        assert_eq!(a, b);
        assert!(String::from_utf8(a).unwrap().starts_with(SWEEP_CSV_HEADER));
    }

    #[test]
    fn rejects_duplicates_and_empty_lists() {
        let base = fixture_deadlock_ring().with_horizon(2);
        let mut s = spec(1);
        s.controllers = vec![ControllerKind::BackPressure, ControllerKind::BackPressure];
        assert!(sweep(&base, &s).is_err());
        let mut s = spec(1);
        s.seeds.clear();
        assert!(sweep(&base, &s).is_err());
    }
}
