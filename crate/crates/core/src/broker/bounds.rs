use serde::{Deserialize, Serialize};

use super::{BrokerError, Constraint};
use crate::kernel::SimTime;
use crate::resource::ResourceCharacteristics;

/// Extreme makespans and costs of an application on a resource set, all
/// on rated capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleBounds {
    pub t_min: SimTime,
    pub t_max: SimTime,
    pub c_min: f64,
    pub c_max: f64,
}

/// Free times of a resource's PE slots.
#[derive(Debug, Clone)]
pub(crate) struct Slots {
    free: Vec<f64>,
}

impl Slots {
    pub fn new(n: usize, at: f64) -> Self {
        Slots { free: vec![at; n] }
    }

    pub fn from_times(free: Vec<f64>) -> Self {
        debug_assert!(!free.is_empty());
        Slots { free }
    }

    fn earliest(&self) -> usize {
        let mut best = 0;
        for (i, t) in self.free.iter().enumerate() {
            if *t < self.free[best] {
                best = i;
            }
        }
        best
    }

    /// Completion time of a job of `duration` placed on the earliest slot.
    pub fn ect(&self, duration: f64) -> f64 {
        self.free[self.earliest()] + duration
    }

    pub fn place(&mut self, duration: f64) -> f64 {
        let i = self.earliest();
        self.free[i] += duration;
        self.free[i]
    }
}

/// Greedy earliest-completion list schedule of `lengths` (in order) over
/// the given resources. Returns (makespan, per-job resource index).
fn list_schedule(resources: &[&ResourceCharacteristics], lengths: &[f64]) -> (f64, Vec<usize>) {
    let mut slots: Vec<Slots> = resources.iter().map(|r| Slots::new(r.num_pes(), 0.0)).collect();
    let mut makespan: f64 = 0.0;
    let mut placed = Vec::with_capacity(lengths.len());
    for &len in lengths {
        let mut best = 0;
        let mut best_t = f64::INFINITY;
        for (i, r) in resources.iter().enumerate() {
            let t = slots[i].ect(len / r.pe_mips());
            if t < best_t {
                best = i;
                best_t = t;
            }
        }
        slots[best].place(len / resources[best].pe_mips());
        makespan = makespan.max(best_t);
        placed.push(best);
    }
    (makespan, placed)
}

/// Tolerance for comparing a completion time with a deadline.
pub(crate) fn deadline_eps(deadline: f64) -> f64 {
    1e-9 * deadline.abs().max(1.0)
}

/// Cost of packing jobs onto resources in the given preference order: each
/// job goes to the first resource that finishes it within `horizon`, or
/// failing that to the resource finishing it earliest.
fn packed_cost(order: &[&ResourceCharacteristics], lengths: &[f64], horizon: f64) -> f64 {
    let mut slots: Vec<Slots> = order.iter().map(|r| Slots::new(r.num_pes(), 0.0)).collect();
    let eps = deadline_eps(horizon);
    let mut cost = 0.0;
    for &len in lengths {
        let ects: Vec<f64> = order
            .iter()
            .zip(&slots)
            .map(|(r, s)| s.ect(len / r.pe_mips()))
            .collect();
        let pick = ects.iter().position(|&t| t <= horizon + eps).unwrap_or_else(|| {
            let mut best = 0;
            for (i, t) in ects.iter().enumerate() {
                if *t < ects[best] {
                    best = i;
                }
            }
            best
        });
        slots[pick].place(len / order[pick].pe_mips());
        cost += order[pick].cost_of(len);
    }
    cost
}

/// Resource order by ascending price per MI; ties prefer more total MIPS,
/// then the lower index.
pub(crate) fn cheapest_first(resources: &[ResourceCharacteristics]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..resources.len()).collect();
    idx.sort_by(|&a, &b| {
        let (ra, rb) = (&resources[a], &resources[b]);
        ra.cost_per_mi()
            .total_cmp(&rb.cost_per_mi())
            .then(rb.total_mips().total_cmp(&ra.total_mips()))
            .then(a.cmp(&b))
    });
    idx
}

fn dearest_first(resources: &[ResourceCharacteristics]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..resources.len()).collect();
    idx.sort_by(|&a, &b| {
        let (ra, rb) = (&resources[a], &resources[b]);
        rb.cost_per_mi()
            .total_cmp(&ra.cost_per_mi())
            .then(rb.total_mips().total_cmp(&ra.total_mips()))
            .then(a.cmp(&b))
    });
    idx
}

/// Bounds with the cost bounds taken for completion by `t_max`.
pub fn compute_bounds(
    resources: &[ResourceCharacteristics],
    lengths: &[f64],
) -> Result<ScheduleBounds, BrokerError> {
    compute_bounds_within(resources, lengths, None)
}

/// Bounds with the cost bounds taken for completion by `horizon`
/// (default `t_max`).
///
/// * `t_min`: earliest-completion list schedule over every PE.
/// * `t_max`: list schedule on the slowest resource alone.
/// * `c_min` / `c_max`: cheapest-first / dearest-first packing within the
///   horizon.
///
/// `t_max >= t_min` and `c_max >= c_min` are enforced by clamping.
pub fn compute_bounds_within(
    resources: &[ResourceCharacteristics],
    lengths: &[f64],
    horizon: Option<f64>,
) -> Result<ScheduleBounds, BrokerError> {
    if resources.is_empty() {
        return Err(BrokerError::NoResources);
    }
    if lengths.is_empty() {
        return Err(BrokerError::NoJobs);
    }
    let all: Vec<&ResourceCharacteristics> = resources.iter().collect();
    let (t_min, _) = list_schedule(&all, lengths);
    let slowest = resources
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.total_mips().total_cmp(&b.total_mips()).then(i.cmp(j)))
        .map(|(_, r)| r)
        .expect("non-empty");
    let (serial, _) = list_schedule(&[slowest], lengths);
    let t_max = serial.max(t_min);
    let horizon = horizon.unwrap_or(t_max);
    let by = |order: Vec<usize>| -> Vec<&ResourceCharacteristics> {
        order.into_iter().map(|i| &resources[i]).collect()
    };
    let c_min = packed_cost(&by(cheapest_first(resources)), lengths, horizon);
    let c_max = packed_cost(&by(dearest_first(resources)), lengths, horizon).max(c_min);
    Ok(ScheduleBounds {
        t_min,
        t_max,
        c_min,
        c_max,
    })
}

fn interpolate(factor: f64, lo: f64, hi: f64) -> Result<f64, BrokerError> {
    if !(factor >= 0.0) {
        return Err(BrokerError::NeverCompletes(factor));
    }
    Ok((1.0 - factor) * lo + factor * hi)
}

/// Absolute deadline (relative to experiment start) for a constraint.
pub fn determine_deadline(c: Constraint, bounds: &ScheduleBounds) -> Result<SimTime, BrokerError> {
    match c {
        Constraint::Absolute(v) if v > 0.0 => Ok(v),
        Constraint::Absolute(v) => Err(BrokerError::NonPositiveConstraint(v)),
        Constraint::Factor(f) => interpolate(f, bounds.t_min, bounds.t_max),
    }
}

pub fn determine_budget(c: Constraint, bounds: &ScheduleBounds) -> Result<f64, BrokerError> {
    match c {
        Constraint::Absolute(v) if v >= 0.0 => Ok(v),
        Constraint::Absolute(v) => Err(BrokerError::NonPositiveConstraint(v)),
        Constraint::Factor(f) => interpolate(f, bounds.c_min, bounds.c_max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resource::{AllocationPolicy, Machine};

    fn queue(price: f64) -> ResourceCharacteristics {
        ResourceCharacteristics {
            name: format!("q{price}"),
            arch: "x86".into(),
            os: "Linux".into(),
            machines: vec![Machine::uniform(0, 1, 100.0)],
            policy: AllocationPolicy::TimeShared,
            cost_per_pe_time_unit: price,
            time_zone: 0.0,
        }
    }

    #[test]
    fn degenerate_single_job() {
        let b = compute_bounds(&[queue(3.0)], &[500.0]).unwrap();
        assert_eq!((b.t_min, b.t_max), (5.0, 5.0));
        assert_eq!((b.c_min, b.c_max), (15.0, 15.0));
    }

    #[test]
    fn test_queues() {
        let qs: Vec<_> = (0..10).map(|i| queue(10.0 + 2.0 * i as f64)).collect();
        let lengths = vec![9000.0; 100];
        let b = compute_bounds(&qs, &lengths).unwrap();
        assert_eq!(b.t_min, 900.0);
        assert_eq!(b.t_max, 9000.0);
        assert_eq!(b.c_min, 90_000.0);
        assert_eq!(b.c_max, 252_000.0);
        let tight = compute_bounds_within(&qs, &lengths, Some(900.0)).unwrap();
        assert_eq!(tight.c_min, 171_000.0);
        assert_eq!(tight.c_max, 171_000.0);
    }

    #[test]
    fn factors() {
        let b = ScheduleBounds {
            t_min: 900.0,
            t_max: 9000.0,
            c_min: 1.0,
            c_max: 3.0,
        };
        assert_eq!(determine_deadline(Constraint::Factor(0.5), &b).unwrap(), 4950.0);
        assert_eq!(determine_deadline(Constraint::Factor(0.0), &b).unwrap(), 900.0);
        assert_eq!(determine_budget(Constraint::Factor(1.0), &b).unwrap(), 3.0);
        assert_eq!(determine_budget(Constraint::Absolute(7.0), &b).unwrap(), 7.0);
        assert!(matches!(
            determine_deadline(Constraint::Factor(-0.1), &b),
            Err(BrokerError::NeverCompletes(_))
        ));
    }
}
