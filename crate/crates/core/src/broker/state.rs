use std::collections::VecDeque;

use super::bounds::{compute_bounds_within, deadline_eps, Slots};
use super::{
    determine_budget, determine_deadline, BrokerError, BrokerPolicy, Experiment, ExperimentResult,
    ResourceSummary, ScheduleBounds, Strategy, TraceRow,
};
use crate::kernel::{EntityId, SimTime};
use crate::resource::ResourceCharacteristics;
use crate::workload::{Gridlet, GridletStatus};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JobState {
    Unassigned,
    Assigned(usize),
    InFlight { resource: usize, dispatched: SimTime },
    Done(usize),
    Canceled,
    Failed,
}

#[derive(Debug, Clone)]
struct Job {
    gridlet: Gridlet,
    state: JobState,
    retried: bool,
}

/// The broker's view of one resource.
#[derive(Debug, Clone)]
pub struct BrokerResource {
    pub id: EntityId,
    pub characteristics: ResourceCharacteristics,
    pub cost_per_mi: f64,
    pub total_mips: f64,
    /// Concurrent submissions allowed: one per PE.
    pub slots: usize,
    /// MI per time unit of recent completions, newest last.
    history: VecDeque<f64>,
    /// Jobs planned here but not yet submitted, in dispatch order.
    pub assigned: VecDeque<usize>,
    /// (job, dispatch time)
    pub in_flight: Vec<(usize, SimTime)>,
    pub completed: usize,
    pub spend: f64,
    pub alive: bool,
    last_sample: Option<(usize, usize, f64)>,
}

impl BrokerResource {
    pub fn new(id: EntityId, characteristics: ResourceCharacteristics) -> Self {
        BrokerResource {
            id,
            cost_per_mi: characteristics.cost_per_mi(),
            total_mips: characteristics.total_mips(),
            slots: characteristics.num_pes(),
            characteristics,
            history: VecDeque::new(),
            assigned: VecDeque::new(),
            in_flight: Vec::new(),
            completed: 0,
            spend: 0.0,
            alive: true,
            last_sample: None,
        }
    }

    /// Records the per-job rate of a completion, keeping the last `window`.
    pub fn observe(&mut self, length_mi: f64, wall: f64, window: usize) {
        if wall > 0.0 && window > 0 {
            self.history.push_back(length_mi / wall);
            while self.history.len() > window {
                self.history.pop_front();
            }
        }
    }

    pub fn history(&self) -> impl Iterator<Item = f64> + '_ {
        self.history.iter().copied()
    }

    fn cost_of(&self, length_mi: f64) -> f64 {
        self.characteristics.cost_of(length_mi)
    }
}

/// MI per time unit this user can expect from `r` with all its slots busy.
///
/// Before any completion: rated capacity times `optimism`. Afterwards: the
/// mean per-job rate over the recorded window times the slot count.
pub fn estimate_rate(r: &BrokerResource, optimism: f64) -> f64 {
    if r.history.is_empty() {
        r.total_mips * optimism
    } else {
        r.history.iter().sum::<f64>() / r.history.len() as f64 * r.slots as f64
    }
}

/// A submission the driving entity must deliver.
#[derive(Debug, Clone)]
pub struct Dispatch {
    pub resource: EntityId,
    pub gridlet: Gridlet,
}

/// Forecast used during one scheduling pass.
struct Plan {
    slots: Vec<Slots>,
    slot_rate: Vec<f64>,
}

impl Plan {
    fn duration(&self, r: usize, len: f64) -> f64 {
        len / self.slot_rate[r]
    }

    fn ect(&self, r: usize, len: f64) -> f64 {
        self.slots[r].ect(self.duration(r, len))
    }
}

/// Scheduling state of one user's experiment.
#[derive(Debug, Clone)]
pub struct BrokerState {
    pub user: String,
    pub strategy: Strategy,
    pub policy: BrokerPolicy,
    pub start_time: SimTime,
    /// Absolute.
    pub deadline: SimTime,
    pub budget: f64,
    pub bounds: ScheduleBounds,
    pub resources: Vec<BrokerResource>,
    jobs: Vec<Job>,
    spend: f64,
    pub trace: Vec<TraceRow>,
    pub returned: Vec<Gridlet>,
}

impl BrokerState {
    /// Resolves the experiment's constraints against `resources` and sets up
    /// an empty plan. Resources are kept in the given (discovery) order.
    pub fn new(
        user: impl Into<String>,
        experiment: &Experiment,
        resources: Vec<(EntityId, ResourceCharacteristics)>,
        start_time: SimTime,
    ) -> Result<Self, BrokerError> {
        let chars: Vec<ResourceCharacteristics> =
            resources.iter().map(|(_, c)| c.clone()).collect();
        let lengths: Vec<f64> = experiment
            .application
            .gridlets
            .iter()
            .map(|g| g.length_mi)
            .collect();
        let loose = compute_bounds_within(&chars, &lengths, None)?;
        let deadline = determine_deadline(experiment.deadline, &loose)?;
        let bounds = compute_bounds_within(&chars, &lengths, Some(deadline))?;
        let budget = determine_budget(experiment.budget, &bounds)?;
        Ok(BrokerState {
            user: user.into(),
            strategy: experiment.strategy,
            policy: experiment.policy,
            start_time,
            deadline: start_time + deadline,
            budget,
            bounds,
            resources: resources
                .into_iter()
                .map(|(id, c)| BrokerResource::new(id, c))
                .collect(),
            jobs: experiment
                .application
                .gridlets
                .iter()
                .map(|g| Job {
                    gridlet: g.clone(),
                    state: JobState::Unassigned,
                    retried: false,
                })
                .collect(),
            spend: 0.0,
            trace: Vec::new(),
            returned: Vec::new(),
        })
    }

    pub fn job_states(&self) -> impl Iterator<Item = JobState> + '_ {
        self.jobs.iter().map(|j| j.state)
    }

    pub fn completed(&self) -> usize {
        self.resources.iter().map(|r| r.completed).sum()
    }

    /// Billed so far.
    pub fn spend(&self) -> f64 {
        self.spend
    }

    pub fn in_flight(&self) -> usize {
        self.resources.iter().map(|r| r.in_flight.len()).sum()
    }

    /// Billed spend plus the price of every job in flight.
    pub fn committed(&self) -> f64 {
        self.spend
            + self
                .resources
                .iter()
                .flat_map(|r| r.in_flight.iter().map(move |(j, _)| r.cost_of(self.jobs[*j].gridlet.length_mi)))
                .sum::<f64>()
    }

    /// Committed spend plus the price of every planned job.
    pub fn committed_with_plan(&self) -> f64 {
        self.committed()
            + self
                .resources
                .iter()
                .flat_map(|r| r.assigned.iter().map(move |j| r.cost_of(self.jobs[*j].gridlet.length_mi)))
                .sum::<f64>()
    }

    fn budget_eps(&self) -> f64 {
        1e-9 * self.budget.abs().max(1.0)
    }

    /// Whether new work may still be planned or submitted at `now`.
    pub fn accepting(&self, now: SimTime) -> bool {
        now < self.deadline && self.committed() < self.budget
    }

    fn release_plan(&mut self) {
        for r in &mut self.resources {
            for j in r.assigned.drain(..) {
                self.jobs[j].state = JobState::Unassigned;
            }
        }
    }

    fn forecast(&self, now: SimTime) -> Plan {
        let mut slots = Vec::with_capacity(self.resources.len());
        let mut slot_rate = Vec::with_capacity(self.resources.len());
        for r in &self.resources {
            let rate = estimate_rate(r, self.policy.optimism) / r.slots as f64;
            let mut free: Vec<f64> = r
                .in_flight
                .iter()
                .map(|&(j, dispatched)| {
                    let total = self.jobs[j].gridlet.length_mi / rate;
                    now + (total - (now - dispatched)).max(0.0)
                })
                .collect();
            while free.len() < r.slots {
                free.push(now);
            }
            slots.push(Slots::from_times(free));
            slot_rate.push(rate);
        }
        Plan { slots, slot_rate }
    }

    fn assign(&mut self, plan: &mut Plan, r: usize, j: usize) -> f64 {
        let len = self.jobs[j].gridlet.length_mi;
        let dur = plan.duration(r, len);
        plan.slots[r].place(dur);
        self.jobs[j].state = JobState::Assigned(r);
        self.resources[r].assigned.push_back(j);
        self.resources[r].cost_of(len)
    }

    /// Alive resources by ascending price per MI; ties prefer more total
    /// MIPS, then discovery order.
    fn cheapest_first(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.resources.len())
            .filter(|&i| self.resources[i].alive)
            .collect();
        order.sort_by(|&a, &b| {
            let (ra, rb) = (&self.resources[a], &self.resources[b]);
            ra.cost_per_mi
                .total_cmp(&rb.cost_per_mi)
                .then(rb.total_mips.total_cmp(&ra.total_mips))
                .then(a.cmp(&b))
        });
        order
    }

    /// Rebuilds the plan for every job not yet submitted.
    pub fn schedule(&mut self, now: SimTime) {
        self.release_plan();
        if !self.accepting(now) {
            return;
        }
        let mut plan = self.forecast(now);
        let pending: Vec<usize> = (0..self.jobs.len())
            .filter(|&j| self.jobs[j].state == JobState::Unassigned)
            .collect();
        if pending.is_empty() {
            return;
        }
        let remaining = self.budget - self.committed();
        match self.strategy {
            Strategy::Cost => self.plan_cost(&mut plan, &pending, remaining),
            Strategy::Time => self.plan_time(&mut plan, &pending, remaining),
            Strategy::CostTime => self.plan_cost_time(&mut plan, &pending, remaining),
            Strategy::ConservativeTime => self.plan_conservative(&mut plan, &pending, remaining),
        }
    }

    /// Cheapest resource first, each filled with every job it can finish
    /// by the deadline while the budget lasts.
    fn plan_cost(&mut self, plan: &mut Plan, pending: &[usize], mut remaining: f64) {
        let (d_eps, b_eps) = (deadline_eps(self.deadline), self.budget_eps());
        let mut taken = vec![false; pending.len()];
        for r in self.cheapest_first() {
            for (k, &j) in pending.iter().enumerate() {
                if taken[k] {
                    continue;
                }
                let len = self.jobs[j].gridlet.length_mi;
                let cost = self.resources[r].cost_of(len);
                if cost <= remaining + b_eps && plan.ect(r, len) <= self.deadline + d_eps {
                    remaining -= self.assign(plan, r, j);
                    taken[k] = true;
                }
            }
        }
    }

    /// Earliest-completing resource among those whose price for the job
    /// fits `budget_per_job`, restricted to `allowed`. Ties go to the lower
    /// index.
    fn fastest_affordable(
        &self,
        plan: &Plan,
        len: f64,
        budget_per_job: f64,
        allowed: &[usize],
    ) -> Option<(usize, f64)> {
        let b_eps = self.budget_eps();
        let mut best: Option<(usize, f64)> = None;
        for &r in allowed {
            if self.resources[r].cost_of(len) > budget_per_job + b_eps {
                continue;
            }
            let t = plan.ect(r, len);
            if best.is_none_or(|(_, bt)| t < bt) {
                best = Some((r, t));
            }
        }
        best.filter(|&(_, t)| t <= self.deadline + deadline_eps(self.deadline))
    }

    fn alive(&self) -> Vec<usize> {
        (0..self.resources.len())
            .filter(|&i| self.resources[i].alive)
            .collect()
    }

    /// Each job, in order, to the earliest-completing resource whose price
    /// fits the remaining budget per remaining job.
    fn plan_time(&mut self, plan: &mut Plan, pending: &[usize], mut remaining: f64) {
        let alive = self.alive();
        let mut left = pending.len();
        for &j in pending {
            let len = self.jobs[j].gridlet.length_mi;
            let per_job = remaining / left as f64;
            if let Some((r, _)) = self.fastest_affordable(plan, len, per_job, &alive) {
                remaining -= self.assign(plan, r, j);
                left -= 1;
                if left == 0 {
                    break;
                }
            }
        }
    }

    /// Price groups in ascending order; inside a group each job goes to the
    /// earliest-completing member.
    fn plan_cost_time(&mut self, plan: &mut Plan, pending: &[usize], mut remaining: f64) {
        let (d_eps, b_eps) = (deadline_eps(self.deadline), self.budget_eps());
        let order = self.cheapest_first();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for r in order {
            let price = self.resources[r].cost_per_mi;
            match groups.last_mut() {
                Some(g)
                    if (self.resources[g[0]].cost_per_mi - price).abs()
                        <= 1e-12 * price.abs().max(f64::MIN_POSITIVE) =>
                {
                    g.push(r)
                }
                _ => groups.push(vec![r]),
            }
        }
        let mut taken = vec![false; pending.len()];
        for group in &groups {
            for (k, &j) in pending.iter().enumerate() {
                if taken[k] {
                    continue;
                }
                let len = self.jobs[j].gridlet.length_mi;
                // group is in capability order, so strict `<` keeps the
                // more capable member on ties
                let mut best: Option<(usize, f64)> = None;
                for &r in group {
                    let t = plan.ect(r, len);
                    if best.is_none_or(|(_, bt)| t < bt) {
                        best = Some((r, t));
                    }
                }
                let Some((r, t)) = best else { continue };
                let cost = self.resources[r].cost_of(len);
                if t <= self.deadline + d_eps && cost <= remaining + b_eps {
                    remaining -= self.assign(plan, r, j);
                    taken[k] = true;
                }
            }
        }
    }

    /// Stages at a fixed budget per job: jobs go to the earliest-completing
    /// resource affordable at that level, which spreads them in inverse
    /// proportion to completion time. The level is recomputed over the
    /// jobs still unplanned and a new stage runs while it rises.
    fn plan_conservative(&mut self, plan: &mut Plan, pending: &[usize], mut remaining: f64) {
        let alive = self.alive();
        let mut taken = vec![false; pending.len()];
        let mut left = pending.len();
        let mut level = f64::NEG_INFINITY;
        while left > 0 {
            let per_job = remaining / left as f64;
            if per_job <= level {
                break;
            }
            level = per_job;
            for (k, &j) in pending.iter().enumerate() {
                if taken[k] {
                    continue;
                }
                let len = self.jobs[j].gridlet.length_mi;
                if let Some((r, _)) = self.fastest_affordable(plan, len, level, &alive) {
                    remaining -= self.assign(plan, r, j);
                    taken[k] = true;
                    left -= 1;
                }
            }
        }
    }

    /// Submissions allowed at `now`: per resource, planned jobs while fewer
    /// than one per PE are in flight.
    pub fn dispatch(&mut self, now: SimTime) -> Vec<Dispatch> {
        let mut out = Vec::new();
        if now >= self.deadline {
            return out;
        }
        for r in 0..self.resources.len() {
            while self.resources[r].alive && self.resources[r].in_flight.len() < self.resources[r].slots {
                let Some(j) = self.resources[r].assigned.pop_front() else { break };
                self.jobs[j].state = JobState::InFlight {
                    resource: r,
                    dispatched: now,
                };
                self.resources[r].in_flight.push((j, now));
                let mut gridlet = self.jobs[j].gridlet.clone();
                gridlet.status = GridletStatus::Ready;
                out.push(Dispatch {
                    resource: self.resources[r].id,
                    gridlet,
                });
            }
        }
        out
    }

    /// Jobs in flight, as (resource entity, gridlet id).
    pub fn in_flight_jobs(&self) -> Vec<(EntityId, usize)> {
        self.resources
            .iter()
            .flat_map(|r| r.in_flight.iter().map(move |(j, _)| (r.id, self.jobs[*j].gridlet.id)))
            .collect()
    }

    fn job_index(&self, gridlet_id: usize) -> Option<usize> {
        // Applications number gridlets 0..n; fall back to a scan otherwise.
        match self.jobs.get(gridlet_id) {
            Some(j) if j.gridlet.id == gridlet_id => Some(gridlet_id),
            _ => self.jobs.iter().position(|j| j.gridlet.id == gridlet_id),
        }
    }

    /// Settles a gridlet coming back from a resource. Unknown or duplicate
    /// returns are ignored.
    pub fn on_return(&mut self, now: SimTime, gridlet: Gridlet) {
        let Some(j) = self.job_index(gridlet.id) else { return };
        let JobState::InFlight { resource: r, dispatched } = self.jobs[j].state else {
            return;
        };
        let res = &mut self.resources[r];
        res.in_flight.retain(|&(k, _)| k != j);
        res.spend += gridlet.cost_incurred;
        self.spend += gridlet.cost_incurred;
        match gridlet.status {
            GridletStatus::Success => {
                res.completed += 1;
                res.observe(gridlet.length_mi, now - dispatched, self.policy.window);
                self.jobs[j].state = JobState::Done(r);
            }
            GridletStatus::Canceled => self.jobs[j].state = JobState::Canceled,
            _ => {
                res.alive = false;
                let planned: Vec<usize> = res.assigned.drain(..).collect();
                for k in planned {
                    self.jobs[k].state = JobState::Unassigned;
                }
                let job = &mut self.jobs[j];
                if job.retried {
                    job.state = JobState::Failed;
                } else {
                    job.retried = true;
                    job.state = JobState::Unassigned;
                }
            }
        }
        self.returned.push(gridlet);
    }

    /// True once nothing is in flight after a scheduling round: either all
    /// jobs are settled or no remaining job can be planned.
    pub fn finished(&self) -> bool {
        self.in_flight() == 0
            && self.resources.iter().all(|r| r.assigned.is_empty() || !r.alive)
    }

    /// Appends a trace row for every resource whose counters changed.
    pub fn sample(&mut self, now: SimTime) {
        for r in &mut self.resources {
            let s = (
                r.assigned.len() + r.in_flight.len() + r.completed,
                r.completed,
                r.spend,
            );
            if r.last_sample != Some(s) {
                r.last_sample = Some(s);
                self.trace.push(TraceRow {
                    time: now,
                    resource: r.characteristics.name.clone(),
                    committed: s.0,
                    processed: s.1,
                    spend: s.2,
                });
            }
        }
    }

    pub fn result(&self, termination_time: SimTime) -> ExperimentResult {
        ExperimentResult {
            user: self.user.clone(),
            strategy: self.strategy,
            start_time: self.start_time,
            deadline: self.deadline,
            budget: self.budget,
            bounds: self.bounds,
            jobs: self.jobs.len(),
            completed: self.completed(),
            total_spend: self.spend,
            termination_time,
            per_resource: self
                .resources
                .iter()
                .map(|r| ResourceSummary {
                    name: r.characteristics.name.clone(),
                    completed: r.completed,
                    spend: r.spend,
                })
                .collect(),
            trace: self.trace.clone(),
            returned: self.returned.clone(),
        }
    }
}

#[cfg(test)]
mod tests;
