//! Local schedulers of a grid resource: time-shared (round-robin PE sharing
//! modelled by interval shares) and space-shared (dedicated PE, FCFS queue).

use std::collections::VecDeque;

use super::share::pe_share_allocation;
use super::Machine;
use crate::kernel::{EntityId, SimTime};
use crate::workload::{Gridlet, GridletStatus};

/// Relative tolerance for "remaining work is zero".
pub const COMPLETION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridletKey {
    pub owner: Option<EntityId>,
    pub id: usize,
}

impl GridletKey {
    pub fn of(g: &Gridlet) -> Self {
        GridletKey {
            owner: g.owner,
            id: g.id,
        }
    }
}

/// A gridlet resident at a resource.
#[derive(Debug, Clone, PartialEq)]
pub struct ResGridlet {
    pub gridlet: Gridlet,
    pub arrival_time: SimTime,
    pub machine_id: usize,
    pub pe_id: usize,
    pub remaining_mi: f64,
    pub forecast_finish: SimTime,
}

impl ResGridlet {
    fn new(mut gridlet: Gridlet, now: SimTime) -> Self {
        gridlet.submit_time = now;
        let remaining_mi = gridlet.length_mi;
        ResGridlet {
            gridlet,
            arrival_time: now,
            machine_id: 0,
            pe_id: 0,
            remaining_mi,
            forecast_finish: f64::INFINITY,
        }
    }

    fn key(&self) -> GridletKey {
        GridletKey::of(&self.gridlet)
    }

    fn is_done(&self) -> bool {
        self.remaining_mi <= COMPLETION_TOLERANCE * self.gridlet.length_mi
    }

    fn close(mut self, now: SimTime, status: GridletStatus) -> Gridlet {
        let g = &mut self.gridlet;
        g.finish_time = now;
        g.wall_clock = now - self.arrival_time;
        g.cpu_time = if g.status == GridletStatus::InExec || status == GridletStatus::Success {
            now - g.start_time
        } else {
            0.0
        };
        g.consumed_mi = if status == GridletStatus::Success {
            g.length_mi
        } else {
            (g.length_mi - self.remaining_mi.max(0.0)).max(0.0)
        };
        g.status = status;
        self.gridlet
    }
}

/// A gridlet status change, for per-resource traces.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub time: SimTime,
    pub owner: Option<EntityId>,
    pub gridlet_id: usize,
    pub from: GridletStatus,
    pub to: GridletStatus,
}

fn transition(log: &mut Vec<Transition>, now: SimTime, g: &mut Gridlet, to: GridletStatus) {
    log.push(Transition {
        time: now,
        owner: g.owner,
        gridlet_id: g.id,
        from: g.status,
        to,
    });
    g.status = to;
}

pub trait LocalScheduler {
    /// Accepts an arriving gridlet. `availability` is the fraction of PE
    /// capacity left after local load at `now`.
    fn submit(&mut self, gridlet: Gridlet, now: SimTime, availability: f64);

    /// Brings progress up to `now` and removes finished gridlets.
    fn take_finished(&mut self, now: SimTime, availability: f64) -> Vec<Gridlet>;

    /// Earliest forecast completion time of resident gridlets.
    fn next_completion(&mut self, now: SimTime) -> Option<SimTime>;

    /// Removes a gridlet, returning it CANCELED with its consumed MI.
    fn cancel(&mut self, key: GridletKey, now: SimTime, availability: f64) -> Option<Gridlet>;

    /// Removes every resident gridlet, marking each with `status`.
    fn drain(&mut self, now: SimTime, availability: f64, status: GridletStatus) -> Vec<Gridlet>;

    fn take_transitions(&mut self) -> Vec<Transition>;

    fn resident(&self) -> usize;
}

/// Time-shared scheduling: all resident gridlets execute, sharing the PEs.
#[derive(Debug, Clone)]
pub struct TimeShared {
    n_pes: usize,
    mips_per_pe: f64,
    /// Execution set, in arrival order.
    exec: Vec<ResGridlet>,
    last_update: SimTime,
    /// Capacity fraction in effect since `last_update`.
    availability: f64,
    log: Vec<Transition>,
}

impl TimeShared {
    pub fn new(n_pes: usize, mips_per_pe: f64) -> Self {
        assert!(n_pes >= 1 && mips_per_pe > 0.0);
        TimeShared {
            n_pes,
            mips_per_pe,
            exec: Vec::new(),
            last_update: 0.0,
            availability: 1.0,
            log: Vec::new(),
        }
    }

    pub fn from_machines(machines: &[Machine]) -> Self {
        let pes: Vec<f64> = machines.iter().flat_map(|m| &m.pes).map(|p| p.mips).collect();
        TimeShared::new(pes.len(), pes.iter().sum::<f64>() / pes.len() as f64)
    }

    pub fn executing(&self) -> &[ResGridlet] {
        &self.exec
    }

    fn advance(&mut self, now: SimTime, availability: f64) {
        let elapsed = now - self.last_update;
        if elapsed > 0.0 && !self.exec.is_empty() {
            let alloc = pe_share_allocation(
                elapsed,
                self.exec.len(),
                self.n_pes,
                self.mips_per_pe * self.availability,
            );
            for (i, rg) in self.exec.iter_mut().enumerate() {
                rg.remaining_mi = (rg.remaining_mi - alloc.share_of(i)).max(0.0);
            }
        }
        self.last_update = self.last_update.max(now);
        self.availability = availability;
    }

    fn assign_pes(&mut self) {
        let n = self.n_pes;
        for (i, rg) in self.exec.iter_mut().enumerate() {
            rg.pe_id = i % n;
        }
    }
}

impl LocalScheduler for TimeShared {
    fn submit(&mut self, gridlet: Gridlet, now: SimTime, availability: f64) {
        self.advance(now, availability);
        let mut rg = ResGridlet::new(gridlet, now);
        rg.gridlet.start_time = now;
        transition(&mut self.log, now, &mut rg.gridlet, GridletStatus::InExec);
        self.exec.push(rg);
        self.assign_pes();
    }

    fn take_finished(&mut self, now: SimTime, availability: f64) -> Vec<Gridlet> {
        self.advance(now, availability);
        let (done, running): (Vec<_>, Vec<_>) =
            std::mem::take(&mut self.exec).into_iter().partition(|rg| rg.is_done());
        self.exec = running;
        self.assign_pes();
        done.into_iter()
            .map(|mut rg| {
                transition(&mut self.log, now, &mut rg.gridlet, GridletStatus::Success);
                rg.gridlet.status = GridletStatus::InExec;
                rg.close(now, GridletStatus::Success)
            })
            .collect()
    }

    fn next_completion(&mut self, now: SimTime) -> Option<SimTime> {
        if self.exec.is_empty() {
            return None;
        }
        let rate = pe_share_allocation(
            1.0,
            self.exec.len(),
            self.n_pes,
            self.mips_per_pe * self.availability,
        );
        let mut best: Option<SimTime> = None;
        for (i, rg) in self.exec.iter_mut().enumerate() {
            rg.forecast_finish = now + rg.remaining_mi / rate.share_of(i);
            // Ties keep the earlier arrival.
            if best.is_none_or(|b| rg.forecast_finish < b) {
                best = Some(rg.forecast_finish);
            }
        }
        best
    }

    fn cancel(&mut self, key: GridletKey, now: SimTime, availability: f64) -> Option<Gridlet> {
        self.advance(now, availability);
        let pos = self.exec.iter().position(|rg| rg.key() == key)?;
        let mut rg = self.exec.remove(pos);
        self.assign_pes();
        transition(&mut self.log, now, &mut rg.gridlet, GridletStatus::Canceled);
        rg.gridlet.status = GridletStatus::InExec;
        Some(rg.close(now, GridletStatus::Canceled))
    }

    fn drain(&mut self, now: SimTime, availability: f64, status: GridletStatus) -> Vec<Gridlet> {
        self.advance(now, availability);
        std::mem::take(&mut self.exec)
            .into_iter()
            .map(|mut rg| {
                transition(&mut self.log, now, &mut rg.gridlet, status);
                rg.gridlet.status = GridletStatus::InExec;
                rg.close(now, status)
            })
            .collect()
    }

    fn take_transitions(&mut self) -> Vec<Transition> {
        std::mem::take(&mut self.log)
    }

    fn resident(&self) -> usize {
        self.exec.len()
    }
}

#[derive(Debug, Clone)]
struct PeSlot {
    machine_id: usize,
    pe_id: usize,
    mips: f64,
    busy: bool,
}

#[derive(Debug, Clone)]
struct Running {
    rg: ResGridlet,
    slot: usize,
    rate: f64,
}

/// Space-shared scheduling: one gridlet per PE, FCFS queue for the rest.
#[derive(Debug, Clone)]
pub struct SpaceShared {
    slots: Vec<PeSlot>,
    running: Vec<Running>,
    queue: VecDeque<ResGridlet>,
    log: Vec<Transition>,
}

impl SpaceShared {
    pub fn from_machines(machines: &[Machine]) -> Self {
        let mut slots: Vec<PeSlot> = machines
            .iter()
            .flat_map(|m| {
                m.pes.iter().map(move |pe| PeSlot {
                    machine_id: m.machine_id,
                    pe_id: pe.pe_id,
                    mips: pe.mips,
                    busy: false,
                })
            })
            .collect();
        slots.sort_by_key(|s| (s.machine_id, s.pe_id));
        SpaceShared {
            slots,
            running: Vec::new(),
            queue: VecDeque::new(),
            log: Vec::new(),
        }
    }

    pub fn queued(&self) -> usize {
        self.queue.len()
    }

    fn free_slot(&self) -> Option<usize> {
        self.slots.iter().position(|s| !s.busy)
    }

    fn start(&mut self, mut rg: ResGridlet, slot: usize, now: SimTime, availability: f64) {
        let pe = &mut self.slots[slot];
        pe.busy = true;
        rg.machine_id = pe.machine_id;
        rg.pe_id = pe.pe_id;
        let rate = pe.mips * availability;
        rg.gridlet.start_time = now;
        rg.forecast_finish = now + rg.remaining_mi / rate;
        transition(&mut self.log, now, &mut rg.gridlet, GridletStatus::InExec);
        self.running.push(Running { rg, slot, rate });
    }

    fn progress(r: &Running, now: SimTime) -> f64 {
        (r.rg.remaining_mi - r.rate * (now - r.rg.gridlet.start_time)).max(0.0)
    }

    fn fill_free(&mut self, now: SimTime, availability: f64) {
        while let Some(slot) = self.free_slot() {
            let Some(rg) = self.queue.pop_front() else { break };
            self.start(rg, slot, now, availability);
        }
    }
}

impl LocalScheduler for SpaceShared {
    fn submit(&mut self, gridlet: Gridlet, now: SimTime, availability: f64) {
        let mut rg = ResGridlet::new(gridlet, now);
        match self.free_slot() {
            Some(slot) => self.start(rg, slot, now, availability),
            None => {
                transition(&mut self.log, now, &mut rg.gridlet, GridletStatus::Queued);
                self.queue.push_back(rg);
            }
        }
    }

    fn take_finished(&mut self, now: SimTime, availability: f64) -> Vec<Gridlet> {
        let tol = COMPLETION_TOLERANCE * now.abs().max(1.0);
        let mut done = Vec::new();
        let mut i = 0;
        while i < self.running.len() {
            if self.running[i].rg.forecast_finish <= now + tol {
                let mut r = self.running.remove(i);
                self.slots[r.slot].busy = false;
                r.rg.remaining_mi = 0.0;
                transition(&mut self.log, now, &mut r.rg.gridlet, GridletStatus::Success);
                r.rg.gridlet.status = GridletStatus::InExec;
                done.push(r.rg.close(now, GridletStatus::Success));
            } else {
                i += 1;
            }
        }
        self.fill_free(now, availability);
        done
    }

    fn next_completion(&mut self, _now: SimTime) -> Option<SimTime> {
        self.running
            .iter()
            .map(|r| r.rg.forecast_finish)
            .min_by(|a, b| a.total_cmp(b))
    }

    fn cancel(&mut self, key: GridletKey, now: SimTime, availability: f64) -> Option<Gridlet> {
        if let Some(pos) = self.queue.iter().position(|rg| rg.key() == key) {
            let mut rg = self.queue.remove(pos)?;
            transition(&mut self.log, now, &mut rg.gridlet, GridletStatus::Canceled);
            rg.gridlet.status = GridletStatus::Queued;
            return Some(rg.close(now, GridletStatus::Canceled));
        }
        let pos = self.running.iter().position(|r| r.rg.key() == key)?;
        let mut r = self.running.remove(pos);
        self.slots[r.slot].busy = false;
        r.rg.remaining_mi = Self::progress(&r, now);
        transition(&mut self.log, now, &mut r.rg.gridlet, GridletStatus::Canceled);
        r.rg.gridlet.status = GridletStatus::InExec;
        let g = r.rg.close(now, GridletStatus::Canceled);
        self.fill_free(now, availability);
        Some(g)
    }

    fn drain(&mut self, now: SimTime, _availability: f64, status: GridletStatus) -> Vec<Gridlet> {
        let mut out = Vec::new();
        for mut r in std::mem::take(&mut self.running) {
            self.slots[r.slot].busy = false;
            r.rg.remaining_mi = Self::progress(&r, now);
            transition(&mut self.log, now, &mut r.rg.gridlet, status);
            r.rg.gridlet.status = GridletStatus::InExec;
            out.push(r.rg.close(now, status));
        }
        for mut rg in std::mem::take(&mut self.queue) {
            transition(&mut self.log, now, &mut rg.gridlet, status);
            rg.gridlet.status = GridletStatus::Queued;
            out.push(rg.close(now, status));
        }
        out
    }

    fn take_transitions(&mut self) -> Vec<Transition> {
        std::mem::take(&mut self.log)
    }

    fn resident(&self) -> usize {
        self.running.len() + self.queue.len()
    }
}
