use super::Message;
use crate::broker::{BrokerState, Experiment, ExperimentResult};
use crate::kernel::tags::*;
use crate::kernel::{Context, Entity, EntityId, Event, EventSeq, Role, SimTime};
use crate::resource::{
    scheduler_for, GisRegistry, GridletKey, LocalScheduler, NetworkMode, OutputLink,
    ResourceCalendar, ResourceCharacteristics, Transition,
};
use crate::stats::StatStore;
use crate::workload::{Gridlet, GridletStatus};

fn send(ctx: &mut Context<'_, Message>, dst: EntityId, delay: f64, tag: i32, msg: Message) {
    ctx.schedule(dst, delay, tag, msg)
        .expect("destination registered and delay non-negative");
}

/// Grid information service.
#[derive(Debug, Default)]
pub struct GisEntity {
    pub registry: GisRegistry,
}

impl Entity<Message> for GisEntity {
    fn on_event(&mut self, ev: Event<Message>, ctx: &mut Context<'_, Message>) {
        match ev.tag {
            REGISTER_RESOURCE => self.registry.register(ev.src),
            DEREGISTER_RESOURCE => {
                self.registry.deregister(ev.src);
            }
            RESOURCE_LIST => {
                let list = self.registry.list();
                send(ctx, ev.src, 0.0, RESOURCE_LIST, Message::ResourceList(list));
            }
            _ => {}
        }
    }
}

/// Collects RECORD_STATISTICS reports.
#[derive(Debug, Default)]
pub struct StatisticsEntity {
    pub store: StatStore,
}

impl Entity<Message> for StatisticsEntity {
    fn on_event(&mut self, ev: Event<Message>, ctx: &mut Context<'_, Message>) {
        if let (RECORD_STATISTICS, Message::Stat { label, value }) = (ev.tag, &ev.payload) {
            self.store.record(label, ctx.now(), *value);
        }
    }
}

/// Ends the run once every user has reported completion.
#[derive(Debug)]
pub struct ShutdownEntity {
    pub expected: usize,
    pub done: usize,
}

impl Entity<Message> for ShutdownEntity {
    fn on_event(&mut self, ev: Event<Message>, ctx: &mut Context<'_, Message>) {
        if ev.tag == USER_DONE {
            self.done += 1;
            if self.done == self.expected {
                ctx.end_simulation();
            }
        }
    }
}

/// A grid resource: registers with the GIS, answers characteristics
/// queries and executes gridlets with its local scheduler.
pub struct ResourceEntity {
    pub characteristics: ResourceCharacteristics,
    pub calendar: ResourceCalendar,
    gis: EntityId,
    scheduler: Box<dyn LocalScheduler + Send>,
    forecast: Option<EventSeq>,
    link: OutputLink,
    fail_at: Option<SimTime>,
    alive: bool,
    record_transitions: bool,
    pub transitions: Vec<Transition>,
}

impl ResourceEntity {
    pub fn new(
        characteristics: ResourceCharacteristics,
        calendar: ResourceCalendar,
        gis: EntityId,
        network: NetworkMode,
        fail_at: Option<SimTime>,
        record_transitions: bool,
    ) -> Self {
        ResourceEntity {
            scheduler: scheduler_for(&characteristics),
            characteristics,
            calendar,
            gis,
            forecast: None,
            link: OutputLink::new(network),
            fail_at,
            alive: true,
            record_transitions,
            transitions: Vec::new(),
        }
    }

    fn availability(&self, now: SimTime) -> f64 {
        1.0 - self.calendar.load_at(now, self.characteristics.time_zone)
    }

    fn give_back(&mut self, ctx: &mut Context<'_, Message>, mut g: Gridlet) {
        g.cost_incurred = self.characteristics.cost_of(g.consumed_mi);
        g.resource_id = Some(ctx.id());
        let owner = g.owner.expect("gridlet arrived with an owner");
        let delay = self.link.send(ctx.now(), g.output_bytes);
        send(ctx, owner, delay, GRIDLET_RETURN, Message::Gridlet(Box::new(g)));
    }

    fn finish_ready(&mut self, ctx: &mut Context<'_, Message>) {
        let now = ctx.now();
        let avail = self.availability(now);
        for g in self.scheduler.take_finished(now, avail) {
            self.give_back(ctx, g);
        }
    }

    fn reforecast(&mut self, ctx: &mut Context<'_, Message>) {
        let now = ctx.now();
        self.forecast = self
            .scheduler
            .next_completion(now)
            .map(|t| ctx.schedule_self(t - now, GRIDLET_COMPLETION, Message::Empty));
        let log = self.scheduler.take_transitions();
        if self.record_transitions {
            self.transitions.extend(log);
        }
    }
}

impl Entity<Message> for ResourceEntity {
    fn on_start(&mut self, ctx: &mut Context<'_, Message>) {
        send(ctx, self.gis, 0.0, REGISTER_RESOURCE, Message::Empty);
        if let Some(t) = self.fail_at {
            ctx.schedule_self(t, DEREGISTER_RESOURCE, Message::Empty);
        }
    }

    fn on_event(&mut self, mut ev: Event<Message>, ctx: &mut Context<'_, Message>) {
        let now = ctx.now();
        match (ev.tag, std::mem::take(&mut ev.payload)) {
            (RESOURCE_CHARACTERISTICS, _) => {
                let ch = Box::new(self.characteristics.clone());
                send(ctx, ev.src, 0.0, RESOURCE_CHARACTERISTICS, Message::Characteristics(ch));
            }
            (GRIDLET_SUBMIT, Message::Gridlet(mut g)) => {
                g.owner = Some(ev.src);
                if !self.alive {
                    g.status = GridletStatus::Failed;
                    g.submit_time = now;
                    g.finish_time = now;
                    g.consumed_mi = 0.0;
                    self.give_back(ctx, *g);
                    return;
                }
                self.finish_ready(ctx);
                let avail = self.availability(now);
                self.scheduler.submit(*g, now, avail);
                self.reforecast(ctx);
            }
            (GRIDLET_COMPLETION, _) => {
                if ctx.cancel_stale(self.forecast, &ev) {
                    return;
                }
                self.finish_ready(ctx);
                self.reforecast(ctx);
            }
            (GRIDLET_CANCEL, Message::Cancel(key)) => {
                self.finish_ready(ctx);
                let avail = self.availability(now);
                let key = GridletKey {
                    owner: Some(ev.src),
                    id: key.id,
                };
                if let Some(g) = self.scheduler.cancel(key, now, avail) {
                    self.give_back(ctx, g);
                }
                self.reforecast(ctx);
            }
            (DEREGISTER_RESOURCE, _) if ev.is_internal() => {
                self.alive = false;
                send(ctx, self.gis, 0.0, DEREGISTER_RESOURCE, Message::Empty);
                let avail = self.availability(now);
                for g in self.scheduler.drain(now, avail, GridletStatus::Failed) {
                    self.give_back(ctx, g);
                }
                self.reforecast(ctx);
            }
            _ => {}
        }
    }
}

/// Phases of a broker's experiment.
enum BrokerPhase {
    Idle,
    Discovering {
        user: EntityId,
        experiment: Box<Experiment>,
        pending: Vec<EntityId>,
        found: Vec<(EntityId, ResourceCharacteristics)>,
        start: SimTime,
    },
    Running {
        user: EntityId,
        state: Box<BrokerState>,
    },
    Done,
}

/// Per-user broker: discovers resources, then alternates scheduling
/// rounds and dispatch until the experiment finishes.
pub struct BrokerEntity {
    name: String,
    gis: EntityId,
    link: OutputLink,
    phase: BrokerPhase,
    tick: Option<EventSeq>,
    round_pending: bool,
    canceled: bool,
}

impl BrokerEntity {
    pub fn new(name: impl Into<String>, gis: EntityId, network: NetworkMode) -> Self {
        BrokerEntity {
            name: name.into(),
            gis,
            link: OutputLink::new(network),
            phase: BrokerPhase::Idle,
            tick: None,
            round_pending: false,
            canceled: false,
        }
    }

    fn request_round(&mut self, ctx: &mut Context<'_, Message>) {
        if !self.round_pending {
            self.round_pending = true;
            ctx.schedule_self(0.0, SCHEDULE_NOW_ROUND, Message::Empty);
        }
    }

    /// Next idle-wait tick: 1% of the time left, at least one time unit,
    /// never past the deadline.
    fn arm_tick(&mut self, ctx: &mut Context<'_, Message>, deadline: SimTime) {
        let now = ctx.now();
        self.tick = if now < deadline {
            let left = deadline - now;
            let hold = (0.01 * left).max(1.0).min(left);
            Some(ctx.schedule_self(hold, SCHEDULE_TICK, Message::Empty))
        } else {
            None
        };
    }

    fn round(&mut self, ctx: &mut Context<'_, Message>) {
        let now = ctx.now();
        let BrokerPhase::Running { user, state } = &mut self.phase else {
            return;
        };
        let user = *user;
        if state.policy.cancel_at_deadline && now >= state.deadline && !self.canceled {
            self.canceled = true;
            for (res, id) in state.in_flight_jobs() {
                let key = GridletKey {
                    owner: None,
                    id,
                };
                send(ctx, res, 0.0, GRIDLET_CANCEL, Message::Cancel(key));
            }
        }
        state.schedule(now);
        for d in state.dispatch(now) {
            let delay = self.link.send(now, d.gridlet.input_bytes);
            send(ctx, d.resource, delay, GRIDLET_SUBMIT, Message::Gridlet(Box::new(d.gridlet)));
        }
        state.sample(now);
        if state.finished() {
            let result = state.result(now);
            self.phase = BrokerPhase::Done;
            self.tick = None;
            send(ctx, user, 0.0, EXPERIMENT, Message::ExperimentResult(Box::new(result)));
        }
    }

    fn start_running(&mut self, ctx: &mut Context<'_, Message>) {
        let BrokerPhase::Discovering {
            user,
            experiment,
            found,
            start,
            ..
        } = std::mem::replace(&mut self.phase, BrokerPhase::Idle)
        else {
            unreachable!("called only while discovering");
        };
        match BrokerState::new(self.name.clone(), &experiment, found, start) {
            Ok(state) => {
                let deadline = state.deadline;
                self.phase = BrokerPhase::Running {
                    user,
                    state: Box::new(state),
                };
                self.arm_tick(ctx, deadline);
                self.round(ctx);
            }
            Err(e) => panic!("broker {} cannot start: {e}", self.name),
        }
    }
}

impl Entity<Message> for BrokerEntity {
    fn role(&self) -> Role {
        Role::Broker
    }

    fn on_event(&mut self, mut ev: Event<Message>, ctx: &mut Context<'_, Message>) {
        let now = ctx.now();
        match (ev.tag, std::mem::take(&mut ev.payload)) {
            (EXPERIMENT, Message::Experiment(experiment)) => {
                self.phase = BrokerPhase::Discovering {
                    user: ev.src,
                    experiment,
                    pending: Vec::new(),
                    found: Vec::new(),
                    start: now,
                };
                send(ctx, self.gis, 0.0, RESOURCE_LIST, Message::Empty);
            }
            (RESOURCE_LIST, Message::ResourceList(list)) => {
                if let BrokerPhase::Discovering { pending, .. } = &mut self.phase {
                    *pending = list.clone();
                }
                if list.is_empty() {
                    panic!("broker {}: no resources registered", self.name);
                }
                for r in list {
                    send(ctx, r, 0.0, RESOURCE_CHARACTERISTICS, Message::Empty);
                }
            }
            (RESOURCE_CHARACTERISTICS, Message::Characteristics(ch)) => {
                let BrokerPhase::Discovering { pending, found, .. } = &mut self.phase else {
                    return;
                };
                found.push((ev.src, *ch));
                if found.len() == pending.len() {
                    // keep registration order regardless of reply order
                    let order = pending.clone();
                    found.sort_by_key(|(id, _)| order.iter().position(|p| p == id));
                    self.start_running(ctx);
                }
            }
            (GRIDLET_RETURN, Message::Gridlet(g)) => {
                if let BrokerPhase::Running { state, .. } = &mut self.phase {
                    state.on_return(now, *g);
                    self.request_round(ctx);
                }
            }
            (SCHEDULE_NOW_ROUND, _) => {
                self.round_pending = false;
                self.round(ctx);
            }
            (SCHEDULE_TICK, _) => {
                if ctx.cancel_stale(self.tick, &ev) {
                    return;
                }
                if let BrokerPhase::Running { state, .. } = &self.phase {
                    let deadline = state.deadline;
                    self.arm_tick(ctx, deadline);
                    self.round(ctx);
                }
            }
            _ => {}
        }
    }
}

/// A user: hands its experiment to its broker at `start_time`, records
/// summary statistics when the result arrives and reports completion.
pub struct UserEntity {
    name: String,
    broker: EntityId,
    stats: EntityId,
    shutdown: EntityId,
    start_time: SimTime,
    experiment: Option<Box<Experiment>>,
    pub result: Option<ExperimentResult>,
}

impl UserEntity {
    pub fn new(
        name: impl Into<String>,
        experiment: Experiment,
        start_time: SimTime,
        broker: EntityId,
        stats: EntityId,
        shutdown: EntityId,
    ) -> Self {
        UserEntity {
            name: name.into(),
            broker,
            stats,
            shutdown,
            start_time,
            experiment: Some(Box::new(experiment)),
            result: None,
        }
    }
}

impl Entity<Message> for UserEntity {
    fn role(&self) -> Role {
        Role::User
    }

    fn on_start(&mut self, ctx: &mut Context<'_, Message>) {
        ctx.schedule_self(self.start_time, EXPERIMENT, Message::Empty);
    }

    fn on_event(&mut self, mut ev: Event<Message>, ctx: &mut Context<'_, Message>) {
        match (ev.tag, std::mem::take(&mut ev.payload)) {
            (EXPERIMENT, Message::Empty) if ev.is_internal() => {
                if let Some(exp) = self.experiment.take() {
                    send(ctx, self.broker, 0.0, EXPERIMENT, Message::Experiment(exp));
                }
            }
            (EXPERIMENT, Message::ExperimentResult(result)) => {
                let deadline_span = result.deadline - result.start_time;
                let stats = [
                    ("TimeUtilization", result.makespan() / deadline_span),
                    (
                        "GridletCompletionFactor",
                        result.completed as f64 / result.jobs as f64,
                    ),
                    (
                        "BudgetUtilization",
                        if result.budget > 0.0 {
                            result.total_spend / result.budget
                        } else {
                            0.0
                        },
                    ),
                ];
                for (what, value) in stats {
                    let label = format!("{}.USER.{what}", self.name);
                    send(ctx, self.stats, 0.0, RECORD_STATISTICS, Message::Stat { label, value });
                }
                self.result = Some(*result);
                send(ctx, self.shutdown, 0.0, USER_DONE, Message::Empty);
            }
            _ => {}
        }
    }
}
