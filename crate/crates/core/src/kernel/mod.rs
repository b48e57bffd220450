//! Deterministic event-calendar kernel.
//!
//! Entities are registered by unique name and receive [`Event`]s through
//! [`Entity::on_event`]. All handlers run on one loop; the calendar is
//! ordered by `(fire_time, seq)` where `seq` is a per-run insertion counter,
//! so two runs with the same inputs deliver the same events in the same
//! order. Every delivered event is folded into a SHA-256 trace hash.

pub mod tags;

use std::any::Any;
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;
use std::panic::{self, AssertUnwindSafe};

use sha2::{Digest, Sha256};
use thiserror::Error;

/// Simulation time in abstract time units.
pub type SimTime = f64;

/// Identifier of a registered entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityId(pub usize);

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Insertion sequence number of an event, unique within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventSeq(pub u64);

impl fmt::Display for EventSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone)]
pub struct Event<P> {
    pub time: SimTime,
    pub seq: EventSeq,
    pub src: EntityId,
    pub dst: EntityId,
    pub tag: i32,
    pub payload: P,
}

impl<P> Event<P> {
    /// An event an entity scheduled for itself.
    pub fn is_internal(&self) -> bool {
        self.src == self.dst
    }
}

/// Shutdown group of an entity. END_OF_SIMULATION is delivered to users
/// first, then brokers, then everything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Role {
    User,
    Broker,
    Core,
}

/// Behaviour attached to a registered entity.
pub trait Entity<P>: Any {
    /// Called once, in registration order, when the run starts.
    fn on_start(&mut self, _ctx: &mut Context<'_, P>) {}

    fn on_event(&mut self, event: Event<P>, ctx: &mut Context<'_, P>);

    fn role(&self) -> Role {
        Role::Core
    }
}

/// Handle returned by [`Kernel::register`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityHandle {
    pub id: EntityId,
    pub name: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("entity name `{0}` is already registered")]
    DuplicateName(String),
    #[error("cannot register `{0}` after the simulation has started")]
    RegistrationAfterStart(String),
    #[error("negative or non-finite delay {0}")]
    NegativeDelay(f64),
    #[error("unknown destination entity {0}")]
    UnknownDestination(EntityId),
    #[error("no entities registered")]
    NoEntities,
    #[error(
        "handler of entity {dst} panicked on event seq={seq} tag={tag} src={src} at t={time}: {message}"
    )]
    HandlerPanic {
        time: SimTime,
        seq: EventSeq,
        src: EntityId,
        dst: EntityId,
        tag: i32,
        message: String,
    },
}

struct Scheduled<P>(Event<P>);

impl<P> PartialEq for Scheduled<P> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<P> Eq for Scheduled<P> {}

impl<P> PartialOrd for Scheduled<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for Scheduled<P> {
    // Reversed: BinaryHeap is a max-heap and we pop the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .time
            .total_cmp(&self.0.time)
            .then_with(|| other.0.seq.cmp(&self.0.seq))
    }
}

/// Delivery counters for a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunStats {
    pub scheduled: u64,
    pub delivered: u64,
    /// Delivered events an entity reported as stale via [`Context::cancel_stale`].
    pub discarded: u64,
    /// Events still on the calendar when END_OF_SIMULATION stopped the run.
    pub pending_at_end: u64,
}

/// Calendar and bookkeeping shared with handlers through [`Context`].
struct Calendar<P> {
    now: SimTime,
    next_seq: u64,
    heap: BinaryHeap<Scheduled<P>>,
    names: Vec<String>,
    roles: Vec<Role>,
    stats: RunStats,
    end_remaining: Option<usize>,
}

impl<P> Calendar<P> {
    fn push(
        &mut self,
        src: EntityId,
        dst: EntityId,
        delay: f64,
        tag: i32,
        payload: P,
    ) -> Result<EventSeq, KernelError> {
        if !(delay >= 0.0) || !delay.is_finite() {
            return Err(KernelError::NegativeDelay(delay));
        }
        if dst.0 >= self.names.len() {
            return Err(KernelError::UnknownDestination(dst));
        }
        let seq = EventSeq(self.next_seq);
        self.next_seq += 1;
        self.stats.scheduled += 1;
        self.heap.push(Scheduled(Event {
            time: self.now + delay,
            seq,
            src,
            dst,
            tag,
            payload,
        }));
        Ok(seq)
    }
}

/// View of the kernel available to a handler while it runs.
pub struct Context<'a, P> {
    me: EntityId,
    cal: &'a mut Calendar<P>,
    index: &'a HashMap<String, EntityId>,
}

impl<P: Default> Context<'_, P> {
    pub fn now(&self) -> SimTime {
        self.cal.now
    }

    /// Id of the entity whose handler is running.
    pub fn id(&self) -> EntityId {
        self.me
    }

    pub fn schedule(
        &mut self,
        dst: EntityId,
        delay: f64,
        tag: i32,
        payload: P,
    ) -> Result<EventSeq, KernelError> {
        let me = self.me;
        self.cal.push(me, dst, delay, tag, payload)
    }

    /// Schedules an internal event (`src == dst`).
    pub fn schedule_self(&mut self, delay: f64, tag: i32, payload: P) -> EventSeq {
        let me = self.me;
        self.cal
            .push(me, me, delay.max(0.0), tag, payload)
            .expect("self is always a valid destination")
    }

    pub fn lookup(&self, name: &str) -> Option<EntityId> {
        self.index.get(name).copied()
    }

    pub fn name_of(&self, id: EntityId) -> Option<&str> {
        self.cal.names.get(id.0).map(String::as_str)
    }

    pub fn entity_count(&self) -> usize {
        self.cal.names.len()
    }

    /// Checks an internal event against the seq the entity expects; stale
    /// events are counted as discarded and `true` is returned.
    pub fn cancel_stale(&mut self, expected: Option<EventSeq>, observed: &Event<P>) -> bool {
        let stale = is_stale(expected, observed);
        if stale {
            self.cal.stats.discarded += 1;
        }
        stale
    }

    /// Broadcasts END_OF_SIMULATION to every entity at the current time:
    /// users first, then brokers, then core entities, each group in
    /// registration order. The run stops once all of them are delivered.
    pub fn end_simulation(&mut self) {
        if self.cal.end_remaining.is_some() {
            return;
        }
        let mut order: Vec<usize> = (0..self.cal.names.len()).collect();
        order.sort_by_key(|&i| (self.cal.roles[i], i));
        self.cal.end_remaining = Some(order.len());
        let me = self.me;
        for i in order {
            self.cal
                .push(me, EntityId(i), 0.0, tags::END_OF_SIMULATION, P::default())
                .expect("registered entity");
        }
    }
}

/// Staleness rule for internal forecast events: an event is stale unless its
/// seq is the one the entity recorded for its latest forecast.
pub fn is_stale<P>(expected: Option<EventSeq>, observed: &Event<P>) -> bool {
    expected != Some(observed.seq)
}

pub struct Kernel<P> {
    entities: Vec<Option<Box<dyn Entity<P>>>>,
    index: HashMap<String, EntityId>,
    cal: Calendar<P>,
    started: bool,
    hasher: Sha256,
    trace: Option<Vec<String>>,
}

impl<P: Default + 'static> Default for Kernel<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P: Default + 'static> Kernel<P> {
    pub fn new() -> Self {
        Kernel {
            entities: Vec::new(),
            index: HashMap::new(),
            cal: Calendar {
                now: 0.0,
                next_seq: 0,
                heap: BinaryHeap::new(),
                names: Vec::new(),
                roles: Vec::new(),
                stats: RunStats::default(),
                end_remaining: None,
            },
            started: false,
            hasher: Sha256::new(),
            trace: None,
        }
    }

    /// Keep the textual event trace in memory (the hash is always kept).
    pub fn record_trace(&mut self, on: bool) {
        self.trace = if on { Some(Vec::new()) } else { None };
    }

    pub fn register<E: Entity<P>>(
        &mut self,
        name: &str,
        entity: E,
    ) -> Result<EntityHandle, KernelError> {
        self.register_boxed(name, Box::new(entity))
    }

    pub fn register_boxed(
        &mut self,
        name: &str,
        entity: Box<dyn Entity<P>>,
    ) -> Result<EntityHandle, KernelError> {
        if self.started {
            return Err(KernelError::RegistrationAfterStart(name.to_string()));
        }
        if self.index.contains_key(name) {
            return Err(KernelError::DuplicateName(name.to_string()));
        }
        let id = EntityId(self.entities.len());
        self.cal.roles.push(entity.role());
        self.entities.push(Some(entity));
        self.cal.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        Ok(EntityHandle {
            id,
            name: name.to_string(),
        })
    }

    pub fn lookup(&self, name: &str) -> Option<EntityId> {
        self.index.get(name).copied()
    }

    pub fn now(&self) -> SimTime {
        self.cal.now
    }

    /// Schedules an event from outside any handler, with `src == dst`
    /// unless `src` is given.
    pub fn schedule(
        &mut self,
        src: Option<EntityId>,
        dst: EntityId,
        delay: f64,
        tag: i32,
        payload: P,
    ) -> Result<EventSeq, KernelError> {
        self.cal.push(src.unwrap_or(dst), dst, delay, tag, payload)
    }

    /// Runs until the calendar is empty or an END_OF_SIMULATION broadcast has
    /// been fully delivered. Returns the final simulated time.
    pub fn run(&mut self) -> Result<SimTime, KernelError> {
        if self.entities.is_empty() {
            return Err(KernelError::NoEntities);
        }
        if !self.started {
            self.started = true;
            for i in 0..self.entities.len() {
                let id = EntityId(i);
                self.with_entity(id, None, |e, ctx| e.on_start(ctx))?;
            }
        }
        while let Some(Scheduled(ev)) = self.cal.heap.pop() {
            debug_assert!(ev.time >= self.cal.now);
            self.cal.now = ev.time;
            self.cal.stats.delivered += 1;
            let line = format!(
                "{}\t{}\t{}\t{}\t{}",
                ev.time, ev.seq, ev.src, ev.dst, ev.tag
            );
            self.hasher.update(line.as_bytes());
            self.hasher.update(b"\n");
            if let Some(trace) = self.trace.as_mut() {
                trace.push(line);
            }
            let is_end = ev.tag == tags::END_OF_SIMULATION;
            let dst = ev.dst;
            let info = (ev.time, ev.seq, ev.src, ev.dst, ev.tag);
            self.with_entity(dst, Some(info), move |e, ctx| e.on_event(ev, ctx))?;
            if is_end {
                if let Some(n) = self.cal.end_remaining.as_mut() {
                    *n = n.saturating_sub(1);
                    if *n == 0 {
                        self.cal.stats.pending_at_end = self.cal.heap.len() as u64;
                        break;
                    }
                }
            }
        }
        Ok(self.cal.now)
    }

    fn with_entity<F>(
        &mut self,
        id: EntityId,
        info: Option<(SimTime, EventSeq, EntityId, EntityId, i32)>,
        f: F,
    ) -> Result<(), KernelError>
    where
        F: FnOnce(&mut dyn Entity<P>, &mut Context<'_, P>),
    {
        let mut entity = self.entities[id.0]
            .take()
            .expect("entity is not re-entered");
        let result = {
            let mut ctx = Context {
                me: id,
                cal: &mut self.cal,
                index: &self.index,
            };
            panic::catch_unwind(AssertUnwindSafe(|| f(entity.as_mut(), &mut ctx)))
        };
        self.entities[id.0] = Some(entity);
        result.map_err(|cause| {
            let message = cause
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| cause.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "non-string panic".to_string());
            let (time, seq, src, dst, tag) =
                info.unwrap_or((self.cal.now, EventSeq(u64::MAX), id, id, tags::INSIGNIFICANT));
            KernelError::HandlerPanic {
                time,
                seq,
                src,
                dst,
                tag,
                message,
            }
        })
    }

    pub fn stats(&self) -> RunStats {
        self.cal.stats
    }

    /// Hex SHA-256 over all delivered event records.
    pub fn trace_hash(&self) -> String {
        let digest = self.hasher.clone().finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Recorded trace lines (`fire_time \t seq \t src \t dst \t tag`), if enabled.
    pub fn trace(&self) -> Option<&[String]> {
        self.trace.as_deref()
    }

    pub fn entity<T: Entity<P>>(&self, id: EntityId) -> Option<&T> {
        let e: &dyn Entity<P> = self.entities.get(id.0)?.as_deref()?;
        (e as &dyn Any).downcast_ref::<T>()
    }

    pub fn entity_mut<T: Entity<P>>(&mut self, id: EntityId) -> Option<&mut T> {
        let e: &mut dyn Entity<P> = self.entities.get_mut(id.0)?.as_deref_mut()?;
        (e as &mut dyn Any).downcast_mut::<T>()
    }

    pub fn name_of(&self, id: EntityId) -> Option<&str> {
        self.cal.names.get(id.0).map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Default)]
    struct Recorder {
        seen: Vec<(SimTime, i32, EventSeq)>,
    }

    impl Entity<u32> for Recorder {
        fn on_event(&mut self, event: Event<u32>, _ctx: &mut Context<'_, u32>) {
            self.seen.push((event.time, event.tag, event.seq));
        }
    }

    struct Echo {
        at_start: Vec<(f64, i32)>,
    }

    impl Entity<u32> for Echo {
        fn on_start(&mut self, ctx: &mut Context<'_, u32>) {
            for &(d, t) in &self.at_start {
                ctx.schedule_self(d, t, 0);
            }
        }
        fn on_event(&mut self, _event: Event<u32>, _ctx: &mut Context<'_, u32>) {}
    }

    #[test]
    fn first_registration_gets_fresh_id() {
        let mut k: Kernel<u32> = Kernel::new();
        let h = k.register("Broker_U0", Recorder::default()).unwrap();
        assert_eq!(h.id, EntityId(0));
        assert_eq!(h.name, "Broker_U0");
    }

    #[test]
    fn duplicate_name_rejected() {
        let mut k: Kernel<u32> = Kernel::new();
        k.register("A", Recorder::default()).unwrap();
        assert_eq!(
            k.register("A", Recorder::default()),
            Err(KernelError::DuplicateName("A".into()))
        );
    }

    #[test]
    fn registration_after_start_rejected() {
        let mut k: Kernel<u32> = Kernel::new();
        k.register("A", Recorder::default()).unwrap();
        k.run().unwrap();
        assert!(matches!(
            k.register("B", Recorder::default()),
            Err(KernelError::RegistrationAfterStart(_))
        ));
    }

    #[test]
    fn thirteen_entities_get_distinct_ids() {
        let mut k: Kernel<u32> = Kernel::new();
        let mut ids = Vec::new();
        for i in 0..11 {
            ids.push(k.register(&format!("R{i}"), Recorder::default()).unwrap().id);
        }
        ids.push(k.register("U0", Recorder::default()).unwrap().id);
        ids.push(k.register("Broker_U0", Recorder::default()).unwrap().id);
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 13);
    }

    #[test]
    fn empty_calendar_returns_zero() {
        let mut k: Kernel<u32> = Kernel::new();
        k.register("A", Recorder::default()).unwrap();
        assert_eq!(k.run().unwrap(), 0.0);
    }

    #[test]
    fn no_entities_is_an_error() {
        let mut k: Kernel<u32> = Kernel::new();
        assert_eq!(k.run(), Err(KernelError::NoEntities));
    }

    #[test]
    fn single_self_event_returns_its_time() {
        let mut k: Kernel<u32> = Kernel::new();
        k.register("A", Echo { at_start: vec![(10.0, 5)] }).unwrap();
        assert_eq!(k.run().unwrap(), 10.0);
    }

    #[test]
    fn zero_delay_is_delivered_now_and_ties_are_fifo() {
        let mut k: Kernel<u32> = Kernel::new();
        let a = k.register("A", Recorder::default()).unwrap().id;
        k.schedule(None, a, 5.0, 1, 0).unwrap();
        k.schedule(None, a, 5.0, 2, 0).unwrap();
        k.schedule(None, a, 5.0, 3, 0).unwrap();
        k.run().unwrap();
        let seen = &k.entity::<Recorder>(a).unwrap().seen;
        assert_eq!(
            seen.iter().map(|s| s.1).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
        assert!(seen.iter().all(|s| s.0 == 5.0));
    }

    #[test]
    fn negative_delay_and_unknown_destination() {
        let mut k: Kernel<u32> = Kernel::new();
        let a = k.register("A", Recorder::default()).unwrap().id;
        assert_eq!(
            k.schedule(None, a, -1.0, 0, 0),
            Err(KernelError::NegativeDelay(-1.0))
        );
        assert_eq!(
            k.schedule(Some(a), EntityId(9), 1.0, 0, 0),
            Err(KernelError::UnknownDestination(EntityId(9)))
        );
    }

    #[test]
    fn stale_rule() {
        let ev = Event {
            time: 0.0,
            seq: EventSeq(42),
            src: EntityId(0),
            dst: EntityId(0),
            tag: 0,
            payload: (),
        };
        assert!(!is_stale(Some(EventSeq(42)), &ev));
        let ev17 = Event { seq: EventSeq(17), ..ev };
        assert!(is_stale(Some(EventSeq(42)), &ev17));
    }

    struct Panicker;
    impl Entity<u32> for Panicker {
        fn on_event(&mut self, _event: Event<u32>, _ctx: &mut Context<'_, u32>) {
            panic!("boom");
        }
    }

    #[test]
    fn handler_panic_identifies_event() {
        let mut k: Kernel<u32> = Kernel::new();
        let a = k.register("P", Panicker).unwrap().id;
        k.schedule(None, a, 3.0, 77, 0).unwrap();
        match k.run() {
            Err(KernelError::HandlerPanic { time, tag, dst, message, .. }) => {
                assert_eq!(time, 3.0);
                assert_eq!(tag, 77);
                assert_eq!(dst, a);
                assert_eq!(message, "boom");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    struct Stopper {
        role: Role,
        log: std::rc::Rc<std::cell::RefCell<Vec<String>>>,
        name: &'static str,
    }

    impl Entity<u32> for Stopper {
        fn on_event(&mut self, event: Event<u32>, ctx: &mut Context<'_, u32>) {
            if event.tag == tags::END_OF_SIMULATION {
                self.log.borrow_mut().push(self.name.to_string());
            } else if event.tag == 99 {
                ctx.end_simulation();
                // Scheduled after the broadcast; must stay pending.
                ctx.schedule_self(0.0, 5, 0);
            }
        }
        fn role(&self) -> Role {
            self.role
        }
    }

    #[test]
    fn end_of_simulation_is_broadcast_in_role_order() {
        let log = std::rc::Rc::new(std::cell::RefCell::new(Vec::new()));
        let mut k: Kernel<u32> = Kernel::new();
        let core = k
            .register("core", Stopper { role: Role::Core, log: log.clone(), name: "core" })
            .unwrap()
            .id;
        k.register("broker", Stopper { role: Role::Broker, log: log.clone(), name: "broker" })
            .unwrap();
        k.register("user", Stopper { role: Role::User, log: log.clone(), name: "user" })
            .unwrap();
        k.schedule(None, core, 4.0, 99, 0).unwrap();
        k.schedule(None, core, 50.0, 1, 0).unwrap();
        assert_eq!(k.run().unwrap(), 4.0);
        assert_eq!(*log.borrow(), vec!["user", "broker", "core"]);
        assert_eq!(k.stats().pending_at_end, 2);
    }

    #[test]
    fn identical_runs_hash_identically() {
        let build = || {
            let mut k: Kernel<u32> = Kernel::new();
            k.register("A", Echo { at_start: vec![(3.0, 1), (1.0, 2), (3.0, 3)] })
                .unwrap();
            k.run().unwrap();
            k.trace_hash()
        };
        assert_eq!(build(), build());
    }
}
