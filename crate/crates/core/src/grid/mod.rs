//! Grid entities and the scenario runner that wires them together.
//!
//! One run holds a GIS, a statistics collector, a shutdown counter, the
//! resources, and a user/broker pair per user. Every user's broker sees
//! the same resources; users compete only through resource contention.

mod entities;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use entities::{
    BrokerEntity, GisEntity, ResourceEntity, ShutdownEntity, StatisticsEntity, UserEntity,
};

use crate::broker::{
    compute_bounds_within, determine_deadline, BrokerError, Experiment, ExperimentResult,
};
use crate::kernel::{EntityId, Kernel, KernelError, RunStats, SimTime};
use crate::resource::{
    GridletKey, NetworkMode, ResourceCalendar, ResourceCharacteristics, ResourceError, Transition,
};
use crate::stats::StatStore;
use crate::workload::Gridlet;

/// Payload carried by grid events.
#[derive(Debug, Clone, Default)]
pub enum Message {
    #[default]
    Empty,
    Experiment(Box<Experiment>),
    ExperimentResult(Box<ExperimentResult>),
    ResourceList(Vec<EntityId>),
    Characteristics(Box<ResourceCharacteristics>),
    Gridlet(Box<Gridlet>),
    Cancel(GridletKey),
    Stat { label: String, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceSpec {
    pub characteristics: ResourceCharacteristics,
    #[serde(default)]
    pub calendar: ResourceCalendar,
    /// Time at which the resource fails and leaves the grid.
    #[serde(default)]
    pub fail_at: Option<SimTime>,
}

impl ResourceSpec {
    pub fn new(characteristics: ResourceCharacteristics) -> Self {
        ResourceSpec {
            characteristics,
            calendar: ResourceCalendar::default(),
            fail_at: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct UserSpec {
    pub name: String,
    pub experiment: Experiment,
    pub start_time: SimTime,
}

#[derive(Debug, Clone, Default)]
pub struct GridScenario {
    pub resources: Vec<ResourceSpec>,
    pub users: Vec<UserSpec>,
    pub network: NetworkMode,
    /// Keep the full event trace and per-resource transition logs.
    pub record_trace: bool,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario has no resources")]
    NoResources,
    #[error("scenario has no users")]
    NoUsers,
    #[error("resource `{name}`: {source}")]
    Resource {
        name: String,
        source: ResourceError,
    },
    #[error("user `{name}`: {source}")]
    Broker { name: String, source: BrokerError },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("user `{0}` never received a result")]
    NoResult(String),
}

#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    /// One per user, in scenario order.
    pub results: Vec<ExperimentResult>,
    pub trace_hash: String,
    pub stats: StatStore,
    pub run_stats: RunStats,
    pub end_time: SimTime,
    /// Per-resource gridlet transitions, filled when tracing.
    pub transitions: Vec<(String, Vec<Transition>)>,
}

fn check(scenario: &GridScenario) -> Result<(), ScenarioError> {
    if scenario.resources.is_empty() {
        return Err(ScenarioError::NoResources);
    }
    if scenario.users.is_empty() {
        return Err(ScenarioError::NoUsers);
    }
    if let NetworkMode::Baud(_) = scenario.network {
        scenario
            .network
            .validate()
            .map_err(|source| ScenarioError::Resource {
                name: "network".into(),
                source,
            })?;
    }
    for r in &scenario.resources {
        let wrap = |source| ScenarioError::Resource {
            name: r.characteristics.name.clone(),
            source,
        };
        r.characteristics.validate().map_err(wrap)?;
        r.calendar.validate().map_err(wrap)?;
    }
    // Catch constraint errors here rather than inside a handler.
    let chars: Vec<_> = scenario
        .resources
        .iter()
        .map(|r| r.characteristics.clone())
        .collect();
    for u in &scenario.users {
        let wrap = |source| ScenarioError::Broker {
            name: u.name.clone(),
            source,
        };
        let lengths: Vec<f64> = u
            .experiment
            .application
            .gridlets
            .iter()
            .map(|g| g.length_mi)
            .collect();
        let bounds = compute_bounds_within(&chars, &lengths, None).map_err(wrap)?;
        let deadline = determine_deadline(u.experiment.deadline, &bounds).map_err(wrap)?;
        let within = compute_bounds_within(&chars, &lengths, Some(deadline)).map_err(wrap)?;
        crate::broker::determine_budget(u.experiment.budget, &within).map_err(wrap)?;
    }
    Ok(())
}

/// Runs a scenario to completion.
pub fn run_scenario(scenario: &GridScenario) -> Result<SimulationOutcome, ScenarioError> {
    check(scenario)?;
    let mut k: Kernel<Message> = Kernel::new();
    k.record_trace(scenario.record_trace);
    let gis = k.register("GIS", GisEntity::default())?.id;
    let stats = k.register("Statistics", StatisticsEntity::default())?.id;
    let shutdown = k
        .register(
            "Shutdown",
            ShutdownEntity {
                expected: scenario.users.len(),
                done: 0,
            },
        )?
        .id;
    let mut resources = Vec::new();
    for r in &scenario.resources {
        let entity = ResourceEntity::new(
            r.characteristics.clone(),
            r.calendar.clone(),
            gis,
            scenario.network,
            r.fail_at,
            scenario.record_trace,
        );
        resources.push(k.register(&r.characteristics.name, entity)?.id);
    }
    let mut users = Vec::new();
    for u in &scenario.users {
        let broker_name = format!("{}.Broker", u.name);
        let broker = k
            .register(&broker_name, BrokerEntity::new(u.name.clone(), gis, scenario.network))?
            .id;
        let user = UserEntity::new(
            u.name.clone(),
            u.experiment.clone(),
            u.start_time,
            broker,
            stats,
            shutdown,
        );
        users.push((u.name.clone(), k.register(&u.name, user)?.id));
    }
    let end_time = k.run()?;
    let mut results = Vec::new();
    for (name, id) in &users {
        let user = k.entity_mut::<UserEntity>(*id).expect("registered as a user");
        results.push(user.result.take().ok_or_else(|| ScenarioError::NoResult(name.clone()))?);
    }
    let transitions = resources
        .iter()
        .map(|&id| {
            let r = k.entity_mut::<ResourceEntity>(id).expect("registered as a resource");
            (r.characteristics.name.clone(), std::mem::take(&mut r.transitions))
        })
        .collect();
    let stats = std::mem::take(
        &mut k
            .entity_mut::<StatisticsEntity>(stats)
            .expect("registered as statistics")
            .store,
    );
    Ok(SimulationOutcome {
        results,
        trace_hash: k.trace_hash(),
        stats,
        run_stats: k.stats(),
        end_time,
        transitions,
    })
}

#[cfg(test)]
mod tests;
