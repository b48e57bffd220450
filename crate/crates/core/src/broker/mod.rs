//! Deadline/budget constrained economic broker.
//!
//! [`BrokerState`] holds one user's scheduling state and implements the
//! four strategies; the kernel entity that drives it lives in
//! [`crate::grid`]. Every scheduling round releases undispatched
//! assignments and rebuilds the plan from the current rate estimates, so
//! only jobs not yet submitted ever move between resources.

mod bounds;
mod state;

pub use bounds::{
    compute_bounds, compute_bounds_within, determine_budget, determine_deadline, ScheduleBounds,
};
pub use state::{estimate_rate, BrokerResource, BrokerState, Dispatch, JobState};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::SimTime;
use crate::workload::{Application, Gridlet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BrokerError {
    #[error("no resources available")]
    NoResources,
    #[error("application has no jobs")]
    NoJobs,
    #[error("negative relaxation factor {0}: the experiment never completes")]
    NeverCompletes(f64),
    #[error("constraint must be positive (got {0})")]
    NonPositiveConstraint(f64),
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Cost,
    Time,
    CostTime,
    ConservativeTime,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Cost,
        Strategy::Time,
        Strategy::CostTime,
        Strategy::ConservativeTime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Cost => "cost",
            Strategy::Time => "time",
            Strategy::CostTime => "cost-time",
            Strategy::ConservativeTime => "conservative-time",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = BrokerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| BrokerError::UnknownStrategy(s.to_string()))
    }
}

/// A deadline or budget: an absolute value, or a relaxation factor between
/// the schedule bounds (0 = tightest, 1 = loosest).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    Absolute(f64),
    Factor(f64),
}

/// Tunables of the broker's runtime behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BrokerPolicy {
    /// Completions averaged by the rate estimate.
    pub window: usize,
    /// Multiplier on rated capacity before any completion is observed.
    pub optimism: f64,
    /// Cancel in-flight jobs when the deadline passes instead of letting
    /// them finish.
    pub cancel_at_deadline: bool,
}

impl Default for BrokerPolicy {
    fn default() -> Self {
        BrokerPolicy {
            window: 8,
            optimism: 1.0,
            cancel_at_deadline: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub application: Application,
    pub strategy: Strategy,
    /// Measured from the experiment start.
    pub deadline: Constraint,
    pub budget: Constraint,
    pub policy: BrokerPolicy,
}

/// Per-resource outcome of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceSummary {
    pub name: String,
    pub completed: usize,
    pub spend: f64,
}

/// One sample of a resource's state as seen by a broker.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub time: SimTime,
    pub resource: String,
    /// Jobs assigned, in flight or completed there.
    pub committed: usize,
    pub processed: usize,
    pub spend: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub user: String,
    pub strategy: Strategy,
    pub start_time: SimTime,
    /// Absolute simulation time.
    pub deadline: SimTime,
    pub budget: f64,
    pub bounds: ScheduleBounds,
    pub jobs: usize,
    pub completed: usize,
    pub total_spend: f64,
    pub termination_time: SimTime,
    pub per_resource: Vec<ResourceSummary>,
    pub trace: Vec<TraceRow>,
    /// Every gridlet returned by a resource, in return order.
    pub returned: Vec<Gridlet>,
}

impl ExperimentResult {
    pub fn makespan(&self) -> SimTime {
        self.termination_time - self.start_time
    }

    /// Resources that completed at least one job.
    pub fn used_resources(&self) -> Vec<&str> {
        self.per_resource
            .iter()
            .filter(|r| r.completed > 0)
            .map(|r| r.name.as_str())
            .collect()
    }
}
