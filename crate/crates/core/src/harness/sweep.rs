use rayon::prelude::*;
use serde::Serialize;

use super::{HarnessError, SweepConfig};
use crate::broker::{BrokerPolicy, Experiment, ExperimentResult, Strategy};
use crate::grid::{run_scenario, GridScenario, UserSpec};
use crate::workload::{synthesize, user_seed, RandomStream};

/// One grid point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellKey {
    /// Position in the sweep's canonical order.
    pub index: usize,
    pub users: usize,
    pub strategy: Strategy,
    pub deadline: f64,
    pub budget: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct CellData {
    /// One per user; returned gridlets are dropped to keep sweeps small.
    pub results: Vec<ExperimentResult>,
    pub trace_hash: String,
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub key: CellKey,
    pub outcome: Result<CellData, String>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// In canonical order: users, strategy, deadline, budget, seed, with
    /// the last varying fastest.
    pub cells: Vec<Cell>,
}

impl SweepResult {
    pub fn all_ok(&self) -> bool {
        self.cells.iter().all(|c| c.outcome.is_ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = (&CellKey, &str)> {
        self.cells
            .iter()
            .filter_map(|c| c.outcome.as_ref().err().map(|e| (&c.key, e.as_str())))
    }
}

/// Grid points of `cfg` in canonical order.
pub fn cells(cfg: &SweepConfig) -> Result<Vec<CellKey>, HarnessError> {
    let deadlines = cfg.users.deadline.values().map_err(|m| HarnessError::Invalid {
        field: "users.deadline".into(),
        message: m,
    })?;
    let budgets = cfg.users.budget.values().map_err(|m| HarnessError::Invalid {
        field: "users.budget".into(),
        message: m,
    })?;
    let mut out = Vec::new();
    for &users in &cfg.users.count {
        for &strategy in &cfg.users.strategy {
            for &deadline in &deadlines {
                for &budget in &budgets {
                    for &seed in &cfg.seeds {
                        out.push(CellKey {
                            index: out.len(),
                            users,
                            strategy,
                            deadline,
                            budget,
                            seed,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// The scenario a cell runs. User `i` draws its workload from
/// `user_seed(seed, i)`; start offsets come from a stream seeded with the
/// cell seed.
pub fn cell_scenario(cfg: &SweepConfig, key: &CellKey) -> Result<GridScenario, String> {
    let spec = cfg.application_spec();
    let mut offsets = RandomStream::new(key.seed);
    let mut users = Vec::with_capacity(key.users);
    for i in 0..key.users {
        let application = synthesize(&spec, user_seed(key.seed, i)).map_err(|e| e.to_string())?;
        let start_time = if cfg.stagger > 0.0 {
            cfg.stagger * offsets.next_unit()
        } else {
            0.0
        };
        users.push(UserSpec {
            name: format!("User{i}"),
            experiment: Experiment {
                application,
                strategy: key.strategy,
                deadline: cfg.users.deadline_kind.wrap(key.deadline),
                budget: cfg.users.budget_kind.wrap(key.budget),
                policy: BrokerPolicy {
                    window: cfg.users.window,
                    cancel_at_deadline: cfg.cancel_at_deadline,
                    ..BrokerPolicy::default()
                },
            },
            start_time,
        });
    }
    Ok(GridScenario {
        resources: cfg.resource_specs(),
        users,
        network: cfg.network,
        record_trace: false,
    })
}

pub fn run_cell(cfg: &SweepConfig, key: &CellKey) -> Result<CellData, String> {
    let scenario = cell_scenario(cfg, key)?;
    let outcome = run_scenario(&scenario).map_err(|e| e.to_string())?;
    Ok(CellData {
        results: outcome
            .results
            .into_iter()
            .map(|mut r| {
                r.returned = Vec::new();
                r
            })
            .collect(),
        trace_hash: outcome.trace_hash,
    })
}

/// Runs every cell. Cells are independent, so the result does not depend
/// on `threads`; `None` uses rayon's default pool.
pub fn run_sweep(cfg: &SweepConfig, threads: Option<usize>) -> Result<SweepResult, HarnessError> {
    cfg.validate()?;
    if cfg.application.jobs.is_none() {
        return Err(HarnessError::Invalid {
            field: "application.plan".into(),
            message: "plan not resolved; load the config from a file".into(),
        });
    }
    let keys = cells(cfg)?;
    let run = || -> Vec<Cell> {
        keys.par_iter()
            .map(|key| Cell {
                key: *key,
                outcome: run_cell(cfg, key),
            })
            .collect()
    };
    let cells = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::Invalid {
                field: "parallel".into(),
                message: e.to_string(),
            })?
            .install(run),
        None => run(),
    };
    Ok(SweepResult { cells })
}
