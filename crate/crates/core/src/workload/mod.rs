//! Jobs (gridlets) and seeded task-farm synthesis with uncertainty
//! injection.

mod random;

pub use random::{random_real, RandomFactors, RandomStream, WorkloadError};

use serde::{Deserialize, Serialize};

use crate::kernel::{EntityId, SimTime};

/// Lifecycle state of a gridlet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridletStatus {
    Created,
    Ready,
    Queued,
    InExec,
    Success,
    Failed,
    Canceled,
}

impl std::fmt::Display for GridletStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            GridletStatus::Created => "CREATED",
            GridletStatus::Ready => "READY",
            GridletStatus::Queued => "QUEUED",
            GridletStatus::InExec => "INEXEC",
            GridletStatus::Success => "SUCCESS",
            GridletStatus::Failed => "FAILED",
            GridletStatus::Canceled => "CANCELED",
        };
        f.write_str(s)
    }
}

/// One job: its length in MI, I/O sizes and execution record.
///
/// Lengths are expressed relative to a 100-MIPS standard PE, so a 10000 MI
/// gridlet takes 100 time units on such a PE.
#[derive(Debug, Clone, PartialEq)]
pub struct Gridlet {
    pub id: usize,
    pub length_mi: f64,
    pub input_bytes: u64,
    pub output_bytes: u64,
    pub owner: Option<EntityId>,
    pub status: GridletStatus,
    /// Arrival at the resource.
    pub submit_time: SimTime,
    pub start_time: SimTime,
    pub finish_time: SimTime,
    pub wall_clock: f64,
    pub cpu_time: f64,
    pub cost_incurred: f64,
    pub resource_id: Option<EntityId>,
    /// MI actually executed; equals `length_mi` on success.
    pub consumed_mi: f64,
}

impl Gridlet {
    pub fn new(id: usize, length_mi: f64, input_bytes: u64, output_bytes: u64) -> Self {
        assert!(length_mi > 0.0, "gridlet length must be positive");
        Gridlet {
            id,
            length_mi,
            input_bytes,
            output_bytes,
            owner: None,
            status: GridletStatus::Created,
            submit_time: 0.0,
            start_time: 0.0,
            finish_time: 0.0,
            wall_clock: 0.0,
            cpu_time: 0.0,
            cost_incurred: 0.0,
            resource_id: None,
            consumed_mi: 0.0,
        }
    }
}

/// Execution time of `remaining_mi` on a PE of `pe_mips`.
pub fn length_in_time_units(remaining_mi: f64, pe_mips: f64) -> f64 {
    assert!(pe_mips > 0.0, "PE rating must be positive");
    remaining_mi / pe_mips
}

/// A task-farming application: independent gridlets with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Application {
    pub label: String,
    pub gridlets: Vec<Gridlet>,
}

impl Application {
    pub fn new(label: impl Into<String>, gridlets: Vec<Gridlet>) -> Self {
        let app = Application {
            label: label.into(),
            gridlets,
        };
        debug_assert!(app.ids_unique());
        app
    }

    pub fn len(&self) -> usize {
        self.gridlets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gridlets.is_empty()
    }

    pub fn total_mi(&self) -> f64 {
        self.gridlets.iter().map(|g| g.length_mi).sum()
    }

    fn ids_unique(&self) -> bool {
        let mut ids: Vec<usize> = self.gridlets.iter().map(|g| g.id).collect();
        ids.sort_unstable();
        ids.windows(2).all(|w| w[0] != w[1])
    }
}

/// Parameters of a synthetic task-farming application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplicationSpec {
    pub jobs: usize,
    pub base_mi: f64,
    /// Upper bound of the positive length variation, as a fraction.
    pub variation: f64,
    #[serde(default)]
    pub input_bytes: u64,
    #[serde(default)]
    pub output_bytes: u64,
}

impl Default for ApplicationSpec {
    fn default() -> Self {
        ApplicationSpec {
            jobs: 200,
            base_mi: 10_000.0,
            variation: 0.10,
            input_bytes: 0,
            output_bytes: 0,
        }
    }
}

/// Builds `n_jobs` gridlets whose lengths are `base_mi` stretched by up to
/// `positive_variation`, one draw per job from a stream seeded with `seed`.
pub fn synthesize_application(
    n_jobs: usize,
    base_mi: f64,
    positive_variation: f64,
    input_bytes: u64,
    output_bytes: u64,
    seed: u64,
) -> Result<Application, WorkloadError> {
    if n_jobs == 0 {
        return Err(WorkloadError::NoJobs);
    }
    if !(base_mi > 0.0) {
        return Err(WorkloadError::NonPositiveLength(base_mi));
    }
    let mut rng = RandomStream::new(seed);
    let mut gridlets = Vec::with_capacity(n_jobs);
    for id in 0..n_jobs {
        let rd = rng.next_unit();
        let len = random_real(base_mi, 0.0, positive_variation, rd)?;
        gridlets.push(Gridlet::new(id, len, input_bytes, output_bytes));
    }
    Ok(Application::new(format!("taskfarm-{n_jobs}-seed{seed}"), gridlets))
}

pub fn synthesize(spec: &ApplicationSpec, seed: u64) -> Result<Application, WorkloadError> {
    synthesize_application(
        spec.jobs,
        spec.base_mi,
        spec.variation,
        spec.input_bytes,
        spec.output_bytes,
        seed,
    )
}

/// Seed of the `user_index`-th user's stream: `seed * 997 * (1 + i) + 1`,
/// in wrapping 64-bit arithmetic.
pub fn user_seed(seed: u64, user_index: usize) -> u64 {
    seed.wrapping_mul(997)
        .wrapping_mul(1 + user_index as u64)
        .wrapping_add(1)
}
