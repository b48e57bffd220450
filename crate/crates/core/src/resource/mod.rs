//! Grid resources and their local scheduling policies.
//!
//! Supporting models live alongside: the local load calendar, the GIS
//! registry and network transfer delays.

mod calendar;
mod characteristics;
mod gis;
pub mod local;
mod network;
mod share;

pub use calendar::{PeriodClass, ResourceCalendar};
pub use characteristics::{
    AllocationPolicy, Machine, PeStatus, ProcessingElement, ResourceCharacteristics,
};
pub use gis::GisRegistry;
pub use local::{GridletKey, LocalScheduler, SpaceShared, TimeShared, Transition};
pub use network::{transfer_delay, NetworkMode, OutputLink};
pub use share::{pe_share_allocation, ShareAllocation};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResourceError {
    #[error("resource `{0}` has no processing elements")]
    NoProcessingElements(String),
    #[error("PE rating must be positive (got {0})")]
    NonPositiveMips(f64),
    #[error("price must be non-negative (got {0})")]
    NegativeCost(f64),
    #[error("local load must lie in [0, 1) (got {0})")]
    LoadOutOfRange(f64),
    #[error("baud rate must be positive")]
    ZeroBaud,
}

/// Builds the local scheduler matching a resource's allocation policy.
pub fn scheduler_for(ch: &ResourceCharacteristics) -> Box<dyn LocalScheduler + Send> {
    match ch.policy {
        AllocationPolicy::TimeShared => Box::new(TimeShared::from_machines(&ch.machines)),
        AllocationPolicy::SpaceShared => Box::new(SpaceShared::from_machines(&ch.machines)),
    }
}
