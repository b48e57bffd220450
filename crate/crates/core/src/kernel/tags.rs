//! Event command tags shared by all entities.
//!
//! Values `-1..=11` follow the classic grid-simulation tag table; the tags
//! above 11 are additions used by this crate's entities.

/// A zero-delay schedule.
pub const SCHEDULE_NOW: f64 = 0.0;

pub const END_OF_SIMULATION: i32 = -1;
/// Ignored tag.
pub const INSIGNIFICANT: i32 = 0;
/// User <-> Broker.
pub const EXPERIMENT: i32 = 1;
/// Resource -> GIS.
pub const REGISTER_RESOURCE: i32 = 2;
/// GIS <-> Broker.
pub const RESOURCE_LIST: i32 = 3;
/// Broker <-> Resource.
pub const RESOURCE_CHARACTERISTICS: i32 = 4;
/// Broker <-> Resource.
pub const RESOURCE_DYNAMICS: i32 = 5;
/// Broker -> Resource.
pub const GRIDLET_SUBMIT: i32 = 6;
/// Resource -> Broker.
pub const GRIDLET_RETURN: i32 = 7;
/// Broker <-> Resource.
pub const GRIDLET_STATUS: i32 = 8;
/// Entity -> Statistics.
pub const RECORD_STATISTICS: i32 = 9;
/// Entity <- Statistics.
pub const RETURN_STAT_LIST: i32 = 10;
pub const RETURN_ACC_STATISTICS_BY_CATEGORY: i32 = 11;

/// Broker -> Resource: abort an executing or queued gridlet.
pub const GRIDLET_CANCEL: i32 = 12;
/// Resource self-event: forecast completion of the earliest gridlet.
pub const GRIDLET_COMPLETION: i32 = 13;
/// Broker self-event: periodic scheduling round.
pub const SCHEDULE_TICK: i32 = 14;
/// Resource -> GIS: remove registration.
pub const DEREGISTER_RESOURCE: i32 = 15;
/// User -> Shutdown: this user has no more work.
pub const USER_DONE: i32 = 16;
/// Broker self-event: coalesced scheduling round after gridlet returns.
pub const SCHEDULE_NOW_ROUND: i32 = 17;

pub const DEFAULT_BAUD_RATE: f64 = 9600.0;
