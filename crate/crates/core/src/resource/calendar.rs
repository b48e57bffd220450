use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ResourceError;
use crate::kernel::SimTime;

/// Load period of a resource's local time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriodClass {
    Peak,
    OffPeak,
    Holiday,
}

/// Local (non-grid) load model.
///
/// Simulation time zero is Monday 00:00 in the epoch's zone; a resource sees
/// the clock shifted by its time zone. Load is piecewise constant over three
/// period classes: weekday peak hours, other weekday hours, and
/// weekends/holidays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResourceCalendar {
    /// Weekday indices, 0 = Monday.
    pub weekends: BTreeSet<u8>,
    /// Day numbers since the epoch (day 0 is the first Monday).
    pub holidays: BTreeSet<u32>,
    pub peak_load: f64,
    pub off_peak_load: f64,
    pub holiday_load: f64,
    pub peak_start_hour: f64,
    pub peak_end_hour: f64,
    /// Wall-clock seconds per simulation time unit.
    pub seconds_per_unit: f64,
}

impl Default for ResourceCalendar {
    fn default() -> Self {
        ResourceCalendar {
            weekends: [5u8, 6].into_iter().collect(),
            holidays: BTreeSet::new(),
            peak_load: 0.0,
            off_peak_load: 0.0,
            holiday_load: 0.0,
            peak_start_hour: 9.0,
            peak_end_hour: 17.0,
            seconds_per_unit: 1.0,
        }
    }
}

impl ResourceCalendar {
    pub fn validate(&self) -> Result<(), ResourceError> {
        for load in [self.peak_load, self.off_peak_load, self.holiday_load] {
            if !(0.0..1.0).contains(&load) {
                return Err(ResourceError::LoadOutOfRange(load));
            }
        }
        Ok(())
    }

    /// Period class at simulation time `t` for a resource at `time_zone`.
    pub fn period_class(&self, t: SimTime, time_zone: f64) -> PeriodClass {
        let local_hours = t * self.seconds_per_unit / 3600.0 + time_zone;
        let day = (local_hours / 24.0).floor();
        let hour = local_hours - day * 24.0;
        let weekday = day.rem_euclid(7.0) as u8;
        let holiday = day >= 0.0 && self.holidays.contains(&(day as u32));
        if holiday || self.weekends.contains(&weekday) {
            PeriodClass::Holiday
        } else if hour >= self.peak_start_hour && hour < self.peak_end_hour {
            PeriodClass::Peak
        } else {
            PeriodClass::OffPeak
        }
    }

    pub fn local_load(&self, class: PeriodClass) -> f64 {
        match class {
            PeriodClass::Peak => self.peak_load,
            PeriodClass::OffPeak => self.off_peak_load,
            PeriodClass::Holiday => self.holiday_load,
        }
    }

    pub fn load_at(&self, t: SimTime, time_zone: f64) -> f64 {
        self.local_load(self.period_class(t, time_zone))
    }

    /// MIPS of a PE left for grid work at time `t`.
    pub fn effective_mips(&self, rated_mips: f64, t: SimTime, time_zone: f64) -> f64 {
        rated_mips * (1.0 - self.load_at(t, time_zone))
    }
}
