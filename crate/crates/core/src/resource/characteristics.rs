use serde::{Deserialize, Serialize};

use super::ResourceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PeStatus {
    Free,
    Busy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessingElement {
    pub pe_id: usize,
    /// MI per time unit.
    pub mips: f64,
    pub status: PeStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Machine {
    pub machine_id: usize,
    pub pes: Vec<ProcessingElement>,
}

impl Machine {
    /// A machine of `n` identical PEs.
    pub fn uniform(machine_id: usize, n: usize, mips: f64) -> Self {
        Machine {
            machine_id,
            pes: (0..n)
                .map(|pe_id| ProcessingElement {
                    pe_id,
                    mips,
                    status: PeStatus::Free,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AllocationPolicy {
    TimeShared,
    SpaceShared,
}

/// Static description of a grid resource.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceCharacteristics {
    pub name: String,
    pub arch: String,
    pub os: String,
    pub machines: Vec<Machine>,
    pub policy: AllocationPolicy,
    /// G$ per PE per time unit.
    pub cost_per_pe_time_unit: f64,
    /// Hours offset from the calendar epoch's zone.
    pub time_zone: f64,
}

impl ResourceCharacteristics {
    pub fn validate(&self) -> Result<(), ResourceError> {
        if self.machines.is_empty() || self.machines.iter().any(|m| m.pes.is_empty()) {
            return Err(ResourceError::NoProcessingElements(self.name.clone()));
        }
        if let Some(pe) = self
            .machines
            .iter()
            .flat_map(|m| &m.pes)
            .find(|pe| !(pe.mips > 0.0))
        {
            return Err(ResourceError::NonPositiveMips(pe.mips));
        }
        if !(self.cost_per_pe_time_unit >= 0.0) {
            return Err(ResourceError::NegativeCost(self.cost_per_pe_time_unit));
        }
        Ok(())
    }

    pub fn num_pes(&self) -> usize {
        self.machines.iter().map(|m| m.pes.len()).sum()
    }

    /// Mean PE rating; resources in practice are homogeneous.
    pub fn pe_mips(&self) -> f64 {
        self.total_mips() / self.num_pes() as f64
    }

    pub fn total_mips(&self) -> f64 {
        self.machines
            .iter()
            .flat_map(|m| &m.pes)
            .map(|pe| pe.mips)
            .sum()
    }

    /// Price translated to G$ per MI.
    pub fn cost_per_mi(&self) -> f64 {
        self.cost_per_pe_time_unit / self.pe_mips()
    }

    /// Cost of executing `length_mi` at this resource's rated PE speed.
    ///
    /// Computed as price x execution time rather than `cost_per_mi * length`
    /// so integral prices and times give exact sums.
    pub fn cost_of(&self, length_mi: f64) -> f64 {
        self.cost_per_pe_time_unit * (length_mi / self.pe_mips())
    }
}
