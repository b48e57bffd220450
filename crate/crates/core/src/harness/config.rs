use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::broker::{Constraint, Strategy};
use crate::grid::ResourceSpec;
use crate::kernel::SimTime;
use crate::plan::{job_count, parse_plan, Overrides};
use crate::resource::{
    AllocationPolicy, Machine, NetworkMode, ResourceCalendar, ResourceCharacteristics,
};
use crate::workload::ApplicationSpec;

/// A list of values or an inclusive arithmetic range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { from: f64, to: f64, step: f64 },
}

impl Grid {
    /// Expanded values. A range includes `to` when it lies on the step
    /// lattice (to within 1e-9 of a step).
    pub fn values(&self) -> Result<Vec<f64>, String> {
        let v = match self {
            Grid::List(v) => v.clone(),
            Grid::Range { from, to, step } => {
                if !(*step > 0.0) || !(to >= from) {
                    return Err(format!("range needs step > 0 and to >= from (got {from}..{to} step {step})"));
                }
                let n = ((to - from) / step + 1e-9).floor() as usize;
                (0..=n).map(|i| from + i as f64 * step).collect()
            }
        };
        if v.is_empty() {
            return Err("grid is empty".into());
        }
        if let Some(x) = v.iter().find(|x| !x.is_finite()) {
            return Err(format!("non-finite value {x}"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    #[default]
    Absolute,
    Factor,
}

impl ConstraintKind {
    pub fn wrap(self, v: f64) -> Constraint {
        match self {
            ConstraintKind::Absolute => Constraint::Absolute(v),
            ConstraintKind::Factor => Constraint::Factor(v),
        }
    }
}

/// Users axis: every cell runs `count` users that share one strategy,
/// deadline and budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UsersConfig {
    #[serde(default = "one_user")]
    pub count: Vec<usize>,
    pub strategy: Vec<Strategy>,
    pub deadline: Grid,
    #[serde(default)]
    pub deadline_kind: ConstraintKind,
    pub budget: Grid,
    #[serde(default)]
    pub budget_kind: ConstraintKind,
    /// Broker rate-estimate window, in completions.
    #[serde(default = "default_window")]
    pub window: usize,
}

fn one_user() -> Vec<usize> {
    vec![1]
}

fn default_window() -> usize {
    8
}

/// Synthetic task farm, optionally sized by a plan file's job count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApplicationConfig {
    #[serde(default)]
    pub jobs: Option<usize>,
    pub base_mi: f64,
    #[serde(default)]
    pub variation: f64,
    #[serde(default)]
    pub input_bytes: u64,
    #[serde(default)]
    pub output_bytes: u64,
    /// Plan file; relative paths resolve against the config file.
    #[serde(default)]
    pub plan: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceConfig {
    pub name: String,
    #[serde(default = "default_arch")]
    pub arch: String,
    #[serde(default = "default_os")]
    pub os: String,
    #[serde(default = "one")]
    pub machines: usize,
    /// PEs per machine.
    pub pes: usize,
    pub mips: f64,
    #[serde(default = "default_policy")]
    pub policy: AllocationPolicy,
    /// G$ per PE per time unit.
    pub price: f64,
    #[serde(default)]
    pub time_zone: f64,
    #[serde(default)]
    pub calendar: ResourceCalendar,
    #[serde(default)]
    pub fail_at: Option<SimTime>,
}

fn default_arch() -> String {
    "x86".into()
}

fn default_os() -> String {
    "Linux".into()
}

fn one() -> usize {
    1
}

fn default_policy() -> AllocationPolicy {
    AllocationPolicy::TimeShared
}

impl ResourceConfig {
    pub fn spec(&self) -> ResourceSpec {
        ResourceSpec {
            characteristics: ResourceCharacteristics {
                name: self.name.clone(),
                arch: self.arch.clone(),
                os: self.os.clone(),
                machines: (0..self.machines)
                    .map(|m| Machine::uniform(m, self.pes, self.mips))
                    .collect(),
                policy: self.policy,
                cost_per_pe_time_unit: self.price,
                time_zone: self.time_zone,
            },
            calendar: self.calendar.clone(),
            fail_at: self.fail_at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub network: NetworkMode,
    #[serde(default)]
    pub cancel_at_deadline: bool,
    /// Users start at a uniform random offset in `[0, stagger)`.
    #[serde(default)]
    pub stagger: f64,
    pub application: ApplicationConfig,
    pub users: UsersConfig,
    pub resources: Vec<ResourceConfig>,
}

fn field_err(field: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| HarnessError::Parse {
            path: None,
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.seeds.is_empty() {
            return Err(field_err("seeds", "grid is empty"));
        }
        if self.resources.is_empty() {
            return Err(field_err("resources", "at least one resource is required"));
        }
        let mut names = BTreeSet::new();
        for (i, r) in self.resources.iter().enumerate() {
            if !names.insert(r.name.as_str()) {
                return Err(field_err(&format!("resources[{i}].name"), format!("duplicate `{}`", r.name)));
            }
            if r.machines == 0 {
                return Err(field_err(&format!("resources[{i}].machines"), "must be at least 1"));
            }
            let spec = r.spec();
            spec.characteristics
                .validate()
                .and_then(|_| spec.calendar.validate())
                .map_err(|e| field_err(&format!("resources[{i}]"), e.to_string()))?;
        }
        let u = &self.users;
        if u.count.is_empty() || u.count.contains(&0) {
            return Err(field_err("users.count", "needs at least one value, all >= 1"));
        }
        if u.strategy.is_empty() {
            return Err(field_err("users.strategy", "grid is empty"));
        }
        u.deadline.values().map_err(|m| field_err("users.deadline", m))?;
        u.budget.values().map_err(|m| field_err("users.budget", m))?;
        if u.window == 0 {
            return Err(field_err("users.window", "must be at least 1"));
        }
        let a = &self.application;
        if !(a.base_mi > 0.0) {
            return Err(field_err("application.base_mi", "must be positive"));
        }
        if !(0.0..=1.0).contains(&a.variation) {
            return Err(field_err("application.variation", "must lie in [0, 1]"));
        }
        match (a.jobs, &a.plan) {
            (Some(0), _) => return Err(field_err("application.jobs", "must be at least 1")),
            (None, None) => {
                return Err(field_err("application", "set `jobs` or `plan`"));
            }
            _ => {}
        }
        if !(self.stagger >= 0.0) {
            return Err(field_err("stagger", "must be non-negative"));
        }
        self.network
            .validate()
            .map_err(|e| field_err("network", e.to_string()))?;
        Ok(())
    }

    /// Resolves a plan-sized application to a fixed job count, reading the
    /// plan relative to `base`.
    pub fn resolve_plan(&mut self, base: &Path) -> Result<(), HarnessError> {
        let Some(plan) = &self.application.plan else {
            return Ok(());
        };
        let path = base.join(plan);
        let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::Io {
            path: path.clone(),
            source: e,
        })?;
        let ast = parse_plan(&text).map_err(|e| field_err("application.plan", format!("{}: {e}", path.display())))?;
        let n = job_count(&ast, &Overrides::new())
            .map_err(|e| field_err("application.plan", e.to_string()))?;
        if n == 0 {
            return Err(field_err("application.plan", "plan expands to no jobs"));
        }
        self.application.jobs = Some(n);
        self.application.plan = None;
        Ok(())
    }

    pub fn application_spec(&self) -> ApplicationSpec {
        ApplicationSpec {
            jobs: self.application.jobs.expect("resolved before running"),
            base_mi: self.application.base_mi,
            variation: self.application.variation,
            input_bytes: self.application.input_bytes,
            output_bytes: self.application.output_bytes,
        }
    }

    pub fn resource_specs(&self) -> Vec<ResourceSpec> {
        self.resources.iter().map(ResourceConfig::spec).collect()
    }
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<SweepConfig, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut cfg = SweepConfig::parse(&text).map_err(|e| match e {
        HarnessError::Parse { message, .. } => HarnessError::Parse {
            path: Some(path.to_path_buf()),
            message,
        },
        other => other,
    })?;
    cfg.resolve_plan(path.parent().unwrap_or(Path::new(".")))?;
    Ok(cfg)
}

/// Built-in configs.
pub const PRESETS: [(&str, &str); 3] = [
    ("wwg-table-6.2", include_str!("presets/wwg-table-6.2.toml")),
    ("wwg-table-6.3", include_str!("presets/wwg-table-6.3.toml")),
    ("testqueues-4.6", include_str!("presets/testqueues-4.6.toml")),
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn preset(name: &str) -> Result<SweepConfig, HarnessError> {
    let text = preset_text(name).ok_or_else(|| HarnessError::UnknownPreset(name.into()))?;
    SweepConfig::parse(text)
}
