use super::*;
use crate::broker::{BrokerPolicy, Constraint, Strategy};
use crate::resource::{AllocationPolicy, Machine};
use crate::workload::{Application, GridletStatus};

fn queue(i: usize) -> ResourceSpec {
    ResourceSpec::new(ResourceCharacteristics {
        name: format!("Q{i}"),
        arch: "x86".into(),
        os: "Linux".into(),
        machines: vec![Machine::uniform(0, 1, 100.0)],
        policy: AllocationPolicy::TimeShared,
        cost_per_pe_time_unit: 10.0 + 2.0 * i as f64,
        time_zone: 0.0,
    })
}

fn jobs(n: usize, len: f64) -> Application {
    Application::new("app", (0..n).map(|i| Gridlet::new(i, len, 0, 0)).collect())
}

fn single(strategy: Strategy, deadline: f64, budget: f64, resources: Vec<ResourceSpec>) -> GridScenario {
    GridScenario {
        resources,
        users: vec![UserSpec {
            name: "User0".into(),
            experiment: Experiment {
                application: jobs(100, 9000.0),
                strategy,
                deadline: Constraint::Absolute(deadline),
                budget: Constraint::Absolute(budget),
                policy: BrokerPolicy::default(),
            },
            start_time: 0.0,
        }],
        ..Default::default()
    }
}

fn queues() -> Vec<ResourceSpec> {
    (0..10).map(queue).collect()
}

#[test]
fn time_strategy_on_test_queues() {
    let out = run_scenario(&single(Strategy::Time, 990.0, 171_000.0, queues())).unwrap();
    let r = &out.results[0];
    assert_eq!(r.completed, 100);
    assert_eq!(r.total_spend, 171_000.0);
    assert!((900.0..=990.0).contains(&r.makespan()), "{}", r.makespan());
}

#[test]
fn cost_strategy_on_test_queues() {
    let out = run_scenario(&single(Strategy::Cost, 2970.0, 126_000.0, queues())).unwrap();
    let r = &out.results[0];
    assert_eq!(r.completed, 100);
    assert_eq!(r.total_spend, 108_360.0);
    assert!(r.makespan() <= 2970.0);
    let per: Vec<usize> = r.per_resource.iter().map(|p| p.completed).collect();
    assert_eq!(&per[..4], &[33, 33, 33, 1]);
}

#[test]
fn identical_runs_hash_identically() {
    let s = single(Strategy::CostTime, 1500.0, 150_000.0, queues());
    let a = run_scenario(&s).unwrap();
    let b = run_scenario(&s).unwrap();
    assert_eq!(a.trace_hash, b.trace_hash);
    assert_eq!(a.run_stats, b.run_stats);
}

#[test]
fn user_statistics_recorded() {
    let out = run_scenario(&single(Strategy::Time, 990.0, 171_000.0, queues())).unwrap();
    let s = out.stats.get("User0.USER.GridletCompletionFactor").unwrap();
    assert_eq!(s.records[0].value, 1.0);
    let b = out.stats.get("User0.USER.BudgetUtilization").unwrap();
    assert_eq!(b.records[0].value, 1.0);
    assert_eq!(out.stats.query("*.USER.*").len(), 3);
}

#[test]
fn failed_resource_work_moves_elsewhere() {
    let mut rs = queues();
    rs[0].fail_at = Some(45.0);
    let out = run_scenario(&single(Strategy::Cost, 2970.0, 200_000.0, rs)).unwrap();
    let r = &out.results[0];
    assert_eq!(r.completed, 100);
    assert_eq!(r.per_resource[0].completed, 0);
    assert!(r
        .returned
        .iter()
        .any(|g| g.status == GridletStatus::Failed && g.resource_id.is_some()));
}

#[test]
fn cancel_at_deadline_bills_partial_work() {
    // Rated speed promises 90 units; half the PE is taken by local load,
    // so the job is still running at the deadline of 100.
    let mut q = queue(0);
    q.calendar.peak_load = 0.5;
    q.calendar.off_peak_load = 0.5;
    q.calendar.holiday_load = 0.5;
    let mut s = single(Strategy::Cost, 100.0, 1e9, vec![q]);
    s.users[0].experiment.application = jobs(1, 9000.0);
    s.users[0].experiment.policy.cancel_at_deadline = true;
    let out = run_scenario(&s).unwrap();
    let r = &out.results[0];
    assert_eq!(r.completed, 0);
    assert_eq!(r.termination_time, 100.0);
    let g = &r.returned[0];
    assert_eq!(g.status, GridletStatus::Canceled);
    // 100 units at 50 effective MIPS, billed at 10 per 100 MI
    assert!((g.consumed_mi - 5000.0).abs() < 1e-9);
    assert!((g.cost_incurred - 500.0).abs() < 1e-9);
    assert!((r.total_spend - 500.0).abs() < 1e-9);
}

#[test]
fn network_delays_stretch_makespan() {
    let mut fast = single(Strategy::Time, 5000.0, 1e9, vec![queue(0)]);
    fast.users[0].experiment.application = Application::new(
        "io",
        (0..3).map(|i| Gridlet::new(i, 100.0, 9600, 9600)).collect(),
    );
    let mut slow = fast.clone();
    slow.network = NetworkMode::Baud(9600.0);
    let a = run_scenario(&fast).unwrap().results[0].makespan();
    let b = run_scenario(&slow).unwrap().results[0].makespan();
    assert_eq!(a, 3.0);
    assert!(b > a + 1.0, "{a} vs {b}");
}

#[test]
fn users_share_resources() {
    let mut s = single(Strategy::Cost, 2970.0, 126_000.0, queues());
    let mut u2 = s.users[0].clone();
    u2.name = "User1".into();
    s.users.push(u2);
    let out = run_scenario(&s).unwrap();
    let total: usize = out.results.iter().map(|r| r.completed).sum();
    assert!(total < 200, "contention must cost someone completions");
    assert!(out.results.iter().all(|r| r.total_spend <= 126_000.0 + 1e-6));
}

#[test]
fn scenario_validation() {
    let mut s = single(Strategy::Cost, 100.0, 1.0, vec![]);
    assert!(matches!(run_scenario(&s), Err(ScenarioError::NoResources)));
    s.resources = queues();
    s.users[0].experiment.deadline = Constraint::Absolute(-1.0);
    assert!(matches!(run_scenario(&s), Err(ScenarioError::Broker { .. })));
}
