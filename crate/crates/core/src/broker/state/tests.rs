use super::*;
use crate::broker::Constraint;
use crate::resource::{AllocationPolicy, Machine};
use crate::workload::Application;

fn resource(name: &str, pes: usize, mips: f64, price: f64) -> ResourceCharacteristics {
    ResourceCharacteristics {
        name: name.into(),
        arch: "x86".into(),
        os: "Linux".into(),
        machines: vec![Machine::uniform(0, pes, mips)],
        policy: AllocationPolicy::TimeShared,
        cost_per_pe_time_unit: price,
        time_zone: 0.0,
    }
}

fn experiment(n: usize, len: f64, strategy: Strategy, deadline: f64, budget: f64) -> Experiment {
    Experiment {
        application: Application::new(
            "t",
            (0..n).map(|i| Gridlet::new(i, len, 0, 0)).collect(),
        ),
        strategy,
        deadline: Constraint::Absolute(deadline),
        budget: Constraint::Absolute(budget),
        policy: BrokerPolicy::default(),
    }
}

fn state(exp: &Experiment, rs: Vec<ResourceCharacteristics>) -> BrokerState {
    let rs = rs
        .into_iter()
        .enumerate()
        .map(|(i, c)| (EntityId(100 + i), c))
        .collect();
    BrokerState::new("u", exp, rs, 0.0).unwrap()
}

fn planned(s: &BrokerState) -> Vec<usize> {
    s.resources.iter().map(|r| r.assigned.len()).collect()
}

fn succeed(s: &mut BrokerState, now: f64, d: &Dispatch) {
    let mut g = d.gridlet.clone();
    g.status = GridletStatus::Success;
    g.consumed_mi = g.length_mi;
    let r = s.resources.iter().find(|r| r.id == d.resource).unwrap();
    g.cost_incurred = r.characteristics.cost_of(g.length_mi);
    s.on_return(now, g);
}

#[test]
fn cold_start_uses_rated_capacity() {
    let r = BrokerResource::new(EntityId(0), resource("a", 4, 50.0, 1.0));
    assert_eq!(estimate_rate(&r, 1.0), 200.0);
    assert_eq!(estimate_rate(&r, 0.5), 100.0);
}

#[test]
fn windowed_rate_mean() {
    let mut r = BrokerResource::new(EntityId(0), resource("a", 1, 100.0, 1.0));
    r.observe(10_000.0, 100.0, 8);
    r.observe(10_000.0, 110.0, 8);
    // mean(100, 90.909...) with one slot
    let expected = (100.0 + 10_000.0 / 110.0) / 2.0;
    assert!((estimate_rate(&r, 1.0) - expected).abs() < 1e-12);
    assert!((estimate_rate(&r, 1.0) - 95.4545).abs() < 1e-4);
}

#[test]
fn window_drops_oldest() {
    let mut r = BrokerResource::new(EntityId(0), resource("a", 2, 100.0, 1.0));
    for wall in [1.0, 2.0, 4.0] {
        r.observe(8.0, wall, 2);
    }
    assert_eq!(r.history().collect::<Vec<_>>(), vec![4.0, 2.0]);
    assert_eq!(estimate_rate(&r, 1.0), 6.0);
}

#[test]
fn dispatch_caps_in_flight_at_pe_count() {
    let exp = experiment(10, 100.0, Strategy::Cost, 1000.0, 1e9);
    let mut s = state(&exp, vec![resource("a", 4, 10.0, 1.0)]);
    s.schedule(0.0);
    assert_eq!(planned(&s), vec![10]);
    let first = s.dispatch(0.0);
    assert_eq!(first.len(), 4);
    assert!(s.dispatch(0.0).is_empty());
    assert_eq!(s.in_flight(), 4);
    succeed(&mut s, 10.0, &first[0]);
    s.schedule(10.0);
    assert_eq!(s.dispatch(10.0).len(), 1);
    assert_eq!(s.in_flight(), 4);
}

#[test]
fn no_dispatch_at_or_after_deadline() {
    let exp = experiment(2, 100.0, Strategy::Cost, 100.0, 1e9);
    let mut s = state(&exp, vec![resource("a", 1, 10.0, 1.0)]);
    s.schedule(0.0);
    assert!(s.dispatch(s.deadline).is_empty());
}

#[test]
fn singleton_resource_same_plan_for_all_strategies() {
    for strategy in Strategy::ALL {
        let exp = experiment(6, 100.0, strategy, 1000.0, 1e9);
        let mut s = state(&exp, vec![resource("a", 2, 10.0, 3.0)]);
        s.schedule(0.0);
        assert_eq!(planned(&s), vec![6], "{strategy}");
    }
}

#[test]
fn budget_below_cheapest_job_plans_nothing() {
    for strategy in Strategy::ALL {
        // every job costs 10 on the only resource
        let exp = experiment(3, 100.0, strategy, 1000.0, 9.0);
        let mut s = state(&exp, vec![resource("a", 1, 10.0, 1.0)]);
        s.schedule(0.0);
        assert_eq!(planned(&s), vec![0], "{strategy}");
        assert!(s.finished());
    }
}

#[test]
fn cost_strategy_fills_cheapest_first() {
    // cheap: 1 PE at 10 MIPS, 10 time units per job; deadline fits 3
    let exp = experiment(5, 100.0, Strategy::Cost, 30.0, 1e9);
    let mut s = state(
        &exp,
        vec![resource("dear", 1, 10.0, 5.0), resource("cheap", 1, 10.0, 1.0)],
    );
    s.schedule(0.0);
    assert_eq!(planned(&s), vec![2, 3]);
}

#[test]
fn cost_time_splits_identical_resources() {
    let exp = experiment(2, 100.0, Strategy::CostTime, 1000.0, 1e9);
    let mut s = state(
        &exp,
        vec![resource("a", 1, 10.0, 1.0), resource("b", 1, 10.0, 1.0)],
    );
    s.schedule(0.0);
    assert_eq!(planned(&s), vec![1, 1]);
    // the cost strategy instead packs the first one, deadline permitting
    let exp = experiment(2, 100.0, Strategy::Cost, 1000.0, 1e9);
    let mut s = state(
        &exp,
        vec![resource("a", 1, 10.0, 1.0), resource("b", 1, 10.0, 1.0)],
    );
    s.schedule(0.0);
    assert_eq!(planned(&s), vec![2, 0]);
}

#[test]
fn time_strategy_balances_by_completion_time() {
    // fast finishes a job in 5, slow in 10: ECT balancing gives 2:1
    let exp = experiment(9, 100.0, Strategy::Time, 1000.0, 1e9);
    let mut s = state(
        &exp,
        vec![resource("fast", 1, 20.0, 1.0), resource("slow", 1, 10.0, 1.0)],
    );
    s.schedule(0.0);
    assert_eq!(planned(&s), vec![6, 3]);
}

#[test]
fn conservative_balances_within_budget() {
    let exp = experiment(9, 100.0, Strategy::ConservativeTime, 1000.0, 1e9);
    let mut s = state(
        &exp,
        vec![resource("fast", 1, 20.0, 1.0), resource("slow", 1, 10.0, 1.0)],
    );
    s.schedule(0.0);
    assert_eq!(planned(&s), vec![6, 3]);
}

#[test]
fn deadline_limits_time_strategy() {
    // one 10-unit slot with deadline 25 fits two jobs
    let exp = experiment(4, 100.0, Strategy::Time, 25.0, 1e9);
    let mut s = state(&exp, vec![resource("a", 1, 10.0, 1.0)]);
    s.schedule(0.0);
    assert_eq!(planned(&s), vec![2]);
}

#[test]
fn failure_releases_plan_and_retries_once() {
    let exp = experiment(3, 100.0, Strategy::Cost, 1000.0, 1e9);
    let mut s = state(
        &exp,
        vec![resource("a", 1, 10.0, 1.0), resource("b", 1, 10.0, 2.0)],
    );
    s.schedule(0.0);
    let d = s.dispatch(0.0);
    assert_eq!(d.len(), 1);
    let mut g = d[0].gridlet.clone();
    g.status = GridletStatus::Failed;
    s.on_return(1.0, g);
    assert!(!s.resources[0].alive);
    assert!(s.job_states().all(|j| j == JobState::Unassigned));
    s.schedule(1.0);
    assert_eq!(planned(&s), vec![0, 3]);
}

#[test]
fn committed_tracks_in_flight_prices() {
    let exp = experiment(4, 100.0, Strategy::Cost, 1000.0, 1e9);
    let mut s = state(&exp, vec![resource("a", 2, 10.0, 3.0)]);
    s.schedule(0.0);
    assert_eq!(s.committed_with_plan(), 120.0);
    let d = s.dispatch(0.0);
    assert_eq!(s.committed(), 60.0);
    succeed(&mut s, 10.0, &d[0]);
    assert_eq!(s.spend(), 30.0);
    assert_eq!(s.committed(), 60.0);
}

#[test]
fn runs_to_completion_with_exact_service() {
    // Drive the state with a perfect resource model: every job takes
    // len / pe_mips once dispatched.
    let exp = experiment(7, 100.0, Strategy::Time, 1000.0, 1e9);
    let mut s = state(&exp, vec![resource("a", 2, 10.0, 1.0)]);
    let mut now = 0.0;
    let mut running: Vec<(f64, Dispatch)> = Vec::new();
    loop {
        s.schedule(now);
        for d in s.dispatch(now) {
            running.push((now + 10.0, d));
        }
        if s.finished() {
            break;
        }
        running.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (t, d) = running.remove(0);
        now = t;
        succeed(&mut s, now, &d);
    }
    assert_eq!(s.completed(), 7);
    assert_eq!(now, 40.0);
    assert_eq!(s.spend(), 70.0);
}
