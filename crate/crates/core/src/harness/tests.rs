use super::*;
use crate::broker::Strategy;
use crate::grid::run_scenario;
use crate::resource::AllocationPolicy;

fn tiny() -> SweepConfig {
    SweepConfig::parse(
        r#"
seeds = [7]
[application]
jobs = 12
base_mi = 1000.0
variation = 0.1
[users]
strategy = ["cost"]
deadline = [200.0]
budget = { from = 100.0, to = 300.0, step = 100.0 }
[[resources]]
name = "A"
pes = 2
mips = 100.0
price = 1.0
[[resources]]
name = "B"
pes = 1
mips = 200.0
price = 3.0
"#,
    )
    .unwrap()
}

#[test]
fn wwg_preset_resources() {
    let cfg = preset("wwg-table-6.2").unwrap();
    assert_eq!(cfg.resources.len(), 11);
    let r8 = cfg.resources.iter().find(|r| r.name == "R8").unwrap();
    assert_eq!((r8.price, r8.mips, r8.pes), (1.0, 380.0, 2));
    let r7 = cfg.resources.iter().find(|r| r.name == "R7").unwrap();
    assert_eq!(r7.policy, AllocationPolicy::SpaceShared);
    assert_eq!(cfg.seeds.len(), 5);
    assert_eq!(cfg.application_spec().jobs, 200);
}

#[test]
fn cost_time_preset_lowers_r4() {
    let cfg = preset("wwg-table-6.3").unwrap();
    let price = |n: &str| cfg.resources.iter().find(|r| r.name == n).unwrap().price;
    assert_eq!(price("R4"), 1.0);
    assert_eq!(price("R8"), 1.0);
    assert_eq!(cfg.users.strategy, vec![Strategy::Cost, Strategy::CostTime]);
}

#[test]
fn test_queue_preset() {
    let cfg = preset("testqueues-4.6").unwrap();
    let prices: Vec<f64> = cfg.resources.iter().map(|r| r.price).collect();
    let expected: Vec<f64> = (0..10).map(|i| 10.0 + 2.0 * i as f64).collect();
    assert_eq!(prices, expected);
    assert!(cfg.resources.iter().all(|r| r.pes == 1 && r.mips == 100.0));
}

#[test]
fn unknown_preset() {
    assert!(matches!(preset("nope"), Err(HarnessError::UnknownPreset(_))));
}

#[test]
fn missing_resources_is_schema_error() {
    let text = preset_text("testqueues-4.6").unwrap();
    let cut = &text[..text.find("[[resources]]").unwrap()];
    let err = SweepConfig::parse(cut).unwrap_err();
    assert!(err.to_string().contains("resources"), "{err}");
}

#[test]
fn unknown_field_names_path() {
    let text = preset_text("testqueues-4.6").unwrap().replace("base_mi", "base_mips");
    let err = SweepConfig::parse(&text).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("base_mips"), "{msg}");
}

#[test]
fn grid_arithmetic() {
    let mut cfg = preset("wwg-table-6.2").unwrap();
    assert_eq!(cfg.users.deadline.values().unwrap().len(), 8);
    assert_eq!(cfg.users.budget.values().unwrap().len(), 18);
    cfg.seeds = vec![1];
    assert_eq!(cells(&cfg).unwrap().len(), 144);
    let g = Grid::Range {
        from: 0.0,
        to: 1.0,
        step: 0.1,
    };
    assert_eq!(g.values().unwrap().len(), 11);
    assert!(Grid::List(vec![]).values().is_err());
    assert!(Grid::Range {
        from: 1.0,
        to: 0.0,
        step: 1.0
    }
    .values()
    .is_err());
}

#[test]
fn single_cell_matches_direct_run() {
    let mut cfg = tiny();
    cfg.users.budget = Grid::List(vec![250.0]);
    let sweep = run_sweep(&cfg, Some(1)).unwrap();
    assert_eq!(sweep.cells.len(), 1);
    let key = sweep.cells[0].key;
    let direct = run_scenario(&cell_scenario(&cfg, &key).unwrap()).unwrap();
    let data = sweep.cells[0].outcome.as_ref().unwrap();
    assert_eq!(data.trace_hash, direct.trace_hash);
    assert_eq!(data.results[0].total_spend, direct.results[0].total_spend);
}

#[test]
fn parallelism_does_not_change_rows() {
    let mut cfg = tiny();
    cfg.seeds = vec![1, 2, 3];
    cfg.users.count = vec![1, 3];
    let a = summary_table(&run_sweep(&cfg, Some(1)).unwrap());
    let b = summary_table(&run_sweep(&cfg, Some(4)).unwrap());
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 1 + 3 * 3 * (1 + 3));
}

#[test]
fn report_files_and_columns() {
    let cfg = tiny();
    let sweep = run_sweep(&cfg, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = emit_report(&sweep, dir.path()).unwrap();
    assert_eq!(written.len(), 1 + sweep.cells.len());
    let summary = std::fs::read_to_string(dir.path().join("summary.tsv")).unwrap();
    for line in summary.lines() {
        assert_eq!(line.split('\t').count(), 8, "{line}");
    }
    assert!(!summary.contains('\r'));
    let trace = std::fs::read_to_string(dir.path().join("traces").join(trace_file_name(0))).unwrap();
    assert!(trace.lines().count() > 1);
}

#[test]
fn failed_cells_are_recorded_and_sweep_continues() {
    let mut cfg = tiny();
    // a negative deadline factor is rejected per cell
    cfg.users.deadline_kind = ConstraintKind::Factor;
    cfg.users.deadline = Grid::List(vec![-0.5, 0.5]);
    let sweep = run_sweep(&cfg, None).unwrap();
    assert_eq!(sweep.failures().count(), 3);
    assert_eq!(sweep.cells.iter().filter(|c| c.outcome.is_ok()).count(), 3);
    let dir = tempfile::tempdir().unwrap();
    emit_report(&sweep, dir.path()).unwrap();
    let f = std::fs::read_to_string(dir.path().join("failures.tsv")).unwrap();
    assert_eq!(f.lines().count(), 4);
}

#[test]
fn plan_sized_application() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("sweep.plan"),
        "parameter x integer range from 1 to 6 step 1;\nparameter y text select oneof \"a\" \"b\";\n",
    )
    .unwrap();
    let text = preset_text("testqueues-4.6")
        .unwrap()
        .replace("jobs = 100", "plan = \"sweep.plan\"");
    let path = dir.path().join("cfg.toml");
    std::fs::write(&path, text).unwrap();
    let cfg = load_config(&path).unwrap();
    // a select parameter contributes only its default unless overridden
    assert_eq!(cfg.application_spec().jobs, 6);
}

#[test]
fn staggered_users_start_apart() {
    let mut cfg = tiny();
    cfg.users.count = vec![3];
    cfg.stagger = 50.0;
    let key = cells(&cfg).unwrap()[0];
    let s = cell_scenario(&cfg, &key).unwrap();
    let starts: Vec<f64> = s.users.iter().map(|u| u.start_time).collect();
    assert!(starts.iter().all(|t| (0.0..50.0).contains(t)));
    assert!(starts[0] != starts[1]);
    let sweep = run_sweep(&cfg, None).unwrap();
    assert!(sweep.all_ok());
}
