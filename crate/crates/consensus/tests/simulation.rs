use std::collections::BTreeSet;
use std::sync::Arc;

use genquorum_consensus::*;
use genquorum_core::*;

fn counting(n: usize, f: usize) -> Arc<dyn QuorumChecker> {
    Arc::new(Counting::new(Universe::numbered("r", n).unwrap(), f))
}

fn config_path(name: &str) -> String {
    format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn load(name: &str) -> Experiment {
    parse_experiment(&std::fs::read(config_path(name)).unwrap()).unwrap()
}

#[test]
fn happy_path_every_replica_decides() {
    for variant in [Variant::Basic, Variant::Chained] {
        let mut cfg = SimConfig::new(variant, counting(4, 1));
        cfg.horizon = 1000;
        let t = run_simulation(&cfg);
        for r in 0..4 {
            assert!(!t.decisions[r].is_empty(), "{variant} replica {r}");
        }
        assert!(check_safety(&t).is_ok());
        assert!(matches!(check_liveness(&t, &LivenessParams::new(variant, 10)), LivenessVerdict::Ok { .. }));
        assert!(check_invariants(&t).is_empty());
        assert!(t.truncated);
    }
}

#[test]
fn basic_decides_the_first_proposal_in_view_one() {
    let t = run_simulation(&SimConfig::new(Variant::Basic, counting(4, 1)));
    let proposal = t
        .events
        .iter()
        .find(|e| e.kind == EventKind::Propose && e.view == 1)
        .expect("leader of view 1 proposes");
    assert_eq!(proposal.replica, 1);
    for r in 0..4 {
        let first = &t.decisions[r][0];
        assert_eq!(first.node.id.short(), *proposal.node.as_ref().unwrap());
        assert!(first.time <= proposal.time + 7 * t.delta);
        let decide = t
            .events
            .iter()
            .find(|e| e.replica == r && e.kind == EventKind::Decide)
            .unwrap();
        assert_eq!(decide.field("qc_view"), Some("1"));
    }
    let phases: Vec<&str> = t
        .events
        .iter()
        .filter(|e| e.replica == 0 && e.kind == EventKind::Vote && e.view == 1)
        .map(|e| e.detail.as_str())
        .collect();
    assert_eq!(phases, ["prepare", "pre-commit", "commit"]);
}

#[test]
fn chained_commits_on_the_third_descendant() {
    let t = run_simulation(&SimConfig::new(Variant::Chained, counting(4, 1)));
    for r in 0..4 {
        let first = &t.decisions[r][0];
        assert_eq!(first.node.height, 1);
        assert_eq!(first.view, 4, "replica {r} commits while handling the view-4 proposal");
        let accepted_4 = t
            .events
            .iter()
            .find(|e| e.replica == r && e.kind == EventKind::Accept && e.view == 4)
            .unwrap();
        assert_eq!(accepted_4.time, first.time);
    }
}

#[test]
fn identical_seeds_give_identical_traces() {
    let mut cfg = SimConfig::new(Variant::Chained, counting(4, 1)).with_fault(2, Behavior::VoteStuff);
    cfg.gst = 300;
    cfg.horizon = 1500;
    let a = run_simulation(&cfg.clone().with_seed(9)).to_text();
    let b = run_simulation(&cfg.clone().with_seed(9)).to_text();
    assert_eq!(a, b);
    assert_ne!(a, run_simulation(&cfg.with_seed(10)).to_text());
}

#[test]
fn trace_lines_parse_back() {
    let mut cfg = SimConfig::new(Variant::Basic, counting(4, 1));
    cfg.horizon = 300;
    let t = run_simulation(&cfg);
    let text = t.to_text();
    assert!(text.starts_with("# n=4 faulty=- gst=0 delta=10"));
    let events = trace::parse_events(&text).unwrap();
    assert_eq!(events, t.events);
    for w in events.windows(2) {
        assert!(w[0].time <= w[1].time);
    }
}

#[test]
fn post_gst_delays_are_bounded() {
    let mut cfg = SimConfig::new(Variant::Basic, counting(4, 1));
    cfg.gst = 500;
    cfg.horizon = 2000;
    let t = run_simulation(&cfg);
    let sends: Vec<_> = t.events.iter().filter(|e| e.kind == EventKind::Propose && e.time >= 500).collect();
    assert!(!sends.is_empty());
    for p in sends {
        for r in 0..4 {
            let got = t
                .events
                .iter()
                .find(|e| e.replica == r && e.kind == EventKind::Accept && e.view == p.view && e.detail.ends_with("prepare"));
            if let Some(got) = got {
                assert!(got.time <= p.time + t.delta);
            }
        }
    }
}

#[test]
fn mute_leader_is_replaced_after_a_view_change() {
    let mut cfg = SimConfig::new(Variant::Basic, counting(4, 1)).with_fault(1, Behavior::MuteLeader);
    cfg.horizon = 1500;
    let t = run_simulation(&cfg);
    let timeout = t.events.iter().find(|e| e.replica == 0 && e.kind == EventKind::Timeout).unwrap();
    assert_eq!(timeout.view, 1);
    let decided = &t.decisions[0][0];
    assert!(decided.view >= 2 && decided.time > timeout.time);
    assert!(check_safety(&t).is_ok());
}

#[test]
fn every_behavior_is_safe_within_a_fail_prone_set() {
    let behaviors = [
        Behavior::Equivocate,
        Behavior::VoteStuff,
        Behavior::InvalidQc,
        Behavior::Crash { at: 40 },
        Behavior::MuteLeader,
    ];
    for variant in [Variant::Basic, Variant::Chained] {
        for b in behaviors {
            for seed in 0..10 {
                let mut cfg = SimConfig::new(variant, counting(4, 1)).with_fault(1, b).with_seed(seed);
                cfg.gst = 200;
                cfg.horizon = 2500;
                let t = run_simulation(&cfg);
                let report = evaluate(&cfg, &t, &LivenessParams::new(variant, cfg.delta));
                assert!(!report.is_violation(), "{variant} {b} seed {seed}: {report:?}");
                assert!(t.metrics.decisions > 0);
            }
        }
    }
}

#[test]
fn invalid_certificates_change_no_correct_state() {
    for variant in [Variant::Basic, Variant::Chained] {
        let mut cfg = SimConfig::new(variant, counting(4, 1)).with_fault(3, Behavior::InvalidQc);
        cfg.horizon = 2000;
        let t = run_simulation(&cfg);
        assert!(accepted_from(&t, &BTreeSet::from([3])).is_empty());
        let rejected = t
            .correct_events()
            .filter(|e| e.kind == EventKind::Reject && e.field("from") == Some("3"))
            .count();
        assert!(rejected > 0, "{variant}");
    }
}

#[test]
fn stuffed_votes_never_double_count() {
    let mut cfg = SimConfig::new(Variant::Chained, counting(4, 1)).with_fault(0, Behavior::VoteStuff);
    cfg.horizon = 2000;
    let t = run_simulation(&cfg);
    let ring = KeyRing::new(4, cfg.seed);
    let mut checked = 0;
    for d in t.correct().flat_map(|r| t.decisions[r].iter()) {
        if let Some(qc) = &d.node.justify {
            let signers: BTreeSet<_> = qc.sigs.iter().map(|s| s.signer).collect();
            assert_eq!(signers.len(), qc.sigs.len());
            assert!(qc_verify(qc, cfg.checker.as_ref(), &ring));
            checked += 1;
        }
    }
    assert!(checked > 10);
    assert!(t.correct_events().any(|e| e.kind == EventKind::Reject && e.detail.contains("bad-signature")));
}

#[test]
fn over_corruption_produces_conflicting_decisions() {
    let exp = load("sim_over_corruption.json");
    let reports = run_experiment(&exp);
    assert!(reports.iter().any(|r| r.safety.is_some()));
}

#[test]
fn chained_premise_is_never_met_with_a_faulty_replica_among_four() {
    let mut cfg = SimConfig::new(Variant::Chained, counting(4, 1)).with_fault(2, Behavior::Crash { at: 0 });
    cfg.horizon = 3000;
    let t = run_simulation(&cfg);
    assert!(matches!(
        check_liveness(&t, &LivenessParams::new(Variant::Chained, 10)),
        LivenessVerdict::PremiseUnmet { .. }
    ));
    let mut all = SimConfig::new(Variant::Basic, counting(4, 1));
    for r in 0..4 {
        all.faults.insert(r, Behavior::MuteLeader);
    }
    let t = run_simulation(&all);
    assert!(matches!(check_liveness(&t, &LivenessParams::new(Variant::Basic, 10)), LivenessVerdict::PremiseUnmet { .. }));
}

#[test]
fn gst_crossing_runs_are_live() {
    let exp = load("sim_gst_crossing.json");
    let mut windows = 0;
    for r in run_experiment(&exp) {
        assert!(!r.is_violation(), "{r:?}");
        if let LivenessVerdict::Ok { windows: w } = r.liveness {
            windows += w;
        }
    }
    assert!(windows > 0);
    let mut basic = exp.clone();
    basic.sim.variant = Variant::Basic;
    basic.liveness = LivenessParams::new(Variant::Basic, 10);
    for r in run_experiment(&basic) {
        assert!(!r.is_violation(), "{r:?}");
        assert!(matches!(r.liveness, LivenessVerdict::Ok { .. }));
    }
}

#[test]
fn bundled_happy_path() {
    let exp = load("sim_happy.json");
    let reports = run_experiment(&exp);
    assert_eq!(reports.len(), 1);
    assert!(!reports[0].is_violation());
    assert!(reports[0].metrics.decisions >= 4);
}

#[test]
fn two_layer_equivocation_sample() {
    let mut exp = load("sim_2l1c_equivocate.json");
    assert_eq!(exp.sim.n(), 16);
    assert_eq!(exp.sim.faults.len(), 7);
    let f = layered_2l1c(4);
    let fp = FailProneSystem::canonical_of(&enumerate_minimal_quorums(&Mbf::new(&f).unwrap(), 24).unwrap());
    let b: PartySet = exp.sim.faulty().into_iter().collect();
    assert!(fp.covers(b));
    exp.seeds = 5;
    for r in run_experiment(&exp) {
        assert!(!r.is_violation(), "{r:?}");
    }
}
