//! End-to-end behavior of the explore pipeline and the scripted protocols.

use causebound::bounds::{lp_bounds, Query};
use causebound::canon::simulate_canonical;
use causebound::confset::{build_epsilon_net, confidence_box};
use causebound::decompose::{explore, ExploreConfig, GammaSpec, MoveKind, SolverPath};
use causebound::graph::{Admg, Node};
use causebound::harness::{run_experiment, scm1_fixture, scm2_fixture, ExperimentSpec, Seeds};

fn repo_root() -> std::path::PathBuf {
    std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("..").join("..")
}

#[test]
fn markovian_graph_returns_when_threshold_is_distant() {
    let (g, space, scm) = scm2_fixture();
    let data = simulate_canonical(&g, &space, &scm, &[], 100_000, 7);
    let query = Query::Do {
        treatment: "X".into(),
        t_value: 1,
        outcome: "Y".into(),
        y_value: 1,
    };
    let config = ExploreConfig {
        net_samples: 120,
        seed: 3,
        gamma: GammaSpec::Fixed(0.2),
        ..ExploreConfig::default()
    };
    let out = explore(&data, &g, &query, &config).unwrap();
    let dec = &out.decompositions[1];
    // Identified query: the non-id gap is numerically zero even though the
    // sampled net spreads the point estimates.
    assert!(dec.inner_width() <= 2e-3, "inner width {}", dec.inner_width());
    assert!(dec.u_lo - dec.l_hi <= 2e-3);
    // The fixed threshold 0.2 sits far below every candidate value
    // (the interventional rate is near 0.54), so the verdict is conclusive.
    assert!(matches!(out.decision.kind, MoveKind::Return { .. }), "{:?}", out.decision);
}

#[test]
fn confounded_bow_observes_when_threshold_sits_inside_every_candidate() {
    let (g, space, scm) = causebound::harness::bow_fixture();
    let data = simulate_canonical(&g, &space, &scm, &[], 3000, 17);
    let query = Query::Do {
        treatment: "X".into(),
        t_value: 1,
        outcome: "Y".into(),
        y_value: 1,
    };
    let config = ExploreConfig {
        net_samples: 150,
        seed: 9,
        gamma: GammaSpec::Fixed(0.6),
        ..ExploreConfig::default()
    };
    let out = explore(&data, &g, &query, &config).unwrap();
    let dec = &out.decompositions[1];
    let (l_hi, u_lo) = dec.inner.expect("confounding keeps the inner region wide");
    assert!(l_hi < 0.6 && 0.6 < u_lo, "inner [{l_hi}, {u_lo}] must contain 0.6");
    assert_eq!(out.decision.kind, MoveKind::Observe);
}

#[test]
fn appending_an_instrument_shrinks_mean_candidate_width() {
    let (g_full, space, scm) = scm1_fixture();
    let full = simulate_canonical(&g_full, &space, &scm, &[], 2000, 23);
    let bow = Admg::new(
        vec![
            Node { name: "X".into(), cardinality: 2 },
            Node { name: "Y".into(), cardinality: 2 },
        ],
        &[("X", "Y")],
        &[("X", "Y")],
    )
    .unwrap();
    let iv1 = Admg::new(
        vec![
            Node { name: "I1".into(), cardinality: 2 },
            Node { name: "X".into(), cardinality: 2 },
            Node { name: "Y".into(), cardinality: 2 },
        ],
        &[("I1", "X"), ("X", "Y")],
        &[("X", "Y")],
    )
    .unwrap();
    let query = Query::Ate { treatment: "X".into(), outcome: "Y".into() };

    let mean_width = |g: &Admg, names: &[&str]| -> f64 {
        let data = full.project(names).unwrap();
        let cbox = confidence_box(&data, g, 0.05).unwrap();
        let net = build_epsilon_net(&cbox, 0.01, 120, 31).unwrap();
        let mut total = 0.0;
        let mut count = 0usize;
        for cand in &net.candidates {
            if let Ok(pair) = lp_bounds(cand, g, &query) {
                total += pair.width();
                count += 1;
            }
        }
        assert!(count > 50, "too few feasible candidates ({count})");
        total / count as f64
    };

    let width_bow = mean_width(&bow, &["X", "Y"]);
    let width_iv = mean_width(&iv1, &["I1", "X", "Y"]);
    assert!(
        width_iv < width_bow,
        "instrument failed to tighten the mean candidate width: {width_iv} vs {width_bow}"
    );
}

#[test]
fn markovian_schedule_outer_band_shrinks_with_samples() {
    let root = repo_root();
    let spec = ExperimentSpec {
        name: "markovian-schedule".into(),
        graph: "specs/two_confounder.json".into(),
        scm: Some("specs/scm2.json".into()),
        schedule: vec![1000, 3000],
        setups: vec![],
        query: Query::Ate { treatment: "X".into(), outcome: "Y".into() },
        solver: SolverPath::Lp,
        alpha: 0.05,
        eps_s: 0.01,
        net_samples: 150,
        seeds: Seeds { scm: 1, data: 51, net: 61 },
        out_dir: String::new(),
        nested_lattice: false,
    };
    let bundle = run_experiment(&spec, &root).unwrap();
    assert_eq!(bundle.records.len(), 2);
    let small = &bundle.records[0];
    let large = &bundle.records[1];
    assert!(large.outer_width < small.outer_width, "outer band failed to shrink");
    // No latent confounding: the gap between the lowest upper and highest
    // lower bound stays at numerical noise for both sample sizes.
    for r in &bundle.records {
        assert!(r.u_lo - r.l_hi <= 1e-6, "{}: unexpected non-id gap", r.n);
    }
}

#[test]
fn infeasible_candidates_are_counted_not_fatal() {
    // A wide box around sparse instrument data produces candidates that
    // violate cross-context consistency; they are skipped and reported.
    let (g, space, scm) = scm1_fixture();
    let full = simulate_canonical(&g, &space, &scm, &[], 150, 41);
    let iv1 = Admg::new(
        vec![
            Node { name: "I1".into(), cardinality: 2 },
            Node { name: "X".into(), cardinality: 2 },
            Node { name: "Y".into(), cardinality: 2 },
        ],
        &[("I1", "X"), ("X", "Y")],
        &[("X", "Y")],
    )
    .unwrap();
    let data = full.project(&["I1", "X", "Y"]).unwrap();
    let query = Query::Ate { treatment: "X".into(), outcome: "Y".into() };
    let config = ExploreConfig { net_samples: 150, seed: 13, ..ExploreConfig::default() };
    let out = explore(&data, &iv1, &query, &config).unwrap();
    let action = &out.report.actions[0];
    assert!(action.candidates > 0);
    // The report carries both the screen rejections and per-action skips.
    assert_eq!(
        out.report.net_size,
        action.candidates + action.skipped + out.report.net_rejected
    );
}

#[test]
fn both_solver_path_reports_the_gradient_gap() {
    let (g, space, scm) = causebound::harness::bow_fixture();
    let data = simulate_canonical(&g, &space, &scm, &[], 1500, 19);
    let query = Query::Do {
        treatment: "X".into(),
        t_value: 1,
        outcome: "Y".into(),
        y_value: 1,
    };
    let out = explore(
        &data,
        &g,
        &query,
        &ExploreConfig {
            net_samples: 5,
            seed: 2,
            solver: SolverPath::Both,
            trainer_epochs: 6000,
            trainer_step: 0.1,
            ..ExploreConfig::default()
        },
    )
    .unwrap();
    for action in &out.report.actions {
        let gap = action.gradient_gap.expect("both path records the cross-check");
        assert!(gap < 0.1, "gradient strays {gap} from the exact bounds");
        // Aggregation stays on the exact path.
        assert_eq!(action.method, causebound::bounds::BoundMethod::Lp);
    }
}

#[test]
fn epsilon_net_dump_carries_metadata() {
    let (g, space, scm) = causebound::harness::bow_fixture();
    let data = simulate_canonical(&g, &space, &scm, &[], 800, 3);
    let cbox = confidence_box(&data, &g, 0.05).unwrap();
    let net = build_epsilon_net(&cbox, 0.02, 25, 77).unwrap();
    let dump: serde_json::Value = serde_json::from_str(&net.to_json()).unwrap();
    assert_eq!(dump["alpha"], 0.05);
    assert_eq!(dump["eps_s"], 0.02);
    assert_eq!(dump["seed"], 77);
    assert!(dump["candidates"].as_array().unwrap().len() <= 25);
    assert_eq!(dump["rejected_count"], 0);
}

#[test]
fn gradient_solver_path_agrees_with_lp_on_the_pipeline() {
    // On the bow the profile class is saturated (every two-variable joint
    // is representable), so no candidate can fail the trainer and the two
    // solver paths must land on the same quantities.
    let (g, space, scm) = causebound::harness::bow_fixture();
    let data = simulate_canonical(&g, &space, &scm, &[], 2000, 29);
    let query = Query::Do {
        treatment: "X".into(),
        t_value: 1,
        outcome: "Y".into(),
        y_value: 1,
    };
    let lp_out = explore(
        &data,
        &g,
        &query,
        &ExploreConfig { net_samples: 8, seed: 11, ..ExploreConfig::default() },
    )
    .unwrap();
    let grad_out = explore(
        &data,
        &g,
        &query,
        &ExploreConfig {
            net_samples: 8,
            seed: 11,
            solver: SolverPath::Gradient,
            trainer_epochs: 6000,
            trainer_step: 0.1,
            ..ExploreConfig::default()
        },
    )
    .unwrap();
    let (a, b) = (&lp_out.decompositions[1], &grad_out.decompositions[1]);
    assert_eq!(a.candidate_count, b.candidate_count, "no candidate may be skipped on the bow");
    assert!((a.l_lo - b.l_lo).abs() < 0.05, "{} vs {}", a.l_lo, b.l_lo);
    assert!((a.u_hi - b.u_hi).abs() < 0.05, "{} vs {}", a.u_hi, b.u_hi);
    assert!((a.l_hi - b.l_hi).abs() < 0.05, "{} vs {}", a.l_hi, b.l_hi);
    assert!((a.u_lo - b.u_lo).abs() < 0.05, "{} vs {}", a.u_lo, b.u_lo);
}
