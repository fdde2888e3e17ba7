//! Acceptance gate: one test per release criterion, each printing a single
//! PASS line with the measured values. Tolerances are part of the
//! contract — loosening them is an interface change, not a test fix.

use std::time::Instant;

use ddic::bell::{correlation_matrix, optimal_chsh, BellInequality};
use ddic::covering::{biseparable_bound, optimality_audit, Covering};
use ddic::fairsampling::{filtered_state, postselection_equivalence, LossyPovm};
use ddic::protocol::{
    gme_weight, ingest_counts, plans_for_model, run_ddic, synthesize_counts,
    MeasurementStrategy,
};
use ddic::qcore::{spectral_norm_hermitian, CMatrix, Register, State, C64};
use ddic::states;
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SQRT8: f64 = 2.0 * std::f64::consts::SQRT_2;

#[test]
fn criterion_01_bound_regression() {
    let t0 = Instant::now();
    let chsh = BellInequality::chsh();
    let minimal4 = biseparable_bound(&Covering::minimal(4).unwrap(), &chsh);
    let full4 = biseparable_bound(&Covering::full(4).unwrap(), &chsh);
    assert!((minimal4 - 2.552285).abs() < 1e-5);
    assert!((full4 - 2.414214).abs() < 1e-5);

    let tilted = BellInequality::tilted(15f64.to_radians()).unwrap();
    assert_eq!(tilted.local_bound(), 0.952);
    let minimal3 = biseparable_bound(&Covering::minimal(3).unwrap(), &tilted);
    let full3 = biseparable_bound(&Covering::full(3).unwrap(), &tilted);
    assert!((minimal3 - 0.976).abs() < 1e-3);
    assert!((full3 - 0.968).abs() < 1e-3);

    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "criterion 01 PASS: bounds {minimal4:.6}/{full4:.6} (chsh) and \
         {minimal3:.3}/{full3:.3} (tilted) in {elapsed:?}"
    );
}

#[test]
fn criterion_02_ideal_protocol_values() {
    let t0 = Instant::now();
    let ghz4 = State::Pure(states::ghz(4).unwrap());
    let cert = run_ddic(
        &ghz4,
        &Covering::full(4).unwrap(),
        &BellInequality::chsh(),
        &MeasurementStrategy::GhzX,
    )
    .unwrap();
    assert!((cert.beta_bar - SQRT8).abs() < 1e-9);
    assert!((cert.gme_weight.clamped - 1.0).abs() < 1e-9);
    assert!(cert.certified);

    let theta = 15f64.to_radians();
    let tilted3 = State::Pure(states::tilted_ghz(3, theta).unwrap());
    let cert_t = run_ddic(
        &tilted3,
        &Covering::minimal(3).unwrap(),
        &BellInequality::tilted(theta).unwrap(),
        &MeasurementStrategy::TiltedX,
    )
    .unwrap();
    for edge in &cert_t.edges {
        for branch in &edge.branches {
            assert!(
                (branch.score - 1.0).abs() < 1e-9,
                "edge {:?} branch {} scored {}",
                edge.edge,
                branch.label,
                branch.score
            );
        }
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!(
        "criterion 02 PASS: ghz4 beta_bar {:.12}, every tilted branch scores 1, in {elapsed:?}",
        cert.beta_bar
    );
}

#[test]
fn criterion_03_gme_weight_arithmetic() {
    let cases = [
        (2.662, 2.414, SQRT8, 0.598),
        (2.620, 2.414, SQRT8, 0.497),
        (0.987, 0.968, 1.0, 0.594),
    ];
    for (beta_bar, bound, bq, expected) in cases {
        let w = gme_weight(beta_bar, bound, bq).unwrap();
        assert!(
            (w.clamped - expected).abs() < 0.002,
            "gme({beta_bar}, {bound}, {bq}) = {} != {expected}",
            w.clamped
        );
    }
    println!("criterion 03 PASS: quoted weight arithmetic 0.598/0.497/0.594 reproduced");
}

#[test]
fn criterion_04_saturation() {
    // label-controlled cheating model on the 3-party full covering
    let covering = Covering::full(3).unwrap();
    let chsh = BellInequality::chsh();
    let bound = biseparable_bound(&covering, &chsh);
    let expected_edge = SQRT8 / 3.0 + 2.0 * 2.0 / 3.0;
    assert!((bound - expected_edge).abs() < 1e-12);

    let model = states::biseparable_adversary(&covering, &chsh).unwrap();
    let rho = State::Mixed(model.to_state().unwrap());
    let plans = plans_for_model(&model).unwrap();
    let cert = run_ddic(&rho, &covering, &chsh, &MeasurementStrategy::Plans(plans)).unwrap();
    for edge in &cert.edges {
        assert!(
            (edge.beta_e - expected_edge).abs() < 1e-9,
            "edge {:?}: {} vs {expected_edge}",
            edge.edge,
            edge.beta_e
        );
    }
    assert!((cert.beta_bar - bound).abs() < 1e-9);

    // the pair-times-singlet product state lands exactly on the bound for
    // both coverings and never above
    let product = State::Pure(states::biseparable_product(4).unwrap());
    for covering in [Covering::minimal(4).unwrap(), Covering::full(4).unwrap()] {
        let bound = biseparable_bound(&covering, &chsh);
        let cert = run_ddic(&product, &covering, &chsh, &MeasurementStrategy::Auto).unwrap();
        assert!(
            (cert.beta_bar - bound).abs() < 1e-9,
            "{:?}: {} vs bound {bound}",
            covering.family(),
            cert.beta_bar
        );
        assert!(cert.beta_bar <= bound + 1e-9);
        assert!(!cert.certified);
    }
    println!(
        "criterion 04 PASS: adversary saturates {expected_edge:.12} per edge; \
         product state sits on both N=4 bounds"
    );
}

#[test]
fn criterion_05_covering_audit() {
    let t0 = Instant::now();
    for n in 3..=7 {
        let report = optimality_audit(n).unwrap();
        assert_eq!(report.violations, 0, "n = {n}");
        let (m, e) = report.max_ratio;
        assert!(m * n <= 2 * e);
    }
    let chsh = BellInequality::chsh();
    for n in 3..=12 {
        let ring = biseparable_bound(&Covering::ring(n).unwrap(), &chsh);
        let full = biseparable_bound(&Covering::full(n).unwrap(), &chsh);
        assert_eq!(ring, full, "n = {n}: ring and full bounds must be identical");
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "criterion 05 PASS: no covering beats 2/N for N=3..7; ring == full for N=3..12; \
         {elapsed:?}"
    );
}

fn random_connected(n: usize, rng: &mut ChaCha8Rng) -> Covering {
    loop {
        let p = rng.gen_range(0.25..0.75);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        if let Ok(covering) = Covering::from_edges(n, &edges) {
            return covering;
        }
    }
}

fn seesaw_chsh(state: &State, rng: &mut ChaCha8Rng) -> f64 {
    let t = correlation_matrix(state).unwrap();
    let mut best: f64 = 0.0;
    for _ in 0..8 {
        let mut b0 =
            Vector3::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        let mut b1 =
            Vector3::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        if b0.norm() < 1e-6 || b1.norm() < 1e-6 {
            continue;
        }
        b0.normalize_mut();
        b1.normalize_mut();
        let mut score = 0.0;
        for _ in 0..200 {
            let u = t * (b0 + b1);
            let w = t * (b0 - b1);
            let a0 = if u.norm() > 1e-14 { u.normalize() } else { Vector3::x() };
            let a1 = if w.norm() > 1e-14 { w.normalize() } else { Vector3::y() };
            let p = t.transpose() * (a0 + a1);
            let q = t.transpose() * (a0 - a1);
            b0 = if p.norm() > 1e-14 { p.normalize() } else { Vector3::x() };
            b1 = if q.norm() > 1e-14 { q.normalize() } else { Vector3::y() };
            score =
                a0.dot(&(t * b0)) + a0.dot(&(t * b1)) + a1.dot(&(t * b0)) - a1.dot(&(t * b1));
        }
        best = best.max(score);
    }
    best
}

#[test]
fn criterion_06_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(2025);
    for trial in 0..200 {
        let n = rng.gen_range(3..=10);
        let covering = random_connected(n, &mut rng);
        assert_eq!(
            covering.mincut(),
            covering.mincut_by_enumeration(),
            "trial {trial}: {:?}",
            covering.edges()
        );
    }
    let reg = Register::qubits(2).unwrap();
    for trial in 0..100 {
        let state = State::Mixed(states::random_mixed(&reg, &mut rng));
        let opt = optimal_chsh(&state).unwrap();
        let oracle = seesaw_chsh(&state, &mut rng);
        assert!(
            (opt.criterion - oracle).abs() < 1e-6,
            "trial {trial}: horodecki {} vs seesaw {oracle}",
            opt.criterion
        );
    }
    assert_eq!(BellInequality::chsh().local_bound_bruteforce(), 2.0);
    println!(
        "criterion 06 PASS: mincut x200, horodecki-vs-seesaw x100, \
         brute-force chsh local bound = 2"
    );
}

fn random_filter(rng: &mut ChaCha8Rng) -> CMatrix {
    let mut k = CMatrix::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            k[(i, j)] = C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
    }
    // scale to a contraction so it is a legal filter element
    let norm = spectral_norm_hermitian(&(k.adjoint() * &k)).sqrt();
    if norm > 1e-9 {
        k *= C64::new(1.0 / norm, 0.0);
    } else {
        k = CMatrix::identity(2, 2);
    }
    k
}

#[test]
fn criterion_07_biseparable_soundness() {
    let chsh = BellInequality::chsh();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let coverings = [
        Covering::minimal(3).unwrap(),
        Covering::full(3).unwrap(),
        Covering::ring(4).unwrap(),
    ];
    for covering in &coverings {
        let n = covering.n();
        let bound = biseparable_bound(covering, &chsh);
        for trial in 0..200 {
            let components = rng.gen_range(1..=3);
            let rho = states::random_biseparable(n, components, &mut rng).unwrap();
            let cert =
                run_ddic(&State::Mixed(rho.clone()), covering, &chsh, &MeasurementStrategy::Auto)
                    .unwrap();
            assert!(
                cert.beta_bar <= bound + 1e-9,
                "{:?} trial {trial}: {} above bound {bound}",
                covering.family(),
                cert.beta_bar
            );

            // arbitrary local filtering must not create a violation either
            let filters: Vec<CMatrix> = (0..n).map(|_| random_filter(&mut rng)).collect();
            let filtered = match filtered_state(&State::Mixed(rho), &filters) {
                Ok((f, _)) => f,
                Err(_) => continue, // filter killed the state entirely
            };
            let cert = run_ddic(
                &State::Mixed(filtered),
                covering,
                &chsh,
                &MeasurementStrategy::Auto,
            )
            .unwrap();
            assert!(
                cert.beta_bar <= bound + 1e-9,
                "{:?} trial {trial} (filtered): {} above bound {bound}",
                covering.family(),
                cert.beta_bar
            );
        }
    }
    println!(
        "criterion 07 PASS: 200 random biseparable models per covering family stay \
         at or below the bound, filtered or not"
    );
}

#[test]
fn criterion_08_fair_sampling_and_visibility() {
    let mut rng = ChaCha8Rng::seed_from_u64(515);
    let reg = Register::qubits(2).unwrap();
    let mut worst: f64 = 0.0;
    for trial in 0..50 {
        let povm_a = LossyPovm::random_weak_fs(2, 2, 0.6, &mut rng).unwrap();
        let povm_b = LossyPovm::random_weak_fs(2, 2, 0.6, &mut rng).unwrap();
        let state = State::Mixed(states::random_mixed(&reg, &mut rng));
        let dev = postselection_equivalence(&state, &povm_a, &povm_b).unwrap();
        assert!(dev < 1e-10, "trial {trial}: deviation {dev}");
        worst = worst.max(dev);
    }

    let config = ddic::cli::ExperimentConfig::from_json(
        r#"{
            "parties": 4,
            "state": {"family": "ghz"},
            "covering": {"family": "full"},
            "inequality": {"family": "chsh"}
        }"#,
    )
    .unwrap();
    let report = ddic::cli::cmd_visibility(&config).unwrap();
    let v = report.payload.v_critical;
    assert!((v - 0.8536).abs() < 1e-3, "critical visibility {v}");
    println!(
        "criterion 08 PASS: postselection equivalence worst {worst:.2e} over 50 pairs; \
         v* = {v:.4}"
    );
}

#[test]
fn criterion_09_synthetic_counts_consistency() {
    let state = State::Pure(states::ghz(4).unwrap());
    let ring = Covering::ring(4).unwrap();
    let chsh = BellInequality::chsh();
    let strategy = MeasurementStrategy::GhzX;
    let exact = run_ddic(&state, &ring, &chsh, &strategy).unwrap();

    // hardware tables with error bars cannot be regenerated at a desk; what
    // can be checked is that synthetic tables of comparable size land
    // within statistics of the simulated truth
    let table = synthesize_counts(&state, &ring, &chsh, &strategy, 62_500, 17).unwrap();
    let est = ingest_counts(&table, &ring, &chsh).unwrap();
    let stats = est.stats.unwrap();
    assert_eq!(stats.total_shots, 1_000_000);
    let pull = (est.beta_bar - exact.beta_bar).abs() / stats.beta_bar_stderr;
    assert!(pull < 3.0, "estimate {} vs truth {} is {pull:.2} sigma", est.beta_bar, exact.beta_bar);

    // the table shipped with the crate reproduces its quoted certificate
    let shipped = include_str!("../data/sample_counts.csv");
    let cert = ingest_counts(shipped, &ring, &chsh).unwrap();
    assert!((cert.beta_bar - 2.662).abs() < 1e-12);
    assert!((cert.gme_weight.clamped - 0.598).abs() < 0.002);
    let shipped_stats = cert.stats.unwrap();
    assert!(shipped_stats.beta_bar_stderr > 1e-4 && shipped_stats.beta_bar_stderr < 1e-2);
    println!(
        "criterion 09 PASS: 1e6-shot synthesis within {pull:.2} sigma; shipped table gives \
         beta_bar {:.3}, weight {:.3}",
        cert.beta_bar, cert.gme_weight.clamped
    );
}

#[test]
fn criterion_10_local_bound_discrepancy_surfaced() {
    let theta = 15f64.to_radians();
    let state = State::Pure(states::tilted_ghz(3, theta).unwrap());
    let cert = run_ddic(
        &state,
        &Covering::minimal(3).unwrap(),
        &BellInequality::tilted(theta).unwrap(),
        &MeasurementStrategy::TiltedX,
    )
    .unwrap();
    let report = &cert.local_bound;
    assert_eq!(report.configured, 0.952);
    assert!((report.brute_force - 0.9954308753735367).abs() < 1e-12);
    assert!(report.distinct, "difference above 1e-6 must be flagged");
    assert!(cert.caveat.is_some(), "certificate must carry the discrepancy caveat");

    // both values appear in the serialized report
    let json = serde_json::to_string_pretty(&cert).unwrap();
    assert!(json.contains("0.952"));
    assert!(json.contains("0.99543087537353"));
    println!(
        "criterion 10 PASS: configured {:.3} vs brute force {:.6} flagged distinct",
        report.configured, report.brute_force
    );
}
