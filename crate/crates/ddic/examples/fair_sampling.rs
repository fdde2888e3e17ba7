//! Detection loss, weak fair sampling, and why postselection is safe.
//!
//! Postselecting on detector clicks is notorious for opening the detection
//! loophole. The weak fair-sampling condition — losses may depend on the
//! arriving state but not on the setting — is exactly what makes it safe:
//! the lossy measurement factors into a local filter followed by an ideal
//! measurement, so postselected statistics are honest statistics of the
//! filtered state, and local filtering cannot create entanglement between
//! groups.

use ddic::bell::{default_observables, BellInequality, BranchParity};
use ddic::covering::{biseparable_bound, Covering};
use ddic::fairsampling::{
    check_weak_fair_sampling, filter_decomposition, filtered_state, postselection_equivalence,
    LossyPovm,
};
use ddic::protocol::{run_ddic, MeasurementStrategy};
use ddic::qcore::State;
use ddic::states;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let chsh = BellInequality::chsh();
    let pair = default_observables(&chsh, BranchParity::Even).expect("observables");

    // uniform efficiency: weak fair sampling holds trivially
    let uniform = LossyPovm::from_observables_with_loss(&pair.a, 0.7).expect("povm");
    let e0 = check_weak_fair_sampling(&uniform).expect("setting-independent loss");
    println!("uniform 70% efficiency: no-click element has trace {:.4}", e0.trace().re);

    // outcome-dependent efficiency: the no-click element inherits the
    // setting dependence of the projectors
    let skewed = LossyPovm::outcome_dependent_loss(&pair.b, 0.95, 0.55).expect("povm");
    match check_weak_fair_sampling(&skewed) {
        Err(e) => println!("skewed efficiencies rejected: {e}"),
        Ok(_) => panic!("outcome-dependent loss must violate weak fair sampling"),
    }

    // random lossy measurements obeying the condition: postselected
    // statistics equal ideal statistics on the filtered state, exactly
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let reg = ddic::qcore::Register::qubits(2).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let povm_a = LossyPovm::random_weak_fs(2, 2, 0.5, &mut rng).expect("random povm");
        let povm_b = LossyPovm::random_weak_fs(2, 2, 0.5, &mut rng).expect("random povm");
        let state = State::Mixed(states::random_mixed(&reg, &mut rng));
        let dev = postselection_equivalence(&state, &povm_a, &povm_b).expect("equivalence");
        worst = worst.max(dev);
    }
    println!("postselection equivalence over 20 random pairs: worst deviation {worst:.3e}");
    assert!(worst < 1e-10);

    // local filters cannot make a biseparable state certify
    let covering = Covering::minimal(3).unwrap();
    let bound = biseparable_bound(&covering, &chsh);
    let mut filtered_runs = 0;
    for _ in 0..5 {
        let rho = states::random_biseparable(3, 2, &mut rng).expect("biseparable state");
        let filters: Vec<_> = (0..3)
            .map(|_| {
                let povm = LossyPovm::random_weak_fs(2, 2, 0.4, &mut rng).unwrap();
                filter_decomposition(&povm).unwrap().filter
            })
            .collect();
        let (filtered, p_success) =
            filtered_state(&State::Mixed(rho), &filters).expect("filtering");
        let cert = run_ddic(
            &State::Mixed(filtered),
            &covering,
            &chsh,
            &MeasurementStrategy::Auto,
        )
        .expect("protocol");
        println!(
            "filtered biseparable state (success {:.3}): beta_bar = {:.6} <= bound {:.6}",
            p_success, cert.beta_bar, bound
        );
        assert!(cert.beta_bar <= bound + 1e-8);
        assert!(!cert.certified);
        filtered_runs += 1;
    }
    println!("{filtered_runs} filtered biseparable states, none certified -- ok");
}
