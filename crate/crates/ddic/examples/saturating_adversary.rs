//! A biseparable state that saturates the certification bound.
//!
//! The bound is tight: a cheater who knows the covering can prepare, for
//! each bipartition, a mixture component that is maximally entangled inside
//! both groups and carries classical flags telling every party which
//! component is live. Uncut edges then score the quantum bound and cut
//! edges the (deterministic) local bound, so the covering average lands
//! exactly on `bq - (mincut/|E|)(bq - bl)` — and certification, which
//! demands a strict excess, correctly refuses.

use ddic::bell::BellInequality;
use ddic::covering::{biseparable_bound, Covering};
use ddic::protocol::{plans_for_model, run_ddic, MeasurementStrategy};
use ddic::qcore::State;
use ddic::states::biseparable_adversary;

fn main() {
    let covering = Covering::full(3).expect("full covering");
    let chsh = BellInequality::chsh();
    let bound = biseparable_bound(&covering, &chsh);

    let model = biseparable_adversary(&covering, &chsh).expect("adversary model");
    println!("cheating model for the 3-party full covering:");
    for (k, comp) in model.components().iter().enumerate() {
        println!(
            "  component {k}: weight {:.4}, groups {:?} | {:?}",
            comp.weight,
            comp.group_a,
            comp.group_b
        );
    }

    // the model's exact expectation saturates the bound edge by edge
    for &edge in covering.edges() {
        let cut = model.cut_fraction(edge);
        let score = model.expected_edge_score(edge);
        println!(
            "  edge {}-{}: cut fraction {:.4}, expected score {:.12}",
            edge.0 + 1,
            edge.1 + 1,
            cut,
            score
        );
    }
    let average = model.expected_average();
    println!("expected covering average {average:.12}");
    println!("biseparable bound         {bound:.12}");
    assert!((average - bound).abs() < 1e-12);

    // materialize the density matrix (qubits fused with classical flags)
    // and run the actual protocol with the adversary's own measurements
    let rho = model.to_state().expect("materialize");
    println!(
        "materialized state: {} parties of dimension {}",
        rho.register().n_parties(),
        rho.register().dim(0)
    );
    let plans = plans_for_model(&model).expect("adversary plans");
    let cert = run_ddic(
        &State::Mixed(rho),
        &covering,
        &chsh,
        &MeasurementStrategy::Plans(plans),
    )
    .expect("protocol run");

    println!("protocol average          {:.12}", cert.beta_bar);
    assert!((cert.beta_bar - bound).abs() < 1e-9);
    assert!(
        !cert.certified || (cert.beta_bar - bound) < 1e-9,
        "saturation must not yield a strict violation"
    );
    assert!(cert.gme_weight.raw.abs() < 1e-9);
    println!("verdict: no certification from a saturating biseparable state -- ok");
}
