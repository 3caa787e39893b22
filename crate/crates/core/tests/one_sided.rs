mod common;

use ctxtree::{one_sided_test, Decision, PatternTree, Simulator};
use rayon::prelude::*;

use common::*;

#[test]
fn cycle_rejects_root_and_accepts_infinite() {
    let sample = cycle(3, 300);
    let a = sample.alphabet();
    let out = one_sided_test(&sample, &PatternTree::root(a), 0.05f64).unwrap();
    assert_eq!(out.decision, Decision::Reject);
    assert!(out.window_ok);
    let out = one_sided_test(&sample, &PatternTree::infinite(a), 0.05f64).unwrap();
    assert_eq!(out.decision, Decision::NotReject);
    assert!(out.witness.is_none());
}

/// Level check under the null: uniform i.i.d. data should not reject the root tree in
/// at least 95% of replicates.
#[test]
fn iid_uniform_rarely_rejects_root() {
    let model = uniform_iid();
    let sim = Simulator::new(&model).unwrap();
    let root = PatternTree::root(model.alphabet());
    let reps = 200;
    let not_rejected = (0..reps)
        .into_par_iter()
        .filter(|&i| {
            let sample = sim.sample(10_000, 2024, i);
            one_sided_test(&sample, &root, 0.05f64).unwrap().decision == Decision::NotReject
        })
        .count();
    let rate = not_rejected as f64 / reps as f64;
    assert!(rate >= 0.95, "not-reject rate {rate} over {reps} replicates");
}
