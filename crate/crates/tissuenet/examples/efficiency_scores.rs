//! CE/SE efficiency scores from recorded accuracy/FLOPs/parameter numbers.
//!
//! CE = (acc_n/flops_n) / (acc_b/flops_b): accuracy delivered per FLOP,
//! relative to a baseline. SE is the same per parameter. A model scored
//! against itself gives exactly 1.

use tissuenet::cost::{compute_ce, compute_se, BaselineRecord};

fn main() {
    // A dense MLP baseline and a compact model roughly 36x cheaper.
    let base = BaselineRecord { acc: 92.65, flops: 1.09e6, params: 0.55e6 };
    let (acc_n, flops_n, params_n) = (91.95, 0.03e6, 0.02e6);

    let ce = compute_ce(acc_n, flops_n, &base).unwrap();
    let se = compute_se(acc_n, params_n, &base).unwrap();
    println!("baseline: acc {:.2}%  flops {:.2e}  params {:.2e}", base.acc, base.flops, base.params);
    println!("compact:  acc {acc_n:.2}%  flops {flops_n:.2e}  params {params_n:.2e}");
    println!("CE = {ce:.2}  (36x the accuracy-per-FLOP of the baseline)");
    println!("SE = {se:.2}");

    // Sanity properties.
    assert_eq!(compute_ce(base.acc, base.flops, &base).unwrap(), 1.0);
    assert_eq!(compute_se(base.acc, base.params, &base).unwrap(), 1.0);
    let doubled = BaselineRecord { flops: base.flops * 2.0, ..base };
    let ce2 = compute_ce(acc_n, flops_n * 2.0, &doubled).unwrap();
    assert!((ce - ce2).abs() < 1e-12, "CE is scale-invariant");
    println!("self-comparison = 1, scale invariance holds");
}
