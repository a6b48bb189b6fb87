//! Train the compact MLP against its dense baseline on the synthetic digit
//! dataset and report CE/SE efficiency scores.
//!
//! Runs in a couple of minutes on one CPU core; pass a smaller sample
//! count as the first argument to go faster.

use tissuenet::arch::{build_mlp_baseline, build_mlp_style, UnitSpec};
use tissuenet::cost::{analyze, compute_ce, compute_se, BaselineRecord, FlopConvention};
use tissuenet::data::synth_digits;
use tissuenet::train::{train, TrainConfig};

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(4000);
    let train_ds = synth_digits(1, n).unwrap().flattened().unwrap();
    let test_ds = synth_digits(2, n / 5).unwrap().flattened().unwrap();

    let cfg = TrainConfig { epochs: 10, warmup_epochs: 2, seed: 7, ..Default::default() };
    let widths = [784, 500, 300, 10];

    let mut results = Vec::new();
    for (label, arch) in [
        ("baseline", build_mlp_baseline(&widths, 3).unwrap()),
        ("compact", build_mlp_style(&widths, &UnitSpec::new(2, 4, 2), None, 3).unwrap()),
    ] {
        let report = analyze(&arch).unwrap();
        let mut model = arch.build().unwrap();
        let out = train(&mut model, &train_ds, &test_ds, &cfg).unwrap();
        println!(
            "{label:<9} best test acc {:.2}%  ({} params, {} FLOPs)",
            out.log.best_test_acc,
            report.total_params,
            report.total_flops(FlopConvention::MacIsTwo)
        );
        results.push((
            out.log.best_test_acc,
            report.total_flops(FlopConvention::MacIsTwo) as f64,
            report.total_params as f64,
        ));
    }

    let base = BaselineRecord { acc: results[0].0, flops: results[0].1, params: results[0].2 };
    let ce = compute_ce(results[1].0, results[1].1, &base).unwrap();
    let se = compute_se(results[1].0, results[1].2, &base).unwrap();
    println!("CE = {ce:.2} (accuracy per FLOP vs baseline)");
    println!("SE = {se:.2} (accuracy per parameter vs baseline)");
}
