//! Build VGG-style and ResNet-style compact networks and print their
//! analyzer totals next to their dense baselines.

use tissuenet::arch::{
    build_mlp_baseline, build_mlp_style, build_resnet_style, build_vgg_style, ArchSpec,
    ResNetBase, Strategy, UnitSpec, VggBase,
};
use tissuenet::cost::{analyze, FlopConvention};

fn show(label: &str, arch: &ArchSpec) {
    let report = analyze(arch).unwrap();
    println!(
        "{label:<34} {:>10.4}M params  {:>10.4e} FLOPs (2/MAC)",
        report.total_params as f64 / 1e6,
        report.total_flops(FlopConvention::MacIsTwo) as f64,
    );
}

fn main() {
    let unit = UnitSpec::new(2, 4, 2);

    println!("== MLP (MNIST, 784-500-300-10) ==");
    show("baseline", &build_mlp_baseline(&[784, 500, 300, 10], 0).unwrap());
    show("compact (c_h=4)", &build_mlp_style(&[784, 500, 300, 10], &unit, None, 0).unwrap());

    println!("\n== VGG-16-style (CIFAR-100 head) ==");
    for (label, strategy) in [("replace all stages", Strategy::All), ("replace intermediate ('r')", Strategy::Intermediate)] {
        show(label, &build_vgg_style(VggBase::Vgg16Cifar, 4, strategy, 100, 0).unwrap());
    }

    println!("\n== ResNet-18-style (CIFAR-100 head) ==");
    for (label, strategy) in [("replace all blocks", Strategy::All), ("replace intermediate ('r')", Strategy::Intermediate)] {
        show(label, &build_resnet_style(ResNetBase::ResNet18, 4, strategy, 100, 0).unwrap());
    }

    // Write one spec to disk in the CLI's input format.
    let arch = build_resnet_style(ResNetBase::ResNet18, 4, Strategy::All, 100, 0).unwrap();
    let path = std::env::temp_dir().join("resnet18-tissue.json");
    arch.save(&path).unwrap();
    println!("\nwrote {} (try: tissuenet analyze --arch {})", path.display(), path.display());
}
