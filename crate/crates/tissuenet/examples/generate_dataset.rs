//! Generate deterministic synthetic datasets on disk in the real MNIST IDX
//! and CIFAR-10 binary formats, ready for the `tissuenet` CLI.
//!
//! Usage: generate_dataset [DIR] [N_TRAIN] [N_TEST]

use std::path::PathBuf;

use tissuenet::data::{load_cifar10, load_mnist, write_cifar_fixture, write_mnist_fixture};

fn main() {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "data".into()));
    let n_train: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(10_000);
    let n_test: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(2_000);

    let mnist_dir = dir.join("mnist");
    write_mnist_fixture(&mnist_dir, n_train, n_test, 12345).unwrap();
    let (train, test) = load_mnist(&mnist_dir).unwrap();
    println!(
        "{}: {} train / {} test digit images (IDX format)",
        mnist_dir.display(),
        train.len(),
        test.len()
    );

    let cifar_dir = dir.join("cifar10");
    write_cifar_fixture(&cifar_dir, n_train / 10, 12345).unwrap();
    let (train, test) = load_cifar10(&cifar_dir).unwrap();
    println!(
        "{}: {} train / {} test color textures (CIFAR-10 binary format)",
        cifar_dir.display(),
        train.len(),
        test.len()
    );
}
