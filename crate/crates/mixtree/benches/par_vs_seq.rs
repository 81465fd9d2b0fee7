//! Parallel vs. sequential throughput of the data-parallel entry points.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use mixtree::decomp::{random_weights, Discretizers, WeightDistribution};
use mixtree::network::grid_tensor_bruteforce;
use mixtree::scalar::{BinaryOp, ScalarKind};
use mixtree::tree::build_baseline_tree;

fn bench_grid_bruteforce(c: &mut Criterion) {
    let mut group = c.benchmark_group("grid_bruteforce");
    group.sample_size(10);
    for n in [8usize, 12] {
        let tree = build_baseline_tree(n).unwrap();
        let weights =
            random_weights(&tree, 2, 7, WeightDistribution::IntegerUniform { bound: 5 }).unwrap();
        let disc = Discretizers::identity(2, ScalarKind::Rational);
        group.bench_function(BenchmarkId::new("default", n), |b| {
            b.iter(|| grid_tensor_bruteforce(&tree, &weights, &disc, BinaryOp::Product).unwrap())
        });
        // the same enumeration forced through the sequential helper
        group.bench_function(BenchmarkId::new("sequential", n), |b| {
            b.iter(|| {
                let total = 1usize << n;
                mixtree::exec::seq_try_map_indexed(total, |flat| {
                    let mut digits = vec![0usize; n];
                    let mut rem = flat;
                    for k in (0..n).rev() {
                        digits[k] = rem % 2;
                        rem /= 2;
                    }
                    let window = mixtree::network::InputWindow::new(
                        digits.iter().map(|&d| disc.vector(d).to_vec()).collect(),
                    )?;
                    mixtree::network::forward_tree_network(
                        &tree,
                        &weights,
                        &window,
                        BinaryOp::Product,
                    )
                })
                .unwrap()
            })
        });
    }
    group.finish();
}

fn bench_tree_decompose(c: &mut Criterion) {
    let mut group = c.benchmark_group("tree_decompose");
    group.sample_size(10);
    for n in [8usize, 16] {
        let tree = build_baseline_tree(n).unwrap();
        let weights =
            random_weights(&tree, 2, 7, WeightDistribution::IntegerUniform { bound: 5 }).unwrap();
        let disc = Discretizers::identity(2, ScalarKind::Rational);
        group.bench_function(BenchmarkId::from_parameter(n), |b| {
            b.iter(|| {
                mixtree::decomp::tree_decompose(&tree, &weights, &disc, BinaryOp::Product).unwrap()
            })
        });
    }
    group.finish();
}

fn bench_exact_rank(c: &mut Criterion) {
    use mixtree::analysis::measured_rank;
    use mixtree::rank::RankMode;

    let mut group = c.benchmark_group("exact_rank");
    group.sample_size(10);
    let tree = build_baseline_tree(8).unwrap();
    let weights =
        random_weights(&tree, 2, 11, WeightDistribution::IntegerUniform { bound: 5 }).unwrap();
    let disc = Discretizers::identity(2, ScalarKind::Rational);
    let batch =
        mixtree::decomp::tree_decompose(&tree, &weights, &disc, BinaryOp::Product).unwrap();
    let index_set = mixtree::ModeSet::new(vec![1, 3, 5, 7]).unwrap();
    group.bench_function("batch_16x16", |b| {
        b.iter(|| measured_rank(&batch, &index_set, RankMode::Exact).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_grid_bruteforce,
    bench_tree_decompose,
    bench_exact_rank
);
criterion_main!(benches);
