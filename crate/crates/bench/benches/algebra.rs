use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ferrolearn::dense::{gaussian_unitary, givens_decompose};
use ferrolearn::instances::haar_orthogonal;
use ferrolearn::{Path, SparseOperator, StringKey};
use ferrolearn_bench::fixture;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn string_products(c: &mut Criterion) {
    let x = StringKey::from_indices(64, &[1, 5, 9, 20, 33, 47, 60]).unwrap();
    let y = StringKey::from_indices(64, &[2, 5, 21, 33, 64]).unwrap();
    c.bench_function("string_product/2n=64", |b| {
        b.iter(|| ferrolearn::majorana::string_product(black_box(&x), black_box(&y)))
    });
}

fn heisenberg(c: &mut Criterion) {
    let mut group = c.benchmark_group("heisenberg_gamma1");
    for n in [4usize, 6, 8] {
        let spec = fixture(n, 1, 4, Path::Fermionic);
        let g = SparseOperator::majorana(n, 1).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| spec.heisenberg(black_box(&g)).unwrap())
        });
    }
    group.finish();
}

fn gaussian_synthesis(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut group = c.benchmark_group("gaussian_unitary");
    for n in [3usize, 5, 7] {
        let o = haar_orthogonal(2 * n, true, &mut rng);
        group.bench_with_input(BenchmarkId::new("givens", n), &o, |b, o| {
            b.iter(|| givens_decompose(black_box(o)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("dense", n), &o, |b, o| {
            b.iter(|| gaussian_unitary(black_box(o)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, string_products, heisenberg, gaussian_synthesis);
criterion_main!(benches);
