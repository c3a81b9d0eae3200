use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use tvws_bench::broadcast_params;
use tvws_core::propagation::{inverse_loss, ItmModel, PathLossModel};

fn itm(c: &mut Criterion) {
    let params = broadcast_params();
    c.bench_function("itm_coefficients", |b| b.iter(|| ItmModel::new(black_box(params)).unwrap()));
    let model = ItmModel::new(params).unwrap();
    c.bench_function("itm_loss_100km", |b| b.iter(|| model.loss_db(black_box(100e3))));
    c.bench_function("itm_inverse_loss", |b| b.iter(|| inverse_loss(&model, black_box(140.0)).unwrap()));
}

criterion_group!(benches, itm);
criterion_main!(benches);
