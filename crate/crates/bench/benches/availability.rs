use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use tvws_bench::field_with_contours;
use tvws_core::availability::AvailabilityMap;
use tvws_core::{Channel, DeviceClass, DeviceParams};

fn availability(c: &mut Criterion) {
    let scenario = field_with_contours().unwrap();
    let map = AvailabilityMap::new(&scenario, DeviceParams::at_limits(DeviceClass::Fixed)).unwrap();
    let ch = Channel::new(30).unwrap();
    let center = scenario.area().center();
    c.bench_function("available_set_point", |b| b.iter(|| map.available_set(black_box(center))));
    let mut group = c.benchmark_group("availability");
    group.sample_size(10);
    group.bench_function("probability_10k_cells", |b| b.iter(|| map.probability(ch, scenario.area())));
    group.finish();
}

criterion_group!(benches, availability);
criterion_main!(benches);
