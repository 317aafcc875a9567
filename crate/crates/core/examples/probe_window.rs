use cesaro_core::group::{standard_generators, GroupHandle};
use cesaro_core::measure::{Measure, MemoryGuard};
use cesaro_core::operator::{ConvOperator, LpExponent, NormMethod, NormOptions};
use std::sync::Arc;
use std::time::Instant;

fn main() {
    let f3 = Arc::new(GroupHandle::free(3).unwrap());
    let gens = standard_generators(&f3);
    let mu = Measure::from_real_atoms(f3, gens.iter().map(|e| (e.clone(), 1.0))).unwrap();
    let t = ConvOperator::left(mu, LpExponent::Finite(2.0));
    let limit = 2.0 * (2.0f64).sqrt();
    for radius in [4usize, 5, 6, 7, 8] {
        let start = Instant::now();
        let iv = t
            .operator_norm(
                NormMethod::WindowLower,
                &NormOptions {
                    radius,
                    iters: 400,
                    guard: MemoryGuard { max_atoms: 8_000_000 },
                    ..NormOptions::default()
                },
            )
            .unwrap();
        println!(
            "R={radius}: lo={:.9} ({}% of 2sqrt2={:.9})  hi={:.6}  [{:?}]",
            iv.lo,
            (100.0 * iv.lo / limit).round(),
            limit,
            iv.hi,
            start.elapsed()
        );
    }
}
