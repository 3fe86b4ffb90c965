//! Criterion benchmarks for `bpsched`; see `benches/`.
