//! Criterion benchmarks for the walker; see `benches/`.
