//! Benchmarks for the hybrid repeater pipeline live in `benches/`.
