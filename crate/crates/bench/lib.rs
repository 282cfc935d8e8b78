//! Benchmarks for the simulator hot paths live in `benches/`.
