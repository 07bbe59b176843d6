//! Criterion benchmarks for the selectors and model solvers; see `benches/`.
