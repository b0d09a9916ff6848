//! Criterion benchmarks for the PRISM pipeline; see `benches/`.
