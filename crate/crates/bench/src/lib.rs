//! Benchmarks for the radlog solvers; see `benches/solvers.rs`.
