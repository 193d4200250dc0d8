//! Benchmarks for the check and sampling routines; see `benches/`.
