//! Benchmark-only crate; see `benches/evidence.rs`.
