//! Criterion benchmarks for the hornlab crate; run with `cargo bench -p hornlab-bench`.
