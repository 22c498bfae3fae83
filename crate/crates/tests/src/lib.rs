//! Acceptance checks live in `tests/acceptance.rs`.  The package sorts after
//! the library crates so that a failing criterion does not stop their suites
//! from running under `cargo test --workspace`.
