//! Hosts the acceptance suite in `tests/acceptance.rs`; run it with
//! `cargo test -p openness-verify --test acceptance`.
