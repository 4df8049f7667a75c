//! Host crate for the end-to-end acceptance suite in `tests/acceptance.rs`.
//! Run it with `cargo test -p prefix-oracle-suite --test acceptance`.
