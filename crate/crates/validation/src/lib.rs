//! Test-only package. The acceptance suite lives in `tests/acceptance.rs`;
//! it is kept in its own package so that it runs after the unit and
//! integration tests of every other crate.
