//! Holds the `acceptance` test target, which runs after the other suites of
//! the workspace. Run it alone with `cargo test -p pricing-acceptance`.
