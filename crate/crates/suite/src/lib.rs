//! Holds the `acceptance` test target, which runs after the other crates' tests.
