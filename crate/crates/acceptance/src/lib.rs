//! Holds the `acceptance` test target, which checks the library end to end
//! against reference results. Run it with `cargo test -p fscns-validation`.
