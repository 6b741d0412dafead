//! Cross-module suites: randomized invariants and published reference values.

mod reference_values;
