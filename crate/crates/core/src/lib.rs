pub mod coupling;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod network;
pub mod optimizers;
pub mod sampling;
pub mod scaling;

#[cfg(test)]
pub(crate) fn proptest_config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x5eed_c0de),
        failure_persistence: None,
        ..Default::default()
    }
}
