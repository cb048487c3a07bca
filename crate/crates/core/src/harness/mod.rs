//! Experiment plumbing behind the `tsallis-lab` command line: configuration,
//! seeding, instances, estimator runs, sweeps and the verification suites.

pub mod config;
pub mod instance;
pub mod run;
pub mod verify;

pub use config::{ExperimentConfig, QuantityKind, RunMode, CONFIG_VERSION};
pub use instance::{cmd_gen, cmd_oracle, resolve_instance, Instance, Manifest, FIXTURES};
pub use run::{cmd_run, cmd_sweep, loglog_slope, RunReport, SweepGrid, SweepRow, TrialRow};
pub use verify::{cmd_verify, Check, VerifyOptions, VerifyReport, SUITES};

use crate::error::LabError;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "TSALLIS_LAB_THREADS";

/// Process exit code for an error: 2 for a failed polynomial certification,
/// 3 for invalid input, 1 otherwise.
pub fn exit_code(err: &LabError) -> i32 {
    match err {
        LabError::CertificationFailure { .. } => 2,
        LabError::InvalidArgument(_) | LabError::DimensionMismatch { .. } | LabError::Parse(_) => 3,
        LabError::Construction(_) | LabError::Io(_) => 1,
    }
}

/// One step of the splitmix64 generator.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of substream `stream`: the `stream + 1`-th splitmix64 output started
/// at `master`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut state = master.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    splitmix64(&mut state)
}

/// Thread pool honouring [`THREADS_ENV`].
pub fn thread_pool() -> crate::Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| LabError::InvalidArgument(format!("{THREADS_ENV}='{v}' is not a count")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder
        .build()
        .map_err(|e| LabError::Construction(format!("thread pool: {e}")))
}
