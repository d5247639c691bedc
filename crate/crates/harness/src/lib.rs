//! Configuration, initial-condition generators, report writers and the four
//! reproduction experiments behind the `sediment` command-line tool.

pub mod config;
pub mod error;
pub mod experiments;
pub mod generate;
pub mod io;
pub mod selftest;

pub use config::{ExperimentConfig, ExperimentId, GeneratorSpec, CODE_VERSION};
pub use error::{HarnessError, Result};

/// Builds the global rayon pool from `SEDIMENT_THREADS` when it is set.
pub fn init_thread_pool() -> Result<()> {
    if let Ok(v) = std::env::var("SEDIMENT_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| HarnessError::Usage(format!("SEDIMENT_THREADS must be a positive integer, got '{v}'")))?;
        if n == 0 {
            return Err(HarnessError::Usage("SEDIMENT_THREADS must be at least 1".into()));
        }
        // A second initialization in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}
