pub mod bench;
pub mod bordered;
pub mod cli;
pub mod cluster;
pub mod data;
pub mod error;
pub mod exact;
pub mod hierarchy;
pub mod io;
pub mod iterative;
pub mod lab;
pub mod metric;
pub mod scale;
pub mod subset;

pub use error::{MagError, Result};

/// Pins the worker count of both the rayon pool and the dense factorization.
///
/// The rayon global pool can only be configured once per process; a later
/// call with a different count is an error.
pub fn pin_threads(n: usize) -> Result<()> {
    if n == 0 {
        return Err(MagError::InvalidConfig("thread count must be positive".into()));
    }
    if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err()
        && rayon::current_num_threads() != n
    {
        return Err(MagError::InvalidConfig(format!(
            "thread pool already running with {} threads",
            rayon::current_num_threads()
        )));
    }
    faer::set_global_parallelism(if n == 1 { faer::Par::Seq } else { faer::Par::rayon(n) });
    Ok(())
}
