//! Data-parallel evaluation over many entries.
//!
//! With the `parallel` feature (on by default) batch work is spread over the
//! rayon pool; without it, or when [`Execution::Sequential`] is requested,
//! the same closures run on the calling thread. Output order always matches
//! input order, so both paths produce identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::scoring::{assess, AssessmentInput, AssessmentResult, RiskTolerancePolicy, ScoringError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[cfg_attr(feature = "parallel", default)]
    Parallel,
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
}

impl Execution {
    /// True when this mode will actually use worker threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

pub(crate) fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

pub fn assess_batch(inputs: &[AssessmentInput], policy: &RiskTolerancePolicy) -> Vec<Result<AssessmentResult, ScoringError>> {
    assess_batch_with(Execution::default(), inputs, policy)
}

pub fn assess_batch_with(
    exec: Execution,
    inputs: &[AssessmentInput],
    policy: &RiskTolerancePolicy,
) -> Vec<Result<AssessmentResult, ScoringError>> {
    map(exec, inputs, |input| assess(input, policy))
}
