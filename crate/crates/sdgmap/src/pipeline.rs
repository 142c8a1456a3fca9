//! The per-record classification path shared by the CLI and the service.

use rayon::prelude::*;
use rayon::ThreadPool;

use sdgmap_core::ingest::{consolidate, PaperRecord};
use sdgmap_core::{classify, normalize, rank, ClassificationResult, CompiledLibrary, TopN};

pub fn classify_record(lib: &CompiledLibrary, record: &PaperRecord, top_n: TopN) -> ClassificationResult {
    rank(&classify(&normalize(&consolidate(record)), lib), top_n)
}

/// Classifies `records` on `pool`; results come back in input order
/// whatever the worker count.
pub fn classify_all(
    lib: &CompiledLibrary,
    records: &[PaperRecord],
    top_n: TopN,
    pool: &ThreadPool,
) -> Vec<ClassificationResult> {
    pool.install(|| records.par_iter().map(|r| classify_record(lib, r, top_n)).collect())
}

pub fn thread_pool(workers: usize) -> Result<ThreadPool, rayon::ThreadPoolBuildError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .thread_name(|i| format!("sdgmap-worker-{i}"))
        .build()
}
