//! Shared fixtures for the benchmark targets.

use herogcn::graph::{sbm_generate, SbmParams};
use herogcn::AttributedGraph;

/// The synthetic instance every bench runs against.
pub fn bench_graph() -> (AttributedGraph<f64>, Vec<usize>) {
    sbm_generate(&SbmParams {
        blocks: 3,
        per_block: 50,
        p_in: 0.3,
        p_out: 0.01,
        noise: 0.1,
        seed: 7,
    })
    .expect("valid parameters")
}
