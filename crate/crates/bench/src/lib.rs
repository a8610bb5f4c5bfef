//! Fixtures shared by the benchmarks.

use topowalk::explore::run_random_walk;
use topowalk::model::{ModelBundle, ModelDims, SupervisionMode};
use topowalk::topo::{build_chain_graph, fit_codebook, TopoGraph, VprParams};
use topowalk::world::{generate_world, GeneratorParams};
use topowalk::{rng, Locomotion};

/// Chain graph of an `n`-step random walk on a default-size world, loops
/// not yet closed. Node VLADs depend only on the observations, so an
/// untrained bundle suffices.
pub fn chain_map(n: usize, threshold: f64, seed: u64) -> TopoGraph {
    let world = generate_world(&GeneratorParams::default(), 100 + seed, "bench").expect("world");
    let episode = run_random_walk(&world, n, seed, &Locomotion::FINE).expect("walk");
    let params = VprParams {
        threshold,
        ..VprParams::default()
    };
    let bundle = ModelBundle::new(ModelDims::reduced(8), SupervisionMode::Full, &mut rng::seeded(seed));
    let codebook = fit_codebook(&episode, &params, seed).expect("codebook");
    build_chain_graph(&episode, &bundle, &codebook.centroids, &params).expect("chain")
}
