use topowalk::expert::{generate_demonstration, sample_anchors, DEFAULT_SPACING};
use topowalk::world::{generate_world, geodesic_distance, GeneratorParams};
use topowalk::Locomotion;

/// Action count against the forward-step lower bound implied by the
/// geodesic length of the anchor tour.
#[test]
fn demonstrations_stay_near_the_geodesic_bound() {
    let loco = Locomotion::COARSE;
    for seed in 0..5u64 {
        let world = generate_world(&GeneratorParams::default(), seed, "bound").unwrap();
        let anchors = sample_anchors(&world, DEFAULT_SPACING, seed).unwrap();
        let demo = generate_demonstration(&world, &anchors, seed, &loco).unwrap();
        let mut lower = 0.0;
        for w in demo.visit_order.windows(2) {
            let (a, b) = (anchors.positions[w[0]], anchors.positions[w[1]]);
            lower += (geodesic_distance(&world, a, b).unwrap() / loco.step).floor();
        }
        let actions = demo.actions().len() as f64;
        assert!(
            actions <= 1.6 * lower,
            "world {seed}: {actions} actions against a lower bound of {lower} forwards"
        );
    }
}
