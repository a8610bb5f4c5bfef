use super::graph::TopoGraph;
use super::kmeans::sq_dist;
use crate::error::{Error, Result};

/// Candidate loop thresholds tried by [`calibrate_threshold`].
pub const THRESHOLD_GRID: [f64; 12] = [0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 1.0, 1.15];

/// Loop pairs farther apart than this are false closures.
pub const FALSE_LOOP_DISTANCE: f64 = 3.0;
/// Loop pairs farther apart than this count as imprecise.
pub const LOOSE_LOOP_DISTANCE: f64 = 1.0;

/// Offline calibration on training-world maps, which carry ground-truth
/// poses: the largest grid threshold admitting no false closure and at most
/// `max_loose` of its pairs beyond [`LOOSE_LOOP_DISTANCE`]. The maps must
/// have been closed at a threshold no smaller than the grid maximum, so
/// every candidate's pairs are a subset of theirs.
pub fn calibrate_threshold(maps: &[TopoGraph], max_loose: f64) -> Result<f64> {
    let top = THRESHOLD_GRID[THRESHOLD_GRID.len() - 1];
    let mut pairs = Vec::new();
    for g in maps {
        if g.params.threshold < top {
            return Err(Error::Structural(format!(
                "calibration maps must be closed at threshold ≥ {top}, got {}",
                g.params.threshold
            )));
        }
        for (a, b) in g.loop_pairs() {
            let vlad = sq_dist(&g.nodes[a].vlad.values, &g.nodes[b].vlad.values).sqrt();
            let (pa, pb) = (g.debug_position(a), g.debug_position(b));
            pairs.push((vlad, (pa.0 - pb.0).hypot(pa.1 - pb.1)));
        }
    }
    let mut best = THRESHOLD_GRID[0];
    for &th in &THRESHOLD_GRID {
        let admitted: Vec<f64> = pairs.iter().filter(|p| p.0 < th).map(|p| p.1).collect();
        let far = admitted.iter().filter(|&&d| d > FALSE_LOOP_DISTANCE).count();
        let loose = admitted.iter().filter(|&&d| d > LOOSE_LOOP_DISTANCE).count();
        if far > 0 || loose as f64 > max_loose * admitted.len() as f64 {
            break;
        }
        best = th;
    }
    Ok(best)
}
