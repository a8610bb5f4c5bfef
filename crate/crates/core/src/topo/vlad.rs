use serde::{Deserialize, Serialize};

use super::kmeans::nearest;
use crate::error::{Error, Result};

/// Stacked per-centroid residual sums, L2-normalized unless they cancel out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vlad {
    pub values: Vec<f64>,
    /// True when every residual summed to zero; `values` is then all zeros.
    pub zero: bool,
}

pub fn vlad_encode(descs: &[Vec<f64>], centroids: &[Vec<f64>]) -> Result<Vlad> {
    if descs.is_empty() {
        return Err(Error::Structural("VLAD of an empty descriptor set".into()));
    }
    let dim = centroids.first().map_or(0, |c| c.len());
    if centroids.is_empty() || descs.iter().any(|d| d.len() != dim) {
        return Err(Error::Shape(format!("descriptors must match {dim}-d centroids")));
    }
    let mut values = vec![0.0; centroids.len() * dim];
    for d in descs {
        let (c, _) = nearest(centroids, d);
        for (k, (x, m)) in d.iter().zip(&centroids[c]).enumerate() {
            values[c * dim + k] += x - m;
        }
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(Vlad { values, zero: true });
    }
    values.iter_mut().for_each(|v| *v /= norm);
    Ok(Vlad { values, zero: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn centroids() -> Vec<Vec<f64>> {
        vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]
    }

    #[test]
    fn descriptors_on_centroids_give_zero() {
        let v = vlad_encode(&centroids(), &centroids()).unwrap();
        assert!(v.zero);
        assert_eq!(v.values, vec![0.0; 6]);
    }

    #[test]
    fn single_descriptor_fills_its_block() {
        let v = vlad_encode(&[vec![1.3, 0.4]], &centroids()).unwrap();
        let n = (0.3f64 * 0.3 + 0.4 * 0.4).sqrt();
        assert!(!v.zero);
        let want = [0.0, 0.0, 0.3 / n, 0.4 / n, 0.0, 0.0];
        for (a, b) in v.values.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn order_does_not_matter(
            descs in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), 1..20),
            rot in 0usize..20,
        ) {
            let a = vlad_encode(&descs, &centroids()).unwrap();
            let mut shuffled = descs.clone();
            shuffled.rotate_left(rot % descs.len());
            shuffled.reverse();
            let b = vlad_encode(&shuffled, &centroids()).unwrap();
            prop_assert_eq!(a.zero, b.zero);
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            let norm: f64 = a.values.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(a.zero || (norm - 1.0).abs() < 1e-12);
        }
    }
}
