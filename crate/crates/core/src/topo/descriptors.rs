use crate::world::{Observation, MAX_RANGE, MISS_TEXTURE, TEXTURE_CLASSES};

pub const SECTORS: usize = 12;
pub const RAYS_PER_SECTOR: usize = 6;
/// Three depth statistics plus one histogram bin per wall texture.
pub const LOCAL_DIM: usize = 3 + TEXTURE_CLASSES as usize;

/// Twelve local descriptors, one per 30° sector of the egocentric panorama
/// (sector 0 starts straight ahead). Each holds `[mean, min, max]` depth over
/// the max range, then the texture histogram of the sector's wall hits
/// (misses excluded, normalized to sum 1 when any ray hits).
pub fn sector_descriptors(obs: &Observation) -> Vec<Vec<f64>> {
    let (depths, textures) = obs.egocentric();
    (0..SECTORS)
        .map(|s| {
            let rays = s * RAYS_PER_SECTOR..(s + 1) * RAYS_PER_SECTOR;
            let d = &depths[rays.clone()];
            let mean = d.iter().sum::<f64>() / RAYS_PER_SECTOR as f64;
            let min = d.iter().copied().fold(f64::INFINITY, f64::min);
            let max = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut desc = vec![mean / MAX_RANGE, min / MAX_RANGE, max / MAX_RANGE];
            let mut hist = [0.0; TEXTURE_CLASSES as usize];
            let mut hits = 0usize;
            for &t in &textures[rays] {
                if t != MISS_TEXTURE {
                    hist[t as usize] += 1.0;
                    hits += 1;
                }
            }
            desc.extend(hist.iter().map(|h| if hits > 0 { h / hits as f64 } else { 0.0 }));
            desc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::RAY_COUNT;

    fn obs(depths: Vec<f64>, textures: Vec<u8>, heading: u16) -> Observation {
        Observation {
            depths,
            textures,
            heading,
        }
    }

    #[test]
    fn open_sector() {
        let o = obs(vec![MAX_RANGE; RAY_COUNT], vec![MISS_TEXTURE; RAY_COUNT], 0);
        for d in sector_descriptors(&o) {
            assert_eq!(d, [vec![1.0, 1.0, 1.0], vec![0.0; 8]].concat());
        }
    }

    #[test]
    fn uniform_wall() {
        let o = obs(vec![2.0; RAY_COUNT], vec![3; RAY_COUNT], 0);
        let d = &sector_descriptors(&o)[4];
        let want = vec![0.4, 0.4, 0.4, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(d.len(), LOCAL_DIM);
        assert_eq!(d, &want);
    }

    #[test]
    fn rotation_by_one_sector_shifts_descriptors() {
        let depths: Vec<f64> = (0..RAY_COUNT).map(|i| 0.3 + (i * 7 % 13) as f64 * 0.35).collect();
        let textures: Vec<u8> = (0..RAY_COUNT).map(|i| ((i * 5) % 9) as u8).collect();
        let a = sector_descriptors(&obs(depths.clone(), textures.clone(), 0));
        for shift in 1..SECTORS {
            let b = sector_descriptors(&obs(depths.clone(), textures.clone(), (30 * shift) as u16));
            for s in 0..SECTORS {
                assert_eq!(b[s], a[(s + shift) % SECTORS]);
            }
        }
    }
}
