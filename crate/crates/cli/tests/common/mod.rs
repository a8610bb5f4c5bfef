#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

use topowalk_cli::store::REGISTRY_FILE;
use topowalk_cli::RunConfig;

/// Small enough to run every stage in seconds.
pub const TOY: &str = "\
worlds.train = 2
worlds.heldout = 1
worlds.size = small
train.d = 8
train.epochs = 2
assigner.epochs = 1
budget = 60
episodes = 2
map.budget = 250
vpr.threshold = auto
nav.episodes = 4
bench.nodes = 300
";

pub fn config(text: &str, out: &Path) -> RunConfig {
    RunConfig::parse(text, &[("out".into(), out.display().to_string())]).unwrap()
}

pub fn toy(out: &Path) -> RunConfig {
    config(TOY, out)
}

/// Every artifact under `root` except the registry, by relative path.
pub fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(&p, root, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().display().to_string();
                if rel != REGISTRY_FILE {
                    out.insert(rel, std::fs::read(&p).unwrap());
                }
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// Relative paths whose bytes differ, or that exist on one side only.
pub fn differing(a: &BTreeMap<String, Vec<u8>>, b: &BTreeMap<String, Vec<u8>>) -> Vec<String> {
    let mut keys: Vec<&String> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter().filter(|k| a.get(*k) != b.get(*k)).cloned().collect()
}
