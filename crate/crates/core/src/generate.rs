//! Seeded random networks for property sweeps.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{validate_network, ConceptSpec, NetworkSpec, ValidatedNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomNetworkConfig {
    /// Total layers including the bottom one.
    pub max_layers: usize,
    pub max_per_layer: usize,
    pub min_pattern_len: usize,
    pub max_pattern_len: usize,
    pub max_patterns: usize,
}

impl Default for RandomNetworkConfig {
    fn default() -> Self {
        Self {
            max_layers: 3,
            max_per_layer: 4,
            min_pattern_len: 2,
            max_pattern_len: 3,
            max_patterns: 3,
        }
    }
}

/// Builds a valid network from `seed`. Every layer that feeds another has
/// at least `min_pattern_len` concepts, so patterns always fit.
pub fn random_network(seed: u64, cfg: &RandomNetworkConfig) -> ValidatedNetwork {
    assert!(cfg.max_layers >= 2 && cfg.min_pattern_len >= 1);
    assert!(cfg.min_pattern_len <= cfg.max_pattern_len && cfg.min_pattern_len <= cfg.max_per_layer);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = rng.gen_range(2..=cfg.max_layers);
    let sizes: Vec<usize> = (0..layers)
        .map(|l| {
            let min = if l + 1 < layers {
                cfg.min_pattern_len
            } else {
                1
            };
            rng.gen_range(min..=cfg.max_per_layer)
        })
        .collect();

    let name = |layer: usize, i: usize| format!("l{layer}_{i}");
    let mut concepts = Vec::new();
    for i in 0..sizes[0] {
        concepts.push(ConceptSpec::bottom(name(0, i)));
    }
    for layer in 1..layers {
        let below = sizes[layer - 1];
        for i in 0..sizes[layer] {
            let wanted = rng.gen_range(1..=cfg.max_patterns);
            let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
            let mut patterns = Vec::new();
            for _ in 0..wanted * 4 {
                if patterns.len() == wanted {
                    break;
                }
                let len = rng.gen_range(cfg.min_pattern_len..=cfg.max_pattern_len.min(below));
                let members = sample(&mut rng, below, len).into_vec();
                let mut key = members.clone();
                key.sort_unstable();
                if seen.insert(key) {
                    patterns.push(members.into_iter().map(|m| name(layer - 1, m)).collect());
                }
            }
            concepts.push(ConceptSpec {
                name: name(layer, i),
                layer,
                patterns,
            });
        }
    }
    validate_network(&NetworkSpec { concepts }).expect("generator only emits valid networks")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_networks_respect_bounds() {
        let cfg = RandomNetworkConfig::default();
        for seed in 0..200 {
            let net = random_network(seed, &cfg);
            assert!(net.layer_count() <= 3);
            assert!(net.layers().iter().all(|l| !l.is_empty() && l.len() <= 4));
            for c in net.concepts() {
                assert!(c.patterns.iter().all(|p| (2..=3).contains(&p.len())));
            }
        }
    }

    #[test]
    fn same_seed_same_network() {
        let cfg = RandomNetworkConfig::default();
        assert_eq!(random_network(7, &cfg), random_network(7, &cfg));
    }
}
