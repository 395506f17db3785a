//! Thread-safe Green-element cache shared by parallel evaluations.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::RwLock;

use quasimol_core::green::{CacheKey, ElementCache};
use quasimol_core::Complex64;

#[derive(Debug, Default)]
pub struct SharedCache {
    map: RwLock<HashMap<CacheKey, Complex64>>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl SharedCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(hits, misses)`.
    pub fn counters(&self) -> (usize, usize) {
        (self.hits.load(Ordering::Relaxed), self.misses.load(Ordering::Relaxed))
    }

    pub fn hit_rate(&self) -> f64 {
        let (h, m) = self.counters();
        if h + m == 0 {
            0.0
        } else {
            h as f64 / (h + m) as f64
        }
    }
}

impl ElementCache for SharedCache {
    fn lookup(&self, key: &CacheKey) -> Option<Complex64> {
        let v = self.map.read().expect("cache lock").get(key).copied();
        let counter = if v.is_some() { &self.hits } else { &self.misses };
        counter.fetch_add(1, Ordering::Relaxed);
        v
    }

    fn store(&self, key: CacheKey, value: Complex64) {
        self.map.write().expect("cache lock").insert(key, value);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use quasimol_core::green::{cached_elements, GreenConfig, LatticeGreen, Regularization};
    use rayon::prelude::*;

    #[test]
    fn parallel_readers_agree_with_direct_evaluation() {
        let gf = LatticeGreen::new(4, GreenConfig::default()).unwrap();
        let cache = SharedCache::new();
        let keys = [[0, 0, 0], [0, 0, 1], [0, 1, 1], [1, 1, 1], [0, 0, 2]];
        let energies: Vec<f64> = (0..8).map(|i| -2.5 + 0.7 * f64::from(i)).collect();
        let runs: Vec<Vec<Vec<Complex64>>> = (0..4)
            .into_par_iter()
            .map(|_| energies.iter().map(|e| cached_elements(&gf, &keys, *e, Regularization::Exact, &cache).unwrap()).collect())
            .collect();
        for (e, row) in energies.iter().zip(&runs[0]) {
            assert_eq!(*row, gf.elements(&keys, *e, Regularization::Exact).unwrap());
        }
        assert!(runs.iter().all(|r| *r == runs[0]));
        assert_eq!(cache.len(), keys.len() * energies.len());
        assert!(cache.counters().0 > 0);
    }
}
