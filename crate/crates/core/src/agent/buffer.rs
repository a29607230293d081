use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::causal::Transition;

/// Fixed-capacity FIFO store of transitions with uniform sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayBuffer<S> {
    capacity: usize,
    items: VecDeque<Transition<S>>,
}

impl<S> ReplayBuffer<S> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer capacity must be positive");
        Self {
            capacity,
            items: VecDeque::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Inserts at the back, evicting the oldest entry when full.
    pub fn push(&mut self, t: Transition<S>) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    /// Entry `i` counted from the oldest.
    pub fn get(&self, i: usize) -> &Transition<S> {
        &self.items[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition<S>> {
        self.items.iter()
    }

    /// `n` indices drawn uniformly with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..n).map(|_| rng.random_range(0..self.items.len())).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<&Transition<S>> {
        self.sample_indices(n, rng).into_iter().map(|i| &self.items[i]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn t(i: usize) -> Transition<Vec<f64>> {
        Transition {
            s: vec![i as f64],
            a: vec![0.0],
            r: 0.0,
            s_next: vec![i as f64 + 1.0],
            done: false,
        }
    }

    #[test]
    fn eviction_is_fifo() {
        let mut b = ReplayBuffer::new(5);
        for i in 0..8 {
            b.push(t(i));
        }
        assert_eq!(b.len(), 5);
        let kept: Vec<f64> = b.iter().map(|x| x.s[0]).collect();
        assert_eq!(kept, vec![3.0, 4.0, 5.0, 6.0, 7.0]);
    }

    #[test]
    fn sampling_is_uniform_chi_square() {
        let mut b = ReplayBuffer::new(10);
        for i in 0..13 {
            b.push(t(i));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let n = 100_000;
        let mut counts = [0usize; 10];
        for i in b.sample_indices(n, &mut rng) {
            counts[i] += 1;
        }
        let expected = n as f64 / 10.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // Upper 1% point of chi-square with 9 degrees of freedom.
        assert!(chi2 < 21.666, "chi2 = {chi2}");
    }

    #[test]
    fn empty_buffer_samples_nothing() {
        let b: ReplayBuffer<Vec<f64>> = ReplayBuffer::new(3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        assert!(b.sample(4, &mut rng).is_empty());
    }
}
