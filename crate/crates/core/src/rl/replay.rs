use std::sync::{Arc, Mutex};

use rand::Rng;

use super::{Batch, Result, RlError, Transition};

/// Fixed-capacity FIFO experience store with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(RlError::Config("replay capacity must be positive".into()));
        }
        Ok(Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            cursor: 0,
        })
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

    /// Appends `t`, overwriting the oldest entry once full.
    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    /// Contents from oldest to newest.
    pub fn iter_fifo(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.items.len() < self.capacity { 0 } else { self.cursor };
        self.items[split..].iter().chain(self.items[..split].iter())
    }

    fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<usize>> {
        if self.items.is_empty() {
            return Err(RlError::State("cannot sample from an empty replay buffer".into()));
        }
        Ok((0..n).map(|_| rng.gen_range(0..self.items.len())).collect())
    }

    /// `n` draws, uniform with replacement.
    pub fn sample_minibatch<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<Transition>> {
        Ok(self
            .sample_indices(n, rng)?
            .into_iter()
            .map(|i| self.items[i].clone())
            .collect())
    }

    /// Same draws as [`Self::sample_minibatch`], packed for batched passes.
    pub fn sample_batch<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Batch> {
        let idx = self.sample_indices(n, rng)?;
        let mut b = Batch::with_capacity(self.items[0].s.len(), n);
        for i in idx {
            b.push(&self.items[i]);
        }
        Ok(b)
    }
}

/// A replay buffer shared between one writer and one reader thread.
#[derive(Debug, Clone)]
pub struct SharedReplay(Arc<Mutex<ReplayBuffer>>);

impl SharedReplay {
    pub fn new(buffer: ReplayBuffer) -> Self {
        Self(Arc::new(Mutex::new(buffer)))
    }

    pub fn push(&self, t: Transition) {
        self.0.lock().expect("replay lock poisoned").push(t);
    }

    pub fn len(&self) -> usize {
        self.0.lock().expect("replay lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_batch<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Batch> {
        self.0.lock().expect("replay lock poisoned").sample_batch(n, rng)
    }

    pub fn sample_minibatch<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<Transition>> {
        self.0.lock().expect("replay lock poisoned").sample_minibatch(n, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tr(id: usize) -> Transition {
        Transition::new(vec![id as f64], 0, id as f64, vec![id as f64 + 1.0], false, 0.9)
    }

    #[test]
    fn fifo_keeps_last_pushed() {
        let mut b = ReplayBuffer::new(3).unwrap();
        for i in 0..5 {
            b.push(tr(i));
        }
        assert_eq!(b.len(), 3);
        let ids: Vec<f64> = b.iter_fifo().map(|t| t.r).collect();
        assert_eq!(ids, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn single_push() {
        let mut b = ReplayBuffer::new(10).unwrap();
        b.push(tr(0));
        assert_eq!(b.len(), 1);
    }

    #[test]
    fn sampling_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut b = ReplayBuffer::new(4).unwrap();
        assert!(matches!(b.sample_minibatch(2, &mut rng), Err(RlError::State(_))));
        b.push(tr(7));
        let s = b.sample_minibatch(4, &mut rng).unwrap();
        assert_eq!(s, vec![tr(7); 4]);
        assert!(b.sample_minibatch(0, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn sampling_is_uniform_chi_square() {
        let mut rng = ChaCha8Rng::seed_from_u64(12345);
        let mut b = ReplayBuffer::new(10).unwrap();
        for i in 0..10 {
            b.push(tr(i));
        }
        let mut counts = [0usize; 10];
        for t in b.sample_minibatch(100_000, &mut rng).unwrap() {
            counts[t.r as usize] += 1;
        }
        let e = 10_000.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        // chi-square critical value, 9 degrees of freedom, alpha = 0.01
        assert!(chi2 < 21.666, "chi2 = {chi2}");
    }

    #[test]
    fn batch_and_minibatch_draw_the_same_items() {
        let mut b = ReplayBuffer::new(8).unwrap();
        for i in 0..8 {
            b.push(tr(i));
        }
        let mut r1 = ChaCha8Rng::seed_from_u64(5);
        let mut r2 = ChaCha8Rng::seed_from_u64(5);
        let list = b.sample_minibatch(16, &mut r1).unwrap();
        let batch = b.sample_batch(16, &mut r2).unwrap();
        assert_eq!(Batch::from_transitions(&list).unwrap(), batch);
    }

    #[test]
    fn shared_buffer_with_concurrent_writer_and_reader() {
        let shared = SharedReplay::new(ReplayBuffer::new(64).unwrap());
        let writer = {
            let s = shared.clone();
            std::thread::spawn(move || {
                for i in 0..2000 {
                    s.push(tr(i));
                }
            })
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seen = 0;
        while seen < 200 {
            if let Ok(ts) = shared.sample_minibatch(4, &mut rng) {
                for t in ts {
                    assert_eq!(t.s_next[0], t.s[0] + 1.0);
                    assert!(t.r < 2000.0);
                }
                seen += 1;
            }
        }
        writer.join().unwrap();
        assert_eq!(shared.len(), 64);
    }

    proptest! {
        // Interleaved pushes and samples only ever return previously pushed
        // items, and the contents are always the most recent `capacity` ones.
        #[test]
        fn interleaving_never_invents_transitions(
            capacity in 1usize..=8,
            ops in prop::collection::vec(prop::bool::ANY, 1..64),
            seed in 0u64..1000,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut b = ReplayBuffer::new(capacity).unwrap();
            let mut pushed = 0usize;
            for push in ops {
                if push {
                    b.push(tr(pushed));
                    pushed += 1;
                } else if !b.is_empty() {
                    for t in b.sample_minibatch(3, &mut rng).unwrap() {
                        let id = t.r as usize;
                        prop_assert!(id < pushed);
                        prop_assert!(id + capacity >= pushed);
                    }
                }
                prop_assert_eq!(b.len(), pushed.min(capacity));
                let ids: Vec<usize> = b.iter_fifo().map(|t| t.r as usize).collect();
                let expected: Vec<usize> = (pushed.saturating_sub(capacity)..pushed).collect();
                prop_assert_eq!(ids, expected);
            }
        }
    }
}
