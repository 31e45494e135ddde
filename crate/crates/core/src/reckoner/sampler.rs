use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

/// One mini-batch of row indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub rows: Vec<usize>,
    /// True when this batch finishes a pass over the pool.
    pub epoch_end: bool,
}

/// Seeded sampler over a fixed pool of row indices. The pool is reshuffled
/// at the start of every pass; the final batch of a pass may be short.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    pool: Vec<usize>,
    order: Vec<usize>,
    pos: usize,
    batch_size: usize,
    rng: ChaCha8Rng,
    epochs: usize,
}

impl BatchSampler {
    /// `pool` must be nonempty and `batch_size` positive.
    pub fn new(pool: Vec<usize>, batch_size: usize, rng: ChaCha8Rng) -> Self {
        assert!(!pool.is_empty() && batch_size > 0, "sampler needs rows and a positive batch size");
        BatchSampler {
            order: pool.clone(),
            pool,
            pos: 0,
            batch_size,
            rng,
            epochs: 0,
        }
    }

    pub fn pool_len(&self) -> usize {
        self.pool.len()
    }

    /// Completed passes so far.
    pub fn epochs(&self) -> usize {
        self.epochs
    }

    /// True when the next batch starts a new pass.
    pub fn at_epoch_start(&self) -> bool {
        self.pos == 0
    }

    pub fn next_batch(&mut self) -> Batch {
        if self.pos == 0 {
            self.order.copy_from_slice(&self.pool);
            self.order.shuffle(&mut self.rng);
        }
        let end = (self.pos + self.batch_size).min(self.order.len());
        let rows = self.order[self.pos..end].to_vec();
        let epoch_end = end == self.order.len();
        if epoch_end {
            self.pos = 0;
            self.epochs += 1;
        } else {
            self.pos = end;
        }
        Batch { rows, epoch_end }
    }
}
