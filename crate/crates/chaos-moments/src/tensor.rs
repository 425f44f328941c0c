//! Dense nonnegative coefficient tensors `a_{i1..id}`.
//!
//! Tensors are stored row-major over `side^order` entries. Two optional
//! structural flags are validated at construction: `symmetric` (invariance
//! under index permutations) and `tetrahedral` (zero whenever two indices
//! coincide).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Desk-scale caps; the block-ascent sweep is `O(d * n^d)` per iteration.
pub const MAX_ORDER: usize = 4;
pub const MAX_SIDE: usize = 64;

#[derive(Debug, Clone)]
pub struct CoefficientTensor {
    order: usize,
    side: usize,
    entries: Vec<f64>,
    symmetric: bool,
    tetrahedral: bool,
}

impl CoefficientTensor {
    pub fn new(
        order: usize,
        side: usize,
        entries: Vec<f64>,
        symmetric: bool,
        tetrahedral: bool,
    ) -> Result<Self> {
        if order == 0 || order > MAX_ORDER {
            return Err(Error::InvalidParameter(format!(
                "tensor order must be 1..={MAX_ORDER}, got {order}"
            )));
        }
        if side == 0 || side > MAX_SIDE {
            return Err(Error::InvalidParameter(format!(
                "tensor side must be 1..={MAX_SIDE}, got {side}"
            )));
        }
        let expected = side.pow(order as u32);
        if entries.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "expected {expected} entries for order {order}, side {side}; got {}",
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|e| !e.is_finite() || **e < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "entries must be finite and nonnegative, got {bad}"
            )));
        }
        let t = Self {
            order,
            side,
            entries,
            symmetric,
            tetrahedral,
        };
        if tetrahedral {
            t.validate_tetrahedral()?;
        }
        if symmetric {
            t.validate_symmetric()?;
        }
        Ok(t)
    }

    /// Order-1 tensor from a coefficient vector.
    pub fn from_vector(b: &[f64]) -> Result<Self> {
        Self::new(1, b.len(), b.to_vec(), false, false)
    }

    /// The first standard basis vector as an order-1 tensor of length `n`.
    pub fn basis_vector(n: usize) -> Result<Self> {
        let mut e = vec![0.0; n];
        e[0] = 1.0;
        Self::from_vector(&e)
    }

    /// Dense random tensor with i.i.d. Uniform(0,1) entries kept with
    /// probability `density` (deterministic in `seed`).
    pub fn random_sparse(order: usize, side: usize, density: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries = (0..side.pow(order as u32))
            .map(|_| {
                let keep = rng.gen::<f64>() < density;
                let v = rng.gen::<f64>();
                if keep {
                    v
                } else {
                    0.0
                }
            })
            .collect();
        Self::new(order, side, entries, false, false)
    }

    /// Random symmetric tensor with zero generalized diagonal: entries on
    /// sorted distinct index tuples are drawn i.i.d. and mirrored to all
    /// permutations.
    pub fn random_tetrahedral_symmetric(
        order: usize,
        side: usize,
        density: f64,
        seed: u64,
    ) -> Result<Self> {
        if side < order {
            return Err(Error::InvalidParameter(format!(
                "need side >= order for a nonzero tetrahedral tensor ({side} < {order})"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let total = side.pow(order as u32);
        let mut entries = vec![0.0; total];
        let mut idx = vec![0usize; order];
        loop {
            let strictly_increasing = idx.windows(2).all(|w| w[0] < w[1]);
            if strictly_increasing {
                let keep = rng.gen::<f64>() < density;
                let v = rng.gen::<f64>();
                if keep {
                    let mut perm = idx.clone();
                    fill_permutations(&mut perm, 0, side, v, &mut entries);
                }
            }
            if !advance(&mut idx, side) {
                break;
            }
        }
        Self::new(order, side, entries, true, true)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_tetrahedral(&self) -> bool {
        self.tetrahedral
    }

    pub fn flat(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.order);
        let mut f = 0;
        for &i in index {
            debug_assert!(i < self.side);
            f = f * self.side + i;
        }
        f
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.entries[self.flat(index)]
    }

    /// Decode a flat position into index digits (most significant first).
    pub fn unflatten(&self, mut flat: usize, out: &mut [usize]) {
        for slot in (0..self.order).rev() {
            out[slot] = flat % self.side;
            flat /= self.side;
        }
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().sum()
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(
            self.order,
            self.side,
            self.entries.iter().map(|e| e * lambda).collect(),
            self.symmetric,
            self.tetrahedral,
        )
    }

    /// Nonzero entries as `(index tuple, coefficient)` pairs, in flat order.
    pub fn nonzero(&self) -> Vec<(Vec<usize>, f64)> {
        let mut out = Vec::new();
        let mut idx = vec![0usize; self.order];
        for (f, &v) in self.entries.iter().enumerate() {
            if v != 0.0 {
                self.unflatten(f, &mut idx);
                out.push((idx.clone(), v));
            }
        }
        out
    }

    fn validate_tetrahedral(&self) -> Result<()> {
        let mut idx = vec![0usize; self.order];
        for (f, &v) in self.entries.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            self.unflatten(f, &mut idx);
            for a in 0..self.order {
                for b in a + 1..self.order {
                    if idx[a] == idx[b] {
                        return Err(Error::NotTetrahedral(format!(
                            "entry {idx:?} = {v} sits on the generalized diagonal"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn validate_symmetric(&self) -> Result<()> {
        let mut idx = vec![0usize; self.order];
        let mut sorted = vec![0usize; self.order];
        for f in 0..self.entries.len() {
            self.unflatten(f, &mut idx);
            sorted.copy_from_slice(&idx);
            sorted.sort_unstable();
            let canon = self.flat(&sorted);
            if (self.entries[f] - self.entries[canon]).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "tensor not symmetric at {idx:?}: {} vs {}",
                    self.entries[f], self.entries[canon]
                )));
            }
        }
        Ok(())
    }
}

fn advance(idx: &mut [usize], side: usize) -> bool {
    for slot in (0..idx.len()).rev() {
        idx[slot] += 1;
        if idx[slot] < side {
            return true;
        }
        idx[slot] = 0;
    }
    false
}

fn fill_permutations(idx: &mut Vec<usize>, from: usize, side: usize, v: f64, entries: &mut [f64]) {
    if from + 1 >= idx.len() {
        let mut f = 0;
        for &i in idx.iter() {
            f = f * side + i;
        }
        entries[f] = v;
        return;
    }
    for j in from..idx.len() {
        idx.swap(from, j);
        fill_permutations(idx, from + 1, side, v, entries);
        idx.swap(from, j);
    }
}
