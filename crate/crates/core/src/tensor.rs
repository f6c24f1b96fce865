//! Dense tensors over the four chart indices, stored row-major.

use crate::jets::{Jet, NVARS};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<E> {
    rank: usize,
    data: Vec<E>,
}

pub type JetTensor = Tensor<Jet>;
pub type RealTensor = Tensor<f64>;

fn flat(idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * NVARS + i)
}

fn unflat(mut k: usize, rank: usize, out: &mut [usize]) {
    for slot in (0..rank).rev() {
        out[slot] = k % NVARS;
        k /= NVARS;
    }
}

impl<E> Tensor<E> {
    pub fn from_fn(rank: usize, mut f: impl FnMut(&[usize]) -> E) -> Self {
        let len = NVARS.pow(rank as u32);
        let mut idx = vec![0; rank];
        let data = (0..len)
            .map(|k| {
                unflat(k, rank, &mut idx);
                f(&idx)
            })
            .collect();
        Tensor { rank, data }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn data(&self) -> &[E] {
        &self.data
    }

    #[inline]
    pub fn at(&self, idx: &[usize]) -> &E {
        debug_assert_eq!(idx.len(), self.rank);
        &self.data[flat(idx)]
    }

    #[inline]
    pub fn at_mut(&mut self, idx: &[usize]) -> &mut E {
        &mut self.data[flat(idx)]
    }

    pub fn map<F>(&self, f: impl FnMut(&E) -> F) -> Tensor<F> {
        Tensor {
            rank: self.rank,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Multi-indices paired with entries.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<usize>, &E)> {
        let rank = self.rank;
        self.data.iter().enumerate().map(move |(k, e)| {
            let mut idx = vec![0; rank];
            unflat(k, rank, &mut idx);
            (idx, e)
        })
    }
}

impl JetTensor {
    pub fn zeros(rank: usize, order: usize) -> Self {
        Tensor::from_fn(rank, |_| Jet::zero(order))
    }

    pub fn order(&self) -> usize {
        self.data.iter().map(Jet::order).min().unwrap_or(0)
    }

    /// Constant terms.
    pub fn values(&self) -> RealTensor {
        self.map(Jet::value)
    }

    pub fn truncate(&self, order: usize) -> JetTensor {
        self.map(|j| j.truncate(order))
    }

    /// `∇T` for an all-lower tensor, derivative index first:
    /// `(∇T)_{e a..} = ∂_e T_{a..} − Σ_i Γ^f_{e a_i} T_{..f..}`.
    ///
    /// `gamma` holds `Γ^a_{bc}` at index `[a, b, c]`.
    pub fn covariant_derivative(&self, gamma: &JetTensor) -> JetTensor {
        let rank = self.rank;
        let mut inner = vec![0; rank];
        Tensor::from_fn(rank + 1, |idx| {
            let e = idx[0];
            let a = &idx[1..];
            let mut acc = self.at(a).diff(e);
            inner.copy_from_slice(a);
            for slot in 0..rank {
                for f in 0..NVARS {
                    inner[slot] = f;
                    let t = self.at(&inner);
                    let g = gamma.at(&[f, e, a[slot]]);
                    acc.sub_product(g, t);
                }
                inner[slot] = a[slot];
            }
            acc
        })
    }
}

impl RealTensor {
    pub fn zeros(rank: usize) -> Self {
        Tensor::from_fn(rank, |_| 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, other: &RealTensor) -> RealTensor {
        assert_eq!(self.rank, other.rank);
        Tensor {
            rank: self.rank,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add(&self, other: &RealTensor) -> RealTensor {
        assert_eq!(self.rank, other.rank);
        Tensor {
            rank: self.rank,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, k: f64) -> RealTensor {
        self.map(|v| v * k)
    }

    /// Raises (or lowers, given `g`) the index in `slot`.
    pub fn raise(&self, slot: usize, ginv: &[[f64; NVARS]; NVARS]) -> RealTensor {
        let mut inner = vec![0; self.rank];
        Tensor::from_fn(self.rank, |idx| {
            inner.copy_from_slice(idx);
            let mut acc = 0.0;
            for f in 0..NVARS {
                inner[slot] = f;
                acc += ginv[idx[slot]][f] * self.at(&inner);
            }
            acc
        })
    }

    pub fn raise_all(&self, ginv: &[[f64; NVARS]; NVARS]) -> RealTensor {
        (0..self.rank).fold(self.clone(), |t, slot| t.raise(slot, ginv))
    }

    /// Full contraction `T_{a..} S^{a..}` with indices raised by `ginv`.
    pub fn inner(&self, other: &RealTensor, ginv: &[[f64; NVARS]; NVARS]) -> f64 {
        let raised = other.raise_all(ginv);
        self.data.iter().zip(&raised.data).map(|(a, b)| a * b).sum()
    }

    /// Full contraction `T_{a..} T^{a..}`.
    pub fn full_norm_sq(&self, ginv: &[[f64; NVARS]; NVARS]) -> f64 {
        self.inner(self, ginv)
    }

    pub fn as_matrix(&self) -> [[f64; NVARS]; NVARS] {
        assert_eq!(self.rank, 2);
        std::array::from_fn(|a| std::array::from_fn(|b| *self.at(&[a, b])))
    }

    pub fn from_matrix(m: &[[f64; NVARS]; NVARS]) -> RealTensor {
        Tensor::from_fn(2, |i| m[i[0]][i[1]])
    }
}
