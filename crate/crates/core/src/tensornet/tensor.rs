use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::linalg::{self, ZERO};

/// Rank-3 site tensor (left bond × physical × right bond), row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteTensor {
    pub left: usize,
    pub phys: usize,
    pub right: usize,
    pub data: Vec<C64>,
}

impl SiteTensor {
    pub fn zeros(left: usize, phys: usize, right: usize) -> Self {
        SiteTensor { left, phys, right, data: vec![ZERO; left * phys * right] }
    }

    /// Bond-dimension-one tensor holding a local vector.
    pub fn product(local: &[C64]) -> Self {
        SiteTensor { left: 1, phys: local.len(), right: 1, data: local.to_vec() }
    }

    #[inline]
    pub fn idx(&self, l: usize, s: usize, r: usize) -> usize {
        (l * self.phys + s) * self.right + r
    }

    #[inline]
    pub fn get(&self, l: usize, s: usize, r: usize) -> C64 {
        self.data[self.idx(l, s, r)]
    }

    /// (left·phys) × right view.
    pub fn left_fused(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.left * self.phys, self.right, &self.data)
    }

    /// left × (phys·right) view.
    pub fn right_fused(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.left, self.phys * self.right, &self.data)
    }

    pub fn from_left_fused(m: &DMatrix<C64>, phys: usize) -> Self {
        debug_assert_eq!(m.nrows() % phys, 0);
        SiteTensor { left: m.nrows() / phys, phys, right: m.ncols(), data: linalg::row_major(m) }
    }

    pub fn from_right_fused(m: &DMatrix<C64>, phys: usize) -> Self {
        debug_assert_eq!(m.ncols() % phys, 0);
        SiteTensor { left: m.nrows(), phys, right: m.ncols() / phys, data: linalg::row_major(m) }
    }

    /// Slice A[:, s, :] as a left × right matrix.
    pub fn slice(&self, s: usize) -> DMatrix<C64> {
        DMatrix::from_fn(self.left, self.right, |l, r| self.get(l, s, r))
    }

    /// Σ_s w_s A[:, s, :].
    pub fn weighted_slice(&self, weights: &[C64]) -> DMatrix<C64> {
        DMatrix::from_fn(self.left, self.right, |l, r| {
            (0..self.phys).map(|s| weights[s] * self.get(l, s, r)).sum()
        })
    }

    /// Contract a phys × phys operator into the physical leg.
    pub fn apply_local(&self, op: &DMatrix<C64>) -> Self {
        let mut out = SiteTensor::zeros(self.left, self.phys, self.right);
        for l in 0..self.left {
            for s in 0..self.phys {
                for r in 0..self.right {
                    let v: C64 = (0..self.phys).map(|t| op[(s, t)] * self.get(l, t, r)).sum();
                    let i = out.idx(l, s, r);
                    out.data[i] = v;
                }
            }
        }
        out
    }

    pub fn scale(&mut self, factor: C64) {
        self.data.iter_mut().for_each(|z| *z *= factor);
    }

    pub fn frobenius_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Rank-4 operator tensor (left × out × in × right), row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorTensor {
    pub left: usize,
    pub phys: usize,
    pub right: usize,
    pub data: Vec<C64>,
}

impl OperatorTensor {
    pub fn zeros(left: usize, phys: usize, right: usize) -> Self {
        OperatorTensor { left, phys, right, data: vec![ZERO; left * phys * phys * right] }
    }

    #[inline]
    pub fn idx(&self, l: usize, o: usize, i: usize, r: usize) -> usize {
        ((l * self.phys + o) * self.phys + i) * self.right + r
    }

    #[inline]
    pub fn get(&self, l: usize, o: usize, i: usize, r: usize) -> C64 {
        self.data[self.idx(l, o, i, r)]
    }

    /// Place a phys × phys block at bond position (l, r).
    pub fn set_block(&mut self, l: usize, r: usize, block: &DMatrix<C64>) {
        for o in 0..self.phys {
            for i in 0..self.phys {
                let k = self.idx(l, o, i, r);
                self.data[k] = block[(o, i)];
            }
        }
    }

    /// Block W[l, :, :, r].
    pub fn block(&self, l: usize, r: usize) -> DMatrix<C64> {
        DMatrix::from_fn(self.phys, self.phys, |o, i| self.get(l, o, i, r))
    }

    /// Contract with a state tensor: (l·wl + w, o, r·wr + v).
    pub fn contract_site(&self, a: &SiteTensor) -> SiteTensor {
        debug_assert_eq!(a.phys, self.phys);
        let (wl, wr, d) = (self.left, self.right, self.phys);
        let mut out = SiteTensor::zeros(a.left * wl, d, a.right * wr);
        for w in 0..wl {
            for v in 0..wr {
                for o in 0..d {
                    for i in 0..d {
                        let coeff = self.get(w, o, i, v);
                        if coeff == ZERO {
                            continue;
                        }
                        for l in 0..a.left {
                            for r in 0..a.right {
                                let k = out.idx(l * wl + w, o, r * wr + v);
                                out.data[k] += coeff * a.get(l, i, r);
                            }
                        }
                    }
                }
            }
        }
        out
    }
}
