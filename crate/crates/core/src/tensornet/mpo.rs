use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::tensor::OperatorTensor;
use crate::bits::Bitstring;
use crate::error::{GroverError, Result};
use crate::linalg::{self, c, ONE};

/// Matrix-product operator with rank-4 site tensors (left × out × in × right).
#[derive(Clone, Debug, PartialEq)]
pub struct Mpo {
    sites: Vec<OperatorTensor>,
    label: String,
}

fn mat2(m: &linalg::Mat2) -> DMatrix<C64> {
    DMatrix::from_fn(2, 2, |r, k| m[(r, k)])
}

impl Mpo {
    pub fn from_sites(sites: Vec<OperatorTensor>, label: impl Into<String>) -> Result<Self> {
        if sites.is_empty() {
            return Err(GroverError::Domain("empty MPO".into()));
        }
        if sites[0].left != 1 || sites[sites.len() - 1].right != 1 {
            return Err(GroverError::Validation("MPO boundary bonds must have dimension 1".into()));
        }
        if sites.windows(2).any(|w| w[0].right != w[1].left) {
            return Err(GroverError::Validation("MPO bond dimensions do not match".into()));
        }
        Ok(Mpo { sites, label: label.into() })
    }

    pub fn identity(n: usize, phys: usize) -> Self {
        let id = DMatrix::<C64>::identity(phys, phys);
        let sites = (0..n)
            .map(|_| {
                let mut t = OperatorTensor::zeros(1, phys, 1);
                t.set_block(0, 0, &id);
                t
            })
            .collect();
        Mpo { sites, label: "identity".into() }
    }

    /// Two-term sum `first ⊗ … ⊗ first + second_0 ⊗ … ⊗ coeff·second_{n−1}`
    /// with bond dimension 2; the coefficients live on the last site.
    fn two_term(
        first: &[DMatrix<C64>],
        first_coeff: C64,
        second: &[DMatrix<C64>],
        second_coeff: C64,
        label: &str,
    ) -> Self {
        let n = first.len();
        let phys = first[0].nrows();
        if n == 1 {
            let mut t = OperatorTensor::zeros(1, phys, 1);
            t.set_block(0, 0, &(&first[0] * first_coeff + &second[0] * second_coeff));
            return Mpo { sites: vec![t], label: label.into() };
        }
        let mut sites = Vec::with_capacity(n);
        let mut head = OperatorTensor::zeros(1, phys, 2);
        head.set_block(0, 0, &first[0]);
        head.set_block(0, 1, &second[0]);
        sites.push(head);
        for j in 1..n - 1 {
            let mut mid = OperatorTensor::zeros(2, phys, 2);
            mid.set_block(0, 0, &first[j]);
            mid.set_block(1, 1, &second[j]);
            sites.push(mid);
        }
        let mut tail = OperatorTensor::zeros(2, phys, 1);
        tail.set_block(0, 0, &(&first[n - 1] * first_coeff));
        tail.set_block(1, 0, &(&second[n - 1] * second_coeff));
        sites.push(tail);
        Mpo { sites, label: label.into() }
    }

    /// U_ω = 1 − 2 ⊗_j |ω_j⟩⟨ω_j|.
    pub fn oracle(omega: &Bitstring) -> Self {
        let n = omega.len();
        let id = vec![DMatrix::<C64>::identity(2, 2); n];
        let proj: Vec<_> = omega.bits().iter().map(|&b| mat2(&linalg::projector(b))).collect();
        Self::two_term(&id, ONE, &proj, c(-2.0), "oracle")
    }

    /// U_s = 2 ⊗_j |+⟩⟨+| − 1.
    pub fn diffusion(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(GroverError::Domain(format!("diffusion needs n >= 2, got {n}")));
        }
        let id = vec![DMatrix::<C64>::identity(2, 2); n];
        let plus = vec![mat2(&linalg::plus_projector()); n];
        Ok(Self::two_term(&id, c(-1.0), &plus, c(2.0), "diffusion"))
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[OperatorTensor] {
        &self.sites
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn phys(&self) -> usize {
        self.sites[0].phys
    }

    pub fn max_bond(&self) -> usize {
        self.sites[..self.sites.len() - 1].iter().map(|s| s.right).max().unwrap_or(1)
    }

    /// Dense matrix (small n only), site 0 most significant.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let d = self.phys();
        let dim = d.pow(self.sites.len() as u32);
        let digits = |mut x: usize| {
            let mut out = vec![0; self.sites.len()];
            for slot in out.iter_mut().rev() {
                *slot = x % d;
                x /= d;
            }
            out
        };
        DMatrix::from_fn(dim, dim, |row, col| {
            let (o, i) = (digits(row), digits(col));
            let mut env = DMatrix::from_element(1, 1, ONE);
            for (k, w) in self.sites.iter().enumerate() {
                let m = DMatrix::from_fn(w.left, w.right, |l, r| w.get(l, o[k], i[k], r));
                env *= m;
            }
            env[(0, 0)]
        })
    }
}
