use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::chain::{Chain, TruncationPolicy};
use super::mpo::Mpo;
use crate::bits::Bitstring;
use crate::error::{GroverError, Result};
use crate::linalg::{c, Mat2, ZERO};

/// Pure n-qubit state as a matrix-product state.
#[derive(Clone, Debug, PartialEq)]
pub struct MpsState {
    chain: Chain,
}

fn mat(op: &Mat2) -> DMatrix<C64> {
    DMatrix::from_fn(2, 2, |r, k| op[(r, k)])
}

impl MpsState {
    /// Product state from normalized single-qubit vectors.
    pub fn from_product(locals: &[[C64; 2]]) -> Result<Self> {
        for (j, v) in locals.iter().enumerate() {
            let nrm = v[0].norm_sqr() + v[1].norm_sqr();
            if (nrm - 1.0).abs() > 1e-12 {
                return Err(GroverError::Domain(format!("local vector {j} has squared norm {nrm}")));
            }
        }
        let vecs: Vec<Vec<C64>> = locals.iter().map(|v| v.to_vec()).collect();
        let mut chain = Chain::from_product(&vecs)?;
        chain.set_center(Some(0));
        Ok(MpsState { chain })
    }

    /// |+⟩^⊗n.
    pub fn uniform(n: usize) -> Result<Self> {
        let h = c(std::f64::consts::FRAC_1_SQRT_2);
        Self::from_product(&vec![[h, h]; n])
    }

    pub fn basis(bits: &Bitstring) -> Result<Self> {
        let locals: Vec<[C64; 2]> =
            bits.bits().iter().map(|&b| if b == 0 { [c(1.0), ZERO] } else { [ZERO, c(1.0)] }).collect();
        Self::from_product(&locals)
    }

    pub fn from_dense(amps: &[C64], policy: &TruncationPolicy) -> Result<Self> {
        if !amps.len().is_power_of_two() || amps.len() < 2 {
            return Err(GroverError::Domain("amplitude vector length is not 2^n".into()));
        }
        let n = amps.len().trailing_zeros() as usize;
        Ok(MpsState { chain: Chain::from_dense(amps, 2, n, policy)? })
    }

    pub fn n(&self) -> usize {
        self.chain.len()
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn discarded_weight(&self) -> f64 {
        self.chain.discarded_weight()
    }

    pub fn canonical_center(&self) -> Option<usize> {
        self.chain.center()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.chain.bond_dims()
    }

    pub fn max_bond(&self) -> usize {
        self.chain.max_bond()
    }

    pub fn norm(&mut self) -> f64 {
        self.chain.norm()
    }

    pub fn normalize(&mut self) -> f64 {
        self.chain.normalize()
    }

    /// Apply an MPO and compress; returns the weight discarded by this call.
    pub fn apply_mpo(&mut self, mpo: &Mpo, policy: &TruncationPolicy) -> Result<f64> {
        if mpo.phys() != 2 {
            return Err(GroverError::Domain("MPO is not a qubit operator".into()));
        }
        let w = self.chain.apply_mpo(mpo, policy)?;
        if policy.renormalize {
            self.chain.normalize();
        }
        Ok(w)
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n() {
            return Err(GroverError::Domain(format!("qubit {q} out of range for n = {}", self.n())));
        }
        Ok(())
    }

    /// Contract a single-qubit operator. Returns the squared norm after the
    /// operator (the Born weight for a Kraus operator on a normalized state);
    /// with `renormalize` the state is rescaled to unit norm.
    pub fn apply_local_op(&mut self, q: usize, op: &Mat2, renormalize: bool) -> Result<f64> {
        self.check_qubit(q)?;
        self.chain.move_center(q);
        let before = self.chain.norm().powi(2);
        self.chain.apply_local(q, &mat(op));
        let after = self.chain.norm().powi(2);
        if renormalize {
            if after <= 0.0 || !after.is_finite() {
                return Err(GroverError::ImpossibleOutcome(after));
            }
            self.chain.scale(c(1.0 / after.sqrt()));
        }
        Ok(if before > 0.0 { after / before } else { after })
    }

    /// Single-qubit reduced density matrix.
    pub fn local_density(&mut self, q: usize) -> Result<Mat2> {
        self.check_qubit(q)?;
        let g = self.chain.local_gram(q);
        Ok(Mat2::new(g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]))
    }

    /// ⟨ψ|op_q|ψ⟩ / ⟨ψ|ψ⟩ via the canonical center.
    pub fn local_expectation(&mut self, q: usize, op: &Mat2) -> Result<C64> {
        let rho = self.local_density(q)?;
        Ok((0..2).flat_map(|s| (0..2).map(move |t| (s, t))).map(|(s, t)| rho[(s, t)] * op[(t, s)]).sum())
    }

    /// Entanglement entropy in bits across the bond after `cut` qubits.
    pub fn bipartite_entropy(&mut self, cut: usize) -> Result<f64> {
        self.chain.bond_entropy(cut)
    }

    pub fn schmidt_values(&mut self, cut: usize) -> Result<Vec<f64>> {
        let mut sv = self.chain.bond_singular_values(cut)?;
        let total: f64 = sv.iter().map(|s| s * s).sum::<f64>().sqrt();
        if total > 0.0 {
            sv.iter_mut().for_each(|s| *s /= total);
        }
        Ok(sv)
    }

    pub fn amplitude(&self, bits: &Bitstring) -> Result<C64> {
        bits.expect_len(self.n())?;
        let config: Vec<usize> = bits.bits().iter().map(|&b| b as usize).collect();
        Ok(self.chain.amplitude(&config))
    }

    /// |⟨ω|ψ⟩|² / ⟨ψ|ψ⟩.
    pub fn success_probability(&mut self, omega: &Bitstring) -> Result<f64> {
        let amp = self.amplitude(omega)?;
        let nrm = self.chain.norm();
        Ok(amp.norm_sqr() / (nrm * nrm))
    }

    pub fn overlap(&self, other: &MpsState) -> C64 {
        self.chain.inner(&other.chain)
    }

    pub fn to_dense(&self) -> Vec<C64> {
        self.chain.to_dense()
    }
}
