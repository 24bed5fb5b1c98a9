//! Matrix-product density operators.
//!
//! A density matrix on n qubits is stored as a chain with local dimension 4,
//! site index `2i + j` for the local entry |i⟩⟨j|. Unitary MPOs are lifted to
//! superoperators W ⊗ conj(W), channels act through their 4×4 superoperator.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::bits::Bitstring;
use crate::channels::{local_superoperator, KrausChannel};
use crate::error::{GroverError, Result};
use crate::linalg::{self, c, Mat2, ONE, ZERO};
use crate::tensornet::{Chain, Mpo, OperatorTensor, TruncationPolicy};
use crate::trace::{RunRecord, RunTrace};

/// Raw trace drift above this after a compression is reported as an error.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;

const TRACE_VEC: [C64; 4] = [ONE, ZERO, ZERO, ONE];

#[derive(Clone, Debug, PartialEq)]
pub struct MpdoState {
    chain: Chain,
    /// Σ ln of the trace factors divided out by renormalization.
    log_trace: f64,
    /// Largest raw |Tr ρ − 1| seen before a renormalization.
    max_drift: f64,
}

fn vectorize(op: &Mat2) -> Vec<C64> {
    (0..4).map(|s| op[(s / 2, s % 2)]).collect()
}

/// Weights w with Σ_s w_s ρ_s = Tr(ρ A) for a local operator A.
fn observable_weights(a: &Mat2) -> Vec<C64> {
    (0..4).map(|s| a[(s % 2, s / 2)]).collect()
}

fn swap_index(s: usize) -> usize {
    2 * (s % 2) + s / 2
}

/// Multi-site vectorized index for ρ[i, j] on `len` qubits.
fn interleave(i: usize, j: usize, len: usize) -> usize {
    (0..len).fold(0usize, |acc, k| {
        let shift = len - 1 - k;
        (acc << 2) | (((i >> shift) & 1) << 1) | ((j >> shift) & 1)
    })
}

/// Superoperator of a unitary MPO: site tensors W ⊗ conj(W), bond b².
pub fn lift_unitary_mpo(mpo: &Mpo) -> Result<Mpo> {
    let sites = mpo
        .sites()
        .iter()
        .map(|w| {
            let (b_l, b_r, d) = (w.left, w.right, w.phys);
            let mut out = OperatorTensor::zeros(b_l * b_l, d * d, b_r * b_r);
            for l in 0..b_l {
                for lc in 0..b_l {
                    for r in 0..b_r {
                        for rc in 0..b_r {
                            for o in 0..d {
                                for oc in 0..d {
                                    for i in 0..d {
                                        for ic in 0..d {
                                            let v = w.get(l, o, i, r) * w.get(lc, oc, ic, rc).conj();
                                            let k = out.idx(l * b_l + lc, o * d + oc, i * d + ic, r * b_r + rc);
                                            out.data[k] = v;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
            out
        })
        .collect();
    Mpo::from_sites(sites, format!("{}-superop", mpo.label()))
}

impl MpdoState {
    /// ⊗_k |v_k⟩⟨v_k| from normalized single-qubit vectors.
    pub fn from_pure_product(locals: &[[C64; 2]]) -> Result<Self> {
        for (j, v) in locals.iter().enumerate() {
            let nrm = v[0].norm_sqr() + v[1].norm_sqr();
            if (nrm - 1.0).abs() > 1e-12 {
                return Err(GroverError::Domain(format!("local vector {j} has squared norm {nrm}")));
            }
        }
        let vecs: Vec<Vec<C64>> = locals
            .iter()
            .map(|v| vec![v[0] * v[0].conj(), v[0] * v[1].conj(), v[1] * v[0].conj(), v[1] * v[1].conj()])
            .collect();
        Self::from_product_operators_raw(vecs)
    }

    /// Uniform superposition |s⟩⟨s|.
    pub fn uniform(n: usize) -> Result<Self> {
        let h = c(std::f64::consts::FRAC_1_SQRT_2);
        Self::from_pure_product(&vec![[h, h]; n])
    }

    pub fn basis(bits: &Bitstring) -> Result<Self> {
        let locals: Vec<[C64; 2]> =
            bits.bits().iter().map(|&b| if b == 0 { [ONE, ZERO] } else { [ZERO, ONE] }).collect();
        Self::from_pure_product(&locals)
    }

    /// 1/2ⁿ.
    pub fn maximally_mixed(n: usize) -> Result<Self> {
        Self::from_product_operators_raw(vec![vec![c(0.5), ZERO, ZERO, c(0.5)]; n])
    }

    /// Product of arbitrary single-qubit operators (not checked for positivity).
    pub fn from_product_operators(ops: &[Mat2]) -> Result<Self> {
        Self::from_product_operators_raw(ops.iter().map(vectorize).collect())
    }

    fn from_product_operators_raw(vecs: Vec<Vec<C64>>) -> Result<Self> {
        let chain = Chain::from_product(&vecs)?;
        Ok(MpdoState { chain, log_trace: 0.0, max_drift: 0.0 })
    }

    /// Decompose a dense density matrix (rows/columns indexed MSB = site 0).
    pub fn from_density_matrix(rho: &DMatrix<C64>, policy: &TruncationPolicy) -> Result<Self> {
        let dim = rho.nrows();
        if dim != rho.ncols() || !dim.is_power_of_two() || dim < 2 {
            return Err(GroverError::Domain("density matrix must be square with size 2^n".into()));
        }
        let n = dim.trailing_zeros() as usize;
        let mut vec = vec![ZERO; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                vec[interleave(i, j, n)] = rho[(i, j)];
            }
        }
        let chain = Chain::from_dense(&vec, 4, n, policy)?;
        Ok(MpdoState { chain, log_trace: 0.0, max_drift: 0.0 })
    }

    /// Dense matrix (small n only).
    pub fn to_density_matrix(&self) -> DMatrix<C64> {
        let n = self.n();
        let dim = 1usize << n;
        let vec = self.chain.to_dense();
        DMatrix::from_fn(dim, dim, |i, j| vec[interleave(i, j, n)])
    }

    pub fn n(&self) -> usize {
        self.chain.len()
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.chain.bond_dims()
    }

    pub fn max_bond(&self) -> usize {
        self.chain.max_bond()
    }

    pub fn discarded_weight(&self) -> f64 {
        self.chain.discarded_weight()
    }

    pub fn log_trace(&self) -> f64 {
        self.log_trace
    }

    pub fn max_trace_drift(&self) -> f64 {
        self.max_drift
    }

    pub fn trace(&self) -> f64 {
        self.trace_complex().re
    }

    fn trace_complex(&self) -> C64 {
        self.chain.contract_with_vectors(&vec![TRACE_VEC.to_vec(); self.n()])
    }

    /// Divide by the trace; returns the raw drift |Tr ρ − 1|.
    pub fn renormalize_trace(&mut self) -> Result<f64> {
        let tr = self.trace_complex();
        if !(tr.norm() > 0.0) || !tr.re.is_finite() {
            return Err(GroverError::State(format!("density operator trace collapsed to {tr}")));
        }
        let drift = (tr - ONE).norm();
        self.chain.scale(ONE / tr);
        self.log_trace += tr.re.ln();
        self.max_drift = self.max_drift.max(drift);
        Ok(drift)
    }

    /// Apply a single-qubit channel through its superoperator.
    pub fn apply_channel_local(&mut self, qubit: usize, ch: &KrausChannel) -> Result<()> {
        self.check_qubit(qubit)?;
        let sup = local_superoperator(ch);
        let op = DMatrix::from_fn(4, 4, |r, k| sup[(r, k)]);
        self.chain.apply_local(qubit, &op);
        Ok(())
    }

    pub fn apply_channel_all(&mut self, ch: &KrausChannel) -> Result<()> {
        (0..self.n()).try_for_each(|q| self.apply_channel_local(q, ch))
    }

    /// Apply a superoperator MPO (physical dimension 4), compress to
    /// `policy` and renormalize the trace. Returns the raw trace drift.
    pub fn apply_superoperator(&mut self, sup: &Mpo, policy: &TruncationPolicy) -> Result<f64> {
        if sup.phys() != 4 {
            return Err(GroverError::Domain("superoperator MPO must have physical dimension 4".into()));
        }
        let raw = TruncationPolicy { renormalize: false, ..*policy };
        self.chain.apply_mpo(sup, &raw)?;
        self.renormalize_trace()
    }

    /// Exact contraction with a superoperator MPO; bonds multiply.
    pub fn contract_superoperator(&mut self, sup: &Mpo) -> Result<()> {
        if sup.phys() != 4 {
            return Err(GroverError::Domain("superoperator MPO must have physical dimension 4".into()));
        }
        self.chain.contract_mpo(sup)
    }

    /// Compress to `policy` (without 2-norm rescaling) and renormalize the
    /// trace; returns the raw trace drift.
    pub fn compress(&mut self, policy: &TruncationPolicy) -> Result<f64> {
        let raw = TruncationPolicy { renormalize: false, ..*policy };
        self.chain.compress(&raw);
        self.renormalize_trace()
    }

    /// U ρ U† for a unitary MPO.
    pub fn apply_unitary_mpo(&mut self, mpo: &Mpo, policy: &TruncationPolicy) -> Result<f64> {
        let sup = lift_unitary_mpo(mpo)?;
        self.apply_superoperator(&sup, policy)
    }

    /// Tr(ρ ⊗_k A_k).
    pub fn expectation_product(&self, ops: &[Mat2]) -> Result<C64> {
        if ops.len() != self.n() {
            return Err(GroverError::Domain(format!("{} operators for {} sites", ops.len(), self.n())));
        }
        let weights: Vec<Vec<C64>> = ops.iter().map(observable_weights).collect();
        Ok(self.chain.contract_with_vectors(&weights))
    }

    /// Tr(ρ A_q) for an operator on one qubit.
    pub fn local_expectation(&self, qubit: usize, op: &Mat2) -> Result<C64> {
        self.check_qubit(qubit)?;
        let mut ops = vec![linalg::identity2(); self.n()];
        ops[qubit] = *op;
        self.expectation_product(&ops)
    }

    /// Tr(ρ |ω⟩⟨ω|).
    pub fn success_probability(&self, omega: &Bitstring) -> Result<f64> {
        omega.expect_len(self.n())?;
        let weights: Vec<Vec<C64>> = omega
            .bits()
            .iter()
            .map(|&b| {
                let mut w = vec![ZERO; 4];
                w[3 * b as usize] = ONE;
                w
            })
            .collect();
        Ok(self.chain.contract_with_vectors(&weights).re)
    }

    /// Tr ρ² through the transfer Σ_s A[s] ⊗ A[swap(s)].
    pub fn purity(&self) -> f64 {
        let mut env = DMatrix::from_element(1, 1, ONE);
        for site in self.chain.sites() {
            let mut next = DMatrix::<C64>::zeros(site.right, site.right);
            for s in 0..4 {
                next += site.slice(s).transpose() * &env * site.slice(swap_index(s));
            }
            env = next;
        }
        env[(0, 0)].re
    }

    /// max |⟨A⟩ − conj⟨A†⟩| over single-site and nearest-neighbour probes.
    pub fn hermiticity_residual(&self) -> f64 {
        let probes = [
            linalg::sigma_minus(),
            linalg::pauli_x(),
            linalg::pauli_y(),
            linalg::pauli_z(),
            Mat2::new(c(0.3), C64::new(0.1, -0.7), C64::new(-0.4, 0.2), C64::new(0.0, 0.5)),
        ];
        let n = self.n();
        let mut worst = 0.0f64;
        let mut check = |ops: Vec<Mat2>| {
            let adj: Vec<Mat2> = ops.iter().map(|a| a.adjoint()).collect();
            let a = self.expectation_product(&ops).unwrap_or(ZERO);
            let b = self.expectation_product(&adj).unwrap_or(ZERO);
            worst = worst.max((a - b.conj()).norm());
        };
        for q in 0..n {
            for p in &probes {
                let mut ops = vec![linalg::identity2(); n];
                ops[q] = *p;
                check(ops);
            }
            if q + 1 < n {
                let mut ops = vec![linalg::identity2(); n];
                ops[q] = probes[0];
                ops[q + 1] = probes[4];
                check(ops);
            }
        }
        worst
    }

    /// Entropy in bits of the Frobenius-normalized operator Schmidt spectrum.
    pub fn operator_entanglement(&mut self, cut: usize) -> Result<f64> {
        self.chain.bond_entropy(cut)
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n() {
            return Err(GroverError::Domain(format!("qubit {qubit} out of range for n = {}", self.n())));
        }
        Ok(())
    }
}

/// Grover run on an MPDO: per iteration the lifted oracle, the lifted
/// diffusion, then `channel` on every qubit, followed by compression to
/// `policy` and trace renormalization. The intermediate state after the
/// oracle is only stripped of singular values below the cutoff, since its
/// operator rank can exceed that of the post-noise state. Records success
/// probability and equal-cut OE.
pub fn run_grover_mpdo(
    omega: &Bitstring,
    channel: Option<&KrausChannel>,
    iters: usize,
    policy: &TruncationPolicy,
) -> Result<RunTrace> {
    let n = omega.len();
    if n < 2 {
        return Err(GroverError::Domain(format!("need at least 2 qubits, got {n}")));
    }
    if policy.chi_max < 2 {
        return Err(GroverError::Validation("MPDO runs need chi_max >= 2".into()));
    }
    if let Some(ch) = channel {
        ch.validate()?;
    }
    let oracle = lift_unitary_mpo(&Mpo::oracle(omega))?;
    let diffusion = lift_unitary_mpo(&Mpo::diffusion(n)?)?;
    let cut = n / 2;
    let lossless = TruncationPolicy { chi_max: usize::MAX, ..*policy };
    let mut rho = MpdoState::uniform(n)?;
    let mut trace = RunTrace::with_capacity(iters + 1);
    trace.push(RunRecord::new(0, rho.success_probability(omega)?, rho.operator_entanglement(cut)?));
    for k in 1..=iters {
        rho.contract_superoperator(&oracle)?;
        let d1 = rho.compress(&lossless)?;
        rho.contract_superoperator(&diffusion)?;
        if let Some(ch) = channel {
            rho.apply_channel_all(ch)?;
        }
        let drift = d1.max(rho.compress(policy)?);
        if drift > TRACE_DRIFT_LIMIT {
            return Err(GroverError::State(format!(
                "trace drift {drift:e} at iteration {k} exceeds {TRACE_DRIFT_LIMIT:e}; chi_max {} is too small",
                policy.chi_max
            )));
        }
        let mut rec = RunRecord::new(k, rho.success_probability(omega)?, rho.operator_entanglement(cut)?);
        rec.trace_drift = drift;
        rec.discarded_weight = rho.discarded_weight();
        trace.push(rec);
    }
    Ok(trace)
}
