//! Brute-force statevector and density-matrix evolution for small registers.
//!
//! Oracle and diffusion are applied as implicit rank-one updates, O(N) per
//! gate on statevectors and O(N²) on density matrices. These engines are the
//! ground truth every other engine is checked against.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::bits::Bitstring;
use crate::channels::{local_superoperator, GlobalDepolarizing, KrausChannel};
use crate::error::{GroverError, Result};
use crate::linalg::{self, c, Mat2, ZERO};
use crate::trace::{RunRecord, RunTrace};

pub const MAX_STATEVECTOR_QUBITS: usize = 14;
pub const MAX_DENSITY_QUBITS: usize = 12;

/// Which reflection acts first within one Grover iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GateOrder {
    /// G = U_s U_ω: oracle, then diffusion.
    #[default]
    OracleFirst,
    DiffusionFirst,
}

fn guard(n: usize, max: usize, what: &str) -> Result<()> {
    if n < 2 || n > max {
        return Err(GroverError::Resource(format!("{what} supports 2 <= n <= {max}, got {n}")));
    }
    Ok(())
}

fn check_cut(n: usize, cut: usize) -> Result<()> {
    if cut == 0 || cut >= n {
        return Err(GroverError::Domain(format!("cut {cut} must lie in 1..{n}")));
    }
    Ok(())
}

fn check_qubit(n: usize, q: usize) -> Result<()> {
    if q >= n {
        return Err(GroverError::Domain(format!("qubit {q} out of range for n = {n}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    n: usize,
    amps: Vec<C64>,
}

impl DenseState {
    /// |s⟩ = |+⟩^⊗n.
    pub fn init_uniform(n: usize) -> Result<Self> {
        guard(n, MAX_STATEVECTOR_QUBITS, "statevector")?;
        let dim = 1usize << n;
        Ok(DenseState { n, amps: vec![c((dim as f64).sqrt().recip()); dim] })
    }

    pub fn basis(bits: &Bitstring) -> Result<Self> {
        let n = bits.len();
        guard(n, MAX_STATEVECTOR_QUBITS, "statevector")?;
        let mut amps = vec![ZERO; 1 << n];
        amps[bits.index()] = c(1.0);
        Ok(DenseState { n, amps })
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let dim = amps.len();
        if !dim.is_power_of_two() || dim < 4 {
            return Err(GroverError::Domain(format!("amplitude vector length {dim} is not 2^n, n >= 2")));
        }
        let n = dim.trailing_zeros() as usize;
        guard(n, MAX_STATEVECTOR_QUBITS, "statevector")?;
        Ok(DenseState { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let nrm = self.norm();
        if nrm > 0.0 {
            self.amps.iter_mut().for_each(|a| *a /= nrm);
        }
    }

    pub fn apply_oracle(&mut self, omega: &Bitstring) -> Result<()> {
        omega.expect_len(self.n)?;
        let i = omega.index();
        self.amps[i] = -self.amps[i];
        Ok(())
    }

    /// 2|s⟩⟨s| − 1: every amplitude is reflected about the mean.
    pub fn apply_diffusion(&mut self) {
        let mean = self.amps.iter().sum::<C64>() / c(self.amps.len() as f64);
        self.amps.iter_mut().for_each(|a| *a = mean * 2.0 - *a);
    }

    pub fn apply_single_qubit(&mut self, q: usize, op: &Mat2) -> Result<()> {
        check_qubit(self.n, q)?;
        let stride = 1usize << (self.n - 1 - q);
        for base in 0..self.amps.len() {
            if base & stride != 0 {
                continue;
            }
            let a0 = self.amps[base];
            let a1 = self.amps[base | stride];
            self.amps[base] = op[(0, 0)] * a0 + op[(0, 1)] * a1;
            self.amps[base | stride] = op[(1, 0)] * a0 + op[(1, 1)] * a1;
        }
        Ok(())
    }

    /// ⟨ψ| op_q |ψ⟩.
    pub fn local_expectation(&self, q: usize, op: &Mat2) -> Result<C64> {
        let mut tmp = self.clone();
        tmp.apply_single_qubit(q, op)?;
        Ok(self.amps.iter().zip(&tmp.amps).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn success_probability(&self, omega: &Bitstring) -> Result<f64> {
        omega.expect_len(self.n)?;
        Ok(self.amps[omega.index()].norm_sqr())
    }

    pub fn overlap(&self, other: &DenseState) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// ρ_A for A = qubits 0..cut.
    pub fn reduced_density_matrix(&self, cut: usize) -> Result<DMatrix<C64>> {
        check_cut(self.n, cut)?;
        let m = DMatrix::from_row_slice(1 << cut, 1 << (self.n - cut), &self.amps);
        Ok(&m * m.adjoint())
    }

    /// Entanglement entropy across the bond after `cut` qubits.
    pub fn entropy(&self, cut: usize) -> Result<f64> {
        Ok(entropy_bits(&self.reduced_density_matrix(cut)?))
    }

    pub fn outer(&self) -> DMatrix<C64> {
        let v = nalgebra::DVector::from_column_slice(&self.amps);
        &v * v.adjoint()
    }
}

/// −Tr ρ log₂ ρ with eigenvalues clamped at zero.
pub fn entropy_bits(rho: &DMatrix<C64>) -> f64 {
    linalg::entropy_bits(&linalg::hermitian_eigenvalues(rho))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseDensityMatrix {
    n: usize,
    rho: DMatrix<C64>,
}

impl DenseDensityMatrix {
    pub fn from_pure(state: &DenseState) -> Result<Self> {
        guard(state.n, MAX_DENSITY_QUBITS, "density matrix")?;
        Ok(DenseDensityMatrix { n: state.n, rho: state.outer() })
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        guard(n, MAX_DENSITY_QUBITS, "density matrix")?;
        let dim = 1usize << n;
        Ok(DenseDensityMatrix { n, rho: DMatrix::identity(dim, dim) / c(dim as f64) })
    }

    pub fn from_matrix(rho: DMatrix<C64>) -> Result<Self> {
        let dim = rho.nrows();
        if rho.ncols() != dim || !dim.is_power_of_two() || dim < 4 {
            return Err(GroverError::Domain("density matrix must be 2^n x 2^n, n >= 2".into()));
        }
        let n = dim.trailing_zeros() as usize;
        guard(n, MAX_DENSITY_QUBITS, "density matrix")?;
        Ok(DenseDensityMatrix { n, rho })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.rho
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }

    /// U ρ U† for U = 1 − 2|ω⟩⟨ω|: row and column ω change sign.
    pub fn apply_oracle(&mut self, omega: &Bitstring) -> Result<()> {
        omega.expect_len(self.n)?;
        let w = omega.index();
        let dim = self.rho.nrows();
        for j in 0..dim {
            if j != w {
                self.rho[(w, j)] = -self.rho[(w, j)];
                self.rho[(j, w)] = -self.rho[(j, w)];
            }
        }
        Ok(())
    }

    pub fn apply_diffusion(&mut self) {
        let dim = self.rho.nrows();
        let inv = c(1.0 / dim as f64);
        for mut col in self.rho.column_iter_mut() {
            let mean = col.sum() * inv;
            col.iter_mut().for_each(|z| *z = mean * 2.0 - *z);
        }
        for mut row in self.rho.row_iter_mut() {
            let mean = row.sum() * inv;
            row.iter_mut().for_each(|z| *z = mean * 2.0 - *z);
        }
    }

    /// Σ_m F_m ρ F_m† on qubit `q`.
    pub fn apply_channel(&mut self, q: usize, ch: &KrausChannel) -> Result<()> {
        check_qubit(self.n, q)?;
        let sup = local_superoperator(ch);
        let stride = 1usize << (self.n - 1 - q);
        let dim = self.rho.nrows();
        for j in (0..dim).filter(|j| j & stride == 0) {
            for i in (0..dim).filter(|i| i & stride == 0) {
                let idx = [(i, j), (i, j | stride), (i | stride, j), (i | stride, j | stride)];
                let v: [C64; 4] = idx.map(|ij| self.rho[ij]);
                for (r, &ij) in idx.iter().enumerate() {
                    self.rho[ij] = (0..4).map(|col| sup[(r, col)] * v[col]).sum();
                }
            }
        }
        Ok(())
    }

    pub fn apply_channel_all(&mut self, ch: &KrausChannel) -> Result<()> {
        (0..self.n).try_for_each(|q| self.apply_channel(q, ch))
    }

    pub fn depolarize(&mut self, p: f64) {
        let dim = self.rho.nrows();
        self.rho *= c(1.0 - p);
        for i in 0..dim {
            self.rho[(i, i)] += c(p / dim as f64);
        }
    }

    pub fn success_probability(&self, omega: &Bitstring) -> Result<f64> {
        omega.expect_len(self.n)?;
        let w = omega.index();
        Ok(self.rho[(w, w)].re)
    }

    /// Partial trace over qubits cut..n.
    pub fn reduced_density_matrix(&self, cut: usize) -> Result<DMatrix<C64>> {
        check_cut(self.n, cut)?;
        let dr = 1usize << (self.n - cut);
        let dl = 1usize << cut;
        Ok(DMatrix::from_fn(dl, dl, |a, b| (0..dr).map(|r| self.rho[(a * dr + r, b * dr + r)]).sum()))
    }

    /// Operator entanglement across the bond after `cut` qubits, with
    /// Schmidt coefficients normalized in Frobenius norm.
    pub fn operator_entanglement(&self, cut: usize) -> Result<f64> {
        check_cut(self.n, cut)?;
        let nr = self.n - cut;
        let dr = 1usize << nr;
        let mut reshaped = DMatrix::<C64>::zeros(1 << (2 * cut), 1 << (2 * nr));
        for (j, col) in self.rho.column_iter().enumerate() {
            let (jl, jr) = (j / dr, j % dr);
            for (i, &z) in col.iter().enumerate() {
                let (il, ir) = (i / dr, i % dr);
                reshaped[(interleave(il, jl, cut), interleave(ir, jr, nr))] = z;
            }
        }
        let sv = linalg::singular_values(reshaped);
        Ok(linalg::entropy_bits(&sv.iter().map(|s| s * s).collect::<Vec<_>>()))
    }

    /// Max deviations (hermiticity, trace, most negative eigenvalue).
    pub fn physicality(&self) -> (f64, f64, f64) {
        let herm = linalg::max_abs((&self.rho - self.rho.adjoint()).iter());
        let tr = (self.trace() - c(1.0)).norm();
        let min_eig = linalg::hermitian_eigenvalues(&self.rho).last().copied().unwrap_or(0.0);
        (herm, tr, min_eig)
    }
}

/// Vectorized multi-site index Σ_k (2 i_k + j_k)·4^(len−1−k).
fn interleave(i: usize, j: usize, len: usize) -> usize {
    (0..len).fold(0usize, |acc, k| {
        let shift = len - 1 - k;
        (acc << 2) | (((i >> shift) & 1) << 1) | ((j >> shift) & 1)
    })
}

/// Noise applied after every Grover iteration of a dense run.
#[derive(Clone, Debug, Default)]
pub enum DenseNoise {
    #[default]
    None,
    Kraus(KrausChannel),
    Depolarizing(GlobalDepolarizing),
}

/// Dense Grover run. Without noise the statevector engine is used and the
/// entropy column is the mid-cut entanglement entropy; with noise the density
/// matrix is evolved and the entropy column is the operator entanglement.
pub fn run_grover_dense(n: usize, omega: &Bitstring, noise: &DenseNoise, iters: usize) -> Result<RunTrace> {
    run_grover_dense_ordered(n, omega, noise, iters, GateOrder::OracleFirst)
}

pub fn run_grover_dense_ordered(
    n: usize,
    omega: &Bitstring,
    noise: &DenseNoise,
    iters: usize,
    order: GateOrder,
) -> Result<RunTrace> {
    omega.expect_len(n)?;
    let cut = n / 2;
    let mut trace = RunTrace::with_capacity(iters + 1);
    match noise {
        DenseNoise::None => {
            let mut psi = DenseState::init_uniform(n)?;
            trace.push(RunRecord::new(0, psi.success_probability(omega)?, psi.entropy(cut)?));
            for k in 1..=iters {
                match order {
                    GateOrder::OracleFirst => {
                        psi.apply_oracle(omega)?;
                        psi.apply_diffusion();
                    }
                    GateOrder::DiffusionFirst => {
                        psi.apply_diffusion();
                        psi.apply_oracle(omega)?;
                    }
                }
                trace.push(RunRecord::new(k, psi.success_probability(omega)?, psi.entropy(cut)?));
            }
        }
        noisy => {
            if let DenseNoise::Kraus(ch) = noisy {
                ch.validate()?;
            }
            let mut rho = DenseDensityMatrix::from_pure(&DenseState::init_uniform(n)?)?;
            trace.push(RunRecord::new(0, rho.success_probability(omega)?, rho.operator_entanglement(cut)?));
            for k in 1..=iters {
                match order {
                    GateOrder::OracleFirst => {
                        rho.apply_oracle(omega)?;
                        rho.apply_diffusion();
                    }
                    GateOrder::DiffusionFirst => {
                        rho.apply_diffusion();
                        rho.apply_oracle(omega)?;
                    }
                }
                match noisy {
                    DenseNoise::Kraus(ch) => rho.apply_channel_all(ch)?,
                    DenseNoise::Depolarizing(g) => rho.depolarize(g.rate()),
                    DenseNoise::None => unreachable!(),
                }
                trace.push(RunRecord::new(k, rho.success_probability(omega)?, rho.operator_entanglement(cut)?));
            }
        }
    }
    Ok(trace)
}

/// Final density matrix of a noisy dense run (no per-step measurements).
pub fn evolve_density_matrix(n: usize, omega: &Bitstring, noise: &DenseNoise, iters: usize) -> Result<DenseDensityMatrix> {
    omega.expect_len(n)?;
    let mut rho = DenseDensityMatrix::from_pure(&DenseState::init_uniform(n)?)?;
    for _ in 0..iters {
        rho.apply_oracle(omega)?;
        rho.apply_diffusion();
        match noise {
            DenseNoise::None => {}
            DenseNoise::Kraus(ch) => rho.apply_channel_all(ch)?,
            DenseNoise::Depolarizing(g) => rho.depolarize(g.rate()),
        }
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic;
    use crate::channels::{make_amplitude_damping, make_phase_flip};

    fn bits(s: &str) -> Bitstring {
        s.parse().unwrap()
    }

    #[test]
    fn uniform_state() {
        let s = DenseState::init_uniform(2).unwrap();
        assert!(s.amplitudes().iter().all(|a| (*a - c(0.5)).norm() < 1e-16));
        assert!((s.success_probability(&bits("10")).unwrap() - 0.25).abs() < 1e-16);
        assert!((s.norm() - 1.0).abs() < 1e-15);
        assert!(matches!(DenseState::init_uniform(15), Err(GroverError::Resource(_))));
        assert!(matches!(DenseState::init_uniform(1), Err(GroverError::Resource(_))));
    }

    #[test]
    fn oracle_reflection() {
        let w = bits("101");
        let mut s = DenseState::basis(&w).unwrap();
        s.apply_oracle(&w).unwrap();
        assert_eq!(s.amplitudes()[5], c(-1.0));
        let mut o = DenseState::basis(&bits("100")).unwrap();
        let before = o.clone();
        o.apply_oracle(&w).unwrap();
        assert_eq!(o, before);
        assert!(matches!(o.apply_oracle(&bits("10")), Err(GroverError::Domain(_))));
    }

    #[test]
    fn reflections_are_involutions() {
        let amps: Vec<C64> = (0..16).map(|i| C64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let mut s = DenseState::from_amplitudes(amps).unwrap();
        s.normalize();
        let orig = s.clone();
        s.apply_oracle(&bits("0110")).unwrap();
        s.apply_oracle(&bits("0110")).unwrap();
        s.apply_diffusion();
        s.apply_diffusion();
        for (a, b) in s.amplitudes().iter().zip(orig.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn diffusion_eigenspaces() {
        let mut s = DenseState::init_uniform(3).unwrap();
        let orig = s.clone();
        s.apply_diffusion();
        assert!((s.overlap(&orig) - c(1.0)).norm() < 1e-14);
        // |000⟩ − |111⟩ is orthogonal to |s⟩.
        let mut amps = vec![ZERO; 8];
        amps[0] = c(std::f64::consts::FRAC_1_SQRT_2);
        amps[7] = c(-std::f64::consts::FRAC_1_SQRT_2);
        let mut o = DenseState::from_amplitudes(amps.clone()).unwrap();
        o.apply_diffusion();
        for (a, b) in o.amplitudes().iter().zip(&amps) {
            assert!((a + b).norm() < 1e-15);
        }
    }

    #[test]
    fn noiseless_run_matches_two_level_model() {
        let n = 10;
        let w = bits("1011001110");
        let m = analytic::optimal_iterations(n);
        let t = run_grover_dense(n, &w, &DenseNoise::None, m).unwrap();
        assert_eq!(t.len(), m + 1);
        for r in &t.records {
            let exact = analytic::ideal_success_probability(n, r.k).unwrap();
            assert!((r.success_probability - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn depolarizing_closed_form_small() {
        let n = 4;
        let w = bits("0110");
        let g = GlobalDepolarizing::new(0.01).unwrap();
        let t = run_grover_dense(n, &w, &DenseNoise::Depolarizing(g), 3).unwrap();
        assert!((t.final_success() - 0.934_623_147_506_713_8).abs() < 1e-12);
    }

    #[test]
    fn zero_phase_flip_equals_noiseless() {
        let w = bits("0011");
        let a = run_grover_dense(4, &w, &DenseNoise::None, 3).unwrap();
        let b = run_grover_dense(4, &w, &DenseNoise::Kraus(make_phase_flip(0.0).unwrap()), 3).unwrap();
        for (x, y) in a.records.iter().zip(&b.records) {
            assert!((x.success_probability - y.success_probability).abs() < 1e-14);
            // density mode reports operator entanglement = 2 × state entropy
            assert!((2.0 * x.entropy - y.entropy).abs() < 1e-10);
        }
    }

    #[test]
    fn entropy_edge_cases() {
        let prod = DenseState::basis(&bits("0101")).unwrap();
        assert!(prod.entropy(2).unwrap().abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = DenseState::from_amplitudes(vec![c(h), ZERO, ZERO, c(h)]).unwrap();
        assert!((bell.entropy(1).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(bell.entropy(0), Err(GroverError::Domain(_))));
        assert!(matches!(bell.entropy(2), Err(GroverError::Domain(_))));
    }

    #[test]
    fn noiseless_reduced_state_has_rank_two() {
        let n = 8;
        let w = bits("11010010");
        let mut psi = DenseState::init_uniform(n).unwrap();
        for _ in 0..=analytic::optimal_iterations(n) {
            let ev = linalg::hermitian_eigenvalues(&psi.reduced_density_matrix(4).unwrap());
            assert!(ev[2].abs() <= 1e-12);
            assert!(psi.entropy(4).unwrap() <= 1.0);
            psi.apply_oracle(&w).unwrap();
            psi.apply_diffusion();
        }
    }

    #[test]
    fn operator_entanglement_cases() {
        let prod = DenseDensityMatrix::from_pure(&DenseState::basis(&bits("0110")).unwrap()).unwrap();
        assert!(prod.operator_entanglement(2).unwrap().abs() < 1e-12);
        let mixed = DenseDensityMatrix::maximally_mixed(4).unwrap();
        assert!(mixed.operator_entanglement(2).unwrap().abs() < 1e-12);
        let amps: Vec<C64> = (0..16).map(|i| C64::new(1.0 + (i as f64).cos(), (i as f64 * 1.7).sin())).collect();
        let mut s = DenseState::from_amplitudes(amps).unwrap();
        s.normalize();
        let rho = DenseDensityMatrix::from_pure(&s).unwrap();
        for cut in 1..4 {
            assert!((rho.operator_entanglement(cut).unwrap() - 2.0 * s.entropy(cut).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn success_probability_cases() {
        let w = bits("1111111111");
        assert!((DenseState::basis(&w).unwrap().success_probability(&w).unwrap() - 1.0).abs() < 1e-16);
        let s = DenseState::init_uniform(10).unwrap();
        assert!((s.success_probability(&w).unwrap() - 1.0 / 1024.0).abs() < 1e-16);
        let mm = DenseDensityMatrix::maximally_mixed(8).unwrap();
        assert!((mm.success_probability(&bits("10101010")).unwrap() - 1.0 / 256.0).abs() < 1e-16);
    }

    #[test]
    fn amplitude_damping_depends_only_on_weight_of_target() {
        let ch = DenseNoise::Kraus(make_amplitude_damping(0.05).unwrap());
        let a = run_grover_dense(4, &bits("0011"), &ch, 3).unwrap();
        let b = run_grover_dense(4, &bits("0101"), &ch, 3).unwrap();
        for (x, y) in a.records.iter().zip(&b.records) {
            assert!((x.success_probability - y.success_probability).abs() < 1e-12);
        }
    }

    #[test]
    fn channel_keeps_density_matrix_physical() {
        let mut rho = DenseDensityMatrix::from_pure(&DenseState::init_uniform(5).unwrap()).unwrap();
        let w = bits("10011");
        for _ in 0..4 {
            rho.apply_oracle(&w).unwrap();
            rho.apply_diffusion();
            rho.apply_channel_all(&make_amplitude_damping(0.1).unwrap()).unwrap();
        }
        let (herm, tr, min_eig) = rho.physicality();
        assert!(herm < 1e-12 && tr < 1e-10 && min_eig > -1e-10);
        assert!(rho.purity() < 1.0);
    }

    #[test]
    fn partial_trace_of_pure_matches_state_route() {
        let mut s = DenseState::init_uniform(6).unwrap();
        s.apply_oracle(&bits("010011")).unwrap();
        s.apply_diffusion();
        let rho = DenseDensityMatrix::from_pure(&s).unwrap();
        let a = rho.reduced_density_matrix(3).unwrap();
        let b = s.reduced_density_matrix(3).unwrap();
        assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn interleave_layout() {
        assert_eq!(interleave(0b10, 0b01, 2), 0b10_01);
        assert_eq!(interleave(0b11, 0b00, 2), 0b10_10);
    }
}
