//! Exact density-matrix evolution on permutation orbits.
//!
//! With target ω = 1^{n₁}0^{n₀}, uniform initial state and the same channel on
//! every qubit, ρ_xy is invariant under permutations inside the block of ones
//! and inside the block of zeros. An entry then depends only on how many
//! positions of each block carry the pair (x_k, y_k) = (a, b), so ρ is stored
//! as one real number per pair of count vectors (c₀₀, c₀₁, c₁₀, c₁₁). The
//! oracle, the diffusion and phase-flip or amplitude-damping noise all act
//! in closed form on that table, at polynomial cost in n.

use crate::analytic;
use crate::channels::{ChannelKind, KrausChannel};
use crate::error::{GroverError, Result};
use crate::trace::{RunRecord, RunTrace};

/// Largest register the orbit tables are built for.
pub const MAX_SYMMETRIC_QUBITS: usize = 64;

/// Count vectors (c₀₀, c₀₁, c₁₀, c₁₁) summing to `size`.
#[derive(Clone, Debug)]
struct Block {
    size: usize,
    counts: Vec<[usize; 4]>,
    /// Dense lookup over (c₀₀, c₀₁, c₁₀), c₁₁ implied.
    lookup: Vec<usize>,
}

impl Block {
    fn new(size: usize) -> Self {
        let side = size + 1;
        let mut counts = Vec::new();
        let mut lookup = vec![usize::MAX; side * side * side];
        for c00 in 0..=size {
            for c01 in 0..=size - c00 {
                for c10 in 0..=size - c00 - c01 {
                    lookup[(c00 * side + c01) * side + c10] = counts.len();
                    counts.push([c00, c01, c10, size - c00 - c01 - c10]);
                }
            }
        }
        Block { size, counts, lookup }
    }

    fn len(&self) -> usize {
        self.counts.len()
    }

    fn index(&self, c: [usize; 4]) -> usize {
        let side = self.size + 1;
        self.lookup[(c[0] * side + c[1]) * side + c[2]]
    }

    /// Ones of y in the block.
    fn y_ones(c: &[usize; 4]) -> usize {
        c[1] + c[3]
    }

    /// Ones of x in the block.
    fn x_ones(c: &[usize; 4]) -> usize {
        c[2] + c[3]
    }
}

fn binomial_table(n: usize) -> Vec<Vec<f64>> {
    let mut t = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        t[i][0] = 1.0;
        for j in 1..=i {
            t[i][j] = t[i - 1][j - 1] + if j < i { t[i - 1][j] } else { 0.0 };
        }
    }
    t
}

/// Orbit-compressed density matrix for target 1^{n₁}0^{n₀}.
#[derive(Clone, Debug)]
pub struct SymmetricDensity {
    ones: Block,
    zeros: Block,
    binom: Vec<Vec<f64>>,
    /// Entry for orbit (a, b) at `a * zeros.len() + b`.
    table: Vec<f64>,
}

impl SymmetricDensity {
    /// |s⟩⟨s| on n qubits with the first `n_ones` qubits of the target set.
    pub fn uniform(n: usize, n_ones: usize) -> Result<Self> {
        if n < 2 || n > MAX_SYMMETRIC_QUBITS {
            return Err(GroverError::Domain(format!("orbit engine needs 2 <= n <= {MAX_SYMMETRIC_QUBITS}, got {n}")));
        }
        if n_ones > n {
            return Err(GroverError::Domain(format!("{n_ones} target ones exceed n = {n}")));
        }
        let ones = Block::new(n_ones);
        let zeros = Block::new(n - n_ones);
        let size = ones.len() * zeros.len();
        Ok(SymmetricDensity { ones, zeros, binom: binomial_table(n), table: vec![0.5f64.powi(n as i32); size] })
    }

    pub fn n(&self) -> usize {
        self.ones.size + self.zeros.size
    }

    pub fn n_ones(&self) -> usize {
        self.ones.size
    }

    /// Number of stored orbit entries.
    pub fn orbit_count(&self) -> usize {
        self.table.len()
    }

    fn c(&self, n: usize, k: usize) -> f64 {
        self.binom[n][k]
    }

    /// U_ω ρ U_ω: entries with x = ω or y = ω change sign (not both).
    pub fn apply_oracle(&mut self) {
        let nb = self.zeros.len();
        for (a, ca) in self.ones.counts.iter().enumerate() {
            let x_a = ca[0] == 0 && ca[1] == 0;
            let y_a = ca[0] == 0 && ca[2] == 0;
            for (b, cb) in self.zeros.counts.iter().enumerate() {
                let x_w = x_a && cb[2] == 0 && cb[3] == 0;
                let y_w = y_a && cb[1] == 0 && cb[3] == 0;
                if x_w != y_w {
                    self.table[a * nb + b] = -self.table[a * nb + b];
                }
            }
        }
    }

    /// U_s ρ U_s with U_s = 2|s⟩⟨s| − 1, via row and column sums.
    pub fn apply_diffusion(&mut self) {
        let (na, nb) = (self.ones.size, self.zeros.size);
        let nz = self.zeros.len();
        let side_b = nb + 1;
        // col[mA][mB] = Σ_x ρ_xy for y with mA, mB ones; row likewise for x.
        let mut col = vec![0.0; (na + 1) * side_b];
        let mut row = vec![0.0; (na + 1) * side_b];
        for (a, ca) in self.ones.counts.iter().enumerate() {
            let (ya, xa) = (Block::y_ones(ca), Block::x_ones(ca));
            let col_a = self.c(ya, ca[3]) * self.c(na - ya, ca[2]);
            let row_a = self.c(xa, ca[3]) * self.c(na - xa, ca[1]);
            for (b, cb) in self.zeros.counts.iter().enumerate() {
                let v = self.table[a * nz + b];
                let (yb, xb) = (Block::y_ones(cb), Block::x_ones(cb));
                col[ya * side_b + yb] += col_a * self.c(yb, cb[3]) * self.c(nb - yb, cb[2]) * v;
                row[xa * side_b + xb] += row_a * self.c(xb, cb[3]) * self.c(nb - xb, cb[1]) * v;
            }
        }
        let mut total = 0.0;
        for ma in 0..=na {
            for mb in 0..=nb {
                total += self.c(na, ma) * self.c(nb, mb) * col[ma * side_b + mb];
            }
        }
        let scale = 0.5f64.powi(self.n() as i32);
        let shift = 4.0 * scale * scale * total;
        for (a, ca) in self.ones.counts.iter().enumerate() {
            let (ya, xa) = (Block::y_ones(ca), Block::x_ones(ca));
            for (b, cb) in self.zeros.counts.iter().enumerate() {
                let (yb, xb) = (Block::y_ones(cb), Block::x_ones(cb));
                let g = col[ya * side_b + yb];
                let r = row[xa * side_b + xb];
                self.table[a * nz + b] += shift - 2.0 * scale * (g + r);
            }
        }
    }

    /// Phase flip on every qubit: coherences between differing bits decay
    /// by (1 − 2p) per position.
    pub fn apply_phase_flip(&mut self, p: f64) {
        let f = 1.0 - 2.0 * p;
        let nz = self.zeros.len();
        for (a, ca) in self.ones.counts.iter().enumerate() {
            for (b, cb) in self.zeros.counts.iter().enumerate() {
                let flips = ca[1] + ca[2] + cb[1] + cb[2];
                self.table[a * nz + b] *= f.powi(flips as i32);
            }
        }
    }

    /// Amplitude damping on every qubit.
    pub fn apply_amplitude_damping(&mut self, p: f64) {
        let nz = self.zeros.len();
        let na = self.ones.len();
        let keep = 1.0 - p;
        let half = keep.sqrt();
        // Block of ones first, zeros block held fixed.
        let mut next = vec![0.0; self.table.len()];
        for (a, ca) in self.ones.counts.iter().enumerate() {
            let base = keep.powi(ca[3] as i32) * half.powi((ca[1] + ca[2]) as i32);
            let sources: Vec<(usize, f64)> = (0..=ca[0])
                .map(|j| {
                    let src = self.ones.index([ca[0] - j, ca[1], ca[2], ca[3] + j]);
                    (src, base * self.c(ca[0], j) * p.powi(j as i32))
                })
                .collect();
            for b in 0..nz {
                next[a * nz + b] = sources.iter().map(|&(src, w)| w * self.table[src * nz + b]).sum();
            }
        }
        for (b, cb) in self.zeros.counts.iter().enumerate() {
            let base = keep.powi(cb[3] as i32) * half.powi((cb[1] + cb[2]) as i32);
            let sources: Vec<(usize, f64)> = (0..=cb[0])
                .map(|j| {
                    let src = self.zeros.index([cb[0] - j, cb[1], cb[2], cb[3] + j]);
                    (src, base * self.c(cb[0], j) * p.powi(j as i32))
                })
                .collect();
            for a in 0..na {
                self.table[a * nz + b] = sources.iter().map(|&(src, w)| w * next[a * nz + src]).sum();
            }
        }
    }

    /// Apply a phase-flip or amplitude-damping channel to every qubit.
    pub fn apply_channel_all(&mut self, ch: &KrausChannel) -> Result<()> {
        match ch.kind() {
            ChannelKind::PhaseFlip => self.apply_phase_flip(ch.rate()),
            ChannelKind::AmplitudeDamping => self.apply_amplitude_damping(ch.rate()),
            ChannelKind::Custom => {
                return Err(GroverError::Validation("orbit engine supports pf and ad channels only".into()))
            }
        }
        Ok(())
    }

    /// ρ_ωω.
    pub fn success_probability(&self) -> f64 {
        let a = self.ones.index([0, 0, 0, self.ones.size]);
        let b = self.zeros.index([self.zeros.size, 0, 0, 0]);
        self.table[a * self.zeros.len() + b]
    }

    /// Σ_x ρ_xx.
    pub fn trace(&self) -> f64 {
        let nz = self.zeros.len();
        let mut total = 0.0;
        for (a, ca) in self.ones.counts.iter().enumerate() {
            if ca[1] != 0 || ca[2] != 0 {
                continue;
            }
            for (b, cb) in self.zeros.counts.iter().enumerate() {
                if cb[1] != 0 || cb[2] != 0 {
                    continue;
                }
                let mult = self.c(self.ones.size, ca[3]) * self.c(self.zeros.size, cb[3]);
                total += mult * self.table[a * nz + b];
            }
        }
        total
    }

    /// Entry ρ_xy for explicit bitstrings given as basis indices (qubit 0
    /// most significant).
    pub fn entry(&self, x: usize, y: usize) -> f64 {
        let n = self.n();
        let mut ca = [0usize; 4];
        let mut cb = [0usize; 4];
        for k in 0..n {
            let xb = (x >> (n - 1 - k)) & 1;
            let yb = (y >> (n - 1 - k)) & 1;
            let t = 2 * xb + yb;
            if k < self.ones.size {
                ca[t] += 1;
            } else {
                cb[t] += 1;
            }
        }
        self.table[self.ones.index(ca) * self.zeros.len() + self.zeros.index(cb)]
    }
}

/// Noisy Grover run on the orbit engine; records success probability per
/// iteration (the entropy column is not computed and holds NaN).
pub fn run_grover_symmetric(n: usize, n_ones: usize, channel: Option<&KrausChannel>, iters: usize) -> Result<RunTrace> {
    let mut rho = SymmetricDensity::uniform(n, n_ones)?;
    let mut trace = RunTrace::with_capacity(iters + 1);
    trace.push(RunRecord::new(0, rho.success_probability(), f64::NAN));
    for k in 1..=iters {
        rho.apply_oracle();
        rho.apply_diffusion();
        if let Some(ch) = channel {
            rho.apply_channel_all(ch)?;
        }
        let mut rec = RunRecord::new(k, rho.success_probability(), f64::NAN);
        rec.trace_drift = (rho.trace() - 1.0).abs();
        trace.push(rec);
    }
    Ok(trace)
}

/// Final success probability after the optimal number of iterations.
pub fn final_success_symmetric(n: usize, n_ones: usize, channel: &KrausChannel) -> Result<f64> {
    Ok(run_grover_symmetric(n, n_ones, Some(channel), analytic::optimal_iterations(n))?.final_success())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::Bitstring;
    use crate::channels::{make_amplitude_damping, make_phase_flip};
    use crate::dense::{evolve_density_matrix, DenseNoise};

    #[test]
    fn orbit_counts() {
        assert_eq!(Block::new(16).len(), 969);
        let s = SymmetricDensity::uniform(6, 2).unwrap();
        assert_eq!(s.orbit_count(), 10 * 35);
        assert!((s.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn noiseless_matches_analytic() {
        let n = 12;
        let tr = run_grover_symmetric(n, n, None, analytic::optimal_iterations(n)).unwrap();
        for r in &tr.records {
            assert!((r.success_probability - analytic::ideal_success_probability(n, r.k).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_dense_density_matrix() {
        for (n, ones) in [(4, 2), (5, 0), (5, 5), (6, 3)] {
            let omega = Bitstring::leading_ones(n, ones);
            for ch in [make_phase_flip(0.07).unwrap(), make_amplitude_damping(0.11).unwrap()] {
                let dense = evolve_density_matrix(n, &omega, &DenseNoise::Kraus(ch.clone()), 3).unwrap();
                let mut s = SymmetricDensity::uniform(n, ones).unwrap();
                for _ in 0..3 {
                    s.apply_oracle();
                    s.apply_diffusion();
                    s.apply_channel_all(&ch).unwrap();
                }
                let dim = 1 << n;
                for x in 0..dim {
                    for y in 0..dim {
                        let d = dense.matrix()[(x, y)];
                        assert!(d.im.abs() < 1e-14);
                        assert!((s.entry(x, y) - d.re).abs() < 1e-14, "n={n} ones={ones} ({x},{y})");
                    }
                }
                assert!((s.trace() - 1.0).abs() < 1e-13);
            }
        }
    }
}
