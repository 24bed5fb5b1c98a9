//! Matrix-product states and operators.

mod chain;
mod mpo;
mod mps;
mod tensor;

pub use chain::{Chain, TruncationPolicy};
pub use mpo::Mpo;
pub use mps::MpsState;
pub use tensor::{OperatorTensor, SiteTensor};

use crate::bits::Bitstring;
use crate::error::Result;

/// Oracle MPO, U_ω = 1 − 2|ω⟩⟨ω| (bond dimension 2).
pub fn build_oracle_mpo(omega: &Bitstring) -> Mpo {
    Mpo::oracle(omega)
}

/// Diffusion MPO, U_s = 2|s⟩⟨s| − 1 (bond dimension 2).
pub fn build_diffusion_mpo(n: usize) -> Result<Mpo> {
    Mpo::diffusion(n)
}

use crate::analytic;
use crate::trace::{RunRecord, RunTrace};

/// Noiseless Grover run on an MPS, recording success probability and the
/// equal-cut entropy after every iteration.
pub fn run_grover_mps(omega: &Bitstring, iters: usize, policy: &TruncationPolicy) -> Result<RunTrace> {
    let n = omega.len();
    let oracle = Mpo::oracle(omega);
    let diffusion = Mpo::diffusion(n)?;
    let cut = (n / 2).max(1);
    let mut psi = MpsState::uniform(n)?;
    let mut trace = RunTrace::with_capacity(iters + 1);
    trace.push(RunRecord::new(0, psi.success_probability(omega)?, psi.bipartite_entropy(cut)?));
    for k in 1..=iters {
        psi.apply_mpo(&oracle, policy)?;
        psi.apply_mpo(&diffusion, policy)?;
        let mut rec = RunRecord::new(k, psi.success_probability(omega)?, psi.bipartite_entropy(cut)?);
        rec.discarded_weight = psi.discarded_weight();
        trace.push(rec);
    }
    Ok(trace)
}

/// Largest deviation of an MPS noiseless run from sin²θ_k.
pub fn max_deviation_from_analytic(trace: &RunTrace, n: usize) -> Result<f64> {
    trace.records.iter().try_fold(0.0f64, |acc, r| {
        Ok(acc.max((r.success_probability - analytic::ideal_success_probability(n, r.k)?).abs()))
    })
}
