//! Single-qubit Kraus channels and the global depolarizing baseline.
//!
//! Channels are immutable values. Every transformation (unitary mixing of the
//! Kraus set) returns a new channel, so a channel can be shared freely across
//! trajectory workers.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::dense::DenseDensityMatrix;
use crate::error::{GroverError, Result};
use crate::linalg::{self, c, Mat2, Mat4, ONE, ZERO};

/// Completeness tolerance for validated channels.
pub const COMPLETENESS_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ChannelKind {
    PhaseFlip,
    AmplitudeDamping,
    Custom,
}

impl ChannelKind {
    /// Short tag used by the CLI (`pf`, `ad`).
    pub fn tag(self) -> &'static str {
        match self {
            ChannelKind::PhaseFlip => "pf",
            ChannelKind::AmplitudeDamping => "ad",
            ChannelKind::Custom => "custom",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    operators: Vec<Mat2>,
    rate: f64,
    kind: ChannelKind,
}

fn check_rate(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(GroverError::Domain(format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}

/// Phase flip: {√p σz, √(1−p) 1}.
pub fn make_phase_flip(p: f64) -> Result<KrausChannel> {
    check_rate(p)?;
    Ok(KrausChannel {
        operators: vec![linalg::pauli_z() * c(p.sqrt()), linalg::identity2() * c((1.0 - p).sqrt())],
        rate: p,
        kind: ChannelKind::PhaseFlip,
    })
}

/// Amplitude damping: {√p σ⁻, |0⟩⟨0| + √(1−p) |1⟩⟨1|}.
pub fn make_amplitude_damping(p: f64) -> Result<KrausChannel> {
    check_rate(p)?;
    let e2 = Mat2::new(ONE, ZERO, ZERO, c((1.0 - p).sqrt()));
    Ok(KrausChannel {
        operators: vec![linalg::sigma_minus() * c(p.sqrt()), e2],
        rate: p,
        kind: ChannelKind::AmplitudeDamping,
    })
}

/// Build a channel of the given kind at rate `p`.
pub fn make_channel(kind: ChannelKind, p: f64) -> Result<KrausChannel> {
    match kind {
        ChannelKind::PhaseFlip => make_phase_flip(p),
        ChannelKind::AmplitudeDamping => make_amplitude_damping(p),
        ChannelKind::Custom => Err(GroverError::Validation(
            "custom channels are built from explicit operators".into(),
        )),
    }
}

impl KrausChannel {
    /// Wrap an explicit operator list. Completeness is not enforced here so
    /// that defective sets can still be inspected with
    /// [`verify_completeness`]; call [`KrausChannel::validate`] before use.
    pub fn custom(operators: Vec<Mat2>) -> Result<Self> {
        if operators.is_empty() {
            return Err(GroverError::Validation("Kraus set is empty".into()));
        }
        Ok(KrausChannel { operators, rate: 0.0, kind: ChannelKind::Custom })
    }

    pub fn operators(&self) -> &[Mat2] {
        &self.operators
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let r = verify_completeness(self);
        if r > COMPLETENESS_TOL {
            return Err(GroverError::Validation(format!(
                "Kraus completeness residual {r:e} exceeds {COMPLETENESS_TOL:e}"
            )));
        }
        Ok(())
    }

    /// Σ_m F_m ρ F_m† on a single-qubit matrix.
    pub fn apply_to_matrix(&self, rho: &Mat2) -> Mat2 {
        self.operators.iter().fold(Mat2::zeros(), |acc, f| acc + f * rho * f.adjoint())
    }

    /// The effect operators F_m†F_m.
    pub fn effects(&self) -> Vec<Mat2> {
        self.operators.iter().map(|f| f.adjoint() * f).collect()
    }
}

/// Max-norm of Σ F†F − 1.
pub fn verify_completeness(ch: &KrausChannel) -> f64 {
    let sum = ch.operators.iter().fold(Mat2::zeros(), |acc, f| acc + f.adjoint() * f);
    linalg::max_abs((sum - Mat2::identity()).iter())
}

/// Max-norm of U†U − 1 for a square matrix.
pub fn unitarity_residual(u: &DMatrix<C64>) -> f64 {
    let prod = u.adjoint() * u;
    let id = DMatrix::<C64>::identity(u.nrows(), u.ncols());
    linalg::max_abs((prod - id).iter())
}

/// Unitary remixing of the Kraus set, F_m = Σ_n U_mn E_n. The induced
/// density-matrix map is unchanged.
pub fn mix_channel(ch: &KrausChannel, u: &DMatrix<C64>) -> Result<KrausChannel> {
    let m = ch.operators.len();
    if u.nrows() != m || u.ncols() != m {
        return Err(GroverError::Validation(format!(
            "mixing matrix is {}x{}, channel has {m} operators",
            u.nrows(),
            u.ncols()
        )));
    }
    let res = unitarity_residual(u);
    if res > COMPLETENESS_TOL {
        return Err(GroverError::Validation(format!("mixing matrix not unitary (residual {res:e})")));
    }
    let operators = (0..m)
        .map(|row| {
            ch.operators
                .iter()
                .enumerate()
                .fold(Mat2::zeros(), |acc, (col, e)| acc + e * u[(row, col)])
        })
        .collect();
    Ok(KrausChannel { operators, rate: ch.rate, kind: ch.kind })
}

/// Vectorized channel Σ_m F_m ⊗ conj(F_m), acting on |i⟩⟨j| ↦ index 2i + j.
pub fn local_superoperator(ch: &KrausChannel) -> Mat4 {
    ch.operators
        .iter()
        .fold(Mat4::zeros(), |acc, f| acc + linalg::kron2(f, &f.map(|z| z.conj())))
}

/// Global depolarizing map (1−p)ρ + p·1/2ⁿ on a full register.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlobalDepolarizing {
    rate: f64,
}

impl GlobalDepolarizing {
    pub fn new(p: f64) -> Result<Self> {
        check_rate(p)?;
        Ok(GlobalDepolarizing { rate: p })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

pub fn apply_depolarizing_dense(dm: &DenseDensityMatrix, g: GlobalDepolarizing) -> Result<DenseDensityMatrix> {
    let tr = dm.trace();
    if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
        return Err(GroverError::State(format!("trace {tr} deviates from 1")));
    }
    let mut out = dm.clone();
    out.depolarize(g.rate);
    Ok(out)
}
