//! Open-boundary matrix-product chain with arbitrary local dimension.
//!
//! The same chain backs pure states (local dimension 2) and vectorized
//! density operators (local dimension 4). Canonical form is tracked lazily:
//! `center` names the single site that is not an isometry, or `None` when the
//! gauge is unknown (after an MPO contraction, say).

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::mpo::Mpo;
use super::tensor::SiteTensor;
use crate::error::{GroverError, Result};
use crate::linalg::{self, c, ONE};

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TruncationPolicy {
    pub chi_max: usize,
    /// Singular values below `sv_cutoff · σ_max` are dropped.
    pub sv_cutoff: f64,
    /// Rescale kept singular values so the 2-norm survives truncation.
    pub renormalize: bool,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy { chi_max: 64, sv_cutoff: 1e-12, renormalize: true }
    }
}

impl TruncationPolicy {
    pub fn new(chi_max: usize, sv_cutoff: f64, renormalize: bool) -> Result<Self> {
        if chi_max == 0 {
            return Err(GroverError::Validation("chi_max must be at least 1".into()));
        }
        if !(sv_cutoff >= 0.0) {
            return Err(GroverError::Validation(format!("sv_cutoff must be non-negative, got {sv_cutoff}")));
        }
        Ok(TruncationPolicy { chi_max, sv_cutoff, renormalize })
    }

    /// No truncation beyond exact zeros.
    pub fn exact() -> Self {
        TruncationPolicy { chi_max: usize::MAX, sv_cutoff: 0.0, renormalize: false }
    }

    pub fn with_chi(self, chi_max: usize) -> Self {
        TruncationPolicy { chi_max, ..self }
    }

    /// Number of singular values kept from a descending list.
    pub fn keep(&self, sv: &[f64]) -> usize {
        let top = sv.first().copied().unwrap_or(0.0);
        let above = sv.iter().take_while(|&&s| s > self.sv_cutoff * top && s > 0.0).count();
        above.min(self.chi_max).max(1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chain {
    sites: Vec<SiteTensor>,
    center: Option<usize>,
    discarded_weight: f64,
}

impl Chain {
    /// Product chain from local vectors (bond dimension 1 everywhere).
    pub fn from_product(locals: &[Vec<C64>]) -> Result<Self> {
        if locals.is_empty() {
            return Err(GroverError::Domain("empty chain".into()));
        }
        let sites = locals.iter().map(|v| SiteTensor::product(v)).collect();
        Ok(Chain { sites, center: None, discarded_weight: 0.0 })
    }

    pub fn from_sites(sites: Vec<SiteTensor>) -> Result<Self> {
        if sites.is_empty() {
            return Err(GroverError::Domain("empty chain".into()));
        }
        if sites[0].left != 1 || sites[sites.len() - 1].right != 1 {
            return Err(GroverError::Validation("boundary bonds must have dimension 1".into()));
        }
        if sites.windows(2).any(|w| w[0].right != w[1].left) {
            return Err(GroverError::Validation("mismatched bond dimensions".into()));
        }
        Ok(Chain { sites, center: None, discarded_weight: 0.0 })
    }

    /// Decompose a dense vector (site 0 most significant) by successive SVDs.
    pub fn from_dense(vector: &[C64], phys: usize, n: usize, policy: &TruncationPolicy) -> Result<Self> {
        if phys.pow(n as u32) != vector.len() {
            return Err(GroverError::Domain("vector length is not phys^n".into()));
        }
        let mut sites = Vec::with_capacity(n);
        let mut rest = DMatrix::from_row_slice(1, vector.len(), vector);
        let mut discarded = 0.0;
        for _ in 0..n - 1 {
            let left = rest.nrows();
            let cols = rest.ncols() / phys;
            let m = DMatrix::from_row_slice(left * phys, cols, &linalg::row_major(&rest));
            let (u, s, vt) = linalg::svd_sorted(m);
            let keep = policy.keep(&s);
            let total: f64 = s.iter().map(|x| x * x).sum();
            discarded += s[keep..].iter().map(|x| x * x).sum::<f64>() / total.max(f64::MIN_POSITIVE);
            sites.push(SiteTensor::from_left_fused(&u.columns(0, keep).into_owned(), phys));
            rest = DMatrix::from_fn(keep, vt.ncols(), |r, col| c(s[r]) * vt[(r, col)]);
        }
        sites.push(SiteTensor::from_left_fused(&DMatrix::from_row_slice(rest.nrows() * phys, 1, &linalg::row_major(&rest)), phys));
        Ok(Chain { sites, center: Some(n - 1), discarded_weight: discarded })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[SiteTensor] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> &SiteTensor {
        &self.sites[i]
    }

    pub fn center(&self) -> Option<usize> {
        self.center
    }

    pub fn discarded_weight(&self) -> f64 {
        self.discarded_weight
    }

    /// Bond dimensions between neighbouring sites (length n−1).
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.sites.len() - 1].iter().map(|s| s.right).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Mark the chain as an exact product whose sites are all normalized, so
    /// any site may serve as the orthogonality center.
    pub(crate) fn set_center(&mut self, center: Option<usize>) {
        self.center = center;
    }

    fn left_step(&mut self, i: usize) {
        let qr = self.sites[i].left_fused().qr();
        let (q, r) = (qr.q(), qr.r());
        let phys = self.sites[i].phys;
        self.sites[i] = SiteTensor::from_left_fused(&q, phys);
        let next = &self.sites[i + 1];
        let merged = r * next.right_fused();
        self.sites[i + 1] = SiteTensor::from_right_fused(&merged, next.phys);
    }

    fn right_step(&mut self, i: usize) {
        let m = self.sites[i].right_fused();
        let qr = m.adjoint().qr();
        let (q, r) = (qr.q(), qr.r());
        let phys = self.sites[i].phys;
        self.sites[i] = SiteTensor::from_right_fused(&q.adjoint(), phys);
        let prev = &self.sites[i - 1];
        let merged = prev.left_fused() * r.adjoint();
        self.sites[i - 1] = SiteTensor::from_left_fused(&merged, prev.phys);
    }

    /// Move the orthogonality center to `to`, canonicalizing if needed.
    pub fn move_center(&mut self, to: usize) {
        let n = self.sites.len();
        assert!(to < n, "center {to} out of range");
        match self.center {
            None => {
                for i in 0..to {
                    self.left_step(i);
                }
                for i in (to + 1..n).rev() {
                    self.right_step(i);
                }
            }
            Some(from) if from < to => (from..to).for_each(|i| self.left_step(i)),
            Some(from) => (to + 1..=from).rev().for_each(|i| self.right_step(i)),
        }
        self.center = Some(to);
    }

    /// 2-norm of the represented vector.
    pub fn norm(&mut self) -> f64 {
        let ctr = match self.center {
            Some(ctr) => ctr,
            None => {
                self.move_center(0);
                0
            }
        };
        self.sites[ctr].frobenius_sqr().sqrt()
    }

    /// Multiply the whole vector by `factor`.
    pub fn scale(&mut self, factor: C64) {
        let ctr = self.center.unwrap_or(0);
        self.sites[ctr].scale(factor);
    }

    pub fn normalize(&mut self) -> f64 {
        let nrm = self.norm();
        if nrm > 0.0 {
            self.scale(c(1.0 / nrm));
        }
        nrm
    }

    /// Contract a local operator into one site. The canonical center is
    /// preserved only when it sits on that site.
    pub fn apply_local(&mut self, site: usize, op: &DMatrix<C64>) {
        self.sites[site] = self.sites[site].apply_local(op);
        if self.center != Some(site) {
            self.center = None;
        }
    }

    /// Exact MPO contraction; bond dimensions multiply.
    pub fn contract_mpo(&mut self, mpo: &Mpo) -> Result<()> {
        if mpo.len() != self.len() {
            return Err(GroverError::Domain(format!(
                "MPO has {} sites, chain has {}",
                mpo.len(),
                self.len()
            )));
        }
        for (a, w) in self.sites.iter_mut().zip(mpo.sites()) {
            if w.phys != a.phys {
                return Err(GroverError::Domain("MPO physical dimension mismatch".into()));
            }
            *a = w.contract_site(a);
        }
        self.center = None;
        Ok(())
    }

    /// Left-canonicalize with QR, then truncate right-to-left with SVDs.
    /// Leaves the center on site 0 and returns the relative weight discarded
    /// by this call.
    pub fn compress(&mut self, policy: &TruncationPolicy) -> f64 {
        let n = self.sites.len();
        if n == 1 {
            self.center = Some(0);
            return 0.0;
        }
        self.center = None;
        self.move_center(n - 1);
        let mut discarded = 0.0;
        for i in (1..n).rev() {
            let phys = self.sites[i].phys;
            let (u, s, vt) = linalg::svd_sorted(self.sites[i].right_fused());
            let keep = policy.keep(&s);
            let total: f64 = s.iter().map(|x| x * x).sum();
            let kept: f64 = s[..keep].iter().map(|x| x * x).sum();
            if total > 0.0 {
                discarded += (total - kept).max(0.0) / total;
            }
            let rescale = if policy.renormalize && kept > 0.0 { (total / kept).sqrt() } else { 1.0 };
            self.sites[i] = SiteTensor::from_right_fused(&vt.rows(0, keep).into_owned(), phys);
            let us = DMatrix::from_fn(u.nrows(), keep, |r, k| u[(r, k)] * c(s[k] * rescale));
            let prev = &self.sites[i - 1];
            let merged = prev.left_fused() * us;
            self.sites[i - 1] = SiteTensor::from_left_fused(&merged, prev.phys);
        }
        self.center = Some(0);
        self.discarded_weight += discarded;
        discarded
    }

    /// Contract MPO, then compress to `policy`.
    pub fn apply_mpo(&mut self, mpo: &Mpo, policy: &TruncationPolicy) -> Result<f64> {
        self.contract_mpo(mpo)?;
        Ok(self.compress(policy))
    }

    /// Schmidt values across the bond after `cut` sites (unnormalized).
    pub fn bond_singular_values(&mut self, cut: usize) -> Result<Vec<f64>> {
        let n = self.len();
        if cut == 0 || cut >= n {
            return Err(GroverError::Domain(format!("cut {cut} must lie in 1..{n}")));
        }
        self.move_center(cut - 1);
        Ok(linalg::singular_values(self.sites[cut - 1].left_fused()))
    }

    /// Entropy in bits of the normalized squared Schmidt values at a bond.
    pub fn bond_entropy(&mut self, cut: usize) -> Result<f64> {
        let sv = self.bond_singular_values(cut)?;
        Ok(linalg::entropy_bits(&sv.iter().map(|s| s * s).collect::<Vec<_>>()))
    }

    /// Σ_{s_1..s_n} Π_k w^{(k)}_{s_k} A^{(k)}[s_k], i.e. the overlap with a
    /// product vector (unconjugated weights).
    pub fn contract_with_vectors(&self, weights: &[Vec<C64>]) -> C64 {
        let mut env = DMatrix::from_element(1, 1, ONE);
        for (site, w) in self.sites.iter().zip(weights) {
            env *= site.weighted_slice(w);
        }
        env[(0, 0)]
    }

    /// Amplitude of one basis configuration.
    pub fn amplitude(&self, config: &[usize]) -> C64 {
        let mut env = DMatrix::from_element(1, 1, ONE);
        for (site, &s) in self.sites.iter().zip(config) {
            env *= site.slice(s);
        }
        env[(0, 0)]
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Chain) -> C64 {
        let mut env = DMatrix::from_element(1, 1, ONE);
        for (a, b) in self.sites.iter().zip(&other.sites) {
            let mut next = DMatrix::zeros(a.right, b.right);
            for s in 0..a.phys {
                next += a.slice(s).adjoint() * &env * b.slice(s);
            }
            env = next;
        }
        env[(0, 0)]
    }

    /// Full contraction to a dense vector, site 0 most significant.
    pub fn to_dense(&self) -> Vec<C64> {
        let mut cur = DMatrix::from_element(1, 1, ONE);
        for site in &self.sites {
            let prod = &cur * site.right_fused();
            cur = DMatrix::from_row_slice(prod.nrows() * site.phys, site.right, &linalg::row_major(&prod));
        }
        linalg::row_major(&cur)
    }

    /// Local density block ρ[s, s'] = Σ A[l,s,r] conj(A[l,s',r]) at `site`,
    /// normalized to unit trace. Moves the center to `site`.
    pub fn local_gram(&mut self, site: usize) -> DMatrix<C64> {
        self.move_center(site);
        let a = &self.sites[site];
        let m = DMatrix::from_fn(a.phys, a.left * a.right, |s, lr| a.get(lr / a.right, s, lr % a.right));
        let g = &m * m.adjoint();
        let tr = g.trace().re;
        if tr > 0.0 {
            g / c(tr)
        } else {
            g
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ZERO;

    fn random_vec(len: usize, seed: u64) -> Vec<C64> {
        let mut x = seed as f64 * 0.618;
        (0..len)
            .map(|_| {
                x = (x * 9.13 + 0.377).fract();
                let re = x - 0.5;
                x = (x * 7.31 + 0.123).fract();
                C64::new(re, x - 0.5)
            })
            .collect()
    }

    #[test]
    fn dense_round_trip_exact() {
        let v = random_vec(1 << 8, 3);
        let chain = Chain::from_dense(&v, 2, 8, &TruncationPolicy::exact()).unwrap();
        let back = chain.to_dense();
        assert!(v.iter().zip(&back).all(|(a, b)| (a - b).norm() < 1e-12));
        assert_eq!(chain.discarded_weight(), 0.0);
    }

    #[test]
    fn canonical_moves_preserve_vector() {
        let v = random_vec(4usize.pow(4), 5);
        let mut chain = Chain::from_dense(&v, 4, 4, &TruncationPolicy::exact()).unwrap();
        for to in [0, 3, 1, 2, 0] {
            chain.move_center(to);
            let back = chain.to_dense();
            assert!(v.iter().zip(&back).all(|(a, b)| (a - b).norm() < 1e-12));
        }
        let nrm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((chain.norm() - nrm).abs() < 1e-12);
    }

    #[test]
    fn isometry_conditions_hold_around_center() {
        let v = random_vec(1 << 6, 9);
        let mut chain = Chain::from_dense(&v, 2, 6, &TruncationPolicy::exact()).unwrap();
        chain.move_center(3);
        for i in 0..3 {
            let a = chain.site(i).left_fused();
            let g = a.adjoint() * &a;
            assert!((g.clone() - DMatrix::identity(g.nrows(), g.ncols())).norm() < 1e-10);
        }
        for i in 4..6 {
            let a = chain.site(i).right_fused();
            let g = &a * a.adjoint();
            assert!((g.clone() - DMatrix::identity(g.nrows(), g.ncols())).norm() < 1e-10);
        }
    }

    #[test]
    fn truncation_keeps_largest_schmidt_values() {
        let policy = TruncationPolicy::new(2, 0.0, true).unwrap();
        assert_eq!(policy.keep(&[3.0, 2.0, 1.0]), 2);
        let cut = TruncationPolicy::new(10, 0.5, true).unwrap();
        assert_eq!(cut.keep(&[4.0, 3.0, 1.0]), 2);
        assert_eq!(cut.keep(&[0.0, 0.0]), 1);
        assert!(TruncationPolicy::new(0, 0.0, true).is_err());
        assert!(TruncationPolicy::new(4, -1.0, true).is_err());
    }

    #[test]
    fn compression_reports_discarded_weight() {
        let v = random_vec(1 << 6, 11);
        let mut chain = Chain::from_dense(&v, 2, 6, &TruncationPolicy::exact()).unwrap();
        chain.normalize();
        let before = chain.to_dense();
        let policy = TruncationPolicy::new(2, 0.0, true).unwrap();
        let w = chain.compress(&policy);
        assert!(w > 0.0);
        assert!(chain.max_bond() <= 2);
        assert!((chain.norm() - 1.0).abs() < 1e-12);
        let fid = before.iter().zip(chain.to_dense()).map(|(a, b)| a.conj() * b).sum::<C64>().norm();
        assert!(fid < 1.0 && fid > 0.5);
    }

    #[test]
    fn boundary_validation() {
        let bad = vec![SiteTensor::zeros(2, 2, 1)];
        assert!(Chain::from_sites(bad).is_err());
        assert!(Chain::from_product(&[]).is_err());
        let mut ok = Chain::from_product(&[vec![c(1.0), ZERO], vec![ZERO, c(1.0)]]).unwrap();
        assert!(ok.bond_entropy(1).unwrap().abs() < 1e-15);
        assert!(ok.bond_entropy(2).is_err());
    }
}
