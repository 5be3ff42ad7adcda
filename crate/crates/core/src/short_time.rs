//! Second-order short-time expansion of the master equation:
//!
//! ```text
//! ρ(t) ≈ ρ + i[ρ, H′]t + (t²/2){ [H′, [ρ, H′]] + C(0)[2FρF − F²ρ − ρF²] },   H′ = H_S − f_corr(0)F
//! ```
//!
//! For `ρ(0) = |−N/2⟩⟨−N/2|` this reduces to
//! `−j_z ≈ 1 − (t²/2)[C(0) + (Δ − f_corr(0))²]` and
//! `j_y ≈ (Δ − f_corr(0)) t`. The scalar forms are coded separately from
//! [`rho_short`] and the two are cross-checked in tests. The expansion is
//! only meaningful while `t²·[C(0) + (Δ − f₀)²] ≪ 1`; [`Validity`] reports
//! that number instead of truncating anything.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::bath::{correlation, BathSpec};
use crate::corr_kernel::{f_corr, Preparation};
use crate::error::{Error, Result};
use crate::master_equation::Trajectory;
use crate::quadrature::QuadraturePolicy;
use crate::spin_algebra::{
    commutator, CMatrix, DensityMatrix, Observables, SpinOperators, SystemParams,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ShortTimeCoeffs {
    /// `C(0)` (real).
    pub c0: f64,
    /// `f_corr(0)`, zero without correlations.
    pub f0: f64,
    pub delta: f64,
    pub epsilon: f64,
}

impl ShortTimeCoeffs {
    pub fn new(
        sys: &SystemParams,
        bath: &BathSpec,
        prep: Preparation,
        with_corr: bool,
        policy: &QuadraturePolicy,
    ) -> Result<Self> {
        sys.validate()?;
        let c0 = correlation(0.0, bath, policy)?.re;
        let f0 = if with_corr {
            f_corr(0.0, prep, sys, bath, policy)?
        } else {
            0.0
        };
        Ok(Self {
            c0,
            f0,
            delta: sys.delta,
            epsilon: sys.epsilon,
        })
    }

    /// `H′ = εJ_z + (Δ − f₀)J_x`.
    pub fn hs_prime(&self, ops: &SpinOperators) -> CMatrix {
        ops.jz.scale(self.epsilon) + ops.jx.scale(self.delta - self.f0)
    }

    /// `C(0) + (Δ − f₀)²`, the curvature of `−j_z` for the down state.
    pub fn curvature(&self) -> f64 {
        self.c0 + (self.delta - self.f0).powi(2)
    }

    /// `−j_z(t)` for `ρ(0) = |−N/2⟩⟨−N/2|`.
    pub fn minus_jz(&self, t: f64) -> f64 {
        1.0 - 0.5 * t * t * (self.c0 + self.delta * self.delta + self.f0 * self.f0 - 2.0 * self.delta * self.f0)
    }

    /// `j_y(t)` for `ρ(0) = |−N/2⟩⟨−N/2|`.
    pub fn jy(&self, t: f64) -> f64 {
        (self.delta - self.f0) * t
    }

    pub fn validity(&self, t: f64, delta_tilde: f64) -> Validity {
        Validity {
            t_delta_tilde: t * delta_tilde,
            t2_curvature: t * t * self.curvature().abs(),
        }
    }
}

/// Heuristics describing how far into the expansion a time lies; both
/// should be well below one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validity {
    pub t_delta_tilde: f64,
    pub t2_curvature: f64,
}

impl Validity {
    /// Largest `t` with `t²·curvature ≤ bound` and `t·Δ̃ ≤ bound`.
    pub fn horizon(coeffs: &ShortTimeCoeffs, delta_tilde: f64, bound: f64) -> f64 {
        let a = (bound / coeffs.curvature().abs()).sqrt();
        let b = bound / delta_tilde;
        a.min(b)
    }
}

/// Second-order `ρ(t)` from any initial state.
pub fn rho_short(
    t: f64,
    rho0: &DensityMatrix,
    coeffs: &ShortTimeCoeffs,
    ops: &SpinOperators,
) -> Result<DensityMatrix> {
    if rho0.dim() != ops.dim {
        return Err(Error::Domain("state and operators differ in dimension".into()));
    }
    let rho = rho0.matrix();
    let h = coeffs.hs_prime(ops);
    let f = &ops.jx;
    let first = commutator(rho, &h);
    let coherent = commutator(&h, &first);
    let ff = f * f;
    let dissipative = (f * rho * f).scale(2.0) - &ff * rho - rho * &ff;
    let i = num_complex::Complex64::new(0.0, t);
    let second = (coherent + dissipative.scale(coeffs.c0)).scale(0.5 * t * t);
    let out = rho + first * i + second;
    let out = DensityMatrix::from_matrix_unchecked(out);
    let scale = 1.0 + t * t * coeffs.curvature().abs() * ops.j() * ops.j();
    if out.trace_error() > 1e-12 * scale || out.hermiticity_error() > 1e-12 * scale {
        return Err(Error::NumericalConsistency(format!(
            "short-time state at t = {t} lost trace or hermiticity"
        )));
    }
    Ok(out)
}

fn require_down(prep: Preparation) -> Result<()> {
    if prep != Preparation::DownZ {
        return Err(Error::Unsupported(format!(
            "scalar short-time formulas assume the down_z preparation (got {prep})"
        )));
    }
    Ok(())
}

/// `−j_z(t)` from the scalar short-time formula.
pub fn jz_short(
    t: f64,
    sys: &SystemParams,
    bath: &BathSpec,
    prep: Preparation,
    with_corr: bool,
) -> Result<f64> {
    require_down(prep)?;
    let c = ShortTimeCoeffs::new(sys, bath, prep, with_corr, &QuadraturePolicy::default())?;
    Ok(c.minus_jz(t))
}

/// `j_y(t)` from the scalar short-time formula.
pub fn jy_short(
    t: f64,
    sys: &SystemParams,
    bath: &BathSpec,
    prep: Preparation,
    with_corr: bool,
) -> Result<f64> {
    require_down(prep)?;
    let c = ShortTimeCoeffs::new(sys, bath, prep, with_corr, &QuadraturePolicy::default())?;
    Ok(c.jy(t))
}

/// Scalar short-time curve for the down state over `times`.
pub fn short_time_series(
    times: &[f64],
    sys: &SystemParams,
    bath: &BathSpec,
    prep: Preparation,
    with_corr: bool,
) -> Result<(ShortTimeCoeffs, Vec<f64>, Vec<f64>)> {
    require_down(prep)?;
    let c = ShortTimeCoeffs::new(sys, bath, prep, with_corr, &QuadraturePolicy::default())?;
    let jz = times.iter().map(|&t| c.minus_jz(t)).collect();
    let jy = times.iter().map(|&t| c.jy(t)).collect();
    Ok((c, jz, jy))
}

/// `⟨O⟩(t) = a₀ + a₁t + a₂t²` under [`rho_short`] for a pure initial state:
///
/// ```text
/// a₀ = ⟨O⟩,   a₁ = i⟨[H′, O]⟩,   a₂ = ½(⟨[H′, [O, H′]]⟩ − C(0)⟨[F, [F, O]]⟩)
/// ```
///
/// Only matrix–vector products are needed. The coefficients are complex;
/// their imaginary parts vanish for Hermitian `O` and serve as a check.
pub fn expectation_polynomial(
    psi: &DVector<Complex64>,
    obs: &CMatrix,
    coeffs: &ShortTimeCoeffs,
    ops: &SpinOperators,
) -> [Complex64; 3] {
    let h = coeffs.hs_prime(ops);
    let f = &ops.jx;
    let dot = |a: &DVector<Complex64>, b: &DVector<Complex64>| a.dotc(b);
    let hp = &h * psi;
    let hhp = &h * &hp;
    let op = obs * psi;
    let fp = f * psi;
    let ffp = f * &fp;
    let a0 = dot(psi, &op);
    // ⟨[H′,O]⟩ = ⟨H′ψ|Oψ⟩ − ⟨Oψ|H′ψ⟩
    let a1 = Complex64::i() * (dot(&hp, &op) - dot(&op, &hp));
    // ⟨H′OH′⟩ twice, minus ⟨H′²O⟩ + ⟨OH′²⟩
    let coherent = dot(&hp, &(obs * &hp)) * 2.0 - dot(&hhp, &op) - dot(&op, &hhp);
    let dissipative = dot(&ffp, &op) + dot(&op, &ffp) - dot(&fp, &(obs * &fp)) * 2.0;
    let a2 = (coherent - dissipative * coeffs.c0) * 0.5;
    [a0, a1, a2]
}

/// Short-time trajectory of a pure state, valid for any `N`.
#[derive(Debug, Clone)]
pub struct ShortTimeExpansion {
    n_atoms: usize,
    /// Polynomials for `1`, `J_z`, `J_z²`, `J_y`, `J_x`.
    polys: [[Complex64; 3]; 5],
}

impl ShortTimeExpansion {
    pub fn new(psi: &[Complex64], coeffs: &ShortTimeCoeffs, ops: &SpinOperators) -> Result<Self> {
        if psi.len() != ops.dim {
            return Err(Error::Domain("state and operators differ in dimension".into()));
        }
        let v = DVector::from_column_slice(psi);
        let jz2 = CMatrix::from_diagonal(&ops.jz.diagonal().map(|z| z * z));
        let ops_list = [ops.identity(), ops.jz.clone(), jz2, ops.jy.clone(), ops.jx.clone()];
        let mut polys = [[Complex64::new(0.0, 0.0); 3]; 5];
        for (k, o) in ops_list.iter().enumerate() {
            polys[k] = expectation_polynomial(&v, o, coeffs, ops);
        }
        Ok(Self {
            n_atoms: ops.n_atoms,
            polys,
        })
    }

    fn eval(&self, k: usize, t: f64) -> Complex64 {
        let p = &self.polys[k];
        p[0] + p[1] * t + p[2] * (t * t)
    }

    /// Observables at `t`, the trace error and the largest imaginary
    /// residue among the expectation values.
    pub fn observables(&self, t: f64) -> (Observables, f64, f64) {
        let vals: Vec<Complex64> = (0..5).map(|k| self.eval(k, t)).collect();
        let n = self.n_atoms as f64;
        let obs = Observables {
            jz: 2.0 * vals[1].re / n,
            jz2: 4.0 * vals[2].re / (n * n),
            jy: 2.0 * vals[3].re / n,
            jx: 2.0 * vals[4].re / n,
        };
        let imag = vals.iter().fold(0.0_f64, |m, z| m.max(z.im.abs()));
        (obs, (vals[0].re - 1.0).abs().max(vals[0].im.abs()), imag)
    }

    pub fn trajectory(&self, times: &[f64]) -> Trajectory {
        let mut traj = Trajectory::with_capacity(times.len());
        for &t in times {
            let (obs, tr, he) = self.observables(t);
            traj.push(t, obs, tr, he, f64::NAN);
        }
        traj
    }
}
