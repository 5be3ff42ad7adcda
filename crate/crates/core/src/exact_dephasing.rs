//! Exact pure-dephasing solution (`ε = 0`).
//!
//! With `ε = 0` the coupling `J_x` commutes with `H_S = ΔJ_x`. The rotation
//! `R = e^{−iπJ_y/2}` maps the problem to a frame with `H = ω₀J_z`,
//! coupling `J_z` and `ω₀ = Δ`:
//!
//! ```text
//! R†J_xR = J_z,   R†J_zR = −J_x,   R†J_yR = J_y.
//! ```
//!
//! In that frame the density matrix evolves elementwise,
//!
//! ```text
//! ρ_mn(t) = ρ_mn(0) e^{−iω₀(m−n)t} e^{−iΔ(t)(m²−n²)t} e^{−γ(t)(m−n)²t} · F_c^{mn}(t)
//! F_c^{mn}(t) = Σ_l p_l e^{−2i(n−m) l Φ(t)} / Σ_l p_l,   p_l = |⟨l|ψ⟩|² e^{−βω₀l + βl²𝒞}
//! ```
//!
//! where `F_c` is present only for a state prepared from the correlated
//! equilibrium. Main-frame observables only need the three central bands of
//! `ρ`, so [`ExactDephasing`] works in `O(N)` per time and handles
//! `N = 1000` directly.

use num_complex::Complex64;

use crate::bath::{integrate_spectral, omega_coth, BathSpec};
use crate::corr_kernel::{ln_factorials, Preparation};
use crate::error::{Error, Result};
use crate::master_equation::Trajectory;
use crate::parallel::Execution;
use crate::quadrature::QuadraturePolicy;
use crate::spin_algebra::{
    build_spin_operators, ladder_element, CMatrix, DensityMatrix, Observables, SpinOperators,
    SystemParams,
};

/// Largest dimension for which trajectories also report the minimum
/// eigenvalue (which needs the full matrix).
pub const FULL_MATRIX_DIM_LIMIT: usize = 64;

/// Bath factors of the exact solution. The products `γ(t)·t` and `Δ(t)·t`
/// are stored directly so `t = 0` needs no limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingFactors {
    pub t: f64,
    /// `γ(t)`.
    pub gamma_t: f64,
    /// `Δ(t)`.
    pub delta_t: f64,
    /// `Φ(t)`.
    pub phi_t: f64,
    /// `𝒞 = ∫ J(ω)/ω dω = Gω_c`.
    pub c_const: f64,
    /// `γ(t)·t = ∫ J (1 − cos ωt) coth(βω/2) / ω² dω`.
    pub decay: f64,
    /// `Δ(t)·t = ∫ J (sin ωt − ωt) / ω² dω`.
    pub shift: f64,
}

#[inline]
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `(sin x − x)/x`.
#[inline]
fn sin_minus_x_over_x(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        -x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0))
    } else {
        (x.sin() - x) / x
    }
}

pub fn dephasing_factors(t: f64, bath: &BathSpec, policy: &QuadraturePolicy) -> Result<DephasingFactors> {
    bath.validate()?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Domain(format!("time {t} must be >= 0")));
    }
    let c_const = bath.g * bath.omega_c;
    if t == 0.0 || bath.g == 0.0 {
        return Ok(DephasingFactors {
            t,
            gamma_t: 0.0,
            delta_t: 0.0,
            phi_t: 0.0,
            c_const,
            decay: 0.0,
            shift: 0.0,
        });
    }
    let r = integrate_spectral(
        bath,
        policy,
        3,
        |w, out| {
            let jw = bath.j_over_omega(w);
            let s = sinc(0.5 * w * t);
            out[0] = jw * omega_coth(w, bath.beta) * 0.5 * t * t * s * s;
            out[1] = jw * t * sin_minus_x_over_x(w * t);
            out[2] = jw * t * sinc(w * t);
        },
        &[],
    )?;
    let (decay, shift, phi) = (r.value[0], r.value[1], r.value[2]);
    Ok(DephasingFactors {
        t,
        gamma_t: decay / t,
        delta_t: shift / t,
        phi_t: phi,
        c_const,
        decay,
        shift,
    })
}

/// `F_c` as a function of `d = n − m`, from log-domain weights.
#[derive(Debug, Clone)]
pub struct ThermalWeights {
    /// `(l, p_l)` up to normalization; zero weights are dropped.
    terms: Vec<(f64, f64)>,
    total: f64,
}

impl ThermalWeights {
    /// `p_l ∝ w_l e^{−βω₀l + βl²𝒞}` over `l = −N/2 … N/2`.
    pub fn new(psi_weights: &[f64], eps0: f64, beta: f64, c_const: f64) -> Result<Self> {
        let ln_w: Vec<f64> = psi_weights.iter().map(|&w| w.ln()).collect();
        Self::from_ln_weights(&ln_w, eps0, beta, c_const)
    }

    pub fn from_ln_weights(ln_w: &[f64], eps0: f64, beta: f64, c_const: f64) -> Result<Self> {
        if ln_w.is_empty() {
            return Err(Error::Domain("weight vector is empty".into()));
        }
        let j = (ln_w.len() - 1) as f64 / 2.0;
        let logs: Vec<(f64, f64)> = ln_w
            .iter()
            .enumerate()
            .filter(|(_, lw)| lw.is_finite())
            .map(|(k, &lw)| {
                let l = k as f64 - j;
                (l, lw - beta * eps0 * l + beta * l * l * c_const)
            })
            .collect();
        let shift = logs
            .iter()
            .map(|&(_, x)| x)
            .fold(f64::NEG_INFINITY, f64::max);
        if !shift.is_finite() {
            return Err(Error::Domain("state weights are all zero".into()));
        }
        let terms: Vec<(f64, f64)> = logs.iter().map(|&(l, x)| (l, (x - shift).exp())).collect();
        let total = terms.iter().map(|&(_, p)| p).sum();
        Ok(Self { terms, total })
    }

    /// `F_c` for `n − m = d`. Equals one exactly when `d·Φ = 0`.
    pub fn factor(&self, d: f64, phi: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(l, p) in &self.terms {
            acc += Complex64::from_polar(p, -2.0 * d * l * phi);
        }
        acc / self.total
    }
}

fn check_square(rho0: &DensityMatrix, eps0: f64) -> Result<()> {
    if !eps0.is_finite() {
        return Err(Error::Domain("level splitting must be finite".into()));
    }
    if rho0.dim() < 2 {
        return Err(Error::Domain("state dimension must be at least 2".into()));
    }
    Ok(())
}

/// Uncorrelated factor for one element, `(m, n)` magnetic quantum numbers.
#[inline]
fn element_factor(m: f64, n: f64, eps0: f64, fac: &DephasingFactors) -> Complex64 {
    let d = m - n;
    let phase = -eps0 * d * fac.t - fac.shift * (m * m - n * n);
    Complex64::from_polar((-fac.decay * d * d).exp(), phase)
}

/// Exact `ρ(t)` from explicit bath factors. `weights = Some(..)` includes
/// the correlation factor.
pub fn exact_rho_with_factors(
    rho0: &DensityMatrix,
    eps0: f64,
    fac: &DephasingFactors,
    weights: Option<&ThermalWeights>,
) -> Result<DensityMatrix> {
    check_square(rho0, eps0)?;
    let dim = rho0.dim();
    let j = (dim - 1) as f64 / 2.0;
    let corr: Option<Vec<Complex64>> = weights.map(|w| {
        (0..2 * dim - 1)
            .map(|s| w.factor(s as f64 - (dim - 1) as f64, fac.phi_t))
            .collect()
    });
    let mut out = rho0.matrix().clone();
    for a in 0..dim {
        for b in 0..dim {
            if a == b {
                continue;
            }
            let (m, n) = (a as f64 - j, b as f64 - j);
            let mut f = element_factor(m, n, eps0, fac);
            if let Some(c) = &corr {
                f *= c[b + dim - 1 - a];
            }
            out[(a, b)] *= f;
        }
    }
    Ok(DensityMatrix::from_matrix_unchecked(out))
}

pub fn exact_rho_uncorrelated(
    t: f64,
    rho0_rotated: &DensityMatrix,
    eps0: f64,
    bath: &BathSpec,
) -> Result<DensityMatrix> {
    let fac = dephasing_factors(t, bath, &QuadraturePolicy::default())?;
    exact_rho_with_factors(rho0_rotated, eps0, &fac, None)
}

pub fn exact_rho_correlated(
    t: f64,
    rho0_rotated: &DensityMatrix,
    psi_weights: &[f64],
    eps0: f64,
    bath: &BathSpec,
) -> Result<DensityMatrix> {
    if psi_weights.len() != rho0_rotated.dim() {
        return Err(Error::Domain("weight vector and state dimension differ".into()));
    }
    let total: f64 = psi_weights.iter().sum();
    if psi_weights.iter().any(|&w| !(w >= 0.0)) || (total - 1.0).abs() > 1e-10 {
        return Err(Error::Domain("weights must be non-negative and sum to 1".into()));
    }
    let fac = dephasing_factors(t, bath, &QuadraturePolicy::default())?;
    let w = ThermalWeights::new(psi_weights, eps0, bath.beta, fac.c_const)?;
    exact_rho_with_factors(rho0_rotated, eps0, &fac, Some(&w))
}

/// Dense `R = e^{−iπJ_y/2}` by Hermitian eigendecomposition of `J_y`.
pub fn rotation_matrix(ops: &SpinOperators) -> CMatrix {
    let eig = nalgebra::SymmetricEigen::new(ops.jy.clone());
    let phases = nalgebra::DVector::from_fn(ops.dim, |k, _| {
        Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_2 * eig.eigenvalues[k])
    });
    &eig.eigenvectors * CMatrix::from_diagonal(&phases) * eig.eigenvectors.adjoint()
}

/// `R†|ψ⟩` for a main-frame preparation, in closed form (up to a global
/// phase). Returns `(ln |amplitude|, sign)` per basis index so that
/// `N = 1000` stays representable.
pub fn rotated_state(prep: Preparation, n_atoms: usize) -> Vec<(f64, f64)> {
    let dim = n_atoms + 1;
    match prep {
        // −z maps to +x, +z maps to −x, +x maps to +z.
        Preparation::DownZ | Preparation::UpZ => {
            let lf = ln_factorials(n_atoms);
            let half_ln = 0.5 * n_atoms as f64 * std::f64::consts::LN_2;
            (0..dim)
                .map(|k| {
                    let ln_amp = 0.5 * (lf[n_atoms] - lf[k] - lf[n_atoms - k]) - half_ln;
                    let sign = if prep == Preparation::UpZ && (n_atoms - k) % 2 == 1 {
                        -1.0
                    } else {
                        1.0
                    };
                    (ln_amp, sign)
                })
                .collect()
        }
        Preparation::PlusX => (0..dim)
            .map(|k| if k == n_atoms { (0.0, 1.0) } else { (f64::NEG_INFINITY, 1.0) })
            .collect(),
    }
}

/// Exact dephasing dynamics of one prepared state, evaluated in the rotated
/// frame and reported as main-frame observables.
#[derive(Debug, Clone)]
pub struct ExactDephasing {
    n_atoms: usize,
    eps0: f64,
    bath: BathSpec,
    policy: QuadraturePolicy,
    /// `ψ_k` in the rotated frame (real up to a global phase).
    psi: Vec<f64>,
    ln_w: Vec<f64>,
    /// `⟨k+1|J₊|k⟩`.
    ladder: Vec<f64>,
}

impl ExactDephasing {
    pub fn new(prep: Preparation, sys: &SystemParams, bath: &BathSpec) -> Result<Self> {
        Self::with_policy(prep, sys, bath, &QuadraturePolicy::default())
    }

    pub fn with_policy(
        prep: Preparation,
        sys: &SystemParams,
        bath: &BathSpec,
        policy: &QuadraturePolicy,
    ) -> Result<Self> {
        sys.validate()?;
        bath.validate()?;
        if sys.epsilon != 0.0 {
            return Err(Error::Unsupported(format!(
                "exact dephasing solution needs epsilon = 0 (got {})",
                sys.epsilon
            )));
        }
        let n = sys.n_atoms;
        let state = rotated_state(prep, n);
        let psi = state.iter().map(|&(l, s)| s * l.exp()).collect();
        let ln_w = state.iter().map(|&(l, _)| 2.0 * l).collect();
        let j = n as f64 / 2.0;
        let ladder = (0..n).map(|k| ladder_element(j, k as f64 - j)).collect();
        Ok(Self {
            n_atoms: n,
            eps0: sys.delta,
            bath: *bath,
            policy: *policy,
            psi,
            ln_w,
            ladder,
        })
    }

    /// `|⟨l|ψ⟩|²` in the rotated frame.
    pub fn weights(&self) -> Vec<f64> {
        self.ln_w.iter().map(|l| l.exp()).collect()
    }

    pub fn initial_rotated(&self) -> DensityMatrix {
        let v: Vec<Complex64> = self.psi.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        let dim = v.len();
        DensityMatrix::from_matrix_unchecked(CMatrix::from_fn(dim, dim, |r, c| v[r] * v[c].conj()))
    }

    pub fn factors(&self, t: f64) -> Result<DephasingFactors> {
        dephasing_factors(t, &self.bath, &self.policy)
    }

    fn thermal(&self, fac: &DephasingFactors) -> Result<ThermalWeights> {
        ThermalWeights::from_ln_weights(&self.ln_w, self.eps0, self.bath.beta, fac.c_const)
    }

    /// Full rotated-frame `ρ(t)`.
    pub fn rho_rotated(&self, t: f64, with_corr: bool) -> Result<DensityMatrix> {
        let fac = self.factors(t)?;
        let w = if with_corr { Some(self.thermal(&fac)?) } else { None };
        exact_rho_with_factors(&self.initial_rotated(), self.eps0, &fac, w.as_ref())
    }

    /// Element `ρ_{a,a+d}(t)` of band `d ∈ {0, 1, 2}` and its mirror
    /// `ρ_{a+d,a}(t)`.
    fn band(
        &self,
        d: usize,
        fac: &DephasingFactors,
        corr: Complex64,
        corr_mirror: Complex64,
    ) -> Vec<(Complex64, Complex64)> {
        let j = self.n_atoms as f64 / 2.0;
        (0..self.psi.len() - d)
            .map(|a| {
                let b = a + d;
                let (m, n) = (a as f64 - j, b as f64 - j);
                let r0 = self.psi[a] * self.psi[b];
                let upper = element_factor(m, n, self.eps0, fac) * corr * r0;
                let lower = element_factor(n, m, self.eps0, fac) * corr_mirror * r0;
                (upper, lower)
            })
            .collect()
    }

    /// Main-frame observables with trace and hermiticity errors of the
    /// bands that enter them.
    pub fn observables(&self, t: f64, with_corr: bool) -> Result<(Observables, f64, f64)> {
        let fac = self.factors(t)?;
        self.observables_with_factors(&fac, with_corr)
    }

    pub fn observables_with_factors(
        &self,
        fac: &DephasingFactors,
        with_corr: bool,
    ) -> Result<(Observables, f64, f64)> {
        let one = Complex64::new(1.0, 0.0);
        let w = if with_corr { Some(self.thermal(fac)?) } else { None };
        let fc = |d: f64| w.as_ref().map_or(one, |w| w.factor(d, fac.phi_t));
        let b0 = self.band(0, fac, one, one);
        let b1 = self.band(1, fac, fc(1.0), fc(-1.0));
        let b2 = self.band(2, fac, fc(2.0), fc(-2.0));
        let c = &self.ladder;
        let j = self.n_atoms as f64 / 2.0;

        let trace: f64 = b0.iter().map(|p| p.0.re).sum();
        let mut herm: f64 = 0.0;
        for (u, l) in b1.iter().chain(&b2) {
            herm = herm.max((u - l.conj()).norm());
        }
        // ⟨J_x⟩ = Σ c_k Re ρ_{k,k+1}, ⟨J_y⟩ = Σ c_k Im ρ_{k,k+1}.
        let (mut jx, mut jy) = (0.0, 0.0);
        for (k, (u, _)) in b1.iter().enumerate() {
            jx += c[k] * u.re;
            jy += c[k] * u.im;
        }
        let mut jz = 0.0;
        let mut jx2 = 0.0;
        for (k, (u, _)) in b0.iter().enumerate() {
            jz += (k as f64 - j) * u.re;
            let below = if k > 0 { c[k - 1] * c[k - 1] } else { 0.0 };
            let above = if k < c.len() { c[k] * c[k] } else { 0.0 };
            jx2 += 0.25 * u.re * (below + above);
        }
        for (k, (u, _)) in b2.iter().enumerate() {
            jx2 += 0.5 * u.re * c[k] * c[k + 1];
        }
        let nf = self.n_atoms as f64;
        let obs = Observables {
            jz: -2.0 * jx / nf,
            jz2: 4.0 * jx2 / (nf * nf),
            jy: 2.0 * jy / nf,
            jx: 2.0 * jz / nf,
        };
        Ok((obs, (trace - 1.0).abs(), herm))
    }

    /// Exact trajectory on `times`, evaluated in parallel per time point.
    pub fn trajectory(&self, times: &[f64], with_corr: bool, exec: Execution) -> Result<Trajectory> {
        let full = self.psi.len() <= FULL_MATRIX_DIM_LIMIT;
        let rows = exec.try_map_range(times.len(), |k| {
            let t = times[k];
            let fac = self.factors(t)?;
            let (obs, tr, he) = self.observables_with_factors(&fac, with_corr)?;
            let min_eig = if full {
                let w = if with_corr { Some(self.thermal(&fac)?) } else { None };
                exact_rho_with_factors(&self.initial_rotated(), self.eps0, &fac, w.as_ref())?
                    .min_eigenvalue()
            } else {
                f64::NAN
            };
            Ok::<_, Error>((t, obs, tr, he, min_eig))
        })?;
        let mut traj = Trajectory::with_capacity(rows.len());
        for (t, obs, tr, he, me) in rows {
            traj.push(t, obs, tr, he, me);
        }
        Ok(traj)
    }
}

/// `−j_z(t)` in the main frame from the exact solution.
pub fn exact_jz_mainframe(
    t: f64,
    prep: Preparation,
    sys: &SystemParams,
    bath: &BathSpec,
    with_corr: bool,
) -> Result<f64> {
    let model = ExactDephasing::new(prep, sys, bath)?;
    Ok(-model.observables(t, with_corr)?.0.jz)
}

/// Dense cross-check helper: rotates a main-frame state into the dephasing
/// frame, `R†ρR`.
pub fn to_rotated_frame(rho: &DensityMatrix, ops: &SpinOperators) -> DensityMatrix {
    let r = rotation_matrix(ops);
    DensityMatrix::from_matrix_unchecked(r.adjoint() * rho.matrix() * r)
}

/// Inverse of [`to_rotated_frame`].
pub fn from_rotated_frame(rho: &DensityMatrix, ops: &SpinOperators) -> DensityMatrix {
    let r = rotation_matrix(ops);
    DensityMatrix::from_matrix_unchecked(&r * rho.matrix() * r.adjoint())
}

/// Builds operators for `n_atoms`; convenience for callers of the dense
/// helpers.
pub fn operators(n_atoms: usize) -> Result<SpinOperators> {
    build_spin_operators(n_atoms)
}
