//! Second-order time-local master equation
//!
//! ```text
//! dρ/dt = i[ρ, H_S] − i f_corr(t)[ρ, F] + { [Λ(t)ρ, F] + h.c. },   Λ(t) = ∫₀ᵗ C(τ) F̄(τ) dτ
//! ```
//!
//! with `F = J_x` and `F̄(τ) = e^{−iH_Sτ} F e^{iH_Sτ}`. Dropping the
//! `f_corr` term gives the equation for an initially uncorrelated state.
//!
//! Everything runs in the eigenbasis of `H_S`, where `F̄` only picks up
//! phases. Matrix elements of `Λ` then factor as
//! `Λ_ab(t) = F_ab Γ(ν_ab, t)` with Bohr frequency `ν_ab = E_a − E_b` and
//!
//! ```text
//! Γ(ν, t) = ∫₀ᵗ C(τ) e^{−iντ} dτ
//!         = ∫ J(ω) [ n(ω) E(ω − ν, t) + (n(ω) + 1) E(−ω − ν, t) ] dω,
//! E(a, t) = (e^{iat} − 1)/(ia).
//! ```
//!
//! The τ integral is done analytically, so every node of the kernel grid is
//! an independent frequency quadrature with no accumulated time-stepping
//! error; the nodes are evaluated in parallel.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::bath::BathSpec;
use crate::corr_kernel::{grid_position, initial_state, FcorrEvaluator, FcorrTable, Preparation};
use crate::error::{Error, Result};
use crate::parallel::Execution;
use crate::quadrature::QuadraturePolicy;
use crate::spin_algebra::{
    build_spin_operators, diagonalize_hs, CMatrix, DensityMatrix, EigenSystem, Observables,
    SpinOperators, SystemParams,
};

/// Hard bound on trace and hermiticity errors of every recorded state.
pub const STATE_TOLERANCE: f64 = 1e-8;
/// Bound on the trace and anti-Hermitian part of a computed derivative,
/// relative to its largest entry.
pub const RHS_TOLERANCE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub t_max: f64,
    pub dt: f64,
    pub include_correlations: bool,
    /// Spacing of the precomputed `Λ`/`f_corr` grid. The default `dt/2` puts
    /// every RK4 stage on a node.
    pub kernel_grid_dt: f64,
    pub record_every: usize,
    pub execution: Execution,
}

impl SimConfig {
    /// Defaults: `dt ≈ 10⁻³·2π/Δ̃`, shrunk so it divides `t_max`.
    pub fn new(sys: &SystemParams, t_max: f64) -> Result<Self> {
        sys.validate()?;
        let target = 1e-3 * 2.0 * std::f64::consts::PI / sys.delta_tilde();
        Self::with_step(t_max, target)
    }

    /// Largest step `≤ dt` that divides `t_max`.
    pub fn with_step(t_max: f64, dt: f64) -> Result<Self> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::Config(format!("t_max = {t_max} must be > 0")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Config(format!("dt = {dt} must be > 0")));
        }
        let n = (t_max / dt * (1.0 - 1e-12)).ceil().max(1.0);
        let dt = t_max / n;
        Ok(Self {
            t_max,
            dt,
            include_correlations: true,
            kernel_grid_dt: 0.5 * dt,
            record_every: 1,
            execution: Execution::default(),
        })
    }

    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::Config(format!("t_max = {} must be > 0", self.t_max)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("dt = {} must be > 0", self.dt)));
        }
        let n = self.n_steps();
        if n == 0 || (n as f64 * self.dt - self.t_max).abs() > 1e-9 * self.t_max {
            return Err(Error::Config(format!(
                "dt = {} does not divide t_max = {}",
                self.dt, self.t_max
            )));
        }
        if !(self.kernel_grid_dt > 0.0 && self.kernel_grid_dt <= self.dt * (1.0 + 1e-12)) {
            return Err(Error::Config(format!(
                "kernel_grid_dt = {} must lie in (0, dt = {}]",
                self.kernel_grid_dt, self.dt
            )));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be >= 1".into()));
        }
        Ok(())
    }

    /// Node count and spacing of the kernel grid covering `[0, t_max]`.
    pub fn kernel_grid(&self) -> (usize, f64) {
        let n = (self.t_max / self.kernel_grid_dt * (1.0 - 1e-12)).ceil().max(1.0);
        (n as usize, self.t_max / n)
    }
}

/// `E(a, t) = ∫₀ᵗ e^{iaτ} dτ = t e^{iat/2} sinc(at/2)`.
#[inline]
fn phase_integral(a: f64, t: f64) -> Complex64 {
    let x = 0.5 * a * t;
    let sinc = if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    };
    Complex64::from_polar(t * sinc, x)
}

/// `Γ(ν_q, t)` for each Bohr frequency `ν_q`, by one vector quadrature.
pub fn gamma_integrals(
    nus: &[f64],
    t: f64,
    bath: &BathSpec,
    policy: &QuadraturePolicy,
) -> Result<Vec<Complex64>> {
    if t == 0.0 || bath.g == 0.0 {
        return Ok(vec![ZERO; nus.len()]);
    }
    let lam = bath.cutoff(policy);
    let mut breaks: Vec<f64> = nus
        .iter()
        .map(|nu| nu.abs())
        .filter(|&w| w > 0.0 && w < lam)
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let r = crate::bath::integrate_spectral(
        bath,
        policy,
        2 * nus.len(),
        |w, out| {
            let jn = bath.j_occupation(w);
            let jn1 = jn + bath.j(w);
            for (q, &nu) in nus.iter().enumerate() {
                let z = jn * phase_integral(w - nu, t) + jn1 * phase_integral(-w - nu, t);
                out[2 * q] = z.re;
                out[2 * q + 1] = z.im;
            }
        },
        &breaks,
    )?;
    Ok((0..nus.len())
        .map(|q| Complex64::new(r.value[2 * q], r.value[2 * q + 1]))
        .collect())
}

/// `Λ(t)` on a uniform grid, stored as `Γ(ν, t)` per Bohr frequency.
#[derive(Debug, Clone)]
pub struct MemoryKernel {
    step: f64,
    /// Bohr frequencies that carry nonzero elements of `F` in the eigenbasis.
    nus: Vec<f64>,
    /// `(a, b, index into nus)` for every nonzero `F_ab`.
    support: Vec<(usize, usize, usize)>,
    /// `gamma[k][q] = Γ(ν_q, k·step)`.
    gamma: Vec<Vec<Complex64>>,
    f_eig: CMatrix,
    eig: EigenSystem,
}

impl MemoryKernel {
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        self.step * (self.gamma.len() - 1) as f64
    }

    pub fn bohr_frequencies(&self) -> &[f64] {
        &self.nus
    }

    fn gamma_at(&self, t: f64) -> Result<Vec<Complex64>> {
        let (k, frac) = grid_position(t, self.step, self.gamma.len())?;
        if frac == 0.0 {
            return Ok(self.gamma[k].clone());
        }
        Ok(self.gamma[k]
            .iter()
            .zip(&self.gamma[k + 1])
            .map(|(a, b)| a * (1.0 - frac) + b * frac)
            .collect())
    }

    /// `Λ(t)` in the eigenbasis of `H_S`, linearly interpolated off-grid.
    pub fn lambda_eig_at(&self, t: f64) -> Result<CMatrix> {
        let g = self.gamma_at(t)?;
        let dim = self.f_eig.nrows();
        let mut out = CMatrix::zeros(dim, dim);
        for &(a, b, q) in &self.support {
            out[(a, b)] = self.f_eig[(a, b)] * g[q];
        }
        Ok(out)
    }

    /// `Λ(t)` in the Dicke basis.
    pub fn lambda_at(&self, t: f64) -> Result<CMatrix> {
        Ok(self.eig.from_eigenbasis(&self.lambda_eig_at(t)?))
    }
}

pub fn build_memory_kernel(
    sys: &SystemParams,
    bath: &BathSpec,
    config: &SimConfig,
    policy: &QuadraturePolicy,
) -> Result<MemoryKernel> {
    let ops = build_spin_operators(sys.n_atoms)?;
    let eig = diagonalize_hs(sys, &ops)?;
    kernel_from_parts(&ops, &eig, bath, config, policy)
}

fn kernel_from_parts(
    ops: &SpinOperators,
    eig: &EigenSystem,
    bath: &BathSpec,
    config: &SimConfig,
    policy: &QuadraturePolicy,
) -> Result<MemoryKernel> {
    config.validate()?;
    bath.validate()?;
    policy.validate()?;
    let f_eig = eig.to_eigenbasis(&ops.jx);
    let dim = ops.dim;
    let scale = f_eig.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    let mut nus: Vec<f64> = Vec::new();
    let mut q_index: Vec<Option<usize>> = vec![None; 2 * dim - 1];
    let mut support = Vec::new();
    let gap = (eig.energies[dim - 1] - eig.energies[0]) / (dim - 1).max(1) as f64;
    for a in 0..dim {
        for b in 0..dim {
            if f_eig[(a, b)].norm() <= 1e-14 * scale {
                continue;
            }
            let slot = a + dim - 1 - b;
            let q = *q_index[slot].get_or_insert_with(|| {
                nus.push(gap * (a as f64 - b as f64));
                nus.len() - 1
            });
            support.push((a, b, q));
        }
    }
    let (n, step) = config.kernel_grid();
    let gamma = config
        .execution
        .try_map_range(n + 1, |k| gamma_integrals(&nus, k as f64 * step, bath, policy))?;
    Ok(MemoryKernel {
        step,
        nus,
        support,
        gamma,
        f_eig,
        eig: eig.clone(),
    })
}

/// Per-time observables and diagnostics of one evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub jz: Vec<f64>,
    pub jz2: Vec<f64>,
    pub jy: Vec<f64>,
    pub jx: Vec<f64>,
    pub trace_err: Vec<f64>,
    pub herm_err: Vec<f64>,
    pub min_eig: Vec<f64>,
}

impl Trajectory {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            jz: Vec::with_capacity(n),
            jz2: Vec::with_capacity(n),
            jy: Vec::with_capacity(n),
            jx: Vec::with_capacity(n),
            trace_err: Vec::with_capacity(n),
            herm_err: Vec::with_capacity(n),
            min_eig: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Appends a sample; diagnostics come from `rho` itself.
    pub fn push_state(&mut self, t: f64, rho: &DensityMatrix, ops: &SpinOperators) -> Result<()> {
        let obs = Observables::measure(rho, ops)?;
        self.push(t, obs, rho.trace_error(), rho.hermiticity_error(), rho.min_eigenvalue());
        Ok(())
    }

    pub fn push(&mut self, t: f64, obs: Observables, trace_err: f64, herm_err: f64, min_eig: f64) {
        self.times.push(t);
        self.jz.push(obs.jz);
        self.jz2.push(obs.jz2);
        self.jy.push(obs.jy);
        self.jx.push(obs.jx);
        self.trace_err.push(trace_err);
        self.herm_err.push(herm_err);
        self.min_eig.push(min_eig);
    }

    /// Column by name (`jz`, `jz2`, `jy`, `jx`, `trace_err`, `herm_err`, `min_eig`).
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        Some(match name {
            "t" => &self.times,
            "jz" => &self.jz,
            "jz2" => &self.jz2,
            "jy" => &self.jy,
            "jx" => &self.jx,
            "trace_err" => &self.trace_err,
            "herm_err" => &self.herm_err,
            "min_eig" => &self.min_eig,
            _ => return None,
        })
    }

    pub fn max_trace_err(&self) -> f64 {
        self.trace_err.iter().fold(0.0, |a, &b| a.max(b))
    }

    pub fn max_herm_err(&self) -> f64 {
        self.herm_err.iter().fold(0.0, |a, &b| a.max(b))
    }
}

/// Precomputed kernel and drive for one `(sys, bath, prep, config)`; runs
/// with and without the correlation term share it.
#[derive(Debug, Clone)]
pub struct MeSolver {
    ops: SpinOperators,
    eig: EigenSystem,
    f_eig: CMatrix,
    kernel: MemoryKernel,
    fcorr: FcorrTable,
    config: SimConfig,
}

impl MeSolver {
    pub fn new(
        sys: &SystemParams,
        bath: &BathSpec,
        prep: Preparation,
        config: &SimConfig,
    ) -> Result<Self> {
        Self::with_policy(sys, bath, prep, config, &QuadraturePolicy::default())
    }

    pub fn with_policy(
        sys: &SystemParams,
        bath: &BathSpec,
        prep: Preparation,
        config: &SimConfig,
        policy: &QuadraturePolicy,
    ) -> Result<Self> {
        let ops = build_spin_operators(sys.n_atoms)?;
        let eig = diagonalize_hs(sys, &ops)?;
        let kernel = kernel_from_parts(&ops, &eig, bath, config, policy)?;
        let (n, step) = config.kernel_grid();
        let fcorr = if bath.g == 0.0 {
            FcorrTable::zeros(step, n)
        } else {
            let ev = FcorrEvaluator::new(prep, sys, bath, policy)?;
            FcorrTable::build(&ev, step, n, config.execution)?
        };
        let f_eig = eig.to_eigenbasis(&ops.jx);
        Ok(Self {
            ops,
            eig,
            f_eig,
            kernel,
            fcorr,
            config: *config,
        })
    }

    pub fn operators(&self) -> &SpinOperators {
        &self.ops
    }

    pub fn kernel(&self) -> &MemoryKernel {
        &self.kernel
    }

    pub fn fcorr_table(&self) -> &FcorrTable {
        &self.fcorr
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// `f_corr(t)` as seen by the stepper.
    pub fn f_corr_at(&self, t: f64) -> Result<f64> {
        self.fcorr.at(t)
    }

    /// Derivative in the eigenbasis. A drive of exactly `0.0` skips the
    /// correlation term, so the uncorrelated path is reproduced bit for bit.
    fn rhs_eig(&self, t: f64, rho: &CMatrix, drive: f64) -> Result<CMatrix> {
        let e = &self.eig.energies;
        let f = &self.f_eig;
        let dim = e.len();
        let lam_rho = self.kernel.lambda_eig_at(t)? * rho;
        let x = &lam_rho * f - f * &lam_rho;
        let mut out = &x + x.adjoint();
        for a in 0..dim {
            for b in 0..dim {
                out[(a, b)] += Complex64::new(0.0, e[b] - e[a]) * rho[(a, b)];
            }
        }
        if drive != 0.0 {
            let c = rho * f - f * rho;
            out -= c * Complex64::new(0.0, drive);
        }
        check_derivative(t, &out)?;
        Ok(out)
    }

    fn drive(&self, t: f64, with_corr: bool) -> Result<f64> {
        if with_corr {
            self.fcorr.at(t)
        } else {
            Ok(0.0)
        }
    }

    /// `dρ/dt` in the Dicke basis.
    pub fn rhs(&self, t: f64, rho: &DensityMatrix, with_corr: bool) -> Result<CMatrix> {
        let r = self.eig.to_eigenbasis(rho.matrix());
        let d = self.rhs_eig(t, &r, self.drive(t, with_corr)?)?;
        Ok(self.eig.from_eigenbasis(&d))
    }

    /// The correlation term `−i f_corr(t)[ρ, F]` alone, in the Dicke basis.
    pub fn correlation_term(&self, t: f64, rho: &DensityMatrix) -> Result<CMatrix> {
        let f = self.fcorr.at(t)?;
        let c = rho.matrix() * &self.ops.jx - &self.ops.jx * rho.matrix();
        Ok(c * Complex64::new(0.0, -f))
    }

    /// Fixed-step RK4 from `rho0` over `[0, t_max]`.
    pub fn run(&self, rho0: &DensityMatrix, with_corr: bool) -> Result<Trajectory> {
        let cfg = &self.config;
        if rho0.dim() != self.ops.dim {
            return Err(Error::Domain("initial state has the wrong dimension".into()));
        }
        let n = cfg.n_steps();
        let h = cfg.dt;
        let mut traj = Trajectory::with_capacity(n / cfg.record_every + 2);
        let mut rho = self.eig.to_eigenbasis(rho0.matrix());
        self.record(&mut traj, 0.0, &rho)?;
        for k in 0..n {
            let t = k as f64 * h;
            let tm = t + 0.5 * h;
            let t1 = if k + 1 == n { cfg.t_max } else { (k + 1) as f64 * h };
            let k1 = self.rhs_eig(t, &rho, self.drive(t, with_corr)?)?;
            let half = Complex64::new(0.5 * h, 0.0);
            let full = Complex64::new(h, 0.0);
            let k2 = self.rhs_eig(tm, &(&rho + &k1 * half), self.drive(tm, with_corr)?)?;
            let k3 = self.rhs_eig(tm, &(&rho + &k2 * half), self.drive(tm, with_corr)?)?;
            let k4 = self.rhs_eig(t1, &(&rho + &k3 * full), self.drive(t1, with_corr)?)?;
            let two = Complex64::new(2.0, 0.0);
            rho += (k1 + (k2 + k3) * two + k4) * Complex64::new(h / 6.0, 0.0);
            if (k + 1) % cfg.record_every == 0 || k + 1 == n {
                self.record(&mut traj, t1, &rho)?;
            }
        }
        Ok(traj)
    }

    fn record(&self, traj: &mut Trajectory, t: f64, rho_eig: &CMatrix) -> Result<()> {
        let rho = DensityMatrix::from_matrix_unchecked(self.eig.from_eigenbasis(rho_eig));
        let trace_err = rho.trace_error();
        let herm_err = rho.hermiticity_error();
        if !(trace_err <= STATE_TOLERANCE && herm_err <= STATE_TOLERANCE) {
            return Err(Error::FailedRun {
                t,
                trace_err,
                herm_err,
            });
        }
        traj.push_state(t, &rho, &self.ops)
    }
}

fn check_derivative(t: f64, d: &CMatrix) -> Result<()> {
    let dim = d.nrows();
    let scale = d.iter().fold(1.0_f64, |m, z| m.max(z.norm()));
    let trace: Complex64 = (0..dim).map(|k| d[(k, k)]).sum();
    let herm = crate::spin_algebra::hermiticity_error(d);
    if trace.norm() > RHS_TOLERANCE * scale || herm > RHS_TOLERANCE * scale {
        return Err(Error::NumericalConsistency(format!(
            "derivative at t = {t} has trace {:e} and hermiticity error {herm:e}",
            trace.norm()
        )));
    }
    Ok(())
}

/// Builds the solver and integrates from `rho0`, with or without the
/// correlation term according to `config.include_correlations`.
pub fn evolve(
    rho0: &DensityMatrix,
    sys: &SystemParams,
    bath: &BathSpec,
    prep: Preparation,
    config: &SimConfig,
) -> Result<Trajectory> {
    MeSolver::new(sys, bath, prep, config)?.run(rho0, config.include_correlations)
}

/// Evolves the prepared state with and without the correlation term,
/// sharing one kernel. Returns `(with, without)`.
pub fn evolve_pair(
    sys: &SystemParams,
    bath: &BathSpec,
    prep: Preparation,
    config: &SimConfig,
) -> Result<(Trajectory, Trajectory)> {
    let solver = MeSolver::new(sys, bath, prep, config)?;
    let rho0 = initial_state(prep, &solver.ops);
    Ok((solver.run(&rho0, true)?, solver.run(&rho0, false)?))
}

/// Density matrix from an amplitude vector, for tests and callers that build
/// their own initial states.
pub fn pure_state(amplitudes: &[Complex64]) -> Result<DensityMatrix> {
    let v = DVector::from_column_slice(amplitudes);
    let norm = v.norm();
    if !(norm > 0.0) {
        return Err(Error::Domain("state vector is zero".into()));
    }
    DensityMatrix::pure((v / Complex64::new(norm, 0.0)).as_slice())
}
