//! Drive term `f_corr(t)` produced by preparing the spins out of the
//! correlated spin–bath equilibrium state.
//!
//! For each supported preparation the closed form is
//!
//! ```text
//! f_corr(t) = N ∫₀^∞ J(ω) cos(ωt) { A/ω + D/(Δ̃² − ω²) [Δ̃ coth(βω/2) − ω coth(βΔ̃/2)] } dω
//! ```
//!
//! with preparation-dependent `(A, D, Δ̃_eff)`. The `J_x`-eigenstate
//! preparation evaluates its coefficients in a frame rotated so that the
//! coupling becomes `J_z` (`ε_r = Δ`, `Δ_r = −ε`); the rotation touches only
//! the coefficient formulas, never the simulation frame.
//!
//! The first-order bath deformation has zero thermal mean (it is linear in
//! `b_k`, `b_k†`), so the normalization is `Z′ = ⟨ψ|e^{−βH_S}|ψ⟩ = μ^N`.
//!
//! [`FcorrOracle`] evaluates the same quantity by brute force: the
//! imaginary-time system factor from dense matrices, a numerical λ
//! integral and an explicit discretized mode sum.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::bath::{omega_coth, BathSpec};
use crate::error::{Error, Result};
use crate::parallel::Execution;
use crate::quadrature::{gauss_legendre_panels, integrate, QuadraturePolicy};
use crate::spin_algebra::{diagonalize_hs, DensityMatrix, SpinOperators, SystemParams};

/// Projective preparation applied to the correlated equilibrium state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preparation {
    /// `J_z|ψ⟩ = −(N/2)|ψ⟩`.
    DownZ,
    /// `J_z|ψ⟩ = +(N/2)|ψ⟩`.
    UpZ,
    /// `J_x|ψ⟩ = +(N/2)|ψ⟩`.
    PlusX,
}

impl Preparation {
    pub const ALL: [Preparation; 3] = [Preparation::DownZ, Preparation::UpZ, Preparation::PlusX];

    pub fn name(self) -> &'static str {
        match self {
            Preparation::DownZ => "down_z",
            Preparation::UpZ => "up_z",
            Preparation::PlusX => "plus_x",
        }
    }
}

impl fmt::Display for Preparation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preparation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "down_z" | "downz" => Ok(Preparation::DownZ),
            "up_z" | "upz" => Ok(Preparation::UpZ),
            "plus_x" | "plusx" => Ok(Preparation::PlusX),
            other => Err(Error::Config(format!(
                "unknown preparation '{other}' (expected down_z, up_z or plus_x)"
            ))),
        }
    }
}

/// Coefficients of the closed-form `f_corr`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrepCoefficients {
    pub a_coef: f64,
    pub d_coef: f64,
    pub delta_eff: f64,
}

/// Thermal factors of `⟨ψ|e^{−βH_S} e^{λH_S} F e^{−λH_S}|ψ⟩ / Z′
/// = (N/2)[𝒜 + 𝓑 cosh(λΔ̃ − 𝒞)]`.
///
/// `script_b` carries its sign, so the same expression covers every
/// preparation (it is negative-signed for `UpZ`). `z_prime = μ^N` overflows
/// for very large `N`; `ln_z_prime` stays finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalSpinFactors {
    pub mu: f64,
    pub f: f64,
    pub f_z: f64,
    pub kappa: f64,
    pub script_a: f64,
    pub script_b: f64,
    pub script_c: f64,
    pub z_prime: f64,
    pub ln_z_prime: f64,
    pub delta_eff: f64,
    pub n_atoms: usize,
}

impl ThermalSpinFactors {
    /// `(N/2)[𝒜 + 𝓑 cosh(λΔ̃ − 𝒞)]`.
    pub fn system_factor(&self, lambda: f64) -> f64 {
        0.5 * self.n_atoms as f64
            * (self.script_a + self.script_b * (lambda * self.delta_eff - self.script_c).cosh())
    }
}

/// `(ε, Δ)` of the frame in which the preparation is a `J_z` eigenstate
/// and the coupling is `J_z` or `J_x`.
fn effective_params(prep: Preparation, sys: &SystemParams) -> (f64, f64) {
    match prep {
        Preparation::DownZ | Preparation::UpZ => (sys.epsilon, sys.delta),
        Preparation::PlusX => (sys.delta, -sys.epsilon),
    }
}

fn check(sys: &SystemParams, beta: f64) -> Result<()> {
    sys.validate()?;
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::Domain(format!("inverse temperature {beta} must be > 0")));
    }
    Ok(())
}

pub fn thermal_spin_factors(
    prep: Preparation,
    sys: &SystemParams,
    beta: f64,
) -> Result<ThermalSpinFactors> {
    check(sys, beta)?;
    let (eps, del) = effective_params(prep, sys);
    let dt = sys.delta_tilde();
    let c = 0.5 * beta * dt;
    let (sh, ch) = (c.sinh(), c.cosh());
    let (mu, kappa, script_b, f) = match prep {
        Preparation::DownZ => {
            let mu = ch + eps / dt * sh;
            let kappa = -del / dt * sh - eps * del / (dt * dt) * ch;
            (mu, kappa, eps * del / (mu * dt * dt), -del / dt * sh / mu)
        }
        Preparation::UpZ => {
            let mu = ch - eps / dt * sh;
            let kappa = -del / dt * sh + eps * del / (dt * dt) * ch;
            (mu, kappa, -eps * del / (mu * dt * dt), -del / dt * sh / mu)
        }
        Preparation::PlusX => {
            // Coupling is J_z in this frame and the state is |N/2⟩.
            let mu = ch - eps / dt * sh;
            let kappa = -eps / dt * sh + eps * eps / (dt * dt) * ch;
            (mu, kappa, del * del / (mu * dt * dt), -del / dt * sh / mu)
        }
    };
    let n = sys.n_atoms as f64;
    Ok(ThermalSpinFactors {
        mu,
        f,
        f_z: -2.0 * mu.ln(),
        kappa,
        script_a: kappa / mu,
        script_b,
        script_c: c,
        z_prime: mu.powf(n),
        ln_z_prime: n * mu.ln(),
        delta_eff: dt,
        n_atoms: sys.n_atoms,
    })
}

/// Closed-form `(A, D, Δ̃_eff)` for a preparation.
pub fn coefficients(prep: Preparation, sys: &SystemParams, beta: f64) -> Result<PrepCoefficients> {
    check(sys, beta)?;
    let (eps, del) = effective_params(prep, sys);
    let dt = sys.delta_tilde();
    let coth = 1.0 / (0.5 * beta * dt).tanh();
    let (a_coef, d_coef) = match prep {
        Preparation::DownZ => (
            -del / dt * (dt + eps * coth) / (dt * coth + eps),
            eps * del / dt / (dt * coth + eps),
        ),
        Preparation::UpZ => (
            -del / dt * (dt - eps * coth) / (dt * coth - eps),
            -eps * del / dt / (dt * coth - eps),
        ),
        Preparation::PlusX => (
            -eps / dt * (dt - eps * coth) / (dt * coth - eps),
            del * del / (dt * dt) / (coth - eps / dt),
        ),
    };
    Ok(PrepCoefficients {
        a_coef,
        d_coef,
        delta_eff: dt,
    })
}

/// Half-width of the window around `ω = Δ̃` (relative to `Δ̃`) in which the
/// removable singularity is evaluated by its Taylor expansion.
pub const SINGULAR_WINDOW: f64 = 1e-3;

/// Closed-form `f_corr(t)` for one parameter set, reusable across times.
#[derive(Debug, Clone)]
pub struct FcorrEvaluator {
    coef: PrepCoefficients,
    bath: BathSpec,
    policy: QuadraturePolicy,
    n_atoms: usize,
    coth_c: f64,
    // First-order expansion of the bracket ratio K(ω) about ω = Δ̃.
    k0: f64,
    k1: f64,
}

impl FcorrEvaluator {
    pub fn new(
        prep: Preparation,
        sys: &SystemParams,
        bath: &BathSpec,
        policy: &QuadraturePolicy,
    ) -> Result<Self> {
        bath.validate()?;
        policy.validate()?;
        let coef = coefficients(prep, sys, bath.beta)?;
        let dt = coef.delta_eff;
        let beta = bath.beta;
        let c = 0.5 * beta * dt;
        let coth_c = 1.0 / c.tanh();
        let csch2 = 1.0 / (c.sinh() * c.sinh());
        // h(ω) = Δ̃ coth(βω/2) − ω coth(c) vanishes at Δ̃; K = h / (Δ̃² − ω²).
        let h1 = -dt * 0.5 * beta * csch2 - coth_c;
        let h2 = dt * beta * beta * csch2 * coth_c / 4.0;
        let k0 = -h1 / (2.0 * dt);
        let k1 = -(h2 + k0) / (2.0 * dt);
        Ok(Self {
            coef,
            bath: *bath,
            policy: *policy,
            n_atoms: sys.n_atoms,
            coth_c,
            k0,
            k1,
        })
    }

    pub fn coefficients(&self) -> PrepCoefficients {
        self.coef
    }

    /// `ω·K(ω)` with `K(ω) = [Δ̃ coth(βω/2) − ω coth(βΔ̃/2)] / (Δ̃² − ω²)`.
    pub fn omega_k(&self, w: f64) -> f64 {
        let dt = self.coef.delta_eff;
        let u = w - dt;
        if u.abs() < SINGULAR_WINDOW * dt {
            w * (self.k0 + self.k1 * u)
        } else {
            (dt * omega_coth(w, self.bath.beta) - w * w * self.coth_c) / (dt * dt - w * w)
        }
    }

    /// Integrand divided by `N` (everything but the prefactor).
    fn integrand(&self, t: f64, w: f64) -> f64 {
        let mut bracket = self.coef.a_coef;
        if self.coef.d_coef != 0.0 {
            bracket += self.coef.d_coef * self.omega_k(w);
        }
        self.bath.j_over_omega(w) * (w * t).cos() * bracket
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::Domain(format!("time {t} must be finite")));
        }
        if self.coef.a_coef == 0.0 && self.coef.d_coef == 0.0 {
            return Ok(0.0);
        }
        let dt = self.coef.delta_eff;
        let breaks = [
            dt * (1.0 - SINGULAR_WINDOW),
            dt,
            dt * (1.0 + SINGULAR_WINDOW),
        ];
        let lam = self.bath.cutoff(&self.policy);
        let r = integrate(|w| self.integrand(t, w), 0.0, lam, &breaks, &self.policy)?;
        Ok(self.n_atoms as f64 * r.value)
    }
}

/// Closed-form `f_corr(t)`.
pub fn f_corr(
    t: f64,
    prep: Preparation,
    sys: &SystemParams,
    bath: &BathSpec,
    policy: &QuadraturePolicy,
) -> Result<f64> {
    FcorrEvaluator::new(prep, sys, bath, policy)?.eval(t)
}

/// `f_corr` memoized on a uniform grid `t_k = k·h`, `k = 0..=n`, with
/// linear interpolation in between.
#[derive(Debug, Clone, PartialEq)]
pub struct FcorrTable {
    pub step: f64,
    pub values: Vec<f64>,
}

impl FcorrTable {
    pub fn build(eval: &FcorrEvaluator, step: f64, n_steps: usize, exec: Execution) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::Domain("grid step must be positive".into()));
        }
        let values = exec.try_map_range(n_steps + 1, |k| eval.eval(k as f64 * step))?;
        Ok(Self { step, values })
    }

    pub fn zeros(step: f64, n_steps: usize) -> Self {
        Self {
            step,
            values: vec![0.0; n_steps + 1],
        }
    }

    pub fn t_max(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    pub fn at(&self, t: f64) -> Result<f64> {
        let (k, frac) = grid_position(t, self.step, self.values.len())?;
        if frac == 0.0 {
            return Ok(self.values[k]);
        }
        Ok(self.values[k] * (1.0 - frac) + self.values[k + 1] * frac)
    }
}

/// Locates `t` on a uniform grid of `len` points. Returns the left node and
/// the fractional offset; nodes are matched exactly up to a few ulps.
pub(crate) fn grid_position(t: f64, step: f64, len: usize) -> Result<(usize, f64)> {
    let t_max = step * (len - 1) as f64;
    let x = t / step;
    let slack = 1e-9;
    if !(x >= -slack && x <= (len - 1) as f64 + slack) {
        return Err(Error::OutOfRange { t, t_max });
    }
    let nearest = x.round();
    if (x - nearest).abs() < 1e-9 {
        return Ok(((nearest as usize).min(len - 1), 0.0));
    }
    let k = (x.floor() as usize).min(len - 2);
    Ok((k, x - k as f64))
}

/// Amplitudes of the prepared pure state in the Dicke basis.
pub fn state_vector(prep: Preparation, ops: &SpinOperators) -> Vec<Complex64> {
    match prep {
        Preparation::DownZ => ops.basis_state(0),
        Preparation::UpZ => ops.basis_state(ops.dim - 1),
        Preparation::PlusX => {
            // Spin coherent state along +x: amplitudes sqrt(C(N,k)) / 2^{N/2}.
            let n = ops.n_atoms;
            let ln_fact = ln_factorials(n);
            (0..=n)
                .map(|k| {
                    let ln_binom = ln_fact[n] - ln_fact[k] - ln_fact[n - k];
                    let amp = (0.5 * ln_binom - 0.5 * n as f64 * std::f64::consts::LN_2).exp();
                    Complex64::new(amp, 0.0)
                })
                .collect()
        }
    }
}

/// `ln k!` for `k = 0..=n`.
pub fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

pub fn initial_state(prep: Preparation, ops: &SpinOperators) -> DensityMatrix {
    let psi = state_vector(prep, ops);
    let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let psi: Vec<Complex64> = psi.iter().map(|a| a / norm).collect();
    DensityMatrix::pure(&psi).expect("normalized preparation state")
}

/// Discretization of the brute-force oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleGrid {
    /// Number of discrete bath modes (rounded up to a multiple of 8; modes
    /// sit on composite Gauss–Legendre nodes with `|g_k|² = J(ω_k) w_k`).
    pub n_modes: usize,
    /// Number of 8-point panels for the imaginary-time λ integral.
    pub lambda_steps: usize,
    /// Highest mode frequency in units of `ω_c`.
    pub omega_max_multiplier: f64,
}

impl Default for OracleGrid {
    fn default() -> Self {
        Self {
            n_modes: 4000,
            lambda_steps: 64,
            omega_max_multiplier: 40.0,
        }
    }
}

/// Brute-force evaluation of
/// `f_corr(t) = Σ_k |g_k|² [Q₁(ω_k) e^{iω_k t}(1 + n_k) + Q₂(ω_k) e^{−iω_k t} n_k]`
/// where `Q₁,₂ = ∫₀^β e^{∓λω} S(λ) dλ` and the system factor
/// `S(λ) = ⟨ψ|e^{−βH_S} e^{λH_S} J_x e^{−λH_S}|ψ⟩ / ⟨ψ|e^{−βH_S}|ψ⟩` is
/// evaluated with dense matrices in the simulation frame. None of the
/// closed-form coefficients enter.
#[derive(Debug, Clone)]
pub struct FcorrOracle {
    omegas: Vec<f64>,
    /// `|g_k|² Q₁ (1 + n_k)`.
    w_plus: Vec<Complex64>,
    /// `|g_k|² Q₂ n_k`.
    w_minus: Vec<Complex64>,
}

impl FcorrOracle {
    pub fn new(
        prep: Preparation,
        sys: &SystemParams,
        bath: &BathSpec,
        grid: OracleGrid,
        exec: Execution,
    ) -> Result<Self> {
        check(sys, bath.beta)?;
        bath.validate()?;
        if grid.n_modes == 0 || grid.lambda_steps == 0 || !(grid.omega_max_multiplier > 0.0) {
            return Err(Error::Domain("oracle discretization must be positive".into()));
        }
        let ops = crate::spin_algebra::build_spin_operators(sys.n_atoms)?;
        let eig = diagonalize_hs(sys, &ops)?;
        let beta = bath.beta;
        let psi = state_vector(prep, &ops);
        let psi_e: Vec<Complex64> = (0..ops.dim)
            .map(|a| {
                (0..ops.dim)
                    .map(|r| eig.vectors[(r, a)].conj() * psi[r])
                    .sum()
            })
            .collect();
        let f_e = eig.to_eigenbasis(&ops.jx);
        let e_min = eig.energies[0];
        let shifted: Vec<f64> = eig.energies.iter().map(|e| e - e_min).collect();
        let z: f64 = (0..ops.dim)
            .map(|a| psi_e[a].norm_sqr() * (-beta * shifted[a]).exp())
            .sum();

        // S(λ) on the λ nodes.
        let (lam_nodes, lam_weights) = gauss_legendre_panels(0.0, beta, grid.lambda_steps);
        let system: Vec<Complex64> = lam_nodes
            .iter()
            .map(|&lam| {
                let mut acc = Complex64::new(0.0, 0.0);
                for a in 0..ops.dim {
                    let left = psi_e[a].conj() * ((lam - beta) * shifted[a]).exp();
                    for b in 0..ops.dim {
                        acc += left * f_e[(a, b)] * (-lam * shifted[b]).exp() * psi_e[b];
                    }
                }
                acc / z
            })
            .collect();

        let panels = grid.n_modes.div_ceil(8);
        let (omegas, mode_w) =
            gauss_legendre_panels(0.0, grid.omega_max_multiplier * bath.omega_c, panels);
        let weights: Vec<(Complex64, Complex64)> = exec.map_range(omegas.len(), |k| {
            let w = omegas[k];
            // |g_k|² / (1 − e^{−βω}), finite as ω → 0.
            let g2 = bath.j_over_omega(w) * mode_w[k] * w / (-(-beta * w).exp_m1());
            let mut q1 = Complex64::new(0.0, 0.0);
            let mut q2 = Complex64::new(0.0, 0.0);
            for (i, &lam) in lam_nodes.iter().enumerate() {
                let s = system[i] * lam_weights[i];
                q1 += s * (-lam * w).exp();
                // Q₂ n = ∫ e^{−(β−λ)ω} S dλ / (1 − e^{−βω}).
                q2 += s * (-(beta - lam) * w).exp();
            }
            (q1 * g2, q2 * g2)
        });
        let (w_plus, w_minus) = weights.into_iter().unzip();
        Ok(Self {
            omegas,
            w_plus,
            w_minus,
        })
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..self.omegas.len() {
            let phase = Complex64::from_polar(1.0, self.omegas[k] * t);
            acc += self.w_plus[k] * phase + self.w_minus[k] * phase.conj();
        }
        acc
    }
}

/// One-shot brute-force `f_corr(t)`; see [`FcorrOracle`].
pub fn f_corr_oracle(
    t: f64,
    prep: Preparation,
    sys: &SystemParams,
    bath: &BathSpec,
    n_modes: usize,
    lambda_steps: usize,
) -> Result<Complex64> {
    let grid = OracleGrid {
        n_modes,
        lambda_steps,
        ..Default::default()
    };
    Ok(FcorrOracle::new(prep, sys, bath, grid, Execution::default())?.eval(t))
}
