//! Ohmic bosonic bath: spectral density, correlation function and the
//! continuum frequency integrals every other module is built on.
//!
//! Mode sums `Σ_k |g_k|² h(ω_k)` are replaced once, here, by
//! `∫₀^∞ J(ω) h(ω) dω`. The semi-infinite range is cut at
//! `Λ = tail_cutoff_multiplier · ω_c`; for an integrand `J(ω)·h(ω)` with
//! `|h| ≤ H` the discarded tail obeys
//! `|∫_Λ^∞ J h| ≤ G (Λ + ω_c) ω_c e^{−Λ/ω_c} H`, which at the default
//! multiplier of 40 is below `1e-15·G·ω_c·H`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_vec, Integral, QuadraturePolicy};

/// Ohmic spectral density `J(ω) = G ω e^{−ω/ω_c}` at inverse temperature `β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    pub g: f64,
    pub omega_c: f64,
    pub beta: f64,
}

impl BathSpec {
    pub fn new(g: f64, omega_c: f64, beta: f64) -> Result<Self> {
        let bath = Self { g, omega_c, beta };
        bath.validate()?;
        Ok(bath)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(Error::Domain(format!("coupling G = {} must be >= 0", self.g)));
        }
        if !(self.omega_c.is_finite() && self.omega_c > 0.0) {
            return Err(Error::Domain(format!("cutoff omega_c = {} must be > 0", self.omega_c)));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::Domain(format!("inverse temperature beta = {} must be > 0", self.beta)));
        }
        Ok(())
    }

    /// `J(ω)` without the domain check.
    #[inline]
    pub fn j(&self, omega: f64) -> f64 {
        self.g * omega * (-omega / self.omega_c).exp()
    }

    /// `J(ω)/ω = G e^{−ω/ω_c}`, finite at the origin.
    #[inline]
    pub fn j_over_omega(&self, omega: f64) -> f64 {
        self.g * (-omega / self.omega_c).exp()
    }

    /// `J(ω) coth(βω/2)`, tending to `2G/β` at the origin.
    #[inline]
    pub fn j_coth(&self, omega: f64) -> f64 {
        self.j_over_omega(omega) * omega_coth(omega, self.beta)
    }

    /// `J(ω) n(ω)` with the Bose occupation `n = 1/(e^{βω} − 1)`.
    #[inline]
    pub fn j_occupation(&self, omega: f64) -> f64 {
        self.j_over_omega(omega) * omega_over_expm1(omega, self.beta)
    }

    /// Upper limit of every truncated frequency integral.
    pub fn cutoff(&self, policy: &QuadraturePolicy) -> f64 {
        policy.tail_cutoff_multiplier * self.omega_c
    }

    /// Bound on `|∫_Λ^∞ J(ω) h(ω) dω|` for `|h| ≤ sup_h`.
    pub fn tail_bound(&self, policy: &QuadraturePolicy, sup_h: f64) -> f64 {
        let lam = self.cutoff(policy);
        self.g * (lam + self.omega_c) * self.omega_c * (-lam / self.omega_c).exp() * sup_h
    }
}

/// `ω coth(βω/2)`, equal to `2/β` at `ω = 0`.
#[inline]
pub fn omega_coth(omega: f64, beta: f64) -> f64 {
    let x = 0.5 * beta * omega;
    if x.abs() < 1e-6 {
        (2.0 / beta) * (1.0 + x * x / 3.0)
    } else {
        omega / x.tanh()
    }
}

/// `ω / (e^{βω} − 1)`, equal to `1/β` at `ω = 0`.
#[inline]
pub fn omega_over_expm1(omega: f64, beta: f64) -> f64 {
    if omega == 0.0 {
        1.0 / beta
    } else {
        omega / (beta * omega).exp_m1()
    }
}

pub fn spectral_density(omega: f64, bath: &BathSpec) -> Result<f64> {
    if !(omega >= 0.0) {
        return Err(Error::Domain(format!("frequency {omega} must be >= 0")));
    }
    Ok(bath.j(omega))
}

/// Integrates a `dim`-component integrand (which must already include the
/// spectral density) over `ω ∈ [0, Λ]`.
pub fn integrate_spectral<F>(
    bath: &BathSpec,
    policy: &QuadraturePolicy,
    dim: usize,
    f: F,
    breakpoints: &[f64],
) -> Result<Integral<Vec<f64>>>
where
    F: FnMut(f64, &mut [f64]),
{
    integrate_vec(f, dim, 0.0, bath.cutoff(policy), breakpoints, policy)
}

/// Bath correlation function
/// `C(τ) = ∫₀^∞ J(ω)[coth(βω/2) cos ωτ − i sin ωτ] dω`, with its error estimate.
pub fn correlation_with_error(
    tau: f64,
    bath: &BathSpec,
    policy: &QuadraturePolicy,
) -> Result<Integral<Complex64>> {
    if !tau.is_finite() {
        return Err(Error::Domain(format!("time {tau} must be finite")));
    }
    let r = integrate_spectral(
        bath,
        policy,
        2,
        |w, out| {
            let (s, c) = (w * tau).sin_cos();
            out[0] = bath.j_coth(w) * c;
            out[1] = -bath.j(w) * s;
        },
        &[],
    )?;
    let sup = omega_coth(bath.cutoff(policy), bath.beta) / bath.cutoff(policy);
    Ok(Integral {
        value: Complex64::new(r.value[0], r.value[1]),
        error: r.error + bath.tail_bound(policy, sup.max(1.0)),
        evaluations: r.evaluations,
    })
}

pub fn correlation(tau: f64, bath: &BathSpec, policy: &QuadraturePolicy) -> Result<Complex64> {
    Ok(correlation_with_error(tau, bath, policy)?.value)
}
