//! Collective spin operators, the system Hamiltonian and its eigensystem.
//!
//! Every operator lives in the symmetric `j = N/2` sector (dimension
//! `N + 1`). Both the system Hamiltonian `εJ_z + ΔJ_x` and the coupling
//! `J_x` are functions of the collective operators, and all supported
//! preparations are symmetric states, so the dynamics never leaves this
//! sector. Basis index `k` corresponds to the Dicke state `|m⟩` with
//! `m = k − N/2`, ordered from `m = −N/2` to `m = +N/2`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Hermitian unit-trace state of the collective spin.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    /// Wraps a matrix without checking the invariants; intermediate
    /// integrator states and truncated expansions use this.
    pub fn from_matrix_unchecked(m: CMatrix) -> Self {
        Self(m)
    }

    /// Pure state `|ψ⟩⟨ψ|` from a normalized amplitude vector.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if amplitudes.is_empty() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("state vector has norm² {norm}, expected 1")));
        }
        let d = amplitudes.len();
        Ok(Self(CMatrix::from_fn(d, d, |r, c| {
            amplitudes[r] * amplitudes[c].conj()
        })))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim).scale(1.0 / dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    /// `|Tr ρ − 1|`.
    pub fn trace_error(&self) -> f64 {
        (self.0.trace() - Complex64::new(1.0, 0.0)).norm()
    }

    /// `max |ρ − ρ†|` elementwise.
    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.0)
    }

    /// Smallest eigenvalue of the Hermitian part. Second-order master
    /// equations may drive this slightly negative; it is reported, not
    /// enforced.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.0 + self.0.adjoint()).scale(0.5);
        SymmetricEigen::new(h)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

/// `A B − B A`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Collective angular-momentum matrices for `N` spin-1/2 atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinOperators {
    pub n_atoms: usize,
    pub dim: usize,
    pub jx: CMatrix,
    pub jy: CMatrix,
    pub jz: CMatrix,
    pub jplus: CMatrix,
    pub jminus: CMatrix,
}

impl SpinOperators {
    /// Total spin quantum number `j = N/2`.
    pub fn j(&self) -> f64 {
        self.n_atoms as f64 / 2.0
    }

    /// Magnetic quantum number of basis index `k`.
    pub fn m_of(&self, k: usize) -> f64 {
        k as f64 - self.j()
    }

    pub fn identity(&self) -> CMatrix {
        CMatrix::identity(self.dim, self.dim)
    }

    /// Dicke basis vector `|m⟩` as amplitudes.
    pub fn basis_state(&self, k: usize) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); self.dim];
        v[k] = Complex64::new(1.0, 0.0);
        v
    }
}

/// Matrix element `⟨m+1|J₊|m⟩ = sqrt(j(j+1) − m(m+1))`.
pub fn ladder_element(j: f64, m: f64) -> f64 {
    (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

pub fn build_spin_operators(n_atoms: usize) -> Result<SpinOperators> {
    if n_atoms == 0 {
        return Err(Error::Domain("n_atoms must be at least 1".into()));
    }
    let dim = n_atoms + 1;
    let j = n_atoms as f64 / 2.0;
    let mut jplus = CMatrix::zeros(dim, dim);
    for k in 0..dim - 1 {
        let m = k as f64 - j;
        jplus[(k + 1, k)] = Complex64::new(ladder_element(j, m), 0.0);
    }
    let jminus = jplus.adjoint();
    let jx = (&jplus + &jminus).scale(0.5);
    let jy = (&jplus - &jminus).map(|z| z / (2.0 * I));
    let jz = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |k, _| {
        Complex64::new(k as f64 - j, 0.0)
    }));
    Ok(SpinOperators {
        n_atoms,
        dim,
        jx,
        jy,
        jz,
        jplus,
        jminus,
    })
}

/// Parameters of `H_S = εJ_z + ΔJ_x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub epsilon: f64,
    pub delta: f64,
    pub n_atoms: usize,
}

impl SystemParams {
    pub fn new(epsilon: f64, delta: f64, n_atoms: usize) -> Result<Self> {
        let sys = Self {
            epsilon,
            delta,
            n_atoms,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.delta.is_finite()) {
            return Err(Error::Domain("epsilon and delta must be finite".into()));
        }
        if self.n_atoms == 0 {
            return Err(Error::Domain("n_atoms must be at least 1".into()));
        }
        if self.delta_tilde() == 0.0 {
            return Err(Error::DegenerateHamiltonian);
        }
        Ok(())
    }

    /// `Δ̃ = sqrt(Δ² + ε²)`.
    pub fn delta_tilde(&self) -> f64 {
        self.delta.hypot(self.epsilon)
    }

    pub fn hamiltonian(&self, ops: &SpinOperators) -> CMatrix {
        ops.jz.scale(self.epsilon) + ops.jx.scale(self.delta)
    }
}

/// Eigen-decomposition of `H_S` with energies ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub energies: Vec<f64>,
    /// Columns are the eigenvectors, in the order of `energies`.
    pub vectors: CMatrix,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `V† M V`.
    pub fn to_eigenbasis(&self, m: &CMatrix) -> CMatrix {
        self.vectors.adjoint() * m * &self.vectors
    }

    /// `V M V†`.
    pub fn from_eigenbasis(&self, m: &CMatrix) -> CMatrix {
        &self.vectors * m * self.vectors.adjoint()
    }

    /// `e^{s H_S}` for real `s`.
    pub fn exp_real(&self, s: f64) -> CMatrix {
        let d = nalgebra::DVector::from_fn(self.dim(), |k, _| {
            Complex64::new((s * self.energies[k]).exp(), 0.0)
        });
        &self.vectors * CMatrix::from_diagonal(&d) * self.vectors.adjoint()
    }
}

/// Diagonalizes `H_S` (a real symmetric matrix in the Dicke basis).
///
/// Eigenvectors are fixed to have their largest-magnitude component real
/// and positive (lowest index wins ties), which makes every downstream
/// quantity reproducible across runs.
pub fn diagonalize_hs(sys: &SystemParams, ops: &SpinOperators) -> Result<EigenSystem> {
    if sys.delta_tilde() == 0.0 {
        return Err(Error::DegenerateHamiltonian);
    }
    if sys.n_atoms != ops.n_atoms {
        return Err(Error::Domain(format!(
            "system has {} atoms but operators were built for {}",
            sys.n_atoms, ops.n_atoms
        )));
    }
    let h = sys.hamiltonian(ops).map(|z| z.re);
    let eig = SymmetricEigen::new(h);
    let dim = ops.dim;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let energies: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(dim, dim);
    for (col, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let mut pivot = 0;
        for r in 1..dim {
            if v[r].abs() > v[pivot].abs() {
                pivot = r;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..dim {
            vectors[(r, col)] = Complex64::new(sign * v[r], 0.0);
        }
    }
    Ok(EigenSystem { energies, vectors })
}

/// `F̄(τ) = e^{−iH_Sτ} F e^{iH_Sτ}`, evaluated through the eigenbasis as an
/// elementwise phase `e^{−i(E_a − E_b)τ}` on `V†FV`.
pub fn heisenberg_f(tau: f64, eig: &EigenSystem, f: &CMatrix) -> CMatrix {
    if tau == 0.0 {
        return f.clone();
    }
    let mut fe = eig.to_eigenbasis(f);
    let n = eig.dim();
    for a in 0..n {
        for b in 0..n {
            let phase = -(eig.energies[a] - eig.energies[b]) * tau;
            fe[(a, b)] *= Complex64::from_polar(1.0, phase);
        }
    }
    eig.from_eigenbasis(&fe)
}

/// `Tr[obs·ρ]`. The imaginary part must vanish to `1e-10` (scaled by the
/// largest entry of `obs` when that exceeds one).
pub fn expect(rho: &DensityMatrix, obs: &CMatrix) -> Result<f64> {
    let m = rho.matrix();
    if m.nrows() != obs.nrows() || obs.nrows() != obs.ncols() {
        return Err(Error::Domain("dimension mismatch in expectation value".into()));
    }
    let n = m.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut scale: f64 = 1.0;
    for r in 0..n {
        for c in 0..n {
            let o = obs[(r, c)];
            if o != Complex64::new(0.0, 0.0) {
                acc += o * m[(c, r)];
                scale = scale.max(o.norm());
            }
        }
    }
    if acc.im.abs() > 1e-10 * scale {
        return Err(Error::NumericalConsistency(format!(
            "expectation value has imaginary part {:e}",
            acc.im
        )));
    }
    Ok(acc.re)
}

/// Normalized collective observables `j_z = 2⟨J_z⟩/N`,
/// `j_z^(2) = 4⟨J_z²⟩/N²`, `j_y = 2⟨J_y⟩/N`, `j_x = 2⟨J_x⟩/N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    pub jz: f64,
    pub jz2: f64,
    pub jy: f64,
    pub jx: f64,
}

impl Observables {
    pub fn measure(rho: &DensityMatrix, ops: &SpinOperators) -> Result<Self> {
        let n = ops.n_atoms as f64;
        let jz2_op = &ops.jz * &ops.jz;
        Ok(Self {
            jz: 2.0 * expect(rho, &ops.jz)? / n,
            jz2: 4.0 * expect(rho, &jz2_op)? / (n * n),
            jy: 2.0 * expect(rho, &ops.jy)? / n,
            jx: 2.0 * expect(rho, &ops.jx)? / n,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    #[test]
    fn single_atom_is_pauli_over_two() {
        let ops = build_spin_operators(1).unwrap();
        assert_eq!(ops.jz[(0, 0)].re, -0.5);
        assert_eq!(ops.jz[(1, 1)].re, 0.5);
        assert_eq!(ops.jx[(0, 1)].re, 0.5);
        assert_eq!(ops.jx[(1, 0)].re, 0.5);
        assert_eq!(ops.jx[(0, 0)].re, 0.0);
    }

    #[test]
    fn spin_one_ladder() {
        let ops = build_spin_operators(2).unwrap();
        // ⟨0|J₊|−1⟩ with the m = −1 state at index 0.
        assert!((ops.jplus[(1, 0)].re - 2.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_atoms_rejected() {
        assert!(matches!(build_spin_operators(0), Err(Error::Domain(_))));
    }

    #[test]
    fn degenerate_hamiltonian_rejected() {
        assert!(matches!(
            SystemParams::new(0.0, 0.0, 3),
            Err(Error::DegenerateHamiltonian)
        ));
    }

    #[test]
    fn small_eigenvalue_ladders() {
        let ops = build_spin_operators(1).unwrap();
        let eig = diagonalize_hs(&SystemParams::new(0.0, 4.0, 1).unwrap(), &ops).unwrap();
        assert!((eig.energies[0] + 2.0).abs() < 1e-12);
        assert!((eig.energies[1] - 2.0).abs() < 1e-12);

        let ops = build_spin_operators(2).unwrap();
        let eig = diagonalize_hs(&SystemParams::new(3.0, 4.0, 2).unwrap(), &ops).unwrap();
        for (e, want) in eig.energies.iter().zip([-5.0, 0.0, 5.0]) {
            assert!((e - want).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenvector_phase_convention() {
        let ops = build_spin_operators(4).unwrap();
        let eig = diagonalize_hs(&SystemParams::new(0.5, 3.5, 4).unwrap(), &ops).unwrap();
        for col in 0..ops.dim {
            let v = eig.vectors.column(col);
            let mut pivot = 0;
            for r in 0..ops.dim {
                if v[r].norm() > v[pivot].norm() {
                    pivot = r;
                }
            }
            assert!(v[pivot].re > 0.0 && v[pivot].im == 0.0);
        }
    }

    #[test]
    fn heisenberg_identity_and_commuting_cases() {
        let ops = build_spin_operators(3).unwrap();
        let eig = diagonalize_hs(&SystemParams::new(0.5, 3.5, 3).unwrap(), &ops).unwrap();
        assert_eq!(heisenberg_f(0.0, &eig, &ops.jx), ops.jx);

        let eig = diagonalize_hs(&SystemParams::new(0.0, 2.0, 3).unwrap(), &ops).unwrap();
        let fb = heisenberg_f(0.77, &eig, &ops.jx);
        assert!(max_abs(&(fb - &ops.jx)) < 1e-12);
    }

    #[test]
    fn expectation_values_of_simple_states() {
        let n = 6;
        let ops = build_spin_operators(n).unwrap();
        let down = DensityMatrix::pure(&ops.basis_state(0)).unwrap();
        assert_eq!(expect(&down, &ops.jz).unwrap(), -3.0);
        let obs = Observables::measure(&down, &ops).unwrap();
        assert_eq!(-obs.jz, 1.0);
        assert_eq!(obs.jz2, 1.0);
        let mixed = DensityMatrix::maximally_mixed(ops.dim);
        assert!(expect(&mixed, &ops.jz).unwrap().abs() < 1e-15);
    }

    #[test]
    fn complex_expectation_is_rejected() {
        let ops = build_spin_operators(1).unwrap();
        let rho = DensityMatrix::pure(&ops.basis_state(0)).unwrap();
        let mut m = rho.into_matrix();
        m[(0, 1)] = Complex64::new(0.0, 0.5);
        m[(1, 0)] = Complex64::new(0.0, -0.5);
        let rho = DensityMatrix::from_matrix_unchecked(m);
        assert!(matches!(
            expect(&rho, &ops.jplus),
            Err(Error::NumericalConsistency(_))
        ));
    }
}
