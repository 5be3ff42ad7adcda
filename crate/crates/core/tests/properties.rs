use num_complex::Complex64;
use proptest::prelude::*;
use spinbath::bath::{correlation, BathSpec};
use spinbath::cli::scenario::Scenario;
use spinbath::cli::table::Table;
use spinbath::corr_kernel::{f_corr, Preparation};
use spinbath::exact_dephasing::ThermalWeights;
use spinbath::quadrature::QuadraturePolicy;
use spinbath::spin_algebra::{build_spin_operators, commutator, diagonalize_hs, heisenberg_f, CMatrix, SystemParams};

fn max_norm(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc: f64, z| acc.max(z.norm()))
}

fn sorted_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut e: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

fn prep_strategy() -> impl Strategy<Value = Preparation> {
    prop_oneof![Just(Preparation::DownZ), Just(Preparation::UpZ), Just(Preparation::PlusX)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn angular_momentum_algebra(n in 1usize..=50) {
        let ops = build_spin_operators(n).unwrap();
        let j = n as f64 / 2.0;
        let i = Complex64::i();
        let casimir = &ops.jx * &ops.jx + &ops.jy * &ops.jy + &ops.jz * &ops.jz
            - ops.identity().scale(j * (j + 1.0));
        prop_assert!(max_norm(&casimir) < 1e-10 * (1.0 + j * j));
        prop_assert!(max_norm(&(commutator(&ops.jx, &ops.jy) - &ops.jz * i)) < 1e-10 * (1.0 + j));
        prop_assert!(max_norm(&(commutator(&ops.jy, &ops.jz) - &ops.jx * i)) < 1e-10 * (1.0 + j));
        prop_assert!(max_norm(&(&ops.jplus - ops.jminus.adjoint())) == 0.0);
    }

    #[test]
    fn spectrum_is_a_ladder(eps in -3.0f64..3.0, delta in 0.1f64..4.0, n in 1usize..=12) {
        let sys = SystemParams::new(eps, delta, n).unwrap();
        let ops = build_spin_operators(n).unwrap();
        let eig = diagonalize_hs(&sys, &ops).unwrap();
        for (k, e) in eig.energies.iter().enumerate() {
            prop_assert!((e - sys.delta_tilde() * ops.m_of(k)).abs() < 1e-10);
        }
    }

    #[test]
    fn heisenberg_coupling_is_a_unitary_conjugation(
        eps in -2.0f64..2.0, delta in 0.1f64..4.0, n in 1usize..=8, tau in -3.0f64..3.0,
    ) {
        let sys = SystemParams::new(eps, delta, n).unwrap();
        let ops = build_spin_operators(n).unwrap();
        let eig = diagonalize_hs(&sys, &ops).unwrap();
        let fbar = heisenberg_f(tau, &eig, &ops.jx);
        prop_assert!(max_norm(&(&fbar - fbar.adjoint())) < 1e-12);
        let a = sorted_eigenvalues(&fbar);
        let b = sorted_eigenvalues(&ops.jx);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn correlation_is_conjugate_symmetric(
        tau in 0.0f64..5.0, g in 0.0f64..0.2, omega_c in 1.0f64..10.0, beta in 0.2f64..5.0,
    ) {
        let bath = BathSpec::new(g, omega_c, beta).unwrap();
        let p = QuadraturePolicy::default();
        let plus = correlation(tau, &bath, &p).unwrap();
        let minus = correlation(-tau, &bath, &p).unwrap();
        prop_assert!((plus - minus.conj()).norm() <= 1e-12 * (1.0 + plus.norm()));
    }

    #[test]
    fn drive_is_linear_in_atom_number(
        prep in prep_strategy(), eps in 0.0f64..2.0, delta in 0.2f64..4.0, n in 2usize..=40, t in 0.0f64..2.0,
    ) {
        let bath = BathSpec::new(0.05, 5.0, 1.0).unwrap();
        let p = QuadraturePolicy::default();
        let one = f_corr(t, prep, &SystemParams::new(eps, delta, 1).unwrap(), &bath, &p).unwrap();
        let many = f_corr(t, prep, &SystemParams::new(eps, delta, n).unwrap(), &bath, &p).unwrap();
        prop_assert!(one.is_finite());
        prop_assert!((many - n as f64 * one).abs() <= 1e-12 * many.abs().max(1e-300));
    }

    #[test]
    fn correlation_factor_is_bounded(
        weights in prop::collection::vec(0.0f64..1.0, 2..40),
        eps0 in 0.0f64..5.0, beta in 0.1f64..3.0, c_const in 0.0f64..0.5,
        d in -3i32..=3, phi in -10.0f64..10.0,
    ) {
        prop_assume!(weights.iter().any(|&w| w > 0.0));
        let w = ThermalWeights::new(&weights, eps0, beta, c_const).unwrap();
        prop_assert!(w.factor(d as f64, phi).norm() <= 1.0 + 1e-12);
        prop_assert_eq!(w.factor(d as f64, 0.0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn scenario_text_round_trips(
        eps in 0.0f64..3.0, delta in 0.1f64..5.0, n in 1usize..=20,
        g in 0.0f64..0.2, omega_c in 0.5f64..10.0, beta in 0.1f64..5.0,
        t_max in 0.1f64..4.0, steps in 10usize..2000, record_every in 1usize..5,
        prep in prep_strategy(), corr in 0usize..3, obs_mask in 1u8..16,
    ) {
        let corr = ["both", "with", "without"][corr];
        let obs: Vec<&str> = ["jz", "jz2", "jy", "jx"]
            .iter()
            .enumerate()
            .filter(|(k, _)| obs_mask & (1 << k) != 0)
            .map(|(_, o)| *o)
            .collect();
        let text = format!(
            "name = prop\n[system]\nepsilon = {eps}\ndelta = {delta}\nn_atoms = {n}\n\
             [bath]\ng = {g}\nomega_c = {omega_c}\nbeta = {beta}\n[preparation]\nstate = {prep}\n\
             [simulation]\nt_max = {t_max}\ndt = {}\nrecord_every = {record_every}\ncorrelations = {corr}\n\
             [engines]\nmaster_equation = true\n[output]\nobservables = {}\n",
            t_max / steps as f64,
            obs.join(", ")
        );
        let first = Scenario::parse(&text).unwrap();
        let second = Scenario::parse(&first.to_text()).unwrap();
        prop_assert_eq!(&first, &second);
        prop_assert_eq!(first.to_text(), second.to_text());
    }

    #[test]
    fn csv_values_round_trip_bit_exactly(values in prop::collection::vec(any::<f64>(), 1..50)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.csv");
        let mut t = Table::new();
        t.push_column("t", (0..values.len()).map(|k| k as f64).collect());
        t.push_column("jz", values.clone());
        t.write(&path).unwrap();
        let back = Table::read(&path).unwrap();
        for (a, b) in values.iter().zip(back.column("jz").unwrap()) {
            prop_assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
        }
    }
}

#[test]
fn drive_weakens_monotonically_with_temperature() {
    let sys = SystemParams::new(0.0, 4.0, 1).unwrap();
    let p = QuadraturePolicy::default();
    let values: Vec<f64> = [1.0, 0.1, 0.01]
        .iter()
        .map(|&beta| {
            let bath = BathSpec::new(0.05, 5.0, beta).unwrap();
            f_corr(0.0, Preparation::DownZ, &sys, &bath, &p).unwrap().abs()
        })
        .collect();
    assert!(values[0] > values[1] && values[1] > values[2], "{values:?}");
}
