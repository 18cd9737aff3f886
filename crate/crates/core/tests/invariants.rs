use kjlab_core::field::integrate;
use kjlab_core::functionals::{aubin_i, aubin_i_pairing, aubin_j, e_beta, frak_j_beta};
use kjlab_core::geometry::{h_tilde, make_state};
use kjlab_core::random::PotentialSampler;
use kjlab_core::snapshot::{decode, encode_hermitian, encode_scalar, Snapshot};
use kjlab_core::{GridSpec, Herm, TwistData};
use num_complex::Complex64;
use proptest::prelude::*;

fn grid(n: usize) -> GridSpec {
    GridSpec::new(n, if n == 1 { 16 } else { 8 }).unwrap()
}

fn twist(n: usize, seed: u64) -> TwistData {
    let g = grid(n);
    let psi = PotentialSampler::new(g, seed ^ 0x5151).potential(0.2);
    let chi0 = if n == 1 {
        Herm::diag(&[-1.0])
    } else {
        Herm::diag(&[-1.0, -0.7])
    };
    TwistData::new(chi0, psi, 0.4, 1.0).unwrap()
}

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn refine_then_truncate_is_identity(n in 1usize..=2, seed in any::<u64>(), k in 1u32..=2) {
        let factor = 1usize << k;
        let f = PotentialSampler::new(grid(n), seed).raw();
        let back = f.refine(factor).unwrap().truncate(f.grid()).unwrap();
        let err = back.sub(&f).sup_norm();
        prop_assert!(err <= 1e-12 * (1.0 + f.sup_norm()), "err {err}");
    }

    #[test]
    fn truncate_is_adjoint_of_refine(n in 1usize..=2, seed in any::<u64>()) {
        let coarse = grid(n);
        let f = PotentialSampler::new(coarse, seed).raw();
        let fine = GridSpec::new(n, coarse.size() * 2).unwrap();
        let g = PotentialSampler::new(fine, seed.wrapping_add(1)).with_cutoff(fine.size() / 2).raw();
        let lhs = f.refine(2).unwrap().mul(&g).mean();
        let rhs = f.mul(&g.truncate(coarse).unwrap()).mean();
        prop_assert!((lhs - rhs).abs() <= 1e-13 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn herm_two_by_two_identities(
        a in -3.0f64..3.0, d in -3.0f64..3.0, re in -2.0f64..2.0, im in -2.0f64..2.0,
    ) {
        let m = Herm::from_row_major(2, &[
            Complex64::new(a, 0.0), Complex64::new(re, im),
            Complex64::new(re, -im), Complex64::new(d, 0.0),
        ]);
        let [l0, l1] = m.eigenvalues();
        prop_assert!(l0 <= l1);
        prop_assert!((l0 + l1 - m.trace()).abs() < 1e-12);
        prop_assert!((l0 * l1 - m.det()).abs() < 1e-10 * (1.0 + m.max_abs().powi(2)));
        prop_assert!((m.mixed_discriminant(&Herm::identity(2)) - m.trace()).abs() < 1e-12);
        if m.det().abs() > 1e-3 {
            let prod = m.matmul(&m.inverse().unwrap());
            prop_assert!(prod.sub(&Herm::identity(2)).max_abs() < 1e-9 / m.det().abs());
        }
    }

    #[test]
    fn functionals_ignore_constant_shifts(n in 1usize..=2, seed in any::<u64>(), c in -5.0f64..5.0) {
        let tw = twist(n, seed);
        let phi = PotentialSampler::new(tw.grid(), seed).potential(0.5);
        let s0 = make_state(phi.clone(), &tw).unwrap();
        let s1 = make_state(phi.shift(c), &tw).unwrap();
        let dj = frak_j_beta(&s1, &tw) - frak_j_beta(&s0, &tw);
        let de = e_beta(&s1, &tw) - e_beta(&s0, &tw);
        prop_assert!(dj.abs() < 1e-11 * (1.0 + c.abs()), "frakJ_beta moved by {dj}");
        prop_assert!(de.abs() < 1e-12, "E_beta moved by {de}");
    }

    #[test]
    fn aubin_functionals_are_ordered(n in 1usize..=2, seed in any::<u64>(), amp in 0.05f64..0.9) {
        let phi = PotentialSampler::new(grid(n), seed).potential(amp);
        let state = kjlab_core::KahlerState::new(phi).unwrap();
        let i = aubin_i(&state);
        let j = aubin_j(&state);
        let nf = n as f64;
        let tol = 1e-12 * (1.0 + i.abs());
        prop_assert!(i >= -tol);
        prop_assert!(i / (nf + 1.0) <= j + tol, "I {i} J {j}");
        prop_assert!(j <= nf * i / (nf + 1.0) + tol, "I {i} J {j}");
        let dual = aubin_i_pairing(&state);
        prop_assert!((dual - i).abs() < 1e-10 * (1.0 + i.abs()), "{dual} vs {i}");
    }

    #[test]
    fn weighted_critical_operator_has_zero_mean(n in 1usize..=2, seed in any::<u64>()) {
        let tw = twist(n, seed);
        let phi = PotentialSampler::new(tw.grid(), seed).potential(0.4);
        let state = make_state(phi, &tw).unwrap();
        let m = integrate(&h_tilde(&state, &tw).mul(state.det()));
        prop_assert!(m.abs() < 1e-12, "mean H D = {m}");
    }

    #[test]
    fn snapshots_roundtrip(n in 1usize..=2, seed in any::<u64>()) {
        let phi = PotentialSampler::new(grid(n), seed).potential(0.3);
        match decode(&encode_scalar(&phi)).unwrap() {
            Snapshot::Scalar(back) => prop_assert_eq!(back, phi.clone()),
            other => prop_assert!(false, "wrong kind {:?}", other.grid()),
        }
        let hess = kjlab_core::KahlerState::new(phi).unwrap().metric().clone();
        match decode(&encode_hermitian(&hess)).unwrap() {
            Snapshot::Hermitian(back) => prop_assert_eq!(back, hess),
            other => prop_assert!(false, "wrong kind {:?}", other.grid()),
        }
    }
}

#[test]
fn truncated_snapshot_is_rejected() {
    let phi = PotentialSampler::new(grid(2), 3).potential(0.3);
    let bytes = encode_scalar(&phi);
    assert!(decode(&bytes[..bytes.len() - 1]).is_err());
    assert!(decode(b"not a field").is_err());
}
