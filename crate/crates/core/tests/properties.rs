use nalgebra::{Matrix2, Vector2};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use oscbath::langevin::lyapunov_2x2;
use oscbath::perturb::{min_noise_set, mu_elements, mu_single_factor};
use oscbath::profiles::{PulseShape, TimeProfile};
use oscbath::propagate::expm_bath;
use oscbath::reduce::{noise_matrix, CentralGaussian};
use oscbath::system::{random_rho, rwa_couplings, symplectic_unit, BathSpec, Couplings};

fn profile() -> impl Strategy<Value = TimeProfile> {
    prop_oneof![
        (-2.0..2.0f64).prop_map(TimeProfile::constant),
        (0.1..2.0f64, -1.0..4.0f64, 0.1..1.5f64).prop_map(|(a, c, w)| TimeProfile::gaussian(a, c, w)),
        (0.1..2.0f64, 0.0..2.0f64, 0.0..0.5f64, 0.1..2.0f64).prop_map(|(amplitude, center, rise, decay)| {
            TimeProfile::ExpRiseDecayPulse {
                amplitude,
                center,
                rise,
                decay,
                baseline: 0.0,
            }
        }),
        (0.1..2.0f64, 0.05..0.3f64, 0.3..1.5f64, 1u32..6, 0.0..1.0f64).prop_map(
            |(amplitude, width, period, count, frac)| TimeProfile::PulseTrain {
                shape: PulseShape::Gaussian { amplitude, width },
                start: 0.0,
                period,
                count,
                offset: frac * period,
                baseline: 0.0,
            }
        ),
    ]
}

fn nonnegative(p: &TimeProfile) -> bool {
    p.bounds().0 >= 0.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integral_is_additive(p in profile(), a in -1.0..2.0f64, b in -1.0..2.0f64, c in -1.0..4.0f64) {
        let ab = p.integral(a, b).unwrap();
        let bc = p.integral(b, c).unwrap();
        let ac = p.integral(a, c).unwrap();
        prop_assert!((ab + bc - ac).abs() <= 1e-12 * (1.0 + ac.abs()));
    }

    #[test]
    fn lambda_is_nonnegative_for_nonnegative_envelopes(p in profile(), t in 0.0..5.0f64) {
        prop_assume!(nonnegative(&p));
        prop_assert!(p.lambda_factor(t).unwrap() >= 0.0);
    }

    #[test]
    fn train_repeats_inside_window(
        amplitude in 0.1..2.0f64, width in 0.05..0.3f64, period in 0.5..1.5f64,
        frac in 0.0..1.0f64, s in 0.0..1.0f64, n in 0u32..4,
    ) {
        let p = TimeProfile::PulseTrain {
            shape: PulseShape::Gaussian { amplitude, width },
            start: 0.0,
            period,
            count: 5,
            offset: frac * period,
            baseline: 0.0,
        };
        let t = s * period * 0.999;
        let shifted = t + f64::from(n) * period;
        prop_assert!((p.value(t) - p.value(shifted)).abs() <= 1e-12);
        let cell = p.integral(0.0, period).unwrap();
        let later = p.integral(f64::from(n) * period, f64::from(n + 1) * period).unwrap();
        prop_assert!((cell - later).abs() <= 1e-12 * (1.0 + cell.abs()));
    }

    #[test]
    fn rwa_mapping_gives_minus_rho_squared(seed in any::<u64>(), omega0 in 0.2..3.0f64, n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_rho(n, 0.5, &mut rng);
        let omegas: Vec<f64> = (0..n).map(|k| 0.3 + 0.4 * k as f64).collect();
        let c = rwa_couplings(&rho, omega0, &omegas).unwrap();
        for (k, r) in rho.iter().enumerate() {
            let lhs = c.u[k] * c.v[k] - c.g[k] * c.z[k];
            prop_assert!((lhs + r.norm_sqr()).abs() <= 1e-12 * (1.0 + r.norm_sqr()));
        }
    }

    #[test]
    fn factorized_coupling_gives_symmetric_mu(p in profile(), seed in any::<u64>(), n in 1usize..8, t in 0.0..4.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bath = BathSpec {
            omegas: (0..n).map(|k| 0.5 + 0.3 * k as f64).collect(),
            couplings: Couplings::random(n, 0.5, &mut rng),
            nu: p,
            temperature: 0.0,
            f_override: None,
        };
        let mu = mu_elements(&bath, t);
        let scale = 1.0 + mu.mu11.abs();
        prop_assert!(mu.asymmetry() <= 1e-12 * scale);
        let single = mu_single_factor(&bath, t).unwrap();
        prop_assert!((mu.mu11 - single.mu11).abs() <= 1e-12 * scale);
    }

    #[test]
    fn noise_matrix_is_hermitian(d11 in 0.0..2.0f64, d22 in 0.0..2.0f64, d12 in -1.0..1.0f64, gamma in -1.0..1.0f64) {
        let d = Matrix2::new(d11, d12, d12, d22);
        let x = noise_matrix(&d, gamma);
        prop_assert!(x.is_hermitian(0.0));
        prop_assert!((x.diffusion() - d).amax() <= 1e-15);
    }

    #[test]
    fn min_noise_set_is_psd_above_threshold(gamma in 0.01..1.0f64, omega0 in 0.2..3.0f64, g in 1.0..5.0f64, t in 0.0..3.0f64) {
        let set = min_noise_set(TimeProfile::constant(gamma), omega0, g).unwrap();
        prop_assert!(set.preserves_commutator());
        prop_assert!(set.noise_matrix(t).is_psd(1e-12));
    }

    #[test]
    fn bath_exponential_is_symplectic_group(
        omegas in prop::collection::vec(0.1..3.0f64, 1..6), t1 in -4.0..4.0f64, t2 in -4.0..4.0f64,
    ) {
        let n = omegas.len();
        let j = symplectic_unit(n).view((2, 2), (2 * n, 2 * n)).into_owned();
        let e = expm_bath(&omegas, t1);
        prop_assert!((e.transpose() * &j * &e - &j).amax() <= 1e-12);
        let composed = &e * expm_bath(&omegas, t2);
        prop_assert!((composed - expm_bath(&omegas, t1 + t2)).amax() <= 1e-12);
    }

    #[test]
    fn lyapunov_solution_satisfies_equation(w in 0.2..3.0f64, gp in 0.01..1.0f64, gx in 0.01..1.0f64, d11 in 0.0..2.0f64, d22 in 0.0..2.0f64) {
        let a = Matrix2::new(-gp, -w * w, 1.0, -gx);
        let d = Matrix2::new(d11, 0.0, 0.0, d22);
        let c = lyapunov_2x2(&a, &d).unwrap();
        prop_assert!((a * c + c * a.transpose() + d * 2.0).amax() <= 1e-10 * (1.0 + c.amax()));
    }

    #[test]
    fn coherent_states_saturate_uncertainty(p in -3.0..3.0f64, x in -3.0..3.0f64) {
        let s = CentralGaussian::coherent(p, x);
        prop_assert_eq!(s.mean, Vector2::new(p, x));
        prop_assert!((s.uncertainty() - 0.25).abs() <= 1e-15);
    }
}
