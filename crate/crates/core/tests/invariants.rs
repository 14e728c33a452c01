//! Property tests for structural invariants.

use hypnet_core::epsnets::{classify_net, make_geometric_grid, ClassKind, NetSample};
use hypnet_core::mollify::{mollify_field, MollifierFamily, PiecewiseCoefficient};
use hypnet_core::problems::{
    weighted_norm, AcousticsProblem, Medium, Profile, SpaceJumpOracle, TimeJumpOracle,
};
use hypnet_core::symbolgrid::{random_field, SpectralField, TorusGrid, C64};
use hypnet_core::symmetriser::{certify, grid_samples, random_hyperbolic_family, CertConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pulse() -> (Profile, Profile) {
    let w0 = Profile::QuadSpline {
        left: -1.5,
        right: -0.8,
        amplitude: 1.0,
    };
    let w1 = Profile::Derivative {
        of: Box::new(w0.clone()),
        scale: -1.0,
    };
    (w0, w1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn geometric_grid_is_strictly_decreasing(eps0 in 0.01f64..1.0, ratio in 0.1f64..0.9, count in 4usize..20) {
        let g = make_geometric_grid(eps0, ratio, count).unwrap();
        let e = g.epsilons();
        prop_assert_eq!(e.len(), count);
        prop_assert!((e[0] - eps0).abs() <= 1e-15);
        prop_assert!(e.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0));
    }

    #[test]
    fn pure_power_growth_is_recognised(p in 1u32..=4, scale in 0.1f64..10.0) {
        let g = make_geometric_grid(0.25, 0.5, 12).unwrap();
        let v = g.epsilons().iter().map(|e| scale * e.powi(-(p as i32))).collect();
        let c = classify_net(&NetSample::new(g, v).unwrap(), 4).unwrap();
        prop_assert_eq!(c.kind, ClassKind::PowerGrowth(p));
    }

    #[test]
    fn l2_norm_bounded_by_sup(seed in any::<u64>(), decay in 0.5f64..3.0) {
        let g = TorusGrid::new(1, 128).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_field(&g, 1, decay, &mut rng);
        prop_assert!(u.norm0() <= u.sup_norm() * std::f64::consts::TAU.sqrt() * (1.0 + 1e-12));
    }

    #[test]
    fn coefficient_roundtrip_is_exact(seed in any::<u64>()) {
        let g = TorusGrid::new(1, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_field(&g, 2, 1.0, &mut rng);
        let v = SpectralField::from_coeffs(&g, u.coeffs().to_vec()).unwrap();
        let d = u.values().iter().zip(v.values()).flat_map(|(a, b)| a.iter().zip(b)).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(d <= 1e-12 * (1.0 + u.sup_norm()));
    }

    #[test]
    fn mollification_preserves_the_mean(seed in any::<u64>(), k in 2i32..7) {
        let g = TorusGrid::new(1, 256).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_field(&g, 1, 1.5, &mut rng);
        let v = mollify_field(&u, &MollifierFamily::log(1), 2f64.powi(-k)).unwrap();
        prop_assert!((u.coeffs()[0][0] - v.coeffs()[0][0]).norm() <= 1e-12 * (1.0 + u.norm0()));
    }

    #[test]
    fn regularized_step_stays_in_its_range(lo in 0.2f64..5.0, hi in 0.2f64..5.0, k in 2i32..7) {
        let g = TorusGrid::new(1, 256).unwrap();
        let pr = AcousticsProblem::new(
            1,
            PiecewiseCoefficient::step_x(lo, hi).unwrap(),
            PiecewiseCoefficient::step_x(1.0, 1.0 + hi).unwrap(),
            1.0,
        )
        .unwrap();
        let co = pr.regularized(&g, &MollifierFamily::log(1), 2f64.powi(-k)).unwrap();
        let (a, b) = (lo.min(hi), lo.max(hi));
        prop_assert!(co.rho.min() >= a - 1e-12 && co.rho.max() <= b + 1e-12);
    }

    #[test]
    fn weighted_norm_between_coefficient_bounds(seed in any::<u64>(), rho_r in 0.3f64..4.0, c_r in 0.3f64..4.0) {
        let g = TorusGrid::new(1, 128).unwrap();
        let pr = AcousticsProblem::new(
            1,
            PiecewiseCoefficient::step_x(1.0, rho_r).unwrap(),
            PiecewiseCoefficient::step_x(1.0, c_r).unwrap(),
            1.0,
        )
        .unwrap();
        let co = pr.sampled(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_field(&g, 2, 1.0, &mut rng);
        let wn = weighted_norm(&u, &co).unwrap();
        let weights: Vec<f64> = co
            .rho
            .values()
            .iter()
            .zip(co.c.values())
            .flat_map(|(r, c)| [1.0 / (c * c * r), *r])
            .collect();
        let (wmin, wmax) = weights.iter().fold((f64::INFINITY, 0.0f64), |(a, b), w| (a.min(*w), b.max(*w)));
        let l2 = u.norm0();
        prop_assert!(wn >= wmin.sqrt() * l2 * (1.0 - 1e-12));
        prop_assert!(wn <= wmax.sqrt() * l2 * (1.0 + 1e-12));
    }

    #[test]
    fn interface_energy_partition(al in 0.2f64..5.0, bl in 0.2f64..5.0, ar in 0.2f64..5.0, br in 0.2f64..5.0) {
        let (w0, w1) = pulse();
        let (left, right) = (Medium::new(al, bl).unwrap(), Medium::new(ar, br).unwrap());
        let o = SpaceJumpOracle::new(left, right, w0, w1).unwrap();
        let (r, t) = (o.reflection(), o.transmission());
        prop_assert!((r - o.reflection_formula()).abs() <= 1e-12);
        // Energy flux: Z₋ = Z₋ r² + Z₊ t².
        let (zl, zr) = (left.impedance(), right.impedance());
        prop_assert!((zl * r * r + zr * t * t - zl).abs() <= 1e-10 * zl);
    }

    #[test]
    fn time_jump_matching_reproduces_the_data(re in -2.0f64..2.0, im in -2.0f64..2.0, wt in -2.0f64..2.0, omega in 0.1f64..20.0) {
        let w = C64::new(re, im);
        let wt = C64::new(wt, -0.5 * wt);
        let (ap, am) = TimeJumpOracle::mode_amplitudes(w, wt, omega).unwrap();
        prop_assert!((ap + am - w).norm() <= 1e-12 * (1.0 + w.norm()));
        let i = C64::new(0.0, 1.0);
        prop_assert!((i * omega * (ap - am) - wt).norm() <= 1e-10 * (1.0 + wt.norm()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_family_symmetriser_is_positive(seed in any::<u64>(), m in 2usize..=3) {
        let k = random_hyperbolic_family(m, seed);
        let g = TorusGrid::new(1, 64).unwrap();
        let rep = certify(&k, &grid_samples(&g, 0.0, 8, 8), &CertConfig::default()).unwrap();
        prop_assert!(rep.min_r0_eig >= 1.0 / (m * m) as f64 - 1e-9);
        prop_assert!(rep.max_cancellation <= 1e-8);
    }
}
