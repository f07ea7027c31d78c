mod common;

use gsw_core::conjugate::{biconjugate, conjugate_adaptive, conjugate_grid, GridFunction, ADAPTIVE_TOL};
use gsw_core::fourier::{fourier_numeric, FourierSpec};
use gsw_core::functions::{taylor_extend, HermiteGaussian};
use gsw_core::numeric::{ln_factorial, uniform_grid};
use gsw_core::search::SupSearchConfig;
use gsw_core::seminorms::p_norm;
use gsw_core::weights::{check_condition, make_power_family, ConditionId, ConditionParams};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn grid(n: usize, step: f64) -> Vec<f64> {
    (0..n).map(|i| i as f64 * step).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fast_conjugate_matches_brute_force(seed in any::<u64>(), n in 2usize..300, m in 1usize..300) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (xs, ys) = common::random_grid(&mut rng, n);
        let slopes: Vec<f64> = (0..m).map(|i| -3.0 + 9.0 * ((i * 7919) % m) as f64 / m as f64).collect();
        let fast = conjugate_grid(&GridFunction::new(xs.clone(), ys.clone()).unwrap(), &slopes).unwrap();
        let (bv, bi) = common::brute_conjugate(&xs, &ys, &slopes);
        for k in 0..m {
            prop_assert_eq!(fast.values[k].to_bits(), bv[k].to_bits());
            prop_assert_eq!(fast.argmax_index[k], bi[k]);
        }
    }

    #[test]
    fn fenchel_young(c in 0.1f64..3.0, p in 1.2f64..4.0, x in 0.0f64..20.0, y in 0.0f64..5.0) {
        let g = |t: f64| c * t.powf(p);
        let conj = conjugate_adaptive(&g, true, x, 1.0, ADAPTIVE_TOL).unwrap();
        prop_assert!(x * y <= g(y) + conj + 1e-9 * (1.0 + (x * y).abs()));
    }

    #[test]
    fn conjugation_reverses_order(ys in prop::collection::vec(-5.0f64..5.0, 2..64), bump in prop::collection::vec(0.0f64..2.0, 64), s in -4.0f64..4.0) {
        let xs = grid(ys.len(), 0.25);
        let upper: Vec<f64> = ys.iter().zip(&bump).map(|(a, b)| a + b).collect();
        let lo = conjugate_grid(&GridFunction::new(xs.clone(), ys).unwrap(), &[s]).unwrap();
        let hi = conjugate_grid(&GridFunction::new(xs, upper).unwrap(), &[s]).unwrap();
        prop_assert!(hi.values[0] <= lo.values[0]);
    }

    #[test]
    fn conjugate_is_convex_and_nondecreasing(ys in prop::collection::vec(-5.0f64..5.0, 2..64)) {
        let xs = grid(ys.len(), 0.3);
        let slopes = uniform_grid(-2.0, 6.0, 81);
        let r = conjugate_grid(&GridFunction::new(xs, ys).unwrap(), &slopes).unwrap();
        for w in r.values.windows(3) {
            let scale = 1.0 + w[0].abs().max(w[1].abs()).max(w[2].abs());
            prop_assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-12 * scale);
        }
        // Abscissae are nonnegative, so the conjugate cannot decrease.
        for w in r.values.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn biconjugate_is_a_minorant(ys in prop::collection::vec(-5.0f64..5.0, 2..48)) {
        let xs = grid(ys.len(), 0.5);
        let g = GridFunction::new(xs.clone(), ys.clone()).unwrap();
        let slopes = uniform_grid(-30.0, 30.0, 601);
        let bc = biconjugate(&g, &slopes, &xs).unwrap();
        for (b, y) in bc.ys().iter().zip(&ys) {
            prop_assert!(*b <= y + 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn biconjugate_reproduces_convex_samples(c in 0.2f64..3.0, n in 3usize..60) {
        let xs = grid(n, 0.1);
        let ys: Vec<f64> = xs.iter().map(|x| c * x * x).collect();
        let g = GridFunction::new(xs.clone(), ys.clone()).unwrap();
        let mut slopes = vec![-1.0];
        slopes.extend(ys.windows(2).map(|w| (w[1] - w[0]) / 0.1));
        slopes.push(slopes[slopes.len() - 1] + 1.0);
        let bc = biconjugate(&g, &slopes, &xs).unwrap();
        for (b, y) in bc.ys().iter().zip(&ys) {
            prop_assert!((b - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn conjugate_scaling(ys in prop::collection::vec(-5.0f64..5.0, 2..64), lambda in 0.5f64..4.0, s in -3.0f64..3.0) {
        // (λg)*(λs) = λ g*(s).
        let xs = grid(ys.len(), 0.2);
        let scaled: Vec<f64> = ys.iter().map(|y| lambda * y).collect();
        let a = conjugate_grid(&GridFunction::new(xs.clone(), ys).unwrap(), &[s]).unwrap().values[0];
        let b = conjugate_grid(&GridFunction::new(xs, scaled).unwrap(), &[lambda * s]).unwrap().values[0];
        prop_assert!((b - lambda * a).abs() <= 1e-12 * (1.0 + b.abs()) * 8.0);
    }

    #[test]
    fn stirling_type_bound(j in 1u64..170) {
        let jf = j as f64;
        prop_assert!(ln_factorial(j) < 3f64.ln() + (jf + 1.0) * jf.ln() - jf);
    }

    #[test]
    fn power_family_dilation(m in 1usize..10) {
        let fam = make_power_family(2.0, 2.0, 12).unwrap();
        let grid = uniform_grid(0.0, 100.0, 401);
        let r = check_condition(&fam, ConditionId::I3, m, &grid, &ConditionParams::default()).unwrap();
        prop_assert!(r.pass);
        prop_assert_eq!(r.witnesses[0].value, 0.0);
    }

    #[test]
    fn derivative_table_matches_closed_form(k in 0u32..14, x in -2.5f64..2.5, a in 0.3f64..2.5) {
        let f = HermiteGaussian::new(1, [(vec![0], Complex64::new(1.0, 0.0)), (vec![3], Complex64::new(-0.5, 0.25))], vec![a]).unwrap();
        let table = f.derivative_table(&[x], k).unwrap();
        let exact = f.derivative_closed_form(&[k]).unwrap().eval_real(&[x]).unwrap();
        let got = table.derivative(&[k]);
        let scale = exact.norm().max(1e-10 * f.derivative_closed_form(&[k]).unwrap().coefficient_l1());
        prop_assert!((got - exact).norm() <= 1e-10 * scale, "{} vs {}", got, exact);
    }

    #[test]
    fn taylor_on_the_real_axis_is_evaluation(x in -3.0f64..3.0, a in 0.3f64..2.0) {
        let f = HermiteGaussian::new(1, [(vec![0], Complex64::new(1.0, 0.0)), (vec![2], Complex64::new(0.5, 0.0))], vec![a]).unwrap();
        let t = taylor_extend(&f, &[x], &[0.0], 2).unwrap();
        let e = f.eval_real(&[x]).unwrap();
        prop_assert!((t - e).norm() <= 1e-15 * (1.0 + e.norm()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn seminorm_homogeneity(c in 0.1f64..10.0, a in 0.5f64..2.0) {
        let fam = make_power_family(2.0, 2.0, 4).unwrap();
        let f = HermiteGaussian::gaussian(1, a).unwrap();
        let cfg = SupSearchConfig::default();
        let base = p_norm(&f, &fam, 1, 1, &cfg).unwrap();
        let scaled = p_norm(&f.scale(Complex64::new(c, 0.0)), &fam, 1, 1, &cfg).unwrap();
        prop_assert!((scaled.value - c * base.value).abs() <= 1e-12 * scaled.value);
    }

    #[test]
    fn seminorms_decrease_with_weight_index(nu in 1usize..4, k in 0u32..4) {
        let fam = make_power_family(2.0, 2.0, 6).unwrap();
        let f = HermiteGaussian::monomial(vec![1], 1.0).unwrap();
        let cfg = SupSearchConfig::default();
        let lo = p_norm(&f, &fam, nu + 1, k, &cfg).unwrap();
        let hi = p_norm(&f, &fam, nu, k, &cfg).unwrap();
        prop_assert!(lo.value <= hi.value * (1.0 + 1e-9));
    }

    #[test]
    fn fourier_is_linear(a in 0.5f64..2.0, b in 0.5f64..2.0, c in -2.0f64..2.0) {
        let f = HermiteGaussian::gaussian(1, 1.0).unwrap();
        let g = HermiteGaussian::monomial(vec![2], 1.0).unwrap().scale(Complex64::new(c, 0.0));
        let sum = f.scale(Complex64::new(a, 0.0)).add(&g.scale(Complex64::new(b, 0.0))).unwrap();
        let spec = FourierSpec::new(7.0, 64).unwrap();
        let fs = fourier_numeric(&f, &spec).unwrap();
        let gs = fourier_numeric(&g, &spec).unwrap();
        let ss = fourier_numeric(&sum, &spec).unwrap();
        let peak = ss.max_abs().max(1.0);
        for i in 0..ss.len() {
            let lin = fs.values[i] * a + gs.values[i] * b;
            prop_assert!((ss.values[i] - lin).norm() <= 1e-13 * peak);
        }
    }
}
