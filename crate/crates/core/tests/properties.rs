use advreg::analysis::{
    bound_classic, prediction_error, re_constant, BoundForm, ClassicBoundInputs, ReMode, ReOptions,
};
use advreg::data::{generate_synthetic, normalize_columns, support_groups};
use advreg::norms::{
    dual_extremizer, dual_norm_by_search, lq_norm, weighted_group_norm, Exponent, WeightMode, WeightedGroupNorm,
};
use advreg::tuning::{check_delta_condition, delta_classic, delta_group};
use advreg::{fit, AdvObjective, Dataset, GroupPartition, SolverOptions, Variant};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn gaussian_vec(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

/// Random partition of `0..p` into consecutive blocks with random weights.
fn random_partition(rng: &mut ChaCha8Rng, p: usize) -> GroupPartition {
    let mut groups = Vec::new();
    let mut next = 0;
    while next < p {
        let size = rng.random_range(1..=3).min(p - next);
        groups.push((next..next + size).collect());
        next += size;
    }
    let weights = (0..groups.len()).map(|_| rng.random_range(0.3..3.0)).collect();
    GroupPartition::new(groups, weights, p).unwrap()
}

fn exponent() -> impl Strategy<Value = Exponent> {
    prop_oneof![
        Just(Exponent::ONE),
        Just(Exponent::TWO),
        Just(Exponent::Infinity),
        (1.05f64..8.0).prop_map(|q| Exponent::finite(q).unwrap()),
    ]
}

fn random_norm(seed: u64, p: usize, inner: Exponent, outer: Exponent, inverse: bool) -> WeightedGroupNorm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mode = if inverse { WeightMode::Inverse } else { WeightMode::Direct };
    WeightedGroupNorm::new(random_partition(&mut rng, p), inner, outer, mode).unwrap()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn instance(seed: u64, n: usize, p: usize, group: bool) -> (Dataset, Variant, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = Dataset::new(gaussian(&mut rng, n, p), gaussian_vec(&mut rng, n)).unwrap();
    let variant = if group {
        Variant::Group(random_partition(&mut rng, p))
    } else {
        Variant::Classic
    };
    (data, variant, rng)
}

proptest! {
    #[test]
    fn generated_data_reconstructs_noise(seed in any::<u64>(), n in 1usize..30, p in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let beta = gaussian_vec(&mut rng, p);
        let (data, truth) = generate_synthetic(n, p, &beta, 0.3, seed).unwrap();
        let eps = truth.epsilon().unwrap();
        let resid = &data.y - &data.x * &beta;
        prop_assert!((resid - eps).amax() <= 1e-12 * (1.0 + data.y.amax()));
    }

    #[test]
    fn normalized_columns_have_norm_root_n(seed in any::<u64>(), n in 1usize..40, p in 1usize..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = gaussian(&mut rng, n, p) * rng.random_range(1e-3..1e3);
        let (z, _) = normalize_columns(&x).unwrap();
        let target = (n as f64).sqrt();
        for col in z.column_iter() {
            prop_assert!((col.norm() - target).abs() <= 1e-12 * target);
        }
    }

    #[test]
    fn support_groups_ignore_order_within_groups(seed in any::<u64>(), p in 2usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let part = random_partition(&mut rng, p);
        let beta = gaussian_vec(&mut rng, p).map(|b| if rng.random_bool(0.5) { 0.0 } else { b });
        let mut permuted = beta.clone();
        for g in part.groups() {
            let mut vals: Vec<f64> = g.iter().map(|&j| beta[j]).collect();
            vals.rotate_left(1);
            for (k, &j) in g.iter().enumerate() {
                permuted[j] = vals[k];
            }
        }
        let a = support_groups(&beta, &part, 1e-10).unwrap();
        let b = support_groups(&permuted, &part, 1e-10).unwrap();
        prop_assert_eq!(a.groups, b.groups);
        prop_assert_eq!(a.covered, b.covered);
    }

    #[test]
    fn holder_inequality(seed in any::<u64>(), p in 1usize..10, r in exponent(), s in exponent(), inv in any::<bool>()) {
        let norm = random_norm(seed, p, r, s, inv);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let z: Vec<f64> = gaussian_vec(&mut rng, p).iter().copied().collect();
        let u: Vec<f64> = gaussian_vec(&mut rng, p).iter().copied().collect();
        let bound = norm.eval(&z).unwrap() * norm.dual().eval(&u).unwrap();
        prop_assert!(dot(&z, &u).abs() <= bound + 1e-10 * (1.0 + bound));
    }

    #[test]
    fn homogeneity_and_triangle(seed in any::<u64>(), p in 1usize..10, r in exponent(), s in exponent(), inv in any::<bool>(), a in -10.0f64..10.0) {
        let norm = random_norm(seed, p, r, s, inv);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let z: Vec<f64> = gaussian_vec(&mut rng, p).iter().copied().collect();
        let w: Vec<f64> = gaussian_vec(&mut rng, p).iter().copied().collect();
        let nz = norm.eval(&z).unwrap();
        let scaled: Vec<f64> = z.iter().map(|v| a * v).collect();
        prop_assert!((norm.eval(&scaled).unwrap() - a.abs() * nz).abs() <= 1e-10 * (1.0 + a.abs() * nz));
        let sum: Vec<f64> = z.iter().zip(&w).map(|(x, y)| x + y).collect();
        let nw = norm.eval(&w).unwrap();
        prop_assert!(norm.eval(&sum).unwrap() <= nz + nw + 1e-10 * (1.0 + nz + nw));
    }

    #[test]
    fn search_with_extremizer_matches_closed_form(seed in any::<u64>(), p in 1usize..8, r in exponent(), s in exponent(), inv in any::<bool>()) {
        let norm = random_norm(seed, p, r, s, inv);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        let z: Vec<f64> = gaussian_vec(&mut rng, p).iter().copied().collect();
        let closed = norm.dual().eval(&z).unwrap();
        let searched = dual_norm_by_search(&z, &norm, 64, seed).unwrap();
        prop_assert!((searched - closed).abs() <= 1e-6 * (1.0 + closed));
        let u = dual_extremizer(&z, &norm).unwrap();
        prop_assert!(weighted_group_norm(&u, &norm).unwrap() <= 1.0 + 1e-10);
    }

    #[test]
    fn singleton_unit_groups_reduce_to_lq(seed in any::<u64>(), p in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z: Vec<f64> = gaussian_vec(&mut rng, p).iter().copied().collect();
        let single = GroupPartition::singletons(p);
        let n21 = WeightedGroupNorm::new(single.clone(), Exponent::TWO, Exponent::ONE, WeightMode::Direct).unwrap();
        let n2i = WeightedGroupNorm::new(single, Exponent::TWO, Exponent::Infinity, WeightMode::Direct).unwrap();
        prop_assert!((n21.eval(&z).unwrap() - lq_norm(&z, Exponent::ONE).unwrap()).abs() <= 1e-12 * (1.0 + n21.eval(&z).unwrap()));
        prop_assert_eq!(n2i.eval(&z).unwrap(), lq_norm(&z, Exponent::Infinity).unwrap());
    }

    #[test]
    fn primal_equals_dual(seed in any::<u64>(), n in 1usize..8, p in 1usize..6, delta in 0.0f64..2.0, group in any::<bool>()) {
        let (data, variant, mut rng) = instance(seed, n, p, group);
        let obj = AdvObjective::new(&data, delta, variant).unwrap();
        let beta = gaussian_vec(&mut rng, p);
        let d = obj.dual_adv_loss(&beta).unwrap();
        prop_assert!((obj.primal_adv_loss(&beta).unwrap() - d).abs() <= 1e-10 * (1.0 + d));
    }

    #[test]
    fn objective_is_convex(seed in any::<u64>(), n in 1usize..8, p in 1usize..6, delta in 0.0f64..2.0, lambda in 0.0f64..1.0, group in any::<bool>()) {
        let (data, variant, mut rng) = instance(seed, n, p, group);
        let obj = AdvObjective::new(&data, delta, variant).unwrap();
        let (a, b) = (gaussian_vec(&mut rng, p), gaussian_vec(&mut rng, p));
        let mid = &a * lambda + &b * (1.0 - lambda);
        let f = |v: &DVector<f64>| obj.dual_adv_loss(v).unwrap();
        let rhs = lambda * f(&a) + (1.0 - lambda) * f(&b);
        prop_assert!(f(&mid) <= rhs + 1e-12 * (1.0 + rhs));
    }

    #[test]
    fn objective_grows_with_delta(seed in any::<u64>(), n in 1usize..8, p in 1usize..6, d1 in 0.0f64..2.0, d2 in 0.0f64..2.0, group in any::<bool>()) {
        let (data, variant, mut rng) = instance(seed, n, p, group);
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let beta = gaussian_vec(&mut rng, p);
        let a = AdvObjective::new(&data, lo, variant.clone()).unwrap().dual_adv_loss(&beta).unwrap();
        let b = AdvObjective::new(&data, hi, variant).unwrap().dual_adv_loss(&beta).unwrap();
        prop_assert!(a <= b);
    }

    #[test]
    fn subgradient_inequality(seed in any::<u64>(), n in 1usize..8, p in 1usize..6, delta in 0.0f64..2.0, group in any::<bool>()) {
        let (data, variant, mut rng) = instance(seed, n, p, group);
        let obj = AdvObjective::new(&data, delta, variant).unwrap();
        let beta = gaussian_vec(&mut rng, p).map(|b| if rng.random_bool(0.2) { 0.0 } else { b });
        let other = gaussian_vec(&mut rng, p);
        let g = obj.subgradient(&beta).unwrap().g;
        let f0 = obj.dual_adv_loss(&beta).unwrap();
        let f1 = obj.dual_adv_loss(&other).unwrap();
        prop_assert!(f1 >= f0 + g.dot(&(&other - &beta)) - 1e-10 * (1.0 + f1.abs() + f0.abs()));
    }

    #[test]
    fn singleton_group_objective_is_classic(seed in any::<u64>(), n in 1usize..8, p in 1usize..6, delta in 0.0f64..2.0) {
        let (data, _, mut rng) = instance(seed, n, p, false);
        let beta = gaussian_vec(&mut rng, p);
        let c = AdvObjective::classic(&data, delta).unwrap().dual_adv_loss(&beta).unwrap();
        let g = AdvObjective::group(&data, delta, GroupPartition::singletons(p)).unwrap().dual_adv_loss(&beta).unwrap();
        prop_assert_eq!(c, g);
    }

    #[test]
    fn classic_rule_quarter_sample_halves(n in 1usize..10_000, p in 2usize..10_000) {
        let a = delta_classic(n, p).unwrap();
        let b = delta_classic(4 * n, p).unwrap();
        prop_assert!((a / 2.0 - b).abs() <= 1e-15 * a);
    }

    #[test]
    fn tuned_objective_ignores_weight_normalization(seed in any::<u64>(), n in 2usize..8, p in 2usize..6, c in 0.2f64..5.0) {
        let (data, _, mut rng) = instance(seed, n, p, false);
        let mut part = random_partition(&mut rng, p);
        if part.num_groups() < 2 {
            part = GroupPartition::singletons(p);
        }
        let t = delta_group(n, &part).unwrap();
        let beta = gaussian_vec(&mut rng, p);
        let a = AdvObjective::group(&data, t.delta, part.with_weights(t.weights.clone()).unwrap()).unwrap();
        let scaled: Vec<f64> = t.weights.iter().map(|w| c * w).collect();
        let b = AdvObjective::group(&data, c * t.delta, part.with_weights(scaled).unwrap()).unwrap();
        let (fa, fb) = (a.dual_adv_loss(&beta).unwrap(), b.dual_adv_loss(&beta).unwrap());
        prop_assert!((fa - fb).abs() <= 1e-12 * (1.0 + fa));
    }

    #[test]
    fn prediction_error_is_quadratic(seed in any::<u64>(), n in 1usize..10, p in 1usize..6, c in -4.0f64..4.0) {
        let (data, _, mut rng) = instance(seed, n, p, false);
        let truth = gaussian_vec(&mut rng, p);
        let diff = gaussian_vec(&mut rng, p);
        let base = prediction_error(&data, &(&truth + &diff), &truth).unwrap();
        let scaled = prediction_error(&data, &(&truth + &diff * c), &truth).unwrap();
        prop_assert!((scaled.half_mean - c * c * base.half_mean).abs() <= 1e-10 * (1.0 + scaled.half_mean));
        prop_assert!((base.mean - 2.0 * base.half_mean).abs() <= 1e-15 * (1.0 + base.mean));
        prop_assert_eq!(prediction_error(&data, &truth, &truth).unwrap().mean, 0.0);
    }

    #[test]
    fn corollary_bound_dominates_theorem_at_rule(seed in any::<u64>(), n in 20usize..200, p in 2usize..300) {
        let beta = DVector::from_fn(p, |j, _| if j < 2 { 1.0 } else { 0.0 });
        let (data, truth) = generate_synthetic(n, p, &beta, 0.5, seed).unwrap();
        let delta = delta_classic(n, p).unwrap();
        let cond = check_delta_condition(&truth, &data, delta, &Variant::Classic).unwrap();
        prop_assume!(cond.passed());
        let inputs = ClassicBoundInputs {
            s: truth.s(),
            p,
            n,
            delta,
            gamma: Some(0.7),
            eps_l1: truth.epsilon().unwrap().lp_norm(1),
            beta_star_l2: beta.norm(),
            sigma: Some(0.5),
        };
        let thm = bound_classic(&inputs, BoundForm::Theorem).unwrap().bound.unwrap();
        let cor = bound_classic(&inputs, BoundForm::CorollaryHighProb).unwrap().bound.unwrap();
        prop_assert!(cor >= thm);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fit_never_worse_than_start(seed in any::<u64>(), n in 2usize..10, p in 1usize..6, delta in 0.0f64..1.5, group in any::<bool>()) {
        let (data, variant, _) = instance(seed, n, p, group);
        let obj = AdvObjective::new(&data, delta, variant).unwrap();
        let res = fit(&obj, &SolverOptions::default()).unwrap();
        let start = obj.dual_adv_loss(&DVector::zeros(p)).unwrap();
        prop_assert!(res.objective <= start);
        prop_assert!(res.trace.windows(2).all(|w| w[1] <= w[0]));
        let last = *res.trace.last().unwrap();
        prop_assert!((last - res.objective).abs() <= 1e-12 * (1.0 + res.objective));
    }

    #[test]
    fn fit_permutes_with_columns(seed in any::<u64>(), n in 3usize..10, p in 2usize..6, delta in 0.0f64..1.0) {
        let (data, _, mut rng) = instance(seed, n, p, false);
        let mut perm: Vec<usize> = (0..p).collect();
        for k in (1..p).rev() {
            perm.swap(k, rng.random_range(0..=k));
        }
        let permuted = Dataset::new(data.x.select_columns(&perm), data.y.clone()).unwrap();
        let opts = SolverOptions::default();
        let a = fit(&AdvObjective::classic(&data, delta).unwrap(), &opts).unwrap();
        let b = fit(&AdvObjective::classic(&permuted, delta).unwrap(), &opts).unwrap();
        prop_assert!((a.objective - b.objective).abs() <= 1e-9 * (1.0 + a.objective));
        if a.converged && b.converged && delta == 0.0 && n >= p {
            for (k, &j) in perm.iter().enumerate() {
                prop_assert!((b.beta_hat[k] - a.beta_hat[j]).abs() <= 1e-6 * (1.0 + a.beta_hat[j].abs()));
            }
        }
    }

    #[test]
    fn optimal_value_scales_quadratically(seed in any::<u64>(), n in 2usize..10, p in 1usize..6, delta in 0.0f64..1.0, c in 0.1f64..10.0, group in any::<bool>()) {
        let (data, variant, _) = instance(seed, n, p, group);
        let scaled = Dataset::new(data.x.clone(), &data.y * c).unwrap();
        let opts = SolverOptions::default();
        let a = fit(&AdvObjective::new(&data, delta, variant.clone()).unwrap(), &opts).unwrap();
        let b = fit(&AdvObjective::new(&scaled, delta, variant).unwrap(), &opts).unwrap();
        prop_assert!((b.objective - c * c * a.objective).abs() <= 1e-8 * (1.0 + b.objective));
    }

    #[test]
    fn orthonormal_designs_have_unit_constant(seed in any::<u64>(), p in 2usize..10, s in 1usize..4, c1 in 0.5f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = p + rng.random_range(0..6);
        let x = gaussian(&mut rng, n, p).qr().q() * (n as f64).sqrt();
        let est = re_constant(&x, s.min(p), c1, &ReOptions { samples: 8, max_supports: 20, refine_iters: 20, seed }).unwrap();
        prop_assert_eq!(est.mode, ReMode::ExactOrthonormal);
        prop_assert!((est.value - 1.0).abs() <= 1e-10);
    }
}
