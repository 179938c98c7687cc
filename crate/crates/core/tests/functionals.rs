mod common;

use common::*;
use kirchhoff_core::functionals::{j_decomposition, FiberRegime};
use kirchhoff_core::wells::active_radii;
use kirchhoff_core::wells::rays::DirectionSampler;
use kirchhoff_core::{evaluate_i, evaluate_j, fiber_map, NormBundle, Params};
use proptest::prelude::*;

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn j_decomposition_identity(
        a in 0.001f64..5.0, b in 0.01f64..5.0, lambda in -20.0f64..20.0, p in 1.1f64..7.0,
        g2 in 0.0f64..50.0, m2 in 0.0f64..5.0, l4 in 0.0f64..5.0, lp1 in 0.0f64..50.0,
    ) {
        let pr = Params::new(a, b, lambda, p).unwrap();
        let n = NormBundle::new(g2, m2, l4, lp1);
        let j = evaluate_j(&pr, &n);
        let scale = a * g2 * g2 + b * g2 + lambda.abs() * m2 + lp1 + 1e-300;
        prop_assert!((j - j_decomposition(&pr, &n)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn nehari_is_tau_times_fiber_slope(
        a in 0.001f64..5.0, lambda in -20.0f64..20.0, p in 1.5f64..6.0, tau in 0.05f64..8.0, seed in 0u64..10_000,
    ) {
        let disc = interval(31);
        let pr = Params::new(a, 1.0, lambda, p).unwrap();
        let u = random_field(&disc, &mut rng(seed));
        let n = disc.norms(&u, p).unwrap();
        let fm = fiber_map(&pr, &n, 1e-14);
        let nt = disc.norms(&u.scaled(tau), p).unwrap();
        let i = evaluate_i(&pr, &nt);
        let scale = a * nt.g2 * nt.g2 + nt.g2 + lambda.abs() * nt.m2 + nt.lp1;
        prop_assert!((i - tau * fm.d1(tau)).abs() <= 1e-12 * scale);
        prop_assert!((evaluate_j(&pr, &nt) - fm.value(tau)).abs() <= 1e-12 * scale);
    }
}

/// Alternating smooth and mixed random directions.
fn mixed_fields(n: usize) -> Vec<kirchhoff_core::Field<f64>> {
    let disc = interval(63);
    let sampler = DirectionSampler::new(&disc);
    let mut r = rng(11);
    (0..n)
        .map(|i| {
            let v = if i % 2 == 0 { sampler.smooth(&mut r) } else { sampler.direction(&mut r) };
            disc.field(v).unwrap()
        })
        .collect()
}

#[test]
fn sigma_identities_in_s_branch() {
    let disc = interval(63);
    let c = constants(&disc);
    let pr = params(1e-5, 1.0, 0.5 * c.lambda1(), 3.0);
    let sampler = DirectionSampler::new(&disc);
    let mut r = rng(3);
    let mut tested = 0;
    let mut tries = 0;
    while tested < 100 && tries < 10_000 {
        tries += 1;
        let v = if tries % 2 == 0 { sampler.smooth(&mut r) } else { sampler.direction(&mut r) };
        let u = disc.field(v).unwrap().scaled(0.1 + tries as f64 * 0.37);
        let n = disc.norms(&u, 3.0).unwrap();
        let fm = fiber_map(&pr, &n, 1e-14);
        if fm.regime != FiberRegime::SBranch {
            continue;
        }
        tested += 1;
        let s = fm.sigma.value().unwrap();
        let ns = disc.norms(&u.scaled(s), 3.0).unwrap();
        let scale = pr.a * ns.g2 * ns.g2 + ns.lp1;
        assert!(evaluate_i(&pr, &ns).abs() <= 1e-10 * scale);
        assert!(fm.d2(s) < 0.0);
        for c in [0.3, 2.0, 17.0] {
            let fc = fiber_map(&pr, &disc.norms(&u.scaled(c), 3.0).unwrap(), 1e-14);
            assert!(rel(fc.sigma.value().unwrap(), s / c) <= 1e-12);
        }
        for tau in log_grid(s * 1e-3, s * 1e3, 50) {
            let it = evaluate_i(&pr, &disc.norms(&u.scaled(tau), 3.0).unwrap());
            if tau < s * (1.0 - 1e-9) {
                assert!(it > 0.0);
            } else if tau > s * (1.0 + 1e-9) {
                assert!(it < 0.0);
            }
        }
    }
    assert_eq!(tested, 100);
}

#[test]
fn sigma_identities_in_l_minus_branch() {
    let disc = interval(63);
    let c = constants(&disc);
    // aΛ > 1 puts every field outside S; λ ≫ bλ₁ puts ψ₁-like fields in L⁻
    let pr = params(2.0 / c.lambda_big(), 1.0, 3.0 * c.lambda1(), 3.0);
    let sampler = DirectionSampler::new(&disc);
    let mut r = rng(5);
    let mut tested = 0;
    let mut tries = 0;
    while tested < 100 && tries < 10_000 {
        tries += 1;
        let u = disc.field(sampler.perturbed(c.psi1().values(), 0.5, &mut r)).unwrap();
        let n = disc.norms(&u, 3.0).unwrap();
        let fm = fiber_map(&pr, &n, 1e-14);
        if fm.regime != FiberRegime::LMinusBranch {
            continue;
        }
        tested += 1;
        let s = fm.sigma.value().unwrap();
        let ns = disc.norms(&u.scaled(s), 3.0).unwrap();
        let scale = pr.a * ns.g2 * ns.g2 + ns.lp1;
        assert!(evaluate_i(&pr, &ns).abs() <= 1e-10 * scale);
        assert!(fm.d2(s) > 0.0);
        // J on N₃ ∩ L⁻ is (l4 − a g2²)/4
        assert!((evaluate_j(&pr, &ns) - (ns.l4 - pr.a * ns.g2 * ns.g2) / 4.0).abs() <= 1e-12 * scale);
        let fc = fiber_map(&pr, &disc.norms(&u.scaled(4.0), 3.0).unwrap(), 1e-14);
        assert!(rel(fc.sigma.value().unwrap(), s / 4.0) <= 1e-12);
        for tau in log_grid(s * 1e-3, s * 1e3, 50) {
            let it = evaluate_i(&pr, &disc.norms(&u.scaled(tau), 3.0).unwrap());
            if tau < s * (1.0 - 1e-9) {
                assert!(it < 0.0);
            } else if tau > s * (1.0 + 1e-9) {
                assert!(it > 0.0);
            }
        }
    }
    assert_eq!(tested, 100);
}

#[test]
fn tau_u_past_tau0_with_sign_pattern() {
    let disc = interval(63);
    let pr = params(0.05, 1.0, 2.0, 4.0);
    for (i, u) in mixed_fields(100).into_iter().enumerate() {
        let u = u.scaled(0.5 + i as f64 * 0.1);
        let n = disc.norms(&u, 4.0).unwrap();
        let fm = fiber_map(&pr, &n, 1e-14);
        let t0 = fm.tau0.value().unwrap();
        let tu = fm.tau_u.value().unwrap();
        assert!(tu > t0);
        assert!(fm.h(tu).abs() <= 1e-9 * (pr.a * tu * tu * n.g2 * n.g2 + n.g2));
        for tau in log_grid(tu * 1e-3, tu * 1e3, 50) {
            if tau < tu * (1.0 - 1e-9) {
                assert!(fm.d1(tau) > 0.0);
            } else if tau > tu * (1.0 + 1e-9) {
                assert!(fm.d1(tau) < 0.0);
            }
        }
    }
}

#[test]
fn radius_laws_hold_with_discrete_constants() {
    let disc = interval(63);
    let c = constants(&disc);
    let sampler = DirectionSampler::new(&disc);
    let mut r = rng(9);
    for pr in [params(0.005, 1.0, 2.0, 3.0), params(0.05, 1.0, -3.0, 4.0)] {
        let rho = {
            let rad = active_radii(&pr, &c, None);
            rad.rho3.value().or(rad.rhop.value()).unwrap()
        };
        for i in 0..400 {
            let mut v = sampler.direction(&mut r);
            let scale = rho * (0.05 + 2.0 * (i as f64) / 400.0);
            v.iter_mut().for_each(|x| *x *= scale);
            let u = disc.field(v).unwrap();
            let n = disc.norms(&u, pr.p).unwrap();
            let g = n.g2.sqrt();
            let i_val = evaluate_i(&pr, &n);
            if g < 0.99 * rho {
                assert!(i_val > 0.0, "‖∇u‖ = {g} < ρ = {rho} but I = {i_val}");
            }
            if i_val < 0.0 {
                assert!(g > 0.99 * rho);
            }
        }
    }
}

#[test]
fn nehari_nonnegative_above_critical_a() {
    let disc = interval(63);
    let c = constants(&disc);
    let pr = params(1.01 / c.lambda_big(), 1.0, c.lambda1(), 3.0);
    let sampler = DirectionSampler::new(&disc);
    let mut r = rng(13);
    for i in 0..300 {
        let u = disc.field(sampler.perturbed(c.phi_lambda().values(), 1.0, &mut r)).unwrap();
        let u = u.scaled(0.01 * (1.0 + i as f64));
        assert!(evaluate_i(&pr, &disc.norms(&u, 3.0).unwrap()) >= 0.0);
    }
}

#[test]
fn nehari_set_and_outside_lie_off_s_closure() {
    let disc = interval(63);
    let c = constants(&disc);
    let pr = params(0.01, 1.0, 0.5 * c.lambda1(), 3.0);
    let sampler = DirectionSampler::new(&disc);
    let mut r = rng(17);
    for i in 0..300 {
        let u = disc.field(sampler.direction(&mut r)).unwrap().scaled(0.1 * (1.0 + i as f64));
        let n = disc.norms(&u, 3.0).unwrap();
        if evaluate_i(&pr, &n) <= 0.0 {
            assert!(pr.a * n.g2 * n.g2 - n.l4 < 0.0);
        }
    }
}
