mod common;

use common::*;
use kirchhoff_core::wells::rays::{ray_value, DirectionSampler, RayBranch};
use kirchhoff_core::wells::{
    active_radii, classify, estimate_signed_depths, estimate_well_depth, probe_delta, Constants,
};
use kirchhoff_core::{effective_coeffs, evaluate_i, fiber_map, Sign};
use rand::Rng;

#[test]
fn d3_inside_bracket_for_five_settings() {
    let disc = interval(63);
    let c = constants(&disc);
    let l1 = c.lambda1();
    for (a, lambda) in [(0.001, 0.0), (0.01, 0.0), (0.01, 0.5 * l1), (0.005, -2.0 * l1), (0.015, 0.9 * l1)] {
        let pr = params(a, 1.0, lambda, 3.0);
        let d = estimate_well_depth(&pr, &disc, &c, 64, 1).unwrap();
        let e = d.d3.value().unwrap();
        assert!(e.in_bracket, "a={a} λ={lambda}: {} not in [{}, {:?}]", e.value, e.lower, e.upper);
        let k = effective_coeffs(&pr, l1);
        let den = 4.0 * (1.0 - a * c.lambda_big());
        assert!(rel(e.lower, c.lambda_big() * k.b0 * k.b0 / den) < 1e-14);
        assert!(rel(e.upper.unwrap(), c.lambda_big() * k.c1 * k.c1 / den) < 1e-14);
    }
}

#[test]
fn sup_formula_on_phi_lambda() {
    let disc = interval(63);
    let c = constants(&disc);
    for a in [1e-6, 1e-3, 0.01] {
        let pr = params(a, 1.0, 0.0, 3.0);
        let n = disc.norms(c.phi_lambda(), 3.0).unwrap();
        let sup = fiber_map(&pr, &n, 1e-14).sup_value().unwrap();
        let big_l = c.lambda_big();
        assert!(rel(sup, big_l / (4.0 * (1.0 - a * big_l))) < 1e-8, "a={a}");
    }
}

#[test]
fn p4_depth_matches_brute_force_on_tiny_grid() {
    let disc = interval(8);
    let c = Constants::compute(&disc, &[5.0], 1e-10).unwrap();
    let pr = params(0.05, 1.0, 0.0, 4.0);
    let d = estimate_well_depth(&pr, &disc, &c, 64, 3).unwrap();
    let est = d.dp_value().unwrap();
    // derivative-free random search over 2000 directions, started at ψ₁
    let mut r = rng(2024);
    let value = |v: &[f64]| ray_value(&pr, &disc, v, RayBranch::Sup).map(|x| x.0).unwrap_or(f64::INFINITY);
    let mut best = c.psi1().values().to_vec();
    let mut oracle = value(&best);
    let mut step = 0.3;
    for _ in 0..2000 {
        let trial: Vec<f64> = best.iter().map(|&x| x + step * r.random_range(-1.0..1.0)).collect();
        let v = value(&trial);
        if v < oracle {
            oracle = v;
            best = trial;
            step *= 1.5;
        } else {
            step *= 0.97;
        }
    }
    assert!(rel(est, oracle) <= 0.05, "estimate {est} vs oracle {oracle}");
    assert!(d.dp.value().unwrap().in_bracket);
}

#[test]
fn depth_estimates_never_increase_with_more_rays() {
    let disc = interval(31);
    let c = constants(&disc);
    let pr = params(0.01, 1.0, 0.0, 4.0);
    let mut prev = f64::INFINITY;
    for n in [4, 16, 64, 256] {
        let d = estimate_well_depth(&pr, &disc, &c, n, 5).unwrap();
        let raw = d.dp.value().unwrap().sample_min;
        assert!(raw <= prev * (1.0 + 1e-12));
        prev = raw;
    }
}

#[test]
fn signed_depths_in_window() {
    let disc = interval(63);
    let c = constants(&disc);
    let pr = params(0.01575, 1.0, 1.001 * c.lambda1(), 3.0);
    let sd = estimate_signed_depths(&pr, &disc, &c, 64, 1).unwrap();
    let dm = sd.d3_minus.value().unwrap();
    let dp = sd.d3_plus.value().unwrap();
    assert!(dm < 0.0 && 0.0 < dp);
    // every N₃⁻ sample has b g2 − λ m2 > 4 d₃⁻
    let sampler = DirectionSampler::new(&disc);
    let mut r = rng(8);
    let mut seen = 0;
    for _ in 0..2000 {
        let u = disc.field(sampler.perturbed(c.psi1().values(), 0.3, &mut r)).unwrap();
        let n = disc.norms(&u, 3.0).unwrap();
        let fm = fiber_map(&pr, &n, 1e-14);
        for tau in [0.5, 1.0, 2.0, 8.0, 40.0] {
            let nt = disc.norms(&u.scaled(tau * fm.sigma.value().unwrap_or(1.0)), 3.0).unwrap();
            if evaluate_i(&pr, &nt) < 0.0 {
                seen += 1;
                assert!(pr.b * nt.g2 - pr.lambda * nt.m2 > 4.0 * dm);
            }
        }
    }
    assert!(seen > 0);
}

#[test]
fn delta_probe_examples() {
    let disc = interval(63);
    let c = constants(&disc);
    let l1 = c.lambda1();
    let pr = params(0.01575, 1.0, 1.001 * l1, 3.0);
    let grid = [0.5 * l1, 0.9 * l1, 1.0005 * l1, 1.001 * l1, 1.002 * l1];
    let probe = probe_delta(&pr, &disc, &c, &grid, 1e-10, 3).unwrap();
    // below bλ₁ nothing can sit in L̄⁻
    for &(lam, m) in &probe.minima {
        if lam < l1 {
            assert!(m > probe.floor);
        }
    }
    let delta = probe.delta_estimate.unwrap();
    // φ_Λ stays in L⁺ across the reported window
    let n = disc.norms(c.phi_lambda(), 3.0).unwrap();
    assert!(pr.b * n.g2 - (l1 + delta) * n.m2 > 0.0);
    // ψ₁ lies outside S̄ under the ψ₁ condition
    let n1 = disc.norms(c.psi1(), 3.0).unwrap();
    assert!(pr.a * n1.g2 * n1.g2 - n1.l4 > 0.0);
    // the ψ₁ condition failing is rejected with its sufficient condition
    let bad = params(0.001, 1.0, 1.001 * l1, 3.0);
    let err = probe_delta(&bad, &disc, &c, &grid, 1e-10, 3).unwrap_err().to_string();
    assert!(err.contains("sufficient"));
}

#[test]
fn classify_examples_and_sandwiches() {
    let disc = interval(63);
    let c = constants(&disc);
    let sampler = DirectionSampler::new(&disc);
    let mut r = rng(21);
    for pr in [params(0.01, 1.0, 0.0, 3.0), params(0.01, 1.0, 3.0, 3.0), params(0.02, 1.0, 0.0, 4.0)] {
        let d = depths(&pr, &disc, &c);
        let origin = classify(&pr, &disc, &disc.zeros(), &c, &d, 1e-8).unwrap();
        assert_eq!(origin.i_sign, Sign::Zero);
        assert_eq!(origin.in_w_plus, Some(true));
        let depth = d.active_depth(&pr, c.lambda1()).unwrap();
        let rad = active_radii(&pr, &c, Some(depth));
        let (rho, big_r, rhat) = if pr.p == 3.0 {
            (rad.rho3.value().unwrap(), rad.big_r3.value().unwrap(), rad.rhat3.value().unwrap())
        } else {
            (rad.rhop.value().unwrap(), rad.big_rp.value().unwrap(), rad.rhatp.value().unwrap())
        };
        assert!(big_r >= rho);
        let mut plus = 0;
        for i in 0..1000 {
            let u = disc
                .field(sampler.direction(&mut r))
                .unwrap()
                .scaled(big_r * 1.5 * (i as f64 + 0.5) / 1000.0);
            let cl = classify(&pr, &disc, &u, &c, &d, 1e-8).unwrap();
            if cl.grad_norm < 0.99 * rhat {
                assert_eq!(cl.in_w_plus, Some(true));
                plus += 1;
            }
            if cl.grad_norm > big_r && cl.j_value < depth {
                assert_eq!(cl.in_w_minus, Some(true));
            }
            if cl.in_w_minus == Some(true) {
                assert!(cl.grad_norm > 0.99 * rho);
            }
            if cl.in_w_plus == Some(true) {
                assert_ne!(cl.i_sign, Sign::Negative);
            }
        }
        assert!(plus > 0);
    }
}

#[test]
fn tau_u_decreases_in_lambda() {
    let disc = interval(63);
    let sampler = DirectionSampler::new(&disc);
    let mut r = rng(4);
    for _ in 0..50 {
        let u = disc.field(sampler.direction(&mut r)).unwrap();
        let n = disc.norms(&u, 4.0).unwrap();
        let mut prev = f64::INFINITY;
        for lambda in [-20.0, -5.0, 0.0, 4.0, 9.0] {
            let t = fiber_map(&params(0.05, 1.0, lambda, 4.0), &n, 1e-14).tau_u.value().unwrap();
            assert!(t <= prev * (1.0 + 1e-10));
            prev = t;
        }
    }
}

#[test]
fn sigma_size_laws() {
    let disc = interval(63);
    let c = constants(&disc);
    let l1 = c.lambda1();
    let n = disc.norms(c.phi_lambda(), 3.0).unwrap();
    let sigma = |a: f64, lambda: f64| fiber_map(&params(a, 1.0, lambda, 3.0), &n, 1e-14).sigma.value().unwrap();
    let lambdas = [-10.0 * l1, -l1, 0.0, 0.5 * l1, 0.99 * l1];
    for w in lambdas.windows(2) {
        assert!(sigma(0.01, w[1]) < sigma(0.01, w[0]));
    }
    let inv = 1.0 / c.lambda_big();
    let avals = [0.01 * inv, 0.3 * inv, 0.7 * inv, 0.99 * inv];
    for w in avals.windows(2) {
        assert!(sigma(w[1], 0.0) > sigma(w[0], 0.0));
    }
}

#[test]
fn rays_through_s_cross_once() {
    let disc = interval(63);
    let c = constants(&disc);
    let pr = params(0.01, 1.0, 0.3 * c.lambda1(), 3.0);
    let sampler = DirectionSampler::new(&disc);
    let mut r = rng(31);
    let mut tested = 0;
    for _ in 0..500 {
        let u = disc.field(sampler.perturbed(c.phi_lambda().values(), 1.0, &mut r)).unwrap();
        let n = disc.norms(&u, 3.0).unwrap();
        if !(n.l4 - pr.a * n.g2 * n.g2 > 0.0) {
            continue;
        }
        tested += 1;
        let signs: Vec<bool> = (0..200)
            .map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / 199.0))
            .map(|t| evaluate_i(&pr, &disc.norms(&u.scaled(t), 3.0).unwrap()) > 0.0)
            .collect();
        let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(changes, 1);
    }
    assert!(tested > 50);
}
