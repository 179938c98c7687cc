mod common;

use common::*;
use kirchhoff_core::seeds::{
    certify, h3_window, p3_coefficients, sublinear_k0, sublinear_phi, P3Case, SuperCase,
};
use kirchhoff_core::wells::rays::DirectionSampler;
use kirchhoff_core::wells::{Constants, WellDepths};
use kirchhoff_core::{
    blowup_threshold_h0, evaluate_i, evaluate_j, seed, total_energy, verify_certificate, Discretization, Error,
    Params, RecipeKind, SeedRecipe,
};

struct Setup {
    disc: Discretization<f64>,
    c: Constants<f64>,
}

impl Setup {
    fn new() -> Self {
        let disc = interval(63);
        let c = constants(&disc);
        Setup { disc, c }
    }

    /// Canonical parameters for each recipe.
    fn params_for(&self, kind: RecipeKind) -> Params<f64> {
        let l1 = self.c.lambda1();
        match kind {
            RecipeKind::SublinearNegE => params(1e-4, 1.0, 0.0, 2.0),
            RecipeKind::P3WellInterior | RecipeKind::P3Blowup(_) => params(0.01, 1.0, 0.3 * l1, 3.0),
            RecipeKind::P3SuperLambda => params(0.01575, 1.0, 1.001 * l1, 3.0),
            RecipeKind::SuperlinearBlowup(SuperCase::B1 | SuperCase::B2) => params(0.01, 1.0, 1.5 * l1, 4.0),
            RecipeKind::SuperlinearWellInterior | RecipeKind::SuperlinearBlowup(_) => params(0.01, 1.0, 0.0, 4.0),
            RecipeKind::Scaled => params(0.01, 1.0, 0.0, 3.0),
        }
    }

    fn depths(&self, p: &Params<f64>) -> WellDepths<f64> {
        depths(p, &self.disc, &self.c)
    }
}

fn recipe(kind: RecipeKind, p: Params<f64>, s: u64) -> SeedRecipe<f64> {
    let r = SeedRecipe::new(kind, p).with_seed(s);
    if kind == RecipeKind::Scaled {
        r.with_scale(3.0, 2.0)
    } else {
        r
    }
}

#[test]
fn every_recipe_certifies_for_twenty_bases() {
    let st = Setup::new();
    for kind in RecipeKind::ALL {
        let p = st.params_for(kind);
        let d = st.depths(&p);
        for s in 0..20 {
            let res = seed(&recipe(kind, p, s), &st.disc, &st.c, &d)
                .unwrap_or_else(|e| panic!("{} seed {s}: {e}", kind.name()));
            assert!(res.certificate.all_hold());
            assert!(verify_certificate(&res, &p, &st.disc, &st.c, &d), "{} seed {s}", kind.name());
            let e = total_energy(&p, &st.disc, &res.u0, &res.u1).unwrap();
            assert!((e - res.certificate.e0).abs() <= 1e-12 * e.abs().max(1.0));
        }
    }
}

#[test]
fn supplied_bases_certify() {
    let st = Setup::new();
    let sampler = DirectionSampler::new(&st.disc);
    let mut r = rng(77);
    let kinds = [
        RecipeKind::P3WellInterior,
        RecipeKind::SuperlinearWellInterior,
        RecipeKind::SuperlinearBlowup(SuperCase::A1),
        RecipeKind::SuperlinearBlowup(SuperCase::A2),
        RecipeKind::SuperlinearBlowup(SuperCase::B1),
        RecipeKind::SuperlinearBlowup(SuperCase::B2),
        RecipeKind::Scaled,
    ];
    for kind in kinds {
        let p = st.params_for(kind);
        let d = st.depths(&p);
        for s in 0..20 {
            let v0 = st.disc.field(sampler.smooth(&mut r)).unwrap();
            let v1 = if kind.needs_overlap() { v0.clone() } else { st.disc.field(sampler.smooth(&mut r)).unwrap() };
            let rc = recipe(kind, p, s).with_base(v0, v1);
            let res = seed(&rc, &st.disc, &st.c, &d).unwrap_or_else(|e| panic!("{} base {s}: {e}", kind.name()));
            assert!(verify_certificate(&res, &p, &st.disc, &st.c, &d));
        }
    }
}

#[test]
fn seeding_is_deterministic() {
    let st = Setup::new();
    let kind = RecipeKind::P3Blowup(P3Case::H3);
    let p = st.params_for(kind);
    let d = st.depths(&p);
    let a = seed(&recipe(kind, p, 5), &st.disc, &st.c, &d).unwrap();
    let b = seed(&recipe(kind, p, 5), &st.disc, &st.c, &d).unwrap();
    assert_eq!(a.u0.values(), b.u0.values());
    assert_eq!(a.u1.values(), b.u1.values());
}

#[test]
fn h2_energy_vanishes() {
    let st = Setup::new();
    let kind = RecipeKind::P3Blowup(P3Case::H2);
    let p = st.params_for(kind);
    let d = st.depths(&p);
    for s in 0..20 {
        let res = seed(&recipe(kind, p, s), &st.disc, &st.c, &d).unwrap();
        assert!(res.certificate.e0.abs() <= 1e-10, "E(0) = {}", res.certificate.e0);
        assert!(res.certificate.overlap > 0.0);
        assert_eq!(res.m, 1.0);
    }
}

#[test]
fn h1_energy_negative() {
    let st = Setup::new();
    let kind = RecipeKind::P3Blowup(P3Case::H1);
    let p = st.params_for(kind);
    let d = st.depths(&p);
    let res = seed(&recipe(kind, p, 0), &st.disc, &st.c, &d).unwrap();
    assert!(res.certificate.e0 < 0.0);
}

#[test]
fn b1_below_energy_gate() {
    let st = Setup::new();
    let kind = RecipeKind::SuperlinearBlowup(SuperCase::B1);
    let p = st.params_for(kind);
    let d = st.depths(&p);
    let (h0, gate) = blowup_threshold_h0(&p, st.c.lambda1()).unwrap();
    assert!(h0 > 0.0);
    assert!((gate + h0 / (2.0 * p.p + 2.0)).abs() < 1e-14 * h0);
    for s in 0..20 {
        let res = seed(&recipe(kind, p, s), &st.disc, &st.c, &d).unwrap();
        assert!(res.certificate.e0 < gate);
    }
}

#[test]
fn negated_velocity_breaks_overlap_recipes() {
    let st = Setup::new();
    for kind in RecipeKind::ALL.into_iter().filter(|k| k.needs_overlap()) {
        let p = st.params_for(kind);
        let d = st.depths(&p);
        let mut res = seed(&recipe(kind, p, 1), &st.disc, &st.c, &d).unwrap();
        res.u1 = res.u1.neg();
        assert!(!verify_certificate(&res, &p, &st.disc, &st.c, &d), "{}", kind.name());
    }
}

#[test]
fn h4_checks_overlap_and_mass() {
    let st = Setup::new();
    let kind = RecipeKind::P3Blowup(P3Case::H4);
    let p = st.params_for(kind);
    let d = st.depths(&p);
    let res = seed(&recipe(kind, p, 2), &st.disc, &st.c, &d).unwrap();
    let names: Vec<&str> = res.certificate.checks.iter().map(|c| c.name).collect();
    assert!(names.contains(&"overlap_positive"));
    assert!(names.contains(&"mass_condition"));
    assert!(res.certificate.e0 >= d.d3_value().unwrap());
    // too much kinetic energy breaks the mass inequality
    let mut big = res.clone();
    big.u1 = res.u1.scaled(100.0);
    let cert = certify(kind, &p, &st.disc, &st.c, &d, &big.u0, &big.u1).unwrap();
    assert!(!cert.checks.iter().find(|c| c.name == "mass_condition").unwrap().holds);
    assert!(!verify_certificate(&big, &p, &st.disc, &st.c, &d));
}

#[test]
fn sublinear_k0_minimizes_phi() {
    let st = Setup::new();
    let kind = RecipeKind::SublinearNegE;
    let p = st.params_for(kind);
    let d = st.depths(&p);
    for s in 0..20 {
        let res = seed(&recipe(kind, p, s), &st.disc, &st.c, &d).unwrap();
        let n = st.disc.norms(&res.v0, p.p).unwrap();
        let k0 = sublinear_k0(&p, &n);
        assert!(rel(k0, res.k) < 1e-14);
        let f0 = sublinear_phi(&p, &n, k0);
        assert!(f0 <= sublinear_phi(&p, &n, 0.99 * k0));
        assert!(f0 <= sublinear_phi(&p, &n, 1.01 * k0));
        let j = evaluate_j(&p, &st.disc.norms(&res.u0, p.p).unwrap());
        assert!(rel(j, k0 * k0 * f0) < 1e-10);
    }
}

#[test]
fn sublinear_rejection_names_the_condition() {
    let st = Setup::new();
    let p = params(0.5, 1.0, 0.0, 2.0);
    let d = st.depths(&p);
    match seed(&recipe(RecipeKind::SublinearNegE, p, 0), &st.disc, &st.c, &d) {
        Err(Error::Hypothesis(msg)) => assert!(msg.contains("largest admissible a")),
        other => panic!("expected rejection, got {other:?}"),
    }
}

#[test]
fn h3_window_is_inside_w_minus_level() {
    let st = Setup::new();
    let kind = RecipeKind::P3Blowup(P3Case::H3);
    let p = st.params_for(kind);
    let d = st.depths(&p);
    let d3 = d.d3_value().unwrap();
    for s in 0..10 {
        let res = seed(&recipe(kind, p, s), &st.disc, &st.c, &d).unwrap();
        let n = st.disc.norms(&res.v0, 3.0).unwrap();
        let (mu0, mu1) = p3_coefficients(&p, &n);
        let (lo, hi) = h3_window(mu0, mu1, d3).unwrap();
        for i in 1..40 {
            let k2 = lo + (hi - lo) * i as f64 / 40.0;
            let nk = st.disc.norms(&res.v0.scaled(k2.sqrt()), 3.0).unwrap();
            let j = evaluate_j(&p, &nk);
            assert!(j > 0.0 && j < d3);
            assert!(evaluate_i(&p, &nk) < 0.0);
        }
    }
}

#[test]
fn energy_formula_matches_total_energy() {
    let st = Setup::new();
    for kind in RecipeKind::ALL {
        let p = st.params_for(kind);
        let d = st.depths(&p);
        let res = seed(&recipe(kind, p, 3), &st.disc, &st.c, &d).unwrap();
        if let Some(f) = res.certificate.e0_formula {
            let n = st.disc.norms(&res.u0, p.p).unwrap();
            let scale = res.m * res.m + p.a * n.g2 * n.g2 + p.b * n.g2 + p.lambda.abs() * n.m2 + n.lp1;
            assert!((f - res.certificate.e0).abs() <= 1e-12 * scale, "{}", kind.name());
        }
    }
}

#[test]
fn regime_mismatch_rejected() {
    let st = Setup::new();
    let p = params(0.01, 1.0, 0.0, 4.0);
    let d = st.depths(&p);
    let err = seed(&recipe(RecipeKind::P3Blowup(P3Case::H1), p, 0), &st.disc, &st.c, &d).unwrap_err();
    assert!(err.to_string().contains("p = 3"));
    let p = params(0.05, 1.0, 0.0, 3.0);
    let d = st.depths(&p);
    let err = seed(&recipe(RecipeKind::P3Blowup(P3Case::H1), p, 0), &st.disc, &st.c, &d).unwrap_err();
    assert!(err.to_string().contains("1/Λ"));
}
