//! Acceptance suite.
//!
//! One test per acceptance criterion; each prints a `criterion N (...): PASS`
//! line (visible with `--nocapture`) and pins its tolerances in the asserts.
//! Criteria with runtime budgets assert them with a wall clock.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};
use ternlab::stability::DEFAULT_N_MAX;
use ternlab::{
    check_algebra_axioms, corollary_bound, diaz_margolis_iterate, generalized_distance,
    halving_operator, residual, run_theorem_2_5, run_theorem_2_6, verify_specialization,
    AlgebraInstance, CatalogTerm, ControlFunction, Element, Error, ExperimentSpec,
    FunctionHandle, JIndex, PointMap, Result, RhoParameter, SampleGrid, Scalar,
    SpecializationIdentity, Tolerances, Verdict,
};
use ternlab_oracle::{crat_from_f64, residual_exact, to_f64_pair, RatPoly};

fn c(re: f64, im: f64) -> Scalar {
    Scalar::new(re, im)
}

fn line(re: f64, im: f64) -> Element {
    Element::new(vec![c(re, im)])
}

fn rho2() -> RhoParameter {
    RhoParameter::default_real()
}

#[test]
fn criterion_1_algebra_axioms() {
    let started = Instant::now();
    for algebra in [
        AlgebraInstance::ComplexLine,
        AlgebraInstance::Pointwise(4),
        AlgebraInstance::Matrix(3),
    ] {
        let grid = SampleGrid::new(2026, 200, [0.25, 8.0], false);
        let report = check_algebra_axioms(&algebra, &grid, 1e-9).unwrap();
        assert_eq!(report.samples, 200);
        for check in &report.checks {
            assert!(
                check.pass && check.worst_violation <= 1e-9,
                "{algebra}: axiom {} violated by {:.3e}",
                check.axiom,
                check.worst_violation
            );
        }
        let cstar = report
            .checks
            .iter()
            .find(|ch| ch.axiom == "cstar-identity")
            .unwrap();
        assert!(cstar.worst_violation <= 1e-9);
    }
    assert!(
        started.elapsed() < Duration::from_secs(5),
        "axiom checks took {:?}",
        started.elapsed()
    );
    println!("criterion 1 (algebra axioms): PASS");
}

#[test]
fn criterion_2_oracle_equivalence() {
    // Pinned values first.
    let identity = FunctionHandle::new(
        AlgebraInstance::ComplexLine,
        vec![CatalogTerm::Linear { coeff: c(1.0, 0.0) }],
    );
    let e1 = residual(&identity, JIndex::J1, &rho2(), &line(1.0, 0.0), &line(2.0, 0.0), &line(3.0, 0.0))
        .unwrap();
    assert!((e1.coords[0] - c(2.0, 0.0)).norm() <= 1e-12);

    let square = FunctionHandle::new(
        AlgebraInstance::ComplexLine,
        vec![CatalogTerm::Quadratic { coeff: c(1.0, 0.0) }],
    );
    let e2 = residual(&square, JIndex::J2, &rho2(), &line(1.0, 0.0), &line(2.0, 0.0), &line(3.0, 0.0))
        .unwrap();
    assert!((e2.coords[0] - c(-48.0, 0.0)).norm() <= 1e-12);

    // 100 rational triples against the exact-rational expansion, both j.
    let coeffs: [(u32, Scalar); 4] = [
        (1, c(0.5, -1.0)),
        (2, c(2.0, 0.25)),
        (3, c(-0.5, 0.5)),
        (4, c(0.125, -0.25)),
    ];
    let handle = FunctionHandle::new(
        AlgebraInstance::ComplexLine,
        vec![
            CatalogTerm::Linear { coeff: coeffs[0].1 },
            CatalogTerm::Quadratic { coeff: coeffs[1].1 },
            CatalogTerm::Cubic { coeff: coeffs[2].1 },
            CatalogTerm::EvenQuartic { coeff: coeffs[3].1 },
        ],
    );
    let poly = RatPoly::new(
        coeffs
            .iter()
            .map(|(d, co)| (*d, crat_from_f64(co.re, co.im)))
            .collect(),
    );
    let rho_exact = crat_from_f64(2.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(20260);
    let mut dyadic = || rng.gen_range(-16i64..=16) as f64 / 8.0;
    for i in 0..100 {
        let pts: Vec<(f64, f64)> = (0..3).map(|_| (dyadic(), dyadic())).collect();
        let j = if i % 2 == 0 { JIndex::J1 } else { JIndex::J2 };
        let got = residual(
            &handle,
            j,
            &rho2(),
            &line(pts[0].0, pts[0].1),
            &line(pts[1].0, pts[1].1),
            &line(pts[2].0, pts[2].1),
        )
        .unwrap()
        .coords[0];
        let exact = residual_exact(
            &poly,
            j.value(),
            &rho_exact,
            &crat_from_f64(pts[0].0, pts[0].1),
            &crat_from_f64(pts[1].0, pts[1].1),
            &crat_from_f64(pts[2].0, pts[2].1),
        );
        let (ere, eim) = to_f64_pair(&exact);
        let diff = (got - c(ere, eim)).norm();
        assert!(diff <= 1e-12, "triple {i}: oracle deviation {diff:.3e}");
    }
    println!("criterion 2 (oracle equivalence): PASS");
}

fn random_coeff(rng: &mut ChaCha8Rng) -> Scalar {
    c(
        2.0 * rng.gen::<f64>() - 1.0,
        2.0 * rng.gen::<f64>() - 1.0,
    )
}

fn rotate_algebra(i: usize) -> AlgebraInstance {
    match i % 3 {
        0 => AlgebraInstance::ComplexLine,
        1 => AlgebraInstance::Pointwise(3),
        _ => AlgebraInstance::Matrix(2),
    }
}

#[test]
fn criterion_3_proof_chain_identities() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(333);
    let rhos = [
        RhoParameter::new(c(2.0, 0.0)).unwrap(),
        RhoParameter::new(c(0.5, 1.5)).unwrap(),
        RhoParameter::new(c(-2.0, 0.25)).unwrap(),
    ];
    for identity in [
        SpecializationIdentity::ZeroZeroZ,
        SpecializationIdentity::OddPair,
        SpecializationIdentity::EvenPair,
        SpecializationIdentity::OriginJ1,
        SpecializationIdentity::OriginJ2,
    ] {
        for i in 0..50 {
            let algebra = rotate_algebra(i);
            let terms = match identity {
                SpecializationIdentity::OddPair => vec![
                    CatalogTerm::Linear { coeff: random_coeff(&mut rng) },
                    CatalogTerm::Cubic { coeff: random_coeff(&mut rng) },
                ],
                SpecializationIdentity::EvenPair => vec![
                    CatalogTerm::Quadratic { coeff: random_coeff(&mut rng) },
                    CatalogTerm::EvenQuartic { coeff: random_coeff(&mut rng) },
                ],
                _ => vec![
                    CatalogTerm::Linear { coeff: random_coeff(&mut rng) },
                    CatalogTerm::Quadratic { coeff: random_coeff(&mut rng) },
                    CatalogTerm::Cubic { coeff: random_coeff(&mut rng) },
                ],
            };
            let handle = FunctionHandle::new(algebra, terms);
            let grid = SampleGrid::new(1000 + i as u64, 64, [0.25, 4.0], false);
            let rho = &rhos[i % rhos.len()];
            let report = verify_specialization(identity, &handle, rho, &grid, 1e-9).unwrap();
            assert!(
                report.max_defect <= 1e-9,
                "{identity} handle {i}: violation {:.3e}",
                report.max_defect
            );
        }
    }
    assert!(
        started.elapsed() < Duration::from_secs(10),
        "identity checks took {:?}",
        started.elapsed()
    );
    println!("criterion 3 (proof-chain identities): PASS");
}

struct Combo<'a> {
    alpha: Scalar,
    f: &'a FunctionHandle,
    beta: Scalar,
    g: &'a FunctionHandle,
}

impl PointMap for Combo<'_> {
    fn algebra(&self) -> &AlgebraInstance {
        self.f.algebra()
    }

    fn eval(&self, x: &Element) -> Result<Element> {
        Ok(self
            .f
            .eval(x)?
            .scale(self.alpha)
            .add(&self.g.eval(x)?.scale(self.beta)))
    }
}

#[test]
fn criterion_4_residual_linearity() {
    let mut rng = ChaCha8Rng::seed_from_u64(444);
    for i in 0..100 {
        let algebra = rotate_algebra(i);
        let f = FunctionHandle::new(
            algebra.clone(),
            vec![
                CatalogTerm::Linear { coeff: random_coeff(&mut rng) },
                CatalogTerm::Cubic { coeff: random_coeff(&mut rng) },
            ],
        );
        let g = FunctionHandle::new(
            algebra.clone(),
            vec![
                CatalogTerm::Quadratic { coeff: random_coeff(&mut rng) },
                CatalogTerm::EvenQuartic { coeff: random_coeff(&mut rng) },
            ],
        );
        let alpha = random_coeff(&mut rng).scale(2.0);
        let beta = random_coeff(&mut rng).scale(2.0);
        let grid = SampleGrid::new(2000 + i as u64, 1, [0.25, 4.0], false);
        let (x, y, z) = grid.triples(&algebra).unwrap().remove(0);
        let j = if i % 2 == 0 { JIndex::J1 } else { JIndex::J2 };
        let rho = rho2();

        let combo = Combo { alpha, f: &f, beta, g: &g };
        let lhs = residual(&combo, j, &rho, &x, &y, &z).unwrap();
        let ef = residual(&f, j, &rho, &x, &y, &z).unwrap().scale(alpha);
        let eg = residual(&g, j, &rho, &x, &y, &z).unwrap().scale(beta);
        let scale = algebra.norm(&ef).unwrap() + algebra.norm(&eg).unwrap();
        let diff = algebra.norm(&lhs.sub(&ef.add(&eg))).unwrap();
        assert!(
            diff <= 1e-9 * (1.0 + scale),
            "combo {i}: deviation {diff:.3e} at scale {scale:.3e}"
        );
    }
    println!("criterion 4 (residual linearity): PASS");
}

fn experiment_j1() -> ExperimentSpec {
    let algebra = AlgebraInstance::ComplexLine;
    ExperimentSpec {
        algebra: algebra.clone(),
        j: JIndex::J1,
        rho: rho2(),
        base: FunctionHandle::new(algebra, vec![CatalogTerm::Linear { coeff: c(2.0, 1.0) }]),
        perturbation: ControlFunction::power_delta(0.1, 2.0),
        seed: 20265,
        grid: SampleGrid::default_for_seed(20265),
        tolerances: Tolerances::default(),
        n_max: DEFAULT_N_MAX,
    }
}

fn experiment_j2() -> ExperimentSpec {
    let algebra = AlgebraInstance::ComplexLine;
    ExperimentSpec {
        algebra: algebra.clone(),
        j: JIndex::J2,
        rho: rho2(),
        base: FunctionHandle::new(algebra, vec![CatalogTerm::Quadratic { coeff: c(1.0, 0.0) }]),
        perturbation: ControlFunction::power_delta(0.01, 3.0),
        seed: 20266,
        grid: SampleGrid::default_for_seed(20266),
        tolerances: Tolerances::default(),
        n_max: DEFAULT_N_MAX,
    }
}

#[test]
fn criterion_5_theorem_2_5_desk_scale() {
    let started = Instant::now();
    for (spec, s, r) in [(experiment_j1(), 0.1, 2.0), (experiment_j2(), 0.01, 3.0)] {
        let report = run_theorem_2_5(&spec).unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
        assert_eq!(report.k_analytic, 0.5);
        assert!(report.all_converged);
        for check in &report.bound_checks {
            assert!(check.pass, "bound failed: lhs {} rhs {}", check.lhs, check.rhs);
            // With k = 2^(j-r) = 1/2 the bound equals s |x|^r.
            let nx = spec.algebra.norm(&check.point).unwrap();
            let expected = s * nx.powf(r);
            assert!(
                (check.rhs - expected).abs() <= 1e-9 * (1.0 + expected),
                "rhs {} differs from s|x|^r = {expected}",
                check.rhs
            );
            assert!(check.lhs <= check.rhs + 1e-9 * (1.0 + check.rhs));
        }
        for record in &report.extraction {
            assert!(record.certificate.converged);
            assert!(
                record.certificate.n_steps <= 60,
                "extraction took {} steps",
                record.certificate.n_steps
            );
        }
        let defect = report
            .recovered_defects
            .iter()
            .find(|d| d.name == "recovered_j_mapping_defect")
            .unwrap();
        assert!(defect.report.max_defect <= 1e-9);
    }
    assert!(
        started.elapsed() < Duration::from_secs(10),
        "experiments took {:?}",
        started.elapsed()
    );
    println!("criterion 5 (theorem 2.5 desk-scale): PASS");
}

#[test]
fn criterion_6_theorem_2_6_desk_scale() {
    let started = Instant::now();
    let algebra = AlgebraInstance::Pointwise(4);
    let spec = ExperimentSpec {
        algebra: algebra.clone(),
        j: JIndex::J1,
        rho: rho2(),
        base: FunctionHandle::new(
            algebra.clone(),
            vec![CatalogTerm::Linear { coeff: c(1.0, 0.0) }],
        ),
        perturbation: ControlFunction::power_delta(0.05, 4.0),
        seed: 20267,
        grid: SampleGrid::default_for_seed(20267),
        tolerances: Tolerances::default(),
        n_max: DEFAULT_N_MAX,
    };
    let base_der = FunctionHandle::new(
        algebra,
        vec![CatalogTerm::Linear { coeff: c(0.0, 0.7) }],
    );
    let sigma = ControlFunction::power_sigma(0.05, 4.0);
    let report = run_theorem_2_6(&spec, &base_der, &sigma, None).unwrap();
    assert_eq!(report.verdict, Verdict::Pass);
    assert!(report.all_converged);
    for check in &report.bound_checks {
        assert!(check.pass, "{}: lhs {} rhs {}", check.label, check.lhs, check.rhs);
    }
    for (name, tol) in [
        ("recovered_hom_multiplicativity", 1e-9),
        ("recovered_derivation_rule", 1e-9),
        ("recovered_hom_matches_base", 1e-9),
        ("recovered_derivation_matches_base", 1e-9),
    ] {
        let defect = report
            .recovered_defects
            .iter()
            .find(|d| d.name == name)
            .unwrap();
        assert!(
            defect.report.max_defect <= tol,
            "{name} = {:.3e}",
            defect.report.max_defect
        );
    }
    assert!(
        started.elapsed() < Duration::from_secs(10),
        "experiment took {:?}",
        started.elapsed()
    );
    println!("criterion 6 (theorem 2.6 desk-scale): PASS");
}

#[test]
fn criterion_7_diaz_margolis_engine() {
    let cert = diaz_margolis_iterate(
        |x: &f64| x / 2.0 + 1.0,
        &0.0,
        |a: &f64, b: &f64| (a - b).abs(),
        0.5,
        200,
        1e-12,
    )
    .unwrap();
    assert!(cert.converged);
    assert!(cert.n_steps <= 50);
    assert!((cert.limit - 2.0).abs() <= 1e-12);
    assert_eq!(cert.aposteriori_bound.value(), 2.0);
    assert!(cert.aposteriori_bound.value() >= (0.0f64 - 2.0).abs());

    // Contraction of the halving operator in the generalized distance on 20
    // handle pairs.
    let mut pairs_checked = 0;
    for (jv, r) in [(1u32, 2.0f64), (1, 3.5), (2, 3.0), (2, 4.5)] {
        let j = JIndex::from_value(jv).unwrap();
        let k = 2f64.powf(jv as f64 - r);
        for seed in 0..5u64 {
            let base = if jv == 1 {
                FunctionHandle::new(
                    AlgebraInstance::ComplexLine,
                    vec![CatalogTerm::Linear { coeff: c(1.0, 0.5) }],
                )
            } else {
                FunctionHandle::new(
                    AlgebraInstance::ComplexLine,
                    vec![CatalogTerm::Quadratic { coeff: c(1.0, 0.5) }],
                )
            };
            let g = base.clone().with_term(CatalogTerm::PowerPerturbation {
                s: 0.03 + 0.01 * seed as f64,
                r,
                direction: ternlab::DirectionRule::Seeded { seed: 100 + seed },
            });
            let h = base.clone().with_term(CatalogTerm::PowerPerturbation {
                s: 0.02,
                r,
                direction: ternlab::DirectionRule::Seeded { seed: 200 + seed },
            });
            let delta = ControlFunction::power_delta(0.05, r);
            let grid = SampleGrid::new(777 + seed, 12, [0.25, 8.0], true);
            let d = generalized_distance(&g, &h, j, &delta, &grid).unwrap();
            assert!(!d.is_infinite());
            let dq = generalized_distance(
                &halving_operator(&g, j),
                &halving_operator(&h, j),
                j,
                &delta,
                &grid,
            )
            .unwrap();
            assert!(
                dq.value() <= k * d.value() + 1e-9,
                "j={jv} r={r} seed={seed}: {} > k*d = {}",
                dq.value(),
                k * d.value()
            );
            pairs_checked += 1;
        }
    }
    assert_eq!(pairs_checked, 20);
    println!("criterion 7 (contraction engine): PASS");
}

#[test]
fn criterion_8_corollary_constants() {
    let b = corollary_bound(0.1, 2.0, JIndex::J1).unwrap();
    assert_eq!(b.constant, 0.1);
    let b = corollary_bound(1.0, 3.0, JIndex::J1).unwrap();
    assert_eq!(b.constant, 1.0 / 3.0);
    assert!(matches!(
        corollary_bound(1.0, 1.0, JIndex::J1),
        Err(Error::Inadmissible(_))
    ));
    let b = corollary_bound(1.0, 3.0, JIndex::J2).unwrap();
    assert!(
        b.case_note.contains("2^(1-r)") && b.case_note.contains("2^(2-r)"),
        "case_note must record the constant discrepancy: {}",
        b.case_note
    );
    println!("criterion 8 (corollary constants): PASS");
}

#[test]
fn criterion_9_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let configs = [
        (
            "t25.json",
            r#"{
                "schema_version": 1,
                "command": "theorem25",
                "algebra": "complex",
                "j": 1,
                "base": { "terms": [ { "term": "linear", "coeff": [2.0, 1.0] } ] },
                "perturbation": { "s": 0.1, "r": 2.0 },
                "seed": 7,
                "grid": { "count": 24 },
                "formats": ["json", "csv"]
            }"#,
        ),
        (
            "ax.json",
            r#"{
                "schema_version": 1,
                "command": "axioms",
                "algebra": "matrix:2",
                "seed": 5,
                "formats": ["json", "csv"]
            }"#,
        ),
    ];
    for (name, body) in configs {
        let cfg = dir.path().join(name);
        fs::write(&cfg, body).unwrap();
        let out_a = dir.path().join(format!("{name}-a"));
        let out_b = dir.path().join(format!("{name}-b"));
        for out in [&out_a, &out_b] {
            let status = Command::new(env!("CARGO_BIN_EXE_ternlab"))
                .args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
                .status()
                .unwrap();
            assert_eq!(status.code(), Some(0));
        }
        for file in ["report.json", "report.csv"] {
            assert_eq!(
                fs::read(out_a.join(file)).unwrap(),
                fs::read(out_b.join(file)).unwrap(),
                "{name}/{file} differs between runs"
            );
        }
    }
    println!("criterion 9 (report determinism): PASS");
}
