//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use bundleforge::algebra::BlockStructure;
use bundleforge::bundle::{
    check_bundle_axioms, represent_semidirect, semidirect_involute, semidirect_multiply_unit_form, BundleElement,
    BundleOps, ConcreteBundle, SemidirectBundle,
};
use bundleforge::classify::{classify_bundle, ClassifyConfig};
use bundleforge::error::Error;
use bundleforge::fixtures;
use bundleforge::group::FiniteGroup;
use bundleforge::linalg::random::haar_unitary;
use bundleforge::linalg::{ComplexMatrix, MatrixSpan, Tolerance};
use bundleforge::tpa::{check_aux_identity, check_axioms, generate_random, GlobalWitness, TwistedPartialAction};
use bundleforge::tro::{
    check_ideal_lemma, find_strict_partial_isometry, left_operator_checks, ternary_axiom_report,
    unitary_multiplier_defect, TroSpace,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Box<dyn FnOnce() -> Outcome>);

const GROUPS: [&str; 5] = ["cyclic:2", "cyclic:3", "cyclic:4", "klein4", "s3"];
const SIZES: [&[usize]; 6] = [&[1], &[1, 1], &[2], &[1, 2], &[2, 2], &[1, 1, 1]];
const FRACTIONS: [f64; 3] = [1.0, 0.7, 0.4];

fn tol() -> Tolerance {
    Tolerance::default()
}

/// The `i`-th generated action: cycles through groups, size lists and
/// restriction fractions, seeded by `i`.
fn generated(i: usize) -> (TwistedPartialAction, GlobalWitness) {
    let g = FiniteGroup::from_preset(GROUPS[i % GROUPS.len()]).unwrap();
    let sizes = SIZES[(i / GROUPS.len()) % SIZES.len()];
    let fraction = FRACTIONS[(i / (GROUPS.len() * SIZES.len())) % FRACTIONS.len()];
    generate_random(&g, sizes, fraction, i as u64, &tol()).unwrap()
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let out = f()?;
    let took = start.elapsed();
    if took > limit {
        return Err(format!("{out}; took {took:.1?}, limit {limit:?}"));
    }
    Ok(format!("{out}; {took:.1?}"))
}

fn bundle_axioms_on_generated() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..100 {
        let (tpa, _) = generated(i);
        let report = check_bundle_axioms(&SemidirectBundle::new(tpa), &tol());
        if report.len() != 11 {
            return Err(format!("action {i}: {} axioms checked", report.len()));
        }
        let m = report.max_residual();
        if !report.all_pass() || m >= 1e-8 {
            return Err(format!("action {i}: failing {:?}, max residual {m:.3e}", report.failing()));
        }
        worst = worst.max(m);
    }
    Ok(format!("100 actions, max residual {worst:.3e}"))
}

/// Associativity and `(xy)* = y*x*` on all basis tuples, once through the
/// axiom suite and once through the unit-form product.
fn associativity_and_involution() -> Outcome {
    let mut worst = 0.0f64;
    for (name, tpa) in [("pauli", fixtures::pauli_action()), ("cyclic3-partial", fixtures::cyclic3_partial_action())] {
        let bundle = SemidirectBundle::new(tpa.clone());
        let report = check_bundle_axioms(&bundle, &tol());
        for key in ["iii", "vii"] {
            let r = report.get(key).unwrap().max_residual;
            if r >= 1e-10 {
                return Err(format!("{name}: suite axiom ({key}) residual {r:.3e}"));
            }
            worst = worst.max(r);
        }
        let n = tpa.group().order();
        let bases: Vec<Vec<BundleElement>> = (0..n)
            .map(|t| bundle.fiber_basis(t).into_iter().map(|a| BundleElement::new(t, a)).collect())
            .collect();
        let mul = |x: &BundleElement, y: &BundleElement| semidirect_multiply_unit_form(x, y, &tpa);
        let star = |x: &BundleElement| semidirect_involute(x, &tpa, &tol()).unwrap();
        for x in bases.iter().flatten() {
            for y in bases.iter().flatten() {
                let xy = mul(x, y);
                let lhs = star(&xy);
                let rhs = mul(&star(y), &star(x));
                worst = worst.max(lhs.value.distance(&rhs.value));
                for z in bases.iter().flatten() {
                    let a = mul(&xy, z);
                    let b = mul(x, &mul(y, z));
                    worst = worst.max(a.value.distance(&b.value));
                }
            }
        }
    }
    if worst >= 1e-10 {
        return Err(format!("max residual {worst:.3e}"));
    }
    Ok(format!("pauli and cyclic3-partial, max residual {worst:.3e}"))
}

fn aux_identity() -> Outcome {
    let mut fixtures_list: Vec<(String, TwistedPartialAction)> = vec![
        ("pauli".into(), fixtures::pauli_action()),
        ("cyclic3-partial".into(), fixtures::cyclic3_partial_action()),
        ("trivial".into(), TwistedPartialAction::trivial(FiniteGroup::cyclic(1), BlockStructure::new(vec![2]).unwrap())),
    ];
    fixtures_list.extend((0..30).map(|i| (format!("generated-{i}"), generated(i).0)));
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (name, tpa) in &fixtures_list {
        if !check_axioms(tpa, &tol()).all_pass() {
            continue;
        }
        checked += 1;
        let r = check_aux_identity(tpa, &tol());
        let m = r.max_residual();
        if !r.all_pass() || m >= 1e-8 {
            return Err(format!("{name}: residual {m:.3e}"));
        }
        worst = worst.max(m);
    }
    if checked != fixtures_list.len() {
        return Err(format!("only {checked} of {} fixtures pass the action axioms", fixtures_list.len()));
    }
    Ok(format!("{checked} fixtures, max residual {worst:.3e}"))
}

fn classification_roundtrip() -> Outcome {
    let mut worst = [0.0f64; 3];
    for i in 0..50 {
        let (tpa, witness) = generated(100 + i);
        let bundle = represent_semidirect(&tpa, &witness, &tol()).map_err(|e| format!("bundle {i}: {e}"))?;
        let cfg = ClassifyConfig { seed: i as u64, ..ClassifyConfig::default() };
        let result = classify_bundle(&bundle, &cfg).map_err(|e| format!("bundle {i}: {e}"))?;
        if !result.passed() {
            return Err(format!(
                "bundle {i}: failing {:?} {:?} {:?}",
                result.tpa_report.failing(),
                result.bundle_report.failing(),
                result.iso_report.failing()
            ));
        }
        let iso = &result.iso_report;
        let get = |k: &str| iso.get(k).unwrap();
        let r = [get("rho-isometric").max_residual, get("rho-multiplicative").max_residual, get("rho-involutive").max_residual];
        if r[0] >= 1e-8 || r[1] >= 1e-7 || r[2] >= 1e-7 || !get("rho-surjective").pass {
            return Err(format!("bundle {i}: residuals {r:?}"));
        }
        for k in 0..3 {
            worst[k] = worst[k].max(r[k]);
        }
    }
    Ok(format!(
        "50 bundles, isometric {:.1e}, multiplicative {:.1e}, involutive {:.1e}",
        worst[0], worst[1], worst[2]
    ))
}

/// `W (⊕ M_{n_k} ⊗ 1_{m_k}) V*` placed at a random offset in `M_d`, `W`, `V`
/// Haar unitaries: a regular TRO with distinct left and right supports.
fn random_square_tro(seed: u64) -> TroSpace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks: Vec<(usize, usize)> = (0..rng.random_range(1..=2))
        .map(|_| (rng.random_range(1..=2), rng.random_range(1..=2)))
        .collect();
    let used: usize = blocks.iter().map(|(n, m)| n * m).sum();
    let d = used + rng.random_range(0..=2);
    let (w, v) = (haar_unitary(&mut rng, d), haar_unitary(&mut rng, d));
    let mut mats = Vec::new();
    let mut offset = 0;
    for &(n, m) in &blocks {
        for i in 0..n {
            for j in 0..n {
                let unit = ComplexMatrix::matrix_unit(n, i, j).kron(&ComplexMatrix::identity(m));
                let mut x = ComplexMatrix::zeros(d, d);
                x.set_sub_block(offset, offset, &unit);
                mats.push(&w * &x * v.adjoint());
            }
        }
        offset += n * m;
    }
    TroSpace::from_matrices(d, &mats, &tol()).unwrap()
}

fn tro_suite() -> Outcome {
    let mut worst_mult = 0.0f64;
    let mut worst_lemma = 0.0f64;
    for i in 0..50u64 {
        let e = random_square_tro(i);
        let s = e.space();
        let ese = s.product(&s.adjoint()).and_then(|l| l.product(s)).map_err(|x| x.to_string())?;
        let d = ese.distance(s);
        if d >= 1e-8 || ese.dim() != s.dim() {
            return Err(format!("tro {i}: EE*E differs from E by {d:.3e}"));
        }
        let ternary = ternary_axiom_report(&e, 8, i);
        let cube = ternary.get("ternary-cube-norm").unwrap().max_residual;
        if cube >= 1e-8 {
            return Err(format!("tro {i}: cube norm {cube:.3e}"));
        }
        let ops = left_operator_checks(&e, 6, i);
        let cstar = ops.get("c-star-identity").unwrap().max_residual;
        let lemma = ops.get("norm-lemma-left").unwrap().max_residual.max(ops.get("norm-lemma-right").unwrap().max_residual);
        if cstar >= 1e-8 || lemma >= 1e-6 {
            return Err(format!("tro {i}: C*-identity {cstar:.3e}, norm lemma {lemma:.3e}"));
        }
        worst_lemma = worst_lemma.max(lemma);
        let u1 = find_strict_partial_isometry(&e, 1000 + i, 8).map_err(|x| format!("tro {i}: {x}"))?;
        let u2 = find_strict_partial_isometry(&e, 2000 + i, 8).map_err(|x| format!("tro {i}: {x}"))?;
        let alg = s.product(&s.adjoint()).map_err(|x| x.to_string())?;
        let defect = unitary_multiplier_defect(&(&u2 * u1.adjoint()), &alg);
        if defect >= 1e-8 {
            return Err(format!("tro {i}: u2 u1* multiplier defect {defect:.3e}"));
        }
        worst_mult = worst_mult.max(defect);
        for j in [s.clone(), MatrixSpan::zero(e.ambient_dim(), tol())] {
            let r = check_ideal_lemma(&j, &e).map_err(|x| x.to_string())?;
            if !r.all_pass() || r.max_residual() >= 1e-8 {
                return Err(format!("tro {i}: ideal lemma failing {:?}", r.failing()));
            }
        }
    }
    // J = B_r B_s inside E = B_rs.
    let mut products = 0;
    for k in 0..10 {
        let (tpa, witness) = generated(200 + k);
        let b = represent_semidirect(&tpa, &witness, &tol()).map_err(|x| x.to_string())?;
        let g = b.group_ref().clone();
        for r in g.elements() {
            for s in g.elements() {
                let e = TroSpace::new(b.fiber(g.mul(r, s)).clone()).map_err(|x| x.to_string())?;
                let j = b.fiber(r).product(b.fiber(s)).map_err(|x| x.to_string())?;
                let rep = check_ideal_lemma(&j, &e).map_err(|x| format!("B_{r}B_{s}: {x}"))?;
                if !rep.all_pass() || rep.max_residual() >= 1e-8 {
                    return Err(format!("bundle {k}, B_{r}B_{s}: ideal lemma failing {:?}", rep.failing()));
                }
                products += 1;
            }
        }
    }
    Ok(format!(
        "50 TROs, multiplier defect {worst_mult:.1e}, norm lemma {worst_lemma:.1e}; ideal lemma on E, 0 and {products} products"
    ))
}

fn negative_certification() -> Outcome {
    let corner = TroSpace::from_matrices(5, &fixtures::corner_tro(), &tol()).map_err(|x| x.to_string())?;
    let cert = match find_strict_partial_isometry(&corner, 0, 8) {
        Err(Error::NonRegular(c)) => c,
        Err(Error::Inconclusive { .. }) => return Err("corner TRO reported Inconclusive".into()),
        other => return Err(format!("corner TRO: expected NonRegular, got {other:?}")),
    };
    if (cert.range_dim, cert.source_dim) != (2, 3) {
        return Err(format!("certificate {} vs {}, expected 2 vs 3", cert.range_dim, cert.source_dim));
    }
    let (tpa, witness) = fixtures::cyclic3_partial_with_witness();
    let c3 = represent_semidirect(&tpa, &witness, &tol()).map_err(|x| x.to_string())?;
    let mut failing = Vec::new();
    for (name, clean, t) in [("scalar-pauli", fixtures::scalar_pauli_bundle(), 1), ("cyclic3-partial", c3, 1)] {
        if !check_bundle_axioms(&clean, &tol()).all_pass() {
            return Err(format!("{name}: unperturbed bundle fails the suite"));
        }
        let noisy: ConcreteBundle = fixtures::perturb_fiber(&clean, t, 0, 1e-2, 0);
        let report = check_bundle_axioms(&noisy, &tol());
        if report.all_pass() {
            return Err(format!("{name}: perturbed bundle passes the suite"));
        }
        failing.push(format!("{name} {:?}", report.failing()));
    }
    Ok(format!("NonRegular 2 != 3; perturbed bundles fail {}", failing.join(", ")))
}

fn roundtrip_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = dir.path().join("c3.json");
    let exe = env!("CARGO_BIN_EXE_bundleforge");
    let gen = Command::new(exe)
        .args(["generate", "--group", "cyclic:3", "--sizes", "1,2", "--fraction", "0.5", "--seed", "4", "--out"])
        .arg(&input)
        .output()
        .map_err(|e| e.to_string())?;
    if !gen.status.success() {
        return Err(format!("generate exited with {:?}", gen.status.code()));
    }
    let run = || {
        Command::new(exe)
            .arg("roundtrip")
            .arg(&input)
            .args(["--seed", "11", "--report", "json"])
            .env("BUNDLEFORGE_THREADS", "4")
            .output()
    };
    let (a, b) = (run().map_err(|e| e.to_string())?, run().map_err(|e| e.to_string())?);
    if a.status.code() != Some(0) {
        return Err(format!("roundtrip exited with {:?}", a.status.code()));
    }
    if a.stdout != b.stdout || a.status.code() != b.status.code() {
        return Err("two runs differ".into());
    }
    Ok(format!("{} identical bytes", a.stdout.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("bundle axioms on 100 generated actions", Box::new(|| timed(Duration::from_secs(120), bundle_axioms_on_generated))),
        ("associativity and involution on fiber bases", Box::new(associativity_and_involution)),
        ("auxiliary cocycle identity", Box::new(aux_identity)),
        ("classification roundtrip on 50 bundles", Box::new(|| timed(Duration::from_secs(300), classification_roundtrip))),
        ("ternary ring of operators suite", Box::new(tro_suite)),
        ("negative certification", Box::new(negative_certification)),
        ("roundtrip determinism", Box::new(roundtrip_determinism)),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.into_iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} of 7 criteria pass", 7 - failed);
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
