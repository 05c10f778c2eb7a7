//! Runs every check on a batch of systems and assembles the report.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{BuiltSystem, SystemConfig, SCHEMA_VERSION};
use crate::basicons::{build_bar_gns, build_basic_construction, lemma_identity_check, BasicConstruction};
use crate::ergodic::{
    check_characterizations, check_main_theorem, is_relatively_weakly_mixing, relative_ergodicity_criteria,
    DEFAULT_HORIZON, DEFAULT_PREDICATE_TOL,
};
use crate::error::{Error, Result};
use crate::numkernel::{c64, CMatrix, CVector, DEFAULT_RESIDUAL_TOL};
use crate::relprod::{build_product_gns, product_relatively_ergodic};
use crate::repgns::{build_gns, cond_expectation, mirror_system, CondExpectation, GnsRep};
use crate::report::{PredicateReport, WitnessSet};
use crate::vnalg::DEFAULT_ALGEBRA_TOL;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteFlags {
    /// Residual tolerance for algebraic identities.
    pub tol: f64,
    /// Tolerance for predicates and joining identities.
    pub predicate_tol: f64,
    /// Horizon of the finite-average cross-checks.
    pub max_n: usize,
    #[serde(skip)]
    pub timings: bool,
}

impl Default for SuiteFlags {
    fn default() -> Self {
        SuiteFlags {
            tol: DEFAULT_RESIDUAL_TOL,
            predicate_tol: DEFAULT_PREDICATE_TOL,
            max_n: DEFAULT_HORIZON,
            timings: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Input,
    Internal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceError {
    pub kind: FailureKind,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremPair {
    pub relatively_weakly_mixing: bool,
    pub product_relatively_ergodic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub name: String,
    pub ambient_dim: usize,
    pub algebra_dim: usize,
    pub subsystem_dim: usize,
    pub tracial: bool,
    /// Identities that must hold; all true for a passing instance.
    pub checks: Vec<PredicateReport>,
    /// Properties of the system, either value allowed.
    pub predicates: Vec<PredicateReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem: Option<TheoremPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basic_construction_gap: Option<usize>,
    pub verdict: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<InstanceError>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

impl InstanceReport {
    fn empty(name: String, ambient_dim: usize) -> Self {
        InstanceReport {
            name,
            ambient_dim,
            algebra_dim: 0,
            subsystem_dim: 0,
            tracial: false,
            checks: Vec::new(),
            predicates: Vec::new(),
            theorem: None,
            basic_construction_gap: None,
            verdict: false,
            error: None,
            elapsed_ms: None,
        }
    }

    pub fn check(&self, name: &str) -> Option<&PredicateReport> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateReport> {
        self.predicates.iter().find(|c| c.name == name)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &PredicateReport> {
        self.checks.iter().filter(|c| !c.value)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tolerances: SuiteFlags,
    pub instances: Vec<InstanceReport>,
    pub verdict: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

impl SuiteReport {
    /// `0` pass, `1` a violated identity or internal failure, `2` bad input.
    pub fn exit_code(&self) -> i32 {
        let input = self
            .instances
            .iter()
            .any(|i| matches!(&i.error, Some(e) if e.kind == FailureKind::Input));
        if input {
            2
        } else if self.verdict {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for inst in &self.instances {
            let verdict = if inst.verdict { "PASS" } else { "FAIL" };
            let _ = write!(
                out,
                "{verdict} {} (d={}, dim A={}, dim F={}",
                inst.name, inst.ambient_dim, inst.algebra_dim, inst.subsystem_dim
            );
            if let Some(t) = inst.theorem {
                let _ = write!(
                    out,
                    ", weakly mixing={}, product ergodic={}",
                    t.relatively_weakly_mixing, t.product_relatively_ergodic
                );
            }
            let _ = writeln!(out, ")");
            for c in inst.failed_checks() {
                let worst = c.witnesses.first();
                let _ = writeln!(
                    out,
                    "  failed: {} (tol {:.1e}){}",
                    c.name,
                    c.tolerance,
                    worst.map_or(String::new(), |w| format!(": {} residual {:.3e}", w.inputs, w.residual))
                );
            }
            if let Some(e) = &inst.error {
                let _ = writeln!(out, "  error ({:?}): {}", e.kind, e.message);
            }
        }
        let passed = self.instances.iter().filter(|i| i.verdict).count();
        let _ = writeln!(
            out,
            "{} {passed}/{} instances passed",
            if self.verdict { "PASS" } else { "FAIL" },
            self.instances.len()
        );
        out
    }
}

fn fields_report(name: &str, tol: f64, fields: &[(&str, f64)]) -> PredicateReport {
    let mut set = WitnessSet::new(tol);
    for (label, value) in fields {
        set.record(|| label.to_string(), *value);
    }
    set.into_report(name)
}

/// Runs every check on one system.
pub fn run_instance(config: &SystemConfig, flags: &SuiteFlags) -> InstanceReport {
    let start = Instant::now();
    let name = config.name.clone().unwrap_or_else(|| "system".into());
    let mut report = InstanceReport::empty(name, config.ambient_dim);
    let outcome = config
        .build(DEFAULT_ALGEBRA_TOL)
        .and_then(|built| run_checks(&built, flags, &mut report));
    if let Err(e) = outcome {
        report.error = Some(InstanceError {
            kind: if e.is_input_error() {
                FailureKind::Input
            } else {
                FailureKind::Internal
            },
            message: e.to_string(),
        });
    }
    report.verdict = report.error.is_none() && report.checks.iter().all(|c| c.value);
    if flags.timings {
        report.elapsed_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    report
}

fn run_checks(built: &BuiltSystem, flags: &SuiteFlags, report: &mut InstanceReport) -> Result<()> {
    let sys = &built.system;
    let f = built.subsystem.algebra();
    let tol = flags.tol;
    let ptol = flags.predicate_tol;
    report.algebra_dim = sys.algebra.dim();
    report.subsystem_dim = f.dim();
    report.tracial = sys.state.is_trace();

    // system validation
    let state_drift = sys
        .algebra
        .basis()
        .iter()
        .map(|b| (sys.state.eval(&sys.alpha.apply(&sys.algebra, b)) - sys.state.eval(b)).norm())
        .fold(0.0, f64::max);
    let f_drift = f
        .basis()
        .iter()
        .flat_map(|b| {
            [
                f.residual(&sys.alpha.apply(&sys.algebra, b)),
                f.residual(&sys.alpha.apply_power(&sys.algebra, b, -1)),
            ]
        })
        .fold(0.0, f64::max);
    report.checks.push(fields_report(
        "system validation",
        tol,
        &[
            ("algebra closure", sys.algebra.closure_residual()),
            ("subalgebra closure", f.closure_residual()),
            ("state invariance", state_drift),
            ("subsystem invariance", f_drift),
        ],
    ));

    // GNS data
    let gns = build_gns(sys)?;
    let ce = cond_expectation(&gns, &built.subsystem)?;
    let mirror = mirror_system(&gns, &ce)?;
    let tracial = gns.is_tracial();
    let g = gns.invariants();
    let mut gns_fields = vec![
        ("omega norm", g.omega_norm),
        ("homomorphism", g.homomorphism),
        ("star", g.star),
        ("J involution", g.j_involution),
        ("J antiunitary", g.j_antiunitary),
        ("U unitary", g.u_unitary),
        ("U fixes omega", g.u_omega),
        ("covariance", g.covariance),
        ("U commutes with J", g.uj_commute),
    ];
    if tracial {
        gns_fields.push(("J is the adjoint map", g.tracial_j));
    }
    report.checks.push(fields_report("gns invariants", tol, &gns_fields));
    let c = ce.invariants(&gns);
    report.checks.push(fields_report(
        "conditional expectation invariants",
        tol,
        &[
            ("idempotent", c.idempotent),
            ("unital", c.unit),
            ("preserves the state", c.state),
            ("bimodule", c.bimodule),
            ("commutes with alpha", c.alpha_commute),
            ("commutes with phi", c.phi),
            ("PU = UP", c.pu_up),
            ("D(a) recovered from P", c.recovery),
        ],
    ));
    let mi = mirror.invariants(&gns, &ce);
    let mut mirror_fields = vec![
        ("commutes with pi(A)", mi.commutes),
        ("state invariance", mi.state_invariance),
        ("mirror subalgebra inside", mi.f_tilde_inside),
        ("mirror expectation on omega", mi.d_tilde_omega),
        ("H_F from mirror subalgebra", mi.h_f_from_f_tilde),
    ];
    if tracial {
        mirror_fields.push(("commutant equals j(pi(A))", mi.commutant_gap));
    }
    report
        .checks
        .push(fields_report("mirror invariants", tol, &mirror_fields));

    // joining
    let pg = build_product_gns(&gns, &mirror, &ce)?;
    let j = pg.invariants(&gns, &mirror, &ce);
    report.checks.push(fields_report(
        "joining invariants",
        ptol,
        &[
            ("gram negativity", j.gram_negativity),
            ("normalization", j.normalization),
            ("marginal on A", j.marginal_a),
            ("marginal on the mirror", j.marginal_a_prime),
            ("tau invariance", j.tau_invariance),
            ("restriction to the diagonal", j.diagonal_restriction),
            ("W unitary", j.w_unitarity),
            ("W fixes omega", j.w_omega),
            ("H_lambda descriptions agree", j.h_lambda_descriptions),
            ("H_lambda inside H_omega", j.h_lambda_inside),
            ("E is the projection onto H_lambda", j.expectation_projection),
        ],
    ));
    report.checks.push(PredicateReport::threshold(
        "lemma orthogonality",
        "max over D(a) = 0 of the H_lambda component of a (x) b",
        j.lemma_orthogonality,
        ptol,
    ));

    // basic construction
    if tracial {
        let bc = build_basic_construction(&gns, &ce)?;
        report.basic_construction_gap = Some(bc.dimension_gap());
        report.checks.extend(basic_construction_checks(&bc, &gns, &ce, tol)?);
        let bar = build_bar_gns(&bc)?;
        report.checks.push(PredicateReport::threshold(
            "lifted unitary",
            format!("dim H-bar = {}", bar.dim()),
            bar.unitarity_residual(),
            1e-6 * (bar.dim().max(1) as f64).sqrt(),
        ));
    }

    // characterizations
    report.checks.extend(check_characterizations(&gns, &ce, &pg, ptol)?);

    let (hilbert, algebraic) = relative_ergodicity_criteria(&gns, &ce, ptol)?;
    report.checks.push(
        PredicateReport::new("ergodicity criteria agree", hilbert.value == algebraic.value, ptol).with_note(format!(
            "fixed space inside H_F = {}, fixed algebra inside F = {}",
            hilbert.value, algebraic.value
        )),
    );
    if hilbert.value != algebraic.value {
        let last = report.checks.len() - 1;
        report.checks[last].witnesses.push(crate::report::Witness {
            inputs: "criteria disagree".into(),
            residual: 1.0,
        });
    }

    // main theorem
    if tracial {
        let outcome = check_main_theorem(&gns, &ce, &pg, ptol, flags.max_n)?;
        report.theorem = Some(TheoremPair {
            relatively_weakly_mixing: outcome.relatively_weakly_mixing,
            product_relatively_ergodic: outcome.product_relatively_ergodic,
        });
        report.checks.push(outcome.report);
    }
    report
        .predicates
        .push(is_relatively_weakly_mixing(&gns, &ce, ptol, flags.max_n)?);
    report.predicates.push(product_relatively_ergodic(&pg, ptol)?);
    let mut ergodic = hilbert;
    ergodic.name = "relatively ergodic".into();
    report.predicates.push(ergodic);
    Ok(())
}

fn random_coords(rng: &mut ChaCha8Rng, m: usize) -> CVector {
    CVector::from_fn(m, |_, _| c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

fn basic_construction_checks(
    bc: &BasicConstruction,
    gns: &GnsRep,
    ce: &CondExpectation,
    tol: f64,
) -> Result<Vec<PredicateReport>> {
    let m = gns.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let apa_element = |rng: &mut ChaCha8Rng| -> CMatrix {
        let mut x = CMatrix::zeros(m, m);
        for _ in 0..2 {
            x += gns.pi_coords(&random_coords(rng, m)) * bc.p() * gns.pi_coords(&random_coords(rng, m));
        }
        x
    };
    let mut identities = WitnessSet::new(tol);
    for k in 0..3 {
        let x = apa_element(&mut rng);
        let y = apa_element(&mut rng);
        let xy = bc.mubar(&(&x * &y))?;
        let yx = bc.mubar(&(&y * &x))?;
        identities.record(|| format!("trace, pair {k}"), (xy - yx).norm());
        let mx = bc.mubar(&x)?;
        identities.record(
            || format!("alpha-bar invariance, element {k}"),
            (bc.mubar(&bc.alphabar(&x))? - mx).norm(),
        );
        let a = gns.element(&random_coords(&mut rng, m));
        let b = gns.element(&random_coords(&mut rng, m));
        let apb = gns.pi(&a) * bc.p() * gns.pi(&b);
        identities.record(
            || format!("mubar(aPb) = mu(ab), pair {k}"),
            (bc.mubar(&apb)? - gns.mu(&(&a * &b))).norm(),
        );
    }
    let mut lemma = WitnessSet::new(tol);
    for k in 0..3 {
        let a = gns.element(&random_coords(&mut rng, m));
        let b = gns.element(&random_coords(&mut rng, m));
        for n in 0..=10 {
            let rep = lemma_identity_check(bc, gns, ce, &a, &b, n, tol)?;
            let w = &rep.witnesses[0];
            lemma.record(|| format!("pair {k}, {}", w.inputs), w.residual);
        }
    }
    Ok(vec![
        PredicateReport::threshold(
            "mubar well defined",
            "max mu-sum over vanishing combinations of aPb",
            bc.well_defined_residual(),
            tol,
        ),
        identities.into_report("mubar identities"),
        lemma.into_report("lemma identity"),
    ])
}

/// Runs a batch; instances run in parallel and are reported in order.
pub fn run_suite(configs: &[SystemConfig], flags: &SuiteFlags, seed: Option<u64>) -> SuiteReport {
    let start = Instant::now();
    let instances: Vec<InstanceReport> = configs.par_iter().map(|c| run_instance(c, flags)).collect();
    let verdict = instances.iter().all(|i| i.verdict);
    SuiteReport {
        schema_version: SCHEMA_VERSION,
        seed,
        tolerances: *flags,
        instances,
        verdict,
        elapsed_ms: flags.timings.then(|| start.elapsed().as_secs_f64() * 1e3),
    }
}

/// Main theorem only, for `check-theorem`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub schema_version: u32,
    pub name: String,
    pub relatively_weakly_mixing: bool,
    pub product_relatively_ergodic: bool,
    pub relatively_ergodic: bool,
    pub report: PredicateReport,
}

pub fn run_theorem(config: &SystemConfig, flags: &SuiteFlags) -> Result<TheoremReport> {
    let built = config.build(DEFAULT_ALGEBRA_TOL)?;
    let gns = build_gns(&built.system)?;
    if !gns.is_tracial() {
        return Err(Error::NotTracial {
            operation: "main theorem check",
        });
    }
    let ce = cond_expectation(&gns, &built.subsystem)?;
    let mirror = mirror_system(&gns, &ce)?;
    let pg = build_product_gns(&gns, &mirror, &ce)?;
    let outcome = check_main_theorem(&gns, &ce, &pg, flags.predicate_tol, flags.max_n)?;
    Ok(TheoremReport {
        schema_version: SCHEMA_VERSION,
        name: built.name,
        relatively_weakly_mixing: outcome.relatively_weakly_mixing,
        product_relatively_ergodic: outcome.product_relatively_ergodic,
        relatively_ergodic: outcome.relatively_ergodic,
        report: outcome.report,
    })
}
