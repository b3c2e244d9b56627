//! Randomized self-test of the identities this crate relies on.
//!
//! Every suite draws its instances from a ChaCha stream keyed by the seed, the
//! suite and the instance number, so a summary is reproducible regardless of
//! how many threads ran it. The first failing instance of each suite is kept
//! as a JSON fixture that the `nodal` CLI can load.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::Error;
use crate::graph::CycleFrame;
use crate::kuramoto;
use crate::linalg::{self, Inertia, Tolerances};
use crate::magnetic::{self, PhasePoint};
use crate::nodal::{self, Instance, SupportedMatrix};
use crate::random;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    NodalIdentity,
    Sylvester,
    Haynsworth,
    Gauge,
    Morse,
    Bdf,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::NodalIdentity, Suite::Sylvester, Suite::Haynsworth, Suite::Gauge, Suite::Morse, Suite::Bdf];

    pub fn name(self) -> &'static str {
        match self {
            Suite::NodalIdentity => "nodal-identity",
            Suite::Sylvester => "sylvester",
            Suite::Haynsworth => "haynsworth",
            Suite::Gauge => "gauge",
            Suite::Morse => "morse",
            Suite::Bdf => "bdf",
        }
    }

    pub fn parse(name: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// Deliberate corruption, to confirm the checks can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Reverse the sign of `Φ` on edge `edge mod |E|` before counting.
    FlipPhiSign { edge: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelfTestConfig {
    pub seed: u64,
    pub instances: usize,
    pub suites: Vec<Suite>,
    pub fault: Option<Fault>,
    pub tolerances: Tolerances,
}

impl Default for SelfTestConfig {
    fn default() -> Self {
        SelfTestConfig {
            seed: 0,
            instances: 200,
            suites: Suite::ALL.to_vec(),
            fault: None,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: Suite,
    /// Instances on which every check ran and passed.
    pub passed: usize,
    pub failed: usize,
    /// Instances excluded because a hypothesis failed or an inertia was ambiguous.
    pub skipped: usize,
    /// Individual checks (eigenpairs, matrices) that ran.
    pub checks: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelfTestSummary {
    pub seed: u64,
    pub fault: Option<Fault>,
    pub suites: Vec<SuiteResult>,
}

impl SelfTestSummary {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(|s| s.failed == 0)
    }

    /// One line per suite.
    pub fn lines(&self) -> Vec<String> {
        self.suites
            .iter()
            .map(|s| {
                format!(
                    "{:<10} passed {:>5} failed {:>5} skipped {:>5} checks {:>6}",
                    s.suite.name(),
                    s.passed,
                    s.failed,
                    s.skipped,
                    s.checks
                )
            })
            .collect()
    }
}

enum Outcome {
    Pass(usize),
    Fail(serde_json::Value),
    Skip,
}

fn stream(seed: u64, suite: Suite, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = Suite::ALL.iter().position(|&s| s == suite).unwrap_or(0) as u64;
    rng.set_stream((idx << 40) | i as u64);
    rng
}

/// Errors that mean "this random instance does not satisfy the hypotheses".
fn is_skip(e: &Error) -> bool {
    matches!(
        e,
        Error::AmbiguousInertia { .. }
            | Error::HypothesisViolation { .. }
            | Error::SplitDegenerate(_)
            | Error::SingularPivotBlock(_)
            | Error::DegenerateNearZero(_)
    )
}

fn instance_json(inst: &Instance, extra: serde_json::Value) -> serde_json::Value {
    let mut v = serde_json::to_value(inst.to_file()).expect("instance serializes");
    if let (Some(obj), Some(more)) = (v.as_object_mut(), extra.as_object()) {
        for (k, x) in more {
            obj.insert(k.clone(), x.clone());
        }
    }
    v
}

fn matrix_json(m: &DMatrix<f64>) -> serde_json::Value {
    json!(nodal::rows_of(m))
}

fn nodal_identity(rng: &mut ChaCha8Rng, cfg: &SelfTestConfig) -> Outcome {
    let beta = rng.random_range(1..=4);
    let m = random::instance(rng, 10, beta..=beta);
    let inst = Instance::new(m);
    let tol = cfg.tolerances;
    let eig = match inst.matrix.eigensystem(tol) {
        Ok(e) => e,
        Err(_) => return Outcome::Skip,
    };
    let mut checks = 0;
    for k in 1..=eig.len() {
        if !eig.admissible(k) {
            continue;
        }
        let ok = match cfg.fault {
            None => match nodal::verify_all_routes(&inst.matrix, &eig, k, &inst.frame, tol) {
                Ok(v) => v.consistent,
                Err(e) if is_skip(&e) => continue,
                Err(_) => false,
            },
            Some(Fault::FlipPhiSign { edge }) => {
                let phi = match nodal::phi_form(&inst.matrix, &eig, k) {
                    Ok(p) => p.with_flipped_entry(edge % inst.matrix.graph().n_edges()),
                    Err(_) => continue,
                };
                match nodal::report_from_phi(k, phi.n_minus(), &phi, &inst.frame, tol.zero_tol) {
                    Ok(r) => r.theorem_holds,
                    Err(e) if is_skip(&e) => continue,
                    Err(_) => false,
                }
            }
        };
        if !ok {
            return Outcome::Fail(instance_json(&inst, json!({ "k": k })));
        }
        checks += 1;
    }
    if checks == 0 {
        Outcome::Skip
    } else {
        Outcome::Pass(checks)
    }
}

fn same_inertia_mod_kernel(a: Inertia, b: Inertia, extra_kernel: usize) -> bool {
    a.n_minus == b.n_minus && a.n_plus == b.n_plus && a.n_zero == b.n_zero + extra_kernel
}

fn sylvester(rng: &mut ChaCha8Rng, cfg: &SelfTestConfig) -> Outcome {
    let n = rng.random_range(2..=8);
    let cols = rng.random_range(1..=n);
    let rank = rng.random_range(1..=cols);
    let h = random::symmetric(rng, n);
    let s = random::low_rank(rng, n, cols, rank);
    let p = random::dense(rng, n, n);
    let tol = cfg.tolerances.zero_tol;
    let run = || -> crate::Result<bool> {
        let pulled = linalg::inertia(&linalg::symmetrize(&(s.transpose() * &h * &s)), tol)?;
        let range = linalg::orthonormal_range(&s, 1e-10);
        let compressed = linalg::inertia(&linalg::compression(&h, &range)?, tol)?;
        let kernel = cols - linalg::numerical_rank(&s, 1e-10);
        let congruent = linalg::inertia(&linalg::symmetrize(&(p.transpose() * &h * &p)), tol)?;
        let whole = linalg::inertia(&h, tol)?;
        Ok(same_inertia_mod_kernel(pulled, compressed, kernel) && congruent.triple() == whole.triple())
    };
    match run() {
        Ok(true) => Outcome::Pass(2),
        Err(e) if is_skip(&e) => Outcome::Skip,
        _ => Outcome::Fail(json!({ "h": matrix_json(&h), "s": matrix_json(&s), "p": matrix_json(&p) })),
    }
}

fn haynsworth(rng: &mut ChaCha8Rng, cfg: &SelfTestConfig) -> Outcome {
    let n = rng.random_range(2..=9);
    let split = rng.random_range(1..n);
    let h = random::symmetric(rng, n);
    match linalg::haynsworth_check(&h, split, cfg.tolerances.zero_tol) {
        Ok(r) if r.additive() => Outcome::Pass(1),
        Err(e) if is_skip(&e) => Outcome::Skip,
        _ => Outcome::Fail(json!({ "h": matrix_json(&h), "split": split })),
    }
}

fn gauge(rng: &mut ChaCha8Rng, _cfg: &SelfTestConfig) -> Outcome {
    let beta = rng.random_range(1..=4);
    let m = random::instance(rng, 10, beta..=beta);
    let e = m.graph().n_edges();
    let alpha = PhasePoint::new(random::phases(rng, e));
    let theta = random::phases(rng, m.n());
    let run = || -> crate::Result<bool> {
        let base = magnetic::magnetic_spectrum(&m, &alpha)?;
        let shifted = magnetic::magnetic_spectrum(&m, &alpha.shifted_by_gradient(&m, &theta))?;
        let mirrored = magnetic::magnetic_spectrum(&m, &alpha.scaled(-1.0))?;
        let scale = 1e-10 * m.matrix().amax().max(1.0);
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= scale);
        Ok(close(&base, &shifted) && close(&base, &mirrored))
    };
    match run() {
        Ok(true) => Outcome::Pass(2),
        _ => Outcome::Fail(instance_json(
            &Instance::new(m.clone()),
            json!({ "alpha": alpha.alpha, "theta": theta }),
        )),
    }
}

fn morse(rng: &mut ChaCha8Rng, cfg: &SelfTestConfig) -> Outcome {
    let beta = rng.random_range(1..=4);
    let m = random::instance(rng, 10, beta..=beta);
    let tol = cfg.tolerances;
    let eig = match m.eigensystem(tol) {
        Ok(e) => e,
        Err(_) => return Outcome::Skip,
    };
    let mut checks = 0;
    for k in 1..=eig.len() {
        if !eig.admissible(k) {
            continue;
        }
        match magnetic::morse_index_check(&m, k, tol) {
            Ok(c) if c.agree => checks += 1,
            Err(e) if is_skip(&e) => continue,
            _ => return Outcome::Fail(instance_json(&Instance::new(m.clone()), json!({ "k": k }))),
        }
    }
    if checks == 0 {
        Outcome::Skip
    } else {
        Outcome::Pass(checks)
    }
}

fn bdf(rng: &mut ChaCha8Rng, cfg: &SelfTestConfig) -> Outcome {
    let g = random::graph_with_betti(rng, 3, 10, 1..=4);
    let l = random::signed_laplacian(rng, &g);
    let frame = CycleFrame::fundamental(&g);
    match kuramoto::bdf_check(&l, &g, &frame, cfg.tolerances.zero_tol) {
        Ok(c) if c.holds => Outcome::Pass(1),
        Err(e) if is_skip(&e) => Outcome::Skip,
        _ => Outcome::Fail(json!({
            "graph": crate::graph::GraphFile::from(g.clone()),
            "laplacian": matrix_json(&l),
        })),
    }
}

fn run_suite(suite: Suite, cfg: &SelfTestConfig) -> SuiteResult {
    let outcomes: Vec<Outcome> = (0..cfg.instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(cfg.seed, suite, i);
            match suite {
                Suite::NodalIdentity => nodal_identity(&mut rng, cfg),
                Suite::Sylvester => sylvester(&mut rng, cfg),
                Suite::Haynsworth => haynsworth(&mut rng, cfg),
                Suite::Gauge => gauge(&mut rng, cfg),
                Suite::Morse => morse(&mut rng, cfg),
                Suite::Bdf => bdf(&mut rng, cfg),
            }
        })
        .collect();
    let mut result =
        SuiteResult { suite, passed: 0, failed: 0, skipped: 0, checks: 0, first_failure: None };
    for o in outcomes {
        match o {
            Outcome::Pass(c) => {
                result.passed += 1;
                result.checks += c;
            }
            Outcome::Skip => result.skipped += 1,
            Outcome::Fail(v) => {
                result.failed += 1;
                result.first_failure.get_or_insert(v);
            }
        }
    }
    result
}

pub fn run(cfg: &SelfTestConfig) -> SelfTestSummary {
    SelfTestSummary {
        seed: cfg.seed,
        fault: cfg.fault,
        suites: cfg.suites.iter().map(|&s| run_suite(s, cfg)).collect(),
    }
}

/// Theorem-check an instance file written by a failing suite.
pub fn replay(inst: &Instance, k: usize, tol: Tolerances) -> crate::Result<nodal::FullVerification> {
    let eig = inst.matrix.eigensystem(tol)?;
    nodal::verify_all_routes(&inst.matrix, &eig, k, &inst.frame, tol)
}

/// Convenience for tests: one random supported matrix per call.
pub fn sample_instance(seed: u64, i: usize) -> SupportedMatrix {
    let mut rng = stream(seed, Suite::NodalIdentity, i);
    let beta = rng.random_range(1..=4);
    random::instance(&mut rng, 10, beta..=beta)
}
