//! Randomized checks of the identities, bounds and conjectures relating
//! the estimators.
//!
//! Each check draws `count` instances from a seeded family, measures a
//! violation per instance and reports the maximum. Instance `i` of a family
//! with seed `s` comes from its own ChaCha stream, so any instance can be
//! regenerated in isolation.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{LstdError, Result};
use crate::estimators::{
    brm_design, lds_model, lds_sample, lstd_design, lstd_pinv_design, lstd_sample, quadratic_form_k,
    td_iterate_design, QuadraticFormVariant, TdOptions,
};
use crate::io::ProblemDocument;
use crate::linalg::{
    condition_number, least_squares, max_abs, pseudo_inverse_with_cutoff, scale_rows, singular_values, spectral_radius,
    weighted_norm, Matrix, Singularity, Vector,
};
use crate::mrp::{exact_value, sample_trajectory, stationary_weights, FeatureMap, Mrp, StationaryWeights};
use crate::projections::{complementarity_check, oblique_projection, weighted_projection, weighted_projection_raw};

/// Smallest singular value of `ΦᵀΞΦ` accepted by the generator.
pub const GRAM_FLOOR: f64 = 1e-6;

const DISCOUNTS: [f64; 3] = [0.5, 0.9, 0.99];

/// Shape of a generated problem. `transient` states come first and feed
/// into the recurrent block; `features` may not exceed the recurrent count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub states: usize,
    pub features: usize,
    #[serde(default)]
    pub transient: usize,
    /// Drawn from {0.5, 0.9, 0.99} when absent.
    #[serde(default)]
    pub discount: Option<f64>,
    /// Identity features; `features` must then equal `states`.
    #[serde(default)]
    pub tabular: bool,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LstdError::InvalidArgument(m));
        if self.states == 0 {
            return bad("states must be >= 1".into());
        }
        if self.transient >= self.states {
            return bad(format!("{} transient states leave no recurrent state", self.transient));
        }
        let recurrent = self.states - self.transient;
        if self.tabular {
            if self.transient > 0 || self.features != self.states {
                return bad("tabular features need no transient states and features == states".into());
            }
        } else if self.features == 0 || self.features > recurrent {
            return bad(format!("features must lie in 1..={recurrent}"));
        }
        if let Some(g) = self.discount {
            if !(g > 0.0 && g < 1.0) {
                return bad(format!("discount {g} outside (0, 1)"));
            }
        }
        Ok(())
    }
}

/// A generated continuing problem with its stationary weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub mrp: Mrp,
    pub fmap: FeatureMap,
    pub xi: StationaryWeights,
}

impl Instance {
    pub fn new(mrp: Mrp, fmap: FeatureMap) -> Result<Self> {
        let xi = stationary_weights(&mrp, None)?;
        Ok(Self { mrp, fmap, xi })
    }

    pub fn document(&self) -> ProblemDocument {
        ProblemDocument::from_mrp(&self.mrp, &self.fmap)
    }

    pub fn phi(&self) -> &Matrix {
        self.fmap.phi()
    }

    pub fn with_features(&self, phi: Matrix) -> Result<Self> {
        Ok(Self { mrp: self.mrp.clone(), fmap: FeatureMap::new(phi)?, xi: self.xi.clone() })
    }
}

fn dirichlet_row(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    draws.iter().map(|d| d / total).collect()
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Dirichlet(1) transition rows (recurrent rows restricted to the recurrent
/// block), standard normal features, uniform(0, 1) rewards. Features are
/// redrawn until `σ_min(ΦᵀΞΦ) > GRAM_FLOOR`.
pub fn generate_instance(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Result<Instance> {
    spec.validate()?;
    let s = spec.states;
    let t = spec.transient;
    let mut p = Matrix::zeros(s, s);
    for i in 0..s {
        let (offset, width) = if i < t { (0, s) } else { (t, s - t) };
        for (j, v) in dirichlet_row(rng, width).into_iter().enumerate() {
            p[(i, offset + j)] = v;
        }
    }
    let reward = Vector::from_fn(s, |_, _| rng.random::<f64>());
    let gamma = spec.discount.unwrap_or_else(|| DISCOUNTS[rng.random_range(0..DISCOUNTS.len())]);
    let mrp = Mrp::new(p, reward, gamma)?;
    let xi = stationary_weights(&mrp, None)?;
    if spec.tabular {
        return Ok(Instance { mrp, fmap: FeatureMap::tabular(s), xi });
    }
    for _ in 0..1000 {
        let phi = normal_matrix(rng, s, spec.features);
        let gram = scale_rows(&phi, xi.weights()).tr_mul(&phi);
        if singular_values(&gram).last().copied().unwrap_or(0.0) > GRAM_FLOOR {
            return Ok(Instance { mrp, fmap: FeatureMap::new(phi)?, xi });
        }
    }
    Err(LstdError::Numeric("could not draw features with a well-conditioned Gram matrix".into()))
}

/// One problem from a seed, as used by the `generate` command.
pub fn generate_problem(spec: &GeneratorSpec, seed: u64) -> Result<Instance> {
    generate_instance(spec, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Which kind of instance a check draws at a given index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceClass {
    Tabular,
    Random,
    /// Random features with one or two transient states prepended.
    Transient,
}

/// Seeded family of random instances with at most `max_states` states and
/// `max_features` features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceFamily {
    pub seed: u64,
    pub max_states: usize,
    pub max_features: usize,
}

impl InstanceFamily {
    pub fn new(seed: u64) -> Self {
        Self { seed, max_states: 8, max_features: 4 }
    }

    /// Independent stream for instance `index`.
    pub fn rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }

    pub fn instance(&self, index: usize, class: InstanceClass) -> Result<Instance> {
        let mut rng = self.rng(index);
        let transient = match class {
            InstanceClass::Transient => rng.random_range(1..=2),
            _ => 0,
        };
        let recurrent = rng.random_range(2..=self.max_states.max(transient + 2) - transient);
        let states = recurrent + transient;
        let spec = match class {
            InstanceClass::Tabular => GeneratorSpec { states, features: states, transient: 0, discount: None, tabular: true },
            _ => GeneratorSpec {
                states,
                features: rng.random_range(1..=self.max_features.min(recurrent)),
                transient,
                discount: None,
                tabular: false,
            },
        };
        generate_instance(&spec, &mut rng)
    }

    /// Seed for trajectories sampled from instance `index`.
    pub fn sample_seed(&self, index: usize) -> u64 {
        self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64)
    }
}

/// Rotates tabular, random and transient instances by index.
fn mixed_class(index: usize) -> InstanceClass {
    match index % 3 {
        0 => InstanceClass::Tabular,
        1 => InstanceClass::Random,
        _ => InstanceClass::Transient,
    }
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_id: String,
    pub instances_run: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    /// `max_violation <= tolerance`.
    pub passed: bool,
    /// Whether `passed` counts towards the suite verdict.
    pub asserted: bool,
    /// No instances were run, so `passed` holds trivially.
    #[serde(default)]
    pub vacuous: bool,
    /// The worst instance, present whenever the check failed (or, for
    /// unasserted probes, whenever a discrepancy was seen).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    #[serde(default)]
    pub extras: BTreeMap<String, f64>,
}

impl CheckReport {
    /// Passed, or not asserted.
    pub fn ok(&self) -> bool {
        self.passed || !self.asserted
    }
}

struct Tracker {
    id: &'static str,
    tolerance: f64,
    asserted: bool,
    runs: usize,
    worst: f64,
    worst_witness: Option<Value>,
    errors: usize,
    extras: BTreeMap<String, f64>,
}

impl Tracker {
    fn new(id: &'static str, tolerance: f64) -> Self {
        Self {
            id,
            tolerance,
            asserted: true,
            runs: 0,
            worst: 0.0,
            worst_witness: None,
            errors: 0,
            extras: BTreeMap::new(),
        }
    }

    fn observe(&mut self, violation: f64, witness: impl FnOnce() -> Value) {
        let v = if violation.is_nan() { f64::INFINITY } else { violation };
        if v > self.worst || (self.worst_witness.is_none() && v > self.tolerance) {
            self.worst = self.worst.max(v);
            if v > self.tolerance {
                self.worst_witness = Some(witness());
            }
        }
    }

    /// Runs one instance; an error counts as an infinite violation.
    fn run(&mut self, index: usize, body: impl FnOnce(&mut Self) -> Result<(f64, Value)>) {
        self.runs += 1;
        match body(self) {
            Ok((v, witness)) => self.observe(v, || json!({"index": index, "instance": witness})),
            Err(e) => {
                self.errors += 1;
                self.observe(f64::INFINITY, || json!({"index": index, "error": e.to_string()}));
            }
        }
    }

    fn extra_max(&mut self, key: &str, value: f64) {
        let e = self.extras.entry(key.to_string()).or_insert(f64::NEG_INFINITY);
        *e = e.max(value);
    }

    fn extra_min(&mut self, key: &str, value: f64) {
        let e = self.extras.entry(key.to_string()).or_insert(f64::INFINITY);
        *e = e.min(value);
    }

    fn finish(mut self) -> CheckReport {
        if self.errors > 0 {
            self.extras.insert("errors".into(), self.errors as f64);
        }
        self.extras.retain(|_, v| v.is_finite());
        CheckReport {
            check_id: self.id.to_string(),
            instances_run: self.runs,
            max_violation: if self.worst.is_finite() { self.worst } else { f64::MAX },
            tolerance: self.tolerance,
            passed: self.worst <= self.tolerance,
            asserted: self.asserted,
            vacuous: self.runs == 0,
            witness: self.worst_witness,
            extras: self.extras,
        }
    }
}

fn doc(inst: &Instance) -> Value {
    serde_json::to_value(inst.document()).expect("documents serialize")
}

fn rows(m: &Matrix) -> Value {
    json!(m.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>())
}

/// Check ids in suite order.
pub const CHECK_IDS: [&str; 13] = [
    "basis_invariance",
    "design_agreement",
    "error_bound",
    "loss_decomposition",
    "oblique_complementarity",
    "oblique_conjecture",
    "oblique_recovery",
    "pinv_value_equivalence",
    "rank_implication",
    "sample_agreement",
    "spectral_radius",
    "tabular_exactness",
    "td_orthogonality",
];

/// Runs the check `id` on `count` instances of the family seeded by `seed`.
pub fn run_check(id: &str, seed: u64, count: usize) -> Result<CheckReport> {
    let family = InstanceFamily::new(seed);
    Ok(match id {
        "basis_invariance" => check_basis_invariance(&family, count),
        "design_agreement" => check_design_agreement(&family, count),
        "error_bound" => check_error_bound(&family, count),
        "loss_decomposition" => check_loss_decomposition(&family, count),
        "oblique_complementarity" => check_oblique_complementarity(&family, count),
        "oblique_conjecture" => check_oblique_conjecture(&family, count),
        "oblique_recovery" => check_oblique_recovery(&family, count),
        "pinv_value_equivalence" => check_pinv_value_equivalence(&family, count),
        "rank_implication" => check_rank_implication(&family, count),
        "sample_agreement" => check_sample_agreement(&family, count),
        "spectral_radius" => check_spectral_radius(&family, count),
        "tabular_exactness" => check_tabular_exactness(&family, count),
        "td_orthogonality" => check_td_orthogonality(&family, count),
        other => return Err(LstdError::InvalidArgument(format!("unknown check id {other:?}"))),
    })
}

fn rel(diff: f64, scale: f64) -> f64 {
    diff / scale.max(1.0)
}

/// `σ_min(ΦᵀΞ(I − γP)Φ) > 1e-10·σ_max` on a1-satisfying instances,
/// transient states included.
pub fn check_rank_implication(family: &InstanceFamily, count: usize) -> CheckReport {
    let mut tr = Tracker::new("rank_implication", 0.0);
    for i in 0..count {
        tr.run(i, |tr| {
            let inst = family.instance(i, mixed_class(i))?;
            let a = inst.phi().transpose() * inst.xi.diag() * inst.mrp.bellman_matrix() * inst.phi();
            let s = singular_values(&a);
            let ratio = s.last().copied().unwrap_or(0.0) / s[0];
            tr.extra_min("min_singular_ratio", ratio);
            Ok(((1e-10 - ratio).max(0.0), doc(&inst)))
        });
    }
    tr.finish()
}

/// `ρ(γΠP) < 1` with Π built from the stationary weights. The radius under
/// arbitrary positive weights is recorded, not asserted.
pub fn check_spectral_radius(family: &InstanceFamily, count: usize) -> CheckReport {
    let mut tr = Tracker::new("spectral_radius", 0.0);
    for i in 0..count {
        tr.run(i, |tr| {
            let inst = family.instance(i, mixed_class(i))?;
            let gamma = inst.mrp.discount();
            let pi = weighted_projection(inst.phi(), &inst.xi)?;
            let rho = spectral_radius(&(&pi.projector * inst.mrp.transition() * gamma));
            tr.extra_max("max_radius", rho);
            let mut rng = family.rng(i);
            rng.set_word_pos(1 << 20);
            let w = Vector::from_fn(inst.mrp.states(), |_, _| rng.random_range(0.01..1.0));
            if let Ok(pw) = weighted_projection_raw(inst.phi(), &w) {
                let rho_w = spectral_radius(&(&pw.projector * inst.mrp.transition() * gamma));
                tr.extra_max("max_radius_arbitrary_weights", rho_w);
            }
            Ok(((rho - (1.0 - 1e-12)).max(0.0), doc(&inst)))
        });
    }
    tr.finish()
}

/// Both oblique projections of LSTD are well defined: `C(AΦ)^⊥` and `C(BΦ)`
/// are complementary for `(A, B) = (I, LᵀΞ)` and `(L, Ξ)`.
pub fn check_oblique_complementarity(family: &InstanceFamily, count: usize) -> CheckReport {
    let mut tr = Tracker::new("oblique_complementarity", 0.0);
    for i in 0..count {
        tr.run(i, |tr| {
            let inst = family.instance(i, mixed_class(i))?;
            let l = inst.mrp.bellman_matrix();
            let xi = inst.xi.diag();
            let s = inst.mrp.states();
            let first = complementarity_check(&Matrix::identity(s, s), &(l.transpose() * &xi), inst.phi())?;
            let second = complementarity_check(&l, &xi, inst.phi())?;
            let mut violation: f64 = 0.0;
            for c in [first, second] {
                tr.extra_min("min_certificate", c.min_singular_value / c.max_singular_value);
                if !c.complementary {
                    violation = 1.0;
                }
            }
            Ok((violation, doc(&inst)))
        });
    }
    tr.finish()
}

/// Values from sample LSTD are unchanged when Φ is replaced by ΦC.
/// Violations are in units of the per-case tolerance: `1e-8` for random
/// well-conditioned C and permutations, `1e-10` for `C = 2I`.
pub fn check_basis_invariance(family: &InstanceFamily, count: usize) -> CheckReport {
    let mut tr = Tracker::new("basis_invariance", 1.0);
    for i in 0..count {
        tr.run(i, |tr| {
            let inst = family.instance(i, InstanceClass::Random)?;
            let k = inst.fmap.dim();
            let traj = sample_trajectory(&inst.mrp, &inst.fmap, 500, family.sample_seed(i), false)?;
            let gamma = inst.mrp.discount();
            let base = lstd_sample(&traj, gamma)?;
            let values = &traj.features * &base.w;
            let scale = max_abs(&values);
            let mut rng = family.rng(i);
            rng.set_word_pos(1 << 20);
            let mut random = normal_matrix(&mut rng, k, k);
            while condition_number(&random) > 1e4 {
                random = normal_matrix(&mut rng, k, k);
            }
            let mut order: Vec<usize> = (0..k).collect();
            for j in (1..k).rev() {
                order.swap(j, rng.random_range(0..=j));
            }
            let perm = Matrix::from_fn(k, k, |r, c| if order[c] == r { 1.0 } else { 0.0 });
            let mut violation: f64 = 0.0;
            for (name, c, tol) in [("random", random, 1e-8), ("permutation", perm, 1e-8), ("scaling", Matrix::identity(k, k) * 2.0, 1e-10)] {
                let mut changed = traj.clone();
                changed.features = &traj.features * &c;
                let est = lstd_sample(&changed, gamma)?;
                let dev = rel(max_abs(&(&changed.features * &est.w - &values)), scale);
                tr.extra_max(&format!("max_deviation_{name}"), dev);
                violation = violation.max(dev / tol);
            }
            Ok((violation, doc(&inst)))
        });
    }
    tr.finish()
}

/// `‖V − Φw‖_Ξ ≤ (1−γ²)^{−1/2}‖V − ΠV‖_Ξ` at the instance discount and at
/// `γ = 0.999`. Records the tightness ratio.
pub fn check_error_bound(family: &InstanceFamily, count: usize) -> CheckReport {
    let mut tr = Tracker::new("error_bound", 0.0);
    let mut ratios = Vec::new();
    for i in 0..count {
        tr.run(i, |tr| {
            let inst = family.instance(i, mixed_class(i))?;
            let mut worst: f64 = 0.0;
            for gamma in [inst.mrp.discount(), 0.999] {
                let mrp = inst.mrp.with_discount(gamma)?;
                let v = exact_value(&mrp)?;
                let w = lstd_design(&mrp, &inst.fmap, &inst.xi)?.w;
                let pi = weighted_projection(inst.phi(), &inst.xi)?;
                let lhs = weighted_norm(&(&v - inst.phi() * w), inst.xi.weights());
                let rhs = weighted_norm(&(&v - pi.apply(&v)), inst.xi.weights()) / (1.0 - gamma * gamma).sqrt();
                let v_norm = weighted_norm(&v, inst.xi.weights()).max(1.0);
                if rhs > 1e-8 * v_norm {
                    ratios.push(lhs / rhs);
                    if gamma == 0.999 {
                        tr.extra_max("max_ratio_gamma_0_999", lhs / rhs);
                    }
                }
                let slack = 1e-10 * v_norm;
                worst = worst.max((lhs - rhs - slack).max(0.0));
            }
            Ok((worst, doc(&inst)))
        });
    }
    if !ratios.is_empty() {
        ratios.sort_by(f64::total_cmp);
        tr.extras.insert("max_ratio".into(), ratios[ratios.len() - 1]);
        tr.extras.insert("median_ratio".into(), ratios[ratios.len() / 2]);
    }
    tr.finish()
}

/// `‖Φw − ΠTΦw‖² = ‖Φw − TΦw‖² − ‖ΠTΦw − TΦw‖²` (Ξ-norms) for 20 random w
/// and for the LSTD weights (where the left side vanishes); the inner
/// least-squares minimizer equals the projection coefficients.
pub fn check_loss_decomposition(family: &InstanceFamily, count: usize) -> CheckReport {
    let mut tr = Tracker::new("loss_decomposition", 1e-9);
    for i in 0..count {
        tr.run(i, |_| {
            let inst = family.instance(i, mixed_class(i))?;
            let xi = inst.xi.weights();
            let phi = inst.phi();
            let pi = weighted_projection(phi, &inst.xi)?;
            let v = exact_value(&inst.mrp)?;
            let t_op = |w: &Vector| inst.mrp.mean_reward() + inst.mrp.transition() * (phi * w) * inst.mrp.discount();
            let root = xi.map(f64::sqrt);
            let half = scale_rows(phi, &root);
            let mut rng = family.rng(i);
            rng.set_word_pos(1 << 20);
            let mut violation: f64 = 0.0;
            let lstd = lstd_design(&inst.mrp, &inst.fmap, &inst.xi)?.w;
            let mut ws = vec![lstd.clone()];
            for _ in 0..20 {
                ws.push(Vector::from_fn(inst.fmap.dim(), |_, _| rng.sample::<f64, _>(StandardNormal) * max_abs(&v)));
            }
            for (n, w) in ws.iter().enumerate() {
                let fw = phi * w;
                let tw = t_op(w);
                let ptw = pi.apply(&tw);
                let lhs = weighted_norm(&(&fw - &ptw), xi).powi(2);
                let brm = weighted_norm(&(&fw - &tw), xi).powi(2);
                let reproj = weighted_norm(&(&ptw - &tw), xi).powi(2);
                let scale = brm.max(weighted_norm(&tw, xi).powi(2));
                violation = violation.max(rel((lhs - (brm - reproj)).abs(), scale));
                if n == 0 {
                    violation = violation.max(rel(lhs, scale));
                }
                let (h, _) = least_squares(&half, &tw.component_mul(&root), Singularity::Gram)?;
                let coef = pi.coefficients(&tw);
                violation = violation.max(rel(max_abs(&(h - &coef)), max_abs(&coef)));
            }
            Ok((violation, doc(&inst)))
        });
    }
    tr.finish()
}

/// `X=(I−γP)Φ, Y=ΞΦ` maps r̄ to `(I−γP)Φw`; `X=Φ, Y=(I−γP)ᵀΞΦ` maps V to
/// `Φw`, with w the LSTD weights.
pub fn check_oblique_recovery(family: &InstanceFamily, count: usize) -> CheckReport {
    let mut tr = Tracker::new("oblique_recovery", 1e-8);
    for i in 0..count {
        tr.run(i, |_| {
            let inst = family.instance(i, mixed_class(i))?;
            let phi = inst.phi();
            let l = inst.mrp.bellman_matrix();
            let xi = inst.xi.diag();
            let v = exact_value(&inst.mrp)?;
            let w = lstd_design(&inst.mrp, &inst.fmap, &inst.xi)?.w;
            let scale = max_abs(&v);
            let first = oblique_projection(&(&l * phi), &(&xi * phi), false)?;
            let d1 = max_abs(&(first.apply(inst.mrp.mean_reward()) - &l * phi * &w));
            let second = oblique_projection(phi, &(l.transpose() * &xi * phi), false)?;
            let d2 = max_abs(&(second.apply(&v) - phi * &w));
            Ok((rel(d1.max(d2), scale), doc(&inst)))
        });
    }
    tr.finish()
}

/// TD errors at the LSTD solution are Ξ-orthogonal to the features.
pub fn check_td_orthogonality(family: &InstanceFamily, count: usize) -> CheckReport {
    let mut tr = Tracker::new("td_orthogonality", 1e-9);
    for i in 0..count {
        tr.run(i, |_| {
            let inst = family.instance(i, mixed_class(i))?;
            let phi = inst.phi();
            let w = lstd_design(&inst.mrp, &inst.fmap, &inst.xi)?.w;
            let fw = phi * &w;
            let delta = inst.mrp.mean_reward() + inst.mrp.transition() * &fw * inst.mrp.discount() - &fw;
            let inner = scale_rows(phi, inst.xi.weights()).tr_mul(&delta);
            let scale = crate::linalg::max_abs_matrix(phi).max(1.0) * max_abs(&fw).max(1.0);
            Ok((max_abs(&inner) / scale, doc(&inst)))
        });
    }
    tr.finish()
}

/// Probes whether `X(YᵀX)⁺Yᵀ = XC(YᵀXC)⁺Yᵀ` whenever `C(X) = C(XC)`.
/// Nothing is asserted; discrepancies above `1e-8` are counted and the
/// worst one is kept as a witness.
pub fn check_oblique_conjecture(family: &InstanceFamily, count: usize) -> CheckReport {
    let mut tr = Tracker::new("oblique_conjecture", 1e-8);
    tr.asserted = false;
    let mut counterexamples: BTreeMap<&'static str, usize> = BTreeMap::new();
    for i in 0..count {
        tr.run(i, |_| {
            let mut rng = family.rng(i);
            let n = rng.random_range(3..=6);
            let p = rng.random_range(1..=3.min(n - 1));
            let mut x = normal_matrix(&mut rng, n, p);
            let mut y = normal_matrix(&mut rng, n, p);
            let (kind, c) = match i % 5 {
                0 => {
                    let mut c = normal_matrix(&mut rng, p, p);
                    while condition_number(&c) > 1e4 {
                        c = normal_matrix(&mut rng, p, p);
                    }
                    ("invertible", c)
                }
                1 => ("scaling", Matrix::identity(p, p) * 2.0),
                2 => {
                    // duplicate a column, then select the original ones
                    let dup = x.column(0).into_owned();
                    x = x.insert_column(p, 0.0);
                    x.set_column(p, &dup);
                    y = y.insert_column(p, 0.0);
                    y.set_column(p, &normal_matrix(&mut rng, n, 1).column(0));
                    ("selector", Matrix::from_fn(p + 1, p, |r, c| if r == c { 1.0 } else { 0.0 }))
                }
                3 => ("mixing", normal_matrix(&mut rng, p, p + 1)),
                _ => {
                    // YᵀX rank deficient: one column of Y orthogonal to C(X)
                    let q = x.clone().qr().q();
                    let z = normal_matrix(&mut rng, n, 1);
                    let orth = &z - &q * q.tr_mul(&z);
                    y.set_column(0, &orth.column(0));
                    ("deficient_cross", normal_matrix(&mut rng, p, p + 1))
                }
            };
            let xc = &x * &c;
            // singular values of YᵀX below round-off of the product count as zero
            let pinv = |a: &Matrix, b: &Matrix| {
                let cutoff = 1e-10 * a.norm() * b.norm();
                pseudo_inverse_with_cutoff(&y.tr_mul(b), cutoff)
            };
            let proj = &x * pinv(&y, &x) * y.transpose();
            let proj_c = &xc * pinv(&y, &xc) * y.transpose();
            let gap = crate::linalg::max_abs_matrix(&(proj - proj_c));
            if gap > 1e-8 {
                *counterexamples.entry(kind).or_default() += 1;
            }
            Ok((gap, json!({"kind": kind, "x": rows(&x), "y": rows(&y), "c": rows(&c)})))
        });
    }
    let total: usize = counterexamples.values().sum();
    tr.extras.insert("discrepancies_above_tolerance".into(), total as f64);
    for (kind, n) in counterexamples {
        tr.extras.insert(format!("discrepancies_{kind}"), n as f64);
    }
    tr.finish()
}

/// With a dependent column appended (duplicate, zero, or sum of two) and
/// Ξ > 0, pseudo-inverse LSTD gives the values of LSTD on the reduced basis.
pub fn check_pinv_value_equivalence(family: &InstanceFamily, count: usize) -> CheckReport {
    let mut tr = Tracker::new("pinv_value_equivalence", 1e-8);
    for i in 0..count {
        tr.run(i, |_| {
            let mut inst = family.instance(i, InstanceClass::Random)?;
            let k0 = inst.fmap.dim();
            if k0 > 3 {
                inst = inst.with_features(inst.phi().columns(0, 3).into_owned())?;
            }
            let phi0 = inst.phi().clone();
            let k0 = phi0.ncols();
            let extra = match (i % 3, k0) {
                (0, _) => phi0.column(0).into_owned(),
                (1, _) => Vector::zeros(phi0.nrows()),
                (_, 1) => phi0.column(0) * 2.0,
                _ => phi0.column(0) + phi0.column(1),
            };
            let mut phi = phi0.clone().insert_column(k0, 0.0);
            phi.set_column(k0, &extra);
            let reduced = &phi0 * lstd_design(&inst.mrp, &inst.fmap, &inst.xi)?.w;
            let big = inst.with_features(phi.clone())?;
            let pinv = &phi * lstd_pinv_design(&big.mrp, &big.fmap, &big.xi)?.w;
            Ok((rel(max_abs(&(pinv - &reduced)), max_abs(&reduced)), doc(&big)))
        });
    }
    tr.finish()
}

/// With tabular features every LSTD route recovers the exact value.
pub fn check_tabular_exactness(family: &InstanceFamily, count: usize) -> CheckReport {
    let mut tr = Tracker::new("tabular_exactness", 1e-8);
    for i in 0..count {
        tr.run(i, |_| {
            let inst = family.instance(i, InstanceClass::Tabular)?;
            let v = exact_value(&inst.mrp)?;
            let scale = max_abs(&v).max(1.0);
            let (mrp, fmap, xi) = (&inst.mrp, &inst.fmap, &inst.xi);
            let opts = TdOptions { tol: 1e-10 * scale, max_iters: 50_000_000, ..Default::default() };
            let candidates = [
                lstd_design(mrp, fmap, xi)?.w,
                brm_design(mrp, fmap, xi)?.w,
                lds_model(mrp, fmap, xi)?.estimate.w,
                td_iterate_design(mrp, fmap, xi, &opts)?.estimate.w,
                quadratic_form_k(mrp, fmap, xi, QuadraticFormVariant::Projected)?.estimate.w,
            ];
            let dev = candidates.iter().map(|w| max_abs(&(w - &v))).fold(0.0, f64::max);
            Ok((dev / scale, doc(&inst)))
        });
    }
    tr.finish()
}

/// LSTD, the LDS value, both quadratic-form minimizers and expected TD
/// coincide (compared as value vectors).
pub fn check_design_agreement(family: &InstanceFamily, count: usize) -> CheckReport {
    let mut tr = Tracker::new("design_agreement", 1e-8);
    for i in 0..count {
        tr.run(i, |_| {
            let inst = family.instance(i, mixed_class(i))?;
            let (mrp, fmap, xi) = (&inst.mrp, &inst.fmap, &inst.xi);
            let phi = fmap.phi();
            let w = lstd_design(mrp, fmap, xi)?.w;
            let values = phi * &w;
            let scale = max_abs(&values).max(1.0);
            let opts = TdOptions { tol: 1e-10 * max_abs(&w).max(1.0), max_iters: 50_000_000, ..Default::default() };
            let others = [
                lds_model(mrp, fmap, xi)?.estimate.w,
                quadratic_form_k(mrp, fmap, xi, QuadraticFormVariant::Projected)?.estimate.w,
                quadratic_form_k(mrp, fmap, xi, QuadraticFormVariant::Original)?.estimate.w,
                td_iterate_design(mrp, fmap, xi, &opts)?.estimate.w,
            ];
            let dev = others.iter().map(|o| max_abs(&(phi * o - &values))).fold(0.0, f64::max);
            Ok((dev / scale, doc(&inst)))
        });
    }
    tr.finish()
}

/// Sample LSTD and the sample LDS model give the same values on every
/// trajectory.
pub fn check_sample_agreement(family: &InstanceFamily, count: usize) -> CheckReport {
    let mut tr = Tracker::new("sample_agreement", 1e-9);
    for i in 0..count {
        tr.run(i, |_| {
            let inst = family.instance(i, mixed_class(i))?;
            let traj = sample_trajectory(&inst.mrp, &inst.fmap, 1000, family.sample_seed(i), false)?;
            let gamma = inst.mrp.discount();
            let a = &traj.features * lstd_sample(&traj, gamma)?.w;
            let b = &traj.features * lds_sample(&traj, gamma)?.estimate.w;
            Ok((rel(max_abs(&(a - &b)), max_abs(&b)), doc(&inst)))
        });
    }
    tr.finish()
}
