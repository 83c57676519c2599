//! The verification suite: every acceptance criterion as a runnable check
//! with pinned tolerances, shared by the `acceptance` test target and the
//! `verify` subcommand.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::time::Instant;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::density::{pure_density, trace_by_quadrature, DensityObject};
use crate::error::{Result, TomoError};
use crate::io::Meta;
use crate::evolution::{
    boltzmann_consistency, classical_to_tomogram, evolve_tomogram, tomogram_moment, ClassicalDistribution,
    EvolvedTomogram, QuadraticFlow,
};
use crate::hermite::ProductState;
use crate::permutation::{apply_group_element, project, symmetrize_n, KleinTag, SymmetryClass};
use crate::quadrature::{QuadratureSpec, Rule};
use crate::symmetrized::{
    analytic_rho01, analytic_w01, route_a_batch, route_a_tomogram, route_b_batch, FormMode, RouteAOptions,
};
use crate::tomogram::{forward_tomogram, fock_tomogram, inverse_density_batch, TomogramObject, TomogramPoint};

pub const DEFAULT_SEED: u64 = 20_260_514;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
}

/// One measured quantity against its bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub label: String,
    pub measured: f64,
    pub bound: f64,
    pub relation: Relation,
    pub passed: bool,
}

impl Check {
    pub fn at_most(label: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self { label: label.into(), measured, bound, relation: Relation::AtMost, passed: measured <= bound }
    }

    pub fn at_least(label: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self { label: label.into(), measured, bound, relation: Relation::AtLeast, passed: measured >= bound }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: &'static str,
    pub group: &'static str,
    pub title: &'static str,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// Reported values that are not asserted (normalization constants).
    pub constants: Vec<(String, f64)>,
    pub error: Option<String>,
    pub seconds: f64,
}

impl CriterionOutcome {
    /// The check furthest from its bound (relative), or the first failing one.
    pub fn worst(&self) -> Option<&Check> {
        let score = |c: &Check| {
            let scale = c.bound.abs().max(1e-300);
            match c.relation {
                Relation::AtMost => (c.measured - c.bound) / scale,
                Relation::AtLeast => (c.bound - c.measured) / scale,
            }
        };
        self.checks.iter().max_by(|a, b| score(a).partial_cmp(&score(b)).unwrap_or(std::cmp::Ordering::Equal))
    }

    /// `PASS 4 group-law ...` summary line.
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let mut s = format!("{verdict} {:<3} {:<16} {}", self.id, self.group, self.title);
        if let Some(e) = &self.error {
            s.push_str(&format!(" | error: {e}"));
        } else if let Some(w) = self.worst() {
            let rel = if w.relation == Relation::AtMost { "<=" } else { ">=" };
            s.push_str(&format!(" | worst {}: {:.3e} {rel} {:.1e}", w.label, w.measured, w.bound));
        }
        for (k, v) in &self.constants {
            s.push_str(&format!(" | {k} = {v:.10}"));
        }
        s.push_str(&format!(" | {:.2}s", self.seconds));
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub criteria: Vec<CriterionOutcome>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    /// `{meta, criteria}` document.
    pub fn to_json(&self, meta: &Meta) -> Result<String> {
        #[derive(Serialize)]
        struct Doc<'a> {
            meta: &'a Meta,
            all_passed: bool,
            criteria: &'a [CriterionOutcome],
        }
        let mut s = serde_json::to_string_pretty(&Doc { meta, all_passed: self.all_passed(), criteria: &self.criteria })?;
        s.push('\n');
        Ok(s)
    }

    /// One row per check under a `# key: value` header.
    pub fn to_csv(&self, meta: &Meta) -> Result<String> {
        let mut out = String::new();
        for (k, v) in meta.iter() {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| TomoError::Parse(e.to_string());
        w.write_record(["criterion", "group", "criterion_passed", "check", "relation", "measured", "bound", "passed"])
            .map_err(err)?;
        for c in &self.criteria {
            if let Some(e) = &c.error {
                w.write_record([c.id, c.group, "false", e.as_str(), "", "", "", "false"]).map_err(err)?;
            }
            for k in &c.checks {
                let rel = if k.relation == Relation::AtMost { "<=" } else { ">=" };
                w.write_record([
                    c.id,
                    c.group,
                    &c.passed.to_string(),
                    &k.label,
                    rel,
                    &format!("{:?}", k.measured),
                    &format!("{:?}", k.bound),
                    &k.passed.to_string(),
                ])
                .map_err(err)?;
            }
            for (name, v) in &c.constants {
                w.write_record([c.id, c.group, &c.passed.to_string(), name, "=", &format!("{v:?}"), "", ""]).map_err(err)?;
            }
        }
        let body = w.into_inner().map_err(|e| TomoError::Parse(e.to_string()))?;
        out.push_str(&String::from_utf8_lossy(&body));
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub seed: u64,
    pub quadrature: QuadratureSpec,
    /// Criterion id (`9a`, `9`) or group name (`group-law`); `None` runs all.
    pub filter: Option<String>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: DEFAULT_SEED, quadrature: QuadratureSpec::default(), filter: None }
    }
}

struct Measured {
    checks: Vec<Check>,
    constants: Vec<(String, f64)>,
}

impl Measured {
    fn new(checks: Vec<Check>) -> Self {
        Self { checks, constants: Vec::new() }
    }
}

struct Ctx<'a> {
    seed: u64,
    q: &'a QuadratureSpec,
}

impl Ctx<'_> {
    /// Independent stream per criterion, so filtering does not move probes.
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }
}

type Runner = fn(&Ctx) -> Result<Measured>;

pub struct Criterion {
    pub id: &'static str,
    pub group: &'static str,
    pub title: &'static str,
    run: Runner,
}

pub const CRITERIA: &[Criterion] = &[
    Criterion { id: "1", group: "fock-point", title: "w00 at the origin of two unit frames", run: c1_fock_point },
    Criterion { id: "2", group: "forward", title: "forward quadrature against closed-form Fock tomograms", run: c2_forward },
    Criterion { id: "3", group: "transform-pair", title: "inverse transform of the Fock tomograms reproduces rho", run: c3_transform_pair },
    Criterion { id: "4", group: "group-law", title: "16 compositions of the Klein group", run: c4_group_law },
    Criterion { id: "5", group: "projectors", title: "projector completeness and algebra", run: c5_projectors },
    Criterion { id: "6", group: "pauli", title: "antisymmetrized repeated orbitals vanish", run: c6_pauli },
    Criterion { id: "7", group: "traces", title: "symmetrized traces 1/2 and 1/6", run: c7_traces },
    Criterion { id: "8", group: "route-agreement", title: "routes A and B on phi0 x phi1", run: c8_route_agreement },
    Criterion { id: "9a", group: "closed-form", title: "printed rho01 is proportional to the projector route", run: c9a_rho01 },
    Criterion { id: "9b", group: "closed-form", title: "printed w01 is proportional to route A", run: c9b_w01 },
    Criterion { id: "10", group: "interference", title: "direct and interference parts of w01", run: c10_interference },
    Criterion { id: "11", group: "evolution", title: "oscillator stationarity, moments, Boltzmann consistency", run: c11_evolution },
    Criterion { id: "12", group: "properties", title: "normalization, positivity, homogeneity, swap covariance", run: c12_properties },
];

impl Criterion {
    pub fn matches(&self, filter: &str) -> bool {
        let f = filter.trim();
        f.is_empty()
            || f == "all"
            || f.split(',').map(str::trim).any(|f| {
                f == self.id || f == self.group || (self.id.len() > 1 && self.id.trim_end_matches(char::is_alphabetic) == f)
            })
    }
}

/// Runs one criterion by id.
pub fn run_criterion(id: &str, opts: &VerifyOptions) -> Option<CriterionOutcome> {
    CRITERIA.iter().find(|c| c.id == id).map(|c| execute(c, opts))
}

fn execute(c: &Criterion, opts: &VerifyOptions) -> CriterionOutcome {
    let ctx = Ctx { seed: opts.seed, q: &opts.quadrature };
    let start = Instant::now();
    let res = (c.run)(&ctx);
    let seconds = start.elapsed().as_secs_f64();
    match res {
        Ok(m) => CriterionOutcome {
            id: c.id,
            group: c.group,
            title: c.title,
            passed: !m.checks.is_empty() && m.checks.iter().all(|k| k.passed),
            checks: m.checks,
            constants: m.constants,
            error: None,
            seconds,
        },
        Err(e) => CriterionOutcome {
            id: c.id,
            group: c.group,
            title: c.title,
            passed: false,
            checks: Vec::new(),
            constants: Vec::new(),
            error: Some(e.to_string()),
            seconds,
        },
    }
}

/// Runs every criterion selected by the filter, in order.
pub fn run_verification(opts: &VerifyOptions) -> VerifyReport {
    let criteria = CRITERIA
        .iter()
        .filter(|c| opts.filter.as_deref().is_none_or(|f| c.matches(f)))
        .map(|c| execute(c, opts))
        .collect();
    VerifyReport { seed: opts.seed, criteria }
}

fn state(modes: &[usize]) -> Result<ProductState<f64>> {
    ProductState::fock(modes)
}

fn c(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

fn max_abs(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, |a, b| a.max(b.abs()))
}

fn rel_spread(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean.abs()
}

fn random_pair_point(rng: &mut ChaCha8Rng, nu_min: f64) -> Result<TomogramPoint<f64>> {
    let mut nu = || {
        let v: f64 = rng.gen_range(nu_min..2.0);
        v
    };
    let (n1, n2) = (nu(), nu());
    let s1 = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let s2 = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    TomogramPoint::pair(
        [rng.gen_range(-2.5..2.5), rng.gen_range(-2.5..2.5)],
        [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
        [s1 * n1, s2 * n2],
    )
}

fn random_coords(rng: &mut ChaCha8Rng, n: usize, half: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-half..half)).collect()
}

/// A two-particle density with no exchange symmetry and complex coherences.
fn asymmetric_pair_density() -> Result<DensityObject<f64>> {
    let s = ProductState::superposition(vec![
        (c(1.0, 0.0), vec![0, 1]),
        (c(0.5, 0.3), vec![2, 0]),
        (c(0.2, -0.1), vec![1, 1]),
    ])?
    .normalized()?;
    Ok(pure_density(&s))
}

fn c1_fock_point(ctx: &Ctx) -> Result<Measured> {
    let p = TomogramPoint::pair([0.0, 0.0], [1.0, 1.0], [0.0, 0.0])?;
    let analytic = fock_tomogram(0, 0, &p)?;
    let numeric = forward_tomogram(&pure_density(&state(&[0, 0])?), &p, ctx.q)?;
    Ok(Measured::new(vec![
        Check::at_most("|analytic - 1/pi|", (analytic - 1.0 / PI).abs(), 1e-12),
        Check::at_most("|forward - 1/pi|", (numeric - 1.0 / PI).abs(), 1e-6),
    ]))
}

fn c2_forward(ctx: &Ctx) -> Result<Measured> {
    use rayon::prelude::*;
    let start = Instant::now();
    let mut rng = ctx.rng(2);
    let points: Vec<TomogramPoint<f64>> = (0..200).map(|_| random_pair_point(&mut rng, 0.1)).collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for n in 0..=3 {
        for m in 0..=3 {
            let d = pure_density(&state(&[n, m])?);
            let errs: Vec<f64> = points
                .par_iter()
                .map(|p| -> Result<f64> {
                    let a = fock_tomogram(n, m, p)?;
                    let f = forward_tomogram(&d, p, ctx.q)?;
                    Ok((f - a).abs() / a.abs().max(1e-6))
                })
                .collect::<Result<_>>()?;
            worst = worst.max(errs.into_iter().fold(0.0, f64::max));
        }
    }
    Ok(Measured::new(vec![
        Check::at_most("relative error (floor 1e-6)", worst, 1e-6),
        Check::at_most("runtime seconds", start.elapsed().as_secs_f64(), 60.0),
    ]))
}

fn lattice(n: usize, values: &[f64]) -> Vec<(Vec<f64>, Vec<f64>)> {
    let total = values.len().pow(2 * n as u32);
    (0..total)
        .map(|mut k| {
            let mut c = vec![0.0; 2 * n];
            for slot in c.iter_mut() {
                *slot = values[k % values.len()];
                k /= values.len();
            }
            (c[..n].to_vec(), c[n..].to_vec())
        })
        .collect()
}

fn c3_transform_pair(ctx: &Ctx) -> Result<Measured> {
    let mut checks = Vec::new();
    let mut wide = ctx.q.clone();
    wide.mu_window *= 2.0;
    wide.mu_nodes *= 2;
    for (label, modes, values) in [
        ("phi0", vec![0usize], &[-2.0, -1.0, -0.4, 0.0, 0.7, 1.5][..]),
        ("phi1", vec![1], &[-2.0, -1.0, -0.4, 0.0, 0.7, 1.5][..]),
        ("phi0 x phi1", vec![0, 1], &[-1.2, 0.0, 0.7][..]),
    ] {
        let s = state(&modes)?;
        let d = pure_density(&s);
        let w = TomogramObject::from_state(&s)?;
        let pairs = lattice(modes.len(), values);
        let report = inverse_density_batch(&w, &pairs, ctx.q)?;
        let err = pairs
            .iter()
            .zip(&report.values)
            .map(|((x, xp), v)| d.evaluate(x, xp).map(|e| (e - v).norm()))
            .collect::<Result<Vec<_>>>()?;
        checks.push(Check::at_most(format!("{label} max |rho - rho_rec|"), max_abs(err), 1e-4));
        checks.push(Check::at_most(format!("{label} Hermiticity residual"), report.hermiticity_residual, 1e-6));
        let sub: Vec<_> = pairs.iter().step_by(7).cloned().collect();
        let a = inverse_density_batch(&w, &sub, ctx.q)?;
        let b = inverse_density_batch(&w, &sub, &wide)?;
        let shift = max_abs(a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm()));
        checks.push(Check::at_most(format!("{label} frame-window doubling shift"), shift, 1e-4));
    }
    Ok(Measured::new(checks))
}

/// Products of (I, P12, P12', Pi12) as printed in the multiplication table.
const KLEIN_TABLE: [[&str; 4]; 4] = [
    ["I", "P12", "P12prime", "Pi12"],
    ["P12", "I", "Pi12", "P12prime"],
    ["P12prime", "Pi12", "I", "P12"],
    ["Pi12", "P12prime", "P12", "I"],
];

fn c4_group_law(ctx: &Ctx) -> Result<Measured> {
    let d = asymmetric_pair_density()?;
    let mut rng = ctx.rng(4);
    let pts: Vec<(Vec<f64>, Vec<f64>)> =
        (0..50).map(|_| (random_coords(&mut rng, 2, 2.0), random_coords(&mut rng, 2, 2.0))).collect();
    let mut table_mismatch = 0.0;
    let mut worst = 0.0f64;
    for (i, g) in KleinTag::ALL.iter().enumerate() {
        for (j, h) in KleinTag::ALL.iter().enumerate() {
            let expected = KleinTag::ALL.iter().find(|t| t.name() == KLEIN_TABLE[i][j]).copied();
            let composed = g.element().mul(&h.element()).tag();
            if expected.is_none() || composed != expected || g.mul(*h) != expected.unwrap_or(KleinTag::I) {
                table_mismatch += 1.0;
            }
            let Some(e) = expected else { continue };
            let lhs = apply_group_element(&g.element(), &apply_group_element(&h.element(), &d)?)?;
            let rhs = apply_group_element(&e.element(), &d)?;
            for (x, xp) in &pts {
                worst = worst.max((lhs.evaluate(x, xp)? - rhs.evaluate(x, xp)?).norm());
            }
        }
    }
    Ok(Measured::new(vec![
        Check::at_most("table mismatches", table_mismatch, 0.0),
        Check::at_most("max |g(h rho) - (gh) rho|", worst, 1e-12),
    ]))
}

fn c5_projectors(ctx: &Ctx) -> Result<Measured> {
    let d = asymmetric_pair_density()?;
    let mut rng = ctx.rng(5);
    let pts: Vec<(Vec<f64>, Vec<f64>)> =
        (0..50).map(|_| (random_coords(&mut rng, 2, 2.0), random_coords(&mut rng, 2, 2.0))).collect();
    let proj: Vec<DensityObject<f64>> = SymmetryClass::ALL.iter().map(|&k| project(k, &d)).collect::<Result<_>>()?;
    let (mut complete, mut idem, mut ortho, mut equi) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let p12 = KleinTag::P12.element();
    let twice: Vec<Vec<DensityObject<f64>>> = proj
        .iter()
        .map(|r| SymmetryClass::ALL.iter().map(|&k| project(k, r)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let swapped = [apply_group_element(&p12, &proj[0])?, apply_group_element(&p12, &proj[1])?];
    for (x, xp) in &pts {
        let base = d.evaluate(x, xp)?;
        let vals: Vec<Complex<f64>> = proj.iter().map(|r| r.evaluate(x, xp)).collect::<Result<_>>()?;
        complete = complete.max((vals.iter().sum::<Complex<f64>>() - base).norm());
        for (i, row) in twice.iter().enumerate() {
            for (j, r) in row.iter().enumerate() {
                let v = r.evaluate(x, xp)?;
                if i == j {
                    idem = idem.max((v - vals[i]).norm());
                } else {
                    ortho = ortho.max(v.norm());
                }
            }
        }
        equi = equi.max((swapped[0].evaluate(x, xp)? - vals[0]).norm());
        equi = equi.max((swapped[1].evaluate(x, xp)? + vals[1]).norm());
    }
    // N-particle symmetrizer idempotence for N = 2, 3.
    let d3 = pure_density(
        &ProductState::superposition(vec![(c(1.0, 0.0), vec![0, 1, 2]), (c(0.3, 0.4), vec![2, 2, 0])])?.normalized()?,
    );
    let mut sym_idem = 0.0f64;
    for (dd, n) in [(&d, 2usize), (&d3, 3)] {
        for sign in [1, -1] {
            let once = symmetrize_n(sign, dd, n)?;
            let again = symmetrize_n(sign, &once, n)?;
            for _ in 0..20 {
                let (x, xp) = (random_coords(&mut rng, n, 2.0), random_coords(&mut rng, n, 2.0));
                sym_idem = sym_idem.max((again.evaluate(&x, &xp)? - once.evaluate(&x, &xp)?).norm());
            }
        }
    }
    Ok(Measured::new(vec![
        Check::at_most("completeness", complete, 1e-12),
        Check::at_most("idempotence", idem, 1e-12),
        Check::at_most("orthogonality", ortho, 1e-12),
        Check::at_most("P12 character rows", equi, 1e-12),
        Check::at_most("symmetrize_n idempotence", sym_idem, 1e-12),
    ]))
}

fn c6_pauli(ctx: &Ctx) -> Result<Measured> {
    let mut rng = ctx.rng(6);
    let mut dens = 0.0f64;
    for modes in [&[0usize, 0][..], &[1, 1], &[2, 2], &[0, 1, 0], &[2, 2, 1]] {
        let n = modes.len();
        let s = symmetrize_n(-1, &pure_density(&state(modes)?), n)?;
        for _ in 0..50 {
            let (x, xp) = (random_coords(&mut rng, n, 2.5), random_coords(&mut rng, n, 2.5));
            dens = dens.max(s.evaluate(&x, &xp)?.norm());
        }
    }
    let pts = vec![
        TomogramPoint::pair([0.3, -0.7], [1.0, 0.5], [0.5, 1.0])?,
        TomogramPoint::pair([1.1, 0.2], [0.8, -0.3], [0.2, 1.1])?,
        TomogramPoint::pair([-0.5, 0.9], [1.2, 0.4], [-0.6, 0.9])?,
    ];
    let mut tomo = 0.0f64;
    for modes in [[0usize, 0], [1, 1]] {
        let w = TomogramObject::from_state(&state(&modes)?)?;
        let (r, _) = route_b_batch(&w, -1, &pts, ctx.q)?;
        tomo = tomo.max(max_abs(r.values));
    }
    Ok(Measured::new(vec![
        Check::at_most("max |rho_-| (densities)", dens, 1e-12),
        Check::at_most("max |w_-| (route B)", tomo, 1e-3),
    ]))
}

fn c7_traces(ctx: &Ctx) -> Result<Measured> {
    let d01 = pure_density(&state(&[0, 1])?);
    let d012 = pure_density(&state(&[0, 1, 2])?);
    let mut checks = Vec::new();
    for (label, r, expected) in [
        ("tr rho_+ (phi0 x phi1)", project(SymmetryClass::Plus, &d01)?, 0.5),
        ("tr rho_- (phi0 x phi1)", project(SymmetryClass::Minus, &d01)?, 0.5),
        ("tr rho_- (phi0 x phi1 x phi2)", symmetrize_n(-1, &d012, 3)?, 1.0 / 6.0),
    ] {
        let exact = r.trace()?;
        let quad = trace_by_quadrature(&r, ctx.q.gh_nodes)?;
        checks.push(Check::at_most(format!("|{label} - {expected:.6}|"), (exact - expected).norm(), 1e-6));
        checks.push(Check::at_most(format!("|{label} - {expected:.6}| (quadrature)"), (quad - expected).norm(), 1e-6));
    }
    Ok(Measured::new(checks))
}

/// Frames with |mu2 nu1 - mu1 nu2| >= 0.1 and both nu away from zero.
fn route_frames(rng: &mut ChaCha8Rng, count: usize) -> Vec<([f64; 2], [f64; 2])> {
    let mut out = Vec::new();
    let draw = |rng: &mut ChaCha8Rng| {
        let v: f64 = rng.gen_range(0.3..1.5);
        if rng.gen_bool(0.5) {
            v
        } else {
            -v
        }
    };
    while out.len() < count {
        let mu = [draw(rng), draw(rng)];
        let nu = [draw(rng), draw(rng)];
        if (mu[1] * nu[0] - mu[0] * nu[1]).abs() >= 0.1 {
            out.push((mu, nu));
        }
    }
    out
}

fn c8_route_agreement(ctx: &Ctx) -> Result<Measured> {
    let mut rng = ctx.rng(8);
    let s = state(&[0, 1])?;
    let w = TomogramObject::from_state(&s)?;
    let d = pure_density(&s);
    let pts: Vec<TomogramPoint<f64>> = route_frames(&mut rng, 10)
        .into_iter()
        .map(|(mu, nu)| {
            let r = [mu[0].hypot(nu[0]), mu[1].hypot(nu[1])];
            TomogramPoint::pair([rng.gen_range(-1.5..1.5) * r[0], rng.gen_range(-1.5..1.5) * r[1]], mu, nu)
        })
        .collect::<Result<_>>()?;
    let mut checks = Vec::new();
    for (class, sign) in [(SymmetryClass::Plus, 1), (SymmetryClass::Minus, -1)] {
        let a = route_a_batch(&d, class, &pts, ctx.q, RouteAOptions { closed_form: true, ..Default::default() })?;
        let (b, _) = route_b_batch(&w, sign, &pts, ctx.q)?;
        let rel = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs() / x.abs().max(1e-6));
        checks.push(Check::at_most(format!("max relative difference ({class})"), max_abs(rel), 1e-3));
    }
    Ok(Measured::new(checks))
}

fn c9a_rho01(ctx: &Ctx) -> Result<Measured> {
    let mut rng = ctx.rng(9);
    let d = pure_density(&state(&[0, 1])?);
    let mut m = Measured::new(Vec::new());
    for (class, sign) in [(SymmetryClass::Plus, 1), (SymmetryClass::Minus, -1)] {
        let r = project(class, &d)?;
        let mut ratios = Vec::new();
        while ratios.len() < 50 {
            let (x, xp) = (random_coords(&mut rng, 2, 1.5), random_coords(&mut rng, 2, 1.5));
            let den = r.evaluate(&x, &xp)?.re;
            if den.abs() < 1e-6 {
                continue;
            }
            ratios.push(analytic_rho01(sign, [x[0], x[1]], [xp[0], xp[1]], FormMode::Printed) / den);
        }
        m.checks.push(Check::at_most(format!("ratio spread ({class})"), rel_spread(&ratios), 1e-6));
        m.constants.push((format!("rho01 printed / projector ({class})"), ratios.iter().sum::<f64>() / 50.0));
    }
    Ok(m)
}

fn c9b_w01(ctx: &Ctx) -> Result<Measured> {
    let mut rng = ctx.rng(10);
    let d = pure_density(&state(&[0, 1])?);
    let mut m = Measured::new(Vec::new());
    for (class, sign) in [(SymmetryClass::Plus, 1), (SymmetryClass::Minus, -1)] {
        let w = route_a_tomogram(&d, class, ctx.q, RouteAOptions { closed_form: true, ..Default::default() })?;
        let mut ratios = Vec::new();
        let mut corrected = 0.0f64;
        while ratios.len() < 50 {
            let mut p = random_pair_point(&mut rng, 0.1)?;
            p.xi = vec![rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
            let den = w.eval(&p)?;
            if den.abs() < 1e-6 {
                continue;
            }
            ratios.push(analytic_w01(sign, &p, FormMode::Printed)? / den);
            corrected = corrected.max((analytic_w01(sign, &p, FormMode::Corrected)? / den - 1.0).abs());
        }
        m.checks.push(Check::at_most(format!("ratio spread ({class})"), rel_spread(&ratios), 1e-6));
        m.constants.push((format!("w01 printed / route A mean ratio ({class})"), ratios.iter().sum::<f64>() / 50.0));
        m.constants.push((format!("w01 corrected form max |ratio - 1| ({class})"), corrected));
    }
    Ok(m)
}

fn gl_square(q: &QuadratureSpec, r: [f64; 2]) -> (Rule<f64>, Rule<f64>) {
    let panels = (2.0 * q.trunc_l).ceil() as usize;
    (
        Rule::composite_legendre(-q.trunc_l * r[0], q.trunc_l * r[0], panels),
        Rule::composite_legendre(-q.trunc_l * r[1], q.trunc_l * r[1], panels),
    )
}

fn c10_interference(ctx: &Ctx) -> Result<Measured> {
    let d = pure_density(&state(&[0, 1])?);
    let frames: [([f64; 2], [f64; 2]); 3] = [([1.0, 0.5], [0.5, 1.0]), ([0.8, -0.3], [0.2, 1.1]), ([1.0, 0.0], [0.0, 1.0])];
    let (mut min_direct, mut weight_err, mut inter_int, mut ortho) = (f64::INFINITY, 0.0f64, 0.0f64, 0.0f64);
    for (class, sign) in [(SymmetryClass::Plus, 1), (SymmetryClass::Minus, -1)] {
        let _ = sign;
        for (fi, (mu, nu)) in frames.iter().enumerate() {
            let r = [mu[0].hypot(nu[0]), mu[1].hypot(nu[1])];
            let (g1, g2) = gl_square(ctx.q, r);
            let mut pts = Vec::with_capacity(g1.len() * g2.len());
            let mut wts = Vec::with_capacity(pts.capacity());
            for (x1, w1) in g1.iter() {
                for (x2, w2) in g2.iter() {
                    pts.push(TomogramPoint::pair([x1, x2], *mu, *nu)?);
                    wts.push(w1 * w2);
                }
            }
            let res = route_a_batch(&d, class, &pts, ctx.q, RouteAOptions { closed_form: true, ..Default::default() })?;
            min_direct = res.direct.iter().fold(min_direct, |a, &b| a.min(b));
            let direct: f64 = res.direct.iter().zip(&wts).map(|(v, w)| v * w).sum();
            let inter: f64 = res.interference.iter().zip(&wts).map(|(v, w)| v * w).sum();
            weight_err = weight_err.max((direct - 0.5).abs());
            inter_int = inter_int.max(inter.abs());
            if fi == 2 {
                ortho = ortho.max(max_abs(res.interference.iter().copied()));
            }
        }
    }
    Ok(Measured::new(vec![
        Check::at_least("min direct part", min_direct, -1e-12),
        Check::at_most("|integral of direct part - 1/2|", weight_err, 1e-6),
        Check::at_most("|integral of interference part|", inter_int, 2e-3),
        Check::at_most("max |interference| on mu1 mu2 + nu1 nu2 = 0", ortho, 1e-12),
    ]))
}

fn c11_evolution(ctx: &Ctx) -> Result<Measured> {
    let q = ctx.q;
    let osc = QuadraticFlow::oscillator();
    let mut rng = ctx.rng(11);
    let mut stationary = 0.0f64;
    let pts: Vec<TomogramPoint<f64>> = (0..20).map(|_| random_pair_point(&mut rng, 0.1)).collect::<Result<_>>()?;
    for n in 0..=3 {
        for m in 0..=3 {
            let w = TomogramObject::from_state(&state(&[n, m])?)?;
            for t in [0.3, 1.0, 2.5] {
                for p in &pts {
                    stationary = stationary.max((evolve_tomogram(&w, &osc, t, p)? - w.eval(p)?).abs());
                }
            }
        }
    }
    let sup = ProductState::superposition(vec![(c(FRAC_1_SQRT_2, 0.0), vec![0]), (c(FRAC_1_SQRT_2, 0.0), vec![1])])?;
    let w = TomogramObject::from_state(&sup)?;
    let mut moment = 0.0f64;
    for t in [0.0, PI / 4.0, PI / 2.0, 0.3, 1.0, 2.5] {
        let ev = EvolvedTomogram::new(&w, osc, t);
        moment = moment.max((tomogram_moment(&ev, 1.0, 0.0, 1, q)? - t.cos() * FRAC_1_SQRT_2).abs());
    }

    let gauss = |cq: f64, cp: f64| {
        move |z: &[f64]| (-(z[0] - cq).powi(2) - (z[1] - cp).powi(2)).exp() / PI
    };
    let sym = ClassicalDistribution::new(1, gauss(0.0, 0.0), q)?;
    let disp = ClassicalDistribution::new(1, gauss(1.0, 0.0), q)?;
    let free = QuadraticFlow::free_particle();
    let probes: Vec<TomogramPoint<f64>> = (0..20)
        .map(|_| {
            let th: f64 = rng.gen_range(0.0..2.0 * PI);
            let s: f64 = rng.gen_range(0.5..2.0);
            TomogramPoint::single(rng.gen_range(-2.0..2.0), s * th.cos(), s * th.sin())
        })
        .collect::<Result<_>>()?;
    let b_sym = boltzmann_consistency(&sym, &osc, 1.0, &probes, q)?;
    let b_osc = boltzmann_consistency(&disp, &osc, PI / 2.0, &probes, q)?;
    let b_free = boltzmann_consistency(&disp, &free, 1.0, &probes, q)?;
    // Explicit Gaussian pushforwards: mean (1,0) -> (cos t, -sin t) under rotation,
    // Var X = (mu^2 (1 + t^2) + 2 mu nu t + nu^2)/2 under the unit shear.
    let mut push = 0.0f64;
    for p in &probes {
        let (x, mu, nu) = p.particle(0);
        let t = PI / 2.0;
        let mean = mu * t.cos() - nu * t.sin();
        let s2 = mu * mu + nu * nu;
        let exact = (-(x - mean).powi(2) / s2).exp() / (PI * s2).sqrt();
        push = push.max((evolve_tomogram(&crate::evolution::ClassicalTomogram { f: disp.clone(), quadrature: q.clone() }, &osc, t, p)? - exact).abs());
        let var = (mu * mu * 2.0 + 2.0 * mu * nu + nu * nu) / 2.0;
        let exact = (-(x - mu).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
        let moved = disp.pushed_forward(&free, 1.0)?;
        push = push.max((classical_to_tomogram(&moved, p, q)? - exact).abs());
    }
    Ok(Measured::new(vec![
        Check::at_most("w_nm stationarity", stationary, 1e-10),
        Check::at_most("|<xi>(t) - cos(t)/sqrt2|", moment, 1e-5),
        Check::at_most("Boltzmann deviation, symmetric Gaussian", b_sym, 1e-6),
        Check::at_most("Boltzmann deviation, displaced Gaussian, oscillator", b_osc, 1e-6),
        Check::at_most("Boltzmann deviation, displaced Gaussian, free particle", b_free, 1e-6),
        Check::at_most("Gaussian pushforward against closed form", push, 1e-6),
    ]))
}

/// The state corpus of the property suite: analytic tomograms of unit trace.
pub fn property_corpus(q: &QuadratureSpec) -> Result<Vec<(String, TomogramObject<f64>)>> {
    let mut out = Vec::new();
    let h = FRAC_1_SQRT_2;
    let states: Vec<(&str, ProductState<f64>)> = vec![
        ("phi0", state(&[0])?),
        ("phi1", state(&[1])?),
        ("phi3", state(&[3])?),
        ("(phi0+phi1)/sqrt2", ProductState::superposition(vec![(c(h, 0.0), vec![0]), (c(h, 0.0), vec![1])])?),
        ("(phi0+i phi2)/sqrt2", ProductState::superposition(vec![(c(h, 0.0), vec![0]), (c(0.0, h), vec![2])])?),
        ("phi0 x phi0", state(&[0, 0])?),
        ("phi0 x phi1", state(&[0, 1])?),
        ("phi1 x phi2", state(&[1, 2])?),
        (
            "entangled 01+12",
            ProductState::superposition(vec![(c(0.6, 0.0), vec![0, 1]), (c(0.0, 0.8), vec![1, 2])])?,
        ),
    ];
    for (name, s) in states {
        out.push((name.to_string(), TomogramObject::from_state(&s)?));
    }
    let opts = RouteAOptions { closed_form: true, renormalize: true };
    for (name, modes) in [("phi0 x phi1", [0usize, 1]), ("phi1 x phi2", [1, 2]), ("phi0 x phi0", [0, 0])] {
        let d = pure_density(&state(&modes)?);
        for class in [SymmetryClass::Plus, SymmetryClass::Minus] {
            if modes[0] == modes[1] && class == SymmetryClass::Minus {
                continue;
            }
            out.push((format!("{name} {class} (renormalized)"), route_a_tomogram(&d, class, q, opts)?));
        }
    }
    Ok(out)
}

fn c12_properties(ctx: &Ctx) -> Result<Measured> {
    let q = ctx.q;
    let mut rng = ctx.rng(12);
    let corpus = property_corpus(q)?;
    let (mut norm, mut min_w, mut homog, mut swap) = (0.0f64, f64::INFINITY, 0.0f64, 0.0f64);
    let panels = (2.0 * q.trunc_l).ceil() as usize;
    let rule = Rule::<f64>::composite_legendre(-q.trunc_l, q.trunc_l, panels);
    for (_, w) in &corpus {
        let n = w.particle_count();
        for _ in 0..2 {
            let th: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
            let mu: Vec<f64> = th.iter().map(|t| t.cos()).collect();
            let nu: Vec<f64> = th.iter().map(|t| t.sin()).collect();
            let mut total = 0.0;
            if n == 1 {
                for (x, wt) in rule.iter() {
                    let v = w.eval(&TomogramPoint::new(vec![x], mu.clone(), nu.clone())?)?;
                    min_w = min_w.min(v);
                    total += wt * v;
                }
            } else {
                for (x1, w1) in rule.iter() {
                    for (x2, w2) in rule.iter() {
                        let v = w.eval(&TomogramPoint::new(vec![x1, x2], mu.clone(), nu.clone())?)?;
                        min_w = min_w.min(v);
                        total += w1 * w2 * v;
                    }
                }
            }
            norm = norm.max((total - 1.0).abs());
        }
        for _ in 0..10 {
            let p = if n == 1 {
                TomogramPoint::single(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(0.1..2.0))?
            } else {
                random_pair_point(&mut rng, 0.1)?
            };
            let base = w.eval(&p)?;
            for lambda in [-2.0f64, -0.5, 0.5, 3.0] {
                // Scaling every particle's labels scales w by |λ|^-N.
                homog = homog.max((w.eval(&p.scaled(lambda))? * lambda.abs().powi(n as i32) - base).abs());
            }
            if n == 2 && corpus_is_symmetrized(w) {
                swap = swap.max((w.eval(&p.label_swapped())? - base).abs());
            }
        }
    }
    Ok(Measured::new(vec![
        Check::at_most("|integral of w - 1|", norm, 1e-6),
        Check::at_least("min w", min_w, -1e-9),
        Check::at_most("homogeneity", homog, 1e-9),
        Check::at_most("frame-swap covariance of symmetrized tomograms", swap, 1e-12),
    ]))
}

fn corpus_is_symmetrized(w: &TomogramObject<f64>) -> bool {
    // Exchange-symmetric backings contain every term together with its label swap.
    w.separable_terms().is_some_and(|terms| {
        terms.iter().all(|t| {
            let mut f = t.factors.clone();
            f.reverse();
            terms.iter().any(|u| u.factors == f && (u.coeff - t.coeff).norm() <= 1e-14)
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_selects_ids_and_groups() {
        let ids = |f: &str| CRITERIA.iter().filter(|c| c.matches(f)).map(|c| c.id).collect::<Vec<_>>();
        assert_eq!(ids("group-law"), vec!["4"]);
        assert_eq!(ids("9"), vec!["9a", "9b"]);
        assert_eq!(ids("1,7"), vec!["1", "7"]);
        assert_eq!(ids("all").len(), CRITERIA.len());
    }

    #[test]
    fn cheap_criteria_pass() {
        let opts = VerifyOptions { filter: Some("1,4,5,7".into()), ..Default::default() };
        let report = run_verification(&opts);
        assert_eq!(report.criteria.len(), 4);
        for c in &report.criteria {
            assert!(c.passed, "{}", c.line());
        }
    }
}
