use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use indexmap::IndexMap;

use symtomo::density::{pure_density, GridAxis};
use symtomo::evolution::{evolve_tomogram, QuadraticFlow};
use symtomo::hermite::ProductState;
use symtomo::io::{
    build_points, parse_frames, parse_state, parse_values, point_columns, point_row, sample_points, DensityGridFile,
    Format, Meta, RunConfig, TomogramTable,
};
use symtomo::permutation::SymmetryClass;
use symtomo::quadrature::QuadratureSpec;
use symtomo::symmetrized::{
    analytic_rho01, project_class, route_a_batch, route_a_tomogram, route_b_batch, FormMode, RouteAOptions,
};
use symtomo::tomogram::{forward_tomogram, inverse_density_batch, TomogramObject, TomogramPoint};
use symtomo::verify::{run_verification, VerifyOptions, DEFAULT_SEED};
use symtomo::TomoError;

/// Exit status: 0 success, 1 verification failure, 2 usage, 3 numeric.
const EXIT_VERIFY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "symtomo", version, about = "Symplectic tomograms of identical oscillator particles")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tabulate the tomogram of a product-state superposition.
    Eval(EvalArgs),
    /// Tabulate a symmetry-class tomogram with its direct/interference split.
    Symmetrize(SymArgs),
    /// Reconstruct the density matrix on a grid from the tomogram.
    Reconstruct(Common),
    /// Tabulate the tomogram evolved along classical characteristics.
    Evolve(EvolveArgs),
    /// Run the acceptance criteria.
    Verify(VerifyArgs),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// `c@n1,n2;c@...` with c = re or re:im, e.g. `0,1` or `0.7071@0;0.7071@1`.
    #[arg(long)]
    state: Option<String>,
    #[arg(long, value_enum)]
    class: Option<ClassArg>,
    #[arg(long, value_enum)]
    route: Option<RouteArg>,
    /// ξ grid (x grid for reconstruct): `lo:hi:count` or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// `mu,nu/mu,nu;...` per frame, or `theta:lo:hi:count`.
    #[arg(long, allow_hyphen_values = true)]
    frames: Option<String>,
    /// Times: `lo:hi:count` or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    time: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Flat TOML file with any of the above keys plus quadrature settings.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Forward quadrature of the density instead of the closed form.
    #[arg(long)]
    numeric: bool,
    /// Draw this many seeded random points instead of the grid.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct SymArgs {
    #[command(flatten)]
    common: Common,
    /// Rescale the projected density to unit trace.
    #[arg(long)]
    renormalize: bool,
}

#[derive(Args)]
struct EvolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "oscillator")]
    flow: FlowArg,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Criterion ids or group names, comma separated.
    #[arg(long)]
    filter: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    Plus,
    Minus,
    Rho1,
    Rho2,
}

#[derive(Clone, Copy, ValueEnum)]
enum RouteArg {
    A,
    B,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlowArg {
    Oscillator,
    Free,
}

struct Failure {
    code: u8,
    msg: String,
}

impl From<TomoError> for Failure {
    fn from(e: TomoError) -> Self {
        let code = match e {
            TomoError::Numeric { .. } | TomoError::DegenerateFrame { .. } | TomoError::CostExceeded(_) => EXIT_NUMERIC,
            _ => EXIT_USAGE,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, msg: msg.into() }
}

type CliResult<T> = Result<T, Failure>;

/// Flags merged over the config file.
struct Settings {
    cfg: RunConfig,
    out: Option<PathBuf>,
    format: Option<Format>,
}

impl Settings {
    fn resolve(c: &Common) -> CliResult<Self> {
        let mut cfg = match &c.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let set = |slot: &mut Option<String>, v: Option<String>| {
            if v.is_some() {
                *slot = v;
            }
        };
        set(&mut cfg.state, c.state.clone());
        set(&mut cfg.class, c.class.map(|k| class_name(k).to_string()));
        set(&mut cfg.route, c.route.map(|r| if matches!(r, RouteArg::A) { "a" } else { "b" }.to_string()));
        set(&mut cfg.grid, c.grid.clone());
        set(&mut cfg.frames, c.frames.clone());
        set(&mut cfg.time, c.time.clone());
        set(&mut cfg.format, c.format.map(|f| if matches!(f, FormatArg::Csv) { "csv" } else { "json" }.to_string()));
        if c.seed.is_some() {
            cfg.seed = c.seed;
        }
        let out = c.out.clone().or_else(|| cfg.out.as_ref().map(PathBuf::from));
        let format = cfg.format.as_deref().map(str::parse::<Format>).transpose()?;
        Ok(Self { cfg, out, format })
    }

    fn q(&self) -> &QuadratureSpec {
        &self.cfg.quadrature
    }

    fn state(&self) -> CliResult<(String, ProductState<f64>)> {
        let spec = self.cfg.state.clone().ok_or_else(|| usage("--state is required"))?;
        let s = parse_state(&spec)?;
        Ok((spec, s))
    }

    fn class(&self) -> CliResult<Option<SymmetryClass>> {
        self.cfg.class.as_deref().map(|c| c.parse::<SymmetryClass>().map_err(Failure::from)).transpose()
    }

    fn points(&self, particles: usize) -> CliResult<Vec<TomogramPoint<f64>>> {
        let xi = parse_values(self.cfg.grid.as_deref().unwrap_or("-2:2:5"))?;
        let frames = match self.cfg.frames.as_deref() {
            Some(f) => parse_frames(f, particles)?,
            None => vec![default_frame(particles)],
        };
        let times = parse_values(self.cfg.time.as_deref().unwrap_or("0"))?;
        Ok(build_points(particles, &xi, &frames, &times)?)
    }

    fn emit(&self, table: &TomogramTable) -> CliResult<()> {
        let format = self.format.unwrap_or_else(|| match &self.out {
            Some(p) if p.extension().is_some_and(|e| e == "json") => Format::Json,
            _ => Format::Csv,
        });
        match &self.out {
            Some(p) => table.write(p, format)?,
            None => print!("{}", table.render(format)?),
        }
        Ok(())
    }
}

fn class_name(k: ClassArg) -> &'static str {
    match k {
        ClassArg::Plus => "plus",
        ClassArg::Minus => "minus",
        ClassArg::Rho1 => "rho1",
        ClassArg::Rho2 => "rho2",
    }
}

fn default_frame(particles: usize) -> Vec<(f64, f64)> {
    match particles {
        2 => vec![(1.0, 0.5), (0.5, 1.0)],
        n => vec![(1.0, 0.0); n],
    }
}

fn cmd_eval(a: &EvalArgs) -> CliResult<()> {
    let st = Settings::resolve(&a.common)?;
    let (spec, state) = st.state()?;
    let n = state.particle_count();
    let points = match a.samples {
        Some(k) => sample_points(n, k, st.cfg.seed.unwrap_or(DEFAULT_SEED))?,
        None => st.points(n)?,
    };
    let route = if a.numeric { "forward" } else { "analytic" };
    let meta = Meta::new("eval", &spec, "none", route, st.q(), st.cfg.seed);
    let mut cols = point_columns(n);
    cols.push("value".into());
    let mut table = TomogramTable::new(meta, cols);
    let analytic = TomogramObject::from_state(&state)?;
    let mut current: Option<(f64, symtomo::density::DensityObject<f64>)> = None;
    for p in &points {
        let v = if a.numeric {
            // The numeric route transforms the exactly evolved density at t = 0.
            if current.as_ref().is_none_or(|(t, _)| *t != p.t) {
                current = Some((p.t, pure_density(&state.evolved(p.t))));
            }
            let d = &current.as_ref().expect("set above").1;
            forward_tomogram(d, &p.at_time(0.0), st.q())?
        } else {
            analytic.eval(p)?
        };
        let mut row = point_row(p);
        row.push(v);
        table.push_row(row)?;
    }
    st.emit(&table)
}

fn cmd_symmetrize(a: &SymArgs) -> CliResult<()> {
    let st = Settings::resolve(&a.common)?;
    let (spec, state) = st.state()?;
    let n = state.particle_count();
    let class = st.class()?.unwrap_or(SymmetryClass::Plus);
    let route = st.cfg.route.clone().unwrap_or_else(|| "a".into());
    let points = st.points(n)?;
    let meta = Meta::new("symmetrize", &spec, class.name(), &route, st.q(), st.cfg.seed);
    let mut cols = point_columns(n);
    cols.extend(["value", "direct", "interference"].map(String::from));
    let mut table = TomogramTable::new(meta, cols);
    let (values, direct, inter) = match route.as_str() {
        "a" => {
            let opts = RouteAOptions { renormalize: a.renormalize, closed_form: true };
            let r = route_a_batch(&pure_density(&state), class, &points, st.q(), opts)?;
            (r.values, r.direct, r.interference)
        }
        "b" => {
            let sign = class
                .exchange_sign()
                .ok_or_else(|| usage(format!("route b is defined for plus and minus only, not {class}")))?;
            if a.renormalize {
                return Err(usage("--renormalize applies to route a"));
            }
            let (mut v, mut d, mut x) = (Vec::new(), Vec::new(), Vec::new());
            // Time enters through the evolved state; route B works at t = 0.
            let mut start = 0;
            while start < points.len() {
                let t = points[start].t;
                let end = start + points[start..].iter().take_while(|p| p.t == t).count();
                let w = TomogramObject::from_state(&state.evolved(t))?;
                let batch: Vec<_> = points[start..end].iter().map(|p| p.at_time(0.0)).collect();
                let (r, _) = route_b_batch(&w, sign, &batch, st.q()).map_err(|e| offset_point(e, start))?;
                v.extend(r.values);
                d.extend(r.direct);
                x.extend(r.interference);
                start = end;
            }
            (v, d, x)
        }
        other => return Err(usage(format!("unknown route {other:?}"))),
    };
    for (i, p) in points.iter().enumerate() {
        let mut row = point_row(p);
        row.extend([values[i], direct[i], inter[i]]);
        table.push_row(row)?;
    }
    st.emit(&table)
}

/// Re-bases a batch-local point index onto the full table.
fn offset_point(e: TomoError, start: usize) -> TomoError {
    match e {
        TomoError::DegenerateFrame { det, point } => TomoError::DegenerateFrame { det, point: point.map(|k| k + start) },
        other => other,
    }
}

const MAX_RECONSTRUCT_SAMPLES: usize = 1 << 20;

fn cmd_reconstruct(c: &Common) -> CliResult<()> {
    let st = Settings::resolve(c)?;
    let (spec, state) = st.state()?;
    let n = state.particle_count();
    let out = st.out.clone().ok_or_else(|| usage("reconstruct needs --out <file.json>"))?;
    let grid = st.cfg.grid.as_deref().unwrap_or("-2:2:9");
    let axis = uniform_axis(grid)?;
    let total = axis.count.checked_pow(2 * n as u32).filter(|t| *t <= MAX_RECONSTRUCT_SAMPLES).ok_or_else(|| {
        Failure::from(TomoError::CostExceeded(format!(
            "{}^{} density samples exceed {MAX_RECONSTRUCT_SAMPLES}",
            axis.count,
            2 * n
        )))
    })?;
    let class = st.class()?;
    let d = pure_density(&state);
    let (w, oracle) = match class {
        Some(k) => (
            route_a_tomogram(&d, k, st.q(), RouteAOptions { closed_form: true, ..Default::default() })?,
            project_class(k, &d, false)?,
        ),
        None => (TomogramObject::from_state(&state)?, d.clone()),
    };
    let nodes = axis.nodes();
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..total)
        .map(|mut k| {
            let mut c = vec![0.0; 2 * n];
            for slot in c.iter_mut().rev() {
                *slot = nodes[k % axis.count];
                k /= axis.count;
            }
            (c[..n].to_vec(), c[n..].to_vec())
        })
        .collect();
    let report = inverse_density_batch(&w, &pairs, st.q())?;
    let mut max_err = 0.0f64;
    let mut trace = 0.0;
    let cell = axis.h.powi(n as i32);
    for ((x, xp), v) in pairs.iter().zip(&report.values) {
        max_err = max_err.max((oracle.evaluate(x, xp)? - v).norm());
        if x == xp {
            trace += v.re * cell;
        }
    }
    let mut diag = IndexMap::new();
    diag.insert("hermiticity_residual".to_string(), report.hermiticity_residual);
    diag.insert("max_abs_error_vs_projector".to_string(), max_err);
    diag.insert("trace_riemann_sum".to_string(), trace);
    let modes_01 = state.terms().len() == 1 && state.terms()[0].modes == [0, 1];
    if let (Some(sign), true) = (class.and_then(|k| k.exchange_sign()), modes_01) {
        let ratios: Vec<f64> = pairs
            .iter()
            .zip(&report.values)
            .filter(|(_, v)| v.re.abs() > 1e-6)
            .map(|((x, xp), v)| analytic_rho01(sign, [x[0], x[1]], [xp[0], xp[1]], FormMode::Printed) / v.re)
            .collect();
        if !ratios.is_empty() {
            let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
            let sd = (ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / ratios.len() as f64).sqrt();
            diag.insert("printed_rho01_ratio".to_string(), mean);
            diag.insert("printed_rho01_ratio_rel_spread".to_string(), sd / mean.abs());
        }
    }
    let class_label = class.map_or("none", |k| k.name());
    let file = DensityGridFile {
        meta: Meta::new("reconstruct", &spec, class_label, "inverse", st.q(), st.cfg.seed),
        particle_count: n,
        axis,
        diagnostics: diag.clone(),
        values: report.values,
    };
    file.write(&out)?;
    for (k, v) in &diag {
        println!("{k}: {v:e}");
    }
    Ok(())
}

fn uniform_axis(spec: &str) -> CliResult<GridAxis<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(usage("reconstruct grid must be lo:hi:count"));
    }
    let v = parse_values(spec)?;
    let h = if v.len() > 1 { v[1] - v[0] } else { 1.0 };
    if !(h > 0.0) {
        return Err(usage("reconstruct grid must be increasing"));
    }
    Ok(GridAxis { lo: v[0], h, count: v.len() })
}

fn cmd_evolve(a: &EvolveArgs) -> CliResult<()> {
    let st = Settings::resolve(&a.common)?;
    let (spec, state) = st.state()?;
    let n = state.particle_count();
    let flow = match a.flow {
        FlowArg::Oscillator => QuadraticFlow::oscillator(),
        FlowArg::Free => QuadraticFlow::free_particle(),
    };
    let class = st.class()?;
    let w = match class {
        Some(k) => route_a_tomogram(&pure_density(&state), k, st.q(), RouteAOptions { closed_form: true, ..Default::default() })?,
        None => TomogramObject::from_state(&state)?,
    };
    let points = st.points(n)?;
    let mut meta = Meta::new("evolve", &spec, class.map_or("none", |k| k.name()), "characteristics", st.q(), st.cfg.seed);
    meta.insert("flow", if matches!(a.flow, FlowArg::Oscillator) { "oscillator" } else { "free" })?;
    let mut cols = point_columns(n);
    cols.push("value".into());
    let mut table = TomogramTable::new(meta, cols);
    for p in &points {
        let v = evolve_tomogram(&w, &flow, p.t, &p.at_time(0.0))?;
        let mut row = point_row(p);
        row.push(v);
        table.push_row(row)?;
    }
    st.emit(&table)
}

fn cmd_verify(a: &VerifyArgs) -> CliResult<u8> {
    let st = Settings::resolve(&a.common)?;
    let filter = a.filter.clone().or_else(|| st.cfg.filter.clone());
    let seed = st.cfg.seed.unwrap_or(DEFAULT_SEED);
    let opts = VerifyOptions { seed, quadrature: st.q().clone(), filter: filter.clone() };
    let report = run_verification(&opts);
    if report.criteria.is_empty() {
        return Err(usage(format!("filter {:?} selects no criteria", filter.unwrap_or_default())));
    }
    for c in &report.criteria {
        println!("{}", c.line());
    }
    if let Some(out) = &st.out {
        let mut meta = Meta::new("verify", "corpus", "all", "all", st.q(), Some(seed));
        meta.insert("filter", filter.as_deref().unwrap_or("all"))?;
        let format = st.format.unwrap_or(if out.extension().is_some_and(|e| e == "csv") { Format::Csv } else { Format::Json });
        let text = match format {
            Format::Json => report.to_json(&meta)?,
            Format::Csv => report.to_csv(&meta)?,
        };
        write_file(out, &text)?;
    }
    Ok(if report.all_passed() { 0 } else { EXIT_VERIFY })
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| Failure::from(TomoError::from(e)))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let res = match &cli.cmd {
        Cmd::Eval(a) => cmd_eval(a).map(|_| 0),
        Cmd::Symmetrize(a) => cmd_symmetrize(a).map(|_| 0),
        Cmd::Reconstruct(c) => cmd_reconstruct(c).map(|_| 0),
        Cmd::Evolve(a) => cmd_evolve(a).map(|_| 0),
        Cmd::Verify(a) => cmd_verify(a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("symtomo: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
