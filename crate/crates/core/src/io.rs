//! Text formats: state specs, run configs, tomogram tables and density grids.
//!
//! Tables are CSV with a `# key: value` metadata header, or a JSON document
//! `{meta, columns, rows}`. The first eight metadata keys are always
//! [`HEADER_KEYS`] in that order. Density grids are a JSON document plus a
//! sidecar `.bin` of little-endian f64 (re, im) pairs in row-major order.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use indexmap::IndexMap;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::density::GridAxis;
use crate::error::{Result, TomoError};
use crate::hermite::ProductState;
use crate::quadrature::QuadratureSpec;
use crate::tomogram::TomogramPoint;

pub const TOOL: &str = "symtomo";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const HEADER_KEYS: [&str; 8] = ["tool", "version", "command", "state", "class", "route", "quadrature", "seed"];
pub const UNITS: &str = "hbar=m=omega=1";

/// Parses `c@n1,n2;c@...` into a product-state superposition. A coefficient
/// is `re` or `re:im` and may be omitted (1). `0,1` is the product φ₀⊗φ₁.
pub fn parse_state(spec: &str) -> Result<ProductState<f64>> {
    let mut terms = Vec::new();
    for raw in spec.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (coeff, modes) = match raw.split_once('@') {
            Some((c, m)) => (parse_coeff(c.trim())?, m),
            None => (Complex::new(1.0, 0.0), raw),
        };
        let modes = modes
            .split(',')
            .map(|m| m.trim().parse::<usize>().map_err(|_| TomoError::Parse(format!("bad mode index {m:?} in {raw:?}"))))
            .collect::<Result<Vec<_>>>()?;
        terms.push((coeff, modes));
    }
    if terms.is_empty() {
        return Err(TomoError::Parse("empty state spec".into()));
    }
    ProductState::superposition(terms)
}

fn parse_coeff(c: &str) -> Result<Complex<f64>> {
    let bad = || TomoError::Parse(format!("bad coefficient {c:?}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad()).and_then(|v| if v.is_finite() { Ok(v) } else { Err(bad()) });
    match c.split_once(':') {
        Some((re, im)) => Ok(Complex::new(num(re)?, num(im)?)),
        None => Ok(Complex::new(num(c)?, 0.0)),
    }
}

/// `lo:hi:count` (inclusive, evenly spaced) or a comma list.
pub fn parse_values(spec: &str) -> Result<Vec<f64>> {
    let bad = |s: &str| TomoError::Parse(format!("bad number {s:?} in {spec:?}"));
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let out = match parts.as_slice() {
        [lo, hi, count] => {
            let lo: f64 = lo.parse().map_err(|_| bad(lo))?;
            let hi: f64 = hi.parse().map_err(|_| bad(hi))?;
            let n: usize = count.parse().map_err(|_| bad(count))?;
            match n {
                0 => return Err(TomoError::Parse(format!("empty range {spec:?}"))),
                1 => vec![lo],
                _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
            }
        }
        [list] => list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|_| bad(s)))
            .collect::<Result<Vec<_>>>()?,
        _ => return Err(TomoError::Parse(format!("expected lo:hi:count or a comma list, got {spec:?}"))),
    };
    if out.is_empty() || out.iter().any(|v| !v.is_finite()) {
        return Err(TomoError::Parse(format!("no finite values in {spec:?}")));
    }
    Ok(out)
}

/// Per-particle (μ, ν) of one frame.
pub type Frame = Vec<(f64, f64)>;

/// `theta:lo:hi:count` gives every particle (cos θ, sin θ); otherwise frames
/// are `;`-separated, each a `/`-separated list of per-particle `mu,nu`.
pub fn parse_frames(spec: &str, particles: usize) -> Result<Vec<Frame>> {
    if let Some(range) = spec.trim().strip_prefix("theta:") {
        return Ok(parse_values(range)?.into_iter().map(|th| vec![(th.cos(), th.sin()); particles]).collect());
    }
    let mut frames = Vec::new();
    for f in spec.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let frame = f
            .split('/')
            .map(|pair| {
                let v = parse_values(pair)?;
                match v.as_slice() {
                    [m, n] => Ok((*m, *n)),
                    _ => Err(TomoError::Parse(format!("frame entry {pair:?} is not mu,nu"))),
                }
            })
            .collect::<Result<Frame>>()?;
        if frame.len() != particles {
            return Err(TomoError::Parse(format!("frame {f:?} has {} entries for {particles} particles", frame.len())));
        }
        frames.push(frame);
    }
    if frames.is_empty() {
        return Err(TomoError::Parse("empty frame spec".into()));
    }
    Ok(frames)
}

/// Points over frames × times × ξ-grid^N, last particle varying fastest.
pub fn build_points(particles: usize, xi: &[f64], frames: &[Frame], times: &[f64]) -> Result<Vec<TomogramPoint<f64>>> {
    let mut out = Vec::new();
    let total = xi.len().pow(particles as u32);
    for frame in frames {
        let (mu, nu): (Vec<f64>, Vec<f64>) = frame.iter().copied().unzip();
        for &t in times {
            for k in 0..total {
                let mut idx = k;
                let mut x = vec![0.0; particles];
                for j in (0..particles).rev() {
                    x[j] = xi[idx % xi.len()];
                    idx /= xi.len();
                }
                out.push(TomogramPoint::with_time(x, mu.clone(), nu.clone(), t)?);
            }
        }
    }
    Ok(out)
}

/// `count` seeded random points: ξ ∈ [−2, 2], μ ∈ [−2, 2], 0.1 ≤ |ν| ≤ 2.
pub fn sample_points(particles: usize, count: usize, seed: u64) -> Result<Vec<TomogramPoint<f64>>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut xi = Vec::with_capacity(particles);
            let mut mu = Vec::with_capacity(particles);
            let mut nu = Vec::with_capacity(particles);
            for _ in 0..particles {
                xi.push(rng.gen_range(-2.0..2.0));
                mu.push(rng.gen_range(-2.0..2.0));
                let v: f64 = rng.gen_range(0.1..2.0);
                nu.push(if rng.gen_bool(0.5) { v } else { -v });
            }
            TomogramPoint::new(xi, mu, nu)
        })
        .collect()
}

/// Column names for the point coordinates of `particles` particles plus `t`.
pub fn point_columns(particles: usize) -> Vec<String> {
    let mut c: Vec<String> = (1..=particles).flat_map(|j| [format!("xi{j}"), format!("mu{j}"), format!("nu{j}")]).collect();
    c.push("t".into());
    c
}

pub fn point_row(p: &TomogramPoint<f64>) -> Vec<f64> {
    let mut r: Vec<f64> = (0..p.particle_count()).flat_map(|j| [p.xi[j], p.mu[j], p.nu[j]]).collect();
    r.push(p.t);
    r
}

/// Ordered metadata of a table or grid file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Meta(IndexMap<String, String>);

impl Meta {
    pub fn new(
        command: &str,
        state: &str,
        class: &str,
        route: &str,
        quadrature: &QuadratureSpec,
        seed: Option<u64>,
    ) -> Self {
        let mut m = IndexMap::new();
        let seed = seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        for (k, v) in HEADER_KEYS.iter().zip([TOOL, VERSION, command, state, class, route, &quadrature.summary(), &seed]) {
            m.insert((*k).to_string(), v.to_string());
        }
        m.insert("units".into(), UNITS.into());
        Self(m)
    }

    /// Appends (or replaces) a trailing key. Header keys cannot be moved.
    pub fn insert(&mut self, key: &str, value: impl ToString) -> Result<()> {
        if HEADER_KEYS.contains(&key) {
            return Err(TomoError::Config(format!("metadata key {key:?} is fixed")));
        }
        if key.contains(':') || key.contains('\n') || key.trim() != key || key.is_empty() {
            return Err(TomoError::Config(format!("bad metadata key {key:?}")));
        }
        let value = value.to_string();
        if value.contains('\n') {
            return Err(TomoError::Config(format!("metadata value for {key:?} spans lines")));
        }
        self.0.insert(key.to_string(), value);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    fn check(&self) -> Result<()> {
        let keys: Vec<&str> = self.0.keys().take(HEADER_KEYS.len()).map(String::as_str).collect();
        if keys != HEADER_KEYS {
            return Err(TomoError::Parse(format!("metadata header must start with {HEADER_KEYS:?}, found {keys:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = TomoError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(TomoError::Parse(format!("unknown format {s:?}"))),
        }
    }
}

/// Metadata, named columns and finite rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomogramTable {
    pub meta: Meta,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl TomogramTable {
    pub fn new(meta: Meta, columns: Vec<String>) -> Self {
        Self { meta, columns, rows: Vec::new() }
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(TomoError::DimensionMismatch { expected: self.columns.len(), got: row.len() });
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(TomoError::numeric("table", format!("non-finite value {v} in row {}", self.rows.len() + 1)));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    fn check(&self) -> Result<()> {
        self.meta.check()?;
        for (i, r) in self.rows.iter().enumerate() {
            if r.len() != self.columns.len() || r.iter().any(|v| !v.is_finite()) {
                return Err(TomoError::Parse(format!("row {} is malformed", i + 1)));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        self.check()?;
        let mut out = String::new();
        for (k, v) in self.meta.iter() {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| format!("{v:?}"))).map_err(csv_err)?;
        }
        let body = w.into_inner().map_err(|e| TomoError::Parse(e.to_string()))?;
        out.push_str(&String::from_utf8(body).map_err(|e| TomoError::Parse(e.to_string()))?);
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta = IndexMap::new();
        let mut body = String::new();
        for line in text.lines() {
            if let Some(h) = line.strip_prefix("# ") {
                let (k, v) = h.split_once(": ").or_else(|| h.strip_suffix(':').map(|k| (k, ""))).ok_or_else(|| {
                    TomoError::Parse(format!("bad metadata line {line:?}"))
                })?;
                meta.insert(k.to_string(), v.to_string());
            } else {
                body.push_str(line);
                body.push('\n');
            }
        }
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
        let columns: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            rows.push(
                rec.iter()
                    .map(|s| s.parse::<f64>().map_err(|_| TomoError::Parse(format!("bad number {s:?}"))))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        let t = Self { meta: Meta(meta), columns, rows };
        t.check()?;
        Ok(t)
    }

    pub fn to_json(&self) -> Result<String> {
        self.check()?;
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(text)?;
        t.check()?;
        Ok(t)
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn write(&self, path: &Path, format: Format) -> Result<()> {
        fs::write(path, self.render(format)?)?;
        Ok(())
    }

    /// Reads either format, deciding by the first non-blank character.
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        if text.trim_start().starts_with('{') {
            Self::from_json(&text)
        } else {
            Self::from_csv(&text)
        }
    }
}

fn csv_err(e: csv::Error) -> TomoError {
    TomoError::Parse(e.to_string())
}

/// A sampled N-particle density ρ(x…, x′…) with its metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGridFile {
    pub meta: Meta,
    pub particle_count: usize,
    pub axis: GridAxis<f64>,
    pub diagnostics: IndexMap<String, f64>,
    pub values: Vec<Complex<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridDoc {
    meta: Meta,
    particle_count: usize,
    axis: AxisDoc,
    diagnostics: IndexMap<String, f64>,
    layout: String,
    data_file: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AxisDoc {
    lo: f64,
    h: f64,
    count: usize,
}

const GRID_LAYOUT: &str = "row-major over (x_1..x_N, x'_1..x'_N), interleaved (re, im), little-endian f64";

/// The `.bin` sidecar next to `json`.
pub fn sidecar_path(json: &Path) -> PathBuf {
    json.with_extension("bin")
}

impl DensityGridFile {
    fn expected_len(&self) -> Result<usize> {
        self.axis
            .count
            .checked_pow(2 * self.particle_count as u32)
            .ok_or_else(|| TomoError::CostExceeded("density grid size overflows".into()))
    }

    pub fn write(&self, json: &Path) -> Result<()> {
        self.meta.check()?;
        if self.values.len() != self.expected_len()? {
            return Err(TomoError::DimensionMismatch { expected: self.expected_len()?, got: self.values.len() });
        }
        let bin = sidecar_path(json);
        let doc = GridDoc {
            meta: self.meta.clone(),
            particle_count: self.particle_count,
            axis: AxisDoc { lo: self.axis.lo, h: self.axis.h, count: self.axis.count },
            diagnostics: self.diagnostics.clone(),
            layout: GRID_LAYOUT.into(),
            data_file: bin.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string(),
        };
        let mut bytes = Vec::with_capacity(self.values.len() * 16);
        for v in &self.values {
            bytes.extend_from_slice(&v.re.to_le_bytes());
            bytes.extend_from_slice(&v.im.to_le_bytes());
        }
        let mut f = fs::File::create(&bin)?;
        f.write_all(&bytes)?;
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        fs::write(json, s)?;
        Ok(())
    }

    pub fn read(json: &Path) -> Result<Self> {
        let doc: GridDoc = serde_json::from_str(&fs::read_to_string(json)?)?;
        doc.meta.check()?;
        let bin = json.with_file_name(&doc.data_file);
        let bytes = fs::read(bin)?;
        if bytes.len() % 16 != 0 {
            return Err(TomoError::Parse("density sidecar length is not a multiple of 16".into()));
        }
        let values = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                Complex::new(re, im)
            })
            .collect();
        let out = Self {
            meta: doc.meta,
            particle_count: doc.particle_count,
            axis: GridAxis { lo: doc.axis.lo, h: doc.axis.h, count: doc.axis.count },
            diagnostics: doc.diagnostics,
            values,
        };
        if out.values.len() != out.expected_len()? {
            return Err(TomoError::Parse("density sidecar does not match the axis".into()));
        }
        Ok(out)
    }
}

/// Run settings, read from a flat TOML document. Quadrature keys sit at the
/// top level next to the run keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub state: Option<String>,
    pub class: Option<String>,
    pub route: Option<String>,
    pub grid: Option<String>,
    pub frames: Option<String>,
    pub time: Option<String>,
    pub out: Option<String>,
    pub format: Option<String>,
    pub filter: Option<String>,
    pub seed: Option<u64>,
    pub quadrature: QuadratureSpec,
}

const RUN_KEYS: [&str; 9] = ["state", "class", "route", "grid", "frames", "time", "out", "format", "filter"];

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| TomoError::Config(e.to_string()))?;
        let mut cfg = RunConfig::default();
        let mut quad = toml::Table::new();
        for (k, v) in table {
            if RUN_KEYS.contains(&k.as_str()) {
                let s = match v {
                    toml::Value::String(s) => s,
                    toml::Value::Integer(i) => i.to_string(),
                    toml::Value::Float(f) => f.to_string(),
                    other => return Err(TomoError::Config(format!("key {k:?} must be a string, got {other}"))),
                };
                *cfg.slot(&k) = Some(s);
            } else if k == "seed" {
                let i = v.as_integer().filter(|i| *i >= 0).ok_or_else(|| TomoError::Config("seed must be a non-negative integer".into()))?;
                cfg.seed = Some(i as u64);
            } else if v.is_table() || v.is_array() {
                return Err(TomoError::Config(format!("config must be flat; key {k:?} is nested")));
            } else {
                quad.insert(k, v);
            }
        }
        cfg.quadrature = QuadratureSpec::deserialize(toml::Value::Table(quad)).map_err(|e| TomoError::Config(e.to_string()))?;
        cfg.quadrature.validate()?;
        Ok(cfg)
    }

    fn slot(&mut self, key: &str) -> &mut Option<String> {
        match key {
            "state" => &mut self.state,
            "class" => &mut self.class,
            "route" => &mut self.route,
            "grid" => &mut self.grid,
            "frames" => &mut self.frames,
            "time" => &mut self.time,
            "out" => &mut self.out,
            "format" => &mut self.format,
            _ => &mut self.filter,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        let mut t = toml::Table::new();
        let mut me = self.clone();
        for k in RUN_KEYS {
            if let Some(v) = me.slot(k).clone() {
                t.insert(k.into(), toml::Value::String(v));
            }
        }
        if let Some(s) = self.seed {
            let s = i64::try_from(s).map_err(|_| TomoError::Config("seed too large for TOML".into()))?;
            t.insert("seed".into(), toml::Value::Integer(s));
        }
        let q = toml::Value::try_from(&self.quadrature).map_err(|e| TomoError::Config(e.to_string()))?;
        if let toml::Value::Table(q) = q {
            t.extend(q);
        }
        toml::to_string(&t).map_err(|e| TomoError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_spec_forms() {
        let s = parse_state("0,1").unwrap();
        assert_eq!(s.terms().len(), 1);
        assert_eq!(s.terms()[0].modes, vec![0, 1]);
        let s = parse_state("0.5@0; 0.25:-1@1").unwrap();
        assert_eq!(s.terms()[1].coeff, Complex::new(0.25, -1.0));
        for bad in ["", "a@0", "1@x", "1@0;1@0,1"] {
            assert!(parse_state(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn ranges_and_frames() {
        assert_eq!(parse_values("-1:1:3").unwrap(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(parse_values("0.5").unwrap(), vec![0.5]);
        let f = parse_frames("1,0/0,1;1,0.5/0.5,1", 2).unwrap();
        assert_eq!(f[1], vec![(1.0, 0.5), (0.5, 1.0)]);
        assert!(parse_frames("1,0", 2).is_err());
        let th = parse_frames("theta:0:1.5707963267948966:2", 1).unwrap();
        assert!((th[1][0].1 - 1.0).abs() < 1e-15);
        let pts = build_points(2, &[0.0, 1.0], &f[..1], &[0.0]).unwrap();
        assert_eq!(pts.len(), 4);
        assert_eq!(pts[1].xi, vec![0.0, 1.0]);
    }

    #[test]
    fn table_round_trips() {
        let mut meta = Meta::new("eval", "0,1", "none", "analytic", &QuadratureSpec::default(), Some(7));
        meta.insert("note", "a, b: c").unwrap();
        assert!(meta.insert("seed", 1).is_err());
        let mut t = TomogramTable::new(meta, vec!["xi1".into(), "value".into()]);
        t.push_row(vec![0.1, 1.0 / 3.0]).unwrap();
        t.push_row(vec![-2e-300, 5.0]).unwrap();
        assert!(t.push_row(vec![f64::NAN, 0.0]).is_err());
        assert_eq!(TomogramTable::from_csv(&t.to_csv().unwrap()).unwrap(), t);
        assert_eq!(TomogramTable::from_json(&t.to_json().unwrap()).unwrap(), t);
        let csv = t.to_csv().unwrap();
        let keys: Vec<&str> = csv.lines().take(8).map(|l| l[2..].split(':').next().unwrap()).collect();
        assert_eq!(keys, HEADER_KEYS);
    }

    #[test]
    fn config_is_flat_and_strict() {
        let c = RunConfig::from_toml("state = \"0,1\"\nseed = 3\ntrunc_l = 6.0\nroute_b_box = 12.0\n").unwrap();
        assert_eq!(c.state.as_deref(), Some("0,1"));
        assert_eq!(c.quadrature.trunc_l, 6.0);
        assert_eq!(RunConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c);
        assert!(RunConfig::from_toml("bogus = 1").is_err());
        assert!(RunConfig::from_toml("[q]\ntrunc_l = 1.0").is_err());
    }
}
