//! Line-oriented model files.
//!
//! ```text
//! [model]
//! name = engel-plane
//!
//! [coords]
//! x1 x2 x3 x4
//!
//! [frame]
//! X1 1 : 1, 0, 0, 0
//! X2 1 : 0, 1, x1, x1^2/2
//! X3 2 : 0, 0, 1, x1
//! X4 3 : 0, 0, 0, 1
//!
//! [immersion]
//! params = u v
//! chart = 0, u, 0, v
//!
//! [analysis]
//! sigma0_origin = 0, 0
//! sigma0_dir = 0, 1
//! sigma0_range = 0, 1
//! eps = 1
//!
//! [controls]
//! g3 = sin(pi*u)
//!
//! [expect]
//! degree = 4 @reference
//! ```
//!
//! Comments start with `#`. Sections may appear in any order. Frame
//! components are expressions in the coordinates; chart and control
//! expressions are in the parameters.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graded::GradedFrame;
use crate::immersion::{Immersion, Sigma0};
use crate::numerics::logspace;
use crate::symfield::{parse, Expr, VectorField};

pub const DEFAULT_EPS: f64 = 1.0;
pub const DEFAULT_STEPS: usize = 128;
pub const DEFAULT_GRID: usize = 32;
pub const DEFAULT_TOL_DEG: f64 = 1e-9;

/// Where an expected value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    /// Stated in the reference literature for the example.
    Reference,
    /// Computed by an independent route in the test suite.
    Derived,
    /// Immediate from the definitions.
    Trivial,
}

impl Origin {
    fn tag(self) -> &'static str {
        match self {
            Origin::Reference => "reference",
            Origin::Derived => "derived",
            Origin::Trivial => "trivial",
        }
    }

    fn from_tag(s: &str) -> Option<Self> {
        match s {
            "reference" => Some(Origin::Reference),
            "derived" => Some(Origin::Derived),
            "trivial" => Some(Origin::Trivial),
            _ => None,
        }
    }
}

/// One expected value, e.g. `a 1 1 = -1 @reference`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expectation {
    pub key: String,
    pub value: String,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Analysis {
    pub sigma0: Sigma0,
    pub eps: f64,
    pub steps: usize,
    pub tol_rank: f64,
    pub tol_cert: f64,
    pub tol_deg: f64,
    pub area: Option<(Vec<f64>, Vec<f64>)>,
    pub variation_t: Vec<f64>,
}

impl Analysis {
    /// Defaults for `m` parameters: slice through the origin spanned by the
    /// last `m - 1` parameter axes over `[0, 1]`.
    pub fn defaults(m: usize) -> Self {
        Self {
            sigma0: Sigma0 {
                origin: vec![0.0; m],
                dirs: (1..m)
                    .map(|j| (0..m).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
                    .collect(),
                ranges: vec![(0.0, 1.0); m.saturating_sub(1)],
                grid: DEFAULT_GRID,
            },
            eps: DEFAULT_EPS,
            steps: DEFAULT_STEPS,
            tol_rank: crate::regularity::DEFAULT_TOL_RANK,
            tol_cert: crate::regularity::DEFAULT_TOL_CERT,
            tol_deg: DEFAULT_TOL_DEG,
            area: None,
            variation_t: logspace(1e-2, 1e-4, 5),
        }
    }
}

/// Control or probe components keyed by their 1-based adapted index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Controls {
    pub g: BTreeMap<usize, Expr>,
    pub f: BTreeMap<usize, Expr>,
    pub csv: Option<String>,
}

impl Controls {
    pub fn is_empty(&self) -> bool {
        self.g.is_empty() && self.f.is_empty() && self.csv.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct Model {
    pub name: String,
    pub frame: GradedFrame,
    pub immersion: Immersion,
    pub analysis: Analysis,
    pub controls: Controls,
    pub expect: Vec<Expectation>,
}

#[derive(Default)]
struct Sections {
    model: Vec<(usize, String)>,
    coords: Vec<(usize, String)>,
    frame: Vec<(usize, String)>,
    immersion: Vec<(usize, String)>,
    analysis: Vec<(usize, String)>,
    controls: Vec<(usize, String)>,
    expect: Vec<(usize, String)>,
}

fn model_err(line: usize, message: impl Into<String>) -> Error {
    Error::Model {
        line,
        message: message.into(),
    }
}

fn split_key(line: usize, text: &str) -> Result<(String, String)> {
    let (k, v) = text
        .split_once('=')
        .ok_or_else(|| model_err(line, format!("expected `key = value`, got `{text}`")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn parse_expr_at(line: usize, text: &str, vars: &[String]) -> Result<Expr> {
    parse(text.trim(), vars).map_err(|e| model_err(line, e.to_string()))
}

fn parse_f64(line: usize, text: &str) -> Result<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| model_err(line, format!("expected a number, got `{}`", text.trim())))?;
    if !v.is_finite() {
        return Err(model_err(line, "number must be finite"));
    }
    Ok(v)
}

fn parse_list(line: usize, text: &str) -> Result<Vec<f64>> {
    text.split(',').map(|s| parse_f64(line, s)).collect()
}

fn parse_usize(line: usize, text: &str) -> Result<usize> {
    text.trim()
        .parse()
        .map_err(|_| model_err(line, format!("expected a non-negative integer, got `{}`", text.trim())))
}

fn parse_names(line: usize, text: &str) -> Result<Vec<String>> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            let ok = s.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if ok {
                Ok(s.to_string())
            } else {
                Err(model_err(line, format!("invalid name `{s}`")))
            }
        })
        .collect()
}

fn check_unique(line: usize, names: &[String], what: &str) -> Result<()> {
    for (i, a) in names.iter().enumerate() {
        if names[..i].contains(a) {
            return Err(model_err(line, format!("duplicate {what} `{a}`")));
        }
    }
    Ok(())
}

impl Model {
    /// Parses model text. Errors carry 1-based line numbers.
    pub fn parse(text: &str) -> Result<Self> {
        let mut sec = Sections::default();
        let mut current: Option<&str> = None;
        let mut last_line = 0;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            last_line = line;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                current = Some(match name.trim() {
                    "model" => "model",
                    "coords" => "coords",
                    "frame" => "frame",
                    "immersion" => "immersion",
                    "analysis" => "analysis",
                    "controls" => "controls",
                    "expect" => "expect",
                    other => return Err(model_err(line, format!("unknown section `[{other}]`"))),
                });
                continue;
            }
            let entry = (line, content.to_string());
            match current {
                Some("model") => sec.model.push(entry),
                Some("coords") => sec.coords.push(entry),
                Some("frame") => sec.frame.push(entry),
                Some("immersion") => sec.immersion.push(entry),
                Some("analysis") => sec.analysis.push(entry),
                Some("controls") => sec.controls.push(entry),
                Some(_) => sec.expect.push(entry),
                None => return Err(model_err(line, "content before the first section")),
            }
        }

        let mut name = String::from("model");
        for (line, text) in &sec.model {
            match split_key(*line, text)? {
                (k, v) if k == "name" => name = v,
                (k, _) => return Err(model_err(*line, format!("unknown key `{k}`"))),
            }
        }

        let mut coords = Vec::new();
        for (line, text) in &sec.coords {
            coords.extend(parse_names(*line, text)?);
            check_unique(*line, &coords, "coordinate")?;
        }
        if coords.is_empty() {
            return Err(model_err(last_line, "missing [coords]"));
        }
        let n = coords.len();

        let mut names = Vec::new();
        let mut fields = Vec::new();
        let mut degrees = Vec::new();
        for (line, text) in &sec.frame {
            let (head, body) = text
                .split_once(':')
                .ok_or_else(|| model_err(*line, "expected `NAME DEGREE : c1, c2, ...`"))?;
            let head: Vec<&str> = head.split_whitespace().collect();
            if head.len() != 2 {
                return Err(model_err(*line, "expected a field name and a degree before `:`"));
            }
            let fname = parse_names(*line, head[0])?.remove(0);
            let deg = parse_usize(*line, head[1])?;
            let comps: Vec<&str> = body.split(',').collect();
            if comps.len() != n {
                return Err(model_err(
                    *line,
                    format!("field `{fname}` has {} components, expected {n}", comps.len()),
                ));
            }
            let comps = comps
                .iter()
                .map(|c| parse_expr_at(*line, c, &coords))
                .collect::<Result<Vec<_>>>()?;
            names.push(fname);
            fields.push(VectorField::new(comps));
            degrees.push(deg);
            check_unique(*line, &names, "frame field")?;
        }
        if fields.len() != n {
            let line = sec.frame.last().map_or(last_line, |e| e.0);
            return Err(model_err(line, format!("{} frame fields for {n} coordinates", fields.len())));
        }
        let frame_line = sec.frame.first().map_or(last_line, |e| e.0);
        let frame = GradedFrame::new(coords.clone(), names, fields, degrees)
            .map_err(|e| model_err(frame_line, e.to_string()))?;

        let mut params: Option<(usize, Vec<String>)> = None;
        let mut chart_text: Option<(usize, String)> = None;
        for (line, text) in &sec.immersion {
            let (k, v) = split_key(*line, text)?;
            match k.as_str() {
                "params" => {
                    let p = parse_names(*line, &v)?;
                    check_unique(*line, &p, "parameter")?;
                    params = Some((*line, p));
                }
                "chart" => chart_text = Some((*line, v)),
                _ => return Err(model_err(*line, format!("unknown key `{k}`"))),
            }
        }
        let (pline, params) = params.ok_or_else(|| model_err(last_line, "missing `params` in [immersion]"))?;
        if params.is_empty() {
            return Err(model_err(pline, "need at least one parameter"));
        }
        let (cline, chart_text) = chart_text.ok_or_else(|| model_err(last_line, "missing `chart` in [immersion]"))?;
        let chart = chart_text
            .split(',')
            .map(|c| parse_expr_at(cline, c, &params))
            .collect::<Result<Vec<_>>>()?;
        if chart.len() != n {
            return Err(model_err(cline, format!("chart has {} components, expected {n}", chart.len())));
        }
        let m = params.len();
        if m >= n {
            return Err(model_err(pline, format!("{m} parameters in a {n}-dimensional space")));
        }
        let immersion = Immersion::new(params.clone(), chart).map_err(|e| model_err(cline, e.to_string()))?;

        let analysis = parse_analysis(&sec.analysis, m)?;

        let mut controls = Controls::default();
        for (line, text) in &sec.controls {
            let (k, v) = split_key(*line, text)?;
            if k == "csv" {
                controls.csv = Some(v);
                continue;
            }
            let (kind, idx) = k.split_at(1.min(k.len()));
            let idx = parse_usize(*line, idx).map_err(|_| model_err(*line, format!("unknown key `{k}`")))?;
            if idx <= m || idx > n {
                return Err(model_err(*line, format!("index {idx} outside {}..={n}", m + 1)));
            }
            let e = parse_expr_at(*line, &v, &params)?;
            let slot = match kind {
                "g" => &mut controls.g,
                "f" => &mut controls.f,
                _ => return Err(model_err(*line, format!("unknown key `{k}`"))),
            };
            if slot.insert(idx, e).is_some() {
                return Err(model_err(*line, format!("duplicate `{k}`")));
            }
        }

        let mut expect = Vec::new();
        for (line, text) in &sec.expect {
            let (k, rest) = split_key(*line, text)?;
            let (value, tag) = rest
                .rsplit_once('@')
                .ok_or_else(|| model_err(*line, "expected value needs an `@origin` tag"))?;
            let origin = Origin::from_tag(tag.trim())
                .ok_or_else(|| model_err(*line, format!("unknown origin `{}`", tag.trim())))?;
            expect.push(Expectation {
                key: k.split_whitespace().collect::<Vec<_>>().join(" "),
                value: value.trim().to_string(),
                origin,
            });
        }

        Ok(Self {
            name,
            frame,
            immersion,
            analysis,
            controls,
            expect,
        })
    }

    /// Text form that parses back to an identical model.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let coords = self.frame.coords();
        let params = self.immersion.params();
        let _ = writeln!(s, "[model]\nname = {}\n", self.name);
        let _ = writeln!(s, "[coords]\n{}\n", coords.join(" "));
        let _ = writeln!(s, "[frame]");
        for ((name, field), deg) in self.frame.names().iter().zip(self.frame.fields()).zip(self.frame.degrees()) {
            let comps: Vec<String> = field.components().iter().map(|c| c.display(coords).to_string()).collect();
            let _ = writeln!(s, "{name} {deg} : {}", comps.join(", "));
        }
        let chart: Vec<String> = self
            .immersion
            .chart()
            .iter()
            .map(|c| c.display(params).to_string())
            .collect();
        let _ = writeln!(s, "\n[immersion]\nparams = {}\nchart = {}\n", params.join(" "), chart.join(", "));

        let a = &self.analysis;
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let _ = writeln!(s, "[analysis]");
        let _ = writeln!(s, "sigma0_origin = {}", list(&a.sigma0.origin));
        for d in &a.sigma0.dirs {
            let _ = writeln!(s, "sigma0_dir = {}", list(d));
        }
        for (lo, hi) in &a.sigma0.ranges {
            let _ = writeln!(s, "sigma0_range = {lo:?}, {hi:?}");
        }
        let _ = writeln!(s, "grid = {}", a.sigma0.grid);
        let _ = writeln!(s, "eps = {:?}", a.eps);
        let _ = writeln!(s, "steps = {}", a.steps);
        let _ = writeln!(s, "tol_rank = {:?}", a.tol_rank);
        let _ = writeln!(s, "tol_cert = {:?}", a.tol_cert);
        let _ = writeln!(s, "tol_deg = {:?}", a.tol_deg);
        if let Some((lo, hi)) = &a.area {
            let _ = writeln!(s, "area_lo = {}\narea_hi = {}", list(lo), list(hi));
        }
        let _ = writeln!(s, "variation_t = {}", list(&a.variation_t));

        if !self.controls.is_empty() {
            let _ = writeln!(s, "\n[controls]");
            for (i, e) in &self.controls.g {
                let _ = writeln!(s, "g{i} = {}", e.display(params));
            }
            for (i, e) in &self.controls.f {
                let _ = writeln!(s, "f{i} = {}", e.display(params));
            }
            if let Some(p) = &self.controls.csv {
                let _ = writeln!(s, "csv = {p}");
            }
        }
        if !self.expect.is_empty() {
            let _ = writeln!(s, "\n[expect]");
            for e in &self.expect {
                let _ = writeln!(s, "{} = {} @{}", e.key, e.value, e.origin.tag());
            }
        }
        s
    }

    pub fn expectation(&self, key: &str) -> Option<&Expectation> {
        self.expect.iter().find(|e| e.key == key)
    }
}

fn parse_analysis(entries: &[(usize, String)], m: usize) -> Result<Analysis> {
    let mut a = Analysis::defaults(m);
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    let mut ranges: Vec<(f64, f64)> = Vec::new();
    let mut lo = None;
    let mut hi = None;
    let mut last = 0;
    for (line, text) in entries {
        let line = *line;
        last = line;
        let (k, v) = split_key(line, text)?;
        match k.as_str() {
            "sigma0_origin" => {
                a.sigma0.origin = parse_list(line, &v)?;
                if a.sigma0.origin.len() != m {
                    return Err(model_err(line, format!("origin needs {m} entries")));
                }
            }
            "sigma0_dir" => {
                let d = parse_list(line, &v)?;
                if d.len() != m {
                    return Err(model_err(line, format!("direction needs {m} entries")));
                }
                dirs.push(d);
            }
            "sigma0_range" => {
                let r = parse_list(line, &v)?;
                if r.len() != 2 || r[0] > r[1] {
                    return Err(model_err(line, "range needs `lo, hi` with lo <= hi"));
                }
                ranges.push((r[0], r[1]));
            }
            "grid" => {
                a.sigma0.grid = parse_usize(line, &v)?;
                if a.sigma0.grid == 0 {
                    return Err(model_err(line, "grid must be positive"));
                }
            }
            "eps" => {
                a.eps = parse_f64(line, &v)?;
                if a.eps <= 0.0 {
                    return Err(model_err(line, "eps must be positive"));
                }
            }
            "steps" => a.steps = parse_usize(line, &v)?,
            "tol_rank" => a.tol_rank = parse_f64(line, &v)?,
            "tol_cert" => a.tol_cert = parse_f64(line, &v)?,
            "tol_deg" => a.tol_deg = parse_f64(line, &v)?,
            "area_lo" => lo = Some(parse_list(line, &v)?),
            "area_hi" => hi = Some(parse_list(line, &v)?),
            "variation_t" => {
                a.variation_t = parse_list(line, &v)?;
                if a.variation_t.len() < 2 || a.variation_t.iter().any(|&t| t <= 0.0) {
                    return Err(model_err(line, "need at least two positive times"));
                }
            }
            _ => return Err(model_err(line, format!("unknown key `{k}`"))),
        }
    }
    if !dirs.is_empty() || !ranges.is_empty() {
        if dirs.len() != m - 1 || ranges.len() != m - 1 {
            return Err(model_err(last, format!("slice needs {} directions and ranges", m - 1)));
        }
        a.sigma0.dirs = dirs;
        a.sigma0.ranges = ranges;
    }
    match (lo, hi) {
        (Some(lo), Some(hi)) if lo.len() == m && hi.len() == m => a.area = Some((lo, hi)),
        (None, None) => {}
        _ => return Err(model_err(last, format!("area_lo and area_hi need {m} entries each"))),
    }
    Ok(a)
}
