//! Run configuration: a flat `key=value` text file with dotted section keys.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are
//! comma-separated. A segment is `population:theta0:theta1:amplitude`, angles
//! in radians. The Unicode minus sign is accepted in numbers.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::{BoundarySegment, Point};
use crate::pucci::Ellipticity;
use crate::solver::{Momentum, SolveConfig};

/// Diagnostics that `run` can emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Diagnostic {
    Overlap,
    Interaction,
    Subharmonicity,
    Limit,
    Holder,
    Growth,
    Lipschitz,
    Acf,
}

impl Diagnostic {
    pub const ALL: [Diagnostic; 8] = [
        Diagnostic::Overlap,
        Diagnostic::Interaction,
        Diagnostic::Subharmonicity,
        Diagnostic::Limit,
        Diagnostic::Holder,
        Diagnostic::Growth,
        Diagnostic::Lipschitz,
        Diagnostic::Acf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Diagnostic::Overlap => "overlap",
            Diagnostic::Interaction => "interaction",
            Diagnostic::Subharmonicity => "subharmonicity",
            Diagnostic::Limit => "limit",
            Diagnostic::Holder => "holder",
            Diagnostic::Growth => "growth",
            Diagnostic::Lipschitz => "lipschitz",
            Diagnostic::Acf => "acf",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.name() == s)
    }
}

/// Where the ACF functional is centred.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AcfCenter {
    /// Nearest free-boundary node of the chosen population to the disk centre.
    FreeBoundary,
    /// Nearest free-boundary node to the given point.
    Near(Point),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    pub enabled: Vec<Diagnostic>,
    /// Support threshold; `None` means `max(10 outer_tol, 1e-3 sup phi)`.
    pub delta: Option<f64>,
    pub limit_delta: f64,
    pub holder_center: Point,
    pub holder_depth: usize,
    pub growth_population: usize,
    /// Growth radii in units of `h`.
    pub growth_radii_h: Vec<f64>,
    pub growth_points: usize,
    pub lipschitz_radius: f64,
    pub acf_population: usize,
    /// ACF radii in units of `h`.
    pub acf_radii_h: Vec<f64>,
    pub acf_center: AcfCenter,
    /// Allowed relative drop of `J` between consecutive radii.
    pub acf_slack: f64,
    /// Lowest acceptable subharmonicity value.
    pub subharmonic_floor: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            enabled: Vec::new(),
            delta: None,
            limit_delta: 0.05,
            holder_center: Point::ORIGIN,
            holder_depth: 6,
            growth_population: 0,
            growth_radii_h: vec![4.0, 8.0, 16.0, 32.0],
            growth_points: 20,
            lipschitz_radius: 0.125,
            acf_population: 0,
            acf_radii_h: vec![8.0, 12.0, 16.0, 24.0, 32.0],
            acf_center: AcfCenter::FreeBoundary,
            acf_slack: 0.1,
            subharmonic_floor: -1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub radius: f64,
    pub h: f64,
    pub center: Point,
    pub segments: Vec<BoundarySegment>,
    /// Recorded Hölder exponent of the boundary data; does not change the profile.
    pub exponent: f64,
    pub ell: Ellipticity,
    pub schedule: Vec<f64>,
    pub solver: SolveConfig,
    pub diagnostics: DiagnosticsConfig,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl RunConfig {
    /// Number of populations implied by the segments.
    pub fn populations(&self) -> usize {
        self.segments.iter().map(|s| s.population).max().map_or(0, |m| m + 1)
    }
}

/// Normalises the Unicode minus and surrounding whitespace.
fn clean(s: &str) -> String {
    s.trim().replace('\u{2212}', "-")
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn real(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.take(key) {
            None => Ok(default),
            Some((line, v)) => parse_real(line, key, &v),
        }
    }

    fn count(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.take(key) {
            None => Ok(default),
            Some((line, v)) => v.parse().map_err(|_| bad(line, format!("{key}: expected a non-negative integer, got {v:?}"))),
        }
    }

    fn reals(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.take(key) {
            None => Ok(default.to_vec()),
            Some((line, v)) => parse_list(line, key, &v),
        }
    }

    fn point(&mut self, key: &str, default: Point) -> Result<Point> {
        match self.take(key) {
            None => Ok(default),
            Some((line, v)) => parse_point(line, key, &v),
        }
    }
}

fn bad(line: usize, message: impl Into<String>) -> Error {
    Error::Config { line, message: message.into() }
}

fn parse_real(line: usize, key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.parse().map_err(|_| bad(line, format!("{key}: expected a number, got {v:?}")))?;
    if !x.is_finite() {
        return Err(bad(line, format!("{key}: value must be finite")));
    }
    Ok(x)
}

fn parse_list(line: usize, key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|p| parse_real(line, key, p.trim())).collect()
}

fn parse_point(line: usize, key: &str, v: &str) -> Result<Point> {
    match parse_list(line, key, v)?.as_slice() {
        &[x, y] => Ok(Point::new(x, y)),
        _ => Err(bad(line, format!("{key}: expected `x,y`"))),
    }
}

fn parse_segment(line: usize, s: &str) -> Result<BoundarySegment> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(bad(line, format!("segment {s:?}: expected population:theta0:theta1:amplitude")));
    }
    let pop = parts[0]
        .parse()
        .map_err(|_| bad(line, format!("segment {s:?}: bad population index")))?;
    let t0 = parse_real(line, "segment theta0", parts[1])?;
    let t1 = parse_real(line, "segment theta1", parts[2])?;
    let amp = parse_real(line, "segment amplitude", parts[3])?;
    if !(t1 > t0) {
        return Err(bad(line, format!("segment {s:?}: need theta1 > theta0")));
    }
    if t1 - t0 > std::f64::consts::TAU {
        return Err(bad(line, format!("segment {s:?}: arc longer than a full turn")));
    }
    if !(amp > 0.0) {
        return Err(bad(line, format!("segment {s:?}: amplitude must be positive")));
    }
    Ok(BoundarySegment::new(t0, t1, amp, pop))
}

fn parse_momentum(line: usize, v: &str) -> Result<Momentum> {
    match v {
        "auto" => Ok(Momentum::Auto),
        "off" => Ok(Momentum::Off),
        _ => parse_real(line, "solver.momentum", v).map(Momentum::Fixed),
    }
}

const KEYS: &[&str] = &[
    "domain.radius",
    "domain.h",
    "domain.center",
    "populations.segments",
    "populations.exponent",
    "ellipticity.lambda",
    "ellipticity.Lambda",
    "epsilon.schedule",
    "solver.inner_tol",
    "solver.outer_tol",
    "solver.max_inner",
    "solver.max_outer",
    "solver.cfl_safety",
    "solver.damping",
    "solver.momentum",
    "diagnostics.enabled",
    "diagnostics.delta",
    "diagnostics.limit_delta",
    "diagnostics.holder_center",
    "diagnostics.holder_depth",
    "diagnostics.growth_population",
    "diagnostics.growth_radii_h",
    "diagnostics.growth_points",
    "diagnostics.lipschitz_radius",
    "diagnostics.acf_population",
    "diagnostics.acf_radii_h",
    "diagnostics.acf_center",
    "diagnostics.acf_slack",
    "diagnostics.subharmonic_floor",
    "output.dir",
    "seed",
];

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let Some((k, v)) = t.split_once('=') else {
            return Err(bad(line, format!("expected key=value, got {t:?}")));
        };
        let key = k.trim();
        if !KEYS.contains(&key) {
            return Err(bad(line, format!("unknown key {key:?}")));
        }
        if let Some((first, _)) = map.insert(key.to_string(), (line, clean(v))) {
            return Err(bad(line, format!("{key} already set on line {first}")));
        }
    }
    let last_line = text.lines().count();
    let mut e = Entries { map };

    let require = |e: &mut Entries, key: &str| e.take(key).ok_or_else(|| bad(last_line, format!("missing required key {key}")));

    let radius = e.real("domain.radius", 1.0)?;
    let h = e.real("domain.h", 1.0 / 64.0)?;
    let center = e.point("domain.center", Point::ORIGIN)?;
    if !(radius > 0.0 && h > 0.0) {
        return Err(bad(last_line, "domain.radius and domain.h must be positive"));
    }

    let (seg_line, seg_text) = require(&mut e, "populations.segments")?;
    let segments = seg_text
        .split(',')
        .map(|s| parse_segment(seg_line, s))
        .collect::<Result<Vec<_>>>()?;
    let pops = segments.iter().map(|s| s.population).max().map_or(0, |m| m + 1);
    for p in 0..pops {
        if !segments.iter().any(|s| s.population == p) {
            return Err(bad(seg_line, format!("population {p} has no segment")));
        }
    }
    for (i, a) in segments.iter().enumerate() {
        for b in &segments[i + 1..] {
            if a.population != b.population && a.overlaps(b) {
                return Err(bad(seg_line, format!(
                    "segments [{}, {}] and [{}, {}] overlap",
                    a.theta0, a.theta1, b.theta0, b.theta1
                )));
            }
        }
    }
    let exponent_line = e.map.get("populations.exponent").map_or(last_line, |v| v.0);
    let exponent = e.real("populations.exponent", 1.0)?;
    if !(exponent > 0.0 && exponent <= 1.0) {
        return Err(bad(exponent_line, "populations.exponent must lie in (0, 1]"));
    }

    let ell_line = e.map.get("ellipticity.lambda").or(e.map.get("ellipticity.Lambda")).map_or(last_line, |v| v.0);
    let lo = e.real("ellipticity.lambda", 1.0)?;
    let hi = e.real("ellipticity.Lambda", 2.0)?;
    let ell = Ellipticity::new(lo, hi).map_err(|err| bad(ell_line, err.to_string()))?;

    let (sched_line, sched_text) = require(&mut e, "epsilon.schedule")?;
    let schedule = parse_list(sched_line, "epsilon.schedule", &sched_text)?;
    if schedule.iter().any(|&x| !(x > 0.0)) {
        return Err(bad(sched_line, "epsilon values must be positive"));
    }
    if schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(bad(sched_line, "epsilon schedule must be strictly decreasing"));
    }

    let solver_line = e
        .map
        .iter()
        .filter(|(k, _)| k.starts_with("solver."))
        .map(|(_, v)| v.0)
        .min()
        .unwrap_or(last_line);
    let d = SolveConfig::default();
    let momentum = match e.take("solver.momentum") {
        None => d.momentum,
        Some((line, v)) => parse_momentum(line, &v)?,
    };
    let solver = SolveConfig {
        inner_tol: e.real("solver.inner_tol", d.inner_tol)?,
        outer_tol: e.real("solver.outer_tol", d.outer_tol)?,
        max_inner: e.count("solver.max_inner", d.max_inner)?,
        max_outer: e.count("solver.max_outer", d.max_outer)?,
        cfl_safety: e.real("solver.cfl_safety", d.cfl_safety)?,
        damping: e.real("solver.damping", d.damping)?,
        momentum,
    };
    solver.validate().map_err(|err| bad(solver_line, err.to_string()))?;

    let dd = DiagnosticsConfig::default();
    let enabled = match e.take("diagnostics.enabled") {
        None => Vec::new(),
        Some((_, v)) if v.is_empty() || v == "none" => Vec::new(),
        Some((line, v)) => {
            let mut out = Vec::new();
            for name in v.split(',').map(str::trim) {
                if name == "all" {
                    out.extend(Diagnostic::ALL);
                    continue;
                }
                out.push(Diagnostic::parse(name).ok_or_else(|| bad(line, format!("unknown diagnostic {name:?}")))?);
            }
            out.sort();
            out.dedup();
            out
        }
    };
    let delta = match e.take("diagnostics.delta") {
        None => None,
        Some((line, v)) => {
            let x = parse_real(line, "diagnostics.delta", &v)?;
            if !(x > 0.0) {
                return Err(bad(line, "diagnostics.delta must be positive"));
            }
            Some(x)
        }
    };
    let acf_center = match e.take("diagnostics.acf_center") {
        None => dd.acf_center,
        Some((_, v)) if v == "free_boundary" => AcfCenter::FreeBoundary,
        Some((line, v)) => AcfCenter::Near(parse_point(line, "diagnostics.acf_center", &v)?),
    };
    let mut check_pop = |key: &str, default: usize| -> Result<usize> {
        let line = e.map.get(key).map_or(last_line, |v| v.0);
        let p = e.count(key, default)?;
        if p >= pops {
            return Err(bad(line, format!("{key} = {p} but only {pops} population(s) are defined")));
        }
        Ok(p)
    };
    let growth_population = check_pop("diagnostics.growth_population", dd.growth_population)?;
    let acf_population = check_pop("diagnostics.acf_population", dd.acf_population)?;
    let diagnostics = DiagnosticsConfig {
        enabled,
        delta,
        limit_delta: e.real("diagnostics.limit_delta", dd.limit_delta)?,
        holder_center: e.point("diagnostics.holder_center", dd.holder_center)?,
        holder_depth: e.count("diagnostics.holder_depth", dd.holder_depth)?,
        growth_population,
        growth_radii_h: e.reals("diagnostics.growth_radii_h", &dd.growth_radii_h)?,
        growth_points: e.count("diagnostics.growth_points", dd.growth_points)?,
        lipschitz_radius: e.real("diagnostics.lipschitz_radius", dd.lipschitz_radius)?,
        acf_population,
        acf_radii_h: e.reals("diagnostics.acf_radii_h", &dd.acf_radii_h)?,
        acf_center,
        acf_slack: e.real("diagnostics.acf_slack", dd.acf_slack)?,
        subharmonic_floor: e.real("diagnostics.subharmonic_floor", dd.subharmonic_floor)?,
    };

    let output_dir = e.take("output.dir").map_or_else(|| PathBuf::from("seglab-out"), |(_, v)| PathBuf::from(v));
    let seed = e.count("seed", 0)? as u64;
    debug_assert!(e.map.is_empty(), "unconsumed keys {:?}", e.map.keys());

    Ok(RunConfig {
        radius,
        h,
        center,
        segments,
        exponent,
        ell,
        schedule,
        solver,
        diagnostics,
        output_dir,
        seed,
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|err| bad(0, format!("cannot read {}: {err}", path.display())))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "populations.segments=0:0:3.14159:1\nepsilon.schedule=1\n";

    #[test]
    fn minimal_config_uses_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.populations(), 1);
        assert_eq!(c.schedule, vec![1.0]);
        assert_eq!(c.h, 1.0 / 64.0);
        assert!(c.diagnostics.enabled.is_empty());
        assert_eq!(c.solver, SolveConfig::default());
    }

    #[test]
    fn full_config_parses() {
        let text = "\
# two populations
domain.radius = 1.0
domain.h = 0.03125
domain.center = 0, 0
populations.segments = 0:\u{2212}1.37:1.37:1, 1:1.77:4.51:2
ellipticity.lambda = 1
ellipticity.Lambda = 2
epsilon.schedule = 1, 0.3, 0.1
solver.outer_tol = 1e-6
solver.momentum = 0.5
diagnostics.enabled = overlap, acf
diagnostics.acf_center = -0.5, 0
output.dir = out
seed = 7
";
        let c = parse_config(text).unwrap();
        assert_eq!(c.populations(), 2);
        assert_eq!(c.segments[0].theta0, -1.37);
        assert_eq!(c.segments[1].amplitude, 2.0);
        assert_eq!(c.solver.momentum, Momentum::Fixed(0.5));
        assert_eq!(c.diagnostics.enabled, vec![Diagnostic::Overlap, Diagnostic::Acf]);
        assert_eq!(c.diagnostics.acf_center, AcfCenter::Near(Point::new(-0.5, 0.0)));
        assert_eq!(c.seed, 7);
    }

    fn line_of(text: &str) -> usize {
        match parse_config(text) {
            Err(Error::Config { line, .. }) => line,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(line_of("populations.segments=0:0:1:1\nfoo.bar=1\n"), 2);
        assert_eq!(line_of("# c\n\npopulations.segments=0:0:2:1, 1:1:3:1\nepsilon.schedule=1\n"), 3);
        assert_eq!(line_of("populations.segments=0:0:1:1\nepsilon.schedule=1,1\n"), 2);
        assert_eq!(line_of("populations.segments=0:0:1:1\nepsilon.schedule=1\nellipticity.lambda=3\n"), 3);
        assert_eq!(line_of("populations.segments=0:0:1:1\nepsilon.schedule=1\nsolver.damping=0\n"), 3);
        assert_eq!(line_of("populations.segments=0:0:1:1\nepsilon.schedule=1\nepsilon.schedule=2\n"), 3);
        assert_eq!(line_of("populations.segments=0:0:1:1\nnot a pair\n"), 2);
        assert_eq!(line_of("populations.segments=1:0:1:1\nepsilon.schedule=1\n"), 1);
    }
}
