//! Batch driver behind the `seglab` binary.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    acf_functional, free_boundary_points, holder_exponent_estimate, interaction_mass, limit_residual,
    linear_growth_profile, lipschitz_norm_estimate, segregated_pair, subharmonicity_check, support_overlap,
};
use crate::barriers::{barrier, verify_barrier, BarrierKind, BarrierReport, BarrierSpec};
use crate::config::{AcfCenter, Diagnostic, RunConfig};
use crate::error::{Error, Result};
use crate::geometry::{build_boundary_data, build_disk_domain, DomainMask, Point, ScalarField};
use crate::io::{convergence_log_string, fmt_f64, write_field_dump, CsvBlock};
use crate::pucci::Ellipticity;
use crate::solver::{epsilon_continuation, SystemState};
use crate::verify::{barrier_suite, negative_control, pucci_suite, BarrierSuiteConfig, PucciSuiteConfig, SuiteReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_DIAGNOSTIC: i32 = 4;

/// Environment variable that overrides `output.dir`.
pub const OUTPUT_DIR_ENV: &str = "SEGLAB_OUTPUT_DIR";

/// Allowed relative rise of the overlap between consecutive `epsilon`.
pub const OVERLAP_SLACK: f64 = 0.05;
/// Final interaction mass may not exceed this multiple of the earlier maximum.
pub const INTERACTION_FACTOR: f64 = 3.0;
pub const LIMIT_FACTOR: f64 = 10.0;
pub const SUPERSOLUTION_TOL: f64 = 1e-3;
pub const HOLDER_SPREAD: f64 = 0.15;
pub const GROWTH_SPREAD: f64 = 3.0;
/// Lipschitz estimates may rise at most this factor above their first-`epsilon` value.
pub const LIPSCHITZ_FACTOR: f64 = 2.0;

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub file: String,
    pub kind: &'static str,
    pub key: String,
    pub value: String,
    pub status: &'static str,
}

pub const SUMMARY_HEADER: &str = "file,kind,key,value,status";

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub summary: Vec<SummaryRow>,
    pub states: Vec<SystemState>,
    pub out_dir: PathBuf,
}

/// Rendered diagnostic with its verdict.
#[derive(Debug, Clone)]
pub struct DiagnosticResult {
    pub diagnostic: Diagnostic,
    pub block: CsvBlock,
    pub key: String,
    pub value: f64,
    pub pass: bool,
}

fn status(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

/// Default support threshold `max(10 outer_tol, 1e-3 sup phi)`.
pub fn default_delta(cfg: &RunConfig) -> f64 {
    let sup = cfg.segments.iter().map(|s| s.amplitude).fold(0.0, f64::max);
    (10.0 * cfg.solver.outer_tol).max(1e-3 * sup)
}

/// Everything derived from the config before solving; fails on invalid input.
pub struct Prepared {
    pub mask: DomainMask,
    pub phi: Vec<ScalarField>,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let (_, mask) = build_disk_domain(cfg.radius, cfg.h, cfg.center)?;
    let phi = build_boundary_data(&mask, &cfg.segments, cfg.exponent)?;
    Ok(Prepared { mask, phi })
}

/// Solves, writes artifacts into `out_dir` and evaluates the enabled diagnostics.
///
/// Invalid input is rejected before anything is written.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutcome> {
    let Prepared { mask, phi } = prepare(cfg)?;
    fs::create_dir_all(out_dir)?;

    let states = epsilon_continuation(&phi, &cfg.schedule, cfg.ell, &mask, &cfg.solver)?;
    let mut summary = Vec::new();
    for (k, state) in states.iter().enumerate() {
        for (i, field) in state.fields.iter().enumerate() {
            let name = format!("field_e{k}_u{i}.csv");
            write_field_dump(&out_dir.join(&name), field, &mask)?;
            summary.push(SummaryRow {
                file: name,
                kind: "field",
                key: format!("residual eps={}", state.epsilon),
                value: fmt_f64(state.residuals[i]),
                status: status(state.converged),
            });
        }
    }
    let records: Vec<_> = states.iter().flat_map(|s| s.history.iter().copied()).collect();
    fs::write(out_dir.join("convergence.csv"), convergence_log_string(&records))?;
    let converged = states.iter().all(|s| s.converged);
    let worst = states.iter().map(SystemState::max_residual).fold(0.0, f64::max);
    summary.push(SummaryRow {
        file: "convergence.csv".into(),
        kind: "log",
        key: "max_residual".into(),
        value: fmt_f64(worst),
        status: status(converged),
    });

    let mut diagnostics_pass = true;
    for &d in &cfg.diagnostics.enabled {
        let res = run_diagnostic(d, cfg, &mask, &states)?;
        let name = format!("diag_{}.csv", d.name());
        fs::write(out_dir.join(&name), res.block.render())?;
        diagnostics_pass &= res.pass;
        summary.push(SummaryRow {
            file: name,
            kind: "diagnostic",
            key: res.key,
            value: fmt_f64(res.value),
            status: status(res.pass),
        });
    }

    let mut text = String::from(SUMMARY_HEADER);
    text.push('\n');
    for r in &summary {
        text.push_str(&format!("{},{},{},{},{}\n", r.file, r.kind, r.key, r.value, r.status));
    }
    fs::write(out_dir.join("summary.csv"), text)?;

    let exit_code = if !converged {
        EXIT_NONCONVERGENCE
    } else if !diagnostics_pass {
        EXIT_DIAGNOSTIC
    } else {
        EXIT_OK
    };
    Ok(RunOutcome { exit_code, summary, states, out_dir: out_dir.to_path_buf() })
}

/// Up to `count` free-boundary nodes, chosen by a seeded sample and returned in index order.
pub fn sample_points(points: &[usize], count: usize, seed: u64) -> Vec<usize> {
    if points.len() <= count {
        return points.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = sample(&mut rng, points.len(), count).into_iter().map(|i| points[i]).collect();
    picked.sort_unstable();
    picked
}

/// Free-boundary nodes of the growth population at the final `epsilon`, sampled.
pub fn growth_points(cfg: &RunConfig, mask: &DomainMask, last: &SystemState) -> Vec<usize> {
    let delta = cfg.diagnostics.delta.unwrap_or_else(|| default_delta(cfg));
    let all = free_boundary_points(&last.fields[cfg.diagnostics.growth_population], mask, delta);
    sample_points(&all, cfg.diagnostics.growth_points, cfg.seed)
}

/// Free-boundary node of `field` closest to `target`.
pub fn snap_to_free_boundary(field: &ScalarField, mask: &DomainMask, delta: f64, target: Point) -> Option<usize> {
    let g = mask.grid();
    free_boundary_points(field, mask, delta)
        .into_iter()
        .min_by(|&a, &b| g.position_of(a).dist(target).total_cmp(&g.position_of(b).dist(target)))
}

pub fn run_diagnostic(d: Diagnostic, cfg: &RunConfig, mask: &DomainMask, states: &[SystemState]) -> Result<DiagnosticResult> {
    let dc = &cfg.diagnostics;
    let delta = dc.delta.unwrap_or_else(|| default_delta(cfg));
    let h = cfg.h;
    let last = states.last().ok_or_else(|| Error::Solver("no states".into()))?;
    let ell = cfg.ell;
    let result = match d {
        Diagnostic::Overlap => {
            let mut block = CsvBlock::new("support_overlap", &["epsilon", "overlap"]).param("delta", delta);
            let v: Vec<f64> = states.iter().map(|s| support_overlap(s, mask, delta)).collect();
            for (s, x) in states.iter().zip(&v) {
                block.push(vec![fmt_f64(s.epsilon), fmt_f64(*x)]);
            }
            let pass = v.windows(2).all(|w| w[1] <= w[0] * (1.0 + OVERLAP_SLACK));
            DiagnosticResult { diagnostic: d, block, key: "final_overlap".into(), value: *v.last().unwrap_or(&0.0), pass }
        }
        Diagnostic::Interaction => {
            let mut block = CsvBlock::new("interaction_mass", &["epsilon", "mass"]);
            let v: Vec<f64> = states.iter().map(|s| interaction_mass(s, mask)).collect();
            for (s, x) in states.iter().zip(&v) {
                block.push(vec![fmt_f64(s.epsilon), fmt_f64(*x)]);
            }
            let (last_v, earlier) = v.split_last().expect("non-empty schedule");
            let pass = earlier.is_empty() || *last_v <= INTERACTION_FACTOR * earlier.iter().copied().fold(0.0, f64::max);
            DiagnosticResult { diagnostic: d, block, key: "final_mass".into(), value: *last_v, pass }
        }
        Diagnostic::Subharmonicity => {
            let mut block = CsvBlock::new("subharmonicity_check", &["epsilon", "component", "min_laplacian"])
                .param("floor", dc.subharmonic_floor);
            let mut worst = f64::INFINITY;
            for s in states {
                for (i, f) in s.fields.iter().enumerate() {
                    let m = subharmonicity_check(f, mask);
                    worst = worst.min(m);
                    block.push(vec![fmt_f64(s.epsilon), i.to_string(), fmt_f64(m)]);
                }
            }
            DiagnosticResult { diagnostic: d, block, key: "min_laplacian".into(), value: worst, pass: worst >= dc.subharmonic_floor }
        }
        Diagnostic::Limit => {
            let mut block = CsvBlock::new("limit_residual", &["epsilon", "interior", "coupling", "supersolution", "nodes"])
                .param("delta", dc.limit_delta);
            let mut fin = None;
            for s in states {
                let r = limit_residual(s, ell, mask, dc.limit_delta);
                block.push(vec![
                    fmt_f64(s.epsilon),
                    fmt_f64(r.interior),
                    fmt_f64(r.coupling),
                    fmt_f64(r.supersolution),
                    r.nodes.to_string(),
                ]);
                fin = Some(r);
            }
            let r = fin.expect("non-empty schedule");
            let pass = r.interior <= LIMIT_FACTOR * r.coupling + 1e-12 && r.supersolution <= SUPERSOLUTION_TOL;
            DiagnosticResult { diagnostic: d, block, key: "final_supersolution".into(), value: r.supersolution, pass }
        }
        Diagnostic::Holder => {
            let c = dc.holder_center;
            let mut block = CsvBlock::new("holder_exponent_estimate", &["epsilon", "component", "alpha", "constant", "fit_residual", "depth"])
                .param("center", format!("({};{})", c.x, c.y))
                .param("k_max", dc.holder_depth);
            let mut spread: f64 = 0.0;
            for i in 0..last.d() {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for s in states {
                    match holder_exponent_estimate(&s.fields[i], mask, c, dc.holder_depth) {
                        Ok(e) => {
                            lo = lo.min(e.alpha);
                            hi = hi.max(e.alpha);
                            block.push(vec![
                                fmt_f64(s.epsilon),
                                i.to_string(),
                                fmt_f64(e.alpha),
                                fmt_f64(e.constant),
                                fmt_f64(e.fit_residual),
                                e.depth.to_string(),
                            ]);
                        }
                        Err(_) => block.push(vec![fmt_f64(s.epsilon), i.to_string(), "nan".into(), "nan".into(), "nan".into(), "0".into()]),
                    }
                }
                if hi >= lo {
                    spread = spread.max(hi - lo);
                }
            }
            DiagnosticResult { diagnostic: d, block, key: "exponent_spread".into(), value: spread, pass: spread < HOLDER_SPREAD }
        }
        Diagnostic::Growth => {
            let radii: Vec<f64> = dc.growth_radii_h.iter().map(|r| r * h).collect();
            let points = growth_points(cfg, mask, last);
            let field = &last.fields[dc.growth_population];
            let mut block = CsvBlock::new("linear_growth_profile", &["point", "x", "y", "radius", "sup", "ratio"])
                .param("epsilon", last.epsilon)
                .param("population", dc.growth_population)
                .param("delta", delta);
            let mut worst: f64 = 1.0;
            for &k in &points {
                let p = linear_growth_profile(field, mask, k, &radii)?;
                for r in &p.rows {
                    block.push(vec![k.to_string(), fmt_f64(p.center.x), fmt_f64(p.center.y), fmt_f64(r.radius), fmt_f64(r.sup), fmt_f64(r.ratio)]);
                }
                for &r in &p.skipped {
                    block.push(vec![k.to_string(), fmt_f64(p.center.x), fmt_f64(p.center.y), fmt_f64(r), "skipped".into(), "skipped".into()]);
                }
                if let Some(s) = p.ratio_spread() {
                    worst = worst.max(s);
                }
            }
            DiagnosticResult { diagnostic: d, block, key: "worst_ratio_spread".into(), value: worst, pass: worst <= GROWTH_SPREAD }
        }
        Diagnostic::Lipschitz => {
            let points = growth_points(cfg, mask, last);
            let g = mask.grid();
            let mut block = CsvBlock::new("lipschitz_norm_estimate", &["epsilon", "point", "x", "y", "lipschitz"])
                .param("radius", dc.lipschitz_radius);
            let mut worst: f64 = 1.0;
            for &k in &points {
                let c = g.position_of(k);
                let mut series = Vec::with_capacity(states.len());
                for s in states {
                    let l = lipschitz_norm_estimate(&s.fields[dc.growth_population], mask, c, dc.lipschitz_radius)?;
                    series.push(l);
                    block.push(vec![fmt_f64(s.epsilon), k.to_string(), fmt_f64(c.x), fmt_f64(c.y), fmt_f64(l)]);
                }
                worst = worst.max(sweep_growth(&series));
            }
            DiagnosticResult { diagnostic: d, block, key: "worst_sweep_factor".into(), value: worst, pass: worst <= LIPSCHITZ_FACTOR }
        }
        Diagnostic::Acf => {
            let (u, v) = segregated_pair(last, dc.acf_population);
            let target = match dc.acf_center {
                AcfCenter::FreeBoundary => mask.center(),
                AcfCenter::Near(p) => p,
            };
            let node = snap_to_free_boundary(&u, mask, delta, target)
                .ok_or_else(|| Error::Hypothesis("segregated pair has no free-boundary node".into()))?;
            let center = mask.grid().position_of(node);
            let reach = mask.radius() - center.dist(mask.center());
            let radii: Vec<f64> = dc.acf_radii_h.iter().map(|r| r * h).filter(|&r| r <= 0.5 * reach).collect();
            let curve = acf_functional(&u, &v, mask, center, &radii)?;
            let mut block = CsvBlock::new("acf_functional", &["rho", "j"])
                .param("epsilon", last.epsilon)
                .param("population", dc.acf_population)
                .param("center", format!("({};{})", center.x, center.y))
                .param("bound", fmt_f64(curve.bound));
            for (r, j) in curve.radii.iter().zip(&curve.values) {
                block.push(vec![fmt_f64(*r), fmt_f64(*j)]);
            }
            let drop = curve.worst_relative_drop();
            let below = curve.values.iter().all(|&j| j <= curve.bound);
            let pass = !curve.values.is_empty() && drop <= dc.acf_slack && below;
            DiagnosticResult { diagnostic: d, block, key: "worst_relative_drop".into(), value: drop, pass }
        }
    };
    Ok(result)
}

/// `max_k L_k / L_0`: how far a quantity rises above its value at the first
/// (largest) `epsilon`. A decay never counts against the bound.
pub fn sweep_growth(series: &[f64]) -> f64 {
    let Some(&first) = series.first() else { return 1.0 };
    let hi = series.iter().copied().fold(first, f64::max);
    if first > 0.0 {
        hi / first
    } else if hi > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

/// Options of the `verify` verb.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub samples: usize,
    pub lambda: Option<f64>,
    pub upper_lambda: Option<f64>,
    pub alpha_scale: f64,
    pub h: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        let p = PucciSuiteConfig::default();
        Self { seed: p.seed, samples: p.samples, lambda: None, upper_lambda: None, alpha_scale: 1.0, h: 1.0 / 128.0 }
    }
}

/// Runs the Pucci and barrier suites. A bad ellipticity is a config error.
pub fn verify(opts: &VerifyOptions) -> Result<SuiteReport> {
    let fixed = match (opts.lambda, opts.upper_lambda) {
        (None, None) => None,
        (l, u) => {
            let lo = l.unwrap_or(1.0);
            let hi = u.unwrap_or(lo.max(2.0));
            Some(Ellipticity::new(lo, hi)?)
        }
    };
    if !(opts.alpha_scale > 0.0 && opts.alpha_scale.is_finite()) {
        return Err(Error::Barrier(format!("alpha scale must be positive, got {}", opts.alpha_scale)));
    }
    let mut report = pucci_suite(&PucciSuiteConfig { seed: opts.seed, samples: opts.samples, ell: fixed });
    let mut bcfg = BarrierSuiteConfig { alpha_scale: opts.alpha_scale, h: opts.h, ..Default::default() };
    if let Some(e) = fixed {
        bcfg.ellipticities = vec![e];
    }
    report.extend(barrier_suite(&bcfg)?);
    for &e in &bcfg.ellipticities {
        report.extend(negative_control(e, opts.h)?);
    }
    Ok(report)
}

/// Builds the barrier of `kind` with `M = r = 1` and checks it at spacing `h`.
///
/// Exponents below the minimum are accepted so that the failing sign shows up
/// in the report.
#[allow(clippy::too_many_arguments)]
pub fn dump_barrier(kind: BarrierKind, a: f64, b: f64, alpha: f64, lambda: f64, upper_lambda: f64, n: usize, h: f64) -> Result<BarrierReport> {
    let ell = Ellipticity::new(lambda, upper_lambda)?;
    let spec = BarrierSpec::with_any_exponent(1.0, 1.0, a, b, alpha, ell, n)?;
    verify_barrier(&barrier(kind, &spec), &spec, h)
}

/// Output directory: the environment override wins over the config.
pub fn resolve_output_dir(cfg: &RunConfig) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => cfg.output_dir.clone(),
    }
}

/// Exit code for an error returned by [`run`], [`verify`] or [`dump_barrier`].
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Hypothesis(_) | Error::Overlap(_) | Error::EmptyBall { .. } => EXIT_DIAGNOSTIC,
        _ => EXIT_CONFIG,
    }
}
