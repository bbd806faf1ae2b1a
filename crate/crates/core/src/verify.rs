//! Headless property suites: randomized Pucci algebra laws and barrier
//! sign checks at preset specs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::barriers::{barrier, min_alpha, BarrierKind, BarrierSpec};
use crate::barriers::verify_barrier;
use crate::error::Result;
use crate::pucci::{pucci_minus, pucci_plus, Ellipticity, SymMatrix};

pub const LAW_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRow {
    pub name: String,
    pub detail: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteReport {
    pub rows: Vec<SuiteRow>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    fn push(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.rows.push(SuiteRow { name: name.into(), detail: detail.into(), pass });
    }

    pub fn extend(&mut self, other: SuiteReport) {
        self.rows.extend(other.rows);
    }

    /// One `PASS|FAIL  name  detail` line per row.
    pub fn table(&self) -> String {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
        self.rows
            .iter()
            .map(|r| format!("{}  {:<width$}  {}\n", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PucciSuiteConfig {
    pub seed: u64,
    pub samples: usize,
    /// Fixed ellipticity for every sample; random when `None`.
    pub ell: Option<Ellipticity>,
}

impl Default for PucciSuiteConfig {
    fn default() -> Self {
        Self { seed: 0x5e61ab, samples: 10_000, ell: None }
    }
}

fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
    let scale = 10f64.powf(rng.gen_range(-1.0..0.5));
    let mut m = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            m.set(i, j, scale * rng.gen_range(-1.0..1.0));
        }
    }
    m
}

/// Random rotation as a product of Givens rotations over every plane,
/// row-major `n x n`.
pub fn random_rotation(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        q[i * n + i] = 1.0;
    }
    for p in 0..n {
        for r in p + 1..n {
            let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let (s, c) = t.sin_cos();
            for row in 0..n {
                let a = q[row * n + p];
                let b = q[row * n + r];
                q[row * n + p] = c * a - s * b;
                q[row * n + r] = s * a + c * b;
            }
        }
    }
    q
}

fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
    let d: Vec<f64> = (0..n)
        .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..2.0) })
        .collect();
    SymMatrix::diag(&d).congruence(&random_rotation(rng, n))
}

/// Worst violation of each law over the sample set.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LawViolations {
    pub reflection: f64,
    pub chain: f64,
    pub ordering: f64,
    pub psd_identity: f64,
    pub rotation: f64,
    pub homogeneity: f64,
    pub monotonicity: f64,
}

impl LawViolations {
    pub fn named(&self) -> [(&'static str, f64); 7] {
        [
            ("reflection", self.reflection),
            ("additivity chain", self.chain),
            ("minus below plus", self.ordering),
            ("psd trace identity", self.psd_identity),
            ("rotation invariance", self.rotation),
            ("positive homogeneity", self.homogeneity),
            ("ellipticity monotonicity", self.monotonicity),
        ]
    }
}

/// Samples `(H, G, lambda, Lambda)` with `n` cycling through 2, 3, 4 and
/// records the largest violation of each algebraic law.
pub fn pucci_law_violations(cfg: &PucciSuiteConfig) -> LawViolations {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut v = LawViolations::default();
    for s in 0..cfg.samples {
        let n = 2 + s % 3;
        let ell = match cfg.ell {
            Some(e) => e,
            None => {
                let lo = rng.gen_range(0.1..2.0);
                Ellipticity::new(lo, lo * rng.gen_range(1.0..5.0)).expect("sampled ellipticity is valid")
            }
        };
        let h = random_sym(&mut rng, n);
        let g = random_sym(&mut rng, n);
        let (mh, ph) = (pucci_minus(&h, ell), pucci_plus(&h, ell));
        let (mg, pg) = (pucci_minus(&g, ell), pucci_plus(&g, ell));
        let hg = h.add(&g);
        let (mhg, phg) = (pucci_minus(&hg, ell), pucci_plus(&hg, ell));

        v.reflection = v.reflection.max((pucci_minus(&h.neg(), ell) + ph).abs());

        let chain = [mh + mg, mhg, ph + mg, phg, ph + pg];
        for w in chain.windows(2) {
            v.chain = v.chain.max(w[0] - w[1]);
        }

        v.ordering = v.ordering.max(mh - ph);

        let p = random_psd(&mut rng, n);
        let tr = p.trace();
        v.psd_identity = v
            .psd_identity
            .max((pucci_minus(&p, ell) - ell.lower() * tr).abs())
            .max((pucci_plus(&p, ell) - ell.upper() * tr).abs());

        let q = random_rotation(&mut rng, n);
        let rot = h.congruence(&q);
        v.rotation = v
            .rotation
            .max((pucci_minus(&rot, ell) - mh).abs())
            .max((pucci_plus(&rot, ell) - ph).abs());

        let t = rng.gen_range(0.0..5.0);
        v.homogeneity = v.homogeneity.max((pucci_minus(&h.scale(t), ell) - t * mh).abs());

        let gain = pucci_minus(&h.add(&p), ell) - mh;
        v.monotonicity = v
            .monotonicity
            .max(ell.lower() * tr - gain)
            .max(gain - ell.upper() * tr);
    }
    v
}

pub fn pucci_suite(cfg: &PucciSuiteConfig) -> SuiteReport {
    let v = pucci_law_violations(cfg);
    let mut report = SuiteReport::default();
    for (name, worst) in v.named() {
        report.push(
            format!("pucci {name}"),
            worst <= LAW_TOLERANCE,
            format!("worst {worst:.3e} over {} samples (tol {LAW_TOLERANCE:e})", cfg.samples),
        );
    }
    report
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierSuiteConfig {
    pub shapes: Vec<(f64, f64)>,
    pub ellipticities: Vec<Ellipticity>,
    /// Offsets added to `min_alpha`.
    pub alpha_offsets: Vec<f64>,
    /// Multiplies every preset exponent; values below 1 push it under the minimum.
    pub alpha_scale: f64,
    pub h: f64,
}

impl Default for BarrierSuiteConfig {
    fn default() -> Self {
        Self {
            shapes: vec![(1.0, 2.0), (1.0, 5.0)],
            ellipticities: vec![
                Ellipticity::new(1.0, 2.0).expect("valid"),
                Ellipticity::new(1.0, 4.0).expect("valid"),
            ],
            alpha_offsets: vec![0.0, 1.0],
            alpha_scale: 1.0,
            h: 1.0 / 128.0,
        }
    }
}

/// Relative mismatch of the declared boundary values.
pub fn boundary_exactness(kind: BarrierKind, spec: &BarrierSpec) -> f64 {
    let p = barrier(kind, spec);
    p.declared_boundary()
        .iter()
        .map(|&(rho, want)| (p.value(rho) - want).abs() / (1.0 + want.abs()))
        .fold(0.0, f64::max)
}

/// `(|central difference - c M|, allowance)` at the slope radius with step `h`.
///
/// The allowance is the central-difference remainder `h^2/6 max|psi'''|`
/// plus round-off.
pub fn normal_derivative_check(kind: BarrierKind, spec: &BarrierSpec, h: f64) -> (f64, f64) {
    let p = barrier(kind, spec);
    let rho = p.slope_radius();
    let fd = (p.value(rho + h) - p.value(rho - h)) / (2.0 * h);
    let err = (fd - p.normal_derivative()).abs();
    let scale = p.value(rho - h).abs().max(p.value(rho + h).abs()).max(1.0);
    let allowance = h * h / 6.0 * p.derivative_bound(3, rho - h) + 8.0 * f64::EPSILON * scale / h;
    (err, allowance)
}

fn fmt_ell(e: Ellipticity) -> String {
    format!("({},{})", e.lower(), e.upper())
}

pub fn barrier_suite(cfg: &BarrierSuiteConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::default();
    for &ell in &cfg.ellipticities {
        let floor = min_alpha(ell, 2);
        for &(a, b) in &cfg.shapes {
            for &off in &cfg.alpha_offsets {
                let alpha = (floor + off) * cfg.alpha_scale;
                let spec = BarrierSpec::with_any_exponent(1.0, 1.0, a, b, alpha, ell, 2)?;
                for kind in [BarrierKind::Sub, BarrierKind::Super] {
                    let tag = format!("barrier {kind} a={a} b={b} alpha={alpha} ell={}", fmt_ell(ell));
                    let rep = verify_barrier(&barrier(kind, &spec), &spec, cfg.h)?;
                    report.push(
                        format!("{tag} sign"),
                        rep.pass,
                        format!("worst {:.3e} allowance {:.3e} nodes {}", rep.worst_violation, rep.allowance, rep.nodes),
                    );
                    let exact = boundary_exactness(kind, &spec);
                    report.push(format!("{tag} boundary"), exact <= 1e-14, format!("relative error {exact:.3e}"));
                    let (err, allow) = normal_derivative_check(kind, &spec, cfg.h);
                    report.push(
                        format!("{tag} slope"),
                        err <= allow,
                        format!("fd error {err:.3e} allowance {allow:.3e}"),
                    );
                }
            }
        }
    }
    Ok(report)
}

/// Checks that halving `min_alpha` makes both kinds fail the sign check.
pub fn negative_control(ell: Ellipticity, h: f64) -> Result<SuiteReport> {
    let mut report = SuiteReport::default();
    let alpha = min_alpha(ell, 2) / 2.0;
    let spec = BarrierSpec::with_any_exponent(1.0, 1.0, 1.0, 2.0, alpha, ell, 2)?;
    for kind in [BarrierKind::Sub, BarrierKind::Super] {
        let rep = verify_barrier(&barrier(kind, &spec), &spec, h)?;
        report.push(
            format!("negative control {kind} alpha={alpha} ell={}", fmt_ell(ell)),
            !rep.pass,
            format!("worst {:.3e} allowance {:.3e} (expected to fail)", rep.worst_violation, rep.allowance),
        );
    }
    Ok(report)
}
