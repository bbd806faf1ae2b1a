//! Radial sub- and supersolutions on rings.
//!
//! Both barriers are `psi(x) = M r phi(|x| / r)` with
//! `phi(y) = m1 + m2 |y|^-alpha` and `m2 = +-a^alpha / (b^alpha - a^alpha)`.
//! The subsolution falls from `rM` at `|x| = ar/b` to 0 at `|x| = r` with
//! `M-(psi) >= 0`; the supersolution rises from 0 at `|x| = ar/b` to `rM` at
//! `|x| = r` with `M+(psi) <= 0`. Both signs hold once
//! `alpha >= (Lambda (n-1) - lambda) / lambda`.

use std::fmt;

use crate::error::{Error, Result};
use crate::pucci::{hessian_entries, pucci, Ellipticity, Sign, SymMatrix};

/// Slack making `alpha > n - 2` strict.
pub const ALPHA_FLOOR_SLACK: f64 = 1e-9;

/// Smallest admissible exponent, `max((Lambda (n-1) - lambda) / lambda, n - 2 + 1e-9)`.
pub fn min_alpha(ell: Ellipticity, n: usize) -> f64 {
    let pucci_bound = (ell.upper() * (n as f64 - 1.0) - ell.lower()) / ell.lower();
    pucci_bound.max(n as f64 - 2.0 + ALPHA_FLOOR_SLACK)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierKind {
    Sub,
    Super,
}

impl BarrierKind {
    pub fn sign(self) -> Sign {
        match self {
            BarrierKind::Sub => Sign::Minus,
            BarrierKind::Super => Sign::Plus,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sub" => Some(BarrierKind::Sub),
            "super" => Some(BarrierKind::Super),
            _ => None,
        }
    }
}

impl fmt::Display for BarrierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BarrierKind::Sub => "sub",
            BarrierKind::Super => "super",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSpec {
    pub amplitude: f64,
    pub r: f64,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub ell: Ellipticity,
    pub n: usize,
}

impl BarrierSpec {
    /// Validated spec; rejects exponents below [`min_alpha`].
    pub fn new(amplitude: f64, r: f64, a: f64, b: f64, alpha: f64, ell: Ellipticity, n: usize) -> Result<Self> {
        let spec = Self::with_any_exponent(amplitude, r, a, b, alpha, ell, n)?;
        let floor = min_alpha(ell, n);
        if alpha < floor {
            return Err(Error::Barrier(format!("alpha = {alpha} is below the admissible minimum {floor}")));
        }
        Ok(spec)
    }

    /// Same checks as [`BarrierSpec::new`] except the ellipticity bound on
    /// `alpha`; only `alpha > 0` is required. Used for sign-reversal controls.
    pub fn with_any_exponent(amplitude: f64, r: f64, a: f64, b: f64, alpha: f64, ell: Ellipticity, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Barrier(format!("dimension must be >= 2, got {n}")));
        }
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::Barrier(format!("amplitude must be >= 0, got {amplitude}")));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Barrier(format!("outer radius must be positive, got {r}")));
        }
        if !(a > 0.0 && a < b && b.is_finite()) {
            return Err(Error::Barrier(format!("need 0 < a < b, got a = {a}, b = {b}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Barrier(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { amplitude, r, a, b, alpha, ell, n })
    }

    /// `a r / b`.
    pub fn inner_radius(&self) -> f64 {
        self.a * self.r / self.b
    }

    /// `a^alpha / (b^alpha - a^alpha)`.
    pub fn m2(&self) -> f64 {
        let aa = self.a.powf(self.alpha);
        aa / (self.b.powf(self.alpha) - aa)
    }
}

/// Closed-form radial profile, stored by coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialProfile {
    pub kind: BarrierKind,
    pub amplitude: f64,
    pub scale: f64,
    pub alpha: f64,
    /// Constant term of `phi`.
    pub m1: f64,
    /// Coefficient of `|y|^-alpha` in `phi`.
    pub m2: f64,
    pub inner_radius: f64,
    /// Slope constant `c`, with normal derivative `c M` at the relevant radius.
    pub slope: f64,
}

pub fn subsolution_barrier(spec: &BarrierSpec) -> RadialProfile {
    let m2 = spec.m2();
    RadialProfile {
        kind: BarrierKind::Sub,
        amplitude: spec.amplitude,
        scale: spec.r,
        alpha: spec.alpha,
        m1: -m2,
        m2,
        inner_radius: spec.inner_radius(),
        slope: -spec.alpha * m2,
    }
}

pub fn supersolution_barrier(spec: &BarrierSpec) -> RadialProfile {
    let m2 = spec.m2();
    let q = spec.a / spec.b;
    RadialProfile {
        kind: BarrierKind::Super,
        amplitude: spec.amplitude,
        scale: spec.r,
        alpha: spec.alpha,
        m1: 1.0 + m2,
        m2: -m2,
        inner_radius: spec.inner_radius(),
        slope: spec.alpha / (q - q.powf(spec.alpha + 1.0)),
    }
}

pub fn barrier(kind: BarrierKind, spec: &BarrierSpec) -> RadialProfile {
    match kind {
        BarrierKind::Sub => subsolution_barrier(spec),
        BarrierKind::Super => supersolution_barrier(spec),
    }
}

impl RadialProfile {
    pub fn outer_radius(&self) -> f64 {
        self.scale
    }

    /// `psi` at distance `rho > 0` from the centre.
    pub fn value(&self, rho: f64) -> f64 {
        let y = rho / self.scale;
        self.amplitude * self.scale * (self.m1 + self.m2 * y.powf(-self.alpha))
    }

    /// `d psi / d rho`.
    pub fn radial_derivative(&self, rho: f64) -> f64 {
        let y = rho / self.scale;
        -self.alpha * self.amplitude * self.m2 * y.powf(-self.alpha - 1.0)
    }

    /// `d^2 psi / d rho^2`.
    pub fn radial_second_derivative(&self, rho: f64) -> f64 {
        let y = rho / self.scale;
        self.alpha * (self.alpha + 1.0) * self.amplitude * self.m2 * y.powf(-self.alpha - 2.0) / self.scale
    }

    /// `(radius, value)` pairs the profile is declared to take on the ring edges.
    pub fn declared_boundary(&self) -> [(f64, f64); 2] {
        let top = self.scale * self.amplitude;
        match self.kind {
            BarrierKind::Sub => [(self.inner_radius, top), (self.scale, 0.0)],
            BarrierKind::Super => [(self.inner_radius, 0.0), (self.scale, top)],
        }
    }

    /// Radius where the slope constant is attained: outer for sub, inner for super.
    pub fn slope_radius(&self) -> f64 {
        match self.kind {
            BarrierKind::Sub => self.scale,
            BarrierKind::Super => self.inner_radius,
        }
    }

    /// `c M`.
    pub fn normal_derivative(&self) -> f64 {
        self.slope * self.amplitude
    }

    /// Exact Hessian at `x` (any dimension): `psi'' e e^T + (psi'/rho)(I - e e^T)`.
    pub fn hessian_at(&self, x: &[f64]) -> SymMatrix {
        let rho = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let d1 = self.radial_derivative(rho) / rho;
        let d2 = self.radial_second_derivative(rho);
        SymMatrix::from_upper(x.len(), |i, j| {
            let eij = x[i] * x[j] / (rho * rho);
            let delta = if i == j { 1.0 } else { 0.0 };
            d2 * eij + d1 * (delta - eij)
        })
    }

    /// `|d^k psi / d rho^k|` at `rho`. The magnitude decreases in `rho`, so this
    /// also bounds it on `[rho, inf)`; it bounds every `k`-th directional
    /// derivative of `|x|^-alpha` there too.
    pub fn derivative_bound(&self, k: u32, rho: f64) -> f64 {
        let a = self.alpha;
        let rising: f64 = (0..k).map(|m| a + m as f64).product();
        (self.amplitude * self.m2).abs() * self.scale.powf(1.0 + a) * rising * rho.powf(-a - k as f64)
    }
}

/// Outcome of sampling a barrier and checking the sign of the discrete Pucci operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierReport {
    pub kind: BarrierKind,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub upper_lambda: f64,
    pub n: usize,
    pub h: f64,
    /// Largest wrong-sign value of the discrete operator over the ring.
    pub worst_violation: f64,
    /// Truncation allowance `C_h h^2` plus round-off.
    pub allowance: f64,
    pub nodes: usize,
    pub pass: bool,
}

impl BarrierReport {
    pub const CSV_HEADER: &'static str = "kind,a,b,alpha,lambda,Lambda,n,h,worst_violation,pass";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{}",
            self.kind,
            self.a,
            self.b,
            self.alpha,
            self.lambda,
            self.upper_lambda,
            self.n,
            self.h,
            self.worst_violation,
            self.pass
        )
    }
}

/// Samples `profile` on a lattice of spacing `grid_h` centred at the origin and
/// evaluates the discrete Pucci operator of matching sign (`M-` for sub, `M+`
/// for super) at every node of the closed ring `ar/b <= |x| <= r`.
///
/// Passes when the worst wrong-sign value stays below
/// `Lambda sqrt(n) (sqrt(10)/12) K4 h^2`, where `K4` bounds the fourth
/// derivatives of the profile over the stencil, plus a round-off term.
pub fn verify_barrier(profile: &RadialProfile, spec: &BarrierSpec, grid_h: f64) -> Result<BarrierReport> {
    verify_barrier_ring(profile, spec, grid_h, false)
}

/// As [`verify_barrier`]; with `extended` the ring reaches down to half the
/// inner radius, where the closed form is still smooth.
pub fn verify_barrier_ring(profile: &RadialProfile, spec: &BarrierSpec, grid_h: f64, extended: bool) -> Result<BarrierReport> {
    if spec.n != 2 {
        return Err(Error::Barrier(format!("grid verification is two-dimensional, got n = {}", spec.n)));
    }
    let inner = if extended { 0.5 * profile.inner_radius } else { profile.inner_radius };
    let outer = profile.outer_radius();
    if !(grid_h > 0.0 && grid_h < (outer - inner) / 8.0) {
        return Err(Error::Barrier(format!(
            "ring [{inner}, {outer}] under-resolved at h = {grid_h}; need h < {}",
            (outer - inner) / 8.0
        )));
    }
    let reach = std::f64::consts::SQRT_2 * grid_h;
    if inner - reach <= 0.0 {
        return Err(Error::Barrier("stencil reaches the singular centre".into()));
    }

    let half = (outer / grid_h).ceil() as usize + 1;
    let n = 2 * half + 1;
    let coord = |i: usize| (i as f64 - half as f64) * grid_h;
    let mut samples = vec![0.0; n * n];
    let mut max_abs = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let rho = coord(i).hypot(coord(j));
            if rho >= inner - 2.0 * grid_h && rho <= outer + 2.0 * grid_h {
                let v = profile.value(rho);
                samples[j * n + i] = v;
                max_abs = max_abs.max(v.abs());
            }
        }
    }

    let inv_h2 = 1.0 / (grid_h * grid_h);
    let sign = profile.kind.sign();
    let mut worst = 0.0f64;
    let mut rho_min = f64::INFINITY;
    let mut nodes = 0;
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let rho = coord(i).hypot(coord(j));
            if rho < inner || rho > outer {
                continue;
            }
            rho_min = rho_min.min(rho);
            let (a, b, c) = hessian_entries(&samples, j * n + i, n, inv_h2);
            let m = pucci(&SymMatrix::new2(a, b, c), spec.ell, sign);
            let violation = match profile.kind {
                BarrierKind::Sub => -m,
                BarrierKind::Super => m,
            };
            worst = worst.max(violation);
            nodes += 1;
        }
    }
    if nodes == 0 {
        return Err(Error::Barrier("no lattice node falls on the ring".into()));
    }

    let k4 = profile.derivative_bound(4, rho_min - reach);
    let truncation = spec.ell.upper() * (spec.n as f64).sqrt() * (10f64.sqrt() / 12.0) * k4 * grid_h * grid_h;
    let roundoff = 64.0 * f64::EPSILON * max_abs.max(1.0) * inv_h2 * spec.ell.upper();
    let allowance = truncation + roundoff;
    Ok(BarrierReport {
        kind: profile.kind,
        a: spec.a,
        b: spec.b,
        alpha: spec.alpha,
        lambda: spec.ell.lower(),
        upper_lambda: spec.ell.upper(),
        n: spec.n,
        h: grid_h,
        worst_violation: worst,
        allowance,
        nodes,
        pass: worst <= allowance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pucci::{pucci_minus, pucci_plus};

    fn ell(l: f64, u: f64) -> Ellipticity {
        Ellipticity::new(l, u).unwrap()
    }

    #[test]
    fn min_alpha_examples() {
        assert_eq!(min_alpha(ell(1.0, 2.0), 2), 1.0);
        assert_eq!(min_alpha(ell(1.0, 1.0), 2), 1e-9);
        assert_eq!(min_alpha(ell(1.0, 3.0), 3), 5.0);
    }

    #[test]
    fn subsolution_closed_forms() {
        let spec = BarrierSpec::new(1.0, 1.0, 1.0, 2.0, 1.0, ell(1.0, 2.0), 2).unwrap();
        let p = subsolution_barrier(&spec);
        assert_eq!(p.m2, 1.0);
        assert!((p.value(0.5) - 1.0).abs() < 1e-15);
        assert_eq!(p.value(1.0), 0.0);
        assert_eq!(p.slope, -1.0);

        let spec = BarrierSpec::new(1.0, 1.0, 1.0, 5.0, 2.0, ell(1.0, 2.0), 2).unwrap();
        let p = subsolution_barrier(&spec);
        assert!((p.m2 - 1.0 / 24.0).abs() < 1e-16);
        assert!((p.slope + 1.0 / 12.0).abs() < 1e-16);
    }

    #[test]
    fn supersolution_closed_forms() {
        let spec = BarrierSpec::new(1.0, 1.0, 1.0, 2.0, 1.0, ell(1.0, 2.0), 2).unwrap();
        let p = supersolution_barrier(&spec);
        assert!(p.value(0.5).abs() < 1e-15);
        assert!((p.value(1.0) - 1.0).abs() < 1e-15);
        assert!((p.slope - 4.0).abs() < 1e-14);

        let spec = BarrierSpec::new(1.0, 1.0, 1.0, 5.0, 1.0, ell(1.0, 2.0), 2).unwrap();
        assert!((supersolution_barrier(&spec).slope - 25.0 / 4.0).abs() < 1e-13);
    }

    #[test]
    fn spec_validation() {
        let e = ell(1.0, 2.0);
        assert!(BarrierSpec::new(1.0, 1.0, 2.0, 1.0, 1.0, e, 2).is_err());
        assert!(BarrierSpec::new(1.0, 1.0, 1.0, 2.0, 0.5, e, 2).is_err());
        assert!(BarrierSpec::with_any_exponent(1.0, 1.0, 1.0, 2.0, 0.5, e, 2).is_ok());
        assert!(BarrierSpec::with_any_exponent(1.0, 1.0, 1.0, 2.0, 0.0, e, 2).is_err());
        assert!(BarrierSpec::new(1.0, -1.0, 1.0, 2.0, 1.0, e, 2).is_err());
        assert!(BarrierSpec::new(1.0, 1.0, 1.0, 2.0, 1.0, e, 1).is_err());
    }

    #[test]
    fn exact_hessian_signs_in_three_dimensions() {
        let e = ell(1.0, 3.0);
        let alpha = min_alpha(e, 3);
        let spec = BarrierSpec::new(2.0, 1.5, 1.0, 3.0, alpha, e, 3).unwrap();
        let sub = subsolution_barrier(&spec);
        let sup = supersolution_barrier(&spec);
        for &x in &[[0.6, 0.1, -0.2], [0.0, 0.0, 1.4], [-0.7, 0.7, 0.3]] {
            let hs = sub.hessian_at(&x);
            let hp = sup.hessian_at(&x);
            assert!(pucci_minus(&hs, e) >= -1e-10, "{}", pucci_minus(&hs, e));
            assert!(pucci_plus(&hp, e) <= 1e-10, "{}", pucci_plus(&hp, e));
        }
        let bad = BarrierSpec::with_any_exponent(2.0, 1.5, 1.0, 3.0, alpha / 2.0, e, 3).unwrap();
        assert!(pucci_minus(&subsolution_barrier(&bad).hessian_at(&[0.6, 0.1, -0.2]), e) < 0.0);
    }

    #[test]
    fn verify_passes_at_critical_exponent() {
        let e = ell(1.0, 2.0);
        let spec = BarrierSpec::new(1.0, 1.0, 1.0, 2.0, min_alpha(e, 2), e, 2).unwrap();
        let h = 1.0 / 64.0;
        let sub = verify_barrier(&subsolution_barrier(&spec), &spec, h).unwrap();
        let sup = verify_barrier(&supersolution_barrier(&spec), &spec, h).unwrap();
        assert!(sub.pass && sup.pass, "{sub:?} {sup:?}");
        assert!(sub.nodes > 1000);
    }

    #[test]
    fn verify_fails_below_critical_exponent() {
        let e = ell(1.0, 2.0);
        let spec = BarrierSpec::with_any_exponent(1.0, 1.0, 1.0, 2.0, min_alpha(e, 2) / 2.0, e, 2).unwrap();
        let rep = verify_barrier(&subsolution_barrier(&spec), &spec, 1.0 / 64.0).unwrap();
        assert!(!rep.pass);
        assert!(rep.worst_violation > 10.0 * rep.allowance);
    }

    #[test]
    fn verify_rejects_coarse_grid() {
        let e = ell(1.0, 2.0);
        let spec = BarrierSpec::new(1.0, 1.0, 1.0, 2.0, 1.0, e, 2).unwrap();
        assert!(verify_barrier(&subsolution_barrier(&spec), &spec, 0.1).is_err());
    }

    #[test]
    fn report_row_has_header_arity() {
        let e = ell(1.0, 2.0);
        let spec = BarrierSpec::new(1.0, 1.0, 1.0, 2.0, 1.0, e, 2).unwrap();
        let rep = verify_barrier(&supersolution_barrier(&spec), &spec, 1.0 / 32.0).unwrap();
        assert_eq!(rep.csv_row().split(',').count(), BarrierReport::CSV_HEADER.split(',').count());
        assert!(rep.csv_row().starts_with("super,"));
    }
}
