//! Pucci extremal operators.
//!
//! `M-(H) = Lambda * sum(e < 0) + lambda * sum(e > 0)` and
//! `M+(H) = lambda * sum(e < 0) + Lambda * sum(e > 0)` over the eigenvalues `e`
//! of a symmetric matrix `H`. At field level `H` is the centred-difference
//! Hessian on the 9-point stencil.

use crate::error::{Error, Result};
use crate::geometry::{DomainMask, ScalarField};

/// Ellipticity bounds `0 < lambda <= Lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipticity {
    lower: f64,
    upper: f64,
}

impl Ellipticity {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0 && lower <= upper && upper.is_finite()) {
            return Err(Error::Ellipticity { lower, upper });
        }
        Ok(Self { lower, upper })
    }

    /// `lambda`, the smallest admissible coefficient eigenvalue.
    pub fn lower(&self) -> f64 {
        self.lower
    }

    /// `Lambda`, the largest admissible coefficient eigenvalue.
    pub fn upper(&self) -> f64 {
        self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Minus,
    Plus,
}

/// Symmetric `n x n` matrix, upper triangle stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * (n + 1) / 2] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// 2x2 matrix `[[a, b], [b, c]]`.
    pub fn new2(a: f64, b: f64, c: f64) -> Self {
        Self { n: 2, data: vec![a, b, c] }
    }

    /// Builds from a full row-major matrix, reading only the upper triangle.
    pub fn from_upper(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        r * self.n - r * (r + 1) / 2 + c
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.slot(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, t: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|v| v * t).collect() }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn add(&self, other: &SymMatrix) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    /// `Q^T H Q` for a square row-major `q` of size `n x n`.
    pub fn congruence(&self, q: &[f64]) -> Self {
        let n = self.n;
        assert_eq!(q.len(), n * n);
        Self::from_upper(n, |i, j| {
            let mut s = 0.0;
            for k in 0..n {
                for l in 0..n {
                    s += q[k * n + i] * self.get(k, l) * q[l * n + j];
                }
            }
            s
        })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Eigenvalues of a symmetric 2x2 `[[a, b], [b, c]]`, ascending.
#[inline]
pub fn eigenvalues2(a: f64, b: f64, c: f64) -> [f64; 2] {
    let mean = 0.5 * (a + c);
    let rad = (0.5 * (a - c)).hypot(b);
    [mean - rad, mean + rad]
}

/// Full spectrum, ascending.
///
/// Closed form for `n = 2`, cyclic Jacobi rotations otherwise.
pub fn eigenvalues(h: &SymMatrix) -> Vec<f64> {
    match h.dim() {
        0 => Vec::new(),
        1 => vec![h.get(0, 0)],
        2 => eigenvalues2(h.get(0, 0), h.get(0, 1), h.get(1, 1)).to_vec(),
        _ => jacobi_eigenvalues(h),
    }
}

fn jacobi_eigenvalues(h: &SymMatrix) -> Vec<f64> {
    const MAX_SWEEPS: usize = 100;
    const REL_TOL: f64 = 1e-12;
    let n = h.dim();
    let mut a: Vec<f64> = (0..n * n).map(|k| h.get(k / n, k % n)).collect();
    let frob: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if frob == 0.0 {
        return vec![0.0; n];
    }
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q] * a[p * n + q])
            .sum::<f64>()
            .sqrt();
        if off <= REL_TOL * REL_TOL * frob {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut e: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    e.sort_by(f64::total_cmp);
    e
}

#[inline]
fn extremal(eigs: impl IntoIterator<Item = f64>, neg_weight: f64, pos_weight: f64) -> f64 {
    let (mut neg, mut pos) = (0.0, 0.0);
    for e in eigs {
        if e < 0.0 {
            neg += e;
        } else {
            pos += e;
        }
    }
    neg_weight * neg + pos_weight * pos
}

pub fn pucci_minus(h: &SymMatrix, ell: Ellipticity) -> f64 {
    extremal(eigenvalues(h), ell.upper, ell.lower)
}

pub fn pucci_plus(h: &SymMatrix, ell: Ellipticity) -> f64 {
    extremal(eigenvalues(h), ell.lower, ell.upper)
}

pub fn pucci(h: &SymMatrix, ell: Ellipticity, sign: Sign) -> f64 {
    match sign {
        Sign::Minus => pucci_minus(h, ell),
        Sign::Plus => pucci_plus(h, ell),
    }
}

/// `M-` of the 2x2 Hessian `[[a, b], [b, c]]` without allocating.
#[inline]
pub fn pucci_minus2(a: f64, b: f64, c: f64, ell: Ellipticity) -> f64 {
    extremal(eigenvalues2(a, b, c), ell.upper, ell.lower)
}

#[inline]
pub fn pucci_plus2(a: f64, b: f64, c: f64, ell: Ellipticity) -> f64 {
    extremal(eigenvalues2(a, b, c), ell.lower, ell.upper)
}

/// Centred-difference Hessian entries `(H11, H12, H22)` at node `k`.
///
/// Caller guarantees the 9-point stencil is on the lattice.
#[inline]
pub(crate) fn hessian_entries(v: &[f64], k: usize, nx: usize, inv_h2: f64) -> (f64, f64, f64) {
    let c = v[k];
    let e = v[k + 1];
    let w = v[k - 1];
    let n = v[k + nx];
    let s = v[k - nx];
    let h11 = (e - 2.0 * c + w) * inv_h2;
    let h22 = (n - 2.0 * c + s) * inv_h2;
    let h12 = (v[k + nx + 1] - v[k - nx + 1] - v[k + nx - 1] + v[k - nx - 1]) * 0.25 * inv_h2;
    (h11, h12, h22)
}

/// Discrete Hessian of `field` at interior node `node`.
pub fn discrete_hessian(field: &ScalarField, mask: &DomainMask, node: usize) -> Result<SymMatrix> {
    if !mask.is_stencil_complete(node) {
        return Err(Error::IncompleteStencil { node });
    }
    let g = field.grid();
    let inv_h2 = 1.0 / (g.h() * g.h());
    let (a, b, c) = hessian_entries(field.values(), node, g.nx(), inv_h2);
    Ok(SymMatrix::new2(a, b, c))
}

/// Field of Pucci values with the nodes where the stencil was complete.
#[derive(Debug, Clone)]
pub struct PucciField {
    pub values: ScalarField,
    pub valid: Vec<bool>,
}

/// Pucci operator of the discrete Hessian at every stencil-complete node; 0 elsewhere.
pub fn pucci_field(field: &ScalarField, mask: &DomainMask, ell: Ellipticity, sign: Sign) -> PucciField {
    let g = *field.grid();
    let inv_h2 = 1.0 / (g.h() * g.h());
    let mut values = ScalarField::zeros(g);
    let mut valid = vec![false; g.len()];
    for k in mask.stencil_complete() {
        let (a, b, c) = hessian_entries(field.values(), k, g.nx(), inv_h2);
        let m = match sign {
            Sign::Minus => pucci_minus2(a, b, c, ell),
            Sign::Plus => pucci_plus2(a, b, c, ell),
        };
        values.set(k, m);
        valid[k] = true;
    }
    PucciField { values, valid }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_disk_domain, Point};

    fn ell(l: f64, u: f64) -> Ellipticity {
        Ellipticity::new(l, u).unwrap()
    }

    #[test]
    fn ellipticity_validation() {
        assert!(Ellipticity::new(2.0, 1.0).is_err());
        assert!(Ellipticity::new(0.0, 1.0).is_err());
        assert!(Ellipticity::new(1.0, f64::INFINITY).is_err());
        assert!(Ellipticity::new(1.0, 1.0).is_ok());
    }

    #[test]
    fn storage_is_symmetric() {
        let mut m = SymMatrix::zeros(3);
        m.set(2, 0, 4.0);
        assert_eq!(m.get(0, 2), 4.0);
        assert_eq!(m.data.len(), 6);
    }

    #[test]
    fn eigenvalue_examples() {
        assert_eq!(eigenvalues(&SymMatrix::identity(2)), vec![1.0, 1.0]);
        assert_eq!(eigenvalues(&SymMatrix::diag(&[3.0, -1.0])), vec![-1.0, 3.0]);
        // characteristic polynomial mu^2 - 1
        assert_eq!(eigenvalues(&SymMatrix::new2(0.0, 1.0, 0.0)), vec![-1.0, 1.0]);
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        // tridiag(-1, 2, -1) of size 4: 2 - 2 cos(k pi / 5)
        let m = SymMatrix::from_upper(4, |i, j| match j - i {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        });
        let e = eigenvalues(&m);
        for (k, v) in e.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / 5.0).cos();
            assert!((v - exact).abs() < 1e-12, "{v} vs {exact}");
        }
        // diagonal input is returned sorted
        assert_eq!(eigenvalues(&SymMatrix::diag(&[5.0, -2.0, 0.5])), vec![-2.0, 0.5, 5.0]);
    }

    #[test]
    fn pucci_examples() {
        let e = ell(1.0, 2.0);
        assert_eq!(pucci_minus(&SymMatrix::identity(2), e), 2.0);
        assert_eq!(pucci_minus(&SymMatrix::diag(&[1.0, -1.0]), e), -1.0);
        assert_eq!(pucci_minus(&SymMatrix::identity(2).neg(), e), -4.0);
        assert_eq!(pucci_plus(&SymMatrix::identity(2), e), 4.0);
        assert_eq!(pucci_plus(&SymMatrix::diag(&[1.0, -1.0]), e), 1.0);
        let h = SymMatrix::new2(0.3, -1.7, 2.2);
        let lap = ell(1.0, 1.0);
        assert!((pucci_minus(&h, lap) - h.trace()).abs() < 1e-14);
        assert!((pucci_plus(&h, lap) - h.trace()).abs() < 1e-14);
    }

    #[test]
    fn hessian_exact_on_quadratics() {
        let (grid, mask) = build_disk_domain(1.0, 1.0 / 16.0, Point::ORIGIN).unwrap();
        let xx = ScalarField::from_fn(&mask, |p| p.x * p.x);
        let xy = ScalarField::from_fn(&mask, |p| p.x * p.y);
        let k = grid.nearest(Point::new(0.25, -0.5));
        let hx = discrete_hessian(&xx, &mask, k).unwrap();
        assert!((hx.get(0, 0) - 2.0).abs() < 1e-12);
        assert!(hx.get(0, 1).abs() < 1e-12 && hx.get(1, 1).abs() < 1e-12);
        let hy = discrete_hessian(&xy, &mask, k).unwrap();
        assert!((hy.get(0, 1) - 1.0).abs() < 1e-12);
        assert!(hy.get(0, 0).abs() < 1e-12 && hy.get(1, 1).abs() < 1e-12);
    }

    #[test]
    fn hessian_quartic_remainder() {
        // (x+h)^4 - 2x^4 + (x-h)^4 = 12 x^2 h^2 + 2 h^4, so at x = 1: 12 + 2 h^2
        let h = 1.0 / 8.0;
        let (grid, mask) = build_disk_domain(2.0, h, Point::ORIGIN).unwrap();
        let f = ScalarField::from_fn(&mask, |p| p.x.powi(4));
        let k = grid.nearest(Point::new(1.0, 0.0));
        let hx = discrete_hessian(&f, &mask, k).unwrap();
        assert!((hx.get(0, 0) - (12.0 + 2.0 * h * h)).abs() < 1e-10);
    }

    #[test]
    fn hessian_rejects_incomplete_stencil() {
        let (_, mask) = build_disk_domain(1.0, 0.25, Point::ORIGIN).unwrap();
        let f = ScalarField::from_fn(&mask, |p| p.x);
        let b = mask.boundary()[0];
        assert!(matches!(discrete_hessian(&f, &mask, b), Err(Error::IncompleteStencil { .. })));
    }

    #[test]
    fn pucci_field_examples() {
        let (_, mask) = build_disk_domain(1.0, 1.0 / 16.0, Point::ORIGIN).unwrap();
        let e = ell(1.0, 2.0);
        let bowl = ScalarField::from_fn(&mask, |p| 0.5 * (p.x * p.x + p.y * p.y));
        let saddle = ScalarField::from_fn(&mask, |p| 0.5 * (p.x * p.x - p.y * p.y));
        let harmonic = ScalarField::from_fn(&mask, |p| p.x * p.y);
        let pb = pucci_field(&bowl, &mask, e, Sign::Minus);
        let ps = pucci_field(&saddle, &mask, e, Sign::Minus);
        let ph = pucci_field(&harmonic, &mask, ell(1.0, 1.0), Sign::Minus);
        let mut count = 0;
        for k in 0..mask.grid().len() {
            if pb.valid[k] {
                count += 1;
                assert!((pb.values.get(k) - 2.0).abs() < 1e-10);
                assert!((ps.values.get(k) + 1.0).abs() < 1e-10);
                assert!(ph.values.get(k).abs() < 1e-12);
            } else {
                assert_eq!(pb.values.get(k), 0.0);
            }
        }
        assert_eq!(count, mask.interior().len());
    }
}
