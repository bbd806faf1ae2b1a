//! Discrete disk domains, node classification, Dirichlet data and field measurements.
//!
//! The domain is a disk carved out of a square lattice. Nodes strictly inside
//! the disk are [`NodeClass::Interior`]; lattice points just outside that touch
//! an interior node (including diagonally) carry Dirichlet data and are
//! [`NodeClass::Boundary`]; everything else is [`NodeClass::Exterior`] and is
//! never read by a stencil.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Uniform Cartesian lattice. Node `(i, j)` sits at `origin + (i h, j h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    nx: usize,
    ny: usize,
    h: f64,
    origin: Point,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, h: f64, origin: Point) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::Sizing(format!("need at least 3x3 nodes, got {nx}x{ny}")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Sizing(format!("spacing must be positive, got {h}")));
        }
        Ok(Self { nx, ny, h, origin })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    /// Position of node `(i, j)`, computed from the index each time.
    #[inline]
    pub fn position(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.origin.x + i as f64 * self.h,
            self.origin.y + j as f64 * self.h,
        )
    }

    #[inline]
    pub fn position_of(&self, k: usize) -> Point {
        let (i, j) = self.ij(k);
        self.position(i, j)
    }

    /// Nearest node to `p`, clamped to the lattice.
    pub fn nearest(&self, p: Point) -> usize {
        let fi = ((p.x - self.origin.x) / self.h).round();
        let fj = ((p.y - self.origin.y) / self.h).round();
        let i = fi.clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = fj.clamp(0.0, (self.ny - 1) as f64) as usize;
        self.index(i, j)
    }

    /// Node indices whose position lies in the closed ball `|x - center| <= radius`.
    pub fn nodes_in_ball(&self, center: Point, radius: f64) -> impl Iterator<Item = usize> + '_ {
        let slack = 1e-12 * radius.max(self.h);
        let r = radius + slack;
        let lo_i = (((center.x - r - self.origin.x) / self.h).floor().max(0.0)) as usize;
        let lo_j = (((center.y - r - self.origin.y) / self.h).floor().max(0.0)) as usize;
        let hi_i = (((center.x + r - self.origin.x) / self.h).ceil().max(0.0) as usize).min(self.nx - 1);
        let hi_j = (((center.y + r - self.origin.y) / self.h).ceil().max(0.0) as usize).min(self.ny - 1);
        (lo_j..=hi_j)
            .flat_map(move |j| (lo_i..=hi_i).map(move |i| (i, j)))
            .filter(move |&(i, j)| self.position(i, j).dist(center) <= r)
            .map(move |(i, j)| self.index(i, j))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeClass {
    Interior,
    Boundary,
    Exterior,
}

impl NodeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeClass::Interior => "interior",
            NodeClass::Boundary => "boundary",
            NodeClass::Exterior => "exterior",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "interior" => Some(NodeClass::Interior),
            "boundary" => Some(NodeClass::Boundary),
            "exterior" => Some(NodeClass::Exterior),
            _ => None,
        }
    }
}

/// Offsets of the 8-neighbourhood as `(di, dj)`.
pub const NEIGHBOURS_8: [(isize, isize); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

/// Node classification of a disk domain on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct DomainMask {
    grid: Grid,
    classes: Vec<NodeClass>,
    center: Point,
    radius: f64,
    interior: Vec<usize>,
    boundary: Vec<usize>,
}

impl DomainMask {
    /// Builds a mask from an explicit classification. Used by the field-dump
    /// reader; the disk geometry is carried along for diagnostics.
    pub fn from_classes(grid: Grid, classes: Vec<NodeClass>, center: Point, radius: f64) -> Result<Self> {
        if classes.len() != grid.len() {
            return Err(Error::Sizing(format!(
                "{} classes for a grid of {} nodes",
                classes.len(),
                grid.len()
            )));
        }
        let interior: Vec<usize> = (0..grid.len()).filter(|&k| classes[k] == NodeClass::Interior).collect();
        let boundary: Vec<usize> = (0..grid.len()).filter(|&k| classes[k] == NodeClass::Boundary).collect();
        if interior.is_empty() {
            return Err(Error::Sizing("no interior node".into()));
        }
        if boundary.is_empty() {
            return Err(Error::Sizing("no boundary node".into()));
        }
        Ok(Self { grid, classes, center, radius, interior, boundary })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    #[inline]
    pub fn class(&self, k: usize) -> NodeClass {
        self.classes[k]
    }

    pub fn classes(&self) -> &[NodeClass] {
        &self.classes
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// Neighbour of `k` shifted by `(di, dj)`, if it lies on the lattice.
    #[inline]
    pub fn neighbour(&self, k: usize, di: isize, dj: isize) -> Option<usize> {
        let (i, j) = self.grid.ij(k);
        let ni = i as isize + di;
        let nj = j as isize + dj;
        if ni < 0 || nj < 0 || ni >= self.grid.nx as isize || nj >= self.grid.ny as isize {
            return None;
        }
        Some(self.grid.index(ni as usize, nj as usize))
    }

    /// Interior node whose 3x3 stencil touches no exterior node.
    pub fn is_stencil_complete(&self, k: usize) -> bool {
        self.classes[k] == NodeClass::Interior
            && NEIGHBOURS_8.iter().all(|&(di, dj)| {
                self.neighbour(k, di, dj)
                    .is_some_and(|n| self.classes[n] != NodeClass::Exterior)
            })
    }

    /// Interior nodes with a complete 9-point stencil.
    pub fn stencil_complete(&self) -> impl Iterator<Item = usize> + '_ {
        self.interior.iter().copied().filter(move |&k| self.is_stencil_complete(k))
    }

    /// Angle of node `k` about the disk centre, in `[0, 2pi)`.
    pub fn angle_of(&self, k: usize) -> f64 {
        let p = self.grid.position_of(k);
        (p.y - self.center.y).atan2(p.x - self.center.x).rem_euclid(TAU)
    }
}

/// Builds the lattice covering the disk `|x - center| < radius` and classifies its nodes.
///
/// The lattice is centred on `center` with `ceil(radius / h)` nodes on each
/// side, so every interior node keeps its full 3x3 neighbourhood on the grid.
/// Spacing is rejected when the centre node's 9-point stencil would not lie
/// entirely inside the disk (`h * sqrt(2) >= radius`).
pub fn build_disk_domain(radius: f64, h: f64, center: Point) -> Result<(Grid, DomainMask)> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Sizing(format!("radius must be positive, got {radius}")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Sizing(format!("spacing must be positive, got {h}")));
    }
    if h * std::f64::consts::SQRT_2 >= radius {
        return Err(Error::Sizing(format!(
            "spacing {h} too coarse for radius {radius}: the centre stencil leaves the disk"
        )));
    }
    let half = (radius / h - 1e-9).ceil() as usize;
    let n = 2 * half + 1;
    let origin = Point::new(center.x - half as f64 * h, center.y - half as f64 * h);
    let grid = Grid::new(n, n, h, origin)?;

    let inside: Vec<bool> = (0..grid.len())
        .map(|k| grid.position_of(k).dist(center) < radius)
        .collect();
    let mut classes = vec![NodeClass::Exterior; grid.len()];
    for k in 0..grid.len() {
        if inside[k] {
            classes[k] = NodeClass::Interior;
            continue;
        }
        let (i, j) = grid.ij(k);
        let touches = NEIGHBOURS_8.iter().any(|&(di, dj)| {
            let ni = i as isize + di;
            let nj = j as isize + dj;
            ni >= 0
                && nj >= 0
                && (ni as usize) < grid.nx()
                && (nj as usize) < grid.ny()
                && inside[grid.index(ni as usize, nj as usize)]
        });
        if touches {
            classes[k] = NodeClass::Boundary;
        }
    }
    let mask = DomainMask::from_classes(grid, classes, center, radius)?;
    Ok((grid, mask))
}

/// One real value per lattice node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self { values: vec![0.0; grid.len()], grid }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Sizing(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Sizing(format!("non-finite value at node {k}")));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every non-exterior node; exterior nodes hold 0.
    pub fn from_fn(mask: &DomainMask, mut f: impl FnMut(Point) -> f64) -> Self {
        let grid = *mask.grid();
        let values = (0..grid.len())
            .map(|k| match mask.class(k) {
                NodeClass::Exterior => 0.0,
                _ => f(grid.position_of(k)),
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, k: usize) -> f64 {
        self.values[k]
    }

    #[inline]
    pub fn set(&mut self, k: usize, v: f64) {
        self.values[k] = v;
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest value over the boundary nodes of `mask`.
    pub fn boundary_sup(&self, mask: &DomainMask) -> f64 {
        mask.boundary().iter().map(|&k| self.values[k]).fold(0.0, f64::max)
    }

    /// Sup-norm of the difference over non-exterior nodes.
    pub fn max_abs_diff(&self, other: &ScalarField, mask: &DomainMask) -> f64 {
        (0..self.values.len())
            .filter(|&k| mask.class(k) != NodeClass::Exterior)
            .map(|k| (self.values[k] - other.values[k]).abs())
            .fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

/// Dirichlet data for one population on an arc of the disk boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySegment {
    /// Arc start, radians.
    pub theta0: f64,
    /// Arc end, radians, `theta0 < theta1 <= theta0 + 2pi`.
    pub theta1: f64,
    pub amplitude: f64,
    pub population: usize,
}

impl BoundarySegment {
    pub fn new(theta0: f64, theta1: f64, amplitude: f64, population: usize) -> Self {
        Self { theta0, theta1, amplitude, population }
    }

    fn validate(&self) -> Result<()> {
        let width = self.theta1 - self.theta0;
        if !(self.theta0.is_finite() && self.theta1.is_finite()) || !(width > 0.0) || width > TAU + 1e-12 {
            return Err(Error::Segments(format!(
                "arc [{}, {}] must satisfy theta0 < theta1 <= theta0 + 2pi",
                self.theta0, self.theta1
            )));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::Segments(format!("amplitude must be >= 0, got {}", self.amplitude)));
        }
        Ok(())
    }

    fn width(&self) -> f64 {
        (self.theta1 - self.theta0).min(TAU)
    }

    /// Offset of `theta` from the arc start, in `[0, 2pi)`.
    fn offset(&self, theta: f64) -> f64 {
        (theta - self.theta0).rem_euclid(TAU)
    }

    fn contains_open(&self, theta: f64) -> bool {
        let t = self.offset(theta);
        t > 0.0 && t < self.width()
    }

    /// `A cos^2(pi (theta - mid) / width)` on the open arc, 0 elsewhere.
    pub fn profile(&self, theta: f64) -> f64 {
        if !self.contains_open(theta) {
            return 0.0;
        }
        let s = self.offset(theta) / self.width() - 0.5;
        let c = (PI * s).cos();
        self.amplitude * c * c
    }

    /// True when the open arcs of `self` and `other` intersect.
    pub fn overlaps(&self, other: &BoundarySegment) -> bool {
        const TOL: f64 = 1e-12;
        let d = other.offset(self.theta0);
        let d_rev = self.offset(other.theta0);
        d < other.width() - TOL || d_rev < self.width() - TOL
    }
}

/// Samples the boundary data of every population onto the boundary nodes of `mask`.
///
/// Population count is `1 + max population index`. A boundary node is assigned
/// to at most one population, so products of distinct populations vanish
/// exactly. `exponent` is the Hölder exponent the data is declared to have; it
/// is validated but does not change the profile.
pub fn build_boundary_data(mask: &DomainMask, segments: &[BoundarySegment], exponent: f64) -> Result<Vec<ScalarField>> {
    if !(exponent > 0.0 && exponent <= 1.0) {
        return Err(Error::Segments(format!("Hölder exponent must lie in (0, 1], got {exponent}")));
    }
    if segments.is_empty() {
        return Err(Error::Segments("no segments".into()));
    }
    for s in segments {
        s.validate()?;
    }
    for (a, sa) in segments.iter().enumerate() {
        for sb in &segments[a + 1..] {
            if sa.population != sb.population && sa.overlaps(sb) {
                return Err(Error::Segments(format!(
                    "arcs [{}, {}] (population {}) and [{}, {}] (population {}) overlap",
                    sa.theta0, sa.theta1, sa.population, sb.theta0, sb.theta1, sb.population
                )));
            }
        }
    }

    let d = segments.iter().map(|s| s.population).max().unwrap_or(0) + 1;
    let mut fields = vec![ScalarField::zeros(*mask.grid()); d];
    for &k in mask.boundary() {
        let theta = mask.angle_of(k);
        let owner = segments
            .iter()
            .filter(|s| s.amplitude > 0.0)
            .find(|s| s.contains_open(theta))
            .map(|s| s.population);
        if let Some(p) = owner {
            let v = segments
                .iter()
                .filter(|s| s.population == p)
                .map(|s| s.profile(theta))
                .fold(0.0, f64::max);
            fields[p].set(k, v);
        }
    }
    Ok(fields)
}

/// `max - min` of `field` over non-exterior nodes in the closed ball.
pub fn oscillation(field: &ScalarField, mask: &DomainMask, center: Point, radius: f64) -> Result<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in mask.grid().nodes_in_ball(center, radius) {
        if mask.class(k) == NodeClass::Exterior {
            continue;
        }
        let v = field.get(k);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi < lo {
        return Err(Error::EmptyBall { x: center.x, y: center.y, radius });
    }
    Ok(hi - lo)
}
