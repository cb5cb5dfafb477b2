//! Concrete and lazy convex-set representations with support-function
//! evaluation and an LP-backed polyhedron calculus.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::lp::{self, LpOutcome};

/// Inclusion tolerance used by the subset checks.
pub const INCL_TOL: f64 = 1e-9;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SetError {
    #[error("set is unbounded in the queried direction")]
    Unbounded,
    #[error("set is empty")]
    Empty,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// A closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "interval bounds out of order: [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn support(&self, d: f64) -> f64 {
        if d >= 0.0 {
            d * self.hi
        } else {
            d * self.lo
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Axis-aligned box in center/radius form.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperrectangle {
    pub center: Vector,
    pub radius: Vector,
}

impl Hyperrectangle {
    pub fn new(center: Vector, radius: Vector) -> Self {
        assert_eq!(center.len(), radius.len());
        assert!(radius.iter().all(|&r| r >= 0.0), "negative radius");
        Hyperrectangle { center, radius }
    }

    pub fn from_bounds(lo: &Vector, hi: &Vector) -> Self {
        Hyperrectangle::new((lo + hi) / 2.0, (hi - lo) / 2.0)
    }

    pub fn unit_ball(dim: usize, radius: f64) -> Self {
        Hyperrectangle::new(Vector::zeros(dim), Vector::from_element(dim, radius))
    }

    pub fn point(p: Vector) -> Self {
        let dim = p.len();
        Hyperrectangle::new(p, Vector::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn lo(&self, i: usize) -> f64 {
        self.center[i] - self.radius[i]
    }

    pub fn hi(&self, i: usize) -> f64 {
        self.center[i] + self.radius[i]
    }

    pub fn interval(&self, i: usize) -> Interval {
        Interval::new(self.lo(i), self.hi(i))
    }

    pub fn support(&self, d: &Vector) -> f64 {
        let mut s = self.center.dot(d);
        for i in 0..self.dim() {
            s += self.radius[i] * d[i].abs();
        }
        s
    }

    /// Exact Minkowski sum of two boxes.
    pub fn sum(&self, other: &Hyperrectangle) -> Hyperrectangle {
        Hyperrectangle::new(&self.center + &other.center, &self.radius + &other.radius)
    }

    /// Smallest box containing both operands.
    pub fn hull(&self, other: &Hyperrectangle) -> Hyperrectangle {
        let n = self.dim();
        let lo = Vector::from_fn(n, |i, _| self.lo(i).min(other.lo(i)));
        let hi = Vector::from_fn(n, |i, _| self.hi(i).max(other.hi(i)));
        Hyperrectangle::from_bounds(&lo, &hi)
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        (0..self.dim()).all(|i| (x[i] - self.center[i]).abs() <= self.radius[i] + tol)
    }

    /// Diameter in the infinity norm: the largest side length.
    pub fn diameter_inf(&self) -> f64 {
        self.radius.iter().fold(0.0, |m, &r| m.max(2.0 * r))
    }

    pub fn vertices(&self) -> Vec<Vector> {
        let n = self.dim();
        let mut out = Vec::with_capacity(1 << n);
        for mask in 0..(1usize << n) {
            let v = Vector::from_fn(n, |i, _| {
                if mask >> i & 1 == 1 {
                    self.hi(i)
                } else {
                    self.lo(i)
                }
            });
            out.push(v);
        }
        out
    }

    pub fn to_polyhedron(&self) -> HPolyhedron {
        let n = self.dim();
        let mut cons = Vec::with_capacity(2 * n);
        for i in 0..n {
            let mut a = Vector::zeros(n);
            a[i] = 1.0;
            cons.push(HalfSpace::new(a.clone(), self.hi(i)));
            a[i] = -1.0;
            cons.push(HalfSpace::new(a, -self.lo(i)));
        }
        HPolyhedron::new(cons)
    }
}

/// The half-space `normal . x <= offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub normal: Vector,
    pub offset: f64,
}

impl HalfSpace {
    pub fn new(normal: Vector, offset: f64) -> Self {
        HalfSpace { normal, offset }
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn is_trivially_false(&self) -> bool {
        self.normal.iter().all(|&a| a == 0.0) && self.offset < 0.0
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        self.normal.dot(x) <= self.offset + tol
    }
}

/// Intersection of finitely many half-spaces over a common dimension.
/// An empty constraint list is the universal set. A constraint with all-zero
/// normal and negative offset is recorded and makes the set empty.
#[derive(Debug, Clone, PartialEq)]
pub struct HPolyhedron {
    pub constraints: Vec<HalfSpace>,
    dim: usize,
}

impl HPolyhedron {
    pub fn new(constraints: Vec<HalfSpace>) -> Self {
        let dim = constraints.first().map_or(0, |c| c.dim());
        for c in &constraints {
            assert_eq!(c.dim(), dim, "constraints over mixed dimensions");
        }
        HPolyhedron { constraints, dim }
    }

    pub fn universe(dim: usize) -> Self {
        HPolyhedron {
            constraints: Vec::new(),
            dim,
        }
    }

    pub fn with_dim(dim: usize, constraints: Vec<HalfSpace>) -> Self {
        let p = HPolyhedron { constraints, dim };
        for c in &p.constraints {
            assert_eq!(c.dim(), dim, "constraints over mixed dimensions");
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_universe(&self) -> bool {
        self.constraints.is_empty()
    }

    fn lp_constraints(&self) -> Vec<(Vector, f64)> {
        self.constraints
            .iter()
            .map(|c| (c.normal.clone(), c.offset))
            .collect()
    }

    /// Emptiness decided by LP feasibility.
    pub fn is_empty(&self) -> bool {
        if self.constraints.iter().any(|c| c.is_trivially_false()) {
            return true;
        }
        if self.constraints.is_empty() {
            return false;
        }
        !lp::is_feasible(self.dim, &self.lp_constraints())
    }

    pub fn support(&self, d: &Vector) -> Result<f64, SetError> {
        if d.len() != self.dim && self.dim != 0 {
            return Err(SetError::DimensionMismatch {
                expected: self.dim,
                found: d.len(),
            });
        }
        if self.constraints.iter().any(|c| c.is_trivially_false()) {
            return Err(SetError::Empty);
        }
        match lp::maximize(d, &self.lp_constraints()) {
            LpOutcome::Optimal { value, .. } => Ok(value),
            LpOutcome::Unbounded => Err(SetError::Unbounded),
            LpOutcome::Infeasible => Err(SetError::Empty),
        }
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        self.constraints.iter().all(|c| c.contains(x, tol))
    }

    /// Constraint-list concatenation.
    pub fn intersection(&self, other: &HPolyhedron) -> Result<HPolyhedron, SetError> {
        let dim = if self.is_universe() { other.dim } else { self.dim };
        if !self.is_universe() && !other.is_universe() && self.dim != other.dim {
            return Err(SetError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut cons = self.constraints.clone();
        cons.extend(other.constraints.iter().cloned());
        Ok(HPolyhedron::with_dim(dim, cons))
    }
}

/// Symbolic set expression evaluated through the support-function calculus.
#[derive(Debug, Clone)]
pub enum LazySet {
    Interval(Interval),
    Box(Hyperrectangle),
    Polyhedron(HPolyhedron),
    Scale(f64, Box<LazySet>),
    LinearMap(Matrix, Box<LazySet>),
    AffineMap(Matrix, Vector, Box<LazySet>),
    MinkowskiSum(Vec<LazySet>),
    ConvexHull(Vec<LazySet>),
    /// Support evaluates to the minimum over the children, which is an upper
    /// bound on the support of the intersection.
    Intersection(Vec<LazySet>),
    Product(Vec<LazySet>),
}

impl LazySet {
    pub fn dim(&self) -> usize {
        match self {
            LazySet::Interval(_) => 1,
            LazySet::Box(b) => b.dim(),
            LazySet::Polyhedron(p) => p.dim(),
            LazySet::Scale(_, x) => x.dim(),
            LazySet::LinearMap(m, _) => m.nrows(),
            LazySet::AffineMap(m, _, _) => m.nrows(),
            LazySet::MinkowskiSum(xs)
            | LazySet::ConvexHull(xs)
            | LazySet::Intersection(xs) => xs[0].dim(),
            LazySet::Product(xs) => xs.iter().map(|x| x.dim()).sum(),
        }
    }

    /// Support function in direction `d`.
    pub fn support(&self, d: &Vector) -> Result<f64, SetError> {
        match self {
            LazySet::Interval(iv) => Ok(iv.support(d[0])),
            LazySet::Box(b) => Ok(b.support(d)),
            LazySet::Polyhedron(p) => p.support(d),
            LazySet::Scale(lambda, x) => x.support(&(d * *lambda)),
            LazySet::LinearMap(m, x) => x.support(&(m.transpose() * d)),
            LazySet::AffineMap(m, v, x) => Ok(x.support(&(m.transpose() * d))? + v.dot(d)),
            LazySet::MinkowskiSum(xs) => xs.iter().map(|x| x.support(d)).sum(),
            LazySet::ConvexHull(xs) => {
                let mut best = f64::NEG_INFINITY;
                for x in xs {
                    best = best.max(x.support(d)?);
                }
                Ok(best)
            }
            LazySet::Intersection(xs) => {
                let mut best = f64::INFINITY;
                for x in xs {
                    match x.support(d) {
                        Ok(s) => best = best.min(s),
                        Err(SetError::Unbounded) => {}
                        Err(e) => return Err(e),
                    }
                }
                if best.is_finite() {
                    Ok(best)
                } else {
                    Err(SetError::Unbounded)
                }
            }
            LazySet::Product(xs) => {
                let mut total = 0.0;
                let mut off = 0;
                for x in xs {
                    let k = x.dim();
                    let dj = d.rows(off, k).into_owned();
                    total += x.support(&dj)?;
                    off += k;
                }
                Ok(total)
            }
        }
    }

    /// Lazy convex hull of two sets of equal dimension.
    pub fn convex_hull(self, other: LazySet) -> Result<LazySet, SetError> {
        if self.dim() != other.dim() {
            return Err(SetError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(LazySet::ConvexHull(vec![self, other]))
    }
}

/// Support function of a set, exact for concrete sets and evaluated through
/// the calculus for lazy nodes.
pub fn support_function(set: &LazySet, d: &Vector) -> Result<f64, SetError> {
    set.support(d)
}

/// `X` is included in `P` iff the support of `X` respects every constraint.
pub fn is_subset(set: &LazySet, poly: &HPolyhedron) -> Result<bool, SetError> {
    for c in &poly.constraints {
        if c.normal.iter().all(|&a| a == 0.0) {
            if c.offset < -INCL_TOL {
                return Ok(false);
            }
            continue;
        }
        if set.support(&c.normal)? > c.offset + INCL_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Tightest axis-aligned box enclosing the set.
pub fn box_approximation(set: &LazySet) -> Result<Hyperrectangle, SetError> {
    let n = set.dim();
    let mut lo = Vector::zeros(n);
    let mut hi = Vector::zeros(n);
    let mut d = Vector::zeros(n);
    for i in 0..n {
        d[i] = 1.0;
        hi[i] = set.support(&d)?;
        d[i] = -1.0;
        lo[i] = -set.support(&d)?;
        d[i] = 0.0;
    }
    Ok(Hyperrectangle::from_bounds(&lo, &hi))
}

/// Outer template polyhedron `{ d.x <= rho(d) : d in directions }`.
pub fn template_overapprox(
    set: &LazySet,
    directions: &[Vector],
) -> Result<HPolyhedron, SetError> {
    let mut cons = Vec::with_capacity(directions.len());
    for d in directions {
        cons.push(HalfSpace::new(d.clone(), set.support(d)?));
    }
    Ok(HPolyhedron::with_dim(set.dim(), cons))
}

/// Sampled directed Hausdorff bound `max_d rho_Y(d) - rho_X(d)` over the given
/// directions. For `X` included in `Y` and directions normalized in the
/// infinity norm this lower-bounds the true distance and is exact for
/// axis-aligned boxes with box directions.
pub fn hausdorff_distance_sampled(
    inner: &LazySet,
    outer: &LazySet,
    directions: &[Vector],
) -> Result<f64, SetError> {
    let mut best = 0.0f64;
    for d in directions {
        best = best.max(outer.support(d)? - inner.support(d)?);
    }
    Ok(best)
}

/// The `2n` axis directions of dimension `n`.
pub fn box_directions(n: usize) -> Vec<Vector> {
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let mut d = Vector::zeros(n);
        d[i] = 1.0;
        out.push(d.clone());
        d[i] = -1.0;
        out.push(d);
    }
    out
}

/// The eight octagon directions in two dimensions.
pub fn octagon_directions_2d() -> Vec<Vector> {
    let mut out = box_directions(2);
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            out.push(Vector::from_vec(vec![sx, sy]));
        }
    }
    out
}
