//! Independent oracles used by the integration tests: vertex enumeration,
//! exact rational feasibility, dense-direction Hausdorff measurements, a
//! plain-series matrix exponential and a hybrid trajectory simulator with
//! event detection.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::Rng;

use blockreach::geometry::{HPolyhedron, Matrix, Vector};
use blockreach::hybrid::HybridAutomaton;

/// All vertices of a bounded polyhedron by basis enumeration. Intended for
/// small dimensions (the subset count grows combinatorially).
pub fn vertices_of(poly: &HPolyhedron) -> Vec<Vector> {
    let n = poly.dim();
    let cons = &poly.constraints;
    let m = cons.len();
    let mut vertices: Vec<Vector> = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    if m < n {
        return vertices;
    }
    loop {
        // solve the n x n system of the active constraints
        let a = DMatrix::from_fn(n, n, |r, c| cons[idx[r]].normal[c]);
        let b = Vector::from_fn(n, |r, _| cons[idx[r]].offset);
        if let Some(x) = a.lu().solve(&b) {
            let feasible = cons
                .iter()
                .all(|c| c.normal.dot(&x) <= c.offset + 1e-7);
            if feasible
                && !vertices.iter().any(|v| (v - &x).amax() < 1e-7)
            {
                vertices.push(x);
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return vertices;
            }
            i -= 1;
            if idx[i] < m - (n - i) {
                idx[i] += 1;
                for j in i + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

pub fn support_by_vertices(vertices: &[Vector], d: &Vector) -> f64 {
    vertices
        .iter()
        .map(|v| v.dot(d))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn to_rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

/// Exact feasibility of `{x : a_i' x <= b_i}` by a two-phase simplex in
/// rational arithmetic with Bland's rule (guaranteed to terminate, no
/// tolerances involved).
pub fn rational_feasible(constraints: &[(Vector, f64)], dim: usize) -> bool {
    // variables: x = u - w (u, w >= 0), slack s_i >= 0, artificial t_i >= 0
    // rows: a_i (u - w) + s_i = b_i, with rows negated so b_i >= 0
    let m = constraints.len();
    if m == 0 {
        return true;
    }
    let nv = 2 * dim + m; // structural + slack columns
    let total = nv + m; // plus artificial columns
    let zero = BigRational::zero();
    let mut rows: Vec<Vec<BigRational>> = Vec::with_capacity(m);
    let mut rhs: Vec<BigRational> = Vec::with_capacity(m);
    for (i, (a, b)) in constraints.iter().enumerate() {
        let mut row = vec![zero.clone(); total];
        let mut bq = to_rational(*b);
        let flip = bq < zero;
        for j in 0..dim {
            let aq = to_rational(a[j]);
            let v = if flip { -aq.clone() } else { aq.clone() };
            row[j] = v.clone();
            row[dim + j] = -v;
        }
        let slack = BigRational::from_integer(BigInt::from(if flip { -1 } else { 1 }));
        row[2 * dim + i] = slack;
        if flip {
            bq = -bq;
        }
        row[nv + i] = BigRational::from_integer(BigInt::from(1));
        rows.push(row);
        rhs.push(bq);
    }
    let mut basis: Vec<usize> = (0..m).map(|i| nv + i).collect();
    // phase 1: minimize the sum of artificials = maximize -sum
    // objective row in terms of nonbasic columns
    loop {
        // reduced costs: c_j - sum over rows of (c_basis * row), with
        // c_j = -1 for artificial columns and 0 otherwise
        let mut entering = None;
        'cols: for j in 0..total {
            if basis.contains(&j) {
                continue;
            }
            let cj = if j >= nv {
                -BigRational::from_integer(BigInt::from(1))
            } else {
                zero.clone()
            };
            let mut reduced = cj;
            for (r, &bi) in basis.iter().enumerate() {
                let cb = if bi >= nv {
                    -BigRational::from_integer(BigInt::from(1))
                } else {
                    zero.clone()
                };
                if !cb.is_zero() {
                    reduced -= cb * rows[r][j].clone();
                }
            }
            if reduced > zero {
                entering = Some(j);
                break 'cols;
            }
        }
        let Some(e) = entering else { break };
        // ratio test, Bland ties by smallest basis index
        let mut leave: Option<usize> = None;
        let mut best: Option<BigRational> = None;
        for r in 0..m {
            if rows[r][e] > zero {
                let ratio = rhs[r].clone() / rows[r][e].clone();
                let better = match &best {
                    None => true,
                    Some(b) => {
                        ratio < *b || (ratio == *b && basis[r] < basis[leave.unwrap()])
                    }
                };
                if better {
                    best = Some(ratio);
                    leave = Some(r);
                }
            }
        }
        let Some(l) = leave else {
            // unbounded phase-1 objective cannot happen; treat as done
            break;
        };
        // pivot
        let piv = rows[l][e].clone();
        for v in rows[l].iter_mut() {
            *v /= piv.clone();
        }
        rhs[l] /= piv;
        for r in 0..m {
            if r != l && !rows[r][e].is_zero() {
                let f = rows[r][e].clone();
                for j in 0..total {
                    let upd = rows[l][j].clone() * f.clone();
                    rows[r][j] -= upd;
                }
                let upd = rhs[l].clone() * f;
                rhs[r] -= upd;
            }
        }
        basis[l] = e;
    }
    let infeas: BigRational = basis
        .iter()
        .enumerate()
        .filter(|(_, &bi)| bi >= nv)
        .map(|(r, _)| rhs[r].clone())
        .sum();
    infeas.is_zero() || infeas.abs().is_zero()
}

/// Random unit directions (plus the box directions) for dense support
/// comparisons.
pub fn dense_directions<R: Rng>(n: usize, count: usize, rng: &mut R) -> Vec<Vector> {
    let mut dirs = blockreach::geometry::box_directions(n);
    if n == 2 {
        // evenly spaced angles give reproducible 2-D coverage
        for i in 0..count {
            let a = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
            dirs.push(Vector::from_column_slice(&[a.cos(), a.sin()]));
        }
        return dirs;
    }
    while dirs.len() < count + 2 * n {
        let v = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let norm = v.norm();
        if norm > 1e-3 {
            dirs.push(v / norm);
        }
    }
    dirs
}

/// Plain truncated-series matrix exponential (no scaling); independent of
/// the engine implementation.
pub fn taylor_exp(m: &Matrix, terms: usize) -> Matrix {
    let n = m.nrows();
    let mut result = Matrix::identity(n, n);
    let mut term = Matrix::identity(n, n);
    for i in 1..=terms {
        term = (&term * m) / i as f64;
        result += &term;
    }
    result
}

#[derive(Debug, Clone)]
pub struct SimPoint {
    pub time: f64,
    pub location: usize,
    /// index of the trajectory segment (number of jumps so far)
    pub segment: usize,
    /// time since the start of the current segment
    pub local_time: f64,
    pub state: Vector,
}

/// Simulates one execution of a hybrid automaton with urgent transitions:
/// the flow runs until the invariant of the current location is violated,
/// the boundary is located by bisection (tolerance 1e-9 in time), and an
/// enabled transition is taken there. Stops when no transition is enabled
/// or the horizon is reached.
pub fn simulate_hybrid(
    ha: &HybridAutomaton,
    loc0: usize,
    x0: &Vector,
    u: &Vector,
    horizon: f64,
    dt: f64,
) -> Vec<SimPoint> {
    let mut points = Vec::new();
    let mut loc = loc0;
    let mut x = x0.clone();
    let mut t = 0.0;
    let mut segment = 0usize;
    let mut local = 0.0;
    let guard_tol = 1e-6;
    points.push(SimPoint {
        time: t,
        location: loc,
        segment,
        local_time: local,
        state: x.clone(),
    });
    let rk4 = |loc: usize, x: &Vector, h: f64| -> Vector {
        let sys = &ha.locations[loc].dynamics;
        let f = |y: &Vector| &sys.a * y + &sys.b * u;
        let k1 = f(x);
        let k2 = f(&(x + &k1 * (h / 2.0)));
        let k3 = f(&(x + &k2 * (h / 2.0)));
        let k4 = f(&(x + &k3 * h));
        x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
    };
    let inside = |loc: usize, x: &Vector, tol: f64| -> bool {
        ha.locations[loc]
            .invariant
            .constraints
            .iter()
            .all(|c| c.normal.dot(x) <= c.offset + tol)
    };
    while t < horizon - 1e-12 {
        let h = dt.min(horizon - t);
        let next = rk4(loc, &x, h);
        if inside(loc, &next, 1e-9) {
            x = next;
            t += h;
            local += h;
            points.push(SimPoint {
                time: t,
                location: loc,
                segment,
                local_time: local,
                state: x.clone(),
            });
            continue;
        }
        // bisect the boundary crossing inside [0, h]
        let mut lo = 0.0;
        let mut hi = h;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if inside(loc, &rk4(loc, &x, mid), 1e-9) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let crossing = rk4(loc, &x, hi);
        t += hi;
        local += hi;
        points.push(SimPoint {
            time: t,
            location: loc,
            segment,
            local_time: local,
            state: crossing.clone(),
        });
        let enabled = ha.transitions.iter().position(|tr| {
            tr.source == loc
                && tr
                    .guard
                    .constraints
                    .iter()
                    .all(|c| c.normal.dot(&crossing) <= c.offset + guard_tol)
        });
        let Some(ti) = enabled else {
            break;
        };
        let tr = &ha.transitions[ti];
        x = &tr.assignment.matrix * &crossing + &tr.assignment.vector;
        loc = tr.target;
        segment += 1;
        local = 0.0;
        points.push(SimPoint {
            time: t,
            location: loc,
            segment,
            local_time: local,
            state: x.clone(),
        });
    }
    points
}

/// Random bounded polyhedron: a box around `center_range` plus up to
/// `cuts` halfspaces that keep the box center feasible.
pub fn random_poly<R: Rng>(rng: &mut R, dim: usize, cuts: usize) -> HPolyhedron {
    use blockreach::geometry::HalfSpace;
    let center = Vector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
    let mut cons = Vec::new();
    for i in 0..dim {
        let r = rng.gen_range(0.2..1.5);
        let mut d = Vector::zeros(dim);
        d[i] = 1.0;
        cons.push(HalfSpace::new(d.clone(), center[i] + r));
        d[i] = -1.0;
        cons.push(HalfSpace::new(d, -(center[i] - r)));
    }
    for _ in 0..cuts {
        let normal = Vector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        if normal.amax() < 1e-3 {
            continue;
        }
        let offset = normal.dot(&center) + rng.gen_range(0.05..1.0);
        cons.push(HalfSpace::new(normal, offset));
    }
    HPolyhedron::with_dim(dim, cons)
}
