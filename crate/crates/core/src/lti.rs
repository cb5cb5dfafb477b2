//! LTI discretization, matrix exponential, dense and sparse decomposed
//! flowpipe computation, and trajectory simulation.
//!
//! Flowpipes are wrapping-free: every step is evaluated directly from the
//! step-0 set and the accumulated input effect, never by re-decomposing the
//! previous step.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::decomposition::{
    concretize_from_supports, decompose, Block, BlockStructure, DecomposedSet, Template,
};
use crate::geometry::{
    box_approximation, Hyperrectangle, LazySet, Matrix, SetError, Vector,
};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LtiError {
    #[error(transparent)]
    Geometry(#[from] SetError),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Continuous dynamics `x' = A x + B u`, `u in U`.
#[derive(Debug, Clone)]
pub struct LTISystem {
    pub a: Matrix,
    pub b: Matrix,
    pub u: LazySet,
}

impl LTISystem {
    pub fn new(a: Matrix, b: Matrix, u: LazySet) -> Self {
        assert_eq!(a.nrows(), a.ncols());
        assert_eq!(b.nrows(), a.nrows());
        assert_eq!(b.ncols(), u.dim());
        LTISystem { a, b, u }
    }

    /// Autonomous system without inputs.
    pub fn autonomous(a: Matrix) -> Self {
        let n = a.nrows();
        LTISystem::new(
            a,
            Matrix::zeros(n, 1),
            LazySet::Box(Hyperrectangle::point(Vector::zeros(1))),
        )
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

/// Time-discretized system: `Phi = exp(A delta)`, a set covering the reach
/// set up to time `delta`, and the per-step input effect.
#[derive(Debug, Clone)]
pub struct DiscretizedSystem {
    pub phi: Matrix,
    pub omega0: LazySet,
    pub input_effect: LazySet,
    pub delta: f64,
}

/// Conservative approximation model used by [`discretize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BloatingModel {
    /// Scalar bloating from the infinity norms of `A`, the initial set and
    /// the input set.
    NormBased,
    /// Componentwise correction-hull bloating; tighter on systems whose rows
    /// have very different magnitudes.
    #[default]
    CorrectionHull,
}

fn inf_norm(m: &Matrix) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a truncated series.
pub fn mat_exp(m: &Matrix) -> Result<Matrix, LtiError> {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    if m.iter().any(|x| !x.is_finite()) {
        return Err(LtiError::Numerical("non-finite matrix entry".into()));
    }
    let norm = inf_norm(m);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m / 2f64.powi(squarings as i32);
    let mut result = Matrix::identity(n, n);
    let mut term = Matrix::identity(n, n);
    for i in 1..=30 {
        term = (&term * &scaled) / i as f64;
        result += &term;
        if inf_norm(&term) < 1e-18 * inf_norm(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
        if result.iter().any(|x| !x.is_finite()) {
            return Err(LtiError::Numerical("overflow in matrix exponential".into()));
        }
    }
    Ok(result)
}

/// Series `Phi2(M, delta) = sum_{i>=0} delta^{i+2} M^i / (i+2)!`.
fn phi2(m: &Matrix, delta: f64) -> Matrix {
    let n = m.nrows();
    let mut result = Matrix::zeros(n, n);
    // term_i = delta^{i+2} M^i / (i+2)!
    let mut term = Matrix::identity(n, n) * (delta * delta / 2.0);
    for i in 0..60 {
        result += &term;
        term = (&term * m) * (delta / (i as f64 + 3.0));
        if inf_norm(&term) < 1e-18 * (1.0 + inf_norm(&result)) {
            break;
        }
    }
    result
}

fn abs_matrix(m: &Matrix) -> Matrix {
    m.map(f64::abs)
}

/// Componentwise bound `sup_{x in box} |M x|`.
fn abs_image_of_box(m: &Matrix, b: &Hyperrectangle) -> Vector {
    (m * &b.center).map(f64::abs) + abs_matrix(m) * &b.radius
}

/// Time discretization: computes `Phi`, a set covering all behaviors on
/// `[0, delta]` from `x0`, and the one-step input effect.
pub fn discretize(
    sys: &LTISystem,
    x0: &LazySet,
    delta: f64,
    model: BloatingModel,
) -> Result<DiscretizedSystem, LtiError> {
    assert!(delta > 0.0);
    let n = sys.dim();
    let phi = mat_exp(&(&sys.a * delta))?;
    let bu = LazySet::LinearMap(sys.b.clone(), Box::new(sys.u.clone()));
    let bu_box = box_approximation(&bu)?;
    let x0_box = box_approximation(x0)?;
    let delta_bu = LazySet::Scale(delta, Box::new(bu.clone()));

    let (omega_bloat, step_bloat): (Hyperrectangle, Hyperrectangle) = match model {
        BloatingModel::NormBased => {
            let norm_a = inf_norm(&sys.a);
            let phi_fn = |z: f64| z.exp() - 1.0 - z;
            let r0 = (0..n).fold(0.0f64, |m, i| {
                m.max(x0_box.lo(i).abs()).max(x0_box.hi(i).abs())
            });
            let ru = (0..n).fold(0.0f64, |m, i| {
                m.max(bu_box.lo(i).abs()).max(bu_box.hi(i).abs())
            });
            let alpha = phi_fn(delta * norm_a) * r0;
            let beta = if norm_a > 0.0 {
                phi_fn(delta * norm_a) * ru / norm_a
            } else {
                0.0
            };
            (
                Hyperrectangle::unit_ball(n, alpha + beta),
                Hyperrectangle::unit_ball(n, beta),
            )
        }
        BloatingModel::CorrectionHull => {
            let p = phi2(&abs_matrix(&sys.a), delta);
            let a2 = &sys.a * &sys.a;
            let e_plus = &p * abs_image_of_box(&a2, &x0_box);
            let e_psi = &p * abs_image_of_box(&sys.a, &bu_box);
            (
                Hyperrectangle::new(Vector::zeros(n), e_plus + &e_psi),
                Hyperrectangle::new(Vector::zeros(n), e_psi),
            )
        }
    };

    let reached = LazySet::MinkowskiSum(vec![
        LazySet::LinearMap(phi.clone(), Box::new(x0.clone())),
        delta_bu.clone(),
        LazySet::Box(omega_bloat),
    ]);
    let omega0 = LazySet::ConvexHull(vec![x0.clone(), reached]);
    let input_effect = LazySet::MinkowskiSum(vec![delta_bu, LazySet::Box(step_bloat)]);
    Ok(DiscretizedSystem {
        phi,
        omega0,
        input_effect,
        delta,
    })
}

/// Iterator over the block rows of `Phi^j` for `j = 0..=k`, computed by the
/// row-strip recurrence `strip(j+1) = strip(j) * Phi`.
pub fn block_row_powers<'a>(
    phi: &'a Matrix,
    structure: &BlockStructure,
    k: usize,
    row_blocks: &[usize],
) -> impl Iterator<Item = Matrix> + 'a {
    let rows = block_dims(structure, row_blocks);
    let n = phi.nrows();
    let mut strip = DMatrix::zeros(rows.len(), n);
    for (r, &i) in rows.iter().enumerate() {
        strip[(r, i)] = 1.0;
    }
    (0..=k).map(move |_| {
        let current = strip.clone();
        strip = &strip * phi;
        current
    })
}

fn block_dims(structure: &BlockStructure, blocks: &[usize]) -> Vec<usize> {
    let mut dims = Vec::new();
    for &j in blocks {
        let (s, e) = structure.range(j);
        dims.extend(s..e);
    }
    dims
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlowpipeStats {
    pub blocks_computed: usize,
    pub blocks_skipped: usize,
}

/// Time-indexed sequence of decomposed sets; step `k` covers the time
/// interval `[k delta, (k+1) delta]`. Step 0 is always fully computed.
#[derive(Debug, Clone)]
pub struct Flowpipe {
    pub structure: BlockStructure,
    pub steps: Vec<DecomposedSet>,
    pub delta: f64,
    pub template: Template,
    pub stats: FlowpipeStats,
    phi: Matrix,
    input_effect: LazySet,
}

impl Flowpipe {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn time_interval(&self, k: usize) -> (f64, f64) {
        (k as f64 * self.delta, (k + 1) as f64 * self.delta)
    }

    /// Fills the non-computed blocks among `blocks` at step `k` using the same
    /// decomposed recurrence. Idempotent on already-computed blocks.
    pub fn complete_blocks(&mut self, k: usize, blocks: &[usize]) -> &DecomposedSet {
        let mut requests = BTreeMap::new();
        let missing: Vec<usize> = blocks
            .iter()
            .copied()
            .filter(|&j| !self.steps[k].blocks[j].is_computed())
            .collect();
        if !missing.is_empty() {
            requests.insert(k, missing);
        }
        self.complete_batch(&requests);
        &self.steps[k]
    }

    /// Fills all missing blocks of every listed step in one strip sweep.
    pub fn complete_steps_fully(&mut self, steps: &[usize]) {
        let all: Vec<usize> = (0..self.structure.count()).collect();
        let mut requests = BTreeMap::new();
        for &k in steps {
            let missing: Vec<usize> = all
                .iter()
                .copied()
                .filter(|&j| !self.steps[k].blocks[j].is_computed())
                .collect();
            if !missing.is_empty() {
                requests.insert(k, missing);
            }
        }
        self.complete_batch(&requests);
    }

    fn complete_batch(&mut self, requests: &BTreeMap<usize, Vec<usize>>) {
        let Some(&max_step) = requests.keys().next_back() else {
            return;
        };
        let mut union: Vec<usize> = requests.values().flatten().copied().collect();
        union.sort_unstable();
        union.dedup();
        let step0 = self.steps[0].clone();
        let mut engine = RecurrenceEngine::new(
            &self.phi,
            &self.input_effect,
            &step0,
            &union,
            self.template,
        );
        for k in 1..=max_step {
            engine.advance();
            if let Some(blocks) = requests.get(&k) {
                for &j in blocks {
                    let block = engine.block_at_current(j);
                    self.steps[k].blocks[j] = block;
                    self.stats.blocks_computed += 1;
                    self.stats.blocks_skipped = self.stats.blocks_skipped.saturating_sub(1);
                }
            }
        }
    }
}

/// Shared state of the decomposed recurrence
/// `X_i(k) = (+)_j (Phi^k)_{ij} X_j(0) (+) (+)_{j<k} [Phi^j strip] V`
/// for a fixed set of target blocks. Support values per template direction
/// are accumulated, which keeps the computation wrapping-free because
/// template concretization commutes with Minkowski sums.
struct RecurrenceEngine<'a> {
    structure: &'a BlockStructure,
    step0: &'a DecomposedSet,
    input_effect: &'a LazySet,
    phi: &'a Matrix,
    template: Template,
    blocks: Vec<usize>,
    /// directions per tracked block, in block-local coordinates
    dirs: Vec<Vec<Vector>>,
    /// accumulated input support per tracked block and direction
    acc: Vec<Vec<f64>>,
    /// rows of `Phi^k` for all tracked dimensions
    strip: Matrix,
    /// row offset of each tracked block inside the strip
    row_offset: Vec<usize>,
}

impl<'a> RecurrenceEngine<'a> {
    fn new(
        phi: &'a Matrix,
        input_effect: &'a LazySet,
        step0: &'a DecomposedSet,
        blocks: &[usize],
        template: Template,
    ) -> Self {
        let structure = &step0.structure;
        let rows = block_dims(structure, blocks);
        let n = phi.nrows();
        let mut strip = DMatrix::zeros(rows.len(), n);
        for (r, &i) in rows.iter().enumerate() {
            strip[(r, i)] = 1.0;
        }
        let mut row_offset = Vec::with_capacity(blocks.len());
        let mut off = 0;
        let mut dirs = Vec::with_capacity(blocks.len());
        let mut acc = Vec::with_capacity(blocks.len());
        for &j in blocks {
            row_offset.push(off);
            off += structure.width(j);
            let d = template.directions(structure.width(j));
            acc.push(vec![0.0; d.len()]);
            dirs.push(d);
        }
        RecurrenceEngine {
            structure,
            step0,
            input_effect,
            phi,
            template,
            blocks: blocks.to_vec(),
            dirs,
            acc,
            strip,
            row_offset,
        }
    }

    /// Direction `d` of tracked block `t` mapped through the current strip:
    /// `(Phi^k)^T embed(d)`.
    fn mapped_direction(&self, t: usize, d: &Vector) -> Vector {
        let n = self.phi.nrows();
        let mut g = Vector::zeros(n);
        for (local, &coeff) in d.iter().enumerate() {
            if coeff == 0.0 {
                continue;
            }
            let row = self.row_offset[t] + local;
            for c in 0..n {
                g[c] += coeff * self.strip[(row, c)];
            }
        }
        g
    }

    /// Moves from `Phi^k` to `Phi^{k+1}`, folding the step-`k` input term
    /// into the accumulators.
    fn advance(&mut self) {
        let pairs: Vec<(usize, usize)> = (0..self.blocks.len())
            .flat_map(|t| (0..self.dirs[t].len()).map(move |di| (t, di)))
            .collect();
        let compute = |&(t, di): &(usize, usize)| {
            let g = self.mapped_direction(t, &self.dirs[t][di]);
            self.input_effect
                .support(&g)
                .expect("input effect set must be bounded")
        };
        let increments: Vec<f64> = if pairs.len() >= 64 {
            pairs.par_iter().map(compute).collect()
        } else {
            pairs.iter().map(compute).collect()
        };
        for (&(t, di), inc) in pairs.iter().zip(increments) {
            self.acc[t][di] += inc;
        }
        self.strip = &self.strip * self.phi;
    }

    /// The set of tracked block `j` at the current power.
    fn block_at_current(&self, j: usize) -> Block {
        let t = self
            .blocks
            .iter()
            .position(|&b| b == j)
            .expect("block not tracked");
        let w = self.structure.width(j);
        let dirs = &self.dirs[t];
        let mut supports = Vec::with_capacity(dirs.len());
        for (di, d) in dirs.iter().enumerate() {
            let g = self.mapped_direction(t, d);
            let hom = self
                .step0
                .support(&g)
                .expect("step-0 set must be bounded");
            supports.push(hom + self.acc[t][di]);
        }
        concretize_from_supports(dirs, &supports, w, self.template)
    }
}

/// Sparse flowpipe: step 0 is fully decomposed, later steps only compute the
/// blocks in `needed`. If `stop_when_included` is set, the computation stops
/// early once the computed blocks of a step are included in those of an
/// earlier step.
pub fn flowpipe_sparse(
    dsys: &DiscretizedSystem,
    structure: &BlockStructure,
    n_steps: usize,
    needed: &[usize],
    template: Template,
    stop_when_included: bool,
) -> Result<Flowpipe, LtiError> {
    let step0 = decompose(&dsys.omega0, structure, template)?;
    let b = structure.count();
    let mut stats = FlowpipeStats {
        blocks_computed: b,
        blocks_skipped: 0,
    };
    let mut steps = Vec::with_capacity(n_steps + 1);
    let mut needed: Vec<usize> = needed.to_vec();
    needed.sort_unstable();
    needed.dedup();
    {
        let mut engine =
            RecurrenceEngine::new(&dsys.phi, &dsys.input_effect, &step0, &needed, template);
        for _k in 1..=n_steps {
            engine.advance();
            let mut blocks = vec![Block::NotComputed; b];
            for &j in &needed {
                blocks[j] = engine.block_at_current(j);
                stats.blocks_computed += 1;
            }
            stats.blocks_skipped += b - needed.len();
            let step = DecomposedSet::new(structure.clone(), blocks);
            if stop_when_included && step_included_in_earlier(&step, &steps, &step0, &needed) {
                break;
            }
            steps.push(step);
        }
    }
    steps.insert(0, step0);
    Ok(Flowpipe {
        structure: structure.clone(),
        steps,
        delta: dsys.delta,
        template,
        stats,
        phi: dsys.phi.clone(),
        input_effect: dsys.input_effect.clone(),
    })
}

fn step_included_in_earlier(
    step: &DecomposedSet,
    earlier: &[DecomposedSet],
    step0: &DecomposedSet,
    needed: &[usize],
) -> bool {
    let contained_in = |other: &DecomposedSet| {
        needed.iter().all(|&j| {
            step.blocks[j]
                .box_approximation(step.structure.width(j))
                .and_then(|inner| {
                    other.blocks[j]
                        .box_approximation(step.structure.width(j))
                        .map(|outer| {
                            (0..inner.dim()).all(|i| {
                                inner.lo(i) >= outer.lo(i) - 1e-12
                                    && inner.hi(i) <= outer.hi(i) + 1e-12
                            })
                        })
                })
                .unwrap_or(false)
        })
    };
    contained_in(step0) || earlier.iter().any(contained_in)
}

/// Dense flowpipe: the sparse flowpipe with every block needed.
pub fn flowpipe_dense(
    dsys: &DiscretizedSystem,
    structure: &BlockStructure,
    n_steps: usize,
    template: Template,
) -> Result<Flowpipe, LtiError> {
    let all: Vec<usize> = (0..structure.count()).collect();
    flowpipe_sparse(dsys, structure, n_steps, &all, template, false)
}

/// Simulated trajectory: increasing times with the matching states.
#[derive(Debug, Clone)]
pub struct TrajectorySample {
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
}

/// Fixed-step fourth-order integration of `x' = A x + B u(t)` with a
/// piecewise-constant input given as `(start_time, value)` pieces.
pub fn simulate_trajectory(
    sys: &LTISystem,
    x0: &Vector,
    u_pieces: &[(f64, Vector)],
    horizon: f64,
    dt: f64,
) -> TrajectorySample {
    assert!(dt > 0.0);
    let input_at = |t: f64| -> Vector {
        let mut current: Option<&Vector> = None;
        for (start, value) in u_pieces {
            if *start <= t + 1e-12 {
                current = Some(value);
            }
        }
        current
            .cloned()
            .unwrap_or_else(|| Vector::zeros(sys.b.ncols()))
    };
    let deriv = |x: &Vector, u: &Vector| -> Vector { &sys.a * x + &sys.b * u };
    let mut times = vec![0.0];
    let mut states = vec![x0.clone()];
    let mut x = x0.clone();
    let mut t = 0.0;
    while t < horizon - 1e-12 {
        let h = dt.min(horizon - t);
        let u = input_at(t);
        let k1 = deriv(&x, &u);
        let k2 = deriv(&(&x + &k1 * (h / 2.0)), &u);
        let k3 = deriv(&(&x + &k2 * (h / 2.0)), &u);
        let k4 = deriv(&(&x + &k3 * h), &u);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        t += h;
        times.push(t);
        states.push(x.clone());
    }
    TrajectorySample { times, states }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn mat_exp_zero_is_identity() {
        let z = Matrix::zeros(3, 3);
        let e = mat_exp(&z).unwrap();
        assert!((e - Matrix::identity(3, 3)).iter().all(|&x| x.abs() < 1e-15));
    }

    #[test]
    fn mat_exp_nilpotent() {
        let m = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let e = mat_exp(&m).unwrap();
        let expected = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!((e - expected).iter().all(|&x| x.abs() < 1e-14));
    }

    #[test]
    fn mat_exp_rotation() {
        let half_pi = std::f64::consts::FRAC_PI_2;
        let m = Matrix::from_row_slice(2, 2, &[0.0, half_pi, -half_pi, 0.0]);
        let e = mat_exp(&m).unwrap();
        let expected = Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!((e - expected).iter().all(|&x| x.abs() < 1e-12));
    }

    #[test]
    fn discretize_static_system_is_exact() {
        // A = 0, B = 0: Omega0 behaves as X0, V = {0}
        let sys = LTISystem::autonomous(Matrix::zeros(2, 2));
        let x0 = LazySet::Box(Hyperrectangle::from_bounds(
            &dvector![0.0, 0.0],
            &dvector![1.0, 1.0],
        ));
        for model in [BloatingModel::NormBased, BloatingModel::CorrectionHull] {
            let d = discretize(&sys, &x0, 0.1, model).unwrap();
            assert!((d.phi.clone() - Matrix::identity(2, 2))
                .iter()
                .all(|&x| x.abs() < 1e-15));
            for dir in crate::geometry::box_directions(2) {
                assert!(
                    (d.omega0.support(&dir).unwrap() - x0.support(&dir).unwrap()).abs() < 1e-12
                );
                assert!(d.input_effect.support(&dir).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn discretize_pure_input() {
        // A = 0, B = I, U = [-1,1]^2: V = delta U
        let u = LazySet::Box(Hyperrectangle::unit_ball(2, 1.0));
        let sys = LTISystem::new(Matrix::zeros(2, 2), Matrix::identity(2, 2), u);
        let x0 = LazySet::Box(Hyperrectangle::point(dvector![0.0, 0.0]));
        let d = discretize(&sys, &x0, 0.25, BloatingModel::NormBased).unwrap();
        for dir in crate::geometry::box_directions(2) {
            assert!((d.input_effect.support(&dir).unwrap() - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn block_row_powers_identity_and_nilpotent() {
        let s = BlockStructure::uniform(2, 1);
        let id = Matrix::identity(2, 2);
        for strip in block_row_powers(&id, &s, 3, &[0, 1]) {
            assert!((strip - Matrix::identity(2, 2)).iter().all(|&x| x == 0.0));
        }
        let nil = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let strips: Vec<_> = block_row_powers(&nil, &s, 2, &[0, 1]).collect();
        assert!(strips[2].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn static_flowpipe_is_constant() {
        let sys = LTISystem::autonomous(Matrix::zeros(2, 2));
        let x0 = LazySet::Box(Hyperrectangle::from_bounds(
            &dvector![0.0, -1.0],
            &dvector![1.0, 1.0],
        ));
        let d = discretize(&sys, &x0, 0.1, BloatingModel::CorrectionHull).unwrap();
        let s = BlockStructure::uniform(2, 1);
        let fp = flowpipe_sparse(&d, &s, 5, &[0], Template::Box, false).unwrap();
        assert_eq!(fp.len(), 6);
        for k in 1..fp.len() {
            let b = fp.steps[k].blocks[0].box_approximation(1).unwrap();
            assert!((b.lo(0) - 0.0).abs() < 1e-9 && (b.hi(0) - 1.0).abs() < 1e-9);
            assert!(!fp.steps[k].blocks[1].is_computed());
        }
    }

    #[test]
    fn complete_blocks_matches_dense_and_counts() {
        let a = Matrix::from_row_slice(2, 2, &[-0.5, 1.0, -1.0, -0.5]);
        let sys = LTISystem::autonomous(a);
        let x0 = LazySet::Box(Hyperrectangle::from_bounds(
            &dvector![0.9, -0.1],
            &dvector![1.1, 0.1],
        ));
        let d = discretize(&sys, &x0, 0.05, BloatingModel::CorrectionHull).unwrap();
        let s = BlockStructure::uniform(2, 1);
        let dense = flowpipe_dense(&d, &s, 10, Template::Box).unwrap();
        let mut sparse = flowpipe_sparse(&d, &s, 10, &[0], Template::Box, false).unwrap();
        let before = sparse.stats.blocks_computed;
        sparse.complete_blocks(7, &[0, 1]);
        assert_eq!(sparse.stats.blocks_computed, before + 1);
        for j in 0..2 {
            let a = sparse.steps[7].blocks[j].box_approximation(1).unwrap();
            let b = dense.steps[7].blocks[j].box_approximation(1).unwrap();
            assert!((a.lo(0) - b.lo(0)).abs() < 1e-12);
            assert!((a.hi(0) - b.hi(0)).abs() < 1e-12);
        }
        // idempotent
        let again = sparse.stats.blocks_computed;
        sparse.complete_blocks(7, &[0, 1]);
        assert_eq!(sparse.stats.blocks_computed, again);
    }

    #[test]
    fn simulate_constant_and_exponential() {
        let sys = LTISystem::autonomous(Matrix::zeros(2, 2));
        let t = simulate_trajectory(&sys, &dvector![1.0, 2.0], &[], 1.0, 0.1);
        assert!((t.states.last().unwrap() - dvector![1.0, 2.0]).amax() < 1e-12);

        let growth = LTISystem::autonomous(Matrix::from_row_slice(1, 1, &[1.0]));
        let t = simulate_trajectory(&growth, &dvector![1.0], &[], 1.0, 1e-4);
        assert!((t.states.last().unwrap()[0] - std::f64::consts::E).abs() < 1e-6);
    }

    #[test]
    fn harmonic_oscillator_returns_after_a_period() {
        let a = Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let sys = LTISystem::autonomous(a);
        let x0 = dvector![1.0, 0.0];
        let t = simulate_trajectory(&sys, &x0, &[], 2.0 * std::f64::consts::PI, 1e-4);
        assert!((t.states.last().unwrap() - &x0).amax() < 1e-5);
    }
}
