//! Block structures, Cartesian-decomposed sets and the decomposed set
//! operations (intersection, affine map, inclusion, convex hull) together
//! with their Hausdorff error bounds.

use thiserror::Error;

use crate::geometry::{
    box_directions, octagon_directions_2d, HPolyhedron, HalfSpace,
    Hyperrectangle, LazySet, Matrix, SetError, Vector, INCL_TOL,
};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DecompositionError {
    #[error("block {0} is not computed")]
    MissingBlock(usize),
    #[error("block structures do not match")]
    StructureMismatch,
    #[error(transparent)]
    Geometry(#[from] SetError),
}

/// Contiguous partition of the coordinate indices `0..n` into blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStructure {
    /// `(start, end)` index pairs, end exclusive, sorted and covering `0..n`.
    ranges: Vec<(usize, usize)>,
    dim: usize,
}

impl BlockStructure {
    pub fn new(ranges: Vec<(usize, usize)>) -> Self {
        assert!(!ranges.is_empty(), "empty block structure");
        let mut expected = 0;
        for &(s, e) in &ranges {
            assert_eq!(s, expected, "blocks must be contiguous and sorted");
            assert!(e > s, "empty block");
            expected = e;
        }
        BlockStructure {
            ranges,
            dim: expected,
        }
    }

    /// Uniform blocks of the given width; the last block may be narrower.
    pub fn uniform(dim: usize, width: usize) -> Self {
        assert!(width > 0);
        let mut ranges = Vec::new();
        let mut s = 0;
        while s < dim {
            let e = (s + width).min(dim);
            ranges.push((s, e));
            s = e;
        }
        BlockStructure::new(ranges)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of blocks.
    pub fn count(&self) -> usize {
        self.ranges.len()
    }

    pub fn range(&self, j: usize) -> (usize, usize) {
        self.ranges[j]
    }

    pub fn width(&self, j: usize) -> usize {
        let (s, e) = self.ranges[j];
        e - s
    }

    pub fn block_of_dim(&self, i: usize) -> usize {
        self.ranges
            .iter()
            .position(|&(s, e)| s <= i && i < e)
            .expect("dimension out of range")
    }

    /// Restricts a full-dimensional vector to block `j`.
    pub fn project(&self, v: &Vector, j: usize) -> Vector {
        let (s, e) = self.ranges[j];
        v.rows(s, e - s).into_owned()
    }

    /// Embeds a block-`j` vector into full dimension, zero elsewhere.
    pub fn embed(&self, vj: &Vector, j: usize) -> Vector {
        let (s, e) = self.ranges[j];
        let mut out = Vector::zeros(self.dim);
        out.rows_mut(s, e - s).copy_from(vj);
        out
    }

    /// The block submatrix `M_{ij}` of an `n x n` matrix.
    pub fn block_of_matrix(&self, m: &Matrix, i: usize, j: usize) -> Matrix {
        let (rs, re) = self.ranges[i];
        let (cs, ce) = self.ranges[j];
        m.view((rs, cs), (re - rs, ce - cs)).into_owned()
    }
}

/// Block concretization template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Template {
    #[default]
    Box,
    /// Octagon directions on two-dimensional blocks, box otherwise.
    Octagon,
}

impl Template {
    pub fn directions(&self, width: usize) -> Vec<Vector> {
        match self {
            Template::Box => box_directions(width),
            Template::Octagon if width == 2 => octagon_directions_2d(),
            Template::Octagon => box_directions(width),
        }
    }
}

/// One entry of a decomposed set.
#[derive(Debug, Clone, PartialEq)]
pub enum Block {
    Box(Hyperrectangle),
    Poly(HPolyhedron),
    /// Unconstrained block.
    Universe,
    /// Sparse-flowpipe placeholder.
    NotComputed,
}

impl Block {
    pub fn is_computed(&self) -> bool {
        !matches!(self, Block::NotComputed)
    }

    pub fn support(&self, d: &Vector) -> Result<f64, SetError> {
        match self {
            Block::Box(b) => Ok(b.support(d)),
            Block::Poly(p) => p.support(d),
            Block::Universe => {
                if d.iter().all(|&x| x == 0.0) {
                    Ok(0.0)
                } else {
                    Err(SetError::Unbounded)
                }
            }
            Block::NotComputed => Err(SetError::Numerical("block not computed".into())),
        }
    }

    pub fn to_lazy(&self) -> Option<LazySet> {
        match self {
            Block::Box(b) => Some(LazySet::Box(b.clone())),
            Block::Poly(p) => Some(LazySet::Polyhedron(p.clone())),
            Block::Universe | Block::NotComputed => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Block::Box(_) | Block::Universe | Block::NotComputed => false,
            Block::Poly(p) => p.is_empty(),
        }
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        match self {
            Block::Box(b) => b.contains(x, tol),
            Block::Poly(p) => p.contains(x, tol),
            Block::Universe => true,
            Block::NotComputed => false,
        }
    }

    pub fn constraints(&self, width: usize) -> Vec<HalfSpace> {
        match self {
            Block::Box(b) => b.to_polyhedron().constraints,
            Block::Poly(p) => p.constraints.clone(),
            Block::Universe => Vec::new(),
            Block::NotComputed => panic!("constraints of a non-computed block"),
        }
        .into_iter()
        .inspect(|c| debug_assert_eq!(c.dim(), width))
        .collect()
    }

    /// Diameter in the infinity norm.
    pub fn diameter_inf(&self, width: usize) -> Result<f64, SetError> {
        match self {
            Block::Box(b) => Ok(b.diameter_inf()),
            Block::Poly(p) => {
                let mut diam = 0.0f64;
                let mut d = Vector::zeros(width);
                for i in 0..width {
                    d[i] = 1.0;
                    let hi = p.support(&d)?;
                    d[i] = -1.0;
                    let lo = -p.support(&d)?;
                    d[i] = 0.0;
                    diam = diam.max(hi - lo);
                }
                Ok(diam)
            }
            Block::Universe => Err(SetError::Unbounded),
            Block::NotComputed => Err(SetError::Numerical("block not computed".into())),
        }
    }

    pub fn box_approximation(&self, width: usize) -> Result<Hyperrectangle, SetError> {
        match self {
            Block::Box(b) => Ok(b.clone()),
            Block::Poly(p) => {
                let mut lo = Vector::zeros(width);
                let mut hi = Vector::zeros(width);
                let mut d = Vector::zeros(width);
                for i in 0..width {
                    d[i] = 1.0;
                    hi[i] = p.support(&d)?;
                    d[i] = -1.0;
                    lo[i] = -p.support(&d)?;
                    d[i] = 0.0;
                }
                Ok(Hyperrectangle::from_bounds(&lo, &hi))
            }
            Block::Universe => Err(SetError::Unbounded),
            Block::NotComputed => Err(SetError::Numerical("block not computed".into())),
        }
    }

    fn is_subset(&self, other: &Block, width: usize) -> Result<bool, DecompositionError> {
        match (self, other) {
            (_, Block::Universe) => Ok(true),
            (Block::NotComputed, _) => Err(DecompositionError::MissingBlock(usize::MAX)),
            (_, Block::NotComputed) => Err(DecompositionError::MissingBlock(usize::MAX)),
            (Block::Universe, _) => Ok(false),
            (x, y) => {
                for c in y.constraints(width) {
                    if x.support(&c.normal)? > c.offset + INCL_TOL {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }
}

/// Cartesian product of per-block sets, possibly sparse.
#[derive(Debug, Clone, PartialEq)]
pub struct DecomposedSet {
    pub structure: BlockStructure,
    pub blocks: Vec<Block>,
}

impl DecomposedSet {
    pub fn new(structure: BlockStructure, blocks: Vec<Block>) -> Self {
        assert_eq!(structure.count(), blocks.len());
        DecomposedSet { structure, blocks }
    }

    pub fn dim(&self) -> usize {
        self.structure.dim()
    }

    pub fn fully_computed(&self) -> bool {
        self.blocks.iter().all(|b| b.is_computed())
    }

    /// Support function of the product over all blocks.
    pub fn support(&self, d: &Vector) -> Result<f64, SetError> {
        let mut total = 0.0;
        for (j, block) in self.blocks.iter().enumerate() {
            let dj = self.structure.project(d, j);
            if dj.iter().all(|&x| x == 0.0) {
                continue;
            }
            total += block.support(&dj)?;
        }
        Ok(total)
    }

    /// Concretization as a lazy Cartesian product. Fails on non-computed
    /// blocks; universal blocks are not concretizable either.
    pub fn to_lazy(&self) -> Result<LazySet, DecompositionError> {
        let mut parts = Vec::with_capacity(self.blocks.len());
        for (j, b) in self.blocks.iter().enumerate() {
            parts.push(b.to_lazy().ok_or(DecompositionError::MissingBlock(j))?);
        }
        Ok(LazySet::Product(parts))
    }

    /// Full-dimensional constraint representation of the computed blocks.
    pub fn to_polyhedron(&self) -> Result<HPolyhedron, DecompositionError> {
        let n = self.dim();
        let mut cons = Vec::new();
        for (j, b) in self.blocks.iter().enumerate() {
            if let Block::NotComputed = b {
                return Err(DecompositionError::MissingBlock(j));
            }
            for c in b.constraints(self.structure.width(j)) {
                cons.push(HalfSpace::new(self.structure.embed(&c.normal, j), c.offset));
            }
        }
        Ok(HPolyhedron::with_dim(n, cons))
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        self.blocks
            .iter()
            .enumerate()
            .all(|(j, b)| b.contains(&self.structure.project(x, j), tol))
    }
}

/// Result of a decomposed intersection.
#[derive(Debug, Clone, PartialEq)]
pub enum Intersected {
    Set(DecomposedSet),
    EmptyByBlock(usize),
}

/// Outcome of the block-wise sufficient emptiness test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmptinessWitness {
    EmptyByBlock(usize),
    PossiblyNonempty,
}

/// Cartesian decomposition of a set: block `j` is the template
/// overapproximation of the projection onto block `j`.
pub fn decompose(
    set: &LazySet,
    structure: &BlockStructure,
    template: Template,
) -> Result<DecomposedSet, SetError> {
    let mut blocks = Vec::with_capacity(structure.count());
    for j in 0..structure.count() {
        let w = structure.width(j);
        match template {
            Template::Octagon if w == 2 => {
                let mut cons = Vec::new();
                for d in template.directions(w) {
                    let full = structure.embed(&d, j);
                    cons.push(HalfSpace::new(d, set.support(&full)?));
                }
                blocks.push(Block::Poly(HPolyhedron::with_dim(w, cons)));
            }
            _ => {
                let (s, _) = structure.range(j);
                let mut lo = Vector::zeros(w);
                let mut hi = Vector::zeros(w);
                let mut d = Vector::zeros(structure.dim());
                for i in 0..w {
                    d[s + i] = 1.0;
                    hi[i] = set.support(&d)?;
                    d[s + i] = -1.0;
                    lo[i] = -set.support(&d)?;
                    d[s + i] = 0.0;
                }
                blocks.push(Block::Box(Hyperrectangle::from_bounds(&lo, &hi)));
            }
        }
    }
    Ok(DecomposedSet::new(structure.clone(), blocks))
}

/// Splits the constraints of `poly` by block: constraints whose normal lives
/// inside a single block are restricted to that block; constraints spanning
/// several blocks are returned separately and blocks without any constraint
/// become the universe.
pub fn project_constraints(
    poly: &HPolyhedron,
    structure: &BlockStructure,
) -> (Vec<HPolyhedron>, Vec<HalfSpace>) {
    let mut per_block: Vec<Vec<HalfSpace>> = vec![Vec::new(); structure.count()];
    let mut cross = Vec::new();
    for c in &poly.constraints {
        let touched = touched_blocks(&c.normal, structure);
        match touched.len() {
            0 => {
                // constant constraint; keep it in every block only if false
                if c.offset < 0.0 {
                    for list in per_block.iter_mut() {
                        list.push(HalfSpace::new(
                            Vector::zeros(0),
                            c.offset,
                        ));
                    }
                }
            }
            1 => {
                let j = touched[0];
                per_block[j].push(HalfSpace::new(structure.project(&c.normal, j), c.offset));
            }
            _ => cross.push(c.clone()),
        }
    }
    let polys = per_block
        .into_iter()
        .enumerate()
        .map(|(j, cons)| {
            if cons.is_empty() {
                HPolyhedron::universe(structure.width(j))
            } else {
                let w = structure.width(j);
                let fixed = cons
                    .into_iter()
                    .map(|c| {
                        if c.normal.len() == w {
                            c
                        } else {
                            HalfSpace::new(Vector::zeros(w), c.offset)
                        }
                    })
                    .collect();
                HPolyhedron::with_dim(w, fixed)
            }
        })
        .collect();
    (polys, cross)
}

fn touched_blocks(normal: &Vector, structure: &BlockStructure) -> Vec<usize> {
    let mut out = Vec::new();
    for j in 0..structure.count() {
        let (s, e) = structure.range(j);
        if (s..e).any(|i| normal[i] != 0.0) {
            out.push(j);
        }
    }
    out
}

/// Indices of blocks touched by any nonzero constraint coefficient.
pub fn constrained_blocks(poly: &HPolyhedron, structure: &BlockStructure) -> Vec<usize> {
    let mut flags = vec![false; structure.count()];
    for c in &poly.constraints {
        for j in touched_blocks(&c.normal, structure) {
            flags[j] = true;
        }
    }
    flags
        .iter()
        .enumerate()
        .filter_map(|(j, &f)| f.then_some(j))
        .collect()
}

/// Block-wise intersection with a block-decomposed polyhedron list.
pub fn intersect_decomposed(
    set: &DecomposedSet,
    guard_blocks: &[HPolyhedron],
) -> Result<Intersected, DecompositionError> {
    assert_eq!(guard_blocks.len(), set.structure.count());
    let mut blocks = Vec::with_capacity(set.blocks.len());
    for (j, (x, g)) in set.blocks.iter().zip(guard_blocks).enumerate() {
        if g.is_universe() {
            blocks.push(x.clone());
            continue;
        }
        let w = set.structure.width(j);
        let combined = match x {
            Block::NotComputed => return Err(DecompositionError::MissingBlock(j)),
            Block::Universe => g.clone(),
            computed => HPolyhedron::with_dim(w, computed.constraints(w)).intersection(g)?,
        };
        if combined.is_empty() {
            return Ok(Intersected::EmptyByBlock(j));
        }
        blocks.push(Block::Poly(combined));
    }
    Ok(Intersected::Set(DecomposedSet::new(
        set.structure.clone(),
        blocks,
    )))
}

/// Sufficient block-wise emptiness test. Non-computed blocks are skipped,
/// which keeps the test sound; it never claims emptiness wrongly.
pub fn emptiness_witness(
    set: &DecomposedSet,
    guard_blocks: &[HPolyhedron],
) -> EmptinessWitness {
    for (j, (x, g)) in set.blocks.iter().zip(guard_blocks).enumerate() {
        if g.is_universe() {
            continue;
        }
        match x {
            Block::NotComputed | Block::Universe => continue,
            computed => {
                let w = set.structure.width(j);
                let combined = HPolyhedron::with_dim(w, computed.constraints(w))
                    .intersection(g)
                    .expect("same dimension");
                if combined.is_empty() {
                    return EmptinessWitness::EmptyByBlock(j);
                }
            }
        }
    }
    EmptinessWitness::PossiblyNonempty
}

/// Exact intersection on the subspace spanned by the blocks in `group`:
/// the Cartesian product of the group blocks intersected with the constraints
/// of `poly` restricted to those dimensions.
pub fn cross_block_refine(
    set: &DecomposedSet,
    poly: &HPolyhedron,
    group: &[usize],
) -> Result<HPolyhedron, DecompositionError> {
    let structure = &set.structure;
    // map group dimensions to local coordinates
    let mut dims = Vec::new();
    for &j in group {
        let (s, e) = structure.range(j);
        dims.extend(s..e);
    }
    let local = dims.len();
    let mut cons = Vec::new();
    let mut offset = 0;
    for &j in group {
        let w = structure.width(j);
        match &set.blocks[j] {
            Block::NotComputed => return Err(DecompositionError::MissingBlock(j)),
            b => {
                for c in b.constraints(w) {
                    let mut normal = Vector::zeros(local);
                    normal.rows_mut(offset, w).copy_from(&c.normal);
                    cons.push(HalfSpace::new(normal, c.offset));
                }
            }
        }
        offset += w;
    }
    for c in &poly.constraints {
        debug_assert!(
            touched_blocks(&c.normal, structure)
                .iter()
                .all(|j| group.contains(j)),
            "constraint touches blocks outside the group"
        );
        let mut normal = Vector::zeros(local);
        for (li, &gi) in dims.iter().enumerate() {
            normal[li] = c.normal[gi];
        }
        cons.push(HalfSpace::new(normal, c.offset));
    }
    Ok(HPolyhedron::with_dim(local, cons))
}

/// Error bound for intersecting a decomposed set with a compact polyhedron
/// after decomposing the polyhedron: `max_j min(diam(X_j), diam(pi_j Y))`.
pub fn intersection_error_bound(
    set: &DecomposedSet,
    poly: &HPolyhedron,
) -> Result<f64, DecompositionError> {
    let structure = &set.structure;
    let mut bound = 0.0f64;
    for (j, x) in set.blocks.iter().enumerate() {
        let w = structure.width(j);
        let dx = x.diameter_inf(w)?;
        // diameter of the projection of Y onto block j
        let (s, _) = structure.range(j);
        let mut dy = 0.0f64;
        let mut d = Vector::zeros(structure.dim());
        for i in 0..w {
            d[s + i] = 1.0;
            let hi = poly.support(&d).map_err(DecompositionError::Geometry)?;
            d[s + i] = -1.0;
            let lo = -poly.support(&d).map_err(DecompositionError::Geometry)?;
            d[s + i] = 0.0;
            dy = dy.max(hi - lo);
        }
        bound = bound.max(dx.min(dy));
    }
    Ok(bound)
}

/// Decomposed affine map: block `i` of the result is the template
/// concretization of `(+)_j M_{ij} X_j (+) {v_i}`. Exact when each block
/// column of `M` has at most one nonzero block.
pub fn affine_map_decomposed(
    matrix: &Matrix,
    vector: &Vector,
    set: &DecomposedSet,
    template: Template,
) -> Result<DecomposedSet, DecompositionError> {
    let structure = &set.structure;
    let n = structure.dim();
    if matrix.nrows() != n || matrix.ncols() != n || vector.len() != n {
        return Err(SetError::DimensionMismatch {
            expected: n,
            found: matrix.nrows(),
        }
        .into());
    }
    let b = structure.count();
    let mut blocks = Vec::with_capacity(b);
    for i in 0..b {
        let wi = structure.width(i);
        let vi = structure.project(vector, i);
        // collect contributing source blocks
        let mut sources = Vec::new();
        let mut universal = false;
        for j in 0..b {
            let mij = structure.block_of_matrix(matrix, i, j);
            if mij.iter().all(|&x| x == 0.0) {
                continue;
            }
            match &set.blocks[j] {
                Block::NotComputed => return Err(DecompositionError::MissingBlock(j)),
                Block::Universe => universal = true,
                other => sources.push((mij, other)),
            }
        }
        if universal {
            blocks.push(Block::Universe);
            continue;
        }
        let dirs = template.directions(wi);
        let mut supports = Vec::with_capacity(dirs.len());
        for d in &dirs {
            let mut s = vi.dot(d);
            for (mij, xj) in &sources {
                s += xj.support(&(mij.transpose() * d))?;
            }
            supports.push(s);
        }
        blocks.push(concretize_from_supports(&dirs, &supports, wi, template));
    }
    Ok(DecomposedSet::new(structure.clone(), blocks))
}

/// Builds a block from template directions and their support values.
pub fn concretize_from_supports(
    dirs: &[Vector],
    supports: &[f64],
    width: usize,
    template: Template,
) -> Block {
    if matches!(template, Template::Octagon) && width == 2 {
        let cons = dirs
            .iter()
            .zip(supports)
            .map(|(d, &s)| HalfSpace::new(d.clone(), s))
            .collect();
        Block::Poly(HPolyhedron::with_dim(width, cons))
    } else {
        // dirs are +e_i, -e_i in order; LP tolerances can invert the bounds
        // of a degenerate interval by a hair, so collapse those
        let mut lo = Vector::zeros(width);
        let mut hi = Vector::zeros(width);
        for i in 0..width {
            hi[i] = supports[2 * i];
            lo[i] = -supports[2 * i + 1];
            if lo[i] > hi[i] {
                assert!(lo[i] - hi[i] <= 1e-7, "support bounds inverted: {} > {}", lo[i], hi[i]);
                let mid = 0.5 * (lo[i] + hi[i]);
                lo[i] = mid;
                hi[i] = mid;
            }
        }
        Block::Box(Hyperrectangle::from_bounds(&lo, &hi))
    }
}

/// The tighter of the two affine-map error bounds:
/// `(b - 1) sum_j alpha_j diam(X_j)` and `(n / 2) alpha_max diam_sum`, where
/// `alpha_j` is the second largest block norm in block column `j`.
pub fn affine_map_error_bound(
    matrix: &Matrix,
    structure: &BlockStructure,
    set: &DecomposedSet,
) -> Result<f64, DecompositionError> {
    let b = structure.count();
    if b <= 1 {
        return Ok(0.0);
    }
    let mut sum_term = 0.0;
    let mut alpha_max = 0.0f64;
    let mut diam_sum = 0.0;
    for j in 0..b {
        let mut norms: Vec<f64> = (0..b)
            .map(|i| inf_norm(&structure.block_of_matrix(matrix, i, j)))
            .collect();
        norms.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let alpha_j = norms[1];
        let diam_j = set.blocks[j].diameter_inf(structure.width(j))?;
        sum_term += alpha_j * diam_j;
        alpha_max = alpha_max.max(alpha_j);
        diam_sum += diam_j;
    }
    let first = (b as f64 - 1.0) * sum_term;
    let second = structure.dim() as f64 / 2.0 * alpha_max * diam_sum;
    Ok(first.min(second))
}

fn inf_norm(m: &Matrix) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Exact block-wise inclusion check (universe on the right absorbs anything).
pub fn is_subset_decomposed(
    lhs: &DecomposedSet,
    rhs: &DecomposedSet,
) -> Result<bool, DecompositionError> {
    if lhs.structure != rhs.structure {
        return Err(DecompositionError::StructureMismatch);
    }
    for (j, (x, y)) in lhs.blocks.iter().zip(&rhs.blocks).enumerate() {
        match x.is_subset(y, lhs.structure.width(j)) {
            Ok(true) => {}
            Ok(false) => return Ok(false),
            Err(DecompositionError::MissingBlock(_)) => {
                return Err(DecompositionError::MissingBlock(j))
            }
            Err(e) => return Err(e),
        }
    }
    Ok(true)
}

/// Block-wise convex hull, template-concretized.
pub fn convex_hull_decomposed(
    lhs: &DecomposedSet,
    rhs: &DecomposedSet,
    template: Template,
) -> Result<DecomposedSet, DecompositionError> {
    if lhs.structure != rhs.structure {
        return Err(DecompositionError::StructureMismatch);
    }
    let structure = &lhs.structure;
    let mut blocks = Vec::with_capacity(lhs.blocks.len());
    for (j, (x, y)) in lhs.blocks.iter().zip(&rhs.blocks).enumerate() {
        let w = structure.width(j);
        match (x, y) {
            (Block::NotComputed, _) | (_, Block::NotComputed) => {
                return Err(DecompositionError::MissingBlock(j))
            }
            (Block::Universe, _) | (_, Block::Universe) => blocks.push(Block::Universe),
            (Block::Box(a), Block::Box(b)) if matches!(template, Template::Box) || w != 2 => {
                blocks.push(Block::Box(a.hull(b)))
            }
            (a, b) => {
                let dirs = template.directions(w);
                let mut supports = Vec::with_capacity(dirs.len());
                for d in &dirs {
                    supports.push(a.support(d)?.max(b.support(d)?));
                }
                blocks.push(concretize_from_supports(&dirs, &supports, w, template));
            }
        }
    }
    Ok(DecomposedSet::new(structure.clone(), blocks))
}

/// Error bound for the decomposed convex hull: the minimum of the radius of
/// the box approximation of the hull and the summed block-wise support
/// difference over box directions (exact for box blocks).
pub fn convex_hull_error_bound(
    lhs: &DecomposedSet,
    rhs: &DecomposedSet,
) -> Result<f64, DecompositionError> {
    if lhs.structure != rhs.structure {
        return Err(DecompositionError::StructureMismatch);
    }
    let structure = &lhs.structure;
    // first bound: infinity norm of the radius of the box approximation of
    // the hull
    let mut radius = 0.0f64;
    let mut all_boxes = true;
    let mut pos_sum = 0.0;
    let mut neg_sum = 0.0;
    for (j, (x, y)) in lhs.blocks.iter().zip(&rhs.blocks).enumerate() {
        let w = structure.width(j);
        let bx = x.box_approximation(w)?;
        let by = y.box_approximation(w)?;
        let hull = bx.hull(&by);
        radius = radius.max(hull.radius.amax());
        if !matches!(x, Block::Box(_)) || !matches!(y, Block::Box(_)) {
            all_boxes = false;
        }
        // per-dimension support differences at +-e_i; for box blocks the
        // maximand separates per dimension
        let mut pos = 0.0f64;
        let mut neg = 0.0f64;
        let mut d = Vector::zeros(w);
        for i in 0..w {
            for s in [1.0, -1.0] {
                d[i] = s;
                let diff = x.support(&d)? - y.support(&d)?;
                pos = pos.max(diff.max(0.0));
                neg = neg.max((-diff).max(0.0));
                d[i] = 0.0;
            }
        }
        pos_sum += pos;
        neg_sum += neg;
    }
    let second = pos_sum.max(neg_sum);
    if all_boxes {
        Ok(radius.min(second))
    } else {
        // for non-box blocks the sampled second term may under-estimate the
        // supremum, so fall back to the radius bound
        Ok(radius)
    }
}
