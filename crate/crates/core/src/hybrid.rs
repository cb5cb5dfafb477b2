//! Hybrid automata with LTI dynamics per location and the decomposed
//! reachability loop: flowpipe computation, guard crossing, clustering,
//! fixpoint detection and safety checking.

use std::collections::VecDeque;

use thiserror::Error;

use crate::decomposition::{
    affine_map_decomposed, constrained_blocks, convex_hull_decomposed, cross_block_refine,
    emptiness_witness, intersect_decomposed, is_subset_decomposed, project_constraints,
    BlockStructure, DecomposedSet, DecompositionError, EmptinessWitness, Intersected, Template,
};
use crate::geometry::{HPolyhedron, HalfSpace, LazySet, Matrix, SetError, Vector, INCL_TOL};
use crate::lp::{self, LpOutcome};
use crate::lti::{discretize, flowpipe_sparse, BloatingModel, Flowpipe, LTISystem, LtiError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum HybridError {
    #[error(transparent)]
    Lti(#[from] LtiError),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error(transparent)]
    Geometry(#[from] SetError),
    #[error("invalid model: {0}")]
    Model(String),
}

/// Mode with continuous dynamics and an invariant polyhedron.
#[derive(Debug, Clone)]
pub struct Location {
    pub name: String,
    pub dynamics: LTISystem,
    pub invariant: HPolyhedron,
}

/// Affine reset `x' = M x + v`.
#[derive(Debug, Clone)]
pub struct Assignment {
    pub matrix: Matrix,
    pub vector: Vector,
}

impl Assignment {
    pub fn identity(n: usize) -> Self {
        Assignment {
            matrix: Matrix::identity(n, n),
            vector: Vector::zeros(n),
        }
    }

    /// Preimage of a half-space under the assignment:
    /// `{x : c' (M x + v) <= d} = {x : (M' c)' x <= d - c' v}`.
    pub fn pullback(&self, hs: &HalfSpace) -> HalfSpace {
        HalfSpace::new(
            self.matrix.transpose() * &hs.normal,
            hs.offset - hs.normal.dot(&self.vector),
        )
    }
}

#[derive(Debug, Clone)]
pub struct Transition {
    pub source: usize,
    pub target: usize,
    pub guard: HPolyhedron,
    pub assignment: Assignment,
}

#[derive(Debug, Clone)]
pub struct HybridAutomaton {
    pub dim: usize,
    pub locations: Vec<Location>,
    pub transitions: Vec<Transition>,
}

impl HybridAutomaton {
    pub fn outgoing(&self, loc: usize) -> impl Iterator<Item = (usize, &Transition)> {
        self.transitions
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.source == loc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Clustering {
    /// One decomposed convex hull per transition and source flowpipe.
    #[default]
    Hull,
    /// Every crossing step becomes its own successor.
    None,
}

#[derive(Debug, Clone)]
pub struct ReachConfig {
    pub structure: BlockStructure,
    pub delta: f64,
    /// time horizon of each flowpipe
    pub horizon: f64,
    pub max_jumps: usize,
    pub template: Template,
    pub clustering: Clustering,
    pub bloating: BloatingModel,
    /// states are unsafe as soon as they leave this polyhedron
    pub safe_set: Option<HPolyhedron>,
    /// blocks computed at every step regardless of guards (e.g. for output)
    pub extra_blocks: Vec<usize>,
    /// stop a flowpipe once its computed blocks re-enter an earlier step
    pub stop_when_included: bool,
}

/// A set of states in one location of the automaton.
#[derive(Debug, Clone)]
pub struct SymbolicState {
    pub location: usize,
    pub set: LazySet,
    pub jumps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Safe,
    Unsafe { location: usize, step: usize },
    BoundExhausted,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    /// reach-set time steps computed across all flowpipes
    pub sets_total: usize,
    /// steps upgraded to a fully computed set for a discrete transition
    pub sets_completed_highdim: usize,
    pub jumps_taken: usize,
    pub fixpoints_hit: usize,
    pub flowpipes: usize,
}

#[derive(Debug)]
pub struct ReachResult {
    pub verdict: Verdict,
    pub stats: Stats,
    /// per flowpipe: source location and the computed steps
    pub flowpipes: Vec<(usize, Flowpipe)>,
}

/// Combined transition condition `G* = Inv(src) /\ Guard /\ A^{-1} Inv(tgt)`
/// split into block-local and cross-block constraints.
struct TransitionPlan {
    gstar: HPolyhedron,
    per_block: Vec<HPolyhedron>,
    cross: Vec<HalfSpace>,
    cross_poly: HPolyhedron,
    guard_blocks: Vec<usize>,
}

fn precompute_plan(
    ha: &HybridAutomaton,
    t: &Transition,
    structure: &BlockStructure,
) -> TransitionPlan {
    let mut cons = Vec::new();
    cons.extend(ha.locations[t.source].invariant.constraints.iter().cloned());
    cons.extend(t.guard.constraints.iter().cloned());
    for hs in &ha.locations[t.target].invariant.constraints {
        cons.push(t.assignment.pullback(hs));
    }
    let gstar = HPolyhedron::with_dim(ha.dim, cons);
    let guard_blocks = constrained_blocks(&gstar, structure);
    let (per_block, cross) = project_constraints(&gstar, structure);
    let cross_poly = HPolyhedron::with_dim(ha.dim, cross.clone());
    TransitionPlan {
        gstar,
        per_block,
        cross,
        cross_poly,
        guard_blocks,
    }
}

/// Embedded constraints of all computed blocks of a step.
fn partial_constraints(step: &DecomposedSet) -> Vec<(Vector, f64)> {
    let structure = &step.structure;
    let n = structure.dim();
    let mut out = Vec::new();
    for (j, b) in step.blocks.iter().enumerate() {
        if !b.is_computed() {
            continue;
        }
        let w = structure.width(j);
        let (s, _) = structure.range(j);
        for c in b.constraints(w) {
            let mut normal = Vector::zeros(n);
            normal.rows_mut(s, w).copy_from(&c.normal);
            out.push((normal, c.offset));
        }
    }
    out
}

/// Safety of one step inside the location invariant. A step that lies
/// entirely outside the invariant is vacuously safe; otherwise the check
/// applies to the invariant-clipped step.
fn step_is_safe(
    step: &DecomposedSet,
    invariant: &HPolyhedron,
    safe: &HPolyhedron,
) -> Result<bool, HybridError> {
    for hs in &safe.constraints {
        // cheap support bound first; exact only when it fails
        let quick = step.support(&hs.normal)?;
        if quick <= hs.offset + INCL_TOL {
            continue;
        }
        let mut cons = partial_constraints(step);
        for ic in &invariant.constraints {
            cons.push((ic.normal.clone(), ic.offset));
        }
        match lp::maximize(&hs.normal, &cons) {
            LpOutcome::Infeasible => return Ok(true),
            LpOutcome::Optimal { value, .. } => {
                if value > hs.offset + 1e-7 {
                    return Ok(false);
                }
            }
            LpOutcome::Unbounded => {
                return Err(HybridError::Geometry(SetError::Unbounded));
            }
        }
    }
    Ok(true)
}

/// Replaces the blocks of `group` by a template reprojection of the exact
/// polyhedron `refined` living on the stacked dimensions of `group`.
fn reproject_refined(
    set: &mut DecomposedSet,
    refined: &HPolyhedron,
    group: &[usize],
    template: Template,
) -> Result<(), HybridError> {
    let structure = set.structure.clone();
    let mut offset = 0;
    for &j in group {
        let w = structure.width(j);
        let dirs = template.directions(w);
        let mut supports = Vec::with_capacity(dirs.len());
        for d in &dirs {
            let mut full = Vector::zeros(refined.dim());
            full.rows_mut(offset, w).copy_from(d);
            supports.push(refined.support(&full)?);
        }
        set.blocks[j] =
            crate::decomposition::concretize_from_supports(&dirs, &supports, w, template);
        offset += w;
    }
    Ok(())
}

/// Decomposed reachability from the given initial states. Breadth-first over
/// discrete transitions with per-transition clustering and fixpoint checks
/// against previously seen sets.
pub fn reach(
    ha: &HybridAutomaton,
    init: &[SymbolicState],
    config: &ReachConfig,
) -> Result<ReachResult, HybridError> {
    let structure = &config.structure;
    if structure.dim() != ha.dim {
        return Err(HybridError::Model(format!(
            "block structure covers {} dimensions, automaton has {}",
            structure.dim(),
            ha.dim
        )));
    }
    let plans: Vec<TransitionPlan> = ha
        .transitions
        .iter()
        .map(|t| precompute_plan(ha, t, structure))
        .collect();
    let safety_blocks: Vec<usize> = config
        .safe_set
        .as_ref()
        .map(|p| constrained_blocks(p, structure))
        .unwrap_or_default();
    let n_steps = (config.horizon / config.delta).ceil() as usize;

    let mut queue: VecDeque<SymbolicState> = init.iter().cloned().collect();
    let mut stored: Vec<Vec<DecomposedSet>> = vec![Vec::new(); ha.locations.len()];
    let mut stats = Stats::default();
    let mut flowpipes: Vec<(usize, Flowpipe)> = Vec::new();
    let mut bound_exhausted = false;

    while let Some(state) = queue.pop_front() {
        let loc = &ha.locations[state.location];
        let dsys = discretize(&loc.dynamics, &state.set, config.delta, config.bloating)?;

        let mut needed: Vec<usize> = safety_blocks.clone();
        needed.extend(config.extra_blocks.iter().copied());
        needed.extend(constrained_blocks(&loc.invariant, structure));
        for (ti, _) in ha.outgoing(state.location) {
            needed.extend(plans[ti].guard_blocks.iter().copied());
        }
        needed.sort_unstable();
        needed.dedup();

        let mut fp = flowpipe_sparse(
            &dsys,
            structure,
            n_steps,
            &needed,
            config.template,
            config.stop_when_included,
        )?;
        stats.sets_total += fp.len();
        stats.flowpipes += 1;

        if let Some(safe) = &config.safe_set {
            for k in 0..fp.len() {
                if !step_is_safe(&fp.steps[k], &loc.invariant, safe)? {
                    let verdict = Verdict::Unsafe {
                        location: state.location,
                        step: k,
                    };
                    flowpipes.push((state.location, fp));
                    return Ok(ReachResult {
                        verdict,
                        stats,
                        flowpipes,
                    });
                }
            }
        }

        stored[state.location].push(fp.steps[0].clone());

        for (ti, t) in ha.outgoing(state.location) {
            let plan = &plans[ti];
            let mut survivors = Vec::new();
            for k in 0..fp.len() {
                if matches!(
                    emptiness_witness(&fp.steps[k], &plan.per_block),
                    EmptinessWitness::EmptyByBlock(_)
                ) {
                    continue;
                }
                // exact check on the guard blocks (all computed by choice of
                // `needed`)
                let refined =
                    cross_block_refine(&fp.steps[k], &plan.gstar, &plan.guard_blocks)?;
                if refined.is_empty() {
                    continue;
                }
                survivors.push(k);
            }
            if survivors.is_empty() {
                continue;
            }
            let incomplete: usize = survivors
                .iter()
                .filter(|&&k| !fp.steps[k].fully_computed())
                .count();
            fp.complete_steps_fully(&survivors);
            stats.sets_completed_highdim += incomplete;

            let mut posts: Vec<DecomposedSet> = Vec::new();
            for &k in &survivors {
                let mut inter = match intersect_decomposed(&fp.steps[k], &plan.per_block)? {
                    Intersected::EmptyByBlock(_) => continue,
                    Intersected::Set(s) => s,
                };
                if !plan.cross.is_empty() {
                    let refined =
                        cross_block_refine(&inter, &plan.cross_poly, &plan.guard_blocks)?;
                    if refined.is_empty() {
                        continue;
                    }
                    reproject_refined(&mut inter, &refined, &plan.guard_blocks, config.template)?;
                }
                posts.push(affine_map_decomposed(
                    &t.assignment.matrix,
                    &t.assignment.vector,
                    &inter,
                    config.template,
                )?);
            }
            let clustered: Vec<DecomposedSet> = match config.clustering {
                Clustering::Hull => {
                    let mut it = posts.into_iter();
                    match it.next() {
                        Option::None => Vec::new(),
                        Some(first) => {
                            let hull = it.try_fold(first, |acc, p| {
                                convex_hull_decomposed(&acc, &p, config.template)
                            })?;
                            vec![hull]
                        }
                    }
                }
                Clustering::None => posts,
            };
            for post in clustered {
                let mut subsumed = false;
                for s in &stored[t.target] {
                    if is_subset_decomposed(&post, s)? {
                        subsumed = true;
                        break;
                    }
                }
                if subsumed {
                    stats.fixpoints_hit += 1;
                    continue;
                }
                if state.jumps >= config.max_jumps {
                    bound_exhausted = true;
                    continue;
                }
                let lazy = post.to_lazy()?;
                stored[t.target].push(post);
                stats.jumps_taken += 1;
                queue.push_back(SymbolicState {
                    location: t.target,
                    set: lazy,
                    jumps: state.jumps + 1,
                });
            }
        }
        flowpipes.push((state.location, fp));
    }

    let verdict = if bound_exhausted {
        Verdict::BoundExhausted
    } else {
        Verdict::Safe
    };
    Ok(ReachResult {
        verdict,
        stats,
        flowpipes,
    })
}
