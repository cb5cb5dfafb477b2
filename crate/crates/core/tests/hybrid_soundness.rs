//! End-to-end checks of the hybrid reachability loop on the oscillator
//! models: verdict behavior and containment of simulated executions.

mod support;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use blockreach::decomposition::{BlockStructure, Template};
use blockreach::geometry::{HPolyhedron, HalfSpace, Vector};
use blockreach::hybrid::{reach, Clustering, ReachConfig, Verdict};
use blockreach::lti::BloatingModel;
use blockreach::models::{build_model, generate_filtered_oscillator};

fn config_for(dim: usize, width: usize, template: Template) -> ReachConfig {
    ReachConfig {
        structure: BlockStructure::uniform(dim, width),
        delta: 0.01,
        horizon: 2.0,
        max_jumps: 5,
        template,
        clustering: Clustering::Hull,
        bloating: BloatingModel::CorrectionHull,
        safe_set: None,
        extra_blocks: vec![],
        stop_when_included: false,
    }
}

#[test]
fn oscillator_variants_verified_safe() {
    for (k, width, template) in [
        (1, 1, Template::Box),
        (2, 2, Template::Octagon),
        (8, 1, Template::Box),
    ] {
        let model = build_model(&generate_filtered_oscillator(k)).unwrap();
        let mut config = config_for(model.automaton.dim, width, template);
        config.safe_set = model.safe_set.clone();
        let result = reach(&model.automaton, &model.initial, &config).unwrap();
        assert_eq!(
            result.verdict,
            Verdict::Safe,
            "k={k} width={width} {template:?}"
        );
        assert_eq!(result.stats.flowpipes, 6);
    }
}

#[test]
fn tighter_safety_line_is_violated() {
    // the oscillator reaches y close to 0.45, so a bound at 0.3 must fail
    let model = build_model(&generate_filtered_oscillator(4)).unwrap();
    let mut config = config_for(model.automaton.dim, 1, Template::Box);
    let mut normal = Vector::zeros(model.automaton.dim);
    normal[1] = 1.0;
    config.safe_set = Some(HPolyhedron::with_dim(
        model.automaton.dim,
        vec![HalfSpace::new(normal, 0.3)],
    ));
    let result = reach(&model.automaton, &model.initial, &config).unwrap();
    assert!(matches!(result.verdict, Verdict::Unsafe { .. }));
}

#[test]
fn zero_jump_bound_is_exhausted() {
    let model = build_model(&generate_filtered_oscillator(4)).unwrap();
    let mut config = config_for(model.automaton.dim, 1, Template::Box);
    config.max_jumps = 0;
    let result = reach(&model.automaton, &model.initial, &config).unwrap();
    assert_eq!(result.verdict, Verdict::BoundExhausted);
    assert_eq!(result.stats.jumps_taken, 0);
}

/// Simulated executions of the k=1 oscillator stay inside the flowpipes
/// under the 2-D octagon decomposition as well.
#[test]
fn octagon_flowpipes_contain_simulations() {
    let model = build_model(&generate_filtered_oscillator(1)).unwrap();
    let n = model.automaton.dim;
    let mut config = config_for(n, 2, Template::Octagon);
    config.safe_set = model.safe_set.clone();
    let mut result = reach(&model.automaton, &model.initial, &config).unwrap();
    assert_eq!(result.verdict, Verdict::Safe);
    for (_, fp) in result.flowpipes.iter_mut() {
        let steps: Vec<usize> = (0..fp.len()).collect();
        fp.complete_steps_fully(&steps);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let u = Vector::from_column_slice(&[1.0]);
    for _ in 0..10 {
        let mut x0 = Vector::zeros(n);
        x0[0] = rng.gen_range(0.2..0.3);
        x0[1] = rng.gen_range(-0.1..0.1);
        let traj = support::simulate_hybrid(&model.automaton, 2, &x0, &u, 8.0, 1e-3);
        assert!(traj.last().unwrap().segment >= 3);
        for p in traj.iter().step_by(11) {
            if p.segment >= result.flowpipes.len() {
                break;
            }
            let (loc, fp) = &result.flowpipes[p.segment];
            assert_eq!(*loc, p.location);
            let k = ((p.local_time / fp.delta + 1e-12).floor() as usize).min(fp.len() - 1);
            assert!(
                fp.steps[k].contains(&p.state, 1e-6),
                "state escaped octagon flowpipe at t={}",
                p.time
            );
        }
    }
}

/// The counter guard stops the cycle: no location is entered more than twice
/// within the five allowed jumps.
#[test]
fn counter_limits_location_visits() {
    let model = build_model(&generate_filtered_oscillator(2)).unwrap();
    let mut config = config_for(model.automaton.dim, 1, Template::Box);
    config.safe_set = model.safe_set.clone();
    config.max_jumps = 50;
    let result = reach(&model.automaton, &model.initial, &config).unwrap();
    assert_eq!(result.verdict, Verdict::Safe);
    let mut visits = [0usize; 4];
    for (loc, _) in &result.flowpipes {
        visits[*loc] += 1;
    }
    assert!(visits.iter().all(|&v| v <= 2), "visits {visits:?}");
    assert_eq!(result.stats.jumps_taken, 5);
}
