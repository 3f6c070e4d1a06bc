use nested_tom_core::construction::*;
use nested_tom_core::inference::{exact_posterior, NestedGoalModel};
use nested_tom_core::ipomdp::{normalize, particle_update, Goal, InteractiveState, ParticleBelief, WeightedParticle};
use nested_tom_core::math::argmax;
use nested_tom_core::rng::rng_from;
use proptest::prelude::*;
use rand::Rng;
use ConstructionAction::*;

fn small(n_blocks: usize) -> ConstructionConfig {
    ConstructionConfig {
        width: 5,
        height: 5,
        n_blocks,
        ..ConstructionConfig::default()
    }
}

fn state(agents: &[(i32, i32)], blocks: &[(i32, i32)]) -> GridState {
    GridState {
        agents: agents
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| AgentRecord {
                id: AgentName::from_index(i),
                x,
                y,
                carrying: None,
            })
            .collect(),
        blocks: blocks
            .iter()
            .enumerate()
            .map(|(id, &(x, y))| BlockRecord { id, x, y, carried_by: None })
            .collect(),
    }
}

fn carry(s: &mut GridState, agent: usize, block: usize) {
    let a = s.agents[agent];
    s.agents[agent].carrying = Some(block);
    s.blocks[block].x = a.x;
    s.blocks[block].y = a.y;
    s.blocks[block].carried_by = Some(AgentName::from_index(agent));
}

fn mirror(s: &GridState, width: i32) -> GridState {
    let mut m = s.clone();
    for a in &mut m.agents {
        a.x = width - 1 - a.x;
    }
    for b in &mut m.blocks {
        b.x = width - 1 - b.x;
    }
    m
}

const G01: AliceGoal = AliceGoal { a: 0, b: 1 };

#[test]
fn cost_to_go_matches_hand_count() {
    // Alice at (0,2), block 0 right next to her, block 1 two cells further.
    let cfg = small(2);
    let s = state(&[(0, 2)], &[(1, 2), (3, 2)]);
    let c = bfs_cost_to_go(&cfg.grid(), &s, ALICE, G01);
    // R: pick up, step to (2,2), put down. U/D: detour of two. L: bumps the wall.
    assert_eq!(c, [5.0, 5.0, 4.0, 3.0, UNREACHABLE]);
}

#[test]
fn satisfied_state_costs_nothing_and_policy_is_uniform() {
    let cfg = small(2);
    let s = state(&[(0, 0)], &[(3, 3), (3, 4)]);
    let c = bfs_cost_to_go(&cfg.grid(), &s, ALICE, G01);
    assert_eq!(&c[..4], &[0.0; 4]);
    let p = alice_policy(&cfg, &s, G01);
    for a in 0..4 {
        assert!((p.prob(a) - 0.25).abs() < 1e-12);
    }
    assert_eq!(p.prob(PutDown.index()), 0.0);
}

#[test]
fn mirrored_instance_mirrors_costs() {
    let cfg = ConstructionConfig::default();
    let mut rng = rng_from(3, &[]);
    let eps = synthesize_episodes(&cfg, EpisodeKind::S1, 10, 4).unwrap();
    for ep in &eps {
        let s = &ep.steps[0].state;
        let m = mirror(s, cfg.width);
        let g = cfg.alice_goals()[rng.gen_range(0..45)];
        let c = bfs_cost_to_go(&cfg.grid(), s, ALICE, g);
        let cm = bfs_cost_to_go(&cfg.grid(), &m, ALICE, g);
        assert_eq!([c[0], c[1], c[2], c[3], c[4]], [cm[0], cm[1], cm[3], cm[2], cm[4]]);
    }
}

#[test]
fn greedy_rollouts_take_exactly_the_predicted_cost() {
    let cfg = ConstructionConfig {
        beta: 50.0,
        ..ConstructionConfig::default()
    };
    let grid = cfg.grid();
    let goals = cfg.alice_goals();
    let eps = synthesize_episodes(&cfg, EpisodeKind::S1, 100, 11).unwrap();
    for (k, ep) in eps.iter().enumerate() {
        let g = goals[(k * 7) % goals.len()];
        let mut s = ep.steps[0].state.clone();
        if s.goal_satisfied(g) {
            continue;
        }
        let predicted = bfs_cost_to_go(&grid, &s, ALICE, g)
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        assert!(predicted < UNREACHABLE);
        let mut steps = 0;
        while !s.goal_satisfied(g) {
            let a = alice_policy(&cfg, &s, g).argmax();
            s = grid.step(&s, &[Some(ConstructionAction::from_index(a))]).unwrap();
            steps += 1;
            assert!(steps <= 100, "rollout did not terminate");
        }
        assert_eq!(steps as f64, predicted, "episode {k}");
    }
}

#[test]
fn alice_prefers_the_unique_shortest_path() {
    let cfg = small(2);
    let s = state(&[(0, 2)], &[(1, 2), (3, 2)]);
    assert_eq!(alice_policy(&cfg, &s, G01).argmax(), Right.index());
}

#[test]
fn symmetric_optimal_moves_are_equally_likely() {
    // Alice between the two blocks: going left or right is equally good.
    let cfg = small(2);
    let s = state(&[(2, 2)], &[(0, 2), (4, 2)]);
    let p = alice_policy(&cfg, &s, G01);
    assert!((p.prob(Left.index()) - p.prob(Right.index())).abs() < 1e-12);
    assert!(p.prob(Left.index()) > p.prob(Up.index()));
}

#[test]
fn low_beta_policy_is_near_uniform() {
    let cfg = ConstructionConfig {
        beta: 1e-9,
        ..small(2)
    };
    let s = state(&[(0, 2)], &[(1, 2), (3, 2)]);
    let p = alice_policy(&cfg, &s, G01);
    for a in 0..4 {
        assert!((p.prob(a) - 0.25).abs() < 1e-6);
    }
}

#[test]
fn helpful_bob_carries_a_goal_block_toward_the_other() {
    let cfg = small(2);
    let mut s = state(&[(4, 4), (1, 2)], &[(0, 0), (4, 2)]);
    carry(&mut s, BOB, 0);
    let p = bob_policy(&cfg, &s, &cfg.alice_goals(), &[1.0], BobGoal::Help);
    assert_eq!(p.argmax(), Right.index());
}

#[test]
fn help_and_hinder_values_are_negations_without_shaping() {
    let cfg = ConstructionConfig {
        approach_weight: 0.0,
        ..small(3)
    };
    let mut s = state(&[(4, 4), (1, 2)], &[(0, 0), (4, 2), (0, 4)]);
    carry(&mut s, BOB, 0);
    let goals = cfg.alice_goals();
    let belief = [0.6, 0.3, 0.1];
    let planner = BobPlanner::new(&cfg, &s, &goals);
    let help = planner.values(&belief, BobGoal::Help);
    let hinder = planner.values(&belief, BobGoal::Hinder);
    for (h, k) in help.iter().zip(&hinder) {
        assert_eq!(*h, -*k);
    }
    assert_ne!(argmax(&help), argmax(&hinder));
}

#[test]
fn uniform_belief_on_a_symmetric_layout_gives_symmetric_moves() {
    let cfg = small(3);
    let s = state(&[(2, 0), (2, 2)], &[(0, 4), (4, 4), (2, 4)]);
    let goals = cfg.alice_goals();
    let belief = [1.0 / 3.0; 3];
    for goal in BobGoal::ALL {
        let p = bob_policy(&cfg, &s, &goals, &belief, goal);
        assert!((p.prob(Left.index()) - p.prob(Right.index())).abs() < 1e-12);
    }
}

#[test]
fn episode_kinds_have_the_right_agents() {
    let cfg = ConstructionConfig::default();
    for (kind, n) in [(EpisodeKind::S1, 1), (EpisodeKind::S2, 2), (EpisodeKind::Test, 2)] {
        for ep in synthesize_episodes(&cfg, kind, 5, 1).unwrap() {
            assert_eq!(ep.agents.len(), n);
            assert!(ep.steps.iter().all(|s| s.state.agents.len() == n && s.actions.len() == n));
            assert_eq!(ep.kind, kind.tag());
            ep.validate(&[45, 2]).unwrap();
            assert!(ep.len() <= cfg.t_max);
        }
    }
}

#[test]
fn synthesis_is_deterministic_and_seeds_are_recorded() {
    let cfg = ConstructionConfig::default();
    let a = synthesize_episodes(&cfg, EpisodeKind::Test, 20, 7).unwrap();
    let b = synthesize_episodes(&cfg, EpisodeKind::Test, 20, 7).unwrap();
    assert_eq!(a, b);
    let again = synthesize_from_seed(&cfg, EpisodeKind::Test, a[3].seed).unwrap();
    assert_eq!(again, a[3]);
}

#[test]
fn episodes_end_on_goal_or_horizon() {
    let cfg = ConstructionConfig::default();
    for ep in synthesize_episodes(&cfg, EpisodeKind::S2, 20, 5).unwrap() {
        let states = episode_states(&cfg, &ep).unwrap();
        let g = cfg.alice_goals()[ep.agents[0].goal as usize];
        let done = states.last().unwrap().goal_satisfied(g);
        assert!(done || ep.len() == cfg.t_max);
        assert!(states[..ep.len()].iter().all(|s| !s.goal_satisfied(g)));
    }
}

#[test]
fn helping_shortens_episodes() {
    let cfg = ConstructionConfig::default();
    let eps = synthesize_episodes(&cfg, EpisodeKind::S2, 400, 21).unwrap();
    let mean = |goal: u32| {
        let lens: Vec<f64> = eps
            .iter()
            .filter(|e| e.agents[BOB].goal == goal)
            .map(|e| e.len() as f64)
            .collect();
        assert!(lens.len() > 150);
        lens.iter().sum::<f64>() / lens.len() as f64
    };
    let (help, hinder) = (mean(0), mean(1));
    assert!(help < hinder, "help {help} hinder {hinder}");
}

#[test]
fn exact_level1_posterior_concentrates() {
    let cfg = ConstructionConfig::default();
    let eps = synthesize_episodes(&cfg, EpisodeKind::S1, 100, 13).unwrap();
    let mut sharper = 0;
    for ep in &eps {
        let m = ConstructionModel::new(&cfg, ep).unwrap();
        let truth = ep.agents[0].goal as usize;
        let first = exact_posterior(&m, 1, 1).unwrap().posterior.probs()[truth];
        let last = exact_posterior(&m, 1, m.steps()).unwrap().posterior.probs()[truth];
        sharper += usize::from(last > first);
    }
    assert!(sharper >= 90, "{sharper} of 100");
}

#[test]
fn bob_belief_matches_exact_level1_posterior() {
    let cfg = ConstructionConfig::default();
    let ep = &synthesize_episodes(&cfg, EpisodeKind::Test, 1, 2).unwrap()[0];
    let m = ConstructionModel::new(&cfg, ep).unwrap();
    let beliefs = level1_beliefs(&cfg, ep);
    for n in [0, 1, ep.len() / 2, ep.len()] {
        let exact = exact_posterior(&m, 1, n).unwrap();
        for (a, b) in exact.posterior.probs().iter().zip(&beliefs[n]) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn joint_space_has_ninety_entries() {
    let cfg = ConstructionConfig::default();
    let ep = &synthesize_episodes(&cfg, EpisodeKind::Test, 1, 2).unwrap()[0];
    let m = ConstructionModel::new(&cfg, ep).unwrap();
    assert_eq!(m.lower_size() * m.upper_size(), 90);
    assert_eq!(exact_posterior(&m, 2, 1).unwrap().posterior.len(), 90);
}

#[test]
fn particle_update_reweights_goal_particles_by_alice_policy() {
    let cfg = small(3);
    let env = ConstructionEnv::new(cfg.clone());
    let s = state(&[(2, 2), (0, 0)], &[(0, 4), (4, 4), (4, 0)]);
    let weights = [0.2, 0.3, 0.5];
    let particles = (0..3)
        .map(|g| {
            let alice = ParticleBelief::uniform(vec![InteractiveState::level0(s.clone())]).unwrap();
            WeightedParticle::new(InteractiveState::nested(s.clone(), alice, Goal(g as u32)).unwrap(), weights[g])
        })
        .collect();
    let belief = normalize(particles).unwrap();
    let next = cfg.grid().step(&s, &[Some(Up), Some(Right)]).unwrap();
    let updated = particle_update(&belief, &next, Right.index(), BOB, &env, &mut rng_from(0, &[])).unwrap();
    let goals = cfg.alice_goals();
    let hand: Vec<f64> = (0..3)
        .map(|g| weights[g] * alice_policy(&cfg, &s, goals[g]).prob(Up.index()))
        .collect();
    let z: f64 = hand.iter().sum();
    for (p, h) in updated.particles().iter().zip(&hand) {
        assert!((p.weight - h / z).abs() < 1e-9);
        assert_eq!(p.state.world(), &next);
    }
}

#[test]
fn state_payload_has_the_documented_shape() {
    let mut s = state(&[(1, 2), (3, 4)], &[(1, 2), (0, 0)]);
    carry(&mut s, ALICE, 0);
    let v = serde_json::to_value(&s).unwrap();
    assert_eq!(v["agents"][0]["id"], "alice");
    assert_eq!(v["agents"][0]["carrying"], 0);
    assert_eq!(v["blocks"][0]["carried_by"], "alice");
    assert!(v["blocks"][1]["carried_by"].is_null());
    assert_eq!(serde_json::to_value(PutDown).unwrap(), "P");
    let back: GridState = serde_json::from_value(v).unwrap();
    assert_eq!(back, s);
}

fn relabel(ep: &ConstructionEpisode, perm: &[usize]) -> ConstructionEpisode {
    let mut out = ep.clone();
    for step in &mut out.steps {
        let old = step.state.clone();
        for b in &old.blocks {
            let mut nb = *b;
            nb.id = perm[b.id];
            step.state.blocks[perm[b.id]] = nb;
        }
        for a in &mut step.state.agents {
            a.carrying = a.carrying.map(|c| perm[c]);
        }
    }
    out
}

#[test]
fn features_have_fixed_length_and_padding() {
    let cfg = ConstructionConfig::default();
    let ep = &synthesize_episodes(&cfg, EpisodeKind::Test, 1, 3).unwrap()[0];
    let states = episode_states(&cfg, ep).unwrap();
    let dim = feature_dim(&cfg);
    assert_eq!(dim, 6 + 120 + 90 + 40 + 1);
    for n in 0..=ep.len() {
        assert_eq!(featurize(&cfg, ep, &states, n, 2).len(), dim);
    }
    let f0 = featurize(&cfg, ep, &states, 0, 2);
    assert!(f0.0[dim - 41..dim - 1].iter().all(|&x| x == 0.0));
    let f1 = featurize(&cfg, ep, &states, 1, 1);
    assert_eq!(&f1.0[2..4], &[0.0, 0.0]);
    let bob_actions = dim - 1 - 20;
    assert!(f1.0[bob_actions..dim - 1].iter().all(|&x| x == 0.0));
}

#[test]
fn permuting_features_matches_relabeled_episode() {
    let cfg = ConstructionConfig::default();
    let ep = &synthesize_episodes(&cfg, EpisodeKind::Test, 1, 9).unwrap()[0];
    let perm = [3, 7, 0, 9, 1, 2, 8, 4, 6, 5];
    let re = relabel(ep, &perm);
    let (s, rs) = (episode_states(&cfg, ep).unwrap(), episode_states(&cfg, &re).unwrap());
    for n in [0, 1, 5.min(ep.len()), ep.len()] {
        let a = permute_blocks(&cfg, &featurize(&cfg, ep, &s, n, 2), &perm);
        let b = featurize(&cfg, &re, &rs, n, 2);
        assert_eq!(a, b);
    }
    let g = cfg.alice_goals()[12];
    let pg = permute_goal(&cfg, 12, &perm);
    let expect = AliceGoal::id(perm[g.a], perm[g.b], 10);
    assert_eq!(pg, expect);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn blocks_are_conserved_and_steps_replay(seed in 0u64..1000, actions in prop::collection::vec((0usize..5, 0usize..5), 1..60)) {
        let cfg = ConstructionConfig::default();
        let grid = cfg.grid();
        let ep = &synthesize_episodes(&cfg, EpisodeKind::Test, 1, seed).unwrap()[0];
        let mut s = ep.steps[0].state.clone();
        for (a, b) in actions {
            let legal_a = s.legal_actions(ALICE)[a];
            let legal_b = s.legal_actions(BOB)[b];
            let joint = [
                Some(ConstructionAction::from_index(if legal_a { a } else { 0 })),
                Some(ConstructionAction::from_index(if legal_b { b } else { 1 })),
            ];
            let next = grid.step(&s, &joint).unwrap();
            prop_assert_eq!(&grid.step(&s, &joint).unwrap(), &next);
            prop_assert_eq!(next.blocks.len(), 10);
            for (i, blk) in next.blocks.iter().enumerate() {
                prop_assert_eq!(blk.id, i);
                prop_assert!(grid.in_bounds(blk.pos()));
                if let Some(c) = blk.carried_by {
                    let carrier = next.agents[c.index()];
                    prop_assert_eq!(carrier.carrying, Some(i));
                    prop_assert_eq!(carrier.pos(), blk.pos());
                }
            }
            for agent in &next.agents {
                if let Some(c) = agent.carrying {
                    prop_assert_eq!(next.blocks[c].carried_by, Some(agent.id));
                }
            }
            let mut free: Vec<_> = next.blocks.iter().filter(|b| b.carried_by.is_none()).map(|b| b.pos()).collect();
            let n_free = free.len();
            free.sort_by_key(|p| (p.x, p.y));
            free.dedup();
            prop_assert_eq!(free.len(), n_free);
            s = next;
        }
    }
}
