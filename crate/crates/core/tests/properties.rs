use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use consensus_core::engine::{
    apply_g, check_consensus_conditions, check_pairwise_learning, consensus_holds, is_fixed_point,
    run_dialogue, Scenario, StageBudget,
};
use consensus_core::graph::CommGraph;
use consensus_core::harness::{gen_message_function, gen_periodic_partition, STP_FAMILIES};
use consensus_core::lattice::{is_common_knowledge, Event, Partition, Profile};
use consensus_core::messages::{check_union_consistency, MessageFunction};
use consensus_core::ordinal::Ordinal;
use consensus_core::scenario::{parse_scenario, scenario_to_json, LoadedScenario};
use consensus_core::symbolic::PeriodicPartition;

fn partition(n: usize) -> impl Strategy<Value = Partition> {
    prop::collection::vec(0..n, n).prop_map(|labels| Partition::from_labels(&labels))
}

fn profile_strategy() -> impl Strategy<Value = Profile> {
    (2usize..=4, 1usize..=7).prop_flat_map(|(agents, states)| {
        prop::collection::vec(partition(states), agents)
            .prop_map(|parts| Profile::new(parts).expect("same state count"))
    })
}

fn graph_strategy(agents: usize) -> impl Strategy<Value = CommGraph> {
    prop::collection::vec(any::<bool>(), agents * agents).prop_map(move |bits| {
        let edges = (0..agents)
            .flat_map(|i| (0..agents).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && bits[i * agents + j]);
        CommGraph::new(agents, edges).expect("no self loops")
    })
}

/// A profile, a union-consistent message function and an arbitrary graph.
fn stp_scenario() -> impl Strategy<Value = Scenario> {
    (profile_strategy(), any::<u64>(), 0..STP_FAMILIES.len()).prop_flat_map(|(profile, seed, fam)| {
        let n = profile.num_agents();
        graph_strategy(n).prop_map(move |graph| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mf = gen_message_function(STP_FAMILIES[fam], profile.num_states(), &mut rng)
                .expect("known family");
            Scenario::unlabelled(profile.clone(), mf, graph).expect("sizes agree")
        })
    })
}

fn pair(n: usize) -> impl Strategy<Value = (Partition, Partition)> {
    (partition(n), partition(n))
}

/// `coarse` is coarser than `fine` when every pair together in `fine` is together in `coarse`.
fn brute_coarser(coarse: &Partition, fine: &Partition) -> bool {
    let n = fine.num_states();
    (0..n).all(|x| (0..n).all(|y| !fine.same_block(x, y) || coarse.same_block(x, y)))
}

/// Finest common coarsening by merging labels until nothing changes.
fn brute_meet(p: &Partition, q: &Partition) -> Partition {
    let n = p.num_states();
    let mut label: Vec<usize> = (0..n).collect();
    loop {
        let mut changed = false;
        for x in 0..n {
            for y in 0..n {
                if (p.same_block(x, y) || q.same_block(x, y)) && label[x] != label[y] {
                    let (lo, hi) = (label[x].min(label[y]), label[x].max(label[y]));
                    label.iter_mut().filter(|l| **l == hi).for_each(|l| *l = lo);
                    changed = true;
                }
            }
        }
        if !changed {
            return Partition::from_labels(&label);
        }
    }
}

/// States reachable from `x` through chains of agents' blocks.
fn brute_reachable(profile: &Profile, x: usize) -> Vec<bool> {
    let n = profile.num_states();
    let mut seen = vec![false; n];
    let mut stack = vec![x];
    seen[x] = true;
    while let Some(y) = stack.pop() {
        for p in profile.parts() {
            for (z, s) in seen.iter_mut().enumerate() {
                if p.same_block(y, z) && !*s {
                    *s = true;
                    stack.push(z);
                }
            }
        }
    }
    seen
}

/// One round computed pairwise: receiver `i` separates `x` and `y` when it
/// already did, or some sender says different things at them.
fn brute_round(sc: &Scenario) -> Profile {
    let n = sc.num_states();
    let mf = &sc.message_function;
    let msgs: Vec<_> = sc.initial.parts().iter().map(|p| mf.message_vector(p).unwrap()).collect();
    let parts = (0..sc.num_agents())
        .map(|i| {
            let mut labels: Vec<usize> = (0..n).collect();
            for x in 0..n {
                for y in 0..x {
                    let together = sc.initial.get(i).same_block(x, y)
                        && (0..sc.num_agents())
                            .filter(|&j| sc.graph.has_edge(j, i))
                            .all(|j| msgs[j][x] == msgs[j][y]);
                    if together {
                        labels[x] = labels[y];
                        break;
                    }
                }
            }
            Partition::from_labels(&labels)
        })
        .collect();
    Profile::new(parts).unwrap()
}

fn periodic(seed: u64) -> PeriodicPartition {
    gen_periodic_partition(&mut ChaCha8Rng::seed_from_u64(seed)).expect("generator makes valid partitions")
}

fn reach(p: &PeriodicPartition, q: &PeriodicPartition) -> u64 {
    p.largest_constant().max(q.largest_constant()) + p.span().max(q.span()) + 3 * p.modulus() * q.modulus() + 8
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn join_and_meet_match_pairwise_definitions((p, q) in (1usize..=8).prop_flat_map(pair)) {
        let j = p.join(&q).unwrap();
        let n = p.num_states();
        for x in 0..n {
            for y in 0..n {
                prop_assert_eq!(j.same_block(x, y), p.same_block(x, y) && q.same_block(x, y));
            }
        }
        prop_assert_eq!(p.meet(&q).unwrap(), brute_meet(&p, &q));
        prop_assert_eq!(p.is_coarser(&q).unwrap(), brute_coarser(&p, &q));
    }

    #[test]
    fn lattice_laws((p, q, r) in (1usize..=7).prop_flat_map(|n| (partition(n), partition(n), partition(n)))) {
        prop_assert_eq!(p.join(&q).unwrap(), q.join(&p).unwrap());
        prop_assert_eq!(p.meet(&q).unwrap(), q.meet(&p).unwrap());
        prop_assert_eq!(p.join(&q).unwrap().join(&r).unwrap(), p.join(&q.join(&r).unwrap()).unwrap());
        prop_assert_eq!(p.meet(&q).unwrap().meet(&r).unwrap(), p.meet(&q.meet(&r).unwrap()).unwrap());
        prop_assert_eq!(p.join(&p.meet(&q).unwrap()).unwrap(), p.clone());
        prop_assert_eq!(p.meet(&p.join(&q).unwrap()).unwrap(), p.clone());
        let j = p.join(&q).unwrap();
        prop_assert!(p.is_coarser(&j).unwrap() && q.is_coarser(&j).unwrap());
        prop_assert!(Partition::trivial(p.num_states()).is_coarser(&p).unwrap());
        prop_assert!(p.is_coarser(&Partition::singletons(p.num_states())).unwrap());
    }

    #[test]
    fn common_knowledge_is_reachability(profile in profile_strategy(), bits in any::<u64>(), x in 0usize..7) {
        let n = profile.num_states();
        let x = x % n;
        let event = Event::from_bits(n, bits & ((1 << n) - 1));
        let reach = brute_reachable(&profile, x);
        let expected = (0..n).all(|y| !reach[y] || event.contains(y));
        prop_assert_eq!(is_common_knowledge(&profile, &event, x).unwrap(), expected);
    }

    #[test]
    fn stp_families_are_union_consistent(states in 1usize..=6, fam in 0..STP_FAMILIES.len(), seed in any::<u64>()) {
        let mf = gen_message_function(STP_FAMILIES[fam], states, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(check_union_consistency(&mf, states).unwrap().holds());
    }

    #[test]
    fn update_matches_pairwise_round_and_is_inflationary(sc in stp_scenario()) {
        let next = apply_g(&sc.initial, &sc.graph, &sc.message_function).unwrap();
        prop_assert_eq!(&next, &brute_round(&sc));
        prop_assert!(sc.initial.is_coarser(&next).unwrap());
    }

    #[test]
    fn dialogues_refine_strictly_until_fixed(sc in stp_scenario()) {
        let trace = run_dialogue(&sc, StageBudget::for_scenario(&sc)).unwrap();
        prop_assert!(trace.successor_steps() <= sc.step_bound());
        for w in trace.records.windows(2) {
            let (a, b) = (&w[0].state.profile, &w[1].state.profile);
            prop_assert!(a.is_coarser(b).unwrap() && a != b);
            prop_assert!(!w[0].flags.fixed_point);
        }
        let last = &trace.last().state.profile;
        prop_assert!(is_fixed_point(last, &sc.graph, &sc.message_function).unwrap());
        if sc.graph.satisfies_reciprocity().holds() {
            prop_assert!(consensus_holds(last, &sc.message_function).unwrap());
        }
    }

    #[test]
    fn consensus_conditions_agree_and_imply_fixed_points(sc in stp_scenario()) {
        let c = check_consensus_conditions(&sc.initial, &sc.message_function).unwrap();
        prop_assert!(c.all_equal(), "{:?}", c);
        if c.b {
            prop_assert!(is_fixed_point(&sc.initial, &sc.graph, &sc.message_function).unwrap());
        }
    }

    #[test]
    fn some_disagreeing_agent_learns(sc in stp_scenario()) {
        for i in 0..sc.num_agents() {
            for j in 0..sc.num_agents() {
                if i != j {
                    let r = check_pairwise_learning(&sc.initial, &sc.message_function, i, j).unwrap();
                    prop_assert!(r.someone_learns(), "{} {} {:?}", i, j, r);
                }
            }
        }
    }

    #[test]
    fn injective_consensus_means_equal_partitions(profile in profile_strategy()) {
        let same = profile.parts().windows(2).all(|w| w[0] == w[1]);
        prop_assert_eq!(consensus_holds(&profile, &MessageFunction::Injective).unwrap(), same);
    }

    #[test]
    fn finite_scenarios_round_trip(sc in stp_scenario()) {
        let loaded = LoadedScenario::Finite(sc);
        let text = scenario_to_json(&loaded);
        prop_assert_eq!(parse_scenario(&text).unwrap(), loaded);
    }

    #[test]
    fn ordinals_round_trip_and_order(limits in 0u32..5, steps in 0u64..100) {
        let o = Ordinal::new(limits, steps);
        prop_assert_eq!(o.to_string().parse::<Ordinal>().unwrap(), o);
        prop_assert!(o < o.succ());
        prop_assert!(o.succ() < o.next_limit() && o.next_limit().is_limit());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn periodic_join_agrees_with_truncated_join(s in any::<u64>(), t in any::<u64>()) {
        let (p, q) = (periodic(s), periodic(t));
        prop_assert!(p.validate().is_ok() && q.validate().is_ok());
        let j = p.join(&q).unwrap();
        prop_assert!(j.validate().is_ok());
        let n = reach(&p, &q);
        prop_assert_eq!(j.restrict(n), p.restrict(n).join(&q.restrict(n)).unwrap());
        prop_assert!(p.equals(&p.lift(p.modulus() * 3)));
        prop_assert!(j.equals(&q.join(&p).unwrap()));
    }

    #[test]
    fn periodic_translation_and_prefix_isolation(s in any::<u64>(), shift in 0u64..6, d in 0u64..10) {
        let p = periodic(s);
        let n = reach(&p, &p);
        let base = p.restrict(n);
        let moved = p.translate(shift).restrict(n + shift);
        let cut = p.isolate_prefix(d).restrict(n);
        for x in 0..n as usize {
            for y in 0..n as usize {
                let sx = x + shift as usize;
                let sy = y + shift as usize;
                prop_assert_eq!(moved.same_block(sx, sy), base.same_block(x, y));
                let isolated = (x as u64) < d || (y as u64) < d;
                prop_assert_eq!(cut.same_block(x, y), x == y || (!isolated && base.same_block(x, y)));
            }
        }
        let translated = p.translate(shift);
        prop_assert!((1..=shift).all(|z| translated.is_singleton(z)));
    }

    #[test]
    fn periodic_working_partition_keeps_only_singletons(s in any::<u64>()) {
        let p = periodic(s);
        let w = p.known_state_working_partition();
        prop_assert!(w.validate().is_ok());
        let n = reach(&p, &p);
        for x in 1..=n {
            prop_assert_eq!(w.is_singleton(x), p.is_singleton(x));
            for y in 1..=n {
                let together = w.restrict(n).same_block((x - 1) as usize, (y - 1) as usize);
                prop_assert_eq!(together, x == y || (!p.is_singleton(x) && !p.is_singleton(y)));
            }
        }
    }

    #[test]
    fn periodic_partitions_rebuild_from_windows(s in any::<u64>()) {
        let p = periodic(s);
        let w = 2 * (p.largest_constant() + p.span()) + 6 * p.modulus() + 20;
        let r = p.restrict(w);
        let back = (0..=w).find_map(|h| PeriodicPartition::from_window(r.labels(), h, p.modulus()));
        prop_assert!(back.is_some_and(|b| b.equals(&p)));
    }
}
