//! Seeded random scenarios and the named property suites run over them.
//!
//! Every case draws from its own ChaCha stream (`seed`, stream = case index),
//! so cases can run in parallel and a report is reproducible byte for byte.
//! Failing finite cases are shrunk greedily before being reported.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::engine::{
    apply_g, check_consensus_conditions, check_pairwise_learning, consensus_holds, is_fixed_point,
    run_dialogue, Scenario, StageBudget,
};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::graph::CommGraph;
use crate::lattice::{Event, Partition, Profile};
use crate::messages::{check_union_consistency, MessageFunction};
use crate::scenario::{scenario_to_json, LoadedScenario};
use crate::symbolic::{truncation_oracle, InfiniteBlock, PeriodicPartition, SymbolicProfile, SymbolicScenario};

pub const DEFAULT_CASES: usize = 1000;
pub const DEFAULT_SEED: u64 = 0x00c0_ffee;

/// Message function families that satisfy union consistency by construction.
pub const STP_FAMILIES: [&str; 4] = ["known_state", "posterior", "expected_value", "injective"];

/// Registered suites.
pub const SUITES: [&str; 9] = [
    "inflationary",
    "non_monotone_witness",
    "consensus_characterization",
    "consensus_is_fixed",
    "fixed_is_consensus",
    "pairwise_learning",
    "step_bound",
    "injective_sharing",
    "symbolic_oracle",
];

pub fn case_rng(seed: u64, case: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case as u64);
    rng
}

/// Uniform random block assignment, canonicalized.
pub fn gen_partition(num_states: usize, rng: &mut impl Rng) -> Partition {
    let labels: Vec<usize> = (0..num_states).map(|_| rng.gen_range(0..num_states)).collect();
    Partition::from_labels(&labels)
}

pub fn gen_profile(num_agents: usize, num_states: usize, rng: &mut impl Rng) -> Result<Profile> {
    Profile::new((0..num_agents).map(|_| gen_partition(num_states, rng)).collect())
}

fn gen_rational(rng: &mut impl Rng, lo: i64, hi: i64) -> BigRational {
    BigRational::new(BigInt::from(rng.gen_range(lo..=hi)), BigInt::from(rng.gen_range(1..=4)))
}

pub fn gen_message_function(
    family: &str,
    num_states: usize,
    rng: &mut impl Rng,
) -> Result<MessageFunction> {
    match family {
        "known_state" => Ok(MessageFunction::KnownState),
        "injective" => Ok(MessageFunction::Injective),
        "posterior" => {
            let prior = (0..num_states).map(|_| gen_rational(rng, 1, 6)).collect();
            let event = Event::from_mask((0..num_states).map(|_| rng.gen_bool(0.5)).collect());
            Ok(MessageFunction::Posterior { prior, event })
        }
        "expected_value" => {
            let payoffs = (0..num_states).map(|_| gen_rational(rng, -6, 6)).collect();
            Ok(MessageFunction::ExpectedValue { payoffs })
        }
        other => Err(Error::UnknownFamily(other.to_string())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphMode {
    /// The symmetric core connects every agent.
    Reciprocal,
    /// The symmetric core is disconnected.
    NonReciprocal,
}

pub fn gen_graph(num_agents: usize, rng: &mut impl Rng, mode: GraphMode) -> Result<CommGraph> {
    let mut edges = Vec::new();
    match mode {
        GraphMode::Reciprocal => {
            let mut order: Vec<usize> = (0..num_agents).collect();
            order.shuffle(rng);
            for k in 1..num_agents {
                let parent = order[rng.gen_range(0..k)];
                edges.push((order[k], parent));
                edges.push((parent, order[k]));
            }
            for i in 0..num_agents {
                for j in 0..num_agents {
                    if i != j && rng.gen_bool(0.2) {
                        edges.push((i, j));
                    }
                }
            }
        }
        GraphMode::NonReciprocal => {
            // two non-empty sides; across them at most one direction per pair
            let cut = rng.gen_range(1..num_agents);
            let mut side: Vec<bool> = (0..num_agents).map(|i| i < cut).collect();
            side.shuffle(rng);
            for i in 0..num_agents {
                for j in i + 1..num_agents {
                    if side[i] == side[j] {
                        if rng.gen_bool(0.5) {
                            edges.push((i, j));
                        }
                        if rng.gen_bool(0.5) {
                            edges.push((j, i));
                        }
                    } else {
                        match rng.gen_range(0..3) {
                            0 => edges.push((i, j)),
                            1 => edges.push((j, i)),
                            _ => {}
                        }
                    }
                }
            }
        }
    }
    CommGraph::new(num_agents, edges)
}

/// Sizes and the optional message function replacing the random families.
#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub cases: usize,
    pub seed: u64,
    pub agents: (usize, usize),
    pub states: (usize, usize),
    pub injected: Option<MessageFunction>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            cases: DEFAULT_CASES,
            seed: DEFAULT_SEED,
            agents: (2, 4),
            states: (2, 8),
            injected: None,
        }
    }
}

fn injected_states(mf: &MessageFunction) -> Option<usize> {
    match mf {
        MessageFunction::Lookup { num_states, .. } => Some(*num_states),
        MessageFunction::Posterior { prior, .. } => Some(prior.len()),
        MessageFunction::ExpectedValue { payoffs } => Some(payoffs.len()),
        MessageFunction::Maximin { utility, .. } => utility.first().map(Vec::len),
        _ => None,
    }
}

pub fn gen_scenario(
    opts: &SuiteOptions,
    rng: &mut ChaCha8Rng,
    families: &[&str],
    mode: Option<GraphMode>,
) -> Result<Scenario> {
    let n = rng.gen_range(opts.agents.0..=opts.agents.1);
    let fixed_states = opts.injected.as_ref().and_then(injected_states);
    let num_states = fixed_states.unwrap_or_else(|| rng.gen_range(opts.states.0..=opts.states.1));
    let profile = gen_profile(n, num_states, rng)?;
    let mf = match &opts.injected {
        Some(mf) => mf.clone(),
        None => gen_message_function(families.choose(rng).expect("non-empty"), num_states, rng)?,
    };
    let mode = mode.unwrap_or(if rng.gen_bool(0.5) {
        GraphMode::Reciprocal
    } else {
        GraphMode::NonReciprocal
    });
    let graph = gen_graph(n, rng, mode)?;
    Scenario::unlabelled(profile, mf, graph)
}

/// A failing case, after shrinking.
#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub case: usize,
    pub detail: String,
    /// The shrunk scenario as a scenario document, when there is one.
    pub scenario: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropertyReport {
    pub suite: String,
    pub cases: usize,
    pub failures: Vec<Failure>,
    /// The run used an injected message function that violates union
    /// consistency, so failures are the expected outcome.
    pub expected_failure: bool,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// A summary line followed by one line per failure, in case order.
    pub fn to_lines(&self) -> Vec<String> {
        let mut out = vec![json!({
            "suite": self.suite,
            "cases": self.cases,
            "failures": self.failures.len(),
            "expected_failure": self.expected_failure,
        })
        .to_string()];
        for f in &self.failures {
            out.push(
                json!({
                    "suite": self.suite,
                    "case": f.case,
                    "detail": f.detail,
                    "scenario": f.scenario,
                })
                .to_string(),
            );
        }
        out
    }
}

/// `Ok(None)` when the property holds, `Ok(Some(why))` when it does not.
type Check = fn(&Scenario) -> Result<Option<String>>;

fn fail(cond: bool, why: impl FnOnce() -> String) -> Option<String> {
    (!cond).then(why)
}

fn stage_profiles(sc: &Scenario) -> Result<Vec<Profile>> {
    let trace = run_dialogue(sc, StageBudget::for_scenario(sc))?;
    Ok(trace.records.into_iter().map(|r| r.state.profile).collect())
}

fn check_inflationary(sc: &Scenario) -> Result<Option<String>> {
    let next = apply_g(&sc.initial, &sc.graph, &sc.message_function)?;
    Ok(fail(sc.initial.is_coarser(&next)?, || "g(P) does not refine P".into()))
}

fn check_characterization(sc: &Scenario) -> Result<Option<String>> {
    for (t, p) in stage_profiles(sc)?.iter().enumerate() {
        let c = check_consensus_conditions(p, &sc.message_function)?;
        if !c.all_equal() {
            return Ok(Some(format!("stage {t}: a={} b={} c={}", c.a, c.b, c.c)));
        }
    }
    Ok(None)
}

fn check_consensus_is_fixed(sc: &Scenario) -> Result<Option<String>> {
    for (t, p) in stage_profiles(sc)?.iter().enumerate() {
        if consensus_holds(p, &sc.message_function)? && !is_fixed_point(p, &sc.graph, &sc.message_function)? {
            return Ok(Some(format!("stage {t}: consensus but not a fixed point")));
        }
    }
    Ok(None)
}

fn check_fixed_is_consensus(sc: &Scenario) -> Result<Option<String>> {
    if !sc.graph.satisfies_reciprocity().holds() {
        return Ok(None);
    }
    for (t, p) in stage_profiles(sc)?.iter().enumerate() {
        let fixed = is_fixed_point(p, &sc.graph, &sc.message_function)?;
        let cons = consensus_holds(p, &sc.message_function)?;
        if fixed != cons {
            return Ok(Some(format!("stage {t}: fixed point {fixed}, consensus {cons}")));
        }
    }
    Ok(None)
}

fn check_pairwise(sc: &Scenario) -> Result<Option<String>> {
    let n = sc.num_agents();
    for i in 0..n {
        for j in i + 1..n {
            let r = check_pairwise_learning(&sc.initial, &sc.message_function, i, j)?;
            if !r.someone_learns() {
                return Ok(Some(format!("agents {i} and {j} disagree but neither learns")));
            }
        }
    }
    Ok(None)
}

fn check_step_bound(sc: &Scenario) -> Result<Option<String>> {
    let profiles = stage_profiles(sc)?;
    let steps = profiles.len() - 1;
    if steps > sc.step_bound() {
        return Ok(Some(format!("{steps} steps exceed n·N = {}", sc.step_bound())));
    }
    for (t, w) in profiles.windows(2).enumerate() {
        if !(w[0].is_coarser(&w[1])? && w[0] != w[1]) {
            return Ok(Some(format!("stage {t} to {} is not a strict refinement", t + 1)));
        }
    }
    Ok(None)
}

fn check_injective(sc: &Scenario) -> Result<Option<String>> {
    for (t, p) in stage_profiles(sc)?.iter().enumerate() {
        let same = p.parts().windows(2).all(|w| w[0] == w[1]);
        if consensus_holds(p, &sc.message_function)? && !same {
            return Ok(Some(format!("stage {t}: consensus with different partitions")));
        }
    }
    Ok(None)
}

/// Candidate simplifications: drop an edge, merge two blocks of one agent,
/// remove an agent.
fn shrink_candidates(sc: &Scenario) -> Vec<Scenario> {
    let mut out = Vec::new();
    let edges = sc.graph.edges();
    for k in 0..edges.len() {
        let kept = edges.iter().enumerate().filter(|&(e, _)| e != k).map(|(_, &e)| e);
        if let Ok(g) = CommGraph::new(sc.num_agents(), kept) {
            let mut c = sc.clone();
            c.graph = g;
            out.push(c);
        }
    }
    for (i, p) in sc.initial.parts().iter().enumerate() {
        let blocks = p.blocks();
        for a in 0..blocks.len() {
            for b in a + 1..blocks.len() {
                let mut merged: Vec<Vec<usize>> = blocks.clone();
                let moved = merged.remove(b);
                merged[a].extend(moved);
                let Ok(q) = Partition::from_blocks(&merged, sc.num_states()) else { continue };
                let mut parts = sc.initial.parts().to_vec();
                parts[i] = q;
                if let Ok(prof) = Profile::new(parts) {
                    let mut c = sc.clone();
                    c.initial = prof;
                    out.push(c);
                }
            }
        }
    }
    if sc.num_agents() > 2 {
        for drop in 0..sc.num_agents() {
            let keep: Vec<usize> = (0..sc.num_agents()).filter(|&i| i != drop).collect();
            let pos = |i: usize| keep.iter().position(|&k| k == i);
            let edges = sc
                .graph
                .edges()
                .iter()
                .filter_map(|&(i, j)| Some((pos(i)?, pos(j)?)));
            let parts = keep.iter().map(|&i| sc.initial.get(i).clone()).collect();
            let (Ok(g), Ok(prof)) = (CommGraph::new(keep.len(), edges), Profile::new(parts)) else {
                continue;
            };
            let agents = keep.iter().map(|&i| sc.agents[i].clone()).collect();
            if let Ok(c) = Scenario::new(
                agents,
                sc.state_labels.clone(),
                prof,
                sc.message_function.clone(),
                g,
                sc.true_state,
            ) {
                out.push(c);
            }
        }
    }
    out
}

fn fails(check: Check, sc: &Scenario) -> Option<String> {
    match check(sc) {
        Ok(r) => r,
        Err(e) => Some(format!("error: {e}")),
    }
}

/// Greedily applies simplifications that keep the case failing.
pub fn minimize(check: Check, sc: &Scenario) -> (Scenario, String) {
    let mut current = sc.clone();
    let mut why = fails(check, &current).unwrap_or_default();
    'outer: loop {
        for cand in shrink_candidates(&current) {
            if let Some(w) = fails(check, &cand) {
                current = cand;
                why = w;
                continue 'outer;
            }
        }
        return (current, why);
    }
}

fn finite_suite(
    name: &str,
    opts: &SuiteOptions,
    families: &[&str],
    mode: Option<GraphMode>,
    check: Check,
) -> Result<PropertyReport> {
    let outcomes: Vec<Result<Option<Failure>>> = (0..opts.cases)
        .into_par_iter()
        .map(|case| {
            let mut rng = case_rng(opts.seed, case);
            let sc = gen_scenario(opts, &mut rng, families, mode)?;
            Ok(fails(check, &sc).map(|_| {
                let (small, detail) = minimize(check, &sc);
                Failure {
                    case,
                    detail,
                    scenario: Some(scenario_to_json(&LoadedScenario::Finite(small))),
                }
            }))
        })
        .collect();
    let mut failures = Vec::new();
    for o in outcomes {
        failures.extend(o?);
    }
    let expected_failure = match &opts.injected {
        Some(mf) => match injected_states(mf) {
            Some(n) => !check_union_consistency(mf, n)?.holds(),
            None => false,
        },
        None => false,
    };
    Ok(PropertyReport { suite: name.into(), cases: opts.cases, failures, expected_failure })
}

fn non_monotone_witness() -> Result<PropertyReport> {
    let f = fixtures::nonmonotone_message_function();
    let g = CommGraph::complete(2);
    let coarse = Partition::from_blocks(&[vec![0, 1], vec![2, 3]], 4)?;
    let p = Profile::new(vec![Partition::trivial(4), coarse])?;
    let pp = Profile::new(vec![Partition::trivial(4), Partition::singletons(4)])?;
    let mut failures = Vec::new();
    let (gp, gpp) = (apply_g(&p, &g, &f)?, apply_g(&pp, &g, &f)?);
    if !p.is_coarser(&pp)? || gp.is_coarser(&gpp)? {
        failures.push(Failure {
            case: 0,
            detail: format!("expected P <= P' and g(P) not <= g(P'), got g(P)={gp:?}, g(P')={gpp:?}"),
            scenario: None,
        });
    }
    Ok(PropertyReport { suite: "non_monotone_witness".into(), cases: 1, failures, expected_failure: false })
}

/// A random eventually periodic partition with modulus at most 4.
pub fn gen_periodic_partition(rng: &mut impl Rng) -> Result<PeriodicPartition> {
    let m: u64 = rng.gen_range(1..=4);
    let h: u64 = rng.gen_range(0..=6);
    let mut exceptional: Vec<Vec<u64>> = vec![Vec::new(); h as usize];
    for x in 1..=h {
        exceptional[rng.gen_range(0..h as usize)].push(x);
    }
    exceptional.retain(|b| !b.is_empty());
    let mut classes: Vec<Vec<u64>> = vec![Vec::new(); m as usize];
    for x in h + 1..=h + m {
        classes[rng.gen_range(0..m as usize)].push(x);
    }
    let mut templates = Vec::new();
    let mut infinite = Vec::new();
    for class in classes.into_iter().filter(|c| !c.is_empty()) {
        if rng.gen_bool(0.5) {
            templates.push(class);
        } else {
            let finite = if !exceptional.is_empty() && rng.gen_bool(0.3) {
                let k = rng.gen_range(0..exceptional.len());
                exceptional.remove(k)
            } else {
                Vec::new()
            };
            infinite.push(InfiniteBlock { finite, starts: class });
        }
    }
    PeriodicPartition::new(m, exceptional, templates, infinite)
}

fn symbolic_case(opts: &SuiteOptions, case: usize) -> Result<Option<Failure>> {
    let mut rng = case_rng(opts.seed, case);
    let n = rng.gen_range(2..=3);
    let parts = (0..n).map(|_| gen_periodic_partition(&mut rng)).collect::<Result<Vec<_>>>()?;
    let graph = gen_graph(n, &mut rng, GraphMode::Reciprocal)?;
    let window = 24;
    let failure = |detail: String| Some(Failure { case, detail, scenario: None });
    let (a, b) = (&parts[0], &parts[1]);
    let reach = a.largest_constant().max(b.largest_constant()) + 2 * a.modulus() * b.modulus() + window;
    let joined = match a.join(b) {
        Ok(j) => j,
        Err(e) => return Ok(failure(format!("join of {a} and {b}: {e}"))),
    };
    if joined.restrict(reach) != a.restrict(reach).join(&b.restrict(reach))? {
        return Ok(failure(format!("join of {a} and {b} disagrees with the truncated join")));
    }
    let agents = (0..n).map(|i| format!("agent{i}")).collect();
    let sc = SymbolicScenario::new(agents, graph, SymbolicProfile::new(parts)?, None)?;
    Ok(match truncation_oracle(&sc, window, 6, None) {
        Ok(_) => None,
        Err(e) => failure(format!("{e}; initial profile {:?}", sc.initial.parts())),
    })
}

fn symbolic_suite(opts: &SuiteOptions) -> Result<PropertyReport> {
    let outcomes: Vec<Result<Option<Failure>>> =
        (0..opts.cases).into_par_iter().map(|case| symbolic_case(opts, case)).collect();
    let mut failures = Vec::new();
    for o in outcomes {
        failures.extend(o?);
    }
    Ok(PropertyReport { suite: "symbolic_oracle".into(), cases: opts.cases, failures, expected_failure: false })
}

pub fn run_property_suite(name: &str, opts: &SuiteOptions) -> Result<PropertyReport> {
    let stp = &STP_FAMILIES[..];
    match name {
        "inflationary" => finite_suite(name, opts, stp, None, check_inflationary),
        "non_monotone_witness" => non_monotone_witness(),
        "consensus_characterization" => finite_suite(name, opts, stp, None, check_characterization),
        "consensus_is_fixed" => finite_suite(name, opts, stp, None, check_consensus_is_fixed),
        "fixed_is_consensus" => {
            finite_suite(name, opts, stp, Some(GraphMode::Reciprocal), check_fixed_is_consensus)
        }
        "pairwise_learning" => finite_suite(name, opts, stp, None, check_pairwise),
        "step_bound" => finite_suite(name, opts, stp, None, check_step_bound),
        "injective_sharing" => finite_suite(name, opts, &["injective"], None, check_injective),
        "symbolic_oracle" => symbolic_suite(opts),
        other => Err(Error::UnknownSuite(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(cases: usize) -> SuiteOptions {
        SuiteOptions { cases, ..SuiteOptions::default() }
    }

    #[test]
    fn generators_are_deterministic() {
        let a = gen_partition(4, &mut case_rng(1, 0));
        assert_eq!(a, gen_partition(4, &mut case_rng(1, 0)));
        assert_eq!(gen_partition(1, &mut case_rng(9, 3)), Partition::trivial(1));
        let p = gen_profile(3, 5, &mut case_rng(2, 0)).unwrap();
        assert_eq!((p.num_agents(), p.num_states()), (3, 5));
    }

    #[test]
    fn generated_families_are_union_consistent() {
        let mut rng = case_rng(5, 0);
        for _ in 0..20 {
            for fam in STP_FAMILIES {
                let mf = gen_message_function(fam, 4, &mut rng).unwrap();
                assert!(check_union_consistency(&mf, 4).unwrap().holds(), "{fam}");
            }
        }
        assert!(matches!(gen_message_function("maximin", 3, &mut rng), Err(Error::UnknownFamily(_))));
    }

    #[test]
    fn graph_modes() {
        for case in 0..50 {
            let mut rng = case_rng(7, case);
            let n = 2 + case % 4;
            assert!(gen_graph(n, &mut rng, GraphMode::Reciprocal).unwrap().satisfies_reciprocity().holds());
            assert!(!gen_graph(n, &mut rng, GraphMode::NonReciprocal).unwrap().satisfies_reciprocity().holds());
        }
        let g = gen_graph(2, &mut case_rng(0, 0), GraphMode::Reciprocal).unwrap();
        assert!(g.has_edge(0, 1) && g.has_edge(1, 0));
    }

    #[test]
    fn periodic_generator_is_valid() {
        for case in 0..200 {
            let pp = gen_periodic_partition(&mut case_rng(11, case)).unwrap();
            assert!(pp.validate().is_ok());
        }
    }

    #[test]
    fn suites_pass_and_reports_are_reproducible() {
        for name in SUITES {
            let r = run_property_suite(name, &small(40)).unwrap();
            assert!(r.passed(), "{name}: {:?}", r.failures.first());
            assert_eq!(r.to_lines(), run_property_suite(name, &small(40)).unwrap().to_lines());
        }
        assert!(matches!(run_property_suite("nope", &small(1)), Err(Error::UnknownSuite(_))));
    }

    #[test]
    fn injected_counterexample_breaks_the_characterization() {
        let (_, f) = fixtures::stp_counterexample_first();
        let opts = SuiteOptions { injected: Some(f), ..small(200) };
        let r = run_property_suite("consensus_characterization", &opts).unwrap();
        assert!(r.expected_failure);
        assert!(!r.passed());
        let first = &r.failures[0];
        let doc = first.scenario.as_ref().unwrap();
        let LoadedScenario::Finite(small) = crate::scenario::parse_scenario(doc).unwrap() else {
            panic!("finite scenario expected");
        };
        assert!(check_characterization(&small).unwrap().is_some());
        assert_eq!(small.num_agents(), 2);
    }
}
