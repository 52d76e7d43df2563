use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::guidance::Coords;
use crate::pddl::{FactSymbol, GoalLiteral, ProblemModel, TypedName};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlocksSpec {
    /// Blocks that may interact with the goal; `n_goal_blocks` of them appear in it.
    pub n_blocks: usize,
    pub n_goal_blocks: usize,
    /// Extra blocks in towers of their own, never mentioned by the goal.
    pub n_distractors: usize,
    pub seed: u64,
    pub coords: bool,
    /// Tallest goal tower.
    pub max_goal_height: usize,
}

pub const DEFAULT_MAX_GOAL_HEIGHT: usize = 3;

impl BlocksSpec {
    pub fn new(n_blocks: usize, n_goal_blocks: usize, n_distractors: usize, seed: u64) -> BlocksSpec {
        BlocksSpec { n_blocks, n_goal_blocks, n_distractors, seed, coords: true, max_goal_height: DEFAULT_MAX_GOAL_HEIGHT }
    }

    pub fn total(&self) -> usize {
        self.n_blocks + self.n_distractors
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedProblem {
    pub problem: ProblemModel,
    pub coords: Option<Coords>,
}

/// Random partition into towers of `min_height..=max_height` blocks (the
/// last tower may exceed the cap when fewer than `min_height` blocks remain).
fn towers(rng: &mut impl Rng, mut blocks: Vec<String>, min_height: usize, max_height: usize) -> Vec<Vec<String>> {
    blocks.shuffle(rng);
    let mut out: Vec<Vec<String>> = Vec::new();
    let mut cur = Vec::new();
    let n = blocks.len();
    for (i, b) in blocks.into_iter().enumerate() {
        cur.push(b);
        let left = n - i - 1;
        if cur.len() >= min_height && left >= min_height && (cur.len() >= max_height || rng.gen_bool(0.5)) {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn fact(p: &str, args: &[&str]) -> FactSymbol {
    FactSymbol { predicate: p.to_string(), args: args.iter().map(|s| s.to_string()).collect() }
}

/// Seeded Blocks instance. Towers are listed bottom to top; coordinates are
/// (tower index, height).
pub fn gen_blocks(spec: &BlocksSpec) -> GeneratedProblem {
    assert!(spec.n_goal_blocks <= spec.n_blocks, "goal blocks exceed blocks");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let total = spec.total();
    let mut names: Vec<String> = (1..=total).map(|i| format!("b{i}")).collect();
    names.shuffle(&mut rng);
    let (core, distractors) = names.split_at(spec.n_blocks);
    loop {
        let mut core_v = core.to_vec();
        core_v.shuffle(&mut rng);
        let goal_blocks = core_v[..spec.n_goal_blocks].to_vec();
        let mut goal = Vec::new();
        if goal_blocks.len() == 1 {
            goal.push(fact("holding", &[&goal_blocks[0]]));
        } else {
            for t in towers(&mut rng, goal_blocks, 2, spec.max_goal_height) {
                for w in t.windows(2) {
                    goal.push(fact("on", &[&w[1], &w[0]]));
                }
            }
        }
        let mut init_towers = towers(&mut rng, core.to_vec(), 1, usize::MAX);
        init_towers.extend(towers(&mut rng, distractors.to_vec(), 1, usize::MAX));
        let mut init = vec![fact("arm-empty", &[])];
        let mut coords = Coords::new();
        for (ti, t) in init_towers.iter().enumerate() {
            init.push(fact("on-table", &[&t[0]]));
            for w in t.windows(2) {
                init.push(fact("on", &[&w[1], &w[0]]));
            }
            init.push(fact("clear", &[&t[t.len() - 1]]));
            for (h, b) in t.iter().enumerate() {
                coords.insert(b.clone(), (ti as i64, h as i64));
            }
        }
        if !goal.is_empty() && goal.iter().all(|g| init.contains(g)) {
            continue;
        }
        let mut objects: Vec<String> = names.clone();
        objects.sort_by_key(|n| n[1..].parse::<usize>().unwrap_or(0));
        let problem = ProblemModel {
            name: format!("blocks-{}-{}-{}-s{}", spec.n_blocks, spec.n_goal_blocks, spec.n_distractors, spec.seed),
            domain_name: "blocks".into(),
            objects: objects.iter().map(|n| TypedName::new(n.clone(), "block")).collect(),
            init,
            goal: goal.into_iter().map(|atom| GoalLiteral { positive: true, atom }).collect(),
        };
        return GeneratedProblem { problem, coords: spec.coords.then_some(coords) };
    }
}
