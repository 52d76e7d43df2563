//! GBFS, enforced hill-climbing, A* and uniform-cost search.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::hash::{Hash, Hasher};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::{FxHashMap, FxHasher};

use super::relaxed::Evaluator;
use super::{applicable, apply_in_place, Heuristic, Outcome, Plan, SearchConfig, SearchResult, SearchStats, State, Strategy};
use crate::pddl::GroundTask;

const NONE: u32 = u32::MAX;

/// Hash-consed store of visited states, kept as sorted atom lists.
struct Registry {
    states: Vec<Box<[u32]>>,
    parent: Vec<u32>,
    action: Vec<u32>,
    g: Vec<u32>,
    heads: FxHashMap<u64, u32>,
    chain: Vec<u32>,
}

impl Registry {
    fn new() -> Self {
        Registry { states: Vec::new(), parent: Vec::new(), action: Vec::new(), g: Vec::new(), heads: FxHashMap::default(), chain: Vec::new() }
    }

    fn key(state: &State) -> Box<[u32]> {
        state.atoms().map(|a| a as u32).collect()
    }

    fn hash(atoms: &[u32]) -> u64 {
        let mut h = FxHasher::default();
        atoms.hash(&mut h);
        h.finish()
    }

    fn find(&self, atoms: &[u32], hash: u64) -> Option<u32> {
        let mut cur = *self.heads.get(&hash)?;
        while cur != NONE {
            if &*self.states[cur as usize] == atoms {
                return Some(cur);
            }
            cur = self.chain[cur as usize];
        }
        None
    }

    /// Returns the id and whether the state was new.
    fn insert(&mut self, state: &State, parent: u32, action: u32, g: u32) -> (u32, bool) {
        let atoms = Self::key(state);
        let hash = Self::hash(&atoms);
        if let Some(id) = self.find(&atoms, hash) {
            return (id, false);
        }
        let id = self.states.len() as u32;
        let next = self.heads.insert(hash, id).unwrap_or(NONE);
        self.chain.push(next);
        self.states.push(atoms);
        self.parent.push(parent);
        self.action.push(action);
        self.g.push(g);
        (id, true)
    }

    fn state(&self, id: u32, n_atoms: usize) -> State {
        State::from_atoms(n_atoms, self.states[id as usize].iter().map(|&a| a as usize))
    }

    fn plan_to(&self, mut id: u32) -> Vec<usize> {
        let mut steps = Vec::new();
        while self.parent[id as usize] != NONE {
            steps.push(self.action[id as usize] as usize);
            id = self.parent[id as usize];
        }
        steps.reverse();
        steps
    }
}

/// Successor generator indexed by each action's first positive precondition.
struct Successors {
    by_first: Vec<Vec<u32>>,
    unconditional: Vec<u32>,
}

impl Successors {
    fn new(task: &GroundTask) -> Self {
        let mut by_first = vec![Vec::new(); task.num_atoms()];
        let mut unconditional = Vec::new();
        for (i, a) in task.actions.iter().enumerate() {
            match a.pre_pos.first() {
                Some(&p) => by_first[p].push(i as u32),
                None => unconditional.push(i as u32),
            }
        }
        Successors { by_first, unconditional }
    }

    /// Applicable actions in ascending index order.
    fn applicable(&self, task: &GroundTask, state: &State, out: &mut Vec<usize>) {
        out.clear();
        for p in state.atoms() {
            for &a in &self.by_first[p] {
                if applicable(state, &task.actions[a as usize]) {
                    out.push(a as usize);
                }
            }
        }
        for &a in &self.unconditional {
            if applicable(state, &task.actions[a as usize]) {
                out.push(a as usize);
            }
        }
        out.sort_unstable();
    }
}

struct Ctx<'a> {
    task: &'a GroundTask,
    config: SearchConfig,
    deadline: Instant,
    eval: Evaluator<'a>,
    succ: Successors,
    stats: SearchStats,
}

enum Stop {
    Unsolvable,
    Timeout,
}

impl<'a> Ctx<'a> {
    fn out_of_time(&self) -> bool {
        if let Some(max) = self.config.max_expansions {
            if self.stats.expanded >= max {
                return true;
            }
        }
        Instant::now() >= self.deadline
    }

    fn h(&mut self, state: &State) -> f64 {
        self.eval.evaluate(self.config.heuristic, state)
    }
}

fn hkey(h: f64) -> u64 {
    h.to_bits()
}

pub fn search(task: &GroundTask, config: &SearchConfig) -> SearchResult {
    let deadline = Instant::now() + std::time::Duration::from_secs_f64(config.timeout.max(0.0));
    search_until(task, config, deadline)
}

/// Like [`search`] but bounded by an absolute deadline instead of
/// `config.timeout`.
pub fn search_until(task: &GroundTask, config: &SearchConfig, deadline: Instant) -> SearchResult {
    let start = Instant::now();
    let mut config = *config;
    if config.strategy == Strategy::UniformCost {
        config.heuristic = Heuristic::Blind;
    }
    let mut ctx = Ctx { task, config, deadline, eval: Evaluator::new(task), succ: Successors::new(task), stats: SearchStats::default() };
    let init = State::initial(task);
    let result = match config.strategy {
        Strategy::Gbfs if config.lazy => gbfs_lazy(&mut ctx, &init),
        Strategy::Gbfs => gbfs(&mut ctx, &init),
        Strategy::Ehc => ehc(&mut ctx, &init),
        Strategy::AStar | Strategy::UniformCost => astar(&mut ctx, &init),
    };
    let mut stats = ctx.stats;
    stats.evaluations = ctx.eval.evaluations;
    stats.wall_seconds = start.elapsed().as_secs_f64();
    let outcome = match result {
        Ok(steps) => Outcome::Solved(Plan { steps }),
        Err(Stop::Unsolvable) => Outcome::Unsolvable,
        Err(Stop::Timeout) => Outcome::Timeout,
    };
    SearchResult { outcome, stats }
}

/// Open list of the type-based exploration of Xie et al.: nodes bucketed by
/// (g, h), popped from a uniformly random bucket.
struct TypeBuckets {
    index: FxHashMap<(u32, u64), usize>,
    buckets: Vec<((u32, u64), Vec<u32>)>,
    rng: ChaCha8Rng,
}

impl TypeBuckets {
    fn new() -> Self {
        TypeBuckets { index: FxHashMap::default(), buckets: Vec::new(), rng: ChaCha8Rng::seed_from_u64(0) }
    }

    fn push(&mut self, key: (u32, u64), id: u32) {
        let i = *self.index.entry(key).or_insert_with(|| {
            self.buckets.push((key, Vec::new()));
            self.buckets.len() - 1
        });
        self.buckets[i].1.push(id);
    }

    fn pop(&mut self) -> Option<u32> {
        if self.buckets.is_empty() {
            return None;
        }
        let b = self.rng.gen_range(0..self.buckets.len());
        let nodes = &mut self.buckets[b].1;
        let id = nodes.swap_remove(self.rng.gen_range(0..nodes.len()));
        if nodes.is_empty() {
            let (key, _) = self.buckets.swap_remove(b);
            self.index.remove(&key);
            if b < self.buckets.len() {
                self.index.insert(self.buckets[b].0, b);
            }
        }
        Some(id)
    }

    fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }
}

const BOOST: i64 = 1000;

enum Open {
    Heap(BinaryHeap<Reverse<(u64, u64, u32)>>),
    Typed(TypeBuckets),
}

impl Open {
    fn pop(&mut self) -> Option<u32> {
        match self {
            Open::Heap(h) => h.pop().map(|Reverse((_, _, id))| id),
            Open::Typed(t) => t.pop(),
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            Open::Heap(h) => h.is_empty(),
            Open::Typed(t) => t.is_empty(),
        }
    }
}

/// Eager GBFS. The first open list orders every node by h (FIFO among
/// ties). With `helpful_actions` under h_FF a second list holds only nodes
/// reached by a helpful action of their parent and gains `BOOST` priority
/// whenever the best h improves. With `exploration` a type-based list is
/// added. Lists are served by highest priority, each pop costing one.
fn gbfs(ctx: &mut Ctx, start: &State) -> Result<Vec<usize>, Stop> {
    let n = ctx.task.num_atoms();
    if start.satisfies_goal(ctx.task) {
        return Ok(Vec::new());
    }
    let h0 = ctx.h(start);
    if h0.is_infinite() {
        return Err(Stop::Unsolvable);
    }
    let preferred = ctx.config.helpful_actions && ctx.config.heuristic == Heuristic::HFF;
    let mut reg = Registry::new();
    let (root, _) = reg.insert(start, NONE, NONE, 0);
    let mut lists = vec![Open::Heap(BinaryHeap::new())];
    let pref_list = preferred.then(|| {
        lists.push(Open::Heap(BinaryHeap::new()));
        lists.len() - 1
    });
    if ctx.config.exploration {
        lists.push(Open::Typed(TypeBuckets::new()));
    }
    let mut priority = vec![0i64; lists.len()];
    let mut counter = 0u64;
    let mut best = h0;
    let push = |list: &mut Open, h: f64, g: u32, counter: u64, id: u32| match list {
        Open::Heap(heap) => heap.push(Reverse((hkey(h), counter, id))),
        Open::Typed(t) => t.push((g, hkey(h)), id),
    };
    for l in &mut lists {
        push(l, h0, 0, 0, root);
    }
    let mut closed = vec![false];
    let mut apps = Vec::new();
    let mut helpful = Vec::new();
    loop {
        let Some(which) = (0..lists.len()).filter(|&i| !lists[i].is_empty()).max_by_key(|&i| (priority[i], Reverse(i))) else {
            return Err(Stop::Unsolvable);
        };
        let id = lists[which].pop().expect("nonempty list");
        priority[which] -= 1;
        if closed[id as usize] {
            continue;
        }
        closed[id as usize] = true;
        if ctx.out_of_time() {
            return Err(Stop::Timeout);
        }
        ctx.stats.expanded += 1;
        let state = reg.state(id, n);
        if preferred {
            ctx.h(&state);
            helpful.clear();
            helpful.extend_from_slice(ctx.eval.helpful());
        }
        let g = reg.g[id as usize] + 1;
        ctx.succ.applicable(ctx.task, &state, &mut apps);
        for &a in &apps {
            let mut next = state.clone();
            apply_in_place(&mut next, &ctx.task.actions[a]);
            let (cid, fresh) = reg.insert(&next, id, a as u32, g);
            if !fresh {
                continue;
            }
            closed.push(false);
            ctx.stats.generated += 1;
            if next.satisfies_goal(ctx.task) {
                return Ok(reg.plan_to(cid));
            }
            let h = ctx.h(&next);
            if h.is_infinite() {
                continue;
            }
            counter += 1;
            if h < best {
                best = h;
                if let Some(p) = pref_list {
                    priority[p] += BOOST;
                }
            }
            for (i, l) in lists.iter_mut().enumerate() {
                if Some(i) != pref_list || helpful.binary_search(&a).is_ok() {
                    push(l, h, g, counter, cid);
                }
            }
        }
    }
}

/// GBFS with deferred evaluation: successors enter the open lists with
/// their parent's h and are generated and evaluated only when popped. Open
/// lists and priorities work as in [`gbfs`].
fn gbfs_lazy(ctx: &mut Ctx, start: &State) -> Result<Vec<usize>, Stop> {
    let n = ctx.task.num_atoms();
    if start.satisfies_goal(ctx.task) {
        return Ok(Vec::new());
    }
    let preferred = ctx.config.helpful_actions && ctx.config.heuristic == Heuristic::HFF;
    let mut reg = Registry::new();
    let mut lists = vec![Open::Heap(BinaryHeap::new())];
    let pref_list = preferred.then(|| {
        lists.push(Open::Heap(BinaryHeap::new()));
        lists.len() - 1
    });
    if ctx.config.exploration {
        lists.push(Open::Typed(TypeBuckets::new()));
    }
    let mut priority = vec![0i64; lists.len()];
    // Pending edges: (parent registry id, action); the root has no parent.
    let mut pending: Vec<(u32, u32)> = vec![(NONE, NONE)];
    for l in &mut lists {
        match l {
            Open::Heap(heap) => heap.push(Reverse((0, 0, 0))),
            Open::Typed(t) => t.push((0, 0), 0),
        }
    }
    let mut best = f64::INFINITY;
    let mut apps = Vec::new();
    loop {
        let Some(which) = (0..lists.len()).filter(|&i| !lists[i].is_empty()).max_by_key(|&i| (priority[i], Reverse(i))) else {
            return Err(Stop::Unsolvable);
        };
        let pid = lists[which].pop().expect("nonempty list");
        priority[which] -= 1;
        let (parent, action) = pending[pid as usize];
        let (state, g) = if parent == NONE {
            (start.clone(), 0)
        } else {
            let mut s = reg.state(parent, n);
            apply_in_place(&mut s, &ctx.task.actions[action as usize]);
            (s, reg.g[parent as usize] + 1)
        };
        let (id, fresh) = reg.insert(&state, parent, action, g);
        if !fresh {
            continue;
        }
        if ctx.out_of_time() {
            return Err(Stop::Timeout);
        }
        if parent != NONE {
            ctx.stats.generated += 1;
        }
        if state.satisfies_goal(ctx.task) {
            return Ok(reg.plan_to(id));
        }
        let h = ctx.h(&state);
        if h.is_infinite() {
            continue;
        }
        ctx.stats.expanded += 1;
        if h < best {
            best = h;
            if let Some(p) = pref_list {
                priority[p] += BOOST;
            }
        }
        ctx.succ.applicable(ctx.task, &state, &mut apps);
        for &a in &apps {
            let c = pending.len() as u64;
            pending.push((id, a as u32));
            let helpful = preferred && ctx.eval.helpful().binary_search(&a).is_ok();
            for (i, l) in lists.iter_mut().enumerate() {
                if Some(i) == pref_list && !helpful {
                    continue;
                }
                match l {
                    Open::Heap(heap) => heap.push(Reverse((hkey(h), c, c as u32))),
                    Open::Typed(t) => t.push((g + 1, hkey(h)), c as u32),
                }
            }
        }
    }
}

fn astar(ctx: &mut Ctx, start: &State) -> Result<Vec<usize>, Stop> {
    let n = ctx.task.num_atoms();
    let h0 = ctx.h(start);
    if h0.is_infinite() {
        return Err(Stop::Unsolvable);
    }
    let mut reg = Registry::new();
    let (root, _) = reg.insert(start, NONE, NONE, 0);
    let mut hval: Vec<f64> = vec![h0];
    let mut closed: Vec<bool> = vec![false];
    let mut open = BinaryHeap::new();
    let mut counter = 0u64;
    open.push(Reverse((hkey(h0), hkey(h0), counter, root, 0u32)));
    let mut apps = Vec::new();
    while let Some(Reverse((_, _, _, id, g))) = open.pop() {
        if g > reg.g[id as usize] || closed[id as usize] {
            continue;
        }
        if ctx.out_of_time() {
            return Err(Stop::Timeout);
        }
        let state = reg.state(id, n);
        if state.satisfies_goal(ctx.task) {
            return Ok(reg.plan_to(id));
        }
        closed[id as usize] = true;
        ctx.stats.expanded += 1;
        ctx.succ.applicable(ctx.task, &state, &mut apps);
        for &a in &apps {
            let mut next = state.clone();
            apply_in_place(&mut next, &ctx.task.actions[a]);
            let ng = g + 1;
            let (cid, fresh) = reg.insert(&next, id, a as u32, ng);
            let c = cid as usize;
            if fresh {
                ctx.stats.generated += 1;
                let h = ctx.h(&next);
                hval.push(h);
                closed.push(false);
                if h.is_infinite() {
                    continue;
                }
            } else if ng < reg.g[c] {
                reg.g[c] = ng;
                reg.parent[c] = id;
                reg.action[c] = a as u32;
                closed[c] = false;
            } else {
                continue;
            }
            let h = hval[c];
            if h.is_infinite() {
                continue;
            }
            counter += 1;
            open.push(Reverse((hkey(ng as f64 + h), hkey(h), counter, cid, ng)));
        }
    }
    Err(Stop::Unsolvable)
}

/// Breadth-first escape from `start` to the first state with h strictly below
/// `h_start` (or a goal state). Returns the path and the new state with its h.
fn improve(ctx: &mut Ctx, start: &State, h_start: f64, helpful_only: bool) -> Result<Option<(Vec<usize>, State, f64)>, Stop> {
    let n = ctx.task.num_atoms();
    let mut reg = Registry::new();
    let (root, _) = reg.insert(start, NONE, NONE, 0);
    let mut queue = VecDeque::new();
    ctx.h(start);
    let root_helpful = ctx.eval.helpful().to_vec();
    queue.push_back((root, root_helpful));
    let mut apps = Vec::new();
    while let Some((id, helpful)) = queue.pop_front() {
        if ctx.out_of_time() {
            return Err(Stop::Timeout);
        }
        ctx.stats.expanded += 1;
        let state = reg.state(id, n);
        ctx.succ.applicable(ctx.task, &state, &mut apps);
        if helpful_only {
            apps.retain(|a| helpful.binary_search(a).is_ok());
        }
        for &a in &apps {
            let mut next = state.clone();
            apply_in_place(&mut next, &ctx.task.actions[a]);
            let (cid, fresh) = reg.insert(&next, id, a as u32, 0);
            if !fresh {
                continue;
            }
            ctx.stats.generated += 1;
            if next.satisfies_goal(ctx.task) {
                return Ok(Some((reg.plan_to(cid), next, 0.0)));
            }
            let h = ctx.h(&next);
            if h.is_infinite() {
                continue;
            }
            if h < h_start {
                return Ok(Some((reg.plan_to(cid), next, h)));
            }
            queue.push_back((cid, ctx.eval.helpful().to_vec()));
        }
    }
    Ok(None)
}

fn ehc(ctx: &mut Ctx, init: &State) -> Result<Vec<usize>, Stop> {
    let mut cur = init.clone();
    let mut h = ctx.h(&cur);
    if h.is_infinite() {
        return Err(Stop::Unsolvable);
    }
    let mut plan = Vec::new();
    while !cur.satisfies_goal(ctx.task) {
        let mut step = improve(ctx, &cur, h, ctx.config.helpful_actions)?;
        if step.is_none() && ctx.config.helpful_actions {
            step = improve(ctx, &cur, h, false)?;
        }
        match step {
            Some((path, next, nh)) => {
                plan.extend(path);
                cur = next;
                h = nh;
            }
            None => {
                return match gbfs(ctx, &cur) {
                    Ok(rest) => {
                        plan.extend(rest);
                        Ok(plan)
                    }
                    Err(Stop::Unsolvable) => gbfs(ctx, init),
                    Err(e) => Err(e),
                };
            }
        }
    }
    Ok(plan)
}
