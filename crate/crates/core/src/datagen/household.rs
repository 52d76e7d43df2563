use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DatagenError, GeneratedProblem};
use crate::guidance::Coords;
use crate::pddl::{FactSymbol, GoalLiteral, ProblemModel, TypedName};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    /// Look at an object in light: hold it with a lamp switched on.
    LoiL,
    /// Pick and place.
    PaP,
    /// Stack and place: an object inside a container, the container placed.
    SaP,
    /// Pick two objects and place them.
    P2P,
    /// Pick, cool and place.
    PCoP,
    /// Pick, heat and place.
    PHeP,
    /// Pick, clean and place.
    PClP,
}

pub const CATEGORIES: [Category; 7] = [Category::LoiL, Category::PaP, Category::SaP, Category::P2P, Category::PCoP, Category::PHeP, Category::PClP];

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::str::FromStr for Category {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        CATEGORIES.iter().copied().find(|c| c.to_string().eq_ignore_ascii_case(s)).ok_or_else(|| format!("unknown category '{s}'"))
    }
}

impl Category {
    /// Receptacle type constant the category cannot do without.
    pub fn appliance(self) -> Option<&'static str> {
        match self {
            Category::PCoP => Some("fridgetype"),
            Category::PHeP => Some("microwavetype"),
            Category::PClP => Some("sinkbasintype"),
            _ => None,
        }
    }

    fn min_objects(self) -> usize {
        match self {
            Category::LoiL | Category::SaP | Category::P2P => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HouseholdSpec {
    pub category: Category,
    /// One location per receptacle; at least 3.
    pub n_receptacles: usize,
    pub n_objects: usize,
    pub seed: u64,
    /// Receptacle type constants that must not appear in the scene.
    pub excluded: Vec<String>,
}

impl HouseholdSpec {
    pub fn new(category: Category, n_receptacles: usize, n_objects: usize, seed: u64) -> HouseholdSpec {
        HouseholdSpec { category, n_receptacles, n_objects, seed, excluded: Vec::new() }
    }
}

const APPLIANCES: [(&str, &str, bool); 3] = [("fridge", "fridgetype", true), ("microwave", "microwavetype", true), ("sinkbasin", "sinkbasintype", false)];
const FURNITURE: [(&str, bool); 6] = [("cabinet", true), ("drawer", true), ("countertop", false), ("shelf", false), ("desk", false), ("sidetable", false)];
const ITEMS: [&str; 8] = ["apple", "mug", "plate", "tomato", "cup", "bowl", "potato", "egg"];

struct Receptacle {
    name: String,
    rtype: String,
    openable: bool,
}

fn fact(p: &str, args: &[&str]) -> FactSymbol {
    FactSymbol { predicate: p.to_string(), args: args.iter().map(|s| s.to_string()).collect() }
}

/// Seeded household scene: receptacles each at their own location, items
/// placed in receptacles, the agent at a `start` location with no
/// receptacle, and a goal from the category template.
pub fn gen_household(spec: &HouseholdSpec) -> Result<GeneratedProblem, DatagenError> {
    let cat = spec.category;
    if let Some(a) = cat.appliance() {
        if spec.excluded.iter().any(|e| e == a) {
            return Err(DatagenError::InfeasibleSpec(format!("{cat} needs a {a} receptacle, which is excluded")));
        }
    }
    if spec.n_receptacles < 3 {
        return Err(DatagenError::InfeasibleSpec(format!("{cat} needs at least 3 receptacles, got {}", spec.n_receptacles)));
    }
    if spec.n_objects < cat.min_objects() {
        return Err(DatagenError::InfeasibleSpec(format!("{cat} needs at least {} objects, got {}", cat.min_objects(), spec.n_objects)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut counters = std::collections::BTreeMap::<&str, usize>::new();
    let mut next_name = |base: &'static str| {
        let c = counters.entry(base).or_insert(0);
        *c += 1;
        format!("{base}{c}")
    };
    let mut receptacles: Vec<Receptacle> = Vec::new();
    let mut pool: Vec<(&'static str, String, bool)> = Vec::new();
    for (base, rt, open) in APPLIANCES {
        if !spec.excluded.iter().any(|e| e == rt) {
            pool.push((base, rt.to_string(), open));
        }
    }
    for (base, open) in FURNITURE {
        pool.push((base, format!("{base}type"), open));
    }
    if let Some(a) = cat.appliance() {
        let (base, rt, open) = pool.iter().find(|p| p.1 == a).cloned().expect("appliance available");
        receptacles.push(Receptacle { name: next_name(base), rtype: rt, openable: open });
    }
    let furniture_start = pool.len() - FURNITURE.len();
    while receptacles.len() < spec.n_receptacles {
        let pick = if receptacles.len() < 2 + usize::from(cat.appliance().is_some()) {
            rng.gen_range(furniture_start..pool.len())
        } else {
            rng.gen_range(0..pool.len())
        };
        let (base, rt, open) = pool[pick].clone();
        let openable = open && (base != "cabinet" && base != "drawer" || rng.gen_bool(0.5));
        receptacles.push(Receptacle { name: next_name(base), rtype: rt, openable });
    }
    let appliance_idx = cat.appliance().map(|_| 0usize);
    let ordinary: Vec<usize> = (0..receptacles.len()).filter(|&i| Some(i) != appliance_idx).collect();

    let mut items: Vec<(String, String)> = Vec::new();
    let mut where_: Vec<usize> = Vec::new();
    let special_first = match cat {
        Category::LoiL => Some("desklamp"),
        Category::SaP => Some("box"),
        _ => None,
    };
    if let Some(base) = special_first {
        items.push((next_name(base), format!("{base}type")));
    }
    while items.len() < spec.n_objects {
        let base = ITEMS[rng.gen_range(0..ITEMS.len())];
        items.push((next_name(base), format!("{base}type")));
    }
    for _ in &items {
        where_.push(ordinary[rng.gen_range(0..ordinary.len())]);
    }

    let agent = "agent1";
    let locs: Vec<String> = (1..=receptacles.len()).map(|i| format!("loc{i}")).collect();
    let mut objects = vec![TypedName::new(agent, "agent"), TypedName::new("start", "location")];
    objects.extend(locs.iter().map(|l| TypedName::new(l.clone(), "location")));
    objects.extend(receptacles.iter().map(|r| TypedName::new(r.name.clone(), "receptacle")));
    objects.extend(items.iter().map(|i| TypedName::new(i.0.clone(), "item")));
    let mut rtypes: Vec<String> = receptacles.iter().map(|r| r.rtype.clone()).collect();
    rtypes.sort();
    rtypes.dedup();
    let constants_rt = ["sinkbasintype", "microwavetype", "fridgetype"];
    for rt in &rtypes {
        if !constants_rt.contains(&rt.as_str()) {
            objects.push(TypedName::new(rt.clone(), "rtype"));
        }
    }
    let mut otypes: Vec<String> = items.iter().map(|i| i.1.clone()).collect();
    otypes.sort();
    otypes.dedup();
    for ot in &otypes {
        objects.push(TypedName::new(ot.clone(), "otype"));
    }

    let mut init = vec![fact("atlocation", &[agent, "start"])];
    for (i, r) in receptacles.iter().enumerate() {
        init.push(fact("receptacleatlocation", &[&r.name, &locs[i]]));
        init.push(fact("receptacletype", &[&r.name, &r.rtype]));
        if r.openable {
            init.push(fact("openable", &[&r.name]));
        }
    }
    for rt in &rtypes {
        for ot in &otypes {
            init.push(fact("cancontain", &[rt, ot]));
        }
    }
    let mut coords = Coords::new();
    coords.insert(agent.into(), (-1, 0));
    coords.insert("start".into(), (-1, 0));
    for (i, r) in receptacles.iter().enumerate() {
        coords.insert(r.name.clone(), (i as i64, 0));
        coords.insert(locs[i].clone(), (i as i64, 0));
    }
    for (k, (name, ot)) in items.iter().enumerate() {
        let r = where_[k];
        init.push(fact("inreceptacle", &[name, &receptacles[r].name]));
        init.push(fact("objectatlocation", &[name, &locs[r]]));
        init.push(fact("objecttype", &[name, ot]));
        coords.insert(name.clone(), (r as i64, 1));
        if ot == "desklamptype" {
            init.push(fact("toggleable", &[name]));
            continue;
        }
        init.push(fact("pickupable", &[name]));
        if ot == "boxtype" {
            init.push(fact("iscontainer", &[name]));
            continue;
        }
        for p in ["cleanable", "heatable", "coolable"] {
            if rng.gen_bool(0.5) {
                init.push(fact(p, &[name]));
            }
        }
    }
    for t in rtypes.iter().chain(&otypes).map(String::as_str).chain(constants_rt).chain(["knifetype", "butterknifetype"]) {
        coords.entry(t.to_string()).or_insert((-2, 0));
    }

    let item = |k: usize| items[k].0.clone();
    let other_than = |rng: &mut ChaCha8Rng, avoid: usize| -> usize {
        let c: Vec<usize> = ordinary.iter().copied().filter(|&i| i != avoid).collect();
        *c.choose(rng).expect("at least two ordinary receptacles")
    };
    let mut goal = Vec::new();
    let pos = |atom| GoalLiteral { positive: true, atom };
    match cat {
        Category::LoiL => {
            let o = rng.gen_range(1..items.len());
            promote(&mut init, &item(o), "pickupable");
            goal.push(pos(fact("holds", &[agent, &item(o)])));
            goal.push(pos(fact("ison", &[&item(0)])));
        }
        Category::PaP => {
            let o = rng.gen_range(0..items.len());
            let t = other_than(&mut rng, where_[o]);
            goal.push(pos(fact("inreceptacle", &[&item(o), &receptacles[t].name])));
        }
        Category::SaP => {
            let o = rng.gen_range(1..items.len());
            let t = other_than(&mut rng, where_[0]);
            goal.push(pos(fact("incontainer", &[&item(o), &item(0)])));
            goal.push(pos(fact("inreceptacle", &[&item(0), &receptacles[t].name])));
        }
        Category::P2P => {
            let mut ks: Vec<usize> = (0..items.len()).collect();
            ks.shuffle(&mut rng);
            let (a, b) = (ks[0], ks[1]);
            let t = loop {
                let t = ordinary[rng.gen_range(0..ordinary.len())];
                if t != where_[a] && t != where_[b] || ordinary.len() <= 2 {
                    break t;
                }
            };
            goal.push(pos(fact("inreceptacle", &[&item(a), &receptacles[t].name])));
            goal.push(pos(fact("inreceptacle", &[&item(b), &receptacles[t].name])));
        }
        Category::PCoP | Category::PHeP | Category::PClP => {
            let (prop, state) = match cat {
                Category::PCoP => ("coolable", "iscool"),
                Category::PHeP => ("heatable", "ishot"),
                _ => ("cleanable", "isclean"),
            };
            let o = rng.gen_range(0..items.len());
            promote(&mut init, &item(o), prop);
            let t = other_than(&mut rng, where_[o]);
            goal.push(pos(fact(state, &[&item(o)])));
            goal.push(pos(fact("inreceptacle", &[&item(o), &receptacles[t].name])));
        }
    }
    let problem = ProblemModel {
        name: format!("household-{}-{}-{}-s{}", cat.to_string().to_lowercase(), spec.n_receptacles, spec.n_objects, spec.seed),
        domain_name: "household".into(),
        objects,
        init,
        goal,
    };
    Ok(GeneratedProblem { problem, coords: Some(coords) })
}

fn promote(init: &mut Vec<FactSymbol>, item: &str, prop: &str) {
    let f = fact(prop, &[item]);
    if !init.contains(&f) {
        init.push(f);
    }
}
