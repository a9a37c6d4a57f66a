use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::matcher::{match_candidates, Binding};
use super::template::TemplateSet;
use super::{segment_path, GenError, Instance, Segment, SegmentKind, TaskCategory};
use crate::rng::{derive_seed, seeded};
use crate::worldsim::{
    bfs_distances, path_to_actions, random_world, sample_endpoints, shortest_path, Action, Direction, Node, Pose, WorldConfig,
    WorldMap,
};

/// Knobs of the rejection-sampling generator.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub world: WorldConfig,
    /// Minimum hop distance between sampled endpoints.
    pub min_dist: usize,
    /// Paths tried before giving up on a category.
    pub max_attempts: usize,
    /// Probability of describing two segments instead of one, where the
    /// category allows both.
    pub two_segment_prob: f64,
    /// Paths sampled on one map before a fresh map is drawn.
    pub paths_per_map: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig { world: WorldConfig::default(), min_dist: 4, max_attempts: 1000, two_segment_prob: 0.3, paths_per_map: 8 }
    }
}

/// Category distribution of a dataset.
#[derive(Clone, Debug, PartialEq)]
pub enum Mix {
    /// Categories drawn i.i.d. from normalized weights, indexed by
    /// [`TaskCategory::index`].
    Weighted([f64; 8]),
    /// No category constraint: each path is labeled with a category chosen
    /// uniformly among those it matches.
    Unrestricted,
}

impl Mix {
    /// Category frequencies of the original human corpus.
    pub fn corpus() -> Self {
        Mix::Weighted(TaskCategory::ALL.map(|c| c.corpus_frequency()))
    }

    pub fn uniform() -> Self {
        Mix::Weighted([1.0; 8])
    }

    pub fn single(category: TaskCategory) -> Self {
        let mut w = [0.0; 8];
        w[category.index()] = 1.0;
        Mix::Weighted(w)
    }

    pub fn from_weights(weights: &[(TaskCategory, f64)]) -> Result<Self, GenError> {
        let mut w = [0.0; 8];
        for &(c, x) in weights {
            if !x.is_finite() || x < 0.0 {
                return Err(GenError::InvalidMix(format!("weight of {c} must be finite and nonnegative, got {x}")));
            }
            w[c.index()] += x;
        }
        if w.iter().sum::<f64>() <= 0.0 {
            return Err(GenError::InvalidMix("all weights are zero".into()));
        }
        Ok(Mix::Weighted(w))
    }

    /// Named presets: `sail`/`corpus`, `uniform`, `norestriction`, or a
    /// category name.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "sail" | "corpus" => Some(Self::corpus()),
            "uniform" => Some(Self::uniform()),
            "norestriction" => Some(Mix::Unrestricted),
            other => TaskCategory::parse(other).map(Self::single),
        }
    }

    /// Normalized probability of each category, `None` when unrestricted.
    pub fn probabilities(&self) -> Option<[f64; 8]> {
        match self {
            Mix::Weighted(w) => {
                let total: f64 = w.iter().sum();
                Some(w.map(|x| x / total))
            }
            Mix::Unrestricted => None,
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<TaskCategory> {
        let p = self.probabilities()?;
        let mut u: f64 = rng.random();
        for c in TaskCategory::ALL {
            u -= p[c.index()];
            if u < 0.0 {
                return Some(c);
            }
        }
        TaskCategory::ALL.into_iter().rev().find(|c| p[c.index()] > 0.0)
    }
}

/// A sampled start pose and its gold action sequence to the goal.
struct SampledPath {
    start: Pose,
    goal: Node,
    actions: Vec<Action>,
    segments: Vec<Segment>,
}

/// Draws maps and paths, replacing the map every `paths_per_map` paths.
struct PathSource<'a> {
    config: &'a GeneratorConfig,
    world: Option<WorldMap>,
    used: usize,
}

impl<'a> PathSource<'a> {
    fn new(config: &'a GeneratorConfig) -> Self {
        PathSource { config, world: None, used: 0 }
    }

    fn next<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<SampledPath> {
        if self.world.is_none() || self.used >= self.config.paths_per_map.max(1) {
            self.world = Some(random_world(rng, &self.config.world).ok()?);
            self.used = 0;
        }
        self.used += 1;
        let world = self.world.as_ref()?;
        let Ok((s, g)) = sample_endpoints(world, rng, self.config.min_dist) else {
            self.world = None;
            return None;
        };
        let path = shortest_path(world, s, g).ok()?;
        let dir = Direction::from_index(rng.random_range(0..4));
        let actions = path_to_actions(&path, dir).ok()?;
        let segments = segment_path(&actions);
        Some(SampledPath { start: Pose::at(s, dir), goal: g, actions, segments })
    }
}

/// Number of leading segments a category describes; `None` when the path is
/// too short for it.
fn prefix_len<R: Rng + ?Sized>(category: TaskCategory, path: &SampledPath, two_prob: f64, rng: &mut R) -> Option<usize> {
    let k = match category {
        TaskCategory::Description => 0,
        TaskCategory::TurnAndMoveToX | TaskCategory::AnyCombination => 2,
        TaskCategory::LanguageOnly
            if rng.random::<f64>() < two_prob => {
                2
            }
        _ => 1,
    };
    (k <= path.segments.len()).then_some(k)
}

fn realizable(binding: &Binding, templates: &TemplateSet) -> bool {
    templates.has_pattern(binding.category, binding.pattern) && binding.parts.iter().all(|p| realizable(p, templates))
}

fn candidates(
    category: TaskCategory,
    world: &WorldMap,
    path: &SampledPath,
    k: usize,
    templates: &TemplateSet,
) -> Vec<Binding> {
    // Early-exit on the segment kinds a category needs.
    let first = path.segments.first().map(|s| s.kind);
    let shape_ok = match category {
        TaskCategory::TurnToX | TaskCategory::Orient | TaskCategory::TurnAndMoveToX => first == Some(SegmentKind::Turn),
        TaskCategory::MoveToX | TaskCategory::MoveUntil => first == Some(SegmentKind::Move),
        _ => true,
    };
    if !shape_ok {
        return Vec::new();
    }
    let mut found = match_candidates(category, world, path.start, &path.segments[..k]);
    found.retain(|b| realizable(b, templates));
    found
}

fn build<R: Rng + ?Sized>(
    binding: &Binding,
    world: &WorldMap,
    path: &SampledPath,
    k: usize,
    templates: &TemplateSet,
    rng: &mut R,
) -> Result<Instance, GenError> {
    let instruction = templates.realize(binding, rng)?;
    let mut actions: Vec<Action> = path.segments[..k].iter().flat_map(|s| s.actions.iter().copied()).collect();
    actions.push(Action::Stop);
    debug_assert!(path.actions.starts_with(&actions[..actions.len() - 1]));
    Ok(Instance {
        id: 0,
        seed: 0,
        category: binding.category,
        world: world.clone(),
        start: path.start,
        goal: path.goal,
        instruction,
        actions,
    })
}

/// Generate one instance of `category` by rejection sampling over random
/// maps and paths. `id` and `seed` are left at zero.
pub fn generate_instance<R: Rng + ?Sized>(
    category: TaskCategory,
    config: &GeneratorConfig,
    templates: &TemplateSet,
    rng: &mut R,
) -> Result<Instance, GenError> {
    let mut source = PathSource::new(config);
    for _ in 0..config.max_attempts.max(1) {
        let Some(path) = source.next(rng) else { continue };
        let Some(k) = prefix_len(category, &path, config.two_segment_prob, rng) else { continue };
        let world = source.world.as_ref().expect("path implies a map");
        let found = candidates(category, world, &path, k, templates);
        if found.is_empty() {
            continue;
        }
        let pick = &found[rng.random_range(0..found.len())];
        return build(pick, world, &path, k, templates, rng);
    }
    Err(GenError::Exhausted { category, attempts: config.max_attempts.max(1) })
}

/// Generate one instance whose category is chosen uniformly among the
/// categories the sampled path supports.
pub fn generate_unrestricted<R: Rng + ?Sized>(
    config: &GeneratorConfig,
    templates: &TemplateSet,
    rng: &mut R,
) -> Result<Instance, GenError> {
    let mut source = PathSource::new(config);
    for _ in 0..config.max_attempts.max(1) {
        let Some(path) = source.next(rng) else { continue };
        let world = source.world.as_ref().expect("path implies a map");
        let mut options: Vec<(usize, Vec<Binding>)> = Vec::new();
        for c in TaskCategory::ALL {
            if let Some(k) = prefix_len(c, &path, config.two_segment_prob, rng) {
                let found = candidates(c, world, &path, k, templates);
                if !found.is_empty() {
                    options.push((k, found));
                }
            }
        }
        if options.is_empty() {
            continue;
        }
        let (k, found) = &options[rng.random_range(0..options.len())];
        let pick = &found[rng.random_range(0..found.len())];
        return build(pick, world, &path, *k, templates, rng);
    }
    Err(GenError::Exhausted { category: TaskCategory::LanguageOnly, attempts: config.max_attempts.max(1) })
}

/// The `index`-th instance of the stream rooted at `master`. Each instance
/// depends only on its own derived seed.
pub fn generate_indexed(
    mix: &Mix,
    config: &GeneratorConfig,
    templates: &TemplateSet,
    master: u64,
    index: u64,
) -> Result<Instance, GenError> {
    let seed = derive_seed(master, index);
    let mut rng = seeded(seed);
    let mut inst = match mix.draw(&mut rng) {
        Some(c) => generate_instance(c, config, templates, &mut rng)?,
        None => generate_unrestricted(config, templates, &mut rng)?,
    };
    inst.id = index;
    inst.seed = seed;
    Ok(inst)
}

/// Lazy stream of generated instances.
pub struct DatasetStream<'a> {
    mix: Mix,
    config: &'a GeneratorConfig,
    templates: &'a TemplateSet,
    master: u64,
    next: u64,
    count: u64,
}

impl Iterator for DatasetStream<'_> {
    type Item = Result<Instance, GenError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.count {
            return None;
        }
        let i = self.next;
        self.next += 1;
        Some(generate_indexed(&self.mix, self.config, self.templates, self.master, i))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.count - self.next) as usize;
        (left, Some(left))
    }
}

/// Stream `count` instances; memory use does not grow with `count`.
pub fn generate_dataset<'a>(
    mix: &Mix,
    config: &'a GeneratorConfig,
    templates: &'a TemplateSet,
    count: u64,
    master: u64,
) -> Result<DatasetStream<'a>, GenError> {
    if let Mix::Weighted(w) = mix {
        Mix::from_weights(&TaskCategory::ALL.map(|c| (c, w[c.index()])))?;
    }
    Ok(DatasetStream { mix: mix.clone(), config, templates, master, next: 0, count })
}

/// Why an instance failed [`verify_instance`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("gold actions do not end stopped without a wall hit")]
    GoldFails,
    #[error("endpoints are {dist} hops apart, need {min}")]
    TooClose { dist: usize, min: usize },
    #[error("gold actions are not a prefix of the shortest path")]
    OffPath,
    #[error("gold actions do not match a {0} pattern")]
    CategoryMismatch(TaskCategory),
}

/// Re-check a generated instance: its gold actions run cleanly and follow the
/// shortest path toward a goal at least `min_dist` hops away, and the
/// category's pattern still matches them.
pub fn verify_instance(inst: &Instance, config: &GeneratorConfig) -> Result<(), VerifyError> {
    if !inst.gold_executes() {
        return Err(VerifyError::GoldFails);
    }
    let world = &inst.world;
    let dist = bfs_distances(world, inst.start.node())[world.node_index(inst.goal)];
    if dist < config.min_dist {
        return Err(VerifyError::TooClose { dist, min: config.min_dist });
    }
    let full = shortest_path(world, inst.start.node(), inst.goal)
        .and_then(|p| path_to_actions(&p, inst.start.dir))
        .map_err(|_| VerifyError::OffPath)?;
    if !full.starts_with(&inst.actions[..inst.actions.len() - 1]) {
        return Err(VerifyError::OffPath);
    }
    let segments = segment_path(&inst.actions);
    if match_candidates(inst.category, world, inst.start, &segments).is_empty() {
        return Err(VerifyError::CategoryMismatch(inst.category));
    }
    Ok(())
}
