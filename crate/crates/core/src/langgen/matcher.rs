use alloc::vec;
use alloc::vec::Vec;

use super::template::Slot;
use super::{Segment, SegmentKind, TaskCategory};
use crate::worldsim::{Action, Direction, FloorPattern, Item, Node, Pose, WorldMap};

/// Number words usable in `{count}`; index = value.
pub const COUNT_WORDS: [&str; 21] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve",
    "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen", "twenty",
];

/// Values of `{side}`.
pub const SIDE_WORDS: [&str; 3] = ["left", "right", "around"];

/// A physical pattern that holds for a path prefix, with its slot values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Binding {
    pub category: TaskCategory,
    pub pattern: &'static str,
    pub slots: Vec<(Slot, &'static str)>,
    /// Sub-instructions of a `pair` pattern.
    pub parts: Vec<Binding>,
}

impl Binding {
    pub fn new(category: TaskCategory, pattern: &'static str) -> Self {
        Binding { category, pattern, slots: Vec::new(), parts: Vec::new() }
    }

    pub fn with(mut self, slot: Slot, value: &'static str) -> Self {
        self.slots.push((slot, value));
        self
    }

    pub fn slot(&self, slot: Slot) -> Option<&'static str> {
        self.slots.iter().find(|(s, _)| *s == slot).map(|(_, v)| *v)
    }

    fn pair(category: TaskCategory, first: Binding, second: Binding) -> Self {
        Binding { category, pattern: "pair", slots: Vec::new(), parts: vec![first, second] }
    }

    pub fn is_perceptual(&self) -> bool {
        self.category != TaskCategory::LanguageOnly
    }
}

/// Slots a pattern binds, or `None` for an unknown pattern.
pub fn pattern_slots(category: TaskCategory, pattern: &str) -> Option<&'static [Slot]> {
    use TaskCategory::*;
    Some(match (category, pattern) {
        (LanguageOnly, "turn") => &[Slot::Side],
        (LanguageOnly, "turn_around") | (LanguageOnly, "move_one") => &[],
        (LanguageOnly, "move") => &[Slot::Count],
        (LanguageOnly | AnyCombination, "pair") => &[Slot::First, Slot::Second],
        (TurnToX, "item") | (MoveToX, "item") | (TurnAndMoveToX, "item") | (MoveUntil, "item") => &[Slot::Item],
        (TurnToX, "floor") | (MoveUntil, "floor") => &[Slot::Floor],
        (TurnToX, "wall") => &[Slot::Wall],
        (MoveToX, "end") | (MoveUntil, "end") | (MoveUntil, "intersection") => &[],
        (TurnAndMoveToX, "end") => &[Slot::Side],
        (Orient, "wall_back") => &[],
        (Orient, "item_back") => &[Slot::Item],
        (Orient, "floor_side") => &[Slot::Floor, Slot::Side],
        (Description, "intersection") => &[Slot::Floor, Slot::Floor2],
        (Description, "item") => &[Slot::Item],
        (Description, "dead_end") => &[Slot::Floor],
        _ => return None,
    })
}

/// First binding of [`match_candidates`], if any.
pub fn match_pattern(category: TaskCategory, world: &WorldMap, start: Pose, segments: &[Segment]) -> Option<Binding> {
    match_candidates(category, world, start, segments).into_iter().next()
}

/// Every way `category` can describe exactly `segments` walked from `start`.
///
/// Shapes: Description takes no segment; TurnToX and Orient one turn;
/// MoveToX and MoveUntil one move; TurnAndMoveToX a turn then a move;
/// LanguageOnly one or two segments; AnyCombination two segments with at
/// least one perceptual part.
pub fn match_candidates(category: TaskCategory, world: &WorldMap, start: Pose, segments: &[Segment]) -> Vec<Binding> {
    use SegmentKind::*;
    use TaskCategory::*;
    let kinds: Vec<SegmentKind> = segments.iter().map(|s| s.kind).collect();
    match (category, kinds.as_slice()) {
        (Description, []) => describe(world, start),
        (LanguageOnly, [_]) => language_only(&segments[0]).into_iter().collect(),
        (LanguageOnly, [_, _]) => {
            match (language_only(&segments[0]), language_only(&segments[1])) {
                (Some(a), Some(b)) => vec![Binding::pair(LanguageOnly, a, b)],
                _ => Vec::new(),
            }
        }
        (TurnToX, [Turn]) => turn_to(world, start, &segments[0]),
        (Orient, [Turn]) => orient(world, start, &segments[0]),
        (MoveToX, [Move]) => move_to(world, start, &segments[0]),
        (MoveUntil, [Move]) => move_until(world, start, &segments[0]),
        (TurnAndMoveToX, [Turn, Move]) => turn_and_move(world, start, &segments[0], &segments[1]),
        (AnyCombination, [_, _]) => {
            let firsts = single_segment(world, start, &segments[0]);
            let mid = after(world, start, &segments[0]);
            let seconds = single_segment(world, mid, &segments[1]);
            let mut out = Vec::new();
            for a in &firsts {
                for b in &seconds {
                    if a.is_perceptual() || b.is_perceptual() {
                        out.push(Binding::pair(AnyCombination, a.clone(), b.clone()));
                    }
                }
            }
            out
        }
        _ => Vec::new(),
    }
}

/// Bindings usable as one half of a pair.
fn single_segment(world: &WorldMap, pose: Pose, seg: &Segment) -> Vec<Binding> {
    let mut out: Vec<Binding> = language_only(seg).into_iter().collect();
    match seg.kind {
        SegmentKind::Turn => {
            out.extend(turn_to(world, pose, seg));
            out.extend(orient(world, pose, seg));
        }
        SegmentKind::Move => {
            out.extend(move_to(world, pose, seg));
            out.extend(move_until(world, pose, seg));
        }
    }
    out
}

fn turned(dir: Direction, seg: &Segment) -> Direction {
    seg.actions.iter().fold(dir, |d, a| match a {
        Action::Right => d.right(),
        Action::Left => d.left(),
        _ => d,
    })
}

fn after(world: &WorldMap, pose: Pose, seg: &Segment) -> Pose {
    match seg.kind {
        SegmentKind::Turn => pose.turned(turned(pose.dir, seg)),
        SegmentKind::Move => {
            let end = run(world, pose, seg.actions.len()).and_then(|r| r.last().copied()).unwrap_or(pose.node());
            Pose::at(end, pose.dir)
        }
    }
}

fn side_word(seg: &Segment) -> Option<&'static str> {
    match seg.actions.as_slice() {
        [Action::Left] => Some("left"),
        [Action::Right] => Some("right"),
        [a, b] if a == b && a.is_turn() => Some("around"),
        _ => None,
    }
}

/// Nodes `n_0..=n_k` of a straight walk, `None` if a wall interrupts it.
fn run(world: &WorldMap, pose: Pose, k: usize) -> Option<Vec<Node>> {
    let mut nodes = vec![pose.node()];
    for _ in 0..k {
        nodes.push(world.neighbor(*nodes.last().unwrap(), pose.dir)?);
    }
    Some(nodes)
}

fn language_only(seg: &Segment) -> Option<Binding> {
    let lo = TaskCategory::LanguageOnly;
    match seg.kind {
        SegmentKind::Turn => match side_word(seg)? {
            "around" => Some(Binding::new(lo, "turn_around")),
            side => Some(Binding::new(lo, "turn").with(Slot::Side, side)),
        },
        SegmentKind::Move => match seg.actions.len() {
            1 => Some(Binding::new(lo, "move_one")),
            k if k < COUNT_WORDS.len() => Some(Binding::new(lo, "move").with(Slot::Count, COUNT_WORDS[k])),
            _ => None,
        },
    }
}

/// Open neighbours of `n` as `(direction, neighbour)`.
fn open_neighbors(world: &WorldMap, n: Node) -> impl Iterator<Item = (Direction, Node)> + '_ {
    Direction::ALL.into_iter().filter_map(move |d| world.neighbor(n, d).map(|m| (d, m)))
}

/// Item of the node one hop towards `dir`, if it is the only adjacent node
/// holding that item.
fn unique_adjacent_item(world: &WorldMap, n: Node, dir: Direction) -> Option<Item> {
    let target = world.item(world.neighbor(n, dir)?)?;
    let others = open_neighbors(world, n).filter(|&(d, m)| d != dir && world.item(m) == Some(target)).count();
    (others == 0).then_some(target)
}

fn unique_edge_floor(world: &WorldMap, n: Node, dir: Direction) -> Option<FloorPattern> {
    let (_, attr) = world.edge_toward(n, dir)?;
    let clash = Direction::ALL
        .into_iter()
        .filter(|&d| d != dir)
        .filter_map(|d| world.edge_toward(n, d))
        .any(|(_, a)| a.floor == attr.floor);
    (!clash).then_some(attr.floor)
}

fn turn_to(world: &WorldMap, pose: Pose, seg: &Segment) -> Vec<Binding> {
    let cat = TaskCategory::TurnToX;
    let dir = turned(pose.dir, seg);
    let n = pose.node();
    let mut out = Vec::new();
    let Some((_, attr)) = world.edge_toward(n, dir) else { return out };
    if let Some(it) = unique_adjacent_item(world, n, dir) {
        out.push(Binding::new(cat, "item").with(Slot::Item, it.name()));
    }
    if let Some(f) = unique_edge_floor(world, n, dir) {
        out.push(Binding::new(cat, "floor").with(Slot::Floor, f.name()));
    }
    let wall_clash = Direction::ALL
        .into_iter()
        .filter(|&d| d != dir)
        .filter_map(|d| world.edge_toward(n, d))
        .any(|(_, a)| a.wall == attr.wall);
    if !wall_clash {
        out.push(Binding::new(cat, "wall").with(Slot::Wall, attr.wall.name()));
    }
    out
}

fn orient(world: &WorldMap, pose: Pose, seg: &Segment) -> Vec<Binding> {
    let cat = TaskCategory::Orient;
    let dir = turned(pose.dir, seg);
    let n = pose.node();
    let mut out = Vec::new();
    let closed: Vec<Direction> = Direction::ALL.into_iter().filter(|&d| !world.is_open(n, d)).collect();
    if closed == [dir.opposite()] {
        out.push(Binding::new(cat, "wall_back"));
    }
    if let Some(it) = unique_adjacent_item(world, n, dir.opposite()) {
        out.push(Binding::new(cat, "item_back").with(Slot::Item, it.name()));
    }
    for (side, d) in [("left", dir.left()), ("right", dir.right())] {
        if let Some(f) = unique_edge_floor(world, n, d) {
            out.push(Binding::new(cat, "floor_side").with(Slot::Floor, f.name()).with(Slot::Side, side));
        }
    }
    out
}

/// Item at the walk's end that no earlier node of the walk holds.
fn first_item_at_end(world: &WorldMap, nodes: &[Node]) -> Option<Item> {
    let (&end, before) = nodes.split_last()?;
    let it = world.item(end)?;
    (!before.iter().any(|&m| world.item(m) == Some(it))).then_some(it)
}

fn move_to(world: &WorldMap, pose: Pose, seg: &Segment) -> Vec<Binding> {
    let cat = TaskCategory::MoveToX;
    let Some(nodes) = run(world, pose, seg.actions.len()) else { return Vec::new() };
    let mut out = Vec::new();
    if let Some(it) = first_item_at_end(world, &nodes) {
        out.push(Binding::new(cat, "item").with(Slot::Item, it.name()));
    }
    if !world.is_open(*nodes.last().unwrap(), pose.dir) {
        out.push(Binding::new(cat, "end"));
    }
    out
}

fn move_until(world: &WorldMap, pose: Pose, seg: &Segment) -> Vec<Binding> {
    let cat = TaskCategory::MoveUntil;
    let Some(nodes) = run(world, pose, seg.actions.len()) else { return Vec::new() };
    let end = *nodes.last().unwrap();
    let mut out = Vec::new();

    // Straight runs stay inside one hall, so the walked floor is constant.
    let walked = world.edge_toward(nodes[0], pose.dir).map(|(_, a)| a.floor);
    let floors_at = |m: Node| -> Vec<FloorPattern> {
        Direction::ALL
            .into_iter()
            .filter_map(|d| world.edge_toward(m, d))
            .map(|(_, a)| a.floor)
            .filter(|f| Some(*f) != walked)
            .collect()
    };
    let mut seen: Vec<FloorPattern> = Vec::new();
    for &m in &nodes[..nodes.len() - 1] {
        seen.extend(floors_at(m));
    }
    let mut fresh: Vec<FloorPattern> = floors_at(end).into_iter().filter(|f| !seen.contains(f)).collect();
    fresh.sort();
    fresh.dedup();
    for f in fresh {
        out.push(Binding::new(cat, "floor").with(Slot::Floor, f.name()));
    }

    if let Some(it) = first_item_at_end(world, &nodes) {
        out.push(Binding::new(cat, "item").with(Slot::Item, it.name()));
    }
    if world.degree(end) >= 3 && nodes[1..nodes.len() - 1].iter().all(|&m| world.degree(m) <= 2) {
        out.push(Binding::new(cat, "intersection"));
    }
    if !world.is_open(end, pose.dir) {
        out.push(Binding::new(cat, "end"));
    }
    out
}

fn turn_and_move(world: &WorldMap, pose: Pose, turn: &Segment, walk: &Segment) -> Vec<Binding> {
    let cat = TaskCategory::TurnAndMoveToX;
    let faced = pose.turned(turned(pose.dir, turn));
    let Some(nodes) = run(world, faced, walk.actions.len()) else { return Vec::new() };
    let mut out = Vec::new();
    if let Some(it) = first_item_at_end(world, &nodes) {
        // The item must be visible in the chosen direction only.
        let elsewhere = Direction::ALL.into_iter().filter(|&d| d != faced.dir).any(|d| {
            let mut at = pose.node();
            while let Some(m) = world.neighbor(at, d) {
                if world.item(m) == Some(it) {
                    return true;
                }
                at = m;
            }
            false
        });
        if !elsewhere {
            out.push(Binding::new(cat, "item").with(Slot::Item, it.name()));
        }
    }
    if !world.is_open(*nodes.last().unwrap(), faced.dir) {
        if let Some(side) = side_word(turn) {
            out.push(Binding::new(cat, "end").with(Slot::Side, side));
        }
    }
    out
}

fn describe(world: &WorldMap, pose: Pose) -> Vec<Binding> {
    let cat = TaskCategory::Description;
    let n = pose.node();
    let mut out = Vec::new();
    let mut floors: Vec<FloorPattern> =
        Direction::ALL.into_iter().filter_map(|d| world.edge_toward(n, d)).map(|(_, a)| a.floor).collect();
    let degree = floors.len();
    floors.sort();
    floors.dedup();
    if degree >= 3 && floors.len() == 2 {
        out.push(
            Binding::new(cat, "intersection").with(Slot::Floor, floors[0].name()).with(Slot::Floor2, floors[1].name()),
        );
    }
    if let Some(it) = world.item(n) {
        out.push(Binding::new(cat, "item").with(Slot::Item, it.name()));
    }
    if degree == 1 {
        out.push(Binding::new(cat, "dead_end").with(Slot::Floor, floors[0].name()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::langgen::segment_path;
    use crate::worldsim::{Edge, WallPainting};
    use Action::*;

    /// Plus-shaped 5x5 world centred on (2,2) with arms of length 2.
    fn plus() -> WorldMap {
        let n = Node::new;
        let mut edges = Vec::new();
        for i in 0..4 {
            edges.push(Edge::new(n(i, 2), n(i + 1, 2)).unwrap());
            edges.push(Edge::new(n(2, i), n(2, i + 1)).unwrap());
        }
        WorldMap::plain(5, 5, edges, FloorPattern::Wood, WallPainting::Fish).unwrap()
    }

    fn segs(a: &[Action]) -> Vec<Segment> {
        segment_path(a)
    }

    #[test]
    fn turn_right_is_language_only() {
        let w = plus();
        let b = match_pattern(TaskCategory::LanguageOnly, &w, Pose::new(2, 2, Direction::North), &segs(&[Right]));
        assert_eq!(b, Some(Binding::new(TaskCategory::LanguageOnly, "turn").with(Slot::Side, "right")));
        let b = match_pattern(TaskCategory::LanguageOnly, &w, Pose::new(2, 2, Direction::North), &segs(&[Move, Move]));
        assert_eq!(b.unwrap().slot(Slot::Count), Some("two"));
    }

    #[test]
    fn turn_to_the_chair() {
        let mut w = plus();
        w.set_item(Node::new(3, 2), Some(Item::Chair));
        let start = Pose::new(2, 2, Direction::North);
        let found = match_candidates(TaskCategory::TurnToX, &w, start, &segs(&[Right]));
        assert!(found.contains(&Binding::new(TaskCategory::TurnToX, "item").with(Slot::Item, "chair")));
        // A second chair on the left makes it ambiguous.
        w.set_item(Node::new(1, 2), Some(Item::Chair));
        let found = match_candidates(TaskCategory::TurnToX, &w, start, &segs(&[Right]));
        assert!(!found.iter().any(|b| b.pattern == "item"));
    }

    #[test]
    fn walk_until_blue_floor() {
        // Corridor along y=0 from x=0..4 with a blue side hall at x=3.
        let n = Node::new;
        let mut edges: Vec<Edge> = (0..4).map(|x| Edge::new(n(x, 0), n(x + 1, 0)).unwrap()).collect();
        edges.push(Edge::new(n(3, 0), n(3, 1)).unwrap());
        let mut w = WorldMap::plain(5, 2, edges, FloorPattern::Wood, WallPainting::Fish).unwrap();
        let side = w.hall_of(&Edge::new(n(3, 0), n(3, 1)).unwrap()).unwrap();
        w.set_hall_floor(side, FloorPattern::Blue);
        let start = Pose::new(0, 0, Direction::East);
        let found = match_candidates(TaskCategory::MoveUntil, &w, start, &segs(&[Move, Move, Move]));
        assert!(found.contains(&Binding::new(TaskCategory::MoveUntil, "floor").with(Slot::Floor, "blue")));
        assert!(found.contains(&Binding::new(TaskCategory::MoveUntil, "intersection")));
        // Stopping one short or one past does not satisfy the condition.
        assert!(match_candidates(TaskCategory::MoveUntil, &w, start, &segs(&[Move, Move])).iter().all(|b| b.pattern != "floor"));
        let past = match_candidates(TaskCategory::MoveUntil, &w, start, &segs(&[Move, Move, Move, Move]));
        assert!(past.iter().all(|b| b.pattern != "floor"));
        assert!(past.contains(&Binding::new(TaskCategory::MoveUntil, "end")));
    }

    #[test]
    fn move_to_needs_first_occurrence() {
        let mut w = plus();
        w.set_item(Node::new(2, 1), Some(Item::Sofa));
        w.set_item(Node::new(2, 0), Some(Item::Sofa));
        let start = Pose::new(2, 2, Direction::North);
        assert!(match_candidates(TaskCategory::MoveToX, &w, start, &segs(&[Move])).iter().any(|b| b.pattern == "item"));
        let two = match_candidates(TaskCategory::MoveToX, &w, start, &segs(&[Move, Move]));
        assert!(two.iter().all(|b| b.pattern != "item"));
        assert!(two.contains(&Binding::new(TaskCategory::MoveToX, "end")));
    }

    #[test]
    fn orient_with_wall_behind() {
        // T-junction at (2,2): north arm removed.
        let n = Node::new;
        let edges = vec![
            Edge::new(n(1, 2), n(2, 2)).unwrap(),
            Edge::new(n(2, 2), n(3, 2)).unwrap(),
            Edge::new(n(2, 2), n(2, 3)).unwrap(),
        ];
        let w = WorldMap::plain(5, 5, edges, FloorPattern::Wood, WallPainting::Fish).unwrap();
        let found = match_candidates(TaskCategory::Orient, &w, Pose::new(2, 2, Direction::North), &segs(&[Right, Right]));
        assert!(found.contains(&Binding::new(TaskCategory::Orient, "wall_back")));
        let found = match_candidates(TaskCategory::Orient, &w, Pose::new(2, 2, Direction::North), &segs(&[Right]));
        assert!(!found.contains(&Binding::new(TaskCategory::Orient, "wall_back")));
    }

    #[test]
    fn descriptions() {
        let mut w = plus();
        let east = w.hall_of(&Edge::new(Node::new(2, 2), Node::new(3, 2)).unwrap()).unwrap();
        w.set_hall_floor(east, FloorPattern::Blue);
        let found = match_candidates(TaskCategory::Description, &w, Pose::new(2, 2, Direction::North), &[]);
        assert!(found.contains(
            &Binding::new(TaskCategory::Description, "intersection")
                .with(Slot::Floor, "blue")
                .with(Slot::Floor2, "wood")
        ));
        let end = match_candidates(TaskCategory::Description, &w, Pose::new(2, 0, Direction::East), &[]);
        assert_eq!(end, vec![Binding::new(TaskCategory::Description, "dead_end").with(Slot::Floor, "wood")]);
    }

    #[test]
    fn any_combination_needs_perception() {
        let mut w = plus();
        let start = Pose::new(2, 2, Direction::North);
        let s = segs(&[Move, Right]);
        assert!(match_candidates(TaskCategory::AnyCombination, &w, start, &s).iter().all(|b| b.parts[0].is_perceptual() || b.parts[1].is_perceptual()));
        w.set_item(Node::new(2, 1), Some(Item::Lamp));
        let found = match_candidates(TaskCategory::AnyCombination, &w, start, &s);
        assert!(found.iter().any(|b| b.parts[0] == Binding::new(TaskCategory::MoveToX, "item").with(Slot::Item, "lamp")));
    }

    #[test]
    fn shapes_are_enforced() {
        let w = plus();
        let start = Pose::new(2, 2, Direction::North);
        assert!(match_candidates(TaskCategory::TurnToX, &w, start, &segs(&[Move])).is_empty());
        assert!(match_candidates(TaskCategory::Description, &w, start, &segs(&[Move])).is_empty());
        assert!(match_candidates(TaskCategory::MoveToX, &w, start, &[]).is_empty());
    }
}
