use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use super::map::{compute_halls, Area, EdgeAttr, Hall, WorldMap};
use super::types::{Direction, Edge, FloorPattern, Item, Node, WallPainting};
use super::WorldError;

/// Knobs for procedural world generation.
#[derive(Clone, Debug, PartialEq)]
pub struct WorldConfig {
    pub width: usize,
    pub height: usize,
    /// Probability that a node receives an item.
    pub item_prob: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig { width: 8, height: 8, item_prob: 0.25 }
    }
}

/// Carve a perfect maze with the recursive backtracker, starting from a
/// uniformly random node.
pub fn generate_maze<R: Rng + ?Sized>(width: usize, height: usize, rng: &mut R) -> Result<Vec<Edge>, WorldError> {
    if width == 0 || height == 0 {
        return Err(WorldError::InvalidArgument("maze dimensions must be positive"));
    }
    let mut visited = vec![false; width * height];
    let start = Node::new(rng.random_range(0..width), rng.random_range(0..height));
    visited[start.y * width + start.x] = true;
    let mut stack = vec![start];
    let mut edges = Vec::with_capacity(width * height - 1);
    let mut options: Vec<Node> = Vec::with_capacity(4);

    while let Some(&cell) = stack.last() {
        options.clear();
        options.extend(
            Direction::ALL
                .iter()
                .filter_map(|&d| cell.offset(d, width, height))
                .filter(|n| !visited[n.y * width + n.x]),
        );
        if options.is_empty() {
            stack.pop();
            continue;
        }
        let next = options[rng.random_range(0..options.len())];
        visited[next.y * width + next.x] = true;
        edges.push(Edge::new(cell, next).expect("neighbours are adjacent"));
        stack.push(next);
    }
    edges.sort();
    Ok(edges)
}

/// Decorate a maze with items, hall floors, and area wall paintings.
pub fn decorate<R: Rng + ?Sized>(edges: Vec<Edge>, rng: &mut R, config: &WorldConfig) -> Result<WorldMap, WorldError> {
    let (width, height) = (config.width, config.height);

    let mut items = BTreeMap::new();
    for y in 0..height {
        for x in 0..width {
            if rng.random_bool(config.item_prob.clamp(0.0, 1.0)) {
                let it = Item::ALL[rng.random_range(0..Item::ALL.len())];
                items.insert(Node::new(x, y), it);
            }
        }
    }

    let halls: Vec<Hall> = compute_halls(&edges)
        .into_iter()
        .map(|r| Hall {
            axis: r.axis,
            edges: r.edges,
            floor: FloorPattern::ALL[rng.random_range(0..FloorPattern::ALL.len())],
        })
        .collect();

    let wanted = if rng.random_bool(0.5) { 2 } else { 3 };
    let labels = partition_areas(width, height, &edges, wanted, rng);
    let count = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut paintings = WallPainting::ALL.to_vec();
    paintings.shuffle(rng);
    let areas: Vec<Area> = (0..count)
        .map(|id| Area {
            id,
            nodes: (0..width)
                .flat_map(|x| (0..height).map(move |y| Node::new(x, y)))
                .filter(|n| labels[n.y * width + n.x] == id)
                .collect(),
            wall: paintings[id],
        })
        .collect();

    let mut attrs = BTreeMap::new();
    for hall in &halls {
        for e in &hall.edges {
            let a = e.a();
            let wall = areas[labels[a.y * width + a.x]].wall;
            attrs.insert(*e, EdgeAttr { floor: hall.floor, wall });
        }
    }
    WorldMap::from_parts(width, height, edges, items, halls, attrs, areas)
}

/// Split the grid into `wanted` areas with one or two axis-aligned cuts.
///
/// Every returned area owns at least one edge (as the edge's smaller
/// endpoint), so each painting actually appears. Falls back to fewer areas
/// when the maze is too small for `wanted`.
fn partition_areas<R: Rng + ?Sized>(
    width: usize,
    height: usize,
    edges: &[Edge],
    wanted: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut count = wanted.min(edges.len()).min(3);
    while count >= 2 {
        for _ in 0..64 {
            if let Some(labels) = try_cuts(width, height, count, rng) {
                let mut owned = vec![false; count];
                for e in edges {
                    owned[labels[e.a().y * width + e.a().x]] = true;
                }
                if owned.iter().all(|&o| o) {
                    return labels;
                }
            }
        }
        count -= 1;
    }
    vec![0; width * height]
}

fn try_cuts<R: Rng + ?Sized>(width: usize, height: usize, count: usize, rng: &mut R) -> Option<Vec<usize>> {
    // First cut: vertical (split by x) or horizontal (split by y).
    let vertical = match (width >= 2, height >= 2) {
        (true, true) => rng.random_bool(0.5),
        (true, false) => true,
        (false, true) => false,
        (false, false) => return None,
    };
    let (major, minor) = if vertical { (width, height) } else { (height, width) };
    let cut = rng.random_range(1..major);
    let coords = |i: usize| -> (usize, usize) {
        let (x, y) = (i % width, i / width);
        if vertical {
            (x, y)
        } else {
            (y, x)
        }
    };
    let mut labels: Vec<usize> = (0..width * height).map(|i| usize::from(coords(i).0 >= cut)).collect();
    if count == 3 {
        if minor < 2 {
            return None;
        }
        // Split one side with a perpendicular half-line.
        let side = usize::from(rng.random_bool(0.5));
        let cut2 = rng.random_range(1..minor);
        for (i, label) in labels.iter_mut().enumerate() {
            if *label == side && coords(i).1 >= cut2 {
                *label = 2;
            }
        }
    }
    Some(labels)
}
