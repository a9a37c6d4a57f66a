use alloc::collections::{BinaryHeap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use rand::Rng;

use super::map::WorldMap;
use super::types::{Action, Direction, Node};
use super::WorldError;

/// A* search with the Manhattan heuristic.
pub fn shortest_path(world: &WorldMap, start: Node, goal: Node) -> Result<Vec<Node>, WorldError> {
    if !world.contains(start) || !world.contains(goal) {
        return Err(WorldError::InvalidArgument("path endpoint out of bounds"));
    }
    let n = world.width() * world.height();
    let idx = |p: Node| world.node_index(p);
    let mut g = vec![usize::MAX; n];
    let mut came_from: Vec<Option<Node>> = vec![None; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();

    g[idx(start)] = 0;
    open.push(Reverse((start.manhattan(goal), start.manhattan(goal), start)));
    while let Some(Reverse((_, _, cur))) = open.pop() {
        if cur == goal {
            let mut path = vec![goal];
            let mut at = goal;
            while let Some(prev) = came_from[idx(at)] {
                path.push(prev);
                at = prev;
            }
            path.reverse();
            return Ok(path);
        }
        if core::mem::replace(&mut closed[idx(cur)], true) {
            continue;
        }
        let gc = g[idx(cur)];
        for d in Direction::ALL {
            let Some(next) = world.neighbor(cur, d) else { continue };
            let cand = gc + 1;
            if cand < g[idx(next)] {
                g[idx(next)] = cand;
                came_from[idx(next)] = Some(cur);
                let h = next.manhattan(goal);
                open.push(Reverse((cand + h, h, next)));
            }
        }
    }
    Err(WorldError::NoPath)
}

/// Hop distances from `start` to every node (`usize::MAX` when unreachable),
/// indexed by [`WorldMap::node_index`].
pub fn bfs_distances(world: &WorldMap, start: Node) -> Vec<usize> {
    let mut dist = vec![usize::MAX; world.width() * world.height()];
    dist[world.node_index(start)] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(cur) = queue.pop_front() {
        let dc = dist[world.node_index(cur)];
        for d in Direction::ALL {
            if let Some(next) = world.neighbor(cur, d) {
                let slot = &mut dist[world.node_index(next)];
                if *slot == usize::MAX {
                    *slot = dc + 1;
                    queue.push_back(next);
                }
            }
        }
    }
    dist
}

/// Turn-then-move actions that walk `path` from heading `start_dir`, ending
/// with STOP. About-turns are emitted as two RIGHTs.
pub fn path_to_actions(path: &[Node], start_dir: Direction) -> Result<Vec<Action>, WorldError> {
    let mut actions = Vec::new();
    let mut dir = start_dir;
    for (i, pair) in path.windows(2).enumerate() {
        let want = pair[0].direction_to(pair[1]).ok_or(WorldError::InvalidPath { index: i + 1 })?;
        if want == dir.right() {
            actions.push(Action::Right);
        } else if want == dir.left() {
            actions.push(Action::Left);
        } else if want == dir.opposite() {
            actions.extend([Action::Right, Action::Right]);
        }
        dir = want;
        actions.push(Action::Move);
    }
    actions.push(Action::Stop);
    Ok(actions)
}

/// Attempts made by [`sample_endpoints`] before giving up on a map.
pub const ENDPOINT_ATTEMPTS: usize = 256;

/// Uniformly sample a start and goal at least `min_dist` hops apart.
pub fn sample_endpoints<R: Rng + ?Sized>(
    world: &WorldMap,
    rng: &mut R,
    min_dist: usize,
) -> Result<(Node, Node), WorldError> {
    let (w, h) = (world.width(), world.height());
    for _ in 0..ENDPOINT_ATTEMPTS {
        let start = Node::new(rng.random_range(0..w), rng.random_range(0..h));
        let goal = Node::new(rng.random_range(0..w), rng.random_range(0..h));
        if start == goal {
            continue;
        }
        let d = bfs_distances(world, start)[world.node_index(goal)];
        if d != usize::MAX && d >= min_dist.max(1) {
            return Ok((start, goal));
        }
    }
    Err(WorldError::EndpointsUnavailable { min_dist })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::worldsim::{decorate, generate_maze, Edge, FloorPattern, WallPainting, WorldConfig};

    fn straight(len: usize) -> WorldMap {
        let edges = (0..len).map(|x| Edge::new(Node::new(x, 0), Node::new(x + 1, 0)).unwrap()).collect();
        WorldMap::plain(len + 1, 1, edges, FloorPattern::Blue, WallPainting::Tower).unwrap()
    }

    #[test]
    fn trivial_paths() {
        let w = straight(5);
        assert_eq!(shortest_path(&w, Node::new(2, 0), Node::new(2, 0)).unwrap(), vec![Node::new(2, 0)]);
        assert_eq!(shortest_path(&w, Node::new(0, 0), Node::new(5, 0)).unwrap().len(), 6);
    }

    #[test]
    fn disconnected_is_error() {
        let w = WorldMap::plain(2, 1, Vec::new(), FloorPattern::Blue, WallPainting::Tower).unwrap();
        assert_eq!(shortest_path(&w, Node::new(0, 0), Node::new(1, 0)), Err(WorldError::NoPath));
    }

    #[test]
    fn actions_from_paths() {
        let p = [Node::new(0, 0), Node::new(1, 0), Node::new(2, 0), Node::new(3, 0)];
        assert_eq!(
            path_to_actions(&p, Direction::East).unwrap(),
            vec![Action::Move, Action::Move, Action::Move, Action::Stop]
        );
        assert_eq!(&path_to_actions(&p, Direction::West).unwrap()[..3], &[Action::Right, Action::Right, Action::Move]);
        assert_eq!(path_to_actions(&p, Direction::North).unwrap()[0], Action::Right);
        assert_eq!(path_to_actions(&p, Direction::South).unwrap()[0], Action::Left);
        assert_eq!(path_to_actions(&p[..1], Direction::East).unwrap(), vec![Action::Stop]);
        let bad = [Node::new(0, 0), Node::new(2, 0)];
        assert_eq!(path_to_actions(&bad, Direction::East), Err(WorldError::InvalidPath { index: 1 }));
    }

    #[test]
    fn endpoints_respect_distance() {
        let cfg = WorldConfig::default();
        for seed in 0..100 {
            let mut rng = seeded(seed);
            let w = decorate(generate_maze(8, 8, &mut rng).unwrap(), &mut rng, &cfg).unwrap();
            let (s, g) = sample_endpoints(&w, &mut rng, 4).unwrap();
            assert!(bfs_distances(&w, s)[w.node_index(g)] >= 4);
            let (s, g) = sample_endpoints(&w, &mut rng, 1).unwrap();
            assert_ne!(s, g);
        }
    }

    #[test]
    fn tiny_maze_cannot_supply_distant_endpoints() {
        let cfg = WorldConfig { width: 2, height: 2, item_prob: 0.0 };
        let mut rng = seeded(1);
        let w = decorate(generate_maze(2, 2, &mut rng).unwrap(), &mut rng, &cfg).unwrap();
        assert_eq!(sample_endpoints(&w, &mut rng, 4), Err(WorldError::EndpointsUnavailable { min_dist: 4 }));
    }
}
