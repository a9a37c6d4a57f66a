use proptest::prelude::*;

use sailx_core::datastore::split_dataset;
use sailx_core::langgen::TaskCategory;
use sailx_core::percept::{encode_bof, encode_grid};
use sailx_core::rng::seeded;
use sailx_core::worldsim::{
    decorate, generate_maze, step, Action, Direction, Node, Pose, StepResult, WorldConfig, WorldMap,
};

fn world(w: usize, h: usize, seed: u64) -> WorldMap {
    let mut rng = seeded(seed);
    let edges = generate_maze(w, h, &mut rng).unwrap();
    decorate(edges, &mut rng, &WorldConfig { width: w, height: h, ..WorldConfig::default() }).unwrap()
}

fn pose_in(w: usize, h: usize) -> impl Strategy<Value = Pose> {
    (0..w, 0..h, 0..4usize).prop_map(|(x, y, d)| Pose::new(x, y, Direction::from_index(d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mazes_are_spanning_trees(w in 1usize..12, h in 1usize..12, seed: u64) {
        let edges = generate_maze(w, h, &mut seeded(seed)).unwrap();
        prop_assert_eq!(edges.len(), w * h - 1);
        let mut parent: Vec<usize> = (0..w * h).collect();
        fn root(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                x = p[x];
            }
            x
        }
        for e in &edges {
            let (a, b) = (root(&mut parent, e.a().y * w + e.a().x), root(&mut parent, e.b().y * w + e.b().x));
            prop_assert_ne!(a, b);
            parent[a] = b;
        }
    }

    #[test]
    fn halls_partition_edges_into_maximal_runs(w in 2usize..10, h in 2usize..10, seed: u64) {
        let world = world(w, h, seed);
        let mut owner = vec![None; world.edges().len()];
        for (k, hall) in world.halls().iter().enumerate() {
            prop_assert!(!hall.edges.is_empty());
            for e in &hall.edges {
                prop_assert_eq!(e.axis(), hall.axis);
                let i = world.edges().binary_search(e).unwrap();
                prop_assert!(owner[i].is_none(), "edge in two halls");
                owner[i] = Some(k);
            }
        }
        prop_assert!(owner.iter().all(Option::is_some));
        for n in world.nodes() {
            for d in [Direction::North, Direction::East] {
                let ahead = world.edge_toward(n, d).map(|(e, _)| e);
                let behind = world.edge_toward(n, d.opposite()).map(|(e, _)| e);
                if let (Some(a), Some(b)) = (ahead, behind) {
                    prop_assert_eq!(world.hall_of(&a), world.hall_of(&b), "collinear neighbours split");
                }
            }
        }
    }

    #[test]
    fn right_then_left_is_identity(seed: u64, pose in pose_in(6, 6)) {
        let world = world(6, 6, seed);
        let StepResult::Turned(p) = step(&world, pose, Action::Right) else { panic!("RIGHT must turn") };
        let StepResult::Turned(q) = step(&world, p, Action::Left) else { panic!("LEFT must turn") };
        prop_assert_eq!(q, pose);
    }

    #[test]
    fn grid_rotates_with_heading(seed: u64, pose in pose_in(8, 8)) {
        let world = world(8, 8, seed);
        let g = encode_grid(&world, pose).unwrap();
        let r = encode_grid(&world, pose.turned(pose.dir.right())).unwrap();
        prop_assert_eq!(g.row(4), g.row(0));
        for i in 0..4 {
            prop_assert_eq!(r.row(i), g.row((i + 1) % 4));
        }
        let bof = encode_bof(&world, pose);
        for i in 74..128 {
            prop_assert!(!bof.bit(i));
        }
    }

    #[test]
    fn split_is_a_deterministic_partition(n in 1usize..400, seed: u64) {
        let items: Vec<(u64, TaskCategory)> =
            (0..n as u64).map(|i| (i * 3 + 1, TaskCategory::ALL[(i as usize * 7 + 3) % 8])).collect();
        let s = split_dataset(items.iter().copied(), (0.70, 0.15, 0.15), seed).unwrap();
        prop_assert_eq!(&s, &split_dataset(items.iter().copied(), (0.70, 0.15, 0.15), seed).unwrap());
        let mut all: Vec<u64> = s.train.iter().chain(&s.dev).chain(&s.test).copied().collect();
        all.sort_unstable();
        let mut want: Vec<u64> = items.iter().map(|p| p.0).collect();
        want.sort_unstable();
        prop_assert_eq!(all, want);
        prop_assert_eq!(s.dev.len(), (n as f64 * 0.15 + 1e-9) as usize);
        prop_assert_eq!(s.test.len(), (n as f64 * 0.15 + 1e-9) as usize);
    }
}

#[test]
fn bof_conflates_what_the_grid_separates() {
    // A straight corridor 0-1-2 and the same corridor with an extra stub
    // beyond node 2 carry the same materials but differ in layout.
    let n = |x| Node::new(x, 0);
    let e = |a, b| sailx_core::worldsim::Edge::new(n(a), n(b)).unwrap();
    let floor = sailx_core::worldsim::FloorPattern::ALL[0];
    let wall = sailx_core::worldsim::WallPainting::ALL[0];
    let short = WorldMap::plain(4, 1, vec![e(0, 1), e(1, 2)], floor, wall).unwrap();
    let long = WorldMap::plain(4, 1, vec![e(0, 1), e(1, 2), e(2, 3)], floor, wall).unwrap();
    let pose = Pose::new(0, 0, Direction::East);
    assert_eq!(encode_bof(&short, pose), encode_bof(&long, pose));
    assert_ne!(encode_grid(&short, pose).unwrap(), encode_grid(&long, pose).unwrap());
}
