use super::map::WorldMap;
use super::types::{Action, Outcome, Pose, StepResult};

/// Apply one action.
pub fn step(world: &WorldMap, pose: Pose, action: Action) -> StepResult {
    match action {
        Action::Right => StepResult::Turned(pose.turned(pose.dir.right())),
        Action::Left => StepResult::Turned(pose.turned(pose.dir.left())),
        Action::Stop => StepResult::Stopped,
        Action::Move => match world.neighbor(pose.node(), pose.dir) {
            Some(n) => StepResult::Moved(Pose::at(n, pose.dir)),
            None => StepResult::WallHit,
        },
    }
}

/// Final state of an [`execute`] run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Execution {
    pub pose: Pose,
    pub outcome: Outcome,
    /// Number of actions applied, including the terminal one.
    pub applied: usize,
}

/// Run `actions` from `pose` until STOP, a wall hit, or `max_actions` actions.
///
/// On a wall hit the returned pose is the pose before the failed MOVE.
pub fn execute(world: &WorldMap, pose: Pose, actions: &[Action], max_actions: usize) -> Execution {
    let mut pose = pose;
    for (i, &a) in actions.iter().take(max_actions).enumerate() {
        match step(world, pose, a) {
            StepResult::Moved(p) | StepResult::Turned(p) => pose = p,
            StepResult::Stopped => return Execution { pose, outcome: Outcome::Stopped, applied: i + 1 },
            StepResult::WallHit => return Execution { pose, outcome: Outcome::WallHit, applied: i + 1 },
        }
    }
    Execution { pose, outcome: Outcome::Exhausted, applied: actions.len().min(max_actions) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worldsim::{Direction, Edge, FloorPattern, Node, WallPainting};
    use alloc::vec;

    fn corridor() -> WorldMap {
        // Vertical corridor (0,0)-(0,1)-(0,2) in a 2x3 grid.
        let edges = vec![
            Edge::new(Node::new(0, 0), Node::new(0, 1)).unwrap(),
            Edge::new(Node::new(0, 1), Node::new(0, 2)).unwrap(),
        ];
        WorldMap::plain(2, 3, edges, FloorPattern::Wood, WallPainting::Fish).unwrap()
    }

    #[test]
    fn turning_and_moving() {
        let w = corridor();
        let p = Pose::new(0, 1, Direction::North);
        assert_eq!(step(&w, p, Action::Right), StepResult::Turned(Pose::new(0, 1, Direction::East)));
        assert_eq!(step(&w, p, Action::Move), StepResult::Moved(Pose::new(0, 0, Direction::North)));
        assert_eq!(step(&w, p.turned(Direction::East), Action::Move), StepResult::WallHit);
        assert_eq!(step(&w, p, Action::Stop), StepResult::Stopped);
        assert!(StepResult::Stopped.is_terminal() && StepResult::WallHit.is_terminal());
    }

    #[test]
    fn right_then_left_is_identity() {
        let w = corridor();
        for d in Direction::ALL {
            let p = Pose::new(0, 1, d);
            let StepResult::Turned(q) = step(&w, p, Action::Right) else { panic!() };
            let StepResult::Turned(r) = step(&w, q, Action::Left) else { panic!() };
            assert_eq!(r, p);
        }
    }

    #[test]
    fn execution_outcomes() {
        let w = corridor();
        let p = Pose::new(0, 1, Direction::North);
        let e = execute(&w, p, &[Action::Stop], 10);
        assert_eq!((e.pose, e.outcome), (p, Outcome::Stopped));
        let e = execute(&w, p.turned(Direction::West), &[Action::Move], 10);
        assert_eq!((e.pose, e.outcome), (p.turned(Direction::West), Outcome::WallHit));
        let e = execute(&w, p, &[Action::Right; 6], 4);
        assert_eq!(e.outcome, Outcome::Exhausted);
        assert_eq!(e.applied, 4);
        assert_eq!(e.pose, p);
        let e = execute(&w, p, &[Action::Move, Action::Stop], 1);
        assert_eq!(e.outcome, Outcome::Exhausted);
    }
}
