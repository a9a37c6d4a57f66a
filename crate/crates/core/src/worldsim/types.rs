use core::fmt;

/// Compass heading. North decreases `y`, East increases `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    North,
    East,
    South,
    West,
}

impl Direction {
    /// Clockwise order starting at North.
    pub const ALL: [Direction; 4] = [Direction::North, Direction::East, Direction::South, Direction::West];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i % 4]
    }

    /// Quarter turn clockwise.
    pub fn right(self) -> Self {
        Self::from_index(self.index() + 1)
    }

    /// Quarter turn counterclockwise.
    pub fn left(self) -> Self {
        Self::from_index(self.index() + 3)
    }

    pub fn opposite(self) -> Self {
        Self::from_index(self.index() + 2)
    }

    /// `(dx, dy)` of one hop.
    pub fn delta(self) -> (isize, isize) {
        match self {
            Direction::North => (0, -1),
            Direction::East => (1, 0),
            Direction::South => (0, 1),
            Direction::West => (-1, 0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::North => "north",
            Direction::East => "east",
            Direction::South => "south",
            Direction::West => "west",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.name() == s)
    }
}

/// Agent action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Move,
    Right,
    Left,
    Stop,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Move, Action::Right, Action::Left, Action::Stop];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Move => "MOVE",
            Action::Right => "RIGHT",
            Action::Left => "LEFT",
            Action::Stop => "STOP",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }

    pub fn is_turn(self) -> bool {
        matches!(self, Action::Right | Action::Left)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

macro_rules! vocabulary_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn index(self) -> usize {
                self as usize
            }

            pub fn name(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }

            pub fn parse(s: &str) -> Option<Self> {
                Self::ALL.iter().copied().find(|v| v.name() == s)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

vocabulary_enum!(
    /// Object that may stand on a node.
    Item {
        Barstool => "barstool",
        Chair => "chair",
        Easel => "easel",
        Hatrack => "hatrack",
        Lamp => "lamp",
        Sofa => "sofa",
    }
);

vocabulary_enum!(
    /// Flooring of a hall.
    FloorPattern {
        Blue => "blue",
        Brick => "brick",
        Concrete => "concrete",
        Flower => "flower",
        Grass => "grass",
        Gravel => "gravel",
        Wood => "wood",
        Yellow => "yellow",
    }
);

vocabulary_enum!(
    /// Painting hung along a hall; one per area.
    WallPainting {
        Butterfly => "butterfly",
        Fish => "fish",
        Tower => "tower",
    }
);

/// Grid node, ordered lexicographically by `(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Node {
    pub x: usize,
    pub y: usize,
}

impl Node {
    pub const fn new(x: usize, y: usize) -> Self {
        Node { x, y }
    }

    /// Neighbour in `dir` if it lies inside a `width × height` grid.
    pub fn offset(self, dir: Direction, width: usize, height: usize) -> Option<Node> {
        let (dx, dy) = dir.delta();
        let x = self.x.checked_add_signed(dx)?;
        let y = self.y.checked_add_signed(dy)?;
        (x < width && y < height).then_some(Node { x, y })
    }

    pub fn manhattan(self, other: Node) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    /// Direction of a unit hop from `self` to `other`.
    pub fn direction_to(self, other: Node) -> Option<Direction> {
        match (other.x as isize - self.x as isize, other.y as isize - self.y as isize) {
            (0, -1) => Some(Direction::North),
            (1, 0) => Some(Direction::East),
            (0, 1) => Some(Direction::South),
            (-1, 0) => Some(Direction::West),
            _ => None,
        }
    }
}

/// Position and heading of the agent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Pose {
    pub x: usize,
    pub y: usize,
    pub dir: Direction,
}

impl Pose {
    pub const fn new(x: usize, y: usize, dir: Direction) -> Self {
        Pose { x, y, dir }
    }

    pub fn at(node: Node, dir: Direction) -> Self {
        Pose { x: node.x, y: node.y, dir }
    }

    pub fn node(self) -> Node {
        Node::new(self.x, self.y)
    }

    pub fn turned(self, dir: Direction) -> Self {
        Pose { dir, ..self }
    }
}

/// Orientation of an edge or hall.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    /// East-west.
    Horizontal,
    /// North-south.
    Vertical,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Horizontal => "horizontal",
            Axis::Vertical => "vertical",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "horizontal" => Some(Axis::Horizontal),
            "vertical" => Some(Axis::Vertical),
            _ => None,
        }
    }
}

/// Unordered pair of orthogonally adjacent nodes, stored with `a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    a: Node,
    b: Node,
}

impl Edge {
    /// `None` unless `p` and `q` are orthogonal neighbours.
    pub fn new(p: Node, q: Node) -> Option<Self> {
        p.direction_to(q)?;
        Some(if p < q { Edge { a: p, b: q } } else { Edge { a: q, b: p } })
    }

    /// Lexicographically smaller endpoint.
    pub fn a(&self) -> Node {
        self.a
    }

    pub fn b(&self) -> Node {
        self.b
    }

    pub fn axis(&self) -> Axis {
        if self.a.y == self.b.y {
            Axis::Horizontal
        } else {
            Axis::Vertical
        }
    }

    pub fn other(&self, n: Node) -> Option<Node> {
        if n == self.a {
            Some(self.b)
        } else if n == self.b {
            Some(self.a)
        } else {
            None
        }
    }
}

/// Why an [`execute`](super::execute) run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Stopped,
    WallHit,
    /// Action list or budget ran out before a STOP.
    Exhausted,
}

/// Result of a single [`step`](super::step).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepResult {
    Moved(Pose),
    Turned(Pose),
    Stopped,
    WallHit,
}

impl StepResult {
    pub fn is_terminal(self) -> bool {
        matches!(self, StepResult::Stopped | StepResult::WallHit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotations() {
        assert_eq!(Direction::North.right(), Direction::East);
        assert_eq!(Direction::West.right(), Direction::North);
        assert_eq!(Direction::North.left(), Direction::West);
        for d in Direction::ALL {
            assert_eq!(d.right().left(), d);
            assert_eq!(d.left().right(), d);
            assert_eq!(d.right().right(), d.opposite());
        }
    }

    #[test]
    fn inventories() {
        assert_eq!(Action::ALL.len(), 4);
        assert_eq!(Item::ALL.len(), 6);
        assert_eq!(FloorPattern::ALL.len(), 8);
        assert_eq!(WallPainting::ALL.len(), 3);
        assert_eq!(FloorPattern::parse("gravel"), Some(FloorPattern::Gravel));
        assert_eq!(Action::parse("LEFT"), Some(Action::Left));
    }

    #[test]
    fn edges_normalize() {
        let e = Edge::new(Node::new(3, 2), Node::new(2, 2)).unwrap();
        assert_eq!(e.a(), Node::new(2, 2));
        assert_eq!(e.axis(), Axis::Horizontal);
        assert!(Edge::new(Node::new(0, 0), Node::new(1, 1)).is_none());
        assert!(Edge::new(Node::new(0, 0), Node::new(0, 0)).is_none());
    }

    #[test]
    fn offset_respects_bounds() {
        let n = Node::new(0, 0);
        assert_eq!(n.offset(Direction::North, 4, 4), None);
        assert_eq!(n.offset(Direction::South, 4, 4), Some(Node::new(0, 1)));
        assert_eq!(Node::new(3, 0).offset(Direction::East, 4, 4), None);
    }
}
