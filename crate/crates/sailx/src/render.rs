//! Text and SVG pictures of a map, the agent and an executed path.

use std::fmt::Write as _;

use sailx_core::worldsim::{step, Action, Direction, FloorPattern, Item, Node, Pose, StepResult, WallPainting, WorldMap};

/// Poses visited while executing `actions` from `start`, starting with
/// `start`; execution ends at the first STOP or wall hit.
pub fn trace_path(world: &WorldMap, start: Pose, actions: &[Action]) -> Vec<Pose> {
    let mut poses = vec![start];
    let mut pose = start;
    for &a in actions {
        match step(world, pose, a) {
            StepResult::Moved(p) | StepResult::Turned(p) => {
                pose = p;
                poses.push(p);
            }
            StepResult::Stopped | StepResult::WallHit => break,
        }
    }
    poses
}

pub fn floor_symbol(f: FloorPattern) -> char {
    match f {
        FloorPattern::Blue => '~',
        FloorPattern::Brick => '=',
        FloorPattern::Concrete => '_',
        FloorPattern::Flower => '%',
        FloorPattern::Grass => '"',
        FloorPattern::Gravel => ':',
        FloorPattern::Wood => '&',
        FloorPattern::Yellow => ';',
    }
}

fn item_symbol(i: Item) -> char {
    i.name().chars().next().unwrap_or('?').to_ascii_uppercase()
}

fn arrow(d: Direction) -> char {
    match d {
        Direction::North => '^',
        Direction::East => '>',
        Direction::South => 'v',
        Direction::West => '<',
    }
}

/// A `(2h+1) × (2w+1)` character box. Nodes sit at odd coordinates, open
/// edges show their hall's floor symbol, walls are `#`. Items are capital
/// initials, visited nodes `*`, the path's start `o`, and the agent's final
/// pose an arrow.
pub fn render_ascii(world: &WorldMap, agent: Option<Pose>, path: &[Pose]) -> String {
    let (w, h) = (world.width(), world.height());
    let mut grid = vec![vec!['#'; 2 * w + 1]; 2 * h + 1];
    for n in world.nodes() {
        grid[2 * n.y + 1][2 * n.x + 1] = world.item(n).map(item_symbol).unwrap_or('.');
    }
    for e in world.edges() {
        let (a, b) = (e.a(), e.b());
        let floor = world.edge_attr(e).map(|x| floor_symbol(x.floor)).unwrap_or(' ');
        grid[a.y + b.y + 1][a.x + b.x + 1] = floor;
    }
    for p in path {
        let c = &mut grid[2 * p.y + 1][2 * p.x + 1];
        if *c == '.' {
            *c = '*';
        }
    }
    if let (Some(first), true) = (path.first(), path.len() > 1) {
        grid[2 * first.y + 1][2 * first.x + 1] = 'o';
    }
    if let Some(p) = agent {
        grid[2 * p.y + 1][2 * p.x + 1] = arrow(p.dir);
    }
    let mut out = String::with_capacity((2 * w + 2) * (2 * h + 1));
    for row in grid {
        out.extend(row);
        out.push('\n');
    }
    out
}

/// Key to the ASCII symbols and the painting of each area.
pub fn legend(world: &WorldMap) -> String {
    let mut out = String::from("floors:");
    for &f in FloorPattern::ALL {
        let _ = write!(out, " {}={}", floor_symbol(f), f.name());
    }
    out.push_str("\nitems:");
    for &i in Item::ALL {
        let _ = write!(out, " {}={}", item_symbol(i), i.name());
    }
    out.push('\n');
    for a in world.areas() {
        let (x0, y0, x1, y1) = bounds(&a.nodes);
        let _ = writeln!(out, "area {}: {} paintings, nodes ({x0},{y0})-({x1},{y1})", a.id, a.wall.name());
    }
    out
}

fn bounds(nodes: &[Node]) -> (usize, usize, usize, usize) {
    let x0 = nodes.iter().map(|n| n.x).min().unwrap_or(0);
    let y0 = nodes.iter().map(|n| n.y).min().unwrap_or(0);
    let x1 = nodes.iter().map(|n| n.x).max().unwrap_or(0);
    let y1 = nodes.iter().map(|n| n.y).max().unwrap_or(0);
    (x0, y0, x1, y1)
}

fn floor_color(f: FloorPattern) -> &'static str {
    match f {
        FloorPattern::Blue => "#4a78c2",
        FloorPattern::Brick => "#b5533c",
        FloorPattern::Concrete => "#9a9a9a",
        FloorPattern::Flower => "#d86fb8",
        FloorPattern::Grass => "#4f9d45",
        FloorPattern::Gravel => "#7d6e5c",
        FloorPattern::Wood => "#a7773a",
        FloorPattern::Yellow => "#e3c431",
    }
}

fn wall_color(w: WallPainting) -> &'static str {
    match w {
        WallPainting::Butterfly => "#f3e3f7",
        WallPainting::Fish => "#e1effa",
        WallPainting::Tower => "#f6f0dc",
    }
}

fn wall_stroke(w: WallPainting) -> &'static str {
    match w {
        WallPainting::Butterfly => "#9b4fb0",
        WallPainting::Fish => "#2f7fb8",
        WallPainting::Tower => "#9c7d2a",
    }
}

const CELL: f64 = 60.0;
const MARGIN: f64 = 20.0;

fn center(n: Node) -> (f64, f64) {
    (MARGIN + CELL * (n.x as f64 + 0.5), MARGIN + CELL * (n.y as f64 + 0.5))
}

/// SVG picture: areas tinted by wall painting, halls drawn in their floor
/// colour with a painting-coloured rim, items labelled, the executed path in
/// red and the agent as a triangle.
pub fn render_svg(world: &WorldMap, agent: Option<Pose>, path: &[Pose]) -> String {
    let width = 2.0 * MARGIN + CELL * world.width() as f64;
    let height = 2.0 * MARGIN + CELL * world.height() as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(s, r##"<rect width="{width}" height="{height}" fill="#ffffff"/>"##);
    for a in world.areas() {
        for n in &a.nodes {
            let (x, y) = (MARGIN + CELL * n.x as f64, MARGIN + CELL * n.y as f64);
            let _ = writeln!(s, r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{}"/>"#, wall_color(a.wall));
        }
    }
    for e in world.edges() {
        let Some(attr) = world.edge_attr(e) else { continue };
        let ((x1, y1), (x2, y2)) = (center(e.a()), center(e.b()));
        let _ = writeln!(
            s,
            r#"<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="{}" stroke-width="22" stroke-linecap="round"/>"#,
            wall_stroke(attr.wall)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="{}" stroke-width="16" stroke-linecap="round"><title>{} / {}</title></line>"#,
            floor_color(attr.floor),
            attr.floor.name(),
            attr.wall.name()
        );
    }
    for n in world.nodes() {
        let (x, y) = center(n);
        let _ = writeln!(s, r##"<circle cx="{x}" cy="{y}" r="5" fill="#333333"/>"##);
        if let Some(item) = world.item(n) {
            let _ = writeln!(
                s,
                r##"<text x="{x}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle" fill="#111111">{}</text>"##,
                y - 14.0,
                item.name()
            );
        }
    }
    if path.len() > 1 {
        let pts: Vec<String> = path
            .iter()
            .map(|p| {
                let (x, y) = center(p.node());
                format!("{x},{y}")
            })
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#d62728" stroke-width="4" stroke-linejoin="round"/>"##,
            pts.join(" ")
        );
    }
    if let Some(p) = agent {
        let (x, y) = center(p.node());
        let (dx, dy) = p.dir.delta();
        let (dx, dy) = (dx as f64, dy as f64);
        let tip = (x + 16.0 * dx, y + 16.0 * dy);
        let l = (x - 8.0 * dx - 9.0 * dy, y - 8.0 * dy + 9.0 * dx);
        let r = (x - 8.0 * dx + 9.0 * dy, y - 8.0 * dy - 9.0 * dx);
        let _ = writeln!(
            s,
            r##"<polygon points="{},{} {},{} {},{}" fill="#111111"/>"##,
            tip.0, tip.1, l.0, l.1, r.0, r.1
        );
    }
    s.push_str("</svg>\n");
    s
}
