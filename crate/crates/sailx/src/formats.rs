//! JSON map files, JSONL instance files and split files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use sailx_core::datastore::DatasetSplit;
use sailx_core::langgen::{Instance, TaskCategory};
use sailx_core::worldsim::{
    Action, Area, Axis, Direction, Edge, EdgeAttr, FloorPattern, Hall, Item, Node, Pose, WallPainting, WorldMap,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

impl FormatError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        FormatError::Io { path: path.to_path_buf(), source }
    }
}

fn invalid(msg: impl Into<String>) -> FormatError {
    FormatError::Invalid(msg.into())
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MapJson {
    pub width: usize,
    pub height: usize,
    pub edges: Vec<[usize; 4]>,
    pub items: BTreeMap<String, String>,
    pub halls: Vec<HallJson>,
    pub edge_attrs: Vec<EdgeAttrJson>,
    pub areas: Vec<AreaJson>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HallJson {
    pub axis: String,
    pub edges: Vec<[usize; 4]>,
    pub floor: String,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EdgeAttrJson {
    pub edge: [usize; 4],
    pub floor: String,
    pub wall: String,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AreaJson {
    pub id: usize,
    pub nodes: Vec<[usize; 2]>,
    pub wall: String,
}

#[derive(Serialize, Deserialize, Debug, Clone, Copy, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PoseJson {
    pub x: usize,
    pub y: usize,
    pub dir: DirName,
}

/// Direction spelled as its lowercase name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirName(pub Direction);

impl Serialize for DirName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.0.name())
    }
}

impl<'de> Deserialize<'de> for DirName {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Direction::parse(&s).map(DirName).ok_or_else(|| serde::de::Error::custom(format!("unknown direction {s:?}")))
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, Copy, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NodeJson {
    pub x: usize,
    pub y: usize,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InstanceJson {
    pub id: u64,
    pub seed: u64,
    pub category: String,
    pub start: PoseJson,
    pub goal: NodeJson,
    pub instruction: Vec<String>,
    pub actions: Vec<String>,
    pub map: MapJson,
}

fn edge_json(e: &Edge) -> [usize; 4] {
    [e.a().x, e.a().y, e.b().x, e.b().y]
}

fn edge_from(v: [usize; 4]) -> Result<Edge, FormatError> {
    Edge::new(Node::new(v[0], v[1]), Node::new(v[2], v[3])).ok_or_else(|| invalid(format!("{v:?} is not a unit edge")))
}

fn parse_name<T>(kind: &str, s: &str, parse: impl Fn(&str) -> Option<T>) -> Result<T, FormatError> {
    parse(s).ok_or_else(|| invalid(format!("unknown {kind} {s:?}")))
}

pub fn map_to_json(world: &WorldMap) -> MapJson {
    MapJson {
        width: world.width(),
        height: world.height(),
        edges: world.edges().iter().map(edge_json).collect(),
        items: world.items().map(|(n, it)| (format!("{},{}", n.x, n.y), it.name().to_string())).collect(),
        halls: world
            .halls()
            .iter()
            .map(|h| HallJson {
                axis: h.axis.name().into(),
                edges: h.edges.iter().map(edge_json).collect(),
                floor: h.floor.name().into(),
            })
            .collect(),
        edge_attrs: world
            .edges()
            .iter()
            .map(|e| {
                let a = world.edge_attr(e).expect("every edge has attributes");
                EdgeAttrJson { edge: edge_json(e), floor: a.floor.name().into(), wall: a.wall.name().into() }
            })
            .collect(),
        areas: world
            .areas()
            .iter()
            .map(|a| AreaJson { id: a.id, nodes: a.nodes.iter().map(|n| [n.x, n.y]).collect(), wall: a.wall.name().into() })
            .collect(),
    }
}

pub fn map_from_json(m: &MapJson) -> Result<WorldMap, FormatError> {
    let edges = m.edges.iter().map(|&e| edge_from(e)).collect::<Result<Vec<_>, _>>()?;
    let mut items = BTreeMap::new();
    for (k, v) in &m.items {
        let (x, y) = k.split_once(',').ok_or_else(|| invalid(format!("item key {k:?} is not \"x,y\"")))?;
        let node = match (x.trim().parse(), y.trim().parse()) {
            (Ok(x), Ok(y)) => Node::new(x, y),
            _ => return Err(invalid(format!("item key {k:?} is not \"x,y\""))),
        };
        items.insert(node, parse_name("item", v, Item::parse)?);
    }
    let halls = m
        .halls
        .iter()
        .map(|h| {
            Ok(Hall {
                axis: parse_name("axis", &h.axis, Axis::parse)?,
                edges: h.edges.iter().map(|&e| edge_from(e)).collect::<Result<_, _>>()?,
                floor: parse_name("floor", &h.floor, FloorPattern::parse)?,
            })
        })
        .collect::<Result<Vec<_>, FormatError>>()?;
    let mut attrs = BTreeMap::new();
    for a in &m.edge_attrs {
        let attr = EdgeAttr {
            floor: parse_name("floor", &a.floor, FloorPattern::parse)?,
            wall: parse_name("wall painting", &a.wall, WallPainting::parse)?,
        };
        if attrs.insert(edge_from(a.edge)?, attr).is_some() {
            return Err(invalid(format!("duplicate attributes for edge {:?}", a.edge)));
        }
    }
    let areas = m
        .areas
        .iter()
        .map(|a| {
            Ok(Area {
                id: a.id,
                nodes: a.nodes.iter().map(|&[x, y]| Node::new(x, y)).collect(),
                wall: parse_name("wall painting", &a.wall, WallPainting::parse)?,
            })
        })
        .collect::<Result<Vec<_>, FormatError>>()?;
    WorldMap::from_parts(m.width, m.height, edges, items, halls, attrs, areas).map_err(|e| invalid(e.to_string()))
}

pub fn instance_to_json(inst: &Instance) -> InstanceJson {
    InstanceJson {
        id: inst.id,
        seed: inst.seed,
        category: inst.category.name().into(),
        start: PoseJson { x: inst.start.x, y: inst.start.y, dir: DirName(inst.start.dir) },
        goal: NodeJson { x: inst.goal.x, y: inst.goal.y },
        instruction: inst.instruction.clone(),
        actions: inst.actions.iter().map(|a| a.name().to_string()).collect(),
        map: map_to_json(&inst.world),
    }
}

pub fn instance_from_json(j: &InstanceJson) -> Result<Instance, FormatError> {
    let world = map_from_json(&j.map)?;
    let start = Pose::new(j.start.x, j.start.y, j.start.dir.0);
    let goal = Node::new(j.goal.x, j.goal.y);
    if !world.contains(start.node()) || !world.contains(goal) {
        return Err(invalid("start or goal lies outside the map"));
    }
    Ok(Instance {
        id: j.id,
        seed: j.seed,
        category: parse_name("category", &j.category, TaskCategory::parse)?,
        world,
        start,
        goal,
        instruction: j.instruction.clone(),
        actions: parse_actions(j.actions.iter().map(String::as_str))?,
    })
}

pub fn parse_actions<'a>(names: impl IntoIterator<Item = &'a str>) -> Result<Vec<Action>, FormatError> {
    names.into_iter().map(|s| parse_name("action", s, |t| Action::parse(&t.to_ascii_uppercase()))).collect()
}

/// One JSONL line, without the newline.
pub fn instance_line(inst: &Instance) -> String {
    serde_json::to_string(&instance_to_json(inst)).expect("instance JSON is always serializable")
}

pub fn parse_instance_line(line: &str) -> Result<Instance, FormatError> {
    let j: InstanceJson = serde_json::from_str(line).map_err(|e| invalid(e.to_string()))?;
    instance_from_json(&j)
}

/// Writes instances one per line.
pub struct InstanceWriter<W: Write> {
    out: W,
    written: u64,
}

impl<W: Write> InstanceWriter<W> {
    pub fn new(out: W) -> Self {
        InstanceWriter { out, written: 0 }
    }

    pub fn write(&mut self, inst: &Instance) -> io::Result<()> {
        serde_json::to_writer(&mut self.out, &instance_to_json(inst))?;
        self.out.write_all(b"\n")?;
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> u64 {
        self.written
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Streams instances from JSONL, skipping blank lines. Errors carry the
/// 1-based line number.
pub struct InstanceReader<R: BufRead> {
    input: R,
    line: usize,
    buf: String,
}

impl<R: BufRead> InstanceReader<R> {
    pub fn new(input: R) -> Self {
        InstanceReader { input, line: 0, buf: String::new() }
    }
}

impl<R: BufRead> Iterator for InstanceReader<R> {
    type Item = Result<Instance, FormatError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            self.line += 1;
            match self.input.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) if self.buf.trim().is_empty() => continue,
                Ok(_) => {
                    let line = self.line;
                    return Some(
                        parse_instance_line(self.buf.trim_end())
                            .map_err(|e| FormatError::Line { line, message: e.to_string() }),
                    );
                }
                Err(e) => return Some(Err(FormatError::Line { line: self.line, message: e.to_string() })),
            }
        }
    }
}

pub fn write_instances<'a>(path: &Path, instances: impl IntoIterator<Item = &'a Instance>) -> Result<u64, FormatError> {
    let file = File::create(path).map_err(|e| FormatError::io(path, e))?;
    let mut w = InstanceWriter::new(BufWriter::new(file));
    for inst in instances {
        w.write(inst).map_err(|e| FormatError::io(path, e))?;
    }
    let n = w.written();
    w.finish().map_err(|e| FormatError::io(path, e))?;
    Ok(n)
}

pub fn open_instances(path: &Path) -> Result<InstanceReader<BufReader<File>>, FormatError> {
    let file = File::open(path).map_err(|e| FormatError::io(path, e))?;
    Ok(InstanceReader::new(BufReader::new(file)))
}

pub fn read_instances(path: &Path) -> Result<Vec<Instance>, FormatError> {
    open_instances(path)?.collect()
}

pub fn read_map(path: &Path) -> Result<WorldMap, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    let m: MapJson = serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    map_from_json(&m)
}

pub fn write_map(path: &Path, world: &WorldMap) -> Result<(), FormatError> {
    let text = serde_json::to_string_pretty(&map_to_json(world)).expect("map JSON is always serializable");
    std::fs::write(path, text + "\n").map_err(|e| FormatError::io(path, e))
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SplitJson {
    pub seed: u64,
    pub fractions: [f64; 3],
    pub train: Vec<u64>,
    pub dev: Vec<u64>,
    pub test: Vec<u64>,
    /// Category name to `[train, dev, test]` counts.
    pub per_category: BTreeMap<String, [usize; 3]>,
}

impl SplitJson {
    pub fn new(split: &DatasetSplit, fractions: [f64; 3], seed: u64) -> Self {
        SplitJson {
            seed,
            fractions,
            train: split.train.clone(),
            dev: split.dev.clone(),
            test: split.test.clone(),
            per_category: split.per_category.iter().map(|(c, n)| (c.name().to_string(), *n)).collect(),
        }
    }
}

pub fn write_split(path: &Path, split: &SplitJson) -> Result<(), FormatError> {
    let text = serde_json::to_string_pretty(split).expect("split JSON is always serializable");
    std::fs::write(path, text + "\n").map_err(|e| FormatError::io(path, e))
}

pub fn read_split(path: &Path) -> Result<SplitJson, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}
