use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::types::{Axis, Direction, Edge, FloorPattern, Item, Node, WallPainting};
use super::WorldError;

/// Maximal run of collinear consecutive edges, before decoration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HallRun {
    pub axis: Axis,
    pub edges: Vec<Edge>,
}

/// A corridor: one hall run and the floor pattern shared by all its edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hall {
    pub axis: Axis,
    pub edges: Vec<Edge>,
    pub floor: FloorPattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeAttr {
    pub floor: FloorPattern,
    pub wall: WallPainting,
}

/// A region of the map whose halls carry one wall painting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Area {
    pub id: usize,
    pub nodes: Vec<Node>,
    pub wall: WallPainting,
}

/// Decorated maze.
#[derive(Clone, Debug, PartialEq)]
pub struct WorldMap {
    width: usize,
    height: usize,
    edges: Vec<Edge>,
    attrs: Vec<EdgeAttr>,
    edge_hall: Vec<usize>,
    items: Vec<Option<Item>>,
    halls: Vec<Hall>,
    areas: Vec<Area>,
    links: Vec<[Option<u32>; 4]>,
}

/// Partition `edges` into maximal collinear runs.
///
/// Horizontal runs come first (by row, then start column), then vertical runs
/// (by column, then start row). Duplicate edges are ignored.
pub fn compute_halls(edges: &[Edge]) -> Vec<HallRun> {
    let mut horizontal: Vec<Edge> = edges.iter().copied().filter(|e| e.axis() == Axis::Horizontal).collect();
    let mut vertical: Vec<Edge> = edges.iter().copied().filter(|e| e.axis() == Axis::Vertical).collect();
    horizontal.sort_by_key(|e| (e.a().y, e.a().x));
    horizontal.dedup();
    vertical.sort_by_key(|e| (e.a().x, e.a().y));
    vertical.dedup();

    let mut runs = Vec::new();
    for (axis, list) in [(Axis::Horizontal, horizontal), (Axis::Vertical, vertical)] {
        let mut current: Vec<Edge> = Vec::new();
        for e in list {
            match current.last() {
                Some(prev) if prev.b() == e.a() => current.push(e),
                Some(_) => {
                    runs.push(HallRun { axis, edges: core::mem::take(&mut current) });
                    current.push(e);
                }
                None => current.push(e),
            }
        }
        if !current.is_empty() {
            runs.push(HallRun { axis, edges: current });
        }
    }
    runs
}

impl WorldMap {
    /// Assemble and validate a map from explicit parts.
    ///
    /// Checks that edges are in bounds and unique, that `halls` is the
    /// maximal-run partition of `edges` with one floor per hall, that every
    /// edge has an attribute whose floor matches its hall, and that `areas`
    /// partitions the nodes.
    pub fn from_parts(
        width: usize,
        height: usize,
        edges: Vec<Edge>,
        items: BTreeMap<Node, Item>,
        halls: Vec<Hall>,
        edge_attrs: BTreeMap<Edge, EdgeAttr>,
        areas: Vec<Area>,
    ) -> Result<Self, WorldError> {
        if width == 0 || height == 0 {
            return Err(WorldError::InvalidArgument("map dimensions must be positive"));
        }
        let mut edges = edges;
        edges.sort();
        let before = edges.len();
        edges.dedup();
        if edges.len() != before {
            return Err(WorldError::InvalidMap("duplicate edge".into()));
        }
        for e in &edges {
            if e.b().x >= width || e.b().y >= height {
                return Err(WorldError::InvalidMap(format!("edge {:?} out of bounds", e)));
            }
        }
        let mut item_vec = vec![None; width * height];
        for (n, it) in items {
            if n.x >= width || n.y >= height {
                return Err(WorldError::InvalidMap(format!("item at {:?} out of bounds", n)));
            }
            item_vec[n.y * width + n.x] = Some(it);
        }

        let runs = compute_halls(&edges);
        let mut expected: Vec<Vec<Edge>> = runs.into_iter().map(|r| r.edges).collect();
        expected.sort();
        let mut given: Vec<Vec<Edge>> = halls.iter().map(|h| h.edges.clone()).collect();
        given.sort();
        if expected != given {
            return Err(WorldError::InvalidMap("halls are not the maximal collinear runs of the edges".into()));
        }
        let mut edge_hall = vec![usize::MAX; edges.len()];
        for (hi, hall) in halls.iter().enumerate() {
            for e in &hall.edges {
                let ei = edges.binary_search(e).map_err(|_| WorldError::InvalidMap("hall edge missing".into()))?;
                edge_hall[ei] = hi;
            }
        }
        let mut attrs = Vec::with_capacity(edges.len());
        for (ei, e) in edges.iter().enumerate() {
            let attr = edge_attrs
                .get(e)
                .copied()
                .ok_or_else(|| WorldError::InvalidMap(format!("edge {:?} has no attributes", e)))?;
            if attr.floor != halls[edge_hall[ei]].floor {
                return Err(WorldError::InvalidMap(format!("edge {:?} floor differs from its hall", e)));
            }
            attrs.push(attr);
        }
        if edge_attrs.len() != edges.len() {
            return Err(WorldError::InvalidMap("attributes given for unknown edges".into()));
        }
        let mut seen = vec![false; width * height];
        for area in &areas {
            for n in &area.nodes {
                if n.x >= width || n.y >= height || core::mem::replace(&mut seen[n.y * width + n.x], true) {
                    return Err(WorldError::InvalidMap("areas do not partition the nodes".into()));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(WorldError::InvalidMap("areas do not cover all nodes".into()));
        }

        let links = build_links(width, height, &edges);
        Ok(WorldMap { width, height, edges, attrs, edge_hall, items: item_vec, halls, areas, links })
    }

    /// Undecorated map: no items, every hall floored with `floor`, every edge
    /// painted `wall`, a single area. Handy for hand-built scenarios.
    pub fn plain(
        width: usize,
        height: usize,
        edges: Vec<Edge>,
        floor: FloorPattern,
        wall: WallPainting,
    ) -> Result<Self, WorldError> {
        let halls = compute_halls(&edges)
            .into_iter()
            .map(|r| Hall { axis: r.axis, edges: r.edges, floor })
            .collect();
        let attrs = edges.iter().map(|&e| (e, EdgeAttr { floor, wall })).collect();
        let nodes = (0..width).flat_map(|x| (0..height).map(move |y| Node::new(x, y))).collect();
        Self::from_parts(width, height, edges, BTreeMap::new(), halls, attrs, vec![Area { id: 0, nodes, wall }])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn contains(&self, n: Node) -> bool {
        n.x < self.width && n.y < self.height
    }

    /// All nodes in row-major order.
    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        (0..self.height).flat_map(move |y| (0..self.width).map(move |x| Node::new(x, y)))
    }

    /// Sorted edge list.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn halls(&self) -> &[Hall] {
        &self.halls
    }

    pub fn areas(&self) -> &[Area] {
        &self.areas
    }

    pub fn item(&self, n: Node) -> Option<Item> {
        self.items[n.y * self.width + n.x]
    }

    pub fn items(&self) -> impl Iterator<Item = (Node, Item)> + '_ {
        self.nodes().filter_map(move |n| self.item(n).map(|it| (n, it)))
    }

    pub fn set_item(&mut self, n: Node, item: Option<Item>) {
        self.items[n.y * self.width + n.x] = item;
    }

    pub fn edge_attr(&self, e: &Edge) -> Option<EdgeAttr> {
        self.edges.binary_search(e).ok().map(|i| self.attrs[i])
    }

    /// Index into [`halls`](Self::halls) of the hall containing `e`.
    pub fn hall_of(&self, e: &Edge) -> Option<usize> {
        self.edges.binary_search(e).ok().map(|i| self.edge_hall[i])
    }

    pub fn set_hall_floor(&mut self, hall: usize, floor: FloorPattern) {
        self.halls[hall].floor = floor;
        for (ei, h) in self.edge_hall.iter().enumerate() {
            if *h == hall {
                self.attrs[ei].floor = floor;
            }
        }
    }

    pub fn set_edge_wall(&mut self, e: &Edge, wall: WallPainting) {
        if let Ok(i) = self.edges.binary_search(e) {
            self.attrs[i].wall = wall;
        }
    }

    pub fn area_of(&self, n: Node) -> Option<&Area> {
        self.areas.iter().find(|a| a.nodes.contains(&n))
    }

    pub fn is_open(&self, n: Node, dir: Direction) -> bool {
        self.links[n.y * self.width + n.x][dir.index()].is_some()
    }

    /// Open edge leaving `n` towards `dir`, with its attributes.
    pub fn edge_toward(&self, n: Node, dir: Direction) -> Option<(Edge, EdgeAttr)> {
        let ei = self.links[n.y * self.width + n.x][dir.index()]? as usize;
        Some((self.edges[ei], self.attrs[ei]))
    }

    /// Node reached from `n` through an open edge towards `dir`.
    pub fn neighbor(&self, n: Node, dir: Direction) -> Option<Node> {
        if self.is_open(n, dir) {
            n.offset(dir, self.width, self.height)
        } else {
            None
        }
    }

    pub fn degree(&self, n: Node) -> usize {
        self.links[n.y * self.width + n.x].iter().filter(|l| l.is_some()).count()
    }

    pub fn node_index(&self, n: Node) -> usize {
        n.y * self.width + n.x
    }
}

fn build_links(width: usize, height: usize, edges: &[Edge]) -> Vec<[Option<u32>; 4]> {
    let mut links = vec![[None; 4]; width * height];
    for (ei, e) in edges.iter().enumerate() {
        let (a, b) = (e.a(), e.b());
        let d = a.direction_to(b).expect("edge endpoints adjacent");
        links[a.y * width + a.x][d.index()] = Some(ei as u32);
        links[b.y * width + b.x][d.opposite().index()] = Some(ei as u32);
    }
    links
}
