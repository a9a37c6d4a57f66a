//! Agent-centric perception: the 5×20 grid encoding and the bag-of-features
//! baseline encoding.
//!
//! Cell bit layout (20 bits): 0–5 items, 6–13 floors, 14–16 wall paintings,
//! 17 node, 18 hall, 19 non-walkable. Inventories follow the declaration
//! order of [`Item`], [`FloorPattern`] and [`WallPainting`].

use alloc::vec::Vec;
use core::fmt;

use crate::worldsim::{Direction, FloorPattern, Item, Pose, WallPainting, WorldMap};

pub const CELL_BITS: usize = 20;
pub const GRID_ROWS: usize = 5;
pub const GRID_COLS: usize = 20;
/// Item, floor and wall bits.
pub const MATERIAL_BITS: usize = 17;
pub const BOF_BITS: usize = 4 * MATERIAL_BITS + 6;

const ITEM_BASE: u32 = 0;
const FLOOR_BASE: u32 = 6;
const WALL_BASE: u32 = 14;
const NODE_FLAG: u32 = 1 << 17;
const HALL_FLAG: u32 = 1 << 18;
const BLOCKED_FLAG: u32 = 1 << 19;
const ITEM_MASK: u32 = 0b111111;
const FLOOR_MASK: u32 = 0xff << FLOOR_BASE;
const WALL_MASK: u32 = 0b111 << WALL_BASE;
const MATERIAL_MASK: u32 = (1 << MATERIAL_BITS) - 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PerceptError {
    #[error("line of sight of {len} cells does not fit in {GRID_COLS} columns")]
    Overflow { len: usize },
}

/// One grid cell as a 20-bit binary vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Cell(u32);

impl Cell {
    pub fn node(item: Option<Item>) -> Self {
        Cell(NODE_FLAG | item.map_or(0, |it| 1 << (ITEM_BASE + it.index() as u32)))
    }

    pub fn hall(floor: FloorPattern, wall: WallPainting) -> Self {
        Cell(HALL_FLAG | 1 << (FLOOR_BASE + floor.index() as u32) | 1 << (WALL_BASE + wall.index() as u32))
    }

    pub fn nonwalkable() -> Self {
        Cell(BLOCKED_FLAG)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn bit(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn is_node(self) -> bool {
        self.0 & NODE_FLAG != 0
    }

    pub fn is_hall(self) -> bool {
        self.0 & HALL_FLAG != 0
    }

    pub fn is_nonwalkable(self) -> bool {
        self.0 & BLOCKED_FLAG != 0
    }

    pub fn material(self) -> u32 {
        self.0 & MATERIAL_MASK
    }

    pub fn item(self) -> Option<Item> {
        let m = self.0 & ITEM_MASK;
        (m != 0).then(|| Item::ALL[m.trailing_zeros() as usize])
    }

    /// Whether the cell satisfies the layout rules for its type flag.
    pub fn is_well_formed(self) -> bool {
        let flags = [NODE_FLAG, HALL_FLAG, BLOCKED_FLAG].iter().filter(|&&f| self.0 & f != 0).count();
        if flags != 1 || self.0 >> CELL_BITS != 0 {
            return false;
        }
        let items = (self.0 & ITEM_MASK).count_ones();
        let floors = (self.0 & FLOOR_MASK).count_ones();
        let walls = (self.0 & WALL_MASK).count_ones();
        if self.is_node() {
            items <= 1 && floors == 0 && walls == 0
        } else if self.is_hall() {
            items == 0 && floors == 1 && walls == 1
        } else {
            self.material() == 0
        }
    }

    /// Two-character label used by the text dump.
    pub fn mnemonic(self) -> [char; 2] {
        const ITEMS: [char; 6] = ['B', 'C', 'E', 'H', 'L', 'S'];
        const FLOORS: [char; 8] = ['u', 'k', 'c', 'f', 'g', 'v', 'w', 'y'];
        const WALLS: [char; 3] = ['b', 'f', 't'];
        if self.is_node() {
            ['N', self.item().map_or('.', |it| ITEMS[it.index()])]
        } else if self.is_hall() {
            let f = ((self.0 & FLOOR_MASK) >> FLOOR_BASE).trailing_zeros() as usize;
            let w = ((self.0 & WALL_MASK) >> WALL_BASE).trailing_zeros() as usize;
            [FLOORS[f], WALLS[w]]
        } else {
            ['#', '#']
        }
    }
}

/// Cells visible from `pose`'s node looking towards `dir`: the node itself,
/// then alternating hall and node cells until the first closed side.
pub fn line_of_sight(world: &WorldMap, pose: Pose, dir: Direction) -> Vec<Cell> {
    let mut at = pose.node();
    let mut cells = Vec::with_capacity(8);
    cells.push(Cell::node(world.item(at)));
    while let Some((_, attr)) = world.edge_toward(at, dir) {
        at = world.neighbor(at, dir).expect("open edge leads to a node");
        cells.push(Cell::hall(attr.floor, attr.wall));
        cells.push(Cell::node(world.item(at)));
    }
    cells
}

/// The agent's view: rows are facing, right, back, left, facing again.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PerceptGrid {
    rows: [[Cell; GRID_COLS]; GRID_ROWS],
}

/// Directions of grid rows 0–3 relative to the agent heading.
pub fn row_directions(facing: Direction) -> [Direction; 4] {
    [facing, facing.right(), facing.opposite(), facing.left()]
}

pub fn encode_grid(world: &WorldMap, pose: Pose) -> Result<PerceptGrid, PerceptError> {
    let mut rows = [[Cell::nonwalkable(); GRID_COLS]; GRID_ROWS];
    for (r, dir) in row_directions(pose.dir).into_iter().enumerate() {
        let los = line_of_sight(world, pose, dir);
        if los.len() > GRID_COLS {
            return Err(PerceptError::Overflow { len: los.len() });
        }
        rows[r][..los.len()].copy_from_slice(&los);
    }
    rows[4] = rows[0];
    Ok(PerceptGrid { rows })
}

impl PerceptGrid {
    pub fn cell(&self, row: usize, col: usize) -> Cell {
        self.rows[row][col]
    }

    pub fn row(&self, row: usize) -> &[Cell; GRID_COLS] {
        &self.rows[row]
    }

    /// Number of values in [`write_values`](Self::write_values) output.
    pub const VALUES: usize = GRID_ROWS * GRID_COLS * CELL_BITS;

    /// Fill `out` with 0/1 values in (row, column, bit) order.
    pub fn write_values(&self, out: &mut [f64]) {
        assert_eq!(out.len(), Self::VALUES);
        for (r, row) in self.rows.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                let base = (r * GRID_COLS + c) * CELL_BITS;
                for b in 0..CELL_BITS {
                    out[base + b] = if cell.bit(b) { 1.0 } else { 0.0 };
                }
            }
        }
    }
}

impl fmt::Display for PerceptGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.rows {
            for (c, cell) in row.iter().enumerate() {
                let [a, b] = cell.mnemonic();
                if c > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{a}{b}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Bag-of-features percept: per-direction unions of visible material bits
/// (facing, right, back, left) followed by the agent node's item bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BofVector(u128);

impl BofVector {
    pub fn bit(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn bits(self) -> u128 {
        self.0
    }

    /// 17-bit block for row direction `k` (0 facing … 3 left).
    pub fn block(self, k: usize) -> u32 {
        (self.0 >> (k * MATERIAL_BITS)) as u32 & MATERIAL_MASK
    }

    pub fn agent_items(self) -> u32 {
        (self.0 >> (4 * MATERIAL_BITS)) as u32 & ITEM_MASK
    }

    pub fn write_values(&self, out: &mut [f64]) {
        assert_eq!(out.len(), BOF_BITS);
        for (i, v) in out.iter_mut().enumerate() {
            *v = if self.bit(i) { 1.0 } else { 0.0 };
        }
    }
}

pub fn encode_bof(world: &WorldMap, pose: Pose) -> BofVector {
    let mut bits = 0u128;
    for (k, dir) in row_directions(pose.dir).into_iter().enumerate() {
        let block = line_of_sight(world, pose, dir).iter().skip(1).fold(0, |acc, c| acc | c.material());
        bits |= (block as u128) << (k * MATERIAL_BITS);
    }
    let here = world.item(pose.node()).map_or(0u128, |it| 1 << it.index());
    bits |= here << (4 * MATERIAL_BITS);
    BofVector(bits)
}
