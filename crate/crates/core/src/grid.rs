//! Uniform structured grid with a stair-step circular obstacle.
//!
//! Cells are stored row-major: `index = j * nx + i`, with `i` along x and `j`
//! along y. Solid cells stay in every array (holding zeros) so that all
//! fields share one layout; they carry zero weight in inner products.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{ensure, Result};

/// Boundary condition attached to one edge of the rectangular domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    /// Prescribed velocity `(u_in, 0)`; the only Dirichlet patch.
    Inflow,
    /// Zero-gradient velocity, zero pressure.
    Outflow,
    /// Zero normal velocity, zero-gradient tangential velocity.
    FreeSlip,
    /// Zero velocity.
    NoSlip,
}

impl EdgeKind {
    pub fn tag(self) -> u8 {
        match self {
            EdgeKind::Inflow => 0,
            EdgeKind::Outflow => 1,
            EdgeKind::FreeSlip => 2,
            EdgeKind::NoSlip => 3,
        }
    }
}

/// Edge conditions of the four domain sides. The obstacle is always no-slip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoundarySet {
    pub west: EdgeKind,
    pub east: EdgeKind,
    pub south: EdgeKind,
    pub north: EdgeKind,
}

impl BoundarySet {
    /// Inflow left, outflow right, free-slip top and bottom.
    pub const CHANNEL: BoundarySet = BoundarySet {
        west: EdgeKind::Inflow,
        east: EdgeKind::Outflow,
        south: EdgeKind::FreeSlip,
        north: EdgeKind::FreeSlip,
    };

    /// Closed box with no-slip walls on every side.
    pub const CAVITY: BoundarySet = BoundarySet {
        west: EdgeKind::NoSlip,
        east: EdgeKind::NoSlip,
        south: EdgeKind::NoSlip,
        north: EdgeKind::NoSlip,
    };

    pub fn kind(&self, side: Side) -> EdgeKind {
        match side {
            Side::West => self.west,
            Side::East => self.east,
            Side::South => self.south,
            Side::North => self.north,
            Side::Solid => EdgeKind::NoSlip,
        }
    }
}

impl Default for BoundarySet {
    fn default() -> Self {
        Self::CHANNEL
    }
}

/// Where a missing neighbour lies: one of the four domain edges or an obstacle face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    West,
    East,
    South,
    North,
    Solid,
}

impl Side {
    pub const ALL: [Side; 5] = [Side::West, Side::East, Side::South, Side::North, Side::Solid];

    fn slot(self) -> usize {
        self as usize
    }
}

/// Cell-centred structured grid with a masked circular obstacle.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub obstacle_center: [f64; 2],
    /// Zero means no obstacle.
    pub obstacle_radius: f64,
    /// `true` for fluid cells.
    pub cell_mask: Vec<bool>,
    pub boundaries: BoundarySet,
}

impl GridSpec {
    /// Builds the grid and its stair-step mask: a cell is solid when its centre
    /// lies inside the disk.
    pub fn new(
        nx: usize,
        ny: usize,
        lx: f64,
        ly: f64,
        obstacle_center: [f64; 2],
        obstacle_radius: f64,
        boundaries: BoundarySet,
    ) -> Result<Self> {
        ensure!(nx >= 8 && ny >= 8, Config, "grid must be at least 8x8, got {nx}x{ny}");
        ensure!(
            lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite(),
            Config,
            "domain extents must be positive"
        );
        ensure!(obstacle_radius >= 0.0, Config, "obstacle radius must be nonnegative");
        ensure!(
            boundaries.east != EdgeKind::Inflow
                && boundaries.south != EdgeKind::Inflow
                && boundaries.north != EdgeKind::Inflow,
            Config,
            "only the west edge may be an inflow"
        );
        let mask = stair_step_mask(nx, ny, lx, ly, obstacle_center, obstacle_radius);
        let grid = GridSpec {
            nx,
            ny,
            lx,
            ly,
            obstacle_center,
            obstacle_radius,
            cell_mask: mask,
            boundaries,
        };
        if obstacle_radius > 0.0 {
            let [cx, cy] = obstacle_center;
            let (dx, dy) = (grid.dx(), grid.dy());
            ensure!(
                cx - obstacle_radius > dx
                    && cx + obstacle_radius < lx - dx
                    && cy - obstacle_radius > dy
                    && cy + obstacle_radius < ly - dy,
                Config,
                "obstacle must lie strictly inside the domain with one cell of margin"
            );
        }
        Ok(grid)
    }

    /// Rebuilds a grid from stored parameters, checking the mask matches.
    pub fn validate(&self) -> Result<()> {
        let rebuilt = GridSpec::new(
            self.nx,
            self.ny,
            self.lx,
            self.ly,
            self.obstacle_center,
            self.obstacle_radius,
            self.boundaries,
        )?;
        ensure!(
            rebuilt.cell_mask == self.cell_mask,
            Config,
            "cell mask is not the stair-step discretisation of the obstacle"
        );
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn center(&self, c: usize) -> [f64; 2] {
        let (i, j) = (c % self.nx, c / self.nx);
        [(i as f64 + 0.5) * self.dx(), (j as f64 + 0.5) * self.dy()]
    }

    pub fn is_fluid(&self, c: usize) -> bool {
        self.cell_mask[c]
    }

    /// Cells held at the inflow velocity: fluid cells of the first column when
    /// the west edge is an inflow.
    pub fn is_inflow_cell(&self, c: usize) -> bool {
        self.boundaries.west == EdgeKind::Inflow && c.is_multiple_of(self.nx) && self.cell_mask[c]
    }

    /// Cell-area weights, zero on solid cells.
    pub fn weights(&self) -> Vec<f64> {
        let a = self.cell_area();
        self.cell_mask.iter().map(|&f| if f { a } else { 0.0 }).collect()
    }

    pub fn fluid_area(&self) -> f64 {
        self.cell_mask.iter().filter(|&&f| f).count() as f64 * self.cell_area()
    }
}

fn stair_step_mask(nx: usize, ny: usize, lx: f64, ly: f64, c: [f64; 2], r: f64) -> Vec<bool> {
    let (dx, dy) = (lx / nx as f64, ly / ny as f64);
    let mut mask = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x = (i as f64 + 0.5) * dx - c[0];
            let y = (j as f64 + 0.5) * dy - c[1];
            mask.push(r <= 0.0 || (x * x + y * y).sqrt() > r);
        }
    }
    mask
}

/// A cell's neighbour in one direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighbor {
    Cell(usize),
    Boundary(Side),
}

/// Face value rule at a boundary face: the face carries zero, or the value of
/// the adjacent fluid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceRule {
    Zero,
    Copy,
}

impl FaceRule {
    fn and(self, other: FaceRule) -> FaceRule {
        if self == FaceRule::Zero || other == FaceRule::Zero {
            FaceRule::Zero
        } else {
            FaceRule::Copy
        }
    }
}

/// Boundary face rules for one field, one rule per [`Side`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceRules([FaceRule; 5]);

impl FaceRules {
    pub const COPY: FaceRules = FaceRules([FaceRule::Copy; 5]);

    pub fn get(&self, side: Side) -> FaceRule {
        self.0[side.slot()]
    }

    /// Rules for a pointwise product of two fields.
    pub fn product(&self, other: &FaceRules) -> FaceRules {
        let mut out = self.0;
        for (o, r) in out.iter_mut().zip(other.0) {
            *o = o.and(r);
        }
        FaceRules(out)
    }

    /// Velocity component along x (`axis = 0`) or y (`axis = 1`).
    pub fn velocity(bc: &BoundarySet, axis: usize) -> FaceRules {
        let mut out = [FaceRule::Copy; 5];
        for side in Side::ALL {
            let normal = match side {
                Side::West | Side::East => axis == 0,
                Side::South | Side::North => axis == 1,
                Side::Solid => true,
            };
            out[side.slot()] = match bc.kind(side) {
                EdgeKind::NoSlip => FaceRule::Zero,
                EdgeKind::FreeSlip if normal => FaceRule::Zero,
                _ => FaceRule::Copy,
            };
        }
        FaceRules(out)
    }

    /// Pressure-like scalars: the complement of the normal-velocity rule, which
    /// makes the pressure gradient the exact negative adjoint of the divergence.
    pub fn pressure(bc: &BoundarySet) -> FaceRules {
        let mut out = [FaceRule::Copy; 5];
        for side in Side::ALL {
            out[side.slot()] = match bc.kind(side) {
                EdgeKind::Inflow | EdgeKind::Outflow => FaceRule::Zero,
                EdgeKind::FreeSlip | EdgeKind::NoSlip => FaceRule::Copy,
            };
        }
        FaceRules(out)
    }
}

/// Precomputed neighbour topology of a grid.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub fluid: Vec<bool>,
    /// Neighbours ordered west, east, south, north.
    pub nb: Vec<[Neighbor; 4]>,
    pub bc: BoundarySet,
}

pub const WEST: usize = 0;
pub const EAST: usize = 1;
pub const SOUTH: usize = 2;
pub const NORTH: usize = 3;

impl Mesh {
    pub fn new(grid: &GridSpec) -> Self {
        let (nx, ny) = (grid.nx, grid.ny);
        let fluid = grid.cell_mask.clone();
        let probe = |i: isize, j: isize, edge: Side| -> Neighbor {
            if i < 0 || j < 0 || i >= nx as isize || j >= ny as isize {
                Neighbor::Boundary(edge)
            } else {
                let c = j as usize * nx + i as usize;
                if fluid[c] {
                    Neighbor::Cell(c)
                } else {
                    Neighbor::Boundary(Side::Solid)
                }
            }
        };
        let mut nb = Vec::with_capacity(nx * ny);
        for j in 0..ny as isize {
            for i in 0..nx as isize {
                nb.push([
                    probe(i - 1, j, Side::West),
                    probe(i + 1, j, Side::East),
                    probe(i, j - 1, Side::South),
                    probe(i, j + 1, Side::North),
                ]);
            }
        }
        Mesh {
            nx,
            ny,
            dx: grid.dx(),
            dy: grid.dy(),
            fluid,
            nb,
            bc: grid.boundaries,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn fluid_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_cells()).filter(move |&c| self.fluid[c])
    }
}
