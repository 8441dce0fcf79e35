//! Equirectangular tile grid and spherical viewpoint geometry.
//!
//! Tiles are numbered 1..=M row-major starting at the top-left corner of the
//! panorama (yaw −π, pitch +π/2). Tile membership is decided by tile centers.

mod tileset;

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use tileset::TileSet;

/// Head orientation at time `t`: yaw in [−π, π), pitch in [−π/2, π/2].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Viewpoint {
    pub yaw: f64,
    pub pitch: f64,
    pub t: f64,
}

impl Viewpoint {
    pub fn new(yaw: f64, pitch: f64, t: f64) -> Result<Self> {
        let vp = Self { yaw, pitch, t };
        vp.validate()?;
        Ok(vp)
    }

    /// Builds a viewpoint from unconstrained angles: yaw is wrapped onto
    /// [−π, π) and pitch is clamped to the poles.
    pub fn normalized(yaw: f64, pitch: f64, t: f64) -> Self {
        Self {
            yaw: wrap_yaw(yaw),
            pitch: pitch.clamp(-FRAC_PI_2, FRAC_PI_2),
            t,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.yaw.is_finite() && (-PI..PI).contains(&self.yaw)) {
            return Err(Error::invalid("viewpoint", format!("yaw {} outside [-pi, pi)", self.yaw)));
        }
        if !(self.pitch.is_finite() && (-FRAC_PI_2..=FRAC_PI_2).contains(&self.pitch)) {
            return Err(Error::invalid(
                "viewpoint",
                format!("pitch {} outside [-pi/2, pi/2]", self.pitch),
            ));
        }
        if !(self.t.is_finite() && self.t >= 0.0) {
            return Err(Error::invalid("viewpoint", format!("timestamp {} is negative", self.t)));
        }
        Ok(())
    }

    fn unit_vector(&self) -> [f64; 3] {
        let (sy, cy) = self.yaw.sin_cos();
        let (sp, cp) = self.pitch.sin_cos();
        [cp * cy, cp * sy, sp]
    }
}

/// Wraps an angle onto [−π, π).
pub fn wrap_yaw(yaw: f64) -> f64 {
    let w = (yaw + PI).rem_euclid(TAU) - PI;
    if w >= PI {
        -PI
    } else {
        w
    }
}

/// Signed shortest-arc difference `to − from`, in [−π, π).
pub fn yaw_delta(from: f64, to: f64) -> f64 {
    wrap_yaw(to - from)
}

/// Great-circle central angle between two gaze directions, in [0, π].
pub fn angular_distance(a: &Viewpoint, b: &Viewpoint) -> f64 {
    unit_distance(&a.unit_vector(), &b.unit_vector())
}

fn unit_distance(u: &[f64; 3], v: &[f64; 3]) -> f64 {
    let cross = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let cos = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    sin.atan2(cos)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TileGrid {
    rows: usize,
    cols: usize,
}

impl TileGrid {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(
                "tile grid",
                format!("{rows}x{cols} has no tiles"),
            ));
        }
        Ok(Self { rows, cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// M, the number of tiles in a segment.
    pub fn tile_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index == 0 || index > self.tile_count() {
            return Err(Error::TileOutOfRange {
                index,
                max: self.tile_count(),
            });
        }
        Ok(())
    }

    /// 1-based (row, col) of a tile.
    pub fn row_col(&self, index: usize) -> Result<(usize, usize)> {
        self.check_index(index)?;
        Ok(((index - 1) / self.cols + 1, (index - 1) % self.cols + 1))
    }

    pub fn index_of(&self, row: usize, col: usize) -> usize {
        (row - 1) * self.cols + col
    }

    fn tile_width(&self) -> f64 {
        TAU / self.cols as f64
    }

    fn tile_height(&self) -> f64 {
        PI / self.rows as f64
    }

    /// Tile whose angular rectangle contains the viewpoint.
    pub fn tile_containing(&self, vp: &Viewpoint) -> usize {
        let col = ((wrap_yaw(vp.yaw) + PI) / self.tile_width()).floor() as usize % self.cols;
        let row = ((FRAC_PI_2 - vp.pitch) / self.tile_height()).floor().max(0.0) as usize;
        self.index_of(row.min(self.rows - 1) + 1, col + 1)
    }

    /// 8-neighbourhood of a tile, wrapping across yaw and clamped at the poles.
    pub fn neighbors(&self, index: usize) -> Result<Vec<usize>> {
        self.check_index(index)?;
        let mut out = Vec::with_capacity(8);
        self.for_each_neighbor(index, |n| {
            if !out.contains(&n) {
                out.push(n);
            }
        });
        Ok(out)
    }

    // May visit a neighbour twice on grids narrower than three columns.
    fn for_each_neighbor(&self, index: usize, mut f: impl FnMut(usize)) {
        let row = (index - 1) / self.cols + 1;
        let col = (index - 1) % self.cols + 1;
        for r in row.saturating_sub(1).max(1)..=(row + 1).min(self.rows) {
            for dc in [self.cols - 1, 0, 1] {
                let c = (col - 1 + dc) % self.cols + 1;
                let n = self.index_of(r, c);
                if n != index {
                    f(n);
                }
            }
        }
    }
}

impl fmt::Display for TileGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

/// Center of a tile in equirectangular angular coordinates (t = 0).
pub fn tile_center(grid: &TileGrid, index: usize) -> Result<Viewpoint> {
    let (row, col) = grid.row_col(index)?;
    Ok(Viewpoint {
        yaw: -PI + (col as f64 - 0.5) * grid.tile_width(),
        pitch: FRAC_PI_2 - (row as f64 - 0.5) * grid.tile_height(),
        t: 0.0,
    })
}

// Distances are compared on a 1e-12 rad lattice so that tiles which are
// symmetric about the viewpoint tie exactly and fall back to index order.
fn distance_key(d: f64) -> i64 {
    (d * 1e12).round() as i64
}

/// The `n` tiles whose centers are nearest to `vp`, ties broken by ascending
/// tile index.
pub fn top_n_tiles(grid: &TileGrid, vp: &Viewpoint, n: usize) -> Result<TileSet> {
    let m = grid.tile_count();
    if n == 0 || n > m {
        return Err(Error::invalid("tile count", format!("n = {n} outside 1..={m}")));
    }
    let mut ranked: Vec<(i64, usize)> = tile_distances(grid, vp)
        .map(|(i, d)| (distance_key(d), i))
        .collect();
    ranked.sort_unstable();
    TileSet::from_indices(*grid, ranked.into_iter().take(n).map(|(_, i)| i))
}

/// Tiles whose centers lie within half of `fov_diameter_deg` of `vp`, plus
/// the tile containing `vp`.
pub fn fov_tiles(grid: &TileGrid, vp: &Viewpoint, fov_diameter_deg: f64) -> Result<TileSet> {
    if !(0.0..=360.0).contains(&fov_diameter_deg) {
        return Err(Error::invalid(
            "fov diameter",
            format!("{fov_diameter_deg} degrees outside [0, 360]"),
        ));
    }
    let radius = (fov_diameter_deg / 2.0).to_radians();
    let mut set = TileSet::empty(*grid);
    set.insert(grid.tile_containing(vp))?;
    let limit = distance_key(radius);
    for (i, d) in tile_distances(grid, vp) {
        if distance_key(d) <= limit {
            set.insert(i)?;
        }
    }
    Ok(set)
}

// Same values as `angular_distance(&tile_center(grid, i), vp)` for every
// tile, with the trigonometry done once per row and column.
fn tile_distances<'a>(grid: &'a TileGrid, vp: &Viewpoint) -> impl Iterator<Item = (usize, f64)> + 'a {
    let v = vp.unit_vector();
    let rows: Vec<(f64, f64)> = (1..=grid.rows)
        .map(|r| (FRAC_PI_2 - (r as f64 - 0.5) * grid.tile_height()).sin_cos())
        .collect();
    let cols: Vec<(f64, f64)> = (1..=grid.cols)
        .map(|c| (-PI + (c as f64 - 0.5) * grid.tile_width()).sin_cos())
        .collect();
    (1..=grid.tile_count()).map(move |i| {
        let (sp, cp) = rows[(i - 1) / grid.cols];
        let (sy, cy) = cols[(i - 1) % grid.cols];
        (i, unit_distance(&[cp * cy, cp * sy, sp], &v))
    })
}

/// Grows a region around `seed` one 8-neighbour ring at a time and returns
/// `count` new tiles disjoint from the seed. Whole rings are taken while they
/// fit; the last, partial ring is filled in ascending tile order.
pub fn ring_expand(grid: &TileGrid, seed: &TileSet, count: usize) -> Result<TileSet> {
    if seed.grid() != *grid {
        return Err(Error::invalid("seed", "seed belongs to a different grid"));
    }
    let available = grid.tile_count() - seed.len();
    if count > available {
        return Err(Error::NotEnoughTiles {
            requested: count,
            available,
        });
    }
    let mut picked = TileSet::empty(*grid);
    if count == 0 {
        return Ok(picked);
    }
    if seed.is_empty() {
        return Err(Error::invalid("seed", "cannot expand around an empty region"));
    }
    let mut region = seed.clone();
    // tiles inside the region but off its frontier have no outside neighbours
    let mut frontier = seed.clone();
    let mut remaining = count;
    while remaining > 0 {
        let ring = outer_ring(grid, &region, &frontier);
        debug_assert!(!ring.is_empty(), "a proper connected region always has a ring");
        let take = if ring.len() <= remaining {
            ring
        } else {
            TileSet::from_indices(*grid, ring.iter().take(remaining))?
        };
        remaining -= take.len();
        picked = picked.union(&take)?;
        region = region.union(&take)?;
        frontier = take;
    }
    Ok(picked)
}

fn outer_ring(grid: &TileGrid, region: &TileSet, frontier: &TileSet) -> TileSet {
    let mut ring = TileSet::empty(*grid);
    for i in frontier.iter() {
        grid.for_each_neighbor(i, |n| {
            if !region.contains(n) {
                ring.insert(n).expect("neighbour within grid");
            }
        });
    }
    ring
}
