use std::fmt;

use serde::{Serialize, Serializer};

use super::TileGrid;
use crate::{Error, Result};

const WORD: usize = 64;

/// Subset of the tiles of one [`TileGrid`], stored as a fixed-length bit
/// vector. Tile `i` (1-based) lives in bit `i - 1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TileSet {
    grid: TileGrid,
    words: Vec<u64>,
}

impl TileSet {
    pub fn empty(grid: TileGrid) -> Self {
        let n = grid.tile_count().div_ceil(WORD);
        Self {
            grid,
            words: vec![0; n],
        }
    }

    pub fn full(grid: TileGrid) -> Self {
        let mut set = Self::empty(grid);
        for i in 1..=grid.tile_count() {
            set.bit_on(i - 1);
        }
        set
    }

    pub fn from_indices<I>(grid: TileGrid, indices: I) -> Result<Self>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut set = Self::empty(grid);
        for i in indices {
            set.insert(i)?;
        }
        Ok(set)
    }

    pub fn grid(&self) -> TileGrid {
        self.grid
    }

    /// Adds tile `index`; returns whether it was newly inserted.
    pub fn insert(&mut self, index: usize) -> Result<bool> {
        self.grid.check_index(index)?;
        let fresh = !self.bit(index - 1);
        self.bit_on(index - 1);
        Ok(fresh)
    }

    pub fn contains(&self, index: usize) -> bool {
        index >= 1 && index <= self.grid.tile_count() && self.bit(index - 1)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Tile indices in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(k * WORD + bit + 1)
            })
        })
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn union(&self, other: &TileSet) -> Result<TileSet> {
        self.same_grid(other)?;
        Ok(self.zip_with(other, |a, b| a | b))
    }

    pub fn intersection(&self, other: &TileSet) -> Result<TileSet> {
        self.same_grid(other)?;
        Ok(self.zip_with(other, |a, b| a & b))
    }

    pub fn difference(&self, other: &TileSet) -> Result<TileSet> {
        self.same_grid(other)?;
        Ok(self.zip_with(other, |a, b| a & !b))
    }

    pub fn complement(&self) -> TileSet {
        let mut out = self.zip_with(self, |a, _| !a);
        // clear padding bits past M
        let m = self.grid.tile_count();
        if m % WORD != 0 {
            if let Some(last) = out.words.last_mut() {
                *last &= (1u64 << (m % WORD)) - 1;
            }
        }
        out
    }

    /// Inner product of the two indicator vectors, `|self ∩ other|`.
    pub fn overlap(&self, other: &TileSet) -> Result<usize> {
        self.same_grid(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum())
    }

    pub fn is_subset(&self, other: &TileSet) -> bool {
        self.grid == other.grid
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &TileSet) -> bool {
        self.grid == other.grid
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(a, b)| a & b == 0)
    }

    fn bit(&self, bit: usize) -> bool {
        self.words[bit / WORD] >> (bit % WORD) & 1 == 1
    }

    fn bit_on(&mut self, bit: usize) {
        self.words[bit / WORD] |= 1 << (bit % WORD);
    }

    fn zip_with(&self, other: &TileSet, f: impl Fn(u64, u64) -> u64) -> TileSet {
        TileSet {
            grid: self.grid,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    fn same_grid(&self, other: &TileSet) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::invalid(
                "tile set",
                format!("grid mismatch: {} vs {}", self.grid, other.grid),
            ));
        }
        Ok(())
    }
}

impl fmt::Debug for TileSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for TileSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}
