//! Delay-block construction.
//!
//! A scalar observable series is cut into non-overlapping, contiguous
//! windows of length `block_len`; block `k` (0-based) holds samples
//! `k·block_len .. (k+1)·block_len`. Trailing samples that do not fill a
//! whole block are discarded. Stacking consecutive blocks as vectors gives
//! the lifted state sequence on which the linear model is identified.

use nalgebra::DVector;
use thiserror::Error;

use crate::sim::Observable;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("series of length {got} is too short: need at least {needed} samples (two blocks)")]
    InsufficientData { needed: usize, got: usize },
    #[error("block length must be at least 1, got {0}")]
    InvalidBlockLen(usize),
    #[error("blocks must be nonempty and of equal length")]
    MalformedBlocks,
}

/// Delay-embedding configuration: block length and observable choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DelayConfig {
    /// Number of delay coordinates per block (≥ 2).
    pub block_len: usize,
    pub observable: Observable,
}

/// A series arranged into `q` non-overlapping delay blocks of length
/// `block_len`, each a column vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockData {
    blocks: Vec<DVector<f64>>,
    block_len: usize,
    sample_period: f64,
}

impl BlockData {
    /// Assemble block data from pre-built blocks (all of equal, nonzero
    /// length). Mostly useful for synthetic inputs; real series go through
    /// [`build_blocks`].
    pub fn from_blocks(blocks: Vec<DVector<f64>>, sample_period: f64) -> Result<Self, EmbedError> {
        let block_len = blocks.first().map(|b| b.len()).unwrap_or(0);
        if block_len == 0 || blocks.iter().any(|b| b.len() != block_len) {
            return Err(EmbedError::MalformedBlocks);
        }
        Ok(Self { blocks, block_len, sample_period })
    }

    pub fn blocks(&self) -> &[DVector<f64>] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &DVector<f64> {
        &self.blocks[k]
    }

    /// Number of blocks.
    pub fn q(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    /// Time advanced by one block-to-block transition.
    pub fn block_period(&self) -> f64 {
        self.sample_period * self.block_len as f64
    }
}

/// Partition `series` into `floor(N / block_len)` non-overlapping blocks,
/// discarding the trailing remainder. Requires at least two full blocks so
/// that one block transition exists.
pub fn build_blocks(
    series: &[f64],
    block_len: usize,
    sample_period: f64,
) -> Result<BlockData, EmbedError> {
    if block_len == 0 {
        return Err(EmbedError::InvalidBlockLen(block_len));
    }
    if series.len() < 2 * block_len {
        return Err(EmbedError::InsufficientData {
            needed: 2 * block_len,
            got: series.len(),
        });
    }
    let blocks = series
        .chunks_exact(block_len)
        .map(DVector::from_column_slice)
        .collect();
    Ok(BlockData { blocks, block_len, sample_period })
}

/// Concatenate the blocks back into a flat series of `q · block_len` samples.
/// Inverse of [`build_blocks`] up to the discarded remainder.
pub fn flatten_blocks(data: &BlockData) -> Vec<f64> {
    let mut out = Vec::with_capacity(data.q() * data.block_len());
    for block in &data.blocks {
        out.extend(block.iter().copied());
    }
    out
}
