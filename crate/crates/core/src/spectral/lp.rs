//! Smooth Littlewood–Paley partition on the Fourier lattice.
//!
//! The bump `θ` equals 1 on `|r| ≤ 1` and 0 on `|r| ≥ 2`, with a C^∞
//! transition built from `exp(-1/t)`. Dyadic blocks are
//! `ψ_k(ξ) = θ(ξ/2^k) − θ(ξ/2^{k−1})` and the low block is `θ(ξ)`.

use serde::{Deserialize, Serialize};

use super::field::Field;
use super::grid::PeriodicGrid;
use crate::error::{LabError, Result};

/// C^∞ step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

/// The bump `θ`.
pub fn bump(r: f64) -> f64 {
    smooth_step(2.0 - r.abs())
}

/// Homogeneous dyadic symbol `ψ_k`, defined for every integer `k`.
pub fn block_symbol(k: i32, xi: f64) -> f64 {
    let scale = 2f64.powi(k);
    bump(xi / scale) - bump(2.0 * xi / scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Block {
    /// `θ(ξ)`, everything with `|ξ| ≤ 2`.
    Low,
    /// `ψ_k`, `k ≥ 1`.
    Dyadic(i32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpDecomposition {
    k_max: i32,
}

impl LpDecomposition {
    /// Smallest decomposition whose blocks cover every wavenumber of `grid`.
    pub fn for_grid(grid: &PeriodicGrid) -> Self {
        let top = grid.max_wavenumber();
        let mut k = 1;
        while 2f64.powi(k) < top {
            k += 1;
        }
        Self { k_max: k }
    }

    pub fn k_min(&self) -> i32 {
        1
    }

    pub fn k_max(&self) -> i32 {
        self.k_max
    }

    pub fn blocks(&self) -> impl Iterator<Item = Block> {
        std::iter::once(Block::Low).chain((1..=self.k_max).map(Block::Dyadic))
    }

    pub fn symbol(&self, block: Block, xi: f64) -> Result<f64> {
        match block {
            Block::Low => Ok(bump(xi)),
            Block::Dyadic(k) if (1..=self.k_max).contains(&k) => Ok(block_symbol(k, xi)),
            Block::Dyadic(k) => Err(LabError::rejected(format!("block {k} outside 1..={}", self.k_max))),
        }
    }

    pub fn project(&self, f: &Field, block: Block) -> Result<Field> {
        // validates the block index once
        self.symbol(block, 0.0)?;
        f.apply_real_multiplier(|xi| self.symbol(block, xi).expect("validated"))
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use num_complex::Complex64;

    use super::*;

    #[test]
    fn bump_plateaus_are_exact() {
        assert_eq!(bump(0.0), 1.0);
        assert_eq!(bump(1.0), 1.0);
        assert_eq!(bump(-1.0), 1.0);
        assert_eq!(bump(2.0), 0.0);
        assert_eq!(bump(-7.0), 0.0);
        assert!(bump(1.5) > 0.0 && bump(1.5) < 1.0);
        assert!((bump(1.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn partition_of_unity_on_grid() {
        let grid = PeriodicGrid::new(512, 3.0).unwrap();
        let lp = LpDecomposition::for_grid(&grid);
        for xi in grid.wavenumbers() {
            let sum: f64 = lp.blocks().map(|b| lp.symbol(b, xi).unwrap()).sum();
            assert!((sum - 1.0).abs() <= 1e-12, "xi={xi} sum={sum}");
        }
    }

    #[test]
    fn single_block_support() {
        let k = 3;
        let r = 2.0 * PI;
        let grid = PeriodicGrid::new(128, r).unwrap();
        let lp = LpDecomposition::for_grid(&grid);
        let freq = 2f64.powi(k);
        let f = Field::from_real_fn(grid, |x| (freq * x).cos());
        let pk = lp.project(&f, Block::Dyadic(k)).unwrap();
        assert!(pk.sub(&f).unwrap().sup_norm() < 1e-13);
        for other in [k - 2, k + 2] {
            let p = lp.project(&f, Block::Dyadic(other)).unwrap();
            assert!(p.sup_norm() < 1e-14);
        }
    }

    #[test]
    fn constant_lives_in_low_block() {
        let grid = PeriodicGrid::new(32, 10.0).unwrap();
        let lp = LpDecomposition::for_grid(&grid);
        let f = Field::from_real_fn(grid, |_| 2.5);
        let low = lp.project(&f, Block::Low).unwrap();
        assert!(low.sub(&f).unwrap().sup_norm() < 1e-14);
        for k in 1..=lp.k_max() {
            assert!(lp.project(&f, Block::Dyadic(k)).unwrap().sup_norm() < 1e-15);
        }
        assert_eq!(low.mean(), Complex64::new(2.5, 0.0));
    }

    #[test]
    fn out_of_range_block_rejected() {
        let grid = PeriodicGrid::new(32, 10.0).unwrap();
        let lp = LpDecomposition::for_grid(&grid);
        let f = Field::zeros(grid);
        assert!(lp.project(&f, Block::Dyadic(0)).is_err());
        assert!(lp.project(&f, Block::Dyadic(lp.k_max() + 1)).is_err());
    }
}
