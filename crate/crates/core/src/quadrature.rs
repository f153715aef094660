//! Trapezoidal integration over the unit fundamental domain of torus
//! models, against the measure `det g · dx dy`.
//!
//! The rule is spectrally accurate for smooth periodic integrands. Real
//! directions the integrand does not depend on are collapsed to a single
//! node (exact, since the domain has unit length in every direction).

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Model;

/// Uniform lattice `j/N` in each active real direction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Grid {
    pub nodes_per_dim: usize,
    /// Real variable indices that are sampled; all others sit at 0.
    pub active: Vec<usize>,
    pub real_dim: usize,
}

impl Grid {
    /// Every real direction of the model sampled.
    pub fn full(m: &Model, nodes_per_dim: usize) -> Grid {
        Grid { nodes_per_dim, active: (0..2 * m.dim()).collect(), real_dim: 2 * m.dim() }
    }

    /// Only the directions the metric varies along, plus `extra`.
    pub fn reduced(m: &Model, nodes_per_dim: usize, extra: &[usize]) -> Grid {
        let mut active = m.active_vars();
        active.extend(extra.iter().copied().filter(|&v| v < 2 * m.dim()));
        active.sort_unstable();
        active.dedup();
        Grid { nodes_per_dim, active, real_dim: 2 * m.dim() }
    }

    pub fn len(&self) -> usize {
        self.nodes_per_dim.pow(self.active.len() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.len() as f64
    }

    /// Node `k` in lexicographic order, first active variable slowest.
    pub fn node(&self, mut k: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.real_dim];
        let n = self.nodes_per_dim;
        for &v in self.active.iter().rev() {
            x[v] = (k % n) as f64 / n as f64;
            k /= n;
        }
        x
    }

    pub fn nodes(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|k| self.node(k))
    }
}

/// Pairwise summation; the tree shape depends only on the length, so the
/// result is reproducible bit-for-bit.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2..=8 => v.iter().sum(),
        len => {
            let (a, b) = v.split_at(len / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

fn require_torus(m: &Model) -> Result<()> {
    if m.is_torus_type() {
        Ok(())
    } else {
        Err(Error::UnsupportedModel(format!(
            "{} has no periodic fundamental domain to integrate over",
            m.kind_name()
        )))
    }
}

/// Evaluate `f` at every node in parallel, in node order.
pub fn evaluate<T, F>(grid: &Grid, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&[f64]) -> Result<T> + Sync,
{
    (0..grid.len()).into_par_iter().map(|k| f(&grid.node(k))).collect()
}

/// `Σ w f(x) det g(x)` for a vector-valued integrand with `k` components.
pub fn integrate_many<F>(m: &Model, grid: &Grid, k: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    require_torus(m)?;
    let rows = evaluate(grid, |x| {
        let det = m.metric(x)?.det();
        let mut v = f(x)?;
        if v.len() != k {
            return Err(Error::DimensionMismatch { expected: k, found: v.len() });
        }
        v.iter_mut().for_each(|c| *c *= det);
        Ok(v)
    })?;
    let w = grid.weight();
    Ok((0..k)
        .map(|c| {
            let col: Vec<f64> = rows.iter().map(|r| r[c]).collect();
            w * pairwise_sum(&col)
        })
        .collect())
}

/// `∫ f det g` over the fundamental domain.
pub fn integrate<F>(m: &Model, grid: &Grid, f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    Ok(integrate_many(m, grid, 1, |x| Ok(vec![f(x)?]))?[0])
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub grids: Vec<usize>,
    pub values: Vec<f64>,
    /// `|values[i+1] − values[i]|`.
    pub differences: Vec<f64>,
    /// Last difference below `1e−8`, reached without the differences
    /// growing on the way.
    pub spectral: bool,
}

/// Integrate on each grid size (active directions of the model only).
pub fn convergence_report<F>(m: &Model, f: F, sizes: &[usize]) -> Result<ConvergenceReport>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if sizes.len() < 3 {
        return Err(Error::Domain(format!("need at least 3 grid sizes, got {}", sizes.len())));
    }
    let values = sizes
        .iter()
        .map(|&n| integrate(m, &Grid::reduced(m, n, &[]), &f))
        .collect::<Result<Vec<_>>>()?;
    let differences: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let last = *differences.last().expect("three sizes");
    let monotone = differences.windows(2).all(|w| w[1] <= w[0] || w[1] < 1e-12);
    Ok(ConvergenceReport { grids: sizes.to_vec(), values, differences, spectral: last < 1e-8 && monotone })
}
