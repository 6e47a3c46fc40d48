//! Coarse-to-fine search for the smallest ratio whose predicted retention
//! meets a floor.
//!
//! Stage 1 queries `i/19` for `i = 1..=18` in one batch. The first feasible
//! candidate `r_k` brackets the answer in `[r_{k-1}, r_k]` (with `r_0 = 0`);
//! if none is feasible, `r = 1` is tried alone and brackets `[18/19, 1]`.
//! Stage 2 queries the 18 interior points of the bracket in one batch and
//! returns the smallest feasible one, or `r_k` when none is. The resolution
//! is therefore `1/19²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GRID_DIVISIONS: usize = 19;
pub const CANDIDATES_PER_STAGE: usize = GRID_DIVISIONS - 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub r_star: f64,
    pub predicted_retention: f64,
    pub feasible: bool,
    pub stage1_candidates: Vec<(f64, f64)>,
    pub stage2_candidates: Vec<(f64, f64)>,
    /// Number of batched predictor calls made.
    pub predictor_calls: usize,
}

impl SearchResult {
    pub fn evaluations(&self) -> usize {
        self.stage1_candidates.len() + self.stage2_candidates.len()
    }
}

pub fn stage1_grid() -> Vec<f64> {
    (1..GRID_DIVISIONS)
        .map(|i| i as f64 / GRID_DIVISIONS as f64)
        .collect()
}

/// Interior points `lo + j·(hi − lo)/19`, `j = 1..=18`.
pub fn stage2_grid(lo: f64, hi: f64) -> Vec<f64> {
    (1..GRID_DIVISIONS)
        .map(|j| lo + j as f64 * (hi - lo) / GRID_DIVISIONS as f64)
        .collect()
}

fn call<F>(predict: &mut F, ratios: &[f64]) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let out = predict(ratios)?;
    if out.len() != ratios.len() {
        return Err(Error::LengthMismatch {
            what: "predictor output",
            expected: ratios.len(),
            actual: out.len(),
        });
    }
    if out.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("predictor output"));
    }
    Ok(out)
}

pub fn two_stage_search<F>(mut predict: F, floor: f64) -> Result<SearchResult>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if !(0.0..=1.0).contains(&floor) {
        return Err(Error::InvalidFloor(floor));
    }
    let grid = stage1_grid();
    let preds = call(&mut predict, &grid)?;
    let mut stage1: Vec<(f64, f64)> = grid.iter().copied().zip(preds).collect();
    let mut calls = 1;

    let (lo, hi, hi_pred) = match stage1.iter().position(|&(_, p)| p >= floor) {
        Some(k) => {
            let lo = if k == 0 { 0.0 } else { stage1[k - 1].0 };
            (lo, stage1[k].0, stage1[k].1)
        }
        None => {
            let p1 = call(&mut predict, &[1.0])?[0];
            calls += 1;
            stage1.push((1.0, p1));
            if p1 < floor {
                return Ok(SearchResult {
                    r_star: 1.0,
                    predicted_retention: p1,
                    feasible: false,
                    stage1_candidates: stage1,
                    stage2_candidates: Vec::new(),
                    predictor_calls: calls,
                });
            }
            (grid[CANDIDATES_PER_STAGE - 1], 1.0, p1)
        }
    };

    let fine = stage2_grid(lo, hi);
    let preds = call(&mut predict, &fine)?;
    calls += 1;
    let stage2: Vec<(f64, f64)> = fine.into_iter().zip(preds).collect();
    let (r_star, predicted_retention) = stage2
        .iter()
        .copied()
        .find(|&(_, p)| p >= floor)
        .unwrap_or((hi, hi_pred));

    Ok(SearchResult {
        r_star,
        predicted_retention,
        feasible: true,
        stage1_candidates: stage1,
        stage2_candidates: stage2,
        predictor_calls: calls,
    })
}
