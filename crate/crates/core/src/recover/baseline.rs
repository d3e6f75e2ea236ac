//! Greedy path search on the full tensor by minimal unfolding rank.
//!
//! Pick the axis whose single-mode unfolding has the lowest rank as one end
//! of the path, then repeatedly append the axis that keeps the unfolding of
//! the grown subchain against everything else at the lowest rank. Ties go
//! to the smallest axis.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::{singular_values, RankTolerance};
use crate::tensor_core::{DenseTensor, Permutation};

/// Numerical rank of the unfolding with `rows` as row axes (ascending,
/// row-major) and the remaining axes as columns.
pub fn unfolding_rank(t: &DenseTensor, rows: &[usize], tol: RankTolerance) -> Result<usize> {
    let dims = t.dims().as_slice();
    let d = dims.len();
    if rows.iter().any(|&a| a >= d) {
        return Err(Error::domain(format!("row axes {rows:?} outside 0..{d}")));
    }
    let mut is_row = vec![false; d];
    for &a in rows {
        is_row[a] = true;
    }
    let nr: usize = (0..d).filter(|&a| is_row[a]).map(|a| dims[a]).product();
    let nc: usize = (0..d).filter(|&a| !is_row[a]).map(|a| dims[a]).product();
    let mut m = Array2::zeros((nr, nc));
    let mut x = vec![0usize; d];
    for &v in t.values() {
        let (mut r, mut c) = (0, 0);
        for a in 0..d {
            if is_row[a] {
                r = r * dims[a] + x[a];
            } else {
                c = c * dims[a] + x[a];
            }
        }
        m[[r, c]] = v;
        crate::tensor_core::stack_increment(&mut x, dims);
    }
    Ok(singular_values(m.view())?.rank(tol))
}

pub fn baseline_tt(t: &DenseTensor, tol: RankTolerance) -> Result<Permutation> {
    let d = t.dims().len();
    let argmin = |cands: &[usize], chain: &[usize]| -> Result<usize> {
        let mut best: Option<(usize, usize)> = None;
        for &c in cands {
            let mut rows = chain.to_vec();
            rows.push(c);
            let r = unfolding_rank(t, &rows, tol)?;
            if best.is_none_or(|(br, _)| r < br) {
                best = Some((r, c));
            }
        }
        Ok(best.expect("non-empty candidates").1)
    };

    let all: Vec<usize> = (0..d).collect();
    let mut chain = vec![argmin(&all, &[])?];
    while chain.len() < d {
        let rest: Vec<usize> = all.iter().copied().filter(|a| !chain.contains(a)).collect();
        let next = if rest.len() == 1 { rest[0] } else { argmin(&rest, &chain)? };
        chain.push(next);
    }
    Permutation::new(chain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;
    use crate::tensor_core::{same_class, sample_cores, BondDims, Mode, PhysicalDims, Profile};

    #[test]
    fn noiseless_train_is_recovered() {
        for seed in 0..5 {
            let d = 6;
            let perm = Permutation::random(d, &mut rng_from(seed));
            let s = sample_cores(
                &PhysicalDims::uniform(d, 4).unwrap(),
                &BondDims::uniform(d, 3, Mode::Train).unwrap(),
                &perm,
                Mode::Train,
                Profile::FullRank,
                seed,
            )
            .unwrap();
            let out = baseline_tt(&s.full_contract().unwrap(), RankTolerance::Default).unwrap();
            assert!(same_class(&out, &perm, Mode::Train).unwrap(), "seed {seed}: {out} vs {perm}");
        }
    }

    #[test]
    fn rank_one_tensor_returns_some_order() {
        let dims = PhysicalDims::uniform(4, 3).unwrap();
        let t = DenseTensor::new(dims, vec![1.0; 81]).unwrap();
        let out = baseline_tt(&t, RankTolerance::Default).unwrap();
        assert_eq!(out, Permutation::identity(4));
        assert_eq!(unfolding_rank(&t, &[0, 2], RankTolerance::Default).unwrap(), 1);
    }
}
