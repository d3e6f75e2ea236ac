//! Explicit 0/1 cores that attain the matricization rank lower bounds exactly.
//!
//! Probe cores carry `e_p e_q^T` on their first `R_{s-1} R_s` slices (zero
//! elsewhere) and every core between two probes is the partial identity
//! `sum_{p < R_s} e_p e_p^T` on all slices, so any background index works.

use ndarray::Array3;

use super::{BondDims, CoreStack, Mode, Permutation, PhysicalDims};
use crate::error::{Error, Result};

/// Build witness cores for probes at chain positions `positions` (ascending,
/// 0-based), with per-arc ranks `ranks` (`R_1..R_4` for a ring, `R_1, R_2`
/// for a train).
pub fn witness_cores(
    mode: Mode,
    dims: &PhysicalDims,
    bonds: &BondDims,
    perm: &Permutation,
    positions: &[usize],
    ranks: &[usize],
) -> Result<CoreStack> {
    let d = dims.len();
    if bonds.len() != d || perm.len() != d {
        return Err(Error::domain("dims, bonds and permutation must have the same length"));
    }
    bonds.check_mode(mode)?;
    let probes = match mode {
        Mode::Ring => 4,
        Mode::Train => 3,
    };
    if positions.len() != probes || ranks.len() != probes - 1 + usize::from(mode == Mode::Ring) {
        return Err(Error::domain(format!(
            "{mode:?} witness needs {probes} positions and {} ranks",
            if mode == Mode::Ring { 4 } else { 2 }
        )));
    }
    if positions.windows(2).any(|w| w[0] >= w[1]) || positions[probes - 1] >= d {
        return Err(Error::domain(format!("positions {positions:?} must be strictly increasing and < {d}")));
    }
    if ranks.contains(&0) {
        return Err(Error::domain("ranks must be positive"));
    }

    match mode {
        Mode::Ring => ring(dims, bonds, perm, positions, ranks),
        Mode::Train => train(dims, bonds, perm, positions, ranks),
    }
}

fn min_bond(bonds: &BondDims, from: usize, to: usize) -> usize {
    (from..=to).map(|j| bonds.get(j)).min().unwrap_or(usize::MAX)
}

fn ring(dims: &PhysicalDims, bonds: &BondDims, perm: &Permutation, pos: &[usize], ranks: &[usize]) -> Result<CoreStack> {
    let d = dims.len();
    // arc s runs from pos[s] to pos[s+1] (cyclically); its bonds are r_{pos[s]+1} ..= r_{pos[s+1]}
    let arc_end = |s: usize| if s == 3 { pos[0] + d } else { pos[s + 1] };
    for s in 0..4 {
        let m = min_bond(bonds, pos[s] + 1, arc_end(s));
        if ranks[s] > m {
            return Err(Error::domain(format!("R_{} = {} exceeds the smallest bond {m} on its arc", s + 1, ranks[s])));
        }
        let prev = ranks[(s + 3) % 4];
        let n = dims.get(perm.apply(pos[s]));
        if n < prev * ranks[s] {
            return Err(Error::domain(format!(
                "n at probe {} is {n} < R_{} * R_{} = {}",
                s + 1,
                (s + 3) % 4 + 1,
                s + 1,
                prev * ranks[s]
            )));
        }
    }

    let mut cores = vec![Array3::zeros((0, 0, 0)); d];
    for s in 0..4 {
        let prev = ranks[(s + 3) % 4];
        let cur = ranks[s];
        let p = pos[s];
        let axis = perm.apply(p);
        let mut core = Array3::zeros((bonds.get(p), dims.get(axis), bonds.get(p + 1)));
        for a in 0..prev {
            for b in 0..cur {
                core[[a, a * cur + b, b]] = 1.0;
            }
        }
        cores[axis] = core;
        for q in pos[s] + 1..arc_end(s) {
            let q = q % d;
            cores[perm.apply(q)] = partial_identity(bonds, dims, perm, q, cur);
        }
    }
    CoreStack::new(cores, perm.clone(), Mode::Ring)
}

fn train(dims: &PhysicalDims, bonds: &BondDims, perm: &Permutation, pos: &[usize], ranks: &[usize]) -> Result<CoreStack> {
    let d = dims.len();
    let (r1, r2) = (ranks[0], ranks[1]);
    let m1 = min_bond(bonds, pos[0] + 1, pos[1]);
    if r1 > m1 {
        return Err(Error::domain(format!("R_1 = {r1} exceeds the smallest bond {m1} between probes 1 and 2")));
    }
    let m2 = min_bond(bonds, pos[1] + 1, pos[2]);
    if r2 > m2 {
        return Err(Error::domain(format!("R_2 = {r2} exceeds the smallest bond {m2} between probes 2 and 3")));
    }
    let need = [r1, r1 * r2, r2];
    for (s, (&p, &k)) in pos.iter().zip(&need).enumerate() {
        let n = dims.get(perm.apply(p));
        if n < k {
            return Err(Error::domain(format!("n at probe {} is {n} < {k}", s + 1)));
        }
    }

    let mut cores = Vec::with_capacity(d);
    cores.resize(d, Array3::zeros((0, 0, 0)));
    for p in 0..d {
        let axis = perm.apply(p);
        let core = if p == pos[0] {
            let mut c = Array3::zeros((bonds.get(p), dims.get(axis), bonds.get(p + 1)));
            for q in 0..r1 {
                c[[0, q, q]] = 1.0;
            }
            c
        } else if p == pos[1] {
            let mut c = Array3::zeros((bonds.get(p), dims.get(axis), bonds.get(p + 1)));
            for a in 0..r1 {
                for b in 0..r2 {
                    c[[a, a * r2 + b, b]] = 1.0;
                }
            }
            c
        } else if p == pos[2] {
            let mut c = Array3::zeros((bonds.get(p), dims.get(axis), bonds.get(p + 1)));
            for a in 0..r2 {
                c[[a, a, 0]] = 1.0;
            }
            c
        } else if p > pos[0] && p < pos[1] {
            partial_identity(bonds, dims, perm, p, r1)
        } else if p > pos[1] && p < pos[2] {
            partial_identity(bonds, dims, perm, p, r2)
        } else {
            partial_identity(bonds, dims, perm, p, 1)
        };
        cores[axis] = core;
    }
    CoreStack::new(cores, perm.clone(), Mode::Train)
}

fn partial_identity(bonds: &BondDims, dims: &PhysicalDims, perm: &Permutation, p: usize, rank: usize) -> Array3<f64> {
    let n = dims.get(perm.apply(p));
    let mut c = Array3::zeros((bonds.get(p), n, bonds.get(p + 1)));
    for x in 0..n {
        for q in 0..rank {
            c[[q, x, q]] = 1.0;
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hypothesis_violations_are_reported() {
        let dims = PhysicalDims::uniform(6, 4).unwrap();
        let bonds = BondDims::uniform(6, 3, Mode::Ring).unwrap();
        let perm = Permutation::identity(6);
        let e = witness_cores(Mode::Ring, &dims, &bonds, &perm, &[0, 1, 3, 4], &[4, 1, 1, 1]).unwrap_err();
        assert!(e.to_string().contains("R_1"), "{e}");
        let e = witness_cores(Mode::Ring, &dims, &bonds, &perm, &[0, 1, 3, 4], &[3, 2, 1, 1]).unwrap_err();
        assert!(e.to_string().contains("probe 2"), "{e}");
        assert!(witness_cores(Mode::Ring, &dims, &bonds, &perm, &[0, 3, 1, 4], &[1; 4]).is_err());

        let tb = BondDims::uniform(6, 3, Mode::Train).unwrap();
        let e = witness_cores(Mode::Train, &dims, &tb, &perm, &[0, 2, 5], &[3, 2]).unwrap_err();
        assert!(e.to_string().contains("probe 2"), "{e}");
    }

    #[test]
    fn all_ones_ranks_build() {
        let dims = PhysicalDims::uniform(5, 2).unwrap();
        let bonds = BondDims::uniform(5, 2, Mode::Ring).unwrap();
        let perm = Permutation::from_one_based(&[2, 5, 1, 3, 4]).unwrap();
        let s = witness_cores(Mode::Ring, &dims, &bonds, &perm, &[0, 1, 2, 4], &[1; 4]).unwrap();
        assert_eq!(s.perm(), &perm);
    }
}
