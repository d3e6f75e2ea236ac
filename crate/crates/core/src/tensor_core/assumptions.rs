use std::fmt;

use serde::Serialize;

use super::{BondDims, Mode, Permutation, PhysicalDims};

/// One inequality of the rank-parameter assumptions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub lhs: usize,
    pub relation: &'static str,
    pub rhs: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub mode: Mode,
    pub rank: usize,
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

impl fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {}: {} {} {}",
                if c.pass { "pass" } else { "FAIL" },
                c.name,
                c.lhs,
                c.relation,
                c.rhs
            )?;
        }
        write!(f, "{}", if self.all_pass() { "all pass" } else { "some checks failed" })
    }
}

fn ge(name: &str, lhs: usize, rhs: usize) -> AssumptionCheck {
    AssumptionCheck { name: name.to_string(), lhs, relation: ">=", rhs, pass: lhs >= rhs }
}

fn gt(name: &str, lhs: usize, rhs: usize) -> AssumptionCheck {
    AssumptionCheck { name: name.to_string(), lhs, relation: ">", rhs, pass: lhs > rhs }
}

/// Check the conditions under which the order tests are exact for rank
/// parameter `rank`.
///
/// Ring: `min n >= R^2 > max r` and `min r >= R`.
/// Train: endpoints `min(n_tau(1), n_tau(d)) >= R`, interior
/// `min n >= R^2 > max_{j>=2} r_j >= min_{j>=2} r_j >= R`. The train checks
/// need `perm` to locate the endpoints; without it every axis is treated as
/// interior.
pub fn check_assumptions(
    dims: &PhysicalDims,
    bonds: &BondDims,
    rank: usize,
    mode: Mode,
    perm: Option<&Permutation>,
) -> AssumptionReport {
    let r2 = rank.saturating_mul(rank);
    let checks = match mode {
        Mode::Ring => vec![
            ge("min n_i >= R^2", dims.min(), r2),
            gt("R^2 > max r_j", r2, bonds.max()),
            ge("min r_j >= R", bonds.min(), rank),
        ],
        Mode::Train => {
            let d = dims.len();
            let inner_bonds = &bonds.as_slice()[1.min(bonds.len())..];
            let (ends, interior): (Vec<usize>, Vec<usize>) = match perm {
                Some(p) if d >= 2 => (
                    vec![dims.get(p.apply(0)), dims.get(p.apply(d - 1))],
                    (1..d - 1).map(|j| dims.get(p.apply(j))).collect(),
                ),
                _ => (dims.as_slice().to_vec(), dims.as_slice().to_vec()),
            };
            vec![
                ge("min(n_tau(1), n_tau(d)) >= R", ends.iter().copied().min().unwrap_or(0), rank),
                ge("min interior n >= R^2", interior.iter().copied().min().unwrap_or(usize::MAX), r2),
                gt("R^2 > max_{j>=2} r_j", r2, inner_bonds.iter().copied().max().unwrap_or(0)),
                ge("min_{j>=2} r_j >= R", inner_bonds.iter().copied().min().unwrap_or(0), rank),
            ]
        }
    };
    AssumptionReport { mode, rank, checks }
}
