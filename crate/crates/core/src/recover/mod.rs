//! Recovering the hidden loop or path from entry queries.
//!
//! Positions in the comments below are 1-based like the insertion search
//! they describe; axes are 0-based in code.

mod baseline;
mod order;

pub use baseline::{baseline_tt, unfolding_rank};
pub use order::{
    canonical_cycle, canonical_path, order_four_tr, order_four_tr_detailed, order_three_tt, order_three_tt_detailed,
    CyclicQuadOrder, LinearTripleOrder, RankMode, RecoveryConfig, VoteRecord,
};

use crate::error::{Error, Result};
use crate::oracle::EntryOracle;
use crate::tensor_core::Permutation;

/// A recovered permutation plus the number of order tests it took.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recovery {
    pub perm: Permutation,
    pub order_calls: u64,
}

/// Order tests issued by a recovery; each call gets its own seed.
struct Calls<'a, O: ?Sized> {
    oracle: &'a O,
    cfg: &'a RecoveryConfig,
    count: u64,
}

impl<'a, O: EntryOracle + ?Sized> Calls<'a, O> {
    fn four(&mut self, p: [usize; 4]) -> Result<CyclicQuadOrder> {
        self.count += 1;
        Ok(order::four_call(self.oracle, p, self.cfg, self.count - 1)?.decision)
    }

    fn three(&mut self, p: [usize; 3]) -> Result<LinearTripleOrder> {
        self.count += 1;
        Ok(order::three_call(self.oracle, p, self.cfg, self.count - 1)?.decision)
    }
}

pub fn recover_ring<O: EntryOracle + ?Sized>(oracle: &O, cfg: &RecoveryConfig) -> Result<Permutation> {
    Ok(recover_ring_traced(oracle, cfg)?.perm)
}

pub fn recover_ring_traced<O: EntryOracle + ?Sized>(oracle: &O, cfg: &RecoveryConfig) -> Result<Recovery> {
    cfg.validate()?;
    let mut calls = Calls { oracle, cfg, count: 0 };
    let perm = ring_insertion(oracle.dims().len(), |p| calls.four(p))?;
    Ok(Recovery { perm, order_calls: calls.count })
}

/// Grow a loop one axis at a time, locating each new axis by a ternary
/// search over the current loop. `four` decides the cyclic order of four axes.
pub fn ring_insertion<F>(d: usize, mut four: F) -> Result<Permutation>
where
    F: FnMut([usize; 4]) -> Result<CyclicQuadOrder>,
{
    if d < 4 {
        return Err(Error::domain(format!("ring recovery needs d >= 4, got {d}")));
    }
    let mut order: Vec<usize> = four([0, 1, 2, 3])?.as_array().to_vec();

    for t in 4..d {
        let new = t;
        let at = |j: usize, order: &[usize]| order[j - 1];
        let (mut j_min, mut j_max) = (1usize, t + 1);
        while j_max - j_min >= 2 {
            let delta = j_max - j_min;
            let (j1, j2, j3) = if delta >= 3 {
                (j_min, j_min + delta / 3, j_min + 2 * delta / 3)
            } else if j_max <= t {
                (j_min, j_min + 1, j_max)
            } else {
                (1, t - 1, t)
            };
            let (a, b, c) = (at(j1, &order), at(j2, &order), at(j3, &order));
            let got = four([new, a, b, c]).map_err(|e| e.at_step(new + 1))?;
            if got == canonical_cycle([a, new, b, c])? {
                j_min = j1;
                j_max = j2;
            } else if got == canonical_cycle([a, b, new, c])? {
                j_min = j2;
                j_max = j3;
            } else {
                // noise can push j_min onto j_max here; the insert below still lands after i_{j_min}
                j_min = j3;
            }
        }
        order.insert(j_min, new);
    }
    Permutation::new(order)
}

pub fn recover_train<O: EntryOracle + ?Sized>(oracle: &O, cfg: &RecoveryConfig) -> Result<Permutation> {
    Ok(recover_train_traced(oracle, cfg)?.perm)
}

pub fn recover_train_traced<O: EntryOracle + ?Sized>(oracle: &O, cfg: &RecoveryConfig) -> Result<Recovery> {
    cfg.validate()?;
    let mut calls = Calls { oracle, cfg, count: 0 };
    let perm = train_insertion(oracle.dims().len(), |p| calls.three(p))?;
    Ok(Recovery { perm, order_calls: calls.count })
}

/// Grow a path one axis at a time. Position 0 and `t + 1` are sentinels for
/// "before the first" and "after the last".
pub fn train_insertion<F>(d: usize, mut three: F) -> Result<Permutation>
where
    F: FnMut([usize; 3]) -> Result<LinearTripleOrder>,
{
    let mut order: Vec<usize> = three([0, 1, 2])?.as_array().to_vec();

    for t in 3..d {
        let new = t;
        let at = |j: usize, order: &[usize]| order[j - 1];
        let (mut j_min, mut j_max) = (0usize, t + 1);
        let mut moved_max = false;
        while j_max - j_min >= 2 {
            let delta = j_max - j_min;
            let (j1, j2) = if delta >= 3 {
                (j_min + delta / 3, j_min + 2 * delta / 3)
            } else if j_min >= 1 {
                (j_min, j_min + 1)
            } else {
                (1, 2)
            };
            let (a, b) = (at(j1, &order), at(j2, &order));
            let got = three([new, a, b]).map_err(|e| e.at_step(new + 1))?;
            if got == canonical_path([new, a, b])? {
                j_max = j1;
                moved_max = true;
            } else if got == canonical_path([a, new, b])? {
                j_min = j1;
                j_max = j2;
                moved_max = false;
            } else {
                j_min = j2;
                moved_max = false;
            }
        }
        // Under noise the bracket can collapse to a point; honour the side that moved last.
        let slot = if moved_max { j_max - 1 } else { j_min };
        order.insert(slot, new);
    }
    Permutation::new(order)
}

/// Number of quadruples (ring) or triples (train) of `tau_hat`, taken in its
/// chain order, that are in the correct order for `tau`.
pub fn agreement_score(tau_hat: &Permutation, tau: &Permutation, mode: crate::tensor_core::Mode) -> usize {
    use crate::tensor_core::Mode;
    let d = tau.len();
    let img = tau_hat.images();
    let mut score = 0;
    match mode {
        Mode::Ring => {
            for a in 0..d {
                for b in a + 1..d {
                    for c in b + 1..d {
                        for e in c + 1..d {
                            let q = canonical_cycle([img[a], img[b], img[c], img[e]]).expect("distinct");
                            score += usize::from(q.is_correct_for(tau));
                        }
                    }
                }
            }
        }
        Mode::Train => {
            for a in 0..d {
                for b in a + 1..d {
                    for c in b + 1..d {
                        let q = canonical_path([img[a], img[b], img[c]]).expect("distinct");
                        score += usize::from(q.is_correct_for(tau));
                    }
                }
            }
        }
    }
    score
}
