use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, VoterScores};
use crate::linalg::{singular_values, RankTolerance};
use crate::matricize::{reshape_tr_triple, reshape_tt_triple, sample_probe_block, MatricizationTriple};
use crate::oracle::EntryOracle;
use crate::seed::{derive_seed, stream};
use crate::tensor_core::Permutation;

/// How the three matricizations of a triple are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMode {
    /// Compare the `R^4`-th (ring) or `R^2`-th (train) singular values.
    #[default]
    SingularValue,
    /// Compare numerical ranks under the default tolerance.
    ExactRank,
}

impl std::str::FromStr for RankMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "singular_value" | "sv" => Ok(RankMode::SingularValue),
            "exact_rank" | "rank" => Ok(RankMode::ExactRank),
            other => Err(Error::domain(format!("unknown rank mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    #[serde(rename = "R")]
    pub rank: usize,
    pub voters: usize,
    #[serde(default)]
    pub rank_mode: RankMode,
    pub seed: u64,
}

impl RecoveryConfig {
    pub fn new(rank: usize, voters: usize, seed: u64) -> Result<Self> {
        let cfg = Self { rank, voters, rank_mode: RankMode::SingularValue, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_rank_mode(mut self, mode: RankMode) -> Self {
        self.rank_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::domain("R must be at least 1"));
        }
        if self.voters.is_multiple_of(2) {
            return Err(Error::domain(format!("voters must be odd, got {}", self.voters)));
        }
        Ok(())
    }
}

fn check_distinct(t: &[usize]) -> Result<()> {
    for (k, v) in t.iter().enumerate() {
        if t[..k].contains(v) {
            return Err(Error::domain(format!("index {v} repeated in {t:?}")));
        }
    }
    Ok(())
}

/// Four indices up to rotation and reflection of the cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CyclicQuadOrder([usize; 4]);

impl CyclicQuadOrder {
    pub fn as_array(&self) -> [usize; 4] {
        self.0
    }

    /// Whether the four indices sit on the loop of `tau` in this cyclic order.
    pub fn is_correct_for(&self, tau: &Permutation) -> bool {
        let inv = tau.inverse();
        let mut t = self.0;
        t.sort_by_key(|&i| inv.apply(i));
        canonical_cycle(t).map(|c| c == *self).unwrap_or(false)
    }
}

impl fmt::Display for CyclicQuadOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.0[0] + 1, self.0[1] + 1, self.0[2] + 1, self.0[3] + 1)
    }
}

pub fn canonical_cycle(t: [usize; 4]) -> Result<CyclicQuadOrder> {
    check_distinct(&t)?;
    let mut best = t;
    for k in 0..4 {
        let rot = [t[k], t[(k + 1) % 4], t[(k + 2) % 4], t[(k + 3) % 4]];
        let rev = [rot[3], rot[2], rot[1], rot[0]];
        best = best.min(rot).min(rev);
    }
    Ok(CyclicQuadOrder(best))
}

/// Three indices up to reversal of the path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearTripleOrder([usize; 3]);

impl LinearTripleOrder {
    pub fn as_array(&self) -> [usize; 3] {
        self.0
    }

    pub fn middle(&self) -> usize {
        self.0[1]
    }

    pub fn is_correct_for(&self, tau: &Permutation) -> bool {
        let inv = tau.inverse();
        let mut t = self.0;
        t.sort_by_key(|&i| inv.apply(i));
        canonical_path(t).map(|c| c == *self).unwrap_or(false)
    }
}

impl fmt::Display for LinearTripleOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.0[0] + 1, self.0[1] + 1, self.0[2] + 1)
    }
}

pub fn canonical_path(t: [usize; 3]) -> Result<LinearTripleOrder> {
    check_distinct(&t)?;
    Ok(LinearTripleOrder(if t[0] < t[2] { t } else { [t[2], t[1], t[0]] }))
}

/// Scores of the three matricizations: the `k`-th singular value, or the
/// numerical rank.
pub(crate) fn scores(triple: &MatricizationTriple, k: usize, mode: RankMode) -> Result<VoterScores> {
    let mut out = [0.0; 3];
    for (s, m) in out.iter_mut().zip(triple.matrices()) {
        let spec = singular_values(m.view())?;
        *s = match mode {
            RankMode::SingularValue => spec.sigma(k),
            RankMode::ExactRank => spec.rank(RankTolerance::Default) as f64,
        };
    }
    Ok(out)
}

/// Index of the strictly largest score, if any.
pub(crate) fn strict_winner(s: &VoterScores) -> Option<usize> {
    (0..3).find(|&i| (0..3).all(|j| j == i || s[i] > s[j]))
}

/// Plurality over non-abstaining voters; ties go to the class first
/// reached by the earliest voter.
fn plurality<T: Copy + Eq>(votes: &[Option<T>]) -> Option<T> {
    let cast: Vec<T> = votes.iter().flatten().copied().collect();
    let count = |c: &T| cast.iter().filter(|v| *v == c).count();
    let best = cast.iter().map(count).max()?;
    cast.iter().copied().find(|c| count(c) == best)
}

/// Per-call seed for voter `v` of order call `call`.
pub(crate) fn voter_seed(config_seed: u64, call: u64, v: usize) -> u64 {
    derive_seed(derive_seed(config_seed, stream::ORDER_CALL, call), stream::VOTER, v as u64)
}

/// Detailed result of one order test, for margin diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteRecord<T> {
    pub decision: T,
    pub scores: Vec<VoterScores>,
    pub votes: Vec<Option<T>>,
}

pub(crate) fn four_call<O: EntryOracle + ?Sized>(
    oracle: &O,
    probes: [usize; 4],
    cfg: &RecoveryConfig,
    call: u64,
) -> Result<VoteRecord<CyclicQuadOrder>> {
    cfg.validate()?;
    check_distinct(&probes)?;
    let [i1, i2, i3, i4] = probes;
    let k = cfg.rank.pow(4);
    let mut all_scores = Vec::with_capacity(cfg.voters);
    let mut votes = Vec::with_capacity(cfg.voters);
    for v in 0..cfg.voters {
        let block = sample_probe_block(oracle, &probes, voter_seed(cfg.seed, call, v))?;
        let s = scores(&reshape_tr_triple(block)?, k, cfg.rank_mode)?;
        let vote = match strict_winner(&s) {
            Some(0) => Some(canonical_cycle([i1, i3, i2, i4])?),
            Some(1) => Some(canonical_cycle([i1, i2, i3, i4])?),
            Some(_) => Some(canonical_cycle([i1, i2, i4, i3])?),
            None => None,
        };
        all_scores.push(s);
        votes.push(vote);
    }
    match plurality(&votes) {
        Some(decision) => Ok(VoteRecord { decision, scores: all_scores, votes }),
        None => Err(Error::Undecidable { probes: probes.to_vec(), scores: all_scores, step: None }),
    }
}

pub(crate) fn three_call<O: EntryOracle + ?Sized>(
    oracle: &O,
    probes: [usize; 3],
    cfg: &RecoveryConfig,
    call: u64,
) -> Result<VoteRecord<LinearTripleOrder>> {
    cfg.validate()?;
    check_distinct(&probes)?;
    let [i1, i2, i3] = probes;
    let k = cfg.rank.pow(2);
    let mut all_scores = Vec::with_capacity(cfg.voters);
    let mut votes = Vec::with_capacity(cfg.voters);
    for v in 0..cfg.voters {
        let block = sample_probe_block(oracle, &probes, voter_seed(cfg.seed, call, v))?;
        let s = scores(&reshape_tt_triple(block)?, k, cfg.rank_mode)?;
        // the row axis of the winning matrix is the middle of the path
        let vote = match strict_winner(&s) {
            Some(0) => Some(canonical_path([i2, i1, i3])?),
            Some(1) => Some(canonical_path([i1, i2, i3])?),
            Some(_) => Some(canonical_path([i2, i3, i1])?),
            None => None,
        };
        all_scores.push(s);
        votes.push(vote);
    }
    match plurality(&votes) {
        Some(decision) => Ok(VoteRecord { decision, scores: all_scores, votes }),
        None => Err(Error::Undecidable { probes: probes.to_vec(), scores: all_scores, step: None }),
    }
}

/// Cyclic order of four 0-based axes on the hidden loop.
pub fn order_four_tr<O: EntryOracle + ?Sized>(oracle: &O, probes: [usize; 4], cfg: &RecoveryConfig) -> Result<CyclicQuadOrder> {
    Ok(four_call(oracle, probes, cfg, 0)?.decision)
}

/// Same as [`order_four_tr`] but keeps every voter's scores.
pub fn order_four_tr_detailed<O: EntryOracle + ?Sized>(
    oracle: &O,
    probes: [usize; 4],
    cfg: &RecoveryConfig,
) -> Result<VoteRecord<CyclicQuadOrder>> {
    four_call(oracle, probes, cfg, 0)
}

/// Linear order of three 0-based axes on the hidden path.
pub fn order_three_tt<O: EntryOracle + ?Sized>(oracle: &O, probes: [usize; 3], cfg: &RecoveryConfig) -> Result<LinearTripleOrder> {
    Ok(three_call(oracle, probes, cfg, 0)?.decision)
}

pub fn order_three_tt_detailed<O: EntryOracle + ?Sized>(
    oracle: &O,
    probes: [usize; 3],
    cfg: &RecoveryConfig,
) -> Result<VoteRecord<LinearTripleOrder>> {
    three_call(oracle, probes, cfg, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::make_exact_oracle;
    use crate::seed::rng_from;
    use crate::tensor_core::{sample_cores, witness_cores, BondDims, Mode, PhysicalDims, Profile};
    use itertools::Itertools;

    #[test]
    fn canonical_cycle_classes() {
        let c = |t| canonical_cycle(t).unwrap();
        assert_eq!(c([3, 1, 4, 2]), c([1, 4, 2, 3]));
        assert_eq!(c([1, 2, 3, 4]), c([1, 4, 3, 2]));
        assert_ne!(c([1, 2, 3, 4]), c([1, 3, 2, 4]));
        assert_eq!(c([1, 2, 3, 4]).as_array(), [1, 2, 3, 4]);
        assert!(canonical_cycle([1, 2, 1, 4]).is_err());
        // 24 orderings fall into exactly 3 classes of 8
        let classes = (0..4).permutations(4).map(|p| c([p[0], p[1], p[2], p[3]])).counts();
        assert_eq!(classes.len(), 3);
        assert!(classes.values().all(|&n| n == 8));
        for p in (0..4).permutations(4) {
            let once = c([p[0], p[1], p[2], p[3]]);
            assert_eq!(c(once.as_array()), once);
        }
    }

    #[test]
    fn canonical_path_classes() {
        let c = |t| canonical_path(t).unwrap();
        assert_eq!(c([3, 2, 1]), c([1, 2, 3]));
        assert_eq!(c([3, 2, 1]).middle(), 2);
        assert_ne!(c([1, 2, 3]), c([2, 1, 3]));
        assert!(canonical_path([1, 1, 3]).is_err());
        assert_eq!((0..3).permutations(3).map(|p| c([p[0], p[1], p[2]])).unique().count(), 3);
    }

    #[test]
    fn plurality_rules() {
        assert_eq!(plurality::<u8>(&[None, None]), None);
        assert_eq!(plurality(&[Some(1), Some(2), Some(2)]), Some(2));
        assert_eq!(plurality(&[None, Some(3), Some(2), Some(2), Some(3)]), Some(3));
        assert_eq!(strict_winner(&[1.0, 1.0, 0.0]), None);
        assert_eq!(strict_winner(&[1.0, 2.0, 0.0]), Some(1));
    }

    #[test]
    fn config_validation() {
        assert!(RecoveryConfig::new(2, 4, 0).is_err());
        assert!(RecoveryConfig::new(0, 1, 0).is_err());
        let cfg = RecoveryConfig::new(2, 5, 7).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(json.contains("\"R\":2"));
        assert_eq!(serde_json::from_str::<RecoveryConfig>(&json).unwrap(), cfg);
    }

    fn random_stack(d: usize, mode: Mode, seed: u64) -> crate::tensor_core::CoreStack {
        sample_cores(
            &PhysicalDims::uniform(d, 4).unwrap(),
            &BondDims::uniform(d, 3, mode).unwrap(),
            &Permutation::random(d, &mut rng_from(seed)),
            mode,
            Profile::FullRank,
            seed,
        )
        .unwrap()
    }

    #[test]
    fn ring_quadruples_match_ground_truth() {
        let cfg = RecoveryConfig::new(2, 1, 3).unwrap();
        for seed in 0..4 {
            let s = random_stack(5, Mode::Ring, seed);
            let o = make_exact_oracle(s.clone());
            for q in (0..5).combinations(4) {
                let probes = [q[0], q[1], q[2], q[3]];
                let out = order_four_tr(&o, probes, &cfg).unwrap();
                assert!(out.is_correct_for(s.perm()), "seed {seed} {out} vs {}", s.perm());
                // input-order invariance
                let rev = order_four_tr(&o, [q[2], q[0], q[3], q[1]], &cfg).unwrap();
                assert_eq!(rev, out);
            }
        }
    }

    #[test]
    fn train_triples_match_ground_truth() {
        let cfg = RecoveryConfig::new(2, 3, 3).unwrap();
        for seed in 0..4 {
            let s = random_stack(5, Mode::Train, seed);
            let o = make_exact_oracle(s.clone());
            for q in (0..5).combinations(3) {
                let out = order_three_tt(&o, [q[0], q[1], q[2]], &cfg).unwrap();
                assert!(out.is_correct_for(s.perm()), "seed {seed} {out} vs {}", s.perm());
                assert_eq!(order_three_tt(&o, [q[2], q[1], q[0]], &cfg).unwrap(), out);
                assert_eq!(order_three_tt(&o, [q[1], q[2], q[0]], &cfg).unwrap(), out);
            }
        }
    }

    #[test]
    fn witness_decisions() {
        let dims = PhysicalDims::uniform(6, 4).unwrap();
        let perm = Permutation::random(6, &mut rng_from(9));
        let cfg = RecoveryConfig::new(2, 1, 0).unwrap();
        let ring = witness_cores(Mode::Ring, &dims, &BondDims::uniform(6, 3, Mode::Ring).unwrap(), &perm, &[0, 1, 3, 5], &[2; 4]).unwrap();
        let probes = [0, 1, 3, 5].map(|p| perm.apply(p));
        let out = order_four_tr(&make_exact_oracle(ring), probes, &cfg).unwrap();
        assert_eq!(out, canonical_cycle(probes).unwrap());

        let train = witness_cores(Mode::Train, &dims, &BondDims::uniform(6, 3, Mode::Train).unwrap(), &perm, &[1, 2, 4], &[2, 2]).unwrap();
        let probes = [1, 2, 4].map(|p| perm.apply(p));
        let out = order_three_tt(&make_exact_oracle(train), [probes[2], probes[0], probes[1]], &cfg).unwrap();
        assert_eq!(out.middle(), probes[1]);
    }

    #[test]
    fn all_abstain_is_undecidable() {
        // constant tensor: every matricization has rank 1, all scores tie at 0
        let cores = (0..4).map(|_| ndarray::Array3::ones((1, 4, 1))).collect();
        let o = make_exact_oracle(crate::tensor_core::CoreStack::new(cores, Permutation::identity(4), Mode::Ring).unwrap());
        let cfg = RecoveryConfig::new(2, 3, 0).unwrap();
        let e = order_four_tr(&o, [0, 1, 2, 3], &cfg).unwrap_err();
        match e {
            Error::Undecidable { probes, scores, step } => {
                assert_eq!(probes, vec![0, 1, 2, 3]);
                assert_eq!(scores.len(), 3);
                assert_eq!(step, None);
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn query_count_per_call() {
        let o = make_exact_oracle(random_stack(6, Mode::Train, 1));
        order_three_tt(&o, [0, 2, 4], &RecoveryConfig::new(2, 5, 0).unwrap()).unwrap();
        assert_eq!(o.stats().count, 5 * 64);
    }
}
