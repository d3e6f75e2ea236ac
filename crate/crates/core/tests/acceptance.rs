//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed; exits non-zero if any fails.
//!
//! Frozen constants were measured once with master seed 0 and are pinned
//! here; regressions are judged against them.

use std::process::ExitCode;
use std::time::Instant;

use itertools::Itertools;
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use tnperm::experiments::{success_curves, CurvePoint, ExperimentMode, SuccessCurve, TrialConfig};
use tnperm::linalg::{singular_values, RankTolerance};
use tnperm::matricize::{reshape_tr_triple, reshape_tt_triple, sample_probe_block};
use tnperm::oracle::{make_exact_oracle, EntryOracle};
use tnperm::recover::{recover_ring_traced, recover_train_traced, RecoveryConfig};
use tnperm::seed::{derive_seed, rng_from};
use tnperm::tensor_core::{
    same_class, sample_cores, witness_cores, BondDims, CoreStack, Mode, Permutation, PhysicalDims, Profile,
};

/// Criterion 5: full-rank advantage below which the gap is only reported.
const ROBUST_GAP: f64 = 0.05;
/// Criterion 6: slack allowed for the 5-voter curve.
const VOTE_SLACK: f64 = 0.02;
/// Criterion 7: noise level where the proposed method sits mid-curve.
const BASELINE_SIGMA: f64 = 2.0;
const BASELINE_WINDOW: (f64, f64) = (0.3, 0.9);
/// Criterion 8: calibration run (5 voters, 200 trials) gave 0.675 with
/// Wilson interval (0.607, 0.736); rate minus three half-widths.
const POTTS_FROZEN: f64 = 0.675 - 3.0 * (0.736 - 0.607) / 2.0;
const POTTS_FLOOR: f64 = 0.5;
/// Criterion 9: worst count / (d log2 d n^p) over seeds 0..20, d in {8, 12, 16}.
const C_RING: f64 = 0.4531;
const C_TRAIN: f64 = 0.5000;
const QUERY_SLACK: f64 = 1.10;
/// Criterion 10: floating-point slack on Weyl, relative to the largest singular value involved.
const WEYL_REL_TOL: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn point(c: &SuccessCurve, sigma: f64) -> CurvePoint {
    *c.points.iter().find(|p| p.sigma == sigma).expect("grid point")
}

fn curve(cfg: TrialConfig) -> Vec<SuccessCurve> {
    success_curves(&cfg).expect("experiment runs")
}

fn noiseless(mode: ExperimentMode) -> Outcome {
    let cfg = TrialConfig { sigma: vec![0.0], trials: 200, voters: 1, ..TrialConfig::desk(mode) };
    let p = curve(cfg)[0].points[0];
    outcome(p.successes == p.trials, format!("{}/{} recovered", p.successes, p.trials))
}

fn rank(m: &Array2<f64>) -> usize {
    singular_values(m.view()).unwrap().rank(RankTolerance::Default)
}

fn witness_ranks() -> Outcome {
    let d = 8;
    let dims = PhysicalDims::uniform(d, 4).unwrap();
    let mut ok = true;
    let mut seen = Vec::new();
    for seed in 0..10u64 {
        let perm = Permutation::random(d, &mut rng_from(seed));
        let ring = BondDims::uniform(d, 3, Mode::Ring).unwrap();
        let mut pos: Vec<usize> = (0..d).collect();
        rand::seq::SliceRandom::shuffle(pos.as_mut_slice(), &mut rng_from(seed + 100));
        let mut p4 = pos[..4].to_vec();
        p4.sort();
        let s = witness_cores(Mode::Ring, &dims, &ring, &perm, &p4, &[2; 4]).unwrap();
        let probes: Vec<usize> = p4.iter().map(|&p| perm.apply(p)).collect();
        let t = reshape_tr_triple(sample_probe_block(&make_exact_oracle(s), &probes, seed).unwrap()).unwrap();
        let r: Vec<usize> = t.matrices().iter().map(rank).collect();
        ok &= r[1] == 16 && r[0] <= 4 && r[2] <= 4;
        seen.push(r);

        let train = BondDims::uniform(d, 3, Mode::Train).unwrap();
        let mut p3 = pos[..3].to_vec();
        p3.sort();
        let s = witness_cores(Mode::Train, &dims, &train, &perm, &p3, &[2, 2]).unwrap();
        let probes: Vec<usize> = p3.iter().map(|&p| perm.apply(p)).collect();
        let t = reshape_tt_triple(sample_probe_block(&make_exact_oracle(s), &probes, seed).unwrap()).unwrap();
        let r: Vec<usize> = t.matrices().iter().map(rank).collect();
        ok &= r[1] == 4 && r[0] <= 2 && r[2] <= 2;
    }
    outcome(ok, format!("ring ranks per grouping {:?} .. (10 witnesses, interleaved = 16)", seen[0]))
}

/// Smallest bond on the chain arc from position `a` to `b` (exclusive of
/// the core at `a`, wrapping past the end).
fn arc_min(bonds: &BondDims, a: usize, b: usize) -> usize {
    let d = bonds.len();
    let mut j = (a + 1) % d;
    let mut m = bonds.get(j);
    while j != b {
        j = (j + 1) % d;
        m = m.min(bonds.get(j));
    }
    m
}

fn random_bonds(d: usize, mode: Mode, rng: &mut impl Rng) -> BondDims {
    let mut r: Vec<usize> = (0..d).map(|_| rng.random_range(2..=3)).collect();
    if mode == Mode::Train {
        r[0] = 1;
    }
    BondDims::new(r).unwrap()
}

fn rank_bounds() -> Outcome {
    let (rank_param, n) = (2usize, 4usize);
    let mut upper_violations = 0;
    let mut lower_ok = [0usize; 2];
    let mut checked = 0usize;
    for k in 0..100u64 {
        let mut rng = rng_from(derive_seed(4, 0, k));
        for (mi, mode) in [Mode::Ring, Mode::Train].into_iter().enumerate() {
            let d = 5 + (k as usize % 2);
            let dims = PhysicalDims::uniform(d, n).unwrap();
            let bonds = random_bonds(d, mode, &mut rng);
            let perm = Permutation::random(d, &mut rng);
            let s = sample_cores(&dims, &bonds, &perm, mode, Profile::FullRank, derive_seed(4, 1 + mi as u64, k)).unwrap();
            let inv = perm.inverse();
            let o = make_exact_oracle(s);
            let mut lower_here = true;
            let p = match mode {
                Mode::Ring => 4,
                Mode::Train => 3,
            };
            for (qi, set) in (0..d).combinations(p).enumerate() {
                // probes in chain order, so grouping 1 is the interleaved / middle one
                let mut probes = set.clone();
                probes.sort_by_key(|&i| inv.apply(i));
                let pos: Vec<usize> = probes.iter().map(|&i| inv.apply(i)).collect();
                let block = sample_probe_block(&o, &probes, derive_seed(k, 9, qi as u64)).unwrap();
                checked += 1;
                match mode {
                    Mode::Ring => {
                        let t = reshape_tr_triple(block).unwrap();
                        let r: Vec<usize> = t.matrices().iter().map(rank).collect();
                        let arcs: Vec<usize> = (0..4).map(|s| arc_min(&bonds, pos[s], pos[(s + 1) % 4])).collect();
                        let ub = [arcs[1] * arcs[3], (arcs.iter().product::<usize>()).min(n * n), arcs[0] * arcs[2]];
                        upper_violations += (0..3).filter(|&g| r[g] > ub[g]).count();
                        lower_here &= r[1] >= rank_param.pow(4);
                    }
                    Mode::Train => {
                        let t = reshape_tt_triple(block).unwrap();
                        let r: Vec<usize> = t.matrices().iter().map(rank).collect();
                        let (a1, a2) = (arc_min(&bonds, pos[0], pos[1]), arc_min(&bonds, pos[1], pos[2]));
                        let ub = [a1.min(n), (a1 * a2).min(n), a2.min(n)];
                        upper_violations += (0..3).filter(|&g| r[g] > ub[g]).count();
                        lower_here &= r[1] >= rank_param.pow(2);
                    }
                }
            }
            lower_ok[mi] += usize::from(lower_here);
        }
    }
    outcome(
        upper_violations == 0 && lower_ok == [100, 100],
        format!(
            "{checked} probe sets, {upper_violations} upper-bound violations; lower bound held in {}/100 ring and {}/100 train stacks",
            lower_ok[0], lower_ok[1]
        ),
    )
}

fn robustness() -> Outcome {
    let base = TrialConfig { sigma: vec![0.05], trials: 500, ..TrialConfig::desk(ExperimentMode::Ring) };
    let full = curve(base.clone())[0].points[0];
    let near = curve(TrialConfig { profile: Profile::NearDeficient, ..base })[0].points[0];
    let gap = full.rate - near.rate;
    let overlap = full.ci_low <= near.ci_high;
    let mut detail = format!(
        "full-rank {:.3} [{:.3}, {:.3}] vs near-deficient {:.3} [{:.3}, {:.3}]",
        full.rate, full.ci_low, full.ci_high, near.rate, near.ci_low, near.ci_high
    );
    if gap < ROBUST_GAP || overlap {
        detail.push_str(&format!(" (note: gap {gap:.3}, intervals overlap: {overlap})"));
    }
    outcome(gap >= 0.0, detail)
}

fn vote_dominance() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut where_ = String::new();
    for mode in [ExperimentMode::Ring, ExperimentMode::Train] {
        let one = curve(TrialConfig { trials: 500, voters: 1, ..TrialConfig::desk(mode) }).remove(0);
        let five = curve(TrialConfig { trials: 500, voters: 5, ..TrialConfig::desk(mode) }).remove(0);
        for (a, b) in five.points.iter().zip(&one.points) {
            let margin = a.rate - b.rate;
            if margin < worst {
                worst = margin;
                where_ = format!("{mode:?} sigma_e {}", a.sigma);
            }
        }
    }
    outcome(worst >= -VOTE_SLACK, format!("smallest 5-voter minus 1-voter margin {worst:+.3} at {where_}"))
}

fn baseline() -> Outcome {
    let cfg = TrialConfig { sigma: vec![0.0, BASELINE_SIGMA], trials: 500, ..TrialConfig::desk(ExperimentMode::BaselineCompare) };
    let c = curve(cfg.clone());
    let (p0, b0) = (point(&c[0], 0.0), point(&c[1], 0.0));
    let (pm, bm) = (point(&c[0], BASELINE_SIGMA), point(&c[1], BASELINE_SIGMA));
    let in_window = (BASELINE_WINDOW.0..=BASELINE_WINDOW.1).contains(&pm.rate);
    let pass = p0.rate == 1.0 && b0.rate == 1.0 && in_window && pm.rate > bm.rate;

    // same comparison against a baseline told the noise level; informational only
    let aware = curve(TrialConfig {
        sigma: vec![BASELINE_SIGMA],
        trials: 200,
        baseline_tol: tnperm::experiments::BaselineTolerance::NoiseFloor,
        ..cfg
    });
    outcome(
        pass,
        format!(
            "sigma_e 0: proposed {} baseline {}; sigma_e {BASELINE_SIGMA}: proposed {:.3} vs baseline {:.3} (noise-floor baseline {:.3}, not asserted)",
            p0.rate, b0.rate, pm.rate, bm.rate, aware[1].points[0].rate
        ),
    )
}

fn potts() -> Outcome {
    let cfg = TrialConfig { sigma: vec![0.0], trials: 200, ..TrialConfig::desk(ExperimentMode::Potts) };
    let p = curve(cfg)[0].points[0];
    let bound = POTTS_FLOOR.max(POTTS_FROZEN);
    let mut detail = format!("rate {:.3} [{:.3}, {:.3}], bound {bound:.3}", p.rate, p.ci_low, p.ci_high);
    if p.rate < 1.0 {
        detail.push_str(" (below 1 as expected)");
    }
    outcome(p.rate >= bound, detail)
}

fn query_count(mode: Mode, d: usize, seed: u64) -> (u64, bool) {
    let perm = Permutation::random(d, &mut rng_from(seed));
    let s: CoreStack = sample_cores(
        &PhysicalDims::uniform(d, 4).unwrap(),
        &BondDims::uniform(d, 3, mode).unwrap(),
        &perm,
        mode,
        Profile::FullRank,
        seed,
    )
    .unwrap();
    let o = make_exact_oracle(s);
    let cfg = RecoveryConfig::new(2, 1, seed).unwrap();
    let r = match mode {
        Mode::Ring => recover_ring_traced(&o, &cfg),
        Mode::Train => recover_train_traced(&o, &cfg),
    }
    .unwrap();
    (o.stats().count, same_class(&r.perm, &perm, mode).unwrap())
}

fn query_complexity() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (mode, c, p) in [(Mode::Ring, C_RING, 4), (Mode::Train, C_TRAIN, 3)] {
        let mut worst = 0.0f64;
        for d in [8usize, 12, 16] {
            let scale = d as f64 * (d as f64).log2() * 4f64.powi(p);
            for seed in 0..20 {
                let (count, ok) = query_count(mode, d, seed);
                pass &= ok && count as f64 <= QUERY_SLACK * c * scale;
                worst = worst.max(count as f64 / scale);
            }
        }
        parts.push(format!("{mode:?} C {worst:.4} (frozen {c})"));
    }
    outcome(pass, parts.join(", "))
}

fn gaussian(rows: usize, cols: usize, scale: f64, rng: &mut impl Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || scale * rng.sample::<f64, _>(StandardNormal))
}

fn perturbation() -> Outcome {
    let mut rng = rng_from(10);
    let mut weyl_violations = 0;
    for _ in 0..100 {
        let (rows, cols) = (rng.random_range(2..=30), rng.random_range(2..=30));
        let scale = 10f64.powf(rng.random_range(-3.0..1.0));
        let m = gaussian(rows, cols, 1.0, &mut rng);
        let e = gaussian(rows, cols, scale, &mut rng);
        let (sm, se, sme) = (
            singular_values(m.view()).unwrap(),
            singular_values(e.view()).unwrap(),
            singular_values((&m + &e).view()).unwrap(),
        );
        let slack = WEYL_REL_TOL * (sm.max() + se.max());
        weyl_violations +=
            (1..=rows.min(cols)).filter(|&k| (sme.sigma(k) - sm.sigma(k)).abs() > se.max() + slack).count();
    }

    let (m1, m2, draws) = (50usize, 50usize, 1000);
    let edge = (m1 as f64).sqrt() + (m2 as f64).sqrt();
    let maxima: Vec<f64> =
        (0..draws).map(|_| singular_values(gaussian(m1, m2, 1.0, &mut rng).view()).unwrap().max()).collect();
    let mut tails = Vec::new();
    let mut tail_ok = true;
    for t in [1.0f64, 2.0, 3.0] {
        let freq = maxima.iter().filter(|&&s| s > edge + t).count() as f64 / draws as f64;
        let bound = 2.0 * (-t * t / 2.0).exp();
        tail_ok &= freq < bound;
        tails.push(format!("t={t}: {freq:.3} < {bound:.3}"));
    }
    outcome(
        weyl_violations == 0 && tail_ok,
        format!("{weyl_violations} Weyl violations over 100 pairs; tail {}", tails.join(", ")),
    )
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("noiseless ring recovery", || noiseless(ExperimentMode::Ring)),
        ("noiseless train recovery", || noiseless(ExperimentMode::Train)),
        ("witness rank identities", witness_ranks),
        ("rank bounds on random stacks", rank_bounds),
        ("robustness full-rank vs near-deficient", robustness),
        ("vote dominance", vote_dominance),
        ("baseline comparison", baseline),
        ("potts free energy", potts),
        ("query complexity", query_complexity),
        ("perturbation invariants", perturbation),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let o = run();
        failed += usize::from(!o.pass);
        println!(
            "{} {:>2} {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            t0.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
