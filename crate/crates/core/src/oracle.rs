//! Entry-query access to a tensor.
//!
//! The recovery algorithms never see cores; they only call
//! [`EntryOracle::query`]. Every oracle counts its queries so query
//! complexity can be measured.

use std::collections::HashSet;
use std::sync::Mutex;

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from;
use crate::tensor_core::{CoreStack, Permutation, PhysicalDims};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct QueryStats {
    pub count: u64,
    pub distinct: u64,
}

pub trait EntryOracle: Send + Sync {
    fn dims(&self) -> &PhysicalDims;

    /// Observe `T(x)`; `x` is 0-based.
    fn query(&self, x: &[usize]) -> Result<f64>;

    fn stats(&self) -> QueryStats;
}

pub fn query_stats(oracle: &dyn EntryOracle) -> QueryStats {
    oracle.stats()
}

impl<O: EntryOracle + ?Sized> EntryOracle for &O {
    fn dims(&self) -> &PhysicalDims {
        (**self).dims()
    }
    fn query(&self, x: &[usize]) -> Result<f64> {
        (**self).query(x)
    }
    fn stats(&self) -> QueryStats {
        (**self).stats()
    }
}

impl<O: EntryOracle + ?Sized> EntryOracle for Box<O> {
    fn dims(&self) -> &PhysicalDims {
        (**self).dims()
    }
    fn query(&self, x: &[usize]) -> Result<f64> {
        (**self).query(x)
    }
    fn stats(&self) -> QueryStats {
        (**self).stats()
    }
}

#[derive(Debug, Default)]
struct Counter {
    inner: Mutex<CounterState>,
}

#[derive(Debug, Default)]
struct CounterState {
    count: u64,
    seen: HashSet<Vec<usize>>,
}

impl Counter {
    fn record(&self, x: &[usize]) {
        let mut s = self.inner.lock().expect("counter poisoned");
        s.count += 1;
        if !s.seen.contains(x) {
            s.seen.insert(x.to_vec());
        }
    }

    fn stats(&self) -> QueryStats {
        let s = self.inner.lock().expect("counter poisoned");
        QueryStats { count: s.count, distinct: s.seen.len() as u64 }
    }
}

/// Exact entries of a TR/TT tensor.
#[derive(Debug)]
pub struct ExactOracle {
    stack: CoreStack,
    counter: Counter,
}

pub fn make_exact_oracle(stack: CoreStack) -> ExactOracle {
    ExactOracle { stack, counter: Counter::default() }
}

impl ExactOracle {
    pub fn stack(&self) -> &CoreStack {
        &self.stack
    }
}

impl EntryOracle for ExactOracle {
    fn dims(&self) -> &PhysicalDims {
        self.stack.dims()
    }

    fn query(&self, x: &[usize]) -> Result<f64> {
        let v = self.stack.evaluate_entry(x)?;
        self.counter.record(x);
        Ok(v)
    }

    fn stats(&self) -> QueryStats {
        self.counter.stats()
    }
}

/// Adds fresh `N(0, sigma^2)` noise to every observation of `inner`.
///
/// The k-th query receives the k-th draw of a ChaCha8 stream keyed by
/// `seed`, so re-querying an entry sees independent noise and a
/// single-threaded run is replayable.
#[derive(Debug)]
pub struct NoisyOracle<O> {
    inner: O,
    sigma: f64,
    rng: Mutex<ChaCha8Rng>,
    counter: Counter,
}

pub fn make_noisy_oracle<O: EntryOracle>(inner: O, sigma: f64, seed: u64) -> Result<NoisyOracle<O>> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::domain(format!("noise level must be a finite value >= 0, got {sigma}")));
    }
    Ok(NoisyOracle { inner, sigma, rng: Mutex::new(rng_from(seed)), counter: Counter::default() })
}

impl<O> NoisyOracle<O> {
    pub fn inner(&self) -> &O {
        &self.inner
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl<O: EntryOracle> EntryOracle for NoisyOracle<O> {
    fn dims(&self) -> &PhysicalDims {
        self.inner.dims()
    }

    fn query(&self, x: &[usize]) -> Result<f64> {
        let v = self.inner.query(x)?;
        self.counter.record(x);
        if self.sigma == 0.0 {
            return Ok(v);
        }
        let z: f64 = StandardNormal.sample(&mut *self.rng.lock().expect("rng poisoned"));
        Ok(v + self.sigma * z)
    }

    fn stats(&self) -> QueryStats {
        self.counter.stats()
    }
}

/// A ring Potts model whose couplings are chosen from a fixed pool.
///
/// Entry `x` assigns coupling `pool[x_i]` to the bond owned by site `i`;
/// sites interact along the ring order `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct PottsSpec {
    pub spins: usize,
    pub beta: f64,
    pub pool: Vec<Array2<f64>>,
    pub tau: Permutation,
}

impl PottsSpec {
    pub fn new(spins: usize, beta: f64, pool: Vec<Array2<f64>>, tau: Permutation) -> Result<Self> {
        if !beta.is_finite() || beta <= 0.0 {
            return Err(Error::domain(format!("inverse temperature must be positive, got {beta}")));
        }
        if pool.is_empty() {
            return Err(Error::domain("coupling pool is empty"));
        }
        if tau.len() < 3 {
            return Err(Error::domain("need at least 3 sites"));
        }
        for (p, j) in pool.iter().enumerate() {
            if j.dim() != (spins, spins) {
                return Err(Error::domain(format!("coupling {p} has shape {:?}, expected ({spins}, {spins})", j.dim())));
            }
            if j.iter().any(|v| !v.is_finite()) || (0..spins).any(|a| (0..a).any(|b| j[[a, b]] != j[[b, a]])) {
                return Err(Error::domain(format!("coupling {p} is not a finite symmetric matrix")));
            }
        }
        Ok(Self { spins, beta, pool, tau })
    }

    /// Pool of symmetric couplings with i.i.d. `N(0, 1)` diagonal and upper
    /// triangle.
    pub fn sample_pool<R: Rng + ?Sized>(spins: usize, size: usize, rng: &mut R) -> Vec<Array2<f64>> {
        (0..size)
            .map(|_| {
                let mut j = Array2::zeros((spins, spins));
                for a in 0..spins {
                    for b in a..spins {
                        let v: f64 = StandardNormal.sample(rng);
                        j[[a, b]] = v;
                        j[[b, a]] = v;
                    }
                }
                j
            })
            .collect()
    }

    pub fn sites(&self) -> usize {
        self.tau.len()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = PottsDoc {
            d: self.sites(),
            r: self.spins,
            beta: self.beta,
            tau: self.tau.clone(),
            j: self.pool.iter().map(|m| m.outer_iter().map(|row| row.to_vec()).collect()).collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PottsDoc = serde_json::from_str(text)?;
        if doc.tau.len() != doc.d {
            return Err(Error::Parse(format!("field d = {} but tau has {} entries", doc.d, doc.tau.len())));
        }
        let mut pool = Vec::with_capacity(doc.j.len());
        for (p, rows) in doc.j.into_iter().enumerate() {
            if rows.len() != doc.r || rows.iter().any(|row| row.len() != doc.r) {
                return Err(Error::Parse(format!("J[{p}] is not {0} x {0}", doc.r)));
            }
            let flat: Vec<f64> = rows.into_iter().flatten().collect();
            pool.push(Array2::from_shape_vec((doc.r, doc.r), flat).expect("checked shape"));
        }
        Self::new(doc.r, doc.beta, pool, doc.tau)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PottsDoc {
    d: usize,
    r: usize,
    beta: f64,
    tau: Permutation,
    #[serde(rename = "J")]
    j: Vec<Vec<Vec<f64>>>,
}

/// Free energy `-(1/beta) log tr(prod_j exp.(-beta J_{tau(j)}))`, with `exp.`
/// the element-wise exponential and natural log.
#[derive(Debug)]
pub struct PottsOracle {
    spec: PottsSpec,
    dims: PhysicalDims,
    /// Element-wise `exp(-beta J)`, row-major, one per pool entry.
    weights: Vec<Vec<f64>>,
    counter: Counter,
}

pub fn make_potts_oracle(spec: PottsSpec) -> Result<PottsOracle> {
    let dims = PhysicalDims::uniform(spec.sites(), spec.pool.len())?;
    let weights = spec.pool.iter().map(|j| j.iter().map(|&v| (-spec.beta * v).exp()).collect()).collect();
    Ok(PottsOracle { spec, dims, weights, counter: Counter::default() })
}

impl PottsOracle {
    pub fn spec(&self) -> &PottsSpec {
        &self.spec
    }

    fn free_energy(&self, x: &[usize]) -> Result<f64> {
        let r = self.spec.spins;
        let tau = &self.spec.tau;
        let mut acc = self.weights[x[tau.apply(0)]].clone();
        let mut next = vec![0.0; r * r];
        let mut log_scale = 0.0;
        for p in 1..tau.len() {
            let w = &self.weights[x[tau.apply(p)]];
            for a in 0..r {
                for b in 0..r {
                    next[a * r + b] = (0..r).map(|k| acc[a * r + k] * w[k * r + b]).sum();
                }
            }
            // keep the running product near unit scale; beta * |J| can be large
            let m = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if m > 0.0 && m.is_finite() {
                next.iter_mut().for_each(|v| *v /= m);
                log_scale += m.ln();
            }
            std::mem::swap(&mut acc, &mut next);
        }
        let trace: f64 = (0..r).map(|a| acc[a * r + a]).sum();
        if !trace.is_finite() || trace <= 0.0 {
            return Err(Error::Evaluation(format!("partition trace {trace} is not positive")));
        }
        Ok(-(trace.ln() + log_scale) / self.spec.beta)
    }
}

impl EntryOracle for PottsOracle {
    fn dims(&self) -> &PhysicalDims {
        &self.dims
    }

    fn query(&self, x: &[usize]) -> Result<f64> {
        self.dims.check_index(x)?;
        let v = self.free_energy(x)?;
        self.counter.record(x);
        Ok(v)
    }

    fn stats(&self) -> QueryStats {
        self.counter.stats()
    }
}
