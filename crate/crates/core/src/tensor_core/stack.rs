use ndarray::{Array3, Axis};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{BondDims, Mode, Permutation, PhysicalDims};
use crate::error::{Error, Result};
use crate::seed::rng_from;

/// Largest tensor [`CoreStack::full_contract`] materializes by default.
pub const DEFAULT_CONTRACT_CAP: u128 = 10_000_000;

/// Entry distribution used by [`sample_cores`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Every core entry i.i.d. N(0, 1).
    #[default]
    FullRank,
    /// Entries touching the largest bond index drawn from N(0, 0.1^2), so the
    /// stack is a small perturbation of one with every bond reduced by one.
    NearDeficient,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full_rank" | "full-rank" | "full" => Ok(Profile::FullRank),
            "near_deficient" | "near-deficient" | "near" => Ok(Profile::NearDeficient),
            other => Err(Error::domain(format!("unknown profile {other:?}"))),
        }
    }
}

/// The cores of a TR/TT tensor together with its hidden permutation.
///
/// `cores[i]` belongs to physical axis `i` and has shape
/// `(r_p, n_i, r_{p+1})` with `p = tau^-1(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreStack {
    cores: Vec<Array3<f64>>,
    perm: Permutation,
    mode: Mode,
    dims: PhysicalDims,
    bonds: BondDims,
}

impl CoreStack {
    pub fn new(cores: Vec<Array3<f64>>, perm: Permutation, mode: Mode) -> Result<Self> {
        let d = cores.len();
        if d < 3 {
            return Err(Error::domain(format!("need at least 3 cores, got {d}")));
        }
        if perm.len() != d {
            return Err(Error::domain(format!("permutation has {} entries for {d} cores", perm.len())));
        }
        let cores: Vec<Array3<f64>> = cores.into_iter().map(|c| c.as_standard_layout().into_owned()).collect();
        let dims = PhysicalDims::new(cores.iter().map(|c| c.dim().1).collect())?;
        let bonds = BondDims::new((0..d).map(|p| cores[perm.apply(p)].dim().0).collect())?;

        for p in 0..d {
            let here = cores[perm.apply(p)].dim().2;
            let last = p + 1 == d;
            if last && mode == Mode::Train {
                if here != 1 {
                    return Err(Error::domain(format!("train mode: last core (axis {}) has right bond {here}, expected 1", perm.apply(p))));
                }
                continue;
            }
            let next = cores[perm.apply((p + 1) % d)].dim().0;
            if here != next {
                return Err(Error::domain(format!(
                    "bond mismatch between positions {p} and {}: {here} != {next}",
                    (p + 1) % d
                )));
            }
        }
        bonds.check_mode(mode)?;
        Ok(Self { cores, perm, mode, dims, bonds })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.cores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cores.is_empty()
    }

    pub fn cores(&self) -> &[Array3<f64>] {
        &self.cores
    }

    pub fn perm(&self) -> &Permutation {
        &self.perm
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn dims(&self) -> &PhysicalDims {
        &self.dims
    }

    /// Bond dimensions in chain order, `bonds()[j]` is the left bond of position `j`.
    pub fn bonds(&self) -> &BondDims {
        &self.bonds
    }

    /// `tr(u^{tau(1)}(x_{tau(1)}) ... u^{tau(d)}(x_{tau(d)}))`; in train mode the
    /// product is already `1 x 1`.
    pub fn evaluate_entry(&self, x: &[usize]) -> Result<f64> {
        self.dims.check_index(x)?;
        Ok(self.evaluate_unchecked(x))
    }

    pub(crate) fn evaluate_unchecked(&self, x: &[usize]) -> f64 {
        let d = self.len();
        let r0 = self.bonds.get(0);
        let rmax = self.bonds.max();
        let mut acc = vec![0.0; r0 * rmax];
        let mut next = vec![0.0; r0 * rmax];

        // acc <- slice at position 0, shape r0 x r1
        let first = self.perm.apply(0);
        let (_, n, mut cols) = self.cores[first].dim();
        let data = self.cores[first].as_slice().expect("standard layout");
        for a in 0..r0 {
            let row = &data[(a * n + x[first]) * cols..][..cols];
            acc[a * cols..(a + 1) * cols].copy_from_slice(row);
        }

        for p in 1..d {
            let axis = self.perm.apply(p);
            let core = &self.cores[axis];
            let (ra, n, rb) = core.dim();
            debug_assert_eq!(ra, cols);
            let data = core.as_slice().expect("standard layout");
            let xi = x[axis];
            for a in 0..r0 {
                let out = &mut next[a * rb..(a + 1) * rb];
                out.fill(0.0);
                for k in 0..ra {
                    let coef = acc[a * ra + k];
                    let row = &data[(k * n + xi) * rb..][..rb];
                    for (o, &v) in out.iter_mut().zip(row) {
                        *o += coef * v;
                    }
                }
            }
            std::mem::swap(&mut acc, &mut next);
            cols = rb;
        }
        (0..r0).map(|a| acc[a * cols + a]).sum()
    }

    pub fn full_contract(&self) -> Result<DenseTensor> {
        self.full_contract_with_cap(DEFAULT_CONTRACT_CAP)
    }

    pub fn full_contract_with_cap(&self, cap: u128) -> Result<DenseTensor> {
        let volume = self.dims.volume();
        if volume > cap {
            return Err(Error::Resource { what: "full contraction", needed: volume, cap });
        }
        let mut values = Vec::with_capacity(volume as usize);
        let mut x = vec![0usize; self.len()];
        for _ in 0..volume {
            values.push(self.evaluate_unchecked(&x));
            increment(&mut x, self.dims.as_slice());
        }
        DenseTensor::new(self.dims.clone(), values)
    }

    /// Re-express the same tensor under `tau ∘ alpha^k ∘ beta^reflect`.
    ///
    /// A rotation only relabels which bond is called `r_1`; the cores are
    /// untouched. A reflection reverses the chain, which requires swapping
    /// the two bond axes of every core (`tr(A_1..A_d) = tr(A_d^T..A_1^T)`).
    pub fn transform_representation(&self, k: usize, reflect: bool) -> Result<CoreStack> {
        let d = self.len();
        if self.mode == Mode::Train && !k.is_multiple_of(d) {
            return Err(Error::UnsupportedTransform(format!("rotation by {k} is not a symmetry of a train")));
        }
        let perm = self.perm.transformed(k % d, reflect);
        let cores = if reflect {
            self.cores.iter().map(|c| c.view().permuted_axes([2, 1, 0]).as_standard_layout().into_owned()).collect()
        } else {
            self.cores.clone()
        };
        CoreStack::new(cores, perm, self.mode)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&StackDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: StackDoc = serde_json::from_str(text)?;
        doc.try_into()
    }
}

/// Odometer increment in row-major order (last axis fastest).
pub(crate) fn increment(x: &mut [usize], dims: &[usize]) {
    for axis in (0..x.len()).rev() {
        x[axis] += 1;
        if x[axis] < dims[axis] {
            return;
        }
        x[axis] = 0;
    }
}

/// A fully materialized tensor, row-major (last index fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: PhysicalDims,
    values: Vec<f64>,
}

impl DenseTensor {
    pub fn new(dims: PhysicalDims, values: Vec<f64>) -> Result<Self> {
        if dims.volume() != values.len() as u128 {
            return Err(Error::domain(format!("{} values for a tensor of volume {}", values.len(), dims.volume())));
        }
        Ok(Self { dims, values })
    }

    pub fn dims(&self) -> &PhysicalDims {
        &self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn linear_index(&self, x: &[usize]) -> Result<usize> {
        self.dims.check_index(x)?;
        Ok(x.iter().zip(self.dims.as_slice()).fold(0, |acc, (&xi, &n)| acc * n + xi))
    }

    pub fn get(&self, x: &[usize]) -> Result<f64> {
        Ok(self.values[self.linear_index(x)?])
    }
}

/// Draw a random stack with the given shape data. Cores are filled axis by
/// axis, each in row-major `(left bond, physical, right bond)` order.
pub fn sample_cores(
    dims: &PhysicalDims,
    bonds: &BondDims,
    perm: &Permutation,
    mode: Mode,
    profile: Profile,
    seed: u64,
) -> Result<CoreStack> {
    let d = dims.len();
    if bonds.len() != d || perm.len() != d {
        return Err(Error::domain(format!(
            "inconsistent sizes: {d} physical dims, {} bonds, permutation of {}",
            bonds.len(),
            perm.len()
        )));
    }
    bonds.check_mode(mode)?;
    let inv = perm.inverse();
    let rmax = bonds.max();
    let mut rng = rng_from(seed);
    let mut cores = Vec::with_capacity(d);
    for axis in 0..d {
        let p = inv.apply(axis);
        let (ra, n, rb) = (bonds.get(p), dims.get(axis), bonds.get(p + 1));
        let mut core = Array3::<f64>::zeros((ra, n, rb));
        for ((a, _, b), v) in core.indexed_iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            let damped = profile == Profile::NearDeficient && (a + 1 == rmax || b + 1 == rmax);
            *v = if damped { 0.1 * z } else { z };
        }
        cores.push(core);
    }
    CoreStack::new(cores, perm.clone(), mode)
}

/// Wire form of a [`CoreStack`]. `perm` is 1-based; `cores[i][a][x][b]`.
#[derive(Debug, Serialize, Deserialize)]
struct StackDoc {
    d: usize,
    mode: Mode,
    perm: Permutation,
    dims: PhysicalDims,
    bonds: BondDims,
    cores: Vec<Vec<Vec<Vec<f64>>>>,
}

impl From<&CoreStack> for StackDoc {
    fn from(s: &CoreStack) -> Self {
        let cores = s
            .cores
            .iter()
            .map(|c| {
                c.axis_iter(Axis(0))
                    .map(|m| m.outer_iter().map(|row| row.to_vec()).collect())
                    .collect()
            })
            .collect();
        StackDoc {
            d: s.len(),
            mode: s.mode,
            perm: s.perm.clone(),
            dims: s.dims.clone(),
            bonds: s.bonds.clone(),
            cores,
        }
    }
}

impl TryFrom<StackDoc> for CoreStack {
    type Error = Error;

    fn try_from(doc: StackDoc) -> Result<Self> {
        if doc.cores.len() != doc.d {
            return Err(Error::Parse(format!("field d = {} but {} cores", doc.d, doc.cores.len())));
        }
        let mut cores = Vec::with_capacity(doc.d);
        for (i, c) in doc.cores.into_iter().enumerate() {
            let ra = c.len();
            let n = c.first().map_or(0, |m| m.len());
            let rb = c.first().and_then(|m| m.first()).map_or(0, |v| v.len());
            let flat: Vec<f64> = c.into_iter().flatten().flatten().collect();
            let core = Array3::from_shape_vec((ra, n, rb), flat)
                .map_err(|_| Error::Parse(format!("core {i} is ragged")))?;
            cores.push(core);
        }
        let stack = CoreStack::new(cores, doc.perm, doc.mode)?;
        if stack.dims != doc.dims {
            return Err(Error::Parse(format!("field dims {:?} disagrees with core shapes {:?}", doc.dims, stack.dims)));
        }
        if stack.bonds != doc.bonds {
            return Err(Error::Parse(format!("field bonds {:?} disagrees with core shapes {:?}", doc.bonds, stack.bonds)));
        }
        Ok(stack)
    }
}
