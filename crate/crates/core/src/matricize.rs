//! Probe blocks and their three comparison matricizations.
//!
//! A probe block varies 3 or 4 chosen axes over their full range while every
//! other axis is frozen at a random background value. Matrices group probe
//! axes into rows and columns; inside a group the axes are flattened in
//! ascending axis order, row-major.

use ndarray::{Array2, ArrayD, Dimension, IxDyn};
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::oracle::EntryOracle;
use crate::seed::rng_from;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeBlock {
    probes: Vec<usize>,
    /// Probe axes sorted ascending; the axes of `values`.
    axes: Vec<usize>,
    background: Vec<usize>,
    values: ArrayD<f64>,
}

impl ProbeBlock {
    /// Build a block from known values laid out over `probes` sorted
    /// ascending.
    pub fn from_values(probes: Vec<usize>, background: Vec<usize>, values: ArrayD<f64>) -> Result<Self> {
        check_distinct(&probes)?;
        let mut axes = probes.clone();
        axes.sort_unstable();
        if values.ndim() != axes.len() {
            return Err(Error::domain(format!("block has {} axes, expected {}", values.ndim(), axes.len())));
        }
        Ok(Self { probes, axes, background, values: values.as_standard_layout().into_owned() })
    }

    /// Probe axes in caller order.
    pub fn probes(&self) -> &[usize] {
        &self.probes
    }

    /// Probe axes in ascending order, matching the axes of [`values`](Self::values).
    pub fn axes(&self) -> &[usize] {
        &self.axes
    }

    /// Full background index; entries at probe axes are meaningless.
    pub fn background(&self) -> &[usize] {
        &self.background
    }

    pub fn values(&self) -> &ArrayD<f64> {
        &self.values
    }

    fn extent(&self, axis: usize) -> usize {
        let k = self.axes.iter().position(|&a| a == axis).expect("probe axis");
        self.values.shape()[k]
    }
}

fn check_distinct(probes: &[usize]) -> Result<()> {
    for (k, p) in probes.iter().enumerate() {
        if probes[..k].contains(p) {
            return Err(Error::domain(format!("probe axis {} given twice", p + 1)));
        }
    }
    Ok(())
}

/// Query the block over `probes` with a background drawn uniformly from
/// `seed`. Costs exactly `prod n_probe` queries.
pub fn sample_probe_block<O: EntryOracle + ?Sized>(oracle: &O, probes: &[usize], seed: u64) -> Result<ProbeBlock> {
    check_distinct(probes)?;
    let dims = oracle.dims();
    let d = dims.len();
    if let Some(&bad) = probes.iter().find(|&&p| p >= d) {
        return Err(Error::domain(format!("probe axis {} outside 1..={d}", bad + 1)));
    }
    let mut axes = probes.to_vec();
    axes.sort_unstable();

    let mut rng = rng_from(seed);
    let background: Vec<usize> =
        (0..d).map(|i| if axes.contains(&i) { 0 } else { rng.random_range(0..dims.get(i)) }).collect();

    let shape: Vec<usize> = axes.iter().map(|&a| dims.get(a)).collect();
    let total: usize = shape.iter().product();
    let mut x = background.clone();
    let mut local = vec![0usize; axes.len()];
    let mut values = Vec::with_capacity(total);
    for _ in 0..total {
        for (&a, &v) in axes.iter().zip(&local) {
            x[a] = v;
        }
        values.push(oracle.query(&x)?);
        crate::tensor_core::stack_increment(&mut local, &shape);
    }
    let values = ArrayD::from_shape_vec(IxDyn(&shape), values).expect("shape matches count");
    Ok(ProbeBlock { probes: probes.to_vec(), axes, background, values })
}

/// Row and column axis groups of one matricization, each ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grouping {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl Grouping {
    fn new(mut rows: Vec<usize>, mut cols: Vec<usize>) -> Self {
        rows.sort_unstable();
        cols.sort_unstable();
        Self { rows, cols }
    }
}

/// Three reshapes of one probe block.
#[derive(Debug, Clone)]
pub struct MatricizationTriple {
    groupings: [Grouping; 3],
    matrices: [Array2<f64>; 3],
    block: ProbeBlock,
}

impl MatricizationTriple {
    pub fn groupings(&self) -> &[Grouping; 3] {
        &self.groupings
    }

    pub fn matrices(&self) -> &[Array2<f64>; 3] {
        &self.matrices
    }

    pub fn block(&self) -> &ProbeBlock {
        &self.block
    }

    /// Row and column of the block entry `x` (indexed by full axis number)
    /// in matrix `k`.
    pub fn locate(&self, k: usize, x: &[usize]) -> (usize, usize) {
        let g = &self.groupings[k];
        (flat(&self.block, &g.rows, x), flat(&self.block, &g.cols, x))
    }

    /// Rebuild the block from matrix `k` alone.
    pub fn reconstruct(&self, k: usize) -> ArrayD<f64> {
        let m = &self.matrices[k];
        let mut out = ArrayD::zeros(self.block.values.raw_dim());
        let mut x = vec![0usize; self.block.axes.iter().max().map_or(0, |m| m + 1)];
        for (idx, v) in out.indexed_iter_mut() {
            for (&a, &xi) in self.block.axes.iter().zip(idx.as_array_view().iter()) {
                x[a] = xi;
            }
            let (r, c) = self.locate(k, &x);
            *v = m[[r, c]];
        }
        out
    }
}

fn flat(block: &ProbeBlock, group: &[usize], x: &[usize]) -> usize {
    group.iter().fold(0, |acc, &a| acc * block.extent(a) + x[a])
}

fn matricize(block: &ProbeBlock, g: &Grouping) -> Array2<f64> {
    let rows: usize = g.rows.iter().map(|&a| block.extent(a)).product();
    let cols: usize = g.cols.iter().map(|&a| block.extent(a)).product();
    let mut m = Array2::zeros((rows, cols));
    let mut x = vec![0usize; block.axes.iter().max().map_or(0, |m| m + 1)];
    for (idx, &v) in block.values.indexed_iter() {
        for (&a, &xi) in block.axes.iter().zip(idx.as_array_view().iter()) {
            x[a] = xi;
        }
        m[[flat(block, &g.rows, &x), flat(block, &g.cols, &x)]] = v;
    }
    m
}

fn triple(block: ProbeBlock, groupings: [Grouping; 3]) -> MatricizationTriple {
    let matrices = [0, 1, 2].map(|k| matricize(&block, &groupings[k]));
    MatricizationTriple { groupings, matrices, block }
}

/// `(i1,i2)|(i3,i4)`, `(i1,i3)|(i2,i4)`, `(i1,i4)|(i2,i3)` for probes
/// `(i1,i2,i3,i4)` in caller order.
pub fn reshape_tr_triple(block: ProbeBlock) -> Result<MatricizationTriple> {
    let p = block.probes.clone();
    if p.len() != 4 {
        return Err(Error::domain(format!("ring comparison needs 4 probes, block has {}", p.len())));
    }
    let groupings = [
        Grouping::new(vec![p[0], p[1]], vec![p[2], p[3]]),
        Grouping::new(vec![p[0], p[2]], vec![p[1], p[3]]),
        Grouping::new(vec![p[0], p[3]], vec![p[1], p[2]]),
    ];
    Ok(triple(block, groupings))
}

/// `i1|(i2,i3)`, `i2|(i3,i1)`, `i3|(i1,i2)` for probes `(i1,i2,i3)`.
pub fn reshape_tt_triple(block: ProbeBlock) -> Result<MatricizationTriple> {
    let p = block.probes.clone();
    if p.len() != 3 {
        return Err(Error::domain(format!("train comparison needs 3 probes, block has {}", p.len())));
    }
    let groupings = [
        Grouping::new(vec![p[0]], vec![p[1], p[2]]),
        Grouping::new(vec![p[1]], vec![p[2], p[0]]),
        Grouping::new(vec![p[2]], vec![p[0], p[1]]),
    ];
    Ok(triple(block, groupings))
}
