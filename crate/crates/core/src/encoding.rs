//! Real-coded chromosome shared by the GA individuals and the PSO particles.
//!
//! Genes are stored flat in five consecutive blocks:
//!
//! | block        | length | meaning                                   |
//! |--------------|--------|-------------------------------------------|
//! | `Assoc`      | U      | serving BS index, integral, 0 = MBS       |
//! | `Power`      | U      | transmit power (W)                        |
//! | `FirstHop`   | U·K    | bits offloaded to the serving BS          |
//! | `SecondHop`  | U·K    | bits forwarded SBS → MBS                  |
//! | `BandSplit`  | 1      | macro-tier band fraction λ                |
//!
//! The per-task blocks are indexed by virtual device, column-major over the
//! `U × K` task matrix: virtual index `v` is device `v mod U`, task `v div U`.

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::sysmodel::Solution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Block {
    Assoc,
    Power,
    FirstHop,
    SecondHop,
    BandSplit,
}

impl Block {
    pub const ALL: [Block; 5] =
        [Block::Assoc, Block::Power, Block::FirstHop, Block::SecondHop, Block::BandSplit];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub imds: usize,
    pub tasks: usize,
}

impl Layout {
    pub fn of(scenario: &Scenario) -> Self {
        Self { imds: scenario.num_imds(), tasks: scenario.num_tasks() }
    }

    pub fn virtual_len(&self) -> usize {
        self.imds * self.tasks
    }

    pub fn len(&self) -> usize {
        2 * self.imds + 2 * self.virtual_len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn range(&self, block: Block) -> Range<usize> {
        let u = self.imds;
        let v = self.virtual_len();
        match block {
            Block::Assoc => 0..u,
            Block::Power => u..2 * u,
            Block::FirstHop => 2 * u..2 * u + v,
            Block::SecondHop => 2 * u + v..2 * u + 2 * v,
            Block::BandSplit => 2 * u + 2 * v..2 * u + 2 * v + 1,
        }
    }

    /// 0-based virtual index to 0-based `(device, task)`.
    pub fn pair(&self, v: usize) -> (usize, usize) {
        (v % self.imds, v / self.imds)
    }

    pub fn virtual_index(&self, imd: usize, task: usize) -> usize {
        task * self.imds + imd
    }
}

/// 1-based virtual index to 1-based `(device, task)`, column-major.
pub fn virtual_index_to_pair(index: usize, imds: usize, tasks: usize) -> Result<(usize, usize)> {
    let max = imds * tasks;
    if index == 0 || index > max {
        return Err(Error::IndexOutOfRange { index, max });
    }
    let (m, k) = Layout { imds, tasks }.pair(index - 1);
    Ok((m + 1, k + 1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneVector {
    layout: Layout,
    genes: Vec<f64>,
}

impl GeneVector {
    pub fn zeros(layout: Layout) -> Self {
        Self { layout, genes: vec![0.0; layout.len()] }
    }

    pub fn from_genes(layout: Layout, genes: Vec<f64>) -> Self {
        assert_eq!(genes.len(), layout.len(), "gene count does not match layout");
        Self { layout, genes }
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn genes(&self) -> &[f64] {
        &self.genes
    }

    pub fn genes_mut(&mut self) -> &mut [f64] {
        &mut self.genes
    }

    pub fn block(&self, block: Block) -> &[f64] {
        &self.genes[self.layout.range(block)]
    }

    pub fn block_mut(&mut self, block: Block) -> &mut [f64] {
        let r = self.layout.range(block);
        &mut self.genes[r]
    }

    pub fn band_split(&self) -> f64 {
        self.block(Block::BandSplit)[0]
    }
}

/// PSO velocity: one real per gene, including the association block.
pub type Velocity = GeneVector;

/// Feasible box of every gene plus the block diagonals used by the diversity
/// measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneDomain {
    pub layout: Layout,
    pub theta: f64,
    pub max_assoc: f64,
    pub p_max: f64,
    /// Task size per virtual index.
    pub task_bits: Vec<f64>,
    /// Diagonal lengths J1..J5 of the five blocks' boxes.
    pub diagonals: [f64; 5],
}

impl GeneDomain {
    pub fn new(scenario: &Scenario) -> Self {
        let layout = Layout::of(scenario);
        let theta = scenario.theta();
        let task_bits: Vec<f64> = (0..layout.virtual_len())
            .map(|v| {
                let (m, k) = layout.pair(v);
                scenario.task_bits[m][k]
            })
            .collect();
        let max_assoc = scenario.num_sbs() as f64;
        let p_max = scenario.config.p_max_w;
        let u = layout.imds as f64;
        let bits_diag = task_bits.iter().map(|d| (d - theta).powi(2)).sum::<f64>().sqrt();
        let diagonals = [u.sqrt() * max_assoc, u.sqrt() * (p_max - theta), bits_diag, bits_diag, 1.0 - theta];
        Self { layout, theta, max_assoc, p_max, task_bits, diagonals }
    }

    /// Width of the static box of gene `index`; the second-hop genes use the
    /// task size even though their live upper bound is the first-hop gene.
    pub fn width(&self, index: usize) -> f64 {
        let l = &self.layout;
        if l.range(Block::Assoc).contains(&index) {
            self.max_assoc
        } else if l.range(Block::Power).contains(&index) {
            self.p_max - self.theta
        } else if l.range(Block::FirstHop).contains(&index) {
            self.task_bits[index - l.range(Block::FirstHop).start] - self.theta
        } else if l.range(Block::SecondHop).contains(&index) {
            self.task_bits[index - l.range(Block::SecondHop).start] - self.theta
        } else {
            1.0 - self.theta
        }
    }
}

fn clamp(x: f64, lo: f64, hi: f64) -> f64 {
    if x.is_nan() {
        lo
    } else {
        x.clamp(lo, hi)
    }
}

/// Projects onto the feasible set: integral association in `{0..S̄}`,
/// `θ ≤ q ≤ p̂`, `θ ≤ g ≤ d`, `θ ≤ h ≤ g`, `θ ≤ v ≤ 1`. Idempotent.
pub fn project(mut genes: GeneVector, domain: &GeneDomain) -> GeneVector {
    project_in_place(&mut genes, domain);
    genes
}

pub fn project_in_place(genes: &mut GeneVector, domain: &GeneDomain) {
    let theta = domain.theta;
    for b in genes.block_mut(Block::Assoc) {
        *b = clamp(b.round(), 0.0, domain.max_assoc);
    }
    for q in genes.block_mut(Block::Power) {
        *q = clamp(*q, theta, domain.p_max);
    }
    let layout = genes.layout;
    let first = layout.range(Block::FirstHop);
    let second = layout.range(Block::SecondHop);
    for v in 0..layout.virtual_len() {
        let g = clamp(genes.genes[first.start + v], theta, domain.task_bits[v]);
        genes.genes[first.start + v] = g;
        let h = &mut genes.genes[second.start + v];
        *h = clamp(*h, theta, g);
    }
    let v = &mut genes.block_mut(Block::BandSplit)[0];
    *v = clamp(*v, theta, 1.0);
}

pub fn is_projected(genes: &GeneVector, domain: &GeneDomain) -> bool {
    project(genes.clone(), domain) == *genes
}

/// Uniform draw on `(0, a]`.
fn draw_up_to(rng: &mut impl Rng, a: f64) -> f64 {
    a * (1.0 - rng.random::<f64>())
}

/// Random feasible chromosome: association uniform over all base stations,
/// every continuous gene uniform on `(0, upper]`, then θ-floored.
pub fn init_genes(domain: &GeneDomain, rng: &mut impl Rng) -> GeneVector {
    let layout = domain.layout;
    let mut genes = GeneVector::zeros(layout);
    let s = domain.max_assoc as usize;
    for b in genes.block_mut(Block::Assoc) {
        *b = rng.random_range(0..=s) as f64;
    }
    for q in genes.block_mut(Block::Power) {
        *q = draw_up_to(rng, domain.p_max);
    }
    let first = layout.range(Block::FirstHop).start;
    let second = layout.range(Block::SecondHop).start;
    for v in 0..layout.virtual_len() {
        let g = draw_up_to(rng, domain.task_bits[v]);
        genes.genes[first + v] = g;
        genes.genes[second + v] = draw_up_to(rng, g);
    }
    genes.block_mut(Block::BandSplit)[0] = draw_up_to(rng, 1.0);
    project(genes, domain)
}

/// Projected chromosome to decision variables. The second-hop gene of an
/// MBS-served device is carried over unchanged; the model ignores it.
pub fn decode(genes: &GeneVector) -> Solution {
    let layout = genes.layout;
    let (u, k) = (layout.imds, layout.tasks);
    let first = genes.block(Block::FirstHop);
    let second = genes.block(Block::SecondHop);
    let rows = |block: &[f64]| -> Vec<Vec<f64>> {
        (0..u).map(|m| (0..k).map(|t| block[layout.virtual_index(m, t)]).collect()).collect()
    };
    Solution {
        assoc: genes.block(Block::Assoc).iter().map(|b| *b as usize).collect(),
        power: genes.block(Block::Power).to_vec(),
        first_hop: rows(first),
        second_hop: rows(second),
        lambda: genes.band_split(),
    }
}

/// Inverse of [`decode`].
pub fn encode(sol: &Solution, layout: Layout) -> GeneVector {
    let mut genes = GeneVector::zeros(layout);
    for (dst, b) in genes.block_mut(Block::Assoc).iter_mut().zip(&sol.assoc) {
        *dst = *b as f64;
    }
    genes.block_mut(Block::Power).copy_from_slice(&sol.power);
    for m in 0..layout.imds {
        for t in 0..layout.tasks {
            let v = layout.virtual_index(m, t);
            genes.block_mut(Block::FirstHop)[v] = sol.first_hop[m][t];
            genes.block_mut(Block::SecondHop)[v] = sol.second_hop[m][t];
        }
    }
    genes.block_mut(Block::BandSplit)[0] = sol.lambda;
    genes
}
