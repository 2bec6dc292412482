//! Box coverings of the Pareto set.
//!
//! The global picture is obtained set-orientedly: starting from a search
//! domain, alternate
//!
//! 1. *subdivide* — split every box in two along its longest edge, and
//! 2. *select* — seed each box with low-discrepancy sample points, advance
//!    every sample by a few accepted descent steps, and keep exactly the
//!    boxes that contain at least one of the resulting points.
//!
//! Boxes that no trajectory visits cannot contain Pareto critical points (at
//! sampling resolution) and are discarded, so the retained cells concentrate
//! on the Pareto set while remaining a covering of it.
//!
//! All sampling is Halton (dimension-wise prime bases) with indices derived
//! from the seed, so coverings are reproducible bit for bit.

use std::collections::HashSet;
use std::io::Write;

use nalgebra::DVector;
use thiserror::Error;

use crate::descent::{self, DescentConfig};
use crate::io::fmt_f64;
use crate::problem::MopProblem;

#[derive(Debug, Error)]
pub enum SubdivisionError {
    #[error("box corners must satisfy lower ≤ upper componentwise")]
    InvalidCorners,
    #[error("steps must be at least 1")]
    InvalidSteps,
    #[error("target depth must be at least 1")]
    InvalidDepth,
    #[error("domain dimension {domain} does not match problem dimension {problem}")]
    DimensionMismatch { domain: usize, problem: usize },
    #[error("dimension {0} exceeds the supported Halton bases")]
    DimensionTooLarge(usize),
    #[error("Pareto set lost: selection emptied the covering at depth {depth}")]
    ParetoSetLost { depth: u32 },
    #[error(transparent)]
    Descent(#[from] descent::DescentError),
}

/// An axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Box {
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
    pub depth: u32,
}

impl Box {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self, SubdivisionError> {
        if lower.len() != upper.len()
            || lower.iter().zip(upper.iter()).any(|(l, u)| l > u)
            || lower.iter().chain(upper.iter()).any(|v| !v.is_finite())
        {
            return Err(SubdivisionError::InvalidCorners);
        }
        Ok(Self {
            lower,
            upper,
            depth: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Closed containment (used for covering checks).
    pub fn contains(&self, p: &DVector<f64>) -> bool {
        p.len() == self.dim()
            && self
                .lower
                .iter()
                .zip(self.upper.iter())
                .zip(p.iter())
                .all(|((l, u), v)| *l <= *v && *v <= *u)
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(self.upper.iter())
            .map(|(l, u)| u - l)
            .product()
    }

    pub fn diagonal(&self) -> f64 {
        (&self.upper - &self.lower).norm()
    }

    pub fn center(&self) -> DVector<f64> {
        (&self.lower + &self.upper) * 0.5
    }
}

/// A set of equal-depth cells of the dyadic subdivision of `domain`.
#[derive(Debug, Clone)]
pub struct BoxCovering {
    pub boxes: Vec<Box>,
    pub domain: Box,
    pub depth: u32,
    pub samples_per_box: usize,
}

impl BoxCovering {
    /// The depth-0 covering: the domain itself.
    pub fn initial(domain: Box, samples_per_box: usize) -> Self {
        Self {
            boxes: vec![domain.clone()],
            domain,
            depth: 0,
            samples_per_box,
        }
    }

    pub fn total_volume(&self) -> f64 {
        self.boxes.iter().map(Box::volume).sum()
    }

    /// Covering JSON: `{domain, depth, boxes: [{lower, upper}]}`.
    pub fn write_json(&self, w: &mut impl Write) -> std::io::Result<()> {
        let vec_json = |v: &DVector<f64>| {
            let inner = v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",");
            format!("[{inner}]")
        };
        writeln!(w, "{{")?;
        writeln!(
            w,
            "  \"domain\": {{\"lower\": {}, \"upper\": {}}},",
            vec_json(&self.domain.lower),
            vec_json(&self.domain.upper)
        )?;
        writeln!(w, "  \"depth\": {},", self.depth)?;
        writeln!(w, "  \"boxes\": [")?;
        for (i, b) in self.boxes.iter().enumerate() {
            let comma = if i + 1 < self.boxes.len() { "," } else { "" };
            writeln!(
                w,
                "    {{\"lower\": {}, \"upper\": {}}}{comma}",
                vec_json(&b.lower),
                vec_json(&b.upper)
            )?;
        }
        writeln!(w, "  ]")?;
        writeln!(w, "}}")?;
        Ok(())
    }
}

/// Splits every box in two along its longest edge (ties: lowest axis).
pub fn subdivide(cov: &BoxCovering) -> BoxCovering {
    let mut boxes = Vec::with_capacity(cov.boxes.len() * 2);
    for b in &cov.boxes {
        let mut axis = 0usize;
        let mut longest = f64::NEG_INFINITY;
        for d in 0..b.dim() {
            let len = b.upper[d] - b.lower[d];
            if len > longest {
                longest = len;
                axis = d;
            }
        }
        let mid = 0.5 * (b.lower[axis] + b.upper[axis]);
        let mut upper_left = b.upper.clone();
        upper_left[axis] = mid;
        let mut lower_right = b.lower.clone();
        lower_right[axis] = mid;
        boxes.push(Box {
            lower: b.lower.clone(),
            upper: upper_left,
            depth: b.depth + 1,
        });
        boxes.push(Box {
            lower: lower_right,
            upper: b.upper.clone(),
            depth: b.depth + 1,
        });
    }
    BoxCovering {
        boxes,
        domain: cov.domain.clone(),
        depth: cov.depth + 1,
        samples_per_box: cov.samples_per_box,
    }
}

const HALTON_PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical-inverse (van der Corput) value of `index` in the given base.
fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Per-axis cell widths of the regular dyadic grid at the covering's depth.
///
/// All boxes at equal depth are congruent because the split axis sequence
/// only depends on the (shared) box shape, so the grid is uniform.
fn grid_widths(domain: &Box, depth: u32) -> DVector<f64> {
    let n = domain.dim();
    let mut lens: Vec<f64> = (0..n).map(|d| domain.upper[d] - domain.lower[d]).collect();
    for _ in 0..depth {
        let mut axis = 0usize;
        let mut longest = f64::NEG_INFINITY;
        for (d, len) in lens.iter().enumerate() {
            if *len > longest {
                longest = *len;
                axis = d;
            }
        }
        lens[axis] *= 0.5;
    }
    DVector::from_vec(lens)
}

/// Half-open cell coordinates of `p` in the depth grid; the domain's upper
/// face is closed. Returns `None` for points outside the domain.
fn cell_of(domain: &Box, widths: &DVector<f64>, p: &DVector<f64>) -> Option<Vec<i64>> {
    let n = domain.dim();
    let mut cell = Vec::with_capacity(n);
    for d in 0..n {
        if p[d] < domain.lower[d] || p[d] > domain.upper[d] {
            return None;
        }
        let cells = ((domain.upper[d] - domain.lower[d]) / widths[d]).round() as i64;
        let mut idx = ((p[d] - domain.lower[d]) / widths[d]).floor() as i64;
        if idx >= cells {
            idx = cells - 1; // upper face belongs to the last cell
        }
        cell.push(idx);
    }
    Some(cell)
}

/// Sample–descend–select round: keeps exactly the boxes containing at least
/// one sample endpoint after at most `steps` accepted descent steps.
///
/// Sampling is Halton with index `1 + seed + box·samples_per_box + s`, so the
/// outcome is a pure function of `(covering, problem, cfg, steps, seed)`.
/// Failed descents keep their last iterate.
pub fn select(
    cov: &BoxCovering,
    problem: &MopProblem,
    cfg: &DescentConfig,
    steps: usize,
    seed: u64,
) -> Result<BoxCovering, SubdivisionError> {
    if steps == 0 {
        return Err(SubdivisionError::InvalidSteps);
    }
    let n = cov.domain.dim();
    if n != problem.dim() {
        return Err(SubdivisionError::DimensionMismatch {
            domain: n,
            problem: problem.dim(),
        });
    }
    if n > HALTON_PRIMES.len() {
        return Err(SubdivisionError::DimensionTooLarge(n));
    }

    let mut landings: Vec<DVector<f64>> = Vec::with_capacity(cov.boxes.len() * cov.samples_per_box);
    for (bi, b) in cov.boxes.iter().enumerate() {
        for s in 0..cov.samples_per_box {
            let index = 1 + seed + (bi * cov.samples_per_box + s) as u64;
            let mut x0 = DVector::zeros(n);
            for d in 0..n {
                x0[d] = b.lower[d] + halton(index, HALTON_PRIMES[d]) * (b.upper[d] - b.lower[d]);
            }
            let landing = match descent::solve_limited(problem, &x0, cfg, Some(steps)) {
                Ok(trace) => trace.final_x().clone(),
                Err(_) => x0,
            };
            landings.push(landing);
        }
    }

    let widths = grid_widths(&cov.domain, cov.depth);
    let mut occupied: HashSet<Vec<i64>> = HashSet::new();
    for p in &landings {
        if let Some(cell) = cell_of(&cov.domain, &widths, p) {
            occupied.insert(cell);
        }
    }
    let boxes: Vec<Box> = cov
        .boxes
        .iter()
        .filter(|b| {
            cell_of(&cov.domain, &widths, &b.center())
                .map(|cell| occupied.contains(&cell))
                .unwrap_or(false)
        })
        .cloned()
        .collect();
    Ok(BoxCovering {
        boxes,
        domain: cov.domain.clone(),
        depth: cov.depth,
        samples_per_box: cov.samples_per_box,
    })
}

/// Extra knobs of the covering driver.
#[derive(Debug, Clone)]
pub struct SubdivisionConfig {
    pub samples_per_box: usize,
    /// Accepted descent steps per sample inside `select`.
    pub steps: usize,
}

impl Default for SubdivisionConfig {
    fn default() -> Self {
        Self {
            samples_per_box: 10,
            steps: 10,
        }
    }
}

/// Alternates [`subdivide`] and [`select`] down to `target_depth`.
///
/// Fails with `ParetoSetLost` if selection ever empties the covering, which
/// indicates too-aggressive selection parameters.
pub fn cover(
    problem: &MopProblem,
    domain: Box,
    target_depth: u32,
    cfg: &DescentConfig,
    subdiv: &SubdivisionConfig,
    seed: u64,
) -> Result<BoxCovering, SubdivisionError> {
    if target_depth == 0 {
        return Err(SubdivisionError::InvalidDepth);
    }
    let mut cov = BoxCovering::initial(domain, subdiv.samples_per_box);
    for depth in 1..=target_depth {
        cov = subdivide(&cov);
        cov = select(&cov, problem, cfg, subdiv.steps, seed.wrapping_add(depth as u64))?;
        if cov.boxes.is_empty() {
            return Err(SubdivisionError::ParetoSetLost { depth });
        }
    }
    Ok(cov)
}
