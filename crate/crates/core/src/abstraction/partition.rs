use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::AbstractionError;
use crate::scltl::Observation;

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, AbstractionError> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(AbstractionError::Invalid(
                "bounds must have the same non-zero dimension".into(),
            ));
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(AbstractionError::Invalid(format!(
                    "axis extent [{l}, {u}] is empty or non-finite"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| l <= v && v <= u)
    }

    pub fn clamp(&self, x: &mut [f64]) -> bool {
        let mut clamped = false;
        for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            if *v < *l {
                *v = *l;
                clamped = true;
            } else if *v > *u {
                *v = *u;
                clamped = true;
            }
        }
        clamped
    }
}

/// What happens to the plant when it would leave the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// Leaving the domain enters an absorbing `out` region.
    #[default]
    Sink,
    /// The domain is walled: the state is clamped back onto its boundary.
    Wall,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub id: usize,
    pub cell: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub center: Vec<f64>,
    pub label: Observation,
}

/// Uniform grid over a box plus one off-grid sink state.
///
/// Region ids are row-major with axis 0 varying fastest; the sink takes the
/// id just past the last region.
#[derive(Debug, Clone)]
pub struct Partition {
    domain: BoxDomain,
    divisions: Vec<usize>,
    regions: Vec<Region>,
    boundary: BoundaryMode,
}

impl Partition {
    pub fn new(
        domain: BoxDomain,
        divisions: Vec<usize>,
        labels: &HashMap<Vec<usize>, Observation>,
        boundary: BoundaryMode,
    ) -> Result<Self, AbstractionError> {
        let n = domain.dim();
        if divisions.len() != n || divisions.contains(&0) {
            return Err(AbstractionError::Invalid(
                "need one positive division count per axis".into(),
            ));
        }
        for (cell, label) in labels {
            if cell.len() != n || cell.iter().zip(&divisions).any(|(c, d)| c >= d) {
                return Err(AbstractionError::Invalid(format!(
                    "label cell {cell:?} is outside the grid"
                )));
            }
            if label.as_str() == Observation::OUT {
                return Err(AbstractionError::Invalid(
                    "the 'out' observation is reserved for the sink".into(),
                ));
            }
        }
        let total: usize = divisions.iter().product();
        let mut regions = Vec::with_capacity(total);
        for id in 0..total {
            let mut rest = id;
            let cell: Vec<usize> = divisions
                .iter()
                .map(|&d| {
                    let c = rest % d;
                    rest /= d;
                    c
                })
                .collect();
            let (lower, upper): (Vec<f64>, Vec<f64>) = (0..n)
                .map(|i| {
                    (
                        grid_line(&domain, &divisions, i, cell[i]),
                        grid_line(&domain, &divisions, i, cell[i] + 1),
                    )
                })
                .unzip();
            let center = lower.iter().zip(&upper).map(|(a, b)| (a + b) / 2.0).collect();
            let label = labels.get(&cell).cloned().unwrap_or_else(Observation::none);
            regions.push(Region {
                id,
                cell,
                lower,
                upper,
                center,
                label,
            });
        }
        Ok(Self {
            domain,
            divisions,
            regions,
            boundary,
        })
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn divisions(&self) -> &[usize] {
        &self.divisions
    }

    pub fn boundary(&self) -> BoundaryMode {
        self.boundary
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn region(&self, id: usize) -> &Region {
        &self.regions[id]
    }

    pub fn sink(&self) -> usize {
        self.regions.len()
    }

    /// Regions plus the sink.
    pub fn num_states(&self) -> usize {
        self.regions.len() + 1
    }

    pub fn label(&self, id: usize) -> Observation {
        if id == self.sink() {
            Observation::out()
        } else {
            self.regions[id].label.clone()
        }
    }

    pub fn labels(&self) -> Vec<Observation> {
        (0..self.num_states()).map(|q| self.label(q)).collect()
    }

    pub fn id_of(&self, cell: &[usize]) -> Option<usize> {
        if cell.len() != self.dim() || cell.iter().zip(&self.divisions).any(|(c, d)| c >= d) {
            return None;
        }
        let mut id = 0;
        let mut stride = 1;
        for (c, d) in cell.iter().zip(&self.divisions) {
            id += c * stride;
            stride *= d;
        }
        Some(id)
    }

    /// Region containing `x`, or the sink when `x` lies outside the domain.
    /// Cells are half-open except the topmost along each axis.
    pub fn locate(&self, x: &[f64]) -> usize {
        if !self.domain.contains(x) {
            return self.sink();
        }
        let cell: Vec<usize> = (0..self.dim())
            .map(|i| {
                let d = self.divisions[i];
                let (l, u) = (self.domain.lower[i], self.domain.upper[i]);
                let mut k = (((x[i] - l) / (u - l)) * d as f64).floor() as usize;
                k = k.min(d - 1);
                while k > 0 && x[i] < grid_line(&self.domain, &self.divisions, i, k) {
                    k -= 1;
                }
                while k + 1 < d && x[i] >= grid_line(&self.domain, &self.divisions, i, k + 1) {
                    k += 1;
                }
                k
            })
            .collect();
        self.id_of(&cell).expect("cell within grid")
    }

    /// Face-adjacent regions in ascending id order.
    pub fn neighbors(&self, id: usize) -> Vec<usize> {
        let cell = &self.regions[id].cell;
        let mut out = Vec::with_capacity(2 * self.dim());
        for i in 0..self.dim() {
            if cell[i] > 0 {
                let mut c = cell.clone();
                c[i] -= 1;
                out.push(self.id_of(&c).unwrap());
            }
            if cell[i] + 1 < self.divisions[i] {
                let mut c = cell.clone();
                c[i] += 1;
                out.push(self.id_of(&c).unwrap());
            }
        }
        out.sort_unstable();
        out
    }

    /// Set of successor positions that count as landing in region `id`.
    /// Under walls, outer faces extend to infinity because clamping maps
    /// everything beyond them onto the face.
    pub fn landing_extent(&self, id: usize) -> (Vec<f64>, Vec<f64>) {
        let r = &self.regions[id];
        let mut lo = r.lower.clone();
        let mut hi = r.upper.clone();
        if self.boundary == BoundaryMode::Wall {
            for i in 0..self.dim() {
                if r.cell[i] == 0 {
                    lo[i] = f64::NEG_INFINITY;
                }
                if r.cell[i] + 1 == self.divisions[i] {
                    hi[i] = f64::INFINITY;
                }
            }
        }
        (lo, hi)
    }
}

fn grid_line(domain: &BoxDomain, divisions: &[usize], axis: usize, k: usize) -> f64 {
    let d = divisions[axis];
    let (l, u) = (domain.lower[axis], domain.upper[axis]);
    if k == 0 {
        l
    } else if k == d {
        u
    } else {
        l + (u - l) * (k as f64) / (d as f64)
    }
}
