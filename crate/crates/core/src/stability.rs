//! How much the leading rotated component moves as more components are
//! rotated, for the first PPC and for three ways of picking a "first"
//! VARIMAX component.

use crate::basis::PeriodicSubBasis;
use crate::error::{Error, Result};
use crate::fpca::FpcaResult;
use crate::ppc::ppc_rotation_weighted;
use crate::varimax::{varimax, VarimaxOptions};

/// `L2` distances between the leading components at `m_prev` and `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub m_prev: usize,
    pub m: usize,
    pub ppc: f64,
    /// VARIMAX component explaining the most variance.
    pub varimax_max_variance: f64,
    /// VARIMAX component closest to the one picked at `m_prev`.
    pub varimax_closest_previous: f64,
    /// VARIMAX component closest to the first fPC.
    pub varimax_closest_fpc: f64,
}

/// `min(||a - b||, ||a + b||)` for coefficient vectors in an orthonormal basis.
pub fn aligned_distance(a: &[f64], b: &[f64]) -> f64 {
    let (mut minus, mut plus) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        minus += (x - y) * (x - y);
        plus += (x + y) * (x + y);
    }
    minus.min(plus).sqrt()
}

fn closest(rows: &[Vec<f64>], target: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, r) in rows.iter().enumerate() {
        let d = aligned_distance(r, target);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

struct Leading {
    ppc: Vec<f64>,
    max_variance: Vec<f64>,
    closest_previous: Vec<f64>,
    closest_fpc: Vec<f64>,
}

pub fn stability_trace(
    fpca: &FpcaResult,
    periodic: &PeriodicSubBasis,
    grid: &[f64],
    m_list: &[usize],
    opts: &VarimaxOptions,
) -> Result<Vec<StabilityRow>> {
    if m_list.len() < 2 {
        return Err(Error::invalid("stability needs at least two values of M"));
    }
    if m_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("M values must be strictly increasing"));
    }
    let total = fpca.num_components();
    if m_list[0] < 2 || m_list[m_list.len() - 1] > total {
        return Err(Error::OutOfRange(format!("M values must lie in 2..={total}")));
    }
    let first_fpc = fpca.components.row(0);
    let mut rows = Vec::with_capacity(m_list.len() - 1);
    let mut prev: Option<(usize, Leading)> = None;
    for &m in m_list {
        let ppc = ppc_rotation_weighted(&fpca.leading(m), &fpca.eigenvalues[..m], periodic)?;
        let vm = varimax(fpca, m, grid, opts)?;
        let rotated: Vec<Vec<f64>> = (0..m).map(|i| vm.rotated_components.row(i)).collect();
        let closest_previous = match &prev {
            Some((_, p)) => rotated[closest(&rotated, &p.closest_previous)].clone(),
            None => rotated[0].clone(),
        };
        let current = Leading {
            ppc: ppc.ppcs.row(0),
            max_variance: rotated[0].clone(),
            closest_fpc: rotated[closest(&rotated, &first_fpc)].clone(),
            closest_previous,
        };
        if let Some((m_prev, p)) = prev {
            rows.push(StabilityRow {
                m_prev,
                m,
                ppc: aligned_distance(&p.ppc, &current.ppc),
                varimax_max_variance: aligned_distance(&p.max_variance, &current.max_variance),
                varimax_closest_previous: aligned_distance(&p.closest_previous, &current.closest_previous),
                varimax_closest_fpc: aligned_distance(&p.closest_fpc, &current.closest_fpc),
            });
        }
        prev = Some((m, current));
    }
    Ok(rows)
}
