//! State grids: uniform and piecewise-uniform, with anchor bookkeeping.
//!
//! A barrier is placed *on* the grid and a strike (payoff kink) *midway*
//! between two adjacent nodes; both are recorded as anchors and checked.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::Scalar;

/// Where an anchor must sit relative to the nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnchorKind {
    OnGrid,
    Midway,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Anchor {
    pub value: f64,
    pub kind: AnchorKind,
}

/// Strictly increasing node vector `y_0 < ... < y_n` with anchors.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    anchors: Vec<Anchor>,
    /// Messages produced during construction (e.g. a large step ratio).
    pub diagnostics: Vec<String>,
}

const ANCHOR_TOL: f64 = 1e-12;
/// Step-ratio bound above which construction emits a diagnostic.
pub const DEFAULT_RATIO_BOUND: f64 = 4.0;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= ANCHOR_TOL * a.abs().max(b.abs()).max(1.0)
}

impl Grid {
    /// Wraps explicit nodes; checks monotonicity and anchors.
    pub fn from_nodes(nodes: Vec<f64>, anchors: Vec<Anchor>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::domain(format!(
                "a grid needs at least 3 nodes, got {}",
                nodes.len()
            )));
        }
        if let Some(i) = (1..nodes.len()).find(|&i| !(nodes[i] > nodes[i - 1])) {
            return Err(Error::domain(format!(
                "nodes must be strictly increasing (y[{}] = {} >= y[{i}] = {})",
                i - 1,
                nodes[i - 1],
                nodes[i]
            )));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("grid nodes must be finite"));
        }
        let g = Grid {
            nodes,
            anchors,
            diagnostics: Vec::new(),
        };
        g.check_anchors()?;
        Ok(g)
    }

    /// `n + 1` equally spaced nodes on `[l, r]`.
    pub fn uniform(l: f64, r: f64, n: usize) -> Result<Self> {
        if !(l < r) {
            return Err(Error::domain(format!("uniform grid needs l < r, got [{l}, {r}]")));
        }
        if n < 2 {
            return Err(Error::domain(format!("uniform grid needs n >= 2, got {n}")));
        }
        let h = (r - l) / n as f64;
        let mut nodes: Vec<f64> = (0..=n).map(|i| l + i as f64 * h).collect();
        nodes[n] = r;
        Grid::from_nodes(nodes, vec![])
    }

    /// Piecewise-uniform grid with the barrier on a node and the strike midway.
    ///
    /// Block counts run left to right. For `K < L` the nodes are
    /// `{l + (i+½)h₁} ∪ {K + h₁/2 + i h₂} ∪ {L + i h₃}` with
    /// `h₁ = (K-l)/n1`, `h₂ = (L-K-h₁/2)/n2`, `h₃ = (r-L)/n3`; `L < K` is the
    /// mirror image.
    pub fn piecewise_uniform(
        l: f64,
        r: f64,
        strike: f64,
        barrier: f64,
        n1: usize,
        n2: usize,
        n3: usize,
    ) -> Result<Self> {
        if strike == barrier {
            return Err(Error::usage(
                "strike equals barrier: no grid can put L on a node and K midway; \
                 use the two-grid pricing path instead",
            ));
        }
        if !(l < strike.min(barrier) && strike.max(barrier) < r) {
            return Err(Error::domain(format!(
                "need l < min(K, L) and max(K, L) < r, got l = {l}, K = {strike}, L = {barrier}, r = {r}"
            )));
        }
        if n1 == 0 || n2 == 0 || n3 == 0 {
            return Err(Error::domain("block counts must be at least 1"));
        }
        let mut g = if strike < barrier {
            let nodes = pu_nodes(l, r, strike, barrier, n1, n2, n3)?;
            Grid::from_nodes(nodes, vec![])?
        } else {
            let mirrored = pu_nodes(-r, -l, -strike, -barrier, n3, n2, n1)?;
            let nodes: Vec<f64> = mirrored.iter().rev().map(|x| -x).collect();
            Grid::from_nodes(nodes, vec![])?
        };
        g.anchors = vec![
            Anchor {
                value: barrier,
                kind: AnchorKind::OnGrid,
            },
            Anchor {
                value: strike,
                kind: AnchorKind::Midway,
            },
        ];
        g.check_anchors()?;
        g.check_ratio(DEFAULT_RATIO_BOUND);
        Ok(g)
    }

    /// Piecewise-uniform grid with `n` total steps split across the three
    /// blocks in proportion to their widths (minimum 2 per block).
    pub fn piecewise_uniform_budget(l: f64, r: f64, strike: f64, barrier: f64, n: usize) -> Result<Self> {
        let (lo, hi) = (strike.min(barrier), strike.max(barrier));
        let counts = split_budget(n, &[lo - l, hi - lo, r - hi])?;
        Grid::piecewise_uniform(l, r, strike, barrier, counts[0], counts[1], counts[2])
    }

    /// Two uniform blocks meeting exactly at `barrier` (barrier on a node).
    pub fn barrier_on_grid(l: f64, r: f64, barrier: f64, n: usize) -> Result<Self> {
        if !(l < barrier && barrier < r) {
            return Err(Error::domain(format!(
                "need l < L < r, got l = {l}, L = {barrier}, r = {r}"
            )));
        }
        let c = split_budget(n, &[barrier - l, r - barrier])?;
        let h1 = (barrier - l) / c[0] as f64;
        let h2 = (r - barrier) / c[1] as f64;
        let mut nodes: Vec<f64> = (0..c[0]).map(|i| l + i as f64 * h1).collect();
        nodes.extend((0..=c[1]).map(|i| barrier + i as f64 * h2));
        *nodes.last_mut().unwrap() = r;
        let mut g = Grid::from_nodes(
            nodes,
            vec![Anchor {
                value: barrier,
                kind: AnchorKind::OnGrid,
            }],
        )?;
        g.check_ratio(DEFAULT_RATIO_BOUND);
        Ok(g)
    }

    /// Two uniform blocks with `strike` midway between adjacent nodes.
    pub fn strike_midway(l: f64, r: f64, strike: f64, n: usize) -> Result<Self> {
        if !(l < strike && strike < r) {
            return Err(Error::domain(format!(
                "need l < K < r, got l = {l}, K = {strike}, r = {r}"
            )));
        }
        let c = split_budget(n, &[strike - l, r - strike])?;
        let h1 = (strike - l) / c[0] as f64;
        let h2 = (r - strike - 0.5 * h1) / c[1] as f64;
        let mut nodes: Vec<f64> = (0..c[0]).map(|i| l + (i as f64 + 0.5) * h1).collect();
        nodes.extend((0..=c[1]).map(|i| strike + 0.5 * h1 + i as f64 * h2));
        *nodes.last_mut().unwrap() = r;
        let mut g = Grid::from_nodes(
            nodes,
            vec![Anchor {
                value: strike,
                kind: AnchorKind::Midway,
            }],
        )?;
        g.check_ratio(DEFAULT_RATIO_BOUND);
        Ok(g)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn anchors(&self) -> &[Anchor] {
        &self.anchors
    }

    /// Number of nodes (`n + 1`).
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn lower(&self) -> f64 {
        self.nodes[0]
    }

    pub fn upper(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// `δ⁺x = x⁺ - x` at interior index `i`.
    pub fn delta_plus(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    /// `δ⁻x = x - x⁻` at interior index `i`.
    pub fn delta_minus(&self, i: usize) -> f64 {
        self.nodes[i] - self.nodes[i - 1]
    }

    /// `δx = (δ⁺x + δ⁻x)/2`.
    pub fn delta(&self, i: usize) -> f64 {
        0.5 * (self.nodes[i + 1] - self.nodes[i - 1])
    }

    pub fn max_step(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn min_step(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn step_ratio(&self) -> f64 {
        self.max_step() / self.min_step()
    }

    /// Cell boundaries `mid_{-1} = -∞, mid_j = (y_j + y_{j+1})/2, mid_n = +∞`
    /// so that node `j` owns `(bounds[j], bounds[j+1]]`.
    pub fn cell_bounds(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.len() + 1);
        b.push(f64::NEG_INFINITY);
        b.extend(self.nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        b.push(f64::INFINITY);
        b
    }

    /// Index of the node equal to `x` (relative tolerance 1e-12).
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let i = self.nearest(x);
        close(self.nodes[i], x).then_some(i)
    }

    pub fn nearest(&self, x: f64) -> usize {
        let p = self.nodes.partition_point(|&y| y < x);
        if p == 0 {
            0
        } else if p == self.len() {
            self.len() - 1
        } else if (x - self.nodes[p - 1]) <= (self.nodes[p] - x) {
            p - 1
        } else {
            p
        }
    }

    /// Largest index with `y < x`.
    pub fn last_below(&self, x: f64) -> Option<usize> {
        self.nodes.partition_point(|&y| y < x).checked_sub(1)
    }

    /// Smallest index with `y >= x`.
    pub fn first_at_or_above(&self, x: f64) -> Option<usize> {
        let p = self.nodes.partition_point(|&y| y < x);
        (p < self.len()).then_some(p)
    }

    /// Verifies every anchor against the nodes.
    pub fn check_anchors(&self) -> Result<()> {
        for a in &self.anchors {
            match a.kind {
                AnchorKind::OnGrid => {
                    if self.index_of(a.value).is_none() {
                        return Err(Error::domain(format!(
                            "anchor {} is not on the grid (nearest node {})",
                            a.value,
                            self.nodes[self.nearest(a.value)]
                        )));
                    }
                }
                AnchorKind::Midway => {
                    let p = self.nodes.partition_point(|&y| y < a.value);
                    let ok = p > 0 && p < self.len() && close(0.5 * (self.nodes[p - 1] + self.nodes[p]), a.value);
                    if !ok {
                        return Err(Error::domain(format!(
                            "anchor {} is not midway between adjacent nodes",
                            a.value
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_ratio(&mut self, bound: f64) {
        let ratio = self.step_ratio();
        if ratio > bound {
            let msg = format!("step ratio {ratio:.3} exceeds {bound}");
            log::warn!("{msg}");
            self.diagnostics.push(msg);
        }
    }

    /// Cubic Lagrange interpolation of nodal `values` at `x` (4 nearest nodes).
    pub fn interpolate<T: Scalar>(&self, values: &[T], x: f64) -> T {
        assert_eq!(values.len(), self.len(), "one value per node expected");
        if let Some(i) = self.index_of(x) {
            return values[i];
        }
        let n = self.len();
        let p = self.nodes.partition_point(|&y| y < x);
        let start = p.saturating_sub(2).min(n.saturating_sub(4));
        let idx: Vec<usize> = (start..(start + 4).min(n)).collect();
        let mut acc = T::zero();
        for &j in &idx {
            let mut w = 1.0;
            for &k in &idx {
                if k != j {
                    w *= (x - self.nodes[k]) / (self.nodes[j] - self.nodes[k]);
                }
            }
            acc += values[j] * w;
        }
        acc
    }

    /// CSV with header `index,node,step`; `step` is the distance to the next
    /// node (empty on the last row).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,node,step\n");
        for (i, y) in self.nodes.iter().enumerate() {
            if i + 1 < self.len() {
                let _ = writeln!(s, "{i},{y:.17e},{:.17e}", self.nodes[i + 1] - y);
            } else {
                let _ = writeln!(s, "{i},{y:.17e},");
            }
        }
        s
    }
}

/// Localization domain `x₀ ± width · scale · √T`.
pub fn default_domain(x0: f64, scale: f64, horizon: f64, width: f64) -> (f64, f64) {
    let half = width * scale * horizon.max(0.0).sqrt();
    (x0 - half, x0 + half)
}

fn pu_nodes(l: f64, r: f64, k: f64, bar: f64, n1: usize, n2: usize, n3: usize) -> Result<Vec<f64>> {
    let h1 = (k - l) / n1 as f64;
    let h2 = (bar - k - 0.5 * h1) / n2 as f64;
    let h3 = (r - bar) / n3 as f64;
    if !(h1 > 0.0 && h2 > 0.0 && h3 > 0.0) {
        return Err(Error::domain(format!(
            "nonpositive block width (h1 = {h1}, h2 = {h2}, h3 = {h3}); \
             refine the strike block or move the barrier"
        )));
    }
    let mut nodes = Vec::with_capacity(n1 + n2 + n3 + 1);
    nodes.extend((0..n1).map(|i| l + (i as f64 + 0.5) * h1));
    nodes.extend((0..n2).map(|i| k + 0.5 * h1 + i as f64 * h2));
    nodes.extend((0..=n3).map(|i| bar + i as f64 * h3));
    *nodes.last_mut().unwrap() = r;
    Ok(nodes)
}

/// Splits `n` steps over blocks in proportion to `widths`, at least 2 each.
pub fn split_budget(n: usize, widths: &[f64]) -> Result<Vec<usize>> {
    let k = widths.len();
    if widths.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::domain("block widths must be positive"));
    }
    if n < 2 * k {
        return Err(Error::domain(format!(
            "a budget of {n} steps cannot give {k} blocks at least 2 steps each"
        )));
    }
    let total: f64 = widths.iter().sum();
    let mut c: Vec<usize> = widths
        .iter()
        .map(|w| ((n as f64 * w / total).round() as usize).max(2))
        .collect();
    // settle the rounding surplus on the widest block that can absorb it
    loop {
        let s: usize = c.iter().sum();
        if s == n {
            break;
        }
        let order = {
            let mut o: Vec<usize> = (0..k).collect();
            o.sort_by(|&a, &b| widths[b].partial_cmp(&widths[a]).unwrap());
            o
        };
        if s > n {
            let j = *order.iter().find(|&&j| c[j] > 2).unwrap();
            c[j] -= 1;
        } else {
            c[order[0]] += 1;
        }
    }
    Ok(c)
}
