use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::fmath::cos;

/// Settings shared by every integral in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Gauss-Legendre nodes per panel.
    pub nodes_per_piece: usize,
    /// Panel subdivision factor between successive refinements.
    pub refinement_factor: usize,
    pub target_rel_tol: f64,
    pub max_refinements: usize,
    /// Longest panel (years) used by the tabulated kernel and drift grids.
    pub max_panel_width: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            nodes_per_piece: 16,
            refinement_factor: 2,
            target_rel_tol: 1e-10,
            max_refinements: 8,
            max_panel_width: 0.5,
        }
    }
}

impl QuadratureSpec {
    /// The same spec with twice the nodes per panel (used by self checks).
    pub fn doubled(&self) -> Self {
        QuadratureSpec {
            nodes_per_piece: 2 * self.nodes_per_piece,
            ..*self
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.nodes_per_piece < 2 || self.nodes_per_piece > 256 {
            return Err(domain("nodes_per_piece must lie in [2, 256]"));
        }
        if self.refinement_factor < 2 {
            return Err(domain("refinement_factor must be at least 2"));
        }
        if !(self.target_rel_tol > 0.0) {
            return Err(domain("target_rel_tol must be positive"));
        }
        if !(self.max_panel_width > 0.0) {
            return Err(domain("max_panel_width must be positive"));
        }
        Ok(())
    }
}

/// Gauss-Legendre rule on [-1, 1], with barycentric weights for
/// polynomial interpolation through the same nodes.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    bary: Vec<f64>,
    // partial[j*n + m] = ∫_{-1}^{x_j} ℓ_m(x) dx for the Lagrange basis ℓ_m
    partial: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi's initial guess, then Newton on P_n.
            let mut x = cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        let mut bary = alloc::vec![1.0; n];
        for j in 0..n {
            for k in 0..n {
                if k != j {
                    bary[j] /= nodes[j] - nodes[k];
                }
            }
        }
        // Rescale: only ratios matter and this keeps things O(1).
        let scale = bary.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        for b in &mut bary {
            *b /= scale;
        }
        let mut rule = GaussLegendre { nodes, weights, bary, partial: Vec::new() };
        let mut partial = alloc::vec![0.0; n * n];
        let mut basis = alloc::vec![0.0; n];
        for j in 0..n {
            let b = rule.nodes[j];
            for i in 0..n {
                let y = rule.node_on(-1.0, b, i);
                let w = rule.weight_on(-1.0, b, i);
                rule.lagrange_basis(y, &mut basis);
                for m in 0..n {
                    partial[j * n + m] += w * basis[m];
                }
            }
        }
        rule.partial = partial;
        rule
    }

    fn lagrange_basis(&self, s: f64, out: &mut [f64]) {
        let mut den = 0.0;
        for j in 0..self.len() {
            let d = s - self.nodes[j];
            if d == 0.0 {
                out.iter_mut().for_each(|o| *o = 0.0);
                out[j] = 1.0;
                return;
            }
            out[j] = self.bary[j] / d;
            den += out[j];
        }
        out.iter_mut().for_each(|o| *o /= den);
    }

    /// Integrals from `a` to each node of [a, b] of the polynomial
    /// interpolating `values` at those nodes.
    pub fn running_integrals(&self, a: f64, b: f64, values: &[f64], out: &mut [f64]) {
        let n = self.len();
        let h = 0.5 * (b - a);
        for j in 0..n {
            let row = &self.partial[j * n..(j + 1) * n];
            out[j] = h * row.iter().zip(values).map(|(p, v)| p * v).sum::<f64>();
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Node `j` mapped to [a, b].
    #[inline]
    pub fn node_on(&self, a: f64, b: f64, j: usize) -> f64 {
        0.5 * (a + b) + 0.5 * (b - a) * self.nodes[j]
    }

    /// Weight `j` scaled to [a, b].
    #[inline]
    pub fn weight_on(&self, a: f64, b: f64, j: usize) -> f64 {
        0.5 * (b - a) * self.weights[j]
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        if a == b {
            return 0.0;
        }
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + h * x);
        }
        s * h
    }

    /// Interpolate values given at the nodes of [a, b] to `x`.
    pub fn interpolate(&self, a: f64, b: f64, values: &[f64], x: f64) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        let s = if b > a { (2.0 * x - a - b) / (b - a) } else { 0.0 };
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..self.len() {
            let d = s - self.nodes[j];
            if d == 0.0 {
                return values[j];
            }
            let t = self.bary[j] / d;
            num += t * values[j];
            den += t;
        }
        num / den
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrate `f` over [a, b] with Gauss-Legendre panels split at `splits`,
/// halving every panel until two successive estimates agree.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    splits: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(a <= b) {
        return Err(domain("integrate: need a <= b"));
    }
    if a == b {
        return Ok(0.0);
    }
    spec.validate()?;
    let rule = GaussLegendre::new(spec.nodes_per_piece);
    let mut edges: Vec<f64> = Vec::with_capacity(splits.len() + 2);
    edges.push(a);
    let mut inner: Vec<f64> = splits.iter().copied().filter(|&s| s > a && s < b).collect();
    inner.sort_by(|x, y| x.total_cmp(y));
    inner.dedup();
    edges.extend(inner);
    edges.push(b);

    let estimate = |edges: &[f64], f: &mut F| -> (f64, f64) {
        let mut s = 0.0;
        let mut l1 = 0.0;
        for w in edges.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            for j in 0..rule.len() {
                let v = f(rule.node_on(lo, hi, j));
                let wt = rule.weight_on(lo, hi, j);
                s += wt * v;
                l1 += wt * v.abs();
            }
        }
        (s, l1)
    };

    let (mut prev, _) = estimate(&edges, &mut f);
    if prev.is_nan() {
        return Err(Error::Evaluation("integrand returned NaN".into()));
    }
    let mut before = prev;
    for _ in 0..spec.max_refinements {
        let mut finer = Vec::with_capacity(edges.len() * spec.refinement_factor);
        for w in edges.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            for k in 0..spec.refinement_factor {
                finer.push(lo + (hi - lo) * k as f64 / spec.refinement_factor as f64);
            }
        }
        finer.push(b);
        edges = finer;
        let (cur, l1) = estimate(&edges, &mut f);
        if cur.is_nan() {
            return Err(Error::Evaluation("integrand returned NaN".into()));
        }
        let diff = (cur - prev).abs();
        if diff <= spec.target_rel_tol * cur.abs() || diff <= 1e-15 * l1 {
            return Ok(cur);
        }
        before = prev;
        prev = cur;
    }
    Err(Error::Tolerance { last: prev, previous: before })
}

/// A function tabulated at Gauss-Legendre nodes on a panel grid, with its
/// running integral. Evaluation interpolates within the containing panel.
#[derive(Debug, Clone)]
pub struct PanelFunction {
    edges: Vec<f64>,
    values: Vec<f64>,
    cumulative: Vec<f64>,
    n: usize,
}

impl PanelFunction {
    /// `values` holds `rule.len()` samples per panel, panel after panel.
    pub fn new(edges: Vec<f64>, values: Vec<f64>, rule: &GaussLegendre) -> Self {
        let n = rule.len();
        assert_eq!(values.len(), n * (edges.len() - 1));
        let mut cumulative = Vec::with_capacity(edges.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for (k, w) in edges.windows(2).enumerate() {
            let h = 0.5 * (w[1] - w[0]);
            let mut s = 0.0;
            for j in 0..n {
                s += rule.weights()[j] * values[k * n + j];
            }
            acc += s * h;
            cumulative.push(acc);
        }
        PanelFunction { edges, values, cumulative, n }
    }

    pub fn start(&self) -> f64 {
        self.edges[0]
    }

    pub fn end(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Samples at the nodes of panel `k`.
    pub fn panel_values(&self, k: usize) -> &[f64] {
        &self.values[k * self.n..(k + 1) * self.n]
    }

    fn panel_of(&self, x: f64) -> usize {
        let k = self.edges.partition_point(|&e| e <= x);
        k.saturating_sub(1).min(self.edges.len() - 2)
    }

    pub fn value(&self, rule: &GaussLegendre, x: f64) -> f64 {
        let k = self.panel_of(x);
        rule.interpolate(self.edges[k], self.edges[k + 1], self.panel_values(k), x)
    }

    /// Integral over [a, b] (a <= b), integrating the interpolant directly
    /// on partial panels so short intervals keep full relative accuracy.
    pub fn integral_between(&self, rule: &GaussLegendre, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let ka = self.panel_of(a);
        let kb = self.panel_of(b);
        let partial = |k: usize, lo: f64, hi: f64| {
            let (pa, pb) = (self.edges[k], self.edges[k + 1]);
            let vals = self.panel_values(k);
            if lo <= pa && hi >= pb {
                return self.cumulative[k + 1] - self.cumulative[k];
            }
            rule.integrate(lo, hi, |u| rule.interpolate(pa, pb, vals, u))
        };
        if ka == kb {
            return partial(ka, a, b);
        }
        partial(ka, a, self.edges[ka + 1])
            + (self.cumulative[kb] - self.cumulative[ka + 1])
            + partial(kb, self.edges[kb], b)
    }

    /// Integral from the grid start to `x`.
    pub fn integral_to(&self, rule: &GaussLegendre, x: f64) -> f64 {
        if x <= self.edges[0] {
            return 0.0;
        }
        let k = self.panel_of(x);
        let (a, b) = (self.edges[k], self.edges[k + 1]);
        if x >= b {
            return self.cumulative[k + 1];
        }
        let vals = self.panel_values(k);
        self.cumulative[k] + rule.integrate(a, x, |u| rule.interpolate(a, b, vals, u))
    }
}
