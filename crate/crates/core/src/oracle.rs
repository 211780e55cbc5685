//! Monte Carlo reference pricer.
//!
//! The factor is stepped with its exact Gaussian transition, the installed
//! drift is integrated exactly from the drift table and the sinh part of the
//! rate uses the trapezoid rule on a grid that contains every breakpoint and
//! observation date. Paths come in antithetic pairs. Pairs are grouped into
//! fixed-size blocks, each with its own ChaCha8 stream, and block results are
//! combined by a fixed pairwise tree, so estimates do not depend on how the
//! blocks are scheduled.

use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::drift::BondExpansion;
use crate::error::{invalid, Result};
use crate::fmath::{exp, sinh, sqrt};
use crate::model::Model;
use crate::pricing::{InstrumentKind, InstrumentSpec};

/// Simulation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    /// Total number of paths (rounded up to whole antithetic pairs).
    pub paths: usize,
    pub seed: u64,
    pub steps_per_year: usize,
    /// Antithetic pairs per block.
    pub block_pairs: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { paths: 1_000_000, seed: 42, steps_per_year: 365, block_pairs: 2048 }
    }
}

impl McConfig {
    pub fn pairs(&self) -> usize {
        self.paths.div_ceil(2)
    }

    pub fn blocks(&self) -> usize {
        self.pairs().div_ceil(self.block_pairs)
    }
}

/// What to price on the simulated paths.
#[derive(Debug, Clone, PartialEq)]
pub enum McPayoff {
    /// Zero-coupon bond paying 1 at `maturity`.
    Bond { maturity: f64 },
    Instrument(InstrumentSpec),
}

/// Mean and standard error over antithetic pair averages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub paths: usize,
}

/// Running count, mean and centred sum of squares of pair averages
/// (Welford within a block, Chan et al. when merging).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BlockSum {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl BlockSum {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&self, o: &BlockSum) -> BlockSum {
        if o.n == 0 {
            return *self;
        }
        if self.n == 0 {
            return *o;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        let w = o.n as f64 / n as f64;
        BlockSum { n, mean: self.mean + d * w, m2: self.m2 + o.m2 + d * d * self.n as f64 * w }
    }

    fn estimate(&self) -> McEstimate {
        let n = self.n.max(1) as f64;
        let var = if self.n > 1 { self.m2 / (n - 1.0) } else { 0.0 };
        McEstimate { mean: self.mean, std_error: sqrt(var / n), paths: 2 * self.n as usize }
    }
}

/// Combine per-block sums with a fixed pairwise tree.
pub fn tree_reduce(mut v: Vec<BlockSum>) -> BlockSum {
    if v.is_empty() {
        return BlockSum::default();
    }
    while v.len() > 1 {
        let mut next = Vec::with_capacity(v.len().div_ceil(2));
        for c in v.chunks(2) {
            next.push(if c.len() == 2 { c[0].merge(&c[1]) } else { c[0] });
        }
        v = next;
    }
    v[0]
}

#[derive(Debug, Clone, Copy)]
struct Step {
    decay: f64,
    sd: f64,
    half_h: f64,
    r_star: f64,
    gamma: f64,
    exp_gy: f64,
    y_star: f64,
    direct: bool,
}

enum Prepared {
    Bond { obs: usize, df: f64 },
    Rfr { o1: usize, o2: usize, df2: f64, inv_d12: f64, kinv: f64 },
    Libor { o1: usize, df1: f64, kinv: f64, bond: BondExpansion },
    Swaption { o0: usize, df0: f64, coef: Vec<f64>, bonds: Vec<BondExpansion> },
}

/// A prepared simulation: time grid, step constants and payoffs.
pub struct McRun {
    cfg: McConfig,
    steps: Vec<Step>,
    // grid index of each observation date
    obs_index: Vec<usize>,
    payoffs: Vec<Prepared>,
    second_order: bool,
}

fn obs_slot(obs: &[f64], t: f64) -> usize {
    obs.iter().position(|&o| (o - t).abs() <= 1e-12).expect("observation date registered")
}

impl McRun {
    pub fn new(m: &Model, payoffs: &[McPayoff], cfg: McConfig) -> Result<Self> {
        if cfg.paths == 0 || cfg.steps_per_year == 0 || cfg.block_pairs == 0 {
            return Err(invalid("paths, steps per year and block size must be positive"));
        }
        let mut obs: Vec<f64> = Vec::new();
        for p in payoffs {
            match p {
                McPayoff::Bond { maturity } => obs.push(*maturity),
                McPayoff::Instrument(s) => {
                    s.validate()?;
                    obs.push(s.times[0]);
                    if s.kind == InstrumentKind::RfrCaplet {
                        obs.push(s.times[1]);
                    }
                    m.check_time(s.last_date())?;
                }
            }
        }
        for &t in &obs {
            if !(t > 0.0) {
                return Err(invalid("observation dates must be positive"));
            }
            m.check_time(t)?;
        }
        obs.sort_by(|a, b| a.total_cmp(b));
        obs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
        let end = obs.last().copied().unwrap_or(0.0);

        let n = libm::ceil(end * cfg.steps_per_year as f64).max(1.0) as usize;
        let mut grid: Vec<f64> = (0..=n).map(|i| end * i as f64 / n as f64).collect();
        grid.extend(m.params().breakpoints().into_iter().filter(|&b| b > 0.0 && b < end));
        grid.extend(obs.iter().copied());
        grid.sort_by(|a, b| a.total_cmp(b));
        grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-10);

        let k = m.kernel();
        let steps = grid
            .windows(2)
            .map(|w| {
                let g = m.gamma(w[0]);
                Step {
                    decay: k.phi(w[0], w[1]),
                    sd: sqrt(k.sigma_rr(w[0], w[1])),
                    half_h: 0.5 * (w[1] - w[0]),
                    r_star: m.r_star_integral(w[0], w[1]),
                    gamma: g,
                    exp_gy: exp(g * m.y_star(w[0])),
                    y_star: m.y_star(w[0]),
                    direct: g < 0.1,
                }
            })
            .collect();
        let obs_index: Vec<usize> = obs
            .iter()
            .map(|&t| grid.iter().position(|&g| (g - t).abs() <= 1e-10).unwrap())
            .collect();

        let second_order = m.drift_order() == crate::model::DriftOrder::Second;
        let mut prepared = Vec::with_capacity(payoffs.len());
        for p in payoffs {
            prepared.push(match p {
                McPayoff::Bond { maturity } => Prepared::Bond { obs: obs_slot(&obs, *maturity), df: m.df(*maturity) },
                McPayoff::Instrument(s) => match s.kind {
                    InstrumentKind::RfrCaplet => Prepared::Rfr {
                        o1: obs_slot(&obs, s.times[0]),
                        o2: obs_slot(&obs, s.times[1]),
                        df2: m.df(s.times[1]),
                        inv_d12: 1.0 / m.discount(s.times[0], s.times[1]),
                        kinv: 1.0 + s.strike * s.accruals[0],
                    },
                    InstrumentKind::LiborCaplet => Prepared::Libor {
                        o1: obs_slot(&obs, s.times[0]),
                        df1: m.df(s.times[0]),
                        kinv: 1.0 + s.strike * s.accruals[0],
                        bond: BondExpansion::new(m, s.times[0], s.times[1])?,
                    },
                    InstrumentKind::PayerSwaption => {
                        let mut coef: Vec<f64> = s.accruals.iter().map(|d| s.strike * d).collect();
                        *coef.last_mut().unwrap() += 1.0;
                        Prepared::Swaption {
                            o0: obs_slot(&obs, s.times[0]),
                            df0: m.df(s.times[0]),
                            coef,
                            bonds: s.times[1..]
                                .iter()
                                .map(|&ti| BondExpansion::new(m, s.times[0], ti))
                                .collect::<Result<Vec<_>>>()?,
                        }
                    }
                },
            });
        }
        Ok(McRun { cfg, steps, obs_index, payoffs: prepared, second_order })
    }

    pub fn config(&self) -> &McConfig {
        &self.cfg
    }

    pub fn blocks(&self) -> usize {
        self.cfg.blocks()
    }

    pub fn steps(&self) -> usize {
        self.steps.len()
    }

    fn payoff(&self, p: &Prepared, y: &[f64], z: &[f64]) -> f64 {
        match p {
            Prepared::Bond { obs, df } => df * exp(-z[*obs]),
            Prepared::Rfr { o1, o2, df2, inv_d12, kinv } => {
                let growth = inv_d12 * exp(z[*o2] - z[*o1]);
                df2 * exp(-z[*o2]) * (growth - kinv).max(0.0)
            }
            Prepared::Libor { o1, df1, kinv, bond } => {
                df1 * exp(-z[*o1]) * (1.0 - kinv * bond.price(y[*o1], self.second_order)).max(0.0)
            }
            Prepared::Swaption { o0, df0, coef, bonds } => {
                let mut v = 1.0;
                for (c, b) in coef.iter().zip(bonds) {
                    v -= c * b.price(y[*o0], self.second_order);
                }
                df0 * exp(-z[*o0]) * v.max(0.0)
            }
        }
    }

    /// Simulate one antithetic pair, writing `(y, z)` at the observation
    /// dates for both legs.
    fn pair(&self, rng: &mut ChaCha8Rng, y: &mut [[f64; 2]], z: &mut [[f64; 2]]) {
        let mut yy = 0.0;
        let mut zp = 0.0;
        let mut zm = 0.0;
        let mut next_obs = 0;
        let mut gi = 0usize;
        for st in &self.steps {
            let y0 = yy;
            let xi: f64 = StandardNormal.sample(rng);
            yy = st.decay * y0 + st.sd * xi;
            let (sp, sm) = if st.direct {
                let g = st.gamma;
                let ys = st.y_star;
                (
                    (sinh(g * (y0 + ys)) + sinh(g * (yy + ys))) / g,
                    (sinh(g * (ys - y0)) + sinh(g * (ys - yy))) / g,
                )
            } else {
                let g = st.gamma;
                let a = st.exp_gy;
                let e0 = exp(g * y0);
                let e1 = exp(g * yy);
                let (p0, p1) = (e0 * a, e1 * a);
                let (m0, m1) = (a / e0, a / e1);
                (
                    (p0 - 1.0 / p0 + p1 - 1.0 / p1) / (2.0 * g),
                    (m0 - 1.0 / m0 + m1 - 1.0 / m1) / (2.0 * g),
                )
            };
            zp += st.r_star + st.half_h * sp;
            zm += st.r_star + st.half_h * sm;
            gi += 1;
            while next_obs < self.obs_index.len() && self.obs_index[next_obs] == gi {
                y[next_obs] = [yy, -yy];
                z[next_obs] = [zp, zm];
                next_obs += 1;
            }
        }
    }

    /// Run one block; returns one sum per payoff.
    pub fn run_block(&self, block: usize) -> Vec<BlockSum> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(block as u64);
        let first = block * self.cfg.block_pairs;
        let pairs = self.cfg.block_pairs.min(self.cfg.pairs().saturating_sub(first));
        let nobs = self.obs_index.len();
        let mut y = alloc::vec![[0.0; 2]; nobs];
        let mut z = alloc::vec![[0.0; 2]; nobs];
        let mut yp = alloc::vec![0.0; nobs];
        let mut ym = alloc::vec![0.0; nobs];
        let mut zp = alloc::vec![0.0; nobs];
        let mut zm = alloc::vec![0.0; nobs];
        let mut sums = alloc::vec![BlockSum::default(); self.payoffs.len()];
        for _ in 0..pairs {
            self.pair(&mut rng, &mut y, &mut z);
            for i in 0..nobs {
                yp[i] = y[i][0];
                ym[i] = y[i][1];
                zp[i] = z[i][0];
                zm[i] = z[i][1];
            }
            for (s, p) in sums.iter_mut().zip(&self.payoffs) {
                s.push(0.5 * (self.payoff(p, &yp, &zp) + self.payoff(p, &ym, &zm)));
            }
        }
        sums
    }

    /// Combine per-block results (indexed by block) into estimates.
    pub fn finish(&self, blocks: Vec<Vec<BlockSum>>) -> Vec<McEstimate> {
        (0..self.payoffs.len())
            .map(|i| tree_reduce(blocks.iter().map(|b| b[i]).collect()).estimate())
            .collect()
    }
}

/// Price several payoffs on one shared path set, sequentially.
pub fn mc_price_many(m: &Model, payoffs: &[McPayoff], cfg: McConfig) -> Result<Vec<McEstimate>> {
    let run = McRun::new(m, payoffs, cfg)?;
    let blocks = (0..run.blocks()).map(|b| run.run_block(b)).collect();
    Ok(run.finish(blocks))
}

pub fn mc_price(m: &Model, payoff: &McPayoff, cfg: McConfig) -> Result<McEstimate> {
    Ok(mc_price_many(m, core::slice::from_ref(payoff), cfg)?[0])
}

/// Simulated `(y, z)` at `times` for the first `cfg.paths` paths (both legs
/// of each antithetic pair, in order).
pub fn simulate_paths(m: &Model, times: &[f64], cfg: McConfig) -> Result<Vec<Vec<(f64, f64)>>> {
    let payoffs: Vec<McPayoff> = times.iter().map(|&t| McPayoff::Bond { maturity: t }).collect();
    let run = McRun::new(m, &payoffs, cfg)?;
    let mut sorted: Vec<f64> = times.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    sorted.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    let slots: Vec<usize> = times.iter().map(|&t| obs_slot(&sorted, t)).collect();
    let nobs = sorted.len();
    let mut out = Vec::with_capacity(cfg.paths);
    let mut y = alloc::vec![[0.0; 2]; nobs];
    let mut z = alloc::vec![[0.0; 2]; nobs];
    'outer: for b in 0..run.blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(b as u64);
        for _ in 0..cfg.block_pairs {
            run.pair(&mut rng, &mut y, &mut z);
            for leg in 0..2 {
                if out.len() == cfg.paths {
                    break 'outer;
                }
                out.push(slots.iter().map(|&s| (y[s][leg], z[s][leg])).collect());
            }
        }
    }
    Ok(out)
}
