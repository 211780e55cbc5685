//! Block-parallel Monte Carlo on top of the core oracle.

use rayon::prelude::*;
use sinhrate_core::oracle::{McConfig, McEstimate, McPayoff, McRun};
use sinhrate_core::{Model, Result};

/// Same estimates as `sinhrate_core::oracle::mc_price_many`, bit for bit:
/// blocks own their random streams and are merged by a fixed tree.
pub fn par_mc_price_many(m: &Model, payoffs: &[McPayoff], cfg: McConfig) -> Result<Vec<McEstimate>> {
    let run = McRun::new(m, payoffs, cfg)?;
    let blocks = (0..run.blocks()).into_par_iter().map(|b| run.run_block(b)).collect();
    Ok(run.finish(blocks))
}

pub fn par_mc_price(m: &Model, payoff: &McPayoff, cfg: McConfig) -> Result<McEstimate> {
    Ok(par_mc_price_many(m, std::slice::from_ref(payoff), cfg)?[0])
}
