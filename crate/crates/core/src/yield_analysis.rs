//! Fabrication yield with and without spare modes.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How many components a mesh on `n` modes is taken to have.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountModel {
    /// `n²`.
    #[default]
    Approximate,
    /// Beam splitters plus phase shifters of a rectangular mesh.
    Exact,
}

impl CountModel {
    pub fn components(self, modes: u64) -> u64 {
        match self {
            CountModel::Approximate => modes * modes,
            // n(n-1)/2 crossings, as many internal phase shifters, n - 1 output phases.
            CountModel::Exact => (modes * modes).saturating_sub(1),
        }
    }
}

/// A target size, its spare modes and the per-component defect rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YieldQuery {
    pub n: u64,
    pub m: u64,
    pub epsilon: f64,
    pub count_model: CountModel,
}

impl YieldQuery {
    /// Spare modes for an overhead ratio, rounded down.
    pub fn with_overhead(n: u64, r: f64, epsilon: f64, count_model: CountModel) -> Self {
        YieldQuery {
            n,
            m: (r * n as f64).floor() as u64,
            epsilon,
            count_model,
        }
    }

    pub fn components(&self) -> u64 {
        self.count_model.components(self.n + self.m)
    }

    /// Probability that the fabricated mesh can still be used.
    pub fn success_probability(&self) -> Result<f64> {
        p_at_most(self.components(), self.m, self.epsilon)
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if (0.0..=1.0).contains(&epsilon) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "defect probability {epsilon} outside [0, 1]"
        )))
    }
}

/// Probability that none of the mesh's components is defective.
pub fn p_zero_defect(n: u64, epsilon: f64, model: CountModel) -> Result<f64> {
    p_at_most(model.components(n), 0, epsilon)
}

/// Probability of at most `m` defects among `components` independent ones.
pub fn p_at_most(components: u64, m: u64, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if m > components {
        return Err(Error::InvalidArgument(format!(
            "{m} defects among {components} components"
        )));
    }
    if epsilon == 0.0 || m == components {
        return Ok(1.0);
    }
    if epsilon == 1.0 {
        return Ok(0.0);
    }
    let n = components as f64;
    let log_q = (-epsilon).ln_1p();
    let log_ratio = epsilon.ln() - log_q;
    // log C(N, k) ε^k (1-ε)^(N-k), term by term.
    let mut log_term = n * log_q;
    let mut logs = Vec::with_capacity(m as usize + 1);
    logs.push(log_term);
    for k in 0..m {
        log_term += ((n - k as f64) / (k as f64 + 1.0)).ln() + log_ratio;
        logs.push(log_term);
    }
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let sum: f64 = logs.iter().map(|l| (l - top).exp()).sum();
    Ok((top + sum.ln()).exp().min(1.0))
}

/// Largest `n` whose defect-free probability exceeds one half.
pub fn max_modes_plain(epsilon: f64, model: CountModel) -> Result<u64> {
    max_modes_overhead(epsilon, 0.0, model)
}

/// Largest `n` that still works with probability above one half when
/// `floor(r·n)` spare modes absorb defects.
pub fn max_modes_overhead(epsilon: f64, r: f64, model: CountModel) -> Result<u64> {
    check_epsilon(epsilon)?;
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "overhead ratio {r} must be finite and nonnegative"
        )));
    }
    if epsilon == 0.0 {
        return Err(Error::Unbounded);
    }
    let works =
        |n: u64| -> Result<bool> { Ok(YieldQuery::with_overhead(n, r, epsilon, model).success_probability()? > 0.5) };
    let hopeless = |n: u64| {
        let q = YieldQuery::with_overhead(n, r, epsilon, model);
        (q.m + 1) as f64 <= (q.components() as f64 * epsilon).floor()
    };
    // Past this size the expected defect count outgrows the spares for good.
    let turning = (r / (2.0 * epsilon * (1.0 + r) * (1.0 + r)))
        .ceil()
        .clamp(1.0, u32::MAX as f64) as u64;
    let mut lo = turning;
    let mut hi = turning;
    while !hopeless(hi) {
        lo = hi;
        hi = hi.saturating_mul(2);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if hopeless(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let upper = hi;
    // A binomial count below its median fails, so everything from `upper`
    // on is out; walk down to the largest size that works.
    let mut n = upper;
    while n > 0 {
        if works(n)? {
            return Ok(n);
        }
        n -= 1;
    }
    Ok(0)
}

/// Largest per-component defect probability an `n`-mode target tolerates
/// with overhead `r`, found by bisection on `ln ε`.
pub fn threshold_epsilon(n: u64, r: f64, model: CountModel) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("target needs at least one mode".into()));
    }
    let works =
        |eps: f64| -> Result<bool> { Ok(YieldQuery::with_overhead(n, r, eps, model).success_probability()? > 0.5) };
    let (mut lo, mut hi) = ((1e-300f64).ln(), 0.0f64);
    if !works(lo.exp())? {
        return Ok(0.0);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if works(mid.exp())? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo.exp())
}

/// Smallest `n` in `range` at which overhead `r` raises the tolerable
/// defect probability by more than `factor` over no overhead.
pub fn gain_crossing(
    r: f64,
    factor: f64,
    range: std::ops::RangeInclusive<u64>,
    model: CountModel,
) -> Result<Option<(u64, f64)>> {
    for n in range {
        let gain = threshold_epsilon(n, r, model)? / threshold_epsilon(n, 0.0, model)?;
        if gain > factor {
            return Ok(Some((n, gain)));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub epsilon: f64,
    pub max_n: u64,
}

/// Maximum target size over a sorted grid of defect probabilities.
pub fn tolerance_curve(r: f64, epsilon_grid: &[f64], model: CountModel) -> Result<Vec<CurvePoint>> {
    if epsilon_grid.is_empty() {
        return Err(Error::InvalidArgument("empty epsilon grid".into()));
    }
    if epsilon_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("epsilon grid must be sorted".into()));
    }
    epsilon_grid
        .par_iter()
        .map(|&epsilon| {
            Ok(CurvePoint {
                epsilon,
                max_n: max_modes_overhead(epsilon, r, model)?,
            })
        })
        .collect()
}

pub fn write_curve_csv<W: Write>(mut out: W, curve: &[CurvePoint]) -> Result<()> {
    writeln!(out, "epsilon,max_n")?;
    for p in curve {
        writeln!(out, "{},{}", p.epsilon, p.max_n)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: u64,
}

/// Fraction of sampled meshes with at most `m` defects among `components`.
///
/// Trial `t` draws from stream `t` of a generator keyed by `seed`, so the
/// estimate does not depend on how trials are scheduled.
pub fn monte_carlo_yield(components: u64, m: u64, epsilon: f64, trials: u64, seed: u64) -> Result<MonteCarloEstimate> {
    check_epsilon(epsilon)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is needed".into()));
    }
    let successes = if epsilon == 0.0 {
        trials
    } else if epsilon == 1.0 {
        if m >= components {
            trials
        } else {
            0
        }
    } else {
        let gaps = Geometric::new(epsilon).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        (0..trials)
            .into_par_iter()
            .filter(|&t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t);
                let mut position = 0u64;
                let mut defects = 0u64;
                loop {
                    position = position.saturating_add(gaps.sample(&mut rng)).saturating_add(1);
                    if position > components {
                        return true;
                    }
                    defects += 1;
                    if defects > m {
                        return false;
                    }
                }
            })
            .count() as u64
    };
    let p = successes as f64 / trials as f64;
    Ok(MonteCarloEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / trials as f64).sqrt(),
        trials,
    })
}
