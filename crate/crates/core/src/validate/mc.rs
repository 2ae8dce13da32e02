use super::{checked, Check, Suite, ValidateOptions};
use crate::error::Result;
use crate::mc::{
    add_ks_comparison, simulate_batch, simulate_batch_with_workers, summarize, BatchSummary,
    SimConfig,
};
use crate::special::Index;

const S: Suite = Suite::Mc;
const X0: f64 = 0.5;

struct Plan {
    n: usize,
    step: f64,
}

pub(super) fn run(opts: &ValidateOptions) -> Vec<Check> {
    let plan = if opts.quick {
        Plan {
            n: 4000,
            step: 2e-3,
        }
    } else {
        Plan {
            n: 20_000,
            step: 4e-4,
        }
    };
    let mut checks = Vec::new();
    match killed_brownian(opts.seed, &plan) {
        Ok(c) => checks.extend(c),
        Err(e) => checks.push(Check::failed(S, "ks_killed_brownian", &e)),
    }
    checks.push(checked(S, "splitting_mu-0.9", splitting(opts.seed, &plan)));
    checks.push(checked(S, "timeout_mass", timeout(opts.seed, &plan)));
    checks.push(checked(S, "determinism", determinism(opts.seed)));
    checks
}

fn config(seed: u64, plan: &Plan, step: f64) -> SimConfig {
    SimConfig {
        step,
        max_time: 20.0,
        seed,
        n_paths: plan.n,
        bridge_correction: true,
    }
}

fn run_with_ks(index: Index, cfg: &SimConfig) -> Result<BatchSummary> {
    let batch = simulate_batch(index, X0, cfg)?;
    let mut summary = summarize(index, X0, cfg.max_time, &batch)?;
    add_ks_comparison(index, X0, &batch, &mut summary)?;
    Ok(summary)
}

fn mass_check(name: &str, summary: &BatchSummary) -> Check {
    let worst = summary
        .boundaries
        .iter()
        .map(|b| {
            if b.std_error > 0.0 {
                (b.mass - b.expected_mass).abs() / b.std_error
            } else {
                (b.mass - b.expected_mass).abs() * f64::INFINITY
            }
        })
        .fold(0.0, |a: f64, z| if z.is_nan() { a } else { a.max(z) });
    let detail: Vec<String> = summary
        .boundaries
        .iter()
        .map(|b| format!("{:?}: {:.5} vs {:.5}", b.boundary, b.mass, b.expected_mass))
        .collect();
    Check::at_most(
        S,
        name,
        worst,
        3.0,
        format!("standard errors; {}", detail.join(", ")),
    )
}

/// KS distance, mass and step-halving checks for `μ = −1/2` killed at 0.
fn killed_brownian(seed: u64, plan: &Plan) -> Result<Vec<Check>> {
    let index = Index::killing(-0.5)?;
    let coarse = run_with_ks(index, &config(seed, plan, plan.step))?;
    let fine = run_with_ks(index, &config(seed, plan, 0.5 * plan.step))?;
    let n = plan.n as f64;
    let ks_budget = (1.63 / n.sqrt()).max(0.01);
    let ks = |s: &BatchSummary| {
        s.ks_one
            .unwrap_or(f64::INFINITY)
            .max(s.ks_zero.unwrap_or(f64::INFINITY))
    };
    let noise = 1.5 / n.sqrt();
    let shift = (ks(&coarse) - ks(&fine)).abs();
    Ok(vec![
        Check::at_most(
            S,
            "ks_killed_brownian",
            ks(&fine),
            ks_budget,
            format!(
                "max KS over both boundaries, {} paths, h = {}",
                plan.n,
                0.5 * plan.step
            ),
        ),
        mass_check("splitting_mu-0.5", &fine),
        Check::at_most(
            S,
            "step_halving",
            shift,
            noise,
            format!("|KS(h) - KS(h/2)| at h = {}", plan.step),
        ),
    ])
}

fn splitting(seed: u64, plan: &Plan) -> Result<Check> {
    let index = Index::killing(-0.9)?;
    let cfg = config(seed ^ 0x5eed, plan, 0.5 * plan.step);
    let batch = simulate_batch(index, X0, &cfg)?;
    Ok(mass_check(
        "splitting_mu-0.9",
        &summarize(index, X0, cfg.max_time, &batch)?,
    ))
}

/// Paths cut at `max_time = 0.6` must time out at the rate of the first
/// eigenterm of the survival probability.
fn timeout(seed: u64, plan: &Plan) -> Result<Check> {
    let index = Index::reflecting(0.5)?;
    let cfg = SimConfig {
        max_time: 0.6,
        ..config(seed ^ 0x71e, plan, plan.step)
    };
    let batch = simulate_batch(index, X0, &cfg)?;
    let t = summarize(index, X0, cfg.max_time, &batch)?.timeout_check;
    Ok(Check::at_most(
        S,
        "timeout_mass",
        t.z.abs(),
        3.0,
        format!(
            "observed {:.5}, first eigenterm {:.5}",
            t.observed, t.expected
        ),
    ))
}

fn determinism(seed: u64) -> Result<Check> {
    let index = Index::killing(-0.3)?;
    let cfg = SimConfig {
        step: 1e-3,
        max_time: 20.0,
        seed,
        n_paths: 200,
        bridge_correction: true,
    };
    let a = simulate_batch_with_workers(index, X0, &cfg, 1)?;
    let b = simulate_batch_with_workers(index, X0, &cfg, 3)?;
    let equal = a.samples == b.samples && a.timeouts == b.timeouts;
    Ok(Check::at_most(
        S,
        "determinism",
        if equal { 0.0 } else { 1.0 },
        0.0,
        "1 and 3 workers give identical samples",
    ))
}
