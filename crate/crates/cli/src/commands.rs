use std::f64::consts::{PI, SQRT_2};

use greenrec_core::chain1d::{default_depth, green_1d_sites};
use greenrec_core::halfplane::cd_weight;
use greenrec_core::looptree::{loop_green_root, loop_spectra, meanfield_spectrum, theta_zero_fixed_point};
use greenrec_core::oracle::{build_graph, build_truncation, solve_green_root, FiniteHamiltonian};
use greenrec_core::percolation::{percolation_population, PercolationSpec};
use greenrec_core::siegelgraph::{green_root_exhaustive, green_root_graph, RootedGraph, Seed};
use greenrec_core::tree::{
    correlation_delta, oscillating_ac_test, oscillating_green, population_green, tree_fixed_point, PotentialModel,
    SamplePool, TreeModel,
};
use greenrec_core::{HPoint, SpectralParam};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::config::{CliModel, RunConfig};
use crate::error::CliError;
use crate::output::{num, Table};

/// Everything a command needs besides the config.
pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub seed: Option<u64>,
    pub oracle: bool,
}

impl Ctx<'_> {
    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

/// Default truncation depth of explicit tree-like graphs.
const GRAPH_DEPTH: usize = 10;
/// Deepest level the looptree command prints.
const MAX_PRINT_LEVEL: usize = 20;

struct Value1 {
    g: Complex64,
    method: &'static str,
    /// Depth of the explicit truncation to compare against.
    oracle_depth: Option<usize>,
}

fn pool_mean(pool: &SamplePool) -> Complex64 {
    pool.mean()
}

fn green_value(ctx: &Ctx, lam: SpectralParam) -> Result<Value1, CliError> {
    let cfg = ctx.cfg;
    let v = match &cfg.model {
        CliModel::Chain { potential } => {
            lam.require_strict()?;
            let d = cfg.depth.unwrap_or_else(|| default_depth(lam));
            let sites = match potential {
                Some(p) => {
                    p.validate()?;
                    p.sites(d + 1, ctx.seed())
                }
                None => vec![0.0; d + 1],
            };
            let g = green_1d_sites(&sites, lam, HPoint::I)?;
            Value1 { g: g.z(), method: "mobius_1d", oracle_depth: Some(d) }
        }
        CliModel::Tree { k, potential } => {
            let model = TreeModel { k: *k, potential: cfg.model.potential() };
            model.validate()?;
            match potential {
                None | Some(PotentialModel::None) => Value1 {
                    g: tree_fixed_point(*k, lam)?.z(),
                    method: "fixed_point",
                    oracle_depth: Some(cfg.depth.unwrap_or(GRAPH_DEPTH)),
                },
                Some(PotentialModel::Oscillating(osc)) => {
                    let d = cfg.depth.unwrap_or_else(|| default_depth(lam));
                    Value1 { g: oscillating_green(osc, lam, d, HPoint::I)?.z(), method: "sphere_reduction", oracle_depth: None }
                }
                Some(_) => {
                    let pool = population_green(&model, lam, &cfg.population(), ctx.seed())?;
                    Value1 { g: pool_mean(&pool), method: "population_mean", oracle_depth: None }
                }
            }
        }
        CliModel::Percolation { q_del } => {
            let pool = percolation_population(PercolationSpec::new(*q_del)?, lam, &cfg.population(), ctx.seed())?;
            Value1 { g: pool_mean(&pool), method: "population_mean", oracle_depth: None }
        }
        CliModel::RegularLoopTree { gamma } => {
            let levels = cfg.depth.unwrap_or_else(|| default_depth(lam));
            Value1 {
                g: loop_green_root(*gamma, lam, levels)?.z(),
                method: "loop_fourier",
                oracle_depth: Some(cfg.depth.unwrap_or(GRAPH_DEPTH)),
            }
        }
        CliModel::MeanfieldLoopTree { gamma, diagonal } => {
            let d = cfg.depth.unwrap_or(8);
            let g = RootedGraph::meanfield_loop_tree_with(*gamma, d + 1, *diagonal);
            let z = green_root_graph(&g, &[], lam, d, &Seed::default())?;
            Value1 { g: z.z(), method: "siegel", oracle_depth: Some(d) }
        }
        CliModel::BoxNd { .. } => {
            let d = cfg.depth.unwrap_or(16);
            let desc = cfg.model.descriptor().expect("boxes have a truncation");
            let (g, pot) = build_graph(&desc, d, ctx.seed())?;
            let z = green_root_exhaustive(&g, &pot, lam)?;
            Value1 { g: z.z(), method: "schur_exhaustive", oracle_depth: Some(d) }
        }
    };
    Ok(v)
}

fn oracle_value(ctx: &Ctx, lam: SpectralParam, depth: usize) -> Result<Complex64, CliError> {
    let desc = ctx.cfg.model.descriptor().ok_or_else(|| CliError::Config("model has no explicit truncation".into()))?;
    let h = build_truncation(&desc, depth, ctx.seed())?;
    Ok(solve_green_root(&h, lam)?.z())
}

fn stamp(t: &mut Table, command: &str, ctx: &Ctx) {
    t.meta("command", command);
    t.meta("build", env!("GREENREC_GIT_DESCRIBE"));
    t.meta("seed", ctx.seed.map_or("none".to_owned(), |s| s.to_string()));
    let population_driven = matches!(ctx.cfg.model, CliModel::Percolation { .. })
        || (ctx.cfg.model.is_stochastic() && matches!(ctx.cfg.model, CliModel::Tree { .. }));
    if population_driven || matches!(command, "moments" | "percolation") {
        let p = ctx.cfg.population();
        t.meta("pool", p.pool_size);
        t.meta("generations", p.generations);
    }
}

pub fn green(ctx: &Ctx) -> Result<Table, CliError> {
    let mut t = Table::new(vec!["lambda_re", "lambda_im", "G_re", "G_im", "method", "oracle_diff"]);
    stamp(&mut t, "green", ctx);
    for lam in ctx.cfg.lambdas()? {
        let v = green_value(ctx, lam)?;
        let diff = match (ctx.oracle, v.oracle_depth) {
            (true, Some(d)) => num((v.g - oracle_value(ctx, lam, d)?).norm()),
            _ => String::new(),
        };
        t.rows.push(vec![num(lam.re()), num(lam.im()), num(v.g.re), num(v.g.im), v.method.into(), diff]);
    }
    Ok(t)
}

fn ladder(cfg: &RunConfig, required: bool) -> Result<Vec<f64>, CliError> {
    let mut eps = match (&cfg.eps_ladder, required) {
        (Some(l), _) => l.clone(),
        (None, true) => return Err(CliError::Config("missing key `eps_ladder`".into())),
        (None, false) => Vec::new(),
    };
    if eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(CliError::Config("key `eps_ladder` must hold positive finite values".into()));
    }
    eps.sort_by(|a, b| b.total_cmp(a));
    Ok(eps)
}

pub fn density(ctx: &Ctx) -> Result<Table, CliError> {
    let mut t = Table::new(vec!["lambda_re", "eps", "density", "method"]);
    stamp(&mut t, "density", ctx);
    let lams = ctx.cfg.lambdas()?;
    let mut eps = ladder(ctx.cfg, false)?;
    if eps.is_empty() {
        eps = vec![lams[0].im()];
    }
    for lam in &lams {
        for &e in &eps {
            let l = SpectralParam::new(lam.re(), e)?;
            let v = green_value(ctx, l)?;
            t.rows.push(vec![num(l.re()), num(e), num(v.g.im / PI), v.method.into()]);
        }
    }
    Ok(t)
}

/// Pool of `G_λ(0,0)` samples for the population-driven models.
fn sample_pool(ctx: &Ctx, lam: SpectralParam) -> Result<(SamplePool, usize), CliError> {
    let cfg = ctx.cfg;
    match &cfg.model {
        CliModel::Tree { k, .. } => {
            let model = TreeModel { k: *k, potential: cfg.model.potential() };
            Ok((population_green(&model, lam, &cfg.population(), ctx.seed())?, *k))
        }
        CliModel::Percolation { q_del } => {
            let pool = percolation_population(PercolationSpec::new(*q_del)?, lam, &cfg.population(), ctx.seed())?;
            Ok((pool, 2))
        }
        _ => Err(CliError::Config("key `model.kind` must be `tree` or `percolation` for this command".into())),
    }
}

pub fn moments(ctx: &Ctx) -> Result<Table, CliError> {
    let mut t = Table::new(vec!["eps", "M_p_estimate", "stderr", "pool_size", "generations"]);
    stamp(&mut t, "moments", ctx);
    let p = ctx.cfg.moment_exponent()?;
    t.meta("p", p);
    let re = match ctx.cfg.lambda {
        Some(l) => l.re,
        None => return Err(CliError::Config("missing key `lambda`".into())),
    };
    t.meta("lambda_re", num(re));
    for e in ladder(ctx.cfg, true)? {
        let lam = SpectralParam::new(re, e)?;
        let (pool, k) = sample_pool(ctx, lam)?;
        let z_ref = tree_fixed_point(k, lam)?;
        let w: Vec<f64> = pool.samples.iter().map(|&z| cd_weight(z, z_ref).powf(p)).collect();
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        let var = w.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        t.rows.push(vec![
            num(e),
            num(mean),
            num((var / n).sqrt()),
            pool.samples.len().to_string(),
            pool.generation.to_string(),
        ]);
    }
    Ok(t)
}

pub fn percolation(ctx: &Ctx) -> Result<Table, CliError> {
    if !matches!(ctx.cfg.model, CliModel::Percolation { .. }) {
        return Err(CliError::Config("key `model.kind` must be `percolation`".into()));
    }
    let mut t = Table::new(vec!["lambda_re", "lambda_im", "mean_re", "mean_im", "M_p", "min_im", "stabilized"]);
    stamp(&mut t, "percolation", ctx);
    let p = ctx.cfg.moment_exponent()?;
    t.meta("p", p);
    for lam in ctx.cfg.lambdas()? {
        let (pool, _) = sample_pool(ctx, lam)?;
        let z_ref = tree_fixed_point(2, lam)?;
        let m = greenrec_core::tree::moment_mp(&pool.samples, p, z_ref);
        let g = pool.mean();
        t.rows.push(vec![
            num(lam.re()),
            num(lam.im()),
            num(g.re),
            num(g.im),
            num(m),
            num(pool.min_im()),
            u8::from(pool.stabilized()).to_string(),
        ]);
    }
    Ok(t)
}

pub fn looptree(ctx: &Ctx) -> Result<Table, CliError> {
    let CliModel::RegularLoopTree { gamma } = ctx.cfg.model else {
        return Err(CliError::Config("key `model.kind` must be `regular_loop_tree`".into()));
    };
    let levels = ctx.cfg.depth.unwrap_or(8);
    if levels > MAX_PRINT_LEVEL {
        return Err(CliError::Core(greenrec_core::Error::CapExceeded(format!(
            "{levels} levels exceeds {MAX_PRINT_LEVEL} for printed spectra"
        ))));
    }
    let lams = ctx.cfg.lambdas()?;
    if lams.len() != 1 {
        return Err(CliError::Config("key `lambda` must name a single point for this command".into()));
    }
    let mut t = Table::new(vec!["level", "k", "theta", "f_re", "f_im"]);
    stamp(&mut t, "looptree", ctx);
    t.meta("gamma", num(gamma));
    t.meta("lambda", format!("{} {}", num(lams[0].re()), num(lams[0].im())));
    for s in loop_spectra(gamma, lams[0], levels, HPoint::I)? {
        for (k, f) in s.f.iter().enumerate() {
            t.rows.push(vec![s.level.to_string(), k.to_string(), num(s.theta(k)), num(f.re), num(f.im)]);
        }
    }
    Ok(t)
}

fn class_name(c: greenrec_core::tree::AcClass) -> &'static str {
    use greenrec_core::tree::AcClass::*;
    match c {
        AcInterior => "ac_interior",
        NotAc => "not_ac",
        Boundary => "boundary",
    }
}

pub fn classify(ctx: &Ctx) -> Result<Value, CliError> {
    let cfg = ctx.cfg;
    let out = match &cfg.model {
        CliModel::Tree { potential: Some(PotentialModel::Oscillating(osc)), .. } => cfg
            .lambdas()?
            .iter()
            .map(|l| {
                let r = oscillating_ac_test(l.re(), osc.delta0);
                json!({"lambda": l.re(), "delta": osc.delta0, "classification": class_name(r.class),
                       "discriminant": r.discriminant})
            })
            .collect(),
        CliModel::Tree { potential: Some(PotentialModel::TwoPeriodic { joint, .. }), .. } => {
            joint.validate()?;
            let m = joint.moments();
            let c = correlation_delta(m.c11, m.c22, m.c12)?;
            vec![json!({"c11": m.c11, "c22": m.c22, "c12": m.c12, "delta": c.delta, "admissible": c.admissible})]
        }
        CliModel::MeanfieldLoopTree { gamma, .. } => {
            let b = meanfield_spectrum(*gamma)?;
            vec![json!({"gamma": gamma, "intervals": [[b[0].0, b[0].1], [b[1].0, b[1].1]]})]
        }
        CliModel::RegularLoopTree { gamma } => {
            let window = [-2.0 * gamma - 2.0 * SQRT_2, -2.0 * gamma + 2.0 * SQRT_2];
            cfg.lambdas()?
                .iter()
                .map(|l| {
                    let inside = l.re() > window[0] && l.re() < window[1];
                    let w = theta_zero_fixed_point(*gamma, *l).ok().map(|w| [w.re(), w.im()]);
                    json!({"lambda": l.re(), "gamma": gamma, "theta_zero_window": window,
                           "classification": if inside { "ac_interior" } else { "not_ac" }, "f0": w})
                })
                .collect()
        }
        _ => {
            return Err(CliError::Config(
                "classify needs an oscillating or two_periodic tree, or a loop tree model".into(),
            ))
        }
    };
    Ok(Value::Array(out))
}

pub fn oracle_compare(ctx: &Ctx) -> Result<Table, CliError> {
    let desc = ctx.cfg.model.descriptor().ok_or_else(|| CliError::Config("model has no explicit truncation".into()))?;
    let depth = ctx.cfg.depth.unwrap_or(8);
    let mut t = Table::new(vec![
        "lambda_re",
        "lambda_im",
        "recursion_re",
        "recursion_im",
        "oracle_re",
        "oracle_im",
        "abs_diff",
    ]);
    stamp(&mut t, "oracle-compare", ctx);
    t.meta("depth", depth);
    let (g, pot) = build_graph(&desc, depth, ctx.seed())?;
    let h = FiniteHamiltonian::from_graph(&g, &pot)?;
    for lam in ctx.cfg.lambdas()? {
        let rec = green_root_exhaustive(&g, &pot, lam)?.z();
        let direct = solve_green_root(&h, lam)?.z();
        t.rows.push(vec![
            num(lam.re()),
            num(lam.im()),
            num(rec.re),
            num(rec.im),
            num(direct.re),
            num(direct.im),
            num((rec - direct).norm()),
        ]);
    }
    Ok(t)
}
