//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Runs without the libtest harness so the lines are
//! always shown.

use std::f64::consts::{PI, SQRT_2};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use greenrec_core::chain1d::{free_fixed_point, green_1d, green_1d_sites, CenteredShape, PotentialSeq, RandomCentered};
use greenrec_core::dist::{Dist, JointDist};
use greenrec_core::halfplane::{contraction_factor, mobius_step, poincare_dist};
use greenrec_core::looptree::{
    fft_symbol, loop_green_root, loop_spectra, meanfield_eigen_check, theta_zero_fixed_point,
};
use greenrec_core::oracle::{build_truncation, solve_green, solve_green_root, ModelDescriptor};
use greenrec_core::percolation::{percolation_population, PercolationSpec};
use greenrec_core::siegelgraph::{decompose_spheres, green_root_graph, siegel_mobius, RootedGraph, Seed, SiegelPoint};
use greenrec_core::stream::Stream;
use greenrec_core::tree::{
    moment_mp, mu2p, mu3p, oscillating_ac_test, population_green, tree_fixed_point, AcClass, PoolInit,
    PopulationConfig, PotentialModel, SamplePool, TreeModel,
};
use greenrec_core::{HPoint, SpectralParam};
use nalgebra::DMatrix;
use num_complex::Complex64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Uniform draws for sampling test inputs.
struct Draws(Stream);

impl Draws {
    fn new(seed: u64) -> Self {
        Draws(Stream::at(seed, 0xacce, 0, 1))
    }

    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.0.unit()
    }

    fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        (self.uniform(lo.ln(), hi.ln())).exp()
    }

    fn hpoint(&mut self) -> HPoint {
        HPoint::new(self.uniform(-3.0, 3.0), self.log_uniform(1e-3, 10.0)).unwrap()
    }
}

fn lam(re: f64, im: f64) -> SpectralParam {
    SpectralParam::new(re, im).unwrap()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn free_half_line() -> Outcome {
    let mut worst = 0.0f64;
    for re in linspace(-1.9, 1.9, 101) {
        let l = lam(re, 1e-3);
        let g = green_1d(&PotentialSeq::Zero, l, 10_000, HPoint::I).unwrap();
        worst = worst.max((g.z() - free_fixed_point(l).unwrap().z()).norm());
    }
    let rho = green_1d(&PotentialSeq::Zero, lam(0.0, 1e-3), 10_000, HPoint::I).unwrap().im() / PI;
    let drho = (rho - 1.0 / PI).abs();
    outcome(worst < 1e-5 && drho < 1e-3, format!("max |G − z₊| = {worst:.2e}, |ρ(0) − 1/π| = {drho:.2e}"))
}

fn oracle_1d() -> Outcome {
    let mut d = Draws::new(2);
    let mut worst = 0.0f64;
    for trial in 0..50u64 {
        let pot = PotentialSeq::RandomCentered(RandomCentered {
            shape: CenteredShape::Uniform,
            sigma: 1.0 / 3f64.sqrt(),
            variance_decay: 1.0,
            seed: 17,
        });
        let l = lam(d.uniform(-2.5, 2.5), 0.05);
        let sites = pot.sites(4001, trial);
        let iterate = green_1d_sites(&sites, l, HPoint::I).unwrap();
        let h = build_truncation(&ModelDescriptor::Chain { potential: Some(pot) }, 4000, trial).unwrap();
        let direct = solve_green(&h, l.value(), 0).unwrap();
        worst = worst.max((iterate.z() - direct).norm());
    }
    outcome(worst < 1e-8, format!("50 potentials, max |iterate − solve| = {worst:.2e}"))
}

fn contraction_suite() -> Outcome {
    let mut d = Draws::new(3);
    let mut worst_excess = f64::NEG_INFINITY;
    for _ in 0..100_000 {
        let (z1, z2) = (d.hpoint(), d.hpoint());
        let q = d.uniform(-2.0, 2.0);
        let l = lam(d.uniform(-3.0, 3.0), if d.uniform(0.0, 1.0) < 0.2 { 0.0 } else { d.log_uniform(1e-4, 2.0) });
        let before = poincare_dist(z1, z2);
        let after = poincare_dist(mobius_step(z1, q, l).unwrap(), mobius_step(z2, q, l).unwrap());
        worst_excess = worst_excess.max(after - before);
    }
    let mut worst_strict = f64::NEG_INFINITY;
    for _ in 0..100_000 {
        let c = d.uniform(0.5, 5.0);
        let inside = |d: &mut Draws| loop {
            let z = HPoint::new(d.uniform(-c, c), d.uniform(1e-3, c)).unwrap();
            if z.z().norm() < c {
                return z;
            }
        };
        let (z1, z2) = (inside(&mut d), inside(&mut d));
        if poincare_dist(z1, z2) < 1e-6 {
            continue;
        }
        let im = d.log_uniform(1e-3, 2.0);
        let l = lam(d.uniform(-3.0, 3.0), im);
        let q = d.uniform(-2.0, 2.0);
        let ratio = poincare_dist(mobius_step(z1, q, l).unwrap(), mobius_step(z2, q, l).unwrap()) / poincare_dist(z1, z2);
        worst_strict = worst_strict.max(ratio - contraction_factor(c, im).unwrap());
    }
    outcome(
        worst_excess <= 1e-10 && worst_strict <= 1e-10,
        format!("max d(Φz₁,Φz₂) − d(z₁,z₂) = {worst_excess:.2e}, max ratio − C/(C+Im λ) = {worst_strict:.2e}"),
    )
}

fn tree_fixed_point_suite() -> Outcome {
    let l = lam(0.3, 1e-2);
    let cfg = PopulationConfig { pool_size: 2000, generations: 4000, init: PoolInit::default(), monitor_p: None };
    let mut worst_pool = 0.0f64;
    for k in [2, 3] {
        let zl = tree_fixed_point(k, l).unwrap();
        let pool = population_green(&TreeModel::free(k), l, &cfg, 4).unwrap();
        worst_pool = pool.samples.iter().map(|z| (z.z() - zl.z()).norm()).fold(worst_pool, f64::max);
    }
    let zl = tree_fixed_point(2, l).unwrap();
    let g = RootedGraph::kary_tree(2, 15);
    let seeded = green_root_graph(&g, &[], l, 14, &Seed::Identity(zl)).unwrap();
    let graph_err = (seeded.z() - zl.z()).norm();
    let dirichlet = green_root_graph(&g, &[], l, 14, &Seed::Dirichlet).unwrap();
    let h = build_truncation(&ModelDescriptor::KaryTree { k: 2, disorder: None }, 14, 0).unwrap();
    let direct = solve_green_root(&h, l).unwrap();
    let oracle_err = (dirichlet.z() - direct.z()).norm();
    outcome(
        worst_pool < 1e-6 && graph_err < 1e-6 && oracle_err < 1e-10,
        format!(
            "pool max |z − z_λ| = {worst_pool:.2e} (k=2,3), depth-14 graph recursion {graph_err:.2e}, \
             Dirichlet vs elimination {oracle_err:.2e} (truncation sits {:.2e} from z_λ)",
            (direct.z() - zl.z()).norm()
        ),
    )
}

fn mu_suite() -> Outcome {
    let mut d = Draws::new(5);
    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        let l = SpectralParam::real(d.uniform(-2.0 * SQRT_2 + 1e-6, 2.0 * SQRT_2 - 1e-6)).unwrap();
        let p = d.uniform(1.0 + 1e-9, 2.0);
        let m = mu2p(d.hpoint(), d.hpoint(), 0.0, l, p).unwrap();
        worst = worst.max(m);
    }
    let eq = mu2p(HPoint::I, HPoint::I, 0.0, SpectralParam::real(0.0).unwrap(), 1.5).unwrap();
    let mut worst_rel = 0.0f64;
    for _ in 0..10_000 {
        let zs = [d.hpoint(), d.hpoint(), d.hpoint()];
        let qs = [d.uniform(-1.0, 1.0), d.uniform(-1.0, 1.0)];
        let l = lam(d.uniform(-2.5, 2.5), if d.uniform(0.0, 1.0) < 0.5 { 0.0 } else { d.log_uniform(1e-4, 1.0) });
        let m = mu3p(zs, qs, l, d.uniform(1.0 + 1e-9, 2.0)).unwrap();
        worst_rel = worst_rel.max((m.direct - m.reconstructed).abs() / m.direct.abs().max(1e-300));
    }
    outcome(
        worst <= 1.0 + 1e-10 && (eq - 1.0).abs() < 1e-12 && worst_rel < 1e-9,
        format!("max μ₂,p = {worst:.12}, μ₂,p(i,i,0,0) − 1 = {:.1e}, μ₃,p identity rel err {worst_rel:.1e}", eq - 1.0),
    )
}

fn ladder_cfg() -> PopulationConfig {
    PopulationConfig { pool_size: 100_000, generations: 400, init: PoolInit::FixedPoint, monitor_p: None }
}

const LADDER: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

/// `M_{1.5}` along the ladder at real part `re`.
fn ladder(re: f64, run: impl Fn(SpectralParam) -> SamplePool) -> Vec<f64> {
    LADDER
        .iter()
        .map(|&e| {
            let l = lam(re, e);
            moment_mp(&run(l).samples, 1.5, tree_fixed_point(2, l).unwrap())
        })
        .collect()
}

fn spread(m: &[f64]) -> f64 {
    let hi = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = m.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

fn fmt_ladder(m: &[f64]) -> String {
    m.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ")
}

fn anderson_trend() -> Outcome {
    let cfg = ladder_cfg();
    let iid = TreeModel::iid(2, Dist::BernoulliPm1, 0.1);
    let mut bounded = true;
    let mut notes = Vec::new();
    for re in [0.0, 0.5, 1.0] {
        let m = ladder(re, |l| population_green(&iid, l, &cfg, 6).unwrap());
        bounded &= spread(&m) < 3.0;
        notes.push(format!("λ={re}: {} (×{:.2})", fmt_ladder(&m), spread(&m)));
    }
    let corr = TreeModel {
        k: 2,
        potential: PotentialModel::TwoPeriodic {
            joint: JointDist::correlated_bernoulli(),
            root: Dist::BernoulliPm1,
            a: 0.5,
            allow_inadmissible: true,
        },
    };
    let mc = ladder(0.5, |l| population_green(&corr, l, &cfg, 6).unwrap());
    let growth = mc[3] / mc[0];
    let increasing = mc.windows(2).all(|w| w[1] > w[0]) && growth > 10.0;
    outcome(
        bounded && increasing,
        format!("iid a=0.1 {}; δ=1 contrast at λ=0.5: {} (×{growth:.0})", notes.join("; "), fmt_ladder(&mc)),
    )
}

fn percolation_reductions() -> Outcome {
    let l = lam(0.5, 0.05);
    let cfg = PopulationConfig { pool_size: 2000, generations: 1500, init: PoolInit::default(), monitor_p: None };
    let zl = tree_fixed_point(2, l).unwrap();
    let none = percolation_population(PercolationSpec::new(0.0).unwrap(), l, &cfg, 7).unwrap();
    let tree_err = none.samples.iter().map(|z| (z.z() - zl.z()).norm()).fold(0.0, f64::max);
    let all = percolation_population(PercolationSpec::new(1.0).unwrap(), l, &cfg, 7).unwrap();
    let line_err = (all.mean() - free_fixed_point(l).unwrap().z()).norm();
    let spec = PercolationSpec::new(0.05).unwrap();
    let big = ladder_cfg();
    let mut bounded = true;
    let mut notes = Vec::new();
    for re in [0.0, 0.5, 1.0] {
        let m = ladder(re, |l| percolation_population(spec, l, &big, 8).unwrap());
        bounded &= spread(&m) < 3.0;
        notes.push(format!("λ={re}: ×{:.2}", spread(&m)));
    }
    outcome(
        tree_err < 1e-6 && line_err < 1e-4 && bounded,
        format!(
            "q=0 max |z − z_λ| = {tree_err:.2e}, q=1 |mean − z₊| = {line_err:.2e}, q=0.05 ladder spread {}",
            notes.join(", ")
        ),
    )
}

fn cubic_classifier() -> Outcome {
    let inside = |x: f64| oscillating_ac_test(x, 0.0).class == AcClass::AcInterior;
    let (mut lo, mut hi) = (2.5, 3.0);
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let edge_err = (0.5 * (lo + hi) - 2.0 * SQRT_2).abs();
    let c = |re: f64| Complex64::new(re, 0.0);
    let close = |got: [Complex64; 3], want: [Complex64; 3]| got.iter().zip(want).all(|(a, b)| (a - b).norm() < 1e-12);
    let s2 = SQRT_2;
    let r0 = oscillating_ac_test(0.0, 0.0);
    let r1 = oscillating_ac_test(3.0, 0.0);
    let r2 = oscillating_ac_test(0.0, 2.0);
    let examples = r0.class == AcClass::AcInterior
        && close(r0.roots, [c(0.0), Complex64::new(0.0, s2), Complex64::new(0.0, -s2)])
        && r1.class == AcClass::NotAc
        && close(r1.roots, [c(-3.0), c(-2.0), c(-1.0)])
        && r2.class == AcClass::NotAc
        && close(r2.roots, [c(-s2), c(0.0), c(s2)]);
    outcome(
        edge_err < 1e-3 && examples,
        format!("δ=0 edge at {:.9} (|· − 2√2| = {edge_err:.1e}), factorization examples {}", 0.5 * (lo + hi), if examples { "exact" } else { "off" }),
    )
}

fn loop_tree_suite() -> Outcome {
    let mut d = Draws::new(9);
    let mut fft_err = 0.0f64;
    for bits in 0..=8 {
        let n = 1usize << bits;
        let row: Vec<Complex64> = (0..n).map(|_| Complex64::new(d.uniform(-1.0, 1.0), d.uniform(-1.0, 1.0))).collect();
        let z = DMatrix::from_fn(n, n, |i, j| row[(j + n - i) % n]);
        let s = 1.0 / (n as f64).sqrt();
        let u = DMatrix::from_fn(n, n, |j, k| Complex64::from_polar(s, 2.0 * PI * (j * k) as f64 / n as f64));
        let diag = u.adjoint() * z * &u;
        let f = fft_symbol(&row).unwrap();
        for j in 0..n {
            for k in 0..n {
                let want = if j == k { f[j] } else { Complex64::new(0.0, 0.0) };
                fft_err = fft_err.max((diag[(j, k)] - want).norm());
            }
        }
    }

    let l = lam(0.3, 1e-3);
    let reduction = (loop_green_root(0.0, l, 200_000).unwrap().z() - tree_fixed_point(2, l).unwrap().z()).norm();

    let mut closed_err = 0.0f64;
    let mut mirror_err = 0.0f64;
    for gamma in [0.25, 0.5, 1.0] {
        for re in linspace(-2.0 * gamma - 2.6, -2.0 * gamma + 2.6, 41) {
            let l = lam(re, 1e-3);
            let b = l.value() + 2.0 * gamma;
            let corrected = -b / 4.0 + Complex64::i() / 4.0 * (8.0 - b * b).sqrt();
            closed_err = closed_err.max((loop_green_root(gamma, l, 200_000).unwrap().z() - corrected).norm());
            // the printed form (2γ+λ)/4 + (i/4)√(8−(2γ+λ)²) is −conj of the root on the real axis
            let x = re + 2.0 * gamma;
            let printed = Complex64::new(x / 4.0, (8.0 - x * x).sqrt() / 4.0);
            let w = theta_zero_fixed_point(gamma, SpectralParam::real(re).unwrap()).unwrap().z();
            mirror_err = mirror_err.max((printed + w.conj()).norm());
        }
    }

    let (gamma, l, levels) = (0.6, lam(0.2, 0.1), 5);
    let g = RootedGraph::regular_loop_tree(gamma, levels);
    let dec = decompose_spheres(&g, levels);
    let spectra = loop_spectra(gamma, l, levels, HPoint::I).unwrap();
    let mut z = SiegelPoint::scalar(HPoint::I, 1 << levels);
    let mut block_err = 0.0f64;
    for n in (0..levels).rev() {
        z = siegel_mobius(&z, &dec, n, &[], l).unwrap();
        let row: Vec<Complex64> = z.to_dense().row(0).iter().copied().collect();
        let f = fft_symbol(&row).unwrap();
        block_err = f.iter().zip(&spectra[n].f).map(|(a, b)| (a - b).norm()).fold(block_err, f64::max);
    }
    outcome(
        fft_err < 1e-12 && reduction < 1e-6 && closed_err < 1e-6 && block_err < 1e-9,
        format!(
            "fft {fft_err:.1e}, γ=0 reduction {reduction:.1e}, θ=0 vs −(2γ+λ)/4 + (i/4)√(8−(2γ+λ)²) {closed_err:.1e} \
             (printed +(2γ+λ)/4 form is its mirror −conj to {mirror_err:.0e}), dense blocks {block_err:.1e}"
        ),
    )
}

fn meanfield() -> Outcome {
    let c = meanfield_eigen_check(1.0, 10, true).unwrap();
    let alt = meanfield_eigen_check(1.0, 10, false).unwrap();
    outcome(
        c.vertices == 2047 && c.max_excess <= 0.15 && c.top_gap <= 0.15,
        format!(
            "{} eigenvalues in [{:.4}, {:.4}], max excess {:.2e}, top gap {:.3} (without diagonal: excess {:.2e}, gap {:.3})",
            c.vertices, c.min_eigenvalue, c.max_eigenvalue, c.max_excess, c.top_gap, alt.max_excess, alt.top_gap
        ),
    )
}

fn run_cli(dir: &Path, cmd: &str, config: &str, threads: usize) -> Vec<u8> {
    let cfg = dir.join(format!("{cmd}.json"));
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join(format!("{cmd}-{threads}.csv"));
    let status = Command::new(env!("CARGO_BIN_EXE_greenrec"))
        .args([cmd, "--config", cfg.to_str().unwrap(), "--seed", "2024", "--threads", &threads.to_string()])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success(), "{cmd} failed");
    std::fs::read(out).unwrap()
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let runs = [
        (
            "moments",
            r#"{"model":{"kind":"tree","k":2,"potential":{"kind":"iid","dist":{"type":"bernoulli_pm1"},"a":0.1}},
               "lambda":{"re":0.5},"eps_ladder":[0.1,0.01,0.001],
               "population":{"pool_size":30000,"generations":120,"init":{"kind":"fixed_point"}}}"#,
        ),
        (
            "percolation",
            r#"{"model":{"kind":"percolation","q_del":0.05},"grid":{"re_min":0,"re_max":1,"points":3,"im":0.01},
               "population":{"pool_size":30000,"generations":120}}"#,
        ),
        (
            "green",
            r#"{"model":{"kind":"tree","k":2,"potential":{"kind":"two_periodic","joint":{"atoms":[[1,1],[-1,-1]],"probs":[0.5,0.5]},
               "root":{"type":"bernoulli_pm1"},"a":0.5,"allow_inadmissible":true}},
               "grid":{"re_min":-1,"re_max":1,"points":3,"im":0.01},"population":{"pool_size":20000,"generations":150}}"#,
        ),
    ];
    let mut same = true;
    let mut bytes = 0;
    for (cmd, cfg) in runs {
        let base = run_cli(dir.path(), cmd, cfg, 1);
        bytes += base.len();
        for threads in [2, 5, 8] {
            same &= run_cli(dir.path(), cmd, cfg, threads) == base;
        }
    }
    outcome(same, format!("moments, percolation, green: {bytes} bytes identical across --threads 1, 2, 5, 8"))
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 11] = [
        ("free half-line closed form", Duration::from_secs(1), free_half_line),
        ("1D oracle equivalence", Duration::from_secs(30), oracle_1d),
        ("contraction suite", Duration::from_secs(10), contraction_suite),
        ("tree fixed point", Duration::from_secs(60), tree_fixed_point_suite),
        ("μ-functional suite", Duration::from_secs(30), mu_suite),
        ("Anderson-on-tree stability signal", Duration::from_secs(600), anderson_trend),
        ("percolation reductions", Duration::from_secs(300), percolation_reductions),
        ("cubic classifier", Duration::from_secs(1), cubic_classifier),
        ("loop tree", Duration::from_secs(60), loop_tree_suite),
        ("mean-field spectrum", Duration::from_secs(120), meanfield),
        ("determinism across threads", Duration::from_secs(600), determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        let took = t.elapsed();
        let pass = o.pass && took <= *budget;
        failed += usize::from(!pass);
        println!(
            "{} {:>2} {name}: {} [{:.2} s of {} s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
