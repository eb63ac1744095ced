use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Experiment, Params, Row, Suite};
use crate::coherent::{auto_levels, fock_amplitudes, overlap_closed, CoherentFactory, CoherentLabel, PhaseConvention};
use crate::error::Result;
use crate::examples::flpr::{l3_rank_count, FlprLabel, FlprParams, FlprRoute, L3Sectors};
use crate::examples::second_class::{constraint_label, random_path, second_class_full, SecondClassSystem};
use crate::examples::sphere::{e2_reduced_kernel, hypersphere_second_class_kernel, sphere_projected_kernel, surface_constant_profile};
use crate::examples::sphere::{annulus_measure, smooth_measure, Fiducial, HypersphereParams, SeedFn, SphereKernelParams};
use crate::examples::*;
use crate::examples::su2;
use crate::fock::{build_canonical_ops, hermitian_eig, OperatorMatrix, StateVector, TruncationSpec};
use crate::projector::{
    group_average_u1, rank1_min_uncertainty, sinc_integral, spectral_interval, weyl_projector_block, ConstraintSpec, Projector,
    SincQuadrature,
};
use crate::propagator::{
    exact_projected, lambda_averaged, lambda_scheduled, trotter_interleaved, EPlacement, Evolution, LambdaMeasure,
    LambdaSchedule, LatticeConvention,
};
use crate::rkhs::{gram, loglog_slope, psd_certificate, reduce_limit_delta, reduce_rescale, reproduce_check, Kernel, Measure};

const MAX_DIM: usize = 20_000;

pub(super) static REGISTRY: &[Experiment] = &[
    Experiment {
        name: "overlap-oracle",
        description: "numeric Fock overlaps against the closed coherent overlap on a phase-space grid",
        anchor: "coherent::overlap_closed",
        suite: Suite::Fast,
        defaults: &[("grid_max", 2.0), ("grid_points", 5.0)],
        run: overlap_oracle,
    },
    Experiment {
        name: "projector-axioms",
        description: "idempotency and hermiticity of all four projector routes; sinc against spectral",
        anchor: "projector::spectral_interval",
        suite: Suite::Fast,
        defaults: &[("delta", 0.5), ("levels", 40.0), ("sinc_tol", 1e-12)],
        run: projector_axioms,
    },
    Experiment {
        name: "projected-p-kernel",
        description: "momentum-interval kernel: number-basis sandwich, exact integral and leading-order gap",
        anchor: "examples::ppkernel::projected_p_exact",
        suite: Suite::Fast,
        defaults: &[("delta", 0.1)],
        run: projected_p_kernel,
    },
    Experiment {
        name: "delta-limit",
        description: "extrapolated delta -> 0 momentum-interval kernel against its Gaussian limit",
        anchor: "rkhs::reduce_limit_delta",
        suite: Suite::Fast,
        defaults: &[("d0", 0.2)],
        run: delta_limit,
    },
    Experiment {
        name: "su2-kernel",
        description: "spin subspace ranks and projected kernel (s unset sweeps 1/2, 1, 3/2)",
        anchor: "examples::su2::su2_projected_kernel",
        suite: Suite::Fast,
        defaults: &[("s", f64::NAN), ("pairs", 5.0)],
        run: su2_kernel,
    },
    Experiment {
        name: "gauge-independence",
        description: "spin-constrained propagator under seeded multiplier schedules",
        anchor: "propagator::lambda_scheduled",
        suite: Suite::Fast,
        defaults: &[("seeds", 10.0), ("slices", 32.0), ("t", 1.0), ("two_s", 2.0), ("amplitude", 1.0)],
        run: gauge_independence,
    },
    Experiment {
        name: "flpr",
        description: "oscillator pair with a free particle: closed sector sum, factorized numeric route, leakage scaling",
        anchor: "examples::flpr::flpr_closed",
        suite: Suite::Full,
        defaults: &[("g", 1.0), ("omega", 1.0), ("delta", 0.05), ("sweep_g", 2.5)],
        run: flpr,
    },
    Experiment {
        name: "second-class",
        description: "rank-one second-class projector: reduced evolution, Weyl integral and path action",
        anchor: "examples::second_class::second_class_full",
        suite: Suite::Fast,
        defaults: &[("paths", 5.0), ("weyl_block", 8.0)],
        run: second_class,
    },
    Experiment {
        name: "trotter-order",
        description: "interleaved lattice error halving under slice doubling on the second-class system",
        anchor: "propagator::trotter_interleaved",
        suite: Suite::Fast,
        defaults: &[("t", 0.2), ("n0", 16.0)],
        run: trotter_order,
    },
    Experiment {
        name: "three-routes",
        description: "exact, interleaved and multiplier-averaged propagators for a momentum constraint",
        anchor: "propagator::lambda_averaged",
        suite: Suite::Fast,
        defaults: &[("delta", 0.5), ("levels", 40.0), ("slices", 512.0), ("t", 1.0)],
        run: three_routes,
    },
    Experiment {
        name: "rkhs-properties",
        description: "Hermitian symmetry, PSD Gram matrices and reproducing checks for every kernel",
        anchor: "rkhs::reproduce_check",
        suite: Suite::Fast,
        defaults: &[("labels", 8.0)],
        run: rkhs_properties,
    },
    Experiment {
        name: "surface-constant",
        description: "angular norm of the E(2) fiducial across radii of the annulus",
        anchor: "examples::sphere::surface_constant_profile",
        suite: Suite::Fast,
        defaults: &[("delta", 0.2)],
        run: surface_constant,
    },
    Experiment {
        name: "su2-generators",
        description: "spin generators: algebra, commutation with the constraint, classical symbols",
        anchor: "examples::su2::su2_generators",
        suite: Suite::Fast,
        defaults: &[("levels", 12.0)],
        run: su2_generators_check,
    },
    Experiment {
        name: "noncompact-rank",
        description: "excitation-difference constraint: rank growth with truncation",
        anchor: "examples::noncompact::noncompact_u1_analogue_projector",
        suite: Suite::Fast,
        defaults: &[("k", 3.0), ("levels", 10.0)],
        run: noncompact_rank,
    },
];

fn info(quantity: impl Into<String>, value: f64) -> Row {
    Row::new(quantity, C64::new(value, 0.0), 0.0, 0.0)
}

fn uniform(rng: &mut ChaCha8Rng, a: f64) -> f64 {
    rng.random_range(-a..=a)
}

fn overlap_oracle(p: &Params, _seed: u64) -> Result<Vec<Row>> {
    let max = p.get("grid_max");
    let n = p.usize("grid_points")?.max(2);
    let axis: Vec<f64> = (0..n).map(|k| -max + 2.0 * max * k as f64 / (n - 1) as f64).collect();
    let labels: Vec<CoherentLabel> = axis.iter().flat_map(|&pp| axis.iter().map(move |&q| CoherentLabel::pq(pp, q))).collect();
    let spec = auto_levels(&labels, 1, MAX_DIM)?;
    let factory = CoherentFactory::new(spec)?;
    let vecs = labels.iter().map(|l| factory.ground_vector(l)).collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0f64;
    for (i, a) in vecs.iter().enumerate() {
        for (j, b) in vecs.iter().enumerate() {
            worst = worst.max((a.inner(b) - overlap_closed(&labels[i], &labels[j])?).norm());
        }
    }
    Ok(vec![info("levels", spec.levels() as f64), Row::bound("max_abs_error", worst, p.tol(1e-10))])
}

fn axiom_rows(name: &str, e: &Projector, p: &Params) -> Vec<Row> {
    let c = e.certify();
    let dim = c.dim as f64;
    vec![
        info(format!("{name}.rank"), e.rank() as f64),
        Row::bound(format!("{name}.idempotency"), c.idempotency, p.tol(1e-10 * dim)),
        Row::bound(format!("{name}.hermiticity"), c.hermiticity, p.tol(1e-12 * dim)),
    ]
}

fn projector_axioms(p: &Params, _seed: u64) -> Result<Vec<Row>> {
    let delta = p.get("delta");
    let ops = build_canonical_ops(&TruncationSpec::new(1, p.usize("levels")?)?)?;
    let spectral = spectral_interval(&ConstraintSpec::single(ops[0].p.clone(), delta)?)?;
    let quad = SincQuadrature { tol: p.get("sinc_tol"), ..SincQuadrature::default() };
    let sinc = sinc_integral(&ops[0].p, delta, quad)?;
    let two = TruncationSpec::new(2, 8)?;
    let group = su2::su2_projector(&two, 2.0)?;
    let target = constraint_label();
    let rank1 = rank1_min_uncertainty(&target, &auto_levels(std::slice::from_ref(&target), 1, MAX_DIM)?)?;
    let mut rows = Vec::new();
    rows.extend(axiom_rows("spectral_interval", &spectral, p));
    rows.extend(axiom_rows("group_avg_u1", &group, p));
    rows.extend(axiom_rows("sinc_integral", &sinc, p));
    rows.extend(axiom_rows("rank1_min_uncertainty", &rank1, p));
    let gap = (spectral.matrix().entries() - sinc.matrix().entries()).norm();
    rows.push(Row::bound("sinc_vs_spectral", gap, p.tol(1e-6)));
    Ok(rows)
}

fn pp_pairs() -> [(CoherentLabel, CoherentLabel); 3] {
    [
        (CoherentLabel::pq(0.3, 0.5), CoherentLabel::pq(-0.2, -0.4)),
        (CoherentLabel::pq(0.0, 0.2), CoherentLabel::pq(0.4, -0.3)),
        (CoherentLabel::pq(-0.6, 1.0), CoherentLabel::pq(0.1, 0.7)),
    ]
}

fn projected_p_kernel(p: &Params, _seed: u64) -> Result<Vec<Row>> {
    let delta = p.get("delta");
    let pairs = pp_pairs();
    let all: Vec<CoherentLabel> = pairs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
    let spec = auto_levels(&all, 1, MAX_DIM)?;
    let e = compressed_momentum_projector(spec.levels(), delta);
    let mut rows = vec![info("levels", spec.levels() as f64)];
    for (k, (l2, l1)) in pairs.iter().enumerate() {
        let (v2, v1) = (fock_amplitudes(l2, &spec), fock_amplitudes(l1, &spec));
        let sandwich = v2.amplitudes().dotc(&(&e * v1.amplitudes()));
        let exact = projected_p_exact(l2, l1, delta)?;
        rows.push(Row::new(format!("sandwich_vs_exact[{k}]"), sandwich, (sandwich - exact).norm(), p.tol(1e-7)));
    }
    let deltas = [0.2, 0.1, 0.05];
    let (l2, l1) = &pairs[0];
    let gaps = deltas
        .iter()
        .map(|&d| {
            let ex = projected_p_exact(l2, l1, d)?;
            Ok((ex - projected_p_leading(l2, l1, d)?).norm() / ex.norm())
        })
        .collect::<Result<Vec<f64>>>()?;
    for (d, g) in deltas.iter().zip(&gaps) {
        rows.push(info(format!("relative_gap[delta={d}]"), *g));
    }
    let (slope, _) = loglog_slope(&deltas, &gaps);
    rows.push(Row::target("gap_slope", slope, 2.0, p.tol(0.2)));
    Ok(rows)
}

fn delta_limit(p: &Params, _seed: u64) -> Result<Vec<Row>> {
    let d0 = p.get("d0");
    let family = projected_p_family();
    let probe = [0.0, 0.0];
    let deltas: Vec<f64> = (0..4).map(|k| d0 / 2f64.powi(k)).collect();
    let diag = deltas
        .iter()
        .map(|&d| Ok(family(d)?.eval(&probe, &probe).norm()))
        .collect::<Result<Vec<f64>>>()?;
    let (fitted, _) = loglog_slope(&deltas, &diag);
    let limit = reduce_limit_delta(family, d0, None, &probe)?;
    let scale = PI.sqrt() / 2.0;
    let ps = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let (q2, q1) = (0.3, -0.2);
    let mut worst = 0.0f64;
    for &a in &ps {
        for &b in &ps {
            let v = limit.kernel.eval(&[a, q2], &[b, q1]) * scale;
            worst = worst.max((v - limit_kernel(&CoherentLabel::pq(a, q2), &CoherentLabel::pq(b, q1))).norm());
        }
    }
    let base = limit.kernel.eval(&[0.5, 0.0], &[-0.5, 0.0]);
    let mut q_spread = 0.0f64;
    for (qa, qb) in [(0.7, -0.4), (-1.0, 0.5), (1.5, 1.5), (0.0, 2.0)] {
        q_spread = q_spread.max(((limit.kernel.eval(&[0.5, qa], &[-0.5, qb]) - base) * scale).norm());
    }
    Ok(vec![
        Row::bound("limit_vs_closed", worst, p.tol(1e-6)),
        Row::target("sigma_fitted", fitted, 1.0, p.tol(0.05)),
        info("sigma_snapped", limit.sigma),
        info("rho", limit.rho.unwrap_or(f64::NAN)),
        Row::bound("q_independence", q_spread, p.tol(1e-6)),
    ])
}

fn random_two_mode(rng: &mut ChaCha8Rng, a: f64) -> Result<CoherentLabel> {
    CoherentLabel::new(
        vec![uniform(rng, a), uniform(rng, a)],
        vec![uniform(rng, a), uniform(rng, a)],
        PhaseConvention::AlphaPqHalf,
    )
}

fn su2_kernel(p: &Params, seed: u64) -> Result<Vec<Row>> {
    let spins: Vec<f64> = match p.opt("s") {
        Some(s) => vec![s],
        None => vec![0.5, 1.0, 1.5],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = (0..p.usize("pairs")?)
        .map(|_| Ok((random_two_mode(&mut rng, 1.0)?, random_two_mode(&mut rng, 1.0)?)))
        .collect::<Result<Vec<_>>>()?;
    let all: Vec<CoherentLabel> = pairs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
    let mut rows = Vec::new();
    for s in spins {
        let two_s = 2.0 * s;
        let mut spec = auto_levels(&all, 2, MAX_DIM)?;
        if spec.levels() <= two_s as usize + 1 {
            spec = spec.resized(two_s as usize + 2)?;
        }
        let e = su2::su2_projector(&spec, two_s)?;
        if two_s.fract() != 0.0 {
            rows.push(Row::target(format!("rank[s={s}]"), e.rank() as f64, 0.0, 0.0));
            continue;
        }
        rows.push(Row::target(format!("rank[s={s}]"), e.rank() as f64, two_s + 1.0, 0.0));
        rows.push(Row::target(format!("trace[s={s}]"), e.matrix().entries().trace().re, two_s + 1.0, p.tol(1e-10)));
        let mut worst = 0.0f64;
        for (l2, l1) in &pairs {
            let sandwich = e.sandwich(&fock_amplitudes(l2, &spec), &fock_amplitudes(l1, &spec));
            let (z2, z1) = (l2.z(), l1.z());
            let k = su2_projected_kernel(&[z2[0], z2[1]], &[z1[0], z1[1]], two_s)?;
            worst = worst.max((sandwich - k).norm());
        }
        rows.push(Row::bound(format!("kernel_vs_sandwich[s={s}]"), worst, p.tol(1e-8)));
    }
    if p.opt("s").is_none() {
        let spec = TruncationSpec::new(2, 6)?;
        rows.push(Row::target("rank[2s=1.4]", su2::su2_projector(&spec, 1.4)?.rank() as f64, 0.0, 0.0));
        rows.push(Row::new("kernel_rejects[2s=1.4]", C64::new(0.0, 0.0), if su2_projected_kernel(&[C64::new(0.0, 0.0); 2], &[C64::new(0.0, 0.0); 2], 1.4).is_err() { 0.0 } else { 1.0 }, 0.0));
    }
    Ok(rows)
}

fn gauge_independence(p: &Params, seed: u64) -> Result<Vec<Row>> {
    let spec = TruncationSpec::new(2, 8)?;
    let two_s = p.get("two_s");
    let t = p.get("t");
    let g = su2_generators(&spec)?;
    let h = OperatorMatrix::combine(&[(1.0, &g.sx), (0.3, &g.sz)])?;
    let ev = Evolution::new(h)?;
    let phi = su2::su2_constraint(&spec, two_s)?;
    let e = group_average_u1(&phi, PI)?;
    let phis = ConstraintSpec::single(phi, 0.5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (l2, l1) = (random_two_mode(&mut rng, 1.0)?, random_two_mode(&mut rng, 1.0)?);
    let (v2, v1) = (fock_amplitudes(&l2, &spec), fock_amplitudes(&l1, &spec));
    let exact = exact_projected(&ev, &v2, &v1, &e, t)?.value;
    let slices = p.usize("slices")?;
    let values = (0..p.usize("seeds")? as u64)
        .map(|k| {
            let conv = if k % 2 == 0 { LatticeConvention::EpsTOverN } else { LatticeConvention::EpsTOverNPlus1 };
            let place = if k % 3 == 2 { EPlacement::Final } else { EPlacement::Initial };
            let sched = LambdaSchedule::random(slices, 1, seed.wrapping_mul(1000).wrapping_add(k), p.get("amplitude"), conv)?;
            Ok(lambda_scheduled(&ev, &v2, &v1, &phis, &sched, &e, place, t)?.value)
        })
        .collect::<Result<Vec<C64>>>()?;
    let spread = values.iter().flat_map(|a| values.iter().map(move |b| (a - b).norm())).fold(0.0, f64::max);
    let vs_exact = values.iter().map(|v| (v - exact).norm()).fold(0.0, f64::max);
    Ok(vec![
        Row::new("exact_projected", exact, 0.0, 0.0),
        Row::bound("max_deviation", spread, p.tol(1e-6)),
        Row::bound("max_deviation_from_exact", vs_exact, p.tol(1e-6)),
    ])
}

fn flpr_label_sets() -> [(FlprLabel, FlprLabel); 3] {
    let c = C64::new;
    [
        (FlprLabel::new(c(0.5, 0.2), c(-0.3, 0.4), 0.3, 0.2), FlprLabel::new(c(0.1, -0.4), c(0.6, 0.1), -0.4, -0.3)),
        (FlprLabel::new(c(-0.2, 0.6), c(0.4, -0.1), -0.8, 0.5), FlprLabel::new(c(0.3, 0.3), c(-0.5, -0.2), 0.6, 0.1)),
        (FlprLabel::new(c(0.7, -0.1), c(0.0, 0.5), 1.1, -0.6), FlprLabel::new(c(-0.4, 0.2), c(0.2, 0.6), 0.9, 0.4)),
    ]
}

fn flpr(p: &Params, seed: u64) -> Result<Vec<Row>> {
    let sets = flpr_label_sets();
    let p3_max = sets.iter().flat_map(|(a, b)| [a.p3.abs(), b.p3.abs()]).fold(0.0, f64::max);
    let params = FlprParams::with_auto_cutoff(p.get("g"), p.get("omega"), p.get("delta"), p3_max)?;
    let mut rows = vec![info("m_cutoff", params.m_cutoff as f64)];
    for (k, (l2, l1)) in sets.iter().enumerate() {
        for t in [0.0, 0.5] {
            let closed = flpr_closed(l2, l1, &params, t)?;
            let numeric = flpr_numeric(l2, l1, &params, t, &FlprRoute::Exact)?;
            rows.push(Row::new(format!("closed_vs_numeric[set={k},T={t}]"), numeric, (closed - numeric).norm(), p.tol(1e-5)));
        }
    }
    // schedule dependence of the constrained state at fixed T, for decreasing delta
    let t = 0.5;
    let sched = |s: u64| LambdaSchedule::random(16, 1, s, 1.0, LatticeConvention::EpsTOverN);
    let (s1, s2) = (sched(seed)?, sched(seed.wrapping_add(1))?);
    let lam = |s: &LambdaSchedule| t / s.slices() as f64 * s.values().iter().map(|r| r[0]).sum::<f64>();
    let (lam1, lam2) = (lam(&s1), lam(&s2));
    let deltas = [0.2, 0.1, 0.05];
    let l1 = &sets[0].1;
    let leak = deltas
        .iter()
        .map(|&d| flpr_leakage(l1, &FlprParams::with_auto_cutoff(p.get("sweep_g"), p.get("omega"), d, p3_max)?, lam1, lam2))
        .collect::<Result<Vec<f64>>>()?;
    for (d, v) in deltas.iter().zip(&leak) {
        rows.push(info(format!("leakage[delta={d}]"), *v));
    }
    let (slope, _) = loglog_slope(&deltas, &leak);
    rows.push(Row::target("leakage_slope", slope, 1.0, p.tol(0.2)));
    // the scheduled route itself moves the matrix element by at most the leakage bound
    let sweep = FlprParams::with_auto_cutoff(p.get("sweep_g"), p.get("omega"), 0.05, p3_max)?;
    let (l2, l1) = &sets[0];
    let a = flpr_numeric(l2, l1, &sweep, t, &FlprRoute::Scheduled { schedule: s1 })?;
    let b = flpr_numeric(l2, l1, &sweep, t, &FlprRoute::Scheduled { schedule: s2 })?;
    let bound = flpr_leakage(l1, &sweep, lam1, lam2)? * flpr_numeric(l2, l2, &sweep, 0.0, &FlprRoute::Exact)?.norm().sqrt()
        * flpr_numeric(l1, l1, &sweep, 0.0, &FlprRoute::Exact)?.norm().sqrt();
    rows.push(Row::new("scheduled_difference", a - b, (a - b).norm(), bound));
    let spec = TruncationSpec::new(2, 9)?;
    let sectors = L3Sectors::new(spec)?;
    let rank_err = (-4..=4).map(|m| sectors.rank(m).abs_diff(l3_rank_count(9, m))).max().unwrap_or(0);
    rows.push(Row::target("l3_rank_mismatch", rank_err as f64, 0.0, 0.0));
    Ok(rows)
}

fn second_class(p: &Params, seed: u64) -> Result<Vec<Row>> {
    let pairs = [
        (CoherentLabel::pq(0.5, 1.5), CoherentLabel::pq(1.2, 2.3)),
        (CoherentLabel::pq(1.0, 2.0), CoherentLabel::pq(1.0, 2.0)),
        (CoherentLabel::pq(-0.3, 1.1), CoherentLabel::pq(0.8, 2.6)),
    ];
    let all: Vec<CoherentLabel> = pairs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
    let sys = SecondClassSystem::new(&all)?;
    let mut rows = Vec::new();
    for (k, (l2, l1)) in pairs.iter().enumerate() {
        for t in [0.0, 1.0] {
            let v = sys.reduced(l2, l1, t)?;
            let c = second_class_full(l2, l1, t)?;
            rows.push(Row::new(format!("reduced_vs_closed[{k},T={t}]"), v, (v - c).norm(), p.tol(1e-8)));
        }
    }
    let block = p.usize("weyl_block")?;
    let target = constraint_label();
    let (weyl, _) = weyl_projector_block(&target, block, 12.0, 16, 8);
    let v = fock_amplitudes(&target, &TruncationSpec::new(1, block)?);
    let outer = v.amplitudes() * v.amplitudes().adjoint();
    rows.push(Row::bound("weyl_vs_outer", (weyl - outer).camax(), p.tol(1e-6)));
    let (a, b) = (CoherentLabel::pq(0.6, 1.4), CoherentLabel::pq(1.5, 2.5));
    let straight = path_action(&random_path(&a, &b, 64, 0.0, seed), 1.0)?;
    let mut spread = 0.0f64;
    for k in 0..p.usize("paths")? as u64 {
        let path = random_path(&a, &b, 64, 0.05, seed.wrapping_mul(31).wrapping_add(k + 1));
        spread = spread.max((path_action(&path, 1.0)? - straight).abs());
    }
    rows.push(Row::new("action_spread", C64::new(straight, 0.0), spread, p.tol(1e-10)));
    Ok(rows)
}

fn trotter_order(p: &Params, _seed: u64) -> Result<Vec<Row>> {
    let (l2, l1) = (CoherentLabel::pq(0.8, 1.8), CoherentLabel::pq(1.2, 2.2));
    let sys = SecondClassSystem::new(&[l2.clone(), l1.clone()])?;
    let (v2, v1) = (sys.factory.ground_vector(&l2)?, sys.factory.ground_vector(&l1)?);
    let t = p.get("t");
    let n0 = p.usize("n0")?;
    let closed = second_class_full(&l2, &l1, t)?;
    let errs = [n0, 2 * n0, 4 * n0]
        .iter()
        .map(|&n| Ok((trotter_interleaved(&sys.evolution, &v2, &v1, &sys.projector, t, n)?.value - closed).norm()))
        .collect::<Result<Vec<f64>>>()?;
    let mut rows: Vec<Row> = errs.iter().enumerate().map(|(k, e)| info(format!("error[N={}]", n0 << k), *e)).collect();
    rows.push(Row::target("ratio[N->2N]", errs[0] / errs[1], 2.0, p.tol(0.3)));
    rows.push(Row::target("ratio[2N->4N]", errs[1] / errs[2], 2.0, p.tol(0.3)));
    Ok(rows)
}

fn three_routes(p: &Params, _seed: u64) -> Result<Vec<Row>> {
    let delta = p.get("delta");
    let t = p.get("t");
    let spec = TruncationSpec::new(1, p.usize("levels")?)?;
    let ops = build_canonical_ops(&spec)?;
    let pm = &ops[0].p;
    let h = OperatorMatrix::hermitian(hermitian_eig(pm)?.func(|x| C64::new(0.5 * x * x + 0.3 * x, 0.0)))?;
    let ev = Evolution::new(h)?;
    let e = spectral_interval(&ConstraintSpec::single(pm.clone(), delta)?)?;
    let (l2, l1) = (CoherentLabel::pq(0.2, 0.3), CoherentLabel::pq(-0.1, -0.2));
    let (v2, v1): (StateVector, StateVector) = (fock_amplitudes(&l2, &spec), fock_amplitudes(&l1, &spec));
    let n = p.usize("slices")?;
    let quad = SincQuadrature { tol: 1e-12, ..SincQuadrature::default() };
    let routes = [
        ("exact", exact_projected(&ev, &v2, &v1, &e, t)?.value),
        ("interleaved", trotter_interleaved(&ev, &v2, &v1, &e, t, n)?.value),
        ("lambda_single_slice", lambda_averaged(&ev, &v2, &v1, pm, &LambdaMeasure::SingleSliceSinc { delta, quad }, t, n)?.value),
        ("lambda_every_slice", lambda_averaged(&ev, &v2, &v1, pm, &LambdaMeasure::EverySliceSinc { delta, quad }, t, n)?.value),
    ];
    let mut rows = Vec::new();
    for (i, (a, va)) in routes.iter().enumerate() {
        for (b, vb) in &routes[i + 1..] {
            rows.push(Row::new(format!("{a}_vs_{b}"), *va, (va - vb).norm(), p.tol(1e-5)));
        }
    }
    Ok(rows)
}

fn random_labels(rng: &mut ChaCha8Rng, count: usize, arity: usize, a: f64) -> Vec<Vec<f64>> {
    (0..count).map(|_| (0..arity).map(|_| uniform(rng, a)).collect()).collect()
}

fn kernel_rows(name: &str, k: &Kernel, labels: &[Vec<f64>], p: &Params) -> Result<Vec<Row>> {
    let g = gram(k, labels);
    let psd = psd_certificate(&g)?;
    let rel = (-psd.min_eigenvalue).max(0.0) / psd.spectral_norm.max(f64::MIN_POSITIVE);
    Ok(vec![
        Row::bound(format!("{name}.hermitian_defect"), k.hermitian_defect(labels), p.tol(1e-12)),
        Row::new(format!("{name}.psd_min_eig"), C64::new(psd.min_eigenvalue, 0.0), rel, p.tol(1e-10)),
    ])
}

fn reproduce_row(name: &str, k: &Kernel, m: &Measure, x2: &[f64], x1: &[f64], tol: f64) -> Result<Row> {
    let r = reproduce_check(k, m, x2, x1)?;
    Ok(Row::new(format!("{name}.reproduce"), r.integral, r.residual, tol))
}

fn rkhs_properties(p: &Params, seed: u64) -> Result<Vec<Row>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = p.usize("labels")?;
    let mut rows = Vec::new();

    let overlap = Kernel::coherent_overlap(1);
    let rescaled = reduce_rescale(&overlap, 1.7)?;
    let pp = projected_p_family()(0.1)?;
    let limit = Kernel::new(2, "limit", |x, y| C64::new(limit_kernel(&CoherentLabel::pq(x[0], x[1]), &CoherentLabel::pq(y[0], y[1])), 0.0));
    let spin = Kernel::new(4, "su2(s=1)", |x, y| {
        let z = |v: &[f64]| [C64::new(v[2], v[0]) / 2f64.sqrt(), C64::new(v[3], v[1]) / 2f64.sqrt()];
        su2_projected_kernel(&z(x), &z(y), 2.0).unwrap_or(C64::new(f64::NAN, 0.0))
    });
    let sphere = sphere_projected_kernel(&SphereKernelParams::sphere_default())?;
    let e2 = e2_reduced_kernel(&SphereKernelParams::e2_default())?;
    let hyper = hypersphere_second_class_kernel(&HypersphereParams::default_for(0.2))?;

    let planar: Vec<(&str, &Kernel)> = vec![("overlap", &overlap), ("rescaled_overlap", &rescaled), ("projected_p", &pp), ("limit", &limit)];
    for (name, k) in &planar {
        rows.extend(kernel_rows(name, k, &random_labels(&mut rng, count, 2, 1.5), p)?);
    }
    rows.extend(kernel_rows("su2", &spin, &random_labels(&mut rng, count, 4, 1.0), p)?);
    rows.extend(kernel_rows("sphere", &sphere, &random_labels(&mut rng, count, 4, 1.0), p)?);
    let mut e2_labels = random_labels(&mut rng, count, 3, 1.0);
    e2_labels.iter_mut().for_each(|l| l[2] *= PI);
    rows.extend(kernel_rows("e2", &e2, &e2_labels, p)?);
    rows.extend(kernel_rows("hypersphere", &hyper, &random_labels(&mut rng, count, 4, 1.0), p)?);

    let (x2, x1) = ([0.4, -0.3], [-0.2, 0.5]);
    rows.push(reproduce_row("overlap", &overlap, &Measure::phase_space_box(10.0), &x2, &x1, p.tol(1e-6))?);
    let wide = Measure::TensorBox { bounds: vec![(-16.0, 16.0), (-10.0, 10.0)], density: 1.0 / (2.0 * PI), order: 16, tol: 1e-10 };
    rows.push(reproduce_row("rescaled_overlap", &rescaled, &wide, &x2, &x1, p.tol(1e-6))?);
    let (y2, y1) = ([0.3, -0.2, 0.2, 0.1], [-0.1, 0.4, 0.0, -0.3]);
    rows.push(reproduce_row("sphere", &sphere, &annulus_measure(), &y2, &y1, p.tol(1e-4))?);
    rows.push(reproduce_row("e2", &e2, &annulus_measure(), &[0.3, -0.2, 0.5], &[-0.1, 0.4, -0.7], p.tol(1e-3))?);
    rows.push(reproduce_row("hypersphere", &hyper, &smooth_measure(), &y2, &y1, p.tol(1e-3))?);
    Ok(rows)
}

fn surface_constant(p: &Params, _seed: u64) -> Result<Vec<Row>> {
    let delta = p.get("delta");
    let radii: Vec<f64> = (0..5).map(|k| (1.0 - delta + 2.0 * delta * (k as f64 + 0.5) / 5.0).sqrt()).collect();
    let mut params = SphereKernelParams::e2_default();
    params.delta = delta;
    let gaussian = surface_constant_profile(&params, &radii)?;
    let seed_fn: SeedFn = Arc::new(|x, y| C64::new((1.0 + 0.4 * x - 0.2 * y * y) * (-(x * x + y * y) / 2.0).exp(), 0.3 * y));
    params.eta = Fiducial::Seed(seed_fn);
    let seeded = surface_constant_profile(&params, &radii)?;
    let dev = |v: &[f64]| v.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
    Ok(vec![
        Row::bound("gaussian_seed.max_deviation", dev(&gaussian), p.tol(1e-8)),
        Row::bound("general_seed.max_deviation", dev(&seeded), p.tol(1e-8)),
    ])
}

fn su2_generators_check(p: &Params, _seed: u64) -> Result<Vec<Row>> {
    let spec = TruncationSpec::new(2, p.usize("levels")?)?;
    let g = su2_generators(&spec)?;
    let phi = su2::su2_constraint(&spec, 2.0)?;
    let comm = [&g.sx, &g.sy, &g.sz].iter().map(|s| s.commutator(&phi).norm()).fold(0.0, f64::max);
    let mut rows = vec![
        Row::bound("algebra_defect", su2::su2_algebra_defect(&spec, &g), p.tol(1e-12)),
        Row::bound("constraint_commutator", comm, 0.0),
    ];
    let grid = [([0.3, -0.2], [0.5, 0.1]), ([-0.4, 0.6], [0.0, -0.3]), ([0.2, 0.2], [-0.5, 0.4])];
    let labels: Vec<CoherentLabel> = grid
        .iter()
        .map(|(pp, q)| CoherentLabel::new(pp.to_vec(), q.to_vec(), PhaseConvention::AlphaPqHalf))
        .collect::<Result<_>>()?;
    let big = auto_levels(&labels, 2, MAX_DIM)?;
    let gb = su2_generators(&big)?;
    let mut worst = 0.0f64;
    for (l, (pp, q)) in labels.iter().zip(&grid) {
        let v = fock_amplitudes(l, &big);
        let sym = su2::su2_symbols(*pp, *q);
        for (op, s) in [&gb.sx, &gb.sy, &gb.sz].iter().zip(sym) {
            worst = worst.max((op.expectation(&v) - s).norm());
        }
    }
    rows.push(Row::bound("symbol_mismatch", worst, p.tol(1e-8)));
    Ok(rows)
}

fn noncompact_rank(p: &Params, _seed: u64) -> Result<Vec<Row>> {
    let k = p.get("k") as i64;
    let levels = p.usize("levels")?;
    let mut rows = Vec::new();
    for (kk, n) in [(0, levels), (k, levels), (k, 2 * levels)] {
        let e = noncompact_u1_analogue_projector(kk, &TruncationSpec::new(2, n)?)?;
        let expected = n.saturating_sub(kk.unsigned_abs() as usize) as f64;
        rows.push(Row::target(format!("rank[k={kk},N={n}]"), e.rank() as f64, expected, 0.0));
        let c = e.certify();
        rows.push(Row::bound(format!("idempotency[k={kk},N={n}]"), c.idempotency, p.tol(1e-10 * c.dim as f64)));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_unique() {
        let mut names: Vec<_> = REGISTRY.iter().map(|e| e.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), REGISTRY.len());
        assert!(REGISTRY.len() >= 12);
    }

    #[test]
    fn weyl_mass() {
        let (_, mass) = weyl_projector_block(&constraint_label(), 1, 12.0, 16, 8);
        assert!((mass - 2.0).abs() < 1e-10);
    }
}
