//! One PASS/FAIL line per acceptance criterion.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lpevo::evolution::{apply_evolution, evolution_kernel};
use lpevo::lp_decomp::{delta_j, phi_profile, s0_project, DyadicPartition};
use lpevo::rademacher::{khintchine_moment, RademacherBatch};
use lpevo::verify::{self, FieldSampler, Harness, Params, VerificationReport};
use lpevo::{SpectralGrid, SymbolSpec, TimeModulation};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn params(kv: &[(&str, f64)]) -> Params {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn run(id: &str, kv: &[(&str, f64)], h: &Harness) -> VerificationReport {
    verify::run_estimate(id, &params(kv), h).unwrap_or_else(|e| panic!("{id}: {e}"))
}

fn failed_checks(r: &VerificationReport) -> String {
    let bad: Vec<String> = r
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} = {}", c.name, c.value))
        .collect();
    bad.join("; ")
}

fn c1_plancherel() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    let mut pass = true;
    for (g1, g2) in [(1.0, 2.0), (0.5, 1.0), (1.0, 1.5)] {
        let t = Instant::now();
        let r = run("plancherel", &[("gamma1", g1), ("gamma2", g2), ("kappa2", 1.0), ("modes", 20.0)], &Harness::with_seed(1));
        let secs = t.elapsed().as_secs_f64();
        slowest = slowest.max(secs);
        let ratios: Vec<f64> = r.samples.iter().filter(|s| s.group == "random").map(|s| s.ratio).collect();
        let ok = !ratios.is_empty() && ratios.iter().all(|v| (0.98..=1.02).contains(v)) && secs < 30.0;
        pass &= ok && r.passed();
        worst = worst.max(ratios.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max));
    }
    outcome(pass, format!("max |ratio - 1| = {worst:.2e}, slowest run {slowest:.1}s"))
}

fn c2_golden_kernels() -> Outcome {
    let grid = Arc::new(SpectralGrid::uniform(1, 1024, 20.0, 0.0, 1.0, 2).unwrap());
    let heat = SymbolSpec::fractional_heat(1.0, 2.0).unwrap();
    let k = evolution_kernel(&heat, grid.clone(), 0.0, 1.0).unwrap();
    let heat_err = k
        .values
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let x = grid.position(j)[0];
            (v - Complex64::new((4.0 * PI).powf(-0.5) * (-x * x / 4.0).exp(), 0.0)).norm()
        })
        .fold(0.0, f64::max);
    // free-space Cauchy: the period must be long enough for the |x|^-2 images to fall below 1e-4
    let cgrid = Arc::new(SpectralGrid::uniform(1, 32768, 640.0, 0.0, 1.0, 2).unwrap());
    let cauchy = SymbolSpec::fractional_heat(1.0, 1.0).unwrap();
    let kc = evolution_kernel(&cauchy, cgrid.clone(), 0.0, 1.0).unwrap();
    let cauchy_err = kc
        .values
        .iter()
        .enumerate()
        .filter(|(j, _)| cgrid.position(*j)[0].abs() <= 10.0)
        .map(|(j, v)| {
            let x = cgrid.position(j)[0];
            (v - Complex64::new(1.0 / (PI * (1.0 + x * x)), 0.0)).norm()
        })
        .fold(0.0, f64::max);
    outcome(
        heat_err < 1e-6 && cauchy_err < 1e-4,
        format!("heat sup error {heat_err:.2e} (L=20, n=1024), Cauchy sup error on |x|<=10 {cauchy_err:.2e} (L=640)"),
    )
}

fn c3_evolution_property() -> Outcome {
    let grid = Arc::new(SpectralGrid::uniform(1, 64, 4.0, 0.0, 1.0, 2).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let specs = [
        SymbolSpec::fractional_heat(1.0, 1.5).unwrap(),
        SymbolSpec::power(
            1.0,
            2.0,
            TimeModulation::Exponential {
                amplitude: 0.5,
                rate: 1.0,
            },
            4,
        )
        .unwrap(),
        SymbolSpec::power(
            0.5,
            1.0,
            TimeModulation::Oscillating {
                amplitude: 1.0,
                omega: 4.0,
            },
            4,
        )
        .unwrap(),
    ];
    let sampler = FieldSampler {
        harmonics: 0,
        j_hi: 2,
        ..FieldSampler::default()
    };
    let mut worst: f64 = 0.0;
    for trial in 0..100u64 {
        let spec = &specs[trial as usize % specs.len()];
        let mut v = [rng.random_range(-1.0..2.0), rng.random_range(-1.0..2.0), rng.random_range(-1.0..2.0)];
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let [s, r, t] = v;
        let f = sampler.sample_field(&grid, trial).unwrap().slice(0);
        let two = apply_evolution(spec, r, t, &apply_evolution(spec, s, r, &f).unwrap()).unwrap();
        let one = apply_evolution(spec, s, t, &f).unwrap();
        worst = worst.max(two.max_distance(&one));
    }
    outcome(worst < 1e-10, format!("max sup deviation over 100 draws {worst:.2e}"))
}

fn c4_littlewood_paley() -> Outcome {
    let grid = Arc::new(SpectralGrid::uniform(1, 256, 8.0, 0.0, 1.0, 2).unwrap());
    let part = DyadicPartition::new(grid.clone()).unwrap();
    let mut tele: f64 = 0.0;
    for (lo, hi) in [(1, part.j_max), (2, 4), (part.j_min, part.j_max)] {
        let direct: Vec<f64> = grid
            .wave_norms()
            .iter()
            .map(|r| (lo..=hi).map(|j| phi_profile(2f64.powi(-j) * r)).sum())
            .collect();
        let closed = part.telescoped_sum(lo, hi);
        tele = tele.max(direct.iter().zip(&closed).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    let sampler = FieldSampler {
        harmonics: 0,
        j_lo: -2,
        j_hi: part.j_max,
        mean_zero: false,
        ..FieldSampler::default()
    };
    let mut overlap: f64 = 0.0;
    for i in part.j_min..=part.j_max {
        for j in part.j_min..=part.j_max {
            if (i - j).abs() >= 2 {
                let (a, b) = (part.block_multiplier(i), part.block_multiplier(j));
                overlap = overlap.max(a.iter().zip(&b).map(|(x, y)| (x * y).abs()).fold(0.0, f64::max));
            }
        }
    }
    let mut recon: f64 = 0.0;
    let mut cross: f64 = 0.0;
    for s in 0..10 {
        let f = sampler.sample_field(&grid, s).unwrap().slice(0);
        let mut sum = s0_project(&part, &f).unwrap();
        for j in 1..=part.j_max {
            sum = sum.add(&delta_j(&part, j, &f).unwrap()).unwrap();
        }
        recon = recon.max(sum.max_distance(&f));
        for i in part.j_min..=part.j_max {
            for j in part.j_min..=part.j_max {
                if (i - j).abs() >= 2 {
                    let v = delta_j(&part, i, &delta_j(&part, j, &f).unwrap()).unwrap();
                    cross = cross.max(v.sup_norm() / f.sup_norm());
                }
            }
        }
    }
    outcome(
        tele < 1e-10 && recon < 1e-8 && overlap == 0.0 && cross < 1e-13,
        format!(
            "telescoping {tele:.2e}, reconstruction {recon:.2e}, |i-j|>=2: multiplier overlap {overlap:e}, relative |Δ_iΔ_j f| {cross:.1e}"
        ),
    )
}

fn c5_block_decay() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (g1, g2) in [(1.0, 1.0), (1.0, 2.0), (0.5, 1.0), (1.5, 1.0)] {
        let r = run("kernel-decay", &[("gamma1", g1), ("gamma2", g2)], &Harness::with_seed(0));
        let growth = r.value_of("block_growth_slope").unwrap();
        let c = r.value_of("block_decay_c").unwrap();
        let slopes_ok = r.checks.iter().filter(|c| c.name.starts_with("time slope")).all(|c| c.passed);
        pass &= growth <= 1.1 * g1 * std::f64::consts::LN_2 && c > 0.0 && slopes_ok;
        parts.push(format!("({g1},{g2}): growth {growth:.3} c {c:.3}"));
    }
    outcome(pass, parts.join(", "))
}

fn c6_tail_slopes() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for g1 in [0.5, 1.0, 1.5] {
        let r = run("kernel-decay", &[("gamma1", g1), ("gamma2", 1.0)], &Harness::with_seed(0));
        let s1 = r.value_of("grad_tail_slope").unwrap_or(f64::NAN);
        let s2 = r.value_of("grad2_tail_slope").unwrap_or(f64::NAN);
        let e1 = g1 + 2.0;
        let e2 = g1 + 3.0;
        pass &= (s1 + e1).abs() <= 0.1 * e1 && (s2 + e2).abs() <= 0.1 * e2 && r.passed();
        parts.push(format!("gamma1={g1}: {s1:.3}/{:.1}, {s2:.3}/{:.1}", -e1, -e2));
    }
    let r = run("kernel-decay", &[("gamma1", 2.0), ("gamma2", 2.0)], &Harness::with_seed(0));
    pass &= r.passed();
    parts.push(format!(
        "heat (2,2) bound slopes {:.1}, {:.1}",
        r.value_of("grad_tail_slope").unwrap_or(f64::NAN),
        r.value_of("grad2_tail_slope").unwrap_or(f64::NAN)
    ));
    let r0 = run("kernel-decay", &[("gamma1", 0.0), ("gamma2", 1.0)], &Harness::with_seed(0));
    pass &= r0.checks.iter().any(|c| c.name.starts_with("Poisson") && c.passed);
    parts.push(format!(
        "Poisson baseline oracle ok, slope {:.3}",
        r0.value_of("grad_tail_slope").unwrap_or(f64::NAN)
    ));
    outcome(pass, parts.join("; "))
}

fn c7_lp_boundedness() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for q in [2.0, 3.0] {
        for outer in [0.0, 1.0] {
            let t = Instant::now();
            let r = run("lp-main", &[("q", q), ("outer", outer)], &Harness::with_seed(11));
            let secs = t.elapsed().as_secs_f64();
            let worst = r.stability.iter().map(|s| s.delta).fold(0.0, f64::max);
            let count = r.samples.iter().filter(|s| s.group == format!("coarse p={q}")).count();
            pass &= r.passed() && secs < 600.0 && count >= 100;
            parts.push(format!("q={q} outer={outer}: drift {worst:.3} ({secs:.0}s)"));
        }
    }
    outcome(pass, parts.join(", "))
}

fn c8_sharp_maximal() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for q in [2.0, 3.0] {
        let r = run("sharp-maximal", &[("q", q)], &Harness::with_seed(5));
        let drift = r.stability.first().map_or(f64::NAN, |s| s.delta);
        pass &= r.passed();
        parts.push(format!("q={q}: max {:.3}, drift {drift:.3}", r.value_of("max_ratio").unwrap()));
    }
    outcome(pass, parts.join(", "))
}

fn c9_fefferman_stein() -> Outcome {
    let r = run("fefferman-stein", &[], &Harness::with_seed(9));
    let random: Vec<_> = r.samples.iter().filter(|s| s.group.starts_with("random")).collect();
    let holds = random.iter().all(|s| s.lhs <= s.rhs);
    outcome(
        r.passed() && holds && random.len() == 300,
        format!(
            "{} of {} (field, p) pairs hold; N0 = {}, N1 = {}",
            random.iter().filter(|s| s.lhs <= s.rhs).count(),
            random.len(),
            r.value_of("N0").unwrap(),
            r.value_of("N1").unwrap()
        ),
    )
}

fn c10_hardy_littlewood() -> Outcome {
    let r = run("hardy-littlewood", &[], &Harness::with_seed(4));
    let ind = r
        .checks
        .iter()
        .filter(|c| c.name.starts_with("indicator"))
        .map(|c| c.value)
        .fold(0.0, f64::max);
    let drift = r.stability.iter().map(|s| s.delta).fold(0.0, f64::max);
    outcome(r.passed(), format!("indicator relative error {ind:.2e}, max drift {drift:.3}"))
}

fn c11_khintchine() -> Outcome {
    let b = RademacherBatch::exhaustive(2).unwrap();
    let exact = khintchine_moment(&[1.0, 1.0], 4.0, &b).unwrap().mean;
    let r = run("khintchine", &[], &Harness::with_seed(13));
    outcome(
        exact == 8.0 && r.passed(),
        format!("a=(1,1), p=4 gives {exact}; Monte Carlo checks {}", if r.passed() { "hold" } else { "fail" }),
    )
}

fn c12_embedding() -> Outcome {
    let r = run("embedding", &[], &Harness::with_seed(21));
    let drift = r.stability.iter().map(|s| s.delta).fold(0.0, f64::max);
    let parseval = r
        .checks
        .iter()
        .filter(|c| c.name.starts_with("Parseval"))
        .map(|c| c.value)
        .fold(0.0, f64::max);
    let detail = format!("max drift {drift:.3}, Parseval relative error {parseval:.2e}");
    if r.passed() {
        outcome(true, detail)
    } else {
        outcome(false, format!("{detail}; {}", failed_checks(&r)))
    }
}

fn c13_generator() -> Outcome {
    let r = run("corollaries", &[], &Harness::with_seed(2));
    let orders: Vec<f64> = r
        .checks
        .iter()
        .filter(|c| c.name.contains("observed order"))
        .map(|c| c.value)
        .collect();
    let min = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    outcome(
        !orders.is_empty() && min >= 1.8 && r.passed(),
        format!("minimum observed order {min:.3}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("Plancherel constant", c1_plancherel),
        ("heat and Cauchy golden kernels", c2_golden_kernels),
        ("evolution property", c3_evolution_property),
        ("Littlewood-Paley decomposition", c4_littlewood_paley),
        ("dyadic block decay", c5_block_decay),
        ("kernel tail slopes", c6_tail_slopes),
        ("square function boundedness", c7_lp_boundedness),
        ("sharp versus maximal domination", c8_sharp_maximal),
        ("Fefferman-Stein explicit constant", c9_fefferman_stein),
        ("Hardy-Littlewood", c10_hardy_littlewood),
        ("Khintchine", c11_khintchine),
        ("Besov/Sobolev embedding", c12_embedding),
        ("generator identities", c13_generator),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        if !o.pass {
            failures += 1;
        }
        println!(
            "{} {:>2} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
