use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use lpevo::evolution::apply_evolution;
use lpevo::grid::Domain;
use lpevo::lp_decomp::DyadicPartition;
use lpevo::maximal_sharp::spatial_maximal_slice;
use lpevo::verify::{Check, Comparison, FieldSampler, StabilityRecord, VerificationReport};
use lpevo::{SpatialField, SpectralGrid, SymbolSpec, TimeModulation};

fn grid(n: usize, l: f64) -> Arc<SpectralGrid> {
    Arc::new(SpectralGrid::uniform(1, n, l, 0.0, 1.0, 2).unwrap())
}

fn field(g: &Arc<SpectralGrid>, seed: u64) -> SpatialField {
    let sampler = FieldSampler {
        seed,
        harmonics: 0,
        j_hi: 2,
        ..FieldSampler::default()
    };
    sampler.sample_field(g, 0).unwrap().slice(0)
}

fn shifted(f: &SpatialField, by: usize) -> SpatialField {
    let n = f.grid().points();
    let v: Vec<Complex64> = (0..n).map(|j| f.values()[(j + n - by) % n]).collect();
    SpatialField::from_values(f.grid().clone(), 1, Domain::Physical, v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn evolution_composes(
        a in -1.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0,
        gamma in 0.3f64..2.5, amp in 0.0f64..0.9, seed in 0u64..1000,
    ) {
        let g = grid(64, 4.0);
        let spec = SymbolSpec::power(1.0, gamma, TimeModulation::Oscillating { amplitude: amp, omega: 2.0 }, 4).unwrap();
        let (s, r, t) = (a, a + b, a + b + c);
        let f = field(&g, seed);
        let two = apply_evolution(&spec, r, t, &apply_evolution(&spec, s, r, &f).unwrap()).unwrap();
        let one = apply_evolution(&spec, s, t, &f).unwrap();
        prop_assert!(two.max_distance(&one) < 1e-10);
        // the identity at equal times
        prop_assert!(apply_evolution(&spec, s, s, &f).unwrap().max_distance(&f) < 1e-14);
    }

    #[test]
    fn partition_of_unity(n_pow in 5u32..11, l in 1.0f64..20.0) {
        let g = grid(1 << n_pow, l);
        let part = DyadicPartition::new(g.clone()).unwrap();
        let mut sum = part.s0_multiplier();
        for j in 1..=part.j_max {
            for (o, v) in sum.iter_mut().zip(part.block_multiplier(j)) {
                *o += v;
            }
        }
        let cap = 2f64.powi(part.j_max);
        for (r, s) in g.wave_norms().iter().zip(&sum) {
            if *r <= cap {
                prop_assert!((s - 1.0).abs() < 1e-12, "|xi| = {r}: {s}");
            }
            prop_assert!(*s <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn sampler_is_deterministic(seed in any::<u64>(), sample in 0u64..64) {
        let g = grid(32, 2.0);
        let s = FieldSampler { seed, ..FieldSampler::default() };
        let a = s.sample_field(&g, sample).unwrap();
        let b = s.clone().sample_field(&g, sample).unwrap();
        prop_assert_eq!(a.values(), b.values());
        let c = s.sample_field(&g, sample + 1).unwrap();
        prop_assert!(a.values() != c.values());
    }

    #[test]
    fn maximal_is_monotone_and_dominates(values in prop::collection::vec(0.0f64..1.0, 64), bumps in prop::collection::vec(0.0f64..1.0, 64)) {
        let g = grid(64, 4.0);
        let larger: Vec<f64> = values.iter().zip(&bumps).map(|(a, b)| a + b).collect();
        let m_small = spatial_maximal_slice(&g, &values, 0.0);
        let m_large = spatial_maximal_slice(&g, &larger, 0.0);
        for i in 0..64 {
            prop_assert!(m_small[i] <= m_large[i] + 1e-12);
            prop_assert!(m_small[i] >= values[i] - 1e-12);
        }
    }

    #[test]
    fn translation_covariance(seed in 0u64..1000, by in 0usize..64, gamma in 0.5f64..2.0) {
        let g = grid(64, 4.0);
        let f = field(&g, seed);
        let spec = SymbolSpec::fractional_heat(1.0, gamma).unwrap();
        let lhs = apply_evolution(&spec, 0.0, 0.5, &shifted(&f, by)).unwrap();
        let rhs = shifted(&apply_evolution(&spec, 0.0, 0.5, &f).unwrap(), by);
        prop_assert!(lhs.max_distance(&rhs) < 1e-12);

        let h: Vec<f64> = f.pointwise_norms();
        let hs: Vec<f64> = shifted(&f, by).pointwise_norms();
        let m = spatial_maximal_slice(&g, &h, 0.0);
        let ms = spatial_maximal_slice(&g, &hs, 0.0);
        for j in 0..64 {
            prop_assert!((ms[(j + by) % 64] - m[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn report_round_trips(
        values in prop::collection::vec(prop_oneof![-1e6f64..1e6, Just(f64::NAN)], 1..8),
        coarse in 0.1f64..10.0, fine in 0.1f64..10.0,
    ) {
        let mut r = VerificationReport::new("plancherel", serde_json::json!({"seed": 3}));
        for (i, v) in values.iter().enumerate() {
            r.value(&format!("v{i}"), *v);
            r.check(Check::new(&format!("c{i}"), *v, Comparison::LessThan, 1.0));
        }
        r.stability_check(StabilityRecord::new("drift", coarse, fine), 0.1);
        let r = r.finish();
        let text = r.to_json().unwrap();
        let back = VerificationReport::from_json(&text).unwrap();
        prop_assert_eq!(back.to_json().unwrap(), text);
        prop_assert_eq!(back.passed(), r.passed());
    }
}
