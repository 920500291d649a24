use std::sync::Arc;

use proptest::prelude::*;

use nterm::asymptotics::{empirical_ratio, AsymptoticProfile};
use nterm::lattice::{multiplicity, nth_smallest_weight, Mixed, OrbitStream};
use nterm::oracle::{best_n_term_error, sample_ball, BallSample};
use nterm::{
    sigma_exact, DiagonalSpec, Exponent, Geometric, LatticeSource, PowerLog, Regime, Scaled, SequenceSource,
    WeightFamily,
};

fn e(v: f64) -> Exponent {
    if v.is_infinite() {
        Exponent::INFINITY
    } else {
        Exponent::new(v).unwrap()
    }
}

fn source() -> impl Strategy<Value = Arc<dyn SequenceSource>> {
    prop_oneof![
        (0.05f64..0.95, 0.1f64..10.0).prop_map(|(r, c)| Arc::new(Geometric::new(r, c).unwrap()) as Arc<dyn SequenceSource>),
        (0.3f64..3.0, 0.0f64..2.0, 0.1f64..10.0)
            .prop_map(|(s, b, c)| Arc::new(PowerLog::new(s, b, c).unwrap()) as Arc<dyn SequenceSource>),
        (0.5f64..2.0, prop_oneof![Just(2.0), Just(f64::INFINITY)], 1usize..=3).prop_map(|(s, r, d)| {
            Arc::new(LatticeSource::new(Arc::new(Mixed::new(s, e(r), d).unwrap()))) as Arc<dyn SequenceSource>
        }),
    ]
}

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.5), Just(1.0), Just(1.5), Just(2.0), Just(3.0), Just(f64::INFINITY)]
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn prefix_sums_differ_by_one_term(src in source(), m in 1u64..3000, ex in prop_oneof![Just(-2.0), Just(-0.5), Just(1.0), Just(2.5)]) {
        let (Ok(hi), Ok(lo)) = (src.prefix_pow_sum(m + 1, ex), src.prefix_pow_sum(m, ex)) else {
            return Ok(());
        };
        let diff = hi - lo;
        let term = src.term_at(m + 1).powf(ex);
        // the difference of two sums carries their rounding, relative to the larger sum
        let scale = hi.max(term);
        prop_assert!((diff - term).abs() <= 1e-12 * scale, "{diff} vs {term}");
    }

    #[test]
    fn terms_never_increase(src in source(), start in 1u64..100_000) {
        let mut prev = src.term_at(start);
        for n in start + 1..start + 200 {
            let t = src.term_at(n);
            prop_assert!(prev >= t - 1e-15 * prev);
            prev = t;
        }
    }

    #[test]
    fn tail_enclosures_nest(src in source(), n in 0u64..500, gap in 1u64..500) {
        let ex = 3.0;
        prop_assume!(src.tail_converges(ex) == Some(true));
        let a = src.tail_pow_sum(n, ex, 1e-9).unwrap();
        let b = src.tail_pow_sum(n + gap, ex, 1e-9).unwrap();
        prop_assert!(b.lo >= 0.0 && b.hi <= a.hi && b.lo <= a.hi);
    }

    #[test]
    fn scaling_multiplies_sums(src in source(), c in 0.01f64..100.0, m in 1u64..2000) {
        let scaled = Scaled::new(src.clone(), c).unwrap();
        let ex = 2.5;
        let (Ok(base), Ok(sc)) = (src.prefix_pow_sum(m, ex), scaled.prefix_pow_sum(m, ex)) else {
            return Ok(());
        };
        prop_assert!(rel(sc, c.powf(ex) * base) <= 1e-12, "{sc} vs {}", c.powf(ex) * base);
        if src.tail_converges(ex) == Some(true) {
            let t = src.tail_pow_sum(m, ex, 1e-9).unwrap();
            let ts = scaled.tail_pow_sum(m, ex, 1e-9).unwrap();
            // subnormal results carry no relative precision
            prop_assume!(t.lo > 1e-290 && ts.lo > 1e-290);
            prop_assert!(rel(ts.lo, c.powf(ex) * t.lo) <= 1e-12 && rel(ts.hi, c.powf(ex) * t.hi) <= 1e-12);
        }
    }

    #[test]
    fn widths_decrease_and_scale(src in source(), p in exponent(), q in exponent(), n in 0u64..300, c in 0.05f64..20.0) {
        let spec = DiagonalSpec::new(e(p), e(q), src.clone());
        let (Ok(a), Ok(b)) = (sigma_exact(&spec, n, 1e-10), sigma_exact(&spec, n + 1, 1e-10)) else {
            return Ok(());
        };
        prop_assert!(b.value.lo <= a.value.hi * (1.0 + 1e-12));
        let scaled = DiagonalSpec::new(e(p), e(q), Arc::new(Scaled::new(src, c).unwrap()));
        let s = sigma_exact(&scaled, n, 1e-10).unwrap();
        prop_assume!(a.value.lo > 1e-290 && s.value.lo > 1e-290);
        prop_assert!(rel(s.mid(), c * a.mid()) <= 1e-12, "{} vs {}", s.mid(), c * a.mid());
    }

    #[test]
    fn limit_regimes_are_exact(src in source(), p in exponent(), n in 0u64..1000) {
        let inf = Exponent::INFINITY;
        let v = sigma_exact(&DiagonalSpec::new(inf, inf, src.clone()), n, 1e-10).unwrap();
        prop_assert_eq!(v.value.lo, src.term_at(n + 1));
        prop_assert_eq!(v.value.hi, src.term_at(n + 1));
        prop_assume!(p.is_finite());
        let spec = DiagonalSpec::new(e(p), inf, src.clone());
        prop_assert_eq!(spec.regime(), Regime::III);
        let v = sigma_exact(&spec, n, 1e-10).unwrap();
        prop_assert_eq!(v.value.lo, v.value.hi);
        if let Ok(sum) = src.prefix_pow_sum(n + 1, -p) {
            prop_assert_eq!(v.mid(), sum.powf(-1.0 / p));
        }
    }

    #[test]
    fn samples_never_beat_the_infinite_width(ratio in 0.1f64..0.9, p in exponent(), q in exponent(), len in 2usize..14, n in 0usize..10, seed in any::<u64>()) {
        prop_assume!(n < len);
        let g = Arc::new(Geometric::new(ratio, 1.0).unwrap());
        let spec = DiagonalSpec::new(e(p), e(q), g.clone());
        let w = sigma_exact(&spec, n as u64, 1e-10).unwrap();
        let lam: Vec<f64> = (1..=len as u64).map(|k| g.term_at(k)).collect();
        for s in sample_ball(len, e(p), 500, seed).unwrap() {
            prop_assert!(best_n_term_error(&lam, &s, n, e(q)).unwrap() <= w.value.hi + 1e-12);
        }
    }

    #[test]
    fn errors_ignore_joint_permutations(xs in prop::collection::vec((0.01f64..5.0, -1.0f64..1.0), 1..12), n in 0usize..12, q in exponent(), seed in any::<u64>()) {
        let (lam, xi): (Vec<f64>, Vec<f64>) = xs.iter().copied().unzip();
        let mut order: Vec<usize> = (0..lam.len()).collect();
        let mut state = seed;
        for i in (1..order.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (state >> 33) as usize % (i + 1));
        }
        let plam: Vec<f64> = order.iter().map(|&i| lam[i]).collect();
        let pxi: Vec<f64> = order.iter().map(|&i| xi[i]).collect();
        let a = best_n_term_error(&lam, &BallSample { p: e(2.0), xi }, n, e(q)).unwrap();
        let b = best_n_term_error(&plam, &BallSample { p: e(2.0), xi: pxi }, n, e(q)).unwrap();
        prop_assert!((a - b).abs() <= 1e-14 * a.max(1e-300));
    }

    #[test]
    fn counts_are_monotone_and_dual(s in 0.5f64..2.0, r in prop_oneof![Just(1.0), Just(2.0), Just(f64::INFINITY)], d in 1usize..=3, n in 1u64..3000) {
        let fam: Arc<dyn WeightFamily> = Arc::new(Mixed::new(s, e(r), d).unwrap());
        let w = nth_smallest_weight(fam.clone(), n).unwrap();
        let at = fam.count_leq(w).unwrap();
        prop_assert!(at >= n);
        prop_assert!(fam.count_leq(w * 0.999).unwrap() <= at);
        prop_assert!(fam.count_leq(w * 1.5).unwrap() >= at);
    }

    #[test]
    fn mixed_weights_ignore_coordinate_order(s in 0.3f64..3.0, r in prop_oneof![Just(0.5), Just(2.0), Just(f64::INFINITY)], k in prop::collection::vec(-40i64..40, 1..6)) {
        let fam = Mixed::new(s, e(r), k.len()).unwrap();
        let mut rev = k.clone();
        rev.reverse();
        let mut neg: Vec<i64> = k.iter().map(|x| -x).collect();
        neg.rotate_left(1);
        let w = fam.weight(&k).unwrap();
        prop_assert_eq!(w, fam.weight(&rev).unwrap());
        prop_assert_eq!(w, fam.weight(&neg).unwrap());
    }
}

#[test]
fn orbits_with_full_support_have_all_sign_patterns() {
    for d in 1..=4 {
        let fam: Arc<dyn WeightFamily> = Arc::new(Mixed::new(1.0, e(2.0), d).unwrap());
        for orbit in OrbitStream::new(fam).take(5000) {
            if orbit.point.iter().all(|&x| x != 0) {
                assert_eq!(orbit.multiplicity % (1 << d), 0);
            }
            assert_eq!(orbit.multiplicity, multiplicity(&orbit.point));
        }
    }
}

#[test]
fn lattice_terms_invert_weights() {
    for (s, r, d) in [(1.0, f64::INFINITY, 2), (2.0, 2.0, 3), (0.7, 1.0, 1)] {
        let fam: Arc<dyn WeightFamily> = Arc::new(Mixed::new(s, e(r), d).unwrap());
        let src = LatticeSource::new(fam.clone());
        for n in [1u64, 5, 77, 1234, 20_000] {
            let w = nth_smallest_weight(fam.clone(), n).unwrap();
            let t = src.term_at(n);
            // one rounding in 1/w
            assert!((t * w - 1.0).abs() <= f64::EPSILON, "{n}: {t} * {w}");
        }
    }
}

#[test]
fn model_sequences_reach_their_constant() {
    let grid = [1_000u64, 10_000, 100_000];
    for s in [0.5, 1.0, 2.0] {
        for beta in [0.0, 1.0] {
            for (p, q) in [(2.0, 2.0), (1.0, 2.0)] {
                let src: Arc<dyn SequenceSource> = Arc::new(PowerLog::new(s, beta, 1.0).unwrap());
                let spec = DiagonalSpec::new(e(p), e(q), src);
                let profile = AsymptoticProfile::new(s, beta, 1.0).unwrap().with_log_offset(1.0);
                let diag = empirical_ratio(&spec, &profile, &grid).unwrap();
                let last = diag.rows.last().unwrap();
                assert!(last.gap <= 0.05, "s={s} beta={beta} p={p} q={q}: {:?}", diag.rows);
            }
        }
    }
}
