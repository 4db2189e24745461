use fan_cd::field::{Field, Fp, Rational};
use fan_cd::flag::{cd_index_from_flag_h, cd_words, CdPolynomial, FlagVector};
use fan_cd::lefschetz::transversal::{is_transverse, random_instance, torus_transverse_witness, TransversalMode};
use fan_cd::lefschetz::{cd_index_lefschetz, RunParams};
use fan_cd::linalg::{Echelon, Mat};
use fan_cd::poset::{build_named, Family, GradedPoset};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn int_matrix(max: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    (1..=max, 1..=max).prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(-9i64..=9, c), r))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cd_extraction_inverts_phi(n in 1usize..=5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cd = CdPolynomial::new(n);
        for w in cd_words(n) {
            let c = if w.chars().all(|ch| ch == 'c') { 1 } else { rand::Rng::gen_range(&mut rng, 0..20) };
            cd.add_term(&w, c);
        }
        let poly = cd.to_poly(1);
        let entries = poly.coeffs.iter().map(|(&s, c)| (s, c.to_integer().try_into().unwrap())).collect();
        let h = FlagVector { n, entries };
        prop_assert!(h.is_self_dual());
        prop_assert_eq!(cd_index_from_flag_h(&h).unwrap(), cd);
    }

    #[test]
    fn rank_nullity(rows in int_matrix(6)) {
        let cols = rows[0].len();
        let m = Mat::<Rational>::from_i64_rows(&rows);
        let k = m.kernel();
        prop_assert_eq!(m.rank() + k.len(), cols);
        for v in &k {
            prop_assert!(m.mul_vec(v).iter().all(|x| x.is_zero()));
        }
        let mut ech = Echelon::<Rational>::new(cols);
        for r in &rows {
            ech.insert(&r.iter().map(|&x| Rational::from_i64(x)).collect::<Vec<_>>());
        }
        prop_assert_eq!(ech.dim(), m.rank());
        prop_assert_eq!(Mat::<Fp>::from_i64_rows(&rows).rank(), m.rank());
    }

    #[test]
    fn inverse_round_trip(rows in (1usize..=5).prop_flat_map(|n| prop::collection::vec(prop::collection::vec(-9i64..=9, n), n))) {
        let m = Mat::<Rational>::from_i64_rows(&rows);
        match m.inverse() {
            Some(inv) => prop_assert_eq!(m.mul(&inv), Mat::identity(rows.len())),
            None => prop_assert!(m.rank() < rows.len()),
        }
    }

    #[test]
    fn returned_witnesses_pass_the_rank_check(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 10);
        prop_assert!(inst.check(TransversalMode::PerCoordinate).is_ok());
        let w = torus_transverse_witness(&inst, TransversalMode::PerCoordinate, &mut rng, 1 << 16, 4).unwrap();
        if let Some(t) = &w.weights {
            prop_assert!(is_transverse(&inst, t));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn polygons_for_any_seed(m in 3usize..=8, seed in any::<u64>(), mode in prop::sample::select(vec!["generic", "multiplication", "torus"])) {
        let p = build_named(Family::PolygonFan, m).unwrap();
        let out = cd_index_lefschetz(&p, &RunParams { seed, mode: mode.into(), ..RunParams::default() }).unwrap();
        prop_assert_eq!(out.cd, CdPolynomial::from_terms(2, &[("cc", 1), ("d", m as i64 - 2)]));
        prop_assert!(out.certificate.hilbert_matches);
    }

    #[test]
    fn simplex3_any_seed(seed in any::<u64>()) {
        let p = build_named(Family::SimplexFan, 3).unwrap();
        let out = cd_index_lefschetz(&p, &RunParams { seed, ..RunParams::default() }).unwrap();
        prop_assert_eq!(out.cd, CdPolynomial::from_terms(3, &[("ccc", 1), ("cd", 2), ("dc", 2)]));
    }

    #[test]
    fn poset_json_round_trip(k in 1usize..=3, fam in prop::sample::select(vec![Family::SimplexFan, Family::CubeFan, Family::CrosspolyFan])) {
        let p = build_named(fam, k).unwrap();
        let q = GradedPoset::from_json(&p.to_json()).unwrap();
        prop_assert_eq!(q.to_json(), p.to_json());
    }
}
