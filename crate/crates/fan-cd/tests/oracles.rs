use fan_cd::flag::{cd_index_of, flag_h, varset, CdPolynomial};
use fan_cd::lefschetz::{cd_index_lefschetz, split_mod_xl, NodeModule, RunParams};
use fan_cd::pairing::pairing_on_sections;
use fan_cd::poset::{build_named, Family, GradedPoset};
use fan_cd::sheaf::{FanData, SectionModule};

fn fan(f: Family, k: usize) -> GradedPoset {
    build_named(f, k).unwrap()
}

fn golden() -> Vec<(GradedPoset, CdPolynomial)> {
    let mut v = vec![(fan(Family::SimplexFan, 1), CdPolynomial::from_terms(1, &[("c", 1)]))];
    for m in 3..=8 {
        v.push((fan(Family::PolygonFan, m), CdPolynomial::from_terms(2, &[("cc", 1), ("d", m as i64 - 2)])));
    }
    v.push((fan(Family::SimplexFan, 3), CdPolynomial::from_terms(3, &[("ccc", 1), ("cd", 2), ("dc", 2)])));
    v.push((fan(Family::CubeFan, 3), CdPolynomial::from_terms(3, &[("ccc", 1), ("cd", 4), ("dc", 6)])));
    v.push((fan(Family::CrosspolyFan, 3), CdPolynomial::from_terms(3, &[("ccc", 1), ("cd", 6), ("dc", 4)])));
    v.push((
        fan(Family::SimplexFan, 4),
        CdPolynomial::from_terms(4, &[("cccc", 1), ("ccd", 3), ("cdc", 5), ("dcc", 3), ("dd", 4)]),
    ));
    v.push((
        fan(Family::CubeFan, 4),
        CdPolynomial::from_terms(4, &[("cccc", 1), ("ccd", 6), ("cdc", 16), ("dcc", 14), ("dd", 20)]),
    ));
    v.push((
        fan(Family::CrosspolyFan, 4),
        CdPolynomial::from_terms(4, &[("cccc", 1), ("ccd", 14), ("cdc", 16), ("dcc", 6), ("dd", 20)]),
    ));
    v
}

#[test]
fn flag_path_golden_values() {
    for (p, expected) in golden() {
        assert_eq!(cd_index_of(&p).unwrap(), expected, "{}", p.name());
    }
}

#[test]
fn lefschetz_path_golden_values() {
    for (p, expected) in golden() {
        let out = cd_index_lefschetz(&p, &RunParams { seed: 7, ..RunParams::default() }).unwrap();
        assert_eq!(out.cd, expected, "{}", p.name());
    }
}

fn check_h(p: &GradedPoset, table: &[(&[usize], i64)]) {
    let h = flag_h(p).unwrap();
    for (s, v) in table {
        assert_eq!(h.get(varset(s)), *v, "{} {:?}", p.name(), s);
    }
    assert_eq!(h.get(0), 1);
}

#[test]
fn flag_h_tables() {
    check_h(
        &fan(Family::CubeFan, 3),
        &[(&[1], 7), (&[2], 11), (&[3], 5), (&[1, 2], 5), (&[1, 3], 11), (&[2, 3], 7), (&[1, 2, 3], 1)],
    );
    check_h(
        &fan(Family::SimplexFan, 3),
        &[(&[1], 3), (&[2], 5), (&[3], 3), (&[1, 2], 3), (&[1, 3], 5), (&[2, 3], 3), (&[1, 2, 3], 1)],
    );
    check_h(
        &fan(Family::CrosspolyFan, 3),
        &[(&[1], 5), (&[2], 11), (&[3], 7), (&[1, 2], 7), (&[1, 3], 11), (&[2, 3], 5), (&[1, 2, 3], 1)],
    );
    check_h(
        &fan(Family::SimplexFan, 4),
        &[
            (&[1], 4),
            (&[2], 9),
            (&[3], 9),
            (&[4], 4),
            (&[1, 2], 6),
            (&[1, 3], 16),
            (&[1, 4], 11),
            (&[2, 3], 11),
            (&[2, 4], 16),
            (&[3, 4], 6),
            (&[1, 2, 3], 4),
            (&[1, 2, 4], 9),
            (&[1, 3, 4], 9),
            (&[2, 3, 4], 4),
            (&[1, 2, 3, 4], 1),
        ],
    );
    check_h(
        &fan(Family::CubeFan, 4),
        &[
            (&[1], 15),
            (&[2], 31),
            (&[3], 23),
            (&[4], 7),
            (&[1, 2], 17),
            (&[1, 3], 57),
            (&[1, 4], 41),
            (&[2, 3], 41),
            (&[2, 4], 57),
            (&[3, 4], 17),
            (&[1, 2, 3], 7),
            (&[1, 2, 4], 23),
            (&[1, 3, 4], 31),
            (&[2, 3, 4], 15),
            (&[1, 2, 3, 4], 1),
        ],
    );
}

#[test]
fn cube3_splits_into_24_plus_24() {
    let fd = FanData::new(fan(Family::CubeFan, 3)).unwrap();
    let sm = SectionModule::compute(&fd).unwrap();
    let form = pairing_on_sections(&sm).unwrap();
    let node = NodeModule::root(form, None);
    let sp = split_mod_xl(&node);
    assert_eq!(sp.g0.len(), 24);
    assert_eq!(sp.g1.len(), 24);
}

#[test]
fn cube3_has_27_cones() {
    assert_eq!(fan(Family::CubeFan, 3).len(), 27);
}
