use genquorum_core::bqs::{verify_availability, verify_consistency};
use genquorum_core::*;

/// All minimal satisfying sets by scanning every subset.
fn brute_minimal(mbf: &Mbf) -> Vec<PartySet> {
    let n = mbf.universe().len();
    let mut out: Vec<PartySet> = (0..1u128 << n)
        .map(PartySet::from_bits)
        .filter(|&s| mbf.eval(s) && s.iter().all(|p| !mbf.eval(s.without(p))))
        .collect();
    out.sort();
    out
}

#[test]
fn two_layer_k4_minimal_quorums_match_exhaustive_scan() {
    let mbf = Mbf::new(&layered_2l1c(4)).unwrap();
    let q = enumerate_minimal_quorums(&mbf, 24).unwrap();
    let brute = brute_minimal(&mbf);
    assert_eq!(q.quorums(), brute.as_slice());
    assert_eq!(q.len(), 216);
    let mut sizes = [0usize; 17];
    for s in q.quorums() {
        sizes[s.len()] += 1;
    }
    assert_eq!((sizes[7], sizes[8], sizes[9]), (36, 144, 36));
}

#[test]
fn two_layer_k4_threshold_expansion_has_792_terms() {
    // every threshold picks exactly k operands: C(4,3) * C(4,2)^3 = 864
    // choices, of which 792 unions are distinct
    let mbf = Mbf::new(&layered_2l1c(4)).unwrap();
    let terms = expand_quorums(&mbf, 24).unwrap();
    assert_eq!(terms.len(), 792);
    assert!(terms.iter().all(|&t| mbf.eval(t)));
}

#[test]
fn two_layer_counts_for_small_k() {
    let expected = [(1, 3, 3), (2, 28, 10), (3, 154, 26), (5, 5400, 810)];
    for (k, expansion, minimal) in expected {
        let mbf = Mbf::new(&layered_2l1c(k)).unwrap();
        assert_eq!(expand_quorums(&mbf, 64).unwrap().len(), expansion, "k={k}");
        assert_eq!(enumerate_minimal_quorums(&mbf, 64).unwrap().len(), minimal, "k={k}");
    }
}

#[test]
fn two_layer_satisfies_q3_for_k_4_to_10() {
    for k in 4..=10 {
        let mbf = Mbf::new(&layered_2l1c(k)).unwrap();
        assert!(canonical_q3_holds(&mbf), "k={k}");
    }
}

#[test]
fn two_layer_is_a_bqs_against_its_canonical_fail_prone_system() {
    for k in 4..=5 {
        let mbf = Mbf::new(&layered_2l1c(k)).unwrap();
        let q = enumerate_minimal_quorums(&mbf, 64).unwrap();
        let fp = CanonicalFailProne::new(&mbf, &q);
        assert_eq!(verify_bqs(&q, &fp), Ok(()), "k={k}");
        let explicit = FailProneSystem::canonical_of(&q);
        assert!(explicit.q3_holds());
    }
}

#[test]
fn threshold_bqs_for_n_3f_plus_1() {
    for f in 1..=5 {
        let u = Universe::numbered("r", 3 * f + 1).unwrap();
        let fp = FailProneSystem::threshold(u, f).unwrap();
        assert!(fp.q3_holds());
        let q = canonical_bqs(&fp).unwrap();
        assert!(q.quorums().iter().all(|s| s.len() == 2 * f + 1));
        assert_eq!(verify_bqs(&q, &fp), Ok(()), "f={f}");
    }
}

#[test]
fn threshold_bqs_needs_more_than_3f_parties() {
    for f in 1..=4 {
        let u = Universe::numbered("r", 3 * f).unwrap();
        let fp = FailProneSystem::threshold(u, f).unwrap();
        assert!(!fp.q3_holds());
    }
}

#[test]
fn mgrid_quorums_match_formula() {
    let layout = GridLayout::new(3, 2).unwrap();
    let g = mgrid(layout).unwrap();
    let mbf = Mbf::new(&g.formula).unwrap();
    let mut from_formula = enumerate_minimal_quorums(&mbf, 24).unwrap().quorums().to_vec();
    // the formula lists parties row by row, as does the layout
    assert_eq!(mbf.universe(), &layout.universe());
    let mut direct = layout.quorums();
    from_formula.sort();
    direct.sort();
    assert_eq!(from_formula, direct);
}

#[test]
fn mgrid_intersections() {
    let layout = GridLayout::new(5, 4).unwrap();
    let quorums = layout.quorums();
    assert_eq!(quorums.len(), 100);
    let (s, k) = (layout.s(), layout.k());
    let mut pairs = 0;
    for &q1 in &quorums {
        for &q2 in &quorums {
            let meet = q1.intersection(q2).len();
            let shares_line = (0..k).any(|i| {
                let row = layout.row_set(i);
                let col = layout.col_set(i);
                (row.is_subset(q1) && row.is_subset(q2)) || (col.is_subset(q1) && col.is_subset(q2))
            });
            if shares_line {
                assert!(meet >= k);
            } else {
                assert!(meet >= 2 * s * s);
            }
            assert!(meet > layout.b());
            pairs += 1;
        }
    }
    assert_eq!(pairs, 10_000);
}

#[test]
fn mgrid_consistency_holds_for_any_b_parties() {
    for (k, b) in [(2, 0), (3, 1), (3, 2), (4, 3), (5, 4)] {
        let layout = GridLayout::new(k, b).unwrap();
        let q = QuorumSystem::new(layout.universe(), layout.quorums()).unwrap();
        let fp = AnySubset::new(layout.universe(), b);
        assert_eq!(verify_consistency(&q, &fp), Ok(()), "k={k} b={b}");
    }
}

#[test]
fn mgrid_availability_depends_on_b() {
    // b faulty parties on distinct rows and columns leave k - b clean lines
    // each way, so a quorum avoids them only while k - b >= s
    for (k, b) in [(3, 1), (4, 2), (5, 3), (5, 4)] {
        let layout = GridLayout::new(k, b).unwrap();
        let q = QuorumSystem::new(layout.universe(), layout.quorums()).unwrap();
        let fp = AnySubset::new(layout.universe(), b);
        let available = verify_availability(&q, &fp).is_ok();
        assert_eq!(available, k - b >= layout.s(), "k={k} b={b}");
    }
}

#[test]
fn attribute_predicate_matches_msp_on_random_subsets() {
    use rand::{Rng, SeedableRng};
    let (sys, f) = os_location();
    let msp = attribute_msp(&sys, &f).unwrap();
    assert_eq!(msp.universe(), sys.universe());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut accepted = 0;
    for _ in 0..10_000 {
        // bias towards large sets so both verdicts occur
        let bits: u128 = (0..16).filter(|_| rng.gen_bool(0.8)).map(|i| 1u128 << i).sum();
        let set = PartySet::from_bits(bits);
        // three locations with three parties each, and likewise for systems
        let loc_ok = (0..4)
            .filter(|l| (0..4).filter(|o| set.contains(l * 4 + o)).count() >= 3)
            .count()
            >= 3;
        let os_ok = (0..4)
            .filter(|o| (0..4).filter(|l| set.contains(l * 4 + o)).count() >= 3)
            .count()
            >= 3;
        let direct = loc_ok && os_ok;
        assert_eq!(msp.accepts(set).accepted, direct);
        assert_eq!(sys.satisfies(&f, set).unwrap(), direct);
        accepted += direct as usize;
    }
    assert!(accepted > 100 && accepted < 9_900, "{accepted}");
}
