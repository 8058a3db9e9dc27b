//! Acceptance suite: every criterion pinned at its stated tolerance,
//! one pass line per criterion. Slow tiers (the huge-p full range and
//! the 10^6 means) are `#[ignore]`d; run them with
//! `cargo test --release --test acceptance -- --ignored`.

use num_bigint::{BigInt, BigUint};

use ptor::archimedean::{bs_window, range_mean, Place};
use ptor::cubic::{cubic_poly_disc, enumerate_cyclic_cubic};
use ptor::exec::ExecCfg;
use ptor::families::{
    huge_p_regulator_scan, reciprocal_search, scan_delta_max, scan_family, scan_vptor_extrema,
    FamilyParams, FamilyVariant, ScanCase, ScanOutput, SquarefreePolicy,
};
use ptor::harness::oracle::{oracle_verify, OracleClient};
use ptor::quadfield::{bound_check_h, discriminant_valid};
use ptor::torsion::{vptor, TorsionOpts};

fn opts() -> TorsionOpts {
    TorsionOpts::default()
}

fn cfg() -> ExecCfg {
    ExecCfg::default()
}

fn pass(criterion: &str, detail: &str) {
    println!("ACCEPTANCE {criterion}: PASS - {detail}");
}

/// The reference tables print C_p with 4 decimals, sometimes truncated
/// and sometimes rounded; accept computed values in the union band.
fn cp_matches(computed: f64, published: f64) -> bool {
    let diff = computed - published;
    (-6e-5..1.05e-4).contains(&diff)
}

fn delta_rows(out: &ScanOutput) -> Vec<(u64, u32)> {
    out.records.iter().map(|r| (r.d, r.value)).collect()
}

#[test]
fn criterion_01_delta_maxima_tables() {
    let o = opts();
    let out = scan_delta_max(2, ScanCase::Unramified, 5, 100_000, &o, cfg()).unwrap();
    assert!(out.errors.is_empty(), "{:?}", out.errors);
    assert_eq!(
        delta_rows(&out),
        vec![
            (21, 1),
            (41, 3),
            (469, 5),
            (645, 6),
            (1185, 8),
            (1201, 10),
            (3881, 11),
            (69973, 12)
        ]
    );

    let out = scan_delta_max(2, ScanCase::Ramified, 5, 25_000, &o, cfg()).unwrap();
    assert!(out.errors.is_empty());
    assert_eq!(
        delta_rows(&out),
        vec![
            (28, 1),
            (124, 2),
            (264, 3),
            (456, 5),
            (508, 6),
            (1784, 7),
            (10232, 8),
            (21980, 9)
        ]
    );

    let out = scan_delta_max(3, ScanCase::Unramified, 5, 200_000, &o, cfg()).unwrap();
    assert!(out.errors.is_empty());
    assert_eq!(
        delta_rows(&out),
        vec![
            (29, 2),
            (488, 4),
            (1213, 6),
            (13861, 7),
            (21713, 9),
            (153685, 10)
        ]
    );

    let out = scan_delta_max(3, ScanCase::Ramified, 5, 200_000, &o, cfg()).unwrap();
    assert!(out.errors.is_empty());
    assert_eq!(
        delta_rows(&out),
        vec![
            (93, 1),
            (105, 2),
            (492, 3),
            (1896, 6),
            (102984, 8),
            (168009, 10)
        ]
    );

    let out = scan_delta_max(1009, ScanCase::Ramified, 5, 2_000_000, &o, cfg()).unwrap();
    assert!(out.errors.is_empty());
    assert_eq!(delta_rows(&out), vec![(1900956, 1)]);

    pass(
        "criterion-1",
        "delta maxima tables reproduced exactly (p=2 both cases, p=3 both cases, p=1009)",
    );
}

#[test]
fn criterion_02_vptor_tables() {
    let o = opts();
    // p = 2 through D = 26377
    let out = scan_vptor_extrema(2, 5, 26_377, &o, cfg()).unwrap();
    assert!(out.errors.is_empty(), "{:?}", out.errors);
    let expect: Vec<(u64, u32, f64)> = vec![
        (17, 1, 0.4893),
        (28, 2, 0.8320),
        (41, 4, 1.4932),
        (508, 7, 1.5575),
        (1185, 10, 1.9587),
        (1201, 11, 2.1505),
        (3881, 12, 2.0130),
        (11985, 13, 1.9189),
        (26377, 14, 1.9064),
    ];
    assert_eq!(out.records.len(), expect.len());
    for (r, (d, v, cp)) in out.records.iter().zip(&expect) {
        assert_eq!((r.d, r.value), (*d, *v));
        assert!(
            cp_matches(r.c_p.unwrap(), *cp),
            "D={d}: {} vs {cp}",
            r.c_p.unwrap()
        );
    }

    // p in 3..=47 through D = 10^5; (p=19 had rows elided between its
    // third row and 10^6 in the reference output, so containment is
    // asserted there instead of exact equality)
    let tables: &[(u64, &[(u64, u32, f64)])] = &[
        (
            3,
            &[
                (24, 1, 0.6913),
                (29, 2, 1.3050),
                (105, 3, 1.4163),
                (488, 4, 1.4197),
                (1213, 6, 1.8565),
                (1896, 7, 2.0378),
                (13861, 8, 1.8431),
                (21713, 10, 2.2003),
            ],
        ),
        (
            5,
            &[
                (53, 1, 0.8107),
                (73, 2, 1.5005),
                (217, 3, 1.7949),
                (1641, 4, 1.7392),
                (25037, 5, 1.5890),
                (71308, 6, 1.7283),
            ],
        ),
        (
            7,
            &[
                (24, 1, 1.2246),
                (145, 2, 1.5640),
                (797, 3, 1.7476),
                (30556, 4, 1.5074),
                (92440, 5, 1.7018),
            ],
        ),
        (
            11,
            &[
                (29, 1, 1.4242),
                (145, 2, 1.9272),
                (424, 3, 2.3781),
                (35068, 4, 1.8330),
            ],
        ),
        (13, &[(8, 1, 2.4669), (2285, 3, 1.9898), (98797, 4, 1.7842)]),
        (17, &[(69, 2, 2.6765), (3209, 3, 2.1055), (8972, 4, 2.4902)]),
        (19, &[(109, 1, 1.2552), (193, 2, 2.2379), (2701, 3, 2.2359)]),
        (
            23,
            &[(140, 1, 1.2690), (493, 2, 2.0227), (10433, 3, 2.0332)],
        ),
        (29, &[(33, 1, 1.9261), (41, 2, 3.6270), (53093, 4, 2.4759)]),
        (31, &[(8, 1, 3.3028), (6168, 2, 1.5739), (90273, 3, 1.8056)]),
        (37, &[(33, 1, 2.0654), (3340, 2, 1.7801)]),
        (41, &[(73, 1, 1.7311), (2141, 2, 1.9369)]),
        (43, &[(88, 1, 1.6801), (6520, 2, 1.7130)]),
        (47, &[(301, 1, 1.3492), (26321, 2, 1.5131)]),
    ];
    for (p, rows) in tables {
        let out = scan_vptor_extrema(*p, 5, 100_000, &o, cfg()).unwrap();
        assert!(out.errors.is_empty(), "p={p}: {:?}", out.errors);
        let got: Vec<(u64, u32)> = out.records.iter().map(|r| (r.d, r.value)).collect();
        if *p == 19 {
            assert!(got.len() >= rows.len(), "p=19 rows missing: {got:?}");
            assert_eq!(
                &got[..rows.len()],
                rows.iter()
                    .map(|&(d, v, _)| (d, v))
                    .collect::<Vec<_>>()
                    .as_slice()
            );
        } else {
            assert_eq!(
                got,
                rows.iter().map(|&(d, v, _)| (d, v)).collect::<Vec<_>>(),
                "p={p}"
            );
        }
        for (r, (d, _, cp)) in out.records.iter().zip(rows.iter()) {
            assert!(
                cp_matches(r.c_p.unwrap(), *cp),
                "p={p} D={d}: {} vs {cp}",
                r.c_p.unwrap()
            );
        }
    }
    pass("criterion-2", "vptor minima tables reproduced for p=2 (to 26377) and p=3..47 (to 10^5), C_p at 4 decimals");
}

#[test]
fn criterion_03_genus_theory_case() {
    let r = vptor(20406, 2, &opts()).unwrap();
    assert_eq!(r.h, 8);
    assert_eq!(r.vptor, 20);
    assert!((r.c_p - 2.4514).abs() <= 1.0e-4, "C_2 = {}", r.c_p);
    pass(
        "criterion-3",
        &format!(
            "D=81624: h=8 vptor=20 C_2={:.5} within 2.4514 +- 0.0001",
            r.c_p
        ),
    );
}

#[test]
fn criterion_04_family_tables() {
    let o = opts();
    let run = |a: u64, p: u64, variant: FamilyVariant, lo: u32, hi: u32| {
        scan_family(
            &FamilyParams {
                a,
                p,
                variant,
                rho_lo: lo,
                rho_hi: hi,
                policy: SquarefreePolicy::Require,
            },
            &o,
            cfg(),
        )
        .unwrap()
    };
    let out = run(1, 2, FamilyVariant::Plus1, 2, 3);
    assert!(out.events.is_empty(), "{:?}", out.events);
    assert_eq!(u64::try_from(&out.records[0].m).unwrap(), 17);
    assert_eq!(out.records[0].vptor, Some(1));
    assert!(cp_matches(out.records[0].c_p.unwrap(), 0.4893));
    assert_eq!(u64::try_from(&out.records[1].m).unwrap(), 65);
    assert_eq!(
        (out.records[1].vptor, out.records[1].v_ph),
        (Some(3), Some(1))
    );

    let out = run(1, 3, FamilyVariant::Plus1, 2, 3);
    assert_eq!(u64::try_from(&out.records[0].m).unwrap(), 82);
    assert_eq!(out.records[0].vptor, Some(1));
    assert!(cp_matches(out.records[0].c_p.unwrap(), 0.3792));
    assert_eq!(u64::try_from(&out.records[1].m).unwrap(), 730);
    assert_eq!(
        (out.records[1].vptor, out.records[1].v_ph),
        (Some(3), Some(1))
    );

    let out = run(1, 5, FamilyVariant::Plus1, 2, 3);
    assert_eq!(u64::try_from(&out.records[0].m).unwrap(), 626);
    assert_eq!(out.records[0].vptor, Some(1));
    assert_eq!(u64::try_from(&out.records[1].m).unwrap(), 15626);
    assert_eq!(out.records[1].vptor, Some(2));

    let out = run(1, 3, FamilyVariant::Plus4, 2, 3);
    assert_eq!(u64::try_from(&out.records[0].m).unwrap(), 85);
    assert_eq!(out.records[0].vptor, Some(1));
    assert_eq!(u64::try_from(&out.records[1].m).unwrap(), 733);
    assert_eq!(out.records[1].vptor, Some(3));

    // above the exact-h ceiling only the modular law delta + v_w = rho - 1
    // is asserted (scan_family raises an event on any violation)
    let big = run(1, 2, FamilyVariant::Plus1, 2, 28);
    assert!(big.events.is_empty(), "{:?}", big.events);
    let mut checked = 0;
    for r in &big.records {
        assert_eq!(r.delta + r.v_w, r.rho - 1, "rho={}", r.rho);
        if r.vptor.is_none() {
            checked += 1;
        }
    }
    assert!(
        checked >= 10,
        "want >= 10 delta-only members, got {checked}"
    );
    pass(
        "criterion-4",
        "family rows (p=2,3,5 plus1; p=3 plus4) exact; delta+v_w = rho-1 on all members to rho=28",
    );
}

#[test]
fn criterion_05_reciprocal_construction() {
    // the search asserts a(d + p^(2 rho) a) = m b^2 and N(eta) = 1
    // exactly on every hit; any violation is an integrity error
    let out = reciprocal_search(2, 13, 1, 10_000, false, &opts(), cfg()).unwrap();
    assert!(out.errors.is_empty(), "{:?}", out.errors);
    let hit = out.hits.last().unwrap();
    assert_eq!(hit.a, 9728);
    assert_eq!(hit.b, BigUint::from(557872u64));
    assert_eq!(u64::try_from(&hit.d).unwrap(), 81624);
    assert_eq!(hit.vptor, Some(20));
    assert_eq!(hit.v_ph, Some(3));

    // huge-discriminant row: identity and the delta-only path
    let out = reciprocal_search(3, 21, 100_000_001, 100_000_001, true, &opts(), cfg()).unwrap();
    assert!(out.errors.is_empty(), "{:?}", out.errors);
    let hit = &out.hits[0];
    let d_expected: BigUint = "4376759652795686111245843894049436844".parse().unwrap();
    assert_eq!(hit.d, d_expected);
    assert_eq!(hit.b, BigUint::from(1u32));
    assert_eq!(hit.delta_eta, 20); // rho - 1, with v_w = 0 here
    assert!(hit.vptor.is_none());
    pass(
        "criterion-5",
        "reciprocal identities exact; D=81624 hit recovered at a=9728 with vptor=20, h=8 path",
    );
}

/// Fast slice of the huge-p criterion; the full [5, 5*10^7] range is the
/// ignored test below.
#[test]
fn criterion_06_huge_p_first_flag() {
    let out = huge_p_regulator_scan(13599893, 5, 10_000, cfg()).unwrap();
    assert!(out.errors.is_empty());
    assert_eq!(
        out.records.iter().map(|r| r.d).collect::<Vec<_>>(),
        vec![76]
    );
    pass(
        "criterion-6a",
        "p=13599893 flags D=76 and nothing else below 10^4",
    );
}

#[test]
#[ignore = "slow tier: full huge-p range [5, 5*10^7], tens of minutes"]
fn criterion_06_huge_p_full_range() {
    let out = huge_p_regulator_scan(13599893, 5, 50_000_000, cfg()).unwrap();
    assert!(out.errors.is_empty());
    let ds: Vec<u64> = out.records.iter().map(|r| r.d).collect();
    assert!(ds.contains(&76));
    let next = ds.iter().copied().filter(|&d| d > 76).min();
    assert_eq!(next, Some(37473505));
    pass(
        "criterion-6",
        &format!("huge-p flags {:?}; next after 76 is 37473505", ds),
    );
}

#[test]
fn criterion_07a_cubic_enumeration_and_polynomials() {
    let out = enumerate_cyclic_cubic(7, 200, cfg()).unwrap();
    assert!(out.errors.is_empty());
    let mut fs: Vec<u64> = out.specs.iter().map(|s| s.f).collect();
    fs.dedup();
    assert!(fs.starts_with(&[7, 9, 13, 19, 31, 37, 43, 61, 63, 67]));
    let poly = |f: u64| {
        let s = out.specs.iter().find(|s| s.f == f).unwrap();
        (s.c2, s.c1, s.c0)
    };
    assert_eq!(poly(7), (1, -2, -1));
    assert_eq!(poly(9), (0, -3, 1));
    assert_eq!(poly(19), (1, -6, -7));
    assert_eq!(poly(31), (1, -10, -8));
    assert_eq!(poly(171), (0, -57, -152));
    pass(
        "criterion-7a",
        "conductor list and reference polynomials coefficient-exact (7, 9, 19, 31, 171)",
    );
}

/// As stated, this sub-criterion pins disc(P_f) = f^2 for every emitted
/// conductor up to 10^5. That identity is falsified by the same
/// criterion's own pinned polynomial for f = 31 (x^3+x^2-10x-8, whose
/// discriminant is 3844 = 4 * 31^2 = (b f)^2 with b = 2): the stated
/// identity holds exactly when the representation 4f = a^2 + 27 b^2 has
/// b = 1. The exact law disc(P_f) = (b f)^2 is verified for the full
/// range in criterion_07c. This test implements the criterion faithfully
/// and is expected to fail at f = 31; see the reviewer notes.
#[test]
fn criterion_07b_poly_disc_equals_f_squared_as_stated() {
    let out = enumerate_cyclic_cubic(7, 100_000, cfg()).unwrap();
    assert!(out.errors.is_empty());
    for s in &out.specs {
        let f2 = BigInt::from(s.f) * BigInt::from(s.f);
        assert_eq!(
            cubic_poly_disc(s),
            f2,
            "disc(P_{}) = {} = ({}*{})^2: the disc = f^2 identity holds only for b = 1 representations",
            s.f,
            cubic_poly_disc(s),
            s.b,
            s.f
        );
    }
    pass(
        "criterion-7b",
        "disc(P_f) = f^2 for every conductor to 10^5",
    );
}

#[test]
fn criterion_07c_poly_disc_index_law() {
    let out = enumerate_cyclic_cubic(7, 100_000, cfg()).unwrap();
    assert!(out.errors.is_empty());
    let mut b1 = 0u64;
    let mut bgt = 0u64;
    for s in &out.specs {
        let bf = BigInt::from(s.b) * BigInt::from(s.f);
        assert_eq!(cubic_poly_disc(s), &bf * &bf, "f={} b={}", s.f, s.b);
        if s.b == 1 {
            b1 += 1;
        } else {
            bgt += 1;
        }
    }
    assert!(bgt > 0, "expected b > 1 representations (first at f = 31)");
    pass(
        "criterion-7c",
        &format!(
            "disc(P_f) = (b f)^2 exact for all {} specs to 10^5 ({b1} with b=1, {bgt} with b>1)",
            b1 + bgt
        ),
    );
}

#[test]
fn criterion_08_bs_window_fast_tier() {
    let (min, max, n, errors) = bs_window(100_000, 200_000, opts().class_ceiling, cfg()).unwrap();
    assert!(errors.is_empty());
    assert!((min - 0.647).abs() <= 1.0e-3, "BS min = {min}");
    assert!((max - 1.155).abs() <= 1.0e-3, "BS max = {max}");
    pass(
        "criterion-8a",
        &format!(
            "BS on [10^5, 2*10^5]: min {min:.4} ~ 0.647, max {max:.4} ~ 1.155 over {n} fields"
        ),
    );
}

#[test]
#[ignore = "slow tier: three means over [5, 10^6]"]
fn criterion_08_means_full_range() {
    let o = opts();
    let (minf, _) = range_mean(Place::Infinite, 5, 1_000_000, &o, cfg()).unwrap();
    assert!(
        (minf.mean - (-0.08072)).abs() <= 5.0e-4,
        "M_inf = {}",
        minf.mean
    );
    let (m3, _) = range_mean(Place::Finite(3), 5, 1_000_000, &o, cfg()).unwrap();
    assert!((m3.mean - 0.12656).abs() <= 5.0e-4, "M_3 = {}", m3.mean);
    let (m29, _) = range_mean(Place::Finite(29), 5, 1_000_000, &o, cfg()).unwrap();
    assert!((m29.mean - 0.01901).abs() <= 5.0e-4, "M_29 = {}", m29.mean);
    pass(
        "criterion-8",
        &format!(
            "means over [5, 10^6]: M_inf={:.8} M_3={:.8} M_29={:.8}",
            minf.mean, m3.mean, m29.mean
        ),
    );
}

#[test]
fn criterion_09_oracle_agreement() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/oracle.jsonl");
    let client = OracleClient::fixtures(&path).unwrap();

    // pinned individual records
    let r = client.query("quad:4194305", 2, None).unwrap();
    assert_eq!(r.vptor, 12);
    assert_eq!(r.structure.as_deref(), Some(&[2048u64, 2][..]));
    assert_eq!(client.query("washington:513", 2, None).unwrap().vptor, 28);
    for (f, v) in [(19u64, 1u32), (199, 2), (427, 4)] {
        assert_eq!(
            client.query(&format!("cubic:{f}"), 3, None).unwrap().vptor,
            v,
            "f={f}"
        );
    }

    // full decomposition-vs-oracle comparison
    let report = oracle_verify(&client, &opts());
    assert!(
        report.disagreements.is_empty(),
        "{:?}",
        report.disagreements
    );
    assert!(report.unavailable.is_empty(), "{:?}", report.unavailable);
    assert!(
        report.checked >= 40,
        "only {} fields natively checked",
        report.checked
    );
    pass(
        "criterion-9",
        &format!(
            "zero disagreements: {} fields natively checked, {} parity-checked",
            report.checked, report.parity_checked
        ),
    );
}

#[test]
fn criterion_10_property_suite() {
    let o = opts();
    // classical bounds hold on every field scanned (arch_record and
    // vptor abort on violation; run them across a window)
    let mut n = 0;
    for d in (5u64..20_000).filter(|&d| discriminant_valid(d)) {
        let m = if d % 4 == 0 { d / 4 } else { d };
        let rec = ptor::archimedean::arch_record(m, o.class_ceiling).unwrap();
        assert!(bound_check_h(d, rec.h));
        n += 1;
    }
    assert!(n > 6000);

    // delta stability under modulus growth
    for (m, p) in [
        (20406u64, 2u64),
        (1185, 2),
        (168009, 3),
        (122, 3),
        (2285, 13),
    ] {
        let d1 = ptor::torsion::delta_p(m, p, &o).unwrap();
        let d2 = ptor::torsion::delta_p(m, p, &TorsionOpts { start_n: 64, ..o }).unwrap();
        assert_eq!(d1, d2);
    }

    // parallel / sequential byte-identity of a full scan
    let a = scan_vptor_extrema(3, 5, 20_000, &o, ExecCfg::sequential()).unwrap();
    let b = scan_vptor_extrema(3, 5, 20_000, &o, ExecCfg::default()).unwrap();
    assert_eq!(a.records, b.records);
    let a = scan_delta_max(2, ScanCase::Ramified, 5, 20_000, &o, ExecCfg::sequential()).unwrap();
    let b = scan_delta_max(2, ScanCase::Ramified, 5, 20_000, &o, ExecCfg::default()).unwrap();
    assert_eq!(a.records, b.records);

    // cubic parity law over the recorded results (p = 2 mod 3 -> even)
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/oracle.jsonl");
    let client = OracleClient::fixtures(&path).unwrap();
    let mut parity = 0;
    for r in client.fixture_entries() {
        if r.key.starts_with("cubic:") && r.p % 3 == 2 {
            assert_eq!(r.vptor % 2, 0, "{} p={}", r.key, r.p);
            parity += 1;
        }
    }
    assert!(parity >= 10);
    pass(
        "criterion-10",
        &format!("bounds on {n} fields, delta stability, scan determinism, parity law on {parity} cubic records"),
    );
}
