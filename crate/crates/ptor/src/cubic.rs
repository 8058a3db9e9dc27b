//! Cyclic cubic fields by conductor: validity, enumeration with
//! polynomial synthesis from the 4f = a^2 + 27 b^2 representation, and
//! the one-parameter cubic family generator. Torsion values for cubic
//! fields flow through the oracle client, never computed natively.

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_fold, ExecCfg, FieldError};
use crate::intbase::{factor_u64, is_squarefree_u64, isqrt_u64};

/// A cyclic cubic field: conductor f, decomposition pair (a, b) with
/// 4f = a^2 + 27 b^2, and the monic defining cubic x^3 + c2 x^2 + c1 x + c0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubicFieldSpec {
    pub f: u64,
    pub a: i64,
    pub b: u64,
    pub c2: i64,
    pub c1: i64,
    pub c0: i64,
}

impl CubicFieldSpec {
    /// PARI-style rendering, e.g. "x^3 + x^2 - 2*x - 1".
    pub fn poly_string(&self) -> String {
        let mut s = String::from("x^3");
        let term = |s: &mut String, c: i64, t: &str| {
            if c == 0 {
                return;
            }
            s.push_str(if c > 0 { " + " } else { " - " });
            let a = c.unsigned_abs();
            if t.is_empty() {
                s.push_str(&a.to_string());
            } else if a == 1 {
                s.push_str(t);
            } else {
                s.push_str(&format!("{a}*{t}"));
            }
        };
        term(&mut s, self.c2, "x^2");
        term(&mut s, self.c1, "x");
        term(&mut s, self.c0, "");
        s
    }
}

/// True iff f is a cyclic cubic conductor: f = F or 9F with F squarefree,
/// F = 1 (mod 3), and every prime divisor of F = 1 (mod 3). f = 9 (F = 1)
/// is allowed.
pub fn conductor_valid(f: u64) -> bool {
    if f < 7 {
        return false;
    }
    let mut e = 0u32;
    let mut big_f = f;
    while big_f % 3 == 0 {
        big_f /= 3;
        e += 1;
    }
    if e != 0 && e != 2 {
        return false;
    }
    if big_f % 3 != 1 && big_f != 1 {
        return false;
    }
    if !is_squarefree_u64(big_f) {
        return false;
    }
    factor_u64(big_f).iter().all(|&(p, _)| p % 3 == 1)
}

/// All (a, b) representations of one valid conductor, in ascending b
/// order with the sign normalization applied, as field specs.
pub fn specs_for_conductor(f: u64) -> Result<Vec<CubicFieldSpec>> {
    let e2 = f % 9 == 0;
    let mut out = Vec::new();
    let bmax = isqrt_u64(4 * f / 27);
    for b in 1..=bmax {
        if e2 && b % 3 == 0 {
            continue;
        }
        let rem = 4 * f - 27 * b * b;
        if rem == 0 {
            continue;
        }
        let a0 = isqrt_u64(rem);
        if a0 * a0 != rem {
            continue;
        }
        let mut a = a0 as i64;
        let (c2, c1, c0) = if !e2 {
            if a.rem_euclid(3) == 1 {
                a = -a;
            }
            let f_i = f as i64;
            debug_assert_eq!((f_i * (a - 3) + 1) % 27, 0);
            (1i64, (1 - f_i) / 3, (f_i * (a - 3) + 1) / 27)
        } else {
            if a.rem_euclid(9) == 3 {
                a = -a;
            }
            let f_i = f as i64;
            debug_assert_eq!((f_i * a) % 27, 0);
            (0i64, -f_i / 3, -(f_i * a) / 27)
        };
        out.push(CubicFieldSpec {
            f,
            a,
            b,
            c2,
            c1,
            c0,
        });
    }
    if out.is_empty() {
        return Err(Error::Integrity(format!(
            "valid conductor {f} has no 4f = a^2 + 27b^2 representation"
        )));
    }
    Ok(out)
}

#[derive(Debug, Clone, Default)]
pub struct CubicOutput {
    pub specs: Vec<CubicFieldSpec>,
    pub errors: Vec<FieldError>,
}

/// Enumerate all cyclic cubic field specs with conductor in [lo, hi],
/// one spec per (f, b) representation ordered by (f, b).
pub fn enumerate_cyclic_cubic(lo: u64, hi: u64, cfg: ExecCfg) -> Result<CubicOutput> {
    let work = |f: u64| -> Result<Option<Vec<CubicFieldSpec>>> {
        if !conductor_valid(f) {
            return Ok(None);
        }
        Ok(Some(specs_for_conductor(f)?))
    };
    let (specs, errors) = map_fold(
        lo.max(7),
        hi,
        cfg,
        work,
        Vec::new(),
        |mut acc: Vec<CubicFieldSpec>, _, v| {
            acc.extend(v);
            acc
        },
    )?;
    Ok(CubicOutput { specs, errors })
}

/// Discriminant of the monic cubic x^3 + c2 x^2 + c1 x + c0 by the
/// standard degree-3 formula.
pub fn cubic_poly_disc(spec: &CubicFieldSpec) -> BigInt {
    let a = BigInt::from(spec.c2);
    let b = BigInt::from(spec.c1);
    let c = BigInt::from(spec.c0);
    18 * &a * &b * &c - 4 * &a * &a * &a * &c + &a * &a * &b * &b - 4 * &b * &b * &b - 27 * &c * &c
}

/// The one-parameter totally real cubic x^3 - (N^3 - 2N^2 + 3N - 3) x^2
/// - N^2 x - 1, for any integer N != 1.
pub fn washington_poly(n: &BigInt) -> Result<[BigInt; 3]> {
    if *n == BigInt::from(1) {
        return Err(Error::Usage(
            "N = 1 is degenerate for the cubic family".into(),
        ));
    }
    let n2: BigInt = n * n;
    let n3: BigInt = &n2 * n;
    let c2: BigInt = -(n3 - &n2 * 2u32 + n * 3u32 - 3u32);
    Ok([c2, -n2, BigInt::from(-1)])
}

/// Generated member of the N = 1 + a p^k grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WashingtonRecord {
    pub a: u64,
    pub k: u32,
    pub n: BigInt,
    pub poly: [BigInt; 3],
}

/// Companion generator over N = 1 + a p^k, skipping p | a; every
/// emitted polynomial is certified to have no rational root.
pub fn washington_family(
    p: u64,
    k_lo: u32,
    k_hi: u32,
    a_lo: u64,
    a_hi: u64,
) -> Result<Vec<WashingtonRecord>> {
    if k_lo < 1 || k_hi < k_lo || a_lo < 1 || a_hi < a_lo {
        return Err(Error::Usage("empty or invalid washington grid".into()));
    }
    let mut out = Vec::new();
    for k in k_lo..=k_hi {
        for a in a_lo..=a_hi {
            if a % p == 0 {
                continue;
            }
            let n = BigInt::from(1) + BigInt::from(a) * BigInt::from(p).pow(k);
            let poly = washington_poly(&n)?;
            // monic with constant -1: reducible only via a root +-1
            let at = |x: i64| -> BigInt {
                let x = BigInt::from(x);
                x.pow(3) + &poly[0] * x.pow(2) + &poly[1] * &x + &poly[2]
            };
            if at(1).is_zero() || at(-1).is_zero() {
                return Err(Error::Integrity(format!("reducible member at N={n}")));
            }
            out.push(WashingtonRecord { a, k, n, poly });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conductor_examples() {
        assert!(conductor_valid(7));
        assert!(conductor_valid(9));
        assert!(!conductor_valid(21)); // 7*3 has v_3 = 1
        assert!(conductor_valid(63)); // 9*7
        assert!(!conductor_valid(11));
        assert!(!conductor_valid(49));
    }

    #[test]
    fn enumeration_matches_independent_sieve() {
        // independent route: factor every f and test the conditions
        let indep = |f: u64| -> bool {
            let fac = factor_u64(f);
            let mut rest_ok = true;
            let mut v3 = 0;
            for &(p, e) in &fac {
                if p == 3 {
                    v3 = e;
                } else if p % 3 != 1 || e > 1 {
                    rest_ok = false;
                }
            }
            rest_ok && (v3 == 0 || v3 == 2) && f >= 7
        };
        for f in 1..=10_000u64 {
            assert_eq!(conductor_valid(f), indep(f), "f={f}");
        }
    }

    #[test]
    fn reference_polynomials() {
        let p7 = &specs_for_conductor(7).unwrap()[0];
        assert_eq!((p7.c2, p7.c1, p7.c0), (1, -2, -1));
        let p9 = &specs_for_conductor(9).unwrap()[0];
        assert_eq!((p9.c2, p9.c1, p9.c0), (0, -3, 1));
        let p19 = &specs_for_conductor(19).unwrap()[0];
        assert_eq!((p19.c2, p19.c1, p19.c0), (1, -6, -7));
        let p31 = &specs_for_conductor(31).unwrap()[0];
        assert_eq!((p31.c2, p31.c1, p31.c0), (1, -10, -8));
        let p171 = &specs_for_conductor(171).unwrap()[0];
        assert_eq!((p171.c2, p171.c1, p171.c0), (0, -57, -152));
        assert_eq!(p171.poly_string(), "x^3 - 57*x - 152");
        assert_eq!(p7.poly_string(), "x^3 + x^2 - 2*x - 1");
    }

    #[test]
    fn conductor_list_start() {
        let out = enumerate_cyclic_cubic(7, 70, ExecCfg::default()).unwrap();
        let fs: Vec<u64> = {
            let mut v: Vec<u64> = out.specs.iter().map(|s| s.f).collect();
            v.dedup();
            v
        };
        assert_eq!(fs, vec![7, 9, 13, 19, 31, 37, 43, 61, 63, 67]);
    }

    #[test]
    fn representation_identity_holds() {
        let out = enumerate_cyclic_cubic(7, 5000, ExecCfg::default()).unwrap();
        assert!(out.errors.is_empty());
        for s in &out.specs {
            assert_eq!((s.a * s.a) as u64 + 27 * s.b * s.b, 4 * s.f, "f={}", s.f);
        }
    }

    #[test]
    fn poly_disc_reference_values() {
        assert_eq!(
            cubic_poly_disc(&specs_for_conductor(7).unwrap()[0]),
            BigInt::from(49)
        );
        assert_eq!(
            cubic_poly_disc(&specs_for_conductor(9).unwrap()[0]),
            BigInt::from(81)
        );
        assert_eq!(
            cubic_poly_disc(&specs_for_conductor(19).unwrap()[0]),
            BigInt::from(361)
        );
    }

    #[test]
    fn poly_disc_is_bf_squared() {
        // disc(P) = (b f)^2 exactly; = f^2 precisely when b = 1
        let out = enumerate_cyclic_cubic(7, 5000, ExecCfg::default()).unwrap();
        for s in &out.specs {
            let expect = BigInt::from(s.b * s.f).pow(2);
            assert_eq!(cubic_poly_disc(s), expect, "f={} b={}", s.f, s.b);
        }
    }

    #[test]
    fn washington_reference_coefficients() {
        let p = washington_poly(&BigInt::from(513)).unwrap();
        assert_eq!(p[0], BigInt::from(-134480895));
        assert_eq!(p[1], BigInt::from(-263169));
        assert_eq!(p[2], BigInt::from(-1));
        let p = washington_poly(&BigInt::from(2)).unwrap();
        assert_eq!(
            (p[0].clone(), p[1].clone()),
            (BigInt::from(-3), BigInt::from(-4))
        );
        let n = BigInt::from(1) + BigInt::from(3).pow(9);
        assert_eq!(washington_poly(&n).unwrap()[1], BigInt::from(-387459856));
        assert!(washington_poly(&BigInt::from(1)).is_err());
    }

    #[test]
    fn washington_grid_is_irreducible() {
        let recs = washington_family(2, 2, 10, 1, 12).unwrap();
        assert!(!recs.is_empty());
        assert!(recs.iter().any(|r| r.n == BigInt::from(513)));
    }
}
