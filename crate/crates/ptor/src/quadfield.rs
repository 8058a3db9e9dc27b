//! Real quadratic field invariants: fundamental unit by the continued
//! fraction of the integral-basis generator, class number by cycles of
//! reduced indefinite binary quadratic forms, discriminant bookkeeping.

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};
use crate::intbase::{
    is_squarefree_u64, isqrt_u64, spf_sieve, Basis, PrimePower, QuadCtx, QuadModElem, SPF_BOUND,
};

/// Default exact-mode ceiling for class numbers.
pub const CLASS_CEILING: u64 = 10_000_000;

/// A real quadratic field keyed by its squarefree radicand m, with the
/// fundamental discriminant D = m (m = 1 mod 4) or 4m.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadFieldId {
    pub m: u64,
    pub d: u64,
}

impl QuadFieldId {
    pub fn from_m(m: u64) -> Result<Self> {
        if m < 2 || !is_squarefree_u64(m) {
            return Err(Error::Usage(format!(
                "m={m} is not a squarefree integer >= 2"
            )));
        }
        let d = if m % 4 == 1 { m } else { 4 * m };
        Ok(QuadFieldId { m, d })
    }

    pub fn from_d(d: u64) -> Result<Self> {
        if !discriminant_valid(d) {
            return Err(Error::Usage(format!(
                "{d} is not a real quadratic fundamental discriminant"
            )));
        }
        let m = if d % 4 == 0 { d / 4 } else { d };
        Ok(QuadFieldId { m, d })
    }
}

/// True iff D is the fundamental discriminant of a real quadratic field:
/// with e = v_2(D) and M = D/2^e squarefree, accept e=0 & M=1 (4),
/// e=2 & M!=1 (4), or e=3.
pub fn discriminant_valid(d: u64) -> bool {
    if d < 5 {
        return false;
    }
    let e = d.trailing_zeros();
    let m = d >> e;
    match e {
        0 if m % 4 != 1 => return false,
        0 | 3 => {}
        2 if m % 4 == 1 => return false,
        2 => {}
        _ => return false,
    }
    is_squarefree_u64(m)
}

/// Floating value m * 2^e with m in [1,2), for quantities whose exponent
/// outruns f64. Exact unit coefficients are never materialized; only
/// this scaled form feeds the regulator.
#[derive(Debug, Clone, Copy)]
struct Scaled {
    m: f64,
    e: i64,
}

impl Scaled {
    const ZERO: Scaled = Scaled { m: 0.0, e: 0 };

    fn from_u64(v: u64) -> Scaled {
        Scaled { m: v as f64, e: 0 }.norm()
    }

    fn norm(self) -> Scaled {
        if self.m == 0.0 {
            return Scaled::ZERO;
        }
        let (frac, exp) = frexp(self.m);
        Scaled {
            m: frac * 2.0,
            e: self.e + exp - 1,
        }
    }

    fn mul_u64(self, k: u64) -> Scaled {
        Scaled {
            m: self.m * k as f64,
            e: self.e,
        }
        .norm()
    }

    fn mul_f64(self, k: f64) -> Scaled {
        Scaled {
            m: self.m * k,
            e: self.e,
        }
        .norm()
    }

    fn add(self, other: Scaled) -> Scaled {
        if self.m == 0.0 {
            return other;
        }
        if other.m == 0.0 {
            return self;
        }
        let (hi, lo) = if self.e >= other.e {
            (self, other)
        } else {
            (other, self)
        };
        let shift = (hi.e - lo.e).min(1100);
        let m = hi.m + lo.m / 2f64.powi(shift as i32);
        Scaled { m, e: hi.e }.norm()
    }

    fn ln(self) -> f64 {
        self.m.ln() + self.e as f64 * std::f64::consts::LN_2
    }
}

fn frexp(x: f64) -> (f64, i64) {
    if x == 0.0 || !x.is_finite() {
        return (x, 0);
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    if exp == 0 {
        // subnormal: renormalize through a fixed scale
        let (f, e) = frexp(x * 2f64.powi(64));
        return (f, e - 64);
    }
    let mant = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1022u64 << 52));
    (mant, exp - 1022)
}

/// Fundamental unit data: residue mod p^N, norm sign, floating regulator
/// log(eps) and the continued-fraction period length.
#[derive(Debug, Clone)]
pub struct UnitRep {
    pub residue: Option<QuadModElem>,
    pub norm_sign: i8,
    pub regulator: f64,
    pub period: u64,
}

const CF_STEP_CAP: u64 = 200_000_000;

/// Continued-fraction expansion of omega (= sqrt m or (1+sqrt m)/2) with
/// the convergents carried simultaneously mod p^N and in scaled floats.
/// The unit is eps = p_{l-1} - q_{l-1} * conj(omega), norm (-1)^l.
pub fn fundamental_unit(id: QuadFieldId, modulus: &PrimePower) -> Result<UnitRep> {
    cf_unit(id.m, Some(modulus))
}

/// Regulator/period/norm only (no modular residue).
pub fn unit_regulator(m: u64) -> Result<UnitRep> {
    cf_unit(m, None)
}

fn cf_unit(m: u64, modulus: Option<&PrimePower>) -> Result<UnitRep> {
    if m < 2 || m > (1u64 << 62) {
        return Err(Error::Capacity(format!("radicand {m} out of range")));
    }
    let s = isqrt_u64(m);
    debug_assert!(s * s != m, "m must be squarefree hence non-square");
    let half = m % 4 == 1;
    let (p0, q0) = if half { (1u64, 2u64) } else { (0u64, 1u64) };
    let a0 = (p0 + s) / q0;

    // modular convergents
    let mb = BigUint::from(m);
    let ctx = modulus.map(|pp| QuadCtx::new(&mb, pp));
    let (mut cp_prev, mut cp_cur, mut cq_prev, mut cq_cur) = match &ctx {
        Some(c) => {
            let q = BigUint::from(c.p).pow(c.n_eff);
            (
                Some(BigUint::one() % &q),
                Some(BigUint::from(a0) % &q),
                Some(BigUint::from(0u32)),
                Some(BigUint::one() % &q),
            )
        }
        None => (None, None, None, None),
    };
    let qmod = ctx.as_ref().map(|c| BigUint::from(c.p).pow(c.n_eff));

    // scaled-float convergents for the regulator (a0 >= 1 for m >= 2)
    let mut fp_prev = Scaled::from_u64(1);
    let mut fp_cur = Scaled::from_u64(a0);
    let mut fq_prev = Scaled::ZERO;
    let mut fq_cur = Scaled::from_u64(1);

    let p1 = a0 * q0 - p0;
    let q1 = (m - p1 * p1) / q0;
    let (mut pp, mut qq) = (p1, q1);
    let mut period = 0u64;
    loop {
        let a = (pp + s) / qq;
        // p_i = a p_{i-1} + p_{i-2}
        let fp_next = fp_cur.mul_u64(a).add(fp_prev);
        let fq_next = fq_cur.mul_u64(a).add(fq_prev);
        fp_prev = fp_cur;
        fp_cur = fp_next;
        fq_prev = fq_cur;
        fq_cur = fq_next;
        if let Some(q) = &qmod {
            let ab = BigUint::from(a);
            let np = (cp_cur.as_ref().unwrap() * &ab + cp_prev.as_ref().unwrap()) % q;
            let nq = (cq_cur.as_ref().unwrap() * &ab + cq_prev.as_ref().unwrap()) % q;
            cp_prev = cp_cur.take();
            cp_cur = Some(np);
            cq_prev = cq_cur.take();
            cq_cur = Some(nq);
        }
        period += 1;
        let pn = a * qq - pp;
        let qn = (m - pn * pn) / qq;
        pp = pn;
        qq = qn;
        if (pp, qq) == (p1, q1) {
            break;
        }
        if period > CF_STEP_CAP {
            return Err(Error::Capacity(format!(
                "continued fraction of {m} exceeded step cap"
            )));
        }
    }

    // after l = period steps, (fp_prev, fq_prev) hold p_{l-1}, q_{l-1};
    // eps = p_{l-1} - q_{l-1} * conj(omega)
    let (pl, ql) = (fp_prev, fq_prev);
    let sq = (m as f64).sqrt();
    let eps = if half {
        pl.add(ql.mul_f64((sq - 1.0) / 2.0))
    } else {
        pl.add(ql.mul_f64(sq))
    };
    let regulator = eps.ln();
    let norm_sign: i8 = if period % 2 == 0 { 1 } else { -1 };

    let residue = ctx.map(|c| {
        let q = BigUint::from(c.p).pow(c.n_eff);
        let plm = cp_prev.unwrap();
        let qlm = cq_prev.unwrap();
        match c.basis {
            Basis::Sqrt => QuadModElem::new(c, plm, qlm),
            Basis::HalfPlus => {
                let x = (&plm + &q - &qlm % &q) % &q;
                QuadModElem::new(c, x, qlm)
            }
        }
    });

    Ok(UnitRep {
        residue,
        norm_sign,
        regulator,
        period,
    })
}

/// Exact class number of the maximal order of discriminant D by cycle
/// count of reduced indefinite forms. Cycles biject with narrow classes;
/// the wide number divides by 2 when the fundamental unit has norm +1.
pub fn class_number(d: u64, ceiling: u64) -> Result<u64> {
    if !discriminant_valid(d) {
        return Err(Error::Usage(format!(
            "{d} is not a fundamental discriminant"
        )));
    }
    if d > ceiling {
        return Err(Error::Capacity(format!(
            "class number for D={d} exceeds exact-mode ceiling {ceiling}; use the oracle path"
        )));
    }
    let cycles = form_cycle_count(d)?;
    let m = if d % 4 == 0 { d / 4 } else { d };
    let unit = unit_regulator(m)?;
    if unit.norm_sign == 1 {
        if cycles % 2 != 0 {
            return Err(Error::Integrity(format!(
                "odd cycle count {cycles} with norm +1 unit at D={d}"
            )));
        }
        Ok(cycles / 2)
    } else {
        Ok(cycles)
    }
}

/// Eq-style bound: h <= sqrt(D)/2 for real quadratic fields.
pub fn bound_check_h(d: u64, h: u64) -> bool {
    // h <= sqrt(D)/2  <=>  (2h)^2 <= D
    (2 * h).checked_mul(2 * h).map_or(false, |v| v <= d)
}

/// Enumerate reduced forms (a,b,c), b^2-4ac = D, 0 < b < sqrt D,
/// sqrt D - b < 2|a| < sqrt D + b, and count orbits of the reduction
/// operator rho.
fn form_cycle_count(d: u64) -> Result<u64> {
    let s = isqrt_u64(d);
    let mut forms: Vec<(i64, i64, i64)> = Vec::new();
    let spf = spf_sieve();
    let mut divisors: Vec<u64> = Vec::new();
    let mut b = if d % 2 == 0 { 2u64 } else { 1u64 };
    while b <= s {
        let m4 = d - b * b;
        if m4 % 4 == 0 && m4 > 0 {
            let m = m4 / 4;
            if m > SPF_BOUND {
                return Err(Error::Capacity(format!(
                    "form coefficient {m} beyond sieve bound"
                )));
            }
            divisors.clear();
            divisors.push(1);
            let mut n = m;
            while n > 1 {
                let p = spf[n as usize] as u64;
                let mut e = 0;
                while n % p == 0 {
                    n /= p;
                    e += 1;
                }
                let len = divisors.len();
                let mut pe = 1u64;
                for _ in 0..e {
                    pe *= p;
                    for i in 0..len {
                        divisors.push(divisors[i] * pe);
                    }
                }
            }
            for &u in &divisors {
                // sqrt D - b < 2u < sqrt D + b with sqrt D irrational
                if 2 * u > s - b && 2 * u <= s + b {
                    let c = -((m / u) as i64);
                    forms.push((u as i64, b as i64, c));
                    forms.push((-(u as i64), b as i64, -c));
                }
            }
        }
        b += 2;
    }
    let index: std::collections::HashMap<(i64, i64, i64), usize> =
        forms.iter().enumerate().map(|(i, &f)| (f, i)).collect();
    let mut seen = vec![false; forms.len()];
    let mut cycles = 0u64;
    for start in 0..forms.len() {
        if seen[start] {
            continue;
        }
        cycles += 1;
        let mut cur = start;
        while !seen[cur] {
            seen[cur] = true;
            let next = rho(forms[cur], d, s);
            cur = *index.get(&next).ok_or_else(|| {
                Error::Integrity(format!("rho left the reduced set at D={d}: {next:?}"))
            })?;
        }
    }
    Ok(cycles)
}

/// Reduction operator: (a,b,c) -> (c, b', (b'^2-D)/4c) with b' = -b mod
/// 2|c| in the window (sqrt D - 2|c|, sqrt D).
fn rho(form: (i64, i64, i64), d: u64, s: u64) -> (i64, i64, i64) {
    let (_, b, c) = form;
    let t = 2 * c.unsigned_abs() as i64;
    let r0 = (-b).rem_euclid(t);
    let bp = s as i64 - (s as i64 - r0).rem_euclid(t);
    let cp = (bp * bp - d as i64) / (4 * c);
    (c, bp, cp)
}
