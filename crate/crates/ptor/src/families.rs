//! Scan experiments over discriminant ranges: successive delta maxima,
//! successive Delta_p minima, the explicit-unit family a^2 p^(2 rho) + c,
//! the reciprocal unit construction, and the huge-p regulator scan.
//!
//! Every scan maps per-field work in parallel and extracts extrema in a
//! single ordered fold, so output is identical for any worker count.

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};
use crate::exec::{map_fold, ExecCfg, FieldError};
use crate::intbase::{
    is_prime, isqrt_u64, kronecker_symbol, mul_mod_u64, squarefree_core, CoreSplit, PrimePower,
    QuadCtx, QuadModElem, ResidueVal,
};
use crate::quadfield::{discriminant_valid, QuadFieldId};
use crate::torsion::{
    classify, clc_valuation, cp_gap, delta_for_unit, vptor, w_valuation, Casramif, DeltaCase,
    TorsionOpts,
};

/// One printed row of a successive-extrema or family table.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRecord {
    pub d: u64,
    pub m: u64,
    /// delta for max-scans, vptor for min-scans.
    pub value: u32,
    pub c_p: Option<f64>,
    pub gap: Option<f64>,
    /// (h, v_cl, v_w) when the scan computed them.
    pub extras: Option<(u64, u32, u32)>,
}

#[derive(Debug, Clone, Default)]
pub struct ScanOutput {
    pub records: Vec<ScanRecord>,
    pub errors: Vec<FieldError>,
    pub events: Vec<String>,
}

/// Case filter for delta scans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanCase {
    Unramified,
    Ramified,
}

fn scan_field(d: u64, p: u64, case: ScanCase) -> Option<u64> {
    if !discriminant_valid(d) {
        return None;
    }
    let m = if d % 4 == 0 { d / 4 } else { d };
    if p == 2 && m == 2 {
        return None; // excluded field
    }
    let ramified = if p == 2 { m % 4 != 1 } else { m % p == 0 };
    match case {
        ScanCase::Ramified if ramified => Some(m),
        ScanCase::Unramified if !ramified => Some(m),
        _ => None,
    }
}

/// Successive maxima of delta_p(eps) over ascending D: emits exactly the
/// fields whose delta exceeds every previous one (delta = 0 never prints).
pub fn scan_delta_max(
    p: u64,
    case: ScanCase,
    d_lo: u64,
    d_hi: u64,
    opts: &TorsionOpts,
    cfg: ExecCfg,
) -> Result<ScanOutput> {
    if !is_prime(p) {
        return Err(Error::Usage(format!("{p} is not prime")));
    }
    let work = |d: u64| -> Result<Option<(u64, u32)>> {
        let Some(m) = scan_field(d, p, case) else {
            return Ok(None);
        };
        let delta = crate::torsion::delta_p(m, p, opts)?;
        Ok(Some((m, delta)))
    };
    let ((records, _), errors) = map_fold(
        d_lo,
        d_hi,
        cfg,
        work,
        (Vec::new(), 0u32),
        |(mut recs, max), d, (m, delta)| {
            if delta > max {
                recs.push(ScanRecord {
                    d,
                    m,
                    value: delta,
                    c_p: None,
                    gap: None,
                    extras: None,
                });
                (recs, delta)
            } else {
                (recs, max)
            }
        },
    )?;
    Ok(ScanOutput {
        records,
        errors,
        events: Vec::new(),
    })
}

/// Successive minima of Delta_p(K) over ascending D, skipping p-rational
/// fields; each emitted row carries vptor, C_p and the (h, v_cl, v_w)
/// breakdown.
pub fn scan_vptor_extrema(
    p: u64,
    d_lo: u64,
    d_hi: u64,
    opts: &TorsionOpts,
    cfg: ExecCfg,
) -> Result<ScanOutput> {
    if !is_prime(p) {
        return Err(Error::Usage(format!("{p} is not prime")));
    }
    let work = |d: u64| -> Result<Option<crate::torsion::FieldRecord>> {
        if !discriminant_valid(d) {
            return Ok(None);
        }
        let m = if d % 4 == 0 { d / 4 } else { d };
        if p == 2 && m == 2 {
            return Ok(None);
        }
        Ok(Some(vptor(m, p, opts)?))
    };
    let ((records, _), errors) = map_fold(
        d_lo,
        d_hi,
        cfg,
        work,
        (Vec::new(), f64::INFINITY),
        |(mut recs, ymin), d, r| {
            if r.vptor == 0 || r.gap >= ymin {
                return (recs, ymin);
            }
            let y = r.gap;
            recs.push(ScanRecord {
                d,
                m: r.id.m,
                value: r.vptor,
                c_p: Some(r.c_p),
                gap: Some(r.gap),
                extras: Some((r.h, r.v_cl, r.v_w)),
            });
            (recs, y)
        },
    )?;
    Ok(ScanOutput {
        records,
        errors,
        events: Vec::new(),
    })
}

/// Family selector: m = a^2 p^(2 rho) + 1, or + 4 with a odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyVariant {
    Plus1,
    Plus4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SquarefreePolicy {
    /// Skip non-squarefree members (certified up to the trial bound).
    Require,
    /// Replace m by its squarefree core and carry the non-fundamental
    /// unit bound delta_p(eps) <= delta_p(eps').
    AllowCore,
}

#[derive(Debug, Clone)]
pub struct FamilyParams {
    pub a: u64,
    pub p: u64,
    pub variant: FamilyVariant,
    pub rho_lo: u32,
    pub rho_hi: u32,
    pub policy: SquarefreePolicy,
}

impl FamilyParams {
    pub fn validate(&self) -> Result<()> {
        if !is_prime(self.p) {
            return Err(Error::Usage(format!("{} is not prime", self.p)));
        }
        if self.rho_lo < 2 || self.rho_hi < self.rho_lo {
            return Err(Error::Usage("rho range must satisfy 2 <= lo <= hi".into()));
        }
        match self.variant {
            FamilyVariant::Plus1 if self.a % self.p == 0 => {
                Err(Error::Usage("family requires p not dividing a".into()))
            }
            FamilyVariant::Plus4 if self.a % 2 == 0 => {
                Err(Error::Usage("the +4 family requires odd a".into()))
            }
            FamilyVariant::Plus4 if self.p == 2 => {
                Err(Error::Usage("the +4 family requires odd p".into()))
            }
            _ => Ok(()),
        }
    }
}

/// One family member's record; vptor is filled only when the class
/// number is exactly reachable, otherwise the reason is carried.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyRecord {
    pub rho: u32,
    pub m: BigUint,
    pub d: BigUint,
    pub delta: u32,
    pub v_w: u32,
    pub vptor: Option<u32>,
    pub v_ph: Option<u32>,
    pub c_p: Option<f64>,
    pub probably_squarefree: bool,
    pub core_reduced: bool,
    pub unavailable: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct FamilyOutput {
    pub records: Vec<FamilyRecord>,
    pub events: Vec<String>,
    pub errors: Vec<FieldError>,
}

fn family_m(params: &FamilyParams, rho: u32) -> BigUint {
    let base = BigUint::from(params.p).pow(2 * rho) * params.a * params.a;
    match params.variant {
        FamilyVariant::Plus1 => base + 1u32,
        FamilyVariant::Plus4 => base + 4u32,
    }
}

fn disc_of(m: &BigUint) -> BigUint {
    if (m % 4u32) == BigUint::one() {
        m.clone()
    } else {
        m * 4u32
    }
}

/// Explicit unit a p^rho + b sqrt(m') (or halved for the +4 family) as
/// integral-basis coordinates over m'.
fn explicit_unit_coords(
    params: &FamilyParams,
    rho: u32,
    mprime: &BigUint,
    b: &BigUint,
) -> (BigUint, BigUint) {
    let apr = BigUint::from(params.p).pow(rho) * params.a;
    match params.variant {
        FamilyVariant::Plus1 => {
            if (mprime % 4u32) == BigUint::one() {
                (&apr - b, b * 2u32)
            } else {
                (apr, b.clone())
            }
        }
        FamilyVariant::Plus4 => ((apr - b) / 2u32, b.clone()),
    }
}

/// delta of an explicitly given unit, with saturation-driven growth of
/// the modulus.
pub fn delta_of_explicit_unit(
    m: &BigUint,
    coords: (&BigUint, &BigUint),
    norm_sign: i8,
    p: u64,
    opts: &TorsionOpts,
) -> Result<u32> {
    let mut n = opts.start_n;
    loop {
        let pp = PrimePower::new(p, n)?;
        let ctx = QuadCtx::new(m, &pp);
        let residue = QuadModElem::new(ctx, coords.0.clone(), coords.1.clone());
        match delta_for_unit(&residue, norm_sign, m, p, opts.casramif)? {
            ResidueVal::Exact(v) => return Ok(v),
            ResidueVal::Saturated => {
                if n >= opts.max_n {
                    return Err(Error::Capacity(format!(
                        "delta saturated at modulus {p}^{n} (ceiling {})",
                        opts.max_n
                    )));
                }
                n = (n * 2).min(opts.max_n);
            }
        }
    }
}

/// Scan the family over rho, using the closed-form unit (never the
/// continued fraction). The delta + v_w part equals rho - 1 for
/// squarefree members and is re-verified modularly.
pub fn scan_family(
    params: &FamilyParams,
    opts: &TorsionOpts,
    cfg: ExecCfg,
) -> Result<FamilyOutput> {
    params.validate()?;
    let work = |rho64: u64| -> Result<Option<FamilyRecord>> {
        let rho = rho64 as u32;
        let m = family_m(params, rho);
        let split = squarefree_core(&m);
        let is_sf = split.b == BigUint::one();
        let (mprime, b, core_reduced) = match (is_sf, params.policy) {
            (true, _) => (m.clone(), BigUint::one(), false),
            (false, SquarefreePolicy::Require) => return Ok(None),
            (false, SquarefreePolicy::AllowCore) => (split.core.clone(), split.b.clone(), true),
        };
        let d = disc_of(&mprime);
        let coords = explicit_unit_coords(params, rho, &mprime, &b);
        let delta = if core_reduced && u64::try_from(&mprime).is_ok() {
            // the reduced unit need not be fundamental; recompute from
            // the true fundamental unit when the field is in reach
            crate::torsion::delta_p(u64::try_from(&mprime).unwrap(), params.p, opts)?
        } else {
            delta_of_explicit_unit(&mprime, (&coords.0, &coords.1), -1, params.p, opts)?
        };
        let v_w = w_valuation(&mprime, params.p);
        let mut rec = FamilyRecord {
            rho,
            m: mprime.clone(),
            d: d.clone(),
            delta,
            v_w,
            vptor: None,
            v_ph: None,
            c_p: None,
            probably_squarefree: !split.certified,
            core_reduced,
            unavailable: None,
        };
        match u64::try_from(&d) {
            Ok(d64) if d64 <= opts.class_ceiling => {
                let m64 = u64::try_from(&mprime).unwrap();
                let h = crate::quadfield::class_number(d64, opts.class_ceiling)?;
                let v_cl = clc_valuation(h, m64, params.p);
                let vp = v_cl + delta + v_w;
                let (c_p, _) = cp_gap(d64, params.p, vp);
                rec.vptor = Some(vp);
                rec.v_ph = Some({
                    let mut v = 0;
                    let mut hh = h;
                    while hh % params.p == 0 {
                        hh /= params.p;
                        v += 1;
                    }
                    v
                });
                rec.c_p = Some(c_p);
            }
            _ => {
                rec.unavailable = Some("class number out of exact reach".into());
            }
        }
        Ok(Some(rec))
    };
    let (records, errors) = map_fold(
        params.rho_lo as u64,
        params.rho_hi as u64,
        cfg,
        work,
        Vec::new(),
        |mut recs: Vec<FamilyRecord>, _, r| {
            recs.push(r);
            recs
        },
    )?;
    let mut events = Vec::new();
    for r in &records {
        if !r.core_reduced && r.delta + r.v_w != r.rho - 1 {
            events.push(format!(
                "family law violated at rho={}: delta+v_w={} != rho-1",
                r.rho,
                r.delta + r.v_w
            ));
        }
        if let (Some(vp), Some(cp)) = (r.vptor, r.c_p) {
            if vp + 1 < r.rho {
                events.push(format!(
                    "family lower bound violated at rho={}: vptor={vp}",
                    r.rho
                ));
            }
            if cp >= 2.0 {
                events.push(format!(
                    "family C_p window exceeded at rho={}: C_p={cp:.4} >= 2",
                    r.rho
                ));
            }
        }
    }
    Ok(FamilyOutput {
        records,
        events,
        errors,
    })
}

/// A hit of the reciprocal construction: a(d + p^(2 rho) a) = m b^2 with
/// the unit eta = 1 + p^rho (X + Y sqrt m) rebuilt and checked exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ReciprocalHit {
    pub p: u64,
    pub rho: u32,
    pub a: u64,
    pub b: BigUint,
    pub m: BigUint,
    pub d: BigUint,
    pub delta_eta: u32,
    pub vptor: Option<u32>,
    pub v_ph: Option<u32>,
    pub c_p: Option<f64>,
    pub certified: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ReciprocalOutput {
    pub hits: Vec<ReciprocalHit>,
    pub errors: Vec<FieldError>,
}

/// Search a in [a_lo, a_hi] for units 1 + p^rho(X + Y sqrt m); emits
/// successive minima of D (or every hit with `emit_all`). The defining
/// identity and N(eta) = +1 are asserted exactly on every hit.
pub fn reciprocal_search(
    p: u64,
    rho: u32,
    a_lo: u64,
    a_hi: u64,
    emit_all: bool,
    opts: &TorsionOpts,
    cfg: ExecCfg,
) -> Result<ReciprocalOutput> {
    if rho < 2 {
        return Err(Error::Usage("rho must be >= 2".into()));
    }
    if !is_prime(p) {
        return Err(Error::Usage(format!("{p} is not prime")));
    }
    let dconst: u32 = if p == 2 { 1 } else { 2 };
    let p2r = BigUint::from(p).pow(2 * rho);
    let work = |a: u64| -> Result<Option<ReciprocalHit>> {
        let big_b = (&p2r * a + dconst) * a;
        let split: CoreSplit = squarefree_core(&big_b);
        let m = split.core.clone();
        if m < BigUint::from(2u32) {
            return Ok(None);
        }
        let b = split.b.clone();
        // defining identity, exact
        if &m * &b * &b != big_b {
            return Err(Error::Integrity(format!(
                "core split broke the identity at a={a}"
            )));
        }
        // eta coordinates over sqrt(m); program rho maps to exponent
        // rho+1 in the p = 2 unit
        let (xs, ys) = if p == 2 {
            (
                (&p2r * a) * 2u32 + 1u32,
                &b * BigUint::from(2u32).pow(rho + 1),
            )
        } else {
            (&p2r * a + 1u32, &b * BigUint::from(p).pow(rho))
        };
        // N(eta) = xs^2 - m ys^2 must be exactly +1
        if &xs * &xs != &m * &ys * &ys + 1u32 {
            return Err(Error::Integrity(format!(
                "constructed eta is not a unit at a={a}"
            )));
        }
        let coords = if (&m % 4u32) == BigUint::one() {
            (&xs - &ys, &ys * 2u32)
        } else {
            (xs.clone(), ys.clone())
        };
        let delta_eta = delta_of_explicit_unit(&m, (&coords.0, &coords.1), 1, p, opts)?;
        let d = disc_of(&m);
        let mut hit = ReciprocalHit {
            p,
            rho,
            a,
            b,
            m: m.clone(),
            d: d.clone(),
            delta_eta,
            vptor: None,
            v_ph: None,
            c_p: None,
            certified: split.certified,
        };
        if let (Ok(d64), Ok(m64)) = (u64::try_from(&d), u64::try_from(&m)) {
            if d64 <= opts.class_ceiling {
                let r = vptor(m64, p, opts)?;
                hit.vptor = Some(r.vptor);
                hit.v_ph = Some({
                    let mut v = 0;
                    let mut hh = r.h;
                    while hh % p == 0 {
                        hh /= p;
                        v += 1;
                    }
                    v
                });
                hit.c_p = Some(r.c_p);
            }
        }
        Ok(Some(hit))
    };
    let ((hits, _), errors) = map_fold(
        a_lo,
        a_hi,
        cfg,
        work,
        (Vec::new(), None::<BigUint>),
        |(mut hits, dmin), _, hit| {
            let better = dmin.as_ref().map_or(true, |d| hit.d < *d);
            if emit_all || better {
                let nd = if better {
                    Some(hit.d.clone())
                } else {
                    dmin.clone()
                };
                hits.push(hit);
                (hits, nd)
            } else {
                (hits, dmin)
            }
        },
    )?;
    Ok(ReciprocalOutput { hits, errors })
}

/// Fixed-size quadratic residue arithmetic mod p^2 < 2^62 for the huge-p
/// scan hot loop.
#[derive(Clone, Copy)]
struct SmallQme {
    x: u64,
    y: u64,
}

#[derive(Clone, Copy)]
struct SmallCtx {
    q: u64,
    m_red: u64,
    half_c: u64,
    half: bool,
}

impl SmallCtx {
    fn mul(&self, a: SmallQme, b: SmallQme) -> SmallQme {
        let q = self.q;
        let xx = mul_mod_u64(a.x, b.x, q);
        let yy = mul_mod_u64(a.y, b.y, q);
        let cross = (mul_mod_u64(a.x, b.y, q) + mul_mod_u64(a.y, b.x, q)) % q;
        if self.half {
            SmallQme {
                x: (xx + mul_mod_u64(yy, self.half_c, q)) % q,
                y: (cross + yy) % q,
            }
        } else {
            SmallQme {
                x: (xx + mul_mod_u64(yy, self.m_red, q)) % q,
                y: cross,
            }
        }
    }

    fn pow(&self, e: SmallQme, mut k: u64) -> SmallQme {
        let mut r = SmallQme { x: 1, y: 0 };
        let mut base = e;
        while k > 0 {
            if k & 1 == 1 {
                r = self.mul(r, base);
            }
            base = self.mul(base, base);
            k >>= 1;
        }
        r
    }
}

/// Scan for fields with delta_p(eps) >= 1, i.e. eps^(p-s) = u (mod p^2),
/// for a large prime p. Fields with p | D go through the ramified norm
/// test instead. Emits the flagged discriminants in ascending order.
pub fn huge_p_regulator_scan(p: u64, d_lo: u64, d_hi: u64, cfg: ExecCfg) -> Result<ScanOutput> {
    if !is_prime(p) {
        return Err(Error::Usage(format!("{p} is not prime")));
    }
    let p2 = p
        .checked_mul(p)
        .filter(|&q| q < (1u64 << 62))
        .ok_or_else(|| Error::Capacity(format!("p^2 overflows the scan modulus for p={p}")))?;
    let work = |d: u64| -> Result<Option<u64>> {
        if !discriminant_valid(d) {
            return Ok(None);
        }
        let m = if d % 4 == 0 { d / 4 } else { d };
        if p == 2 && m == 2 {
            return Ok(None);
        }
        if m % p == 0 {
            // ramified: delta >= 1 iff v_p(N(eps^(p-1) - 1)) >= 3
            let pp = PrimePower::new(p, 8)?;
            let unit = crate::quadfield::fundamental_unit(QuadFieldId::from_m(m)?, &pp)?;
            let v = unit
                .residue
                .unwrap()
                .pow(p - 1)
                .sub_scalar(1)
                .norm_valuation();
            return Ok(match v {
                ResidueVal::Saturated => Some(m),
                ResidueVal::Exact(v) if v >= 3 => Some(m),
                _ => None,
            });
        }
        let s = kronecker_symbol((d % p) as i64, p);
        let half = m % 4 == 1;
        let ctx = SmallCtx {
            q: p2,
            m_red: m % p2,
            half_c: if half { ((m - 1) / 4) % p2 } else { 0 },
            half,
        };
        let (eps, norm_sign) = cf_unit_small(m, &ctx)?;
        let k = if s == 1 { p - 1 } else { p + 1 };
        let u = if s == 1 || norm_sign == 1 {
            1u64
        } else {
            p2 - 1
        };
        let a = ctx.pow(eps, k);
        Ok((a.x == u % p2 && a.y == 0).then_some(m))
    };
    let (records, errors) = map_fold(
        d_lo,
        d_hi,
        cfg,
        work,
        Vec::new(),
        |mut recs: Vec<ScanRecord>, d, m| {
            recs.push(ScanRecord {
                d,
                m,
                value: 1,
                c_p: None,
                gap: None,
                extras: None,
            });
            recs
        },
    )?;
    Ok(ScanOutput {
        records,
        errors,
        events: Vec::new(),
    })
}

/// Continued-fraction fundamental unit with convergents mod p^2 only.
fn cf_unit_small(m: u64, ctx: &SmallCtx) -> Result<(SmallQme, i8)> {
    let s = isqrt_u64(m);
    let q = ctx.q;
    let (p0, q0) = if ctx.half { (1u64, 2u64) } else { (0u64, 1u64) };
    let a0 = (p0 + s) / q0;
    let (mut cp_prev, mut cp_cur) = (1u64 % q, a0 % q);
    let (mut cq_prev, mut cq_cur) = (0u64, 1u64 % q);
    let p1 = a0 * q0 - p0;
    let q1 = (m - p1 * p1) / q0;
    let (mut pp, mut qq) = (p1, q1);
    let mut steps = 0u64;
    loop {
        let a = (pp + s) / qq;
        let np = (mul_mod_u64(a % q, cp_cur, q) + cp_prev) % q;
        let nq = (mul_mod_u64(a % q, cq_cur, q) + cq_prev) % q;
        cp_prev = cp_cur;
        cp_cur = np;
        cq_prev = cq_cur;
        cq_cur = nq;
        steps += 1;
        let pn = a * qq - pp;
        let qn = (m - pn * pn) / qq;
        pp = pn;
        qq = qn;
        if (pp, qq) == (p1, q1) {
            break;
        }
        if steps > 2_000_000_000 {
            return Err(Error::Capacity(format!("period cap exceeded at m={m}")));
        }
    }
    let norm_sign: i8 = if steps % 2 == 0 { 1 } else { -1 };
    let eps = if ctx.half {
        SmallQme {
            x: (cp_prev + q - cq_prev) % q,
            y: cq_prev,
        }
    } else {
        SmallQme {
            x: cp_prev,
            y: cq_prev,
        }
    };
    Ok((eps, norm_sign))
}

/// Used by delta scans to report which case a field falls in (CLI aid).
pub fn case_of(m: u64, p: u64) -> Result<DeltaCase> {
    classify(&BigUint::from(m), p)
}

/// Convenience: the program convention toggle threaded into options.
pub fn opts_with_convention(base: &TorsionOpts, convention: Casramif) -> TorsionOpts {
    TorsionOpts {
        casramif: convention,
        ..*base
    }
}
