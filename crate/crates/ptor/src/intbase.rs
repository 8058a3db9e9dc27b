//! Integer substrate: primality, factoring, Kronecker symbols, p-adic
//! valuations, and arithmetic in the quadratic order O_m modulo prime
//! powers. Everything here is immutable after construction and safe to
//! share between workers.

use std::sync::{Arc, OnceLock};

use num_bigint::BigUint;

use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Trial-division bound of the smallest-prime-factor sieve.
pub const SPF_BOUND: u64 = 10_000_000;

static SPF: OnceLock<Vec<u32>> = OnceLock::new();

/// Smallest-prime-factor table for 0..SPF_BOUND, built once on first use.
pub fn spf_sieve() -> &'static [u32] {
    SPF.get_or_init(|| {
        let n = SPF_BOUND as usize;
        let mut spf = vec![0u32; n + 1];
        let mut i = 2usize;
        while i <= n {
            if spf[i] == 0 {
                let mut j = i;
                while j <= n {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
            i += 1;
        }
        spf
    })
}

/// Deterministic Miller-Rabin, exact for all u64.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'wit: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_u64(x, x, n);
            if x == n - 1 {
                continue 'wit;
            }
        }
        return false;
    }
    true
}

pub fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod_u64(mut b: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut r = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod_u64(r, b, m);
        }
        b = mul_mod_u64(b, b, m);
        e >>= 1;
    }
    r
}

/// Floor of sqrt(n), exact.
pub fn isqrt_u64(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut x = (n as f64).sqrt() as u64;
    while x.checked_mul(x).map_or(true, |v| v > n) {
        x -= 1;
    }
    while (x + 1).checked_mul(x + 1).map_or(false, |v| v <= n) {
        x += 1;
    }
    x
}

/// Pollard rho (Brent variant) for one nontrivial factor of composite n.
fn rho_factor(n: u64) -> u64 {
    if n % 2 == 0 {
        return 2;
    }
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod_u64(x, x, n) + c) % n;
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd_u64(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

pub fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Full factorization of n as (prime, exponent) pairs, primes ascending.
pub fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out: Vec<(u64, u32)> = Vec::new();
    if n <= 1 {
        return out;
    }
    if n <= SPF_BOUND {
        let spf = spf_sieve();
        while n > 1 {
            let p = spf[n as usize] as u64;
            let mut e = 0u32;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        return out;
    }
    let mut stack = vec![n];
    let mut primes: Vec<u64> = Vec::new();
    while let Some(v) = stack.pop() {
        if v == 1 {
            continue;
        }
        if is_prime(v) {
            primes.push(v);
            continue;
        }
        // peel small factors first so rho only sees hard composites
        let mut v = v;
        let mut reduced = false;
        for p in [2u64, 3, 5, 7, 11, 13] {
            while v % p == 0 {
                primes.push(p);
                v /= p;
                reduced = true;
            }
        }
        if reduced {
            stack.push(v);
            continue;
        }
        let d = rho_factor(v);
        stack.push(d);
        stack.push(v / d);
    }
    primes.sort_unstable();
    for p in primes {
        if let Some(last) = out.last_mut() {
            if last.0 == p {
                last.1 += 1;
                continue;
            }
        }
        out.push((p, 1));
    }
    out
}

/// n squarefree? Exact for any u64 (factors completely).
pub fn is_squarefree_u64(n: u64) -> bool {
    if n == 0 {
        return false;
    }
    factor_u64(n).iter().all(|&(_, e)| e == 1)
}

/// Squarefree decomposition n = core * b^2 with core squarefree.
/// `certified` is false when the unfactored remainder of a huge input was
/// only checked squarefree up to the trial bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreSplit {
    pub core: BigUint,
    pub b: BigUint,
    pub certified: bool,
}

pub fn squarefree_core_u64(n: u64) -> (u64, u64) {
    let mut core = 1u64;
    let mut b = 1u64;
    for (p, e) in factor_u64(n) {
        if e % 2 == 1 {
            core *= p;
        }
        b *= p.pow(e / 2);
    }
    (core, b)
}

/// Squarefree core of an arbitrary-size integer. Small primes are pulled
/// out by trial division; any leftover cofactor is tested for perfect
/// squareness and otherwise assumed squarefree (flagged uncertified).
pub fn squarefree_core(n: &BigUint) -> CoreSplit {
    const TRIAL: u64 = 1_000_000;
    if let Ok(small) = u64::try_from(n) {
        let (c, b) = squarefree_core_u64(small);
        return CoreSplit {
            core: BigUint::from(c),
            b: BigUint::from(b),
            certified: true,
        };
    }
    let mut rest = n.clone();
    let mut core = BigUint::one();
    let mut b = BigUint::one();
    let mut p = 2u64;
    while p <= TRIAL {
        let pb = BigUint::from(p);
        if (&rest % &pb).is_zero() {
            let mut e = 0u32;
            while (&rest % &pb).is_zero() {
                rest /= &pb;
                e += 1;
            }
            if e % 2 == 1 {
                core *= &pb;
            }
            b *= pb.pow(e / 2);
        }
        p = if p == 2 { 3 } else { p + 2 };
        if let Ok(small) = u64::try_from(&rest) {
            let (c, bb) = squarefree_core_u64(small);
            core *= BigUint::from(c);
            b *= BigUint::from(bb);
            return CoreSplit {
                core,
                b,
                certified: true,
            };
        }
    }
    if rest > BigUint::one() {
        let s = rest.sqrt();
        if &s * &s == rest {
            b *= s;
        } else {
            core *= &rest;
        }
        // rest not fully factored: squarefree only up to the trial bound
        return CoreSplit {
            core,
            b,
            certified: false,
        };
    }
    CoreSplit {
        core,
        b,
        certified: true,
    }
}

/// p-adic valuation result; zero input is the distinct infinite outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Valuation {
    Finite(u32),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<u32> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }
}

pub fn padic_valuation(n: i64, p: u64) -> Valuation {
    if n == 0 {
        return Valuation::Infinite;
    }
    let mut v = 0u32;
    let mut n = n.unsigned_abs();
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    Valuation::Finite(v)
}

pub fn padic_valuation_big(n: &BigUint, p: u64) -> Valuation {
    if n.is_zero() {
        return Valuation::Infinite;
    }
    let pb = BigUint::from(p);
    let mut v = 0u32;
    let mut n = n.clone();
    while (&n % &pb).is_zero() {
        n /= &pb;
        v += 1;
    }
    Valuation::Finite(v)
}

/// Kronecker symbol (a|n) for n >= 1, fully multiplicative in both
/// arguments; (a|2) depends on a mod 8.
pub fn kronecker_symbol(a: i64, n: u64) -> i32 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut n = n;
    let mut acc = 1i32;
    while n % 2 == 0 {
        n /= 2;
        if a % 2 == 0 {
            return 0;
        }
        match a.rem_euclid(8) {
            3 | 5 => acc = -acc,
            _ => {}
        }
    }
    if n == 1 {
        return acc;
    }
    // Jacobi symbol on the odd part
    let mut a = (a.rem_euclid(n as i64)) as u64;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if n % 8 == 3 || n % 8 == 5 {
                acc = -acc;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            acc = -acc;
        }
        a %= n;
    }
    if n == 1 {
        acc
    } else {
        0
    }
}

/// Prime power modulus p^N.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimePower {
    pub p: u64,
    pub n: u32,
    q: BigUint,
}

impl PrimePower {
    pub fn new(p: u64, n: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::Usage(format!("{p} is not prime")));
        }
        if n == 0 {
            return Err(Error::Usage("exponent must be >= 1".into()));
        }
        Ok(PrimePower {
            p,
            n,
            q: BigUint::from(p).pow(n),
        })
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }
}

/// Integral-basis tag: omega = (1+sqrt m)/2 when m = 1 (mod 4), else
/// omega = sqrt m. Chosen so coordinates stay integral at p = 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Sqrt,
    HalfPlus,
}

pub fn basis_for(m: &BigUint) -> Basis {
    if (m % 4u32) == BigUint::one() {
        Basis::HalfPlus
    } else {
        Basis::Sqrt
    }
}

/// Shared context for elements of O_m mod p^n: the reduced m, the basis,
/// and for the half-integral basis the constant c = (m-1)/4 with
/// omega^2 = c + omega.
#[derive(Debug, PartialEq, Eq)]
pub struct QuadCtx {
    pub p: u64,
    pub n_eff: u32,
    q: BigUint,
    pub basis: Basis,
    m_red: BigUint,
    half_c: BigUint,
}

impl QuadCtx {
    pub fn new(m: &BigUint, modulus: &PrimePower) -> Arc<QuadCtx> {
        let basis = basis_for(m);
        let q = modulus.q().clone();
        let m_red = m % &q;
        let half_c = match basis {
            Basis::HalfPlus => ((m - 1u32) / 4u32) % &q,
            Basis::Sqrt => BigUint::zero(),
        };
        Arc::new(QuadCtx {
            p: modulus.p,
            n_eff: modulus.n,
            q,
            basis,
            m_red,
            half_c,
        })
    }

    fn shrink(&self, k: u32) -> Arc<QuadCtx> {
        let n_eff = self.n_eff - k;
        let q = BigUint::from(self.p).pow(n_eff);
        Arc::new(QuadCtx {
            p: self.p,
            n_eff,
            m_red: &self.m_red % &q,
            half_c: &self.half_c % &q,
            q,
            basis: self.basis,
        })
    }
}

/// Outcome of a valuation read on residues mod p^n: either exact, or
/// saturated (the residue vanished, so only a lower bound is known and
/// the modulus must be raised).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidueVal {
    Exact(u32),
    Saturated,
}

/// Element x + y*omega of O_m reduced mod p^n.
#[derive(Debug, Clone)]
pub struct QuadModElem {
    ctx: Arc<QuadCtx>,
    pub x: BigUint,
    pub y: BigUint,
}

impl PartialEq for QuadModElem {
    fn eq(&self, other: &Self) -> bool {
        self.x == other.x && self.y == other.y && self.ctx == other.ctx
    }
}

impl QuadModElem {
    pub fn new(ctx: Arc<QuadCtx>, x: BigUint, y: BigUint) -> Self {
        let x = x % &ctx.q;
        let y = y % &ctx.q;
        QuadModElem { ctx, x, y }
    }

    pub fn one(ctx: Arc<QuadCtx>) -> Self {
        QuadModElem {
            x: BigUint::one(),
            y: BigUint::zero(),
            ctx,
        }
    }

    pub fn ctx(&self) -> &Arc<QuadCtx> {
        &self.ctx
    }

    pub fn n_eff(&self) -> u32 {
        self.ctx.n_eff
    }

    pub fn mul(&self, other: &QuadModElem) -> QuadModElem {
        debug_assert_eq!(self.ctx, other.ctx);
        let q = &self.ctx.q;
        let xx = &self.x * &other.x;
        let yy = &self.y * &other.y;
        let cross = &self.x * &other.y + &other.x * &self.y;
        match self.ctx.basis {
            Basis::Sqrt => QuadModElem {
                x: (xx + &yy * &self.ctx.m_red) % q,
                y: cross % q,
                ctx: self.ctx.clone(),
            },
            Basis::HalfPlus => QuadModElem {
                x: (xx + &yy * &self.ctx.half_c) % q,
                y: (cross + yy) % q,
                ctx: self.ctx.clone(),
            },
        }
    }

    /// e^k by square-and-multiply, O(log k) multiplications.
    pub fn pow(&self, k: u64) -> QuadModElem {
        let mut r = QuadModElem::one(self.ctx.clone());
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                r = r.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        r
    }

    /// Subtract small signed integer u (added mod q when negative).
    pub fn sub_scalar(&self, u: i64) -> QuadModElem {
        let q = &self.ctx.q;
        let red = if u >= 0 {
            BigUint::from(u as u64) % q
        } else {
            (q - (BigUint::from(u.unsigned_abs()) % q)) % q
        };
        QuadModElem {
            x: (&self.x + q - red) % q,
            y: self.y.clone(),
            ctx: self.ctx.clone(),
        }
    }

    /// Field norm N(x + y*omega) mod q.
    pub fn norm(&self) -> BigUint {
        let q = &self.ctx.q;
        match self.ctx.basis {
            Basis::Sqrt => {
                let a = &self.x * &self.x % q;
                let b = &self.y * &self.y % q * &self.ctx.m_red % q;
                (a + q - b) % q
            }
            Basis::HalfPlus => {
                // N = x^2 + xy - c y^2
                let a = (&self.x * &self.x + &self.x * &self.y) % q;
                let b = &self.y * &self.y % q * &self.ctx.half_c % q;
                (a + q - b) % q
            }
        }
    }

    /// Exact division of the element by p^k; errors if a coordinate is
    /// not divisible. The effective modulus drops to p^(n-k).
    pub fn div_exact_pk(&self, k: u32) -> Result<QuadModElem> {
        if k == 0 {
            return Ok(self.clone());
        }
        if k >= self.ctx.n_eff {
            return Err(Error::Capacity(format!(
                "division by {}^{} exhausts modulus {}^{}",
                self.ctx.p, k, self.ctx.p, self.ctx.n_eff
            )));
        }
        let pk = BigUint::from(self.ctx.p).pow(k);
        if !(&self.x % &pk).is_zero() || !(&self.y % &pk).is_zero() {
            return Err(Error::Integrity(format!(
                "inexact division by {}^{}",
                self.ctx.p, k
            )));
        }
        let ctx = self.ctx.shrink(k);
        Ok(QuadModElem {
            x: (&self.x / &pk) % &ctx.q,
            y: (&self.y / &pk) % &ctx.q,
            ctx,
        })
    }

    /// min(v_p(x), v_p(y)) on the integral-basis coordinates, or
    /// Saturated when both residues vanish mod p^n.
    pub fn coeff_valuation(&self) -> ResidueVal {
        let vx = padic_valuation_big(&self.x, self.ctx.p);
        let vy = padic_valuation_big(&self.y, self.ctx.p);
        match (vx, vy) {
            (Valuation::Infinite, Valuation::Infinite) => ResidueVal::Saturated,
            (Valuation::Finite(a), Valuation::Infinite) => ResidueVal::Exact(a),
            (Valuation::Infinite, Valuation::Finite(b)) => ResidueVal::Exact(b),
            (Valuation::Finite(a), Valuation::Finite(b)) => ResidueVal::Exact(a.min(b)),
        }
    }

    /// v_p of the norm residue, Saturated if it vanishes mod p^n.
    pub fn norm_valuation(&self) -> ResidueVal {
        match padic_valuation_big(&self.norm(), self.ctx.p) {
            Valuation::Infinite => ResidueVal::Saturated,
            Valuation::Finite(v) => ResidueVal::Exact(v),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn qme(m: u64, p: u64, n: u32, x: u64, y: u64) -> QuadModElem {
        let pp = PrimePower::new(p, n).unwrap();
        let ctx = QuadCtx::new(&BigUint::from(m), &pp);
        QuadModElem::new(ctx, BigUint::from(x), BigUint::from(y))
    }

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker_symbol(5, 5), 0);
        assert_eq!(kronecker_symbol(2, 7), 1); // 2 = 3^2 mod 7
        assert_eq!(kronecker_symbol(3, 5), -1); // squares mod 5 are {1,4}
        assert_eq!(kronecker_symbol(-1, 1), 1);
    }

    #[test]
    fn kronecker_matches_euler_criterion_on_odd_primes() {
        for p in [3u64, 5, 7, 11, 13, 17, 19, 23, 29, 101, 199] {
            for a in -50i64..=50 {
                let ks = kronecker_symbol(a, p);
                let am = a.rem_euclid(p as i64) as u64;
                let expected = if am == 0 {
                    0
                } else {
                    let e = pow_mod_u64(am, (p - 1) / 2, p);
                    if e == 1 {
                        1
                    } else {
                        -1
                    }
                };
                assert_eq!(ks, expected, "a={a} p={p}");
            }
        }
    }

    #[test]
    fn squarefree_core_examples() {
        assert_eq!(squarefree_core_u64(12), (3, 2));
        assert_eq!(squarefree_core_u64(17), (17, 1));
        assert_eq!(squarefree_core_u64(250001), (89, 53));
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(padic_valuation(8, 2), Valuation::Finite(3));
        assert_eq!(padic_valuation(15, 5), Valuation::Finite(1));
        assert_eq!(padic_valuation(-27, 3), Valuation::Finite(3));
        assert_eq!(padic_valuation(0, 7), Valuation::Infinite);
    }

    #[test]
    fn qme_pow_basics() {
        let e = qme(2, 3, 4, 1, 1); // 1 + sqrt(2) mod 81
        let id = e.pow(0);
        assert_eq!(id.x, BigUint::from(1u32));
        assert_eq!(id.y, BigUint::from(0u32));
        assert_eq!(e.pow(1), e);
        // (1+sqrt 2)^2 = 3 + 2 sqrt 2
        let sq = e.pow(2);
        assert_eq!(sq.x, BigUint::from(3u32));
        assert_eq!(sq.y, BigUint::from(2u32));
    }

    #[test]
    fn coeff_valuation_examples() {
        assert_eq!(qme(2, 3, 4, 0, 0).coeff_valuation(), ResidueVal::Saturated);
        assert_eq!(qme(2, 3, 4, 9, 3).coeff_valuation(), ResidueVal::Exact(1));
        assert_eq!(qme(2, 5, 3, 5, 0).coeff_valuation(), ResidueVal::Exact(1));
    }

    #[test]
    fn div_exact_requires_divisibility() {
        let e = qme(2, 2, 6, 8, 12);
        let d = e.div_exact_pk(2).unwrap();
        assert_eq!(d.x, BigUint::from(2u32));
        assert_eq!(d.y, BigUint::from(3u32));
        assert_eq!(d.n_eff(), 4);
        assert!(qme(2, 2, 6, 8, 13).div_exact_pk(2).is_err());
    }

    #[test]
    fn is_prime_spot_checks() {
        assert!(is_prime(2) && is_prime(3) && is_prime(1009) && is_prime(13599893));
        assert!(!is_prime(1) && !is_prime(4194305) && !is_prime(250001));
        assert!(is_prime(18446744073709551557)); // largest u64 prime
    }

    #[test]
    fn factor_large_semiprime() {
        let n = 1000003u64 * 998117;
        let f = factor_u64(n);
        assert_eq!(f, vec![(998117, 1), (1000003, 1)]);
    }

    proptest! {
        #[test]
        fn kronecker_of_square_is_0_or_1(a in 1i64..10_000, n in 1u64..10_000) {
            let k = kronecker_symbol(a * a, n);
            prop_assert!(k == 0 || k == 1);
            if gcd_u64(a.unsigned_abs(), n) == 1 {
                prop_assert_eq!(k, 1);
            }
        }

        #[test]
        fn core_roundtrip(n in 1u64..5_000_000) {
            let (core, b) = squarefree_core_u64(n);
            prop_assert_eq!(core * b * b, n);
            // core has no square factor up to 10^4
            for d in 2u64..=100 {
                prop_assert!(core % (d * d) != 0);
            }
        }

        #[test]
        fn pow_matches_iterated_mul(m in 2u64..200, x in 0u64..100, y in 1u64..100, k in 0u64..64) {
            let e = qme(m, 3, 8, x, y);
            let mut acc = QuadModElem::one(e.ctx().clone());
            for _ in 0..k {
                acc = acc.mul(&e);
            }
            prop_assert_eq!(e.pow(k), acc);
        }

        #[test]
        fn mul_commutes_and_associates(m in 2u64..300, x1 in 0u64..300, y1 in 0u64..300,
                                       x2 in 0u64..300, y2 in 0u64..300,
                                       x3 in 0u64..300, y3 in 0u64..300) {
            let a = qme(m, 7, 4, x1, y1);
            let b = qme(m, 7, 4, x2, y2);
            let c = qme(m, 7, 4, x3, y3);
            prop_assert_eq!(a.mul(&b), b.mul(&a));
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn norm_is_multiplicative(m in 2u64..500, x1 in 0u64..500, y1 in 0u64..500,
                                  x2 in 0u64..500, y2 in 0u64..500) {
            let a = qme(m, 5, 6, x1, y1);
            let b = qme(m, 5, 6, x2, y2);
            let lhs = a.mul(&b).norm();
            let q = BigUint::from(5u64).pow(6);
            let rhs = (a.norm() * b.norm()) % q;
            prop_assert_eq!(lhs, rhs);
        }
    }
}
