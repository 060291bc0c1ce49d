//! Exact number-theoretic primitives: Kronecker symbol, Bernoulli numbers,
//! Dirichlet L-values of quadratic characters, fundamental discriminants,
//! twisted divisor sums, and the [`SymbolicConstant`] bookkeeping type that
//! tracks powers of pi and square roots so that transcendental factors can be
//! cancelled exactly.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Integer helpers
// ---------------------------------------------------------------------------

/// Kronecker symbol (a|b) with the usual conventions at 0, -1 and 2.
pub fn kronecker(a: i128, b: i128) -> i32 {
    if b == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    if a % 2 == 0 && b % 2 == 0 {
        return 0;
    }
    let mut b = b;
    let mut acc = 1i32;
    if b < 0 {
        b = -b;
        if a < 0 {
            acc = -acc;
        }
    }
    let t = b.trailing_zeros();
    b >>= t;
    if t % 2 == 1 {
        acc *= kronecker_mod8(a);
    }
    // now b is odd and positive: Jacobi with reciprocity
    let mut a = a.rem_euclid(b);
    while a != 0 {
        let s = a.trailing_zeros();
        a >>= s;
        if s % 2 == 1 {
            let bm8 = b % 8;
            if bm8 == 3 || bm8 == 5 {
                acc = -acc;
            }
        }
        if a % 4 == 3 && b % 4 == 3 {
            acc = -acc;
        }
        std::mem::swap(&mut a, &mut b);
        a %= b;
    }
    if b == 1 {
        acc
    } else {
        0
    }
}

fn kronecker_mod8(a: i128) -> i32 {
    match a.rem_euclid(8) {
        1 | 7 => 1,
        3 | 5 => -1,
        _ => 0,
    }
}

/// Trial-division factorization. Fine for the magnitudes this crate meets
/// (discriminant-sized inputs, divisor-sum arguments up to ~10^12).
pub fn factorize(n: u128) -> BTreeMap<u64, u32> {
    let mut map = BTreeMap::new();
    let mut n = n;
    for p in [2u128, 3, 5] {
        while n % p == 0 {
            *map.entry(p as u64).or_insert(0) += 1;
            n /= p;
        }
    }
    let mut d = 7u128;
    let steps = [4u128, 2, 4, 2, 4, 6, 2, 6];
    let mut i = 0;
    while d * d <= n {
        if n % d == 0 {
            *map.entry(d as u64).or_insert(0) += 1;
            n /= d;
        } else {
            d += steps[i];
            i = (i + 1) % steps.len();
        }
    }
    if n > 1 {
        *map.entry(n as u64).or_insert(0) += 1;
    }
    map
}

/// All divisors of a factored integer, unsorted.
pub fn divisors_from_factors(factors: &BTreeMap<u64, u32>) -> Vec<u128> {
    let mut divs = vec![1u128];
    for (&p, &e) in factors {
        let mut next = Vec::with_capacity(divs.len() * (e as usize + 1));
        for d in &divs {
            let mut pk = 1u128;
            for _ in 0..=e {
                next.push(d * pk);
                pk *= p as u128;
            }
        }
        divs = next;
    }
    divs
}

/// Moebius function of a factored integer.
pub fn moebius_from_factors(factors: &BTreeMap<u64, u32>) -> i32 {
    if factors.values().any(|&e| e > 1) {
        0
    } else if factors.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Splits n > 0 as s^2 * q with q squarefree; returns (q, s).
pub fn squarefree_decompose(n: u128) -> (u128, u128) {
    let mut q = 1u128;
    let mut s = 1u128;
    for (p, e) in factorize(n) {
        if e % 2 == 1 {
            q *= p as u128;
        }
        for _ in 0..e / 2 {
            s *= p as u128;
        }
    }
    (q, s)
}

/// Primes up to and including `n`.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return vec![];
    }
    let mut sieve = vec![true; (n + 1) as usize];
    sieve[0] = false;
    sieve[1] = false;
    let mut p = 2usize;
    while p * p <= n as usize {
        if sieve[p] {
            let mut q = p * p;
            while q <= n as usize {
                sieve[q] = false;
                q += p;
            }
        }
        p += 1;
    }
    sieve
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| if b { Some(i as u64) } else { None })
        .collect()
}

/// True if d is 1 or the discriminant of a quadratic number field.
pub fn is_fundamental_discriminant(d: i128) -> bool {
    if d == 0 {
        return false;
    }
    if d == 1 {
        return true;
    }
    let m = d.rem_euclid(4);
    if m == 1 {
        let (q, s) = squarefree_decompose(d.unsigned_abs());
        s == 1 && q == d.unsigned_abs()
    } else if m == 0 {
        let h = d / 4;
        let hm = h.rem_euclid(4);
        if hm != 2 && hm != 3 {
            return false;
        }
        let (q, s) = squarefree_decompose(h.unsigned_abs());
        s == 1 && q == h.unsigned_abs()
    } else {
        false
    }
}

/// Factors a discriminant-form integer D (nonzero, 0 or 1 mod 4) as
/// D = fundamental * f^2 and returns (fundamental, f).
pub fn core_discriminant(d: i128) -> Result<(i128, u128)> {
    if d == 0 || !matches!(d.rem_euclid(4), 0 | 1) {
        return Err(Error::InvalidDiscriminant(d));
    }
    let (q, s) = squarefree_decompose(d.unsigned_abs());
    let d0 = if d < 0 { -(q as i128) } else { q as i128 };
    if d0.rem_euclid(4) == 1 {
        Ok((d0, s))
    } else {
        // s is even here because 4 | D while the squarefree kernel is 2 or 3 mod 4
        Ok((4 * d0, s / 2))
    }
}

/// p-adic valuation of a nonzero big integer.
pub fn ord_p_bigint(x: &BigInt, p: u64) -> u32 {
    assert!(!x.is_zero());
    let p = BigInt::from(p);
    let mut x = x.clone();
    let mut v = 0;
    loop {
        let (q, r) = num_integer::Integer::div_rem(&x, &p);
        if r.is_zero() {
            v += 1;
            x = q;
        } else {
            return v;
        }
    }
}

/// p-adic valuation of a rational; `None` encodes the valuation of zero.
pub fn ord_p_ratio(x: &BigRational, p: u64) -> Option<i64> {
    if x.is_zero() {
        return None;
    }
    Some(ord_p_bigint(x.numer(), p) as i64 - ord_p_bigint(x.denom(), p) as i64)
}

/// Modular inverse mod m (m > 1), requiring gcd(a, m) = 1.
pub fn inv_mod(a: i128, m: i128) -> i128 {
    let (mut r0, mut r1) = (m, a.rem_euclid(m));
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    assert!(r0 == 1, "inv_mod of non-unit {} mod {}", a, m);
    t0.rem_euclid(m)
}

/// Reduces a rational with denominator prime to p into Z/m where m = p^k,
/// i.e. returns num * den^{-1} mod p^k. Panics if the denominator shares p.
pub fn ratio_mod_p_power(x: &BigRational, p: u64, modulus: u128) -> u128 {
    let m = BigInt::from(modulus);
    let num = num_integer::Integer::mod_floor(x.numer(), &m);
    let den = num_integer::Integer::mod_floor(x.denom(), &m);
    let den_i = den.to_i128().unwrap();
    assert!(den_i % p as i128 != 0, "denominator not prime to {}", p);
    let inv = inv_mod(den_i, modulus as i128);
    let num_i = num.to_i128().unwrap();
    (num_i as u128 * inv as u128) % modulus
}

/// Exact binomial coefficient.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k {
        num *= BigInt::from(n - i);
        den *= BigInt::from(i + 1);
    }
    num / den
}

/// Serializes a rational as "p/q", or just "p" when it is an integer.
pub fn fmt_ratio(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses the output of [`fmt_ratio`].
pub fn parse_ratio(s: &str) -> Option<BigRational> {
    let mut parts = s.splitn(2, '/');
    let num: BigInt = parts.next()?.trim().parse().ok()?;
    match parts.next() {
        None => Some(BigRational::from_integer(num)),
        Some(d) => {
            let den: BigInt = d.trim().parse().ok()?;
            if den.is_zero() {
                None
            } else {
                Some(BigRational::new(num, den))
            }
        }
    }
}

pub fn big_ratio(num: i128, den: i128) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn big_int_ratio(num: i128) -> BigRational {
    BigRational::from_integer(BigInt::from(num))
}

// ---------------------------------------------------------------------------
// Bernoulli numbers and polynomials
// ---------------------------------------------------------------------------

/// Bernoulli numbers B_0..B_n (B_1 = -1/2 convention).
pub fn bernoulli_numbers(n: u64) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(n as usize + 1);
    for m in 0..=n {
        if m == 0 {
            b.push(BigRational::one());
            continue;
        }
        let mut acc = BigRational::zero();
        for j in 0..m {
            acc += BigRational::from_integer(binomial(m + 1, j)) * &b[j as usize];
        }
        b.push(-acc / BigRational::from_integer(BigInt::from(m + 1)));
    }
    b
}

/// Bernoulli polynomial B_k(x) evaluated exactly.
pub fn bernoulli_polynomial(k: u64, x: &BigRational) -> BigRational {
    let b = bernoulli_numbers(k);
    let mut acc = BigRational::zero();
    let mut xpow = BigRational::one();
    // sum_{i=0..k} C(k,i) B_i x^{k-i}, built from the x^0 term upward
    for i in (0..=k).rev() {
        acc += BigRational::from_integer(binomial(k, i)) * &b[i as usize] * &xpow;
        xpow *= x;
    }
    acc
}

// ---------------------------------------------------------------------------
// Quadratic characters
// ---------------------------------------------------------------------------

/// The real character n -> (D|n) attached to a discriminant-form integer D.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadChar {
    disc: i128,
}

impl QuadChar {
    /// Character for any integer D with D = 0 or 1 mod 4 (D = 1 gives the
    /// trivial character). D need not be fundamental; [`QuadChar::is_primitive`]
    /// tells the difference.
    pub fn new(disc: i128) -> Result<Self> {
        if disc == 0 || !matches!(disc.rem_euclid(4), 0 | 1) {
            return Err(Error::InvalidDiscriminant(disc));
        }
        Ok(QuadChar { disc })
    }

    pub fn trivial() -> Self {
        QuadChar { disc: 1 }
    }

    pub fn disc(&self) -> i128 {
        self.disc
    }

    pub fn eval(&self, n: i128) -> i32 {
        kronecker(self.disc, n)
    }

    /// chi(-1), i.e. +1 for even characters and -1 for odd ones.
    pub fn sign(&self) -> i32 {
        if self.disc > 0 {
            1
        } else {
            -1
        }
    }

    pub fn is_primitive(&self) -> bool {
        is_fundamental_discriminant(self.disc)
    }

    /// Conductor of the primitive character inducing this one.
    pub fn conductor(&self) -> u64 {
        let (d0, _) = core_discriminant(self.disc).expect("valid by construction");
        d0.unsigned_abs() as u64
    }

    /// The primitive character inducing this one.
    pub fn primitive_part(&self) -> QuadChar {
        let (d0, _) = core_discriminant(self.disc).expect("valid by construction");
        QuadChar { disc: d0 }
    }
}

/// Generalized Bernoulli number B_{k,chi} for a primitive quadratic character
/// of conductor f: f^{k-1} sum_{a=1..f} chi(a) B_k(a/f).
pub fn generalized_bernoulli(k: u64, chi: &QuadChar) -> BigRational {
    assert!(chi.is_primitive(), "generalized_bernoulli needs a primitive character");
    let f = chi.conductor();
    let mut acc = BigRational::zero();
    for a in 1..=f {
        let c = chi.eval(a as i128);
        if c == 0 {
            continue;
        }
        let x = big_ratio(a as i128, f as i128);
        let term = bernoulli_polynomial(k, &x);
        acc += if c > 0 { term } else { -term };
    }
    let scale = BigRational::from_integer(BigInt::from(f)).pow(k as i32 - 1);
    scale * acc
}

/// Twisted divisor sum sigma_s(n, chi) = sum_{t | n} chi(t) t^s, exact.
pub fn twisted_divisor_sum(s: i64, n: u128, chi: &QuadChar) -> BigRational {
    assert!(n >= 1);
    let mut acc = BigRational::zero();
    for t in divisors_from_factors(&factorize(n)) {
        let c = chi.eval(t as i128);
        if c == 0 {
            continue;
        }
        let tpow = BigRational::from_integer(BigInt::from(t)).pow(s as i32);
        acc += if c > 0 { tpow } else { -tpow };
    }
    acc
}

// ---------------------------------------------------------------------------
// Symbolic constants: r * pi^(h/2) * sqrt(rad)
// ---------------------------------------------------------------------------

/// An exact constant r * pi^(pi_half/2) * sqrt(rad) with r rational and rad
/// squarefree. Half-integral powers of pi appear transiently through Gamma at
/// half-integers and must cancel by the end of every coefficient computation.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicConstant {
    pub r: BigRational,
    pub pi_half: i32,
    pub rad: u128,
}

impl SymbolicConstant {
    pub fn from_ratio(r: BigRational) -> Self {
        SymbolicConstant { r, pi_half: 0, rad: 1 }
    }

    pub fn one() -> Self {
        Self::from_ratio(BigRational::one())
    }

    /// pi^k for integer k.
    pub fn pi_pow(k: i32) -> Self {
        SymbolicConstant { r: BigRational::one(), pi_half: 2 * k, rad: 1 }
    }

    /// sqrt(pi)^h for integer h (h may be odd).
    pub fn sqrt_pi_pow(h: i32) -> Self {
        SymbolicConstant { r: BigRational::one(), pi_half: h, rad: 1 }
    }

    /// Exact sqrt(n) for a positive integer n.
    pub fn sqrt_int(n: u128) -> Self {
        let (q, s) = squarefree_decompose(n);
        SymbolicConstant {
            r: BigRational::from_integer(BigInt::from(s)),
            pi_half: 0,
            rad: q,
        }
    }

    /// Exact sqrt of a positive rational.
    pub fn sqrt_ratio(x: &BigRational) -> Self {
        assert!(x.is_positive());
        let num = x.numer().to_u128().expect("sqrt_ratio numerator too large");
        let den = x.denom().to_u128().expect("sqrt_ratio denominator too large");
        // sqrt(a/b) = sqrt(a*b)/b
        let mut s = Self::sqrt_int(num * den);
        s.r /= BigRational::from_integer(BigInt::from(den));
        s
    }

    pub fn is_zero(&self) -> bool {
        self.r.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.is_zero() || (self.pi_half == 0 && self.rad == 1)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::from_ratio(BigRational::zero());
        }
        let mut r = &self.r * &other.r;
        let rad = if self.rad == other.rad {
            r *= BigRational::from_integer(BigInt::from(self.rad));
            1
        } else {
            let prod = self.rad * other.rad;
            let (q, s) = squarefree_decompose(prod);
            r *= BigRational::from_integer(BigInt::from(s));
            q
        };
        SymbolicConstant { r, pi_half: self.pi_half + other.pi_half, rad }
    }

    pub fn div(&self, other: &Self) -> Self {
        assert!(!other.is_zero(), "division of symbolic constant by zero");
        // 1/sqrt(rad) = sqrt(rad)/rad
        let inv = SymbolicConstant {
            r: other.r.recip() / BigRational::from_integer(BigInt::from(other.rad)),
            pi_half: -other.pi_half,
            rad: other.rad,
        };
        self.mul(&inv)
    }

    pub fn mul_ratio(&self, q: &BigRational) -> Self {
        SymbolicConstant { r: &self.r * q, pi_half: self.pi_half, rad: self.rad }
    }

    /// The rational value, or a non-cancellation error when a pi power or a
    /// radical survives.
    pub fn into_rational(self) -> Result<BigRational> {
        if self.is_rational() {
            Ok(self.r)
        } else {
            Err(Error::NonCancellation { value: self.to_string() })
        }
    }

    pub fn to_f64(&self) -> f64 {
        let r = self.r.to_f64().unwrap_or(f64::NAN);
        r * std::f64::consts::PI.powf(self.pi_half as f64 / 2.0) * (self.rad as f64).sqrt()
    }
}

impl fmt::Display for SymbolicConstant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", fmt_ratio(&self.r))?;
        if self.pi_half != 0 {
            if self.pi_half % 2 == 0 {
                write!(f, " * pi^{}", self.pi_half / 2)?;
            } else {
                write!(f, " * pi^({}/2)", self.pi_half)?;
            }
        }
        if self.rad != 1 {
            write!(f, " * sqrt({})", self.rad)?;
        }
        Ok(())
    }
}

/// Gamma(k) for k a positive integer or half-integer (2k integer), as an
/// exact rational times sqrt(pi)^(0 or 1).
pub fn gamma_exact(two_k: u64) -> SymbolicConstant {
    assert!(two_k >= 1);
    if two_k % 2 == 0 {
        let k = two_k / 2;
        let mut f = BigInt::one();
        for i in 1..k {
            f *= BigInt::from(i);
        }
        SymbolicConstant::from_ratio(BigRational::from_integer(f))
    } else {
        // Gamma(n + 1/2) = (2n)! / (4^n n!) sqrt(pi)
        let n = (two_k - 1) / 2;
        let mut num = BigInt::one();
        for i in 1..=2 * n {
            num *= BigInt::from(i);
        }
        let mut den = BigInt::one();
        for i in 1..=n {
            den *= BigInt::from(i);
        }
        den *= BigInt::from(4u32).pow(n as u32);
        let mut s = SymbolicConstant::sqrt_pi_pow(1);
        s.r = BigRational::new(num, den);
        s
    }
}

/// 2^e for integer or half-integer e (given as 2e), exact.
pub fn two_pow_half(two_e: i64) -> SymbolicConstant {
    let int_part = two_e.div_euclid(2);
    let frac = two_e.rem_euclid(2);
    let mut r = BigRational::one();
    if int_part >= 0 {
        r *= BigRational::from_integer(BigInt::from(2u32).pow(int_part as u32));
    } else {
        r /= BigRational::from_integer(BigInt::from(2u32).pow((-int_part) as u32));
    }
    let mut s = if frac == 1 {
        SymbolicConstant::sqrt_int(2)
    } else {
        SymbolicConstant::one()
    };
    s.r *= r;
    s
}

/// x^e for a positive rational x and half-integer e (given as 2e), exact.
pub fn ratio_pow_half(x: &BigRational, two_e: i64) -> SymbolicConstant {
    assert!(x.is_positive());
    let int_part = two_e.div_euclid(2);
    let frac = two_e.rem_euclid(2);
    let mut s = if frac == 1 {
        SymbolicConstant::sqrt_ratio(x)
    } else {
        SymbolicConstant::one()
    };
    s.r *= x.pow(int_part as i32);
    s
}

// ---------------------------------------------------------------------------
// Exact zeta and L-values
// ---------------------------------------------------------------------------

/// zeta(2j) as an exact rational multiple of pi^(2j).
pub fn zeta_exact_even(two_j: u64) -> SymbolicConstant {
    assert!(two_j >= 2 && two_j % 2 == 0);
    let j = two_j / 2;
    let b = bernoulli_numbers(two_j);
    let b2j = b[two_j as usize].clone();
    // zeta(2j) = (-1)^{j+1} B_{2j} (2 pi)^{2j} / (2 (2j)!)
    let mut fact = BigInt::one();
    for i in 1..=two_j {
        fact *= BigInt::from(i);
    }
    let sign = if j % 2 == 1 { BigRational::one() } else { -BigRational::one() };
    let pow2 = BigRational::from_integer(BigInt::from(2u32).pow(two_j as u32));
    let r = sign * b2j * pow2 / (BigRational::from_integer(fact) * big_int_ratio(2));
    SymbolicConstant { r, pi_half: 2 * two_j as i32, rad: 1 }
}

/// L(s, chi) for a primitive quadratic character chi and a positive integer s
/// of matching parity, as an exact rational times pi^s / sqrt(conductor).
///
/// The magnitude comes from the generalized Bernoulli number via the
/// functional equation; the sign is positive (Euler product / class number
/// positivity). Both are pinned against the Dirichlet series numerically in
/// the test suite.
pub fn l_value_exact(s: u32, chi: &QuadChar) -> Result<SymbolicConstant> {
    assert!(chi.is_primitive(), "l_value_exact needs a primitive character");
    let required = if s % 2 == 0 { 1 } else { -1 };
    if chi.sign() != required {
        return Err(Error::ParityMismatch { chi_parity: chi.sign(), s, required });
    }
    let f = chi.conductor();
    if f == 1 {
        // zeta(s) with s even (parity check above forces it)
        return Ok(zeta_exact_even(s as u64));
    }
    let b = generalized_bernoulli(s as u64, chi).abs();
    let mut fact = BigInt::one();
    for i in 1..=s as u64 {
        fact *= BigInt::from(i);
    }
    // |L(s,chi)| = 2^{s-1} pi^s |B_{s,chi}| / (s! f^{s-1/2})
    let mut val = SymbolicConstant::pi_pow(s as i32);
    val.r *= BigRational::from_integer(BigInt::from(2u32).pow(s - 1)) * b
        / BigRational::from_integer(fact);
    let f_pow = ratio_pow_half(&big_int_ratio(f as i128), 2 * s as i64 - 1);
    Ok(val.div(&f_pow))
}

/// L(s, (D|.)) for any discriminant-form integer D (not necessarily
/// fundamental): the primitive L-value times the finite Euler corrections at
/// primes dividing D but not its fundamental part.
pub fn l_value_quadratic_series(s: u32, disc_like: i128) -> Result<SymbolicConstant> {
    let chi = QuadChar::new(disc_like)?;
    let prim = chi.primitive_part();
    let base = l_value_exact(s, &prim)?;
    let mut corr = BigRational::one();
    for (p, _) in factorize(disc_like.unsigned_abs()) {
        if prim.disc() % p as i128 != 0 {
            let cp = prim.eval(p as i128);
            let ps = BigRational::from_integer(BigInt::from(p)).pow(s as i32);
            corr *= BigRational::one() - big_int_ratio(cp as i128) / ps;
        }
    }
    Ok(base.mul_ratio(&corr))
}

// ---------------------------------------------------------------------------
// Numeric oracles (f64)
// ---------------------------------------------------------------------------

/// Riemann zeta for real s > 1 via Euler-Maclaurin, accurate to ~1e-13.
pub fn zeta_f64(s: f64) -> f64 {
    assert!(s > 1.0);
    let n = 64u64;
    let mut acc = 0.0f64;
    for k in 1..n {
        acc += (k as f64).powf(-s);
    }
    acc + em_tail(s, n as f64, 1.0)
}

/// Tail sum_{j>=0} (x0 + j*step)^{-s} by Euler-Maclaurin with three
/// correction terms.
fn em_tail(s: f64, x0: f64, step: f64) -> f64 {
    let t1 = x0.powf(1.0 - s) / (step * (s - 1.0));
    let t2 = 0.5 * x0.powf(-s);
    let t3 = step * s * x0.powf(-s - 1.0) / 12.0;
    let t4 = -step.powi(3) * s * (s + 1.0) * (s + 2.0) * x0.powf(-s - 3.0) / 720.0;
    t1 + t2 + t3 + t4
}

/// Dirichlet series sum chi(n) n^{-s} for the (possibly imprimitive)
/// character (D|.), evaluated numerically. Used as the independent oracle
/// for [`l_value_exact`] and [`l_value_quadratic_series`].
pub fn numeric_l_series(s: f64, disc_like: i128) -> f64 {
    let f = disc_like.unsigned_abs().max(1) as u64;
    let n_cut = (200 * f).max(200_000);
    let mut acc = 0.0f64;
    for n in 1..=n_cut {
        let c = kronecker(disc_like, n as i128);
        if c != 0 {
            acc += c as f64 * (n as f64).powf(-s);
        }
    }
    // close each residue class with an Euler-Maclaurin tail
    for a in 1..=f {
        let c = kronecker(disc_like, a as i128);
        if c == 0 {
            continue;
        }
        let mut x0 = a as f64;
        while x0 <= n_cut as f64 {
            x0 += f as f64;
        }
        acc += c as f64 * em_tail(s, x0, f as f64);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronecker_small_table() {
        assert_eq!(kronecker(12, 1), 1);
        assert_eq!(kronecker(12, 5), -1);
        assert_eq!(kronecker(-4, 7), -1);
        assert_eq!(kronecker(0, 1), 1);
        assert_eq!(kronecker(0, 3), 0);
        assert_eq!(kronecker(5, 0), 0);
        assert_eq!(kronecker(1, 0), 1);
        assert_eq!(kronecker(2, 2), 0);
    }

    #[test]
    fn kronecker_matches_legendre_on_odd_primes() {
        for &p in &[3i128, 5, 7, 11, 13, 17, 19, 23] {
            for a in -30..30i128 {
                // Euler criterion
                let mut e = 1i128;
                let exp = (p - 1) / 2;
                let base = a.rem_euclid(p);
                for _ in 0..exp {
                    e = e * base % p;
                }
                let legendre = if e == 0 {
                    0
                } else if e == 1 {
                    1
                } else {
                    -1
                };
                assert_eq!(kronecker(a, p), legendre, "a={} p={}", a, p);
            }
        }
    }

    #[test]
    fn kronecker_multiplicative_in_bottom() {
        for a in -20..20i128 {
            for b1 in 1..15i128 {
                for b2 in 1..15i128 {
                    assert_eq!(
                        kronecker(a, b1 * b2),
                        kronecker(a, b1) * kronecker(a, b2)
                    );
                }
            }
        }
    }

    #[test]
    fn bernoulli_values() {
        let b = bernoulli_numbers(14);
        assert_eq!(b[2], big_ratio(1, 6));
        assert_eq!(b[4], big_ratio(-1, 30));
        assert_eq!(b[8], big_ratio(-1, 30));
        assert_eq!(b[10], big_ratio(5, 66));
        assert_eq!(b[14], big_ratio(7, 6));
        assert!(b[3].is_zero() && b[5].is_zero() && b[13].is_zero());
    }

    #[test]
    fn generalized_bernoulli_examples() {
        // trivial character, k = 2
        assert_eq!(generalized_bernoulli(2, &QuadChar::trivial()), big_ratio(1, 6));
        // conductor 12, k = 2
        let chi12 = QuadChar::new(12).unwrap();
        assert_eq!(generalized_bernoulli(2, &chi12), big_int_ratio(4));
        // conductor 4, k = 1
        let chi4 = QuadChar::new(-4).unwrap();
        assert_eq!(generalized_bernoulli(1, &chi4), big_ratio(-1, 2));
    }

    #[test]
    fn core_discriminant_examples() {
        assert_eq!(core_discriminant(45).unwrap(), (5, 3));
        assert_eq!(core_discriminant(-4).unwrap(), (-4, 1));
        assert_eq!(core_discriminant(12).unwrap(), (12, 1));
        assert_eq!(core_discriminant(8).unwrap(), (8, 1));
        assert_eq!(core_discriminant(32).unwrap(), (8, 2));
        assert_eq!(core_discriminant(1).unwrap(), (1, 1));
        assert_eq!(core_discriminant(2_i128.pow(29)).unwrap(), (8, 1 << 13));
        assert!(core_discriminant(18).is_err());
        assert!(core_discriminant(0).is_err());
    }

    #[test]
    fn twisted_divisor_sums() {
        let triv = QuadChar::trivial();
        assert_eq!(twisted_divisor_sum(0, 6, &triv), big_int_ratio(4));
        assert_eq!(twisted_divisor_sum(-1, 4, &triv), big_ratio(7, 4));
        let chi4 = QuadChar::new(-4).unwrap();
        assert_eq!(twisted_divisor_sum(-1, 10, &chi4), big_ratio(6, 5));
    }

    #[test]
    fn zeta_exact_values() {
        let z2 = zeta_exact_even(2);
        assert_eq!(z2.r, big_ratio(1, 6));
        assert_eq!(z2.pi_half, 4);
        let z4 = zeta_exact_even(4);
        assert_eq!(z4.r, big_ratio(1, 90));
        let z8 = zeta_exact_even(8);
        assert_eq!(z8.r, big_ratio(1, 9450));
        assert!((zeta_f64(2.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12);
    }

    #[test]
    fn l_value_exact_matches_series() {
        // zeta(2)
        let v = l_value_exact(2, &QuadChar::trivial()).unwrap();
        assert!((v.to_f64() - numeric_l_series(2.0, 1)).abs() < 1e-9);
        // conductor 12, s = 2: rational * pi^2 / sqrt(12), ~0.94969
        let chi12 = QuadChar::new(12).unwrap();
        let v = l_value_exact(2, &chi12).unwrap();
        assert!((v.to_f64() - 0.949_69).abs() < 1e-4);
        assert!((v.to_f64() - numeric_l_series(2.0, 12)).abs() < 1e-9);
        // conductor 4, s = 1: pi/4
        let chi4 = QuadChar::new(-4).unwrap();
        let v = l_value_exact(1, &chi4).unwrap();
        assert_eq!(v.r, big_ratio(1, 4));
        assert_eq!(v.pi_half, 2);
        assert_eq!(v.rad, 1);
        // parity mismatch is rejected
        assert!(l_value_exact(2, &chi4).is_err());
        assert!(l_value_exact(1, &chi12).is_err());
    }

    #[test]
    fn l_value_imprimitive_euler_corrections() {
        // (8|.) is primitive; (32|.) induces the same primitive character
        let v8 = l_value_quadratic_series(2, 8).unwrap();
        let v32 = l_value_quadratic_series(2, 32).unwrap();
        assert_eq!(v8.r, v32.r);
        assert!((v32.to_f64() - numeric_l_series(2.0, 32)).abs() < 1e-9);
        // (4|.) is the principal character mod 2: zeta(2)(1 - 2^{-2})
        let v4 = l_value_quadratic_series(2, 4).unwrap();
        let expect = zeta_exact_even(2).mul_ratio(&big_ratio(3, 4));
        assert_eq!(v4, expect);
        assert!((v4.to_f64() - numeric_l_series(2.0, 4)).abs() < 1e-9);
    }

    #[test]
    fn symbolic_constant_algebra() {
        let a = SymbolicConstant::sqrt_int(12); // 2 sqrt(3)
        assert_eq!(a.r, big_int_ratio(2));
        assert_eq!(a.rad, 3);
        let b = SymbolicConstant::sqrt_int(27); // 3 sqrt(3)
        let ab = a.mul(&b);
        assert!(ab.is_rational());
        assert_eq!(ab.r, big_int_ratio(18));
        let q = ab.div(&b);
        assert_eq!(q, a);
        // (a*b)/b = a with pi powers involved
        let c = SymbolicConstant::sqrt_pi_pow(3).mul(&a);
        let d = c.div(&a);
        assert_eq!(d, SymbolicConstant::sqrt_pi_pow(3));
        assert!(!c.is_rational());
        assert!(c.clone().into_rational().is_err());
    }

    #[test]
    fn gamma_exact_values() {
        assert_eq!(gamma_exact(12).r, big_int_ratio(120)); // Gamma(6) = 5!
        let g = gamma_exact(5); // Gamma(5/2) = 3/4 sqrt(pi)
        assert_eq!(g.r, big_ratio(3, 4));
        assert_eq!(g.pi_half, 1);
        let h = gamma_exact(1); // Gamma(1/2) = sqrt(pi)
        assert_eq!(h.r, big_int_ratio(1));
        assert_eq!(h.pi_half, 1);
    }

    #[test]
    fn ratio_mod_p_power_reduces_rationals() {
        // 1/3 mod 16: inverse of 3 is 11; 49/4 mod 27 etc.
        assert_eq!(ratio_mod_p_power(&big_ratio(1, 3), 2, 16), 11);
        let x = big_ratio(49, 4);
        let m = ratio_mod_p_power(&x, 3, 27);
        assert_eq!((m * 4) % 27, 49 % 27);
    }

    #[test]
    fn fmt_parse_round_trip() {
        for (n, d) in [(3, 1), (-10, 1), (-337, 2), (49, 4)] {
            let x = big_ratio(n, d);
            assert_eq!(parse_ratio(&fmt_ratio(&x)).unwrap(), x);
        }
    }
}
