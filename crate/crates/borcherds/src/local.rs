//! Representation numbers N_{gamma,n}(p^nu) and stabilized local densities.
//!
//! Three independent routes are implemented:
//!   * a brute-force count over (Z/a)^m (the oracle, budget-limited),
//!   * closed forms for hyperbolic planes U(1) and U(N),
//!   * a p-adic block decomposition whose per-block value distributions are
//!     combined by cyclic convolution.
//! The convolution engine is the production path; the other two cross-check it.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::HashMap;

use crate::arith::{inv_mod, ord_p_bigint, ord_p_ratio};
use crate::error::{Error, Result};
use crate::lattice::{elementary_divisors, GramMatrix, LatticeSpec};

/// Point budget for the brute-force oracle.
pub const NAIVE_BUDGET: u128 = 1 << 26;
/// Maximum length of a value-distribution array.
pub const DIST_LEN_BUDGET: u128 = 1 << 22;
/// Point budget for a single block enumeration.
pub const BLOCK_ENUM_BUDGET: u128 = 1 << 26;

fn pow_u128(p: u64, e: u32) -> u128 {
    (p as u128).pow(e)
}

fn ord_p_u128(mut x: u128, p: u64, cap: u32) -> u32 {
    if x == 0 {
        return cap;
    }
    let mut v = 0;
    while v < cap && x % p as u128 == 0 {
        x /= p as u128;
        v += 1;
    }
    v
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

/// Exact count of r in (Z/a)^m with Q(r - gamma) + n = 0 mod a, by full
/// enumeration. `gamma` is a dual vector given by its rational coordinates.
pub fn rep_count_naive_mod(
    gram: &GramMatrix,
    gamma: &[BigRational],
    n: &BigRational,
    modulus: u64,
    budget: u128,
) -> Result<u64> {
    let m = gram.dim();
    assert_eq!(gamma.len(), m);
    let q_gamma = gram.quad(gamma);
    assert!(
        (n + &q_gamma).denom().is_one(),
        "n + Q(gamma) must be an integer"
    );
    if modulus == 1 {
        return Ok(1);
    }
    let points = (modulus as u128)
        .checked_pow(m as u32)
        .filter(|&pts| pts <= budget);
    let points = match points {
        Some(p) => p,
        None => {
            return Err(Error::BudgetExceeded {
                points: (modulus as f64).powi(m as i32) as u128,
                budget,
            })
        }
    };
    let _ = points;

    // common denominator e of gamma, so that e*gamma is integral
    let mut e = BigInt::one();
    for c in gamma {
        e = num_integer::Integer::lcm(&e, c.denom());
    }
    let e = e.to_i64().expect("denominator of gamma fits in i64");
    let big_m = 2 * (e as i128) * (e as i128) * modulus as i128;
    assert!(big_m < (1 << 56), "scaled modulus too large for i64 kernel");
    let big_m = big_m as i64;

    // w = e * gamma as integers, reduced mod M
    let w: Vec<i64> = gamma
        .iter()
        .map(|c| {
            let v = c * BigRational::from_integer(BigInt::from(e));
            v.to_integer()
                .to_i64()
                .expect("scaled gamma coordinate fits")
                .rem_euclid(big_m)
        })
        .collect();

    // val(r) = (e r - w)^T S (e r - w) + 2 e^2 n  mod M; condition: val == 0
    let mut val0 = BigInt::zero();
    let wb: Vec<BigInt> = w.iter().map(|&x| BigInt::from(x)).collect();
    for i in 0..m {
        for j in 0..m {
            val0 += BigInt::from(gram.get(i, j)) * &wb[i] * &wb[j];
        }
    }
    let two_e2_n = (n * BigRational::from_integer(BigInt::from(2 * e as i128 * e as i128)))
        .to_integer();
    val0 += two_e2_n;
    let val0 = num_integer::Integer::mod_floor(&val0, &BigInt::from(big_m))
        .to_i64()
        .unwrap();

    // u = S (e r - w) mod M, initialized at r = 0
    let mut u: Vec<i64> = (0..m)
        .map(|i| {
            let mut acc = 0i128;
            for j in 0..m {
                acc -= gram.get(i, j) as i128 * w[j] as i128;
            }
            (acc.rem_euclid(big_m as i128)) as i64
        })
        .collect();

    // precomputed column data mod M
    let es: Vec<Vec<i64>> = (0..m)
        .map(|d| {
            (0..m)
                .map(|j| ((e as i128 * gram.get(j, d) as i128).rem_euclid(big_m as i128)) as i64)
                .collect()
        })
        .collect();
    let e2s: Vec<i64> = (0..m)
        .map(|d| {
            ((e as i128 * e as i128 * gram.get(d, d) as i128).rem_euclid(big_m as i128)) as i64
        })
        .collect();
    let p_es: Vec<Vec<i64>> = (0..m)
        .map(|d| {
            (0..m)
                .map(|j| {
                    ((modulus as i128 * e as i128 * gram.get(j, d) as i128)
                        .rem_euclid(big_m as i128)) as i64
                })
                .collect()
        })
        .collect();

    struct Ctx<'a> {
        m: usize,
        p_nu: u64,
        big_m: i64,
        e: i64,
        es: &'a [Vec<i64>],
        e2s: &'a [i64],
        p_es: &'a [Vec<i64>],
        count: u64,
    }

    fn go(ctx: &mut Ctx, depth: usize, mut val: i64, u: &mut [i64]) {
        let d = depth;
        let m = ctx.m;
        let big_m = ctx.big_m;
        if d == m - 1 {
            let inc_q = ctx.e2s[d];
            let col = ctx.es[d][d];
            let mut ud = u[d];
            for _ in 0..ctx.p_nu {
                if val == 0 {
                    ctx.count += 1;
                }
                val = (val + inc_q + mulmod(2 * ctx.e, ud, big_m)) % big_m;
                ud = (ud + col) % big_m;
            }
            return;
        }
        for _ in 0..ctx.p_nu {
            go(ctx, d + 1, val, u);
            val = (val + ctx.e2s[d] + mulmod(2 * ctx.e, u[d], big_m)) % big_m;
            for j in d..m {
                u[j] = (u[j] + ctx.es[d][j]) % big_m;
            }
        }
        for j in d..m {
            u[j] = (u[j] - ctx.p_es[d][j]).rem_euclid(big_m);
        }
    }

    #[inline]
    fn mulmod(a: i64, b: i64, m: i64) -> i64 {
        ((a as i128 * b as i128).rem_euclid(m as i128)) as i64
    }

    let mut ctx = Ctx {
        m,
        p_nu: modulus,
        big_m,
        e,
        es: &es,
        e2s: &e2s,
        p_es: &p_es,
        count: 0,
    };
    let mut uu = u.clone();
    go(&mut ctx, 0, val0, &mut uu);
    u.clear();
    Ok(ctx.count)
}

/// Brute-force N_{gamma,n}(p^nu).
pub fn rep_count_naive(
    gram: &GramMatrix,
    gamma: &[BigRational],
    n: &BigRational,
    p: u64,
    nu: u32,
    budget: u128,
) -> Result<u64> {
    if nu == 0 {
        return Ok(1);
    }
    let modulus = (p as u128).pow(nu);
    if modulus > u64::MAX as u128 {
        return Err(Error::BudgetExceeded { points: u128::MAX, budget });
    }
    rep_count_naive_mod(gram, gamma, n, modulus as u64, budget)
}

// ---------------------------------------------------------------------------
// Closed forms for hyperbolic planes
// ---------------------------------------------------------------------------

/// N^{U(1)}_{0,n}(p^nu) from the two-case closed form. `ord_n` is the p-adic
/// valuation of n, with `None` for n = 0 (infinite valuation).
pub fn rep_count_u1(ord_n: Option<i64>, p: u64, nu: u32) -> u128 {
    if nu == 0 {
        return 1;
    }
    match ord_n {
        Some(o) if o < 0 => 0,
        Some(o) if (o as u32) < nu => {
            (o as u128 + 1) * (p as u128 - 1) * pow_u128(p, nu - 1)
        }
        _ => nu as u128 * (p as u128 - 1) * pow_u128(p, nu - 1) + pow_u128(p, nu),
    }
}

/// N^{U(N)}_{gamma,n}(p^nu) for gamma = (g1/N, g2/N) in U(N)'. The three-case
/// closed form in terms of nu_N = ord_p(N), nu_gamma = ord_p(gcd(g1, g2)) and
/// l = n + g1 g2 / N (which must be an integer).
pub fn rep_count_un(g1: i64, g2: i64, scale: i64, n: &BigRational, p: u64, nu: u32) -> u128 {
    assert!(scale != 0);
    let nu_n = ord_p_u128(scale.unsigned_abs() as u128, p, 64);
    let nu_gamma: Option<u32> = if g1 == 0 && g2 == 0 {
        None // infinite
    } else {
        Some(ord_p_u128(
            num_integer::gcd(g1.unsigned_abs(), g2.unsigned_abs()) as u128,
            p,
            64,
        ))
    };
    let ell = n + crate::arith::big_ratio(g1 as i128 * g2 as i128, scale as i128);
    assert!(ell.denom().is_one(), "n must lie in Z - Q(gamma)");
    let min_nu_gamma = nu_gamma.map_or(nu, |g| g.min(nu));
    let nu_min = nu.min(nu_n).min(min_nu_gamma);
    let ell_ord = if ell.is_zero() {
        u32::MAX
    } else {
        ord_p_bigint(&ell.to_integer(), p)
    };
    if ell_ord < nu_min {
        return 0;
    }
    let upper = nu_gamma.map_or(nu, |g| g.min(nu));
    if nu_n <= upper {
        // tilde n = N n p^{-2 nu_N}
        let big_n_n = n * BigRational::from_integer(BigInt::from(scale));
        let ord_tilde = ord_p_ratio(&big_n_n, p).map(|o| o - 2 * nu_n as i64);
        pow_u128(p, 2 * nu_n) * rep_count_u1(ord_tilde, p, nu - nu_n)
    } else {
        pow_u128(p, nu + upper)
    }
}

/// Second computation path for lattices splitting a hyperbolic plane: peel off
/// the U(N) summand with the closed form and enumerate the complement.
pub fn rep_count_split(
    spec: &LatticeSpec,
    gamma: &[BigRational],
    n: &BigRational,
    p: u64,
    nu: u32,
    budget: u128,
) -> Result<BigUint> {
    if nu == 0 {
        return Ok(BigUint::one());
    }
    let (ublock, scale) = spec
        .split_u_block()
        .expect("lattice must split a hyperbolic plane");
    let offsets = spec.block_offsets();
    let uoff = offsets[ublock];
    let m = spec.rank();

    // complement gram and gamma components
    let comp_idx: Vec<usize> = (0..m).filter(|&i| i < uoff || i >= uoff + 2).collect();
    let cm = comp_idx.len();
    let mut centries = vec![0i64; cm * cm];
    for (a, &i) in comp_idx.iter().enumerate() {
        for (b, &j) in comp_idx.iter().enumerate() {
            centries[a * cm + b] = spec.gram.get(i, j);
        }
    }
    let cgram = GramMatrix::new(cm, centries);
    let cgamma: Vec<BigRational> = comp_idx.iter().map(|&i| gamma[i].clone()).collect();

    // U(N) component of gamma as (g1/N, g2/N)
    let s_big = BigRational::from_integer(BigInt::from(scale));
    let g1 = (&gamma[uoff] * &s_big).to_integer().to_i64().unwrap();
    let g2 = (&gamma[uoff + 1] * &s_big).to_integer().to_i64().unwrap();

    let p_nu = pow_u128(p, nu);
    let points = p_nu.checked_pow(cm as u32).filter(|&x| x <= budget);
    if points.is_none() {
        return Err(Error::BudgetExceeded { points: u128::MAX, budget });
    }

    let mut total = BigUint::zero();
    let mut lambda = vec![0u64; cm];
    let p_nu64 = p_nu as u64;
    loop {
        let lam: Vec<BigRational> = lambda
            .iter()
            .zip(cgamma.iter())
            .map(|(&l, g)| crate::arith::big_int_ratio(l as i128) - g)
            .collect();
        let n_prime = n + cgram.quad(&lam);
        total += BigUint::from(rep_count_un(g1, g2, scale, &n_prime, p, nu));
        // odometer
        let mut i = cm;
        loop {
            if i == 0 {
                return Ok(total);
            }
            i -= 1;
            lambda[i] += 1;
            if lambda[i] < p_nu64 {
                break;
            }
            lambda[i] = 0;
            if i == 0 {
                return Ok(total);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// p-adic block decomposition
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    /// u * p^scale * x^2 on the quadratic-form side, u a p-adic unit.
    Unary,
    /// 2^scale times the even unimodular plane [[0,1],[1,0]].
    BinaryU,
    /// 2^scale times [[2,1],[1,2]].
    BinaryV,
}

#[derive(Clone, Debug)]
pub struct Block {
    pub offset: usize,
    pub rank: usize,
    pub scale: u32,
    pub kind: BlockKind,
    /// bilinear gram of the block (1 or 4 residues mod p^w)
    gram: [u128; 4],
}

/// Result of the p-adic Jordan-type reduction: a basis change, invertible mod
/// p^cert, bringing the Gram matrix into rank <= 2 diagonal blocks.
#[derive(Clone, Debug)]
pub struct BlockChain {
    pub p: u64,
    pub dim: usize,
    /// working exponent: all matrix data is exact mod p^w_mat
    pub w_mat: u32,
    /// certified digits of the basis-change matrices
    pub cert: u32,
    basis_inv: Vec<u128>, // row-major, mod p^w
    pub blocks: Vec<Block>,
}

impl BlockChain {
    pub fn block_summary(&self) -> Vec<(usize, u32, BlockKind)> {
        self.blocks.iter().map(|b| (b.rank, b.scale, b.kind)).collect()
    }
}

/// Decomposes a Gram matrix p-adically into unary and (for p = 2) binary
/// blocks, with working precision at least `w_min` certified digits.
pub fn block_decompose(gram: &GramMatrix, p: u64, w_min: u32) -> Result<BlockChain> {
    let m = gram.dim();
    let det = gram.det();
    assert!(!det.is_zero());
    let ord_det = ord_p_bigint(&det, p);
    // headroom: pivots lose at most 2*ord_p(det) digits in total
    let w = w_min + 2 * ord_det + 4;
    let w_cap = (126.0 / (2.0 * (p as f64).log2())).floor() as u32;
    if w > w_cap {
        return Err(Error::PrecisionInsufficient { certified: w_cap, needed: w });
    }
    let modulus = pow_u128(p, w);

    let md = |x: i64| -> u128 { (x as i128).rem_euclid(modulus as i128) as u128 };
    let mut a: Vec<u128> = (0..m * m).map(|k| md(gram.row_major()[k])).collect();
    let mut binv: Vec<u128> = vec![0; m * m];
    for i in 0..m {
        binv[i * m + i] = 1;
    }

    let addm = |x: u128, y: u128| -> u128 { (x + y) % modulus };
    let subm = |x: u128, y: u128| -> u128 { (x + modulus - y % modulus) % modulus };
    let mulm = |x: u128, y: u128| -> u128 { x.wrapping_mul(y) % modulus };

    // column j -= f * column i (paired with the same row op), B col j -= f B col i,
    // Binv row i += f Binv row j
    macro_rules! clear_pair {
        ($a:ident, $binv:ident, $j:expr, $i:expr, $f:expr) => {{
            let (j, i, f) = ($j, $i, $f);
            for r in 0..m {
                let v = mulm(f, $a[r * m + i]);
                $a[r * m + j] = subm($a[r * m + j], v);
            }
            for c in 0..m {
                let v = mulm(f, $a[i * m + c]);
                $a[j * m + c] = subm($a[j * m + c], v);
            }
            for c in 0..m {
                let v = mulm(f, $binv[j * m + c]);
                $binv[i * m + c] = addm($binv[i * m + c], v);
            }
        }};
    }

    macro_rules! swap_pair {
        ($a:ident, $binv:ident, $i:expr, $j:expr) => {{
            let (i, j) = ($i, $j);
            if i != j {
                for r in 0..m {
                    $a.swap(r * m + i, r * m + j);
                }
                for c in 0..m {
                    $a.swap(i * m + c, j * m + c);
                }
                for c in 0..m {
                    $binv.swap(i * m + c, j * m + c);
                }
            }
        }};
    }

    let val = |x: u128| ord_p_u128(x, p, w);
    let unit_inv = |x: u128, v: u32| -> u128 {
        // inverse of the unit part of x = unit * p^v, mod p^(w - v)
        let unit = (x / pow_u128(p, v)) % modulus;
        let md = pow_u128(p, w - v);
        inv_mod((unit % md) as i128, md as i128) as u128
    };

    let mut blocks: Vec<Block> = Vec::new();
    let mut cert = w;
    let mut pos = 0usize;

    while pos < m {
        // find minimal valuation in the trailing block, preferring the diagonal
        let mut vd = w;
        let mut pd = pos;
        for i in pos..m {
            let v = val(a[i * m + i]);
            if v < vd {
                vd = v;
                pd = i;
            }
        }
        let mut va = w;
        let mut pa = (pos, pos + 1);
        for i in pos..m {
            for j in i + 1..m {
                let v = val(a[i * m + j]);
                if v < va {
                    va = v;
                    pa = (i, j);
                }
            }
        }
        if vd >= w && va >= w {
            return Err(Error::PrecisionInsufficient { certified: 0, needed: w });
        }

        let diagonal_pivot = if p != 2 {
            // for odd p an off-diagonal minimum can always be moved to the diagonal
            if vd > va {
                let (i, j) = pa;
                // x_i += x_j : col i += col j, row i += row j, Binv row j -= row i
                for r in 0..m {
                    a[r * m + i] = addm(a[r * m + i], a[r * m + j]);
                }
                for c in 0..m {
                    a[i * m + c] = addm(a[i * m + c], a[j * m + c]);
                }
                for c in 0..m {
                    let v = binv[i * m + c];
                    binv[j * m + c] = subm(binv[j * m + c], v);
                }
                pd = i;
                vd = va;
            }
            true
        } else {
            vd <= va
        };

        if diagonal_pivot {
            swap_pair!(a, binv, pos, pd);
            let g = a[pos * m + pos];
            let v = vd;
            let inv_unit = unit_inv(g, v);
            for k in pos + 1..m {
                let x = a[pos * m + k];
                if x == 0 {
                    continue;
                }
                debug_assert!(val(x) >= v);
                let f = mulm(x / pow_u128(p, v), inv_unit);
                clear_pair!(a, binv, k, pos, f);
            }
            cert = cert.min(w - v);
            let scale = if p == 2 { v - 1 } else { v }; // quadratic-form scale
            blocks.push(Block {
                offset: pos,
                rank: 1,
                scale,
                kind: BlockKind::Unary,
                gram: [a[pos * m + pos], 0, 0, 0],
            });
            pos += 1;
        } else {
            // p = 2, genuinely binary block
            let (i, j) = pa;
            swap_pair!(a, binv, pos, i);
            let j = if j == pos { i } else { j };
            swap_pair!(a, binv, pos + 1, j);
            let v = va;
            let b01 = a[pos * m + pos + 1];
            let g00 = a[pos * m + pos];
            let g11 = a[(pos + 1) * m + pos + 1];
            debug_assert!(val(b01) == v && val(g00) > v && val(g11) > v);
            let det2 = subm(mulm(g00, g11), mulm(b01, b01));
            debug_assert_eq!(val(det2), 2 * v);
            let det_inv = unit_inv(det2, 2 * v);
            let p2v = pow_u128(p, 2 * v);
            for k in pos + 2..m {
                let s0 = a[pos * m + k];
                let s1 = a[(pos + 1) * m + k];
                if s0 == 0 && s1 == 0 {
                    continue;
                }
                // solve [g00 b01; b01 g11] [x; y] = [s0; s1]
                let num_x = subm(mulm(g11, s0), mulm(b01, s1));
                let num_y = subm(mulm(g00, s1), mulm(b01, s0));
                debug_assert!(val(num_x) >= 2 * v && val(num_y) >= 2 * v);
                let fx = mulm(num_x / p2v, det_inv);
                let fy = mulm(num_y / p2v, det_inv);
                if fx != 0 {
                    clear_pair!(a, binv, k, pos, fx);
                }
                if fy != 0 {
                    clear_pair!(a, binv, k, pos + 1, fy);
                }
            }
            cert = cert.min(w - 2 * v);
            let disc_unit = (det2 / p2v) % 8;
            let kind = match disc_unit {
                7 => BlockKind::BinaryU,
                3 => BlockKind::BinaryV,
                _ => unreachable!("binary 2-adic block has determinant 3 or 7 mod 8"),
            };
            blocks.push(Block {
                offset: pos,
                rank: 2,
                scale: v,
                kind,
                gram: [
                    a[pos * m + pos],
                    a[pos * m + pos + 1],
                    a[(pos + 1) * m + pos],
                    a[(pos + 1) * m + pos + 1],
                ],
            });
            pos += 2;
        }
    }

    if cert < w_min {
        return Err(Error::PrecisionInsufficient { certified: cert, needed: w_min });
    }
    Ok(BlockChain {
        p,
        dim: m,
        w_mat: w,
        cert,
        basis_inv: binv,
        blocks,
    })
}

// ---------------------------------------------------------------------------
// Value distributions
// ---------------------------------------------------------------------------

/// Distribution of the scaled values p^s (Q_b(x - delta) - Q_b(delta)) over
/// the block group, as counts per class mod p^(nu+s).
#[derive(Clone, Debug)]
pub struct ValueDistribution {
    pub p: u64,
    pub nu: u32,
    pub scale: u32,
    /// enumeration ran over (Z/p^(nu+j))^rank; counts overshoot by p^(j*rank)
    pub fiber_exp: u32,
    pub counts: Vec<u64>,
}

impl ValueDistribution {
    pub fn total(&self) -> u128 {
        self.counts.iter().map(|&c| c as u128).sum()
    }
}

fn block_distribution(
    block: &Block,
    p: u64,
    nu: u32,
    s: u32,
    shift: &[u128], // w_b: p^j * delta_b reduced mod p^(nu+j+s+..)
    j: u32,
) -> Result<ValueDistribution> {
    let len = pow_u128(p, nu + s);
    if len > DIST_LEN_BUDGET {
        return Err(Error::BudgetExceeded { points: len, budget: DIST_LEN_BUDGET });
    }
    let dom = pow_u128(p, nu + j);
    let points = dom.pow(block.rank as u32);
    if points > BLOCK_ENUM_BUDGET {
        return Err(Error::BudgetExceeded { points, budget: BLOCK_ENUM_BUDGET });
    }
    let len_us = len as usize;
    let lmod = len;
    let mut counts = vec![0u64; len_us];

    // linear coefficients: p^s * (G w / p^j) mod p^(nu+s), entries of G w must
    // have valuation >= j - s (s was chosen to make this integral)
    let red = |x: u128| -> u128 { x % lmod };
    if block.rank == 1 {
        let g = block.gram[0];
        // quadratic coefficient p^s * g/2
        let qc = if p == 2 {
            red((g / 2) * pow_u128(p, s) % lmod + lmod * 0)
        } else {
            let half = inv_mod(2, lmod as i128) as u128;
            red(g % lmod * half % lmod * pow_u128(p, s) % lmod)
        };
        let lw = g.wrapping_mul(shift[0]); // (G w) for rank 1
        let lin = scaled_linear(lw, p, s, j, lmod);
        let mut x = 0u128;
        let mut v: u128 = 0; // value at x = 0
        while x < dom {
            counts[v as usize] += 1;
            // v(x+1) - v(x) = qc(2x+1) - lin
            let delta = (qc * ((2 * x + 1) % lmod) % lmod + lmod - lin) % lmod;
            v = (v + delta) % lmod;
            x += 1;
        }
        // the sweep above walks x = 0..dom; counts length covers classes mod p^(nu+s)
    } else {
        let g00 = block.gram[0];
        let g01 = block.gram[1];
        let g11 = block.gram[3];
        let (qc0, qc1, cross) = if p == 2 {
            (
                red((g00 / 2) * pow_u128(p, s) % lmod),
                red((g11 / 2) * pow_u128(p, s) % lmod),
                red(g01 % lmod * pow_u128(p, s) % lmod),
            )
        } else {
            let half = inv_mod(2, lmod as i128) as u128;
            (
                red(g00 % lmod * half % lmod * pow_u128(p, s) % lmod),
                red(g11 % lmod * half % lmod * pow_u128(p, s) % lmod),
                red(g01 % lmod * pow_u128(p, s) % lmod),
            )
        };
        let lw0 = g00.wrapping_mul(shift[0]).wrapping_add(g01.wrapping_mul(shift[1]));
        let lw1 = g01.wrapping_mul(shift[0]).wrapping_add(g11.wrapping_mul(shift[1]));
        let lin0 = scaled_linear(lw0, p, s, j, lmod);
        let lin1 = scaled_linear(lw1, p, s, j, lmod);
        let mut y = 0u128;
        while y < dom {
            // value at (0, y): qc1 y^2 - lin1 y
            let base = (qc1 * (y * y % lmod) % lmod + lmod - lin1 * y % lmod) % lmod;
            // inner sweep over x with strength reduction
            let mut v = base;
            // v(x+1) - v(x) = qc0 (2x+1) + cross*y - lin0
            let mut delta = (qc0 + cross * (y % lmod) % lmod + lmod - lin0) % lmod;
            let dd = (2 * qc0) % lmod;
            let mut x = 0u128;
            while x < dom {
                counts[v as usize] += 1;
                v = (v + delta) % lmod;
                delta = (delta + dd) % lmod;
                x += 1;
            }
            y += 1;
        }
    }
    Ok(ValueDistribution {
        p,
        nu,
        scale: s,
        fiber_exp: j * block.rank as u32,
        counts,
    })
}

/// p^s * (x / p^j) mod p^(nu+s) for x a residue with valuation >= j - s.
fn scaled_linear(x: u128, p: u64, s: u32, j: u32, lmod: u128) -> u128 {
    if s >= j {
        x.wrapping_mul(pow_u128(p, s - j)) % lmod
    } else {
        let pj = pow_u128(p, j - s);
        let xm = x % (lmod * pj);
        assert!(xm % pj == 0, "linear coefficient not integral after scaling");
        (xm / pj) % lmod
    }
}

/// Cyclic convolution of two count arrays (shared length), exact.
pub fn convolve(a: &[BigUint], b: &[BigUint], fast: bool) -> Vec<BigUint> {
    let n = a.len();
    assert_eq!(n, b.len());
    if fast {
        let au: Vec<u128> = a.iter().map(|x| x.to_u128().unwrap()).collect();
        let bu: Vec<u128> = b.iter().map(|x| x.to_u128().unwrap()).collect();
        let mut out = vec![0u128; n];
        for (i, &ai) in au.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            for (j, &bj) in bu.iter().enumerate() {
                if bj == 0 {
                    continue;
                }
                let k = i + j;
                let k = if k >= n { k - n } else { k };
                out[k] += ai * bj;
            }
        }
        out.into_iter().map(BigUint::from).collect()
    } else {
        let mut out = vec![BigUint::zero(); n];
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                if bj.is_zero() {
                    continue;
                }
                let k = i + j;
                let k = if k >= n { k - n } else { k };
                out[k] += ai * bj;
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Density engine
// ---------------------------------------------------------------------------

type DistKey = (u64, [u128; 4], Vec<u128>, u32, u32, u32);

/// Per-lattice context: caches block chains and value distributions, and
/// exposes representation numbers and stabilized local densities.
pub struct DensityEngine {
    gram: GramMatrix,
    max_divisor: u64,
    chains: HashMap<(u64, u32), BlockChain>,
    dists: HashMap<DistKey, ValueDistribution>,
}

impl DensityEngine {
    pub fn new(gram: &GramMatrix) -> Self {
        let max_divisor = elementary_divisors(gram).last().copied().unwrap_or(1);
        DensityEngine {
            gram: gram.clone(),
            max_divisor,
            chains: HashMap::new(),
            dists: HashMap::new(),
        }
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    fn chain(&mut self, p: u64, w_min: u32) -> Result<&BlockChain> {
        let key = (p, w_min);
        if !self.chains.contains_key(&key) {
            let chain = block_decompose(&self.gram, p, w_min)?;
            self.chains.insert(key, chain);
        }
        Ok(&self.chains[&key])
    }

    /// N_{gamma,n}(p^nu) through the block/convolution engine.
    pub fn rep_count(
        &mut self,
        gamma: &[BigRational],
        n: &BigRational,
        p: u64,
        nu: u32,
    ) -> Result<BigUint> {
        if nu == 0 {
            return Ok(BigUint::one());
        }
        let m = self.gram.dim();
        assert_eq!(gamma.len(), m);
        debug_assert!(
            (n + self.gram.quad(gamma)).denom().is_one(),
            "n + Q(gamma) must be integral"
        );

        // j: p-part of the denominators of gamma
        let mut j = 0u32;
        for c in gamma {
            if !c.is_zero() {
                j = j.max(ord_p_bigint(c.denom(), p));
            }
        }
        // required matrix precision: generous headroom over nu + shifts
        let w_need = nu + 2 * j + 6;
        let chain = self.chain(p, w_need)?.clone();
        let t_mod_exp = chain.w_mat.min(nu + 2 * j + 4 + j);
        let t_mod = pow_u128(p, t_mod_exp);

        // shift vector: Binv * (p^j gamma) reduced mod p^t
        let pj = BigRational::from_integer(BigInt::from(pow_u128(p, j)));
        let gred: Vec<u128> = gamma
            .iter()
            .map(|c| crate::arith::ratio_mod_p_power(&(c * &pj), p, t_mod))
            .collect();
        let shift: Vec<u128> = (0..m)
            .map(|r| {
                let mut acc: u128 = 0;
                for c in 0..m {
                    acc = (acc + chain.basis_inv[r * m + c] % t_mod * (gred[c] % t_mod)) % t_mod;
                }
                acc
            })
            .collect();

        // per-block shifts and the scale s
        let mut block_shifts: Vec<Vec<u128>> = Vec::with_capacity(chain.blocks.len());
        let mut s = 0u32;
        for b in &chain.blocks {
            let w_b: Vec<u128> = (0..b.rank).map(|r| shift[b.offset + r]).collect();
            // s_b = max(0, j - min valuation of (G_b w_b))
            let mut min_ord = t_mod_exp;
            for r in 0..b.rank {
                let mut acc: u128 = 0;
                for c in 0..b.rank {
                    acc = (acc + b.gram[r * 2 + c] % t_mod * (w_b[c] % t_mod)) % t_mod;
                }
                min_ord = min_ord.min(ord_p_u128(acc, p, t_mod_exp));
            }
            if j > min_ord {
                s = s.max(j - min_ord);
            }
            block_shifts.push(w_b);
        }

        let len = pow_u128(p, nu + s);
        if len > DIST_LEN_BUDGET {
            return Err(Error::BudgetExceeded { points: len, budget: DIST_LEN_BUDGET });
        }

        // combined distribution: convolve per-block distributions
        let mut combined: Option<Vec<BigUint>> = None;
        let mut total_log_fits = 0f64;
        for (bi, b) in chain.blocks.iter().enumerate() {
            let shift_red: Vec<u128> = block_shifts[bi]
                .iter()
                .map(|&x| x % pow_u128(p, nu + j).max(1))
                .collect();
            let key: DistKey = (p, b.gram, shift_red.clone(), nu, s, j);
            if !self.dists.contains_key(&key) {
                let d = block_distribution(b, p, nu, s, &block_shifts[bi], j)?;
                self.dists.insert(key.clone(), d);
            }
            let dist = &self.dists[&key];
            total_log_fits += (dist.total() as f64).log2();
            let arr: Vec<BigUint> = dist.counts.iter().map(|&c| BigUint::from(c)).collect();
            combined = Some(match combined {
                None => arr,
                Some(prev) => {
                    let fast = total_log_fits < 126.0;
                    convolve(&prev, &arr, fast)
                }
            });
        }
        let combined = combined.expect("at least one block");

        // target class: p^s * (-n - sum_b Q_b(delta_b)) mod p^(nu+s)
        let f_exp = s + 2 * j + 2;
        let big_mod = pow_u128(p, f_exp + nu + s);
        assert!(t_mod_exp >= f_exp + nu + s || t_mod >= big_mod || chain.w_mat >= f_exp + nu + s,);
        let mut x: u128 = 0;
        // p^F * (-n)
        let pf = BigRational::from_integer(BigInt::from(pow_u128(p, f_exp)));
        x = (x + crate::arith::ratio_mod_p_power(&(-n * pf), p, big_mod)) % big_mod;
        // minus p^F * Q_b(delta_b) = p^(F-2j) * (w^T G w)/2
        for (bi, b) in chain.blocks.iter().enumerate() {
            let w_b = &block_shifts[bi];
            let mut wgw: u128 = 0;
            for r in 0..b.rank {
                for c in 0..b.rank {
                    wgw = (wgw + b.gram[r * 2 + c] % big_mod * (w_b[r] % big_mod) % big_mod
                        * (w_b[c] % big_mod))
                        % big_mod;
                }
            }
            // divide by 2: at p = 2 the value w^T G w is even
            let half = if p == 2 {
                assert!(wgw % 2 == 0);
                wgw / 2 % big_mod
            } else {
                wgw * inv_mod(2, big_mod as i128) as u128 % big_mod
            };
            let term = half * pow_u128(p, f_exp - 2 * j) % big_mod;
            x = (x + big_mod - term) % big_mod;
        }
        let divisor = pow_u128(p, f_exp - s);
        assert!(x % divisor == 0, "target class not p-integral after scaling");
        let target = (x / divisor) % len;

        let fiber = BigUint::from(pow_u128(p, j * m as u32));
        let raw = combined[target as usize].clone();
        let (q, r) = num_integer::Integer::div_rem(&raw, &fiber);
        assert!(r.is_zero(), "fiber count must divide evenly");
        Ok(q)
    }

    /// Stabilized local density: the eventual value of p^(nu(1-m)) N(p^nu).
    pub fn local_density(
        &mut self,
        gamma: &[BigRational],
        n: &BigRational,
        p: u64,
    ) -> Result<BigRational> {
        assert!(n.is_positive(), "local densities are taken at n > 0");
        let m = self.gram.dim() as i64;
        // order of gamma in L'/L = lcm of coordinate denominators
        let mut d_gamma = BigInt::one();
        for c in gamma {
            d_gamma = num_integer::Integer::lcm(&d_gamma, c.denom());
        }
        // n_hat = 2 d_gamma^2 n is an integer
        let n_hat = (n * BigRational::from_integer(2 * &d_gamma * &d_gamma)).to_integer();
        assert!(!n_hat.is_zero());
        let nu0 = 1
            + ord_p_u128(2 * self.max_divisor as u128, p, 40)
            + ord_p_bigint(&n_hat, p);
        let max_nu = nu0 + 8;

        let norm = |count: BigUint, nu: u32| -> BigRational {
            let c = BigRational::from_integer(BigInt::from(count));
            let scale = BigRational::from_integer(BigInt::from(p)).pow((nu as i64 * (m - 1)) as i32);
            c / scale
        };

        let mut window: Vec<BigRational> = Vec::new();
        for nu in nu0..=max_nu {
            let c = self.rep_count(gamma, n, p, nu)?;
            window.push(norm(c, nu));
            let len = window.len();
            if len >= 3
                && window[len - 1] == window[len - 2]
                && window[len - 2] == window[len - 3]
            {
                return Ok(window[len - 1].clone());
            }
        }
        Err(Error::StabilizationFailure { p, max_exponent: max_nu })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{big_int_ratio, big_ratio};
    use crate::lattice::{build_catalog, find_lattice, gram_u, DiscriminantGroup};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn zero_gamma(m: usize) -> Vec<BigRational> {
        vec![BigRational::zero(); m]
    }

    #[test]
    fn naive_examples_on_u() {
        let u = gram_u(1);
        let g = zero_gamma(2);
        // Q(r) = xy; n = 1, p = 2, nu = 1: only (1,1)
        assert_eq!(
            rep_count_naive(&u, &g, &big_int_ratio(1), 2, 1, NAIVE_BUDGET).unwrap(),
            1
        );
        // n = 0: (0,0),(0,1),(1,0)
        assert_eq!(
            rep_count_naive(&u, &g, &big_int_ratio(0), 2, 1, NAIVE_BUDGET).unwrap(),
            3
        );
        // nu = 0
        assert_eq!(
            rep_count_naive(&u, &g, &big_int_ratio(5), 3, 0, NAIVE_BUDGET).unwrap(),
            1
        );
    }

    #[test]
    fn u1_closed_form_examples() {
        assert_eq!(rep_count_u1(Some(0), 2, 1), 1); // n = 1
        assert_eq!(rep_count_u1(Some(2), 2, 1), 3); // n = 4
        assert_eq!(rep_count_u1(Some(1), 3, 2), 12); // n = 6
        assert_eq!(rep_count_u1(None, 2, 3), 8 + 3 * 4); // n = 0
    }

    #[test]
    fn u1_closed_form_matches_naive() {
        let u = gram_u(1);
        let g = zero_gamma(2);
        for p in [2u64, 3, 5] {
            for nu in 0..=3u32 {
                for n in -12i128..=12 {
                    let expected =
                        rep_count_naive(&u, &g, &big_int_ratio(n), p, nu, NAIVE_BUDGET).unwrap();
                    let ord = if n == 0 {
                        None
                    } else {
                        Some(ord_p_u128(n.unsigned_abs(), p, 60) as i64)
                    };
                    assert_eq!(
                        rep_count_u1(ord, p, nu) as u64,
                        expected,
                        "p={} nu={} n={}",
                        p,
                        nu,
                        n
                    );
                }
            }
        }
    }

    #[test]
    fn un_closed_form_matches_naive() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..400 {
            let scale: i64 = *[1, 2, 3, 4, 6, 8].iter().nth(rng.gen_range(0..6)).unwrap();
            let p: u64 = *[2, 3, 5].iter().nth(rng.gen_range(0..3)).unwrap();
            let nu: u32 = rng.gen_range(0..=3);
            let g1: i64 = rng.gen_range(0..scale);
            let g2: i64 = rng.gen_range(0..scale);
            let ell: i128 = rng.gen_range(-25..=25);
            let n = big_int_ratio(ell) - big_ratio(g1 as i128 * g2 as i128, scale as i128);
            let u = gram_u(scale);
            let gamma = vec![big_ratio(g1 as i128, scale as i128), big_ratio(g2 as i128, scale as i128)];
            let expected = rep_count_naive(&u, &gamma, &n, p, nu, NAIVE_BUDGET).unwrap();
            let got = rep_count_un(g1, g2, scale, &n, p, nu);
            assert_eq!(got as u64, expected, "N={} p={} nu={} g=({},{}) n={}", scale, p, nu, g1, g2, n);
        }
    }

    #[test]
    fn un_spec_examples() {
        // N = 2, gamma = (1/2, 0), n integer, p = 2, nu = 1 -> 2
        assert_eq!(rep_count_un(1, 0, 2, &big_int_ratio(3), 2, 1), 2);
        // N = 1 reduces to the U(1) count for gamma = 0
        assert_eq!(rep_count_un(0, 0, 1, &big_int_ratio(1), 3, 2), rep_count_u1(Some(0), 3, 2));
        // zero case: nu_min = 1 but l = 1 is not divisible by 3
        assert_eq!(rep_count_un(0, 0, 3, &big_int_ratio(1), 3, 2), 0);
    }

    #[test]
    fn block_decompose_simple_cases() {
        // diag(2,4) at p = 3: two unary blocks at scale 0
        let g = GramMatrix::new(2, vec![2, 0, 0, 4]);
        let chain = block_decompose(&g, 3, 6).unwrap();
        assert_eq!(chain.block_summary(), vec![(1, 0, BlockKind::Unary), (1, 0, BlockKind::Unary)]);
        // U(4) at p = 2: one binary U block at scale 2
        let chain = block_decompose(&gram_u(4), 2, 8).unwrap();
        assert_eq!(chain.block_summary(), vec![(2, 2, BlockKind::BinaryU)]);
        // E8 at p = 2: four binary blocks at scale 0
        let chain = block_decompose(&crate::lattice::gram_e8(), 2, 8).unwrap();
        let summary = chain.block_summary();
        assert_eq!(summary.len(), 4);
        for (rank, scale, _) in summary {
            assert_eq!((rank, scale), (2, 0));
        }
    }

    #[test]
    fn engine_matches_naive_on_small_lattices() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..60 {
            let dim = rng.gen_range(1..=3);
            // random even symmetric nondegenerate gram
            let gram = loop {
                let mut e = vec![0i64; dim * dim];
                for i in 0..dim {
                    for j in 0..=i {
                        let v: i64 = if i == j {
                            2 * rng.gen_range(-5..=5i64)
                        } else {
                            rng.gen_range(-5..=5i64)
                        };
                        e[i * dim + j] = v;
                        e[j * dim + i] = v;
                    }
                }
                let g = GramMatrix::new(dim, e);
                if !g.det().is_zero() {
                    break g;
                }
            };
            let mut engine = DensityEngine::new(&gram);
            let group = DiscriminantGroup::new(&gram);
            let elems = group.elements();
            for _ in 0..4 {
                let e = &elems[rng.gen_range(0..elems.len())];
                let gamma = group.lift(e);
                let p: u64 = *[2, 3].iter().nth(rng.gen_range(0..2)).unwrap();
                let nu: u32 = rng.gen_range(1..=3);
                let off = big_int_ratio(rng.gen_range(-6..=6)) ;
                let n = off - group.q_value_of_lift(&gamma);
                let expected = rep_count_naive(&gram, &gamma, &n, p, nu, NAIVE_BUDGET).unwrap();
                let got = engine.rep_count(&gamma, &n, p, nu).unwrap();
                assert_eq!(got, BigUint::from(expected), "gram={:?} p={} nu={} n={}", gram.row_major(), p, nu, n);
            }
        }
    }

    #[test]
    fn engine_matches_naive_on_catalog_samples() {
        for id in ["n3_8_7p1", "n3_2_7p1_4p4", "n3_2p4_4_7p1", "n4_3p5"] {
            let l = find_lattice(id).unwrap();
            let group = DiscriminantGroup::new(&l.gram);
            let mut engine = DensityEngine::new(&l.gram);
            let elems = group.elements();
            let step = (elems.len() / 7).max(1);
            for e in elems.iter().step_by(step) {
                let gamma = group.lift(e);
                for p in [2u64, 3] {
                    for nu in 1..=2u32 {
                        let n = big_int_ratio(2) - &e.qval;
                        let naive = rep_count_naive(&l.gram, &gamma, &n, p, nu, NAIVE_BUDGET);
                        if let Ok(expected) = naive {
                            let got = engine.rep_count(&gamma, &n, p, nu).unwrap();
                            assert_eq!(got, BigUint::from(expected), "{} p={} nu={}", id, p, nu);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn split_path_matches_engine() {
        let l = find_lattice("n3_2_7p1_4p4").unwrap();
        let group = DiscriminantGroup::new(&l.gram);
        let mut engine = DensityEngine::new(&l.gram);
        for idx in [0usize, 5, 100, 301] {
            let e = &group.elements()[idx];
            let gamma = group.lift(e);
            let n = big_int_ratio(1) - &e.qval;
            for (p, nu) in [(2u64, 2u32), (2, 3), (3, 1)] {
                let a = engine.rep_count(&gamma, &n, p, nu).unwrap();
                let b = rep_count_split(&l, &gamma, &n, p, nu, NAIVE_BUDGET).unwrap();
                assert_eq!(a, b, "idx={} p={} nu={}", idx, p, nu);
            }
        }
    }

    #[test]
    fn multiplicativity_via_crt() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..20 {
            let dim = rng.gen_range(1..=2);
            let gram = loop {
                let mut e = vec![0i64; dim * dim];
                for i in 0..dim {
                    for j in 0..=i {
                        let v: i64 =
                            if i == j { 2 * rng.gen_range(-4..=4i64) } else { rng.gen_range(-4..=4i64) };
                        e[i * dim + j] = v;
                        e[j * dim + i] = v;
                    }
                }
                let g = GramMatrix::new(dim, e);
                if !g.det().is_zero() {
                    break g;
                }
            };
            let gamma = zero_gamma(dim);
            let n = big_int_ratio(rng.gen_range(-10..=10));
            let a = rep_count_naive_mod(&gram, &gamma, &n, 4, NAIVE_BUDGET).unwrap();
            let b = rep_count_naive_mod(&gram, &gamma, &n, 9, NAIVE_BUDGET).unwrap();
            let ab = rep_count_naive_mod(&gram, &gamma, &n, 36, NAIVE_BUDGET).unwrap();
            assert_eq!(a * b, ab);
        }
    }

    #[test]
    fn local_density_stabilizes_and_is_nonnegative() {
        let l = find_lattice("n3_2_7p1").unwrap();
        let mut engine = DensityEngine::new(&l.gram);
        let group = DiscriminantGroup::new(&l.gram);
        for e in group.elements() {
            let gamma = group.lift(e);
            let n = big_int_ratio(1) - &e.qval;
            if !n.is_positive() {
                continue;
            }
            for p in [2u64, 3, 5] {
                let d = engine.local_density(&gamma, &n, p).unwrap();
                assert!(d >= BigRational::zero());
                // spot check: density * p^{nu(m-1)} equals the count well past
                // stabilization
                let nu = 6;
                let c = engine.rep_count(&gamma, &n, p, nu).unwrap();
                let lhs = BigRational::from_integer(BigInt::from(c));
                let scale =
                    BigRational::from_integer(BigInt::from(p)).pow((nu * (5 - 1)) as i32);
                assert_eq!(lhs, &d * scale, "p={}", p);
            }
        }
    }

    #[test]
    fn hyperbolic_split_lower_bound() {
        // nonzero densities of lattices splitting U(N) obey the exponent bound
        for id in ["n3_2_7p5", "n3_2_7p1_4p4", "n4_2p4_3p1"] {
            let l = find_lattice(id).unwrap();
            let m = l.rank() as i64;
            let mut engine = DensityEngine::new(&l.gram);
            let group = DiscriminantGroup::new(&l.gram);
            let elems = group.elements();
            let step = (elems.len() / 5).max(1);
            for e in elems.iter().step_by(step) {
                let gamma = group.lift(e);
                let n = big_int_ratio(1) - &e.qval;
                if !n.is_positive() {
                    continue;
                }
                for p in [2u64, 3] {
                    let d = engine.local_density(&gamma, &n, p).unwrap();
                    if d.is_zero() {
                        continue;
                    }
                    let nu_n = ord_p_u128(l.split_n as u128, p, 30) as i64;
                    let bound = BigRational::from_integer(BigInt::from(p))
                        .pow(((3 - m) * nu_n) as i32)
                        * big_ratio(p as i128 - 1, p as i128);
                    assert!(d >= bound, "{} p={} d={} bound={}", id, p, d, bound);
                }
            }
        }
    }
}
