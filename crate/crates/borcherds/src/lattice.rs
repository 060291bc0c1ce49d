//! Even lattices: Gram matrices, the catalog of simple lattices of signature
//! (2, n) with n >= 3, and discriminant groups L'/L with their Q/Z-valued
//! quadratic form.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::big_int_ratio;
use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Gram matrices
// ---------------------------------------------------------------------------

/// Symmetric integer Gram matrix of an even lattice (diagonal entries even).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GramMatrix {
    dim: usize,
    entries: Vec<i64>, // row-major
}

impl GramMatrix {
    pub fn new(dim: usize, entries: Vec<i64>) -> Self {
        assert_eq!(entries.len(), dim * dim);
        let g = GramMatrix { dim, entries };
        for i in 0..dim {
            assert!(g.get(i, i) % 2 == 0, "even lattice needs even diagonal");
            for j in 0..dim {
                assert_eq!(g.get(i, j), g.get(j, i), "gram matrix must be symmetric");
            }
        }
        g
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn row_major(&self) -> &[i64] {
        &self.entries
    }

    pub fn scaled(&self, c: i64) -> GramMatrix {
        GramMatrix::new(self.dim, self.entries.iter().map(|&x| x * c).collect())
    }

    pub fn block_diag(blocks: &[GramMatrix]) -> GramMatrix {
        let dim: usize = blocks.iter().map(|b| b.dim).sum();
        let mut entries = vec![0i64; dim * dim];
        let mut off = 0;
        for b in blocks {
            for i in 0..b.dim {
                for j in 0..b.dim {
                    entries[(off + i) * dim + (off + j)] = b.get(i, j);
                }
            }
            off += b.dim;
        }
        GramMatrix { dim, entries }
    }

    /// Exact determinant (fraction-free Bareiss elimination).
    pub fn det(&self) -> BigInt {
        let n = self.dim;
        if n == 0 {
            return BigInt::one();
        }
        let mut a: Vec<Vec<BigInt>> = self
            .rows()
            .into_iter()
            .map(|r| r.into_iter().map(BigInt::from).collect())
            .collect();
        let mut sign = 1i32;
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                let swap = (k + 1..n).find(|&i| !a[i][k].is_zero());
                match swap {
                    Some(i) => {
                        a.swap(k, i);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &a[k][k] * &a[i][j] - &a[i][k] * &a[k][j];
                    a[i][j] = num / &prev;
                }
            }
            prev = a[k][k].clone();
        }
        let d = a[n - 1][n - 1].clone();
        if sign < 0 {
            -d
        } else {
            d
        }
    }

    /// Signature (b+, b-) of the real quadratic space; requires nondegeneracy.
    pub fn signature(&self) -> (usize, usize) {
        let n = self.dim;
        let mut a: Vec<Vec<BigRational>> = self
            .rows()
            .into_iter()
            .map(|r| r.into_iter().map(|x| big_int_ratio(x as i128)).collect())
            .collect();
        let mut pos = 0;
        let mut neg = 0;
        for k in 0..n {
            if a[k][k].is_zero() {
                // bring a nonzero entry to the diagonal: x_k += x_j or x_k -= x_j
                let j = (k..n)
                    .find(|&j| j != k && !a[k][j].is_zero())
                    .expect("degenerate gram matrix");
                let plus = &a[k][k] + big_int_ratio(2) * &a[k][j] + &a[j][j];
                let sign = if plus.is_zero() { -1 } else { 1 };
                let s = big_int_ratio(sign);
                for i in 0..n {
                    let v = &a[i][j] * &s;
                    a[i][k] += v;
                }
                for j2 in 0..n {
                    let v = &a[j][j2] * &s;
                    a[k][j2] += v;
                }
            }
            let pivot = a[k][k].clone();
            if pivot.is_positive() {
                pos += 1;
            } else {
                neg += 1;
            }
            for i in k + 1..n {
                let f = &a[i][k] / &pivot;
                if f.is_zero() {
                    continue;
                }
                for j in k..n {
                    let v = &a[k][j] * &f;
                    a[i][j] -= v;
                }
            }
            for j in k + 1..n {
                a[k][j] = BigRational::zero();
            }
        }
        (pos, neg)
    }

    /// S v for a rational vector v.
    pub fn apply(&self, v: &[BigRational]) -> Vec<BigRational> {
        (0..self.dim)
            .map(|i| {
                let mut acc = BigRational::zero();
                for j in 0..self.dim {
                    if !v[j].is_zero() {
                        acc += big_int_ratio(self.get(i, j) as i128) * &v[j];
                    }
                }
                acc
            })
            .collect()
    }

    /// Bilinear form (x, y) = x^T S y.
    pub fn bilinear(&self, x: &[BigRational], y: &[BigRational]) -> BigRational {
        let sy = self.apply(y);
        x.iter().zip(sy.iter()).map(|(a, b)| a * b).sum()
    }

    /// Quadratic form Q(x) = (x, x)/2.
    pub fn quad(&self, x: &[BigRational]) -> BigRational {
        self.bilinear(x, x) / big_int_ratio(2)
    }
}

// ---------------------------------------------------------------------------
// Root lattices and hyperbolic planes
// ---------------------------------------------------------------------------

pub fn gram_a(n: usize) -> GramMatrix {
    let mut e = vec![0i64; n * n];
    for i in 0..n {
        e[i * n + i] = 2;
        if i + 1 < n {
            e[i * n + i + 1] = -1;
            e[(i + 1) * n + i] = -1;
        }
    }
    GramMatrix::new(n, e)
}

pub fn gram_d(n: usize) -> GramMatrix {
    assert!(n >= 4);
    let mut e = vec![0i64; n * n];
    for i in 0..n {
        e[i * n + i] = 2;
    }
    for i in 0..n - 2 {
        e[i * n + i + 1] = -1;
        e[(i + 1) * n + i] = -1;
    }
    e[(n - 3) * n + (n - 1)] = -1;
    e[(n - 1) * n + (n - 3)] = -1;
    GramMatrix::new(n, e)
}

fn gram_from_edges(n: usize, edges: &[(usize, usize)]) -> GramMatrix {
    let mut e = vec![0i64; n * n];
    for i in 0..n {
        e[i * n + i] = 2;
    }
    for &(a, b) in edges {
        e[(a - 1) * n + (b - 1)] = -1;
        e[(b - 1) * n + (a - 1)] = -1;
    }
    GramMatrix::new(n, e)
}

pub fn gram_e6() -> GramMatrix {
    gram_from_edges(6, &[(1, 3), (3, 4), (4, 5), (5, 6), (2, 4)])
}

pub fn gram_e7() -> GramMatrix {
    gram_from_edges(7, &[(1, 3), (3, 4), (4, 5), (5, 6), (6, 7), (2, 4)])
}

pub fn gram_e8() -> GramMatrix {
    gram_from_edges(8, &[(1, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 8), (2, 4)])
}

/// Hyperbolic plane U(N): [[0, N], [N, 0]].
pub fn gram_u(n: i64) -> GramMatrix {
    GramMatrix::new(2, vec![0, n, n, 0])
}

/// A1 rescaled by c: the 1x1 matrix (2c).
pub fn gram_a1(c: i64) -> GramMatrix {
    GramMatrix::new(1, vec![2 * c])
}

/// The rank-3 lattice with genus symbol 8_3^{-1}.
pub fn gram_s8() -> GramMatrix {
    GramMatrix::new(3, vec![-8, -4, 0, -4, -2, -1, 0, -1, -2])
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

/// A catalog entry: an even lattice of signature (2, n) given by an explicit
/// block-diagonal Gram matrix plus its label data.
#[derive(Clone, Debug)]
pub struct LatticeSpec {
    pub id: String,
    pub genus_symbol: String,
    /// signature is (2, n)
    pub n: usize,
    pub gram: GramMatrix,
    /// |L'/L|
    pub expected_d: u128,
    /// scale of a split hyperbolic plane U(N) used for the coefficient bound
    pub split_n: u64,
    /// component Gram matrices, in order
    pub blocks: Vec<GramMatrix>,
}

impl LatticeSpec {
    pub fn rank(&self) -> usize {
        self.n + 2
    }

    /// Offsets of the components within the full coordinate vector.
    pub fn block_offsets(&self) -> Vec<usize> {
        let mut offs = Vec::with_capacity(self.blocks.len());
        let mut off = 0;
        for b in &self.blocks {
            offs.push(off);
            off += b.dim();
        }
        offs
    }

    /// Index and scale of a split U(N) summand with N = split_n.
    pub fn split_u_block(&self) -> Option<(usize, i64)> {
        for (i, b) in self.blocks.iter().enumerate() {
            if b.dim() == 2 && b.get(0, 0) == 0 && b.get(1, 1) == 0 && b.get(0, 1) == self.split_n as i64 {
                return Some((i, b.get(0, 1)));
            }
        }
        None
    }
}

fn entry(
    id: &str,
    genus: &str,
    n: usize,
    blocks: Vec<GramMatrix>,
    expected_d: u128,
    split_n: u64,
) -> LatticeSpec {
    let gram = GramMatrix::block_diag(&blocks);
    let spec = LatticeSpec {
        id: id.to_string(),
        genus_symbol: genus.to_string(),
        n,
        gram,
        expected_d,
        split_n,
        blocks,
    };
    let det = spec.gram.det();
    assert_eq!(
        det.magnitude().to_u128().expect("catalog determinant fits"),
        spec.expected_d,
        "catalog determinant mismatch for {}",
        spec.id
    );
    let (bp, bm) = spec.gram.signature();
    assert_eq!((bp, bm), (2, spec.n), "catalog signature mismatch for {}", spec.id);
    spec
}

/// The 39 simple even lattices of signature (2, n), n >= 3, one per genus.
pub fn build_catalog() -> Vec<LatticeSpec> {
    let neg = |g: GramMatrix| g.scaled(-1);
    let a1 = gram_a1;
    let u = gram_u;
    let mut cat = Vec::with_capacity(39);

    // n = 3
    cat.push(entry("n3_2_7p1", "2_7^{+1}", 3, vec![a1(-1), u(1), u(1)], 2, 1));
    cat.push(entry("n3_2_7p3", "2_7^{+3}", 3, vec![a1(-1), u(2), u(1)], 8, 1));
    cat.push(entry("n3_2_7p1_4p2", "2_7^{+1}4^{+2}", 3, vec![a1(-1), u(4), u(1)], 32, 1));
    cat.push(entry("n3_2_7p5", "2_7^{+5}", 3, vec![a1(-1), u(2), u(2)], 32, 2));
    cat.push(entry("n3_2_7p3_4p2", "2_7^{+3}4^{+2}", 3, vec![a1(-1), u(2), u(4)], 128, 2));
    cat.push(entry("n3_2_7p1_4p4", "2_7^{+1}4^{+4}", 3, vec![a1(-1), u(4), u(4)], 512, 4));
    cat.push(entry("n3_4_7p1", "4_7^{+1}", 3, vec![a1(-2), u(1), u(1)], 4, 1));
    cat.push(entry("n3_2p2_4_7p1", "2^{+2}4_7^{+1}", 3, vec![a1(-2), u(2), u(1)], 16, 1));
    cat.push(entry("n3_2p4_4_7p1", "2^{+4}4_7^{+1}", 3, vec![a1(-2), u(2), u(2)], 64, 2));
    cat.push(entry("n3_2_1p1_3p1", "2_1^{+1}3^{+1}", 3, vec![a1(-3), u(1), u(1)], 6, 1));
    cat.push(entry("n3_2_7p1_3m2", "2_7^{+1}3^{-2}", 3, vec![a1(-1), u(3), u(1)], 18, 1));
    cat.push(entry("n3_2_7p1_3p4", "2_7^{+1}3^{+4}", 3, vec![a1(-1), u(3), u(3)], 162, 3));
    cat.push(entry("n3_8_7p1", "8_7^{+1}", 3, vec![a1(-4), u(1), u(1)], 8, 1));
    cat.push(entry("n3_8_3m1", "8_3^{-1}", 3, vec![gram_s8(), u(1)], 8, 1));
    cat.push(entry("n3_2p2_8_3m1", "2^{+2}8_3^{-1}", 3, vec![gram_s8(), u(2)], 32, 2));

    // n = 4
    cat.push(entry("n4_3p1", "3^{+1}", 4, vec![neg(gram_a(2)), u(1), u(1)], 3, 1));
    cat.push(entry("n4_3m3", "3^{-3}", 4, vec![neg(gram_a(2)), u(3), u(1)], 27, 1));
    cat.push(entry("n4_3p5", "3^{+5}", 4, vec![neg(gram_a(2)), u(3), u(3)], 243, 3));
    cat.push(entry("n4_2p2_3p1", "2^{+2}3^{+1}", 4, vec![neg(gram_a(2)), u(2), u(1)], 12, 1));
    cat.push(entry("n4_2p4_3p1", "2^{+4}3^{+1}", 4, vec![neg(gram_a(2)), u(2), u(2)], 48, 2));

    // n = 5
    cat.push(entry("n5_4_5m1", "4_5^{-1}", 5, vec![neg(gram_a(3)), u(1), u(1)], 4, 1));
    cat.push(entry("n5_2p2_4_5m1", "2^{+2}4_5^{-1}", 5, vec![neg(gram_a(3)), u(2), u(1)], 16, 1));
    cat.push(entry("n5_2p4_4_5m1", "2^{+4}4_5^{-1}", 5, vec![neg(gram_a(3)), u(2), u(2)], 64, 2));

    // n = 6
    cat.push(entry("n6_2m2", "2^{-2}", 6, vec![neg(gram_d(4)), u(1), u(1)], 4, 1));
    cat.push(entry("n6_2m4", "2^{-4}", 6, vec![neg(gram_d(4)), u(2), u(1)], 16, 1));
    cat.push(entry("n6_2m6", "2^{-6}", 6, vec![neg(gram_d(4)), u(2), u(2)], 64, 2));
    cat.push(entry("n6_5p1", "5^{+1}", 6, vec![neg(gram_a(4)), u(1), u(1)], 5, 1));

    // n = 7
    cat.push(entry("n7_4_3m1", "4_3^{-1}", 7, vec![neg(gram_d(5)), u(1), u(1)], 4, 1));
    cat.push(entry("n7_2_1p1_3m1", "2_1^{+1}3^{-1}", 7, vec![neg(gram_a(5)), u(1), u(1)], 6, 1));

    // n = 8
    cat.push(entry("n8_3m1", "3^{-1}", 8, vec![neg(gram_e6()), u(1), u(1)], 3, 1));
    cat.push(entry("n8_2_2p2", "2_2^{+2}", 8, vec![neg(gram_d(6)), u(1), u(1)], 4, 1));
    cat.push(entry("n8_7p1", "7^{+1}", 8, vec![neg(gram_a(6)), u(1), u(1)], 7, 1));

    // n = 9
    cat.push(entry("n9_2_1p1", "2_1^{+1}", 9, vec![neg(gram_e7()), u(1), u(1)], 2, 1));
    cat.push(entry("n9_4_1p1", "4_1^{+1}", 9, vec![neg(gram_d(7)), u(1), u(1)], 4, 1));
    cat.push(entry("n9_8_1p1", "8_1^{+1}", 9, vec![neg(gram_a(7)), u(1), u(1)], 8, 1));

    // n = 10
    cat.push(entry("n10_1p1", "1^{+1}", 10, vec![neg(gram_e8()), u(1), u(1)], 1, 1));
    cat.push(entry("n10_2p2", "2^{+2}", 10, vec![neg(gram_e8()), u(2), u(1)], 4, 1));

    // n = 18
    cat.push(entry(
        "n18_1p1",
        "1^{+1}",
        18,
        vec![neg(gram_e8()), neg(gram_e8()), u(1), u(1)],
        1,
        1,
    ));

    // n = 26
    cat.push(entry(
        "n26_1p1",
        "1^{+1}",
        26,
        vec![neg(gram_e8()), neg(gram_e8()), neg(gram_e8()), u(1), u(1)],
        1,
        1,
    ));

    cat
}

pub fn find_lattice(id: &str) -> Result<LatticeSpec> {
    build_catalog()
        .into_iter()
        .find(|l| l.id == id)
        .ok_or_else(|| Error::UnknownLattice(id.to_string()))
}

// ---------------------------------------------------------------------------
// Smith normal form
// ---------------------------------------------------------------------------

struct Snf {
    diag: Vec<BigInt>,
    q: Vec<Vec<BigInt>>,
    q_inv: Vec<Vec<BigInt>>,
}

fn smith_normal_form(g: &GramMatrix) -> Snf {
    let n = g.dim();
    let mut a: Vec<Vec<BigInt>> = g
        .rows()
        .into_iter()
        .map(|r| r.into_iter().map(BigInt::from).collect())
        .collect();
    let mut q: Vec<Vec<BigInt>> = identity(n);
    let mut q_inv: Vec<Vec<BigInt>> = identity(n);

    let col_swap = |a: &mut Vec<Vec<BigInt>>, q: &mut Vec<Vec<BigInt>>, qi: &mut Vec<Vec<BigInt>>, i: usize, j: usize| {
        for row in a.iter_mut() {
            row.swap(i, j);
        }
        for row in q.iter_mut() {
            row.swap(i, j);
        }
        qi.swap(i, j);
    };
    // col j += c * col i
    let col_addmul = |a: &mut Vec<Vec<BigInt>>, q: &mut Vec<Vec<BigInt>>, qi: &mut Vec<Vec<BigInt>>, j: usize, i: usize, c: &BigInt| {
        for row in a.iter_mut() {
            let v = &row[i] * c;
            row[j] += v;
        }
        for row in q.iter_mut() {
            let v = &row[i] * c;
            row[j] += v;
        }
        let (ri, rj): (Vec<BigInt>, Vec<BigInt>) = (qi[i].clone(), qi[j].clone());
        for (k, v) in ri.iter().enumerate() {
            qi[i][k] = v - c * &rj[k];
        }
    };

    for t in 0..n {
        loop {
            // locate a nonzero entry of minimal absolute value in the trailing block
            let mut best: Option<(usize, usize)> = None;
            for i in t..n {
                for j in t..n {
                    if !a[i][j].is_zero() {
                        let better = match &best {
                            None => true,
                            Some((bi, bj)) => a[i][j].magnitude() < a[*bi][*bj].magnitude(),
                        };
                        if better {
                            best = Some((i, j));
                        }
                    }
                }
            }
            let (pi, pj) = match best {
                Some(x) => x,
                None => return finish_snf(a, q, q_inv, n),
            };
            if pi != t {
                a.swap(t, pi);
            }
            if pj != t {
                col_swap(&mut a, &mut q, &mut q_inv, t, pj);
            }
            if a[t][t].is_negative() {
                for x in a[t].iter_mut().skip(0) {
                    *x = -x.clone();
                }
            }
            // clear the rest of row t and column t
            let mut dirty = false;
            for i in t + 1..n {
                if !a[i][t].is_zero() {
                    let qq = num_integer::Integer::div_floor(&a[i][t], &a[t][t]);
                    let row_t = a[t].clone();
                    for (k, v) in row_t.iter().enumerate() {
                        a[i][k] -= &qq * v;
                    }
                    if !a[i][t].is_zero() {
                        dirty = true;
                    }
                }
            }
            for j in t + 1..n {
                if !a[t][j].is_zero() {
                    let qq = num_integer::Integer::div_floor(&a[t][j], &a[t][t]);
                    col_addmul(&mut a, &mut q, &mut q_inv, j, t, &(-qq));
                    if !a[t][j].is_zero() {
                        dirty = true;
                    }
                }
            }
            if dirty {
                continue;
            }
            // enforce divisibility of the trailing block by the pivot
            let mut fixed = true;
            'outer: for i in t + 1..n {
                for j in t + 1..n {
                    if !(&a[i][j] % &a[t][t]).is_zero() {
                        let row_i = a[i].clone();
                        for (k, v) in row_i.iter().enumerate() {
                            a[t][k] += v;
                        }
                        fixed = false;
                        break 'outer;
                    }
                }
            }
            if fixed {
                break;
            }
        }
    }
    finish_snf(a, q, q_inv, n)
}

fn finish_snf(a: Vec<Vec<BigInt>>, q: Vec<Vec<BigInt>>, q_inv: Vec<Vec<BigInt>>, n: usize) -> Snf {
    // sanity: the tracked inverse really is the inverse of Q
    if cfg!(debug_assertions) {
        for i in 0..n {
            for j in 0..n {
                let mut acc = BigInt::zero();
                for k in 0..n {
                    acc += &q[i][k] * &q_inv[k][j];
                }
                let expect = if i == j { BigInt::one() } else { BigInt::zero() };
                assert_eq!(acc, expect, "column-op inverse tracking broken");
            }
        }
    }
    let diag: Vec<BigInt> = (0..n).map(|i| a[i][i].magnitude().clone().into()).collect();
    for i in 0..n.saturating_sub(1) {
        if !diag[i].is_zero() {
            assert!(
                (&diag[i + 1] % &diag[i]).is_zero(),
                "smith normal form divisibility chain broken"
            );
        }
    }
    Snf { diag, q, q_inv }
}

fn identity(n: usize) -> Vec<Vec<BigInt>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                .collect()
        })
        .collect()
}

/// Elementary divisors of the cokernel of S (those greater than 1, increasing).
pub fn elementary_divisors(g: &GramMatrix) -> Vec<u64> {
    smith_normal_form(g)
        .diag
        .iter()
        .map(|d| d.to_u64().expect("elementary divisor fits in u64"))
        .filter(|&d| d > 1)
        .collect()
}

// ---------------------------------------------------------------------------
// Discriminant groups
// ---------------------------------------------------------------------------

/// An element of L'/L: residues against the elementary divisors, its order,
/// and Q(gamma) reduced into [0, 1).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FqmElement {
    pub coords: Vec<u64>,
    pub order: u64,
    pub qval: BigRational,
}

/// The finite quadratic module L'/L presented by elementary divisors with
/// generator lifts into L' = S^{-1} Z^m.
#[derive(Clone, Debug)]
pub struct DiscriminantGroup {
    gram: GramMatrix,
    divisors: Vec<u64>,
    lifts: Vec<Vec<BigRational>>,
    elements: Vec<FqmElement>,
}

impl DiscriminantGroup {
    pub fn new(gram: &GramMatrix) -> Self {
        let det = gram.det();
        assert!(!det.is_zero(), "gram matrix must be invertible");
        let snf = smith_normal_form(gram);
        let n = gram.dim();
        let mut divisors = Vec::new();
        let mut lifts = Vec::new();
        for i in 0..n {
            let d = snf.diag[i].to_u64().expect("elementary divisor fits in u64");
            assert!(d >= 1);
            if d > 1 {
                // generator lift: (column i of Q) / d_i
                let lift: Vec<BigRational> = (0..n)
                    .map(|r| BigRational::new(snf.q[r][i].clone(), BigInt::from(d)))
                    .collect();
                divisors.push(d);
                lifts.push(lift);
            }
        }
        let order: u128 = divisors.iter().map(|&d| d as u128).product();
        assert_eq!(
            order,
            det.magnitude().to_u128().expect("determinant fits"),
            "elementary divisor product must equal |det|"
        );
        let mut group = DiscriminantGroup { gram: gram.clone(), divisors, lifts, elements: Vec::new() };
        group.elements = group.enumerate_elements();
        group
    }

    fn enumerate_elements(&self) -> Vec<FqmElement> {
        let r = self.divisors.len();
        let total: u128 = self.divisors.iter().map(|&d| d as u128).product();
        let mut out = Vec::with_capacity(total as usize);
        let mut coords = vec![0u64; r];
        loop {
            out.push(self.element(&coords));
            // odometer, last coordinate fastest
            let mut i = r;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                coords[i] += 1;
                if coords[i] < self.divisors[i] {
                    break;
                }
                coords[i] = 0;
                if i == 0 {
                    return out;
                }
            }
        }
    }

    /// Builds the element with the given residues, computing order and Q-value.
    pub fn element(&self, coords: &[u64]) -> FqmElement {
        assert_eq!(coords.len(), self.divisors.len());
        let coords: Vec<u64> = coords
            .iter()
            .zip(self.divisors.iter())
            .map(|(&c, &d)| c % d)
            .collect();
        let mut order = 1u64;
        for (&c, &d) in coords.iter().zip(self.divisors.iter()) {
            let g = num_integer::gcd(c, d);
            order = num_integer::lcm(order, d / g);
        }
        let qval = self.q_value_of_lift(&self.lift_coords(&coords));
        FqmElement { coords, order, qval }
    }

    pub fn lift_coords(&self, coords: &[u64]) -> Vec<BigRational> {
        let n = self.gram.dim();
        let mut v = vec![BigRational::zero(); n];
        for (i, &c) in coords.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let c = big_int_ratio(c as i128);
            for r in 0..n {
                v[r] += &c * &self.lifts[i][r];
            }
        }
        v
    }

    pub fn lift(&self, e: &FqmElement) -> Vec<BigRational> {
        self.lift_coords(&e.coords)
    }

    /// Q of a dual vector, reduced into [0, 1).
    pub fn q_value_of_lift(&self, lift: &[BigRational]) -> BigRational {
        reduce_mod_one(&self.gram.quad(lift))
    }

    pub fn q_value(&self, e: &FqmElement) -> BigRational {
        e.qval.clone()
    }

    pub fn order_of(&self, e: &FqmElement) -> u64 {
        e.order
    }

    pub fn neg(&self, e: &FqmElement) -> FqmElement {
        let coords: Vec<u64> = e
            .coords
            .iter()
            .zip(self.divisors.iter())
            .map(|(&c, &d)| if c == 0 { 0 } else { d - c })
            .collect();
        self.element(&coords)
    }

    pub fn zero(&self) -> FqmElement {
        self.element(&vec![0; self.divisors.len()])
    }

    pub fn is_two_torsion(&self, e: &FqmElement) -> bool {
        e.coords
            .iter()
            .zip(self.divisors.iter())
            .all(|(&c, &d)| (2 * c) % d == 0)
    }

    pub fn divisors(&self) -> &[u64] {
        &self.divisors
    }

    /// Largest elementary divisor (1 for the trivial group).
    pub fn max_divisor(&self) -> u64 {
        self.divisors.last().copied().unwrap_or(1)
    }

    pub fn order(&self) -> u128 {
        self.divisors.iter().map(|&d| d as u128).product()
    }

    pub fn elements(&self) -> &[FqmElement] {
        &self.elements
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }
}

/// Reduces a rational into [0, 1).
pub fn reduce_mod_one(x: &BigRational) -> BigRational {
    x - x.floor()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::big_ratio;

    #[test]
    fn root_lattice_determinants() {
        for n in 1..=7 {
            assert_eq!(gram_a(n).det(), BigInt::from(n as i64 + 1));
        }
        for n in 4..=7 {
            assert_eq!(gram_d(n).det(), BigInt::from(4));
        }
        assert_eq!(gram_e6().det(), BigInt::from(3));
        assert_eq!(gram_e7().det(), BigInt::from(2));
        assert_eq!(gram_e8().det(), BigInt::from(1));
        assert_eq!(gram_s8().det().magnitude().to_u64().unwrap(), 8);
        assert_eq!(gram_u(4).det(), BigInt::from(-16));
    }

    #[test]
    fn catalog_has_39_entries_with_consistent_data() {
        let cat = build_catalog();
        assert_eq!(cat.len(), 39);
        assert_eq!(cat.iter().filter(|l| l.n == 3).count(), 15);
        // entry construction already asserts |det| = expected_d and signature (2, n)
        for l in &cat {
            assert_eq!(l.rank(), l.gram.dim());
            assert!(l.split_u_block().is_some(), "{} must split U(split_n)", l.id);
        }
    }

    #[test]
    fn catalog_examples_from_the_tables() {
        let cat = build_catalog();
        let l = cat.iter().find(|l| l.id == "n3_8_7p1").unwrap();
        assert_eq!(l.gram.rows()[0], vec![-8, 0, 0, 0, 0]);
        assert_eq!(l.expected_d, 8);
        let l = cat.iter().find(|l| l.id == "n3_8_3m1").unwrap();
        assert_eq!(l.blocks[0], gram_s8());
        // the corrected row: 2^{+4}4_7^{+1} is A1(-2) + U(2) + U(2) with d = 64
        let l = cat.iter().find(|l| l.id == "n3_2p4_4_7p1").unwrap();
        assert_eq!(l.blocks[0], gram_a1(-2));
        assert_eq!(l.expected_d, 64);
    }

    #[test]
    fn discriminant_group_structures() {
        // U is unimodular
        let g = DiscriminantGroup::new(&gram_u(1));
        assert_eq!(g.order(), 1);
        assert_eq!(g.elements().len(), 1);
        // U(4) gives (Z/4)^2
        let g = DiscriminantGroup::new(&gram_u(4));
        assert_eq!(g.divisors(), &[4, 4]);
        assert_eq!(g.order(), 16);
        // A1(-4) + U + U gives Z/8 with Q(generator) = -1/16 mod 1
        let l = find_lattice("n3_8_7p1").unwrap();
        let g = DiscriminantGroup::new(&l.gram);
        assert_eq!(g.divisors(), &[8]);
        let gen = g.element(&[1]);
        assert_eq!(gen.qval, big_ratio(15, 16));
        assert_eq!(gen.order, 8);
    }

    #[test]
    fn q_values_are_lift_independent_and_symmetric() {
        let l = find_lattice("n3_2_7p1_4p4").unwrap();
        let g = DiscriminantGroup::new(&l.gram);
        assert_eq!(g.order(), 512);
        for e in g.elements().iter().step_by(37) {
            // perturb the lift by lattice vectors
            let mut lift = g.lift(e);
            lift[0] += big_int_ratio(3);
            lift[2] -= big_int_ratio(5);
            assert_eq!(g.q_value_of_lift(&lift), e.qval);
            // Q(gamma) = Q(-gamma)
            assert_eq!(g.neg(e).qval, e.qval);
        }
    }

    #[test]
    fn negation_fixes_exactly_the_two_torsion() {
        let l = find_lattice("n3_2_7p1_4p4").unwrap();
        let g = DiscriminantGroup::new(&l.gram);
        let fixed = g
            .elements()
            .iter()
            .filter(|e| g.neg(e).coords == e.coords)
            .count();
        let two_torsion = g.elements().iter().filter(|e| g.is_two_torsion(e)).count();
        assert_eq!(fixed, two_torsion);
        assert_eq!(fixed, 32); // Z/2 x (Z/4)^4 has 2^5 two-torsion points
    }

    #[test]
    fn element_orders() {
        let l = find_lattice("n3_2_7p1_4p4").unwrap();
        let g = DiscriminantGroup::new(&l.gram);
        assert_eq!(g.zero().order, 1);
        // divisors are [2, 4, 4, 4, 4]
        assert_eq!(g.divisors(), &[2, 4, 4, 4, 4]);
        assert_eq!(g.element(&[1, 0, 0, 0, 0]).order, 2);
        assert_eq!(g.element(&[0, 1, 0, 0, 0]).order, 4);
    }

    #[test]
    fn lifts_are_dual_vectors() {
        // S * lift must be integral for every generator lift
        for l in build_catalog() {
            let g = DiscriminantGroup::new(&l.gram);
            for e in g.elements().iter().take(20) {
                let lift = g.lift(e);
                for x in l.gram.apply(&lift) {
                    assert!(x.denom().is_one(), "lift of {:?} not in dual", e.coords);
                }
            }
        }
    }
}
