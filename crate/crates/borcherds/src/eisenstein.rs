//! Exact rational Fourier coefficients a_E(gamma, n) of the Eisenstein series
//! of weight m/2 for the dual Weil representation, and per-lattice coefficient
//! tables partitioned into orbits of identical expansions.
//!
//! The coefficient is assembled as an archimedean prefactor (tracked in a
//! [`SymbolicConstant`] so that powers of pi and square roots cancel exactly),
//! an L-value or zeta quotient with a twisted divisor sum, and a finite
//! product of stabilized local densities at the primes dividing 2 det(S).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;

use crate::arith::{
    big_int_ratio, divisors_from_factors, factorize, fmt_ratio, gamma_exact,
    l_value_exact, l_value_quadratic_series, moebius_from_factors, ratio_pow_half,
    twisted_divisor_sum, two_pow_half, zeta_exact_even, QuadChar, SymbolicConstant,
};
use crate::error::Result;
use crate::lattice::{DiscriminantGroup, FqmElement, LatticeSpec};
use crate::local::DensityEngine;

/// Per-lattice computation context: discriminant group, density engine and
/// the constants entering the coefficient formula.
pub struct LatticeContext {
    pub spec: LatticeSpec,
    pub group: DiscriminantGroup,
    engine: DensityEngine,
    det: BigInt,
    bad_primes: Vec<u64>,
}

impl LatticeContext {
    pub fn new(spec: &LatticeSpec) -> Self {
        let group = DiscriminantGroup::new(&spec.gram);
        let engine = DensityEngine::new(&spec.gram);
        let det = spec.gram.det();
        let two_det = BigInt::from(2) * det.clone();
        let bad_primes: Vec<u64> = factorize(two_det.magnitude().to_u128().unwrap())
            .keys()
            .copied()
            .collect();
        LatticeContext { spec: spec.clone(), group, engine, det, bad_primes }
    }

    pub fn rank(&self) -> usize {
        self.spec.rank()
    }

    /// |L'/L|
    pub fn d(&self) -> u128 {
        self.spec.expected_d
    }

    /// The exact coefficient a_E(gamma, n) for n > 0. Returns 0 off the
    /// support n = -Q(gamma) mod 1.
    pub fn coefficient(&mut self, gamma: &FqmElement, n: &BigRational) -> Result<BigRational> {
        assert!(n.is_positive());
        if !(n + &gamma.qval).denom().is_one() {
            return Ok(BigRational::zero());
        }
        let m = self.rank() as u64;
        let d = self.d();
        let lift = self.group.lift(gamma);

        // archimedean prefactor 2^{k+1} pi^k n^{k-1} (-1)^{b+/2} / (sqrt(d) Gamma(k))
        let mut pref = two_pow_half(m as i64 + 2); // 2^{k+1}, 2k = m
        pref = pref.mul(&SymbolicConstant::sqrt_pi_pow(m as i32)); // pi^{m/2}
        pref = pref.mul(&ratio_pow_half(n, m as i64 - 2)); // n^{k-1}
        let (bplus, _) = (2u32, ());
        if bplus / 2 % 2 == 1 {
            pref.r = -pref.r;
        }
        pref = pref.div(&SymbolicConstant::sqrt_int(d));
        pref = pref.div(&gamma_exact(m));

        // local densities at p | 2 det S
        let mut local = BigRational::one();
        for &p in &self.bad_primes {
            let dens = self.engine.local_density(&lift, n, p)?;
            if dens.is_zero() {
                return Ok(BigRational::zero());
            }
            local *= dens;
            if m % 2 == 1 {
                // odd rank: each bad Euler factor carries 1/(1 - p^{1-m})
                let corr = BigRational::one()
                    - BigRational::from_integer(BigInt::from(p)).pow(1 - m as i32);
                local /= corr;
            }
        }

        let value = if m % 2 == 0 {
            // D = (-1)^{m/2} det(S); sigma_{1-k}(2 d^2 n, chi_{4D}) / L(k, chi_{4D})
            let sign = if (m / 2) % 2 == 0 { 1 } else { -1 };
            let disc4d = 4 * sign * self.det.to_i128().expect("determinant fits i128");
            let n_tilde = (n * BigRational::from_integer(BigInt::from(2 * (d * d) as i128)))
                .to_integer()
                .to_u128()
                .expect("scaled exponent fits");
            let chi = QuadChar::new(disc4d)?;
            let sigma = twisted_divisor_sum(1 - (m as i64) / 2, n_tilde, &chi);
            let lval = l_value_quadratic_series(m as u32 / 2, disc4d)?;
            pref.mul_ratio(&sigma).mul_ratio(&local).div(&lval)
        } else {
            // A = +-4 d^2 n |det S| with sign (-1)^{(m-1)/2}; D = fundamental
            // part, f = the prime-to-2det part of sqrt(A/D)
            let a_mag = (n * BigRational::from_integer(BigInt::from(4 * (d * d) as i128 * d as i128)))
                .to_integer()
                .to_i128()
                .expect("discriminant argument fits i128");
            let sign = if ((m - 1) / 2) % 2 == 0 { 1 } else { -1 };
            let a = sign * a_mag;
            let (fund, f_all) = crate::arith::core_discriminant(a)?;
            let mut f: u128 = 1;
            for (p, e) in factorize(f_all) {
                if !self.bad_primes.contains(&p) {
                    f *= (p as u128).pow(e);
                }
            }
            let chi = QuadChar::new(fund)?;
            let s = (m as u32 - 1) / 2; // k - 1/2
            let lval = l_value_exact(s, &chi)?;
            let zeta = zeta_exact_even(m - 1); // zeta(2k - 1)
            // sum over t | f of mu(t) chi(t) t^{1/2-k} sigma_{2-2k}(f/t)
            let mut sum = BigRational::zero();
            let trivial = QuadChar::trivial();
            for t in divisors_from_factors(&factorize(f)) {
                let tf = factorize(t);
                let mu = moebius_from_factors(&tf);
                if mu == 0 {
                    continue;
                }
                let c = chi.eval(t as i128);
                if c == 0 {
                    continue;
                }
                let tpow = BigRational::from_integer(BigInt::from(t)).pow((1 - m as i32) / 2);
                let sig = twisted_divisor_sum(2 - m as i64, f / t, &trivial);
                let term = big_int_ratio((mu * c) as i128) * tpow * sig;
                sum += term;
            }
            pref.mul(&lval).div(&zeta).mul_ratio(&sum).mul_ratio(&local)
        };

        value.into_rational()
    }
}

// ---------------------------------------------------------------------------
// Coefficient tables and orbit partitions
// ---------------------------------------------------------------------------

/// One group of discriminant-form elements sharing an identical expansion.
#[derive(Clone, Debug)]
pub struct Orbit {
    /// lexicographically least coordinate vector in the group
    pub representative: Vec<u64>,
    pub size: usize,
    pub order: u64,
    pub qval: BigRational,
    /// (exponent, coefficient), ascending in the exponent
    pub expansion: Vec<(BigRational, BigRational)>,
}

/// All coefficients of the Eisenstein series of one lattice up to a cap,
/// grouped by identical expansions.
#[derive(Clone, Debug)]
pub struct EisensteinTable {
    pub lattice_id: String,
    pub cap: BigRational,
    /// expansions per element, indexed like `DiscriminantGroup::elements()`
    pub expansions: Vec<Vec<(BigRational, BigRational)>>,
    pub orbits: Vec<Orbit>,
}

/// Exponents 0 < n < floor(cap) + 1 with n = -q mod 1.
fn support_exponents(q: &BigRational, cap: &BigRational) -> Vec<BigRational> {
    let mut out = Vec::new();
    let start = if q.is_zero() {
        BigRational::one()
    } else {
        BigRational::one() - q
    };
    let limit = cap.floor() + BigRational::one();
    let mut n = start;
    while n < limit {
        out.push(n.clone());
        n += BigRational::one();
    }
    out
}

/// Computes the full coefficient table of a lattice up to `cap`.
///
/// Coefficients are computed once per +-pair (the symmetry
/// a_E(gamma, n) = a_E(-gamma, n) is enforced separately by the test suite).
pub fn expansion_table(ctx: &mut LatticeContext, cap: &BigRational) -> Result<EisensteinTable> {
    assert!(*cap >= BigRational::one());
    let elems: Vec<FqmElement> = ctx.group.elements().to_vec();
    let index_of: BTreeMap<Vec<u64>, usize> = elems
        .iter()
        .enumerate()
        .map(|(i, e)| (e.coords.clone(), i))
        .collect();

    let mut expansions: Vec<Option<Vec<(BigRational, BigRational)>>> = vec![None; elems.len()];
    for (i, e) in elems.iter().enumerate() {
        if expansions[i].is_some() {
            continue;
        }
        let mut exp = Vec::new();
        if e.coords.iter().all(|&c| c == 0) {
            exp.push((BigRational::zero(), BigRational::one()));
        }
        for n in support_exponents(&e.qval, cap) {
            let c = ctx.coefficient(e, &n)?;
            exp.push((n, c));
        }
        let neg = ctx.group.neg(e);
        let j = index_of[&neg.coords];
        expansions[i] = Some(exp.clone());
        expansions[j].get_or_insert(exp);
    }
    let expansions: Vec<Vec<(BigRational, BigRational)>> =
        expansions.into_iter().map(|e| e.unwrap()).collect();

    // group by (order, qval, expansion); orbits of O(L'/L) preserve all three
    let mut groups: BTreeMap<(u64, BigRational, Vec<(BigRational, BigRational)>), Vec<usize>> =
        BTreeMap::new();
    for (i, e) in elems.iter().enumerate() {
        groups
            .entry((e.order, e.qval.clone(), expansions[i].clone()))
            .or_default()
            .push(i);
    }
    let mut orbits: Vec<Orbit> = groups
        .into_iter()
        .map(|((order, qval, expansion), members)| {
            let representative = members
                .iter()
                .map(|&i| elems[i].coords.clone())
                .min()
                .unwrap();
            Orbit { representative, size: members.len(), order, qval, expansion }
        })
        .collect();
    orbits.sort_by(|a, b| a.representative.cmp(&b.representative));

    Ok(EisensteinTable {
        lattice_id: ctx.spec.id.clone(),
        cap: cap.clone(),
        expansions,
        orbits,
    })
}

impl EisensteinTable {
    /// Multiset of orbit sizes.
    pub fn orbit_sizes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.orbits.iter().map(|o| o.size).collect();
        v.sort();
        v
    }

    /// CSV rows "gamma;n;coefficient" (gamma lexicographic, then n ascending).
    pub fn to_csv(&self, group: &DiscriminantGroup) -> String {
        let mut out = String::from("gamma,n,coefficient\n");
        let elems = group.elements();
        let mut order: Vec<usize> = (0..elems.len()).collect();
        order.sort_by(|&a, &b| elems[a].coords.cmp(&elems[b].coords));
        for i in order {
            let coords = elems[i]
                .coords
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            for (n, c) in &self.expansions[i] {
                out.push_str(&format!("({}),{},{}\n", coords, fmt_ratio(n), fmt_ratio(c)));
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "lattice": self.lattice_id,
            "cap": fmt_ratio(&self.cap),
            "orbits": self.orbits.iter().map(|o| {
                serde_json::json!({
                    "representative": o.representative,
                    "size": o.size,
                    "order": o.order,
                    "q_value": fmt_ratio(&o.qval),
                    "expansion": o.expansion.iter().map(|(n, c)| {
                        serde_json::json!([fmt_ratio(n), fmt_ratio(c)])
                    }).collect::<Vec<_>>(),
                })
            }).collect::<Vec<_>>(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::big_ratio;
    use crate::lattice::find_lattice;

    fn coeff_at_zero(id: &str, n: i128) -> BigRational {
        let spec = find_lattice(id).unwrap();
        let mut ctx = LatticeContext::new(&spec);
        let zero = ctx.group.zero();
        ctx.coefficient(&zero, &big_int_ratio(n)).unwrap()
    }

    #[test]
    fn unimodular_weight_14_calibration() {
        // 3 E8(-1) + U + U: classical Eisenstein series of weight 14
        assert_eq!(coeff_at_zero("n26_1p1", 1), big_int_ratio(-24));
    }

    #[test]
    fn unimodular_weight_10_calibration() {
        assert_eq!(coeff_at_zero("n18_1p1", 1), big_int_ratio(-264));
    }

    #[test]
    fn unimodular_weight_6_calibration() {
        assert_eq!(coeff_at_zero("n10_1p1", 1), big_int_ratio(-504));
    }

    #[test]
    fn quintic_table_zero_orbit() {
        // A1(-1) + U(4) + U(4): a_E(0, n) for n = 1..3 is -10, 0, 0
        let spec = find_lattice("n3_2_7p1_4p4").unwrap();
        let mut ctx = LatticeContext::new(&spec);
        let zero = ctx.group.zero();
        assert_eq!(ctx.coefficient(&zero, &big_int_ratio(1)).unwrap(), big_int_ratio(-10));
        assert_eq!(ctx.coefficient(&zero, &big_int_ratio(2)).unwrap(), BigRational::zero());
        assert_eq!(ctx.coefficient(&zero, &big_int_ratio(4)).unwrap(), big_int_ratio(-70));
    }

    #[test]
    fn quintic_fractional_coefficients() {
        let spec = find_lattice("n3_2_7p1_4p4").unwrap();
        let mut ctx = LatticeContext::new(&spec);
        // element of order 2 with Q = 3/4: the 10-orbit has -1 at q^{1/4}
        let g = ctx.group.clone();
        let mut seen = std::collections::BTreeSet::new();
        for e in g.elements() {
            if e.qval == big_ratio(3, 4) {
                let c = ctx.coefficient(e, &big_ratio(1, 4)).unwrap();
                seen.insert(fmt_ratio(&c));
            }
        }
        // both the 10-orbit (-1) and the 120-orbit (-1/2) live at Q = 3/4
        assert!(seen.contains("-1"), "expected -1 among {:?}", seen);
        assert!(seen.contains("-1/2"), "expected -1/2 among {:?}", seen);
    }
}
