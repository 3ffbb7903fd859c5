//! Cusps of X₀(N), Hecke and Atkin–Lehner actions on cuspidal divisor
//! groups, special fibres of X₀(pM) (p ∤ M) and X₀(p²) with their modulus
//! incidence data, and closed-form evaluators for the component groups.

use crate::abelian::{cokernel, extend_through_finite_index, AbelianError, FGAbGroup, IntMatrix};
use crate::graphs::{Branch, ExtendedGraph, GraphError, GraphWithModulus, ModulusPoint};
use crate::neron::{
    component_group_j, component_group_jm, tori_phi_maps, Component, ComponentGroupJm,
    ModulusIncidence, ModulusPointData, NeronError, SpecialFibre,
};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ModularError {
    #[error("p must be a prime > 3, got {0}")]
    BadPrime(u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("gcd({0}, {1}) ≠ 1")]
    NotCoprime(u64, u64),
    #[error("invalid cusp: {0}")]
    BadCusp(String),
    #[error("divisor level mismatch")]
    LevelMismatch,
    #[error("Atkin–Lehner is only available for N = p, p² on rational cusps: {0}")]
    UnsupportedAtkinLehner(String),
    #[error("inconsistent supersingular counts: {0}")]
    InconsistentCounts(String),
    #[error("non-integral group order: {0}")]
    NonIntegralOrder(String),
    #[error("Hecke scalar mismatch: {0}")]
    HeckeMismatch(String),
    #[error(transparent)]
    Neron(#[from] NeronError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Abelian(#[from] AbelianError),
}

// ---- elementary number theory helpers ----

pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn valuation(mut n: u64, l: u64) -> u32 {
    let mut v = 0;
    while n % l == 0 {
        n /= l;
        v += 1;
    }
    v
}

/// Least positive inverse of a mod m (m ≥ 1; returns 0 when m = 1).
fn invmod(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return None;
    }
    Some(t0.rem_euclid(m as i128) as u64)
}

fn prime_factors(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut q = 2;
    while q * q <= n {
        if n % q == 0 {
            let mut e = 0;
            while n % q == 0 {
                n /= q;
                e += 1;
            }
            out.push((q, e));
        }
        q += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// ψ(M) = M·∏_{q|M}(1 + 1/q), the index of Γ₀(M).
pub fn psi(m: u64) -> u64 {
    prime_factors(m).iter().fold(1, |acc, &(q, e)| acc * q.pow(e - 1) * (q + 1))
}

fn is_squarefree(m: u64) -> bool {
    prime_factors(m).iter().all(|&(_, e)| e == 1)
}

fn divisors(n: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (1..=n).filter(|d| n % d == 0).collect();
    out.sort();
    out
}

// ---- cusps and cuspidal divisors ----

/// The geometric cusp (Ner_d, C_{ζ_N^c}) of X₀(N), determined by d | N and
/// the class of c in (ℤ/m_d)^× where m_d = gcd(d, N/d). Stored in normal
/// form: c is the least positive representative (c = 1 when m_d ≤ 2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct GeometricCusp {
    pub level: u64,
    pub d: u64,
    pub c: u64,
}

impl GeometricCusp {
    pub fn new(level: u64, d: u64, c: u64) -> Result<Self, ModularError> {
        if level == 0 || d == 0 || level % d != 0 {
            return Err(ModularError::BadCusp(format!("d = {} does not divide N = {}", d, level)));
        }
        let m = d.gcd(&(level / d));
        let c = if m <= 2 {
            1
        } else {
            let r = c % m;
            if r.gcd(&m) != 1 {
                return Err(ModularError::BadCusp(format!(
                    "c = {} is not a unit mod m_d = {}",
                    c, m
                )));
            }
            r
        };
        Ok(GeometricCusp { level, d, c })
    }

    /// m_d = gcd(d, N/d): the cusp is defined over ℚ(μ_{m_d}).
    pub fn m(&self) -> u64 {
        self.d.gcd(&(self.level / self.d))
    }

    pub fn is_rational(&self) -> bool {
        self.m() <= 2
    }

    /// The cusp ∞ = z₁ = (Ner₁, μ_N).
    pub fn infinity(level: u64) -> Self {
        GeometricCusp { level, d: 1, c: 1 }
    }

    /// The cusp 0 = z_N = (Ner_N, ℤ/N).
    pub fn zero(level: u64) -> Self {
        GeometricCusp { level, d: level, c: 1 }
    }
}

/// A divisor on the geometric cusps of X₀(N) with integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CuspidalDivisor {
    pub level: u64,
    coeffs: BTreeMap<GeometricCusp, i64>,
}

impl CuspidalDivisor {
    pub fn new(level: u64) -> Self {
        CuspidalDivisor { level, coeffs: BTreeMap::new() }
    }

    /// The degree-zero divisor D = (0) − (∞).
    pub fn standard_d(level: u64) -> Self {
        let mut div = Self::new(level);
        div.add(GeometricCusp::zero(level), 1);
        div.add(GeometricCusp::infinity(level), -1);
        div
    }

    pub fn add(&mut self, cusp: GeometricCusp, coeff: i64) {
        assert_eq!(cusp.level, self.level, "cusp level mismatch");
        let e = self.coeffs.entry(cusp).or_insert(0);
        *e += coeff;
        if *e == 0 {
            self.coeffs.remove(&cusp);
        }
    }

    pub fn term(level: u64, cusp: GeometricCusp, coeff: i64) -> Self {
        let mut div = Self::new(level);
        div.add(cusp, coeff);
        div
    }

    pub fn terms(&self) -> impl Iterator<Item = (&GeometricCusp, &i64)> {
        self.coeffs.iter()
    }

    pub fn degree(&self) -> i64 {
        self.coeffs.values().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scaled(&self, k: i64) -> Self {
        let mut out = Self::new(self.level);
        for (cusp, &coeff) in self.terms() {
            out.add(*cusp, coeff * k);
        }
        out
    }

    pub fn plus(&self, other: &Self) -> Self {
        assert_eq!(self.level, other.level);
        let mut out = self.clone();
        for (cusp, &coeff) in other.terms() {
            out.add(*cusp, coeff);
        }
        out
    }
}

// JSON schema: {"N": int, "terms": [{"d": int, "c": int, "coeff": int}]}
#[derive(Serialize, Deserialize)]
pub struct CuspidalDivisorJson {
    #[serde(rename = "N")]
    pub n: u64,
    pub terms: Vec<CuspTermJson>,
}

#[derive(Serialize, Deserialize)]
pub struct CuspTermJson {
    pub d: u64,
    pub c: u64,
    pub coeff: i64,
}

impl CuspidalDivisorJson {
    pub fn from_divisor(div: &CuspidalDivisor) -> Self {
        CuspidalDivisorJson {
            n: div.level,
            terms: div
                .terms()
                .map(|(cusp, &coeff)| CuspTermJson { d: cusp.d, c: cusp.c, coeff })
                .collect(),
        }
    }

    pub fn into_divisor(self) -> Result<CuspidalDivisor, ModularError> {
        let mut div = CuspidalDivisor::new(self.n);
        for t in self.terms {
            div.add(GeometricCusp::new(self.n, t.d, t.c)?, t.coeff);
        }
        Ok(div)
    }
}

/// All geometric cusps of X₀(N), grouped by Galois orbit (one orbit per
/// divisor d | N, of size φ(m_d)).
pub fn cusps(n: u64) -> Vec<Vec<GeometricCusp>> {
    divisors(n)
        .into_iter()
        .map(|d| {
            let m = d.gcd(&(n / d));
            if m <= 2 {
                vec![GeometricCusp { level: n, d, c: 1 }]
            } else {
                (1..m)
                    .filter(|c| c.gcd(&m) == 1)
                    .map(|c| GeometricCusp { level: n, d, c })
                    .collect()
            }
        })
        .collect()
}

/// Lift the class c (a unit mod m) to a unit mod n, with m | n.
fn lift_unit(c: u64, m: u64, n: u64) -> u64 {
    debug_assert_eq!(n % m, 0);
    let mut x = if c == 0 { m } else { c };
    while x.gcd(&n) != 1 {
        x += m;
        debug_assert!(x <= n + m);
    }
    x
}

fn mulmod_class(x: u64, y: u64, m: u64) -> u64 {
    if m <= 2 {
        return 1;
    }
    ((x as u128 * y as u128) % m as u128) as u64
}

/// ᵗT_ℓ on cuspidal divisors (Prop. Tl-tori). For ℓ ∤ N this is
/// (d, ζ) ↦ (d, ζ^ℓ) + ℓ(d, ζ^a); for ℓ | N the four cases of part (b).
pub fn hecke_transpose_cusps(
    div: &CuspidalDivisor,
    ell: u64,
) -> Result<CuspidalDivisor, ModularError> {
    if !is_prime(ell) {
        return Err(ModularError::NotPrime(ell));
    }
    let n = div.level;
    let k = valuation(n, ell);
    let m_part = n / ell.pow(k);
    // a ≡ 1 (mod ℓ^k) and aℓ + bM = 1; q = a⁻¹ mod N
    let a = if k == 0 {
        invmod(ell, n).expect("ℓ is a unit mod N")
    } else if m_part == 1 {
        1
    } else {
        // CRT: a ≡ 1 (mod ℓ^k), a ≡ ℓ⁻¹ (mod M); a = 1 + ℓ^k·t
        let lk = ell.pow(k);
        let inv_l = invmod(ell, m_part).unwrap();
        let lk_inv = invmod(lk % m_part, m_part).unwrap();
        let diff = (inv_l + m_part - 1) % m_part;
        let t = (diff as u128 * lk_inv as u128 % m_part as u128) as u64;
        1 + lk * t
    };
    let q = if k == 0 { 0 } else { invmod(a, n).expect("a is a unit mod N") };

    let mut out = CuspidalDivisor::new(n);
    for (cusp, &coeff) in div.terms() {
        let d = cusp.d;
        let md = cusp.m();
        let cc = lift_unit(cusp.c, md, n);
        if k == 0 {
            // (a): (d, ζ^ℓ) + ℓ(d, ζ^a)
            out.add(GeometricCusp::new(n, d, mulmod_class(cc, ell, md).max(1))?, coeff);
            out.add(GeometricCusp::new(n, d, mulmod_class(cc, a, md).max(1))?, coeff * ell as i64);
            continue;
        }
        let i = valuation(d, ell);
        if i == 0 {
            out.add(GeometricCusp::new(n, d, mulmod_class(cc, a, md).max(1))?, coeff * ell as i64);
        } else if i < k {
            // Γ_i-sum over u = 1 + j·e₀ℓ^{k−i} (degenerates to ℓ(d/ℓ, ζ)
            // when the classes coincide mod m_{d/ℓ})
            let d0 = d / ell.pow(i);
            let e0 = d0.gcd(&(m_part / d0));
            let dp = d / ell;
            let mp = dp.gcd(&(n / dp));
            let step = e0 * ell.pow(k - i);
            for j in 0..ell {
                let u = 1 + j * step;
                out.add(GeometricCusp::new(n, dp, mulmod_class(cc, u % mp.max(1), mp).max(1))?, coeff);
            }
        } else {
            // i = k: Σ_{σ∈Γ_k} σ(d/ℓ, ζ) + (d, ζ^q)
            let d0 = d / ell.pow(k);
            let e0 = d0.gcd(&(m_part / d0));
            let dp = d / ell;
            let mp = dp.gcd(&(n / dp));
            for j in 0..=ell {
                let u = 1 + j * e0;
                if u % ell == 0 {
                    continue;
                }
                if u > e0 * ell {
                    break;
                }
                out.add(GeometricCusp::new(n, dp, mulmod_class(cc, u % mp.max(1), mp).max(1))?, coeff);
            }
            out.add(GeometricCusp::new(n, d, mulmod_class(cc, q, md).max(1))?, coeff);
        }
    }
    Ok(out)
}

/// Relabel every cusp class by ζ ↦ ζ^t for t a unit mod N (a Galois action).
pub fn galois_relabel(div: &CuspidalDivisor, t: u64) -> Result<CuspidalDivisor, ModularError> {
    if t.gcd(&div.level) != 1 {
        return Err(ModularError::NotCoprime(t, div.level));
    }
    let mut out = CuspidalDivisor::new(div.level);
    for (cusp, &coeff) in div.terms() {
        out.add(GeometricCusp::new(div.level, cusp.d, mulmod_class(cusp.c, t % cusp.m().max(1), cusp.m()).max(1))?, coeff);
    }
    Ok(out)
}

/// Atkin–Lehner involution W_p on cuspidal divisors for N = p or p²: swaps
/// z₁ ↔ z_N. Rejects support on the non-rational cusps of X₀(p²).
pub fn atkin_lehner_cusps(div: &CuspidalDivisor) -> Result<CuspidalDivisor, ModularError> {
    let n = div.level;
    let f = prime_factors(n);
    if f.len() != 1 || f[0].1 > 2 {
        return Err(ModularError::UnsupportedAtkinLehner(format!("N = {}", n)));
    }
    let mut out = CuspidalDivisor::new(n);
    for (cusp, &coeff) in div.terms() {
        let d = if cusp.d == 1 {
            n
        } else if cusp.d == n {
            1
        } else {
            return Err(ModularError::UnsupportedAtkinLehner(format!(
                "cusp over d = {} of X₀({})",
                cusp.d, n
            )));
        };
        out.add(GeometricCusp::new(n, d, 1)?, coeff);
    }
    Ok(out)
}

// ---- special fibres ----

fn require_p(p: u64) -> Result<(), ModularError> {
    if p <= 3 || !is_prime(p) {
        return Err(ModularError::BadPrime(p));
    }
    Ok(())
}

/// Mass-formula consistency for the counts (n, e₂, e₃) of X₀(M) at p:
/// 12n − 6e₂ − 8e₃ = ψ(M)(p − 1).
fn check_counts(p: u64, m: u64, counts: (u64, u64, u64)) -> Result<(), ModularError> {
    let (n, e2, e3) = counts;
    if n == 0 || n < e2 + e3 {
        return Err(ModularError::InconsistentCounts(format!(
            "n = {}, e2 = {}, e3 = {}",
            n, e2, e3
        )));
    }
    if 12 * n != psi(m) * (p - 1) + 6 * e2 + 8 * e3 {
        return Err(ModularError::InconsistentCounts(format!(
            "12·{} ≠ ψ({})·({} − 1) + 6·{} + 8·{}",
            n, m, p, e2, e3
        )));
    }
    Ok(())
}

/// Special fibre of the minimal regular model of X₀(pM) (p ∤ M), with the
/// modulus incidence for 𝔪 = (∞)+(0) and the extended dual graph (Thm. X0pM
/// proof): components Z_∞, Z_0, chains E_i (e₂ of them) and F_{∞,i}, F_{0,i}
/// (e₃ pairs), all of multiplicity 1.
pub fn x0pm_fibre(
    p: u64,
    m: u64,
    counts: (u64, u64, u64),
) -> Result<(SpecialFibre, ModulusIncidence, GraphWithModulus), ModularError> {
    require_p(p)?;
    if p.gcd(&m) != 1 {
        return Err(ModularError::NotCoprime(p, m));
    }
    check_counts(p, m, counts)?;
    let (n, e2, e3) = (counts.0 as i64, counts.1 as usize, counts.2 as usize);

    let mut labels = vec!["Zinf".to_string(), "Z0".to_string()];
    for i in 1..=e2 {
        labels.push(format!("E{}", i));
    }
    for i in 1..=e3 {
        labels.push(format!("Finf{}", i));
        labels.push(format!("F0{}", i));
    }
    let nc = labels.len();
    let mut inter = IntMatrix::zero(nc, nc);
    inter[(0, 0)] = BigInt::from(-n);
    inter[(1, 1)] = BigInt::from(-n);
    inter[(0, 1)] = BigInt::from(n - e2 as i64 - e3 as i64);
    inter[(1, 0)] = inter[(0, 1)].clone();
    for i in 0..e2 {
        let j = 2 + i;
        inter[(j, j)] = BigInt::from(-2);
        for z in [0usize, 1] {
            inter[(z, j)] = BigInt::one();
            inter[(j, z)] = BigInt::one();
        }
    }
    for i in 0..e3 {
        let jinf = 2 + e2 + 2 * i;
        let j0 = jinf + 1;
        inter[(jinf, jinf)] = BigInt::from(-2);
        inter[(j0, j0)] = BigInt::from(-2);
        inter[(jinf, j0)] = BigInt::one();
        inter[(j0, jinf)] = BigInt::one();
        inter[(0, jinf)] = BigInt::one();
        inter[(jinf, 0)] = BigInt::one();
        inter[(1, j0)] = BigInt::one();
        inter[(j0, 1)] = BigInt::one();
    }
    let fibre = SpecialFibre {
        p,
        components: labels.iter().map(|l| Component { label: l.clone(), d: 1, n: 0 }).collect(),
        intersection: inter,
    };

    let incidence = ModulusIncidence {
        points: vec![
            ModulusPointData { label: "infty".into(), e: 1 },
            ModulusPointData { label: "0".into(), e: 1 },
        ],
        h: IntMatrix::from_fn(2, nc, |i, j| {
            if i == j {
                BigInt::one()
            } else {
                BigInt::zero()
            }
        }),
    };

    // dual graph: one A-vertex per double point, two branches each
    let mut a_labels = Vec::new();
    let mut branches = Vec::new();
    let add_node = |a_labels: &mut Vec<String>, branches: &mut Vec<Branch>, id: String, c1: &str, c2: &str| {
        branches.push(Branch { id: format!("{}:{}", id, c1), phi: id.clone(), psi: c1.to_string() });
        branches.push(Branch { id: format!("{}:{}", id, c2), phi: id.clone(), psi: c2.to_string() });
        a_labels.push(id);
    };
    for t in 1..=(n - e2 as i64 - e3 as i64) {
        add_node(&mut a_labels, &mut branches, format!("x{:03}", t), "Zinf", "Z0");
    }
    for i in 1..=e2 {
        add_node(&mut a_labels, &mut branches, format!("xE{}a", i), "Zinf", &format!("E{}", i));
        add_node(&mut a_labels, &mut branches, format!("xE{}b", i), &format!("E{}", i), "Z0");
    }
    for i in 1..=e3 {
        add_node(&mut a_labels, &mut branches, format!("xF{}a", i), "Zinf", &format!("Finf{}", i));
        add_node(&mut a_labels, &mut branches, format!("xF{}b", i), &format!("Finf{}", i), &format!("F0{}", i));
        add_node(&mut a_labels, &mut branches, format!("xF{}c", i), &format!("F0{}", i), "Z0");
    }
    let base = ExtendedGraph::new(a_labels, labels, branches)?;
    let graph = GraphWithModulus::new(
        base,
        vec![],
        vec![
            ModulusPoint { id: "infty".into(), target: "Zinf".into() },
            ModulusPoint { id: "0".into(), target: "Z0".into() },
        ],
    )?;

    let report = crate::neron::validate_fibre(&fibre, Some(&incidence));
    if !report.is_empty() {
        return Err(ModularError::Neron(NeronError::InvalidFibre(report)));
    }
    Ok((fibre, incidence, graph))
}

/// The decomposition p = 12k + 1 + 4a + 6b with a, b ∈ {0, 1}.
pub fn x0p2_parameters(p: u64) -> Result<(u64, u64, u64, u64), ModularError> {
    require_p(p)?;
    let a = if p % 3 == 2 { 1 } else { 0 };
    let b = if p % 4 == 3 { 1 } else { 0 };
    let k = (p - 1 - 4 * a - 6 * b) / 12;
    debug_assert_eq!(p, 12 * k + 1 + 4 * a + 6 * b);
    let m_tilde = (p * p - 1) / 12 - k;
    Ok((k, a, b, m_tilde))
}

/// Special fibre of the minimal regular model of X₀(p²) (eq:X0p2-int-mat),
/// with the modulus incidence for the full cuspidal modulus (e = (1, p−1, 1))
/// and for 𝔪′ = (∞)+(0).
pub fn x0p2_fibre(
    p: u64,
) -> Result<(SpecialFibre, ModulusIncidence, ModulusIncidence), ModularError> {
    let (k, a, b, m_tilde) = x0p2_parameters(p)?;
    let (k, a, b) = (k as i64, a as i64, b as i64);
    let mt = m_tilde as i64;
    let d_e = (p as i64 - 1 + 2 * b) / 2;
    let d_f = (p as i64 - 1 + 2 * a) / 3;
    let components = vec![
        Component { label: "Z0".into(), d: 1, n: 0 },
        Component { label: "Z1".into(), d: p - 1, n: 0 },
        Component { label: "Z2".into(), d: 1, n: 0 },
        Component { label: "E".into(), d: d_e as u64, n: 0 },
        Component { label: "F".into(), d: d_f as u64, n: 0 },
    ];
    let rows: [[i64; 5]; 5] = [
        [-mt, k, k, b, a],
        [k, -1, k, 1, 1],
        [k, k, -mt, b, a],
        [b, 1, b, -2, 0],
        [a, 1, a, 0, -3],
    ];
    let fibre = SpecialFibre {
        p,
        components,
        intersection: IntMatrix::from_fn(5, 5, |i, j| BigInt::from(rows[i][j])),
    };
    let full = ModulusIncidence {
        points: vec![
            ModulusPointData { label: "z1".into(), e: 1 },
            ModulusPointData { label: "zp".into(), e: p - 1 },
            ModulusPointData { label: "zp2".into(), e: 1 },
        ],
        h: IntMatrix::from_fn(3, 5, |i, j| if i == j { BigInt::one() } else { BigInt::zero() }),
    };
    let infty0 = ModulusIncidence {
        points: vec![
            ModulusPointData { label: "z1".into(), e: 1 },
            ModulusPointData { label: "zp2".into(), e: 1 },
        ],
        h: IntMatrix::from_fn(2, 5, |i, j| {
            if (i == 0 && j == 0) || (i == 1 && j == 2) {
                BigInt::one()
            } else {
                BigInt::zero()
            }
        }),
    };
    for inc in [&full, &infty0] {
        let report = crate::neron::validate_fibre(&fibre, Some(inc));
        if !report.is_empty() {
            return Err(ModularError::Neron(NeronError::InvalidFibre(report)));
        }
    }
    Ok((fibre, full, infty0))
}

// ---- closed-form evaluators ----

/// Thm. X0pM: Φ(J_𝔪) ≅ ℤ ⊕ (ℤ/2)^max(e₂−1,0) ⊕ (ℤ/3)^max(e₃−1,0), and the
/// image of the torus generator in the presentation
/// ℤ·g ⊕ ⊕(ℤ/2)·u_i ⊕ ⊕(ℤ/3)·v_i is (free_image; 1,…,1; 1,…,1).
pub struct ClosedFormX0pM {
    pub group: FGAbGroup,
    pub free_image: i64,
    pub torsion2_gens: usize,
    pub torsion3_gens: usize,
}

impl ClosedFormX0pM {
    fn presentation(&self) -> IntMatrix {
        // generators: g (free), then torsion2, then torsion3
        let t = self.torsion2_gens + self.torsion3_gens;
        IntMatrix::from_fn(1 + t, t, |i, j| {
            if i == j + 1 {
                if j < self.torsion2_gens {
                    BigInt::from(2)
                } else {
                    BigInt::from(3)
                }
            } else {
                BigInt::zero()
            }
        })
    }

    /// Φ(J) = Φ(J_𝔪)/⟨torus image⟩ from the closed-form data alone.
    pub fn quotient_by_image(&self) -> FGAbGroup {
        let t = self.torsion2_gens + self.torsion3_gens;
        let image = IntMatrix::from_fn(1 + t, 1, |i, _| {
            if i == 0 {
                BigInt::from(self.free_image)
            } else {
                BigInt::one()
            }
        });
        cokernel(&self.presentation().hstack(&image))
    }
}

pub fn closed_form_x0pm(
    p: u64,
    m: u64,
    counts: (u64, u64, u64),
) -> Result<ClosedFormX0pM, ModularError> {
    require_p(p)?;
    if p.gcd(&m) != 1 {
        return Err(ModularError::NotCoprime(p, m));
    }
    check_counts(p, m, counts)?;
    let (n, e2, e3) = (counts.0 as i64, counts.1 as i64, counts.2 as i64);
    let t2 = (e2 - 1).max(0) as usize;
    let t3 = (e3 - 1).max(0) as usize;
    let free_image = match (e2 > 0, e3 > 0) {
        (false, false) => n,
        (true, false) => 2 * n - e2,
        (false, true) => 3 * n - 2 * e3,
        (true, true) => 6 * n - 3 * e2 - 4 * e3,
    };
    let cf = ClosedFormX0pM { group: FGAbGroup::trivial(), free_image, torsion2_gens: t2, torsion3_gens: t3 };
    let group = cokernel(&cf.presentation());
    Ok(ClosedFormX0pM { group, ..cf })
}

/// Cor. mazur-rapoport-formula: Φ(J) ≅ ℤ/P ⊕ (ℤ/2)^max(e₂−2,0) ⊕
/// (ℤ/3)^max(e₃−2,0) with P = 2^min(e₂,2)·3^min(e₃,2)·(n − e₂/2 − 2e₃/3).
pub fn closed_form_phij(
    p: u64,
    m: u64,
    counts: (u64, u64, u64),
) -> Result<FGAbGroup, ModularError> {
    require_p(p)?;
    if p.gcd(&m) != 1 {
        return Err(ModularError::NotCoprime(p, m));
    }
    check_counts(p, m, counts)?;
    let (n, e2, e3) = (counts.0 as i64, counts.1 as i64, counts.2 as i64);
    let base = BigRational::new(BigInt::from(n), BigInt::one())
        - BigRational::new(BigInt::from(e2), BigInt::from(2))
        - BigRational::new(BigInt::from(2 * e3), BigInt::from(3));
    let p_rat = BigRational::from(BigInt::from(
        2i64.pow(e2.min(2) as u32) * 3i64.pow(e3.min(2) as u32),
    )) * base;
    if !p_rat.is_integer() || !p_rat.numer().is_positive() {
        return Err(ModularError::NonIntegralOrder(format!("P = {}", p_rat)));
    }
    let big_p = p_rat.to_integer();
    let t2 = (e2 - 2).max(0) as usize;
    let t3 = (e3 - 2).max(0) as usize;
    let nrel = 1 + t2 + t3;
    let rel = IntMatrix::from_fn(nrel, nrel, |i, j| {
        if i != j {
            BigInt::zero()
        } else if i == 0 {
            big_p.clone()
        } else if i <= t2 {
            BigInt::from(2)
        } else {
            BigInt::from(3)
        }
    });
    Ok(cokernel(&rel))
}

/// §sec:X0p2 theorem: Φ(J_𝔪) ≅ ℤ² with the torus generator images, the
/// 𝔪′ = (∞)+(0) statement, and the order of Φ(J).
pub struct X0p2ClosedForm {
    pub group: FGAbGroup,
    pub v0: [BigInt; 2],
    pub v1: [BigInt; 2],
    pub group_infty0: FGAbGroup,
    pub v0_infty0: BigInt,
    pub phi_j_order: BigInt,
}

pub fn x0p2_closed_form(p: u64) -> Result<X0p2ClosedForm, ModularError> {
    let (k, a, b, m_tilde) = x0p2_parameters(p)?;
    let (k, a, b, mt) = (k as i64, a as i64, b as i64, m_tilde as i64);
    let order = BigInt::from((p * p - 1) / 24);
    Ok(X0p2ClosedForm {
        group: FGAbGroup::free(2),
        v0: [
            BigInt::from(mt + (3 * b - 2 * a) * k - a + b),
            BigInt::from(-6 * k - 2 * a - 3 * b),
        ],
        v1: [BigInt::from(-k - b), BigInt::one()],
        group_infty0: FGAbGroup::free(1),
        v0_infty0: order.clone(),
        phi_j_order: order,
    })
}

// ---- cuspidal splitting (§sec:X0pM-bis) ----

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CuspSide {
    Infty,
    Zero,
}

pub struct SplittingReport {
    /// true if the support meets only one component of the special fibre
    pub one_component: bool,
    /// the predicted decomposition, as a group
    pub predicted: FGAbGroup,
    /// Φ(J_𝔪) computed directly from the eq:raynaud2 complex
    pub direct: FGAbGroup,
    pub description: String,
}

fn incidence_from_tags(
    f: &SpecialFibre,
    tags: &[(String, CuspSide)],
) -> ModulusIncidence {
    let nc = f.components.len();
    ModulusIncidence {
        points: tags
            .iter()
            .map(|(l, _)| ModulusPointData { label: l.clone(), e: 1 })
            .collect(),
        h: IntMatrix::from_fn(tags.len(), nc, |i, j| {
            let col = match tags[i].1 {
                CuspSide::Infty => 0,
                CuspSide::Zero => 1,
            };
            if j == col {
                BigInt::one()
            } else {
                BigInt::zero()
            }
        }),
    }
}

fn direct_sum(g: &FGAbGroup, extra_free: usize) -> FGAbGroup {
    FGAbGroup { invariant_factors: g.invariant_factors.clone(), free_rank: g.free_rank + extra_free }
}

/// Splitting of Φ(J_𝔪) for an arbitrary reduced cuspidal modulus on a
/// semistable X₀(pM) fibre: Φ(J) ⊕ Φ(T_𝔪) if the support meets one
/// component, otherwise Φ(J_{𝔪′}) ⊕ ℤ^{I∖{x_∞,x_0}}. The prediction is
/// verified against the direct computation.
pub fn cuspidal_splitting(
    f: &SpecialFibre,
    tags: &[(String, CuspSide)],
) -> Result<SplittingReport, ModularError> {
    assert!(f.components.len() >= 2 && f.components[0].label == "Zinf" && f.components[1].label == "Z0",
        "expected an x0pM fibre");
    if tags.is_empty() {
        return Err(ModularError::Neron(NeronError::EmptyModulus));
    }
    let direct = component_group_jm(f, &incidence_from_tags(f, tags))?.group;
    let ni = tags.len();
    let one_component = tags.iter().all(|(_, s)| *s == CuspSide::Infty)
        || tags.iter().all(|(_, s)| *s == CuspSide::Zero);
    let (predicted, description) = if one_component {
        let (phi_j, _) = component_group_j(f)?;
        (direct_sum(&phi_j, ni - 1), format!("Phi(J) + Z^{}", ni - 1))
    } else {
        let mprime = vec![
            ("infty".to_string(), CuspSide::Infty),
            ("0".to_string(), CuspSide::Zero),
        ];
        let base = component_group_jm(f, &incidence_from_tags(f, &mprime))?.group;
        (direct_sum(&base, ni - 2), format!("Phi(J_m') + Z^{}", ni - 2))
    };
    if predicted != direct {
        return Err(ModularError::HeckeMismatch(format!(
            "splitting prediction {} ≠ direct {}",
            predicted, direct
        )));
    }
    Ok(SplittingReport { one_component, predicted, direct, description })
}

// ---- Hecke action on component groups ----

/// T_ℓ on Φ(J_𝔪) for X₀(pM), 𝔪 = (∞)+(0): multiplication by ℓ+1 for
/// ℓ ∤ pM (M squarefree), and by 1 for ℓ = p, M = 1. The scalar on Φ(T_𝔪)
/// is computed from the functoriality formulas and its integral extension
/// through the finite-index inclusion Φ(T_𝔪) ⊂ Φ(J_𝔪) (free parts) is
/// verified.
pub fn hecke_on_phi(
    p: u64,
    m: u64,
    counts: (u64, u64, u64),
    ell: u64,
) -> Result<BigInt, ModularError> {
    require_p(p)?;
    if !is_prime(ell) {
        return Err(ModularError::NotPrime(ell));
    }
    let scalar = if ell == p {
        if m != 1 {
            return Err(ModularError::NotCoprime(ell, p * m));
        }
        // ᵗT_p fixes D = (0)−(∞) on X₀(p), so T_p = 1 on Φ(T_𝔪)
        let d = CuspidalDivisor::standard_d(p);
        let td = hecke_transpose_cusps(&d, p)?;
        if td != d {
            return Err(ModularError::HeckeMismatch("ᵗT_p D ≠ D".into()));
        }
        BigInt::one()
    } else {
        if (p * m) % ell == 0 {
            return Err(ModularError::NotCoprime(ell, p * m));
        }
        if !is_squarefree(m) {
            return Err(ModularError::InconsistentCounts("M must be squarefree".into()));
        }
        // cusps of X₀(Nℓ) over {∞, 0}: z₁, z_ℓ ↦ ∞ and z_N, z_{Nℓ} ↦ 0,
        // with u-ramification (1, ℓ, 1, ℓ) and v-ramification (ℓ, 1, ℓ, 1)
        let f = [0usize, 0, 1, 1];
        let e = [1u64, 1];
        let e_prime = [1u64, 1, 1, 1];
        let (pull_u, _) = tori_phi_maps(&f, &e, &e_prime, &[1, ell, 1, ell])?;
        let (_, push_v) = tori_phi_maps(&f, &e, &e_prime, &[ell, 1, ell, 1])?;
        let composite = push_v.compose(&pull_u)?;
        // Φ(T_𝔪) = ℤ²/(1,1)ℤ ≅ ℤ via (x, y) ↦ x − y
        let t = &composite.matrix;
        let s0 = &t[(0, 0)] - &t[(1, 0)];
        let s1 = &t[(1, 1)] - &t[(0, 1)];
        if s0 != s1 {
            return Err(ModularError::HeckeMismatch("T_ℓ not scalar on Φ(T_𝔪)".into()));
        }
        if s0 != BigInt::from(ell + 1) {
            return Err(ModularError::HeckeMismatch(format!("scalar {} ≠ ℓ+1", s0)));
        }
        s0
    };

    // verify integral extension through Φ(T_𝔪) ⊂ Φ(J_𝔪)
    let jm = x0pm_component_group(p, m, counts)?;
    let nfree = jm.group.free_rank;
    if nfree != 1 {
        return Err(ModularError::HeckeMismatch("Φ(J_𝔪) should have rank 1".into()));
    }
    let ncoords = jm.group.num_coords();
    let v_free = jm.torus_images[(ncoords - 1, 0)].clone();
    let incl = IntMatrix::from_fn(1, 1, |_, _| v_free.clone());
    let endo = IntMatrix::from_fn(1, 1, |_, _| scalar.clone());
    let ext = extend_through_finite_index(&incl, &endo)?;
    debug_assert_eq!(ext[(0, 0)], scalar);
    Ok(scalar)
}

/// Convenience: Φ(J_𝔪) for X₀(pM), 𝔪 = (∞)+(0), straight from the builder.
pub fn x0pm_component_group(
    p: u64,
    m: u64,
    counts: (u64, u64, u64),
) -> Result<ComponentGroupJm, ModularError> {
    let (fibre, incidence, _) = x0pm_fibre(p, m, counts)?;
    Ok(component_group_jm(&fibre, &incidence)?)
}
