//! Acceptance suite: one test per criterion, each printing a single
//! pass/fail line (visible with `--nocapture`; a failure panics with the
//! offending case).

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use neron::abelian::{
    cokernel, homology, kernel_basis, smith_normal_form, FGAbGroup, IntMatrix,
};
use neron::graphs::{ModulusPoint, ReducedGraph};
use neron::modular::{
    closed_form_phij, closed_form_x0pm, cusps, hecke_on_phi, hecke_transpose_cusps,
    x0p2_fibre, x0pm_fibre, CuspidalDivisor, GeometricCusp,
};
use neron::neron::{
    component_group_j, component_group_jm, duality_check, semistable_component_group,
    Component, ModulusIncidence, ModulusPointData, SpecialFibre,
};
use neron::supersingular::{
    brandt, brandt_velu, char_tp_graph, counts, supersingular_js,
};

fn primes(lo: u64, hi: u64) -> Vec<u64> {
    (lo..=hi)
        .filter(|&n| n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0))
        .collect()
}

fn invmod(a: u64, m: u64) -> u64 {
    (1..m).find(|x| a * x % m == 1).expect("unit")
}

fn pass(n: u32, what: &str) {
    println!("PASS criterion {n}: {what}");
}

#[test]
fn criterion_01_x0p_component_groups() {
    for p in primes(5, 97) {
        let c = counts(p, 1).unwrap();
        let (fibre, inc, _) = x0pm_fibre(p, 1, c).unwrap();
        let jm = component_group_jm(&fibre, &inc).unwrap();
        assert_eq!(jm.group, FGAbGroup::free(1), "Phi(Jm) at p={p}");
        let num = (p - 1) / (p - 1).gcd(12);
        assert_eq!(
            jm.quotient_by_torus(),
            FGAbGroup::cyclic(num),
            "quotient at p={p}"
        );
    }
    pass(1, "X0(p) for 5 <= p <= 97: Phi(Jm) = Z, quotient cyclic of order num((p-1)/12)");
}

trait GcdExt {
    fn gcd(self, other: u64) -> u64;
}
impl GcdExt for u64 {
    fn gcd(self, other: u64) -> u64 {
        let (mut a, mut b) = (self, other);
        while b != 0 {
            let t = a % b;
            a = b;
            b = t;
        }
        a
    }
}

#[test]
fn criterion_02_x0pm_sweep_closed_forms() {
    for p in primes(5, 97) {
        for m in [1u64, 2, 3, 5, 6, 7, 10] {
            if m % p == 0 {
                continue;
            }
            let c = counts(p, m).unwrap();
            let (fibre, inc, _) = x0pm_fibre(p, m, c).unwrap();
            let jm = component_group_jm(&fibre, &inc).unwrap();
            let cf = closed_form_x0pm(p, m, c).unwrap();
            assert_eq!(jm.group, cf.group, "Phi(Jm) structure at p={p}, M={m}");
            let phi_j = closed_form_phij(p, m, c).unwrap();
            assert_eq!(
                jm.quotient_by_torus(),
                phi_j,
                "Phi(J) closed form at p={p}, M={m}"
            );
            assert!(phi_j.torsion_order() > BigInt::zero());
        }
    }
    pass(2, "X0(pM) sweep: complex matches closed forms, P a positive integer");
}

#[test]
fn criterion_03_x0p2() {
    for p in [5u64, 7, 11, 13, 17] {
        let (fibre, full, infty0) = x0p2_fibre(p).unwrap();
        let order = (p * p - 1) / 24;

        let jm = component_group_jm(&fibre, &full).unwrap();
        assert_eq!(jm.group, FGAbGroup::free(2), "p={p}");
        let v01 = jm.torus_images.col_slice(0, 2);
        assert_eq!(
            smith_normal_form(&v01).diagonal(),
            vec![BigInt::one(), BigInt::from(order)],
            "SNF of (V0, V1) images at p={p}"
        );

        let jm2 = component_group_jm(&fibre, &infty0).unwrap();
        assert_eq!(jm2.group, FGAbGroup::free(1), "Phi(Jm') at p={p}");
        assert_eq!(
            jm2.quotient_by_torus(),
            FGAbGroup::cyclic(order),
            "torus index at p={p}"
        );

        let (phi_j, _) = component_group_j(&fibre).unwrap();
        assert_eq!(phi_j, FGAbGroup::cyclic(order), "Phi(J) at p={p}");
    }
    pass(3, "X0(p^2): Z^2, image SNF diag(1, (p^2-1)/24), Phi(J) cyclic of that order");
}

#[test]
fn criterion_04_hecke_on_cusps() {
    // (a) tT_l D = (l+1) D for coprime l
    for n in [11u64, 15] {
        let d = CuspidalDivisor::standard_d(n);
        for ell in [2u64, 3, 7] {
            if n % ell == 0 {
                continue;
            }
            assert_eq!(
                hecke_transpose_cusps(&d, ell).unwrap(),
                d.scaled(ell as i64 + 1),
                "N={n}, ell={ell}"
            );
        }
    }
    // (b) tT_p D = D on X0(p)
    for p in [5u64, 11, 13] {
        let d = CuspidalDivisor::standard_d(p);
        assert_eq!(hecke_transpose_cusps(&d, p).unwrap(), d, "N=p={p}");
    }
    // (c) N = p^2 for p = 7 (N = 49) and p = 11 (N = 121)
    for p in [7u64, 11] {
        let n = p * p;
        let d = CuspidalDivisor::standard_d(n);
        // tT_p D = sum_{zeta != 1} (zeta_p) + (0) - p (infty)
        let mut want = CuspidalDivisor::new(n);
        for c in 1..p {
            want.add(GeometricCusp::new(n, p, c).unwrap(), 1);
        }
        want.add(GeometricCusp::zero(n), 1);
        want.add(GeometricCusp::infinity(n), -(p as i64));
        assert_eq!(hecke_transpose_cusps(&d, p).unwrap(), want, "tT_p D at N={n}");
        // tT_p ((zeta_p) - (infty)) = 0
        let mut zp = CuspidalDivisor::new(n);
        zp.add(GeometricCusp::new(n, p, 1).unwrap(), 1);
        zp.add(GeometricCusp::infinity(n), -1);
        assert!(hecke_transpose_cusps(&zp, p).unwrap().is_zero(), "N={n}");
        // tT_l for l != p
        for ell in [2u64, 3] {
            if ell == p {
                continue;
            }
            assert_eq!(
                hecke_transpose_cusps(&d, ell).unwrap(),
                d.scaled(ell as i64 + 1),
                "N={n}, ell={ell}"
            );
            let got = hecke_transpose_cusps(&zp, ell).unwrap();
            let mut want = CuspidalDivisor::new(n);
            want.add(GeometricCusp::new(n, p, invmod(ell, p)).unwrap(), ell as i64);
            want.add(GeometricCusp::new(n, p, ell).unwrap(), 1);
            want.add(GeometricCusp::infinity(n), -(ell as i64) - 1);
            assert_eq!(got, want, "tT_{ell} on (zeta_p)-(infty) at N={n}");
        }
    }
    // a sanity count used by (c): X0(p^2) has p+1 cusps
    assert_eq!(cusps(49).concat().len(), 8);
    pass(4, "Hecke on cusps: examples (a), (b), (c) reproduced exactly");
}

#[test]
fn criterion_05_brandt_suite() {
    for p in [11u64, 13, 23, 37, 47] {
        let ss = supersingular_js(p).unwrap();
        let h = ss.h();
        // mass formula
        let mass: Ratio<u64> = ss.weights.iter().map(|&w| Ratio::new(1, 2 * w)).sum();
        assert_eq!(mass, Ratio::new(p - 1, 24), "mass at p={p}");

        for ell in [2u64, 3, 5, 7] {
            let b = brandt(p, ell).unwrap();
            for i in 0..h {
                let sum: BigInt = (0..h).map(|j| b[(i, j)].clone()).sum();
                assert_eq!(sum, BigInt::from(ell + 1), "row sum p={p}, ell={ell}");
                for j in 0..h {
                    assert_eq!(
                        &b[(i, j)] * BigInt::from(ss.weights[j]),
                        &b[(j, i)] * BigInt::from(ss.weights[i]),
                        "w-symmetry p={p}, ell={ell}"
                    );
                }
            }
        }
        let b2 = brandt(p, 2).unwrap();
        let b3 = brandt(p, 3).unwrap();
        assert_eq!(b2.mul(&b3), b3.mul(&b2), "commutativity at p={p}");

        let bp = brandt(p, p).unwrap();
        for i in 0..h {
            let row: BigInt = (0..h).map(|j| bp[(i, j)].clone()).sum();
            let col: BigInt = (0..h).map(|j| bp[(j, i)].clone()).sum();
            assert!(row.is_one() && col.is_one(), "B(p) permutation at p={p}");
        }
        assert_eq!(bp.mul(&bp), IntMatrix::identity(h), "B(p) involution at p={p}");

        for ell in [2u64, 3] {
            assert_eq!(
                brandt_velu(p, ell).unwrap(),
                brandt(p, ell).unwrap(),
                "Velu agreement p={p}, ell={ell}"
            );
        }
    }
    pass(5, "Brandt suite: row sums, w-symmetry, commuting, involution, Velu, mass");
}

#[test]
fn criterion_06_character_group_tp() {
    for p in [11u64, 23, 37] {
        let ss = supersingular_js(p).unwrap();
        let (rank, tp) = char_tp_graph(p).unwrap();
        assert_eq!(rank, ss.h(), "rank at p={p}");
        assert_eq!(tp, brandt(p, p).unwrap().transpose(), "T_p = -W_p vs tB(p) at p={p}");
    }
    pass(6, "graph-side T_p = -W_p equals tB(p); character rank = #supersingular points");
}

fn random_semistable(
    rng: &mut ChaCha8Rng,
) -> (SpecialFibre, ModulusIncidence, ReducedGraph) {
    let nv = rng.gen_range(1..=6usize);
    let labels: Vec<String> = (0..nv).map(|i| format!("C{i}")).collect();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for v in 1..nv {
        edges.push((rng.gen_range(0..v), v));
    }
    if nv >= 2 {
        for _ in 0..rng.gen_range(0..=3usize) {
            let i = rng.gen_range(0..nv);
            let j = rng.gen_range(0..nv);
            if i != j {
                edges.push((i.min(j), i.max(j)));
            }
        }
    }
    let mut inter = IntMatrix::zero(nv, nv);
    for &(i, j) in &edges {
        inter[(i, j)] += BigInt::one();
        inter[(j, i)] += BigInt::one();
        inter[(i, i)] -= BigInt::one();
        inter[(j, j)] -= BigInt::one();
    }
    let fibre = SpecialFibre {
        p: 1,
        components: labels
            .iter()
            .map(|l| Component { label: l.clone(), d: 1, n: 0 })
            .collect(),
        intersection: inter,
    };
    let ni = rng.gen_range(1..=3usize);
    let targets: Vec<usize> = (0..ni).map(|_| rng.gen_range(0..nv)).collect();
    let incidence = ModulusIncidence {
        points: (0..ni)
            .map(|i| ModulusPointData { label: format!("z{i}"), e: 1 })
            .collect(),
        h: IntMatrix::from_fn(ni, nv, |i, j| {
            if j == targets[i] {
                BigInt::one()
            } else {
                BigInt::zero()
            }
        }),
    };
    let graph = ReducedGraph::new(
        labels.clone(),
        edges.iter().map(|&(i, j)| (labels[i].clone(), labels[j].clone())).collect(),
        targets
            .iter()
            .enumerate()
            .map(|(i, &t)| ModulusPoint { id: format!("z{i}"), target: labels[t].clone() })
            .collect(),
    )
    .unwrap();
    (fibre, incidence, graph)
}

#[test]
fn criterion_07_duality() {
    // X0(p) and X0(pM) fibres
    for p in primes(5, 97) {
        for m in [1u64, 2, 3, 5, 6, 7, 10] {
            if m % p == 0 {
                continue;
            }
            let c = counts(p, m).unwrap();
            let (fibre, inc, _) = x0pm_fibre(p, m, c).unwrap();
            let jm = component_group_jm(&fibre, &inc).unwrap();
            let dual = duality_check(&fibre, &inc).unwrap();
            assert_eq!(dual, jm.group, "duality at p={p}, M={m}");
        }
    }
    // 50 random semistable fibres
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..50 {
        let (fibre, inc, _) = random_semistable(&mut rng);
        let jm = component_group_jm(&fibre, &inc).unwrap();
        let dual = duality_check(&fibre, &inc).unwrap();
        assert_eq!(dual, jm.group, "duality on random fibre {trial}");
    }
    pass(7, "duality_check matches component_group_jm on X0(pM) and 50 random fibres");
}

#[test]
fn criterion_08_semistable_shortcut() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..50 {
        let (fibre, inc, graph) = random_semistable(&mut rng);
        let jm = component_group_jm(&fibre, &inc).unwrap();
        let shortcut = semistable_component_group(&graph).unwrap();
        assert_eq!(shortcut, jm.group, "shortcut on random fibre {trial}");
    }
    pass(8, "semistable shortcut matches component_group_jm on the same 50 fibres");
}

#[test]
fn criterion_09_hecke_on_component_groups() {
    for p in [5u64, 11, 13] {
        let c = counts(p, 1).unwrap();
        for ell in [2u64, 3] {
            let scalar = hecke_on_phi(p, 1, c, ell).unwrap();
            assert_eq!(scalar, BigInt::from(ell + 1), "T_{ell} at p={p}");
        }
        assert_eq!(hecke_on_phi(p, 1, c, p).unwrap(), BigInt::one(), "T_p at p={p}");
    }
    pass(9, "hecke_on_phi: T_ell = ell+1 with integral extension, T_p = 1");
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> IntMatrix {
    let entries: Vec<BigInt> = (0..rows * cols)
        .map(|_| BigInt::from(rng.gen_range(-9i64..=9)))
        .collect();
    IntMatrix::from_fn(rows, cols, |i, j| entries[i * cols + j].clone())
}

/// Random unimodular matrix together with its inverse, as a product of
/// elementary row operations.
fn random_unimodular(rng: &mut ChaCha8Rng, n: usize) -> (IntMatrix, IntMatrix) {
    let mut p = IntMatrix::identity(n);
    let mut pinv = IntMatrix::identity(n);
    for _ in 0..6 {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i == j {
            continue;
        }
        let c = BigInt::from(rng.gen_range(-2i64..=2));
        // E = I + c e_{ij}; P <- E P, Pinv <- Pinv E^{-1}
        let mut e = IntMatrix::identity(n);
        e[(i, j)] = c.clone();
        let mut einv = IntMatrix::identity(n);
        einv[(i, j)] = -c;
        p = e.mul(&p);
        pinv = pinv.mul(&einv);
    }
    (p, pinv)
}

#[test]
fn criterion_10_linear_algebra_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for trial in 0..1000 {
        let rows = rng.gen_range(1..=6usize);
        let cols = rng.gen_range(1..=6usize);
        let m = random_matrix(&mut rng, rows, cols);

        let snf = smith_normal_form(&m);
        assert_eq!(snf.u.mul(&m).mul(&snf.v), snf.d, "UMV = D, trial {trial}");
        assert!(snf.u.det().abs().is_one(), "U unimodular, trial {trial}");
        assert!(snf.v.det().abs().is_one(), "V unimodular, trial {trial}");
        let diag = snf.diagonal();
        for w in diag.windows(2) {
            assert!(!w[0].is_negative() && !w[1].is_negative());
            if w[0].is_zero() {
                assert!(w[1].is_zero(), "zeros trail, trial {trial}");
            } else {
                assert!((&w[1] % &w[0]).is_zero(), "divisibility, trial {trial}");
            }
        }

        let rank = snf.rank();
        let ker = kernel_basis(&m);
        assert!(m.mul(&ker).is_zero(), "M ker = 0, trial {trial}");
        assert_eq!(ker.cols(), cols - rank, "kernel rank, trial {trial}");
        assert_eq!(cokernel(&m).free_rank, rows - rank, "cokernel rank, trial {trial}");

        // homology invariance under a unimodular change of the middle basis
        if trial % 5 == 0 {
            let k = rng.gen_range(1..=4usize);
            let a = random_matrix(&mut rng, cols, k);
            // rows spanning the saturated left-kernel of a
            let left = kernel_basis(&a.transpose()).transpose();
            let q = rng.gen_range(1..=4usize);
            let b = random_matrix(&mut rng, q, left.rows()).mul(&left);
            let (h1, _) = homology(&a, &b).unwrap();
            let (p, pinv) = random_unimodular(&mut rng, cols);
            let (h2, _) = homology(&p.mul(&a), &b.mul(&pinv)).unwrap();
            assert_eq!(h1, h2, "homology invariance, trial {trial}");
        }
    }
    pass(10, "1000 random matrices: SNF identities, kernel/cokernel, homology invariance");
}
