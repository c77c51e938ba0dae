//! Built-in algebras and extensions. The JSON files under `corpus/` are
//! generated from these constructors and checked against them in tests.

use std::sync::Arc;

use crate::algebra::{product, Elem, FiniteAlgebra};
use crate::extensions::Extension;

/// `Z_n` with `+`, unary `-` and the constant `0`.
pub fn cyclic(n: usize) -> FiniteAlgebra {
    let m = n as Elem;
    FiniteAlgebra::from_fns(
        format!("Z{n}"),
        n,
        &[
            ("+", 2, &|a: &[Elem]| (a[0] + a[1]) % m),
            ("-", 1, &|a: &[Elem]| (m - a[0]) % m),
            ("0", 0, &|_: &[Elem]| 0),
        ],
    )
    .expect("cyclic group tables are valid")
}

fn permutation_group(name: &str, degree: usize, generators: &[Vec<usize>]) -> FiniteAlgebra {
    // closure under composition, then sorted so the identity is element 0
    let identity: Vec<usize> = (0..degree).collect();
    let mut elems = vec![identity];
    let mut i = 0;
    while i < elems.len() {
        for g in generators {
            let h: Vec<usize> = (0..degree).map(|k| elems[i][g[k]]).collect();
            if !elems.contains(&h) {
                elems.push(h);
            }
        }
        i += 1;
    }
    elems.sort();
    group_from_elements(name, &elems, |a, b| (0..degree).map(|k| a[b[k]]).collect())
}

fn group_from_elements<T: PartialEq + Clone>(
    name: &str,
    elems: &[T],
    mul: impl Fn(&T, &T) -> T,
) -> FiniteAlgebra {
    let n = elems.len();
    let index = |t: &T| elems.iter().position(|e| e == t).expect("closed") as Elem;
    let mut table = vec![0; n * n];
    for (a, x) in elems.iter().enumerate() {
        for (b, y) in elems.iter().enumerate() {
            table[a * n + b] = index(&mul(x, y));
        }
    }
    let unit = (0..n)
        .find(|&e| (0..n).all(|x| table[e * n + x] as usize == x))
        .expect("group has a unit") as Elem;
    let inv = (0..n)
        .map(|x| (0..n).find(|&y| table[x * n + y] == unit).expect("inverse") as Elem)
        .collect();
    FiniteAlgebra::new(
        name,
        n,
        vec![("*", 2, table), ("inv", 1, inv), ("e", 0, vec![unit])],
    )
    .expect("group tables are valid")
}

/// Symmetric group on three points, permutations sorted lexicographically;
/// `(s * t)(i) = s(t(i))`.
pub fn s3() -> FiniteAlgebra {
    permutation_group("S3", 3, &[vec![1, 0, 2], vec![1, 2, 0]])
}

/// Dihedral group of the square acting on its vertices.
pub fn d4() -> FiniteAlgebra {
    permutation_group("D4", 4, &[vec![1, 2, 3, 0], vec![0, 3, 2, 1]])
}

pub fn a4() -> FiniteAlgebra {
    permutation_group("A4", 4, &[vec![1, 2, 0, 3], vec![1, 0, 3, 2]])
}

/// Quaternion group; element `4*s + u` is `(-1)^s * [1, i, j, k][u]`.
pub fn q8() -> FiniteAlgebra {
    // unit products: (sign, unit)
    const UNITS: [[(u8, u8); 4]; 4] = [
        [(0, 0), (0, 1), (0, 2), (0, 3)],
        [(0, 1), (1, 0), (0, 3), (1, 2)],
        [(0, 2), (1, 3), (1, 0), (0, 1)],
        [(0, 3), (0, 2), (1, 1), (1, 0)],
    ];
    let elems: Vec<(u8, u8)> = (0..8).map(|i| ((i / 4) as u8, (i % 4) as u8)).collect();
    group_from_elements("Q8", &elems, |&(s, u), &(t, v)| {
        let (w, unit) = UNITS[u as usize][v as usize];
        ((s + t + w) % 2, unit)
    })
}

pub fn z2xz2() -> FiniteAlgebra {
    product(&cyclic(2), &cyclic(2)).expect("same signature")
}

/// Chain `0 < 1 < ... < n-1` with `meet = min`.
pub fn meet_semilattice(n: usize) -> FiniteAlgebra {
    FiniteAlgebra::from_fns(
        format!("SL{n}"),
        n,
        &[("meet", 2, &|a: &[Elem]| a[0].min(a[1]))],
    )
    .expect("valid")
}

/// Chain lattice with `meet = min`, `join = max`.
pub fn chain_lattice(n: usize) -> FiniteAlgebra {
    FiniteAlgebra::from_fns(
        format!("L{n}"),
        n,
        &[
            ("meet", 2, &|a: &[Elem]| a[0].min(a[1])),
            ("join", 2, &|a: &[Elem]| a[0].max(a[1])),
        ],
    )
    .expect("valid")
}

/// `({0,1}, ->)` with `x -> y = not x or y`.
pub fn implication_algebra() -> FiniteAlgebra {
    FiniteAlgebra::from_fns(
        "Imp2",
        2,
        &[("imp", 2, &|a: &[Elem]| u32::from(a[0] == 0 || a[1] == 1))],
    )
    .expect("valid")
}

/// A non-associative loop of order 5 with both divisions.
pub fn quasigroup5() -> FiniteAlgebra {
    const MUL: [[Elem; 5]; 5] = [
        [0, 1, 2, 3, 4],
        [1, 0, 3, 4, 2],
        [2, 4, 0, 1, 3],
        [3, 2, 4, 0, 1],
        [4, 3, 1, 2, 0],
    ];
    let ldiv = |x: Elem, y: Elem| (0..5).find(|&z| MUL[x as usize][z as usize] == y).unwrap();
    let rdiv = |x: Elem, y: Elem| (0..5).find(|&z| MUL[z as usize][y as usize] == x).unwrap();
    FiniteAlgebra::from_fns(
        "QG5",
        5,
        &[
            ("*", 2, &|a: &[Elem]| MUL[a[0] as usize][a[1] as usize]),
            ("ldiv", 2, &|a: &[Elem]| ldiv(a[0], a[1])),
            ("rdiv", 2, &|a: &[Elem]| rdiv(a[0], a[1])),
        ],
    )
    .expect("valid")
}

/// One-element algebra in the abelian group signature.
pub fn trivial() -> FiniteAlgebra {
    cyclic(1)
}

/// Group-signature algebras of the corpus (file stem, algebra).
pub fn groups() -> Vec<(&'static str, FiniteAlgebra)> {
    vec![
        ("z2", cyclic(2)),
        ("z3", cyclic(3)),
        ("z4", cyclic(4)),
        ("z6", cyclic(6)),
        ("z2xz2", z2xz2()),
        ("s3", s3()),
        ("d4", d4()),
        ("q8", q8()),
        ("a4", a4()),
    ]
}

/// Every bundled algebra (file stem, algebra).
pub fn algebras() -> Vec<(&'static str, FiniteAlgebra)> {
    let mut all = groups();
    all.extend([
        ("z5", cyclic(5)),
        ("quasigroup5", quasigroup5()),
        ("semilattice2", meet_semilattice(2)),
        ("semilattice3", meet_semilattice(3)),
        ("chain3", chain_lattice(3)),
        ("implication2", implication_algebra()),
    ]);
    all
}

pub fn algebra(stem: &str) -> Option<FiniteAlgebra> {
    algebras().into_iter().find(|(s, _)| *s == stem).map(|(_, a)| a)
}

fn ext(a: FiniteAlgebra, x: FiniteAlgebra, q: FiniteAlgebra, iota: Vec<Elem>, pi: Vec<Elem>) -> Extension {
    Extension::new(Arc::new(a), Arc::new(x), Arc::new(q), iota, pi).expect("corpus extension is valid")
}

/// Extension fixtures (file stem, extension) for
/// `(Q, A)` in `{(Z2,Z2), (Z2,Z3), (Z3,Z3)}`.
pub fn extensions() -> Vec<(&'static str, Extension)> {
    let s3 = s3();
    // rotations of S3 in sorted order: [0,1,2] -> 0, [1,2,0] -> 3, [2,0,1] -> 4
    let sign: Vec<Elem> = vec![0, 1, 1, 0, 0, 1];
    vec![
        (
            "ext_q2_a2_z4",
            ext(cyclic(2), cyclic(4), cyclic(2), vec![0, 2], vec![0, 1, 0, 1]),
        ),
        (
            "ext_q2_a2_split",
            ext(cyclic(2), z2xz2(), cyclic(2), vec![0, 2], vec![0, 1, 0, 1]),
        ),
        (
            "ext_q2_a3_z6",
            ext(cyclic(3), cyclic(6), cyclic(2), vec![0, 2, 4], (0..6).map(|x| x % 2).collect()),
        ),
        ("ext_q2_a3_s3", ext(cyclic(3), s3, cyclic(2), vec![0, 3, 4], sign)),
        (
            "ext_q3_a3_z9",
            ext(cyclic(3), cyclic(9), cyclic(3), vec![0, 3, 6], (0..9).map(|x| x % 3).collect()),
        ),
        (
            "ext_q3_a3_split",
            ext(
                cyclic(3),
                product(&cyclic(3), &cyclic(3)).expect("same signature"),
                cyclic(3),
                vec![0, 3, 6],
                (0..9).map(|x| x % 3).collect(),
            ),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_orders() {
        for (stem, g) in groups() {
            let expected = match stem {
                "z2" => 2,
                "z3" => 3,
                "z4" | "z2xz2" => 4,
                "z6" | "s3" => 6,
                "d4" | "q8" => 8,
                "a4" => 12,
                _ => unreachable!(),
            };
            assert_eq!(g.size(), expected, "{stem}");
        }
    }

    #[test]
    fn s3_rotations_are_where_the_fixture_says() {
        let g = s3();
        assert_eq!(g.eval("*", &[3, 3]).unwrap(), 4);
        assert_eq!(g.eval("*", &[3, 4]).unwrap(), 0);
        assert_eq!(g.eval("e", &[]).unwrap(), 0);
    }

    #[test]
    fn quasigroup_is_latin_and_not_associative() {
        let q = quasigroup5();
        for x in 0..5 {
            let row: std::collections::HashSet<_> = (0..5).map(|y| q.eval("*", &[x, y]).unwrap()).collect();
            let col: std::collections::HashSet<_> = (0..5).map(|y| q.eval("*", &[y, x]).unwrap()).collect();
            assert_eq!(row.len(), 5);
            assert_eq!(col.len(), 5);
        }
        let assoc = (0..5).all(|x| {
            (0..5).all(|y| {
                (0..5).all(|z| {
                    let xy = q.eval("*", &[x, y]).unwrap();
                    let yz = q.eval("*", &[y, z]).unwrap();
                    q.eval("*", &[xy, z]).unwrap() == q.eval("*", &[x, yz]).unwrap()
                })
            })
        });
        assert!(!assoc);
    }
}
