//! Exact refutation of a vanishing closed-loop determinant on one cell.
//!
//! Entries of a row-echelon matrix with fixed pivots are integer polynomials
//! in its free entries. The determinant `det [[D, N], [W]]` vanishes
//! identically iff every coefficient in `s` does; with the isotropy equations
//! this is a polynomial system over the integers. It is refuted by
//! elimination: a one-term equation `c x^e` forces one of its variables to
//! zero (branching when there are several), and an equation `±x + r` with `r`
//! free of `x` substitutes `x = ∓r`. A nonzero constant equation closes a
//! branch. Every step is an equivalence over C, so a closed tree is a proof.

use std::collections::BTreeMap;

use itertools::Itertools;

/// Branches explored before giving up.
const BRANCH_BUDGET: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct IntPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, i128>,
}

impl IntPoly {
    pub(crate) fn zero(nvars: usize) -> Self {
        IntPoly { nvars, terms: BTreeMap::new() }
    }

    pub(crate) fn constant(nvars: usize, c: i128) -> Self {
        let mut p = IntPoly::zero(nvars);
        if c != 0 {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub(crate) fn var(nvars: usize, v: usize) -> Self {
        let mut exps = vec![0; nvars];
        exps[v] = 1;
        IntPoly { nvars, terms: BTreeMap::from([(exps, 1)]) }
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, exps: Vec<u32>, c: i128) {
        let entry = self.terms.entry(exps).or_insert(0);
        *entry += c;
        if *entry == 0 {
            self.terms.retain(|_, c| *c != 0);
        }
    }

    pub(crate) fn add(&self, other: &IntPoly) -> IntPoly {
        let mut out = self.clone();
        for (e, &c) in &other.terms {
            out.add_term(e.clone(), c);
        }
        out
    }

    pub(crate) fn scale(&self, k: i128) -> IntPoly {
        if k == 0 {
            return IntPoly::zero(self.nvars);
        }
        IntPoly { nvars: self.nvars, terms: self.terms.iter().map(|(e, &c)| (e.clone(), c * k)).collect() }
    }

    pub(crate) fn mul(&self, other: &IntPoly) -> IntPoly {
        let mut out = IntPoly::zero(self.nvars);
        for (e1, &c1) in &self.terms {
            for (e2, &c2) in &other.terms {
                out.add_term(e1.iter().zip(e2).map(|(a, b)| a + b).collect(), c1 * c2);
            }
        }
        out
    }

    fn nonzero_constant(&self) -> bool {
        self.terms.len() == 1 && self.terms.keys().next().is_some_and(|e| e.iter().all(|&x| x == 0))
    }

    fn single_term_vars(&self) -> Option<Vec<usize>> {
        if self.terms.len() != 1 {
            return None;
        }
        let exps = self.terms.keys().next()?;
        Some((0..self.nvars).filter(|&v| exps[v] > 0).collect())
    }

    /// `(v, r)` with `self = ±(v - r)` and `r` free of `v`.
    fn linear_pivot(&self) -> Option<(usize, IntPoly)> {
        for (exps, &c) in &self.terms {
            if c.abs() != 1 || exps.iter().sum::<u32>() != 1 {
                continue;
            }
            let v = exps.iter().position(|&x| x == 1)?;
            if self.terms.keys().filter(|e| e[v] > 0).count() == 1 {
                let mut rest = self.clone();
                rest.terms.remove(exps);
                return Some((v, rest.scale(-c)));
            }
        }
        None
    }

    fn substitute(&self, v: usize, value: &IntPoly) -> IntPoly {
        let mut out = IntPoly::zero(self.nvars);
        for (exps, &c) in &self.terms {
            let mut rest = exps.clone();
            rest[v] = 0;
            let mut term = IntPoly { nvars: self.nvars, terms: BTreeMap::from([(rest, c)]) };
            for _ in 0..exps[v] {
                term = term.mul(value);
            }
            out = out.add(&term);
        }
        out
    }
}

/// True when the equations provably have no common complex zero.
pub(crate) fn refute(eqs: Vec<IntPoly>) -> bool {
    let mut budget = BRANCH_BUDGET;
    refute_branch(eqs, &mut budget)
}

fn refute_branch(mut eqs: Vec<IntPoly>, budget: &mut usize) -> bool {
    loop {
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        eqs.retain(|e| !e.is_zero());
        if eqs.iter().any(IntPoly::nonzero_constant) {
            return true;
        }
        if eqs.is_empty() {
            return false;
        }
        if let Some(vars) = eqs.iter().find_map(IntPoly::single_term_vars) {
            let nvars = eqs[0].nvars;
            let zero = IntPoly::zero(nvars);
            return vars.iter().all(|&v| refute_branch(eqs.iter().map(|e| e.substitute(v, &zero)).collect(), budget));
        }
        match eqs.iter().find_map(IntPoly::linear_pivot) {
            Some((v, value)) => eqs = eqs.iter().map(|e| e.substitute(v, &value)).collect(),
            None => return false,
        }
    }
}

/// Generic row-echelon matrix with 1-based `pivots` in `2n` columns: each
/// row has a one at its pivot, zeros right of it and at the other pivot
/// columns, and a fresh variable elsewhere.
pub(crate) fn echelon_cell(pivots: &[usize], n: usize) -> Vec<Vec<IntPoly>> {
    let free: Vec<(usize, usize)> = pivots
        .iter()
        .enumerate()
        .flat_map(|(r, &p)| (1..p).filter(|c| !pivots.contains(c)).map(move |c| (r, c)))
        .collect();
    let nvars = free.len();
    pivots
        .iter()
        .enumerate()
        .map(|(r, &p)| {
            (1..=2 * n)
                .map(|c| {
                    if c == p {
                        IntPoly::constant(nvars, 1)
                    } else if let Some(v) = free.iter().position(|&f| f == (r, c)) {
                        IntPoly::var(nvars, v)
                    } else {
                        IntPoly::zero(nvars)
                    }
                })
                .collect()
        })
        .collect()
}

fn determinant(m: &[Vec<IntPoly>]) -> IntPoly {
    let size = m.len();
    let nvars = m.first().and_then(|r| r.first()).map_or(0, |p| p.nvars);
    let mut out = IntPoly::zero(nvars);
    for perm in (0..size).permutations(size) {
        let inversions =
            (0..size).flat_map(|i| (i + 1..size).map(move |j| (i, j))).filter(|&(i, j)| perm[i] > perm[j]).count();
        let mut term = IntPoly::constant(nvars, if inversions % 2 == 0 { 1 } else { -1 });
        for (row, &col) in perm.iter().enumerate() {
            term = term.mul(&m[row][col]);
            if term.is_zero() {
                break;
            }
        }
        out = out.add(&term);
    }
    out
}

/// Proves that no isotropic point of the cell makes `sum_I f_I p_I` vanish.
/// `tuples` are the 0-based column sets and `cofactors[i]` the integer
/// coefficients of `p_I`, ascending in `s`.
pub(crate) fn refute_cell(pivots: &[usize], n: usize, tuples: &[Vec<usize>], cofactors: &[Vec<i128>]) -> bool {
    let w = echelon_cell(pivots, n);
    let nvars = w[0][0].nvars;
    let minors: Vec<IntPoly> = tuples
        .iter()
        .map(|cols| {
            determinant(&w.iter().map(|row| cols.iter().map(|&c| row[c].clone()).collect()).collect::<Vec<_>>())
        })
        .collect();
    let degree = cofactors.iter().map(Vec::len).max().unwrap_or(0);
    let mut eqs: Vec<IntPoly> = (0..degree)
        .map(|k| {
            minors
                .iter()
                .zip(cofactors)
                .fold(IntPoly::zero(nvars), |acc, (m, p)| acc.add(&m.scale(p.get(k).copied().unwrap_or(0))))
        })
        .collect();
    for a in 0..n {
        for b in a + 1..n {
            let pairing = (0..n).fold(IntPoly::zero(nvars), |acc, c| {
                acc.add(&w[a][c].mul(&w[b][2 * n - 1 - c])).add(&w[b][c].mul(&w[a][2 * n - 1 - c]).scale(-1))
            });
            eqs.push(pairing);
        }
    }
    refute(eqs)
}
