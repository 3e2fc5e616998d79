//! Exact diagonalization of the periodic chain in the computational basis.
//!
//! Independent of the fermionic solution in [`crate::ising`]: the Hamiltonian
//! is built term by term in the σz basis without any rotation, projected onto
//! the sector that is symmetric under the dihedral group of the ring (the
//! ground state is translation and reflection invariant), and diagonalized
//! densely.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::ising::{ChainSize, IsingChainParams};

pub const MAX_SITES: usize = 14;

/// Two lowest levels closer than this (relative to the energy scale) are
/// treated as one degenerate ground manifold.
const DEGENERACY_TOL: f64 = 1e-7;

/// Orbits of basis states under rotations and reflections of an `n`-site
/// ring.
struct SymmetricSector {
    /// Index of the orbit containing each basis state.
    orbit_of: Vec<u32>,
    /// One representative per orbit.
    representatives: Vec<usize>,
    orbit_sizes: Vec<usize>,
}

impl SymmetricSector {
    fn new(n: usize) -> Self {
        let dim = 1usize << n;
        let mask = dim - 1;
        let rotate = |s: usize| ((s << 1) | (s >> (n - 1))) & mask;
        let reflect = |s: usize| {
            (0..n).fold(0, |acc, i| acc | (((s >> i) & 1) << (n - 1 - i)))
        };
        let mut orbit_of = vec![u32::MAX; dim];
        let mut representatives = Vec::new();
        let mut orbit_sizes = Vec::new();
        for s in 0..dim {
            if orbit_of[s] != u32::MAX {
                continue;
            }
            let id = representatives.len() as u32;
            let mut size = 0;
            for start in [s, reflect(s)] {
                let mut t = start;
                for _ in 0..n {
                    if orbit_of[t] == u32::MAX {
                        orbit_of[t] = id;
                        size += 1;
                    }
                    t = rotate(t);
                }
            }
            representatives.push(s);
            orbit_sizes.push(size);
        }
        Self {
            orbit_of,
            representatives,
            orbit_sizes,
        }
    }

    fn dim(&self) -> usize {
        self.representatives.len()
    }

    /// Projects a symmetric operator, given by its action on one basis state
    /// as a list of `(target, amplitude)` pairs, onto the sector.
    fn project(&self, apply: impl Fn(usize, &mut Vec<(usize, f64)>)) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        let mut terms = Vec::new();
        for (col, &rep) in self.representatives.iter().enumerate() {
            terms.clear();
            apply(rep, &mut terms);
            for &(target, amp) in &terms {
                let row = self.orbit_of[target] as usize;
                let ratio = self.orbit_sizes[col] as f64 / self.orbit_sizes[row] as f64;
                m[(row, col)] += amp * ratio.sqrt();
            }
        }
        m
    }

    /// Expands a sector vector into the full `2^n` basis.
    fn expand(&self, v: &DVector<f64>) -> Vec<f64> {
        self.orbit_of
            .iter()
            .map(|&o| {
                let o = o as usize;
                v[o] / (self.orbit_sizes[o] as f64).sqrt()
            })
            .collect()
    }
}

/// `σz` eigenvalue of site `i`: bit set means spin down.
fn z(s: usize, i: usize) -> f64 {
    if (s >> i) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn hamiltonian_action(p: &IsingChainParams, n: usize) -> impl Fn(usize, &mut Vec<(usize, f64)>) + '_ {
    move |s, out| {
        let mut diag = 0.0;
        for i in 0..n {
            diag -= p.delta * z(s, i);
            out.push((s ^ (1 << i), p.b_x));
            // σy σy |s> = -z_i z_k |s with i, k flipped>
            let k = (i + 1) % n;
            out.push((s ^ (1 << i) ^ (1 << k), p.j * z(s, i) * z(s, k)));
        }
        out.push((s, diag));
    }
}

fn sx_action(n: usize) -> impl Fn(usize, &mut Vec<(usize, f64)>) {
    move |s, out| {
        for i in 0..n {
            out.push((s ^ (1 << i), 1.0 / n as f64));
        }
    }
}

/// Applies `Π_i (hx σx_i + hz σz_i)` to a full-space vector.
fn apply_field_parity(psi: &[f64], n: usize, hx: f64, hz: f64) -> Vec<f64> {
    let mut cur = psi.to_vec();
    for i in 0..n {
        let bit = 1 << i;
        let mut next = vec![0.0; cur.len()];
        for (s, &a) in cur.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            next[s] += hz * z(s, i) * a;
            next[s ^ bit] += hx * a;
        }
        cur = next;
    }
    cur
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Per-site `<σx>` in the ground state of the finite periodic chain by dense
/// diagonalization.
///
/// A (near-)degenerate ferromagnetic doublet is resolved by taking its member
/// that is even under the π rotation about the field axis, the symmetric
/// combination of the two magnetized states.
pub fn exact_diag_sx(p: &IsingChainParams) -> Result<f64> {
    p.validate()?;
    let n = match p.size {
        ChainSize::Finite(n) if n > MAX_SITES => {
            return Err(Error::TooManySites { n, max: MAX_SITES })
        }
        ChainSize::Finite(n) => n,
        ChainSize::ThermodynamicLimit => {
            return Err(crate::error::invalid(
                "size",
                "exact diagonalization needs a finite chain",
            ))
        }
    };
    let sector = SymmetricSector::new(n);
    let h = sector.project(hamiltonian_action(p, n));
    let sx = sector.project(sx_action(n));
    let eig = SymmetricEigen::new(h);

    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let e0 = eig.eigenvalues[order[0]];
    let scale = n as f64 * p.j.max(p.delta.abs()).max(p.b_x.abs()).max(1e-300);
    let ground: Vec<DVector<f64>> = order
        .iter()
        .take_while(|&&i| eig.eigenvalues[i] - e0 <= DEGENERACY_TOL * scale)
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();

    let expectation = |v: &DVector<f64>| v.dot(&(&sx * v));
    if ground.len() == 1 {
        return Ok(expectation(&ground[0]));
    }
    let b_perp = p.delta.hypot(p.b_x);
    if b_perp == 0.0 {
        // No field axis; every state of the manifold has <σx> = 0 by
        // symmetry, the manifold average is basis independent.
        let total: f64 = ground.iter().map(expectation).sum();
        return Ok(total / ground.len() as f64);
    }
    // Energy term is -(h · σ) with h = (-b_x, 0, delta).
    let (hx, hz) = (-p.b_x / b_perp, p.delta / b_perp);
    let full: Vec<Vec<f64>> = ground.iter().map(|v| sector.expand(v)).collect();
    let images: Vec<Vec<f64>> = full
        .iter()
        .map(|psi| apply_field_parity(psi, n, hx, hz))
        .collect();
    let k = ground.len();
    let parity = DMatrix::from_fn(k, k, |a, b| dot(&full[a], &images[b]));
    let parity_eig = SymmetricEigen::new(parity);
    let even = parity_eig.eigenvalues.imax();
    let coeffs = parity_eig.eigenvectors.column(even);
    let mut combined = DVector::zeros(sector.dim());
    for (c, v) in coeffs.iter().zip(&ground) {
        combined += v * *c;
    }
    combined /= combined.norm();
    Ok(expectation(&combined))
}
