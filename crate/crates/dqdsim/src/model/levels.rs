//! Labeled energy levels.
//!
//! Eigenstates of the full matrix are named after the level they connect to when
//! the spin-flip coupling Δ is switched off. Without Δ the triplets T± are exact
//! eigenstates and the remaining m=0 block {T0, (1,1)S, (0,2)S} orders as
//! S_H < T0-like < upper singlet at every detuning.

use nalgebra::{Matrix3, Matrix5, Vector5};

use super::eigen::eigh5;
use super::hamiltonian::{h5_real, S02, S11, T_MINUS, T_PLUS, T_ZERO};
use super::DeviceParams;

/// Names of the five model levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    TPlus,
    T0,
    TMinus,
    SH,
    SUpper,
}

impl Level {
    pub const ALL: [Level; 5] = [Level::TPlus, Level::T0, Level::TMinus, Level::SH, Level::SUpper];

    fn index(self) -> usize {
        self as usize
    }
}

/// The level pair whose splitting is of interest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pair {
    /// Hybridized singlet vs. T0 (exchange / ESR regime).
    SingletT0,
    /// Hybridized singlet vs. the polarized triplet it crosses (funnel / LZ regime).
    SingletTMinus,
}

/// Energies (GHz) and eigenvectors of the five labeled levels at one detuning.
#[derive(Debug, Clone)]
pub struct Levels {
    energies: [f64; 5],
    vectors: [Vector5<f64>; 5],
}

impl Levels {
    pub fn energy(&self, level: Level) -> f64 {
        self.energies[level.index()]
    }

    pub fn vector(&self, level: Level) -> &Vector5<f64> {
        &self.vectors[level.index()]
    }

    /// Splitting |E_a − E_b| of a pair, GHz.
    pub fn gap(&self, pair: Pair, partner: Level) -> f64 {
        match pair {
            Pair::SingletT0 => (self.energy(Level::SH) - self.energy(Level::T0)).abs(),
            Pair::SingletTMinus => (self.energy(Level::SH) - self.energy(partner)).abs(),
        }
    }
}

/// The polarized triplet brought down to the singlet by the field: T− for a positive
/// net field, T+ for a negative one.
pub fn polarized_partner(params: &DeviceParams) -> Level {
    if params.ez_mean() >= 0.0 {
        Level::TMinus
    } else {
        Level::TPlus
    }
}

/// Levels with Δ removed.
pub fn diabatic_levels(params: &DeviceParams, eps: f64) -> Levels {
    let h = h5_real(params, eps);
    let m0 = [T_ZERO, S11, S02];
    let block = Matrix3::from_fn(|i, j| h[(m0[i], m0[j])]);
    let eig = block.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lift = |k: usize| {
        let c = eig.eigenvectors.column(k);
        let big = c.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap();
        let mut v = Vector5::zeros();
        for (i, &row) in m0.iter().enumerate() {
            v[row] = c[i] * big.signum();
        }
        v
    };
    let unit = |i: usize| {
        let mut v = Vector5::zeros();
        v[i] = 1.0;
        v
    };
    let [lo, mid, hi] = order;
    Levels {
        energies: [
            h[(T_PLUS, T_PLUS)],
            eig.eigenvalues[mid],
            h[(T_MINUS, T_MINUS)],
            eig.eigenvalues[lo],
            eig.eigenvalues[hi],
        ],
        vectors: [unit(T_PLUS), lift(mid), unit(T_MINUS), lift(lo), lift(hi)],
    }
}

/// Levels of the full matrix, each eigenstate assigned to the Δ-free level it
/// overlaps most (greedy, largest overlap first).
pub fn labeled_levels(params: &DeviceParams, eps: f64) -> Levels {
    let reference = diabatic_levels(params, eps);
    if params.delta11 == 0.0 {
        return reference;
    }
    let (values, vectors) = eigh5(&h5_real(params, eps));
    assign(&reference, &values, &vectors)
}

fn assign(reference: &Levels, values: &Vector5<f64>, vectors: &Matrix5<f64>) -> Levels {
    let mut overlap = [[0.0f64; 5]; 5];
    for (l, row) in overlap.iter_mut().enumerate() {
        for (k, o) in row.iter_mut().enumerate() {
            *o = reference.vectors[l].dot(&vectors.column(k)).powi(2);
        }
    }
    let mut taken_l = [false; 5];
    let mut taken_k = [false; 5];
    let mut energies = [0.0; 5];
    let mut vecs = [Vector5::zeros(); 5];
    for _ in 0..5 {
        let mut best = (0, 0, -1.0);
        for l in (0..5).filter(|&l| !taken_l[l]) {
            for k in (0..5).filter(|&k| !taken_k[k]) {
                if overlap[l][k] > best.2 {
                    best = (l, k, overlap[l][k]);
                }
            }
        }
        let (l, k, _) = best;
        taken_l[l] = true;
        taken_k[k] = true;
        energies[l] = values[k];
        vecs[l] = vectors.column(k).into_owned();
    }
    Levels { energies, vectors: vecs }
}

/// Signed Δ-free splitting E_SH − E_partner (GHz); changes sign at the funnel crossing.
pub fn diabatic_crossing_gap(params: &DeviceParams, eps: f64) -> f64 {
    let lv = diabatic_levels(params, eps);
    lv.energy(Level::SH) - lv.energy(polarized_partner(params))
}

/// Detunings in `[lo, hi]` where the singlet crosses the polarized triplet (Δ-free),
/// located by sampling and bisection.
pub fn singlet_triplet_crossings(params: &DeviceParams, lo: f64, hi: f64) -> Vec<f64> {
    const SAMPLES: usize = 400;
    let g = |e: f64| diabatic_crossing_gap(params, e);
    let mut roots = Vec::new();
    let mut prev = (lo, g(lo));
    for i in 1..=SAMPLES {
        let e = lo + (hi - lo) * i as f64 / SAMPLES as f64;
        let ge = g(e);
        if prev.1 == 0.0 {
            roots.push(prev.0);
        } else if prev.1.signum() != ge.signum() && ge != 0.0 {
            roots.push(bisect(g, prev.0, e));
        }
        prev = (e, ge);
    }
    if prev.1 == 0.0 {
        roots.push(prev.0);
    }
    roots
}

pub(crate) fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Eigenvector of the full matrix belonging to the hybridized singlet.
pub fn singlet_state(params: &DeviceParams, eps: f64) -> Vector5<f64> {
    *labeled_levels(params, eps).vector(Level::SH)
}
