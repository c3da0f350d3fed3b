//! Brute-force reference solvers for the three-level driven-dissipative atom.
//!
//! Nothing here is fast. The Liouvillian is assembled as a dense 9×9 matrix
//! from Kronecker products, using row-major vectorization, for which
//! vec(AρB) = (A ⊗ Bᵀ) vec ρ.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

const G: usize = 0;
const S: usize = 1;
const P: usize = 2;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn ket_bra(to: usize, from: usize) -> CMat {
    let mut m = CMat::zeros(3, 3);
    m[(to, from)] = c(1.0);
    m
}

fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Single-site Hamiltonian with a complex s–p field.
pub fn hamiltonian(omega: f64, delta: f64, field: Complex64) -> CMat {
    let mut h = ket_bra(S, S) * c(-delta);
    h += (ket_bra(S, G) + ket_bra(G, S)) * c(0.5 * omega);
    h += ket_bra(S, P) * field + ket_bra(P, S) * field.conj();
    h
}

/// Decay rates (Γs: s→g, Γp: p→g, Γr: s→p).
#[derive(Debug, Clone, Copy)]
pub struct Decays {
    pub gamma_s: f64,
    pub gamma_p: f64,
    pub gamma_r: f64,
}

pub fn liouvillian(h: &CMat, decays: &Decays) -> CMat {
    let id = CMat::identity(3, 3);
    let i = Complex64::new(0.0, 1.0);
    let mut l = (kron(h, &id) - kron(&id, &h.transpose())) * (-i);
    for (rate, jump) in [
        (decays.gamma_s, ket_bra(G, S)),
        (decays.gamma_p, ket_bra(G, P)),
        (decays.gamma_r, ket_bra(P, S)),
    ] {
        let ldl = jump.adjoint() * &jump;
        let term = kron(&jump, &jump.map(|z| z.conj())) - (kron(&ldl, &id) + kron(&id, &ldl.transpose())) * c(0.5);
        l += term * c(rate);
    }
    l
}

pub fn vectorize(rho: &CMat) -> CMat {
    CMat::from_iterator(9, 1, (0..9).map(|k| rho[(k / 3, k % 3)]))
}

pub fn unvectorize(v: &CMat) -> CMat {
    CMat::from_fn(3, 3, |r, col| v[(3 * r + col, 0)])
}

/// Kernel of L normalized to unit trace: one equation swapped for tr ρ = 1.
pub fn null_space_steady_state(l: &CMat) -> CMat {
    let mut a = l.clone();
    let mut b = CMat::zeros(9, 1);
    for k in 0..9 {
        a[(0, k)] = c(0.0);
    }
    for d in 0..3 {
        a[(0, 4 * d)] = c(1.0);
    }
    b[(0, 0)] = c(1.0);
    let x = a.lu().solve(&b).expect("Liouvillian with a unique steady state");
    unvectorize(&x)
}

/// exp(M) by scaling and squaring with a degree-24 Taylor polynomial.
pub fn expm(m: &CMat) -> CMat {
    let norm = m.iter().map(|z| z.norm()).sum::<f64>();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let a = m * c(0.5f64.powi(squarings));
    let n = m.nrows();
    let mut term = CMat::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=24 {
        term = &term * &a * c(1.0 / k as f64);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// ρ(t) = exp(Lt)ρ(0) for a fixed Liouvillian.
pub fn propagate(l: &CMat, rho0: &CMat, t: f64) -> CMat {
    unvectorize(&(expm(&(l * c(t))) * vectorize(rho0)))
}

/// Analytic excited population of a driven two-level atom (FWHM Γ, Rabi Ω).
pub fn two_level_excited_population(omega: f64, delta: f64, gamma: f64) -> f64 {
    let s = 2.0 * omega * omega / (gamma * gamma) / (1.0 + 4.0 * delta * delta / (gamma * gamma));
    s / (2.0 * (1.0 + s))
}

/// Damped fixed-point iteration of the mean-field equations, each site solved
/// exactly in its own field. `couplings` is the dense n×n V_ij.
pub fn self_consistent_mean_field(
    omega: f64,
    delta: f64,
    decays: &Decays,
    couplings: &DMatrix<f64>,
    initial_coherence: Complex64,
    tol: f64,
    max_iter: usize,
) -> Option<Vec<CMat>> {
    let n = couplings.nrows();
    let mut coh = vec![initial_coherence; n];
    for _ in 0..max_iter {
        let states: Vec<CMat> = (0..n)
            .map(|i| {
                let field: Complex64 = (0..n).map(|j| coh[j] * couplings[(i, j)]).sum();
                null_space_steady_state(&liouvillian(&hamiltonian(omega, delta, field), decays))
            })
            .collect();
        let mut change: f64 = 0.0;
        for (i, st) in states.iter().enumerate() {
            let new = st[(S, P)];
            change = change.max((new - coh[i]).norm());
            coh[i] = 0.5 * coh[i] + 0.5 * new;
        }
        if change < tol {
            return Some(states);
        }
    }
    None
}
