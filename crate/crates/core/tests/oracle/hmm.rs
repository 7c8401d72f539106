//! Brute-force decoding and a direct sampler for Gaussian HMMs.

use agentseg::hmm::{Cov6, EmissionGaussian, HmmModel};
use agentseg::Window6;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::gaussian::log_density;

pub fn emission_log(e: &EmissionGaussian, x: &Window6) -> f64 {
    let x = DVector::from_column_slice(x.as_slice());
    let mean = DVector::from_column_slice(e.mean.as_slice());
    let cov = DMatrix::from_column_slice(6, 6, e.cov.as_slice());
    log_density(&x, &mean, &cov)
}

pub fn path_logprob(model: &HmmModel, windows: &[Window6], path: &[usize]) -> f64 {
    let mut lp = model.initial[path[0]].ln() + emission_log(&model.emissions[path[0]], &windows[0]);
    for t in 1..path.len() {
        lp += model.trans[(path[t - 1], path[t])].ln() + emission_log(&model.emissions[path[t]], &windows[t]);
    }
    lp
}

/// Every label sequence in lexicographic order; the first maximum wins.
pub fn brute_force_viterbi(model: &HmmModel, windows: &[Window6]) -> (Vec<usize>, f64) {
    let m = model.n_states();
    let n = windows.len();
    let total = m.pow(n as u32);
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    for code in 0..total {
        let mut path = vec![0; n];
        let mut c = code;
        for t in (0..n).rev() {
            path[t] = c % m;
            c /= m;
        }
        let lp = path_logprob(model, windows, &path);
        if lp > best.1 {
            best = (path, lp);
        }
    }
    best
}

fn categorical<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Emission covariance is taken to be `σ² I`.
pub fn sample_sequence<R: Rng>(rng: &mut R, initial: &[f64], trans: &DMatrix<f64>, means: &[Window6], sigma: f64, n: usize) -> (Vec<usize>, Vec<Window6>) {
    let mut states = Vec::with_capacity(n);
    let mut obs = Vec::with_capacity(n);
    let mut s = categorical(rng, initial);
    for t in 0..n {
        if t > 0 {
            let row: Vec<f64> = trans.row(s).iter().copied().collect();
            s = categorical(rng, &row);
        }
        states.push(s);
        obs.push(means[s] + Window6::from_fn(|_, _| { let z: f64 = StandardNormal.sample(rng); sigma * z }));
    }
    (states, obs)
}

pub fn isotropic(sigma: f64) -> Cov6 {
    Cov6::identity() * sigma * sigma
}

fn simplex<R: Rng>(rng: &mut R, m: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}

pub fn random_model<R: Rng>(rng: &mut R, m: usize) -> HmmModel {
    let mut trans = DMatrix::zeros(m, m);
    for i in 0..m {
        for (j, v) in simplex(rng, m).into_iter().enumerate() {
            trans[(i, j)] = v;
        }
    }
    let emissions = (0..m)
        .map(|_| {
            let l = Cov6::from_fn(|i, j| if i > j { rng.random_range(-0.5..0.5) } else if i == j { rng.random_range(0.5..1.5) } else { 0.0 });
            EmissionGaussian {
                mean: Window6::from_fn(|_, _| rng.random_range(-3.0..3.0)),
                cov: l * l.transpose() + Cov6::identity() * 0.1,
            }
        })
        .collect();
    HmmModel {
        initial: simplex(rng, m),
        trans,
        emissions,
        agent_ids: (0..m).collect(),
    }
}

pub fn random_windows<R: Rng>(rng: &mut R, n: usize) -> Vec<Window6> {
    (0..n).map(|_| Window6::from_fn(|_, _| rng.random_range(-4.0..4.0))).collect()
}

/// Largest transition-entry error of the best state matching.
pub fn trans_error_up_to_permutation(fit: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    let m = truth.nrows();
    let mut best = f64::INFINITY;
    let mut perm: Vec<usize> = (0..m).collect();
    permute(&mut perm, 0, &mut |p| {
        let mut err: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                err = err.max((fit[(p[i], p[j])] - truth[(i, j)]).abs());
            }
        }
        best = best.min(err);
    });
    best
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}
