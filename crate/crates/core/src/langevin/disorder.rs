use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::model::MixturePolynomial;

/// Largest `N` accepted for a quadratic term.
pub const MAX_N_P2: usize = 1000;
/// Largest `N` accepted for a cubic term.
pub const MAX_N_P3: usize = 300;
/// Cap on the number of stored couplings of degree four and above.
pub const MAX_INDEXED_COUPLINGS: usize = 20_000_000;

/// Couplings of one degree `p`, in lexicographic order of the sorted
/// multi-indices `i₁ <= … <= i_p`.
#[derive(Clone, Debug, PartialEq)]
struct Term {
    p: usize,
    a: f64,
    j: Vec<f64>,
    /// Flattened index tuples (`p` entries each); empty for `p <= 3`,
    /// whose order is implied by nested loops.
    idx: Vec<u32>,
}

/// One realisation of the Gaussian couplings.
///
/// The energy is
/// `H(x) = Σ_p a_p/p! Σ_{i₁,…,i_p} J_{i₁⋯i_p} x^{i₁}⋯x^{i_p}`
/// with the inner sum over all ordered tuples and `J` symmetric under
/// permutation. Grouping by sorted tuple, each `J` enters with weight
/// `a_p/c`, where `c` is the product of the factorials of the index
/// multiplicities; with `Var J = c N^{1-p}` this gives
/// `E[H(x)H(y)] = N ν(x·y/N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DisorderSample {
    n: usize,
    seed: u64,
    terms: Vec<Term>,
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

/// `∏ l_k!` over the multiplicities of a sorted tuple.
pub fn multiplicity_factor(sorted: &[usize]) -> f64 {
    let mut c = 1.0;
    let mut run = 1.0;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1.0;
            c *= run;
        } else {
            run = 1.0;
        }
    }
    c
}

/// Advances a sorted tuple to its lexicographic successor; false at the end.
fn next_sorted(t: &mut [usize], n: usize) -> bool {
    let p = t.len();
    for pos in (0..p).rev() {
        if t[pos] + 1 < n {
            let v = t[pos] + 1;
            for slot in &mut t[pos..] {
                *slot = v;
            }
            return true;
        }
    }
    false
}

pub fn sample_disorder(mix: &MixturePolynomial, n: usize, seed: u64) -> Result<DisorderSample> {
    if n < 2 {
        return invalid(format!("N must be >= 2, got {n}"));
    }
    let mut terms = Vec::new();
    for &(p, a) in mix.terms() {
        let p = p as usize;
        let cap = match p {
            2 => Some(MAX_N_P2),
            3 => Some(MAX_N_P3),
            _ => None,
        };
        if let Some(cap) = cap {
            if n > cap {
                return Err(Error::ResourceLimit(format!(
                    "N = {n} exceeds the cap {cap} for p = {p}"
                )));
            }
        }
        let count = binomial(n + p - 1, p)
            .filter(|&c| p <= 3 || c <= MAX_INDEXED_COUPLINGS)
            .ok_or_else(|| {
                Error::ResourceLimit(format!("too many couplings for p = {p}, N = {n}"))
            })?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(p as u64);
        let base = (n as f64).powi(1 - p as i32);
        let mut j = Vec::with_capacity(count);
        let mut idx = Vec::new();
        if p >= 4 {
            idx.reserve(count * p);
        }
        let mut t = vec![0usize; p];
        loop {
            let z: f64 = StandardNormal.sample(&mut rng);
            j.push(z * (multiplicity_factor(&t) * base).sqrt());
            if p >= 4 {
                idx.extend(t.iter().map(|&i| i as u32));
            }
            if !next_sorted(&mut t, n) {
                break;
            }
        }
        debug_assert_eq!(j.len(), count);
        terms.push(Term { p, a, j, idx });
    }
    Ok(DisorderSample { n, seed, terms })
}

impl DisorderSample {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Coupling `J` of degree `p` at a multi-index (any order).
    pub fn coupling(&self, p: usize, index: &[usize]) -> Option<f64> {
        let term = self.terms.iter().find(|t| t.p == p)?;
        if index.len() != p || index.iter().any(|&i| i >= self.n) {
            return None;
        }
        let mut sorted = index.to_vec();
        sorted.sort_unstable();
        // rank of the sorted tuple in lexicographic order
        let n = self.n;
        let mut rank = 0;
        let mut lo = 0;
        for (pos, &v) in sorted.iter().enumerate() {
            let rest = p - pos - 1;
            for skip in lo..v {
                rank += binomial(n - skip + rest - 1, rest)?;
            }
            lo = v;
        }
        term.j.get(rank).copied()
    }

    /// Returns a copy with every coupling multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> DisorderSample {
        let mut out = self.clone();
        for t in &mut out.terms {
            for v in &mut t.j {
                *v *= factor;
            }
        }
        out
    }

    pub fn hamiltonian(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n);
        let mut total = 0.0;
        for term in &self.terms {
            let mut acc = 0.0;
            let mut t = vec![0usize; term.p];
            for &j in &term.j {
                let mono: f64 = t.iter().map(|&i| x[i]).product();
                acc += j / multiplicity_factor(&t) * mono;
                next_sorted(&mut t, self.n);
            }
            total += term.a * acc;
        }
        total
    }

    /// Writes `∇H(x)` into `grad`.
    pub fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        let n = self.n;
        assert_eq!(x.len(), n);
        assert_eq!(grad.len(), n);
        grad.fill(0.0);
        for term in &self.terms {
            match term.p {
                2 => grad_p2(term, x, grad),
                3 => grad_p3(term, x, grad),
                _ => grad_indexed(term, x, grad),
            }
        }
    }
}

fn grad_p2(term: &Term, x: &[f64], grad: &mut [f64]) {
    let n = x.len();
    let a = term.a;
    let mut k = 0;
    for i in 0..n {
        // diagonal: a J/2 x_i², derivative a J x_i
        grad[i] += a * term.j[k] * x[i];
        k += 1;
        let row = &term.j[k..k + n - i - 1];
        let mut acc = 0.0;
        for (off, &jv) in row.iter().enumerate() {
            let jj = i + 1 + off;
            acc += jv * x[jj];
            grad[jj] += a * jv * x[i];
        }
        grad[i] += a * acc;
        k += n - i - 1;
    }
}

fn grad_p3(term: &Term, x: &[f64], grad: &mut [f64]) {
    let n = x.len();
    let a = term.a;
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            let xij = x[i] * x[j];
            // k == j, then k > j
            let (inv_diag, inv_off) = if i == j { (1.0 / 6.0, 0.5) } else { (0.5, 1.0) };
            let w = a * term.j[k] * inv_diag;
            k += 1;
            grad[j] += w * xij;
            let mut acc = w * x[j];
            let row = &term.j[k..k + n - j - 1];
            for (off, &jv) in row.iter().enumerate() {
                let kk = j + 1 + off;
                let w = a * inv_off * jv;
                grad[kk] += w * xij;
                acc += w * x[kk];
            }
            k += n - j - 1;
            grad[i] += acc * x[j];
            grad[j] += acc * x[i];
        }
    }
}

fn grad_indexed(term: &Term, x: &[f64], grad: &mut [f64]) {
    let p = term.p;
    let mut prefix = vec![1.0; p + 1];
    let mut suffix = vec![1.0; p + 1];
    for (&jv, t) in term.j.iter().zip(term.idx.chunks_exact(p)) {
        let t: Vec<usize> = t.iter().map(|&i| i as usize).collect();
        for q in 0..p {
            prefix[q + 1] = prefix[q] * x[t[q]];
        }
        for q in (0..p).rev() {
            suffix[q] = suffix[q + 1] * x[t[q]];
        }
        let w = term.a * jv / multiplicity_factor(&t);
        for q in 0..p {
            grad[t[q]] += w * prefix[q] * suffix[q + 1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplicity_factors() {
        assert_eq!(multiplicity_factor(&[1, 1]), 2.0);
        assert_eq!(multiplicity_factor(&[0, 1, 2]), 1.0);
        assert_eq!(multiplicity_factor(&[3, 3, 3]), 6.0);
        assert_eq!(multiplicity_factor(&[0, 0, 2, 2, 2]), 12.0);
    }

    #[test]
    fn coupling_lookup_follows_generation_order() {
        let mix = MixturePolynomial::new([(2, 1.0), (3, 1.0), (4, 1.0)]).unwrap();
        let d = sample_disorder(&mix, 5, 3).unwrap();
        for term in &d.terms {
            let mut t = vec![0usize; term.p];
            for &jv in &term.j {
                assert_eq!(d.coupling(term.p, &t), Some(jv));
                let mut rev = t.clone();
                rev.reverse();
                assert_eq!(d.coupling(term.p, &rev), Some(jv));
                next_sorted(&mut t, 5);
            }
        }
        assert_eq!(d.coupling(3, &[0, 5, 1]), None);
    }

    #[test]
    fn zero_gradient_at_origin() {
        let mix = MixturePolynomial::new([(2, 0.3), (3, 1.0), (5, 0.2)]).unwrap();
        let d = sample_disorder(&mix, 6, 1).unwrap();
        let mut g = vec![1.0; 6];
        d.gradient(&[0.0; 6], &mut g);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn caps() {
        let p3 = MixturePolynomial::pure(3, 1.0).unwrap();
        assert!(matches!(
            sample_disorder(&p3, 301, 0),
            Err(Error::ResourceLimit(_))
        ));
        let p2 = MixturePolynomial::pure(2, 1.0).unwrap();
        assert!(matches!(
            sample_disorder(&p2, 1001, 0),
            Err(Error::ResourceLimit(_))
        ));
        assert!(sample_disorder(&p2, 1, 0).is_err());
        let p8 = MixturePolynomial::pure(8, 1.0).unwrap();
        assert!(matches!(
            sample_disorder(&p8, 60, 0),
            Err(Error::ResourceLimit(_))
        ));
    }
}
