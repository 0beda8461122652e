//! Symmetric tridiagonal matrices: Sturm-sequence bisection for eigenvalues
//! and inverse iteration for eigenvectors.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenDecomposition {
    /// Ascending.
    pub values: Vec<f64>,
    /// `vectors[j]` is the normalised eigenvector for `values[j]`, with its
    /// largest-magnitude entry positive.
    pub vectors: Vec<Vec<f64>>,
}

impl EigenDecomposition {
    /// `max_j ‖Tψ_j − E_jψ_j‖`.
    pub fn max_residual(&self, t: &SymTridiagonal) -> f64 {
        self.values
            .iter()
            .zip(&self.vectors)
            .map(|(&e, v)| t.residual(v, e))
            .fold(0.0, f64::max)
    }

    /// `max_{j,k} |⟨ψ_j, ψ_k⟩ − δ_jk|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.vectors.len();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for k in j..n {
                let dot: f64 = self.vectors[j]
                    .iter()
                    .zip(&self.vectors[k])
                    .map(|(a, b)| a * b)
                    .sum();
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert!(!diag.is_empty(), "empty matrix");
        assert_eq!(off.len() + 1, diag.len(), "off-diagonal length");
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.off[i - 1].abs();
                }
                if i + 1 < n {
                    s += self.off[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// `‖Tx − Ex‖`.
    pub fn residual(&self, x: &[f64], e: f64) -> f64 {
        self.matvec(x)
            .iter()
            .zip(x)
            .map(|(tx, xi)| (tx - e * xi).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.diag[i]
            } else if i + 1 == j {
                self.off[i]
            } else if j + 1 == i {
                self.off[j]
            } else {
                0.0
            }
        })
    }

    fn pivmin(&self) -> f64 {
        let m = self.off.iter().map(|e| e * e).fold(1.0, f64::max);
        f64::MIN_POSITIVE * m
    }

    /// Number of eigenvalues strictly below `x` (Sturm count).
    pub fn count_below(&self, x: f64) -> usize {
        let pivmin = self.pivmin();
        let mut q = self.diag[0] - x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        let mut cnt = usize::from(q < 0.0);
        for i in 1..self.len() {
            let e = self.off[i - 1];
            q = self.diag[i] - x - e * e / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                cnt += 1;
            }
        }
        cnt
    }

    /// All eigenvalues, ascending, each to absolute accuracy about
    /// `abstol + 4ε|E|`. `abstol = None` uses `4ε‖T‖`.
    pub fn eigenvalues_tol(&self, abstol: Option<f64>) -> Vec<f64> {
        let n = self.len();
        let (mut lo, mut hi) = self.gershgorin();
        let pad = 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) + self.pivmin();
        lo -= pad;
        hi += pad;
        let tol = abstol.unwrap_or(4.0 * f64::EPSILON * self.norm_inf().max(f64::MIN_POSITIVE));
        let mut out = vec![0.0; n];
        self.bisect(lo, hi, 0, n, tol, &mut out);
        out
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues_tol(None)
    }

    /// All eigenvalues, ascending, by implicit QL with Wilkinson-type shifts.
    /// Absolute accuracy about `ε‖T‖`; much faster than bisection when the
    /// whole spectrum is wanted.
    pub fn eigenvalues_ql(&self) -> Vec<f64> {
        let n = self.len();
        let mut d = self.diag.clone();
        let mut e = self.off.clone();
        e.push(0.0);
        for l in 0..n {
            for _ in 0..64 {
                let mut m = l;
                while m + 1 < n && e[m].abs() > f64::EPSILON * (d[m].abs() + d[m + 1].abs()) {
                    m += 1;
                }
                if m == l {
                    break;
                }
                let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                let mut r = g.hypot(1.0);
                g = d[m] - d[l] + e[l] / (g + r.copysign(g));
                let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
                let mut deflated = false;
                for i in (l..m).rev() {
                    let f = s * e[i];
                    let b = c * e[i];
                    r = f.hypot(g);
                    e[i + 1] = r;
                    if r == 0.0 {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        deflated = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                }
                if !deflated {
                    d[l] -= p;
                    e[l] = g;
                    e[m] = 0.0;
                }
            }
        }
        d.sort_by(f64::total_cmp);
        d
    }

    // Eigenvalues with indices in [cl, ch) lie in [lo, hi).
    fn bisect(&self, lo: f64, hi: f64, cl: usize, ch: usize, tol: f64, out: &mut [f64]) {
        if ch == cl {
            return;
        }
        let width_ok = hi - lo <= tol + 4.0 * f64::EPSILON * lo.abs().max(hi.abs());
        let mid = 0.5 * (lo + hi);
        if width_ok || mid <= lo || mid >= hi {
            for v in &mut out[cl..ch] {
                *v = mid;
            }
            return;
        }
        let cm = self.count_below(mid).clamp(cl, ch);
        self.bisect(lo, mid, cl, cm, tol, out);
        self.bisect(mid, hi, cm, ch, tol, out);
    }

    /// Eigenvalues by bisection, eigenvectors by inverse iteration with
    /// reorthogonalisation inside clusters.
    pub fn eigen(&self) -> EigenDecomposition {
        let values = self.eigenvalues();
        let vectors = self.eigenvectors(&values);
        EigenDecomposition { values, vectors }
    }

    /// Inverse iteration for the given (ascending) eigenvalues.
    pub fn eigenvectors(&self, values: &[f64]) -> Vec<Vec<f64>> {
        let n = self.len();
        if n == 1 {
            return vec![vec![1.0]; values.len()];
        }
        let tnorm = self.norm_inf().max(f64::MIN_POSITIVE);
        let ortol = 1e-3 * tnorm;
        let pertol = 10.0 * f64::EPSILON * tnorm;
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(values.len());
        let mut cluster_start = 0;
        let mut prev_sigma = f64::NEG_INFINITY;
        for (k, &ev) in values.iter().enumerate() {
            if k == 0 || ev - values[k - 1] > ortol {
                cluster_start = k;
            }
            let mut sigma = ev;
            if k > cluster_start && sigma < prev_sigma + pertol {
                sigma = prev_sigma + pertol;
            }
            prev_sigma = sigma;
            let lu = TridiagLu::factor(self, sigma);
            let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
            let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            normalize(&mut x);
            for iter in 0..8 {
                lu.solve(&mut x);
                for _ in 0..2 {
                    for prev in &vectors[cluster_start..k] {
                        let dot: f64 = prev.iter().zip(&x).map(|(a, b)| a * b).sum();
                        for (xi, pi) in x.iter_mut().zip(prev) {
                            *xi -= dot * pi;
                        }
                    }
                }
                normalize(&mut x);
                if iter >= 1 && self.residual(&x, ev) <= 4.0 * f64::EPSILON * tnorm * (n as f64).sqrt()
                {
                    break;
                }
            }
            fix_sign(&mut x);
            vectors.push(x);
        }
        vectors
    }
}

fn normalize(x: &mut [f64]) {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        // Fall back to a unit vector if the solve degenerated.
        for (i, v) in x.iter_mut().enumerate() {
            *v = if i == 0 { 1.0 } else { 0.0 };
        }
        return;
    }
    for v in x.iter_mut() {
        *v /= scale;
    }
    let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in x.iter_mut() {
        *v /= nrm;
    }
}

/// Flips `x` so that its largest-magnitude entry (first on ties) is positive.
pub fn fix_sign(x: &mut [f64]) {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > x[best].abs() {
            best = i;
        }
    }
    if x[best] < 0.0 {
        for v in x.iter_mut() {
            *v = -*v;
        }
    }
}

/// LU factorisation of `T − σI` with partial pivoting.
struct TridiagLu {
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    mult: Vec<f64>,
    swap: Vec<bool>,
    tiny: f64,
}

impl TridiagLu {
    fn factor(t: &SymTridiagonal, sigma: f64) -> Self {
        let n = t.len();
        let tiny = f64::EPSILON * t.norm_inf().max(f64::MIN_POSITIVE);
        let mut u0 = vec![0.0; n];
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        let mut mult = vec![0.0; n.saturating_sub(1)];
        let mut swap = vec![false; n.saturating_sub(1)];
        // working row at position i: (p0, p1) in columns i, i+1
        let mut p0 = t.diag[0] - sigma;
        let mut p1 = if n > 1 { t.off[0] } else { 0.0 };
        for i in 0..n - 1 {
            let c = t.off[i];
            let a = t.diag[i + 1] - sigma;
            let b = if i + 2 < n { t.off[i + 1] } else { 0.0 };
            if p0.abs() >= c.abs() {
                let piv = if p0 == 0.0 { tiny } else { p0 };
                let l = c / piv;
                u0[i] = piv;
                u1[i] = p1;
                u2[i] = 0.0;
                mult[i] = l;
                p0 = a - l * p1;
                p1 = b;
            } else {
                let l = p0 / c;
                u0[i] = c;
                u1[i] = a;
                u2[i] = b;
                mult[i] = l;
                swap[i] = true;
                p0 = p1 - l * a;
                p1 = -l * b;
            }
        }
        u0[n - 1] = if p0 == 0.0 { tiny } else { p0 };
        Self {
            u0,
            u1,
            u2,
            mult,
            swap,
            tiny,
        }
    }

    fn solve(&self, x: &mut [f64]) {
        let n = x.len();
        for i in 0..n - 1 {
            if self.swap[i] {
                x.swap(i, i + 1);
            }
            x[i + 1] -= self.mult[i] * x[i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            if i + 1 < n {
                s -= self.u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= self.u2[i] * x[i + 2];
            }
            let piv = if self.u0[i].abs() < self.tiny {
                self.tiny.copysign(self.u0[i])
            } else {
                self.u0[i]
            };
            x[i] = s / piv;
        }
        // Rescale to avoid overflow on repeated solves.
        let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if m > 1e100 {
            for v in x.iter_mut() {
                *v /= m;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use rand::Rng;

    fn random_tridiag(n: usize, seed: u64, scale: f64) -> SymTridiagonal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SymTridiagonal::new(
            (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect(),
            vec![-1.0; n - 1],
        )
    }

    #[test]
    fn free_spectrum_is_sine_transform() {
        for n in [1usize, 2, 3, 17, 64] {
            let t = SymTridiagonal::new(vec![0.0; n], vec![-1.0; n - 1]);
            let ev = t.eigenvalues();
            for (k, e) in ev.iter().enumerate() {
                let exact = -2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
                assert!((e - exact).abs() < 1e-13, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn matches_dense_oracle() {
        for seed in 0..30 {
            let n = 2 + (seed as usize * 7) % 63;
            let t = random_tridiag(n, seed, 5.0 + seed as f64);
            let dec = t.eigen();
            let mut oracle: Vec<f64> = SymmetricEigen::new(t.to_dense())
                .eigenvalues
                .iter()
                .copied()
                .collect();
            oracle.sort_by(|a, b| a.total_cmp(b));
            for (a, b) in dec.values.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-10, "seed {seed}");
            }
            let scale = 1.0 + t.norm_inf();
            assert!(dec.max_residual(&t) < 1e-10 * scale, "residual, seed {seed}");
            assert!(dec.orthonormality_defect() < 1e-10, "orthogonality, seed {seed}");
        }
    }

    #[test]
    fn clustered_free_spectrum_vectors() {
        let n = 200;
        let t = SymTridiagonal::new(vec![0.0; n], vec![-1.0; n - 1]);
        let dec = t.eigen();
        assert!(dec.max_residual(&t) < 1e-12);
        assert!(dec.orthonormality_defect() < 1e-10);
    }

    #[test]
    fn sign_convention() {
        let t = random_tridiag(12, 3, 4.0);
        for v in t.eigen().vectors {
            let big = v.iter().fold(0.0f64, |m, x| if x.abs() > m.abs() { *x } else { m });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn ql_matches_bisection() {
        for seed in 0..20 {
            let n = 1 + (seed as usize * 11) % 150;
            let t = random_tridiag(n, 100 + seed, 50.0);
            let scale = t.norm_inf();
            for (a, b) in t.eigenvalues_ql().iter().zip(t.eigenvalues()) {
                assert!((a - b).abs() < 1e-13 * scale, "seed {seed}");
            }
        }
        let t = SymTridiagonal::new(vec![0.0; 80], vec![-1.0; 79]);
        for (a, b) in t.eigenvalues_ql().iter().zip(t.eigenvalues()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn sturm_count_brackets() {
        let t = random_tridiag(40, 9, 3.0);
        let ev = t.eigenvalues();
        for (k, e) in ev.iter().enumerate() {
            assert!(t.count_below(e - 1e-8) <= k);
            assert!(t.count_below(e + 1e-8) > k);
        }
    }
}
