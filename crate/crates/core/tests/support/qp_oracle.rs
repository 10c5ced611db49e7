//! Independent maximizer for the soft-margin SVM dual on tiny dense problems.
//!
//! maximize Σα − ½ αᵀQα,  Q_ij = y_i y_j x_i·x_j,  0 ≤ α ≤ C,  Σ y_i α_i = 0
//!
//! A brute-force grid over the first n−1 coordinates (the last one is fixed by
//! the equality constraint) finds a feasible starting point, which accelerated
//! projected gradient then polishes.

#![allow(dead_code, clippy::needless_range_loop)]

pub struct Problem {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub c: f64,
    q: Vec<Vec<f64>>,
}

pub struct Solution {
    pub alpha: Vec<f64>,
    pub objective: f64,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Problem {
    pub fn new(x: Vec<Vec<f64>>, labels: &[bool], c: f64) -> Self {
        let y = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
        let mut p = Self { x, y, c, q: Vec::new() };
        p.q = p.gram();
        p
    }

    fn n(&self) -> usize {
        self.y.len()
    }

    fn gram(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut q = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = self.x[i].iter().zip(&self.x[j]).map(|(a, b)| a * b).sum();
                q[i][j] = self.y[i] * self.y[j] * dot;
            }
        }
        q
    }

    pub fn objective(&self, alpha: &[f64]) -> f64 {
        let q = &self.q;
        let mut quad = 0.0;
        for i in 0..self.n() {
            for j in 0..self.n() {
                quad += alpha[i] * alpha[j] * q[i][j];
            }
        }
        alpha.iter().sum::<f64>() - 0.5 * quad
    }

    /// Euclidean projection onto the feasible set, by bisection on the multiplier
    /// of the equality constraint.
    fn project(&self, v: &[f64]) -> Vec<f64> {
        let at = |nu: f64| -> Vec<f64> {
            v.iter().zip(&self.y).map(|(&vi, &yi)| (vi - nu * yi).clamp(0.0, self.c)).collect()
        };
        let g = |nu: f64| -> f64 { at(nu).iter().zip(&self.y).map(|(a, y)| a * y).sum() };
        let span = v.iter().map(|a| a.abs()).fold(0.0, f64::max) + self.c + 1.0;
        let (mut lo, mut hi) = (-span, span);
        // g is non-increasing in nu, g(lo) ≥ 0 ≥ g(hi)
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(0.5 * (lo + hi))
    }

    fn grid_start(&self, steps: usize) -> Vec<f64> {
        let n = self.n();
        let h = self.c / steps as f64;
        let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
        let mut idx = vec![0usize; n - 1];
        loop {
            let mut alpha: Vec<f64> = idx.iter().map(|&k| k as f64 * h).collect();
            let partial: f64 = alpha.iter().zip(&self.y).map(|(a, y)| a * y).sum();
            let last = -self.y[n - 1] * partial;
            if (-1e-12..=self.c + 1e-12).contains(&last) {
                alpha.push(last.clamp(0.0, self.c));
                let obj = self.objective(&alpha);
                if obj > best.0 {
                    best = (obj, alpha);
                }
            }
            let mut k = 0;
            while k < idx.len() {
                idx[k] += 1;
                if idx[k] <= steps {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
        best.1
    }

    pub fn solve(&self) -> Solution {
        let n = self.n();
        let q = &self.q;
        let lip = (0..n).map(|i| q[i][i]).sum::<f64>().max(1e-12);
        let grad = |a: &[f64]| -> Vec<f64> {
            (0..n).map(|i| 1.0 - (0..n).map(|j| q[i][j] * a[j]).sum::<f64>()).collect()
        };
        let steps = match n {
            0..=4 => 40,
            5 => 20,
            _ => 12,
        };
        let mut alpha = self.grid_start(steps);
        let mut z = alpha.clone();
        let mut t = 1.0f64;
        for _ in 0..20_000 {
            let g = grad(&z);
            let step: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi + gi / lip).collect();
            let next = self.project(&step);
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let momentum = (t - 1.0) / t_next;
            z = next.iter().zip(&alpha).map(|(a, p)| a + momentum * (a - p)).collect();
            // restart when the objective drops
            if self.objective(&next) < self.objective(&alpha) {
                z = alpha.clone();
                t = 1.0;
                continue;
            }
            let moved = next.iter().zip(&alpha).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            alpha = next;
            t = t_next;
            if moved < 1e-13 {
                break;
            }
        }
        let dim = self.x.first().map_or(0, Vec::len);
        let mut weights = vec![0.0; dim];
        for i in 0..n {
            for (w, xi) in weights.iter_mut().zip(&self.x[i]) {
                *w += alpha[i] * self.y[i] * xi;
            }
        }
        let margin = |i: usize| -> f64 { self.x[i].iter().zip(&weights).map(|(a, b)| a * b).sum() };
        let free: Vec<usize> = (0..n).filter(|&i| alpha[i] > 1e-7 && alpha[i] < self.c - 1e-7).collect();
        let bias = if free.is_empty() {
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for i in 0..n {
                let bound = self.y[i] - margin(i);
                if (self.y[i] > 0.0) == (alpha[i] < self.c - 1e-7) {
                    lo = lo.max(bound);
                } else {
                    hi = hi.min(bound);
                }
            }
            0.5 * (lo + hi)
        } else {
            free.iter().map(|&i| self.y[i] - margin(i)).sum::<f64>() / free.len() as f64
        };
        Solution { objective: self.objective(&alpha), alpha, weights, bias }
    }
}
