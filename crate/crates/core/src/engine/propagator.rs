//! Dense state-vector propagation with Chebyshev expansions of `exp(-i H dt)`.
//!
//! Basis index bit `i` set means spin `i` is down (`-1`). For coupled
//! system+environment spaces the system occupies the low bits.

use num_complex::Complex64;

use crate::schedule::Schedule;

pub(crate) type C64 = Complex64;

/// Truncation threshold for Chebyshev coefficients.
const CHEB_CUTOFF: f64 = 1e-18;

/// Real symmetric operator acting on complex state vectors.
pub(crate) trait Operator {
    fn apply(&self, x: &[C64], y: &mut [C64]);
    /// Interval guaranteed to contain the spectrum.
    fn spectral_bounds(&self) -> (f64, f64);
}

/// `J_0(x) .. J_kmax(x)` by Miller's backward recurrence with `J_0 + 2 sum J_2k = 1`.
pub(crate) fn bessel_j_sequence(x: f64, kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let top = kmax.max(ax.ceil() as usize);
    let mut start = top + 20 + (40.0 * top as f64).sqrt() as usize;
    start += start % 2;
    let mut next = 0.0f64; // J_(k+1)
    let mut cur = 1e-300f64; // J_k
    let mut norm = 0.0f64;
    for k in (1..=start).rev() {
        if k <= kmax {
            out[k] = cur;
        }
        if k % 2 == 0 {
            norm += 2.0 * cur;
        }
        let prev = 2.0 * k as f64 / ax * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            out.iter_mut().for_each(|v| *v *= 1e-250);
        }
    }
    out[0] = cur;
    norm += cur;
    out.iter_mut().for_each(|v| *v /= norm);
    if x < 0.0 {
        for (k, v) in out.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// Scratch buffers reused across Chebyshev steps.
pub(crate) struct Workspace {
    prev: Vec<C64>,
    cur: Vec<C64>,
    next: Vec<C64>,
    acc: Vec<C64>,
}

impl Workspace {
    pub(crate) fn new(dim: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); dim];
        Workspace {
            prev: z.clone(),
            cur: z.clone(),
            next: z.clone(),
            acc: z,
        }
    }
}

/// Replaces `psi` by `exp(-i H dt) psi`.
pub(crate) fn chebyshev_step<O: Operator>(op: &O, dt: f64, psi: &mut [C64], ws: &mut Workspace) {
    let (lo, hi) = op.spectral_bounds();
    let half = 0.5 * (hi - lo);
    let centre = 0.5 * (hi + lo);
    let phase = C64::from_polar(1.0, -centre * dt);
    let x = half * dt;
    if x.abs() < 1e-300 {
        psi.iter_mut().for_each(|a| *a *= phase);
        return;
    }
    let kmax = (x.abs() + 30.0 + 10.0 * x.abs().cbrt()).ceil() as usize;
    let bessel = bessel_j_sequence(x, kmax);
    let last = bessel
        .iter()
        .rposition(|b| b.abs() > CHEB_CUTOFF)
        .unwrap_or(0)
        .max(1);

    // scaled operator H' = (H - centre) / half, T_0 = psi, T_1 = H' psi
    let scaled = |x: &[C64], y: &mut [C64]| {
        op.apply(x, y);
        for (yk, xk) in y.iter_mut().zip(x) {
            *yk = (*yk - xk * centre) / half;
        }
    };
    let Workspace {
        prev,
        cur,
        next,
        acc,
    } = ws;
    prev.copy_from_slice(psi);
    scaled(prev, cur);
    // (-i)^k cycles through 1, -i, -1, i
    let unit = [
        C64::new(1.0, 0.0),
        C64::new(0.0, -1.0),
        C64::new(-1.0, 0.0),
        C64::new(0.0, 1.0),
    ];
    for (a, (p, c)) in acc.iter_mut().zip(prev.iter().zip(cur.iter())) {
        *a = p * bessel[0] + c * (unit[1] * 2.0 * bessel[1]);
    }
    for (k, &bk) in bessel.iter().enumerate().take(last + 1).skip(2) {
        scaled(cur, next);
        let coef = unit[k % 4] * (2.0 * bk);
        for ((n, p), a) in next.iter_mut().zip(prev.iter()).zip(acc.iter_mut()) {
            *n = *n * 2.0 - p;
            *a += *n * coef;
        }
        std::mem::swap(prev, cur);
        std::mem::swap(cur, next);
    }
    for (p, a) in psi.iter_mut().zip(acc.iter()) {
        *p = a * phase;
    }
}

/// `H(s) = (1-s) sum_drive X + s * problem + fixed + coupling * sum_pairs XX`.
pub(crate) struct AnnealOperator {
    problem: Vec<f64>,
    fixed: Vec<f64>,
    drive_masks: Vec<usize>,
    pair_masks: Vec<usize>,
    coupling: f64,
    s: f64,
    diag: Vec<f64>,
}

impl AnnealOperator {
    pub(crate) fn new(
        problem: Vec<f64>,
        fixed: Vec<f64>,
        drive_masks: Vec<usize>,
        pair_masks: Vec<usize>,
        coupling: f64,
    ) -> Self {
        let diag = fixed.iter().zip(&problem).map(|(f, p)| f + p).collect();
        AnnealOperator {
            problem,
            fixed,
            drive_masks,
            pair_masks,
            coupling,
            s: 1.0,
            diag,
        }
    }

    pub(crate) fn set_s(&mut self, s: f64) {
        self.s = s;
        for ((d, p), f) in self.diag.iter_mut().zip(&self.problem).zip(&self.fixed) {
            *d = s * p + f;
        }
    }

    /// Evolves `psi` across `schedule` with `steps` slices, each using the
    /// exact propagator of `H` frozen at the slice midpoint. Time in the
    /// schedule is multiplied by `time_scale` to get dimensionless time.
    pub(crate) fn evolve(
        &mut self,
        schedule: &Schedule,
        steps: usize,
        time_scale: f64,
        psi: &mut [C64],
        ws: &mut Workspace,
    ) {
        let tau = schedule.tau();
        let dt_us = tau / steps as f64;
        for k in 0..steps {
            let s = schedule.at((k as f64 + 0.5) * dt_us);
            self.set_s(s);
            chebyshev_step(self, dt_us * time_scale, psi, ws);
        }
    }
}

impl Operator for AnnealOperator {
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let drive = 1.0 - self.s;
        for (k, yk) in y.iter_mut().enumerate() {
            let mut acc = x[k] * self.diag[k];
            if drive != 0.0 {
                let mut flips = C64::new(0.0, 0.0);
                for &m in &self.drive_masks {
                    flips += x[k ^ m];
                }
                acc += flips * drive;
            }
            if self.coupling != 0.0 {
                let mut flips = C64::new(0.0, 0.0);
                for &m in &self.pair_masks {
                    flips += x[k ^ m];
                }
                acc += flips * self.coupling;
            }
            *yk = acc;
        }
    }

    fn spectral_bounds(&self) -> (f64, f64) {
        let (lo, hi) = self
            .diag
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &d| {
                (l.min(d), h.max(d))
            });
        let off = (1.0 - self.s).abs() * self.drive_masks.len() as f64
            + self.coupling.abs() * self.pair_masks.len() as f64;
        (lo - off, hi + off)
    }
}

/// Sparse real symmetric generator given by weighted edges between basis states.
pub(crate) struct EdgeOperator {
    adjacency: Vec<Vec<usize>>,
}

impl EdgeOperator {
    pub(crate) fn new(dim: usize, edges: &[(usize, usize)]) -> Self {
        let mut adjacency = vec![Vec::new(); dim];
        for &(a, b) in edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        EdgeOperator { adjacency }
    }
}

impl Operator for EdgeOperator {
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        for (yk, nbrs) in y.iter_mut().zip(&self.adjacency) {
            *yk = nbrs.iter().map(|&j| x[j]).sum();
        }
    }

    fn spectral_bounds(&self) -> (f64, f64) {
        let deg = self.adjacency.iter().map(Vec::len).max().unwrap_or(0) as f64;
        (-deg.max(1.0), deg.max(1.0))
    }
}

pub(crate) fn probabilities(psi: &[C64]) -> Vec<f64> {
    psi.iter().map(|a| a.norm_sqr()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bessel_reference_values() {
        let j = bessel_j_sequence(1.0, 3);
        assert_abs_diff_eq!(j[0], 0.765_197_686_557_966_6, epsilon = 1e-15);
        assert_abs_diff_eq!(j[1], 0.440_050_585_744_933_5, epsilon = 1e-15);
        let j = bessel_j_sequence(10.0, 5);
        assert_abs_diff_eq!(j[0], -0.245_935_764_451_348_3, epsilon = 1e-14);
        assert_abs_diff_eq!(j[5], -0.234_061_528_186_793_6, epsilon = 1e-14);
        let tiny = bessel_j_sequence(1e-6, 4);
        assert_abs_diff_eq!(tiny[1], 5e-7, epsilon = 1e-18);
        let neg = bessel_j_sequence(-1.0, 1);
        assert_abs_diff_eq!(neg[1], -0.440_050_585_744_933_5, epsilon = 1e-15);
    }

    #[test]
    fn two_level_rotation_matches_closed_form() {
        // H = X on one spin: exp(-i X t)|up> = cos t |up> - i sin t |down>
        let mut op = AnnealOperator::new(vec![0.0; 2], vec![0.0; 2], vec![1], vec![], 0.0);
        op.set_s(0.0);
        let mut ws = Workspace::new(2);
        let mut psi = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let t = 2.3;
        chebyshev_step(&op, t, &mut psi, &mut ws);
        assert_abs_diff_eq!(psi[0].re, t.cos(), epsilon = 1e-14);
        assert_abs_diff_eq!(psi[0].im, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(psi[1].im, -t.sin(), epsilon = 1e-14);
    }

    #[test]
    fn diagonal_phase_is_exact() {
        let mut op = AnnealOperator::new(vec![1.0, -1.0], vec![0.0; 2], vec![1], vec![], 0.0);
        op.set_s(1.0);
        let mut ws = Workspace::new(2);
        let mut psi = vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        chebyshev_step(&op, 0.7, &mut psi, &mut ws);
        let expect0 = C64::from_polar(0.6, -0.7);
        let expect1 = C64::new(0.0, 0.8) * C64::from_polar(1.0, 0.7);
        assert_abs_diff_eq!((psi[0] - expect0).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((psi[1] - expect1).norm(), 0.0, epsilon = 1e-14);
    }
}
