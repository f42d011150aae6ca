//! Zero-padded FFT correlation with translation-invariant kernels on 1-d and
//! 2-d grids: out_i = Σ_j K(j − i) u_j over all grid indices j.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::par;

/// Below this many samples the correlation is summed directly.
const DIRECT_LIMIT: usize = 2048;

pub struct Correlator {
    extents: Vec<usize>,
    padded: Vec<usize>,
    /// kernel on offsets, row-major over (2N₀−1)×(2N₁−1), used by the direct path
    offsets: Option<Vec<f64>>,
    /// spectrum of the flipped kernel (transposed layout in 2-d)
    spectrum: Vec<Complex64>,
    plans: Vec<(Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>,
}

impl Correlator {
    /// `kernel(o₀, o₁)` is evaluated for every offset the grid can realise
    /// (o₁ = 0 in 1-d).
    pub fn new<K: Fn(isize, isize) -> f64 + Sync + Send>(extents: &[usize], kernel: K) -> Self {
        let n = extents.len();
        let total: usize = extents.iter().product();
        let span: Vec<usize> = extents.iter().map(|e| 2 * e - 1).collect();
        if total <= DIRECT_LIMIT {
            let m1 = if n == 2 { span[1] } else { 1 };
            let offsets = par::map_range(span[0] * m1, |k| {
                let (a, b) = (k / m1, k % m1);
                let o0 = a as isize - (extents[0] as isize - 1);
                let o1 = if n == 2 { b as isize - (extents[1] as isize - 1) } else { 0 };
                kernel(o0, o1)
            });
            return Correlator { extents: extents.to_vec(), padded: vec![], offsets: Some(offsets), spectrum: vec![], plans: vec![] };
        }
        let padded: Vec<usize> = span.iter().map(|s| s.next_power_of_two()).collect();
        let mut planner = FftPlanner::new();
        let plans: Vec<_> = padded.iter().map(|&p| (planner.plan_fft_forward(p), planner.plan_fft_inverse(p))).collect();
        let mut c = Correlator { extents: extents.to_vec(), padded, offsets: None, spectrum: vec![], plans };
        // flipped kernel K'(m) = K(−m) at index m mod P
        let p0 = c.padded[0];
        let p1 = if n == 2 { c.padded[1] } else { 1 };
        let e = &c.extents;
        let wrap = |k: usize, p: usize, ext: usize| -> Option<isize> {
            let m = if k < p / 2 + 1 { k as isize } else { k as isize - p as isize };
            (m.unsigned_abs() < ext).then_some(m)
        };
        let buf: Vec<Complex64> = par::map_range(p0 * p1, |k| {
            let (a, b) = (k / p1, k % p1);
            let m0 = wrap(a, p0, e[0]);
            let m1 = if n == 2 { wrap(b, p1, e[1]) } else { Some(0) };
            match (m0, m1) {
                (Some(m0), Some(m1)) => Complex64::new(kernel(-m0, -m1), 0.0),
                _ => Complex64::new(0.0, 0.0),
            }
        });
        c.spectrum = c.forward(buf, p0);
        c
    }

    /// Forward transform; in 2-d the result is stored transposed (P₁ rows of length P₀).
    fn forward(&self, mut buf: Vec<Complex64>, live_rows: usize) -> Vec<Complex64> {
        if self.extents.len() == 1 {
            self.plans[0].0.process(&mut buf);
            return buf;
        }
        let (p0, p1) = (self.padded[0], self.padded[1]);
        let fwd1 = &self.plans[1].0;
        par::for_each_chunk(&mut buf[..live_rows * p1], p1, |_, row| fwd1.process(row));
        let mut t = transpose(&buf, p0, p1);
        let fwd0 = &self.plans[0].0;
        par::for_each_chunk(&mut t, p0, |_, row| fwd0.process(row));
        t
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.extents.len();
        let total: usize = self.extents.iter().product();
        assert_eq!(u.len(), total, "correlator input has the wrong length");
        if let Some(k) = &self.offsets {
            return self.apply_direct(k, u);
        }
        let p0 = self.padded[0];
        let p1 = if n == 2 { self.padded[1] } else { 1 };
        let n1 = if n == 2 { self.extents[1] } else { 1 };
        let mut buf = vec![Complex64::new(0.0, 0.0); p0 * p1];
        for i0 in 0..self.extents[0] {
            for i1 in 0..n1 {
                buf[i0 * p1 + i1] = Complex64::new(u[i0 * n1 + i1], 0.0);
            }
        }
        let mut spec = self.forward(buf, self.extents[0]);
        for (a, b) in spec.iter_mut().zip(&self.spectrum) {
            *a *= b;
        }
        let scale = 1.0 / (p0 * p1) as f64;
        if n == 1 {
            self.plans[0].1.process(&mut spec);
            return spec[..total].iter().map(|c| c.re * scale).collect();
        }
        let inv0 = &self.plans[0].1;
        par::for_each_chunk(&mut spec, p0, |_, row| inv0.process(row));
        let mut back = transpose(&spec, p1, p0);
        let inv1 = &self.plans[1].1;
        par::for_each_chunk(&mut back[..self.extents[0] * p1], p1, |_, row| inv1.process(row));
        let mut out = vec![0.0; total];
        for i0 in 0..self.extents[0] {
            for i1 in 0..n1 {
                out[i0 * n1 + i1] = back[i0 * p1 + i1].re * scale;
            }
        }
        out
    }

    fn apply_direct(&self, k: &[f64], u: &[f64]) -> Vec<f64> {
        let n = self.extents.len();
        let e0 = self.extents[0];
        let e1 = if n == 2 { self.extents[1] } else { 1 };
        let m1 = 2 * e1 - 1;
        par::map_range(e0 * e1, |i| {
            let (i0, i1) = (i / e1, i % e1);
            let mut s = 0.0;
            for j0 in 0..e0 {
                let row = (j0 + e0 - 1 - i0) * m1;
                for j1 in 0..e1 {
                    s += k[row + j1 + e1 - 1 - i1] * u[j0 * e1 + j1];
                }
            }
            s
        })
    }
}

fn transpose(a: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut t = vec![Complex64::new(0.0, 0.0); a.len()];
    par::for_each_chunk(&mut t, rows, |c, out| {
        for r in 0..rows {
            out[r] = a[r * cols + c];
        }
    });
    t
}

const CACHE_CAP: usize = 48;

/// Build-once cache keyed by a caller-supplied description of the kernel.
pub fn cached<F: FnOnce() -> Correlator>(key: String, build: F) -> Arc<Correlator> {
    static CACHE: OnceLock<Mutex<HashMap<String, Arc<Correlator>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(c) = cache.lock().unwrap().get(&key) {
        return c.clone();
    }
    let c = Arc::new(build());
    let mut guard = cache.lock().unwrap();
    if guard.len() >= CACHE_CAP {
        guard.clear();
    }
    guard.insert(key, c.clone());
    c
}
