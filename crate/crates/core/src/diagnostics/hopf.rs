//! Hopf charge as the Whitehead integral `Q = 1/(16 pi^2) int A . B` where
//! `B` is the dual of the pulled-back area form and `curl A = B`.
//!
//! `A` is found in Coulomb gauge by a Fourier solve on the box made periodic:
//! `A_k = i k x B_k / |k|^2`. The pull-back decays quickly away from the
//! soliton, so the wrap-around is invisible at the tolerances we care about.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{self, DirectorField, LatticeSpec};
use crate::vec3::{self, Vec3};

/// Largest `|phi - vacuum|` on the boundary shell we accept.
pub const BOUNDARY_TOL: f64 = 1e-6;

/// Vector potential of the pulled-back area form in Coulomb gauge.
#[derive(Debug, Clone)]
pub struct HopfPotential {
    spec: LatticeSpec,
    /// `A` at every site.
    pub a: Vec<Vec3>,
    /// The source `B` it was solved from, mean removed.
    pub b: Vec<Vec3>,
}

impl HopfPotential {
    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    /// `1/(16 pi^2) sum A . B h^3`
    pub fn charge(&self) -> f64 {
        let (a, b) = (&self.a, &self.b);
        let s = lattice::ordered_site_sum(&self.spec, |idx| vec3::dot(a[idx], b[idx]));
        s * self.spec.cell_volume() / (16.0 * PI * PI)
    }

    /// Sup norm of the spectral divergence of `A`.
    pub fn divergence_supnorm(&self) -> f64 {
        let fft = Fft3::new(self.spec.n_points);
        let k = wavenumbers(&self.spec);
        let n = self.spec.n_points;
        let mut div = vec![Complex64::new(0.0, 0.0); self.spec.num_sites()];
        for comp in 0..3 {
            let mut buf: Vec<Complex64> = self.a.iter().map(|v| Complex64::new(v[comp], 0.0)).collect();
            fft.forward(&mut buf);
            for (idx, z) in buf.iter().enumerate() {
                let c = [idx % n, (idx / n) % n, idx / (n * n)];
                div[idx] += Complex64::new(0.0, k[c[comp]]) * z;
            }
        }
        fft.inverse(&mut div);
        div.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Relative L2 residual `|curl A - B| / |B|`, with the curl taken
    /// spectrally like the solve. What remains is the part of `B` that is not
    /// divergence-free on the lattice, i.e. the stencil's failure to be closed.
    pub fn curl_residual(&self) -> f64 {
        let spec = self.spec;
        let n = spec.n_points;
        let fft = Fft3::new(n);
        let k = wavenumbers(&spec);
        let ak: Vec<Vec<Complex64>> = (0..3)
            .map(|comp| {
                let mut buf: Vec<Complex64> = self.a.iter().map(|v| Complex64::new(v[comp], 0.0)).collect();
                fft.forward(&mut buf);
                buf
            })
            .collect();
        let i = Complex64::new(0.0, 1.0);
        let mut curl: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); spec.num_sites()]; 3];
        for idx in 0..spec.num_sites() {
            let kv = [k[idx % n], k[(idx / n) % n], k[idx / (n * n)]];
            let av = [ak[0][idx], ak[1][idx], ak[2][idx]];
            curl[0][idx] = i * (kv[1] * av[2] - kv[2] * av[1]);
            curl[1][idx] = i * (kv[2] * av[0] - kv[0] * av[2]);
            curl[2][idx] = i * (kv[0] * av[1] - kv[1] * av[0]);
        }
        for comp in curl.iter_mut() {
            fft.inverse(comp);
        }
        let (mut num, mut den) = (0.0, 0.0);
        for (idx, b) in self.b.iter().enumerate() {
            for comp in 0..3 {
                num += (curl[comp][idx].re - b[comp]).powi(2);
                den += b[comp] * b[comp];
            }
        }
        (num / den).sqrt()
    }
}

/// Signed angular wavenumbers in FFT order for the periodic box of length `n h`.
fn wavenumbers(spec: &LatticeSpec) -> Vec<f64> {
    let n = spec.n_points;
    let len = n as f64 * spec.h();
    (0..n)
        .map(|m| {
            if 2 * m == n {
                // Nyquist: no consistent sign for a first derivative
                0.0
            } else if 2 * m < n {
                2.0 * PI * m as f64 / len
            } else {
                2.0 * PI * (m as f64 - n as f64) / len
            }
        })
        .collect()
}

/// In-place 3D FFT over a cube stored x-fastest.
struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft3 {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft3 { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    /// Normalised inverse transform.
    fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
        let s = 1.0 / (self.n as f64).powi(3);
        data.iter_mut().for_each(|z| *z *= s);
    }

    fn run(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        // x lines are contiguous
        fft.process(data);
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for (stride, outer) in [(n, n * n), (n * n, 1)] {
            for base in 0..n * n {
                // y lines: base = i + n^2 k; z lines: base = i + n j
                let start = if stride == n { (base % n) + outer * (base / n) } else { base };
                for (m, z) in line.iter_mut().enumerate() {
                    *z = data[start + m * stride];
                }
                fft.process(&mut line);
                for (m, z) in line.iter().enumerate() {
                    data[start + m * stride] = *z;
                }
            }
        }
    }
}

/// Pull-back of the area form from fourth-order centred differences, with
/// the vacuum as ghost value. The forward-difference form used by the energy
/// is too coarse for the charge: the charge is quadratic in `B`, so the
/// stencil error is doubled, and typical solitons on desk-scale grids have
/// `k h ~ 0.3`.
pub fn fourth_order_pullback(phi: &DirectorField) -> Vec<Vec3> {
    let spec = *phi.spec();
    let n = spec.n_points as isize;
    let inv = 1.0 / (12.0 * spec.h());
    let values = phi.values();
    let vacuum = phi.vacuum();
    (0..spec.num_sites())
        .map(|idx| {
            let c = spec.coords(idx);
            let at = |a: usize, off: isize| -> Vec3 {
                let m = c[a] as isize + off;
                if m < 0 || m >= n {
                    vacuum
                } else {
                    values[(idx as isize + off * spec.stride(a) as isize) as usize]
                }
            };
            let mut d = [vec3::ZERO; 3];
            for (a, da) in d.iter_mut().enumerate() {
                let s = vec3::add(vec3::scale(vec3::sub(at(a, 1), at(a, -1)), 8.0), vec3::sub(at(a, -2), at(a, 2)));
                *da = vec3::scale(s, inv);
            }
            lattice::pullback_at(values[idx], &d)
        })
        .collect()
}

/// Solves `curl A = B`, `div A = 0` for `B` the dual of the pulled-back area form.
pub fn hopf_potential(phi: &DirectorField) -> Result<HopfPotential> {
    let spec = *phi.spec();
    if !phi.boundary_is_vacuum(BOUNDARY_TOL) {
        return Err(Error::Precondition("director differs from the vacuum on the boundary shell".into()));
    }
    let mut b = fourth_order_pullback(phi);
    let count = b.len() as f64;
    let mean = b.iter().fold(vec3::ZERO, |acc, &v| vec3::add(acc, v));
    let mean = vec3::scale(mean, 1.0 / count);
    b.iter_mut().for_each(|v| *v = vec3::sub(*v, mean));

    let n = spec.n_points;
    let fft = Fft3::new(n);
    let k = wavenumbers(&spec);
    let mut bk: Vec<Vec<Complex64>> = (0..3)
        .map(|comp| {
            let mut buf: Vec<Complex64> = b.iter().map(|v| Complex64::new(v[comp], 0.0)).collect();
            fft.forward(&mut buf);
            buf
        })
        .collect();

    let i = Complex64::new(0.0, 1.0);
    for idx in 0..spec.num_sites() {
        let kv = [k[idx % n], k[(idx / n) % n], k[idx / (n * n)]];
        let k2 = vec3::norm_sq(kv);
        if k2 == 0.0 {
            for comp in bk.iter_mut() {
                comp[idx] = Complex64::new(0.0, 0.0);
            }
            continue;
        }
        let bv = [bk[0][idx], bk[1][idx], bk[2][idx]];
        // i k x B / |k|^2
        let ax = i * (kv[1] * bv[2] - kv[2] * bv[1]) / k2;
        let ay = i * (kv[2] * bv[0] - kv[0] * bv[2]) / k2;
        let az = i * (kv[0] * bv[1] - kv[1] * bv[0]) / k2;
        bk[0][idx] = ax;
        bk[1][idx] = ay;
        bk[2][idx] = az;
    }
    for comp in bk.iter_mut() {
        fft.inverse(comp);
    }
    let a = (0..spec.num_sites()).map(|idx| [bk[0][idx].re, bk[1][idx].re, bk[2][idx].re]).collect();
    Ok(HopfPotential { spec, a, b })
}

/// Real-valued Hopf charge; near an integer for smooth, well-resolved fields.
pub fn hopf_charge(phi: &DirectorField) -> Result<f64> {
    if phi.values().iter().all(|&v| v == phi.vacuum()) {
        return Ok(0.0);
    }
    Ok(hopf_potential(phi)?.charge())
}
