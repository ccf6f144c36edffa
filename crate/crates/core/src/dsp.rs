//! Butterworth bandpass design and zero-phase filtering.
//!
//! The design path is the classic one: analog lowpass prototype poles,
//! lowpass-to-bandpass transform with pre-warped edges, bilinear transform,
//! then grouping into second-order sections (biquads). Transfer-function
//! polynomials of order 2N with poles crowded near z = 1 lose precision,
//! so everything stays in pole form until the biquads are emitted.
//!
//! Zero-phase filtering runs the cascade forward and backward over an
//! odd-extension-padded signal, with each section started in its constant-
//! input steady state so low-frequency edges do not ring.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// One second-order section, direct form II transposed.
#[derive(Debug, Clone, Copy)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2], // a0 normalized to 1
}

impl Biquad {
    /// Complex frequency response at normalized angular frequency `w`.
    fn response(&self, w: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -w);
        let z2 = Complex64::from_polar(1.0, -2.0 * w);
        let num = Complex64::new(self.b[0], 0.0) + z1 * self.b[1] + z2 * self.b[2];
        let den = Complex64::new(1.0, 0.0) + z1 * self.a[0] + z2 * self.a[1];
        num / den
    }

    /// Steady-state filter state for a constant input of 1.0.
    fn step_state(&self) -> [f64; 2] {
        let h1 = (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1]);
        [
            self.b[1] + self.b[2] - (self.a[0] + self.a[1]) * h1,
            self.b[2] - self.a[1] * h1,
        ]
    }
}

/// A bandpass filter as a cascade of second-order sections.
#[derive(Debug, Clone)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
}

/// Design a Butterworth bandpass of prototype order `order` (the band
/// transform doubles the pole count, as in the usual convention) for edges
/// `low_hz..high_hz` at sampling rate `rate_hz`.
pub fn butter_bandpass(order: usize, low_hz: f64, high_hz: f64, rate_hz: f64) -> Result<SosFilter> {
    if order == 0 {
        return Err(Error::InvalidConfig("filter order must be >= 1".into()));
    }
    if !(low_hz > 0.0 && low_hz < high_hz) {
        return Err(Error::InvalidConfig(format!(
            "band edges must satisfy 0 < low < high, got {low_hz}..{high_hz}"
        )));
    }
    if high_hz >= rate_hz / 2.0 {
        return Err(Error::UnstableDesign(format!(
            "high edge {high_hz} Hz at or above Nyquist {} Hz",
            rate_hz / 2.0
        )));
    }

    // Pre-warped analog edges and band parameters.
    let fs2 = 2.0 * rate_hz;
    let w1 = fs2 * (std::f64::consts::PI * low_hz / rate_hz).tan();
    let w2 = fs2 * (std::f64::consts::PI * high_hz / rate_hz).tan();
    let bw = w2 - w1;
    let w0_sq = w1 * w2;

    // Analog lowpass prototype poles on the unit circle, left half plane.
    let n = order as i32;
    let mut analog: Vec<Complex64> = Vec::with_capacity(2 * order);
    for k in 1..=n {
        let theta = std::f64::consts::PI * (2 * k + n - 1) as f64 / (2 * n) as f64;
        let p = Complex64::from_polar(1.0, theta);
        // Lowpass -> bandpass: each prototype pole splits in two.
        let pb = p * (bw / 2.0);
        let disc = (pb * pb - Complex64::new(w0_sq, 0.0)).sqrt();
        analog.push(pb + disc);
        analog.push(pb - disc);
    }

    // Bilinear transform of the poles; zeros land at z = +1 (N) and z = -1 (N).
    let mut digital: Vec<Complex64> = Vec::with_capacity(analog.len());
    for p in analog {
        let z = (Complex64::new(fs2, 0.0) + p) / (Complex64::new(fs2, 0.0) - p);
        if !z.re.is_finite() || !z.im.is_finite() || z.norm() >= 1.0 - 1e-9 {
            return Err(Error::UnstableDesign(format!(
                "pole at |z| = {:.9}; band edges too close to Nyquist or DC",
                z.norm()
            )));
        }
        digital.push(z);
    }

    // Group conjugate pairs (and stray real poles two at a time) into biquads,
    // each with numerator (z^2 - 1) carrying one zero at +1 and one at -1.
    let mut pairs: Vec<[f64; 2]> = Vec::new();
    let mut reals: Vec<f64> = Vec::new();
    for p in &digital {
        if p.im.abs() > 1e-12 {
            if p.im > 0.0 {
                pairs.push([-2.0 * p.re, p.norm_sqr()]);
            }
        } else {
            reals.push(p.re);
        }
    }
    reals.sort_by(|x, y| y.abs().total_cmp(&x.abs()));
    for two in reals.chunks(2) {
        match two {
            [r1, r2] => pairs.push([-(r1 + r2), r1 * r2]),
            [r1] => pairs.push([-r1, 0.0]),
            _ => unreachable!(),
        }
    }

    // Normalize each section to unit gain at the band center so the cascade
    // peaks at 1 and no single section carries the whole scale.
    let w0_digital = 2.0 * ((w0_sq.sqrt()) / fs2).atan();
    let mut sections = Vec::with_capacity(pairs.len());
    for a in pairs {
        let raw = Biquad {
            b: [1.0, 0.0, -1.0],
            a,
        };
        let g = raw.response(w0_digital).norm();
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::UnstableDesign(
                "section gain vanished at band center".into(),
            ));
        }
        sections.push(Biquad {
            b: [1.0 / g, 0.0, -1.0 / g],
            a,
        });
    }
    Ok(SosFilter { sections })
}

impl SosFilter {
    /// Amplitude response at `freq_hz` for a single (one-way) pass.
    pub fn gain_at(&self, freq_hz: f64, rate_hz: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * freq_hz / rate_hz;
        self.sections
            .iter()
            .map(|s| s.response(w).norm())
            .product()
    }

    fn run_cascade(&self, x: &mut [f64]) {
        for s in &self.sections {
            let zi = s.step_state();
            let x0 = x[0];
            let (mut z1, mut z2) = (zi[0] * x0, zi[1] * x0);
            for v in x.iter_mut() {
                let xi = *v;
                let y = s.b[0] * xi + z1;
                z1 = s.b[1] * xi - s.a[0] * y + z2;
                z2 = s.b[2] * xi - s.a[1] * y;
                *v = y;
            }
        }
    }

    /// Forward-backward (zero phase) filtering with odd-extension padding.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n < 2 {
            return x.to_vec();
        }
        let pad = (3 * (2 * self.sections.len() + 1)).min(n - 1);

        let mut ext = Vec::with_capacity(n + 2 * pad);
        for i in (1..=pad).rev() {
            ext.push(2.0 * x[0] - x[i]);
        }
        ext.extend_from_slice(x);
        for i in 1..=pad {
            ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
        }

        self.run_cascade(&mut ext);
        ext.reverse();
        self.run_cascade(&mut ext);
        ext.reverse();

        ext[pad..pad + n].to_vec()
    }
}
