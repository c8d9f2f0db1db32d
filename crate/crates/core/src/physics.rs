//! Exact AC branch equations for the π-model with an ideal transformer at the
//! `from` end. These functions are the ground truth that every relaxation
//! inequality is checked against.
//!
//! Conventions: `V_k = e_k + j f_k`, `I = Y V`, `S = V conj(I)`, and
//! `theta_km = theta_k - theta_m`.

use num_complex::Complex64;
use thiserror::Error;

use crate::netcase::Branch;

#[derive(Debug, Error, PartialEq)]
pub enum PhysicsError {
    #[error("series impedance is zero")]
    ZeroImpedance,
}

/// Series admittance `1/(r + jx)` as `(g, b)`.
pub fn series_admittance(r: f64, x: f64) -> Result<(f64, f64), PhysicsError> {
    let z2 = r * r + x * x;
    if z2 == 0.0 || !z2.is_finite() {
        return Err(PhysicsError::ZeroImpedance);
    }
    Ok((r / z2, -x / z2))
}

/// Rectangular voltages at both ends of a branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoltagePair {
    pub e_k: f64,
    pub f_k: f64,
    pub e_m: f64,
    pub f_m: f64,
}

impl VoltagePair {
    pub fn new(vk: Complex64, vm: Complex64) -> Self {
        VoltagePair {
            e_k: vk.re,
            f_k: vk.im,
            e_m: vm.re,
            f_m: vm.im,
        }
    }

    pub fn from_polar(vk_mag: f64, theta_k: f64, vm_mag: f64, theta_m: f64) -> Self {
        Self::new(
            Complex64::from_polar(vk_mag, theta_k),
            Complex64::from_polar(vm_mag, theta_m),
        )
    }

    pub fn vk(&self) -> Complex64 {
        Complex64::new(self.e_k, self.f_k)
    }

    pub fn vm(&self) -> Complex64 {
        Complex64::new(self.e_m, self.f_m)
    }

    pub fn vk_mag(&self) -> f64 {
        self.e_k.hypot(self.f_k)
    }

    pub fn vm_mag(&self) -> f64 {
        self.e_m.hypot(self.f_m)
    }

    pub fn theta_k(&self) -> f64 {
        self.f_k.atan2(self.e_k)
    }

    pub fn theta_m(&self) -> f64 {
        self.f_m.atan2(self.e_m)
    }
}

/// Power injected into the branch at each end.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FlowQuad {
    pub p_km: f64,
    pub q_km: f64,
    pub p_mk: f64,
    pub q_mk: f64,
}

impl FlowQuad {
    pub fn max_abs_diff(&self, other: &FlowQuad) -> f64 {
        (self.p_km - other.p_km)
            .abs()
            .max((self.q_km - other.q_km).abs())
            .max((self.p_mk - other.p_mk).abs())
            .max((self.q_mk - other.q_mk).abs())
    }

    pub fn active_loss(&self) -> f64 {
        self.p_km + self.p_mk
    }
}

/// Branch admittance matrix `[[Y11, Y12], [Y21, Y22]]`.
pub fn admittance_matrix(br: &Branch) -> [[Complex64; 2]; 2] {
    let y = Complex64::new(br.g, br.b);
    let ysh_half = Complex64::new(br.g_sh, br.b_sh) / 2.0;
    let tau = br.tau;
    let shift = Complex64::from_polar(1.0, br.sigma);
    [
        [(y + ysh_half) / (tau * tau), -y * shift / tau],
        [-y * shift.conj() / tau, y + ysh_half],
    ]
}

/// Flows via `S = V conj(Y V)` on complex numbers.
pub fn flow_complex(br: &Branch, v: &VoltagePair) -> FlowQuad {
    let y = admittance_matrix(br);
    let (vk, vm) = (v.vk(), v.vm());
    let ikm = y[0][0] * vk + y[0][1] * vm;
    let imk = y[1][0] * vk + y[1][1] * vm;
    let skm = vk * ikm.conj();
    let smk = vm * imk.conj();
    FlowQuad {
        p_km: skm.re,
        q_km: skm.im,
        p_mk: smk.re,
        q_mk: smk.im,
    }
}

/// The two transformer-adjusted coordinate differences seen from `k`:
/// `(e_k/τ - e_m cosσ + f_m sinσ, f_k/τ - f_m cosσ - e_m sinσ)`.
pub fn sending_differences(br: &Branch, v: &VoltagePair) -> (f64, f64) {
    let (s, c) = br.sigma.sin_cos();
    let it = 1.0 / br.tau;
    (
        v.e_k * it - v.e_m * c + v.f_m * s,
        v.f_k * it - v.f_m * c - v.e_m * s,
    )
}

/// The two transformer-adjusted coordinate differences seen from `m`:
/// `(e_m - (e_k cosσ + f_k sinσ)/τ, f_m - (f_k cosσ - e_k sinσ)/τ)`,
/// i.e. `V_m - V_k1` split into real and imaginary parts.
pub fn receiving_differences(br: &Branch, v: &VoltagePair) -> (f64, f64) {
    let (s, c) = br.sigma.sin_cos();
    let it = 1.0 / br.tau;
    (
        v.e_m - it * (v.e_k * c + v.f_k * s),
        v.f_m - it * (v.f_k * c - v.e_k * s),
    )
}

/// Flows from the rectangular current expansion.
pub fn flow_rect(br: &Branch, v: &VoltagePair) -> FlowQuad {
    let (g, b, gsh, bsh, tau) = (br.g, br.b, br.g_sh, br.b_sh, br.tau);
    let (s, c) = br.sigma.sin_cos();
    let VoltagePair { e_k, f_k, e_m, f_m } = *v;

    let (dr, di) = sending_differences(br, v);
    let t2 = tau * tau;
    let re_ikm = (g * dr - b * di) / tau + (gsh * e_k - bsh * f_k) / (2.0 * t2);
    let im_ikm = (b * dr + g * di) / tau + (bsh * e_k + gsh * f_k) / (2.0 * t2);

    let a = e_k * c + f_k * s;
    let d = -e_k * s + f_k * c;
    let re_imk = -g / tau * a + b / tau * d + (g + gsh / 2.0) * e_m - (b + bsh / 2.0) * f_m;
    let im_imk = -g / tau * d - b / tau * a + (b + bsh / 2.0) * e_m + (g + gsh / 2.0) * f_m;

    FlowQuad {
        p_km: e_k * re_ikm + f_k * im_ikm,
        q_km: f_k * re_ikm - e_k * im_ikm,
        p_mk: e_m * re_imk + f_m * im_imk,
        q_mk: f_m * re_imk - e_m * im_imk,
    }
}

/// Flows from voltage magnitudes and the angle difference `theta_km`.
pub fn flow_polar(br: &Branch, vk_mag: f64, vm_mag: f64, theta_km: f64) -> FlowQuad {
    let (g, b, gsh, bsh, tau) = (br.g, br.b, br.g_sh, br.b_sh, br.tau);
    let vk2 = vk_mag * vk_mag;
    let vm2 = vm_mag * vm_mag;
    let cross = vk_mag * vm_mag / tau;
    let t2 = tau * tau;

    let (s1, c1) = (theta_km - br.sigma).sin_cos();
    let (s2, c2) = (-theta_km + br.sigma).sin_cos();

    FlowQuad {
        p_km: vk2 * g / t2 - cross * (g * c1 + b * s1) + gsh / (2.0 * t2) * vk2,
        q_km: -vk2 * b / t2 + cross * (b * c1 - g * s1) - bsh / (2.0 * t2) * vk2,
        p_mk: vm2 * g - cross * (g * c2 + b * s2) + gsh / 2.0 * vm2,
        q_mk: -vm2 * b + cross * (b * c2 - g * s2) - bsh / 2.0 * vm2,
    }
}

/// Active loss `P_km + P_mk` in polar form.
pub fn active_loss_polar(br: &Branch, vk_mag: f64, vm_mag: f64, theta_km: f64) -> f64 {
    let t = br.tau;
    (vk_mag * vk_mag / (t * t) + vm_mag * vm_mag) * br.g
        - 2.0 * br.g * vk_mag / t * vm_mag * (theta_km - br.sigma).cos()
        + br.g_sh / (2.0 * t * t) * vk_mag * vk_mag
        + br.g_sh / 2.0 * vm_mag * vm_mag
}

/// Voltage at the internal node between the ideal transformer and the series
/// impedance: `V_k / (τ e^{jσ})`.
pub fn k1_voltage(br: &Branch, vk: Complex64) -> Complex64 {
    let (s, c) = br.sigma.sin_cos();
    let it = 1.0 / br.tau;
    Complex64::new(
        it * (vk.re * c + vk.im * s),
        it * (vk.im * c - vk.re * s),
    )
}
