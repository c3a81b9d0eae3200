//! Irregular Terrain Model, area mode, median reference attenuation.
//!
//! The diffraction, line-of-sight and scatter sub-models follow the public
//! ITM algorithm. Line-of-sight coefficients use the two-point form with
//! `K2 = 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{free_space_loss_db, PathLossModel};
use crate::error::{Error, Result};

pub const ITM_MIN_DISTANCE_M: f64 = 1e3;
pub const ITM_MAX_DISTANCE_M: f64 = 2e6;

const DEFAULT_GAMMA_E: f64 = 1.0 / 8.493e6;
/// Surface refractivity, N-units (continental temperate).
const N_S: f64 = 301.0;
/// Average ground: relative permittivity and conductivity (S/m).
const GROUND_EPS: f64 = 15.0;
const GROUND_SIGMA: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Polarization {
    #[default]
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItmParams {
    pub f_mhz: f64,
    pub h_g1_m: f64,
    pub h_g2_m: f64,
    pub delta_h_m: f64,
    pub polarization: Polarization,
    /// Effective earth curvature, 1/m.
    pub gamma_e: f64,
}

impl ItmParams {
    pub fn new(f_mhz: f64, h_g1_m: f64, h_g2_m: f64, delta_h_m: f64) -> Self {
        ItmParams {
            f_mhz,
            h_g1_m,
            h_g2_m,
            delta_h_m,
            polarization: Polarization::Horizontal,
            gamma_e: DEFAULT_GAMMA_E,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(20.0..=20000.0).contains(&self.f_mhz) {
            return Err(Error::Domain(format!("frequency {} MHz not in [20, 20000]", self.f_mhz)));
        }
        for h in [self.h_g1_m, self.h_g2_m] {
            if !(0.5..=3000.0).contains(&h) {
                return Err(Error::Domain(format!("antenna height {h} m not in [0.5, 3000]")));
            }
        }
        if !(self.delta_h_m >= 0.0) || !self.delta_h_m.is_finite() {
            return Err(Error::Domain(format!("delta h {} m must be >= 0", self.delta_h_m)));
        }
        if !(self.gamma_e > 0.0) || !self.gamma_e.is_finite() {
            return Err(Error::Domain(format!("earth curvature {} must be > 0", self.gamma_e)));
        }
        Ok(())
    }
}

/// Piecewise-linear fit of the reference attenuation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItmCoefficients {
    pub a_el: f64,
    pub k1: f64,
    pub k2: f64,
    pub a_ed: f64,
    pub m_d: f64,
    pub a_es: f64,
    pub m_s: f64,
    /// Smooth-earth line-of-sight distance.
    pub d_ls_m: f64,
    /// Diffraction/scatter break.
    pub d_x_m: f64,
    /// Terrain-shortened horizon distance.
    pub d_l_m: f64,
    pub x_ae_m: f64,
}

impl ItmCoefficients {
    pub const CSV_HEADER: &'static str = "d_ls_m,d_x_m,a_el,k1,a_ed,m_d,a_es,m_s";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.d_ls_m, self.d_x_m, self.a_el, self.k1, self.a_ed, self.m_d, self.a_es, self.m_s
        )
    }

    /// Reference attenuation without the domain check.
    fn eval(&self, d: f64) -> f64 {
        let a = if d < self.d_ls_m {
            self.a_el + self.k1 * d + self.k2 * (d / self.d_ls_m).ln()
        } else if d <= self.d_x_m {
            self.a_ed + self.m_d * d
        } else {
            self.a_es + self.m_s * d
        };
        a.max(0.0)
    }
}

/// Derived per-path quantities shared by the sub-models.
struct Path {
    wn: f64,
    dh: f64,
    gme: f64,
    hg: [f64; 2],
    he: [f64; 2],
    dl: [f64; 2],
    the: [f64; 2],
    zgnd: Complex64,
    dlsa: f64,
    dla: f64,
    tha: f64,
}

impl Path {
    fn new(p: &ItmParams) -> Self {
        let wn = p.f_mhz / 47.7;
        let gme = p.gamma_e;
        let dh = p.delta_h_m;
        let hg = [p.h_g1_m, p.h_g2_m];
        // random siting: effective heights are the structural heights
        let he = hg;
        let mut dl = [0.0; 2];
        let mut the = [0.0; 2];
        let mut dls = [0.0; 2];
        for j in 0..2 {
            let q = (2.0 * he[j] / gme).sqrt();
            dls[j] = q;
            dl[j] = q * (-0.07 * (dh / he[j].max(5.0)).sqrt()).exp();
            the[j] = (0.65 * dh * (q / dl[j] - 1.0) - 2.0 * he[j]) / q;
        }
        let zq = Complex64::new(GROUND_EPS, 376.62 * GROUND_SIGMA / wn);
        let mut zgnd = (zq - 1.0).sqrt();
        if p.polarization == Polarization::Vertical {
            zgnd /= zq;
        }
        let dla = dl[0] + dl[1];
        Path {
            wn,
            dh,
            gme,
            hg,
            he,
            dl,
            the,
            zgnd,
            dlsa: dls[0] + dls[1],
            dla,
            tha: (the[0] + the[1]).max(-dla * gme),
        }
    }
}

fn aknfe(v2: f64) -> f64 {
    if v2 < 5.76 {
        6.02 + 9.11 * v2.sqrt() - 1.27 * v2
    } else {
        12.953 + 4.343 * v2.ln()
    }
}

fn fht(x: f64, pk: f64) -> f64 {
    if x < 200.0 {
        let w = -pk.ln();
        if pk < 1e-5 || x * w.powi(3) > 5495.0 {
            if x > 1.0 {
                17.372 * x.ln() - 117.0
            } else {
                -117.0
            }
        } else {
            2.5e-5 * x * x / pk - 8.686 * w - 15.0
        }
    } else {
        let mut v = 0.05751 * x - 4.343 * x.ln();
        if x < 2000.0 {
            let w = 0.0134 * x * (-0.005 * x).exp();
            v = (1.0 - w) * v + w * (17.372 * x.ln() - 117.0);
        }
        v
    }
}

fn h0f(r: f64, et: f64) -> f64 {
    const A: [f64; 5] = [25.0, 80.0, 177.0, 395.0, 705.0];
    const B: [f64; 5] = [24.0, 45.0, 68.0, 80.0, 105.0];
    let (it, q) = if et <= 1.0 {
        (1usize, 0.0)
    } else if et >= 5.0 {
        (5, 0.0)
    } else {
        let it = et.trunc() as usize;
        (it, et - it as f64)
    };
    let x = (1.0 / r).powi(2);
    let h = 4.343 * ((A[it - 1] * x + B[it - 1]) * x + 1.0).ln();
    if q == 0.0 {
        h
    } else {
        (1.0 - q) * h + q * 4.343 * ((A[it] * x + B[it]) * x + 1.0).ln()
    }
}

fn ahd(td: f64) -> f64 {
    const A: [f64; 3] = [133.4, 104.6, 71.8];
    const B: [f64; 3] = [0.332e-3, 0.212e-3, 0.157e-3];
    const C: [f64; 3] = [-4.343, -1.086, 2.171];
    let i = if td <= 10e3 {
        0
    } else if td <= 70e3 {
        1
    } else {
        2
    };
    A[i] + B[i] * td + C[i] * td.ln()
}

/// Diffraction attenuation: knife-edge and rounded-earth blend.
struct Diffraction {
    wd1: f64,
    xd1: f64,
    afo: f64,
    qk: f64,
    aht: f64,
    xht: f64,
}

impl Diffraction {
    fn new(p: &Path) -> Self {
        let q = p.hg[0] * p.hg[1];
        let qk = p.he[0] * p.he[1] - q;
        let wd1 = (1.0 + qk / q).sqrt();
        let xd1 = p.dla + p.tha / p.gme;
        let mut q = (1.0 - 0.8 * (-p.dlsa / 50e3).exp()) * p.dh;
        q *= 0.78 * (-(q / 16.0).powf(0.25)).exp();
        let afo = (2.171 * (1.0 + 4.77e-4 * p.hg[0] * p.hg[1] * p.wn * q).ln()).min(15.0);
        let qk = 1.0 / p.zgnd.norm();
        let mut aht = 20.0;
        let mut xht = 0.0;
        for j in 0..2 {
            let a = 0.5 * p.dl[j].powi(2) / p.he[j];
            let wa = (a * p.wn).cbrt();
            let pk = qk / wa;
            let q = (1.607 - pk) * 151.0 * wa * p.dl[j] / a;
            xht += q;
            aht += fht(q, pk);
        }
        Diffraction { wd1, xd1, afo, qk, aht, xht }
    }

    fn at(&self, p: &Path, d: f64) -> f64 {
        let th = p.tha + d * p.gme;
        let ds = d - p.dla;
        let q = 0.0795775 * p.wn * ds * th * th;
        let knife = aknfe(q * p.dl[0] / (ds + p.dl[0])) + aknfe(q * p.dl[1] / (ds + p.dl[1]));
        let a = ds / th;
        let wa = (a * p.wn).cbrt();
        let pk = self.qk / wa;
        let q = (1.607 - pk) * 151.0 * wa * th + self.xht;
        let ar = 0.05751 * q - 4.343 * q.ln() - self.aht;
        let q = (self.wd1 + self.xd1 / d) * ((1.0 - 0.8 * (-d / 50e3).exp()) * p.dh * p.wn).min(6283.2);
        let wd = 25.1 / (25.1 + q.sqrt());
        ar * wd + (1.0 - wd) * knife + self.afo
    }
}

/// Line-of-sight attenuation: blend of extended diffraction and two-ray.
fn alos(p: &Path, aed: f64, emd: f64, d: f64) -> f64 {
    let wls = 0.021 / (0.021 + p.wn * p.dh / p.dlsa.max(10e3));
    let q = (1.0 - 0.8 * (-d / 50e3).exp()) * p.dh;
    let s = 0.78 * q * (-(q / 16.0).powf(0.25)).exp();
    let q = p.he[0] + p.he[1];
    let sps = q / (d * d + q * q).sqrt();
    let mut r = (sps - p.zgnd) / (sps + p.zgnd) * (-(p.wn * s * sps).min(10.0)).exp();
    let q = r.norm_sqr();
    if q < 0.25 || q < sps {
        r *= (sps / q).sqrt();
    }
    let ad = emd * d + aed;
    let mut q = p.wn * p.he[0] * p.he[1] * 2.0 / d;
    // rounded constants as in the reference implementation
    #[allow(clippy::approx_constant)]
    if q > 1.57 {
        q = 3.14 - 2.4649 / q;
    }
    let two_ray = -4.343 * (Complex64::new(q.cos(), -q.sin()) + r).norm_sqr().ln();
    (two_ray - ad) * wls + ad
}

/// Troposcatter attenuation. Carries the previous frequency-gain term so
/// that successive evaluations stay on one branch.
struct Scatter {
    ad: f64,
    rr: f64,
    etq: f64,
    h0s: f64,
}

impl Scatter {
    fn new(p: &Path) -> Self {
        let mut ad = p.dl[0] - p.dl[1];
        let mut rr = p.he[1] / p.he[0];
        if ad < 0.0 {
            ad = -ad;
            rr = 1.0 / rr;
        }
        Scatter {
            ad,
            rr,
            etq: (5.67e-6 * N_S - 2.32e-3) * N_S + 0.031,
            h0s: -15.0,
        }
    }

    fn at(&mut self, p: &Path, d: f64) -> f64 {
        let h0 = if self.h0s > 15.0 {
            self.h0s
        } else {
            let th = p.the[0] + p.the[1] + d * p.gme;
            let r2 = 2.0 * p.wn * th;
            let r1 = r2 * p.he[0];
            let r2 = r2 * p.he[1];
            if r1 < 0.2 && r2 < 0.2 {
                return 1001.0;
            }
            let ss = (d - self.ad) / (d + self.ad);
            let q = (self.rr / ss).clamp(0.1, 10.0);
            let ss = ss.max(0.1);
            let z0 = (d - self.ad) * (d + self.ad) * th * 0.25 / d;
            let temp = (z0 / 8e3).min(1.7).powi(6);
            let et = (self.etq * (-temp).exp() + 1.0) * z0 / 1.7556e3;
            let ett = et.max(1.0);
            let mut h0 = (h0f(r1, ett) + h0f(r2, ett)) * 0.5;
            h0 += h0.min((1.38 - ett.ln()) * ss.ln() * q.ln() * 0.49);
            h0 = h0.max(0.0);
            // rounded constants as in the reference implementation
            #[allow(clippy::approx_constant)]
            if et < 1.0 {
                let t = ((1.0 + 1.4142 / r1) * (1.0 + 1.4142 / r2)).powi(2);
                h0 = et * h0 + (1.0 - et) * 4.343 * (t * (r1 + r2) / (r1 + r2 + 2.8284)).ln();
            }
            if h0 > 15.0 && self.h0s >= 0.0 {
                self.h0s
            } else {
                h0
            }
        };
        self.h0s = h0;
        let th = p.tha + d * p.gme;
        ahd(th * d) + 4.343 * (47.7 * p.wn * th.powi(4)).ln() - 0.1 * (N_S - 301.0) * (-th * d / 40e3).exp() + h0
    }
}

pub fn itm_coefficients(params: &ItmParams) -> Result<ItmCoefficients> {
    params.validate()?;
    let p = Path::new(params);

    let diff = Diffraction::new(&p);
    let xae = (p.wn * p.gme * p.gme).powf(-1.0 / 3.0);
    let d3 = p.dlsa.max(1.3787 * xae + p.dla);
    let d4 = d3 + 2.7574 * xae;
    let a3 = diff.at(&p, d3);
    let a4 = diff.at(&p, d4);
    let m_d = (a4 - a3) / (d4 - d3);
    let a_ed = a3 - m_d * d3;

    // line of sight, two-point fit ending on the diffraction line at d_Ls
    let d2 = p.dlsa;
    let a2 = a_ed + m_d * d2;
    let d_fit = if a_ed >= 0.0 {
        (1.908 * p.wn * p.he[0] * p.he[1]).min(0.5 * p.dla)
    } else {
        (-a_ed / m_d).max(0.25 * p.dla)
    };
    let mut k1 = if d_fit > 0.0 && d_fit < d2 {
        (a2 - alos(&p, a_ed, m_d, d_fit)) / (d2 - d_fit)
    } else {
        f64::NAN
    };
    if !(k1 > 0.0) || !k1.is_finite() {
        k1 = m_d;
    }
    let a_el = a2 - k1 * d2;

    // scatter, joined to the diffraction line at d_x
    let mut scat = Scatter::new(&p);
    let d5 = p.dla + 200e3;
    let d6 = d5 + 200e3;
    let a6 = scat.at(&p, d6);
    let a5 = scat.at(&p, d5);
    let (m_s, a_es, d_x) = if a5 < 1000.0 {
        let ems = (a6 - a5) / 200e3;
        let dx = p
            .dlsa
            .max(p.dla + 0.3 * xae * (47.7 * p.wn).ln())
            .max((a5 - a_ed - ems * d5) / (m_d - ems));
        (ems, (m_d - ems) * dx + a_ed, dx)
    } else {
        (m_d, a_ed, 10e6)
    };

    Ok(ItmCoefficients {
        a_el,
        k1,
        k2: 0.0,
        a_ed,
        m_d,
        a_es,
        m_s,
        d_ls_m: p.dlsa,
        d_x_m: d_x,
        d_l_m: p.dla,
        x_ae_m: xae,
    })
}

fn check_distance(d_m: f64) -> Result<()> {
    if (ITM_MIN_DISTANCE_M..=ITM_MAX_DISTANCE_M).contains(&d_m) {
        Ok(())
    } else {
        Err(Error::Domain(format!("distance {d_m} m not in [1 km, 2000 km]")))
    }
}

/// Reference attenuation relative to free space, clamped at 0 dB.
pub fn itm_aref(c: &ItmCoefficients, d_m: f64) -> Result<f64> {
    check_distance(d_m)?;
    Ok(c.eval(d_m))
}

pub fn total_loss(c: &ItmCoefficients, p: &ItmParams, d_m: f64) -> Result<f64> {
    Ok(itm_aref(c, d_m)? + free_space_loss_db(p.f_mhz, d_m))
}

/// Total ITM loss as a [`PathLossModel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItmModel {
    pub params: ItmParams,
    pub coefficients: ItmCoefficients,
}

impl ItmModel {
    pub fn new(params: ItmParams) -> Result<Self> {
        Ok(ItmModel {
            params,
            coefficients: itm_coefficients(&params)?,
        })
    }
}

impl PathLossModel for ItmModel {
    fn loss_db(&self, d_m: f64) -> f64 {
        let d = d_m.clamp(ITM_MIN_DISTANCE_M, ITM_MAX_DISTANCE_M);
        self.coefficients.eval(d) + free_space_loss_db(self.params.f_mhz, d)
    }

    fn domain_m(&self) -> (f64, f64) {
        (ITM_MIN_DISTANCE_M, ITM_MAX_DISTANCE_M)
    }
}
