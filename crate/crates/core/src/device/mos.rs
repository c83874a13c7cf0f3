use crate::device::THERMAL_VOLTAGE;
use crate::error::{Error, Result};

/// Drain-source bias at which `i_off_ref` is specified.
pub const REFERENCE_VDS: f64 = 0.5;

// exp() argument ceiling; far beyond any in-range bias
const MAX_EXPONENT: f64 = 80.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    N,
    P,
}

/// Single-piece subthreshold MOSFET: exponential gate law, drain saturation
/// factor, optional Early effect, and a leakage floor pinned to `i_off_ref`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MosParams {
    pub polarity: Polarity,
    /// Specific current per unit W/L at zero gate drive, A.
    pub i0: f64,
    pub slope_n: f64,
    pub ut: f64,
    pub w_over_l: f64,
    /// Off current at v_gs = 0, v_ds = 0.5 V. Zero disables the floor.
    pub i_off_ref: f64,
    /// Early voltage; `f64::INFINITY` for ideal saturation.
    pub v_early: f64,
}

impl Default for MosParams {
    fn default() -> Self {
        Self {
            polarity: Polarity::N,
            i0: 1e-12,
            slope_n: 1.5,
            ut: THERMAL_VOLTAGE,
            w_over_l: 1.0,
            i_off_ref: 1e-12,
            v_early: f64::INFINITY,
        }
    }
}

impl MosParams {
    pub fn n_type() -> Self {
        Self::default()
    }

    pub fn p_type() -> Self {
        Self {
            polarity: Polarity::P,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.i0 > 0.0
            && self.slope_n >= 1.0
            && self.ut > 0.0
            && self.w_over_l > 0.0
            && self.i_off_ref >= 0.0
            && self.v_early > 0.0
            && self.i0.is_finite()
            && self.w_over_l.is_finite()
            && self.i_off_ref.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "invalid MOSFET parameters {self:?}"
            )))
        }
    }

    fn specific_current(&self) -> f64 {
        self.i0 * self.w_over_l
    }

    fn saturation(&self, vds: f64) -> f64 {
        let early = if self.v_early.is_finite() {
            1.0 + vds / self.v_early
        } else {
            1.0
        };
        -(-vds / self.ut).exp_m1() * early
    }

    /// Extra leakage added on top of the exponential law so that the
    /// zero-gate current at the reference bias equals `i_off_ref`.
    fn floor(&self) -> f64 {
        let law = self.specific_current() * self.saturation(REFERENCE_VDS);
        if self.i_off_ref > law {
            (self.i_off_ref - law) / self.saturation(REFERENCE_VDS)
        } else {
            0.0
        }
    }

    /// Channel current for vds >= 0 in the device's own (n-type) frame.
    fn forward(&self, vgs: f64, vds: f64) -> f64 {
        let gate = (vgs / (self.slope_n * self.ut)).min(MAX_EXPONENT).exp();
        (self.specific_current() * gate + self.floor()) * self.saturation(vds)
    }

    /// Source/drain-symmetric channel current in the n-type frame.
    fn channel(&self, vgs: f64, vds: f64) -> f64 {
        if vds >= 0.0 {
            self.forward(vgs, vds)
        } else {
            // drain acts as source
            -self.forward(vgs - vds, -vds)
        }
    }

    /// Signed drain→source current without input validation.
    pub fn drain_current(&self, v_g: f64, v_s: f64, v_d: f64) -> f64 {
        match self.polarity {
            Polarity::N => self.channel(v_g - v_s, v_d - v_s),
            Polarity::P => -self.channel(v_s - v_g, v_s - v_d),
        }
    }
}

/// Signed drain→source current of a subthreshold MOSFET.
pub fn mos_drain_current(params: &MosParams, v_g: f64, v_s: f64, v_d: f64) -> Result<f64> {
    if !(v_g.is_finite() && v_s.is_finite() && v_d.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "non-finite terminal voltage (g={v_g}, s={v_s}, d={v_d})"
        )));
    }
    Ok(params.drain_current(v_g, v_s, v_d))
}

/// Zero-gate-drive current magnitude at the given drain-source bias
/// (sign-mirrored for p-type).
pub fn mos_off_current(params: &MosParams, v_ds: f64) -> Result<f64> {
    match params.polarity {
        Polarity::N => mos_drain_current(params, 0.0, 0.0, v_ds),
        Polarity::P => mos_drain_current(params, 0.0, 0.0, -v_ds).map(|i| -i),
    }
}
