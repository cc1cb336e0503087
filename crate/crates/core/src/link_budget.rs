//! Photon budget of the source and loss/rate budget of the network.

use crate::error::{invalid, Result};
use crate::estimation::qfi_closed_form;
use crate::fock::dv_scheme_fi;
use crate::gaussian::CoherenceParams;
use crate::table::Table;
use crate::teleportation::effective_squeezing;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Mean photon number per mode of a magnitude −5 source seen by the reference setup.
const EPSILON_AT_MINUS_5: f64 = 0.4;
const REFERENCE_DIAMETER_M: f64 = 6.0;
const REFERENCE_BANDWIDTH_M: f64 = 0.1e-9;

/// Calibration factor that turns `c·Δλ/λ²` at 800 nm / 0.1 nm into 150 GHz.
pub fn reference_rate_factor() -> f64 {
    1.5e11 / (SPEED_OF_LIGHT * REFERENCE_BANDWIDTH_M / (800e-9f64).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationParams {
    pub wavelength_m: f64,
    pub bandwidth_m: f64,
    pub telescope_diameter_m: f64,
    pub magnitude: f64,
    /// Multiplies `c·Δλ/λ²` in [`temporal_mode_rate`].
    pub rate_factor: f64,
}

impl Default for ObservationParams {
    /// 800 nm, 0.1 nm, 6 m telescopes, magnitude −5, physical mode rate.
    fn default() -> Self {
        Self {
            wavelength_m: 800e-9,
            bandwidth_m: REFERENCE_BANDWIDTH_M,
            telescope_diameter_m: REFERENCE_DIAMETER_M,
            magnitude: -5.0,
            rate_factor: 1.0,
        }
    }
}

impl ObservationParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("wavelength_m", self.wavelength_m),
            ("bandwidth_m", self.bandwidth_m),
            ("telescope_diameter_m", self.telescope_diameter_m),
            ("rate_factor", self.rate_factor),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if !self.magnitude.is_finite() {
            return Err(invalid("magnitude", "must be finite"));
        }
        Ok(())
    }

    pub fn with_magnitude(self, magnitude: f64) -> Self {
        Self { magnitude, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// Source halfway between the telescopes; each arm covers `L/2`.
    Midpoint,
    /// Source at telescope A; the single fibre covers `L`.
    AtTelescopeA,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkParams {
    pub loss_db_per_km: f64,
    pub baseline_km: f64,
    pub topology: Topology,
    /// Entanglement distribution rate up to `reference_km`.
    pub base_rate_hz: f64,
    pub reference_km: f64,
    /// Exponent of the rate decay `(reference/L)^poly_order` beyond `reference_km`.
    pub poly_order: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self {
            loss_db_per_km: 0.2,
            baseline_km: 0.0,
            topology: Topology::Midpoint,
            base_rate_hz: 1.5e11,
            reference_km: 10.0,
            poly_order: 2.0,
        }
    }
}

impl NetworkParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("loss_db_per_km", self.loss_db_per_km),
            ("baseline_km", self.baseline_km),
            ("poly_order", self.poly_order),
            ("reference_km", self.reference_km),
            ("base_rate_hz", self.base_rate_hz),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn with_baseline(self, baseline_km: f64) -> Self {
        Self { baseline_km, ..self }
    }

    /// Repetition rate at the current baseline.
    pub fn repetition_rate(&self) -> f64 {
        if self.baseline_km > self.reference_km {
            self.base_rate_hz * (self.reference_km / self.baseline_km).powf(self.poly_order)
        } else {
            self.base_rate_hz
        }
    }
}

/// `ε = 0.4·10^{−(m+5)/2.5}·(D/6 m)²·(Δλ/0.1 nm)`.
pub fn epsilon_from_magnitude(obs: &ObservationParams) -> Result<f64> {
    obs.validate()?;
    Ok(EPSILON_AT_MINUS_5
        * 10f64.powf(-(obs.magnitude + 5.0) / 2.5)
        * (obs.telescope_diameter_m / REFERENCE_DIAMETER_M).powi(2)
        * (obs.bandwidth_m / REFERENCE_BANDWIDTH_M))
}

/// Temporal modes per second, `rate_factor·c·Δλ/λ²`.
pub fn temporal_mode_rate(obs: &ObservationParams) -> Result<f64> {
    obs.validate()?;
    Ok(obs.rate_factor * SPEED_OF_LIGHT * obs.bandwidth_m / obs.wavelength_m.powi(2))
}

/// Squeezing at which the teleportation noise equals the signal, `y = ε`:
/// returns `(r', dB)` with `r' = ½ ln(2/ε)` and `dB = 10 log₁₀(2/ε)`.
pub fn threshold_squeezing(epsilon: f64) -> Result<(f64, f64)> {
    if !(epsilon > 0.0 && epsilon <= 2.0) {
        return Err(invalid(
            "epsilon",
            format!("threshold needs 0 < epsilon <= 2, got {epsilon}"),
        ));
    }
    let ratio = 2.0 / epsilon;
    Ok((0.5 * ratio.ln(), 10.0 * ratio.log10()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table1Row {
    pub magnitude: f64,
    pub epsilon: f64,
    pub squeezing_db: f64,
    pub r_eff: f64,
}

impl Table1Row {
    /// `(magnitude, ε, dB, r')` at the precision of the published table.
    pub fn display(&self) -> [String; 4] {
        [
            format!("{}", self.magnitude),
            format!("{:.0e}", self.epsilon),
            format!("{:.0}", self.squeezing_db),
            format!("{:.2}", self.r_eff),
        ]
    }
}

pub const TABLE1_MAGNITUDES: [f64; 6] = [-5.0, -2.5, 0.0, 2.5, 5.0, 7.5];

pub fn table1_rows(obs: &ObservationParams) -> Result<Vec<Table1Row>> {
    TABLE1_MAGNITUDES
        .iter()
        .map(|&m| {
            let epsilon = epsilon_from_magnitude(&obs.with_magnitude(m))?;
            let (r_eff, squeezing_db) = threshold_squeezing(epsilon)?;
            Ok(Table1Row {
                magnitude: m,
                epsilon,
                squeezing_db,
                r_eff,
            })
        })
        .collect()
}

pub fn table1_table(rows: &[Table1Row]) -> Table {
    let mut t = Table::new([
        "magnitude",
        "epsilon",
        "squeezing_db",
        "r_eff",
        "squeezing_db_exact",
        "r_eff_exact",
    ]);
    for row in rows {
        let [m, e, db, r] = row.display();
        t.push([m, e, db, r, row.squeezing_db.to_string(), row.r_eff.to_string()]);
    }
    t
}

/// Amplitude transmissivity `T` of the squeezed-light channel at the current baseline.
pub fn transmissivity_from_baseline(net: &NetworkParams) -> Result<f64> {
    net.validate()?;
    let arm_km = match net.topology {
        Topology::Midpoint => 0.5 * net.baseline_km,
        Topology::AtTelescopeA => net.baseline_km,
    };
    Ok(db_to_power(net.loss_db_per_km * arm_km).sqrt())
}

fn db_to_power(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Teleportation with a lossy two-mode squeezed source, no repeaters.
    CvNoRepeater,
    /// Single-photon DV scheme with entangled pairs sent over the full baseline.
    DvNoRepeater,
}

/// `F_θθ` against baseline. The CV curve feeds `T(L)` into `r'` and the closed-form QFI;
/// the DV curve multiplies the DV-scheme FI by the pair survival `10^{−loss·L/10}`.
pub fn fi_vs_baseline_curve(
    params: &CoherenceParams,
    r: f64,
    net: &NetworkParams,
    scheme: Scheme,
    baselines_km: &[f64],
) -> Result<Vec<(f64, f64)>> {
    params.validate()?;
    net.validate()?;
    let dv0 = match scheme {
        Scheme::DvNoRepeater => dv_scheme_fi(params)?.f_theta_theta,
        Scheme::CvNoRepeater => 0.0,
    };
    baselines_km
        .iter()
        .map(|&l| {
            let at = net.with_baseline(l);
            at.validate()?;
            let f = match scheme {
                Scheme::CvNoRepeater => {
                    let link = effective_squeezing(r, transmissivity_from_baseline(&at)?)?;
                    qfi_closed_form(params, link.y)?.f_theta_theta
                }
                Scheme::DvNoRepeater => dv0 * db_to_power(net.loss_db_per_km * l),
            };
            Ok((l, f))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioPoint {
    pub l_km: f64,
    pub ratio_direct: f64,
    pub ratio_cv: f64,
    pub duty: f64,
}

/// Fraction of the ideal `F_θθ` kept by direct combination and by the CV scheme.
///
/// Direct: the stellar light of each telescope travels `L/2` to the midpoint, so
/// `ε → ηε` with `η = 10^{−loss·L/20}`. CV: fixed effective squeezing `r'`, scaled by
/// the duty factor `min(1, rate(L)/mode_rate)`.
pub fn fi_ratio_vs_distance(
    params: &CoherenceParams,
    r_eff: f64,
    net: &NetworkParams,
    obs: &ObservationParams,
    baselines_km: &[f64],
) -> Result<Vec<RatioPoint>> {
    params.validate()?;
    if !(r_eff.is_finite() && r_eff >= 0.0) {
        return Err(invalid("r_eff", format!("must be finite and >= 0, got {r_eff}")));
    }
    let mode_rate = temporal_mode_rate(obs)?;
    let ideal = qfi_closed_form(params, 0.0)?.f_theta_theta;
    if ideal == 0.0 {
        return Err(invalid("g_abs", "ideal F_θθ vanishes; ratios are undefined"));
    }
    let y = 2.0 * (-2.0 * r_eff).exp();
    let cv_flat = qfi_closed_form(params, y)?.f_theta_theta / ideal;
    baselines_km
        .iter()
        .map(|&l| {
            let at = net.with_baseline(l);
            at.validate()?;
            let eta = db_to_power(net.loss_db_per_km * l / 2.0);
            let direct = qfi_closed_form(&params.with_epsilon(params.epsilon * eta), 0.0)?.f_theta_theta / ideal;
            let duty = (at.repetition_rate() / mode_rate).min(1.0);
            Ok(RatioPoint {
                l_km: l,
                ratio_direct: direct,
                ratio_cv: cv_flat * duty,
                duty,
            })
        })
        .collect()
}

/// Baseline beyond which the CV scheme stays ahead of direct combination.
///
/// The two curves may cross more than once (the duty factor bends the CV curve
/// down past the rate-limited distance); this returns the last crossing, linearly
/// interpolated, or `None` if the CV scheme is not ahead at the end of the grid.
pub fn find_crossover(points: &[RatioPoint]) -> Option<f64> {
    let diff = |p: &RatioPoint| p.ratio_cv - p.ratio_direct;
    let last = points.last()?;
    if diff(last) <= 0.0 {
        return None;
    }
    for w in points.windows(2).rev() {
        let (a, b) = (diff(&w[0]), diff(&w[1]));
        if a <= 0.0 && b > 0.0 {
            let frac = a / (a - b);
            return Some(w[0].l_km + frac * (w[1].l_km - w[0].l_km));
        }
    }
    None
}

/// `n` points evenly spaced over `[start, end]`.
pub fn linear_grid(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|k| start + (end - start) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// `n` points evenly spaced in `log10` over `[start, end]`.
pub fn log_grid(start: f64, end: f64, n: usize) -> Vec<f64> {
    linear_grid(start.log10(), end.log10(), n)
        .into_iter()
        .map(|x| 10f64.powf(x))
        .collect()
}
