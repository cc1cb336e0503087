use std::f64::consts::FRAC_PI_2;

use clap::ValueEnum;
use serde_json::{Map, Value as Json};

use cvqi::appendix::{mzi_fock_check, mzi_stats, MziConfig};
use cvqi::estimation::{fi_pnr_leading_order, heterodyne_fi, qfi_closed_form};
use cvqi::fock::{
    classical_fi_pnr, dv_scheme_fi, gaussian_to_fock, interferometer_output, pnr_distribution, verify_sld, Parameter,
};
use cvqi::gaussian::stellar_state;
use cvqi::link_budget::{
    epsilon_from_magnitude, fi_ratio_vs_distance, fi_vs_baseline_curve, find_crossover, linear_grid, log_grid,
    reference_rate_factor, table1_rows, table1_table, NetworkParams, ObservationParams, Scheme, Topology,
};
use cvqi::nalgebra::DVector;
use cvqi::table::{fmt_num, Table};
use cvqi::teleportation::{effective_squeezing, simulate_teleportation, teleported_state, teleported_state_with_noise};
use cvqi::{CoherenceParams, GaussianState};

use crate::params::{json_num, Params, UsageError, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// QFI against teleportation noise y
    Fig2,
    /// CV QFI, DV-scheme FI and heterodyne FI against ε
    Fig3,
    /// F_θθ against baseline with and without entanglement, no repeaters
    Fig4,
    /// Fraction of ideal F_θθ kept by direct combination and by the CV scheme
    Fig6,
    /// Threshold squeezing per source magnitude
    Table1,
    /// Monte-Carlo teleportation against the closed-form output covariance
    ValidateTeleport,
    /// Fock-space photon counting against the closed forms
    ValidateFock,
    /// Closed-form SLDs against the Fock representation
    ValidateSld,
    /// Squeezed-input Mach–Zehnder statistics with a Fock cross-check
    Mzi,
}

impl Command {
    pub fn name(self) -> String {
        self.to_possible_value()
            .expect("no skipped variants")
            .get_name()
            .to_string()
    }
}

#[derive(Debug)]
pub enum CmdError {
    Usage(String),
    Library(cvqi::Error),
}

impl From<UsageError> for CmdError {
    fn from(e: UsageError) -> Self {
        CmdError::Usage(e.0)
    }
}

impl From<cvqi::Error> for CmdError {
    fn from(e: cvqi::Error) -> Self {
        match e {
            cvqi::Error::InvalidParameter { .. } => CmdError::Usage(e.to_string()),
            other => CmdError::Library(other),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &'static str, value: f64, limit: f64) -> Self {
        Self {
            name,
            value,
            limit,
            pass: value <= limit,
        }
    }

    fn holds(name: &'static str, ok: bool) -> Self {
        Self {
            name,
            value: if ok { 1.0 } else { 0.0 },
            limit: 1.0,
            pass: ok,
        }
    }
}

pub struct Output {
    pub table: Table,
    /// Extra results recorded in the sidecar.
    pub results: Map<String, Json>,
    pub checks: Vec<Check>,
}

impl Output {
    fn table(table: Table) -> Self {
        Self {
            table,
            results: Map::new(),
            checks: Vec::new(),
        }
    }

    fn checks(checks: Vec<Check>) -> Self {
        let mut table = Table::new(["check", "value", "limit", "pass"]);
        for c in &checks {
            table.push([
                c.name.to_string(),
                fmt_num(c.value),
                fmt_num(c.limit),
                c.pass.to_string(),
            ]);
        }
        Self {
            table,
            results: Map::new(),
            checks,
        }
    }
}

fn n(x: f64) -> Value {
    Value::Num(x)
}

pub fn defaults(cmd: Command) -> Params {
    let coherence = |e: f64, g: f64, th: f64| [("epsilon", n(e)), ("g_abs", n(g)), ("theta", n(th))];
    match cmd {
        Command::Fig2 => Params::new(coherence(1e-5, 0.7, 0.0).into_iter().chain([
            ("y_min", n(1e-8)),
            ("y_max", n(1.0)),
            ("points", n(81.0)),
        ])),
        Command::Fig3 => Params::new([
            ("g_abs", n(0.7)),
            ("theta", n(0.0)),
            ("y", n(0.0)),
            ("eps_min", n(1e-4)),
            ("eps_max", n(1.0)),
            ("points", n(41.0)),
        ]),
        Command::Fig4 => Params::new([
            ("epsilon", Value::List(vec![0.5, 0.05, 0.005])),
            ("g_abs", n(0.7)),
            ("theta", n(0.0)),
            ("r", n(5.0)),
            ("loss_db_per_km", n(0.2)),
            ("topology", Value::Text("midpoint".into())),
            ("l_max_km", n(200.0)),
            ("points", n(201.0)),
        ]),
        Command::Fig6 => Params::new([
            ("magnitude", n(-5.0)),
            ("g_abs", n(0.7)),
            ("theta", n(0.0)),
            ("r_eff", Value::List(vec![0.8, 1.2, 2.0])),
            ("base_rate_hz", Value::List(vec![1.5e11, 1.5e10])),
            ("reference_km", n(10.0)),
            ("poly_order", n(2.0)),
            ("loss_db_per_km", n(1.0)),
            ("rate_factor", n(reference_rate_factor())),
            ("wavelength_nm", n(800.0)),
            ("bandwidth_nm", n(0.1)),
            ("diameter_m", n(6.0)),
            ("l_max_km", n(100.0)),
            ("points", n(401.0)),
        ]),
        Command::Table1 => Params::new([
            ("wavelength_nm", n(800.0)),
            ("bandwidth_nm", n(0.1)),
            ("diameter_m", n(6.0)),
        ]),
        Command::ValidateTeleport => Params::new(coherence(0.4, 0.7, 0.3).into_iter().chain([
            ("r", n(2.0)),
            ("t", n(0.95)),
            ("samples", n(1e6)),
            ("z_limit", n(5.0)),
        ])),
        Command::ValidateFock => Params::new(coherence(1e-3, 0.5, 0.3).into_iter().chain([
            ("y", n(1e-6)),
            ("cutoff", n(6.0)),
            ("fd_step", n(1e-5)),
        ])),
        Command::ValidateSld => Params::new(
            coherence(0.05, 0.6, 0.3)
                .into_iter()
                .chain([("y", n(1e-3)), ("cutoff", n(8.0))]),
        ),
        Command::Mzi => Params::new([
            ("alpha", n(1.0)),
            ("r", n(0.5)),
            ("phi_min", n(0.0)),
            ("phi_max", n(std::f64::consts::PI)),
            ("points", n(37.0)),
            ("cutoff", n(40.0)),
        ]),
    }
}

fn coherence(p: &Params) -> Result<CoherenceParams, CmdError> {
    Ok(CoherenceParams::new(p.num("epsilon"), p.num("g_abs"), p.num("theta"))?)
}

fn observation(p: &Params) -> ObservationParams {
    ObservationParams {
        wavelength_m: p.num("wavelength_nm") * 1e-9,
        bandwidth_m: p.num("bandwidth_nm") * 1e-9,
        telescope_diameter_m: p.num("diameter_m"),
        ..ObservationParams::default()
    }
}

fn topology(p: &Params) -> Result<Topology, CmdError> {
    match p.text("topology") {
        "midpoint" => Ok(Topology::Midpoint),
        "telescope_a" => Ok(Topology::AtTelescopeA),
        other => Err(CmdError::Usage(format!(
            "parameter `topology` must be `midpoint` or `telescope_a`, got `{other}`"
        ))),
    }
}

fn grid_points(p: &Params) -> Result<usize, CmdError> {
    let k = p.count("points")?;
    if k < 2 {
        return Err(CmdError::Usage("parameter `points` must be at least 2".into()));
    }
    Ok(k)
}

pub fn run(cmd: Command, p: &Params, seed: u64) -> Result<Output, CmdError> {
    match cmd {
        Command::Fig2 => fig2(p),
        Command::Fig3 => fig3(p),
        Command::Fig4 => fig4(p),
        Command::Fig6 => fig6(p),
        Command::Table1 => Ok(Output::table(table1_table(&table1_rows(&observation(p))?))),
        Command::ValidateTeleport => validate_teleport(p, seed),
        Command::ValidateFock => validate_fock(p),
        Command::ValidateSld => validate_sld(p),
        Command::Mzi => mzi(p),
    }
}

fn fig2(p: &Params) -> Result<Output, CmdError> {
    let pr = coherence(p)?;
    let (lo, hi) = (p.num("y_min"), p.num("y_max"));
    if !(lo > 0.0 && hi > lo) {
        return Err(CmdError::Usage("need 0 < y_min < y_max".into()));
    }
    let mut t = Table::new(["y", "F_theta_theta", "F_g_g"]);
    for y in log_grid(lo, hi, grid_points(p)?) {
        let f = qfi_closed_form(&pr, y)?;
        t.push_nums(&[y, f.f_theta_theta, f.f_g_g]);
    }
    Ok(Output::table(t))
}

fn fig3(p: &Params) -> Result<Output, CmdError> {
    let (lo, hi) = (p.num("eps_min"), p.num("eps_max"));
    if !(lo > 0.0 && hi > lo) {
        return Err(CmdError::Usage("need 0 < eps_min < eps_max".into()));
    }
    let y = p.num("y");
    let mut t = Table::new([
        "epsilon",
        "cv_qfi_theta",
        "dv_fi_theta",
        "heterodyne_fi_theta",
        "cv_qfi_g",
        "dv_fi_g",
        "heterodyne_fi_g",
    ]);
    for e in log_grid(lo, hi, grid_points(p)?) {
        let pr = CoherenceParams::new(e, p.num("g_abs"), p.num("theta"))?;
        let cv = qfi_closed_form(&pr, y)?;
        let dv = dv_scheme_fi(&pr)?;
        let het = heterodyne_fi(&pr)?;
        t.push_nums(&[
            e,
            cv.f_theta_theta,
            dv.f_theta_theta,
            het.f_theta_theta,
            cv.f_g_g,
            dv.f_g_g,
            het.f_g_g,
        ]);
    }
    Ok(Output::table(t))
}

fn fig4(p: &Params) -> Result<Output, CmdError> {
    let net = NetworkParams {
        loss_db_per_km: p.num("loss_db_per_km"),
        topology: topology(p)?,
        ..NetworkParams::default()
    };
    let ls = linear_grid(0.0, p.num("l_max_km"), grid_points(p)?);
    let r = p.num("r");
    let mut t = Table::new(["L_km", "epsilon", "cv_f_theta", "dv_f_theta"]);
    for &e in p.list("epsilon") {
        let pr = CoherenceParams::new(e, p.num("g_abs"), p.num("theta"))?;
        let cv = fi_vs_baseline_curve(&pr, r, &net, Scheme::CvNoRepeater, &ls)?;
        let dv = fi_vs_baseline_curve(&pr, r, &net, Scheme::DvNoRepeater, &ls)?;
        for ((l, c), (_, d)) in cv.into_iter().zip(dv) {
            t.push_nums(&[l, e, c, d]);
        }
    }
    Ok(Output::table(t))
}

fn fig6(p: &Params) -> Result<Output, CmdError> {
    let obs = ObservationParams {
        magnitude: p.num("magnitude"),
        rate_factor: p.num("rate_factor"),
        ..observation(p)
    };
    let pr = CoherenceParams::new(epsilon_from_magnitude(&obs)?, p.num("g_abs"), p.num("theta"))?;
    let ls = linear_grid(0.0, p.num("l_max_km"), grid_points(p)?);
    let mut t = Table::new(["L_km", "r_eff", "base_rate_hz", "ratio_direct", "ratio_cv", "duty"]);
    let mut crossovers = Vec::new();
    for &rate in p.list("base_rate_hz") {
        let net = NetworkParams {
            loss_db_per_km: p.num("loss_db_per_km"),
            base_rate_hz: rate,
            reference_km: p.num("reference_km"),
            poly_order: p.num("poly_order"),
            ..NetworkParams::default()
        };
        for &r_eff in p.list("r_eff") {
            let pts = fi_ratio_vs_distance(&pr, r_eff, &net, &obs, &ls)?;
            let mut entry = Map::new();
            entry.insert("base_rate_hz".into(), json_num(rate));
            entry.insert("r_eff".into(), json_num(r_eff));
            entry.insert("crossover_km".into(), find_crossover(&pts).map_or(Json::Null, json_num));
            crossovers.push(Json::Object(entry));
            for q in pts {
                t.push_nums(&[q.l_km, r_eff, rate, q.ratio_direct, q.ratio_cv, q.duty]);
            }
        }
    }
    let mut out = Output::table(t);
    out.results.insert("epsilon".into(), json_num(pr.epsilon));
    out.results.insert("crossovers".into(), Json::Array(crossovers));
    Ok(out)
}

fn validate_teleport(p: &Params, seed: u64) -> Result<Output, CmdError> {
    let pr = coherence(p)?;
    let (r, t) = (p.num("r"), p.num("t"));
    let samples = p.count("samples")?;
    let z = p.num("z_limit");
    let rep = simulate_teleportation(&pr, r, t, samples, seed)?;
    let ideal = teleported_state_with_noise(&pr, 0.0)?;
    let output = teleported_state(&pr, &effective_squeezing(r, t)?)?;
    let protocol_physical = GaussianState::new(DVector::zeros(4), rep.protocol_cov.clone()).is_ok();
    let checks = vec![
        Check::holds("ideal_limit_exact", ideal.cov() == stellar_state(&pr)?.cov()),
        Check::holds("output_states_physical", output.is_physical() && protocol_physical),
        Check::at_most("mean_max_z", rep.max_z_mean(), z),
        Check::at_most("cov_max_z_vs_protocol", rep.max_z_protocol(), z),
        Check::at_most("cov_max_z_vs_closed_form", rep.max_z_target(), z),
    ];
    let mut out = Output::checks(checks);
    out.results
        .insert("max_abs_deviation".into(), json_num(rep.max_abs_deviation));
    out.results.insert("samples".into(), Json::from(rep.n_samples));
    Ok(out)
}

fn validate_fock(p: &Params) -> Result<Output, CmdError> {
    let pr = coherence(p)?;
    let (y, cutoff, h) = (p.num("y"), p.count("cutoff")?, p.num("fd_step"));
    let delta_theta = pr.theta + FRAC_PI_2;
    let rho = gaussian_to_fock(&interferometer_output(&pr, y, delta_theta)?, cutoff)?;
    let dist = pnr_distribution(&pr, y, pr.theta, cutoff)?;
    let fi_t = classical_fi_pnr(&pr, y, delta_theta, cutoff, h)?;
    let fi_g = classical_fi_pnr(&pr, y, pr.theta, cutoff, h)?;
    let lead = fi_pnr_leading_order(&pr, delta_theta)?;
    let qfi = qfi_closed_form(&pr, y)?;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let checks = vec![
        Check::at_most("tail_mass", rho.tail_mass, 1e-6),
        Check::at_most("hermiticity_error", rho.hermiticity_error(), 1e-12),
        Check::at_most("negative_eigenvalue", (-rho.min_eigenvalue()).max(0.0), 1e-12),
        Check::at_most(
            "pnr_total_excess",
            ((dist.total() - 1.0).abs() - dist.tail_mass).max(0.0),
            1e-12,
        ),
        Check::at_most(
            "intensity_difference_mean_error",
            (dist.intensity_difference_mean() - pr.g_abs).abs(),
            1e-3,
        ),
        Check::at_most(
            "fi_theta_rel_dev_leading_order",
            rel(fi_t.f_theta_theta, lead.f_theta_theta),
            0.05,
        ),
        Check::at_most("fi_theta_over_qfi", fi_t.f_theta_theta / qfi.f_theta_theta, 1.0 + 1e-6),
        Check::at_most("fi_g_over_qfi", fi_g.f_g_g / qfi.f_g_g, 1.0 + 1e-6),
    ];
    Ok(Output::checks(checks))
}

fn validate_sld(p: &Params) -> Result<Output, CmdError> {
    let pr = coherence(p)?;
    let (y, cutoff) = (p.num("y"), p.count("cutoff")?);
    let mut checks = Vec::new();
    for (which, names) in [
        (
            Parameter::Theta,
            ["theta_residual", "theta_fisher_rel_dev", "theta_sld_mean"],
        ),
        (Parameter::GAbs, ["g_residual", "g_fisher_rel_dev", "g_sld_mean"]),
    ] {
        let rep = verify_sld(&pr, y, cutoff, which)?;
        checks.push(Check::at_most(names[0], rep.residual, 1e-4));
        checks.push(Check::at_most(
            names[1],
            (rep.fisher_from_sld - rep.fisher_closed_form).abs() / rep.fisher_closed_form,
            0.01,
        ));
        checks.push(Check::at_most(names[2], rep.mean_sld.abs(), 1e-6));
    }
    Ok(Output::checks(checks))
}

fn mzi(p: &Params) -> Result<Output, CmdError> {
    let cutoff = p.count("cutoff")?;
    let mut t = Table::new(["phi", "mean", "variance", "fock_mean", "fock_variance"]);
    let mut worst = 0.0f64;
    for phi in linear_grid(p.num("phi_min"), p.num("phi_max"), grid_points(p)?) {
        let c = MziConfig::new(p.num("alpha"), p.num("r"), phi)?;
        let s = mzi_stats(&c);
        let f = mzi_fock_check(&c, cutoff)?;
        worst = worst.max(f.max_deviation());
        t.push_nums(&[phi, s.mean, s.variance, f.fock.mean, f.fock.variance]);
    }
    let mut out = Output::table(t);
    out.results.insert("max_fock_deviation".into(), json_num(worst));
    Ok(out)
}
