//! Subcommand dispatch. Each command is deterministic given its config.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::coefficients::DissipationModel;
use crate::dyson::{propagate_physical, SeriesOptions};
use crate::error::{Error, Result};
use crate::harness::config::RunConfig;
use crate::harness::output::{number, Table};
use crate::harness::random::{random_data, random_state};
use crate::harness::verify::run_verify;
use crate::mesh::{resolving_density, QuadratureRule, TimeMesh};
use crate::modes::mode_wave_operator;
use crate::par::Exec;
use crate::reference::strang_solve;
use crate::scattering::{
    loglog_slope, operator_norm_estimate, rate_sweep, scattering_apply, scattering_inverse_apply, wave_operator_apply,
    wave_operator_inverse_apply, NormMode, OperatorHandle, RateOptions, Sign, WaveMethod, WaveOptions,
};
use crate::spectral::{GridSpec, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Verify,
    Solve,
    Waveop,
    Scatter,
    Rate,
    Modes,
}

impl Subcommand {
    pub const ALL: [Subcommand; 6] = [
        Subcommand::Verify,
        Subcommand::Solve,
        Subcommand::Waveop,
        Subcommand::Scatter,
        Subcommand::Rate,
        Subcommand::Modes,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::Verify => "verify",
            Subcommand::Solve => "solve",
            Subcommand::Waveop => "waveop",
            Subcommand::Scatter => "scatter",
            Subcommand::Rate => "rate",
            Subcommand::Modes => "modes",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown subcommand `{s}`")))
    }
}

/// What a subcommand produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// 0 on success; 1 when `verify` found a failing invariant.
    pub exit_code: i32,
    /// Human-readable report.
    pub summary: String,
    pub table: Table,
}

impl Outcome {
    /// Write the CSV to `config.output` when set, otherwise return it.
    pub fn emit(&self, config: &RunConfig) -> Result<Option<String>> {
        let csv = self.table.to_csv()?;
        match &config.output {
            Some(path) => {
                std::fs::write(path, csv)?;
                Ok(None)
            }
            None => Ok(Some(csv)),
        }
    }
}

pub fn run_subcommand(cmd: Subcommand, config: &RunConfig) -> Result<Outcome> {
    let grid = config.grid.build()?;
    let model = config.profile.build(&grid)?;
    match cmd {
        Subcommand::Verify => {
            let report = run_verify(config, Exec::default())?;
            Ok(Outcome {
                exit_code: if report.passed() { 0 } else { 1 },
                summary: report.summary(),
                table: report.table(),
            })
        }
        Subcommand::Solve => solve(config, &grid, &model),
        Subcommand::Waveop => waveop(config, &grid, &model),
        Subcommand::Scatter => scatter(config, &grid, &model),
        Subcommand::Rate => rate(config, &grid, &model),
        Subcommand::Modes => modes(config, &model),
    }
}

fn wave_options(config: &RunConfig) -> WaveOptions {
    WaveOptions {
        tol: config.horizon_tol,
        series: SeriesOptions {
            tol: config.series_tol,
            ..SeriesOptions::default()
        },
        density: config.mesh_density.value(),
        ..WaveOptions::default()
    }
}

fn coordinate_header(grid: &GridSpec) -> Vec<String> {
    (0..grid.dim()).map(|d| format!("x{d}")).collect()
}

fn solve(config: &RunConfig, grid: &GridSpec, model: &DissipationModel) -> Result<Outcome> {
    let (u1, u2) = random_data(grid, config.seed);
    let density = config.mesh_density.value().unwrap_or_else(|| resolving_density(grid));
    let mesh = TimeMesh::with_density(0.0, config.t_end, density, QuadratureRule::Simpson, model.time())?;
    let series = SeriesOptions {
        tol: config.series_tol,
        ..SeriesOptions::default()
    };
    let (u, dtu) = propagate_physical((&u1, &u2), model, &mesh, series)?;
    let steps = (config.t_end * 1024.0).ceil();
    let (su, sdtu) = strang_solve(0.0, config.t_end, (&u1, &u2), model, config.t_end / steps)?;
    let diff = crate::spectral::lift_data(&(&u - &su), &(&dtu - &sdtu))?.norm();

    let mut header = coordinate_header(grid);
    header.extend(["re_u", "im_u", "re_dtu", "im_dtu"].map(String::from));
    let mut table = Table {
        header,
        rows: Vec::new(),
    };
    for j in 0..grid.len() {
        let x = grid.coordinates(j);
        let mut row: Vec<f64> = x[..grid.dim()].to_vec();
        let (a, b) = (u.values()[j], dtu.values()[j]);
        row.extend([a.re, a.im, b.re, b.im]);
        table.push_numbers(&row);
    }
    let summary = format!(
        "solve: grid {} profile {} t_end {}\n  energy in {:.6e} out {:.6e}\n  split-step reference (dt {:.3e}) differs by {:.3e}",
        config.grid,
        config.profile,
        config.t_end,
        crate::spectral::data_energy_norm(&u1, &u2)?,
        crate::spectral::data_energy_norm(&u, &dtu)?,
        config.t_end / steps,
        diff
    );
    Ok(Outcome {
        exit_code: 0,
        summary,
        table,
    })
}

fn state_table(grid: &GridSpec, input: &StateVector, output: &StateVector) -> Table {
    let mut table = Table::new(&[
        "index", "abs_xi", "re_in1", "im_in1", "re_in2", "im_in2", "re_out1", "im_out1", "re_out2", "im_out2",
    ]);
    let split = |v: &StateVector, j: usize| -> [Complex64; 2] { [v.first().values()[j], v.second().values()[j]] };
    for j in 0..grid.len() {
        let [a, b] = split(input, j);
        let [c, d] = split(output, j);
        let mut row = vec![j.to_string()];
        row.extend([grid.abs_xi()[j], a.re, a.im, b.re, b.im, c.re, c.im, d.re, d.im].map(number));
        table.push(row);
    }
    table
}

fn waveop(config: &RunConfig, grid: &GridSpec, model: &DissipationModel) -> Result<Outcome> {
    let v = random_state(grid, config.seed);
    let opts = wave_options(config);
    let horizon = opts.horizon(Sign::Plus, model, v.norm())?;
    let w = wave_operator_apply(Sign::Plus, &v, model, &opts, WaveMethod::ViaQ)?;
    let g = wave_operator_apply(Sign::Plus, &v, model, &opts, WaveMethod::ViaGroup)?;
    let back = wave_operator_inverse_apply(Sign::Plus, &w, model, &opts)?;
    let summary = format!(
        "waveop: W+ at horizon T = {horizon}\n  |V| = {:.6e}, |W+ V| = {:.6e}\n  via Q vs via group: {:.3e}\n  |W+^-1 W+ V - V| = {:.3e}",
        v.norm(),
        w.norm(),
        (&w - &g).norm(),
        (&back - &v).norm()
    );
    Ok(Outcome {
        exit_code: 0,
        summary,
        table: state_table(grid, &v, &w),
    })
}

fn scatter(config: &RunConfig, grid: &GridSpec, model: &DissipationModel) -> Result<Outcome> {
    let v = random_state(grid, config.seed);
    let opts = wave_options(config);
    let s = scattering_apply(&v, model, &opts)?;
    let back = scattering_inverse_apply(&s, model, &opts)?;
    let summary = format!(
        "scatter: |V| = {:.6e}, |S V| = {:.6e}\n  |S^-1 S V - V| = {:.3e}",
        v.norm(),
        s.norm(),
        (&back - &v).norm()
    );
    Ok(Outcome {
        exit_code: 0,
        summary,
        table: state_table(grid, &v, &s),
    })
}

fn rate(config: &RunConfig, grid: &GridSpec, model: &DissipationModel) -> Result<Outcome> {
    let v = random_state(grid, config.seed);
    let opts = RateOptions {
        density: config.mesh_density.value(),
        ..RateOptions::default()
    };
    let rows = rate_sweep(&v, model, &config.times, &opts)?;
    let mut table = Table::new(&["t", "err_E", "tail_integral", "ratio"]);
    for r in &rows {
        table.push_numbers(&[r.t, r.err_e, r.tail, r.ratio]);
    }
    let usable: Vec<_> = rows.iter().filter(|r| r.err_e > 0.0).collect();
    let slope = if usable.len() >= 2 {
        let x: Vec<f64> = usable.iter().map(|r| 1.0 + r.t).collect();
        let y: Vec<f64> = usable.iter().map(|r| r.err_e).collect();
        format!("{:.4}", loglog_slope(&x, &y))
    } else {
        "n/a".into()
    };
    let max_ratio = rows.iter().map(|r| r.ratio).filter(|r| r.is_finite()).fold(0.0, f64::max);
    let summary = format!("rate: {} times, log-log slope {slope}, max ratio {max_ratio:.6e}", rows.len());
    Ok(Outcome {
        exit_code: 0,
        summary,
        table,
    })
}

fn modes(config: &RunConfig, model: &DissipationModel) -> Result<Outcome> {
    let mut table = Table::new(&[
        "omega", "re_w11", "im_w11", "re_w12", "im_w12", "re_w21", "im_w21", "re_w22", "im_w22", "abs_det",
    ]);
    let results = Exec::default().try_map(&config.omegas, |&omega| mode_wave_operator(omega, model, config.horizon_tol, None))?;
    for w in &results {
        let m = &w.matrix;
        table.push_numbers(&[
            w.omega,
            m[(0, 0)].re,
            m[(0, 0)].im,
            m[(0, 1)].re,
            m[(0, 1)].im,
            m[(1, 0)].re,
            m[(1, 0)].im,
            m[(1, 1)].re,
            m[(1, 1)].im,
            w.det().norm(),
        ]);
    }
    let horizon = results.first().map(|w| w.interval.1).unwrap_or(0.0);
    let summary = format!("modes: {} frequencies, horizon T = {horizon}", results.len());
    Ok(Outcome {
        exit_code: 0,
        summary,
        table,
    })
}


/// Norm estimates as CSV with columns `handle_name, grid, mode, estimate`.
pub fn norm_report(handles: &[OperatorHandle], grid: &str, mode: NormMode, exec: Exec) -> Result<Table> {
    let mut table = Table::new(&["handle_name", "grid", "mode", "estimate"]);
    for h in handles {
        let estimate = operator_norm_estimate(h, mode, exec)?;
        table.push(vec![h.name().to_string(), grid.to_string(), mode.to_string(), number(estimate)]);
    }
    Ok(table)
}
