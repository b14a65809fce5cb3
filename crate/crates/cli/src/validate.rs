use std::fmt;

use log::warn;
use serde::Serialize;

use qpwms::spectroscopy::BeamGasState;
use qpwms::tomography::{build_geometry, system_matrix};

use crate::config::{ScenarioFile, TomographySection};

/// One failed invariant, located by its dotted field path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Default)]
struct Report(Vec<Violation>);

impl Report {
    fn check(&mut self, path: &str, r: qpwms::Result<()>) {
        if let Err(e) = r {
            self.push(path, e.to_string());
        }
    }

    fn push(&mut self, path: &str, message: impl Into<String>) {
        self.0.push(Violation::new(path, message));
    }
}

/// Every invariant of the file, checked independently so one run lists all
/// problems. Empty means valid.
pub fn validate_scenario(file: &ScenarioFile) -> Vec<Violation> {
    let mut r = Report::default();
    r.check("drive", file.drive.validate());
    r.check("line", file.line.validate());
    check_schedule(file, &mut r);

    if file.n_scans == 0 {
        r.push("n_scans", "need at least one scan");
    }
    if !file.reference_phase_rad.is_finite() {
        r.push("reference_phase_rad", "must be finite");
    }
    if file.run.runs == 0 {
        r.push("run.runs", "need at least one run");
    }
    if let Some(n) = &file.noise {
        match n.chain() {
            Ok(chain) => r.check("noise", chain.validate()),
            Err(m) => r.push("noise", m),
        }
    }

    match &file.tomography {
        None => {
            if file.beams.len() != file.sched.n_beams {
                r.push(
                    "beams",
                    format!("{} gas states for {} multiplexed beams", file.beams.len(), file.sched.n_beams),
                );
            }
            for (i, b) in file.beams.iter().enumerate() {
                r.check(&format!("beams[{i}]"), b.validate());
            }
        }
        Some(t) => {
            if !file.beams.is_empty() {
                r.push("beams", "list beams or give a tomography section, not both");
            }
            check_tomography(t, file.sched.n_beams, &mut r);
        }
    }
    r.0
}

fn check_schedule(file: &ScenarioFile, r: &mut Report) {
    let s = &file.sched;
    if s.n_beams == 0 {
        r.push("sched.n_beams", "must be at least 1");
    }
    if s.periods_per_slot == 0 {
        r.push("sched.periods_per_slot", "must be at least 1");
    }
    if !(s.f_s_hz > 0.0 && s.f_m_hz > s.f_s_hz && s.f_d_hz > 0.0) {
        r.push("sched", "require f_d_hz > 0 and f_m_hz > f_s_hz > 0");
        return;
    }
    if !(s.t_mux_s >= 0.0) {
        r.push("sched.t_mux_s", "must be non-negative");
    } else {
        r.check("sched.t_mux_s", s.timing().into_result(s.t_mux_s));
    }
    if s.f_s_hz != file.drive.f_s_hz {
        r.push("sched.f_s_hz", format!("differs from drive.f_s_hz = {}", file.drive.f_s_hz));
    }
    if s.f_m_hz != file.drive.f_m_hz {
        r.push("sched.f_m_hz", format!("differs from drive.f_m_hz = {}", file.drive.f_m_hz));
    }
    if let Err(e) = s.samples_per_period() {
        r.push("sched.f_d_hz", e.to_string());
        return;
    }
    if s.n_beams == 0 || s.periods_per_slot == 0 {
        return;
    }
    match s.slots_per_scan() {
        Err(e) => r.push("sched.f_s_hz", e.to_string()),
        Ok(slots) if slots % (2 * s.n_beams) != 0 => r.push(
            "sched.n_beams",
            format!("{slots} slots per scan do not split evenly over {} beams in each scan half", s.n_beams),
        ),
        Ok(_) => {}
    }
}

fn check_tomography(t: &TomographySection, n_beams: usize, r: &mut Report) {
    let g = &t.geometry;
    let geom = match build_geometry(g.n_projections, g.beams_per_projection, g.spacing_cm, g.beam_length_cm) {
        Ok(geom) => Some(geom),
        Err(e) => {
            r.push("tomography.geometry", e.to_string());
            None
        }
    };
    if let Some(geom) = &geom {
        if n_beams > 0 && geom.len() % n_beams != 0 {
            r.push(
                "tomography.geometry",
                format!("{} beams do not fill whole {n_beams}-beam multiplexers", geom.len()),
            );
        }
    }
    let grid_ok = t.grid.validate().is_ok();
    r.check("tomography.grid", t.grid.validate());
    r.check("tomography.phantom", t.phantom.validate());
    if t.phantom_supersample == 0 {
        r.push("tomography.phantom_supersample", "must be at least 1");
    }
    let gas = BeamGasState {
        path_length_cm: t.calibration.path_length_cm,
        pressure_atm: t.gas.pressure_atm,
        temperature_k: t.gas.temperature_k,
        mole_fraction: t.calibration.mole_fraction,
    };
    r.check("tomography.gas", gas.validate());
    if !(t.calibration.mole_fraction > 0.0) {
        r.push("tomography.calibration.mole_fraction", "must be positive");
    }
    if !(t.sart.relaxation > 0.0 && t.sart.relaxation < 2.0) {
        r.push("tomography.sart.relaxation", "must lie in (0, 2)");
    }
    if t.sart.iterations == 0 {
        r.push("tomography.sart.iterations", "must be at least 1");
    }
    if let (Some(geom), true) = (&geom, grid_ok) {
        if let Ok(m) = system_matrix(geom, &t.grid) {
            let missed = m.row_sums().iter().filter(|&&s| s == 0.0).count();
            if missed == geom.len() {
                r.push("tomography.grid", "no beam crosses the pixel grid");
            } else if missed > 0 {
                warn!("{missed} beam(s) miss the pixel grid and will not constrain the image");
            }
        }
    }
}
