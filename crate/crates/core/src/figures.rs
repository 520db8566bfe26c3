//! Curve families for the two reference figures and structural checks on
//! them.
//!
//! Figure 1: fundamental solution for `k = β = 1`, `n = 1`, `B = y = 0`,
//! σ = 0 and σ = [`FIG1_SIGMA`], at `t = 0.5` and `t = 100`.
//! Figure 2: evolution of Gaussian (left) and step (right) data with
//! `a = 2`, `k = β = 1`, σ = 0, `n = 1` at `t ∈ {0, 1, 10}`.

use serde::{Deserialize, Serialize};

use crate::density::{self, weak_discontinuity_report, InitialData};
use crate::error::{Error, Result};
use crate::grid::UniformGrid;
use crate::kernel;
use crate::model::ModelParams;

/// Diffusion used for the dashed curves of figure 1, which only says σ > 0.
pub const FIG1_SIGMA: f64 = 0.5;
pub const FIG1_TIMES: [f64; 2] = [0.5, 100.0];
pub const FIG2_TIMES: [f64; 3] = [0.0, 1.0, 10.0];
pub const FIG2_A: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub label: String,
    pub t: f64,
    pub sigma: f64,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    /// Weight of the point mass not drawn in `values` (0 if none).
    pub atom_weight: f64,
    pub atom_location: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub title: String,
    pub curves: Vec<Curve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure {
    pub id: u8,
    pub panels: Vec<Panel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> StructureCheck {
    StructureCheck {
        name: name.to_string(),
        passed,
        detail,
    }
}

pub fn default_grid(id: u8) -> UniformGrid {
    match id {
        1 => UniformGrid {
            min: -8.0,
            max: 8.0,
            count: 401,
        },
        _ => UniformGrid {
            min: -4.0,
            max: 4.0,
            count: 801,
        },
    }
}

pub fn fig1_params(sigma: f64) -> ModelParams {
    ModelParams::resonant(0.0, 1.0, sigma, 1, 1.0).expect("fixed parameters are valid")
}

pub fn fig2_params() -> ModelParams {
    ModelParams::resonant(0.0, 1.0, 0.0, 1, 1.0).expect("fixed parameters are valid")
}

pub fn figure(id: u8, grid: &UniformGrid) -> Result<Figure> {
    match id {
        1 => figure1(grid),
        2 => figure2(grid),
        _ => Err(Error::InvalidInput(format!("unknown figure {id}; expected 1 or 2"))),
    }
}

pub fn figure1(grid: &UniformGrid) -> Result<Figure> {
    let xs = grid.points();
    let mut panels = Vec::new();
    for &t in &FIG1_TIMES {
        let mut curves = Vec::new();
        for &sigma in &[0.0, FIG1_SIGMA] {
            let r = kernel::fundamental(&fig1_params(sigma), t, 0.0)?;
            curves.push(Curve {
                label: format!("sigma={sigma}"),
                t,
                sigma,
                x: xs.clone(),
                values: r.values(&xs)?,
                atom_weight: r.atom_weight,
                atom_location: r.atom_center,
            });
        }
        panels.push(Panel {
            title: format!("t={t}"),
            curves,
        });
    }
    Ok(Figure { id: 1, panels })
}

pub fn figure2(grid: &UniformGrid) -> Result<Figure> {
    let xs = grid.points();
    let p = fig2_params();
    let mut panels = Vec::new();
    for (title, init) in [
        ("gaussian", InitialData::unit_gaussian(FIG2_A)),
        ("step", InitialData::Step { a: FIG2_A }),
    ] {
        let mut curves = Vec::new();
        for &t in &FIG2_TIMES {
            let e = density::evolve(&p, &init, t)?;
            curves.push(Curve {
                label: format!("t={t}"),
                t,
                sigma: 0.0,
                x: xs.clone(),
                values: e.values(&xs),
                atom_weight: 0.0,
                atom_location: 0.0,
            });
        }
        panels.push(Panel {
            title: title.to_string(),
            curves,
        });
    }
    Ok(Figure { id: 2, panels })
}

fn argmax(c: &Curve) -> (f64, f64) {
    c.x.iter().zip(&c.values).fold(
        (f64::NAN, f64::NEG_INFINITY),
        |acc, (&x, &v)| if v > acc.1 { (x, v) } else { acc },
    )
}

fn sup_diff(c: &Curve, f: &dyn Fn(f64) -> Result<f64>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (&x, &v) in c.x.iter().zip(&c.values) {
        worst = worst.max((v - f(x)?).abs());
    }
    Ok(worst)
}

/// Peak location and height, long-time limit and curve ordering.
pub fn figure1_structure(fig: &Figure) -> Result<Vec<StructureCheck>> {
    let mut out = Vec::new();
    let h = fig.panels[0].curves[0]
        .x
        .get(1)
        .map_or(0.0, |x1| x1 - fig.panels[0].curves[0].x[0]);
    for panel in &fig.panels {
        let (c0, cs) = (&panel.curves[0], &panel.curves[1]);
        let (x0, v0) = argmax(c0);
        let (xs_, vs) = argmax(cs);
        out.push(check(
            &format!("fig1 {}: peaks at the atom location", panel.title),
            (x0 - c0.atom_location).abs() <= h && (xs_ - cs.atom_location).abs() <= h,
            format!("argmax σ=0 at {x0}, σ>0 at {xs_}"),
        ));
        out.push(check(
            &format!("fig1 {}: diffusion lowers the peak", panel.title),
            vs < v0,
            format!("peak σ=0 {v0:.6}, σ>0 {vs:.6}"),
        ));
        if c0.t >= 50.0 {
            for c in [c0, cs] {
                let st = kernel::stationary_density(&fig1_params(c.sigma))?;
                let d = sup_diff(c, &|x| st.value(x))?;
                out.push(check(
                    &format!("fig1 {}: σ={} matches the stationary density", panel.title, c.sigma),
                    d <= 1e-6,
                    format!("sup diff {d:.3e}"),
                ));
            }
        }
    }
    let small = &fig.panels[0].curves[0];
    out.push(check(
        "fig1 t=0.5: atom weight e^{-λt}",
        (small.atom_weight - (-1.0f64).exp()).abs() < 1e-15,
        format!("{}", small.atom_weight),
    ));
    Ok(out)
}

/// Peak drift of the Gaussian family, step jump locations and the decay of
/// their amplitudes.
pub fn figure2_structure(fig: &Figure) -> Result<Vec<StructureCheck>> {
    let mut out = Vec::new();
    let p = fig2_params();
    let gauss = &fig.panels[0];
    let h = gauss.curves[0].x[1] - gauss.curves[0].x[0];
    for c in &gauss.curves {
        let (xm, _) = argmax(c);
        let want = FIG2_A * (-c.t).exp();
        out.push(check(
            &format!("fig2 gaussian t={}: peak at a e^(-βt)", c.t),
            (xm - want).abs() <= h,
            format!("argmax {xm}, expected {want:.4}"),
        ));
    }
    let last = gauss.curves.last().expect("three curves");
    let st = kernel::stationary_density(&p)?;
    let d = sup_diff(last, &|x| st.value(x))?;
    out.push(check(
        "fig2 gaussian t=10: close to the stationary density",
        d <= 1e-3,
        format!("sup diff {d:.3e}"),
    ));

    let mut prev_amp = f64::INFINITY;
    for &t in FIG2_TIMES.iter().filter(|&&t| t > 0.0) {
        let e = density::evolve_step(&p, FIG2_A, t)?;
        let rep = weak_discontinuity_report(&e);
        let jumps: Vec<_> = rep.iter().filter(|r| r.order == 0).collect();
        let d = (-t).exp();
        let expected = [(-FIG2_A - 0.5) * d, (-FIG2_A + 0.5) * d];
        let located = expected
            .iter()
            .all(|&l| jumps.iter().any(|j| (j.location - l).abs() <= 1e-10));
        out.push(check(
            &format!("fig2 step t={t}: jumps at (-a ± 1/2) e^(-βt)"),
            located,
            format!(
                "jump locations {:?}",
                jumps.iter().map(|j| j.location).collect::<Vec<_>>()
            ),
        ));
        out.push(check(
            &format!("fig2 step t={t}: four jump locations"),
            jumps.len() == 4,
            format!("{} jump locations found", jumps.len()),
        ));
        let amp = jumps.iter().map(|j| j.jump.abs()).fold(0.0, f64::max);
        out.push(check(
            &format!("fig2 step t={t}: jump amplitude decays"),
            amp < prev_amp && amp < 1.0,
            format!("max |jump| {amp:.6}"),
        ));
        prev_amp = amp;
    }
    Ok(out)
}

pub fn structure(fig: &Figure) -> Result<Vec<StructureCheck>> {
    match fig.id {
        1 => figure1_structure(fig),
        _ => figure2_structure(fig),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_one_shape() {
        let f = figure1(&default_grid(1)).unwrap();
        assert_eq!(f.panels.len(), 2);
        assert_eq!(f.panels[0].curves.len(), 2);
        let c = &f.panels[0].curves[0];
        assert!((c.values[200] - 0.5 * (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        let checks = figure1_structure(&f).unwrap();
        assert!(checks.iter().all(|c| c.passed), "{checks:#?}");
    }

    #[test]
    fn figure_two_shape() {
        let f = figure2(&default_grid(2)).unwrap();
        assert_eq!(f.panels.len(), 2);
        assert_eq!(f.panels[1].curves.len(), 3);
        let checks = figure2_structure(&f).unwrap();
        for c in &checks {
            if c.name.contains("four jump") {
                // only two locations exist; see the discontinuity report
                assert!(!c.passed);
            } else {
                assert!(c.passed, "{c:?}");
            }
        }
        assert!(figure(3, &default_grid(1)).is_err());
    }
}
