use super::document::spec_from_document;
use super::{ConfigDocument, SeriesSection, SweepError, SweepSection, SweepSpec};
use crate::model::{AuxBath, MAX_AUX_ATOMS};

pub const FIGURE_IDS: [&str; 15] = [
    "2a", "2b", "2c", "2d", "2e", "2f", "3", "4", "5", "5a", "5b", "6", "7", "8", "p1",
];

#[allow(clippy::too_many_arguments)]
fn device(
    omega_left: f64,
    omega_right: f64,
    n_aux: usize,
    omega_aux: f64,
    g_lr: f64,
    g_la: f64,
    gamma: f64,
    temp_left: f64,
    temp_right: f64,
) -> ConfigDocument {
    ConfigDocument {
        n_aux: Some(n_aux),
        omega_left: Some(omega_left),
        omega_right: Some(omega_right),
        omega_aux: Some(vec![omega_aux; n_aux]),
        g_lr: Some(g_lr),
        g_la: Some(vec![g_la; n_aux]),
        gamma: Some(gamma),
        temp_left: Some(temp_left),
        temp_right: Some(temp_right),
        ..ConfigDocument::default()
    }
}

fn range(parameter: &str, min: f64, max: f64, count: usize) -> Option<SweepSection> {
    Some(SweepSection {
        parameter: Some(parameter.into()),
        min: Some(min),
        max: Some(max),
        count: Some(count),
        values: None,
    })
}

fn series(label: String, n_aux: usize, preparation: &str) -> SeriesSection {
    SeriesSection {
        label: Some(label),
        n_aux: Some(n_aux),
        preparation: Some(preparation.into()),
        ..SeriesSection::default()
    }
}

fn bare() -> SeriesSection {
    series("N=0".into(), 0, "ground")
}

/// `N = 1..=10` with every auxiliary atom in `state`.
fn ladder(state: &str) -> impl Iterator<Item = SeriesSection> + '_ {
    (1..=MAX_AUX_ATOMS).map(move |n| series(format!("N={n} {state}"), n, state))
}

fn with_frequencies(mut s: SeriesSection, panel: &str, omega_left: f64, omega_right: f64) -> SeriesSection {
    s.label = s.label.map(|l| format!("{panel} {l}"));
    s.omega_left = Some(omega_left);
    s.omega_right = Some(omega_right);
    s
}

const T_R: f64 = 0.5;

fn document(id: &str) -> Option<ConfigDocument> {
    let t_grid = range("temp_left", 0.525, 1.0, 20);
    let doc = match id {
        "2a" | "2b" | "2c" | "2d" | "2e" | "2f" => {
            let (wl, wr) = match id {
                "2a" | "2b" => (4.0, 4.0),
                "2c" | "2d" => (4.0, 2.0),
                _ => (2.0, 4.0),
            };
            let state = if matches!(id, "2a" | "2c" | "2e") { "excited" } else { "ground" };
            ConfigDocument {
                sweep: range("temp_left", 0.5, 1.0, 51),
                series: std::iter::once(bare()).chain(ladder(state)).collect(),
                ..device(wl, wr, 1, 2.0, 0.1, 0.05, 0.001, 0.5, T_R)
            }
        }
        "3" => ConfigDocument {
            sweep: range("time", 0.0, 8000.0, 401),
            series: [0.2, 0.5, 0.8]
                .iter()
                .flat_map(|p| {
                    [
                        series(format!("pure |alpha|^2={p}"), 1, &format!("pure:{p}")),
                        series(format!("mixed p_1={p}"), 1, &format!("mixed:{p}")),
                    ]
                })
                .collect(),
            ..device(5.0, 3.0, 1, 2.0, 1.0, 0.5, 0.001, 2.0, 1.0)
        },
        "4" => ConfigDocument {
            sweep: t_grid,
            series: std::iter::once(bare()).chain(ladder("excited")).chain(ladder("ground")).collect(),
            ..device(4.0, 4.0, 1, 2.0, 0.2, 0.05, 0.001, 0.525, T_R)
        },
        "5" | "5a" | "5b" => {
            let panels: &[(&str, f64, f64)] = match id {
                "5a" => &[("a", 4.0, 2.0)],
                "5b" => &[("b", 2.0, 4.0)],
                _ => &[("a", 4.0, 2.0), ("b", 2.0, 4.0)],
            };
            let series = panels
                .iter()
                .flat_map(|&(panel, wl, wr)| {
                    std::iter::once(bare())
                        .chain(ladder("excited"))
                        .chain(ladder("ground"))
                        .map(move |s| with_frequencies(s, panel, wl, wr))
                })
                .collect();
            let (_, wl, wr) = panels[0];
            ConfigDocument {
                sweep: t_grid,
                series,
                notes: vec!["panel frequencies assumed: (a) omega_left=4, omega_right=2; (b) omega_left=2, omega_right=4".into()],
                ..device(wl, wr, 1, 2.0, 0.1, 0.05, 0.001, 0.525, T_R)
            }
        }
        "6" => ConfigDocument {
            sweep: range("omega_right", 3.0, 5.0, 81),
            series: std::iter::once(bare()).chain(ladder("excited")).chain(ladder("ground")).collect(),
            ..device(4.0, 3.0, 1, 2.0, 0.2, 0.02, 0.001, 0.3, T_R)
        },
        "7" => ConfigDocument {
            sweep: t_grid,
            series: ["eee", "eeg", "ege", "gee", "egg", "geg", "gge", "ggg"]
                .iter()
                .map(|m| series(format!("|{m}>"), 3, &format!("mask:{m}")))
                .collect(),
            ..device(4.0, 2.0, 3, 2.0, 0.1, 0.1, 0.001, 0.525, T_R)
        },
        "8" => {
            let gamma = 0.001;
            ConfigDocument {
                sweep: t_grid,
                aux_bath: Some(AuxBath {
                    gamma_aux: gamma * gamma,
                    temp_aux: 0.8,
                }),
                series: vec![
                    series("aux bath gamma_1=gamma^2".into(), 1, "aux_bath"),
                    series("no aux bath".into(), 1, "weak_aux_bath"),
                ],
                notes: vec![
                    "the bath-free series weights the auxiliary atom as a vanishing auxiliary bath would".into(),
                ],
                ..device(4.0, 1.0, 1, 5.0, 0.1, 0.1, gamma, 0.525, T_R)
            }
        }
        "p1" => ConfigDocument {
            sweep: range("p_1", 0.0, 1.0, 21),
            series: vec![series("N=1".into(), 1, "mixed:0"), bare()],
            notes: vec!["omega_left=4 and omega_right=2 are assumed".into()],
            ..device(4.0, 2.0, 1, 2.0, 0.1, 0.1, 0.001, 0.3, T_R)
        },
        _ => return None,
    };
    Some(ConfigDocument {
        preset: Some(id.to_string()),
        ..doc
    })
}

/// Sweep behind one of the preset figures.
pub fn figure_preset(id: &str) -> Result<SweepSpec, SweepError> {
    let id = id.trim().to_ascii_lowercase();
    let doc = document(&id).ok_or(SweepError::UnknownFigure(id))?;
    spec_from_document(doc)
}
