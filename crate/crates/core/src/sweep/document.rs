use serde::{Deserialize, Serialize};

use super::run::point_setup;
use super::{parse_preparation, Grid, Outputs, Series, SeriesKind, SweepError, SweepParameter, SweepSpec};
use crate::model::{validate_config, AuxBath, DiodeConfig, RawConfig};
use crate::solver::{AuxPreparation, MAX_EVOLVE_AUX_ATOMS};

/// On-disk run configuration. Device fields sit at the top level with the
/// same names as in [`RawConfig`]; `[aux_bath]`, `[sweep]`, `[outputs]` and
/// `[[series]]` are sections.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_aux: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_left: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_right: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_aux: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_lr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_la: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temp_left: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temp_right: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aux_bath: Option<AuxBath>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<OutputsSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<SeriesSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameter: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    #[serde(default)]
    pub detail: bool,
}

/// One curve. Unset fields inherit the top-level device; a different
/// `n_aux` replicates the first auxiliary atom.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_aux: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_left: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_right: Option<f64>,
    /// A preparation (see [`parse_preparation`]), `aux_bath` or `weak_aux_bath`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preparation: Option<String>,
}

impl ConfigDocument {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("document serializes")
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// Parse and fully validate a run configuration, including every grid point.
pub fn parse_run_config(text: &str) -> Result<SweepSpec, SweepError> {
    spec_from_document(parse_document(text)?)
}

/// Parse without validating.
pub fn parse_document(text: &str) -> Result<ConfigDocument, SweepError> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        SweepError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })
}

/// Validate a document, including every grid point.
pub fn spec_from_document(doc: ConfigDocument) -> Result<SweepSpec, SweepError> {
    let mut problems = Vec::new();

    let sweep = doc.sweep.clone().unwrap_or_default();
    if doc.sweep.is_none() {
        problems.push("missing [sweep] section".to_string());
    }
    let parameter = match sweep.parameter.as_deref() {
        Some(p) => match p.parse::<SweepParameter>() {
            Ok(p) => Some(p),
            Err(e) => {
                problems.push(format!("sweep.parameter: {e}"));
                None
            }
        },
        None => {
            problems.push("sweep.parameter is required".to_string());
            None
        }
    };
    let grid = match (sweep.min, sweep.max, sweep.count, &sweep.values) {
        (None, None, None, Some(v)) => Some(Grid::Values(v.clone())),
        (Some(min), Some(max), Some(count), None) => Some(Grid::Range { min, max, count }),
        (_, _, _, Some(_)) => {
            problems.push("sweep: give either values or min/max/count, not both".to_string());
            None
        }
        _ => {
            for (field, present) in [("min", sweep.min.is_some()), ("max", sweep.max.is_some()), ("count", sweep.count.is_some())] {
                if !present {
                    problems.push(format!("sweep.{field} is required (or give sweep.values)"));
                }
            }
            None
        }
    };
    if let Some(g) = &grid {
        if g.len() < 2 {
            problems.push(format!("sweep grid needs at least 2 points, got {}", g.len()));
        }
        if let Some(v) = g.values().iter().find(|v| !v.is_finite()) {
            problems.push(format!("sweep grid value {v} is not finite"));
        }
        if let Grid::Range { min, max, .. } = g {
            if !(min < max) {
                problems.push(format!("sweep.min = {min} must be below sweep.max = {max}"));
            }
        }
    }
    let first = grid.as_ref().and_then(|g| g.values().first().copied());
    let base = raw_device(&doc, parameter.zip(first), &mut problems);
    if !problems.is_empty() {
        return Err(SweepError::Validation(problems));
    }
    let (parameter, grid) = (parameter.expect("checked"), grid.expect("checked"));
    if let Err(e) = validate_config(base.clone()) {
        return Err(SweepError::Validation(vec![format!("device: {e}")]));
    }

    let sections = if doc.series.is_empty() {
        vec![SeriesSection::default()]
    } else {
        doc.series.clone()
    };
    let mut series = Vec::with_capacity(sections.len());
    for (k, s) in sections.iter().enumerate() {
        match build_series(&base, s, parameter) {
            Ok(built) => series.push(built),
            Err(e) => problems.push(format!("series {k}: {e}")),
        }
    }
    if !problems.is_empty() {
        return Err(SweepError::Validation(problems));
    }

    let values = grid.values();
    match parameter {
        SweepParameter::Time => {
            if values.windows(2).any(|w| w[1] < w[0]) {
                problems.push("time grid must be nondecreasing".into());
            }
            for (k, s) in series.iter().enumerate() {
                if s.config.n_aux() > MAX_EVOLVE_AUX_ATOMS {
                    problems.push(format!(
                        "series {k}: time evolution supports at most {MAX_EVOLVE_AUX_ATOMS} auxiliary atoms"
                    ));
                }
                if !matches!(s.kind, SeriesKind::Prepared(_)) {
                    problems.push(format!("series {k}: time evolution needs an explicit preparation"));
                }
            }
        }
        _ => {
            for (k, s) in series.iter().enumerate() {
                for &v in &values {
                    if let Err(e) = point_setup(s, parameter, v) {
                        problems.push(format!("series {k}, {parameter} = {v}: {e}"));
                    }
                }
            }
        }
    }
    if !problems.is_empty() {
        return Err(SweepError::Validation(problems));
    }

    Ok(SweepSpec {
        parameter,
        grid,
        series,
        outputs: Outputs {
            detail: doc.outputs.as_ref().is_some_and(|o| o.detail),
        },
        preset: doc.preset.clone(),
        notes: doc.notes.clone(),
        document: doc,
    })
}

impl ConfigDocument {
    /// The top-level device alone, ignoring any sweep or series.
    pub fn device_config(&self) -> Result<DiodeConfig, SweepError> {
        let mut problems = Vec::new();
        let raw = raw_device(self, None, &mut problems);
        if !problems.is_empty() {
            return Err(SweepError::Validation(problems));
        }
        validate_config(raw).map_err(|e| SweepError::Validation(vec![format!("device: {e}")]))
    }
}

/// Device fields with every missing one recorded. The swept field may be
/// omitted and then takes the first grid value.
fn raw_device(doc: &ConfigDocument, swept: Option<(SweepParameter, f64)>, problems: &mut Vec<String>) -> RawConfig {
    let mut field = |name: &str, value: Option<f64>, parameter: Option<SweepParameter>| -> f64 {
        match (value, swept) {
            (Some(v), _) => v,
            (None, Some((p, first))) if Some(p) == parameter => first,
            (None, _) => {
                problems.push(format!("{name} is required"));
                f64::NAN
            }
        }
    };
    let fixed = None;
    let omega_left = field("omega_left", doc.omega_left, fixed);
    let omega_right = field("omega_right", doc.omega_right, Some(SweepParameter::OmegaRight));
    let g_lr = field("g_lr", doc.g_lr, fixed);
    let gamma = field("gamma", doc.gamma, fixed);
    let temp_left = field("temp_left", doc.temp_left, Some(SweepParameter::TempLeft));
    let temp_right = field("temp_right", doc.temp_right, fixed);
    let omega_aux = doc.omega_aux.clone().unwrap_or_default();
    let g_la = doc.g_la.clone().unwrap_or_default();
    RawConfig {
        n_aux: doc.n_aux.unwrap_or(omega_aux.len()),
        omega_left,
        omega_right,
        omega_aux,
        g_lr,
        g_la,
        gamma,
        temp_left,
        temp_right,
        aux_bath: doc.aux_bath,
    }
}

fn build_series(base: &RawConfig, s: &SeriesSection, parameter: SweepParameter) -> Result<Series, String> {
    let mut raw = base.clone();
    if let Some(n) = s.n_aux {
        if n != raw.n_aux {
            if n > 0 && raw.omega_aux.is_empty() {
                return Err(format!("n_aux = {n} needs omega_aux and g_la at the top level"));
            }
            let (w, g) = (raw.omega_aux.first().copied(), raw.g_la.first().copied());
            raw.n_aux = n;
            raw.omega_aux = vec![w.unwrap_or(0.0); n];
            raw.g_la = vec![g.unwrap_or(0.0); n];
        }
    }
    if let Some(w) = s.omega_left {
        raw.omega_left = w;
    }
    if let Some(w) = s.omega_right {
        raw.omega_right = w;
    }
    let text = s.preparation.as_deref();
    let kind = match text {
        Some("aux_bath") => SeriesKind::AuxBath,
        Some("weak_aux_bath") => SeriesKind::WeakAuxBathLimit,
        Some(p) => SeriesKind::Prepared(parse_preparation(p)?),
        None if raw.aux_bath.is_some() => SeriesKind::AuxBath,
        None => {
            log::info!("series without a preparation defaults to all-ground");
            SeriesKind::Prepared(AuxPreparation::AllGround)
        }
    };
    if matches!(kind, SeriesKind::Prepared(_)) {
        // The bath is only meaningful for the two bath series kinds.
        raw.aux_bath = None;
    } else if raw.aux_bath.is_none() {
        return Err("aux_bath series need an [aux_bath] section".into());
    }
    let config = validate_config(raw).map_err(|e| e.to_string())?;
    if let SeriesKind::Prepared(prep) = &kind {
        let fixed_n = !matches!(prep, AuxPreparation::AllExcited | AuxPreparation::AllGround);
        if parameter == SweepParameter::NAux && fixed_n {
            return Err("n_aux sweeps accept only 'excited' or 'ground'".into());
        }
        if parameter != SweepParameter::NAux && !(parameter == SweepParameter::P1 && config.n_aux() == 1) {
            prep.weights(config.n_aux()).map_err(|e| e.to_string())?;
        }
    }
    if parameter == SweepParameter::P1 && config.n_aux() > 1 {
        return Err("p_1 sweeps need n_aux = 0 or 1".into());
    }
    let label = s.label.clone().unwrap_or_else(|| default_label(&config, &kind));
    Ok(Series { label, config, kind })
}

fn default_label(config: &DiodeConfig, kind: &SeriesKind) -> String {
    let what = match kind {
        SeriesKind::Prepared(p) => p.label(),
        SeriesKind::AuxBath => "aux_bath".into(),
        SeriesKind::WeakAuxBathLimit => "weak_aux_bath".into(),
    };
    format!("N={} {what}", config.n_aux())
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG3: &str = r#"
omega_left = 5.0
omega_right = 3.0
n_aux = 1
omega_aux = [2.0]
g_lr = 1.0
g_la = [0.5]
gamma = 0.001
temp_left = 2.0
temp_right = 1.0

[sweep]
parameter = "time"
min = 0.0
max = 8000.0
count = 11

[[series]]
preparation = "pure:0.5"

[[series]]
preparation = "mixed:0.5"
"#;

    #[test]
    fn minimal_time_document() {
        let spec = parse_run_config(FIG3).unwrap();
        assert_eq!(spec.parameter, SweepParameter::Time);
        assert_eq!(spec.series.len(), 2);
        assert_eq!(spec.grid.len(), 11);
        assert_eq!(spec.series[0].label, "N=1 pure");
    }

    #[test]
    fn missing_field_is_named() {
        let text = FIG3.replace("temp_right = 1.0\n", "");
        match parse_run_config(&text) {
            Err(SweepError::Validation(p)) => assert!(p.iter().any(|m| m.contains("temp_right")), "{p:?}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn every_problem_is_listed() {
        let text = FIG3.replace("temp_right = 1.0\n", "").replace("gamma = 0.001\n", "");
        match parse_run_config(&text) {
            Err(SweepError::Validation(p)) => assert_eq!(p.len(), 2, "{p:?}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let text = FIG3.replace("gamma = 0.001", "gamma = = 0.001");
        match parse_run_config(&text) {
            Err(SweepError::Parse { line, .. }) => assert_eq!(line, 8),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn grid_points_are_prevalidated() {
        // ω_L − 2 g_LR − 2 N g_La turns negative between N = 5 and N = 9.
        let text = r#"
omega_left = 4.0
omega_right = 3.0
n_aux = 1
omega_aux = [2.0]
g_lr = 1.0
g_la = [0.15]
gamma = 0.001
temp_left = 1.0
temp_right = 0.5
[sweep]
parameter = "n_aux"
values = [1.0, 5.0, 9.0]
[[series]]
preparation = "ground"
"#;
        match parse_run_config(text) {
            Err(SweepError::Validation(p)) => {
                assert!(p.iter().any(|m| m.contains("n_aux = 9")), "{p:?}");
                assert!(!p.iter().any(|m| m.contains("n_aux = 5")));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn document_round_trips_through_toml() {
        let spec = parse_run_config(FIG3).unwrap();
        let again = parse_run_config(&spec.document.to_toml()).unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            parse_run_config(&format!("colour = 1\n{FIG3}")),
            Err(SweepError::Parse { .. })
        ));
    }
}
