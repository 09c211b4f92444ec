//! Model definition files.
//!
//! Models are declared in TOML; `docs/model_schema.md` in the repository
//! root fixes the field names. Unknown fields are rejected, and any
//! distribution that fails validation (non-normalized, negative entries,
//! out-of-range responses) rejects the whole file rather than being
//! silently repaired.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{
    validate_model, HvModel, InstrumentDistribution, ModelVariant, ResponseTables,
    SourceDistribution, SupportSpec, Table2,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    name: String,
    variant: ModelVariant,
    support: SupportSection,
    source: SourceSection,
    instruments: InstrumentsSection,
    responses: ResponsesSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SupportSection {
    lambda1: usize,
    lambda2: usize,
    lambda_x: usize,
    lambda_y: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceSection {
    /// Row-major |Λ1| × |Λ2| joint probabilities.
    probabilities: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstrumentsSection {
    model1: Option<Model1Section>,
    model3: Option<Model3Section>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Model1Section {
    px1: Vec<f64>,
    px2: Vec<f64>,
    py1: Vec<f64>,
    py2: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Model3Section {
    pxy11: Vec<Vec<f64>>,
    pxy12: Vec<Vec<f64>>,
    pxy21: Vec<Vec<f64>>,
    pxy22: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResponsesSection {
    a1: Vec<Vec<i64>>,
    a2: Vec<Vec<i64>>,
    b1: Vec<Vec<i64>>,
    b2: Vec<Vec<i64>>,
}

fn response_table(tag: &str, rows: Vec<Vec<i64>>) -> Result<Table2<i8>> {
    let narrowed: Vec<Vec<i8>> = rows
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|v| {
                    i8::try_from(v).map_err(|_| {
                        Error::InvalidInput(format!("response {tag} entry {v} is not an i8"))
                    })
                })
                .collect::<Result<Vec<i8>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Table2::from_rows(narrowed)
}

/// Parses a model definition without validating it.
pub fn parse_model_str(text: &str, origin: &str) -> Result<HvModel<f64>> {
    let file: ModelFile = toml::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })?;

    let instruments = match (file.variant, file.instruments.model1, file.instruments.model3) {
        (ModelVariant::Model1, Some(m1), None) => InstrumentDistribution::Model1 {
            px: [m1.px1, m1.px2],
            py: [m1.py1, m1.py2],
        },
        (ModelVariant::Model3, None, Some(m3)) => InstrumentDistribution::Model3 {
            pxy: [
                Table2::from_rows(m3.pxy11)?,
                Table2::from_rows(m3.pxy12)?,
                Table2::from_rows(m3.pxy21)?,
                Table2::from_rows(m3.pxy22)?,
            ],
        },
        (variant, m1, m3) => {
            return Err(Error::Parse {
                path: origin.to_string(),
                message: format!(
                    "variant {variant:?} requires exactly the matching [instruments.*] table \
                     (model1 present: {}, model3 present: {})",
                    m1.is_some(),
                    m3.is_some()
                ),
            })
        }
    };

    Ok(HvModel {
        name: file.name,
        support: SupportSpec {
            lambda1: file.support.lambda1,
            lambda2: file.support.lambda2,
            lambda_x: file.support.lambda_x,
            lambda_y: file.support.lambda_y,
        },
        source: SourceDistribution {
            probs: Table2::from_rows(file.source.probabilities)?,
        },
        instruments,
        responses: ResponseTables {
            a: [
                response_table("a1", file.responses.a1)?,
                response_table("a2", file.responses.a2)?,
            ],
            b: [
                response_table("b1", file.responses.b1)?,
                response_table("b2", file.responses.b2)?,
            ],
        },
    })
}

/// Parses and validates a model definition, rejecting invalid models.
pub fn load_model_str(text: &str, origin: &str) -> Result<HvModel<f64>> {
    let model = parse_model_str(text, origin)?;
    let report = validate_model(&model);
    if !report.is_ok() {
        return Err(Error::InvalidModel {
            name: model.name,
            report,
        });
    }
    Ok(model)
}

/// Loads and validates a model definition file.
pub fn load_model(path: &Path) -> Result<HvModel<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    load_model_str(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "tiny"
variant = "model1"

[support]
lambda1 = 1
lambda2 = 1
lambda_x = 1
lambda_y = 1

[source]
probabilities = [[1.0]]

[instruments.model1]
px1 = [1.0]
px2 = [1.0]
py1 = [1.0]
py2 = [1.0]

[responses]
a1 = [[1]]
a2 = [[1]]
b1 = [[-1]]
b2 = [[-1]]
"#;

    #[test]
    fn minimal_model_loads() {
        let m = load_model_str(MINIMAL, "test").unwrap();
        assert_eq!(m.name, "tiny");
        assert_eq!(m.support.lambda1, 1);
    }

    #[test]
    fn unknown_field_is_rejected() {
        let text = MINIMAL.replace("name = \"tiny\"", "name = \"tiny\"\nextra = 3");
        let err = load_model_str(&text, "test").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
        assert!(err.to_string().contains("unknown field"), "{err}");
    }

    #[test]
    fn non_normalized_model_is_rejected() {
        let text = MINIMAL.replace("probabilities = [[1.0]]", "probabilities = [[0.999]]");
        let err = load_model_str(&text, "test").unwrap_err();
        assert!(matches!(err, Error::InvalidModel { .. }), "{err}");
    }

    #[test]
    fn mismatched_variant_is_rejected() {
        let text = MINIMAL.replace("variant = \"model1\"", "variant = \"model3\"");
        assert!(load_model_str(&text, "test").is_err());
    }

    #[test]
    fn ragged_table_is_rejected() {
        let text = MINIMAL.replace("a1 = [[1]]", "a1 = [[1], [1, 1]]");
        assert!(load_model_str(&text, "test").is_err());
    }
}
