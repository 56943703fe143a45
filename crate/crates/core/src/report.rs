//! Machine-readable reports.
//!
//! Every real number is written as a decimal string with 17 significant
//! digits, which round-trips any `f64` exactly. Infinite bounds are written
//! as `"inf"`.

use serde::{Deserialize, Serialize};

use crate::sharp_bounds::{BoundReport, MomentQuery};

/// Formats `x` with 17 significant digits, positional notation for
/// moderate magnitudes and exponent notation otherwise.
pub fn format_decimal(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // the rounded value can gain a digit (9.99.. -> 10.0); re-derive
        let s = if s.trim_start_matches('-').split('.').next().map_or(0, str::len) > (exp + 1).max(1) as usize
            && decimals > 0
        {
            format!("{x:.prec$}", prec = decimals - 1)
        } else {
            s
        };
        trim_fraction(s)
    } else {
        let s = format!("{x:.16e}");
        let (mant, e) = s.split_once('e').unwrap_or((&s, "0"));
        format!("{}e{e}", trim_fraction(mant.to_string()))
    }
}

fn trim_fraction(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn parse_decimal(s: &str) -> Result<f64, String> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        _ => s.parse::<f64>().map_err(|e| format!("bad decimal {s:?}: {e}")),
    }
}

/// `#[serde(with = "decimal")]` for `f64` fields.
pub mod decimal {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_decimal(*x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_decimal(&s).map_err(D::Error::custom)
    }

    pub mod vec {
        use serde::{de::Error, ser::SerializeSeq, Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(xs.len()))?;
            for x in xs {
                seq.serialize_element(&super::super::format_decimal(*x))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Vec::<String>::deserialize(d)?
                .iter()
                .map(|s| super::super::parse_decimal(s).map_err(D::Error::custom))
                .collect()
        }
    }
}

/// `#[serde(with = "decimal_opt")]` for `Option<f64>` fields; `None` is `null`.
pub mod decimal_opt {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => s.serialize_str(&super::format_decimal(*v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| super::parse_decimal(&s).map_err(D::Error::custom))
            .transpose()
    }
}

/// Oracle cross-check attached to a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    /// `exact` or `mc`.
    pub method: String,
    /// Exact oracle moment of the extremal law, or the Monte Carlo mean.
    #[serde(with = "decimal")]
    pub value: f64,
    #[serde(with = "decimal_opt")]
    pub stderr: Option<f64>,
    pub trials: Option<u64>,
    /// `(bound - value) / bound`.
    #[serde(with = "decimal")]
    pub relative_gap: f64,
}

/// Everything `osbound bound` prints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEnvelope {
    pub query: MomentQuery,
    #[serde(flatten)]
    pub report: BoundReport,
    pub verification: Option<Verification>,
    pub tool_version: String,
    pub seed: u64,
}

impl ReportEnvelope {
    pub fn new(query: MomentQuery, report: BoundReport, seed: u64) -> Self {
        Self {
            query,
            report,
            verification: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    pub const CSV_HEADER: &'static str = "model,n,k,alpha,means,bound,constant_a,rho,regime,\
attainability,snapped,extremal,verify_method,verify_value,verify_stderr,verify_gap,tool_version,seed";

    /// One CSV data row matching [`Self::CSV_HEADER`]. Means are
    /// `;`-separated; the extremal descriptor is its compact JSON, quoted.
    pub fn to_csv_row(&self) -> String {
        let opt = |x: Option<f64>| x.map(format_decimal).unwrap_or_default();
        let q = &self.query;
        let r = &self.report;
        let means: Vec<String> = q.means.iter().map(|m| format_decimal(*m)).collect();
        let extremal = r
            .extremal
            .as_ref()
            .map(|e| csv_quote(&serde_json::to_string(e).expect("extremal serializes")))
            .unwrap_or_default();
        let v = self.verification.as_ref();
        [
            enum_tag(&q.model),
            q.n.to_string(),
            q.k.to_string(),
            format_decimal(q.alpha),
            means.join(";"),
            format_decimal(r.bound),
            opt(r.constant_a),
            opt(r.rho),
            enum_tag(&r.regime),
            r.attainability.as_ref().map(enum_tag).unwrap_or_default(),
            r.snapped.to_string(),
            extremal,
            v.map(|v| v.method.clone()).unwrap_or_default(),
            opt(v.map(|v| v.value)),
            opt(v.and_then(|v| v.stderr)),
            opt(v.map(|v| v.relative_gap)),
            self.tool_version.clone(),
            self.seed.to_string(),
        ]
        .join(",")
    }
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// snake_case tag of a unit enum variant, as serde writes it.
pub fn enum_tag<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        other => panic!("expected a unit variant, got {other:?}"),
    }
}
