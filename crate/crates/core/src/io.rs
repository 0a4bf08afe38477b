//! File formats.
//!
//! Structured artifacts are JSON, samples and grids are CSV. An infinite
//! length (or density end point) is written as the string `"inf"`. Floats
//! are written with 17 significant digits so that outputs are byte-stable.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::canonical::{HPiece, Hamiltonian};
use crate::coeffs::{Atom, DensityPiece, Length, Measure, RawString, StringSpec};
use crate::converge::{HamiltonianConvergenceReport, MConvergenceReport, StringConvergenceReport};
use crate::error::{Error, Result};
use crate::propagate::SystemState;
use crate::scalar::{cx, Cx, Real};
use crate::spectral::SpectralMeasure;
use crate::weyl::{Classification, WeylSample};

/// JSON formatter writing every float as `d.dddddddddddddddde±x`.
struct Fixed17;

impl serde_json::ser::Formatter for Fixed17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        write!(w, "{}", fmt_f64(value))
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> std::io::Result<()> {
        write!(w, "{}", fmt_f64(value as f64))
    }
}

/// 17 significant digits; `inf`, `-inf` and `nan` for non-finite values.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

/// Serializes with [`fmt_f64`] floats and a trailing newline.
pub fn to_json<S: Serialize>(value: &S) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed17);
    value.serialize(&mut ser).expect("in-memory serialization");
    buf.push(b'\n');
    String::from_utf8(buf).expect("utf-8 json")
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
enum Num {
    Value(f64),
    Token(Token),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
enum Token {
    #[serde(rename = "inf")]
    Inf,
}

impl Num {
    fn get(self) -> f64 {
        match self {
            Num::Value(v) => v,
            Num::Token(Token::Inf) => f64::INFINITY,
        }
    }
}

fn num(v: f64) -> Value {
    if v == f64::INFINITY {
        Value::from("inf")
    } else {
        json!(v)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomDto {
    x: f64,
    mass: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityDto {
    a: f64,
    b: Num,
    value: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureDto {
    #[serde(default)]
    atoms: Vec<AtomDto>,
    #[serde(default)]
    density: Vec<DensityDto>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDto {
    #[serde(rename = "L")]
    l: Num,
    #[serde(default)]
    omega: MeasureDto,
    #[serde(default)]
    upsilon: MeasureDto,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PieceDto {
    len: Num,
    h11: f64,
    h12: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HamiltonianDto {
    pieces: Vec<PieceDto>,
}

fn parse_err(e: impl std::fmt::Display) -> Error {
    Error::Parse(e.to_string())
}

fn measure_from<T: Real>(m: MeasureDto) -> Measure<T> {
    Measure {
        atoms: m
            .atoms
            .into_iter()
            .map(|a| Atom {
                x: T::lit(a.x),
                mass: T::lit(a.mass),
            })
            .collect(),
        density: m
            .density
            .into_iter()
            .map(|p| DensityPiece {
                a: T::lit(p.a),
                b: T::lit(p.b.get()),
                value: T::lit(p.value),
            })
            .collect(),
    }
}

fn measure_json<T: Real>(m: &Measure<T>) -> Value {
    json!({
        "atoms": m.atoms.iter().map(|a| json!({"x": a.x.as_f64(), "mass": a.mass.as_f64()})).collect::<Vec<_>>(),
        "density": m.density.iter().map(|p| json!({"a": p.a.as_f64(), "b": num(p.b.as_f64()), "value": p.value.as_f64()})).collect::<Vec<_>>(),
    })
}

/// Parses and validates a string spec.
pub fn parse_spec<T: Real>(text: &str) -> Result<StringSpec<T>> {
    let dto: SpecDto = serde_json::from_str(text).map_err(parse_err)?;
    StringSpec::new(RawString {
        length: Length::from_value(T::lit(dto.l.get())),
        omega: measure_from(dto.omega),
        upsilon: measure_from(dto.upsilon),
    })
}

pub fn spec_to_json<T: Real>(spec: &StringSpec<T>) -> String {
    to_json(&json!({
        "L": num(spec.length().value().as_f64()),
        "omega": measure_json(spec.omega()),
        "upsilon": measure_json(spec.upsilon()),
    }))
}

/// Parses a Hamiltonian; `h22 = 1 - h11` and `det >= 0` are re-validated.
pub fn parse_hamiltonian<T: Real>(text: &str) -> Result<Hamiltonian<T>> {
    let dto: HamiltonianDto = serde_json::from_str(text).map_err(parse_err)?;
    Hamiltonian::new(
        dto.pieces
            .into_iter()
            .map(|p| HPiece {
                len: T::lit(p.len.get()),
                h11: T::lit(p.h11),
                h12: T::lit(p.h12),
            })
            .collect(),
    )
}

pub fn hamiltonian_to_json<T: Real>(h: &Hamiltonian<T>) -> String {
    let pieces: Vec<Value> = h
        .pieces()
        .iter()
        .map(|p| json!({"len": num(p.len.as_f64()), "h11": p.h11.as_f64(), "h12": p.h12.as_f64()}))
        .collect();
    to_json(&json!({ "pieces": pieces }))
}

pub fn spectral_measure_to_json<T: Real>(mu: &SpectralMeasure<T>) -> String {
    let atoms: Vec<Value> = mu
        .atoms
        .iter()
        .map(|a| json!({"lambda": a.lambda.as_f64(), "mass": a.mass.as_f64()}))
        .collect();
    let mut v = json!({
        "atoms": atoms,
        "epsilon_used": mu.epsilon_used.iter().map(|e| e.as_f64()).collect::<Vec<_>>(),
    });
    if !mu.continuous_samples.is_empty() {
        v["continuous_samples"] = mu
            .continuous_samples
            .iter()
            .map(|(l, d)| json!([l.as_f64(), d.as_f64()]))
            .collect();
    }
    to_json(&v)
}

pub fn classification_to_json<T: Real>(c: &Classification<T>) -> String {
    to_json(&json!({
        "herglotz": c.herglotz,
        "stieltjes": c.stieltjes,
        "nonneg_spectrum_predicted": c.nonneg_spectrum_predicted,
        "stieltjes_predicted": c.stieltjes_predicted,
        "min_im_m": c.min_im_m.as_f64(),
        "min_im_zm": c.min_im_zm.as_f64(),
        "max_symmetry_error": c.max_symmetry_error.as_f64(),
        "tol": c.tol.as_f64(),
        "grid_points": c.grid_points,
    }))
}

fn table<T: Real>(rows: &[Vec<T>]) -> Value {
    rows.iter()
        .map(|r| r.iter().map(|v| v.as_f64()).collect::<Vec<_>>())
        .collect()
}

fn list<T: Real>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

pub fn string_report_json<T: Real>(r: &StringConvergenceReport<T>) -> Value {
    json!({
        "xs": list(&r.xs),
        "sigma_table": table(&r.sigma_table),
        "sigma_max": list(&r.sigma_max),
        "bounded": r.bounded,
        "bounded_sup": r.bounded_sup.as_f64(),
        "w_integral_table": table(&r.w_integral_table),
        "sigma_integral_table": table(&r.sigma_integral_table),
        "decay": list(&r.decay),
        "verdict": r.verdict.as_str(),
        "margin": r.margin.as_f64(),
        "note": r.note,
    })
}

pub fn m_report_json<T: Real>(r: &MConvergenceReport<T>) -> Value {
    json!({
        "grid": r.grid.iter().map(|z| [z.re.as_f64(), z.im.as_f64()]).collect::<Vec<_>>(),
        "values": list(&r.values),
        "verdict": r.verdict.as_str(),
        "margin": r.margin.as_f64(),
    })
}

pub fn hamiltonian_report_json<T: Real>(r: &HamiltonianConvergenceReport<T>) -> Value {
    json!({
        "ss": list(&r.ss),
        "limit_table": table(&r.limit_table),
        "infinity_table": table(&r.infinity_table),
        "limit_decay": list(&r.limit_decay),
        "infinity_decay": list(&r.infinity_decay),
        "verdict": r.verdict.as_str(),
        "margin": r.margin.as_f64(),
    })
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

/// `re_z,im_z,re_m,im_m,trunc_x,est_err`
pub fn m_samples_csv<T: Real>(samples: &[WeylSample<T>]) -> String {
    let mut w = csv_writer();
    w.write_record(["re_z", "im_z", "re_m", "im_m", "trunc_x", "est_err"])
        .expect("in-memory csv");
    for s in samples {
        let row = [s.z.re, s.z.im, s.m.re, s.m.im, s.truncation_x, s.est_error];
        w.write_record(row.iter().map(|v| fmt_f64(v.as_f64())))
            .expect("in-memory csv");
    }
    finish(w)
}

/// `x,re_f,im_f,re_quasi,im_quasi`
pub fn trajectory_csv<T: Real>(states: &[SystemState<T>]) -> String {
    let mut w = csv_writer();
    w.write_record(["x", "re_f", "im_f", "re_quasi", "im_quasi"])
        .expect("in-memory csv");
    for s in states {
        let row = [s.x, s.f.re, s.f.im, s.quasi.re, s.quasi.im];
        w.write_record(row.iter().map(|v| fmt_f64(v.as_f64())))
            .expect("in-memory csv");
    }
    finish(w)
}

/// Rows `re_z, im_z`; a non-numeric first row is taken as a header.
pub fn parse_grid<T: Real>(text: &str) -> Result<Vec<Cx<T>>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(parse_err)?;
        if rec.len() != 2 {
            return Err(Error::Parse(format!(
                "grid row {}: expected 2 fields",
                i + 1
            )));
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => out.push(cx(T::lit(v[0]), T::lit(v[1]))),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::Parse(format!("grid row {}: {e}", i + 1))),
        }
    }
    Ok(out)
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn read_spec<T: Real>(path: &Path) -> Result<StringSpec<T>> {
    parse_spec(&read_text(path)?)
}

pub fn read_hamiltonian<T: Real>(path: &Path) -> Result<Hamiltonian<T>> {
    parse_hamiltonian(&read_text(path)?)
}

pub fn read_grid<T: Real>(path: &Path) -> Result<Vec<Cx<T>>> {
    parse_grid(&read_text(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_roundtrip_and_inf_token() {
        let text = r#"{"L": "inf", "omega": {"atoms": [{"x": 0, "mass": 2}], "density": [{"a": 0, "b": "inf", "value": 1}]}}"#;
        let s: StringSpec<f64> = parse_spec(text).unwrap();
        assert_eq!(s.length(), Length::Infinite);
        assert_eq!(s.omega().density[0].b, f64::INFINITY);
        assert!(s.upsilon().is_zero());
        let out = spec_to_json(&s);
        assert!(out.starts_with(r#"{"L":"inf","omega":{"atoms":[{"mass":2.0000000000000000e0,"x":0.0000000000000000e0}]"#));
        assert!(out.ends_with('\n'));
        let back: StringSpec<f64> = parse_spec(&out).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_spec::<f64>("{"), Err(Error::Parse(_))));
        assert!(matches!(
            parse_spec::<f64>(r#"{"L": "infinity"}"#),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            parse_spec::<f64>(r#"{"L": 1, "extra": 0}"#),
            Err(Error::Parse(_))
        ));
        assert_eq!(
            parse_spec::<f64>(r#"{"L": -1}"#),
            Err(Error::NonPositiveLength)
        );
        let bad = r#"{"pieces": [{"len": 1, "h11": 0.5, "h12": 0.6}, {"len": "inf", "h11": 1, "h12": 0}]}"#;
        assert!(matches!(
            parse_hamiltonian::<f64>(bad),
            Err(Error::InvalidHamiltonian(_))
        ));
    }

    #[test]
    fn hamiltonian_roundtrip() {
        let text = r#"{"pieces": [{"len": 0.5, "h11": 0.25, "h12": 0.1}, {"len": "inf", "h11": 1, "h12": 0}]}"#;
        let h: Hamiltonian<f64> = parse_hamiltonian(text).unwrap();
        let back: Hamiltonian<f64> = parse_hamiltonian(&hamiltonian_to_json(&h)).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn csv_formats() {
        let g: Vec<Cx<f64>> = parse_grid("re_z, im_z\n0, 1\n-2.5, 0.5\n").unwrap();
        assert_eq!(g, vec![cx(0.0, 1.0), cx(-2.5, 0.5)]);
        assert!(parse_grid::<f64>("1, 2\nx, y\n").is_err());
        let s = WeylSample {
            z: cx(0.0, 1.0),
            m: cx(0.5, 0.25),
            truncation_x: 1.0,
            est_error: 0.0,
        };
        let out = m_samples_csv(&[s]);
        assert_eq!(
            out,
            "re_z,im_z,re_m,im_m,trunc_x,est_err\n0.0000000000000000e0,1.0000000000000000e0,5.0000000000000000e-1,2.5000000000000000e-1,1.0000000000000000e0,0.0000000000000000e0\n"
        );
    }

    #[test]
    fn float_format() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }
}
