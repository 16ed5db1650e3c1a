//! Artifact rendering. Floats are written with 17 significant digits so every value reads
//! back to the same bits.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

pub const OUTPUT_SCHEMA: &str = "wsaw-output/1";

/// `{:.16e}`, or `inf`, `-inf`, `nan`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

struct Sig17<F> {
    inner: F,
}

impl<F: Formatter> Formatter for Sig17<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        w.write_all(fmt_f64(value as f64).as_bytes())
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn end_object_key<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_key(w)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

fn write_with<T: Serialize + ?Sized, F: Formatter>(value: &T, inner: F) -> anyhow::Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17 { inner });
    value.serialize(&mut ser)?;
    Ok(buf)
}

/// Indented JSON with a trailing newline.
pub fn to_json_pretty<T: Serialize + ?Sized>(value: &T) -> anyhow::Result<Vec<u8>> {
    let mut buf = write_with(value, PrettyFormatter::with_indent(b"  "))?;
    buf.push(b'\n');
    Ok(buf)
}

/// Single-line JSON, used for digests.
pub fn to_json_compact<T: Serialize + ?Sized>(value: &T) -> anyhow::Result<Vec<u8>> {
    write_with(value, serde_json::ser::CompactFormatter)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Body {
    /// Must serialize to an object.
    Json(Value),
    Csv { header: Vec<String>, rows: Vec<Vec<String>> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub file: String,
    pub kind: String,
    pub body: Body,
}

impl Artifact {
    pub fn json<T: Serialize>(file: &str, kind: &str, data: &T) -> anyhow::Result<Self> {
        let value = serde_json::to_value(data)?;
        anyhow::ensure!(value.is_object(), "artifact {file} is not a JSON object");
        Ok(Artifact {
            file: file.into(),
            kind: kind.into(),
            body: Body::Json(value),
        })
    }

    pub fn csv(file: &str, kind: &str, header: &[&str], rows: Vec<Vec<String>>) -> Self {
        Artifact {
            file: file.into(),
            kind: kind.into(),
            body: Body::Csv {
                header: header.iter().map(|s| s.to_string()).collect(),
                rows,
            },
        }
    }

    /// The bytes on disk, stamped with the run digest.
    pub fn render(&self, run_digest: &str) -> anyhow::Result<Vec<u8>> {
        match &self.body {
            Body::Json(value) => {
                let mut map = Map::new();
                map.insert("schema".into(), Value::from(OUTPUT_SCHEMA));
                map.insert("kind".into(), Value::from(self.kind.clone()));
                map.insert("run_digest".into(), Value::from(run_digest));
                if let Value::Object(data) = value {
                    for (k, v) in data {
                        map.insert(k.clone(), v.clone());
                    }
                }
                to_json_pretty(&Value::Object(map))
            }
            Body::Csv { header, rows } => {
                let mut buf = format!("# schema={OUTPUT_SCHEMA} kind={} run_digest={run_digest}\n", self.kind).into_bytes();
                {
                    let mut w = csv::Writer::from_writer(&mut buf);
                    w.write_record(header)?;
                    for row in rows {
                        w.write_record(row)?;
                    }
                    w.flush()?;
                }
                Ok(buf)
            }
        }
    }
}

/// CSV cell for an optional float; missing values are empty.
pub fn cell(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1e-300, 3.0, -2.5e17, f64::MIN_POSITIVE, 0.0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        // manifests are read back through serde_json, which must round correctly too
        for v in [1e-6, 0.1, 1e-3, std::f64::consts::SQRT_2] {
            let text = to_json_compact(&[v]).unwrap();
            let back: Vec<f64> = serde_json::from_slice(&text).unwrap();
            assert_eq!(back[0].to_bits(), v.to_bits(), "{}", String::from_utf8_lossy(&text));
        }
        let json = to_json_compact(&serde_json::json!({"a": 0.1, "b": [1, 2.5]})).unwrap();
        assert_eq!(String::from_utf8(json).unwrap(), r#"{"a":1.0000000000000001e-1,"b":[1,2.5000000000000000e0]}"#);
    }

    #[test]
    fn artifacts_carry_the_digest() {
        let a = Artifact::json("x.json", "test", &serde_json::json!({"v": 1.5})).unwrap();
        let text = String::from_utf8(a.render("abc").unwrap()).unwrap();
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["run_digest"], "abc");
        assert_eq!(back["v"].as_f64(), Some(1.5));
        let c = Artifact::csv("x.csv", "test", &["j", "v"], vec![vec!["0".into(), fmt_f64(0.25)]]);
        let text = String::from_utf8(c.render("abc").unwrap()).unwrap();
        assert!(text.starts_with("# schema=wsaw-output/1 kind=test run_digest=abc\nj,v\n0,"));
    }
}
