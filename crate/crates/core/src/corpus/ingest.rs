use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use serde::Deserialize;

use crate::error::{Error, Result};

/// One review as found in the raw input.
#[derive(Debug, Clone, PartialEq)]
pub struct RawReview {
    pub user_id: String,
    pub product_id: String,
    pub rating: f64,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    /// One JSON object per line with `reviewerID`, `asin`, `overall`, `reviewText`.
    JsonLines,
    /// `user \t product \t rating \t text`.
    Tsv,
}

impl InputFormat {
    /// Guesses the format from a file name, looking through a `.gz` suffix.
    pub fn from_path(path: &Path) -> Option<Self> {
        let name = path.file_name()?.to_str()?.to_ascii_lowercase();
        let name = name.strip_suffix(".gz").unwrap_or(&name);
        if name.ends_with(".json") || name.ends_with(".jsonl") || name.ends_with(".ndjson") {
            Some(Self::JsonLines)
        } else if name.ends_with(".tsv") || name.ends_with(".txt") {
            Some(Self::Tsv)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub reviews: Vec<RawReview>,
    /// Records that were present but malformed.
    pub skipped: usize,
}

#[derive(Deserialize)]
struct JsonRecord {
    #[serde(rename = "reviewerID")]
    reviewer_id: Option<String>,
    asin: Option<String>,
    overall: Option<f64>,
    #[serde(rename = "reviewText")]
    review_text: Option<String>,
}

fn valid(user: &str, product: &str, rating: f64) -> bool {
    !user.is_empty() && !product.is_empty() && rating.is_finite() && (1.0..=5.0).contains(&rating)
}

fn parse_json(line: &str) -> Option<RawReview> {
    let rec: JsonRecord = serde_json::from_str(line).ok()?;
    let user_id = rec.reviewer_id?.trim().to_string();
    let product_id = rec.asin?.trim().to_string();
    let rating = rec.overall?;
    if !valid(&user_id, &product_id, rating) {
        return None;
    }
    Some(RawReview {
        user_id,
        product_id,
        rating,
        text: rec.review_text.unwrap_or_default(),
    })
}

fn parse_tsv(line: &str) -> Option<RawReview> {
    let mut fields = line.splitn(4, '\t');
    let user_id = fields.next()?.trim().to_string();
    let product_id = fields.next()?.trim().to_string();
    let rating: f64 = fields.next()?.trim().parse().ok()?;
    let text = fields.next().unwrap_or("").to_string();
    if !valid(&user_id, &product_id, rating) {
        return None;
    }
    Some(RawReview {
        user_id,
        product_id,
        rating,
        text,
    })
}

/// Reads reviews from a UTF-8 byte stream.
///
/// Blank lines are ignored. Malformed records are skipped and counted; a
/// stream with no valid record at all is an error.
pub fn ingest_reviews<R: Read>(source: R, format: InputFormat) -> Result<Ingested> {
    let reader = BufReader::new(source);
    let mut out = Ingested::default();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Ingest(format!("line {}: {}", lineno + 1, e)))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let parsed = match format {
            InputFormat::JsonLines => parse_json(line),
            InputFormat::Tsv => parse_tsv(line),
        };
        match parsed {
            Some(r) => out.reviews.push(r),
            None => out.skipped += 1,
        }
    }
    if out.skipped > 0 {
        log::warn!("skipped {} malformed review records", out.skipped);
    }
    if out.reviews.is_empty() {
        return Err(Error::Ingest("no valid review records".into()));
    }
    Ok(out)
}

/// Opens a plain or gzip-compressed file and ingests it.
///
/// Compression is detected from the gzip magic bytes, not the extension.
/// When `format` is `None` it is inferred from the file name.
pub fn ingest_path(path: &Path, format: Option<InputFormat>) -> Result<Ingested> {
    let format = match format.or_else(|| InputFormat::from_path(path)) {
        Some(f) => f,
        None => {
            return Err(Error::Ingest(format!(
                "cannot infer input format of {}",
                path.display()
            )))
        }
    };
    let mut file = BufReader::new(File::open(path)?);
    let gz = file.fill_buf()?.starts_with(&[0x1f, 0x8b]);
    if gz {
        ingest_reviews(MultiGzDecoder::new(file), format)
    } else {
        ingest_reviews(file, format)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_field_mapping() {
        let line = r#"{"reviewerID": "A1", "asin": "B001", "overall": 4.0, "reviewText": "Great wax kit", "summary": "x"}"#;
        let got = ingest_reviews(line.as_bytes(), InputFormat::JsonLines).unwrap();
        assert_eq!(
            got.reviews,
            vec![RawReview {
                user_id: "A1".into(),
                product_id: "B001".into(),
                rating: 4.0,
                text: "Great wax kit".into()
            }]
        );
        assert_eq!(got.skipped, 0);
    }

    #[test]
    fn empty_stream_is_an_error() {
        assert!(matches!(
            ingest_reviews(&b""[..], InputFormat::JsonLines),
            Err(Error::Ingest(_))
        ));
    }

    #[test]
    fn missing_rating_is_skipped() {
        let src = concat!(
            r#"{"reviewerID": "A1", "asin": "B1", "overall": 5.0, "reviewText": "a"}"#,
            "\n",
            r#"{"reviewerID": "A2", "asin": "B1", "reviewText": "b"}"#,
            "\n",
            r#"{"reviewerID": "A3", "asin": "B2", "overall": 2.0, "reviewText": "c"}"#,
            "\n"
        );
        let got = ingest_reviews(src.as_bytes(), InputFormat::JsonLines).unwrap();
        assert_eq!(got.reviews.len(), 2);
        assert_eq!(got.skipped, 1);
        assert_eq!(got.reviews[1].user_id, "A3");
    }

    #[test]
    fn tsv_rows() {
        let src = "u1\tp1\t5\tnice strings\nu2\tp1\tbad\ttext\nu3\tp2\t3.5\t\n";
        let got = ingest_reviews(src.as_bytes(), InputFormat::Tsv).unwrap();
        assert_eq!(got.reviews.len(), 2);
        assert_eq!(got.skipped, 1);
        assert_eq!(got.reviews[0].text, "nice strings");
        assert_eq!(got.reviews[1].rating, 3.5);
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(
            InputFormat::from_path(Path::new("x/reviews_Musical_Instruments_5.json.gz")),
            Some(InputFormat::JsonLines)
        );
        assert_eq!(
            InputFormat::from_path(Path::new("a.tsv")),
            Some(InputFormat::Tsv)
        );
        assert_eq!(InputFormat::from_path(Path::new("a.bin")), None);
    }

    #[test]
    fn gzip_input() {
        use flate2::write::GzEncoder;
        use flate2::Compression;
        use std::io::Write;

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json.gz");
        let mut enc = GzEncoder::new(File::create(&path).unwrap(), Compression::default());
        writeln!(
            enc,
            r#"{{"reviewerID": "A1", "asin": "B1", "overall": 3.0, "reviewText": "ok"}}"#
        )
        .unwrap();
        enc.finish().unwrap();
        let got = ingest_path(&path, None).unwrap();
        assert_eq!(got.reviews.len(), 1);
    }
}
