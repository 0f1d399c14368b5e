//! Matrix files: a full n x n CSV (decimals or `p/q`) or the JSON form
//! `{"n": 3, "upper": [...], "labels": [...]}`.

use std::fmt;
use std::path::Path;

use pcx_core::pcm::parse_ratio;
use pcx_core::PCMatrix;

/// Relative tolerance for `a_ij * a_ji = 1` and `a_ii = 1` in CSV input.
pub const RECIPROCITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct InputError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl InputError {
    fn at(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            column: Some(column),
            message: message.into(),
        }
    }

    fn plain(message: impl Into<String>) -> Self {
        Self {
            line: None,
            column: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// `.json` / `.csv` by extension, otherwise JSON iff the text starts with `{`.
    pub fn detect(path: &Path, text: &str) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Self::Json,
            Some(e) if e.eq_ignore_ascii_case("csv") => Self::Csv,
            _ if text.trim_start().starts_with('{') => Self::Json,
            _ => Self::Csv,
        }
    }
}

pub fn parse_matrix(text: &str, format: Format) -> Result<PCMatrix, InputError> {
    match format {
        Format::Json => parse_json(text),
        Format::Csv => parse_csv(text),
    }
}

pub fn read_matrix(path: &Path) -> Result<PCMatrix, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_matrix(&text, Format::detect(path, &text)).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse_json(text: &str) -> Result<PCMatrix, InputError> {
    serde_json::from_str(text).map_err(|e| {
        if e.line() > 0 {
            // serde_json appends its own "at line L column C"; keep one copy
            let msg = e.to_string();
            let msg = msg
                .rsplit_once(" at line ")
                .map_or(msg.as_str(), |(head, _)| head)
                .to_string();
            InputError::at(e.line(), e.column(), msg)
        } else {
            InputError::plain(e.to_string())
        }
    })
}

fn parse_csv(text: &str) -> Result<PCMatrix, InputError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| InputError::plain(e.to_string()))?;
        let line = record
            .position()
            .map_or(rows.len() + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let values = record
            .iter()
            .enumerate()
            .map(|(c, field)| {
                parse_ratio(field).ok_or_else(|| {
                    InputError::at(
                        line,
                        c + 1,
                        format!("`{field}` is not a positive number or fraction p/q"),
                    )
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push((line, values));
    }
    let n = rows.len();
    if n < 2 {
        return Err(InputError::plain(format!(
            "a comparison matrix needs at least 2 rows, found {n}"
        )));
    }
    for (line, row) in &rows {
        if row.len() != n {
            return Err(InputError::at(
                *line,
                row.len().min(n) + 1,
                format!(
                    "expected {n} values per row (square matrix), found {}",
                    row.len()
                ),
            ));
        }
    }
    let mut upper = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        let (line_i, row_i) = &rows[i];
        if (row_i[i] - 1.0).abs() > RECIPROCITY_TOL {
            return Err(InputError::at(
                *line_i,
                i + 1,
                format!("diagonal entry a({0},{0}) = {1} must be 1", i + 1, row_i[i]),
            ));
        }
        for j in (i + 1)..n {
            let (line_j, row_j) = &rows[j];
            let (a_ij, a_ji) = (row_i[j], row_j[i]);
            if (a_ij * a_ji - 1.0).abs() > RECIPROCITY_TOL {
                return Err(InputError::at(
                    *line_j,
                    i + 1,
                    format!(
                        "a({},{}) = {a_ji} is not the reciprocal of a({},{}) = {a_ij} (line {line_i}, column {})",
                        j + 1,
                        i + 1,
                        i + 1,
                        j + 1,
                        j + 1
                    ),
                ));
            }
            upper.push(a_ij);
        }
    }
    PCMatrix::new(n, upper, None).map_err(|e| InputError::plain(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_with_fractions() {
        let a = parse_csv("1, 3, 5\n1/3, 1, 3\n0.2, 1/3, 1\n").unwrap();
        assert_eq!(a.upper(), &[3.0, 5.0, 3.0]);
    }

    #[test]
    fn csv_and_json_agree() {
        let c = parse_csv("1,2,3\n1/2,1,2\n1/3,1/2,1").unwrap();
        let j = parse_json(r#"{"n": 3, "upper": [2, 3, 2]}"#).unwrap();
        assert_eq!(c, j);
    }

    #[test]
    fn reciprocity_violation_is_located() {
        let err = parse_csv("1,3,5\n0.5,1,3\n0.2,1/3,1\n").unwrap_err();
        assert_eq!((err.line, err.column), (Some(2), Some(1)));
        assert!(err.message.contains("a(2,1)"), "{err}");
    }

    #[test]
    fn bad_cells_are_located() {
        let err = parse_csv("1,2\nx,1\n").unwrap_err();
        assert_eq!((err.line, err.column), (Some(2), Some(1)));
        let err = parse_csv("1,2,3\n1/2,1\n1/3,1/2,1\n").unwrap_err();
        assert_eq!(err.line, Some(2));
        let err = parse_csv("2,2\n1/2,1\n").unwrap_err();
        assert!(err.message.contains("diagonal"));
        assert!(parse_csv("1\n").is_err());
        assert!(parse_csv("1,-2\n-1/2,1\n").is_err());
    }

    #[test]
    fn json_errors_carry_position() {
        // semantic errors carry no position, only the message
        let err = parse_json("{\"n\": 3,\n \"upper\": [1, 2]}").unwrap_err();
        assert!(err.message.contains('3'), "{err}");
        let err = parse_json("{\"n\": 3,\n \"upper\": [1, 2, ]}").unwrap_err();
        assert_eq!(err.line, Some(2));
    }

    #[test]
    fn format_detection() {
        assert_eq!(Format::detect(Path::new("a.json"), ""), Format::Json);
        assert_eq!(Format::detect(Path::new("a.CSV"), "{"), Format::Csv);
        assert_eq!(
            Format::detect(Path::new("a.txt"), "  {\"n\":2}"),
            Format::Json
        );
        assert_eq!(Format::detect(Path::new("a"), "1,2"), Format::Csv);
    }
}
