use std::fs;
use std::path::Path;

use linear_treeshap::{parse_model_with, Ensemble, Explainer, Instance, ParseOptions};

use crate::{io_failure, ExplainArgs, Failure};

pub fn load_model(path: &Path, lenient_weights: bool) -> Result<Ensemble, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    parse_model_with(&text, &ParseOptions { lenient_weights })
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

/// A data row as read: the instance or the reason it was rejected.
#[derive(Debug)]
struct Row {
    line: u64,
    instance: Result<Instance, String>,
}

fn is_header(record: &csv::StringRecord) -> bool {
    record.iter().all(|f| f.parse::<f64>().is_err())
}

fn parse_row(record: &csv::StringRecord, m: usize) -> Result<Instance, String> {
    if record.len() != m {
        return Err(format!("expected {m} columns, found {}", record.len()));
    }
    let values = record
        .iter()
        .enumerate()
        .map(|(k, f)| {
            if f.is_empty() {
                return Err(format!("column {k} is missing"));
            }
            f.parse::<f64>().map_err(|_| format!("column {k}: {f:?} is not a number"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Instance::new(values).map_err(|e| e.to_string())
}

fn read_rows(path: &Path, ensemble: &Ensemble) -> Result<Vec<Row>, Failure> {
    let m = ensemble.num_features;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| io_failure(path, e))?;
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| io_failure(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if k == 0 && is_header(&record) {
            check_header(&record, ensemble)?;
            continue;
        }
        rows.push(Row {
            line,
            instance: parse_row(&record, m),
        });
    }
    Ok(rows)
}

fn check_header(record: &csv::StringRecord, ensemble: &Ensemble) -> Result<(), Failure> {
    let got: Vec<&str> = record.iter().collect();
    match &ensemble.feature_names {
        Some(names) if got != *names => Err(Failure::Validation(format!(
            "data header {got:?} does not match model feature names {names:?}"
        ))),
        None if got.len() != ensemble.num_features => Err(Failure::Validation(format!(
            "data header has {} columns, model has {} features",
            got.len(),
            ensemble.num_features
        ))),
        _ => Ok(()),
    }
}

pub fn output_header(ensemble: &Ensemble) -> Vec<String> {
    let mut header: Vec<String> = match &ensemble.feature_names {
        Some(names) => names.iter().map(|n| format!("phi_{n}")).collect(),
        None => (0..ensemble.num_features).map(|i| format!("phi_{i}")).collect(),
    };
    header.push("base_value".into());
    header.push("prediction".into());
    header
}

/// 17 significant digits: parses back to the same double.
fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn run(args: &ExplainArgs) -> Result<(), Failure> {
    let ensemble = load_model(&args.model, args.lenient_weights)?;
    let header = output_header(&ensemble);
    let rows = read_rows(&args.data, &ensemble)?;
    let explainer = Explainer::new(ensemble)?;

    let good: Vec<Instance> = rows
        .iter()
        .filter_map(|r| r.instance.as_ref().ok().cloned())
        .collect();
    let results = match args.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.into())
            .build()
            .map_err(|e| Failure::Usage(e.to_string()))?
            .install(|| explainer.explain_batch(&good)),
        None => explainer.explain_batch(&good),
    };

    let mut out = csv::Writer::from_path(&args.output).map_err(|e| io_failure(&args.output, e))?;
    let write_err = |e: csv::Error| io_failure(&args.output, e);
    out.write_record(&header).map_err(write_err)?;
    let nan_row = vec![fmt(f64::NAN); header.len()];
    let mut results = results.into_iter();
    let mut errors = 0usize;
    for (k, row) in rows.iter().enumerate() {
        let outcome = match &row.instance {
            Ok(_) => results
                .next()
                .expect("one result per valid row")
                .map_err(|e| e.error.to_string()),
            Err(msg) => Err(msg.clone()),
        };
        match outcome {
            Ok(a) => {
                let fields = a
                    .phi
                    .iter()
                    .chain([&a.base_value, &a.prediction])
                    .map(|&x| fmt(x));
                out.write_record(fields).map_err(write_err)?;
            }
            Err(msg) => {
                errors += 1;
                eprintln!("row {} (line {}): {msg}", k + 1, row.line);
                out.write_record(&nan_row).map_err(write_err)?;
            }
        }
    }
    out.flush().map_err(|e| io_failure(&args.output, e))?;
    if errors > 0 {
        return Err(Failure::Validation(format!(
            "{errors} of {} rows rejected; their output rows are NaN",
            rows.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(fields: &[&str]) -> csv::StringRecord {
        csv::StringRecord::from(fields.to_vec())
    }

    #[test]
    fn header_detection() {
        assert!(is_header(&record(&["a", "b"])));
        assert!(!is_header(&record(&["a", "1"])));
        assert!(!is_header(&record(&["1e3", "-2"])));
    }

    #[test]
    fn row_errors() {
        assert!(parse_row(&record(&["1", "2"]), 3).unwrap_err().contains("expected 3"));
        assert!(parse_row(&record(&["1", "", "2"]), 3).unwrap_err().contains("missing"));
        assert!(parse_row(&record(&["1", "x", "2"]), 3).unwrap_err().contains("not a number"));
        assert!(parse_row(&record(&["1", "NaN", "2"]), 3).is_err());
        assert_eq!(parse_row(&record(&["1", "2", "3"]), 3).unwrap().values(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, -0.123, 1.0 / 3.0, 5e-324, f64::MAX] {
            assert_eq!(fmt(x).parse::<f64>().unwrap(), x);
        }
    }
}
