//! CSV datasets with `name:role` headers.
//!
//! A header token is `name:role` (support inferred from the data) or
//! `name:role[l0|l1|...]` (declared support). Roles are `C`, `A`, `L`, `M`
//! and `Y`; one optional `name:weight` column carries row weights. Values
//! are support labels, or integer indices into a declared support.

use std::io::Read;
use std::path::Path;

use mediation_core::estimation::Dataset;
use mediation_core::scm::Variable;
use mediation_core::{Error as CoreError, Role};

use crate::error::{parse_err, Error, Result};

struct Header {
    name: String,
    role: Option<Role>,
    declared: Option<Vec<String>>,
}

fn parse_header(token: &str, col: usize) -> Result<Header> {
    let token = token.trim();
    let (name, rest) = match token.split_once(':') {
        Some(x) => x,
        None => return parse_err(1, format!("column {} header `{}` is not name:role", col + 1, token)),
    };
    let (role, declared) = match rest.split_once('[') {
        Some((r, labels)) => {
            let labels = match labels.strip_suffix(']') {
                Some(l) => l,
                None => return parse_err(1, format!("unclosed support in `{}`", token)),
            };
            (r.trim(), Some(labels.split('|').map(|s| s.trim().to_string()).collect()))
        }
        None => (rest.trim(), None),
    };
    let role = match role {
        "weight" => None,
        r => match Role::from_tag(r) {
            Some(r) if r != Role::Exogenous => Some(r),
            _ => return parse_err(1, format!("unknown role `{}` in `{}`", r, token)),
        },
    };
    Ok(Header {
        name: name.trim().to_string(),
        role,
        declared,
    })
}

fn infer_support(values: &[&str]) -> Vec<String> {
    if let Some(max) = values
        .iter()
        .map(|v| v.parse::<usize>().ok())
        .collect::<Option<Vec<usize>>>()
        .and_then(|v| v.into_iter().max())
    {
        return (0..=max.max(1)).map(|i| i.to_string()).collect();
    }
    let mut labels: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    labels.sort();
    labels.dedup();
    labels
}

/// Reads a dataset from CSV text.
pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<Header> = rdr
        .headers()?
        .iter()
        .enumerate()
        .map(|(i, t)| parse_header(t, i))
        .collect::<Result<_>>()?;
    if headers.iter().filter(|h| h.role.is_none()).count() > 1 {
        return parse_err(1, "more than one weight column");
    }
    let mut raw: Vec<csv::StringRecord> = Vec::new();
    for rec in rdr.records() {
        raw.push(rec?);
    }
    for (r, rec) in raw.iter().enumerate() {
        if let Some(j) = rec.iter().position(str::is_empty) {
            return parse_err(r + 2, format!("missing value in column `{}`", headers[j].name));
        }
    }
    let mut columns = Vec::new();
    let mut pos = Vec::new();
    let mut weight_col = None;
    for (j, h) in headers.iter().enumerate() {
        let role = match h.role {
            Some(r) => r,
            None => {
                weight_col = Some(j);
                continue;
            }
        };
        let labels = match &h.declared {
            Some(l) => l.clone(),
            None => {
                let vals: Vec<&str> = raw.iter().map(|rec| &rec[j]).collect();
                infer_support(&vals)
            }
        };
        columns.push(Variable::new(&h.name, role, labels));
        pos.push(j);
    }
    let mut rows = Vec::with_capacity(raw.len());
    for (r, rec) in raw.iter().enumerate() {
        let mut row = Vec::with_capacity(columns.len());
        for (c, &j) in columns.iter().zip(&pos) {
            let v = &rec[j];
            let idx = c
                .label_index(v)
                .or_else(|| v.parse::<usize>().ok().filter(|&i| i < c.size()));
            match idx {
                Some(i) => row.push(i),
                None => {
                    return Err(Error::Core(CoreError::OutOfSupport {
                        column: c.name.clone(),
                        value: format!("{} (line {})", v, r + 2),
                    }))
                }
            }
        }
        rows.push(row);
    }
    Ok(match weight_col {
        Some(j) => {
            let mut weights = Vec::with_capacity(raw.len());
            for (r, rec) in raw.iter().enumerate() {
                match rec[j].parse::<f64>() {
                    Ok(w) => weights.push(w),
                    Err(_) => return parse_err(r + 2, format!("invalid weight `{}`", &rec[j])),
                }
            }
            Dataset::weighted(columns, rows, weights)?
        }
        None => Dataset::new(columns, rows)?,
    })
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let f = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_dataset(std::io::BufReader::new(f))
}

/// CSV text with declared supports, so reading it back is lossless.
pub fn write_dataset(ds: &Dataset) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ds
        .columns()
        .iter()
        .map(|c| format!("{}:{}[{}]", c.name, c.role.tag(), c.labels.join("|")))
        .collect();
    if ds.weights().is_some() {
        header.push("weight:weight".into());
    }
    w.write_record(&header)?;
    for (k, row) in ds.rows().iter().enumerate() {
        let mut rec: Vec<String> = ds
            .columns()
            .iter()
            .zip(row)
            .map(|(c, &v)| c.labels[v].clone())
            .collect();
        if let Some(ws) = ds.weights() {
            rec.push(format!("{:?}", ws[k]));
        }
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io {
        path: "<memory>".into(),
        source: e.into_error(),
    })?;
    Ok(String::from_utf8(bytes).expect("utf-8 labels"))
}

pub fn save_dataset(path: &Path, ds: &Dataset) -> Result<()> {
    crate::error::write(path, &write_dataset(ds)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use mediation_core::estimation::simulate;
    use mediation_core::fixtures;

    #[test]
    fn round_trip() {
        let ds = simulate(&fixtures::l_chain(), 50, 1).unwrap();
        let text = write_dataset(&ds).unwrap();
        assert_eq!(read_dataset(text.as_bytes()).unwrap(), ds);
        let w = Dataset::from_distribution(&fixtures::noisy_chain()).unwrap();
        assert_eq!(read_dataset(write_dataset(&w).unwrap().as_bytes()).unwrap(), w);
    }

    #[test]
    fn inferred_and_labelled_supports() {
        let text = "smoke:L,treat:A,m:M[lo|hi],y:Y\nno,0,lo,1\nyes,1,1,0\n";
        let ds = read_dataset(text.as_bytes()).unwrap();
        assert_eq!(ds.columns()[0].labels, vec!["no", "yes"]);
        assert_eq!(ds.columns()[1].labels, vec!["0", "1"]);
        assert_eq!(ds.rows()[1], vec![1, 1, 1, 0]);
    }

    #[test]
    fn bad_inputs() {
        let missing = "a:A,m:M,y:Y\n0,,1\n";
        assert!(matches!(read_dataset(missing.as_bytes()), Err(Error::Parse { line: 2, .. })));
        let outside = "a:A,m:M[0|1],y:Y\n0,2,1\n";
        assert!(matches!(
            read_dataset(outside.as_bytes()),
            Err(Error::Core(CoreError::OutOfSupport { .. }))
        ));
        let role = "a:Q,m:M,y:Y\n0,1,1\n";
        assert!(matches!(read_dataset(role.as_bytes()), Err(Error::Parse { line: 1, .. })));
    }
}
