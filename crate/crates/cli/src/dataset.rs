//! Dataset files: CSV with header `group,value[,truth]`.
//!
//! `group` is 1 or 2 for labeled observations and 3 for unlabeled ones.
//! The optional `truth` column gives the component (1 or 2) of unlabeled rows
//! and is left empty for labeled rows.

use std::io::Write;
use std::path::Path;

use fscns::mixture::{Component, SetSize};
use fscns::sampling::FscDataset;
use fscns::{Error, Result};

pub fn parse_dataset(text: &str, k: SetSize) -> Result<FscDataset> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let has_truth = match cols.as_slice() {
        ["group", "value"] => false,
        ["group", "value", "truth"] => true,
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header group,value[,truth], found {header:?}"),
            })
        }
    };
    let (mut l1, mut l2, mut u, mut truth) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (i, line) in lines {
        let line_no = i + 1;
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != cols.len() {
            return Err(err(format!(
                "expected {} fields, found {}",
                cols.len(),
                f.len()
            )));
        }
        let value: f64 = f[1].parse().map_err(|e| err(format!("value: {e}")))?;
        if !value.is_finite() {
            return Err(err(format!("value must be finite, found {value}")));
        }
        match f[0] {
            "1" => l1.push(value),
            "2" => l2.push(value),
            "3" => {
                u.push(value);
                if has_truth {
                    let c = match f[2] {
                        "1" => Component::First,
                        "2" => Component::Second,
                        other => return Err(err(format!("truth must be 1 or 2, found {other:?}"))),
                    };
                    truth.push(c);
                }
            }
            other => return Err(err(format!("group must be 1, 2 or 3, found {other:?}"))),
        }
    }
    if l1.is_empty() && l2.is_empty() && u.is_empty() {
        return Err(Error::InsufficientData(
            "dataset has no observations".into(),
        ));
    }
    FscDataset::new(l1, l2, u, k, has_truth.then_some(truth))
}

pub fn read_dataset(path: &Path, k: SetSize) -> Result<FscDataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        line: 0,
        message: format!("{}: {e}", path.display()),
    })?;
    parse_dataset(&text, k)
}

pub fn write_dataset<W: Write>(data: &FscDataset, mut out: W) -> std::io::Result<()> {
    let has_truth = data.truth.is_some();
    writeln!(
        out,
        "{}",
        if has_truth {
            "group,value,truth"
        } else {
            "group,value"
        }
    )?;
    let tail = if has_truth { "," } else { "" };
    for &y in &data.labeled1 {
        writeln!(out, "1,{y:?}{tail}")?;
    }
    for &y in &data.labeled2 {
        writeln!(out, "2,{y:?}{tail}")?;
    }
    for (r, &y) in data.unlabeled.iter().enumerate() {
        match &data.truth {
            Some(t) => writeln!(out, "3,{y:?},{}", t[r].index())?,
            None => writeln!(out, "3,{y:?}")?,
        }
    }
    Ok(())
}
