//! Comma-separated datasets and output files.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::inference::Dataset;
use crate::simulate::{FieldSample, SiteSet};

/// Formats a value so that parsing it back gives the same bits; NaN is "NA".
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NA".into()
    } else {
        format!("{v}")
    }
}

fn parse_f64(s: &str, line: usize, column: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("column {column}: cannot parse '{s}' as a number"),
    })
}

/// Reads a dataset with columns site_id, x, y, value and optional
/// replicate, t and covariate. Lines starting with '#' are skipped.
///
/// Sites keep their order of first appearance, replicates are sorted by
/// label. A value that is empty, "NA" or "NaN" is missing, as is any
/// (replicate, site) cell the file does not list.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let file = fs::File::open(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let required = ["site_id", "x", "y", "value"];
    let mut idx = [0usize; 4];
    for (k, name) in required.iter().enumerate() {
        idx[k] = col(name).ok_or_else(|| Error::Schema(format!("missing required column '{name}'")))?;
    }
    let (rep_col, t_col, cov_col) = (col("replicate"), col("t"), col("covariate"));

    struct Site {
        x: f64,
        y: f64,
        t: Option<f64>,
        cov: Option<f64>,
    }
    let mut site_index: HashMap<String, usize> = HashMap::new();
    let mut ids: Vec<String> = Vec::new();
    let mut sites: Vec<Site> = Vec::new();
    let mut cells: BTreeMap<i64, HashMap<usize, f64>> = BTreeMap::new();
    let mut rows = 0usize;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let get = |i: usize| rec.get(i).unwrap_or("");
        let id = get(idx[0]).to_string();
        if id.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty site_id".into(),
            });
        }
        let x = parse_f64(get(idx[1]), line, "x")?;
        let y = parse_f64(get(idx[2]), line, "y")?;
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::Parse {
                line,
                message: "coordinates must be finite".into(),
            });
        }
        let raw = get(idx[3]);
        let value = if raw.is_empty() || raw == "NA" || raw == "NaN" {
            f64::NAN
        } else {
            let v = parse_f64(raw, line, "value")?;
            if v.is_infinite() {
                return Err(Error::Parse {
                    line,
                    message: "value is infinite".into(),
                });
            }
            v
        };
        let rep = match rep_col {
            Some(c) => get(c).parse::<i64>().map_err(|_| Error::Parse {
                line,
                message: format!("column replicate: cannot parse '{}' as an integer", get(c)),
            })?,
            None => 1,
        };
        let t = t_col.map(|c| parse_f64(get(c), line, "t")).transpose()?;
        let cov = cov_col.map(|c| parse_f64(get(c), line, "covariate")).transpose()?;
        let s = match site_index.get(&id) {
            Some(&s) => {
                let old = &sites[s];
                let same = |a: Option<f64>, b: Option<f64>| a.map(f64::to_bits) == b.map(f64::to_bits);
                if old.x != x || old.y != y || !same(old.t, t) || !same(old.cov, cov) {
                    return Err(Error::InconsistentCoordinates { site_id: id });
                }
                s
            }
            None => {
                site_index.insert(id.clone(), sites.len());
                ids.push(id);
                sites.push(Site { x, y, t, cov });
                sites.len() - 1
            }
        };
        if cells.entry(rep).or_default().insert(s, value).is_some() {
            return Err(Error::Parse {
                line,
                message: format!("site '{}' appears twice in replicate {rep}", ids[s]),
            });
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Schema("the file has no data rows".into()));
    }
    log::info!("read {rows} rows: {} sites, {} replicates", sites.len(), cells.len());
    let mut set = SiteSet::planar(sites.iter().map(|s| [s.x, s.y]).collect())?.with_ids(ids)?;
    if t_col.is_some() {
        set = set.with_times(sites.iter().map(|s| s.t.unwrap_or(0.0)).collect())?;
    }
    let values = cells
        .values()
        .map(|m| (0..sites.len()).map(|s| m.get(&s).copied().unwrap_or(f64::NAN)).collect())
        .collect();
    let mut d = Dataset::new(set, values).map_err(|e| match e {
        Error::InvalidParameter(m) => Error::Schema(m),
        other => other,
    })?;
    if cov_col.is_some() {
        d = d.with_covariate(sites.iter().map(|s| s.cov.unwrap_or(f64::NAN)).collect())?;
    }
    Ok(d)
}

/// Comment line naming the tool version and config hash.
pub fn header_line(config_hash: &str) -> String {
    format!("# levyfield {} config-sha256 {config_hash}\n", env!("CARGO_PKG_VERSION"))
}

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    if let Err(e) = fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, path)) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

/// CSV text with a comment header.
pub fn csv_bytes(config_hash: &str, header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut out = header_line(config_hash).into_bytes();
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()?;
    drop(w);
    Ok(out)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Long-format rows: replicate, site_id, x, y, [t], value.
pub fn field_csv(sample: &FieldSample, config_hash: &str) -> Result<Vec<u8>> {
    let s = &sample.sites;
    let mut header = vec!["replicate", "site_id", "x", "y"];
    if s.times.is_some() {
        header.push("t");
    }
    header.push("value");
    let mut rows = Vec::with_capacity(sample.values.len() * s.len());
    for (r, row) in sample.values.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            let mut rec = vec![(r + 1).to_string(), s.ids[i].clone(), fmt_f64(s.coords[i][0]), fmt_f64(s.coords[i][1])];
            if let Some(t) = &s.times {
                rec.push(fmt_f64(t[i]));
            }
            rec.push(fmt_f64(*v));
            rows.push(rec);
        }
    }
    csv_bytes(config_hash, &header, &rows)
}
