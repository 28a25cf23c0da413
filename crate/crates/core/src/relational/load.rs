use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{Database, RelationalError, TupleId, Value};

const MANIFEST: &str = "schema.txt";

fn io_err(path: &Path, e: impl ToString) -> RelationalError {
    RelationalError::Io { path: path.display().to_string(), message: e.to_string() }
}

/// Parses `name/arity` lines; blank lines and `%` or `#` comments are skipped.
fn read_manifest(path: &Path) -> Result<BTreeMap<String, usize>, RelationalError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split(['%', '#']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |message: String| RelationalError::Manifest { line: i + 1, message };
        let (name, arity) = line.split_once('/').ok_or_else(|| bad(format!("expected `name/arity`, got `{line}`")))?;
        let arity: usize = arity.trim().parse().map_err(|_| bad(format!("invalid arity `{}`", arity.trim())))?;
        if arity == 0 {
            return Err(bad(format!("relation `{}` has arity 0", name.trim())));
        }
        if out.insert(name.trim().to_string(), arity).is_some() {
            return Err(bad(format!("relation `{}` listed twice", name.trim())));
        }
    }
    Ok(out)
}

/// Loads every `*.csv` file of `dir` as one relation named after the file stem.
///
/// Files are read in name order. A leading column named `tid` supplies explicit
/// ids; rows without one are numbered 1, 2, ... across all files in read order.
/// An optional `schema.txt` fixes arities and may declare empty relations.
pub fn load_database(dir: &Path) -> Result<Database, RelationalError> {
    let entries = fs::read_dir(dir).map_err(|e| io_err(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| io_err(dir, e))?.path();
        if path.extension().is_some_and(|x| x == "csv") && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    let manifest = {
        let p = dir.join(MANIFEST);
        if p.is_file() {
            Some(read_manifest(&p)?)
        } else {
            None
        }
    };

    let mut db = Database::new();
    let mut next_auto = 1u32;
    for path in &files {
        let name = path.file_stem().and_then(|s| s.to_str()).ok_or_else(|| io_err(path, "file name is not UTF-8"))?;
        let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| io_err(path, e))?;
        let header = reader.headers().map_err(|e| io_err(path, e))?.clone();
        let explicit = header.get(0) == Some("tid");
        let columns: Vec<String> = header.iter().skip(usize::from(explicit)).map(str::to_string).collect();
        if let Some(&arity) = manifest.as_ref().and_then(|m| m.get(name)) {
            if arity != columns.len() {
                return Err(RelationalError::ArityMismatch {
                    relation: name.to_string(),
                    expected: arity,
                    found: columns.len(),
                });
            }
        }
        db.add_relation(name, columns)?;
        for record in reader.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                RelationalError::Csv { file: file.clone(), line, message: e.to_string() }
            })?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != header.len() {
                return Err(RelationalError::RaggedRow { file: file.clone(), line, expected: header.len(), found: record.len() });
            }
            let mut fields = record.iter();
            let tid = if explicit {
                let text = fields.next().unwrap_or_default();
                match text.parse::<u32>() {
                    Ok(n) if n > 0 => TupleId(n),
                    _ => return Err(RelationalError::BadTid { file: file.clone(), line, text: text.to_string() }),
                }
            } else {
                let t = TupleId(next_auto);
                next_auto += 1;
                t
            };
            let mut values = Vec::with_capacity(header.len());
            for f in fields {
                if f.is_empty() {
                    return Err(RelationalError::Csv { file: file.clone(), line, message: "empty value".into() });
                }
                values.push(if f == "NULL" { Value::Null } else { Value::constant(f) });
            }
            db.insert(name, tid, values)?;
        }
    }
    if let Some(manifest) = manifest {
        for (name, arity) in manifest {
            if db.relation(&name).is_none() {
                db.add_relation_with_arity(name, arity)?;
            }
        }
    }
    Ok(db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn scratch(name: &str, files: &[(&str, &str)]) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("dbxplain-load-{}-{name}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        for (f, body) in files {
            fs::write(dir.join(f), body).unwrap();
        }
        dir
    }

    #[test]
    fn auto_tids_follow_file_order() {
        let dir = scratch("auto", &[("S.csv", "A\na\nc\nb\n"), ("R.csv", "A,B\na,b\nc,d\nb,b\n")]);
        let db = load_database(&dir).unwrap();
        assert_eq!(db.size(), 6);
        assert_eq!(db.describe(TupleId(1)), "R(a,b)");
        assert_eq!(db.describe(TupleId(6)), "S(b)");
    }

    #[test]
    fn explicit_tids_and_nulls() {
        let dir = scratch("explicit", &[("R.csv", "tid,A,B\n7,a,NULL\n3,b,c\n")]);
        let db = load_database(&dir).unwrap();
        assert_eq!(db.tids().map(|t| t.0).collect::<Vec<_>>(), vec![3, 7]);
        assert!(db.has_nulls());
    }

    #[test]
    fn duplicate_tid_rejected() {
        let dir = scratch("dup", &[("R.csv", "tid,A\n3,a\n3,b\n")]);
        assert_eq!(load_database(&dir), Err(RelationalError::DuplicateTid(TupleId(3))));
    }

    #[test]
    fn ragged_row_names_file_and_line() {
        let dir = scratch("ragged", &[("R.csv", "A,B\na,b\nc\n")]);
        let err = load_database(&dir).unwrap_err();
        assert_eq!(err, RelationalError::RaggedRow { file: "R.csv".into(), line: 3, expected: 2, found: 1 });
        assert!(err.to_string().contains("R.csv:3"));
    }

    #[test]
    fn empty_directory_and_manifest() {
        let dir = scratch("empty", &[]);
        let db = load_database(&dir).unwrap();
        assert_eq!((db.size(), db.relations().count()), (0, 0));
        let dir = scratch("manifest", &[("schema.txt", "% schema\nT/2\nR/1\n"), ("R.csv", "A\na\n")]);
        let db = load_database(&dir).unwrap();
        assert_eq!(db.relation("T").unwrap().arity(), 2);
        let dir = scratch("manifest-bad", &[("schema.txt", "R/2\n"), ("R.csv", "A\na\n")]);
        assert!(matches!(load_database(&dir), Err(RelationalError::ArityMismatch { .. })));
    }
}
