use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::VariableTable;

/// Reads a comma-separated file whose header names the variables of `vars`
/// (in any order) and whose cells are value names. Quoting is not supported.
pub fn load_csv(path: impl AsRef<Path>, vars: &VariableTable) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, vars)
}

pub fn read_csv(reader: impl std::io::Read, vars: &VariableTable) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).quoting(false).flexible(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::SchemaMismatch(format!("unreadable header: {e}")))?.clone();
    if header.len() != vars.len() {
        return Err(Error::SchemaMismatch(format!(
            "header has {} columns, schema has {} variables",
            header.len(),
            vars.len()
        )));
    }
    let mut column_var = Vec::with_capacity(header.len());
    for name in header.iter() {
        let var = vars
            .index_of(name)
            .ok_or_else(|| Error::SchemaMismatch(format!("column `{name}` is not a schema variable")))?;
        if column_var.contains(&var) {
            return Err(Error::SchemaMismatch(format!("column `{name}` appears twice")));
        }
        column_var.push(var);
    }

    let mut rows = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let row_no = r + 1;
        let record = record.map_err(|e| Error::MalformedRow { row: row_no, reason: e.to_string() })?;
        if record.len() != vars.len() {
            return Err(Error::MalformedRow {
                row: row_no,
                reason: format!("{} fields, expected {}", record.len(), vars.len()),
            });
        }
        let mut row = vec![0; vars.len()];
        for (c, field) in record.iter().enumerate() {
            let var = column_var[c];
            row[var] = vars.get(var).value_index(field).ok_or_else(|| Error::UnknownValue {
                row: row_no,
                col: c + 1,
                value: field.to_string(),
            })?;
        }
        rows.push(row);
    }
    Dataset::from_rows(vars.clone(), &rows)
}

pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(ds, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn write_csv(ds: &Dataset, writer: impl std::io::Write) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Never)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let vars = ds.vars();
    w.write_record(vars.iter().map(|v| v.name.as_str()))?;
    for r in 0..ds.len() {
        w.write_record((0..vars.len()).map(|i| vars.get(i).values[ds.value(r, i)].as_str()))?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ancestral_sample;
    use crate::fixtures;
    use crate::model::Representation;

    #[test]
    fn header_only_file() {
        let vars = VariableTable::binary(2);
        let ds = read_csv("X0,X1\n".as_bytes(), &vars).unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn round_trip() {
        let net = fixtures::alarm_sound_network(Representation::Tree);
        let ds = ancestral_sample(&net, 300, 11);
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        assert_eq!(read_csv(buf.as_slice(), net.vars()).unwrap(), ds);
    }

    #[test]
    fn column_order_is_free() {
        let vars = VariableTable::binary(2);
        let ds = read_csv("X1,X0\n1,0\n".as_bytes(), &vars).unwrap();
        assert_eq!(ds.row(0), vec![0, 1]);
    }

    #[test]
    fn rejections() {
        let vars = VariableTable::binary(2);
        let err = read_csv("X0,X1\n0,1\n1,maybe\n".as_bytes(), &vars).unwrap_err();
        assert!(matches!(err, Error::UnknownValue { row: 2, col: 2, .. }), "{err}");
        assert!(matches!(read_csv("X0,Y\n".as_bytes(), &vars), Err(Error::SchemaMismatch(_))));
        assert!(matches!(read_csv("X0\n".as_bytes(), &vars), Err(Error::SchemaMismatch(_))));
        assert!(matches!(read_csv("X0,X1\n0\n".as_bytes(), &vars), Err(Error::MalformedRow { row: 1, .. })));
        assert!(matches!(
            read_csv("X0,X1\n\"0\",1\n".as_bytes(), &vars),
            Err(Error::UnknownValue { .. })
        ));
    }
}
