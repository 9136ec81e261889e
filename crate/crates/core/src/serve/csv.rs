use csv::{QuoteStyle, Terminator, WriterBuilder};

use super::DesignTable;

/// RFC 4180 CSV with a header row, `\n` line endings and no BOM. Fields are
/// quoted only when they contain a delimiter, quote or line break.
pub fn to_csv(table: &DesignTable) -> Vec<u8> {
    let mut writer = WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .quote_style(QuoteStyle::Necessary)
        .from_writer(Vec::new());
    let write_all = |w: &mut csv::Writer<Vec<u8>>| -> csv::Result<()> {
        w.write_record(table.columns.iter().map(|c| c.name.as_str()))?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    };
    write_all(&mut writer).expect("writing to memory cannot fail");
    writer.into_inner().expect("in-memory writer flushes")
}
