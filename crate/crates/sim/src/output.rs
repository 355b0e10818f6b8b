//! CSV reports, the surface phase program and binary matrix dumps.

use std::io::{self, BufRead, Read, Write};

use anyhow::{bail, Context, Result};
use atris_core::experiments::{ScalabilityRow, StudyKind, StudyRow};
use atris_core::linalg::CMatrix;
use atris_core::Complex64;

pub const DUMP_MAGIC: &[u8; 4] = b"ATRS";

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

/// Leading columns identifying a row of a sweep study.
pub fn sweep_columns(kind: StudyKind) -> &'static [&'static str] {
    match kind {
        StudyKind::Angular => &["delta_phi_deg"],
        StudyKind::Distance => &["distance_m"],
        StudyKind::PowerAlloc | StudyKind::Single | StudyKind::Scalability => &["distance_m", "delta_phi_deg"],
    }
}

/// Header then one row per report. Users beyond a row's own count get empty
/// rate cells. Floats use the shortest representation that parses back to
/// the same value.
pub fn write_study_csv<W: Write>(w: W, kind: StudyKind, rows: &[&StudyRow], seed: u64) -> Result<()> {
    let users = rows.iter().map(|r| r.report.per_ue_rates.len()).max().unwrap_or(0);
    let lead = sweep_columns(kind);
    let mut header: Vec<String> = lead.iter().map(|s| s.to_string()).collect();
    header.extend((1..=users).map(|k| format!("gamma_{k}")));
    header.extend(["sum_rate", "jain", "strategy", "seed"].map(String::from));

    let mut out = writer(w);
    out.write_record(&header)?;
    for row in rows {
        let mut record: Vec<String> = lead
            .iter()
            .map(|c| match *c {
                "delta_phi_deg" => row.delta_phi_deg.to_string(),
                _ => row.distance_m.to_string(),
            })
            .collect();
        let rates = &row.report.per_ue_rates;
        record.extend((0..users).map(|k| rates.get(k).map_or_else(String::new, f64::to_string)));
        record.push(row.report.sum_rate.to_string());
        record.push(row.report.jain.value.to_string());
        record.push(row.report.strategy.name().to_string());
        record.push(seed.to_string());
        out.write_record(&record)?;
    }
    out.flush()?;
    Ok(())
}

pub const SCALABILITY_HEADER: [&str; 8] = [
    "k",
    "trials",
    "mean_ue_rate",
    "ue_rate_variance",
    "mean_sum_rate",
    "mean_jain",
    "strategy",
    "seed",
];

pub fn write_scalability_csv<W: Write>(w: W, rows: &[&ScalabilityRow], seed: u64) -> Result<()> {
    let mut out = writer(w);
    out.write_record(SCALABILITY_HEADER)?;
    for r in rows {
        out.write_record([
            r.k.to_string(),
            r.trials.to_string(),
            r.mean_ue_rate.to_string(),
            r.ue_rate_variance.to_string(),
            r.mean_sum_rate.to_string(),
            r.mean_jain.to_string(),
            r.strategy.name().to_string(),
            seed.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// One phase in radians per line, in surface element order.
pub fn write_surface_program<W: Write>(mut w: W, phases: &[Complex64]) -> io::Result<()> {
    for p in phases {
        writeln!(w, "{}", p.arg())?;
    }
    w.flush()
}

pub fn read_surface_program<R: BufRead>(r: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        out.push(
            t.parse()
                .with_context(|| format!("line {}: not a phase value: {t:?}", i + 1))?,
        );
    }
    Ok(out)
}

/// `"ATRS"`, `u32` rows, `u32` cols (little-endian), then the entries in
/// row-major order as little-endian `f64` (re, im) pairs.
pub fn write_matrix_dump<W: Write>(mut w: W, m: &CMatrix) -> Result<()> {
    let rows = u32::try_from(m.rows()).context("too many rows for the dump format")?;
    let cols = u32::try_from(m.cols()).context("too many columns for the dump format")?;
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&rows.to_le_bytes())?;
    w.write_all(&cols.to_le_bytes())?;
    for v in m.as_slice() {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_dump<R: Read>(mut r: R) -> Result<CMatrix> {
    let mut head = [0u8; 12];
    r.read_exact(&mut head).context("truncated dump header")?;
    if &head[..4] != DUMP_MAGIC {
        bail!("not a matrix dump (bad magic)");
    }
    let rows = u32::from_le_bytes(head[4..8].try_into().expect("4 bytes")) as usize;
    let cols = u32::from_le_bytes(head[8..12].try_into().expect("4 bytes")) as usize;
    let mut data = Vec::with_capacity(rows * cols);
    let mut buf = [0u8; 16];
    for _ in 0..rows * cols {
        r.read_exact(&mut buf).context("truncated dump body")?;
        let re = f64::from_le_bytes(buf[..8].try_into().expect("8 bytes"));
        let im = f64::from_le_bytes(buf[8..].try_into().expect("8 bytes"));
        data.push(Complex64::new(re, im));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        bail!("trailing bytes after {rows}x{cols} dump");
    }
    Ok(CMatrix::from_row_major(rows, cols, data)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use atris_core::metrics::RateReport;
    use atris_core::tris::Strategy;

    fn row(dphi: f64, rates: Vec<f64>) -> StudyRow {
        StudyRow {
            distance_m: 10.0,
            delta_phi_deg: dphi,
            report: RateReport::new(rates, Strategy::DFocU, 1),
        }
    }

    #[test]
    fn empty_study_is_header_only() {
        let mut buf = Vec::new();
        write_study_csv(&mut buf, StudyKind::Angular, &[], 0).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "delta_phi_deg,sum_rate,jain,strategy,seed\n"
        );
    }

    #[test]
    fn angular_schema_and_round_trip() {
        let rows = [row(0.0, vec![0.1 + 0.2, 1.0 / 3.0]), row(10.0, vec![1e-300, 17.0])];
        let refs: Vec<&StudyRow> = rows.iter().collect();
        let mut buf = Vec::new();
        write_study_csv(&mut buf, StudyKind::Angular, &refs, 7).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("delta_phi_deg,gamma_1,gamma_2,sum_rate,jain,strategy,seed\n"));
        assert!(!text.contains('\r'));
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        for (rec, r) in rdr.records().zip(&rows) {
            let rec = rec.unwrap();
            assert_eq!(rec[1].parse::<f64>().unwrap(), r.report.per_ue_rates[0]);
            assert_eq!(rec[2].parse::<f64>().unwrap(), r.report.per_ue_rates[1]);
            assert_eq!(rec[3].parse::<f64>().unwrap(), r.report.sum_rate);
            assert_eq!(rec[4].parse::<f64>().unwrap(), r.report.jain.value);
            assert_eq!(&rec[5], "D-FOC-U");
            assert_eq!(&rec[6], "7");
        }
    }

    #[test]
    fn missing_users_leave_empty_cells() {
        let rows = [row(0.0, vec![1.0]), row(0.0, vec![1.0, 2.0])];
        let refs: Vec<&StudyRow> = rows.iter().collect();
        let mut buf = Vec::new();
        write_study_csv(&mut buf, StudyKind::Single, &refs, 0).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "10,0,1,,1,1,D-FOC-U,0");
    }

    #[test]
    fn dump_round_trip() {
        let m = CMatrix::from_fn(2, 3, |r, c| Complex64::new(r as f64 + 0.5, -(c as f64)));
        let mut buf = Vec::new();
        write_matrix_dump(&mut buf, &m).unwrap();
        assert_eq!(buf.len(), 12 + 6 * 16);
        assert_eq!(&buf[..4], b"ATRS");
        assert_eq!(&buf[4..12], &[2, 0, 0, 0, 3, 0, 0, 0]);
        // Second entry is (0, 1).
        assert_eq!(&buf[28..36], &0.5f64.to_le_bytes());
        assert_eq!(&buf[36..44], &(-1.0f64).to_le_bytes());
        assert_eq!(read_matrix_dump(buf.as_slice()).unwrap(), m);
        assert!(read_matrix_dump(&buf[..20]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_matrix_dump(bad.as_slice()).is_err());
    }

    #[test]
    fn surface_program_round_trip() {
        let phases: Vec<Complex64> = [0.3, -2.9, 3.1].iter().map(|&a| Complex64::cis(a)).collect();
        let mut buf = Vec::new();
        write_surface_program(&mut buf, &phases).unwrap();
        let back = read_surface_program(buf.as_slice()).unwrap();
        assert_eq!(back, phases.iter().map(|p| p.arg()).collect::<Vec<_>>());
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }
}
