//! JSON, aligned-text and CSV renderings of the reports.

use serde::Serialize;

use super::{CommRow, DistortionReport, PrivacyReport, Verdict};

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

fn aligned(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, &w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}

fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(String::new, T::to_string)
}

pub fn privacy_text(reports: &[PrivacyReport]) -> String {
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.protocol.clone(),
                r.definition.name().to_string(),
                format!("{}", r.n),
                format!("{}", r.m),
                format!("{}x{}", r.x_size, r.y_size),
                format!("{}", r.modulus),
                r.conditioning.clone(),
                format!("{}", r.input_pairs),
                format!("{}", r.comparisons),
                format!("{}", r.enumeration_size),
                r.worst_distance.clone(),
                match r.verdict {
                    Verdict::Pass => "PASS".to_string(),
                    Verdict::Fail => "FAIL".to_string(),
                },
            ]
        })
        .collect();
    let mut out = aligned(
        &[
            "protocol",
            "definition",
            "n",
            "m",
            "alphabets",
            "p",
            "conditioning",
            "pairs",
            "comparisons",
            "enumerated",
            "worst_tv",
            "verdict",
        ],
        &rows,
    );
    for r in reports.iter().filter(|r| r.verdict == Verdict::Fail) {
        if let Some(w) = &r.witness {
            out.push_str(&format!("{} {}: {}\n", r.protocol, r.definition.name(), w));
        }
    }
    out
}

fn distortion_rows(reports: &[DistortionReport]) -> Vec<Vec<String>> {
    reports
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                r.m.to_string(),
                r.e_n_exact.clone().unwrap_or_else(|| format!("{:.6}", r.e_n)),
                format!("{:.6}", r.bound),
                r.rate.clone(),
                r.protocol.clone(),
                r.method.clone(),
                opt(&r.seed),
                opt(&r.trials),
            ]
        })
        .collect()
}

const DISTORTION_HEADER: [&str; 9] = ["n", "m", "e_n", "bound", "R", "protocol", "method", "seed", "trials"];

pub fn distortion_csv(reports: &[DistortionReport]) -> String {
    csv_table(&DISTORTION_HEADER, &distortion_rows(reports))
}

pub fn distortion_text(reports: &[DistortionReport]) -> String {
    aligned(&DISTORTION_HEADER, &distortion_rows(reports))
}

fn comm_rows(rows: &[CommRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                r.protocol.clone(),
                r.n.to_string(),
                r.m.to_string(),
                r.modulus.to_string(),
                r.index_bits.to_string(),
                r.extra_bits.to_string(),
                r.total_bits.to_string(),
                r.rate.clone(),
                format!("{:.6}", r.rate_value),
                opt(&r.live_match),
            ]
        })
        .collect()
}

const COMM_HEADER: [&str; 10] = [
    "protocol",
    "n",
    "m",
    "p",
    "index_bits",
    "extra_bits",
    "k",
    "R",
    "R_decimal",
    "live_match",
];

pub fn comm_csv(rows: &[CommRow]) -> String {
    csv_table(&COMM_HEADER, &comm_rows(rows))
}

pub fn comm_text(rows: &[CommRow]) -> String {
    aligned(&COMM_HEADER, &comm_rows(rows))
}
