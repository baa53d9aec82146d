use squeezesim_core::experiment::SpectrumRecord;

pub const CSV_HEADER: &str = "frequency_hz,noise_rel_shot_db,signal_power,snr_db";

/// Nine significant digits, so output is byte-stable across platforms.
fn number(v: f64) -> String {
    format!("{v:.8e}")
}

fn optional(v: Option<f64>) -> String {
    v.map(number).unwrap_or_default()
}

pub fn csv(records: &[SpectrumRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{}\n",
            number(r.frequency_hz),
            number(r.noise_rel_shot_db),
            optional(r.signal_power),
            optional(r.snr_db)
        ));
    }
    out
}

pub fn json(records: &[SpectrumRecord]) -> String {
    let mut text = serde_json::to_string_pretty(records).expect("records serialize");
    text.push('\n');
    text
}
