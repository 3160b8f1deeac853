//! CSV ingestion of instruments and CSV export of curves.
//!
//! Instrument files carry the columns `id, kind, maturity, rate_or_price, R,
//! schedule_file` (header names are case-insensitive; `rate` and `price` are
//! accepted for `rate_or_price`, and `R` and `schedule_file` are optional).
//! Kinds:
//!
//! * `zcb`: unit payment at `maturity`, `rate_or_price` is the price;
//! * `parswap`: annual fixed leg paying `rate` at years `1..maturity`, plus
//!   redemption, priced at par (1.0);
//! * `cashflows`: schedule read from `schedule_file` (columns `time,
//!   amount`), `rate_or_price` is the price.
//!
//! Numbers are written with 12 significant digits.

use std::fmt;
use std::io;

use crate::curve::{CashflowSchedule, FitMode, FittedCurve, Instrument};
use crate::error::{CurveError, ValidationError};
use crate::liquidity::{weight_from_ratio, LiquidityMode};

/// Ingestion failure with its source location (1-based line; header is line 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestError {
    pub source: String,
    pub line: Option<u64>,
    pub column: Option<String>,
    pub message: String,
}

impl IngestError {
    fn new(source: &str, line: Option<u64>, column: Option<&str>, message: impl Into<String>) -> Self {
        Self {
            source: source.to_string(),
            line,
            column: column.map(str::to_string),
            message: message.into(),
        }
    }
}

impl fmt::Display for IngestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.source)?;
        if let Some(line) = self.line {
            write!(f, " line {line}")?;
        }
        if let Some(col) = &self.column {
            write!(f, " column {col}")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for IngestError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstrumentKind {
    Zcb,
    ParSwap,
    Cashflows,
}

impl InstrumentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InstrumentKind::Zcb => "zcb",
            InstrumentKind::ParSwap => "parswap",
            InstrumentKind::Cashflows => "cashflows",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zcb" => Some(InstrumentKind::Zcb),
            "parswap" => Some(InstrumentKind::ParSwap),
            "cashflows" => Some(InstrumentKind::Cashflows),
            _ => None,
        }
    }
}

/// One validated row of an instruments file.
#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentRow {
    pub line: u64,
    pub id: String,
    pub kind: InstrumentKind,
    pub maturity: Option<f64>,
    pub rate_or_price: f64,
    /// Liquidity ratio `R`; 1 when the column is absent or blank.
    pub ratio: f64,
    pub schedule_file: Option<String>,
}

/// An ingested instrument with its liquidity classification.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketInstrument {
    pub row: InstrumentRow,
    /// Mode already mapped from `R`; excluded rows carry `Exact` here and are
    /// flagged by `liquidity`.
    pub instrument: Instrument<f64>,
    pub liquidity: LiquidityMode<f64>,
}

/// Instruments for a weighted fit: modes from liquidity, excluded rows dropped.
pub fn weighted_set(items: &[MarketInstrument]) -> Vec<Instrument<f64>> {
    items
        .iter()
        .filter(|m| m.liquidity != LiquidityMode::Excluded)
        .map(|m| m.instrument.clone())
        .collect()
}

/// Instruments for an exact fit: every row repriced exactly.
pub fn exact_set(items: &[MarketInstrument]) -> Vec<Instrument<f64>> {
    items
        .iter()
        .map(|m| {
            m.instrument
                .clone()
                .with_mode(FitMode::Exact)
                .expect("exact mode is always valid")
        })
        .collect()
}

/// Unit-notional annual fixed leg: `rate` at years `1..m−1`, `1 + rate` at
/// `m`, priced at par.
pub fn parswap_to_cashflows(maturity: u32, rate: f64) -> Result<(CashflowSchedule<f64>, f64), ValidationError> {
    if maturity < 1 {
        return Err(ValidationError::new("maturity", "par swap needs at least one year"));
    }
    if !(rate > -1.0 && rate.is_finite()) {
        return Err(ValidationError::new("rate", format!("must be finite and > -1, got {rate}")));
    }
    let flows = (1..=maturity)
        .map(|y| (f64::from(y), if y == maturity { 1.0 + rate } else { rate }))
        .collect();
    Ok((CashflowSchedule::new(flows)?, 1.0))
}

struct Columns {
    id: usize,
    kind: usize,
    maturity: Option<usize>,
    rate_or_price: usize,
    ratio: Option<usize>,
    schedule_file: Option<usize>,
}

fn find_columns(source: &str, header: &csv::StringRecord) -> Result<Columns, IngestError> {
    let find = |names: &[&str]| {
        header
            .iter()
            .position(|h| names.iter().any(|n| h.trim().eq_ignore_ascii_case(n)))
    };
    let required = |names: &[&str]| {
        find(names).ok_or_else(|| IngestError::new(source, Some(1), Some(names[0]), "required column missing from header"))
    };
    Ok(Columns {
        id: required(&["id"])?,
        kind: required(&["kind"])?,
        maturity: find(&["maturity"]),
        rate_or_price: required(&["rate_or_price", "rate", "price"])?,
        ratio: find(&["R", "liquidity_ratio"]),
        schedule_file: find(&["schedule_file"]),
    })
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

fn parse_number(source: &str, line: u64, column: &str, raw: &str) -> Result<f64, IngestError> {
    let v: f64 = raw
        .parse()
        .map_err(|_| IngestError::new(source, Some(line), Some(column), format!("malformed number '{raw}'")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(IngestError::new(source, Some(line), Some(column), format!("non-finite number '{raw}'")))
    }
}

/// Parses and validates the rows of an instruments file.
pub fn parse_rows(text: &str) -> Result<Vec<InstrumentRow>, IngestError> {
    parse_rows_from("instruments", text)
}

fn parse_rows_from(source: &str, text: &str) -> Result<Vec<InstrumentRow>, IngestError> {
    let mut rdr = reader(text);
    let header = rdr
        .headers()
        .map_err(|e| IngestError::new(source, Some(1), None, e.to_string()))?
        .clone();
    if header.iter().all(|h| h.is_empty()) {
        return Err(IngestError::new(source, None, None, "empty file: header row missing"));
    }
    let cols = find_columns(source, &header)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line());
            IngestError::new(source, line, None, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let cell = |i: usize| rec.get(i).unwrap_or("");
        let opt_cell = |i: Option<usize>| i.map(cell).filter(|s| !s.is_empty());

        let id = cell(cols.id).to_string();
        if id.is_empty() {
            return Err(IngestError::new(source, Some(line), Some("id"), "empty id"));
        }
        if rows.iter().any(|r: &InstrumentRow| r.id == id) {
            return Err(IngestError::new(source, Some(line), Some("id"), format!("duplicate id '{id}'")));
        }
        let kind = InstrumentKind::parse(cell(cols.kind)).ok_or_else(|| {
            IngestError::new(source, Some(line), Some("kind"), format!("unknown kind '{}'", cell(cols.kind)))
        })?;
        let maturity = opt_cell(cols.maturity)
            .map(|raw| parse_number(source, line, "maturity", raw))
            .transpose()?;
        let rate_or_price = parse_number(source, line, "rate_or_price", cell(cols.rate_or_price))?;
        let ratio = match opt_cell(cols.ratio) {
            Some(raw) => parse_number(source, line, "R", raw)?,
            None => 1.0,
        };
        if !(0.0..=1.0).contains(&ratio) {
            return Err(IngestError::new(source, Some(line), Some("R"), format!("ratio {ratio} outside [0, 1]")));
        }
        let schedule_file = opt_cell(cols.schedule_file).map(str::to_string);

        match kind {
            InstrumentKind::Zcb | InstrumentKind::ParSwap => {
                let m = maturity.ok_or_else(|| {
                    IngestError::new(source, Some(line), Some("maturity"), format!("required for kind {}", kind.as_str()))
                })?;
                if !(m > 0.0) {
                    return Err(IngestError::new(source, Some(line), Some("maturity"), "must be positive"));
                }
                if kind == InstrumentKind::ParSwap && (m.fract() != 0.0 || m > f64::from(u32::MAX)) {
                    return Err(IngestError::new(
                        source,
                        Some(line),
                        Some("maturity"),
                        "par swap maturity must be a whole number of years",
                    ));
                }
            }
            InstrumentKind::Cashflows => {
                if schedule_file.is_none() {
                    return Err(IngestError::new(
                        source,
                        Some(line),
                        Some("schedule_file"),
                        "required for kind cashflows",
                    ));
                }
            }
        }
        rows.push(InstrumentRow {
            line,
            id,
            kind,
            maturity,
            rate_or_price,
            ratio,
            schedule_file,
        });
    }
    if rows.is_empty() {
        return Err(IngestError::new(source, None, None, "no instrument rows"));
    }
    Ok(rows)
}

/// Parses a cash-flow schedule file with columns `time, amount`.
pub fn parse_schedule(source: &str, text: &str) -> Result<CashflowSchedule<f64>, IngestError> {
    let mut rdr = reader(text);
    let header = rdr
        .headers()
        .map_err(|e| IngestError::new(source, Some(1), None, e.to_string()))?
        .clone();
    let pos = |name: &str| {
        header
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| IngestError::new(source, Some(1), Some(name), "required column missing from header"))
    };
    let (ti, ai) = (pos("time")?, pos("amount")?);
    let mut flows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| IngestError::new(source, e.position().map(|p| p.line()), None, e.to_string()))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let t = parse_number(source, line, "time", rec.get(ti).unwrap_or(""))?;
        let a = parse_number(source, line, "amount", rec.get(ai).unwrap_or(""))?;
        flows.push((t, a));
    }
    CashflowSchedule::new(flows).map_err(|e| IngestError::new(source, None, None, e.to_string()))
}

/// Builds instruments from parsed rows, mapping `R` to fit modes with weight
/// scale `scale` (`C`). `resolve` loads schedule files by name.
pub fn build_instruments(
    rows: Vec<InstrumentRow>,
    scale: f64,
    resolve: impl Fn(&str) -> io::Result<String>,
) -> Result<Vec<MarketInstrument>, IngestError> {
    let src = "instruments";
    rows.into_iter()
        .map(|row| {
            let at = |col: Option<&str>, msg: String| IngestError::new(src, Some(row.line), col, msg);
            let (cashflows, price) = match row.kind {
                InstrumentKind::Zcb => {
                    let t = row.maturity.expect("checked at parse");
                    let cf = CashflowSchedule::zero_coupon(t).map_err(|e| at(Some("maturity"), e.to_string()))?;
                    (cf, row.rate_or_price)
                }
                InstrumentKind::ParSwap => {
                    let m = row.maturity.expect("checked at parse") as u32;
                    parswap_to_cashflows(m, row.rate_or_price).map_err(|e| at(Some("rate_or_price"), e.to_string()))?
                }
                InstrumentKind::Cashflows => {
                    let file = row.schedule_file.as_deref().expect("checked at parse");
                    let text = resolve(file).map_err(|e| at(Some("schedule_file"), format!("cannot read '{file}': {e}")))?;
                    (parse_schedule(file, &text)?, row.rate_or_price)
                }
            };
            let liquidity = weight_from_ratio(row.ratio, scale).map_err(|e| at(Some("R"), e.to_string()))?;
            let mode = liquidity.fit_mode().unwrap_or(FitMode::Exact);
            let instrument = Instrument::new(row.id.clone(), cashflows, price, mode)
                .map_err(|e| at(Some("rate_or_price"), e.to_string()))?;
            Ok(MarketInstrument {
                row,
                instrument,
                liquidity,
            })
        })
        .collect()
}

/// [`parse_rows`] followed by [`build_instruments`].
pub fn parse_instruments(
    text: &str,
    scale: f64,
    resolve: impl Fn(&str) -> io::Result<String>,
) -> Result<Vec<MarketInstrument>, IngestError> {
    build_instruments(parse_rows(text)?, scale, resolve)
}

/// Writes rows back in the canonical column order. Numbers use the shortest
/// representation that parses back to the same value.
pub fn write_rows(rows: &[InstrumentRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "kind", "maturity", "rate_or_price", "R", "schedule_file"])
        .expect("in-memory write");
    for r in rows {
        w.write_record([
            r.id.clone(),
            r.kind.as_str().to_string(),
            r.maturity.map(|m| m.to_string()).unwrap_or_default(),
            r.rate_or_price.to_string(),
            r.ratio.to_string(),
            r.schedule_file.clone().unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

/// `%.12g`-style formatting: 12 significant digits, trailing zeros trimmed,
/// scientific notation outside `[1e-5, 1e12)`.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        trim_zeros(&fixed)
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// One row of a curve table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub term: f64,
    pub discount_factor: f64,
    pub spot_continuous: f64,
    pub spot_annual: f64,
    pub forward_instantaneous: f64,
}

/// Curve values on a term mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub rows: Vec<CurveRow>,
}

pub const CURVE_COLUMNS: [&str; 5] = [
    "term",
    "discount_factor",
    "spot_continuous",
    "spot_annual",
    "forward_instantaneous",
];

/// `start, start + step, …` up to `end` (inclusive within a small slack),
/// computed by multiplication so the points do not drift.
pub fn mesh(start: f64, end: f64, step: f64) -> Result<Vec<f64>, ValidationError> {
    if !(start >= 0.0 && start.is_finite() && end.is_finite() && end >= start) {
        return Err(ValidationError::new("mesh", format!("need 0 <= start <= end, got [{start}, {end}]")));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(ValidationError::new("mesh", format!("step must be positive, got {step}")));
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

/// Evaluates `curve` on `terms`. At term 0 the spot columns hold their
/// limit, the instantaneous forward at 0.
pub fn curve_table(curve: &FittedCurve<f64>, terms: &[f64]) -> Result<CurveTable, CurveError> {
    if let Some(w) = terms.windows(2).find(|w| !(w[0] < w[1])) {
        return Err(CurveError::Domain {
            term: w[1],
            reason: "terms must be strictly increasing",
        });
    }
    let rows = terms
        .iter()
        .map(|&t| {
            let fwd = curve.forward_instantaneous(t)?;
            let spot = if t == 0.0 { fwd } else { curve.spot_continuous(t)? };
            Ok(CurveRow {
                term: t,
                discount_factor: curve.price(t),
                spot_continuous: spot,
                spot_annual: spot.exp_m1(),
                forward_instantaneous: fwd,
            })
        })
        .collect::<Result<Vec<_>, CurveError>>()?;
    Ok(CurveTable { rows })
}

impl CurveTable {
    fn fields(r: &CurveRow) -> [String; 5] {
        [
            format_sig12(r.term),
            format_sig12(r.discount_factor),
            format_sig12(r.spot_continuous),
            format_sig12(r.spot_annual),
            format_sig12(r.forward_instantaneous),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CURVE_COLUMNS).expect("in-memory write");
        for r in &self.rows {
            w.write_record(Self::fields(r)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }

    pub fn from_csv(text: &str) -> Result<Self, IngestError> {
        let src = "curve";
        let mut rdr = reader(text);
        let header = rdr
            .headers()
            .map_err(|e| IngestError::new(src, Some(1), None, e.to_string()))?
            .clone();
        if header.iter().ne(CURVE_COLUMNS.iter().copied()) {
            return Err(IngestError::new(src, Some(1), None, "unexpected curve header"));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| IngestError::new(src, e.position().map(|p| p.line()), None, e.to_string()))?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let v = |i: usize| parse_number(src, line, CURVE_COLUMNS[i], rec.get(i).unwrap_or(""));
            rows.push(CurveRow {
                term: v(0)?,
                discount_factor: v(1)?,
                spot_continuous: v(2)?,
                spot_annual: v(3)?,
                forward_instantaneous: v(4)?,
            });
        }
        Ok(Self { rows })
    }
}

/// Writes `curve` on `terms` as CSV.
pub fn export_curve(curve: &FittedCurve<f64>, terms: &[f64]) -> Result<String, CurveError> {
    Ok(curve_table(curve, terms)?.to_csv())
}

/// Side-by-side CSV of several labelled tables on the same mesh: a `term`
/// column followed by `label:column` groups in the given order.
pub fn export_compare(tables: &[(String, CurveTable)]) -> Result<String, ValidationError> {
    let first = tables
        .first()
        .ok_or_else(|| ValidationError::new("variants", "nothing to compare"))?;
    let terms: Vec<f64> = first.1.rows.iter().map(|r| r.term).collect();
    for (label, t) in tables {
        if t.rows.len() != terms.len() || t.rows.iter().zip(&terms).any(|(r, &x)| r.term != x) {
            return Err(ValidationError::new("mesh", format!("variant {label} uses a different mesh")));
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["term".to_string()];
    for (label, _) in tables {
        header.extend(CURVE_COLUMNS[1..].iter().map(|c| format!("{label}:{c}")));
    }
    w.write_record(&header).expect("in-memory write");
    for (i, &term) in terms.iter().enumerate() {
        let mut rec = vec![format_sig12(term)];
        for (_, t) in tables {
            rec.extend(CurveTable::fields(&t.rows[i]).into_iter().skip(1));
        }
        w.write_record(&rec).expect("in-memory write");
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 labels"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::CurveConfig;
    use proptest::prelude::*;

    fn no_files(name: &str) -> io::Result<String> {
        Err(io::Error::new(io::ErrorKind::NotFound, name.to_string()))
    }

    #[test]
    fn single_parswap() {
        let got = parse_instruments("id,kind,maturity,rate,R\ns10,parswap,10,0.012,1", 1.0, no_files).unwrap();
        assert_eq!(got.len(), 1);
        let ins = &got[0].instrument;
        assert_eq!(ins.id(), "s10");
        assert!(ins.is_exact());
        assert_eq!(ins.price(), 1.0);
        assert_eq!(ins.cashflows().flows().len(), 10);
        assert_eq!(ins.cashflows().flows()[9], (10.0, 1.012));
    }

    #[test]
    fn half_liquid_row_is_weighted() {
        let got = parse_instruments("id,kind,maturity,rate,R\ns30,parswap,30,0.01,0.5", 2.0, no_files).unwrap();
        match got[0].instrument.mode() {
            FitMode::Weighted(w) => assert!((w - 2.0 * std::f64::consts::LN_2).abs() < 1e-15),
            m => panic!("{m:?}"),
        }
    }

    #[test]
    fn zero_liquidity_is_excluded_from_weighted_set() {
        let got = parse_instruments(
            "id,kind,maturity,rate,R\na,zcb,5,0.9,0\nb,zcb,6,0.88,1",
            1.0,
            no_files,
        )
        .unwrap();
        assert_eq!(got[0].liquidity, LiquidityMode::Excluded);
        let w = weighted_set(&got);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].id(), "b");
        assert_eq!(exact_set(&got).len(), 2);
    }

    #[test]
    fn empty_file_fails() {
        assert!(parse_rows("").is_err());
        assert!(parse_rows("id,kind,maturity,rate\n").is_err());
    }

    #[test]
    fn errors_carry_locations() {
        let e = parse_rows("id,kind,maturity,rate\na,zcb,5,0.9\nb,zcb,x,0.9").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert_eq!(e.column.as_deref(), Some("maturity"));

        let e = parse_rows("id,kind,maturity,rate\na,bond,5,0.9").unwrap_err();
        assert_eq!((e.line, e.column.as_deref()), (Some(2), Some("kind")));

        let e = parse_rows("id,kind,maturity,rate\na,zcb,5,0.9\na,zcb,6,0.9").unwrap_err();
        assert_eq!((e.line, e.column.as_deref()), (Some(3), Some("id")));

        let e = parse_rows("id,kind,maturity,rate,R\na,zcb,5,0.9,1.5").unwrap_err();
        assert_eq!((e.line, e.column.as_deref()), (Some(2), Some("R")));

        let e = parse_rows("id,kind,maturity,rate\na,parswap,2.5,0.01").unwrap_err();
        assert_eq!(e.column.as_deref(), Some("maturity"));

        let e = parse_rows("id,maturity,rate\na,5,0.9").unwrap_err();
        assert_eq!(e.column.as_deref(), Some("kind"));

        let e = parse_instruments("id,kind,maturity,rate\na,zcb,5,-0.9", 1.0, no_files).unwrap_err();
        assert_eq!(e.line, Some(2));
    }

    #[test]
    fn cashflow_rows_use_resolver() {
        let text = "id,kind,maturity,rate_or_price,R,schedule_file\nb,cashflows,,0.98,1,b.csv";
        let got = parse_instruments(text, 1.0, |name| {
            assert_eq!(name, "b.csv");
            Ok("time,amount\n0.5,0.02\n1.5,1.02\n".to_string())
        })
        .unwrap();
        assert_eq!(got[0].instrument.cashflows().flows(), &[(0.5, 0.02), (1.5, 1.02)]);
        let missing = parse_instruments(text, 1.0, no_files).unwrap_err();
        assert_eq!(missing.column.as_deref(), Some("schedule_file"));
        assert!(parse_rows("id,kind,rate_or_price\nb,cashflows,0.98").is_err());
    }

    #[test]
    fn parswap_schedules() {
        let (cf, p) = parswap_to_cashflows(1, 0.04).unwrap();
        assert_eq!((cf.flows(), p), (&[(1.0, 1.04)][..], 1.0));
        let (cf, _) = parswap_to_cashflows(2, 0.04).unwrap();
        assert_eq!(cf.flows(), &[(1.0, 0.04), (2.0, 1.04)]);
        let (cf, _) = parswap_to_cashflows(3, 0.0).unwrap();
        assert_eq!(cf.flows(), &[(1.0, 0.0), (2.0, 0.0), (3.0, 1.0)]);
        assert!(parswap_to_cashflows(0, 0.04).is_err());
        assert!(parswap_to_cashflows(2, -1.0).is_err());
    }

    #[test]
    fn sig12_formatting() {
        assert_eq!(format_sig12(1.0), "1");
        assert_eq!(format_sig12(0.0), "0");
        assert_eq!(format_sig12(0.25), "0.25");
        assert_eq!(format_sig12(-0.038221212820197), "-0.0382212128202");
        assert_eq!(format_sig12(1234567.891234567), "1234567.89123");
        assert_eq!(format_sig12(1.5e-7), "1.5e-7");
        assert_eq!(format_sig12(2.0e15), "2e15");
        assert_eq!(format_sig12(60.0), "60");
    }

    #[test]
    fn flat_curve_export() {
        let f = 0.03;
        let curve = FittedCurve::classic(vec![], vec![], CurveConfig::classic(0.1, f).unwrap()).unwrap();
        let table = curve_table(&curve, &[0.0, 1.0]).unwrap();
        assert_eq!(table.rows[0].discount_factor, 1.0);
        assert!((table.rows[1].discount_factor - (-f).exp()).abs() < 1e-16);
        let csv = table.to_csv();
        assert!(csv.starts_with("term,discount_factor,spot_continuous,spot_annual,forward_instantaneous\n"));
        let back = CurveTable::from_csv(&csv).unwrap();
        for (a, b) in back.rows.iter().zip(&table.rows) {
            assert!((a.discount_factor - b.discount_factor).abs() < 1e-11);
            assert!((a.forward_instantaneous - b.forward_instantaneous).abs() < 1e-11);
        }
        assert_eq!(csv, export_curve(&curve, &[0.0, 1.0]).unwrap());
        assert!(curve_table(&curve, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn mesh_points() {
        assert_eq!(mesh(0.0, 1.0, 0.25).unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(mesh(0.0, 60.0, 0.25).unwrap().len(), 241);
        assert!(mesh(1.0, 0.0, 0.25).is_err());
        assert!(mesh(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn compare_rejects_mismatched_mesh() {
        let row = |t: f64| CurveRow {
            term: t,
            discount_factor: 1.0,
            spot_continuous: 0.0,
            spot_annual: 0.0,
            forward_instantaneous: 0.0,
        };
        let a = CurveTable { rows: vec![row(0.0), row(1.0)] };
        let b = CurveTable { rows: vec![row(0.0), row(2.0)] };
        assert!(export_compare(&[("a".into(), a.clone()), ("b".into(), b)]).is_err());
        let out = export_compare(&[("a".into(), a)]).unwrap();
        assert!(out.starts_with("term,a:discount_factor,a:spot_continuous"));
    }

    fn row_strategy() -> impl Strategy<Value = InstrumentRow> {
        (
            "[a-z][a-z0-9_]{0,6}",
            prop_oneof![Just(InstrumentKind::Zcb), Just(InstrumentKind::ParSwap), Just(InstrumentKind::Cashflows)],
            1u32..60,
            -0.05f64..1.5,
            0.0f64..=1.0,
        )
            .prop_map(|(id, kind, m, v, r)| {
                let round = |x: f64| format_sig12(x).parse::<f64>().unwrap();
                InstrumentRow {
                    line: 0,
                    id,
                    kind,
                    maturity: (kind != InstrumentKind::Cashflows).then_some(f64::from(m)),
                    rate_or_price: round(v),
                    ratio: round(r),
                    schedule_file: (kind == InstrumentKind::Cashflows).then(|| "s.csv".to_string()),
                }
            })
    }

    proptest! {
        #[test]
        fn rows_roundtrip(rows in proptest::collection::vec(row_strategy(), 1..8)) {
            let mut seen = std::collections::BTreeSet::new();
            let rows: Vec<_> = rows.into_iter().filter(|r| seen.insert(r.id.clone())).collect();
            let back = parse_rows(&write_rows(&rows)).unwrap();
            prop_assert_eq!(back.len(), rows.len());
            for (a, b) in back.iter().zip(&rows) {
                prop_assert_eq!(InstrumentRow { line: 0, ..a.clone() }, b.clone());
            }
        }

        #[test]
        fn sig12_roundtrip_is_close(x in -1e6f64..1e6) {
            let y: f64 = format_sig12(x).parse().unwrap();
            prop_assert!((x - y).abs() <= 5e-12 * x.abs().max(1e-300));
        }
    }
}
