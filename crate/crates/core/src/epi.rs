//! County time series in the CSSE wide-CSV layout, their daily and rolling
//! 7-day transforms, and the roll-ups behind the summary lines.
//!
//! Counts stay raw counts throughout; nothing here computes rates.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};

use chrono::{Days, NaiveDate};
use regex::Regex;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Cases,
    Deaths,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Cases => "cases",
            Metric::Deaths => "deaths",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EpiError {
    #[error("header mismatch: {0}")]
    HeaderMismatch(String),
    #[error("dates not contiguous: {prev} is followed by {next}")]
    NonContiguousDates { prev: NaiveDate, next: NaiveDate },
    #[error("line {line}: bad value `{value}` in column `{column}`")]
    BadValue {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}: csv error: {reason}")]
    Csv { line: u64, reason: String },
    #[error("duplicate FIPS {0}")]
    DuplicateFips(String),
    #[error("unknown FIPS: {}", .0.join(", "))]
    UnknownFips(Vec<String>),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("rolling window must be at least 1")]
    WindowNonPositive,
}

/// Non-fatal findings from parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Warning {
    /// A negative cumulative value was replaced by the previous day's value.
    NegativeCumulative {
        line: u64,
        date: NaiveDate,
        value: i64,
    },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::NegativeCumulative { line, date, value } => {
                write!(f, "line {line}, {date}: negative cumulative {value} clamped to previous day")
            }
        }
    }
}

/// Row identity: a county FIPS code, or a record with no county geography
/// ("Unassigned", "Out of XX").
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Fips {
    Code(String),
    Geoless,
}

impl Fips {
    pub fn code(&self) -> Option<&str> {
        match self {
            Fips::Code(c) => Some(c),
            Fips::Geoless => None,
        }
    }
}

/// Normalizes a FIPS cell: `"36061.0"` → `36061`, `"1001"` → `01001`, empty → GEOLESS.
/// Codes 80000 and above are the upstream "Out of state"/"Unassigned"/vessel
/// placeholders and are GEOLESS too.
pub fn normalize_fips(raw: &str) -> Option<Fips> {
    let s = raw.trim();
    if s.is_empty() {
        return Some(Fips::Geoless);
    }
    let digits = match s.split_once('.') {
        Some((int, frac)) if frac.chars().all(|c| c == '0') => int,
        Some(_) => return None,
        None => s,
    };
    if digits.is_empty() || digits.len() > 5 || !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let n: u32 = digits.parse().ok()?;
    if n >= 80_000 {
        return Some(Fips::Geoless);
    }
    Some(Fips::Code(format!("{n:05}")))
}

/// Contiguous run of calendar days.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DateIndex {
    start: NaiveDate,
    len: usize,
}

impl DateIndex {
    pub fn new(start: NaiveDate, len: usize) -> Self {
        Self { start, len }
    }

    /// Validates that `dates` is a strictly increasing run of consecutive days.
    pub fn from_dates(dates: &[NaiveDate]) -> Result<Self, EpiError> {
        let start = *dates
            .first()
            .ok_or_else(|| EpiError::HeaderMismatch("no date columns".into()))?;
        for w in dates.windows(2) {
            if w[0].checked_add_days(Days::new(1)) != Some(w[1]) {
                return Err(EpiError::NonContiguousDates { prev: w[0], next: w[1] });
            }
        }
        Ok(Self::new(start, dates.len()))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn date(&self, i: usize) -> NaiveDate {
        self.start + Days::new(i as u64)
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.len).map(|i| self.date(i))
    }

    pub fn iso_dates(&self) -> Vec<String> {
        self.dates().map(|d| d.format("%Y-%m-%d").to_string()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountySeries {
    pub fips: Fips,
    pub name: String,
    pub state: String,
    pub cumulative: Vec<i64>,
}

impl CountySeries {
    pub fn latest(&self) -> i64 {
        self.cumulative.last().copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTable {
    metric: Metric,
    index: DateIndex,
    rows: Vec<CountySeries>,
    by_fips: HashMap<String, usize>,
}

/// A day on which a row's cumulative count went down.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decrease {
    pub row: usize,
    pub date: NaiveDate,
    pub from: i64,
    pub to: i64,
}

impl SeriesTable {
    pub fn new(metric: Metric, index: DateIndex, rows: Vec<CountySeries>) -> Result<Self, EpiError> {
        let mut by_fips = HashMap::new();
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.cumulative.len(), index.len(), "row not aligned to date index");
            if let Fips::Code(code) = &row.fips {
                if by_fips.insert(code.clone(), i).is_some() {
                    return Err(EpiError::DuplicateFips(code.clone()));
                }
            }
        }
        Ok(Self {
            metric,
            index,
            rows,
            by_fips,
        })
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn index(&self) -> &DateIndex {
        &self.index
    }

    pub fn rows(&self) -> &[CountySeries] {
        &self.rows
    }

    pub fn row(&self, fips: &str) -> Option<&CountySeries> {
        self.by_fips.get(fips).map(|&i| &self.rows[i])
    }

    pub fn contains(&self, fips: &str) -> bool {
        self.by_fips.contains_key(fips)
    }

    pub fn states(&self) -> BTreeSet<&str> {
        self.rows.iter().map(|r| r.state.as_str()).collect()
    }

    pub fn decreases(&self) -> Vec<Decrease> {
        let mut out = Vec::new();
        for (row, series) in self.rows.iter().enumerate() {
            for (i, w) in series.cumulative.windows(2).enumerate() {
                if w[1] < w[0] {
                    out.push(Decrease {
                        row,
                        date: self.index.date(i + 1),
                        from: w[0],
                        to: w[1],
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTable {
    pub table: SeriesTable,
    pub warnings: Vec<Warning>,
}

const METADATA: [&str; 11] = [
    "UID",
    "iso2",
    "iso3",
    "code3",
    "FIPS",
    "Admin2",
    "Province_State",
    "Country_Region",
    "Lat",
    "Long_",
    "Combined_Key",
];

fn parse_header_date(s: &str) -> Option<NaiveDate> {
    let (m, rest) = s.split_once('/')?;
    let (d, y) = rest.split_once('/')?;
    NaiveDate::from_ymd_opt(2000 + y.parse::<i32>().ok()?, m.parse().ok()?, d.parse().ok()?)
}

fn parse_count(raw: &str) -> Option<i64> {
    let s = raw.trim();
    s.parse::<i64>().ok().or_else(|| {
        let f: f64 = s.parse().ok()?;
        (f.fract() == 0.0 && f.abs() < 9e15).then_some(f as i64)
    })
}

/// Parses a CSSE US time-series file (cases or deaths).
pub fn parse_csse(src: impl Read, metric: Metric) -> Result<ParsedTable, EpiError> {
    let date_col = Regex::new(r"^\d{1,2}/\d{1,2}/\d{2}$").expect("static regex");
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(src);
    let header = rdr
        .headers()
        .map_err(|e| EpiError::HeaderMismatch(e.to_string()))?
        .clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    let first_date = names
        .iter()
        .position(|h| date_col.is_match(h))
        .ok_or_else(|| EpiError::HeaderMismatch("no M/D/YY date column".into()))?;

    let meta = &names[..first_date];
    let col = |name: &str| meta.iter().position(|h| *h == name);
    let mut required: Vec<&str> = METADATA.to_vec();
    if metric == Metric::Deaths {
        required.push("Population");
    }
    let missing: Vec<&str> = required.iter().copied().filter(|c| col(c).is_none()).collect();
    if !missing.is_empty() {
        return Err(EpiError::HeaderMismatch(format!(
            "{metric} file lacks metadata column(s) {}",
            missing.join(", ")
        )));
    }
    let (fips_col, admin2_col, state_col) = (col("FIPS").unwrap(), col("Admin2").unwrap(), col("Province_State").unwrap());

    let mut dates = Vec::with_capacity(names.len() - first_date);
    for h in &names[first_date..] {
        if !date_col.is_match(h) {
            return Err(EpiError::HeaderMismatch(format!("unexpected column `{h}` after dates")));
        }
        let d = parse_header_date(h).ok_or_else(|| EpiError::HeaderMismatch(format!("invalid date `{h}`")))?;
        dates.push(d);
    }
    let index = DateIndex::from_dates(&dates)?;

    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| EpiError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != names.len() {
            return Err(EpiError::Csv {
                line,
                reason: format!("expected {} fields, got {}", names.len(), rec.len()),
            });
        }
        let raw_fips = &rec[fips_col];
        let fips = normalize_fips(raw_fips).ok_or_else(|| EpiError::BadValue {
            line,
            column: "FIPS".into(),
            value: raw_fips.to_string(),
        })?;
        let mut cumulative = Vec::with_capacity(dates.len());
        for (k, raw) in rec.iter().skip(first_date).enumerate() {
            let v = parse_count(raw).ok_or_else(|| EpiError::BadValue {
                line,
                column: names[first_date + k].to_string(),
                value: raw.to_string(),
            })?;
            let v = if v < 0 {
                warnings.push(Warning::NegativeCumulative {
                    line,
                    date: dates[k],
                    value: v,
                });
                cumulative.last().copied().unwrap_or(0)
            } else {
                v
            };
            cumulative.push(v);
        }
        rows.push(CountySeries {
            fips,
            name: rec[admin2_col].trim().to_string(),
            state: rec[state_col].trim().to_string(),
            cumulative,
        });
    }
    Ok(ParsedTable {
        table: SeriesTable::new(metric, index, rows)?,
        warnings,
    })
}

/// Writes a table back in CSSE layout. Metadata the table does not keep
/// (UID, coordinates, population) is left blank.
pub fn write_csse(table: &SeriesTable, dst: impl Write) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(dst);
    let mut header: Vec<String> = METADATA.iter().map(|s| s.to_string()).collect();
    if table.metric == Metric::Deaths {
        header.push("Population".into());
    }
    header.extend(table.index.dates().map(|d| d.format("%-m/%-d/%y").to_string()));
    w.write_record(&header)?;
    for row in &table.rows {
        let mut rec = vec![
            String::new(),
            "US".into(),
            "USA".into(),
            "840".into(),
            row.fips.code().unwrap_or("").to_string(),
            row.name.clone(),
            row.state.clone(),
            "US".into(),
            String::new(),
            String::new(),
            format!("{}, {}, US", row.name, row.state),
        ];
        if table.metric == Metric::Deaths {
            rec.push(String::new());
        }
        rec.extend(row.cumulative.iter().map(i64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Day-over-day differences; corrections that would go negative clamp to zero.
pub fn to_daily(cumulative: &[i64]) -> Vec<i64> {
    let mut prev = 0;
    cumulative
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let d = if i == 0 { c } else { (c - prev).max(0) };
            prev = c;
            d
        })
        .collect()
}

/// Trailing-window sums; the first `window - 1` entries use the days available.
pub fn rolling_sum(daily: &[i64], window: usize) -> Result<Vec<i64>, EpiError> {
    if window == 0 {
        return Err(EpiError::WindowNonPositive);
    }
    let mut acc = 0;
    Ok(daily
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            acc += d;
            if i >= window {
                acc -= daily[i - window];
            }
            acc
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateSeries {
    #[serde(skip)]
    pub index: DateIndex,
    pub daily: Vec<i64>,
    pub rolling7: Vec<i64>,
    pub cumulative_latest: i64,
}

fn unknown(table: &SeriesTable, fips: &[impl AsRef<str>]) -> Vec<String> {
    fips.iter()
        .map(AsRef::as_ref)
        .filter(|f| !table.contains(f))
        .map(str::to_string)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Sums the members' cumulative series, then derives daily and rolling 7-day counts.
pub fn aggregate(table: &SeriesTable, fips: &[impl AsRef<str>]) -> Result<AggregateSeries, EpiError> {
    let missing = unknown(table, fips);
    if !missing.is_empty() {
        return Err(EpiError::UnknownFips(missing));
    }
    let members: BTreeSet<&str> = fips.iter().map(AsRef::as_ref).collect();
    let mut summed = vec![0i64; table.index.len()];
    for f in members {
        let row = table.row(f).expect("checked above");
        for (acc, v) in summed.iter_mut().zip(&row.cumulative) {
            *acc += v;
        }
    }
    let daily = to_daily(&summed);
    let rolling7 = rolling_sum(&daily, 7)?;
    Ok(AggregateSeries {
        index: table.index.clone(),
        daily,
        rolling7,
        cumulative_latest: summed.last().copied().unwrap_or(0),
    })
}

#[derive(Debug, Clone, Copy)]
pub enum Scope<'a> {
    /// County rows by FIPS; GEOLESS rows never match.
    Counties(&'a [String]),
    /// Every row of the state, GEOLESS rows included.
    State(&'a str),
    Nation,
}

pub fn latest_totals(table: &SeriesTable, scope: Scope<'_>) -> Result<i64, EpiError> {
    match scope {
        Scope::Counties(fips) => {
            let missing = unknown(table, fips);
            if !missing.is_empty() {
                return Err(EpiError::UnknownFips(missing));
            }
            let members: BTreeSet<&str> = fips.iter().map(String::as_str).collect();
            Ok(members.into_iter().filter_map(|f| table.row(f)).map(CountySeries::latest).sum())
        }
        Scope::State(state) => {
            let mut rows = table.rows.iter().filter(|r| r.state == state).peekable();
            if rows.peek().is_none() {
                return Err(EpiError::UnknownState(state.to_string()));
            }
            Ok(rows.map(CountySeries::latest).sum())
        }
        Scope::Nation => Ok(table.rows.iter().map(CountySeries::latest).sum()),
    }
}

/// `1234567` → `"1,234,567"`.
pub fn group_thousands(n: i64) -> String {
    let digits = n.unsigned_abs().to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3 + 1);
    if n < 0 {
        out.push('-');
    }
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

/// The three headline lines: local, state and national totals.
pub fn summary_sentence(
    local_cases: i64,
    local_deaths: i64,
    state_cases: i64,
    state_deaths: i64,
    state_name: &str,
    nation_cases: i64,
    nation_deaths: i64,
) -> [String; 3] {
    let g = group_thousands;
    [
        format!(
            "Since January, there have been {} cases and {} deaths within an hour's drive of you.",
            g(local_cases),
            g(local_deaths)
        ),
        format!(
            "{state_name} has had at least {} cases and {} deaths so far.",
            g(state_cases),
            g(state_deaths)
        ),
        format!(
            "{} Americans have been infected, {} have died.",
            g(nation_cases),
            g(nation_deaths)
        ),
    ]
}

/// Maps county FIPS codes onto the record that carries their counts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FipsAliases {
    map: BTreeMap<String, String>,
}

impl FipsAliases {
    pub fn new(map: BTreeMap<String, String>) -> Self {
        Self { map }
    }

    /// The five New York City boroughs reported as one record under 36061.
    pub fn new_york_city() -> Self {
        let map = ["36005", "36047", "36061", "36081", "36085"]
            .into_iter()
            .filter(|b| *b != "36061")
            .map(|b| (b.to_string(), "36061".to_string()))
            .collect();
        Self { map }
    }

    pub fn resolve<'a>(&'a self, fips: &'a str) -> &'a str {
        self.map.get(fips).map_or(fips, String::as_str)
    }

    /// Aliased, sorted and deduplicated.
    pub fn resolve_all<'a>(&self, fips: impl IntoIterator<Item = &'a str>) -> Vec<String> {
        fips.into_iter()
            .map(|f| self.resolve(f).to_string())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}
