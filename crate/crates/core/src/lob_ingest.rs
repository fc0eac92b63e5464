//! LOBSTER level-1 ingestion: quotes, mid-price series and price-change
//! events.
//!
//! Prices stay in LOBSTER integer units (dollars × 10000) until they leave
//! this module. Mid-prices are carried as `ask + bid` so that every mid and
//! every mid change is an exact integer; dividing by [`MID_SCALE`] gives
//! dollars.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::point_process::EventTimes;

/// LOBSTER price units per dollar.
pub const PRICE_SCALE: f64 = 10_000.0;

/// `ask + bid` units per dollar of mid-price.
pub const MID_SCALE: f64 = 2.0 * PRICE_SCALE;

/// One cent in LOBSTER price units.
pub const CENT: i64 = 100;

/// Mid-price granularity of a one-cent tick, in dollars.
pub const DEFAULT_DELTA: f64 = 0.005;

/// Top of book at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quote {
    /// Seconds after midnight.
    pub time: f64,
    pub ask_price: i64,
    pub ask_size: i64,
    pub bid_price: i64,
    pub bid_size: i64,
}

impl Quote {
    /// `ask + bid`, i.e. twice the mid in price units.
    pub fn mid_x2(&self) -> i64 {
        self.ask_price + self.bid_price
    }

    pub fn mid(&self) -> f64 {
        self.mid_x2() as f64 / MID_SCALE
    }
}

/// Trading session in seconds after midnight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionBounds {
    pub start: f64,
    pub end: f64,
}

impl SessionBounds {
    /// Regular NASDAQ hours, 09:30 to 16:00.
    pub const NASDAQ: SessionBounds = SessionBounds {
        start: 34_200.0,
        end: 57_600.0,
    };

    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && end > start) {
            return Err(param(format!("session bounds [{start}, {end}] are empty")));
        }
        Ok(Self { start, end })
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

/// Timestamped mid-prices of one asset over an observation span.
#[derive(Debug, Clone, PartialEq)]
pub struct TickSeries {
    times: Vec<f64>,
    mids_x2: Vec<i64>,
    session: SessionBounds,
}

impl TickSeries {
    /// Builds a series from raw `ask + bid` mids. The observation span
    /// defaults to the first and last tick.
    pub fn from_mids_x2(times: Vec<f64>, mids_x2: Vec<i64>) -> Result<Self> {
        if times.len() != mids_x2.len() {
            return Err(param("times and mids differ in length"));
        }
        if times.is_empty() {
            return Err(Error::InsufficientData("empty tick series".into()));
        }
        if let Some(i) = times.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::TimeNotMonotone {
                row: i + 2,
                time: times[i + 1],
            });
        }
        let session = SessionBounds {
            start: times[0],
            end: *times.last().unwrap(),
        };
        Ok(Self {
            times,
            mids_x2,
            session,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn mids_x2(&self) -> &[i64] {
        &self.mids_x2
    }

    /// Mid-prices in dollars.
    pub fn mid_prices(&self) -> Vec<f64> {
        self.mids_x2.iter().map(|&m| m as f64 / MID_SCALE).collect()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn session(&self) -> SessionBounds {
        self.session
    }

    /// Restricts the series to `session`. If quotes precede the session the
    /// last of them is carried forward as a tick at `session.start`, so the
    /// opening mid is known.
    pub fn clip(&self, session: SessionBounds) -> Result<Self> {
        let first_in = self.times.partition_point(|&t| t < session.start);
        let last_in = self.times.partition_point(|&t| t <= session.end);
        let mut times = Vec::with_capacity(last_in.saturating_sub(first_in) + 1);
        let mut mids = Vec::with_capacity(times.capacity());
        let carried = first_in > 0 && (first_in == last_in || self.times[first_in] > session.start);
        if carried {
            times.push(session.start);
            mids.push(self.mids_x2[first_in - 1]);
        }
        if last_in > first_in {
            times.extend_from_slice(&self.times[first_in..last_in]);
            mids.extend_from_slice(&self.mids_x2[first_in..last_in]);
        }
        if times.is_empty() {
            return Err(Error::InsufficientData(format!(
                "no quotes at or before session end {}",
                session.end
            )));
        }
        Ok(Self {
            times,
            mids_x2: mids,
            session,
        })
    }

    /// Mid in dollars in effect at time `t` (the last tick at or before
    /// `t`, or the first tick when `t` precedes it).
    pub fn mid_at(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&x| x <= t);
        self.mids_x2[idx.saturating_sub(1)] as f64 / MID_SCALE
    }

    /// Checks that every mid is an integer multiple of `delta` dollars.
    pub fn check_granularity(&self, delta: f64) -> Result<()> {
        let unit = delta_units(delta)?;
        match self.mids_x2.iter().position(|m| m % unit != 0) {
            None => Ok(()),
            Some(i) => Err(Error::Degenerate(format!(
                "mid {} at t={} is not a multiple of delta {delta}",
                self.mids_x2[i] as f64 / MID_SCALE,
                self.times[i]
            ))),
        }
    }
}

/// Converts a mid granularity in dollars to `ask + bid` units.
pub fn delta_units(delta: f64) -> Result<i64> {
    let units = (delta * MID_SCALE).round();
    if !(delta > 0.0) || units < 1.0 || ((delta * MID_SCALE) - units).abs() > 1e-6 {
        return Err(param(format!(
            "delta {delta} is not a positive multiple of 1/{MID_SCALE} dollars"
        )));
    }
    Ok(units as i64)
}

/// Mid-price changes: jump times and signed jump sizes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PriceChangeSeq {
    times: Vec<f64>,
    changes_x2: Vec<i64>,
}

impl PriceChangeSeq {
    pub fn from_parts(times: Vec<f64>, changes_x2: Vec<i64>) -> Result<Self> {
        if times.len() != changes_x2.len() {
            return Err(param("times and changes differ in length"));
        }
        if changes_x2.contains(&0) {
            return Err(param("a price change of zero is not an event"));
        }
        Ok(Self { times, changes_x2 })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Changes in `ask + bid` units.
    pub fn changes_x2(&self) -> &[i64] {
        &self.changes_x2
    }

    /// Changes in dollars.
    pub fn changes(&self) -> Vec<f64> {
        self.changes_x2
            .iter()
            .map(|&c| c as f64 / MID_SCALE)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The change times as a one-dimensional event stream on
    /// `[0, session.length()]`.
    pub fn event_times(&self, session: SessionBounds) -> Result<EventTimes> {
        let times = self
            .times
            .iter()
            .filter(|&&t| t >= session.start && t <= session.end)
            .map(|&t| t - session.start)
            .collect();
        EventTimes::new(vec![times], session.length())
    }
}

/// Options for [`price_change_events_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChangeOptions {
    /// Merge mid changes that share a timestamp into one net change.
    pub collapse_simultaneous: bool,
}

impl Default for ChangeOptions {
    fn default() -> Self {
        Self {
            collapse_simultaneous: true,
        }
    }
}

/// Reads the time column of a LOBSTER message file.
pub fn parse_message_times<R: BufRead>(reader: R) -> Result<Vec<f64>> {
    let mut times = Vec::new();
    for (row, fields) in rows(reader) {
        let fields = fields?;
        if fields.len() < 6 {
            return Err(Error::MalformedRow {
                row,
                expected: 6,
                found: fields.len(),
            });
        }
        let t: f64 = parse_field(&fields, 0, row)?;
        if let Some(&prev) = times.last() {
            if t < prev {
                return Err(Error::TimeNotMonotone { row, time: t });
            }
        }
        times.push(t);
    }
    Ok(times)
}

/// Parses a LOBSTER orderbook file, taking times row-aligned from its
/// message file. Only the first price level is read.
pub fn parse_orderbook_file<M: BufRead, O: BufRead>(
    messages: M,
    orderbook: O,
) -> Result<Vec<Quote>> {
    let times = parse_message_times(messages)?;
    let mut quotes = Vec::with_capacity(times.len());
    let mut seen = 0usize;
    for (row, fields) in rows(orderbook) {
        let fields = fields?;
        seen += 1;
        if fields.len() < 4 {
            return Err(Error::MalformedRow {
                row,
                expected: 4,
                found: fields.len(),
            });
        }
        let ask_price: i64 = parse_field(&fields, 0, row)?;
        let ask_size: i64 = parse_field(&fields, 1, row)?;
        let bid_price: i64 = parse_field(&fields, 2, row)?;
        let bid_size: i64 = parse_field(&fields, 3, row)?;
        if ask_price <= 0 || bid_price <= 0 {
            return Err(Error::NonPositivePrice {
                row,
                ask: ask_price,
                bid: bid_price,
            });
        }
        if ask_price < bid_price {
            return Err(Error::CrossedBook {
                row,
                ask: ask_price,
                bid: bid_price,
            });
        }
        if let Some(&time) = times.get(seen - 1) {
            quotes.push(Quote {
                time,
                ask_price,
                ask_size,
                bid_price,
                bid_size,
            });
        }
    }
    if seen != times.len() {
        return Err(Error::Alignment {
            messages: times.len(),
            orderbook: seen,
        });
    }
    Ok(quotes)
}

/// Opens and parses a message/orderbook file pair.
pub fn read_lobster_pair(message: &Path, orderbook: &Path) -> Result<Vec<Quote>> {
    let open = |p: &Path| {
        File::open(p).map(BufReader::new).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", p.display()),
            ))
        })
    };
    parse_orderbook_file(open(message)?, open(orderbook)?)
}

/// Mid-price series of a quote sequence, one tick per quote.
pub fn mid_price_series(quotes: &[Quote]) -> Result<TickSeries> {
    TickSeries::from_mids_x2(
        quotes.iter().map(|q| q.time).collect(),
        quotes.iter().map(Quote::mid_x2).collect(),
    )
}

/// Mid-price change events with simultaneous changes collapsed.
pub fn price_change_events(ticks: &TickSeries) -> PriceChangeSeq {
    price_change_events_with(ticks, ChangeOptions::default())
}

pub fn price_change_events_with(ticks: &TickSeries, opts: ChangeOptions) -> PriceChangeSeq {
    let mut out = PriceChangeSeq::default();
    let (times, mids) = (&ticks.times, &ticks.mids_x2);
    if mids.is_empty() {
        return out;
    }
    if !opts.collapse_simultaneous {
        for i in 1..mids.len() {
            let d = mids[i] - mids[i - 1];
            if d != 0 {
                out.times.push(times[i]);
                out.changes_x2.push(d);
            }
        }
        return out;
    }
    let mut before = mids[0];
    let mut i = 1;
    while i < mids.len() {
        // last tick of the run sharing this timestamp
        let mut j = i;
        while j + 1 < mids.len() && times[j + 1] == times[i] {
            j += 1;
        }
        let d = mids[j] - before;
        if d != 0 {
            out.times.push(times[i]);
            out.changes_x2.push(d);
        }
        before = mids[j];
        i = j + 1;
    }
    out
}

/// Writes quotes as a LOBSTER message/orderbook pair. Each message row is a
/// synthetic limit-order submission at the touch.
pub fn write_lobster_pair<W1: Write, W2: Write>(
    quotes: &[Quote],
    mut messages: W1,
    mut orderbook: W2,
) -> Result<()> {
    let mut prev: Option<&Quote> = None;
    for (id, q) in quotes.iter().enumerate() {
        let (price, size, direction) = match prev {
            Some(p) if p.bid_price != q.bid_price || p.bid_size != q.bid_size => {
                (q.bid_price, q.bid_size, 1)
            }
            _ => (q.ask_price, q.ask_size, -1),
        };
        writeln!(
            messages,
            "{:.9},1,{},{},{},{}",
            q.time,
            id + 1,
            size,
            price,
            direction
        )?;
        writeln!(
            orderbook,
            "{},{},{},{}",
            q.ask_price, q.ask_size, q.bid_price, q.bid_size
        )?;
        prev = Some(q);
    }
    messages.flush()?;
    orderbook.flush()?;
    Ok(())
}

/// Builds a one-cent-tick quote stream whose mid follows `mids` (dollars)
/// at `times`. The spread alternates between one and two cents; a mid step
/// of `k·δ` moves one side of the book `k` cents in total. With
/// `size_updates` a size-only quote is inserted halfway between changes.
pub fn synthesize_quotes(times: &[f64], mids: &[f64], size_updates: bool) -> Result<Vec<Quote>> {
    if times.len() != mids.len() || times.is_empty() {
        return Err(param(
            "synthesize_quotes needs matching, non-empty times and mids",
        ));
    }
    let targets: Vec<i64> = mids
        .iter()
        .map(|m| (m * MID_SCALE).round() as i64)
        .collect();
    if targets.iter().any(|t| t % CENT != 0) {
        return Err(param("mids must lie on the half-cent grid"));
    }
    // start with a one-cent spread, or two cents when the mid sits on a cent
    let first = targets[0];
    let (mut ask, mut bid) = if (first / CENT) % 2 == 0 {
        (first / 2 + CENT, first / 2 - CENT)
    } else {
        ((first + CENT) / 2, (first - CENT) / 2)
    };
    let mut out = Vec::with_capacity(times.len() * if size_updates { 2 } else { 1 });
    let mut size = 100;
    for (i, (&t, &target)) in times.iter().zip(&targets).enumerate() {
        if size_updates && i > 0 {
            size = if size == 100 { 200 } else { 100 };
            out.push(Quote {
                time: 0.5 * (times[i - 1] + t),
                ask_price: ask,
                ask_size: size,
                bid_price: bid,
                bid_size: 100,
            });
        }
        let mut sum = ask + bid;
        while sum < target {
            if ask - bid >= 2 * CENT {
                bid += CENT;
            } else {
                ask += CENT;
            }
            sum += CENT;
        }
        while sum > target {
            if ask - bid >= 2 * CENT {
                ask -= CENT;
            } else {
                bid -= CENT;
            }
            sum -= CENT;
        }
        if bid <= 0 {
            return Err(param(format!("synthetic bid fell to {bid} at t={t}")));
        }
        out.push(Quote {
            time: t,
            ask_price: ask,
            ask_size: size,
            bid_price: bid,
            bid_size: 100,
        });
    }
    Ok(out)
}

fn rows<R: BufRead>(reader: R) -> impl Iterator<Item = (usize, Result<Vec<String>>)> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Err(e) => Some((i + 1, Err(Error::Io(e)))),
            Ok(l) => {
                let l = l.trim_end_matches('\r');
                if l.trim().is_empty() {
                    None
                } else {
                    Some((
                        i + 1,
                        Ok(l.split(',').map(|f| f.trim().to_owned()).collect()),
                    ))
                }
            }
        })
}

fn parse_field<T: std::str::FromStr>(fields: &[String], column: usize, row: usize) -> Result<T> {
    fields[column].parse().map_err(|_| Error::Parse {
        row,
        column: column + 1,
        value: fields[column].clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quotes(mids_x2: &[i64], times: &[f64]) -> TickSeries {
        TickSeries::from_mids_x2(times.to_vec(), mids_x2.to_vec()).unwrap()
    }

    #[test]
    fn parses_lobster_row() {
        let msg = "34200.004241176,1,16113575,18,5853300,1\n";
        let ob = "5859400,200,5853900,18\n";
        let q = parse_orderbook_file(msg.as_bytes(), ob.as_bytes()).unwrap();
        assert_eq!(
            q,
            vec![Quote {
                time: 34200.004241176,
                ask_price: 5859400,
                ask_size: 200,
                bid_price: 5853900,
                bid_size: 18
            }]
        );
        assert!((q[0].mid() - 585.665).abs() < 1e-12);
    }

    #[test]
    fn empty_files_give_empty_sequence() {
        assert!(parse_orderbook_file(&b""[..], &b""[..]).unwrap().is_empty());
    }

    #[test]
    fn crlf_and_extra_levels_are_accepted() {
        let msg = "1.0,1,1,1,100,1\r\n2.0,1,2,1,100,1\r\n";
        let ob = "300,1,100,1,400,1,50,1\r\n300,1,200,1,400,1,100,1\r\n";
        let q = parse_orderbook_file(msg.as_bytes(), ob.as_bytes()).unwrap();
        assert_eq!(q.len(), 2);
        assert_eq!(q[1].bid_price, 200);
    }

    #[test]
    fn crossed_row_is_rejected() {
        let msg = "1.0,1,1,1,100,1\n2.0,1,2,1,100,1\n";
        let ob = "300,1,100,1\n100,1,300,1\n";
        match parse_orderbook_file(msg.as_bytes(), ob.as_bytes()) {
            Err(Error::CrossedBook {
                row: 2,
                ask: 100,
                bid: 300,
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_and_non_numeric_rows() {
        let msg = "1.0,1,1,1,100,1\n";
        assert!(matches!(
            parse_orderbook_file(msg.as_bytes(), "300,1,100\n".as_bytes()),
            Err(Error::MalformedRow {
                row: 1,
                expected: 4,
                found: 3
            })
        ));
        assert!(matches!(
            parse_orderbook_file(msg.as_bytes(), "300,x,100,1\n".as_bytes()),
            Err(Error::Parse {
                row: 1,
                column: 2,
                ..
            })
        ));
        assert!(matches!(
            parse_orderbook_file("abc,1,1,1,1,1\n".as_bytes(), "300,1,100,1\n".as_bytes()),
            Err(Error::Parse {
                row: 1,
                column: 1,
                ..
            })
        ));
    }

    #[test]
    fn row_count_mismatch_is_alignment_error() {
        let msg = "1.0,1,1,1,100,1\n2.0,1,1,1,100,1\n";
        let ob = "300,1,100,1\n";
        assert!(matches!(
            parse_orderbook_file(msg.as_bytes(), ob.as_bytes()),
            Err(Error::Alignment {
                messages: 2,
                orderbook: 1
            })
        ));
        let ob3 = "300,1,100,1\n300,1,100,1\n300,1,100,1\n";
        assert!(matches!(
            parse_orderbook_file(msg.as_bytes(), ob3.as_bytes()),
            Err(Error::Alignment {
                messages: 2,
                orderbook: 3
            })
        ));
    }

    #[test]
    fn backwards_time_is_rejected() {
        let msg = "2.0,1,1,1,100,1\n1.0,1,1,1,100,1\n";
        assert!(matches!(
            parse_message_times(msg.as_bytes()),
            Err(Error::TimeNotMonotone { row: 2, .. })
        ));
    }

    #[test]
    fn mid_of_equal_sides() {
        let q = Quote {
            time: 0.0,
            ask_price: 1_000_000,
            ask_size: 1,
            bid_price: 1_000_000,
            bid_size: 1,
        };
        assert_eq!(q.mid(), 100.0);
    }

    #[test]
    fn mid_series_keeps_unchanged_ticks() {
        let q: Vec<Quote> = [(200_000, 200_000), (200_000, 200_000), (200_100, 200_000)]
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| Quote {
                time: i as f64,
                ask_price: a,
                ask_size: 1,
                bid_price: b,
                bid_size: 1,
            })
            .collect();
        let ticks = mid_price_series(&q).unwrap();
        assert_eq!(ticks.len(), 3);
        assert_eq!(ticks.mid_prices(), vec![20.0, 20.0, 20.005]);
    }

    #[test]
    fn change_events_basic() {
        // 10.000, 10.000, 10.005
        let t = quotes(&[200_000, 200_000, 200_100], &[0.0, 1.0, 2.0]);
        let ev = price_change_events(&t);
        assert_eq!(ev.times(), &[2.0]);
        assert_eq!(ev.changes(), vec![0.005]);

        let flat = quotes(&[200_000; 4], &[0.0, 1.0, 2.0, 3.0]);
        assert!(price_change_events(&flat).is_empty());

        let back = quotes(&[200_000, 200_100, 200_000], &[0.0, 1.0, 2.0]);
        assert_eq!(price_change_events(&back).changes(), vec![0.005, -0.005]);
    }

    #[test]
    fn simultaneous_changes_collapse() {
        let t = quotes(
            &[200_000, 200_100, 200_200, 200_100, 200_100],
            &[0.0, 1.0, 1.0, 2.0, 2.0],
        );
        let ev = price_change_events(&t);
        assert_eq!(ev.changes_x2(), &[200, -100]);
        assert_eq!(ev.times(), &[1.0, 2.0]);

        let raw = price_change_events_with(
            &t,
            ChangeOptions {
                collapse_simultaneous: false,
            },
        );
        assert_eq!(raw.changes_x2(), &[100, 100, -100]);

        // a burst that nets to zero disappears
        let z = quotes(&[200_000, 200_100, 200_000], &[0.0, 1.0, 1.0]);
        assert!(price_change_events(&z).is_empty());
    }

    #[test]
    fn clip_carries_pre_session_mid() {
        let t = quotes(
            &[200_000, 200_100, 200_200, 200_300],
            &[10.0, 20.0, 30.0, 40.0],
        );
        let c = t.clip(SessionBounds::new(25.0, 35.0).unwrap()).unwrap();
        assert_eq!(c.times(), &[25.0, 30.0]);
        assert_eq!(c.mids_x2(), &[200_100, 200_200]);
        assert_eq!(c.mid_at(26.0), 200_100.0 / MID_SCALE);
    }

    #[test]
    fn delta_conversion() {
        assert_eq!(delta_units(0.005).unwrap(), 100);
        assert!(delta_units(0.0).is_err());
        assert!(delta_units(0.000_01).is_err());
    }

    #[test]
    fn synthesized_quotes_round_trip_through_files() {
        let times = [34200.5, 34201.25, 34203.0, 34203.5];
        let mids = [20.0, 20.005, 20.015, 20.01];
        let q = synthesize_quotes(&times, &mids, true).unwrap();
        assert!(q.iter().all(|q| q.ask_price > q.bid_price));
        let (mut m, mut o) = (Vec::new(), Vec::new());
        write_lobster_pair(&q, &mut m, &mut o).unwrap();
        let back = parse_orderbook_file(&m[..], &o[..]).unwrap();
        assert_eq!(back.len(), q.len());
        let ticks = mid_price_series(&back).unwrap();
        let ev = price_change_events(&ticks);
        assert_eq!(ev.changes_x2(), &[100, 200, -100]);
        assert_eq!(ev.times(), &times[1..]);
    }
}
