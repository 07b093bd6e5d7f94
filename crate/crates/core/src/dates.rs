//! Calendar helpers: inclusive date ranges, weekday indexing, and
//! monthly report windows.

use chrono::{Datelike, Months, NaiveDate};
use serde::Deserialize;

/// Weekday labels in table order (index 0 = Monday).
pub const WEEKDAY_LABELS: [&str; 7] = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];

/// Index into weekday-keyed tables: Monday = 0 .. Sunday = 6.
pub fn weekday_index(date: NaiveDate) -> usize {
    date.weekday().num_days_from_monday() as usize
}

/// An inclusive range of calendar dates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Self {
        DateRange { start, end }
    }

    pub fn is_empty(&self) -> bool {
        self.start > self.end
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    /// Number of days in the range (0 when empty).
    pub fn len_days(&self) -> i64 {
        ((self.end - self.start).num_days() + 1).max(0)
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> {
        let range = *self;
        std::iter::successors(
            if range.is_empty() { None } else { Some(range.start) },
            move |d| d.succ_opt().filter(|n| *n <= range.end),
        )
    }

    /// Intersection with another range; empty ranges stay empty.
    pub fn clip(&self, other: &DateRange) -> DateRange {
        DateRange {
            start: self.start.max(other.start),
            end: self.end.min(other.end),
        }
    }
}

impl std::fmt::Display for DateRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

/// A labeled report window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSpec {
    pub label: String,
    pub range: DateRange,
}

/// Calendar-month windows covering `range`, clipped to it. Labels are
/// `YYYY-MM`. Partial first/last months produce partial windows.
pub fn monthly_windows(range: DateRange) -> Vec<WindowSpec> {
    let mut windows = Vec::new();
    if range.is_empty() {
        return windows;
    }
    let mut month_start = range
        .start
        .with_day(1)
        .expect("first of month is always valid");
    while month_start <= range.end {
        let next_month = month_start + Months::new(1);
        let month_end = next_month.pred_opt().expect("day before a month start");
        let clipped = DateRange::new(month_start.max(range.start), month_end.min(range.end));
        windows.push(WindowSpec {
            label: format!("{:04}-{:02}", month_start.year(), month_start.month()),
            range: clipped,
        });
        month_start = next_month;
    }
    windows
}
