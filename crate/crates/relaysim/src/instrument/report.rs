//! Message-complexity reporting over the structured log.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::{EntryKind, Logger};
use crate::net::message::{MSG_RETURN_TO_SENDER, MSG_RPC_DONE};

/// Which message-sent entries a report counts.
#[derive(Clone, Debug)]
pub struct ReportConfig {
    /// Count courier- and RPC-machinery tags (`return-to-sender`,
    /// `rpc-done`) alongside application messages.
    pub include_infrastructure: bool,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            include_infrastructure: false,
        }
    }
}

/// Per-type counts of sent messages, plus the total.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MessageReport {
    pub counts: BTreeMap<String, u64>,
    pub total: u64,
}

impl MessageReport {
    /// Tally `message-sent` log entries by their `message-type` attribute.
    pub fn from_log(logger: &Logger, config: &ReportConfig) -> MessageReport {
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        let mut total = 0;
        logger.for_each(|entry| {
            if entry.kind != EntryKind::MessageSent {
                return;
            }
            let Some(message_type) = entry.attrs.get("message-type") else {
                return;
            };
            let infra =
                message_type == MSG_RETURN_TO_SENDER || message_type == MSG_RPC_DONE;
            if infra && !config.include_infrastructure {
                return;
            }
            *counts.entry(message_type.clone()).or_insert(0) += 1;
            total += 1;
        });
        MessageReport { counts, total }
    }

    /// Total restricted to the given tags.
    pub fn total_for(&self, tags: &[&str]) -> u64 {
        tags.iter()
            .map(|t| self.counts.get(*t).copied().unwrap_or(0))
            .sum()
    }
}

/// Render a report as columnar `TYPE: count` lines followed by a `TOTAL:`
/// line, types sorted by descending count then name.
pub fn report_render(report: &MessageReport) -> String {
    let mut rows: Vec<(&String, u64)> = report.counts.iter().map(|(k, v)| (k, *v)).collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let name_width = rows
        .iter()
        .map(|(name, _)| name.len() + 1)
        .chain(std::iter::once("TOTAL:".len()))
        .max()
        .unwrap_or(6);
    let mut out = String::new();
    for (name, count) in rows {
        writeln!(out, "{:<name_width$} {}", format!("{name}:"), count).unwrap();
    }
    writeln!(out, "{:<name_width$} {}", "TOTAL:", report.total).unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instrument::Logger;

    fn sent(logger: &Logger, message_type: &str) {
        logger.log_with("x", EntryKind::MessageSent, || {
            vec![("message-type", message_type.to_owned())]
        });
    }

    #[test]
    fn empty_report_renders_total_zero() {
        let logger = Logger::new(true);
        let report = MessageReport::from_log(&logger, &ReportConfig::default());
        assert_eq!(report.total, 0);
        assert_eq!(report_render(&report), "TOTAL: 0\n");
    }

    #[test]
    fn counts_and_total_agree_with_the_log() {
        let logger = Logger::new(true);
        for _ in 0..5 {
            sent(&logger, "msg-ping");
        }
        for _ in 0..3 {
            sent(&logger, "msg-pong");
        }
        let report = MessageReport::from_log(&logger, &ReportConfig::default());
        assert_eq!(report.counts["msg-ping"], 5);
        assert_eq!(report.counts["msg-pong"], 3);
        assert_eq!(report.total, 8);
        let text = report_render(&report);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("msg-ping:"));
        assert!(lines[1].starts_with("msg-pong:"));
        assert!(lines[2].starts_with("TOTAL:"));
        assert!(lines[2].ends_with('8'));
    }

    #[test]
    fn infrastructure_tags_are_excluded_by_default() {
        let logger = Logger::new(true);
        sent(&logger, "msg-data");
        sent(&logger, MSG_RPC_DONE);
        sent(&logger, MSG_RETURN_TO_SENDER);
        let default = MessageReport::from_log(&logger, &ReportConfig::default());
        assert_eq!(default.total, 1);
        let full = MessageReport::from_log(
            &logger,
            &ReportConfig {
                include_infrastructure: true,
            },
        );
        assert_eq!(full.total, 3);
        assert_eq!(full.counts[MSG_RPC_DONE], 1);
    }

    #[test]
    fn ties_sort_by_name() {
        let logger = Logger::new(true);
        sent(&logger, "msg-b");
        sent(&logger, "msg-a");
        let report = MessageReport::from_log(&logger, &ReportConfig::default());
        let text = report_render(&report);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("msg-a:"));
        assert!(lines[1].starts_with("msg-b:"));
    }
}
