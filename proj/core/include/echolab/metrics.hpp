#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "echolab/scenario.hpp"

namespace echolab {

// Caps keep dB aggregates finite when a numerator or denominator underflows.
inline constexpr double kMetricCapDb = 100.0;

// Echo return loss enhancement during far-end single talk:
// 10*log10(sum y1^2 / sum s_hat^2), capped to +-100 dB.
double erle_db(const std::vector<double>& mixture_ref, const std::vector<double>& estimate);

// BSS-Eval-style SDR with a time-invariant allowed-distortion filter: the
// estimate is projected onto the span of the reference delayed by 0..L-1
// (least squares); SDR = 10*log10(|s_target|^2 / |e|^2), capped to +-100 dB.
// Invariant to positive scaling of the estimate. Zero reference -> DomainError.
double projection_sdr_db(const std::vector<double>& reference,
                         const std::vector<double>& estimate, int filter_len = 32);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long tp = 0, fp = 0, fn = 0;
};

// Counts over (frame, direction) pairs; rows are flattened frames x 36 masks.
Prf doa_prf(const std::vector<std::uint8_t>& predicted, const std::vector<std::uint8_t>& labels);

struct MetricReport {
  std::string scenario_id;
  std::string test_set;
  TalkPattern pattern = TalkPattern::kDoubleTalk;
  std::string mode;                // fusion mode tag or "ssdoa"
  std::optional<double> erle_db;   // ST_FE only
  std::optional<double> sdr_db;    // only when near-end speech is present
  std::optional<double> doa_p, doa_r, doa_f1;
  int sdr_filter_len = 32;
};

struct AggregateRow {
  std::string test_set;
  TalkPattern pattern = TalkPattern::kDoubleTalk;
  std::string mode;
  int count = 0;
  std::optional<double> mean_erle_db;
  std::optional<double> mean_sdr_db;
  std::optional<double> mean_doa_p, mean_doa_r, mean_doa_f1;
};

// Group means per (test_set, pattern, mode), order-independent (compensated
// summation); groups appear in first-seen order of their keys.
std::vector<AggregateRow> aggregate_reports(const std::vector<MetricReport>& reports);

// CSV with header scenario_id,test_set,pattern,mode,erle_db,sdr_db,doa_p,doa_r,doa_f1;
// absent values are written as n/a.
std::string reports_csv(const std::vector<MetricReport>& reports);

// Aligned text table of aggregate rows (includes the n/a PESQ placeholder).
std::string aggregate_table(const std::vector<AggregateRow>& rows);
std::string aggregate_csv(const std::vector<AggregateRow>& rows);

}  // namespace echolab
