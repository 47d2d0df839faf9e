#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mt2st/trainer.hpp"

namespace mt2st {

inline constexpr std::string_view kStepStreamVersion = "mt2st-steps-v1";

// Shortest decimal form that round-trips the exact double.
std::string format_double(double value);

// Line-delimited step records: a two-line header (version, column names)
// followed by one space-separated row per step, stable field order.
void write_step_stream(std::ostream& out, const RunResult& result);

struct StepStream {
  std::size_t aux_count = 0;
  std::vector<StepRecord> records;
};

StepStream read_step_stream(std::istream& in);

enum class SeriesKind { Loss, Gamma, Alignment };

std::optional<SeriesKind> parse_series_kind(std::string_view name);

// Plot-ready columnar text: first column is the step, remaining columns the
// requested series.
void emit_series(std::ostream& out, std::span<const StepRecord> records,
                 SeriesKind kind);

}  // namespace mt2st
