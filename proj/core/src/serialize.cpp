#include "mt2st/serialize.hpp"

#include <charconv>
#include <sstream>
#include <system_error>

#include "mt2st/errors.hpp"

namespace mt2st {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

void write_row(std::ostream& out, const StepRecord& r) {
  out << r.step;
  for (double v : r.losses) out << ' ' << format_double(v);
  for (double v : r.gammas) out << ' ' << format_double(v);
  for (double v : r.encoder_grad_norms) out << ' ' << format_double(v);
  out << ' ' << format_double(r.alignment);
  out << ' ' << format_double(r.flops_expected);
  out << ' ' << format_double(r.flops_realized);
  out << ' ' << format_double(r.wall_ms);
  out << '\n';
}

}  // namespace

void write_step_stream(std::ostream& out, const RunResult& result) {
  const std::size_t aux_count =
      result.records.empty() ? 0 : result.records.front().gammas.size();
  out << "# " << kStepStreamVersion << " aux_count=" << aux_count << '\n';
  out << "# columns: step";
  for (std::size_t k = 0; k <= aux_count; ++k) out << " loss_" << k;
  for (std::size_t k = 1; k <= aux_count; ++k) out << " gamma_" << k;
  for (std::size_t k = 0; k <= aux_count; ++k) out << " gnorm_" << k;
  out << " alignment flops_expected flops_realized wall_ms\n";
  for (const StepRecord& r : result.records) write_row(out, r);
}

StepStream read_step_stream(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw InputError("step stream: missing header");
  const std::string expected = std::string("# ") + std::string(kStepStreamVersion);
  if (line.rfind(expected, 0) != 0)
    throw InputError("step stream: unrecognized header '" + line + "'");
  const auto pos = line.find("aux_count=");
  if (pos == std::string::npos)
    throw InputError("step stream: header lacks aux_count");
  StepStream stream;
  stream.aux_count = std::stoul(line.substr(pos + 10));
  if (!std::getline(in, line) || line.rfind("# columns:", 0) != 0)
    throw InputError("step stream: missing column header");

  const std::size_t k = stream.aux_count;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    StepRecord r;
    row >> r.step;
    r.losses.resize(k + 1);
    for (double& v : r.losses) row >> v;
    r.gammas.resize(k);
    for (double& v : r.gammas) row >> v;
    r.encoder_grad_norms.resize(k + 1);
    for (double& v : r.encoder_grad_norms) row >> v;
    row >> r.alignment >> r.flops_expected >> r.flops_realized >> r.wall_ms;
    if (row.fail())
      throw InputError("step stream: malformed row '" + line + "'");
    stream.records.push_back(std::move(r));
  }
  return stream;
}

std::optional<SeriesKind> parse_series_kind(std::string_view name) {
  if (name == "loss") return SeriesKind::Loss;
  if (name == "gamma") return SeriesKind::Gamma;
  if (name == "alignment") return SeriesKind::Alignment;
  return std::nullopt;
}

void emit_series(std::ostream& out, std::span<const StepRecord> records,
                 SeriesKind kind) {
  if (records.empty()) throw InputError("emit_series: run has no records");
  const std::size_t aux_count = records.front().gammas.size();
  out << "# step";
  switch (kind) {
    case SeriesKind::Loss:
      for (std::size_t k = 0; k <= aux_count; ++k) out << " loss_" << k;
      break;
    case SeriesKind::Gamma:
      for (std::size_t k = 1; k <= aux_count; ++k) out << " gamma_" << k;
      break;
    case SeriesKind::Alignment:
      out << " alignment";
      break;
  }
  out << '\n';
  for (const StepRecord& r : records) {
    out << r.step;
    switch (kind) {
      case SeriesKind::Loss:
        for (double v : r.losses) out << ' ' << format_double(v);
        break;
      case SeriesKind::Gamma:
        for (double v : r.gammas) out << ' ' << format_double(v);
        break;
      case SeriesKind::Alignment:
        out << ' ' << format_double(r.alignment);
        break;
    }
    out << '\n';
  }
}

}  // namespace mt2st
