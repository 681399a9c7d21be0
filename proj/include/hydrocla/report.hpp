#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hydrocla/network.hpp"
#include "hydrocla/topology.hpp"

namespace hydrocla {

enum class ReportFormat { table, json, csv };

/// A named table: text key columns followed by numeric value columns.
struct ReportTable {
  std::string name;
  std::vector<std::string> key_columns;
  std::vector<std::string> value_columns;
  struct Row {
    std::vector<std::string> keys;
    std::vector<double> values;
  };
  std::vector<Row> rows;
};

struct RunReport {
  using Value = std::variant<std::int64_t, double, std::string>;

  std::string command;
  std::size_t nodes = 0;
  std::size_t links = 0;
  std::size_t loops = 0;
  std::size_t fixed_heads = 0;
  std::vector<std::pair<std::string, Value>> diagnostics;
  std::vector<ReportTable> tables;
  /// Wall-clock seconds per stage. Only emitted on request, so that reports
  /// stay byte-identical between runs.
  std::vector<std::pair<std::string, double>> timings;

  void summarise(const Network& net, const TreeDecomposition& dec);
};

/// Renders the report. JSON numbers round-trip exactly; the text table uses
/// fixed decimals for reading, the CSV full precision.
std::string render(const RunReport& report, ReportFormat format, bool include_timings = false);

}  // namespace hydrocla
