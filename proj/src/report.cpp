#include "hydrocla/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace hydrocla {

void RunReport::summarise(const Network& net, const TreeDecomposition& dec) {
  nodes = net.node_count();
  links = net.link_count();
  loops = dec.loop_count();
  fixed_heads = net.fixed_head_count();
}

namespace {

std::string format_double(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string text_value(const RunReport::Value& v, const char* double_fmt) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&v)) return format_double(double_fmt, *d);
  return std::get<std::string>(v);
}

std::string render_table(const RunReport& r, bool include_timings) {
  std::ostringstream out;
  out << "command: " << r.command << "\n";
  out << "network: n=" << r.nodes << " p=" << r.links << " l=" << r.loops << " f=" << r.fixed_heads
      << "\n";
  for (const auto& [key, value] : r.diagnostics) out << key << ": " << text_value(value, "%.6g") << "\n";
  if (include_timings) {
    for (const auto& [stage, seconds] : r.timings) {
      out << "time " << stage << ": " << format_double("%.6f", seconds) << " s\n";
    }
  }
  for (const auto& t : r.tables) {
    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> header = t.key_columns;
    header.insert(header.end(), t.value_columns.begin(), t.value_columns.end());
    cells.push_back(header);
    for (const auto& row : t.rows) {
      std::vector<std::string> line = row.keys;
      for (double v : row.values) line.push_back(format_double("%.6f", v));
      cells.push_back(std::move(line));
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& line : cells) {
      for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
    }
    out << "\n[" << t.name << "]\n";
    for (const auto& line : cells) {
      std::string text;
      for (std::size_t c = 0; c < line.size(); ++c) {
        const bool numeric = c >= t.key_columns.size();
        const std::string pad(width[c] - line[c].size(), ' ');
        if (c) text += "  ";
        text += numeric ? pad + line[c] : line[c] + pad;
      }
      while (!text.empty() && text.back() == ' ') text.pop_back();
      out << text << "\n";
    }
  }
  return out.str();
}

std::string render_csv(const RunReport& r, bool include_timings) {
  std::ostringstream out;
  out << "# command: " << r.command << "\n";
  out << "# network: n=" << r.nodes << " p=" << r.links << " l=" << r.loops << " f=" << r.fixed_heads
      << "\n";
  for (const auto& [key, value] : r.diagnostics) out << "# " << key << ": " << text_value(value, "%.17g") << "\n";
  if (include_timings) {
    for (const auto& [stage, seconds] : r.timings) {
      out << "# time " << stage << ": " << format_double("%.9f", seconds) << "\n";
    }
  }
  for (std::size_t i = 0; i < r.tables.size(); ++i) {
    const auto& t = r.tables[i];
    if (i) out << "\n";
    out << "# table: " << t.name << "\n";
    bool first = true;
    auto cell = [&](const std::string& text) {
      if (!first) out << ',';
      out << text;
      first = false;
    };
    for (const auto& c : t.key_columns) cell(c);
    for (const auto& c : t.value_columns) cell(c);
    out << "\n";
    for (const auto& row : t.rows) {
      first = true;
      for (const auto& k : row.keys) cell(k);
      for (double v : row.values) cell(format_double("%.17g", v));
      out << "\n";
    }
  }
  return out.str();
}

std::string render_json(const RunReport& r, bool include_timings) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["command"] = r.command;
  j["network"] = {{"nodes", r.nodes}, {"links", r.links}, {"loops", r.loops}, {"fixed_heads", r.fixed_heads}};
  ordered_json diag = ordered_json::object();
  for (const auto& [key, value] : r.diagnostics) {
    std::visit([&](const auto& v) { diag[key] = v; }, value);
  }
  j["diagnostics"] = diag;
  if (include_timings) {
    ordered_json times = ordered_json::object();
    for (const auto& [stage, seconds] : r.timings) times[stage] = seconds;
    j["timings"] = times;
  }
  ordered_json tables = ordered_json::object();
  for (const auto& t : r.tables) {
    ordered_json rows = ordered_json::array();
    for (const auto& row : t.rows) {
      ordered_json o;
      for (std::size_t c = 0; c < t.key_columns.size(); ++c) o[t.key_columns[c]] = row.keys[c];
      for (std::size_t c = 0; c < t.value_columns.size(); ++c) o[t.value_columns[c]] = row.values[c];
      rows.push_back(std::move(o));
    }
    tables[t.name] = std::move(rows);
  }
  j["tables"] = std::move(tables);
  return j.dump(2) + "\n";
}

}  // namespace

std::string render(const RunReport& report, ReportFormat format, bool include_timings) {
  switch (format) {
    case ReportFormat::json: return render_json(report, include_timings);
    case ReportFormat::csv: return render_csv(report, include_timings);
    case ReportFormat::table: break;
  }
  return render_table(report, include_timings);
}

}  // namespace hydrocla
