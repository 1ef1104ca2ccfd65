// MATPOWER case reader (bus, gen, branch and baseMVA only).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <string>

#include "monopf/errors.hpp"
#include "monopf/grid.hpp"

namespace monopf {
namespace {

struct Table {
  std::vector<std::vector<double>> rows;
  std::vector<int> lines;  // source line of each row
  int first_line = 0;
};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\'') quoted = !quoted;
    if (line[i] == '%' && !quoted) return line.substr(0, i);
  }
  return line;
}

double parse_number(std::string_view token, int line) {
  double value = 0.0;
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    if (token == "Inf" || token == "inf") return HUGE_VAL;
    if (token == "-Inf" || token == "-inf") return -HUGE_VAL;
    throw ParseError("malformed number '" + std::string(token) + "'", line);
  }
  return value;
}

// Splits the text into lines and extracts `mpc.<field> = ...` assignments.
class CaseScanner {
 public:
  explicit CaseScanner(std::string_view text) {
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto end = text.find('\n', start);
      lines_.push_back(text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
      if (end == std::string_view::npos) break;
      start = end + 1;
    }
  }

  void scan() {
    for (std::size_t li = 0; li < lines_.size(); ++li) {
      const auto line = trim(strip_comment(lines_[li]));
      if (!line.starts_with("mpc.")) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ParseError("assignment without '='", static_cast<int>(li) + 1);
      const std::string field(trim(line.substr(4, eq - 4)));
      auto rhs = trim(line.substr(eq + 1));
      if (rhs.starts_with("[")) {
        li = read_matrix(field, li, rhs.substr(1));
      } else if (rhs.starts_with("{")) {
        li = skip_cell(li, rhs);
      } else {
        if (rhs.ends_with(";")) rhs.remove_suffix(1);
        rhs = trim(rhs);
        if (!rhs.starts_with("'")) scalars_[field] = parse_number(rhs, static_cast<int>(li) + 1);
      }
    }
  }

  [[nodiscard]] const Table* table(const std::string& name) const {
    auto it = tables_.find(name);
    return it == tables_.end() ? nullptr : &it->second;
  }
  [[nodiscard]] std::optional<double> scalar(const std::string& name) const {
    auto it = scalars_.find(name);
    if (it == scalars_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::size_t read_matrix(const std::string& field, std::size_t li, std::string_view rest) {
    Table table;
    table.first_line = static_cast<int>(li) + 1;
    std::vector<double> row;
    int row_line = static_cast<int>(li) + 1;
    auto flush = [&] {
      if (row.empty()) return;
      if (!table.rows.empty() && row.size() != table.rows.front().size()) {
        throw ParseError("row of table '" + field + "' has " + std::to_string(row.size()) +
                             " columns, expected " + std::to_string(table.rows.front().size()),
                         row_line);
      }
      table.rows.push_back(std::move(row));
      table.lines.push_back(row_line);
      row.clear();
    };
    for (;;) {
      const int line_no = static_cast<int>(li) + 1;
      std::size_t pos = 0;
      bool closed = false;
      while (pos < rest.size()) {
        const char c = rest[pos];
        if (c == ' ' || c == '\t' || c == ',' || c == '\r') {
          ++pos;
        } else if (c == ';') {
          flush();
          ++pos;
        } else if (c == ']') {
          closed = true;
          break;
        } else {
          const auto end = rest.find_first_of(" \t,;]\r", pos);
          if (row.empty()) row_line = line_no;
          row.push_back(parse_number(rest.substr(pos, end - pos), line_no));
          pos = end == std::string_view::npos ? rest.size() : end;
        }
      }
      if (closed) {
        flush();
        break;
      }
      flush();  // newline terminates a row as in MATLAB
      if (++li >= lines_.size()) throw ParseError("unterminated matrix for '" + field + "'", table.first_line);
      rest = trim(strip_comment(lines_[li]));
    }
    tables_[field] = std::move(table);
    return li;
  }

  std::size_t skip_cell(std::size_t li, std::string_view rhs) {
    const int first = static_cast<int>(li) + 1;
    while (rhs.find('}') == std::string_view::npos) {
      if (++li >= lines_.size()) throw ParseError("unterminated cell array", first);
      rhs = strip_comment(lines_[li]);
    }
    return li;
  }

  std::vector<std::string_view> lines_;
  std::map<std::string, Table> tables_;
  std::map<std::string, double> scalars_;
};

void require_columns(const Table& t, std::size_t min_cols, const std::string& name) {
  if (t.rows.empty()) throw ParseError("table '" + name + "' is empty", t.first_line);
  if (t.rows.front().size() < min_cols) {
    throw ParseError("table '" + name + "' needs at least " + std::to_string(min_cols) + " columns",
                     t.lines.front());
  }
}

}  // namespace

Network parse_matpower(std::string_view text, std::vector<std::string>* warnings, std::string name) {
  CaseScanner scanner(text);
  scanner.scan();
  auto warn = [&](std::string msg) {
    if (warnings) warnings->push_back(std::move(msg));
  };

  const Table* bus_t = scanner.table("bus");
  const Table* gen_t = scanner.table("gen");
  const Table* branch_t = scanner.table("branch");
  if (!bus_t || !gen_t || !branch_t) throw ParseError("case must define mpc.bus, mpc.gen and mpc.branch");
  require_columns(*bus_t, 13, "bus");
  require_columns(*gen_t, 10, "gen");
  require_columns(*branch_t, 11, "branch");
  const double base_mva = scanner.scalar("baseMVA").value_or(100.0);
  if (!(base_mva > 0.0)) throw InvalidDataError("baseMVA must be positive");

  // Bus table, slack first then file order.
  struct RawBus {
    int id;
    BusType type;
    double vm;
    int line;
  };
  std::vector<RawBus> raw;
  int shunt_buses = 0;
  int isolated = 0;
  int slack_count = 0;
  for (std::size_t r = 0; r < bus_t->rows.size(); ++r) {
    const auto& row = bus_t->rows[r];
    const int code = static_cast<int>(row[1]);
    if (code == 4) {
      ++isolated;
      continue;
    }
    BusType type;
    switch (code) {
      case 1: type = BusType::pq; break;
      case 2: type = BusType::pv; break;
      case 3: type = BusType::slack; ++slack_count; break;
      default: throw ParseError("unknown bus type code " + std::to_string(code), bus_t->lines[r]);
    }
    if (row[4] != 0.0 || row[5] != 0.0) ++shunt_buses;
    raw.push_back({static_cast<int>(row[0]), type, row[7], bus_t->lines[r]});
  }
  if (slack_count == 0) throw InvalidDataError("case has no slack bus");
  if (slack_count > 1) throw InvalidDataError("case has " + std::to_string(slack_count) + " slack buses");
  std::stable_partition(raw.begin(), raw.end(), [](const RawBus& b) { return b.type == BusType::slack; });

  std::map<int, int> index;
  std::vector<Bus> buses;
  for (const auto& b : raw) {
    if (!index.emplace(b.id, static_cast<int>(buses.size())).second) {
      throw ParseError("duplicate bus id " + std::to_string(b.id), b.line);
    }
    buses.push_back({b.id, b.type, b.vm});
  }

  // Voltage setpoints from the first in-service generator at each bus.
  std::map<int, bool> has_gen;
  for (std::size_t r = 0; r < gen_t->rows.size(); ++r) {
    const auto& row = gen_t->rows[r];
    if (row[7] <= 0.0) continue;
    auto it = index.find(static_cast<int>(row[0]));
    if (it == index.end()) continue;
    if (!has_gen[it->second]) {
      has_gen[it->second] = true;
      buses[it->second].v_set = row[5];
    }
  }

  const double vbase = buses[0].v_set;
  if (!(vbase > 0.0)) throw InvalidDataError("slack voltage setpoint must be positive");
  if (std::abs(vbase - 1.0) > 1e-12) {
    warn("voltages renormalized by the slack magnitude " + std::to_string(vbase) + " p.u.");
    for (auto& b : buses) b.v_set /= vbase;
    buses[0].v_set = 1.0;
  }
  for (auto& b : buses) {
    if (b.type == BusType::pq) b.v_set = 1.0;
  }

  std::vector<Line> lines;
  int charging = 0;
  int taps = 0;
  for (std::size_t r = 0; r < branch_t->rows.size(); ++r) {
    const auto& row = branch_t->rows[r];
    if (row[10] <= 0.0) continue;
    const auto f = index.find(static_cast<int>(row[0]));
    const auto t = index.find(static_cast<int>(row[1]));
    if (f == index.end() || t == index.end()) {
      if (isolated > 0) continue;
      throw InvalidDataError("branch on line " + std::to_string(branch_t->lines[r]) + " references unknown bus");
    }
    const std::complex<double> z(row[2], row[3]);
    if (std::abs(z) == 0.0) {
      throw InvalidDataError("branch " + std::to_string(static_cast<int>(row[0])) + "-" +
                             std::to_string(static_cast<int>(row[1])) + " (line " +
                             std::to_string(branch_t->lines[r]) + ") has zero series impedance");
    }
    if (row[4] != 0.0) ++charging;
    if (row.size() > 9 && ((row[8] != 0.0 && row[8] != 1.0) || row[9] != 0.0)) ++taps;
    lines.push_back({f->second, t->second, 1.0 / z});
  }

  if (shunt_buses) warn("ignored bus shunts (Gs/Bs) at " + std::to_string(shunt_buses) + " bus(es)");
  if (charging) warn("ignored line charging susceptance on " + std::to_string(charging) + " branch(es)");
  if (taps) warn("ignored transformer tap/shift on " + std::to_string(taps) + " branch(es)");
  if (isolated) warn("dropped " + std::to_string(isolated) + " isolated bus(es)");

  return Network(std::move(name), std::move(buses), std::move(lines), vbase);
}

}  // namespace monopf
