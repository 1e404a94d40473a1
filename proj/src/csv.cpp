#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "precond/core.hpp"

namespace precond {
namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      cells.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell.push_back(ch);
    }
  }
  cells.push_back(cell);
  for (auto& c : cells) {
    const auto b = c.find_first_not_of(" \t");
    const auto e = c.find_last_not_of(" \t");
    c = (b == std::string::npos) ? std::string() : c.substr(b, e - b + 1);
  }
  return cells;
}

double parse_number(const std::string& cell, std::size_t row, const std::string& column) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    fail(ErrorCode::kInvalidInput, "missing or non-numeric value '" + cell + "' at data row " +
                                       std::to_string(row + 1) + ", column '" + column + "'");
  }
  return value;
}

}  // namespace

Dataset read_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::kInvalidInput, "CSV input is empty");
  const auto header = split_line(line);

  std::vector<std::string> outcome_cols;
  switch (schema.kind) {
    case OutcomeKind::kContinuous: outcome_cols = {schema.response_column}; break;
    case OutcomeKind::kSurvival: outcome_cols = {schema.time_column, schema.status_column}; break;
    case OutcomeKind::kClass: outcome_cols = {schema.class_column}; break;
  }
  std::vector<std::ptrdiff_t> outcome_pos(outcome_cols.size(), -1);
  std::vector<std::size_t> feature_pos;
  std::vector<std::string> ids;
  for (std::size_t c = 0; c < header.size(); ++c) {
    bool is_outcome = false;
    for (std::size_t k = 0; k < outcome_cols.size(); ++k) {
      if (header[c] == outcome_cols[k]) {
        if (outcome_pos[k] >= 0) fail(ErrorCode::kInvalidInput, "duplicate column " + header[c]);
        outcome_pos[k] = static_cast<std::ptrdiff_t>(c);
        is_outcome = true;
      }
    }
    if (!is_outcome) {
      feature_pos.push_back(c);
      ids.push_back(header[c]);
    }
  }
  for (std::size_t k = 0; k < outcome_cols.size(); ++k)
    if (outcome_pos[k] < 0)
      fail(ErrorCode::kInvalidInput, "CSV is missing outcome column '" + outcome_cols[k] + "'");

  std::vector<std::vector<double>> rows;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size())
      fail(ErrorCode::kInvalidInput, "data row " + std::to_string(row + 1) + " has " +
                                         std::to_string(cells.size()) + " cells, expected " +
                                         std::to_string(header.size()));
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) values[c] = parse_number(cells[c], row, header[c]);
    rows.push_back(std::move(values));
    ++row;
  }

  const auto n = static_cast<Index>(rows.size());
  Matrix x(n, static_cast<Index>(feature_pos.size()));
  for (Index i = 0; i < n; ++i)
    for (std::size_t j = 0; j < feature_pos.size(); ++j)
      x(i, static_cast<Index>(j)) = rows[static_cast<std::size_t>(i)][feature_pos[j]];

  auto column = [&](std::size_t k) {
    Vector v(n);
    for (Index i = 0; i < n; ++i)
      v[i] = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(outcome_pos[k])];
    return v;
  };
  auto as_int = [&](const Vector& v, const std::string& name) {
    IntVector out(v.size());
    for (Index i = 0; i < v.size(); ++i) {
      if (v[i] != std::round(v[i]))
        fail(ErrorCode::kInvalidInput, "column '" + name + "' must hold integers");
      out[i] = static_cast<int>(v[i]);
    }
    return out;
  };

  Outcome outcome;
  switch (schema.kind) {
    case OutcomeKind::kContinuous: outcome = ContinuousOutcome{column(0)}; break;
    case OutcomeKind::kSurvival:
      outcome = SurvivalOutcome{column(0), as_int(column(1), schema.status_column)};
      break;
    case OutcomeKind::kClass: outcome = ClassOutcome{as_int(column(0), schema.class_column), 0}; break;
  }
  return Dataset(std::move(x), std::move(outcome), std::move(ids));
}

Dataset read_csv_file(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path + "' for reading");
  return read_csv(in, schema);
}

void write_csv(std::ostream& out, const Dataset& d, const CsvSchema& schema) {
  out << std::setprecision(17);
  for (const auto& id : d.feature_ids()) out << id << ',';
  switch (d.kind()) {
    case OutcomeKind::kContinuous: out << schema.response_column; break;
    case OutcomeKind::kSurvival: out << schema.time_column << ',' << schema.status_column; break;
    case OutcomeKind::kClass: out << schema.class_column; break;
  }
  out << '\n';
  for (Index i = 0; i < d.n(); ++i) {
    for (Index j = 0; j < d.p(); ++j) out << d.x()(i, j) << ',';
    switch (d.kind()) {
      case OutcomeKind::kContinuous: out << d.y()[i]; break;
      case OutcomeKind::kSurvival:
        out << d.survival().time[i] << ',' << d.survival().status[i];
        break;
      case OutcomeKind::kClass: out << d.classes().label[i]; break;
    }
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const Dataset& d, const CsvSchema& schema) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  write_csv(out, d, schema);
  if (!out) fail(ErrorCode::kIo, "failed writing '" + path + "'");
}

}  // namespace precond
