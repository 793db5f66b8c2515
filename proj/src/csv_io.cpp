#include "gpcmc/csv_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "gpcmc/errors.hpp"

namespace gpcmc::csv {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : line) {
    if (c == ',' || c == ' ' || c == '\t' || c == ';' || c == '\r') {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

bool parse_double(const std::string& token, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(token, &used);
    return used == token.size();
  } catch (...) {
    return false;
  }
}

// Rows of numbers; one optional header row at the top.
std::vector<std::vector<double>> read_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = tokenize(line);
    if (tokens.empty()) continue;
    std::vector<double> row;
    row.reserve(tokens.size());
    bool numeric = true;
    for (const std::string& t : tokens) {
      double v = 0.0;
      if (!parse_double(t, v)) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (header_allowed) {
        header_allowed = false;
        continue;
      }
      throw InvalidInputError("'" + path + "' line " + std::to_string(line_no) +
                              ": non-numeric value");
    }
    header_allowed = false;
    if (!rows.empty() && row.size() != rows.front().size())
      throw InvalidInputError("'" + path + "' line " + std::to_string(line_no) +
                              ": inconsistent column count");
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

}  // namespace

std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17e", v);
  return buf;
}

Eigen::MatrixXd read_matrix(const std::string& path) {
  const Eigen::MatrixXd m = to_matrix(read_rows(path));
  if (m.size() == 0) throw InvalidInputError("'" + path + "' contains no numeric rows");
  return m;
}

void write_matrix(const std::string& path, const Eigen::Ref<const Eigen::MatrixXd>& m) {
  std::ofstream out(path);
  if (!out) throw InvalidInputError("cannot write '" + path + "'");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_full(m(i, j));
    }
    out << '\n';
  }
}

Dataset read_training(const std::string& path) {
  const Eigen::MatrixXd m = read_matrix(path);
  if (m.cols() < 2)
    throw InvalidInputError("'" + path + "' needs feature columns plus a final label column");
  Dataset data;
  data.features = m.leftCols(m.cols() - 1);
  data.labels = m.col(m.cols() - 1);
  for (Eigen::Index i = 0; i < data.labels.size(); ++i) {
    if (data.labels[i] != 1.0 && data.labels[i] != -1.0)
      throw InvalidInputError("'" + path + "' row " + std::to_string(i + 1) +
                              ": label must be -1 or +1");
  }
  return data;
}

Eigen::MatrixXd read_features(const std::string& path, Eigen::Index expected_cols) {
  const auto rows = read_rows(path);
  if (rows.empty()) {
    return Eigen::MatrixXd(0, expected_cols < 0 ? 0 : expected_cols);
  }
  const Eigen::MatrixXd m = to_matrix(rows);
  if (expected_cols >= 0 && m.cols() != expected_cols)
    throw InvalidInputError("'" + path + "' has " + std::to_string(m.cols()) +
                            " columns; expected " + std::to_string(expected_cols));
  return m;
}

}  // namespace gpcmc::csv
