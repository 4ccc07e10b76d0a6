#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "seqcd/error.hpp"
#include "seqcd/graph.hpp"

namespace seqcd {

/// Symmetric matrix of pairwise correlations with unit diagonal.
class CorrelationMatrix {
 public:
  static constexpr double kTolerance = 1e-8;

  CorrelationMatrix() = default;

  explicit CorrelationMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
    if (values_.rows() != values_.cols())
      throw Error(ErrorCode::NotSquare, std::to_string(values_.rows()) + " x " + std::to_string(values_.cols()));
    const auto n = values_.rows();
    double asym = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(values_(i, i) - 1.0) > kTolerance)
        throw Error(ErrorCode::BadEntry, "diagonal entry " + std::to_string(i) + " is not 1");
      for (Eigen::Index j = 0; j < n; ++j) {
        const double x = values_(i, j);
        if (!(x >= -1.0 - kTolerance && x <= 1.0 + kTolerance))
          throw Error(ErrorCode::BadEntry, "correlation outside [-1, 1] at (" + std::to_string(i) + ", " +
                                               std::to_string(j) + ")");
        asym = std::max(asym, std::abs(x - values_(j, i)));
      }
    }
    if (asym > kTolerance) throw Error(ErrorCode::NotSymmetric, "max asymmetry " + std::to_string(asym));
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  const Eigen::MatrixXd& values() const noexcept { return values_; }

 private:
  Eigen::MatrixXd values_;
};

/// Edge u-v iff C_uv >= tau (or |C_uv| >= tau with `absolute`).
inline AdjacencyMatrix threshold_correlation(const CorrelationMatrix& c, double tau, bool absolute = false) {
  if (!(tau > 0.0 && tau <= 1.0)) throw Error(ErrorCode::InvalidArgument, "tau must lie in (0, 1]");
  const std::size_t n = c.size();
  AdjacencyMatrix a(n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) {
      const double x = absolute ? std::abs(c(u, v)) : c(u, v);
      if (x >= tau) a.add_edge(u, v);
    }
  return a;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

template <typename T>
bool parse_number(std::string_view token, T& out) {
  token = trim(token);
  if (token.empty()) return false;
  if (token.front() == '+') token.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc{} && ptr == token.data() + token.size();
}

inline std::vector<std::vector<double>> read_csv_rows(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::string_view rest = line;
    while (true) {
      const auto comma = rest.find(',');
      const auto cell = rest.substr(0, comma);
      double x = 0.0;
      if (!parse_number(cell, x))
        throw Error(ErrorCode::BadEntry, path.string() + ":" + std::to_string(line_no) + ": cannot parse '" +
                                             std::string(trim(cell)) + "'");
      row.push_back(x);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    rows.push_back(std::move(row));
  }
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].size() != rows.size())
      throw Error(ErrorCode::NotSquare, path.string() + ": row " + std::to_string(i + 1) + " has " +
                                            std::to_string(rows[i].size()) + " entries, expected " +
                                            std::to_string(rows.size()));
  if (rows.empty()) throw Error(ErrorCode::NotSquare, path.string() + ": empty matrix");
  return rows;
}

}  // namespace detail

/// Edge-list format:
///   # comment
///   n <count>
///   u v        (0-based ids, one undirected edge per line)
/// Duplicate edges collapse; self-loops are rejected.
inline AdjacencyMatrix parse_edge_list(std::istream& in, const std::string& source = "<input>") {
  std::string line;
  std::size_t line_no = 0;
  std::optional<AdjacencyMatrix> a;
  auto fail = [&](ErrorCode code, const std::string& msg) {
    throw Error(code, source + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    std::istringstream fields{std::string(body)};
    std::string first, second, extra;
    fields >> first >> second;
    if (fields >> extra) fail(ErrorCode::ParseError, "expected two fields");
    if (!a) {
      std::size_t n = 0;
      if (first != "n" || !detail::parse_number(second, n)) fail(ErrorCode::ParseError, "expected header 'n <count>'");
      a.emplace(n);
      continue;
    }
    std::size_t u = 0, v = 0;
    if (!detail::parse_number(first, u) || !detail::parse_number(second, v))
      fail(ErrorCode::ParseError, "expected 'u v'");
    try {
      a->add_edge(u, v);
    } catch (const Error& e) {
      fail(e.code(), e.what());
    }
  }
  if (!a) throw Error(ErrorCode::ParseError, source + ": missing header 'n <count>'");
  return *std::move(a);
}

inline AdjacencyMatrix load_edge_list(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_edge_list(in, path.string());
}

inline void write_edge_list(std::ostream& out, const AdjacencyMatrix& a) {
  out << "n " << a.size() << '\n';
  for (auto [u, v] : a.edges()) out << u << ' ' << v << '\n';
}

enum class MatrixKind { Adjacency, Correlation };

inline AdjacencyMatrix load_adjacency_csv(const std::filesystem::path& path) {
  const auto rows = detail::read_csv_rows(path);
  const std::size_t n = rows.size();
  double asym = 0.0;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v) {
      const double x = rows[u][v];
      if (x != 0.0 && x != 1.0)
        throw Error(ErrorCode::BadEntry, path.string() + ": entry (" + std::to_string(u) + ", " + std::to_string(v) +
                                             ") is not 0 or 1");
      asym = std::max(asym, std::abs(x - rows[v][u]));
    }
  if (asym > 0.0) throw Error(ErrorCode::NotSymmetric, path.string() + ": max asymmetry " + std::to_string(asym));
  AdjacencyMatrix a(n);
  for (std::size_t u = 0; u < n; ++u) {
    if (rows[u][u] != 0.0) throw Error(ErrorCode::SelfLoop, path.string() + ": vertex " + std::to_string(u));
    for (std::size_t v = u + 1; v < n; ++v)
      if (rows[u][v] == 1.0) a.add_edge(u, v);
  }
  return a;
}

inline CorrelationMatrix load_correlation_csv(const std::filesystem::path& path) {
  const auto rows = detail::read_csv_rows(path);
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  try {
    return CorrelationMatrix(std::move(m));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

inline std::variant<AdjacencyMatrix, CorrelationMatrix> load_matrix_csv(const std::filesystem::path& path,
                                                                        MatrixKind kind) {
  if (kind == MatrixKind::Adjacency) return load_adjacency_csv(path);
  return load_correlation_csv(path);
}

inline void write_adjacency_csv(std::ostream& out, const AdjacencyMatrix& a) {
  for (std::size_t u = 0; u < a.size(); ++u) {
    for (std::size_t v = 0; v < a.size(); ++v) out << (v ? "," : "") << (a(u, v) ? 1 : 0);
    out << '\n';
  }
}

inline void write_correlation_csv(std::ostream& out, const CorrelationMatrix& c) {
  out << std::setprecision(17);
  for (std::size_t u = 0; u < c.size(); ++u) {
    for (std::size_t v = 0; v < c.size(); ++v) out << (v ? "," : "") << c(u, v);
    out << '\n';
  }
}

}  // namespace seqcd
