#include "sidforest/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>

#include "sidforest/errors.hpp"
#include "sidforest/format.hpp"

namespace sidforest {

Dataset::Dataset(std::size_t p, std::vector<double> features, std::vector<double> responses)
    : p_(p), x_(std::move(features)), y_(std::move(responses)) {
  if (p_ == 0) throw ValidationError("p", "dataset needs at least one feature");
  if (y_.empty()) throw ValidationError("n", "no observations");
  if (x_.size() != y_.size() * p_) {
    throw DimensionError("feature matrix has " + std::to_string(x_.size()) + " entries, expected " +
                         std::to_string(y_.size() * p_));
  }
  for (std::size_t i = 0; i < y_.size(); ++i) {
    for (std::size_t j = 0; j < p_; ++j) {
      const double v = x_[i * p_ + j];
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ValidationError("row " + std::to_string(i + 1),
                              "feature x" + std::to_string(j + 1) + " = " + format_double(v) + " in row " +
                                  std::to_string(i + 1) + " is outside [0,1]");
      }
    }
    if (!std::isfinite(y_[i])) {
      throw ValidationError("row " + std::to_string(i + 1), "response in row " + std::to_string(i + 1) + " is not finite");
    }
  }
  sorted_.resize(p_);
  for (std::size_t j = 0; j < p_; ++j) {
    auto& idx = sorted_[j];
    idx.resize(y_.size());
    std::iota(idx.begin(), idx.end(), Index{0});
    std::sort(idx.begin(), idx.end(), [&](Index a, Index b) {
      const double xa = x_[a * p_ + j];
      const double xb = x_[b * p_ + j];
      return xa < xb || (xa == xb && a < b);
    });
  }
}

std::vector<Index> Dataset::all_indices() const {
  std::vector<Index> idx(n());
  std::iota(idx.begin(), idx.end(), Index{0});
  return idx;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path.string());

  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (line_no == 0 || trim(line).empty()) throw ValidationError("n", "no observations");

  // Header: x1,...,xp,y
  const auto header = split_fields(line);
  columns = header.size();
  if (columns < 2) throw ParseError(line_no, "header needs at least one feature column and y");
  for (std::size_t c = 0; c + 1 < columns; ++c) {
    if (trim(header[c]) != "x" + std::to_string(c + 1)) {
      throw ParseError(line_no, "header column " + std::to_string(c + 1) + " must be x" + std::to_string(c + 1));
    }
  }
  if (trim(header.back()) != "y") throw ParseError(line_no, "last header column must be y");

  const std::size_t p = columns - 1;
  std::vector<double> x;
  std::vector<double> y;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != columns) {
      throw ParseError(line_no, "expected " + std::to_string(columns) + " fields, got " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < columns; ++c) {
      const std::string_view f = trim(fields[c]);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc{} || ptr != f.data() + f.size() || f.empty()) {
        throw ParseError(line_no, "field " + std::to_string(c + 1) + " is not a number: '" + std::string(f) + "'");
      }
      if (c + 1 < columns) {
        if (!(v >= 0.0 && v <= 1.0)) {
          throw ValidationError("line " + std::to_string(line_no),
                                "feature x" + std::to_string(c + 1) + " = " + std::string(f) + " on line " +
                                    std::to_string(line_no) + " (row " + std::to_string(y.size() + 1) +
                                    ") is outside [0,1]");
        }
        x.push_back(v);
      } else {
        y.push_back(v);
      }
    }
  }
  if (y.empty()) throw ValidationError("n", "no observations");
  return Dataset(p, std::move(x), std::move(y));
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write " + path.string());
  for (std::size_t j = 0; j < data.p(); ++j) out << 'x' << j + 1 << ',';
  out << "y\n";
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < data.p(); ++j) out << format_double(data.x(i, j)) << ',';
    out << format_double(data.y(i)) << '\n';
  }
}

}  // namespace sidforest
