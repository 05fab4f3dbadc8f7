#include "opsplit/io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <string>
#include <string_view>

#include "opsplit/errors.hpp"

namespace opsplit {

namespace {

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw ParseError("parse error at line " + std::to_string(line_no) + ": " +
                   what);
}

double parse_double(std::string_view tok, std::size_t line_no) {
  // from_chars takes no leading '+', but "+1" labels are standard.
  std::string_view body = tok;
  if (body.size() > 1 && body.front() == '+') body.remove_prefix(1);
  double value = 0.0;
  const auto* end = body.data() + body.size();
  const auto res = std::from_chars(body.data(), end, value);
  if (res.ec != std::errc{} || res.ptr != end) {
    fail(line_no, "expected a number, got '" + std::string(tok) + "'");
  }
  return value;
}

// splits on spaces/tabs, skipping runs of whitespace
std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> toks;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    std::size_t start = i;
    while (i < line.size() &&
           !std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    if (i > start) toks.push_back(line.substr(start, i - start));
  }
  return toks;
}

}  // namespace

LabeledDataset parse_libsvm(const std::string& path, std::size_t dim_hint) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open '" + path + "'");
  }

  std::vector<SparseMatrix::Triplet> entries;
  DenseVector labels;
  std::size_t max_index = 0;  // 1-based
  std::string line;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    const auto toks = tokenize(line);
    if (toks.empty()) continue;

    const double raw_label = parse_double(toks[0], line_no);
    double label;
    if (raw_label == 1.0) {
      label = 1.0;
    } else if (raw_label == -1.0) {
      label = -1.0;
    } else if (raw_label == 0.0) {
      label = -1.0;  // {0,1} files
    } else {
      fail(line_no, "label must be one of -1, 0, +1");
    }
    const std::size_t row = labels.size();
    labels.push_back(label);

    std::size_t prev_index = 0;
    for (std::size_t t = 1; t < toks.size(); ++t) {
      const auto tok = toks[t];
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos || colon == 0 ||
          colon + 1 == tok.size()) {
        fail(line_no, "expected index:value, got '" + std::string(tok) + "'");
      }
      const auto idx_part = tok.substr(0, colon);
      long long index = 0;
      const auto* idx_end = idx_part.data() + idx_part.size();
      const auto res = std::from_chars(idx_part.data(), idx_end, index);
      if (res.ec != std::errc{} || res.ptr != idx_end) {
        fail(line_no, "bad feature index '" + std::string(idx_part) + "'");
      }
      if (index <= 0) {
        fail(line_no, "feature indices are 1-based and positive");
      }
      if (static_cast<std::size_t>(index) <= prev_index) {
        fail(line_no, "feature indices must be strictly increasing");
      }
      prev_index = static_cast<std::size_t>(index);
      max_index = std::max(max_index, prev_index);

      const double value = parse_double(tok.substr(colon + 1), line_no);
      entries.push_back({row, prev_index - 1, value});
    }
  }

  const std::size_t n = std::max(dim_hint, max_index);
  LabeledDataset ds;
  ds.a = SparseMatrix::from_triplets(labels.size(), n, std::move(entries));
  ds.b = std::move(labels);
  return ds;
}

void write_trace(const std::string& path, const std::vector<TraceRow>& rows) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  out << "epoch,seconds,objective,residual\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.epoch << ',' << r.seconds << ',' << r.objective << ','
        << r.residual << '\n';
  }
  if (!out) {
    throw std::runtime_error("write failed for '" + path + "'");
  }
}

}  // namespace opsplit
