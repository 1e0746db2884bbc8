#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "betascan/datasets.hpp"
#include "betascan/error.hpp"
#include "betascan/sample.hpp"

namespace betascan {

/// Shortest-exact decimal form: 17 significant digits round-trip a double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline double parse_double(std::string_view s, std::size_t line) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError("bad number '" + std::string(s) + "'", line);
  }
  if (!std::isfinite(v)) throw ParseError("non-finite coordinate", line);
  return v;
}

inline std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t c = s.find(',', start);
    out.push_back(s.substr(start, c == std::string_view::npos ? std::string_view::npos : c - start));
    if (c == std::string_view::npos) break;
    start = c + 1;
  }
  return out;
}

// Parses "key=value" tokens after the given magic prefix.
inline std::map<std::string, std::string> parse_header(const std::string& line, std::string_view magic,
                                                       std::size_t lineno) {
  if (line.rfind(magic, 0) != 0) throw ParseError("missing '" + std::string(magic) + "' header", lineno);
  std::istringstream is(line.substr(magic.size()));
  std::map<std::string, std::string> kv;
  std::string tok;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0) throw ParseError("bad header token '" + tok + "'", lineno);
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

inline int header_int(const std::map<std::string, std::string>& kv, const std::string& key, std::size_t line) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ParseError("header lacks " + key, line);
  int v = 0;
  const auto& s = it->second;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("bad header value for " + key, line);
  return v;
}

}  // namespace detail

inline void write_sample(std::ostream& os, const PointSample& E) {
  os << "# betascan v1 n=" << E.ambient() << " d=" << E.intrinsic() << " h=" << format_double(E.resolution())
     << "\n";
  for (Index i = 0; i < E.size(); ++i) {
    const auto c = E.col(i);
    for (Eigen::Index a = 0; a < c.size(); ++a) {
      if (a) os << ',';
      os << format_double(c[a]);
    }
    os << '\n';
  }
}

inline PointSample read_sample(std::istream& is) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(is, line)) throw ParseError("empty file", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto kv = detail::parse_header(line, "# betascan v1", 1);
  const int n = detail::header_int(kv, "n", 1);
  const int d = detail::header_int(kv, "d", 1);
  auto hit = kv.find("h");
  if (hit == kv.end()) throw ParseError("header lacks h", 1);
  const double h = detail::parse_double(hit->second, 1);
  if (n < 1) throw ParseError("ambient dimension must be positive", 1);
  std::vector<double> vals;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto parts = detail::split_commas(line);
    if (parts.size() != static_cast<std::size_t>(n)) {
      throw ParseError("expected " + std::to_string(n) + " coordinates, got " + std::to_string(parts.size()), lineno);
    }
    for (auto p : parts) vals.push_back(detail::parse_double(p, lineno));
  }
  Matrix M(n, static_cast<Eigen::Index>(vals.size() / static_cast<std::size_t>(n)));
  for (std::size_t k = 0; k < vals.size(); ++k) M.data()[k] = vals[k];
  try {
    return PointSample(std::move(M), d, h);
  } catch (const InputError& e) {
    throw ParseError(e.what(), 1);
  }
}

inline void save_sample(const PointSample& E, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open '" + path + "' for writing");
  write_sample(os, E);
  if (!os) throw InputError("write to '" + path + "' failed");
}

inline PointSample load_sample(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open '" + path + "'");
  return read_sample(is);
}

/// Ground truth: header, then per point "label" or
/// "tangent,base_1..base_n,frame column-major".
inline void write_truth(std::ostream& os, const GroundTruth& t, int n, int d) {
  os << "# betascan-truth v1 n=" << n << " d=" << d << " generator=" << t.generator << " seed=" << t.seed;
  for (const auto& [k, v] : t.params) os << ' ' << k << '=' << format_double(v);
  os << '\n';
  for (std::size_t i = 0; i < t.size(); ++i) {
    os << to_string(t.labels[i]);
    if (t.planes[i]) {
      const auto& P = *t.planes[i];
      for (Eigen::Index a = 0; a < P.base().size(); ++a) os << ',' << format_double(P.base()[a]);
      for (Eigen::Index k = 0; k < P.frame().size(); ++k) os << ',' << format_double(P.frame().data()[k]);
    }
    os << '\n';
  }
}

inline GroundTruth read_truth(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("empty file", 1);
  const auto kv = detail::parse_header(line, "# betascan-truth v1", 1);
  const int n = detail::header_int(kv, "n", 1);
  const int d = detail::header_int(kv, "d", 1);
  GroundTruth t;
  for (const auto& [k, v] : kv) {
    if (k == "n" || k == "d") continue;
    if (k == "generator") t.generator = v;
    else if (k == "seed") t.seed = std::stoull(v);
    else t.params[k] = detail::parse_double(v, 1);
  }
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto parts = detail::split_commas(line);
    TruthLabel lab;
    try {
      lab = truth_label_from(std::string(parts[0]));
    } catch (const InputError& e) {
      throw ParseError(e.what(), lineno);
    }
    t.labels.push_back(lab);
    if (lab != TruthLabel::tangent) {
      if (parts.size() != 1) throw ParseError("plane given for a non-tangent point", lineno);
      t.planes.emplace_back();
      continue;
    }
    if (parts.size() != static_cast<std::size_t>(1 + n + n * d)) throw ParseError("bad tangent row arity", lineno);
    Point base(n);
    Matrix F(n, d);
    for (int a = 0; a < n; ++a) base[a] = detail::parse_double(parts[1 + static_cast<std::size_t>(a)], lineno);
    for (int k = 0; k < n * d; ++k) F.data()[k] = detail::parse_double(parts[1 + static_cast<std::size_t>(n + k)], lineno);
    t.planes.emplace_back(AffinePlane(base, F));
  }
  return t;
}

inline void save_truth(const GroundTruth& t, int n, int d, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open '" + path + "' for writing");
  write_truth(os, t, n, d);
}

inline GroundTruth load_truth(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open '" + path + "'");
  return read_truth(is);
}

}  // namespace betascan
