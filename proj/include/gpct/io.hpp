#pragma once

#include "gpct/error.hpp"
#include "gpct/geometry.hpp"
#include "gpct/lcurve.hpp"
#include "gpct/cross_validation.hpp"
#include "gpct/mcmc.hpp"
#include "gpct/phantom.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace gpct::io {

// All text formats: whitespace-delimited decimals, blank lines and lines
// starting with '#' skipped, values written with 17 significant digits.

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

/// Line-oriented reader that knows its file name and line number.
class LineReader {
 public:
  LineReader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}

  /// Next non-blank line that is not a comment. Comments are handed to
  /// `on_comment` (without the leading '#') when set.
  template <class OnComment>
  bool next(std::string& line, OnComment&& on_comment) {
    while (std::getline(in_, line)) {
      ++line_no_;
      const std::string_view t = trim(line);
      if (t.empty()) continue;
      if (t.front() == '#') {
        on_comment(trim(t.substr(1)));
        continue;
      }
      return true;
    }
    return false;
  }
  bool next(std::string& line) {
    return next(line, [](std::string_view) {});
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(name_, line_no_, what); }

  double number(std::string_view tok) const {
    double v = 0.0;
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) fail("expected a number, got '" + std::string(tok) + "'");
    return v;
  }

  long long integer(std::string_view tok) const {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) fail("expected an integer, got '" + std::string(tok) + "'");
    return v;
  }

  std::vector<double> numbers(const std::string& line, std::size_t expected) const {
    const auto toks = split(line);
    if (toks.size() != expected)
      fail("expected " + std::to_string(expected) + " fields, found " + std::to_string(toks.size()));
    std::vector<double> out;
    out.reserve(toks.size());
    for (auto t : toks) out.push_back(number(t));
    return out;
  }

  std::size_t line_number() const { return line_no_; }
  const std::string& name() const { return name_; }

 private:
  std::istream& in_;
  std::string name_;
  std::size_t line_no_ = 0;
};

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open file for writing");
  out << std::setprecision(17);
  return out;
}

}  // namespace detail

// ---- phantom description: `c1 c2 a b psi rho` per line ----

inline void write_phantom(std::ostream& out, const EllipsePhantom& p) {
  out << std::setprecision(17) << "# c1 c2 a b psi rho\n";
  for (const auto& e : p.ellipses) out << e.c1 << ' ' << e.c2 << ' ' << e.a << ' ' << e.b << ' ' << e.psi << ' ' << e.rho << '\n';
}

inline EllipsePhantom read_phantom(std::istream& in, const std::string& name = "<phantom>") {
  detail::LineReader r(in, name);
  EllipsePhantom p;
  std::string line;
  while (r.next(line)) {
    const auto v = r.numbers(line, 6);
    if (!(v[2] > 0.0) || !(v[3] > 0.0)) r.fail("ellipse semi-axes must be positive");
    p.ellipses.push_back({v[0], v[1], v[2], v[3], v[4], v[5]});
  }
  return p;
}

// ---- sinogram: header `n R`, then n lines `theta r y` ----

inline void write_sinogram(std::ostream& out, const Sinogram& s) {
  s.validate();
  out << std::setprecision(17);
  if (s.noise_sigma) out << "# noise_sigma " << *s.noise_sigma << '\n';
  if (s.geometry)
    out << "# geometry " << s.geometry->n_angles << ' ' << s.geometry->n_rays << ' ' << s.geometry->angle_span << '\n';
  out << s.size() << ' ' << s.radius << '\n';
  for (std::size_t i = 0; i < s.size(); ++i)
    out << s.rays[i].theta << ' ' << s.rays[i].r << ' ' << s.y(static_cast<Eigen::Index>(i)) << '\n';
}

inline Sinogram read_sinogram(std::istream& in, const std::string& name = "<sinogram>") {
  detail::LineReader r(in, name);
  Sinogram s;
  std::optional<ScanGeometry> geometry;
  auto on_comment = [&](std::string_view c) {
    const auto toks = detail::split(c);
    if (toks.size() == 2 && toks[0] == "noise_sigma") s.noise_sigma = r.number(toks[1]);
    if (toks.size() == 4 && toks[0] == "geometry") {
      ScanGeometry g;
      g.n_angles = static_cast<int>(r.integer(toks[1]));
      g.n_rays = static_cast<int>(r.integer(toks[2]));
      g.angle_span = r.number(toks[3]);
      geometry = g;
    }
  };
  std::string line;
  if (!r.next(line, on_comment)) r.fail("missing header line `n R`");
  const auto head = detail::split(line);
  if (head.size() != 2) r.fail("header must be `n R`");
  const long long n = r.integer(head[0]);
  if (n < 0) r.fail("negative measurement count");
  s.radius = r.number(head[1]);
  if (!(s.radius > 0.0)) r.fail("radius must be positive");
  s.rays.reserve(static_cast<std::size_t>(n));
  s.y.resize(static_cast<Eigen::Index>(n));
  for (long long i = 0; i < n; ++i) {
    if (!r.next(line, on_comment)) r.fail("expected " + std::to_string(n) + " measurements, found " + std::to_string(i));
    const auto v = r.numbers(line, 3);
    s.rays.push_back({v[0], v[1]});
    s.y(static_cast<Eigen::Index>(i)) = v[2];
  }
  if (r.next(line, on_comment)) r.fail("trailing data after " + std::to_string(n) + " measurements");
  if (geometry && geometry->size() == static_cast<std::size_t>(n)) {
    geometry->radius = s.radius;
    s.geometry = geometry;
  }
  return s;
}

// ---- image: `N1 N2 L1 L2`, then N1 rows of N2 values (top row first) ----

inline void write_image(std::ostream& out, const ImageGrid& img) {
  out << std::setprecision(17) << img.rows << ' ' << img.cols << ' ' << img.half_width << ' ' << img.half_height << '\n';
  for (int i = 0; i < img.rows; ++i) {
    for (int j = 0; j < img.cols; ++j) out << (j ? " " : "") << img.values(i, j);
    out << '\n';
  }
}

inline ImageGrid read_image(std::istream& in, const std::string& name = "<image>") {
  detail::LineReader r(in, name);
  std::string line;
  if (!r.next(line)) r.fail("missing header line `N1 N2 L1 L2`");
  const auto head = detail::split(line);
  if (head.size() != 4) r.fail("header must be `N1 N2 L1 L2`");
  const long long n1 = r.integer(head[0]);
  const long long n2 = r.integer(head[1]);
  const double l1 = r.number(head[2]);
  const double l2 = r.number(head[3]);
  if (n1 < 1 || n2 < 1) r.fail("image dimensions must be positive");
  if (!(l1 > 0.0) || !(l2 > 0.0)) r.fail("image extent must be positive");
  ImageGrid img(static_cast<int>(n1), static_cast<int>(n2), l1, l2);
  for (long long i = 0; i < n1; ++i) {
    if (!r.next(line)) r.fail("expected " + std::to_string(n1) + " rows, found " + std::to_string(i));
    const auto v = r.numbers(line, static_cast<std::size_t>(n2));
    for (long long j = 0; j < n2; ++j) img.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[static_cast<std::size_t>(j)];
  }
  if (r.next(line)) r.fail("trailing data after image rows");
  return img;
}

// ---- chain trace: `iter sigma_f l sigma logpost accepted` ----

inline void write_trace(std::ostream& out, const ChainTrace& t) {
  out << std::setprecision(17);
  out << "# burn_in " << t.burn_in << '\n';
  out << "# seed " << t.seed << '\n';
  out << "# proposal_scales";
  for (Eigen::Index i = 0; i < t.proposal_scales.size(); ++i) out << ' ' << t.proposal_scales(i);
  out << '\n';
  out << "iter sigma_f l sigma logpost accepted\n";
  for (const auto& rec : t.records)
    out << rec.iteration << ' ' << rec.params.sigma_f << ' ' << rec.params.length_scale << ' ' << rec.params.sigma << ' '
        << rec.log_posterior << ' ' << (rec.accepted ? 1 : 0) << '\n';
}

inline ChainTrace read_trace(std::istream& in, const std::string& name = "<trace>") {
  detail::LineReader r(in, name);
  ChainTrace t;
  std::vector<double> scales;
  auto on_comment = [&](std::string_view c) {
    const auto toks = detail::split(c);
    if (toks.empty()) return;
    if (toks[0] == "burn_in" && toks.size() == 2) t.burn_in = static_cast<int>(r.integer(toks[1]));
    if (toks[0] == "seed" && toks.size() == 2) t.seed = static_cast<std::uint64_t>(r.integer(toks[1]));
    if (toks[0] == "proposal_scales")
      for (std::size_t i = 1; i < toks.size(); ++i) scales.push_back(r.number(toks[i]));
  };
  std::string line;
  if (!r.next(line, on_comment)) r.fail("missing header line");
  const auto head = detail::split(line);
  const std::vector<std::string_view> expected = {"iter", "sigma_f", "l", "sigma", "logpost", "accepted"};
  if (head != expected) r.fail("header must be `iter sigma_f l sigma logpost accepted`");
  bool any_l = false;
  while (r.next(line, on_comment)) {
    const auto v = r.numbers(line, 6);
    ChainRecord rec;
    rec.iteration = static_cast<int>(v[0]);
    rec.params = {v[1], v[2], v[3]};
    rec.log_posterior = v[4];
    if (v[5] != 0.0 && v[5] != 1.0) r.fail("accepted flag must be 0 or 1");
    rec.accepted = v[5] == 1.0;
    any_l = any_l || !std::isnan(v[2]);
    t.records.push_back(rec);
  }
  t.has_length_scale = any_l;
  t.proposal_scales = Eigen::Map<const Eigen::VectorXd>(scales.data(), static_cast<Eigen::Index>(scales.size()));
  return t;
}

// ---- L-curve and CV tables ----

inline void write_lcurve(std::ostream& out, const LCurve& lc) {
  out << std::setprecision(17);
  if (lc.corner) out << "# corner_sigma " << lc.points[*lc.corner].sigma << '\n';
  out << "sigma residual_norm solution_norm\n";
  for (const auto& p : lc.points) out << p.sigma << ' ' << p.residual_norm << ' ' << p.solution_norm << '\n';
}

inline void write_cv(std::ostream& out, const CrossValidation& cv) {
  out << std::setprecision(17);
  out << "# folds " << cv.folds << " seed " << cv.seed << '\n';
  const auto& b = cv.best_result();
  out << "# best " << b.params.sigma_f << ' ' << b.params.length_scale << ' ' << b.params.sigma << '\n';
  out << "sigma_f l sigma log_predictive\n";
  for (const auto& r : cv.results)
    out << r.params.sigma_f << ' ' << r.params.length_scale << ' ' << r.params.sigma << ' ' << r.log_predictive << '\n';
}

// ---- binary matrix cache: two uint64 dims, then row-major float64, little-endian ----

namespace detail {

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

}  // namespace detail

inline void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  const std::uint64_t dims[2] = {detail::to_little(static_cast<std::uint64_t>(m.rows())),
                                 detail::to_little(static_cast<std::uint64_t>(m.cols()))};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = detail::to_little(m(i, j));
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
}

inline Eigen::MatrixXd read_matrix(std::istream& in, const std::string& name = "<matrix>") {
  std::uint64_t dims[2] = {0, 0};
  if (!in.read(reinterpret_cast<char*>(dims), sizeof(dims))) throw ParseError(name, 0, "truncated matrix header");
  const std::uint64_t rows = detail::to_little(dims[0]);
  const std::uint64_t cols = detail::to_little(dims[1]);
  if (rows > (1ull << 32) || cols > (1ull << 32)) throw ParseError(name, 0, "implausible matrix dimensions");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      double v = 0.0;
      if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) throw ParseError(name, 0, "truncated matrix data");
      m(i, j) = detail::to_little(v);
    }
  return m;
}

// ---- file helpers ----

template <class T, class Writer>
void save(const std::string& path, const T& value, Writer&& writer) {
  auto out = detail::open_out(path);
  writer(out, value);
  if (!out) throw std::runtime_error(path + ": write failed");
}

inline EllipsePhantom load_phantom(const std::string& path) {
  auto in = detail::open_in(path);
  return read_phantom(in, path);
}
inline Sinogram load_sinogram(const std::string& path) {
  auto in = detail::open_in(path);
  return read_sinogram(in, path);
}
inline ImageGrid load_image(const std::string& path) {
  auto in = detail::open_in(path);
  return read_image(in, path);
}
inline ChainTrace load_trace(const std::string& path) {
  auto in = detail::open_in(path);
  return read_trace(in, path);
}

}  // namespace gpct::io
