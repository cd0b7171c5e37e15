#include "gpct/config.hpp"
#include "gpct/io.hpp"
#include "gpct/metrics.hpp"
#include "gpct/phantom.hpp"
#include "gpct/projector.hpp"

#include "catch_amalgamated.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

using namespace gpct;
using Catch::Approx;

namespace {

ImageGrid image_of(std::initializer_list<double> v, int rows, int cols) {
  ImageGrid img(rows, cols, 1.0, 1.0);
  auto it = v.begin();
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) img.values(i, j) = *it++;
  return img;
}

// Expects a ParseError whose message starts with `name:line:`.
template <class F>
void check_parse_error(F&& f, const std::string& name, std::size_t line) {
  try {
    f();
    FAIL("no ParseError for " << name);
  } catch (const ParseError& e) {
    CHECK(e.file() == name);
    CHECK(e.line() == line);
    CHECK(std::string(e.what()).rfind(name + ":" + std::to_string(line) + ": ", 0) == 0);
  }
}

}  // namespace

TEST_CASE("relative error", "[metrics]") {
  const ImageGrid truth = image_of({3.0, 4.0}, 1, 2);
  const ImageGrid zero = image_of({0.0, 0.0}, 1, 2);
  CHECK(relative_error(truth, zero) == Approx(100.0));
  CHECK(relative_error(truth, truth) == 0.0);
  CHECK(relative_error(truth, image_of({3.0, 3.0}, 1, 2)) == Approx(20.0));
  CHECK_THROWS_AS(relative_error(zero, truth), std::invalid_argument);
  CHECK_THROWS_AS(relative_error(truth, image_of({3.0, 4.0}, 2, 1)), std::invalid_argument);
}

TEST_CASE("PSNR", "[metrics]") {
  const ImageGrid truth = image_of({1.0, 0.0, 0.0, 0.0}, 2, 2);
  // Every pixel off by 0.1 gives MSE 0.01.
  const ImageGrid rec = image_of({1.1, 0.1, -0.1, 0.1}, 2, 2);
  CHECK(mean_squared_error(truth, rec) == Approx(0.01));
  CHECK(psnr(truth, rec, 1.0) == Approx(20.0));
  CHECK(psnr(truth, rec, 10.0) == Approx(40.0));
  CHECK(psnr(truth, truth, 1.0) == std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(psnr(truth, rec, 0.0), std::invalid_argument);

  const Metrics by_truth = compare_images(truth, rec);
  CHECK(by_truth.peak_from_truth);
  CHECK(by_truth.peakval == 1.0);
  CHECK(by_truth.psnr == Approx(20.0));
  const Metrics given = compare_images(truth, rec, 2.0);
  CHECK_FALSE(given.peak_from_truth);
  CHECK(given.psnr == Approx(20.0 + 20.0 * std::log10(2.0)));
}

TEST_CASE("metrics respond to degradation", "[metrics]") {
  const ImageGrid truth = rasterize(EllipsePhantom::shepp_logan(1.0), ImageGrid::square(32, 1.0), 2);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  ImageGrid noise = truth;
  for (auto& v : noise.values.reshaped()) v = nd(rng);
  double last_re = 0.0;
  double last_psnr = std::numeric_limits<double>::infinity();
  for (double a : {0.01, 0.05, 0.2}) {
    ImageGrid rec = truth;
    rec.values += a * noise.values;
    const Metrics m = compare_images(truth, rec);
    CHECK(m.relative_error > last_re);
    CHECK(m.psnr < last_psnr);
    last_re = m.relative_error;
    last_psnr = m.psnr;
  }
}

TEST_CASE("phantom round trip", "[io]") {
  const auto p = EllipsePhantom::shepp_logan(1.7);
  std::stringstream ss;
  io::write_phantom(ss, p);
  const auto q = io::read_phantom(ss);
  REQUIRE(q.ellipses.size() == p.ellipses.size());
  for (std::size_t i = 0; i < p.ellipses.size(); ++i) {
    CHECK(q.ellipses[i].c1 == p.ellipses[i].c1);
    CHECK(q.ellipses[i].c2 == p.ellipses[i].c2);
    CHECK(q.ellipses[i].a == p.ellipses[i].a);
    CHECK(q.ellipses[i].b == p.ellipses[i].b);
    CHECK(q.ellipses[i].psi == p.ellipses[i].psi);
    CHECK(q.ellipses[i].rho == p.ellipses[i].rho);
  }
}

TEST_CASE("sinogram round trip", "[io]") {
  const ScanGeometry g{1.3, 7, std::numbers::pi, 11};
  const auto s = add_noise(analytic_sinogram(EllipsePhantom::shepp_logan(1.3), g), 0.03, 9);
  std::stringstream ss;
  io::write_sinogram(ss, s);
  const auto t = io::read_sinogram(ss);
  CHECK(t.radius == s.radius);
  REQUIRE(t.size() == s.size());
  CHECK(t.y == s.y);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(t.rays[i].theta == s.rays[i].theta);
    CHECK(t.rays[i].r == s.rays[i].r);
  }
  REQUIRE(t.noise_sigma);
  CHECK(*t.noise_sigma == 0.03);
  REQUIRE(t.geometry);
  CHECK(t.geometry->n_angles == 7);
  CHECK(t.geometry->n_rays == 11);
  CHECK(t.geometry->angle_span == std::numbers::pi);
  CHECK(t.geometry->radius == 1.3);

  std::stringstream bare("# hand written\n2 1.0\n\n0 0.5 1.25\n1.5 -0.5 +2e-1\n");
  const auto b = io::read_sinogram(bare);
  CHECK(b.size() == 2);
  CHECK_FALSE(b.noise_sigma);
  CHECK_FALSE(b.geometry);
  CHECK(b.y(1) == 0.2);
}

TEST_CASE("image round trip", "[io]") {
  ImageGrid img(5, 3, 1.5, 0.75);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (auto& v : img.values.reshaped()) v = u(rng) / 7.0;
  img.values(0, 0) = 1e-300;
  std::stringstream ss;
  io::write_image(ss, img);
  const auto back = io::read_image(ss);
  CHECK(back.rows == 5);
  CHECK(back.cols == 3);
  CHECK(back.half_width == 1.5);
  CHECK(back.half_height == 0.75);
  CHECK(back.values == img.values);
}

TEST_CASE("trace round trip", "[io]") {
  ChainTrace t;
  t.burn_in = 2;
  t.seed = 123456789012345ull;
  t.proposal_scales = Eigen::Vector3d(0.1, 0.2, 0.3);
  for (int i = 1; i <= 5; ++i)
    t.records.push_back({i, {1.0 / i, 0.1 * i, 0.01 + i / 3.0}, -100.0 / i, i % 2 == 0});
  std::stringstream ss;
  io::write_trace(ss, t);
  const auto back = io::read_trace(ss);
  CHECK(back.burn_in == 2);
  CHECK(back.seed == t.seed);
  CHECK(back.proposal_scales == t.proposal_scales);
  CHECK(back.has_length_scale);
  REQUIRE(back.records.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(back.records[i].iteration == t.records[i].iteration);
    CHECK(back.records[i].params.sigma_f == t.records[i].params.sigma_f);
    CHECK(back.records[i].params.length_scale == t.records[i].params.length_scale);
    CHECK(back.records[i].params.sigma == t.records[i].params.sigma);
    CHECK(back.records[i].log_posterior == t.records[i].log_posterior);
    CHECK(back.records[i].accepted == t.records[i].accepted);
  }

  SECTION("families without a length scale") {
    for (auto& r : t.records) r.params.length_scale = std::numeric_limits<double>::quiet_NaN();
    std::stringstream s2;
    io::write_trace(s2, t);
    const auto b2 = io::read_trace(s2);
    CHECK_FALSE(b2.has_length_scale);
    CHECK(std::isnan(b2.records[3].params.length_scale));
  }
}

TEST_CASE("binary matrix round trip", "[io]") {
  Eigen::MatrixXd m(3, 4);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  for (auto& v : m.reshaped()) v = nd(rng);
  m(2, 3) = -0.0;
  std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
  io::write_matrix(ss, m);
  CHECK(ss.str().size() == 16 + 12 * 8);
  const auto back = io::read_matrix(ss);
  CHECK(back == m);
  CHECK(std::signbit(back(2, 3)));

  std::stringstream cut(ss.str().substr(0, 40));
  CHECK_THROWS_AS(io::read_matrix(cut), ParseError);
  std::stringstream empty;
  CHECK_THROWS_AS(io::read_matrix(empty), ParseError);
}

TEST_CASE("malformed files report file and line", "[io]") {
  SECTION("phantom") {
    std::stringstream a("# c1 c2 a b psi rho\n0 0 1 1 0 1\n0 0 1 1 0\n");
    check_parse_error([&] { io::read_phantom(a, "p.txt"); }, "p.txt", 3);
    std::stringstream b("0 0 1 -1 0 1\n");
    check_parse_error([&] { io::read_phantom(b, "p.txt"); }, "p.txt", 1);
    std::stringstream c("\n\n0 0 1 x 0 1\n");
    check_parse_error([&] { io::read_phantom(c, "p.txt"); }, "p.txt", 3);
  }
  SECTION("sinogram") {
    std::stringstream a("3 1.0\n0 0 1\n0 0.5 2\n");
    check_parse_error([&] { io::read_sinogram(a, "s.txt"); }, "s.txt", 3);
    std::stringstream b("1 0\n0 0 1\n");
    check_parse_error([&] { io::read_sinogram(b, "s.txt"); }, "s.txt", 1);
    std::stringstream c("1 1\n0 0 1\n0 0 1\n");
    check_parse_error([&] { io::read_sinogram(c, "s.txt"); }, "s.txt", 3);
    std::stringstream d("1 1\n0 0 1 4\n");
    check_parse_error([&] { io::read_sinogram(d, "s.txt"); }, "s.txt", 2);
    std::stringstream e("1.5 1\n");
    check_parse_error([&] { io::read_sinogram(e, "s.txt"); }, "s.txt", 1);
  }
  SECTION("image") {
    std::stringstream a("2 2 1 1\n1 2\n3\n");
    check_parse_error([&] { io::read_image(a, "i.txt"); }, "i.txt", 3);
    std::stringstream b("2 2 1\n");
    check_parse_error([&] { io::read_image(b, "i.txt"); }, "i.txt", 1);
    std::stringstream c("1 1 1 1\n5\n6\n");
    check_parse_error([&] { io::read_image(c, "i.txt"); }, "i.txt", 3);
  }
  SECTION("trace") {
    std::stringstream a("iter sigma_f l sigma logpost accepted\n1 1 1 1 -3 2\n");
    check_parse_error([&] { io::read_trace(a, "t.txt"); }, "t.txt", 2);
    std::stringstream b("# seed 1\niter sigma_f sigma logpost accepted\n");
    check_parse_error([&] { io::read_trace(b, "t.txt"); }, "t.txt", 2);
  }
  SECTION("missing file") {
    CHECK_THROWS_AS(io::load_image("/nonexistent/image.txt"), ParseError);
  }
}

TEST_CASE("key-value configuration", "[config]") {
  std::stringstream good("# prior\nfamily = matern\nsigma_f=2.5\n\nlength_scale= 0.3\nnu=1.5\n");
  const auto spec = prior_from_config(KeyValueConfig::parse(good, "prior.cfg"));
  CHECK(spec.family == Family::Matern);
  CHECK(spec.sigma_f == 2.5);
  CHECK(spec.length_scale == 0.3);
  CHECK(spec.nu == 1.5);

  std::stringstream tik("family=tikhonov\n");
  CHECK(prior_from_config(KeyValueConfig::parse(tik, "t.cfg")).family == Family::Tikhonov);

  std::stringstream no_eq("family=se\nsigma_f 2\n");
  check_parse_error([&] { KeyValueConfig::parse(no_eq, "c.cfg"); }, "c.cfg", 2);
  std::stringstream dup("family=se\nfamily=matern\n");
  check_parse_error([&] { KeyValueConfig::parse(dup, "c.cfg"); }, "c.cfg", 2);
  std::stringstream empty_value("family=\n");
  check_parse_error([&] { KeyValueConfig::parse(empty_value, "c.cfg"); }, "c.cfg", 1);

  std::stringstream unknown("family=se\nsigma=3\n");
  const auto cu = KeyValueConfig::parse(unknown, "c.cfg");
  check_parse_error([&] { prior_from_config(cu); }, "c.cfg", 2);
  std::stringstream bad_family("\nfamily=gauss\n");
  const auto cf = KeyValueConfig::parse(bad_family, "c.cfg");
  check_parse_error([&] { prior_from_config(cf); }, "c.cfg", 2);
  std::stringstream bad_number("family=se\nsigma_f=two\n");
  const auto cn = KeyValueConfig::parse(bad_number, "c.cfg");
  check_parse_error([&] { prior_from_config(cn); }, "c.cfg", 2);
  std::stringstream negative("family=se\nlength_scale=-1\n");
  const auto cneg = KeyValueConfig::parse(negative, "c.cfg");
  CHECK_THROWS_AS(prior_from_config(cneg), ParseError);
  std::stringstream missing("sigma_f=1\n");
  const auto cm = KeyValueConfig::parse(missing, "c.cfg");
  CHECK_THROWS_AS(prior_from_config(cm), ParseError);
}
