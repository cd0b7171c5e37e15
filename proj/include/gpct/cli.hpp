#pragma once

// Command-line front end. Exit status: 0 success, 2 usage or input-format
// error, 1 numerical failure.

#include "gpct/config.hpp"
#include "gpct/cross_validation.hpp"
#include "gpct/fbp.hpp"
#include "gpct/gp.hpp"
#include "gpct/io.hpp"
#include "gpct/lcurve.hpp"
#include "gpct/mcmc.hpp"
#include "gpct/metrics.hpp"
#include "gpct/phantom.hpp"
#include "gpct/projector.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

namespace gpct::cli {

enum ExitCode : int { kOk = 0, kNumerical = 1, kUsage = 2 };

namespace detail {

/// `lo:hi:n` log-spaced, or a comma-separated list.
inline std::vector<double> parse_grid(const std::string& text, const std::string& flag) {
  auto num = [&](const std::string& s) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != s.size()) throw std::invalid_argument(flag + ": '" + s + "' is not a number");
    return v;
  };
  std::vector<std::string> parts;
  const char sep = text.find(':') != std::string::npos ? ':' : ',';
  std::size_t start = 0;
  while (true) {
    const auto p = text.find(sep, start);
    parts.push_back(text.substr(start, p - start));
    if (p == std::string::npos) break;
    start = p + 1;
  }
  if (sep == ':') {
    if (parts.size() != 3) throw std::invalid_argument(flag + ": expected lo:hi:count");
    const double n = num(parts[2]);
    if (n < 1 || n != std::floor(n)) throw std::invalid_argument(flag + ": count must be a positive integer");
    return log_space(num(parts[0]), num(parts[1]), static_cast<int>(n));
  }
  std::vector<double> out;
  for (const auto& s : parts) out.push_back(num(s));
  return out;
}

inline double parse_span(const std::string& s) {
  if (s == "pi" || s == "180") return std::numbers::pi;
  if (s == "2pi" || s == "360") return 2.0 * std::numbers::pi;
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size() || !(v > 0.0)) throw std::invalid_argument("--span: expected pi, 2pi or radians");
  return v;
}

inline void print_params(std::ostream& out, const std::string& label, const HyperParams& p, bool with_l) {
  out << label << " sigma_f=" << p.sigma_f;
  if (with_l) out << " l=" << p.length_scale;
  out << " sigma=" << p.sigma << '\n';
}

}  // namespace detail

/// Parses argv, runs one subcommand and returns its exit status. Diagnostics
/// go to `err` as single lines; results and summaries go to `out`.
inline int cli_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
  CLI::App app{"Sparse-view CT reconstruction with reduced-rank Gaussian processes"};
  app.name("gpct");
  app.require_subcommand(1);

  // phantom
  std::string ph_kind = "shepp-logan", ph_input, ph_out_image, ph_out_desc;
  double ph_radius = 1.0, ph_disk = 0.5, ph_extent = 0.0;
  int ph_size = 64, ph_super = 4;
  auto* phantom = app.add_subcommand("phantom", "Emit a phantom raster and description");
  phantom->add_option("--kind", ph_kind, "shepp-logan or disk")->check(CLI::IsMember({"shepp-logan", "disk"}));
  phantom->add_option("--input", ph_input, "Existing phantom description to rasterize");
  phantom->add_option("--radius", ph_radius, "Scan disk radius");
  phantom->add_option("--disk-radius", ph_disk, "Radius of the disk phantom");
  phantom->add_option("--size", ph_size, "Raster size N (N x N)");
  phantom->add_option("--extent", ph_extent, "Raster half-width (default: radius)");
  phantom->add_option("--supersample", ph_super, "Point samples per pixel axis");
  phantom->add_option("--out-image", ph_out_image, "Raster output file");
  phantom->add_option("--out-desc", ph_out_desc, "Description output file");

  // project
  std::string pr_phantom, pr_image, pr_out, pr_span = "pi";
  double pr_radius = 0.0, pr_sigma = 0.0, pr_step = 0.0;
  int pr_angles = 9, pr_rays = 95;
  std::uint64_t pr_seed = 0;
  auto* project = app.add_subcommand("project", "Phantom or image to sinogram");
  auto* pr_ph_opt = project->add_option("--phantom", pr_phantom, "Phantom description (exact line integrals)");
  auto* pr_im_opt = project->add_option("--image", pr_image, "Raster image (sampled line integrals)");
  pr_ph_opt->excludes(pr_im_opt);
  project->add_option("--radius", pr_radius, "Scan disk radius (default: phantom extent 1, image half-width)");
  project->add_option("--angles", pr_angles, "Number of projection angles");
  project->add_option("--rays", pr_rays, "Rays per projection");
  project->add_option("--span", pr_span, "Angular span: pi, 2pi or radians");
  project->add_option("--noise-sigma", pr_sigma, "Additive Gaussian noise standard deviation");
  project->add_option("--seed", pr_seed, "Noise seed");
  project->add_option("--step", pr_step, "Sampling step for --image (default half a pixel)");
  project->add_option("-o,--output", pr_out, "Sinogram output file")->required();

  // fbp
  std::string fb_sino, fb_out, fb_filter = "ramlak";
  int fb_size = 64;
  double fb_extent = 0.0;
  auto* fbp = app.add_subcommand("fbp", "Filtered backprojection");
  fbp->add_option("--sinogram", fb_sino, "Input sinogram")->required();
  fbp->add_option("--filter", fb_filter, "ramlak|shepplogan|cosine|hamming|hann")
      ->check(CLI::IsMember({"ramlak", "shepplogan", "cosine", "hamming", "hann"}));
  fbp->add_option("--size", fb_size, "Output image size N");
  fbp->add_option("--extent", fb_extent, "Output half-width (default: scan radius)");
  fbp->add_option("-o,--output", fb_out, "Output image")->required();

  // gp
  std::string gp_sino, gp_prior, gp_hyper = "fixed", gp_out, gp_var, gp_trace, gp_lc_out, gp_cv_out, gp_phi_cache;
  std::string gp_lc_grid = "0.1:10:20", gp_cv_sf, gp_cv_l, gp_cv_s = "0.01:1:5";
  int gp_m1 = 32, gp_m2 = 32, gp_samples = 5000, gp_burn = 1000, gp_size = 64, gp_folds = 10, gp_average = 0;
  double gp_margin = 1.25, gp_scale = 0.1, gp_sigma = 0.0, gp_extent = 0.0;
  std::uint64_t gp_seed = 0;
  bool gp_mask = false;
  auto* gp = app.add_subcommand("gp", "Reduced-rank GP reconstruction");
  gp->add_option("--sinogram", gp_sino, "Input sinogram")->required();
  gp->add_option("--prior", gp_prior, "Prior config (family=, sigma_f=, length_scale=, nu=)")->required();
  gp->add_option("--hyper", gp_hyper, "Hyperparameter mode")->check(CLI::IsMember({"mh", "fixed", "lcurve", "cv"}));
  gp->add_option("--m1", gp_m1, "Basis functions along x1");
  gp->add_option("--m2", gp_m2, "Basis functions along x2");
  gp->add_option("--margin", gp_margin, "Basis rectangle half-width as a multiple of R");
  gp->add_option("--samples", gp_samples, "MH iterations");
  gp->add_option("--burn-in", gp_burn, "MH burn-in");
  gp->add_option("--proposal-scale", gp_scale, "MH proposal SD in log space");
  gp->add_option("--average-samples", gp_average, "Average the mean field over this many thinned MH samples (0: plug-in)");
  gp->add_option("--seed", gp_seed, "Seed for MH and CV folds");
  gp->add_option("--sigma", gp_sigma, "Noise SD for fixed/cv-free modes (default: sinogram noise_sigma)");
  gp->add_option("--size", gp_size, "Output image size N");
  gp->add_option("--extent", gp_extent, "Output half-width (default: scan radius)");
  gp->add_flag("--mask-disk", gp_mask, "Zero the mean image outside the scan disk");
  gp->add_option("-o,--output", gp_out, "Posterior mean image")->required();
  gp->add_option("--variance", gp_var, "Posterior variance image");
  gp->add_option("--trace", gp_trace, "MH chain trace output");
  gp->add_option("--lcurve-grid", gp_lc_grid, "L-curve sigma grid lo:hi:n or list");
  gp->add_option("--lcurve-out", gp_lc_out, "L-curve table output");
  gp->add_option("--folds", gp_folds, "CV folds");
  gp->add_option("--cv-sigma-f", gp_cv_sf, "CV sigma_f grid (default: prior value)");
  gp->add_option("--cv-length", gp_cv_l, "CV length-scale grid (default: prior value)");
  gp->add_option("--cv-sigma", gp_cv_s, "CV sigma grid");
  gp->add_option("--cv-out", gp_cv_out, "CV table output");
  gp->add_option("--phi-cache", gp_phi_cache, "Binary Phi cache (read if present, else written)");

  // metrics
  std::string me_truth, me_rec;
  double me_peak = 0.0;
  auto* metrics = app.add_subcommand("metrics", "Relative error and PSNR of a reconstruction");
  metrics->add_option("truth", me_truth, "Ground-truth image")->required();
  metrics->add_option("reconstruction", me_rec, "Reconstructed image")->required();
  metrics->add_option("--peakval", me_peak, "PSNR peak value (default: max of truth)");

  // trace
  std::string tr_file;
  int tr_burn = -1, tr_thin = 1;
  auto* trace = app.add_subcommand("trace", "Summarize an MH chain trace");
  trace->add_option("file", tr_file, "Trace file")->required();
  trace->add_option("--burn-in", tr_burn, "Override the recorded burn-in");
  trace->add_option("--thin", tr_thin, "Keep every k-th retained sample");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "gpct: " << e.what() << '\n';
    return kUsage;
  }

  out << std::setprecision(10);
  try {
    if (phantom->parsed()) {
      EllipsePhantom p = !ph_input.empty() ? io::load_phantom(ph_input)
                         : ph_kind == "disk" ? EllipsePhantom::centered_disk(ph_disk)
                                             : EllipsePhantom::shepp_logan(ph_radius);
      p.validate(ph_radius);
      const double extent = ph_extent > 0.0 ? ph_extent : ph_radius;
      if (!ph_out_image.empty())
        io::save(ph_out_image, rasterize(p, ImageGrid::square(ph_size, extent), ph_super), io::write_image);
      if (!ph_out_desc.empty()) io::save(ph_out_desc, p, io::write_phantom);
      if (ph_out_image.empty() && ph_out_desc.empty()) io::write_phantom(out, p);
      return kOk;
    }

    if (project->parsed()) {
      if (pr_phantom.empty() == pr_image.empty()) throw std::invalid_argument("project: give exactly one of --phantom or --image");
      ScanGeometry g;
      g.n_angles = pr_angles;
      g.n_rays = pr_rays;
      g.angle_span = detail::parse_span(pr_span);
      Sinogram s;
      if (!pr_phantom.empty()) {
        g.radius = pr_radius > 0.0 ? pr_radius : 1.0;
        g.validate();
        s = analytic_sinogram(io::load_phantom(pr_phantom), g);
      } else {
        const ImageGrid img = io::load_image(pr_image);
        g.radius = pr_radius > 0.0 ? pr_radius : std::min(img.half_width, img.half_height);
        g.validate();
        s = pixel_sinogram(img, g, pr_step);
      }
      s = add_noise(std::move(s), pr_sigma, pr_seed);
      io::save(pr_out, s, io::write_sinogram);
      out << "wrote " << s.size() << " measurements to " << pr_out << '\n';
      return kOk;
    }

    if (fbp->parsed()) {
      const Sinogram s = io::load_sinogram(fb_sino);
      const double extent = fb_extent > 0.0 ? fb_extent : s.radius;
      const ImageGrid img = fbp_reconstruct(s, ImageGrid::square(fb_size, extent), parse_filter(fb_filter));
      io::save(fb_out, img, io::write_image);
      out << "filter=" << fb_filter << " wrote " << fb_out << '\n';
      return kOk;
    }

    if (gp->parsed()) {
      const Sinogram s = io::load_sinogram(gp_sino);
      const CovarianceSpec prior = prior_from_config(KeyValueConfig::load(gp_prior));
      const BasisSystem system = BasisSystem::for_disk(s.radius, gp_m1, gp_m2, gp_margin);
      const double extent = gp_extent > 0.0 ? gp_extent : s.radius;
      const ImageGrid grid = ImageGrid::square(gp_size, extent);

      Eigen::MatrixXd phi;
      bool cached = false;
      if (!gp_phi_cache.empty()) {
        std::ifstream in(gp_phi_cache, std::ios::binary);
        if (in) {
          phi = io::read_matrix(in, gp_phi_cache);
          if (phi.rows() != system.size() || phi.cols() != static_cast<Eigen::Index>(s.size()))
            throw ParseError(gp_phi_cache, 0, "cached Phi has the wrong shape for this basis and sinogram");
          cached = true;
        }
      }
      if (!cached) {
        phi = project_basis(system, s.rays, s.radius);
        if (!gp_phi_cache.empty()) {
          std::ofstream o(gp_phi_cache, std::ios::binary);
          io::write_matrix(o, phi);
        }
      }
      const HyperObjective objective(system, phi, s.y, prior.family, prior.nu);
      const bool with_l = has_length_scale(prior.family);

      HyperParams chosen{prior.sigma_f, prior.length_scale, gp_sigma > 0.0 ? gp_sigma : s.noise_sigma.value_or(0.0)};
      std::optional<ChainTrace> chain;

      if (gp_hyper == "fixed") {
        if (!(chosen.sigma > 0.0)) throw std::invalid_argument("gp: --sigma required (sinogram has no noise_sigma)");
      } else if (gp_hyper == "mh") {
        MhOptions opt;
        opt.samples = gp_samples;
        opt.burn_in = gp_burn;
        opt.proposal_scale = gp_scale;
        opt.seed = gp_seed;
        chain = mh_sample(objective, s.radius, opt);
        const ChainEstimate est = chain_estimate(*chain);
        chosen = est.mean;
        if (!with_l) chosen.length_scale = prior.length_scale;
        detail::print_params(out, "mh_estimate", est.mean, with_l);
        detail::print_params(out, "mh_sd", est.sd, with_l);
        out << "acceptance_rate=" << chain->acceptance_rate() << " retained=" << chain->retained() << '\n';
        if (!gp_trace.empty()) io::save(gp_trace, *chain, io::write_trace);
      } else if (gp_hyper == "lcurve") {
        const LCurve lc = l_curve(objective, detail::parse_grid(gp_lc_grid, "--lcurve-grid"), prior.sigma_f,
                                  prior.length_scale, grid);
        if (!gp_lc_out.empty()) io::save(gp_lc_out, lc, io::write_lcurve);
        if (!lc.corner) throw std::invalid_argument("gp: L-curve needs at least 3 grid points for a corner");
        chosen.sigma = *lc.corner_sigma();
        out << "lcurve_corner sigma=" << chosen.sigma << '\n';
      } else {
        const auto sf = gp_cv_sf.empty() ? std::vector<double>{prior.sigma_f} : detail::parse_grid(gp_cv_sf, "--cv-sigma-f");
        const auto ls = gp_cv_l.empty() ? std::vector<double>{prior.length_scale} : detail::parse_grid(gp_cv_l, "--cv-length");
        const auto sg = detail::parse_grid(gp_cv_s, "--cv-sigma");
        const CrossValidation cv = cross_validate(objective, hyper_grid(sf, ls, sg, prior.family), gp_folds, gp_seed);
        if (!gp_cv_out.empty()) io::save(gp_cv_out, cv, io::write_cv);
        chosen = cv.best_result().params;
        detail::print_params(out, "cv_best", chosen, with_l);
      }

      const WeightPosterior w = objective.fit(chosen);
      if (w.jitter > 0.0) err << "gpct: note: Cholesky needed jitter " << w.jitter << '\n';
      PosteriorField field = predict_field(w, system, grid, !gp_var.empty());
      if (chain && gp_average > 0) {
        // Average the mean field over evenly thinned post-burn-in samples.
        const std::size_t kept = chain->retained();
        const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(gp_average), kept);
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(grid.rows, grid.cols);
        for (std::size_t k = 0; k < count; ++k) {
          const auto& rec = chain->records[static_cast<std::size_t>(chain->burn_in) + k * kept / count];
          HyperParams p = rec.params;
          if (!with_l) p.length_scale = prior.length_scale;
          acc += predict_field(objective.fit(p), system, grid, false).mean.values;
        }
        field.mean.values = acc / static_cast<double>(count);
      }
      if (gp_mask) {
        for (int i = 0; i < grid.rows; ++i)
          for (int j = 0; j < grid.cols; ++j) {
            const Point p = grid.center(i, j);
            if (p.x1 * p.x1 + p.x2 * p.x2 > s.radius * s.radius) field.mean.values(i, j) = 0.0;
          }
      }
      io::save(gp_out, field.mean, io::write_image);
      if (field.variance) io::save(gp_var, *field.variance, io::write_image);
      detail::print_params(out, "used", chosen, with_l);
      return kOk;
    }

    if (metrics->parsed()) {
      const ImageGrid truth = io::load_image(me_truth);
      const ImageGrid rec = io::load_image(me_rec);
      const Metrics m = compare_images(truth, rec, me_peak > 0.0 ? std::optional<double>(me_peak) : std::nullopt);
      out << "RE=" << m.relative_error << " PSNR=" << m.psnr << " peakval=" << m.peakval
          << (m.peak_from_truth ? " (max of truth)" : " (given)") << '\n';
      return kOk;
    }

    if (trace->parsed()) {
      ChainTrace t = io::load_trace(tr_file);
      if (tr_burn >= 0) t.burn_in = tr_burn;
      const ChainEstimate e = chain_estimate(t, tr_thin);
      out << "records=" << t.records.size() << " burn_in=" << t.burn_in << " retained=" << e.count
          << " acceptance_rate=" << t.acceptance_rate() << '\n';
      detail::print_params(out, "mean", e.mean, t.has_length_scale);
      detail::print_params(out, "sd", e.sd, t.has_length_scale);
      return kOk;
    }
  } catch (const ParseError& e) {
    err << "gpct: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "gpct: " << e.what() << '\n';
    return kUsage;
  } catch (const std::out_of_range& e) {
    err << "gpct: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    err << "gpct: numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    err << "gpct: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}

}  // namespace gpct::cli
