// Command-line front end: worked linear example, oracle verification
// suites, the random-Fourier-feature double-descent sweep, and criterion
// reports for user-supplied designs.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "iic/iic.hpp"

namespace {

using iic::Matrix;
using iic::Vector;

int run_demo_linear() {
  Matrix x(1, 2);
  x << 1.0, 1.0;
  Vector y(1);
  y[0] = 2.0;

  std::printf("Worked example: X = [[1, 1]], y = [2], Gaussian prior tau0 = 1\n\n");
  const auto fit = iic::interp::pinv_interpolator(x, y);
  std::printf("interpolator X^+ y        = (%.6f, %.6f)\n", fit.theta_star[0],
              fit.theta_star[1]);
  std::printf("||theta*||                = %.6f\n", fit.theta_star.norm());

  const iic::PredictorModel model = iic::linear_model(2);
  const iic::RegressionDataset data(x, Matrix(y));
  const iic::Prior prior = iic::Prior::isotropic_gaussian(2, 1.0);
  const auto report = iic::criteria::iic(model, data, prior, fit.theta_star);
  std::printf("\ncriterion report (pipeline):\n%s\n",
              report.to_key_value().c_str());

  const double closed = iic::criteria::iic_linear(x, y);
  std::printf("iic_linear closed form    = %.6f\n", closed);
  std::printf("closed form - pipeline    = %.6f (log 2 = %.6f: the R = ||.||^2\n"
              "vs R = ||.||^2/2 convention offset)\n",
              closed - report.iic, std::log(2.0));
  std::printf("bic_ridge (lambda = 0.1)  = %.6f\n",
              iic::criteria::bic_ridge(x, y, 0.1));
  return 0;
}

int run_verify(const std::string& suite) {
  std::vector<iic::verify::CheckResult> checks;
  if (suite == "duality") {
    checks = iic::verify::duality_suite();
    const auto mc = iic::verify::dual_prior_mc_suite();
    checks.insert(checks.end(), mc.begin(), mc.end());
  } else if (suite == "laplace") {
    checks = iic::verify::laplace_suite();
  } else if (suite == "manifold-hessian") {
    checks = iic::verify::manifold_hessian_suite();
  } else if (suite == "map-limit") {
    checks = iic::verify::map_limit_suite();
  } else if (suite == "radial") {
    checks = iic::verify::radial_suite();
  } else {
    std::fprintf(stderr,
                 "unknown suite '%s' (expected duality, laplace, "
                 "manifold-hessian, map-limit, or radial)\n",
                 suite.c_str());
    return 2;
  }
  std::printf("verify %s:\n", suite.c_str());
  iic::verify::print_checks(checks);
  const bool ok = iic::verify::all_pass(checks);
  std::printf("%s\n", ok ? "all checks passed" : "CHECKS FAILED");
  return ok ? 0 : 1;
}

int run_sweep_cmd(const std::string& config_path, const std::string& out_csv,
                  const std::string& out_svg, int threads) {
  const iic::harness::SweepConfig config =
      config_path.empty() ? iic::harness::SweepConfig{}
                          : iic::harness::load_sweep_config(config_path);
  const auto mnist = iic::harness::load_sweep_mnist(config);
  const double bandwidth =
      iic::harness::resolve_bandwidth(config, mnist ? &*mnist : nullptr);
  const auto records = iic::harness::run_sweep(config, threads);

  char line[160];
  std::vector<std::string> metadata;
  metadata.push_back("generator: iic sweep");
  metadata.push_back(
      std::holds_alternative<iic::harness::MnistSource>(config.data_source)
          ? "data_source: mnist (targets: digit value / 10, m = 1)"
          : "data_source: synthetic y = sin(||x||) + noise");
  std::snprintf(line, sizeof(line), "seed: %llu",
                static_cast<unsigned long long>(config.seed));
  metadata.push_back(line);
  std::snprintf(line, sizeof(line), "n_train: %lld, n_test: %lld, repeats: %d",
                static_cast<long long>(config.n_train),
                static_cast<long long>(config.n_test), config.repeats);
  metadata.push_back(line);
  std::snprintf(line, sizeof(line),
                "rff_bandwidth: %.17g (%s), weights N(0, 1/bw^2), phase U[0, 2pi)",
                bandwidth,
                config.rff_bandwidth ? "configured" : "median-heuristic");
  metadata.push_back(line);
  std::snprintf(line, sizeof(line), "ridge_lambda: %.17g, prior_variance: %.17g",
                config.ridge_lambda, config.prior_variance);
  metadata.push_back(line);

  iic::harness::emit_csv(records, out_csv, metadata);
  std::printf("wrote %zu records to %s\n", records.size(), out_csv.c_str());
  if (!out_svg.empty()) {
    const double band_lo = config.critical_lo * config.n_train;
    const double band_hi = config.critical_hi * config.n_train;
    iic::harness::emit_svg(records, out_svg,
                           {"test_mse", "iic", "bic", "bic_ridge"}, band_lo,
                           band_hi);
    std::printf("wrote figure to %s\n", out_svg.c_str());
  }
  return 0;
}

Matrix read_numeric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw iic::Error("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (rows.empty()) continue;  // header line
      throw iic::Error("non-numeric row in '" + path + "': " + line);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw iic::Error("ragged rows in '" + path + "'");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw iic::Error("no data rows in '" + path + "'");
  Matrix out(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) out(i, j) = rows[i][j];
  }
  return out;
}

int run_compute(const std::string& design_path, const std::string& targets_path,
                double prior_variance) {
  const Matrix x = read_numeric_csv(design_path);
  const Matrix t = read_numeric_csv(targets_path);
  if (t.cols() != 1 || t.rows() != x.rows()) {
    throw iic::Error("targets must be one column with the same row count as "
                     "the design");
  }
  const Vector y = t.col(0);
  const Eigen::Index n = x.rows(), d = x.cols();
  std::printf("design: n = %lld, d = %lld (%s regime)\n",
              static_cast<long long>(n), static_cast<long long>(d),
              d > n ? "overparameterized" : "underparameterized");
  if (d > n) {
    const auto fit = iic::interp::pinv_interpolator(x, y);
    const iic::PredictorModel model = iic::linear_model(d);
    const iic::RegressionDataset data(x, Matrix(y));
    const iic::Prior prior = iic::Prior::isotropic_gaussian(d, prior_variance);
    const auto report = iic::criteria::iic(model, data, prior, fit.theta_star);
    std::fputs(report.to_key_value().c_str(), stdout);
    std::printf("iic_linear=%.17g\n", iic::criteria::iic_linear(x, y));
  } else {
    std::printf("bic=%.17g\n", iic::criteria::bic_linear(x, y));
  }
  std::printf("bic_ridge=%.17g\n", iic::criteria::bic_ridge(x, y, 0.1));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interpolating information criterion toolkit"};
  app.require_subcommand(1);

  auto* demo = app.add_subcommand(
      "demo-linear", "worked linear-regression example with term breakdown");

  std::string suite;
  auto* verify = app.add_subcommand("verify", "run an oracle verification suite");
  verify->add_option("suite", suite,
                     "duality | laplace | manifold-hessian | map-limit | radial")
      ->required();

  std::string config_path, out_csv = "sweep.csv", out_svg;
  int threads = 1;
  auto* sweep = app.add_subcommand("sweep", "double-descent sweep over RFF width");
  sweep->add_option("--config", config_path, "JSON sweep configuration");
  sweep->add_option("--out-csv", out_csv, "output CSV path");
  sweep->add_option("--out-svg", out_svg, "output SVG figure path");
  sweep->add_option("--threads", threads, "worker thread count")
      ->check(CLI::PositiveNumber);

  std::string design_path, targets_path;
  double prior_variance = 1.0;
  auto* compute = app.add_subcommand(
      "compute", "criterion report for a user-supplied linear design");
  compute->add_option("--design", design_path, "design matrix CSV")->required();
  compute->add_option("--targets", targets_path, "target vector CSV")->required();
  compute->add_option("--prior-variance", prior_variance,
                      "isotropic Gaussian prior variance")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (demo->parsed()) return run_demo_linear();
    if (verify->parsed()) return run_verify(suite);
    if (sweep->parsed())
      return run_sweep_cmd(config_path, out_csv, out_svg, threads);
    if (compute->parsed())
      return run_compute(design_path, targets_path, prior_variance);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
