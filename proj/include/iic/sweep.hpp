#pragma once

#include <Eigen/Core>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "iic/criteria.hpp"
#include "iic/dataset.hpp"
#include "iic/errors.hpp"
#include "iic/features.hpp"
#include "iic/idx.hpp"
#include "iic/interpolate.hpp"
#include "iic/model.hpp"
#include "iic/prior.hpp"
#include "iic/rng.hpp"

namespace iic::harness {

struct MnistSource {
  std::string path;  // directory holding the IDX pair; empty = $IIC_MNIST_DIR
};

struct SyntheticSource {
  SyntheticSpec spec;
};

struct SweepConfig {
  std::variant<SyntheticSource, MnistSource> data_source = SyntheticSource{};
  Eigen::Index n_train = 200;
  Eigen::Index n_test = 200;
  std::vector<Eigen::Index> d_grid = {20,  50,  100, 150, 180,
                                      220, 300, 500, 1000, 2000};
  int repeats = 10;
  std::optional<double> rff_bandwidth;  // unset = median heuristic
  double ridge_lambda = 0.1;
  double prior_variance = 1.0;
  std::uint64_t seed = 1;
  double critical_lo = 0.8;
  double critical_hi = 1.2;

  void validate() const {
    if (n_train < 1 || n_test < 1) {
      throw ConfigError("SweepConfig: n_train and n_test must be >= 1");
    }
    if (repeats < 1) throw ConfigError("SweepConfig: repeats must be >= 1");
    if (!std::is_sorted(d_grid.begin(), d_grid.end())) {
      throw ConfigError("SweepConfig: d_grid must be sorted ascending");
    }
    if (d_grid.empty()) throw ConfigError("SweepConfig: d_grid is empty");
    if (!(critical_lo > 0.0) || !(critical_hi >= critical_lo)) {
      throw ConfigError("SweepConfig: bad critical band");
    }
    if (rff_bandwidth && !(*rff_bandwidth > 0.0)) {
      throw ConfigError("SweepConfig: rff_bandwidth must be positive");
    }
    if (!(ridge_lambda > 0.0) || !(prior_variance > 0.0)) {
      throw ConfigError("SweepConfig: ridge_lambda and prior_variance must be positive");
    }
  }
};

enum class Regime { Under, Critical, Over };

inline const char* regime_name(Regime regime) {
  switch (regime) {
    case Regime::Under: return "under";
    case Regime::Critical: return "critical";
    default: return "over";
  }
}

struct SweepRecord {
  Eigen::Index d = 0;
  int repeat = 0;
  Regime regime = Regime::Under;
  double train_mse = 0.0;
  double test_mse = 0.0;
  std::optional<double> iic;       // present iff regime == Over
  std::optional<double> bic;       // present iff regime == Under
  double bic_ridge = 0.0;
  std::string error;  // per-cell failure note; never serialized
};

/// Parses a SweepConfig from a JSON document mirroring the field names.
/// Unknown keys are rejected.
inline SweepConfig parse_sweep_config(const nlohmann::json& doc) {
  static const std::vector<std::string> known = {
      "data_source", "n_train",       "n_test", "d_grid",
      "repeats",     "rff_bandwidth", "ridge_lambda",
      "prior_variance", "seed",       "critical_band"};
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw ConfigError("config: unknown key '" + it.key() + "'");
    }
  }
  SweepConfig config;
  if (doc.contains("data_source")) {
    const auto& src = doc.at("data_source");
    if (!src.is_object() || !src.contains("kind")) {
      throw ConfigError("config: data_source must be an object with a 'kind'");
    }
    const std::string kind = src.at("kind").get<std::string>();
    if (kind == "synthetic") {
      SyntheticSource synth;
      for (auto it = src.begin(); it != src.end(); ++it) {
        const std::string& key = it.key();
        if (key == "kind") continue;
        if (key == "p") synth.spec.p = it.value().get<Eigen::Index>();
        else if (key == "noise") synth.spec.noise = it.value().get<double>();
        else throw ConfigError("config: unknown data_source key '" + key + "'");
      }
      config.data_source = synth;
    } else if (kind == "mnist") {
      MnistSource mnist;
      for (auto it = src.begin(); it != src.end(); ++it) {
        const std::string& key = it.key();
        if (key == "kind") continue;
        if (key == "path") mnist.path = it.value().get<std::string>();
        else throw ConfigError("config: unknown data_source key '" + key + "'");
      }
      config.data_source = mnist;
    } else {
      throw ConfigError("config: data_source kind must be synthetic or mnist");
    }
  }
  if (doc.contains("n_train")) config.n_train = doc.at("n_train").get<Eigen::Index>();
  if (doc.contains("n_test")) config.n_test = doc.at("n_test").get<Eigen::Index>();
  if (doc.contains("d_grid")) {
    config.d_grid.clear();
    for (const auto& v : doc.at("d_grid")) {
      config.d_grid.push_back(v.get<Eigen::Index>());
    }
  }
  if (doc.contains("repeats")) config.repeats = doc.at("repeats").get<int>();
  if (doc.contains("rff_bandwidth")) {
    const auto& bw = doc.at("rff_bandwidth");
    if (bw.is_string()) {
      if (bw.get<std::string>() != "median-heuristic") {
        throw ConfigError("config: rff_bandwidth must be a number or 'median-heuristic'");
      }
    } else {
      config.rff_bandwidth = bw.get<double>();
    }
  }
  if (doc.contains("ridge_lambda")) config.ridge_lambda = doc.at("ridge_lambda").get<double>();
  if (doc.contains("prior_variance")) config.prior_variance = doc.at("prior_variance").get<double>();
  if (doc.contains("seed")) config.seed = doc.at("seed").get<std::uint64_t>();
  if (doc.contains("critical_band")) {
    const auto& band = doc.at("critical_band");
    if (!band.is_array() || band.size() != 2) {
      throw ConfigError("config: critical_band must be [lo_ratio, hi_ratio]");
    }
    config.critical_lo = band[0].get<double>();
    config.critical_hi = band[1].get<double>();
  }
  config.validate();
  return config;
}

inline SweepConfig load_sweep_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: parse failure in '" + path + "': " + e.what());
  }
  return parse_sweep_config(doc);
}

namespace detail {

struct CellData {
  Matrix train_inputs, test_inputs;
  Vector train_targets, test_targets;
};

/// Per-repeat base data: a fresh synthetic draw, or a fresh MNIST
/// subsample, keyed by (seed, repeat).
inline CellData cell_data(const SweepConfig& config,
                          const RegressionDataset* mnist, int repeat) {
  const Eigen::Index total = config.n_train + config.n_test;
  CellData cell;
  if (mnist == nullptr) {
    const auto& synth = std::get<SyntheticSource>(config.data_source);
    SyntheticSpec spec = synth.spec;
    spec.n = total;
    const RegressionDataset data = synthetic_dataset(
        spec, config.seed * 0x100000001ULL + static_cast<std::uint64_t>(repeat));
    cell.train_inputs = data.inputs().topRows(config.n_train);
    cell.train_targets = data.targets().col(0).head(config.n_train);
    cell.test_inputs = data.inputs().bottomRows(config.n_test);
    cell.test_targets = data.targets().col(0).tail(config.n_test);
    return cell;
  }
  if (mnist->n() < total) {
    throw ConfigError("sweep: MNIST file has fewer rows than n_train + n_test");
  }
  // Partial Fisher-Yates over the row indices, keyed by (seed, repeat).
  rng::Substream stream(config.seed, 0x6D736162ULL,
                        static_cast<std::uint64_t>(repeat));
  std::vector<Eigen::Index> idx(mnist->n());
  for (Eigen::Index i = 0; i < mnist->n(); ++i) idx[i] = i;
  for (Eigen::Index i = 0; i < total; ++i) {
    const Eigen::Index j =
        i + static_cast<Eigen::Index>(stream.next_u64() %
                                      static_cast<std::uint64_t>(mnist->n() - i));
    std::swap(idx[i], idx[j]);
  }
  cell.train_inputs.resize(config.n_train, mnist->p());
  cell.train_targets.resize(config.n_train);
  cell.test_inputs.resize(config.n_test, mnist->p());
  cell.test_targets.resize(config.n_test);
  for (Eigen::Index i = 0; i < config.n_train; ++i) {
    cell.train_inputs.row(i) = mnist->inputs().row(idx[i]);
    cell.train_targets[i] = mnist->targets()(idx[i], 0);
  }
  for (Eigen::Index i = 0; i < config.n_test; ++i) {
    cell.test_inputs.row(i) = mnist->inputs().row(idx[config.n_train + i]);
    cell.test_targets[i] = mnist->targets()(idx[config.n_train + i], 0);
  }
  return cell;
}

inline Regime classify_regime(Eigen::Index d, Eigen::Index n_train,
                              double lo_ratio, double hi_ratio) {
  const double ratio =
      static_cast<double>(d) / static_cast<double>(n_train);  // m = 1
  if (ratio < lo_ratio) return Regime::Under;
  if (ratio > hi_ratio) return Regime::Over;
  return Regime::Critical;
}

inline SweepRecord run_cell(const SweepConfig& config,
                            const RegressionDataset* mnist, Eigen::Index d,
                            int repeat, double bandwidth) {
  SweepRecord record;
  record.d = d;
  record.repeat = repeat;
  record.regime =
      classify_regime(d, config.n_train, config.critical_lo, config.critical_hi);

  const CellData cell = cell_data(config, mnist, repeat);
  const std::uint64_t cell_seed =
      config.seed * 0x200000003ULL + static_cast<std::uint64_t>(repeat);
  const Matrix train_phi =
      rff_transform(cell.train_inputs, d, bandwidth, cell_seed);
  const Matrix test_phi =
      rff_transform(cell.test_inputs, d, bandwidth, cell_seed);

  // Minimal-norm least-squares fit covers every regime: ordinary least
  // squares below the threshold, the pseudoinverse interpolator above it.
  Eigen::BDCSVD<Matrix> svd(train_phi,
                            Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double tol =
      numeric::rank_tolerance(train_phi.rows(), train_phi.cols(), sv[0]);
  Vector inv_sv = Vector::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > tol) inv_sv[i] = 1.0 / sv[i];
  }
  const Vector theta = svd.matrixV() * inv_sv.asDiagonal() *
                       svd.matrixU().transpose() * cell.train_targets;

  record.train_mse = (train_phi * theta - cell.train_targets).squaredNorm() /
                     static_cast<double>(config.n_train);
  record.test_mse = (test_phi * theta - cell.test_targets).squaredNorm() /
                    static_cast<double>(config.n_test);
  record.bic_ridge =
      criteria::bic_ridge(train_phi, cell.train_targets, config.ridge_lambda);

  try {
    if (record.regime == Regime::Under) {
      record.bic = criteria::bic_linear(train_phi, cell.train_targets);
    } else if (record.regime == Regime::Over) {
      const interp::InterpolationResult fit =
          interp::pinv_interpolator(train_phi, cell.train_targets);
      const PredictorModel model = linear_model(d);
      const RegressionDataset train_data(train_phi, Matrix(cell.train_targets));
      const Prior prior =
          Prior::isotropic_gaussian(d, config.prior_variance);
      record.iic =
          criteria::iic(model, train_data, prior, fit.theta_star).iic;
    }
  } catch (const Error& e) {
    record.error = e.what();
  }
  return record;
}

}  // namespace detail

/// Loads the MNIST pair named by the config (or $IIC_MNIST_DIR); empty for
/// synthetic sources.
inline std::optional<RegressionDataset> load_sweep_mnist(
    const SweepConfig& config) {
  if (!std::holds_alternative<MnistSource>(config.data_source)) {
    return std::nullopt;
  }
  std::string dir = std::get<MnistSource>(config.data_source).path;
  if (dir.empty()) {
    const char* env = std::getenv("IIC_MNIST_DIR");
    if (env == nullptr) {
      throw ConfigError("sweep: MNIST source with no path and no IIC_MNIST_DIR");
    }
    dir = env;
  }
  return load_mnist_idx(dir + "/train-images-idx3-ubyte",
                        dir + "/train-labels-idx1-ubyte");
}

/// The bandwidth a sweep will use: the configured value, or the median
/// heuristic on the repeat-0 training inputs. One bandwidth is shared by
/// the whole sweep so criteria are comparable across d.
inline double resolve_bandwidth(const SweepConfig& config,
                                const RegressionDataset* mnist) {
  if (config.rff_bandwidth) return *config.rff_bandwidth;
  const detail::CellData probe = detail::cell_data(config, mnist, 0);
  return median_heuristic_bandwidth(probe.train_inputs);
}

/// Runs the double-descent sweep over (d, repeat) cells. All randomness is
/// keyed by (seed, d, repeat), so the result is independent of the thread
/// count; records come back sorted by (d, repeat).
inline std::vector<SweepRecord> run_sweep(const SweepConfig& config,
                                          int n_threads = 1) {
  config.validate();
  const std::optional<RegressionDataset> mnist = load_sweep_mnist(config);
  const RegressionDataset* mnist_ptr = mnist ? &*mnist : nullptr;
  const double bandwidth = resolve_bandwidth(config, mnist_ptr);

  struct Cell {
    Eigen::Index d;
    int repeat;
  };
  std::vector<Cell> cells;
  for (Eigen::Index d : config.d_grid) {
    for (int r = 0; r < config.repeats; ++r) cells.push_back({d, r});
  }
  std::vector<SweepRecord> records(cells.size());

  n_threads = std::max(1, n_threads);
  auto worker = [&](int worker_id) {
    for (std::size_t i = static_cast<std::size_t>(worker_id); i < cells.size();
         i += static_cast<std::size_t>(n_threads)) {
      records[i] = detail::run_cell(config, mnist_ptr, cells[i].d,
                                    cells[i].repeat, bandwidth);
    }
  };
  if (n_threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  std::sort(records.begin(), records.end(),
            [](const SweepRecord& a, const SweepRecord& b) {
              return a.d != b.d ? a.d < b.d : a.repeat < b.repeat;
            });
  return records;
}

namespace detail {

inline std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

}  // namespace detail

/// Writes records as CSV: optional '#' metadata comment lines, the fixed
/// header, then one row per record with absent values as empty fields.
/// LF line endings and 17 significant digits, so identical records give
/// byte-identical files.
inline void emit_csv(const std::vector<SweepRecord>& records,
                     const std::string& path,
                     const std::vector<std::string>& metadata = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("emit_csv: cannot open '" + path + "' for writing");
  for (const auto& line : metadata) {
    out << "# " << line << "\n";
  }
  out << "d,repeat,regime,train_mse,test_mse,iic,bic,bic_ridge\n";
  for (const auto& rec : records) {
    out << rec.d << ',' << rec.repeat << ',' << regime_name(rec.regime) << ','
        << detail::format_double(rec.train_mse) << ','
        << detail::format_double(rec.test_mse) << ','
        << (rec.iic ? detail::format_double(*rec.iic) : std::string()) << ','
        << (rec.bic ? detail::format_double(*rec.bic) : std::string()) << ','
        << detail::format_double(rec.bic_ridge) << "\n";
  }
  if (!out) throw Error("emit_csv: write failure on '" + path + "'");
}

/// Parses a file produced by emit_csv back into records ('#' lines and the
/// header are skipped).
inline std::vector<SweepRecord> parse_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("parse_records_csv: cannot open '" + path + "'");
  std::vector<SweepRecord> records;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::vector<std::string> fields;
    std::size_t begin = 0;
    while (true) {
      const std::size_t comma = line.find(',', begin);
      fields.push_back(line.substr(
          begin, comma == std::string::npos ? std::string::npos : comma - begin));
      if (comma == std::string::npos) break;
      begin = comma + 1;
    }
    if (fields.size() != 8) {
      throw FormatError("parse_records_csv: expected 8 fields, got " +
                            std::to_string(fields.size()),
                        0);
    }
    SweepRecord rec;
    rec.d = std::stoll(fields[0]);
    rec.repeat = std::stoi(fields[1]);
    if (fields[2] == "under") rec.regime = Regime::Under;
    else if (fields[2] == "critical") rec.regime = Regime::Critical;
    else if (fields[2] == "over") rec.regime = Regime::Over;
    else throw FormatError("parse_records_csv: bad regime '" + fields[2] + "'", 0);
    rec.train_mse = std::stod(fields[3]);
    rec.test_mse = std::stod(fields[4]);
    if (!fields[5].empty()) rec.iic = std::stod(fields[5]);
    if (!fields[6].empty()) rec.bic = std::stod(fields[6]);
    rec.bic_ridge = std::stod(fields[7]);
    records.push_back(rec);
  }
  return records;
}

}  // namespace iic::harness
