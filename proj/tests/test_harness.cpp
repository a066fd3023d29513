#include <gtest/gtest.h>

#include <cstdio>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "iic/features.hpp"
#include "iic/idx.hpp"
#include "iic/svg.hpp"
#include "iic/sweep.hpp"
#include "test_oracles.hpp"

using iic::Matrix;
using iic::Vector;
namespace harness = iic::harness;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("iic_test_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const {
    return (dir_ / name).string();
  }
  fs::path dir_;
};

void write_bytes(const std::string& path, const std::vector<unsigned char>& b) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()),
            static_cast<std::streamsize>(b.size()));
}

std::vector<unsigned char> be32(std::uint32_t v) {
  return {static_cast<unsigned char>(v >> 24),
          static_cast<unsigned char>(v >> 16),
          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
}

void append(std::vector<unsigned char>& dst,
            const std::vector<unsigned char>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

class IdxFixture : public TempDir {
 protected:
  // Two 2x2 images and two labels: 24 + 10 = 34 bytes total.
  void make_fixture(bool truncate_images = false, bool bad_magic = false) {
    std::vector<unsigned char> img;
    append(img, be32(bad_magic ? 0x00000807u : 0x00000803u));
    append(img, be32(2));
    append(img, be32(2));
    append(img, be32(2));
    for (unsigned char px : {0, 51, 102, 153, 204, 255, 0, 128}) {
      img.push_back(px);
    }
    if (truncate_images) img.pop_back();
    write_bytes(path("images"), img);

    std::vector<unsigned char> lab;
    append(lab, be32(0x00000801u));
    append(lab, be32(2));
    lab.push_back(7);
    lab.push_back(3);
    write_bytes(path("labels"), lab);
  }
};

TEST_F(IdxFixture, LoadsHandWrittenPair) {
  make_fixture();
  EXPECT_EQ(fs::file_size(path("images")) + fs::file_size(path("labels")), 34u);
  const auto data = harness::load_mnist_idx(path("images"), path("labels"));
  EXPECT_EQ(data.n(), 2);
  EXPECT_EQ(data.p(), 4);
  EXPECT_EQ(data.m(), 1);
  EXPECT_DOUBLE_EQ(data.inputs()(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(data.inputs()(0, 1), 51.0 / 255.0);
  EXPECT_DOUBLE_EQ(data.inputs()(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(data.targets()(0, 0), 0.7);
  EXPECT_DOUBLE_EQ(data.targets()(1, 0), 0.3);
}

TEST_F(IdxFixture, TruncatedPayloadNamesLength) {
  make_fixture(/*truncate_images=*/true);
  try {
    harness::load_mnist_idx(path("images"), path("labels"));
    FAIL() << "expected FormatError";
  } catch (const iic::FormatError& e) {
    EXPECT_EQ(e.byte_offset, 23u);
    EXPECT_NE(std::string(e.what()).find("expected 24"), std::string::npos);
  }
}

TEST_F(IdxFixture, BadMagicRejected) {
  make_fixture(false, /*bad_magic=*/true);
  EXPECT_THROW(harness::load_mnist_idx(path("images"), path("labels")),
               iic::FormatError);
}

TEST(Synthetic, DeterministicInSeed) {
  harness::SyntheticSpec spec;
  spec.n = 16;
  const auto a = harness::synthetic_dataset(spec, 5);
  const auto b = harness::synthetic_dataset(spec, 5);
  const auto c = harness::synthetic_dataset(spec, 6);
  EXPECT_EQ((a.inputs() - b.inputs()).norm(), 0.0);
  EXPECT_EQ((a.targets() - b.targets()).norm(), 0.0);
  EXPECT_GT((a.inputs() - c.inputs()).norm(), 0.0);
}

TEST(Synthetic, NoiselessIsExactlySineOfNorm) {
  harness::SyntheticSpec spec;
  spec.n = 8;
  spec.noise = 0.0;
  const auto data = harness::synthetic_dataset(spec, 9);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    EXPECT_DOUBLE_EQ(data.targets()(i, 0),
                     std::sin(data.inputs().row(i).norm()));
  }
}

TEST(Rff, BoundedAndDeterministic) {
  const Matrix inputs = oracles::random_matrix(20, 4, 2001);
  const Eigen::Index d = 64;
  const Matrix phi = harness::rff_transform(inputs, d, 2.0, 77);
  const double bound = std::sqrt(2.0 / static_cast<double>(d));
  EXPECT_LE(phi.cwiseAbs().maxCoeff(), bound + 1e-15);
  const Matrix phi2 = harness::rff_transform(inputs, d, 2.0, 77);
  EXPECT_EQ((phi - phi2).norm(), 0.0);
  const Matrix phi3 = harness::rff_transform(inputs, d, 2.0, 78);
  EXPECT_GT((phi - phi3).norm(), 0.0);
}

TEST(Rff, ApproachesGaussianKernel) {
  const Eigen::Index n = 10, p = 3, d = 4096;
  const double bw = 1.8;
  const Matrix inputs = oracles::random_matrix(n, p, 2011);
  const Matrix phi = harness::rff_transform(inputs, d, bw, 11);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double kernel = std::exp(
          -(inputs.row(i) - inputs.row(j)).squaredNorm() / (2.0 * bw * bw));
      worst = std::max(worst,
                       std::abs(phi.row(i).dot(phi.row(j)) - kernel));
    }
  }
  EXPECT_LE(worst, 0.05);
}

TEST(MedianHeuristic, SmallHandCase) {
  Matrix inputs(3, 1);
  inputs << 0.0, 1.0, 4.0;  // pairwise distances 1, 3, 4 -> median 3
  EXPECT_DOUBLE_EQ(harness::median_heuristic_bandwidth(inputs), 3.0);
}

harness::SweepConfig mini_config() {
  harness::SweepConfig config;
  harness::SyntheticSource src;
  src.spec.p = 4;
  config.data_source = src;
  config.n_train = 40;
  config.n_test = 20;
  config.d_grid = {5, 40, 200};
  config.repeats = 2;
  config.seed = 3;
  return config;
}

TEST(RunSweep, RegimesAndRecordInvariants) {
  const auto records = harness::run_sweep(mini_config());
  ASSERT_EQ(records.size(), 6u);
  for (const auto& rec : records) {
    if (rec.d == 5) EXPECT_EQ(rec.regime, harness::Regime::Under);
    if (rec.d == 40) EXPECT_EQ(rec.regime, harness::Regime::Critical);
    if (rec.d == 200) EXPECT_EQ(rec.regime, harness::Regime::Over);
    EXPECT_EQ(rec.iic.has_value(), rec.regime == harness::Regime::Over)
        << rec.error;
    EXPECT_EQ(rec.bic.has_value(), rec.regime == harness::Regime::Under);
    if (rec.regime == harness::Regime::Over) {
      EXPECT_LE(rec.train_mse, 1e-8);
    }
    EXPECT_TRUE(std::isfinite(rec.test_mse));
    EXPECT_TRUE(std::isfinite(rec.bic_ridge));
  }
}

TEST(RunSweep, ThreadCountDoesNotChangeRecords) {
  const auto one = harness::run_sweep(mini_config(), 1);
  const auto three = harness::run_sweep(mini_config(), 3);
  ASSERT_EQ(one.size(), three.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(one[i].d, three[i].d);
    EXPECT_EQ(one[i].repeat, three[i].repeat);
    EXPECT_EQ(one[i].train_mse, three[i].train_mse);
    EXPECT_EQ(one[i].test_mse, three[i].test_mse);
    EXPECT_EQ(one[i].iic.has_value(), three[i].iic.has_value());
    if (one[i].iic) EXPECT_EQ(*one[i].iic, *three[i].iic);
    EXPECT_EQ(one[i].bic_ridge, three[i].bic_ridge);
  }
}

class CsvTest : public TempDir {};

TEST_F(CsvTest, EmptyRecordListGivesHeaderOnly) {
  harness::emit_csv({}, path("empty.csv"));
  std::ifstream in(path("empty.csv"));
  std::string line;
  ASSERT_TRUE(std::getline(in, line));
  EXPECT_EQ(line, "d,repeat,regime,train_mse,test_mse,iic,bic,bic_ridge");
  EXPECT_FALSE(std::getline(in, line));
}

TEST_F(CsvTest, SingleRecordTwoLines) {
  harness::SweepRecord rec;
  rec.d = 10;
  rec.repeat = 0;
  rec.regime = harness::Regime::Under;
  rec.train_mse = 0.25;
  rec.test_mse = 0.5;
  rec.bic = -1.0;
  rec.bic_ridge = -0.5;
  harness::emit_csv({rec}, path("one.csv"));
  std::ifstream in(path("one.csv"));
  std::string header, row, extra;
  ASSERT_TRUE(std::getline(in, header));
  ASSERT_TRUE(std::getline(in, row));
  EXPECT_FALSE(std::getline(in, extra));
  EXPECT_EQ(row, "10,0,under,0.25,0.5,,-1,-0.5");
}

TEST_F(CsvTest, RoundTripReproducesRecords) {
  const auto records = harness::run_sweep(mini_config());
  harness::emit_csv(records, path("sweep.csv"), {"meta line: checked"});
  const auto parsed = harness::parse_records_csv(path("sweep.csv"));
  ASSERT_EQ(parsed.size(), records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(parsed[i].d, records[i].d);
    EXPECT_EQ(parsed[i].repeat, records[i].repeat);
    EXPECT_EQ(parsed[i].regime, records[i].regime);
    EXPECT_EQ(parsed[i].train_mse, records[i].train_mse);
    EXPECT_EQ(parsed[i].test_mse, records[i].test_mse);
    EXPECT_EQ(parsed[i].iic.has_value(), records[i].iic.has_value());
    if (records[i].iic) EXPECT_EQ(*parsed[i].iic, *records[i].iic);
    EXPECT_EQ(parsed[i].bic.has_value(), records[i].bic.has_value());
    if (records[i].bic) EXPECT_EQ(*parsed[i].bic, *records[i].bic);
    EXPECT_EQ(parsed[i].bic_ridge, records[i].bic_ridge);
  }
}

TEST_F(CsvTest, ByteIdenticalAcrossRuns) {
  const auto a = harness::run_sweep(mini_config(), 1);
  const auto b = harness::run_sweep(mini_config(), 2);
  harness::emit_csv(a, path("a.csv"));
  harness::emit_csv(b, path("b.csv"));
  std::ifstream fa(path("a.csv"), std::ios::binary);
  std::ifstream fb(path("b.csv"), std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(fa)), {});
  const std::string sb((std::istreambuf_iterator<char>(fb)), {});
  EXPECT_EQ(sa, sb);
  EXPECT_EQ(sa.find('\r'), std::string::npos);  // LF endings only
}

class MnistSweep : public TempDir {
 protected:
  // 100 random 2x3 "images" with digit labels, in IDX format.
  void make_idx_pool() {
    iic::rng::Substream stream(40404);
    const std::uint32_t count = 100;
    std::vector<unsigned char> img;
    append(img, be32(0x00000803u));
    append(img, be32(count));
    append(img, be32(2));
    append(img, be32(3));
    for (std::uint32_t i = 0; i < count * 6; ++i) {
      img.push_back(static_cast<unsigned char>(stream.next_u64() % 256));
    }
    write_bytes(path("train-images-idx3-ubyte"), img);
    std::vector<unsigned char> lab;
    append(lab, be32(0x00000801u));
    append(lab, be32(count));
    for (std::uint32_t i = 0; i < count; ++i) {
      lab.push_back(static_cast<unsigned char>(stream.next_u64() % 10));
    }
    write_bytes(path("train-labels-idx1-ubyte"), lab);
  }
};

TEST_F(MnistSweep, RunsOnIdxFilesWithEnvFallback) {
  make_idx_pool();
  harness::SweepConfig config;
  harness::MnistSource source;
  source.path = dir_.string();
  config.data_source = source;
  config.n_train = 40;
  config.n_test = 20;
  config.d_grid = {5, 40, 200};
  config.repeats = 2;
  config.seed = 12;
  const auto records = harness::run_sweep(config);
  ASSERT_EQ(records.size(), 6u);
  for (const auto& rec : records) {
    EXPECT_TRUE(std::isfinite(rec.test_mse));
    if (rec.regime == harness::Regime::Over) {
      EXPECT_TRUE(rec.iic.has_value()) << rec.error;
      EXPECT_LE(rec.train_mse, 1e-8);
    }
  }
  // Same sweep through the environment-variable default path.
  harness::SweepConfig env_config = config;
  env_config.data_source = harness::MnistSource{};
  ASSERT_EQ(::setenv("IIC_MNIST_DIR", dir_.string().c_str(), 1), 0);
  const auto env_records = harness::run_sweep(env_config);
  ::unsetenv("IIC_MNIST_DIR");
  ASSERT_EQ(env_records.size(), records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(env_records[i].test_mse, records[i].test_mse);
  }
  // Requesting more rows than the pool holds is a configuration error.
  harness::SweepConfig big = config;
  big.n_train = 90;
  big.n_test = 90;
  EXPECT_THROW(harness::run_sweep(big), iic::ConfigError);
}

TEST(Config, ParsesFullDocumentAndRejectsUnknownKeys) {
  const auto doc = nlohmann::json::parse(R"({
    "data_source": {"kind": "synthetic", "p": 6, "noise": 0.2},
    "n_train": 64, "n_test": 32,
    "d_grid": [4, 64, 256],
    "repeats": 3,
    "rff_bandwidth": "median-heuristic",
    "ridge_lambda": 0.2,
    "prior_variance": 2.0,
    "seed": 11,
    "critical_band": [0.9, 1.1]
  })");
  const auto config = harness::parse_sweep_config(doc);
  EXPECT_EQ(config.n_train, 64);
  EXPECT_EQ(config.repeats, 3);
  EXPECT_FALSE(config.rff_bandwidth.has_value());
  EXPECT_DOUBLE_EQ(config.critical_lo, 0.9);
  const auto& synth = std::get<harness::SyntheticSource>(config.data_source);
  EXPECT_EQ(synth.spec.p, 6);
  EXPECT_DOUBLE_EQ(synth.spec.noise, 0.2);

  auto bad = doc;
  bad["unknown_key"] = 1;
  EXPECT_THROW(harness::parse_sweep_config(bad), iic::ConfigError);
  auto bad_source = doc;
  bad_source["data_source"]["extra"] = true;
  EXPECT_THROW(harness::parse_sweep_config(bad_source), iic::ConfigError);
  auto bad_band = doc;
  bad_band["critical_band"] = {0.9};
  EXPECT_THROW(harness::parse_sweep_config(bad_band), iic::ConfigError);
  auto bad_bw = doc;
  bad_bw["rff_bandwidth"] = "automatic";
  EXPECT_THROW(harness::parse_sweep_config(bad_bw), iic::ConfigError);
  auto unsorted = doc;
  unsorted["d_grid"] = {64, 4};
  EXPECT_THROW(harness::parse_sweep_config(unsorted), iic::ConfigError);
}

class SvgTest : public TempDir {};

TEST_F(SvgTest, WellFormedDeterministicOutput) {
  const auto records = harness::run_sweep(mini_config());
  harness::emit_svg(records, path("a.svg"));
  harness::emit_svg(records, path("b.svg"));
  std::ifstream fa(path("a.svg"), std::ios::binary);
  const std::string svg((std::istreambuf_iterator<char>(fa)), {});
  EXPECT_EQ(svg.rfind("<?xml version=\"1.0\" encoding=\"UTF-8\"?>", 0), 0u);
  EXPECT_NE(svg.find("<svg xmlns=\"http://www.w3.org/2000/svg\""), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  // One root element: the closing tag terminates the document.
  EXPECT_EQ(svg.find("<svg"), svg.rfind("<svg"));
  std::ifstream fb(path("b.svg"), std::ios::binary);
  const std::string svg_b((std::istreambuf_iterator<char>(fb)), {});
  EXPECT_EQ(svg, svg_b);
}

TEST_F(SvgTest, DataAttributesMatchCsvMeans) {
  const auto records = harness::run_sweep(mini_config());
  harness::emit_csv(records, path("sweep.csv"));
  harness::emit_svg(records, path("sweep.svg"));
  const auto parsed = harness::parse_records_csv(path("sweep.csv"));

  std::ifstream in(path("sweep.svg"), std::ios::binary);
  const std::string svg((std::istreambuf_iterator<char>(in)), {});
  const std::regex series_re(
      "data-series=\"([a-z_]+)\" data-d=\"([^\"]*)\" data-mean=\"([^\"]*)\"");
  auto split_doubles = [](const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    double v;
    while (ss >> v) out.push_back(v);
    return out;
  };
  int matched_series = 0;
  for (std::sregex_iterator it(svg.begin(), svg.end(), series_re), end;
       it != end; ++it) {
    const std::string name = (*it)[1];
    const auto ds = split_doubles((*it)[2]);
    const auto means = split_doubles((*it)[3]);
    ASSERT_EQ(ds.size(), means.size());
    ++matched_series;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      double sum = 0.0;
      int count = 0;
      for (const auto& rec : parsed) {
        if (rec.d != static_cast<Eigen::Index>(ds[i])) continue;
        if (name == "test_mse") {
          sum += rec.test_mse;
          ++count;
        } else if (name == "iic" && rec.iic) {
          sum += *rec.iic;
          ++count;
        } else if (name == "bic" && rec.bic) {
          sum += *rec.bic;
          ++count;
        } else if (name == "bic_ridge") {
          sum += rec.bic_ridge;
          ++count;
        }
      }
      ASSERT_GT(count, 0);
      EXPECT_EQ(means[i], sum / count) << name << " at d = " << ds[i];
    }
  }
  EXPECT_EQ(matched_series, 4);
}

}  // namespace
