#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "alphanoise/dataset.hpp"
#include "alphanoise/dataset_io.hpp"
#include "alphanoise/idx.hpp"
#include "alphanoise/npy.hpp"
#include "alphanoise/sample_io.hpp"
#include "alphanoise/series_csv.hpp"

using namespace alphanoise;
namespace fs = std::filesystem;

namespace {

const fs::path kData = ALPHANOISE_TEST_DATA;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("alphanoise-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

// Header bytes exactly as in the official MNIST distribution.
std::string be32(std::uint32_t v) {
  return {static_cast<char>(v >> 24), static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 8) & 0xff),
          static_cast<char>(v & 0xff)};
}

void write_mnist_like(const fs::path& images, const fs::path& labels, std::uint32_t n) {
  std::string img = be32(0x00000803) + be32(n) + be32(28) + be32(28);
  img.resize(16 + static_cast<std::size_t>(n) * 784);
  for (std::size_t i = 16; i < img.size(); ++i) img[i] = static_cast<char>((i * 31) % 256);
  spit(images, img);
  std::string lab = be32(0x00000801) + be32(n);
  for (std::uint32_t i = 0; i < n; ++i) lab.push_back(static_cast<char>(i % 10));
  spit(labels, lab);
}

Dataset tiny_series() {
  return Dataset({0.5, -1.0, 2.0, 3.0, 4.0, -5.0}, {2}, {0, 1, 1}, Domain::series, "tiny");
}

}  // namespace

using DataIo = TempDir;

TEST(DatasetInvariants, RejectsBadConstruction) {
  EXPECT_THROW(Dataset({0.1, 0.2, 0.3}, {2}, {0, 1}, Domain::series), ParameterError);
  EXPECT_THROW(Dataset({0.1, 1.2}, {1}, {0, 1}, Domain::image), ParameterError);
  EXPECT_THROW(Dataset({0.1, NAN}, {1}, {0, 1}, Domain::series), ParameterError);
  EXPECT_THROW(Dataset({0.1, 0.2}, {1}, {0, -1}, Domain::series), ParameterError);
  EXPECT_THROW(Dataset({0.1, 0.2}, {1}, {0, 3}, Domain::series, "", 2), ParameterError);
  EXPECT_NO_THROW(Dataset({5.0, -7.0}, {1}, {0, 1}, Domain::series));
  const auto d = tiny_series();
  EXPECT_EQ(d.n_samples(), 3u);
  EXPECT_EQ(d.n_features(), 2u);
  EXPECT_EQ(d.n_classes(), 2u);
  EXPECT_EQ(d.row(1)[0], 2.0);
}

TEST_F(DataIo, IdxOfficialHeaders) {
  write_mnist_like(dir_ / "img", dir_ / "lab", 10000);
  const auto d = load_idx((dir_ / "img").string(), (dir_ / "lab").string());
  EXPECT_EQ(d.n_samples(), 10000u);
  EXPECT_EQ(d.shape(), (std::vector<std::size_t>{28, 28, 1}));
  EXPECT_EQ(d.n_classes(), 10u);
  EXPECT_EQ(d.domain(), Domain::image);
  EXPECT_DOUBLE_EQ(d.features()[0], (16 * 31 % 256) / 255.0);
}

TEST_F(DataIo, IdxBundledSubset) {
  const fs::path root = ALPHANOISE_SOURCE_DIR;
  const auto d = load_idx((root / "data/mnist5k-images-idx3-ubyte").string(),
                          (root / "data/mnist5k-labels-idx1-ubyte").string());
  EXPECT_EQ(d.n_samples(), 5000u);
  EXPECT_EQ(d.n_classes(), 10u);
}

TEST_F(DataIo, IdxErrorsNameTheField) {
  write_mnist_like(dir_ / "img", dir_ / "lab", 20);
  try {
    load_idx((dir_ / "img").string(), (dir_ / "img").string());
    ADD_FAILURE();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("unexpected magic"), std::string::npos) << e.what();
  }
  // Labels file handed in as images.
  EXPECT_THROW(read_idx_images((dir_ / "lab").string()), FormatError);

  const std::string img = slurp(dir_ / "img");
  spit(dir_ / "short", img.substr(0, img.size() - 5));
  try {
    read_idx_images((dir_ / "short").string());
    ADD_FAILURE();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("count"), std::string::npos) << e.what();
  }
  spit(dir_ / "stub", img.substr(0, 6));
  EXPECT_THROW(read_idx_images((dir_ / "stub").string()), FormatError);

  write_mnist_like(dir_ / "img2", dir_ / "lab2", 21);
  try {
    load_idx((dir_ / "img").string(), (dir_ / "lab2").string());
    ADD_FAILURE();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("count"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_idx((dir_ / "missing").string(), (dir_ / "lab").string()), IoError);
}

TEST_F(DataIo, IdxWriterRoundTrip) {
  IdxImages img{3, 2, 2, {0, 255, 128, 1, 2, 3, 4, 5, 6, 7, 8, 9}};
  write_idx_images((dir_ / "i").string(), img);
  write_idx_labels((dir_ / "l").string(), {2, 0, 1});
  const auto back = read_idx_images((dir_ / "i").string());
  EXPECT_EQ(back.pixels, img.pixels);
  const auto d = load_idx((dir_ / "i").string(), (dir_ / "l").string());
  EXPECT_EQ(d.labels(), (std::vector<int>{2, 0, 1}));
  EXPECT_DOUBLE_EQ(d.features()[1], 1.0);
}

TEST_F(DataIo, CsvRemapsSortedLabels) {
  spit(dir_ / "two.csv", "1,0.5,0.5\n-1,1.0,2.0\n");
  const auto d = load_series_csv((dir_ / "two.csv").string());
  EXPECT_EQ(d.labels(), (std::vector<int>{1, 0}));
  EXPECT_EQ(d.label_values(), (std::vector<std::int64_t>{-1, 1}));
  EXPECT_EQ(d.domain(), Domain::series);
  EXPECT_EQ(d.n_features(), 2u);
  EXPECT_DOUBLE_EQ(d.row(1)[1], 2.0);
}

TEST_F(DataIo, CsvShapeOfEcgStyleFile) {
  std::string text;
  for (int r = 0; r < 100; ++r) {
    text += (r % 2 ? "1" : "-1");
    for (int c = 0; c < 96; ++c) text += "\t" + std::to_string(std::sin(0.1 * (r + c)) * 3.0);
    text += "\n";
  }
  spit(dir_ / "ecg.tsv", text);
  const auto d = load_series_csv((dir_ / "ecg.tsv").string(), '\t');
  EXPECT_EQ(d.n_samples(), 100u);
  EXPECT_EQ(d.n_features(), 96u);
  EXPECT_EQ(d.n_classes(), 2u);
  // Unscaled and unclipped.
  double top = 0.0;
  for (double v : d.features()) top = std::max(top, std::abs(v));
  EXPECT_GT(top, 2.0);
}

TEST_F(DataIo, CsvErrorsCarryRowAndColumn) {
  std::string text;
  for (int r = 0; r < 5; ++r) {
    text += "1";
    for (int c = 0; c < (r == 3 ? 95 : 96); ++c) text += ",0.5";
    text += "\n";
  }
  spit(dir_ / "ragged.csv", text);
  try {
    load_series_csv((dir_ / "ragged.csv").string());
    ADD_FAILURE();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("row 4"), std::string::npos) << e.what();
  }
  spit(dir_ / "word.csv", "1,0.5,0.5\n2,abc,0.1\n");
  try {
    load_series_csv((dir_ / "word.csv").string());
    ADD_FAILURE();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("column 2"), std::string::npos) << e.what();
  }
  spit(dir_ / "label.csv", "1.5,0.5\n");
  EXPECT_THROW(load_series_csv((dir_ / "label.csv").string()), FormatError);
}

TEST(Npy, NumpyFixturesDecode) {
  const auto f8 = load_npy((kData / "f8_2x3.npy").string());
  EXPECT_EQ(f8.shape, (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(f8.dtype, NpyDtype::f64);
  EXPECT_EQ(f8.values, (std::vector<double>{0.0, -1.5, 2.25, 1e-300, 3.141592653589793, -0.0}));

  const auto f4 = load_npy((kData / "f4_4.npy").string());
  EXPECT_EQ(f4.values, (std::vector<double>{0.5, -2.0, 1.0e6, static_cast<double>(0.1f)}));

  const auto i4 = load_npy((kData / "i4_2x2.npy").string());
  EXPECT_EQ(i4.values, (std::vector<double>{1, -2, 3, 2147483647}));

  const auto ramp = load_npy((kData / "u8_ramp.npy").string());
  EXPECT_EQ(ramp.shape, (std::vector<std::size_t>{16, 16}));
  EXPECT_DOUBLE_EQ(ramp.values[255], 1.0);
  EXPECT_DOUBLE_EQ(ramp.values[51], 0.2);

  const auto v2 = load_npy((kData / "v2_f8.npy").string());
  EXPECT_EQ(v2.values, (std::vector<double>{1, 2, 3, 4}));

  const auto rnd = load_npy((kData / "f8_random.npy").string());
  std::ifstream txt(kData / "f8_random.txt");
  for (double v : rnd.values) {
    double expect;
    txt >> expect;
    EXPECT_EQ(v, expect);
  }
}

TEST(Npy, AllMaxBytesBecomeOnes) {
  const auto ones = load_npy((kData / "u8_ones.npy").string());
  EXPECT_EQ(ones.shape, (std::vector<std::size_t>{100, 28, 28}));
  for (double v : ones.values) ASSERT_EQ(v, 1.0);
}

TEST(Npy, FullSizeMaxBytesBecomeOnes) {
  // Same header layout numpy writes for a (10000, 28, 28) uint8 array.
  std::string dict = "{'descr': '|u1', 'fortran_order': False, 'shape': (10000, 28, 28), }";
  dict.append(128 - 10 - dict.size() - 1, ' ');
  dict += "\n";
  std::string bytes = std::string("\x93NUMPY\x01\x00", 8);
  bytes.push_back(static_cast<char>(dict.size()));
  bytes.push_back(0);
  bytes += dict;
  bytes.append(10000 * 28 * 28, static_cast<char>(255));
  const auto arr = decode_npy(std::vector<unsigned char>(bytes.begin(), bytes.end()));
  EXPECT_EQ(arr.size(), 7840000u);
  for (double v : arr.values) ASSERT_EQ(v, 1.0);
  EXPECT_EQ(encode_npy(arr), bytes);
}

TEST(Npy, RejectsUnsupported) {
  for (const char* name : {"fortran.npy", "complex.npy", "bigendian.npy"}) {
    EXPECT_THROW(load_npy((kData / name).string()), FormatError) << name;
  }
  const std::string good = slurp(kData / "f8_2x3.npy");
  auto bad_magic = good;
  bad_magic[1] = 'X';
  EXPECT_THROW(decode_npy(std::vector<unsigned char>(bad_magic.begin(), bad_magic.end())), FormatError);
  auto bad_dict = good;
  bad_dict.replace(bad_dict.find("'shape'"), 7, "'shoop'");
  EXPECT_THROW(decode_npy(std::vector<unsigned char>(bad_dict.begin(), bad_dict.end())), FormatError);
  auto truncated = good.substr(0, good.size() - 3);
  EXPECT_THROW(decode_npy(std::vector<unsigned char>(truncated.begin(), truncated.end())), FormatError);
}

TEST(Npy, RoundTripIsByteIdentical) {
  for (const char* name : {"f8_2x3.npy", "f4_4.npy", "i8_labels.npy", "i4_2x2.npy", "u8_ramp.npy", "u8_ones.npy",
                           "f8_random.npy", "scalar0d.npy"}) {
    const std::string original = slurp(kData / name);
    const auto arr = load_npy((kData / name).string());
    EXPECT_EQ(encode_npy(arr), original) << name;
  }
}

TEST_F(DataIo, NpyPairLoadsAsDataset) {
  NpyArray f{{4, 3}, NpyDtype::u8, {0, 1, 0.5, 1, 1, 1, 0, 0, 0, 0.2, 0.4, 0.6}};
  for (double& v : f.values) v = std::round(v * 255.0) / 255.0;
  save_npy((dir_ / "x.npy").string(), f);
  save_npy((dir_ / "y.npy").string(), NpyArray{{4}, NpyDtype::i64, {0, 1, 2, 1}});
  const auto d = load_npy_pair((dir_ / "x.npy").string(), (dir_ / "y.npy").string(), Domain::image);
  EXPECT_EQ(d.n_samples(), 4u);
  EXPECT_EQ(d.shape(), (std::vector<std::size_t>{3}));
  EXPECT_EQ(d.features(), f.values);
  save_npy((dir_ / "y3.npy").string(), NpyArray{{3}, NpyDtype::i64, {0, 1, 2}});
  EXPECT_THROW(load_npy_pair((dir_ / "x.npy").string(), (dir_ / "y3.npy").string(), Domain::image), FormatError);
}

TEST_F(DataIo, DatasetDirectoryRoundTrip) {
  spit(dir_ / "two.csv", "1,0.5,0.5\n-1,1.0,2.0\n");
  const auto d = load_series_csv((dir_ / "two.csv").string());
  save_dataset(dir_ / "ds", d);
  const auto side = load_sidecar(dir_ / "ds");
  EXPECT_EQ(side["domain"], "series");
  EXPECT_EQ(side["label_map"][0]["original"], -1);
  EXPECT_TRUE(side["channel_scale"].is_null());
  const auto back = load_dataset(dir_ / "ds");
  EXPECT_EQ(back.features(), d.features());
  EXPECT_EQ(back.labels(), d.labels());
  EXPECT_EQ(back.label_values(), d.label_values());
  EXPECT_EQ(back.shape(), d.shape());

  // Sharded layout reads back to the same rows.
  ShardedDatasetWriter w(dir_ / "sharded", d);
  w.append(d);
  w.append(d);
  w.finish();
  const auto twice = load_dataset(dir_ / "sharded");
  EXPECT_EQ(twice.n_samples(), 4u);
  EXPECT_EQ(twice.row(3)[1], 2.0);
  EXPECT_THROW(load_dataset(dir_ / "nope"), IoError);
}

TEST_F(DataIo, SampleFiles) {
  const std::vector<double> x = {0.1, -2.5e-300, 1e300, 1.0 / 3.0};
  write_samples((dir_ / "s.txt").string(), x, SampleFormat::text);
  write_samples((dir_ / "s.bin").string(), x, SampleFormat::f64le);
  EXPECT_EQ(read_text((dir_ / "s.txt").string()), x);
  EXPECT_EQ(read_f64le((dir_ / "s.bin").string()), x);
  EXPECT_EQ(fs::file_size(dir_ / "s.bin"), 32u);
  EXPECT_EQ(slurp(dir_ / "s.txt").substr(0, 20), "0.10000000000000001\n");
  write_samples((dir_ / "e.txt").string(), {}, SampleFormat::text);
  EXPECT_EQ(fs::file_size(dir_ / "e.txt"), 0u);
}

TEST(Synth, CountsLabelsAndDeterminism) {
  RngStream a(3), b(3);
  const auto d = synth_gaussians(1, 3, 5, 1.0, a);
  EXPECT_EQ(d.n_samples(), 3u);
  EXPECT_EQ(std::set<int>(d.labels().begin(), d.labels().end()), (std::set<int>{0, 1, 2}));
  EXPECT_EQ(d.domain(), Domain::series);
  EXPECT_EQ(synth_gaussians(1, 3, 5, 1.0, b).features(), d.features());
  RngStream c;
  EXPECT_THROW(synth_gaussians(0, 3, 5, 1.0, c), ParameterError);
}

TEST(Synth, CentersAreSeparated) {
  RngStream r(4);
  const auto d = synth_gaussians(200, 4, 3, 6.0, r);
  std::vector<std::vector<double>> centers(4, std::vector<double>(3));
  for (std::size_t i = 0; i < d.n_samples(); ++i) {
    for (std::size_t j = 0; j < 3; ++j) centers[d.labels()[i]][j] += d.row(i)[j] / 200.0;
  }
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) {
      double s = 0;
      for (int j = 0; j < 3; ++j) s += std::pow(centers[a][j] - centers[b][j], 2);
      EXPECT_GT(std::sqrt(s), 6.0 * 0.9);  // sample means wobble by ~1/sqrt(200)
    }
  }
}

// Reference logistic separator: plain batch gradient descent on the two-class log-loss.
TEST(Synth, LinearlySeparableForLogisticOracle) {
  RngStream r(5);
  const auto d = synth_gaussians(100, 2, 2, 10.0, r);
  double w0 = 0, w1 = 0, b = 0;
  for (int it = 0; it < 2000; ++it) {
    double g0 = 0, g1 = 0, gb = 0;
    for (std::size_t i = 0; i < d.n_samples(); ++i) {
      const auto x = d.row(i);
      const double p = 1.0 / (1.0 + std::exp(-(w0 * x[0] + w1 * x[1] + b)));
      const double e = p - d.labels()[i];
      g0 += e * x[0], g1 += e * x[1], gb += e;
    }
    w0 -= 0.01 * g0, w1 -= 0.01 * g1, b -= 0.01 * gb;
  }
  std::size_t right = 0;
  for (std::size_t i = 0; i < d.n_samples(); ++i) {
    const auto x = d.row(i);
    right += ((w0 * x[0] + w1 * x[1] + b) > 0) == (d.labels()[i] == 1);
  }
  EXPECT_GE(static_cast<double>(right) / d.n_samples(), 0.99);
}

TEST(Split, FloorRulePartitionAndDeterminism) {
  std::vector<double> f(10);
  std::vector<int> l(10);
  for (int i = 0; i < 10; ++i) f[i] = i, l[i] = i % 2;
  const Dataset d(f, {1}, l, Domain::series);
  RngStream a(1), b(1);
  const auto [train, test] = split(d, 0.8, a);
  EXPECT_EQ(train.n_samples(), 8u);
  EXPECT_EQ(test.n_samples(), 2u);
  std::multiset<std::pair<double, int>> all, parts;
  for (std::size_t i = 0; i < 10; ++i) all.insert({d.row(i)[0], d.labels()[i]});
  for (const auto* part : {&train, &test}) {
    for (std::size_t i = 0; i < part->n_samples(); ++i) parts.insert({part->row(i)[0], part->labels()[i]});
  }
  EXPECT_EQ(all, parts);
  EXPECT_EQ(split(d, 0.8, b).first.features(), train.features());
  RngStream c;
  EXPECT_THROW(split(d, 0.05, c), ParameterError);
  EXPECT_THROW(split(d, 1.0, c), ParameterError);
  EXPECT_THROW(split(d, 0.0, c), ParameterError);
}
