#include <fstream>
#include <random>

#include "doctest.h"
#include "kman/errors.hpp"
#include "kman/io.hpp"
#include "oracles.hpp"

using namespace kman;
namespace fs = std::filesystem;

namespace {

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

TrainingConfig config(Method method, KernelSpec kernel = {RbfFamily{RbfKind::gaussian, 0.5}, std::nullopt}) {
  TrainingConfig cfg;
  cfg.method = method;
  cfg.r = 3;
  cfg.m = method == Method::pod ? 0 : 2;
  cfg.lambda = 1e-6;
  cfg.kernel = std::move(kernel);
  return cfg;
}

}  // namespace

TEST_CASE("binary matrix: exact header and round trip") {
  const auto dir = oracle::temp_dir("io_matrix");
  Matrix a(2, 3);
  a << 1, 2, 3, 4, 5, -0.125;
  io::write_matrix(dir / "a.bin", a);
  const std::string bytes = read_bytes(dir / "a.bin");
  REQUIRE(bytes.size() == 24 + 6 * 8);
  CHECK(bytes.substr(0, 4) == "KMSN");
  CHECK(bytes[4] == 1);
  CHECK(bytes[8] == 2);
  CHECK(bytes[16] == 3);
  double second = 0;
  std::memcpy(&second, bytes.data() + 24 + 8, 8);
  CHECK(second == 4.0);  // column-major
  CHECK(io::read_matrix(dir / "a.bin") == a);

  std::mt19937_64 rng(1);
  const Matrix big = oracle::random_matrix(rng, 37, 11);
  io::write_matrix(dir / "b.bin", big);
  CHECK(io::read_matrix(dir / "b.bin") == big);
  io::write_matrix(dir / "empty.bin", Matrix(0, 4));
  CHECK(io::read_matrix(dir / "empty.bin").cols() == 4);
}

TEST_CASE("binary matrix: corrupted files") {
  const auto dir = oracle::temp_dir("io_corrupt");
  io::write_matrix(dir / "a.bin", Matrix::Ones(3, 3));
  std::string bytes = read_bytes(dir / "a.bin");

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  write_bytes(dir / "magic.bin", bad_magic);
  CHECK_THROWS_WITH_AS(io::read_matrix(dir / "magic.bin"), doctest::Contains("SchemaError"), Error);

  std::string bad_version = bytes;
  bad_version[4] = 9;
  write_bytes(dir / "version.bin", bad_version);
  CHECK_THROWS_WITH_AS(io::read_matrix(dir / "version.bin"), doctest::Contains("SchemaError"), Error);

  write_bytes(dir / "short.bin", bytes.substr(0, bytes.size() - 8));
  CHECK_THROWS_WITH_AS(io::read_matrix(dir / "short.bin"), doctest::Contains("SchemaError"), Error);
  write_bytes(dir / "long.bin", bytes + "x");
  CHECK_THROWS_AS(io::read_matrix(dir / "long.bin"), Error);

  CHECK_THROWS_WITH_AS(io::read_matrix(dir / "missing.bin"), doctest::Contains("IoError"), Error);
}

TEST_CASE("snapshot sets round trip with labels and scaling") {
  const auto dir = oracle::temp_dir("io_snap");
  std::mt19937_64 rng(2);
  SnapshotSet s{oracle::random_matrix(rng, 5, 3), {{{"alpha", 1e-3}, {"time_index", 0}},
                                                   {{"alpha", 1e-3}, {"time_index", 1}},
                                                   {{"alpha", 1e-2}, {"time_index", 0}}},
                0.25};
  io::write_snapshots(dir / "s.bin", s);
  CHECK(fs::exists(io::sidecar_path(dir / "s.bin")));
  const auto back = io::read_snapshots(dir / "s.bin");
  CHECK(back.states == s.states);
  CHECK(back.labels == s.labels);
  CHECK(back.scaling == s.scaling);

  SnapshotSet plain{oracle::random_matrix(rng, 4, 2), {}, std::nullopt};
  io::write_snapshots(dir / "p.bin", plain);
  const auto pb = io::read_snapshots(dir / "p.bin");
  CHECK(pb.labels.empty());
  CHECK(!pb.scaling);
}

TEST_CASE("sha256 known vectors") {
  const auto dir = oracle::temp_dir("io_sha");
  write_bytes(dir / "abc", "abc");
  write_bytes(dir / "empty", "");
  write_bytes(dir / "a", "a");
  write_bytes(dir / "bc", "bc");
  CHECK(io::sha256_file(dir / "abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(io::sha256_file(dir / "empty") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(io::sha256_files({dir / "a", dir / "bc"}) == io::sha256_file(dir / "abc"));
}

TEST_CASE("offset json") {
  CHECK(io::offset_from_json(io::to_json(OffsetChoice::mean())).kind == OffsetChoice::Kind::mean);
  CHECK(io::offset_from_json(io::to_json(OffsetChoice::zero())).kind == OffsetChoice::Kind::zero);
  const auto c = io::offset_from_json(io::to_json(OffsetChoice::with(Vector::Constant(3, 2.5))));
  CHECK(c.kind == OffsetChoice::Kind::custom);
  CHECK(c.custom == Vector::Constant(3, 2.5));
}

TEST_CASE("manifold directories round trip and reproduce decoder outputs bitwise") {
  std::mt19937_64 rng(3);
  const SnapshotSet data{oracle::random_matrix(rng, 12, 10), {}, std::nullopt};
  auto normalized = config(Method::kernel);
  normalized.normalize_inputs = true;
  const TrainingConfig cfgs[] = {
      config(Method::pod), config(Method::kernel), normalized, config(Method::feature_map),
      config(Method::kernel, KernelSpec{PolynomialKernel{}, std::nullopt}),
      config(Method::kernel, KernelSpec{FeatureMapKernel{FeatureMap{}, FeatureMapWeight::scaled_identity()},
                                        std::nullopt})};
  int index = 0;
  for (const auto& cfg : cfgs) {
    const auto dir = oracle::temp_dir("io_manifold_" + std::to_string(index++));
    const auto man = train(data, cfg);
    io::save_manifold(dir, man, {{"note", "unit"}});
    const auto manifest = io::read_json(dir / "manifest.json");
    CHECK(manifest["format"] == "kman-manifold");
    CHECK(manifest["note"] == "unit");
    CHECK(manifest["dims"]["r"] == 3);
    CHECK(!manifest.contains("timestamp"));
    const auto back = io::load_manifold(dir);
    CHECK(back.method() == man.method());
    CHECK(back.lambda == man.lambda);
    CHECK(back.basis.v == man.basis.v);
    CHECK(reconstruct_columns(back, data.states) == reconstruct_columns(man, data.states));

    // saving twice is byte-identical
    const auto dir2 = oracle::temp_dir("io_manifold_again_" + std::to_string(index));
    io::save_manifold(dir2, man, {{"note", "unit"}});
    CHECK(read_bytes(dir / "manifest.json") == read_bytes(dir2 / "manifest.json"));
  }
}

TEST_CASE("manifold directories: tampering is detected") {
  std::mt19937_64 rng(4);
  const SnapshotSet data{oracle::random_matrix(rng, 12, 10), {}, std::nullopt};
  const auto dir = oracle::temp_dir("io_tamper");
  io::save_manifold(dir, train(data, config(Method::kernel)));
  io::write_matrix(dir / "omega.bin", Matrix::Zero(10, 2));
  CHECK_THROWS_WITH_AS(io::load_manifold(dir), doctest::Contains("SchemaError"), Error);
  CHECK_THROWS_WITH_AS(io::load_manifold(dir / "nope"), doctest::Contains("IoError"), Error);
}
