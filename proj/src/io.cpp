#include "kman/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "kman/errors.hpp"

namespace kman::io {

namespace {

static_assert(std::endian::native == std::endian::little,
              "snapshot files are little-endian; add byte swapping for this platform");

template <class T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  return value;
}

[[noreturn]] void io_fail(const std::string& what, const fs::path& path) {
  throw Error(ErrorKind::IoError, what + " '" + path.string() + "'");
}

nlohmann::json vec_json(const Vector& v) { return std::vector<double>(v.begin(), v.end()); }

Vector vec_from(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Vector as_vector(const Matrix& a, const fs::path& path) {
  if (a.cols() != 1) io_fail("expected a single column in", path);
  return a.col(0);
}

}  // namespace

void write_matrix(const fs::path& path, const Matrix& a) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) io_fail("cannot open for writing", path);
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kFormatVersion);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(a.rows()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(a.cols()));
  out.write(reinterpret_cast<const char*>(a.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(a.size())));
  if (!out) io_fail("write failed for", path);
}

Matrix read_matrix(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail("cannot open", path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw Error(ErrorKind::SchemaError, "bad magic in '" + path.string() + "'");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kFormatVersion) {
    throw Error(ErrorKind::SchemaError, "unsupported format version " + std::to_string(version) +
                                            " in '" + path.string() + "'");
  }
  const auto rows = get<std::uint64_t>(in);
  const auto cols = get<std::uint64_t>(in);
  if (!in) io_fail("truncated header in", path);
  const auto expected = kHeaderBytes + sizeof(double) * rows * cols;
  if (fs::file_size(path) != expected) {
    throw Error(ErrorKind::SchemaError, "payload size mismatch in '" + path.string() + "'");
  }
  Matrix a(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  in.read(reinterpret_cast<char*>(a.data()),
          static_cast<std::streamsize>(sizeof(double) * rows * cols));
  if (!in) io_fail("truncated payload in", path);
  return a;
}

fs::path sidecar_path(const fs::path& path) {
  fs::path out = path;
  out += ".json";
  return out;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) io_fail("cannot open", path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaError, "invalid JSON in '" + path.string() + "': " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) io_fail("cannot open for writing", path);
  out << j.dump(2) << '\n';
  if (!out) io_fail("write failed for", path);
}

void write_snapshots(const fs::path& path, const SnapshotSet& snapshots) {
  write_matrix(path, snapshots.states);
  nlohmann::json meta{{"rows", snapshots.states.rows()},
                      {"cols", snapshots.states.cols()},
                      {"labels", snapshots.labels},
                      {"scaling", nullptr}};
  if (snapshots.scaling) meta["scaling"] = *snapshots.scaling;
  write_json(sidecar_path(path), meta);
}

SnapshotSet read_snapshots(const fs::path& path) {
  SnapshotSet out;
  out.states = read_matrix(path);
  const auto side = sidecar_path(path);
  if (fs::exists(side)) {
    const auto meta = read_json(side);
    try {
      out.labels = meta.value("labels", nlohmann::json::array()).get<std::vector<SnapshotLabel>>();
      if (meta.contains("scaling") && !meta["scaling"].is_null()) {
        out.scaling = meta["scaling"].get<double>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::SchemaError, "bad sidecar '" + side.string() + "': " + e.what());
    }
  }
  if (!out.labels.empty() && static_cast<Eigen::Index>(out.labels.size()) != out.states.cols()) {
    throw Error(ErrorKind::SchemaError, "label count does not match columns in '" +
                                            path.string() + "'");
  }
  return out;
}

std::string sha256_files(const std::vector<fs::path>& paths) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::IoError, "cannot initialise SHA-256");
  }
  std::array<char, 1 << 16> buffer{};
  for (const auto& path : paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) io_fail("cannot open", path);
    while (in) {
      in.read(buffer.data(), buffer.size());
      const auto n = in.gcount();
      if (n > 0) EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(n));
    }
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

std::string sha256_file(const fs::path& path) { return sha256_files({path}); }

nlohmann::json to_json(const OffsetChoice& offset) {
  if (offset.kind == OffsetChoice::Kind::custom) {
    return {{"kind", "custom"}, {"vector", vec_json(offset.custom)}};
  }
  return {{"kind", std::string(to_string(offset.kind))}};
}

OffsetChoice offset_from_json(const nlohmann::json& j) {
  const auto kind = j.is_string() ? j.get<std::string>() : j.at("kind").get<std::string>();
  if (kind == "mean") return OffsetChoice::mean();
  if (kind == "zero") return OffsetChoice::zero();
  if (kind == "custom") return OffsetChoice::with(vec_from(j.at("vector")));
  throw Error(ErrorKind::InvalidConfig, "unknown offset kind '" + kind + "'");
}

void save_manifold(const fs::path& dir, const TrainedManifold& manifold,
                   const nlohmann::json& extra) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) io_fail("cannot create directory", dir);

  std::vector<std::string> files{"offset.bin", "v.bin", "v_bar.bin", "singular_values.bin"};
  write_matrix(dir / "offset.bin", manifold.basis.offset);
  write_matrix(dir / "v.bin", manifold.basis.v);
  write_matrix(dir / "v_bar.bin", manifold.basis.v_bar);
  write_matrix(dir / "singular_values.bin", manifold.basis.singular_values);

  nlohmann::json manifest = extra;
  manifest["format"] = "kman-manifold";
  manifest["version"] = kFormatVersion;
  manifest["kind"] = std::string(to_string(manifold.method()));
  manifest["lambda"] = manifold.lambda;
  manifest["jitter"] = manifold.jitter;
  manifest["dims"] = {{"N", manifold.basis.dim()}, {"r", manifold.r()}, {"m", manifold.m()}};
  manifest["kernel"] = nullptr;

  if (const auto* k = std::get_if<KernelCorrection>(&manifold.correction)) {
    manifest["kernel"] = kman::to_json(k->kernel);
    write_matrix(dir / "omega.bin", k->omega);
    write_matrix(dir / "train_inputs.bin", k->train_inputs);
    files.insert(files.end(), {"omega.bin", "train_inputs.bin"});
  } else if (const auto* f = std::get_if<FeatureMapCorrection>(&manifold.correction)) {
    if (f->feature_map.kind != FeatureMap::Kind::quadratic_no_duplicates) {
      throw Error(ErrorKind::InvalidConfig, "custom feature maps cannot be persisted");
    }
    manifest["feature_map"] = "quadratic_no_duplicates";
    manifest["normalizer"] = nullptr;
    if (f->normalizer) {
      manifest["normalizer"] = {{"m", vec_json(f->normalizer->m)},
                                {"x_bar", vec_json(f->normalizer->x_bar)}};
    }
    write_matrix(dir / "xi.bin", f->xi);
    files.emplace_back("xi.bin");
  }

  nlohmann::json hashes = nlohmann::json::object();
  for (const auto& name : files) hashes[name] = sha256_file(dir / name);
  manifest["files"] = hashes;
  write_json(dir / "manifest.json", manifest);
}

TrainedManifold load_manifold(const fs::path& dir) {
  const auto manifest = read_json(dir / "manifest.json");
  try {
    if (manifest.at("format").get<std::string>() != "kman-manifold") {
      throw Error(ErrorKind::SchemaError, "'" + dir.string() + "' is not a manifold directory");
    }
    for (const auto& [name, digest] : manifest.at("files").items()) {
      if (sha256_file(dir / name) != digest.get<std::string>()) {
        throw Error(ErrorKind::SchemaError, "'" + (dir / name).string() + "' does not match its recorded hash");
      }
    }
    TrainedManifold out;
    out.basis.offset = as_vector(read_matrix(dir / "offset.bin"), dir / "offset.bin");
    out.basis.v = read_matrix(dir / "v.bin");
    out.basis.v_bar = read_matrix(dir / "v_bar.bin");
    out.basis.singular_values =
        as_vector(read_matrix(dir / "singular_values.bin"), dir / "singular_values.bin");
    out.lambda = manifest.at("lambda").get<double>();
    out.jitter = manifest.value("jitter", 0.0);

    const Method method = parse_method(manifest.at("kind").get<std::string>());
    switch (method) {
      case Method::pod:
        out.correction = PodOnly{};
        break;
      case Method::kernel:
        out.correction = KernelCorrection{kernel_from_json(manifest.at("kernel")),
                                          read_matrix(dir / "omega.bin"),
                                          read_matrix(dir / "train_inputs.bin")};
        break;
      case Method::feature_map: {
        FeatureMapCorrection c;
        if (manifest.contains("normalizer") && !manifest["normalizer"].is_null()) {
          c.normalizer = Normalizer{vec_from(manifest["normalizer"].at("m")),
                                    vec_from(manifest["normalizer"].at("x_bar"))};
        }
        c.xi = read_matrix(dir / "xi.bin");
        out.correction = std::move(c);
        break;
      }
    }
    if (out.basis.v.rows() != out.basis.dim() || out.basis.v_bar.rows() != out.basis.dim()) {
      throw Error(ErrorKind::SchemaError, "basis shapes disagree in '" + dir.string() + "'");
    }
    const auto& dims = manifest.at("dims");
    if (dims.at("N").get<Eigen::Index>() != out.basis.dim() ||
        dims.at("r").get<Eigen::Index>() != out.r() || dims.at("m").get<Eigen::Index>() != out.m()) {
      throw Error(ErrorKind::SchemaError, "manifest dims disagree with stored matrices in '" + dir.string() + "'");
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaError, "bad manifest in '" + dir.string() + "': " + e.what());
  }
}

}  // namespace kman::io
