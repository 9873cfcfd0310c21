#include "gcvit/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

namespace gcvit {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'G', 'C', 'V', 'I', 'T', 'C', 'K', 'P'};

template <typename T> void put(std::ostream &out, T const &v)
{
  out.write(reinterpret_cast<char const *>(&v), sizeof(T));
}

template <typename T> T get(std::istream &in, std::filesystem::path const &path)
{
  T v{};
  in.read(reinterpret_cast<char *>(&v), sizeof(T));
  if (!in) { throw IoError(fmt::format("{}: truncated checkpoint", path.string())); }
  return v;
}

std::string get_string(std::istream &in, std::uint64_t n, std::filesystem::path const &path)
{
  if (n > (1u << 30)) { throw IoError(fmt::format("{}: corrupt checkpoint (string length {})", path.string(), n)); }
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) { throw IoError(fmt::format("{}: truncated checkpoint", path.string())); }
  return s;
}

struct RawTensor
{
  std::uint64_t rows = 0, cols = 0;
  std::vector<char> bytes;
};

template <typename Scalar, typename Stored> void copy_into(ParamRef<Scalar> &ref, RawTensor const &raw)
{
  Eigen::Map<Matrix<Stored> const> const src(reinterpret_cast<Stored const *>(raw.bytes.data()), ref.rows, ref.cols);
  ref.map() = src.template cast<Scalar>();
}

} // namespace

template <typename Scalar>
void save_checkpoint(std::filesystem::path const &path, GcVit<Scalar> const &model, nlohmann::json const &metadata)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) { throw IoError(fmt::format("{}: cannot open for writing", path.string())); }
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, sizeof(Scalar));
  std::string const header = nlohmann::json{{"config", model.config}, {"metadata", metadata}}.dump();
  put<std::uint64_t>(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));

  std::uint64_t count = 0;
  visit_parameters(model, [&](std::string const &, auto const &) { ++count; });
  put<std::uint64_t>(out, count);
  visit_parameters(model, [&](std::string const &name, auto const &t) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.cols()));
    out.write(reinterpret_cast<char const *>(t.data()), static_cast<std::streamsize>(sizeof(Scalar) * t.size()));
  });
  if (!out) { throw IoError(fmt::format("{}: write failed", path.string())); }
}

template <typename Scalar> Checkpoint<Scalar> load_checkpoint(std::filesystem::path const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw IoError(fmt::format("{}: cannot open", path.string())); }
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw IoError(fmt::format("{}: not a checkpoint file", path.string()));
  }
  auto const version = get<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw IoError(fmt::format("{}: unsupported checkpoint version {}", path.string(), version));
  }
  auto const scalar_bytes = get<std::uint32_t>(in, path);
  if (scalar_bytes != 4 && scalar_bytes != 8) {
    throw IoError(fmt::format("{}: unsupported scalar width {}", path.string(), scalar_bytes));
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(get_string(in, get<std::uint64_t>(in, path), path));
  } catch (nlohmann::json::exception const &e) {
    throw IoError(fmt::format("{}: bad checkpoint header: {}", path.string(), e.what()));
  }

  std::map<std::string, RawTensor> tensors;
  auto const count = get<std::uint64_t>(in, path);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = get_string(in, get<std::uint32_t>(in, path), path);
    RawTensor raw;
    raw.rows = get<std::uint64_t>(in, path);
    raw.cols = get<std::uint64_t>(in, path);
    if (raw.rows * raw.cols > (1ull << 32)) { throw IoError(fmt::format("{}: corrupt tensor {}", path.string(), name)); }
    raw.bytes.resize(raw.rows * raw.cols * scalar_bytes);
    in.read(raw.bytes.data(), static_cast<std::streamsize>(raw.bytes.size()));
    if (!in) { throw IoError(fmt::format("{}: truncated tensor {}", path.string(), name)); }
    tensors.emplace(std::move(name), std::move(raw));
  }

  Checkpoint<Scalar> ckpt;
  try {
    ModelConfig const cfg = header.at("config").get<ModelConfig>();
    ckpt.model = zero_model<Scalar>(cfg);
    ckpt.metadata = header.value("metadata", nlohmann::json::object());
  } catch (nlohmann::json::exception const &e) {
    throw IoError(fmt::format("{}: bad checkpoint config: {}", path.string(), e.what()));
  } catch (ConfigError const &e) {
    throw IoError(fmt::format("{}: invalid model config: {}", path.string(), e.what()));
  }

  auto refs = parameters(ckpt.model);
  if (refs.size() != tensors.size()) {
    throw IoError(fmt::format("{}: {} tensors stored, model expects {}", path.string(), tensors.size(), refs.size()));
  }
  for (auto &ref : refs) {
    auto const it = tensors.find(ref.name);
    if (it == tensors.end()) { throw IoError(fmt::format("{}: missing tensor {}", path.string(), ref.name)); }
    if (it->second.rows != std::uint64_t(ref.rows) || it->second.cols != std::uint64_t(ref.cols)) {
      throw IoError(fmt::format("{}: tensor {} has shape {}x{}, expected {}x{}", path.string(), ref.name, it->second.rows,
                                it->second.cols, ref.rows, ref.cols));
    }
    if (scalar_bytes == 4) {
      copy_into<Scalar, float>(ref, it->second);
    } else {
      copy_into<Scalar, double>(ref, it->second);
    }
  }
  return ckpt;
}

template void save_checkpoint(std::filesystem::path const &, GcVit<float> const &, nlohmann::json const &);
template void save_checkpoint(std::filesystem::path const &, GcVit<double> const &, nlohmann::json const &);
template Checkpoint<float> load_checkpoint(std::filesystem::path const &);
template Checkpoint<double> load_checkpoint(std::filesystem::path const &);

} // namespace gcvit
