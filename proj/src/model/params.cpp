#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "glocal/errors.hpp"
#include "glocal/model.hpp"

namespace glocal {

void ModelConfig::validate() const {
  if (n_blocks < 1 || n_layers < 1 || width < 1 || lags < 1 || horizon < 1)
    throw ConfigError("model counts must all be at least 1");
  if (share_weights) throw ConfigError("weight sharing across blocks is not supported");
}

std::size_t parameter_count(const ModelConfig& c) {
  const std::size_t w = c.width, k = c.lags, h = c.horizon;
  const std::size_t per_block = (k * w + w) + (c.n_layers - 1) * (w * w + w) + (w * k + k) + (w * h + h);
  return c.n_blocks * per_block + c.cat_dim * w;
}

ModelParams::ModelParams(const ModelConfig& cfg) : config(cfg) {
  cfg.validate();
  std::size_t offset = 0;
  auto slot = [&offset](std::size_t in, std::size_t out) {
    LinearSlot s{in, out, offset, offset + in * out};
    offset += in * out + out;
    return s;
  };
  blocks.resize(cfg.n_blocks);
  for (std::size_t r = 0; r < cfg.n_blocks; ++r) {
    BlockLayout& b = blocks[r];
    const std::size_t first_in = cfg.lags + (r == 0 ? cfg.cat_dim : 0);
    for (std::size_t l = 0; l < cfg.n_layers; ++l)
      b.fc.push_back(slot(l == 0 ? first_in : cfg.width, cfg.width));
    b.backcast = slot(cfg.width, cfg.lags);
    b.forecast = slot(cfg.width, cfg.horizon);
  }
  theta.assign(offset, 0.0);
}

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams p(cfg);
  std::mt19937_64 rng(seed);
  auto fill = [&](const LinearSlot& s) {
    const double bound = std::sqrt(6.0 / static_cast<double>(s.in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& w : p.weights(s)) w = dist(rng);
  };
  for (const BlockLayout& b : p.blocks) {
    for (const LinearSlot& s : b.fc) fill(s);
    fill(b.backcast);
    fill(b.forecast);
  }
  return p;
}

namespace {

constexpr char kMagic[8] = {'G', 'C', 'M', 'O', 'D', 'E', 'L', '\0'};

template <typename T>
void put_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = std::bit_cast<U>(value);
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), sizeof bytes);
}

template <typename T>
T get_le(std::istream& in, const std::filesystem::path& path) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof bytes))
    throw IOError("'" + path.string() + "' is truncated");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace

void save_model(const ModelParams& p, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IOError("cannot write '" + path.string() + "'");
  out.write(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(out, kModelFormatVersion);
  const ModelConfig& c = p.config;
  for (std::uint64_t v : {std::uint64_t{c.n_blocks}, std::uint64_t{c.n_layers},
                          std::uint64_t{c.width}, std::uint64_t{c.lags}, std::uint64_t{c.horizon},
                          std::uint64_t{c.cat_dim}, std::uint64_t{c.share_weights ? 1u : 0u},
                          std::uint64_t{p.theta.size()}})
    put_le<std::uint64_t>(out, v);
  for (double v : p.theta) put_le<double>(out, v);
  if (!out) throw IOError("failed writing '" + path.string() + "'");
}

ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open '" + path.string() + "'");
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw IOError("'" + path.string() + "' is not a model container");
  const auto version = get_le<std::uint32_t>(in, path);
  if (version != kModelFormatVersion)
    throw IOError("'" + path.string() + "' has unsupported format version " + std::to_string(version));
  ModelConfig c;
  c.n_blocks = get_le<std::uint64_t>(in, path);
  c.n_layers = get_le<std::uint64_t>(in, path);
  c.width = get_le<std::uint64_t>(in, path);
  c.lags = get_le<std::uint64_t>(in, path);
  c.horizon = get_le<std::uint64_t>(in, path);
  c.cat_dim = get_le<std::uint64_t>(in, path);
  c.share_weights = get_le<std::uint64_t>(in, path) != 0;
  const auto count = get_le<std::uint64_t>(in, path);
  ModelParams p(c);
  if (count != p.theta.size())
    throw IOError("'" + path.string() + "' parameter count does not match its configuration");
  for (double& v : p.theta) v = get_le<double>(in, path);
  return p;
}

}  // namespace glocal
