#include "abyss/train/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace abyss::train {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'A', 'B', 'Y', 'S', 'S', 'C', 'K', 'P'};

void put_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }

void put_str(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw ConfigError("checkpoint: truncated file");
  return v;
}

std::string get_str(std::istream& is) {
  const auto n = get_u32(is);
  if (n > (1u << 20)) throw ConfigError("checkpoint: implausible string length");
  std::string s(n, '\0');
  if (!is.read(s.data(), n)) throw ConfigError("checkpoint: truncated file");
  return s;
}

void put_array(std::ostream& os, const std::string& name, const nn::WeightArray& a) {
  put_str(os, name);
  put_u32(os, static_cast<std::uint32_t>(a.shape.size()));
  for (int d : a.shape) put_u32(os, static_cast<std::uint32_t>(d));
  os.write(reinterpret_cast<const char*>(a.values.data()), static_cast<std::streamsize>(a.values.size() * sizeof(float)));
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<int> split_ints(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

const std::string& need(const std::map<std::string, std::string>& m, const std::string& key) {
  auto it = m.find(key);
  if (it == m.end()) throw ConfigError("checkpoint: missing config key " + key);
  return it->second;
}

}  // namespace

std::string to_string(Stage s) { return s == Stage::Psnr ? "psnr" : "gan"; }

Stage parse_stage(const std::string& s) {
  if (s == "psnr") return Stage::Psnr;
  if (s == "gan") return Stage::Gan;
  throw ConfigError("unknown stage '" + s + "'");
}

void write_checkpoint(std::ostream& os, const Checkpoint& c) {
  std::map<std::string, std::string> meta = c.settings;
  meta["stage"] = to_string(c.stage);
  meta["step"] = std::to_string(c.step);
  const auto& g = c.generator_config;
  meta["generator.n_rrdb"] = std::to_string(g.n_rrdb);
  meta["generator.base_channels"] = std::to_string(g.base_channels);
  meta["generator.growth_channels"] = std::to_string(g.growth_channels);
  meta["generator.scale"] = std::to_string(g.scale);
  meta["generator.residual_scale"] = fmt(g.residual_scale);
  meta["generator.leaky_slope"] = fmt(g.leaky_slope);
  if (c.discriminator_config) {
    const auto& d = *c.discriminator_config;
    meta["discriminator.in_channels"] = std::to_string(d.in_channels);
    meta["discriminator.channel_schedule"] = join(d.channel_schedule);
    meta["discriminator.kernel"] = std::to_string(d.kernel);
    meta["discriminator.leaky_slope"] = fmt(d.leaky_slope);
  }
  meta["adam.g.step"] = std::to_string(c.generator_optimizer.step);
  meta["adam.d.step"] = std::to_string(c.discriminator_optimizer.step);

  os.write(kMagic, sizeof kMagic);
  put_u32(os, c.format_version);
  put_u32(os, static_cast<std::uint32_t>(meta.size()));
  for (const auto& [k, v] : meta) {
    put_str(os, k);
    put_str(os, v);
  }

  std::size_t count = c.generator.size() + c.discriminator.size() + c.generator_optimizer.first_moment.size() +
                      c.generator_optimizer.second_moment.size() + c.discriminator_optimizer.first_moment.size() +
                      c.discriminator_optimizer.second_moment.size();
  put_u32(os, static_cast<std::uint32_t>(count));
  for (const auto& [n, a] : c.generator) put_array(os, n, a);
  for (const auto& [n, a] : c.discriminator) put_array(os, n, a);
  for (const auto& [n, a] : c.generator_optimizer.first_moment) put_array(os, "adam.g.m/" + n, a);
  for (const auto& [n, a] : c.generator_optimizer.second_moment) put_array(os, "adam.g.v/" + n, a);
  for (const auto& [n, a] : c.discriminator_optimizer.first_moment) put_array(os, "adam.d.m/" + n, a);
  for (const auto& [n, a] : c.discriminator_optimizer.second_moment) put_array(os, "adam.d.v/" + n, a);
  if (!os) throw IoError("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw ConfigError("checkpoint: bad magic, not a checkpoint file");
  Checkpoint c;
  c.format_version = get_u32(is);
  if (c.format_version != Checkpoint::kFormatVersion)
    throw ConfigError("checkpoint: unsupported format version " + std::to_string(c.format_version));

  std::map<std::string, std::string> meta;
  const auto n_meta = get_u32(is);
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    auto k = get_str(is);
    meta[k] = get_str(is);
  }

  c.stage = parse_stage(need(meta, "stage"));
  c.step = std::stol(need(meta, "step"));
  c.generator_config.n_rrdb = std::stoi(need(meta, "generator.n_rrdb"));
  c.generator_config.base_channels = std::stoi(need(meta, "generator.base_channels"));
  c.generator_config.growth_channels = std::stoi(need(meta, "generator.growth_channels"));
  c.generator_config.scale = std::stoi(need(meta, "generator.scale"));
  c.generator_config.residual_scale = std::stod(need(meta, "generator.residual_scale"));
  c.generator_config.leaky_slope = std::stod(need(meta, "generator.leaky_slope"));
  if (meta.count("discriminator.channel_schedule")) {
    nn::DiscriminatorConfig d;
    d.in_channels = std::stoi(need(meta, "discriminator.in_channels"));
    d.channel_schedule = split_ints(need(meta, "discriminator.channel_schedule"));
    d.kernel = std::stoi(need(meta, "discriminator.kernel"));
    d.leaky_slope = std::stod(need(meta, "discriminator.leaky_slope"));
    c.discriminator_config = d;
  }
  c.generator_optimizer.step = std::stol(need(meta, "adam.g.step"));
  c.discriminator_optimizer.step = std::stol(need(meta, "adam.d.step"));

  for (const char* k : {"stage", "step", "generator.n_rrdb", "generator.base_channels", "generator.growth_channels",
                        "generator.scale", "generator.residual_scale", "generator.leaky_slope",
                        "discriminator.in_channels", "discriminator.channel_schedule", "discriminator.kernel",
                        "discriminator.leaky_slope", "adam.g.step", "adam.d.step"})
    meta.erase(k);
  c.settings = std::move(meta);

  const auto n_arrays = get_u32(is);
  for (std::uint32_t i = 0; i < n_arrays; ++i) {
    const auto name = get_str(is);
    nn::WeightArray a;
    const auto ndim = get_u32(is);
    if (ndim > 8) throw ConfigError("checkpoint: implausible rank for " + name);
    std::size_t numel = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      a.shape.push_back(static_cast<int>(get_u32(is)));
      numel *= static_cast<std::size_t>(a.shape.back());
    }
    if (numel > (std::size_t{1} << 31)) throw ConfigError("checkpoint: implausible size for " + name);
    a.values.resize(numel);
    if (!is.read(reinterpret_cast<char*>(a.values.data()), static_cast<std::streamsize>(numel * sizeof(float))))
      throw ConfigError("checkpoint: truncated data for " + name);

    auto route = [&](const std::string& prefix, nn::WeightSet& dst) {
      if (name.rfind(prefix, 0) != 0) return false;
      dst.emplace(name.substr(prefix.size()), std::move(a));
      return true;
    };
    if (route("adam.g.m/", c.generator_optimizer.first_moment) || route("adam.g.v/", c.generator_optimizer.second_moment) ||
        route("adam.d.m/", c.discriminator_optimizer.first_moment) ||
        route("adam.d.v/", c.discriminator_optimizer.second_moment))
      continue;
    if (name.rfind("g.", 0) == 0)
      c.generator.emplace(name, std::move(a));
    else if (name.rfind("d.", 0) == 0)
      c.discriminator.emplace(name, std::move(a));
    else
      throw ConfigError("checkpoint: unknown array " + name);
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write checkpoint " + path.string());
  write_checkpoint(os, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  return read_checkpoint(is);
}

nn::Generator<float> load_generator(const Checkpoint& ckpt) {
  if (ckpt.generator.empty()) throw ConfigError("checkpoint has no generator weights");
  nn::Generator<float> g(ckpt.generator_config);
  g.load_weights(ckpt.generator);
  return g;
}

nn::Discriminator<float> load_discriminator(const Checkpoint& ckpt) {
  if (!ckpt.discriminator_config || ckpt.discriminator.empty())
    throw ConfigError("checkpoint has no discriminator weights");
  nn::Discriminator<float> d(*ckpt.discriminator_config);
  d.load_weights(ckpt.discriminator);
  return d;
}

}  // namespace abyss::train
