#include "saulab/zoo/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "saulab/core/error.hpp"

namespace sau {

namespace {

constexpr char kMagic[8] = {'S', 'A', 'U', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::vector<unsigned char>& out, float f) {
  std::uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(out, v);
}

std::uint64_t fnv1a(const unsigned char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct Reader {
  const std::vector<unsigned char>& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw CorruptFileError("checkpoint truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  float f32() {
    std::uint32_t v = u32();
    float f;
    std::memcpy(&f, &v, 4);
    return f;
  }
  std::uint8_t u8() {
    need(1);
    return buf[pos++];
  }
};

void encode_config(std::vector<unsigned char>& out, const ModelConfig& cfg,
                   bool norm_stats_frozen) {
  out.push_back(cfg.arch == Arch::Mlp ? 0 : 1);
  put_u32(out, static_cast<std::uint32_t>(cfg.in_channels));
  put_u32(out, static_cast<std::uint32_t>(cfg.in_height));
  put_u32(out, static_cast<std::uint32_t>(cfg.in_width));
  put_u32(out, static_cast<std::uint32_t>(cfg.num_classes));
  out.push_back(cfg.use_norm_layers ? 1 : 0);
  out.push_back(norm_stats_frozen ? 1 : 0);
  const std::vector<int>& widths = cfg.arch == Arch::Mlp ? cfg.hidden_widths : cfg.conv_channels;
  put_u32(out, static_cast<std::uint32_t>(widths.size()));
  for (int w : widths) put_u32(out, static_cast<std::uint32_t>(w));
  if (cfg.arch == Arch::Cnn) {
    put_u32(out, static_cast<std::uint32_t>(cfg.kernel_sizes.size()));
    for (int k : cfg.kernel_sizes) put_u32(out, static_cast<std::uint32_t>(k));
  } else {
    put_u32(out, 0);
  }
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& path) {
  std::vector<unsigned char> body;
  put_u32(body, kVersion);
  encode_config(body, model.config(), model.norm_stats_frozen());

  std::uint64_t n_params = 0;
  for (const Tensor& p : model.params()) n_params += static_cast<std::uint64_t>(p.size());
  put_u64(body, n_params);
  for (const Tensor& p : model.params()) {
    for (std::int64_t i = 0; i < p.size(); ++i) put_f32(body, p.at(i));
  }
  std::uint64_t n_stats = 0;
  for (const Tensor& s : model.running_stats()) n_stats += static_cast<std::uint64_t>(s.size());
  put_u64(body, n_stats);
  for (const Tensor& s : model.running_stats()) {
    for (std::int64_t i = 0; i < s.size(); ++i) put_f32(body, s.at(i));
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out.write(kMagic, 8);
  out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
  std::vector<unsigned char> tail;
  put_u64(tail, fnv1a(body.data(), body.size()));
  out.write(reinterpret_cast<const char*>(tail.data()), 8);
  if (!out) throw FormatError("write failed for '" + path + "'");
}

namespace {

Model load_impl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 8 || std::memcmp(buf.data(), kMagic, 8) != 0) {
    throw FormatError("'" + path + "' is not a checkpoint");
  }
  if (buf.size() < 16) throw CorruptFileError("checkpoint truncated");
  const std::size_t body_len = buf.size() - 16;
  Reader tail{buf, 8 + body_len};
  const std::uint64_t stored = tail.u64();
  if (fnv1a(buf.data() + 8, body_len) != stored) {
    throw CorruptFileError("checkpoint checksum mismatch");
  }

  Reader r{buf, 8};
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw VersionError("unsupported checkpoint version " + std::to_string(version));
  }
  ModelConfig cfg;
  cfg.arch = r.u8() == 0 ? Arch::Mlp : Arch::Cnn;
  cfg.in_channels = static_cast<int>(r.u32());
  cfg.in_height = static_cast<int>(r.u32());
  cfg.in_width = static_cast<int>(r.u32());
  cfg.num_classes = static_cast<int>(r.u32());
  cfg.use_norm_layers = r.u8() != 0;
  const bool frozen = r.u8() != 0;
  const std::uint32_t n_widths = r.u32();
  std::vector<int> widths(n_widths);
  for (auto& w : widths) w = static_cast<int>(r.u32());
  const std::uint32_t n_kernels = r.u32();
  std::vector<int> kernels(n_kernels);
  for (auto& k : kernels) k = static_cast<int>(r.u32());
  if (cfg.arch == Arch::Mlp) {
    cfg.hidden_widths = widths;
  } else {
    cfg.conv_channels = widths;
    cfg.kernel_sizes = kernels;
  }
  cfg.validate();

  const std::uint64_t n_params = r.u64();
  if (n_params != static_cast<std::uint64_t>(cfg.param_count())) {
    throw CorruptFileError("parameter payload does not match the stored configuration");
  }
  std::vector<float> flat(n_params);
  for (auto& f : flat) f = r.f32();
  const std::uint64_t n_stats = r.u64();
  if (n_stats != static_cast<std::uint64_t>(cfg.stats_count())) {
    throw CorruptFileError("statistics payload does not match the stored configuration");
  }
  std::vector<float> stats_flat(n_stats);
  for (auto& f : stats_flat) f = r.f32();

  // Shape the flat payloads with a template model.
  Model shape = Model::init(cfg, 0);
  std::vector<Tensor> params;
  std::size_t off = 0;
  for (const Tensor& p : shape.params()) {
    params.push_back(Tensor::from_data(
        p.shape(), std::vector<float>(flat.begin() + off, flat.begin() + off + p.size()), true));
    off += static_cast<std::size_t>(p.size());
  }
  std::vector<Tensor> stats;
  off = 0;
  for (const Tensor& s : shape.running_stats()) {
    stats.push_back(Tensor::from_data(
        s.shape(),
        std::vector<float>(stats_flat.begin() + off, stats_flat.begin() + off + s.size())));
    off += static_cast<std::size_t>(s.size());
  }
  return assemble_model(cfg, std::move(params), std::move(stats), frozen);
}

}  // namespace

Model load_checkpoint(const std::string& path) { return load_impl(path); }

Model load_checkpoint(const std::string& path, const ModelConfig& expect) {
  Model m = load_impl(path);
  if (!(m.config() == expect)) {
    throw ConfigMismatchError("checkpoint configuration does not match the requested one");
  }
  return m;
}

}  // namespace sau
