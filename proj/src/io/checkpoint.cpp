// SPDX-License-Identifier: Apache-2.0
#include "tanet/io/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "tanet/hash.hpp"

namespace tanet::io {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  std::vector<unsigned char>& bytes() { return bytes_; }

 private:
  std::vector<unsigned char> bytes_;
};

class Reader {
 public:
  Reader(const std::vector<unsigned char>& bytes, std::size_t end) : bytes_(bytes), end_(end) {}
  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() {
    const unsigned char* p = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    const unsigned char* p = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    const unsigned char* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  std::size_t position() const { return pos_; }

 private:
  const unsigned char* take(std::size_t n) {
    if (n > end_ - pos_) throw CheckpointError("checkpoint truncated at byte " + std::to_string(pos_));
    const unsigned char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  const std::vector<unsigned char>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

bool is_vector_shape(const Shape& s) { return s[0] == 1 && s[1] == 1 && s[2] == 1; }

}  // namespace

template <std::floating_point T>
std::vector<unsigned char> serialize_checkpoint(const nn::TANetModel<T>& model) {
  Writer w;
  w.raw({kCheckpointMagic, 4});
  w.u32(kCheckpointVersion);
  const nn::NetworkConfig& c = model.config();
  w.u32(static_cast<std::uint32_t>(c.base_channels));
  w.u32(static_cast<std::uint32_t>(c.num_tabs));
  w.u32(static_cast<std::uint32_t>(c.downscale_stages));
  w.u32(static_cast<std::uint32_t>(c.in_channels));
  w.u32(static_cast<std::uint32_t>(c.out_channels));
  w.u8(c.use_global_residual ? 1 : 0);
  w.u64(c.seed);
  w.u8(static_cast<std::uint8_t>(c.variant));
  const auto& params = model.parameters().parameters();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    w.u32(static_cast<std::uint32_t>(p.name.size()));
    w.raw(p.name);
    const Shape& s = p.var.shape();
    if (is_vector_shape(s)) {
      w.u32(1);
      w.u32(static_cast<std::uint32_t>(s[3]));
    } else {
      w.u32(4);
      for (std::size_t d : s.dims()) w.u32(static_cast<std::uint32_t>(d));
    }
    for (T v : p.var.value().data()) w.f32(static_cast<float>(v));
  }
  w.u64(fnv1a(w.bytes()));
  return std::move(w.bytes());
}

template <std::floating_point T>
nn::TANetModel<T> deserialize_checkpoint(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 4 + 8 || !std::equal(kCheckpointMagic, kCheckpointMagic + 4, bytes.begin())) {
    throw CheckpointError("not a checkpoint: bad magic");
  }
  const std::size_t body = bytes.size() - 8;
  std::uint64_t stored = 0;
  for (int i = 0; i < 8; ++i) stored |= static_cast<std::uint64_t>(bytes[body + i]) << (8 * i);
  if (stored != fnv1a({bytes.data(), body})) throw CheckpointError("checkpoint checksum mismatch");

  Reader r(bytes, body);
  r.str(4);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  nn::NetworkConfig c;
  c.base_channels = r.u32();
  c.num_tabs = r.u32();
  c.downscale_stages = r.u32();
  c.in_channels = r.u32();
  c.out_channels = r.u32();
  c.use_global_residual = r.u8() != 0;
  c.seed = r.u64();
  const std::uint8_t variant = r.u8();
  if (variant < 1 || variant > 5) throw CheckpointError("checkpoint has invalid variant");
  c.variant = static_cast<nn::Variant>(variant);
  try {
    c.validate();
  } catch (const ParameterError& e) {
    throw CheckpointError(std::string("checkpoint config invalid: ") + e.what());
  }

  nn::TANetModel<T> model(c);
  const auto& params = model.parameters().parameters();
  const std::uint32_t count = r.u32();
  if (count != params.size()) {
    throw CheckpointError("checkpoint holds " + std::to_string(count) + " tensors, model has " +
                          std::to_string(params.size()));
  }
  for (const auto& p : params) {
    const std::string name = r.str(r.u32());
    if (name != p.name) throw CheckpointError("expected tensor '" + p.name + "', found '" + name + "'");
    const std::uint32_t rank = r.u32();
    Shape shape;
    if (rank == 1) {
      shape = Shape::vector(r.u32());
    } else if (rank == 4) {
      std::array<std::size_t, 4> d{};
      for (auto& v : d) v = r.u32();
      shape = Shape(d[0], d[1], d[2], d[3]);
    } else {
      throw CheckpointError("tensor '" + name + "' has unsupported rank " + std::to_string(rank));
    }
    if (shape != p.var.shape()) {
      throw CheckpointError("tensor '" + name + "' has shape " + shape.str() + ", model expects " +
                            p.var.shape().str());
    }
    Var<T> var = p.var;
    for (auto& v : var.mutable_value().data()) v = static_cast<T>(r.f32());
  }
  if (r.position() != body) throw CheckpointError("trailing bytes after the last tensor record");
  return model;
}

template <std::floating_point T>
void save_checkpoint(const std::filesystem::path& path, const nn::TANetModel<T>& model) {
  const auto bytes = serialize_checkpoint(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

template <std::floating_point T>
nn::TANetModel<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize_checkpoint<T>(bytes);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

template std::vector<unsigned char> serialize_checkpoint(const nn::TANetModel<float>&);
template std::vector<unsigned char> serialize_checkpoint(const nn::TANetModel<double>&);
template nn::TANetModel<float> deserialize_checkpoint(const std::vector<unsigned char>&);
template nn::TANetModel<double> deserialize_checkpoint(const std::vector<unsigned char>&);
template void save_checkpoint(const std::filesystem::path&, const nn::TANetModel<float>&);
template void save_checkpoint(const std::filesystem::path&, const nn::TANetModel<double>&);
template nn::TANetModel<float> load_checkpoint(const std::filesystem::path&);
template nn::TANetModel<double> load_checkpoint(const std::filesystem::path&);

}  // namespace tanet::io
