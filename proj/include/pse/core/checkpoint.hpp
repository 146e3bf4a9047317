#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pse/core/tensor.hpp"

namespace pse {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Versioned binary container of named tensors plus integer metadata.
// Little-endian fixed layout; save(load(f)) is byte-identical to f.
class Checkpoint {
 public:
  static constexpr char kMagic[8] = {'P', 'S', 'E', 'C', 'K', 'P', 'T', '\n'};
  static constexpr std::uint32_t kVersion = 1;

  std::string kind;
  std::map<std::string, std::int64_t> meta;
  std::map<std::string, std::string> smeta;
  std::vector<std::pair<std::string, Tensor>> tensors;

  void add(const std::string& name, const Tensor& t) {
    tensors.emplace_back(name, t);
  }

  const Tensor& get(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return t;
    throw CheckpointError("checkpoint: missing tensor " + name);
  }

  std::int64_t meta_or(const std::string& key, std::int64_t fallback) const {
    auto it = meta.find(key);
    return it == meta.end() ? fallback : it->second;
  }

  std::int64_t meta_required(const std::string& key) const {
    auto it = meta.find(key);
    if (it == meta.end())
      throw CheckpointError("checkpoint: missing meta key " + key);
    return it->second;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("checkpoint: cannot open " + path);
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, kVersion);
    write_str(out, kind);
    write_u32(out, static_cast<std::uint32_t>(meta.size()));
    for (const auto& [k, v] : meta) {
      write_str(out, k);
      write_u64(out, static_cast<std::uint64_t>(v));
    }
    write_u32(out, static_cast<std::uint32_t>(smeta.size()));
    for (const auto& [k, v] : smeta) {
      write_str(out, k);
      write_str(out, v);
    }
    write_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
      write_str(out, name);
      write_u32(out, static_cast<std::uint32_t>(t.rank()));
      for (std::size_t d : t.shape()) write_u64(out, d);
      for (double x : t.values()) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, sizeof(bits));
        write_u64(out, bits);
      }
    }
    if (!out) throw CheckpointError("checkpoint: write failed for " + path);
  }

  static Checkpoint load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
      throw CheckpointError("checkpoint: bad magic in " + path);
    const std::uint32_t version = read_u32(in);
    if (version != kVersion)
      throw CheckpointError("checkpoint: unsupported version " +
                            std::to_string(version));
    Checkpoint ck;
    ck.kind = read_str(in);
    const std::uint32_t nmeta = read_u32(in);
    for (std::uint32_t i = 0; i < nmeta; ++i) {
      std::string key = read_str(in);
      ck.meta[key] = static_cast<std::int64_t>(read_u64(in));
    }
    const std::uint32_t nsmeta = read_u32(in);
    for (std::uint32_t i = 0; i < nsmeta; ++i) {
      std::string key = read_str(in);
      ck.smeta[key] = read_str(in);
    }
    const std::uint32_t ntensors = read_u32(in);
    for (std::uint32_t i = 0; i < ntensors; ++i) {
      std::string name = read_str(in);
      const std::uint32_t rank = read_u32(in);
      std::vector<std::size_t> shape(rank);
      for (std::uint32_t d = 0; d < rank; ++d)
        shape[d] = static_cast<std::size_t>(read_u64(in));
      Tensor t(shape);
      for (std::size_t k = 0; k < t.size(); ++k) {
        const std::uint64_t bits = read_u64(in);
        double x;
        std::memcpy(&x, &bits, sizeof(x));
        t[k] = x;
      }
      ck.tensors.emplace_back(std::move(name), std::move(t));
    }
    if (!in) throw CheckpointError("checkpoint: truncated file " + path);
    return ck;
  }

 private:
  static void write_u32(std::ostream& out, std::uint32_t x) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((x >> (8 * i)) & 0xff);
    out.write(b, 4);
  }
  static void write_u64(std::ostream& out, std::uint64_t x) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((x >> (8 * i)) & 0xff);
    out.write(b, 8);
  }
  static void write_str(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  static std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return x;
  }
  static std::uint64_t read_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return x;
  }
  static std::string read_str(std::istream& in) {
    const std::uint32_t len = read_u32(in);
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    return s;
  }
};

// Helpers shared by every model type: parameters are stored by name.
inline void checkpoint_put_params(Checkpoint& ck, const ParamRefs& params) {
  for (const Parameter* p : params) ck.add(p->name, p->value);
}

inline void checkpoint_get_params(const Checkpoint& ck,
                                  const ParamRefs& params) {
  for (Parameter* p : params) {
    const Tensor& t = ck.get(p->name);
    if (!t.same_shape(p->value))
      throw CheckpointError("checkpoint: shape mismatch for " + p->name);
    p->value = t;
  }
}

}  // namespace pse
