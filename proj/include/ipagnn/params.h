// Copyright 2026 The ipagnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <deque>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "ipagnn/autodiff.h"
#include "ipagnn/errors.h"

namespace ipagnn {

// Ordered collection of named parameters. Iteration order is insertion
// order, which fixes gradient-reduction and serialization order.
template <typename T>
class ParameterStore {
 public:
  ad::Parameter<T>& add(const std::string& name, ad::Shape shape,
                        std::vector<T> values) {
    if (index_.count(name)) throw Error("duplicate parameter '" + name + "'");
    if (static_cast<std::int64_t>(values.size()) != shape.size()) {
      throw ShapeError("parameter '" + name + "' of shape " + shape.str() +
                       " given " + std::to_string(values.size()) + " values");
    }
    index_[name] = params_.size();
    ad::Parameter<T> p;
    p.name = name;
    p.shape = shape;
    p.grad.assign(values.size(), T(0));
    p.value = std::move(values);
    params_.push_back(std::move(p));
    return params_.back();
  }

  bool contains(const std::string& name) const { return index_.count(name); }

  ad::Parameter<T>& get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("unknown parameter '" + name + "'");
    return params_[it->second];
  }
  const ad::Parameter<T>& get(const std::string& name) const {
    return const_cast<ParameterStore*>(this)->get(name);
  }

  std::deque<ad::Parameter<T>>& all() { return params_; }
  const std::deque<ad::Parameter<T>>& all() const { return params_; }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  std::int64_t count() const {
    std::int64_t n = 0;
    for (const auto& p : params_) n += p.shape.size();
    return n;
  }

  bool operator==(const ParameterStore& other) const {
    if (params_.size() != other.params_.size()) return false;
    for (size_t i = 0; i < params_.size(); ++i) {
      const auto& a = params_[i];
      const auto& b = other.params_[i];
      if (a.name != b.name || !(a.shape == b.shape) || a.value != b.value) {
        return false;
      }
    }
    return true;
  }

 private:
  std::deque<ad::Parameter<T>> params_;  // stable references
  std::map<std::string, size_t> index_;
};

// ---------------------------------------------------------------------------
// Checkpoint file: named flat arrays plus string metadata, closed by an
// FNV-1a 64 checksum over every preceding byte.
//
//   "IPAGCKPT" u32 version u32 scalar_bytes
//   u32 n_meta  { u32 len key, u32 len value }*
//   u32 n_param { u32 len name, u32 rank, u32 dims[rank], raw values }*
//   u64 checksum
//
// All integers and values are little-endian.

struct Checkpoint {
  std::map<std::string, std::string> metadata;
  struct Entry {
    std::string name;
    ad::Shape shape;
    std::vector<double> values;
  };
  std::vector<Entry> entries;
  int scalar_bytes = 8;

  const Entry* find(const std::string& name) const {
    for (const auto& e : entries) {
      if (e.name == name) return &e;
    }
    return nullptr;
  }
};

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

inline constexpr char kCheckpointMagic[8] = {'I', 'P', 'A', 'G',
                                             'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class ByteWriter {
 public:
  template <typename U>
  void put(U value) {
    char buf[sizeof(U)];
    std::memcpy(buf, &value, sizeof(U));
    bytes_.append(buf, sizeof(U));
  }
  void put_string(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes_ += s;
  }
  void put_raw(const void* data, size_t n) {
    bytes_.append(static_cast<const char*>(data), n);
  }
  std::string& bytes() { return bytes_; }

 private:
  std::string bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}
  template <typename U>
  U get() {
    need(sizeof(U));
    U value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return value;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void get_raw(void* out, size_t n) {
    need(n);
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }
  size_t pos() const { return pos_; }

 private:
  void need(size_t n) const {
    if (pos_ + n > bytes_.size()) throw Error("checkpoint truncated");
  }
  const std::string& bytes_;
  size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_checkpoint(const Checkpoint& ckpt) {
  detail::ByteWriter w;
  w.put_raw(detail::kCheckpointMagic, 8);
  w.put<std::uint32_t>(detail::kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.scalar_bytes));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.metadata.size()));
  for (const auto& [k, v] : ckpt.metadata) {
    w.put_string(k);
    w.put_string(v);
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.entries.size()));
  for (const auto& e : ckpt.entries) {
    w.put_string(e.name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(e.shape.rank()));
    for (int i = 0; i < e.shape.rank(); ++i) {
      w.put<std::uint32_t>(static_cast<std::uint32_t>(e.shape.dim(i)));
    }
    for (double v : e.values) {
      if (ckpt.scalar_bytes == 4) {
        w.put<float>(static_cast<float>(v));
      } else {
        w.put<double>(v);
      }
    }
  }
  const std::uint64_t sum = detail::fnv1a(w.bytes());
  w.put<std::uint64_t>(sum);
  return std::move(w.bytes());
}

inline Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 8 + sizeof(std::uint64_t) ||
      std::memcmp(bytes.data(), detail::kCheckpointMagic, 8) != 0) {
    throw Error("not a checkpoint file");
  }
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
  const std::string body = bytes.substr(0, bytes.size() - 8);
  if (detail::fnv1a(body) != stored) throw Error("checkpoint checksum mismatch");

  detail::ByteReader r(body);
  char magic[8];
  r.get_raw(magic, 8);
  if (r.get<std::uint32_t>() != detail::kCheckpointVersion) {
    throw Error("unsupported checkpoint version");
  }
  Checkpoint ckpt;
  ckpt.scalar_bytes = static_cast<int>(r.get<std::uint32_t>());
  if (ckpt.scalar_bytes != 4 && ckpt.scalar_bytes != 8) {
    throw Error("checkpoint scalar width must be 4 or 8");
  }
  const auto n_meta = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = r.get_string();
    ckpt.metadata[k] = r.get_string();
  }
  const auto n_param = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_param; ++i) {
    Checkpoint::Entry e;
    e.name = r.get_string();
    const auto rank = r.get<std::uint32_t>();
    if (rank > 3) throw Error("checkpoint entry '" + e.name + "' rank > 3");
    std::uint32_t dims[3] = {0, 0, 0};
    for (std::uint32_t d = 0; d < rank; ++d) dims[d] = r.get<std::uint32_t>();
    switch (rank) {
      case 0: e.shape = ad::Shape{}; break;
      case 1: e.shape = ad::Shape{static_cast<int>(dims[0])}; break;
      case 2:
        e.shape = ad::Shape{static_cast<int>(dims[0]),
                            static_cast<int>(dims[1])};
        break;
      default:
        e.shape = ad::Shape{static_cast<int>(dims[0]),
                            static_cast<int>(dims[1]),
                            static_cast<int>(dims[2])};
    }
    e.values.resize(e.shape.size());
    for (auto& v : e.values) {
      v = ckpt.scalar_bytes == 4 ? static_cast<double>(r.get<float>())
                                 : r.get<double>();
    }
    ckpt.entries.push_back(std::move(e));
  }
  return ckpt;
}

inline void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  const std::string bytes = encode_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing '" + path + "'");
}

inline Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

template <typename T>
void append_parameters(Checkpoint& ckpt, const ParameterStore<T>& store,
                       const std::string& prefix = "") {
  ckpt.scalar_bytes = sizeof(T);
  for (const auto& p : store.all()) {
    ckpt.entries.push_back(
        {prefix + p.name, p.shape, {p.value.begin(), p.value.end()}});
  }
}

// Copies checkpoint values into an already-shaped store; every parameter
// must be present with a matching shape.
template <typename T>
void load_parameters(const Checkpoint& ckpt, ParameterStore<T>& store,
                     const std::string& prefix = "") {
  for (auto& p : store.all()) {
    const Checkpoint::Entry* e = ckpt.find(prefix + p.name);
    if (!e) throw Error("checkpoint lacks parameter '" + prefix + p.name + "'");
    if (!(e->shape == p.shape)) {
      throw ShapeError("checkpoint parameter '" + p.name + "' has shape " +
                       e->shape.str() + ", expected " + p.shape.str());
    }
    for (size_t i = 0; i < p.value.size(); ++i) {
      p.value[i] = static_cast<T>(e->values[i]);
    }
  }
}

}  // namespace ipagnn
