#include "sentattn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace sentattn {

namespace {
constexpr char kMagic[8] = {'S', 'A', 'T', 'N', 'C', 'K', 'P', '1'};

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
}  // namespace

Tensor& ParamStore::add(const std::string& name, std::vector<int> shape) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
  index_.emplace(name, tensors_.size());
  names_.push_back(name);
  tensors_.emplace_back(std::move(shape));
  return tensors_.back();
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter: " + name);
  return tensors_[it->second];
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter: " + name);
  return tensors_[it->second];
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

std::uint64_t ParamStore::checksum(const std::string& prefix) const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& name : names_) {
    if (name.rfind(prefix, 0) != 0) continue;
    const Tensor& t = tensors_[index_.at(name)];
    mix(name.data(), name.size());
    for (int d : t.shape()) mix(&d, sizeof d);
    mix(t.data(), t.size() * sizeof(double));
  }
  return h;
}

void save_checkpoint(const ParamStore& params, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os.write(kMagic, sizeof kMagic);
  write_u32(os, static_cast<std::uint32_t>(params.count()));
  params.for_each([&os](const std::string& name, const Tensor& t) {
    write_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(os, static_cast<std::uint32_t>(t.dim()));
    for (int d : t.shape()) write_u32(os, static_cast<std::uint32_t>(d));
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.size() * sizeof(double)));
  });
  if (!os) throw std::runtime_error("write failed: " + path);
}

static void load_into(std::istream& is, const std::string& path, ParamStore& params,
                      bool create) {
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw std::runtime_error("not a checkpoint file (bad format tag): " + path);
  std::uint32_t count = read_u32(is);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t len = read_u32(is);
    std::string name(len, '\0');
    is.read(name.data(), len);
    std::uint32_t nd = read_u32(is);
    std::vector<int> shape;
    for (std::uint32_t d = 0; d < nd; ++d) shape.push_back(static_cast<int>(read_u32(is)));
    Tensor* t;
    if (create) {
      t = &params.add(name, shape);
    } else {
      t = &params.at(name);
      if (t->shape() != shape)
        throw std::runtime_error("checkpoint shape mismatch for " + name);
    }
    is.read(reinterpret_cast<char*>(t->data()),
            static_cast<std::streamsize>(t->size() * sizeof(double)));
    if (!is) throw std::runtime_error("truncated checkpoint: " + path);
  }
}

void load_checkpoint(ParamStore& params, const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  load_into(is, path, params, false);
}

ParamStore load_checkpoint_new(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  ParamStore params;
  load_into(is, path, params, true);
  return params;
}

}  // namespace sentattn
