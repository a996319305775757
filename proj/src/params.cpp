#include "mpf/params.hpp"

#include <cstdio>
#include <cstring>

namespace mpf::ad {

Tensor& Params::add(std::string name, Tensor init) {
  if (contains(name)) throw ConfigError("params: duplicate name " + name);
  names_.push_back(std::move(name));
  values_.push_back(std::move(init));
  return values_.back();
}

Tensor& Params::at(std::string_view name) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return values_[i];
  }
  throw ConfigError("params: unknown name " + std::string(name));
}

const Tensor& Params::at(std::string_view name) const {
  return const_cast<Params*>(this)->at(name);
}

bool Params::contains(std::string_view name) const {
  for (const auto& n : names_) {
    if (n == name) return true;
  }
  return false;
}

std::vector<Tensor> Params::track(Tape& t, bool differentiable) const {
  std::vector<Tensor> out;
  out.reserve(values_.size());
  for (const Tensor& v : values_) {
    out.push_back(differentiable ? t.leaf(v) : t.constant(v));
  }
  return out;
}

std::vector<Tensor> Params::gather_grads(const GradMap& grads,
                                         const std::vector<Tensor>& tracked) const {
  std::vector<Tensor> out;
  out.reserve(tracked.size());
  for (const Tensor& t : tracked) {
    auto it = grads.find(t.node);
    if (it == grads.end()) {
      out.push_back(Tensor::zeros(t.shape));
    } else {
      out.push_back(it->second);
    }
  }
  return out;
}

void Params::merge(const Params& other, std::string_view prefix) {
  for (std::size_t i = 0; i < other.size(); ++i) {
    add(std::string(prefix) + "." + other.name(i), other.value(i));
  }
}

Params Params::extract(std::string_view prefix) const {
  Params out;
  std::string p = std::string(prefix) + ".";
  for (std::size_t i = 0; i < size(); ++i) {
    if (names_[i].rfind(p, 0) == 0) {
      out.add(names_[i].substr(p.size()), values_[i]);
    }
  }
  return out;
}

namespace {

constexpr char kMagic[5] = {'M', 'P', 'F', 'W', '1'};

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

template <typename T>
void write_pod(std::FILE* f, T v) {
  if (std::fwrite(&v, sizeof(T), 1, f) != 1) throw IoError("params: short write");
}

template <typename T>
T read_pod(std::FILE* f) {
  T v;
  if (std::fread(&v, sizeof(T), 1, f) != 1) throw IoError("params: short read");
  return v;
}

}  // namespace

void save_params(const std::filesystem::path& path, const Params& params) {
  FilePtr f(std::fopen(path.string().c_str(), "wb"));
  if (!f) throw IoError("params: cannot open " + path.string() + " for writing");
  if (std::fwrite(kMagic, 1, sizeof(kMagic), f.get()) != sizeof(kMagic)) {
    throw IoError("params: short write");
  }
  write_pod<std::uint64_t>(f.get(), params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params.name(i);
    const Tensor& t = params.value(i);
    write_pod<std::uint32_t>(f.get(), static_cast<std::uint32_t>(name.size()));
    if (std::fwrite(name.data(), 1, name.size(), f.get()) != name.size()) {
      throw IoError("params: short write");
    }
    write_pod<std::uint32_t>(f.get(), static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape) write_pod<std::uint64_t>(f.get(), e);
    if (!t.data.empty() &&
        std::fwrite(t.data.data(), sizeof(double), t.data.size(), f.get()) != t.data.size()) {
      throw IoError("params: short write");
    }
  }
}

Params load_params(const std::filesystem::path& path) {
  FilePtr f(std::fopen(path.string().c_str(), "rb"));
  if (!f) throw IoError("params: cannot open " + path.string());
  char magic[sizeof(kMagic)];
  if (std::fread(magic, 1, sizeof(magic), f.get()) != sizeof(magic) ||
      std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw IoError("params: " + path.string() + " is not an MPFW1 container");
  }
  Params out;
  const std::uint64_t count = read_pod<std::uint64_t>(f.get());
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = read_pod<std::uint32_t>(f.get());
    std::string name(name_len, '\0');
    if (name_len > 0 && std::fread(name.data(), 1, name_len, f.get()) != name_len) {
      throw IoError("params: short read");
    }
    const std::uint32_t rank = read_pod<std::uint32_t>(f.get());
    Shape shape(rank);
    for (std::uint32_t r = 0; r < rank; ++r) {
      shape[r] = static_cast<std::size_t>(read_pod<std::uint64_t>(f.get()));
    }
    std::vector<double> data(numel(shape));
    if (!data.empty() &&
        std::fread(data.data(), sizeof(double), data.size(), f.get()) != data.size()) {
      throw IoError("params: short read");
    }
    out.add(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return out;
}

}  // namespace mpf::ad
