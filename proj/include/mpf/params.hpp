#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mpf/tape.hpp"
#include "mpf/tensor.hpp"

namespace mpf::ad {

// Ordered, named tensor bundle. Order is insertion order and is part of the
// contract: optimizer state, tape leaves and serialization all align by index.
class Params {
 public:
  Tensor& add(std::string name, Tensor init);
  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t size() const { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Tensor& value(std::size_t i) { return values_[i]; }
  const Tensor& value(std::size_t i) const { return values_[i]; }

  // Registers every tensor on the tape; index i of the result corresponds to
  // value(i). `differentiable` picks leaf vs constant registration.
  std::vector<Tensor> track(Tape& t, bool differentiable = true) const;

  // Gathers gradients for tracked tensors returned by track(), in order.
  std::vector<Tensor> gather_grads(const GradMap& grads,
                                   const std::vector<Tensor>& tracked) const;

  // Merges `other` under `prefix` + ".".
  void merge(const Params& other, std::string_view prefix);
  // Extracts the sub-bundle under `prefix` + "." with the prefix stripped.
  Params extract(std::string_view prefix) const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
};

// Flat binary container, magic "MPFW1", little-endian:
//   u64 tensor count, then per tensor
//   u32 name length, UTF-8 name bytes, u32 rank, u64 extents[rank],
//   f64 payload[numel].
// Round-trips bit-exactly.
void save_params(const std::filesystem::path& path, const Params& params);
Params load_params(const std::filesystem::path& path);

}  // namespace mpf::ad
