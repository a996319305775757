#pragma once

#include <filesystem>

#include "mpf/networks.hpp"

namespace mpf::sac {

// Trained parameter bundle: policy, encoder, twin Q nets with their lagged
// targets, and the (log) temperature. Selection later attaches per-context
// soft returns and the performance index.
struct CandidatePolicy {
  nets::PolicyNet policy;
  nets::EncoderNet encoder;
  nets::QNet q1, q2, q1t, q2t;
  ad::Params alpha;  // single scalar "alpha_log"; positivity by construction
  std::uint64_t seed = 0;

  std::vector<double> context_returns;  // R(c) per selection context
  double index = std::numeric_limits<double>::quiet_NaN();  // l_k

  double alpha_value() const { return std::exp(alpha.at("alpha_log").value()); }
  double& alpha_log() { return alpha.at("alpha_log").data[0]; }

  // Serializes to one MPFW1 container with names policy.*, encoder.*, q1.*,
  // q2.*, q1t.*, q2t.*, alpha_log.
  void save(const std::filesystem::path& path) const;
  static CandidatePolicy load(const std::filesystem::path& path);
};

}  // namespace mpf::sac
