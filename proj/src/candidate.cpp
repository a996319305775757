#include "mpf/candidate.hpp"

namespace mpf::sac {

namespace {

ad::Params without(const ad::Params& p, std::string_view skip) {
  ad::Params out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.name(i) != skip) out.add(p.name(i), p.value(i));
  }
  return out;
}

}  // namespace

void CandidatePolicy::save(const std::filesystem::path& path) const {
  ad::Params all;
  all.merge(policy.params(), "policy");
  all.merge(encoder.params(), "encoder");
  all.add("encoder.delta", ad::Tensor::scalar(encoder.delta()));
  all.merge(q1.params(), "q1");
  all.merge(q2.params(), "q2");
  all.merge(q1t.params(), "q1t");
  all.merge(q2t.params(), "q2t");
  all.add("alpha_log", alpha.at("alpha_log"));
  ad::save_params(path, all);
}

CandidatePolicy CandidatePolicy::load(const std::filesystem::path& path) {
  ad::Params all = ad::load_params(path);
  CandidatePolicy cand;
  ad::Params enc_sub = all.extract("encoder");
  const double delta = enc_sub.at("delta").value();
  cand.encoder = nets::EncoderNet::from_params(without(enc_sub, "delta"), delta);
  const std::size_t latent_dim = cand.encoder.latent_dim();
  cand.policy = nets::PolicyNet::from_params(all.extract("policy"), latent_dim);
  const std::size_t obs_dim = cand.policy.obs_dim();
  const std::size_t action_dim = cand.policy.action_dim();
  cand.q1 = nets::QNet::from_params(all.extract("q1"), obs_dim, action_dim);
  cand.q2 = nets::QNet::from_params(all.extract("q2"), obs_dim, action_dim);
  cand.q1t = nets::QNet::from_params(all.extract("q1t"), obs_dim, action_dim);
  cand.q2t = nets::QNet::from_params(all.extract("q2t"), obs_dim, action_dim);
  cand.alpha.add("alpha_log", all.at("alpha_log"));
  return cand;
}

}  // namespace mpf::sac
