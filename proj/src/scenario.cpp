#include "uavnfv/scenario.hpp"

#include <numeric>

namespace uavnfv {

std::vector<std::string> service_issues(const Service& s, int num_users) {
  std::vector<std::string> out;
  if (s.chain_length() < 1) out.push_back("empty vnf chain");
  if (s.source_user == s.dest_user) out.push_back("source equals destination");
  if (s.source_user < 0 || s.source_user >= num_users) out.push_back("source out of range");
  if (s.dest_user < 0 || s.dest_user >= num_users) out.push_back("destination out of range");
  if (!(s.bit_rate > 0.0)) out.push_back("bit rate not positive");
  if (s.duration < 1) out.push_back("duration below one slot");
  if (!(s.reduced_budget > 0.0 && s.reduced_budget <= s.delay_budget))
    out.push_back("reduced budget outside (0, delay_budget]");
  return out;
}

std::vector<bool> request_indicator(const std::vector<Service>& services, int num_users, int t) {
  std::vector<bool> on(static_cast<std::size_t>(num_users), false);
  for (const auto& s : services)
    if (s.active_at(t)) on[static_cast<std::size_t>(s.source_user)] = true;
  return on;
}

RequestGenerator::RequestGenerator(const ServiceCatalog& catalog, int num_users,
                                   std::uint64_t seed)
    : catalog_(catalog), num_users_(num_users), seed_(seed), rng_(seed) {}

Service RequestGenerator::draw(int source, int start) {
  // Contents come from a stream keyed by (slot, user) so that two runs facing the
  // same arrivals see the same services even if their idle sets differed earlier.
  Rng rng(derive_seed(seed_, static_cast<std::uint64_t>(start + 1) *
                                 static_cast<std::uint64_t>(num_users_) +
                             static_cast<std::uint64_t>(source)));
  Service s;
  s.id = next_id_++;
  s.source_user = source;
  int dest = rng.below(num_users_ - 1);
  s.dest_user = dest >= source ? dest + 1 : dest;

  const int len = rng.between(catalog_.chain_length_min, catalog_.chain_length_max);
  // Distinct function types when the catalog has enough of them.
  std::vector<int> types(static_cast<std::size_t>(catalog_.num_vnf_types));
  std::iota(types.begin(), types.end(), 0);
  for (int j = 0; j < len; ++j) {
    if (len <= catalog_.num_vnf_types) {
      const int pick = j + rng.below(catalog_.num_vnf_types - j);
      std::swap(types[static_cast<std::size_t>(j)], types[static_cast<std::size_t>(pick)]);
      s.vnf_chain.push_back(types[static_cast<std::size_t>(j)]);
    } else {
      s.vnf_chain.push_back(rng.below(catalog_.num_vnf_types));
    }
  }
  s.bit_rate = rng.uniform(catalog_.bit_rate_min, catalog_.bit_rate_max);
  if (s.bit_rate <= 0.0) s.bit_rate = catalog_.bit_rate_min;
  s.duration = rng.between(catalog_.duration_min, catalog_.duration_max);
  s.delay_budget = catalog_.delay_budget;
  s.reduced_budget = catalog_.delay_budget * catalog_.reduced_budget_factor;
  s.start_slot = start;
  return s;
}

std::vector<Service> RequestGenerator::generate_requests(int t, const std::vector<bool>& idle) {
  std::vector<Service> out;
  for (int k = 0; k < num_users_; ++k) {
    // One draw per user regardless of state keeps the stream aligned across policies.
    const bool arrives = rng_.bernoulli(catalog_.arrival_prob);
    if (!arrives || !idle[static_cast<std::size_t>(k)]) continue;
    out.push_back(draw(k, t + 1));
  }
  return out;
}

std::vector<Service> RequestGenerator::initial_requests(const std::vector<bool>& idle) {
  return generate_requests(-1, idle);
}

}  // namespace uavnfv
