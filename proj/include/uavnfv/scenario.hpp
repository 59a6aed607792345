#pragma once

#include <string>
#include <vector>

#include "uavnfv/config.hpp"
#include "uavnfv/rng.hpp"

namespace uavnfv {

struct Service {
  int id = 0;
  int source_user = 0;
  int dest_user = 0;
  std::vector<int> vnf_chain;  // function type ids, in traversal order
  double bit_rate = 0.0;       // bit/s
  int duration = 1;            // slots
  double delay_budget = 0.0;   // s
  double reduced_budget = 0.0; // s, bound used when the service is not migrating
  int start_slot = 0;

  int chain_length() const { return static_cast<int>(vnf_chain.size()); }
  int end_slot() const { return start_slot + duration; }  // exclusive
  bool active_at(int t) const { return start_slot <= t && t < end_slot(); }
};

// Type invariants of a service; empty when all hold.
std::vector<std::string> service_issues(const Service& s, int num_users);

// alpha_k^{O_i}(t): one flag per user, set where the user sources an active service.
std::vector<bool> request_indicator(const std::vector<Service>& services, int num_users, int t);

class RequestGenerator {
 public:
  RequestGenerator(const ServiceCatalog& catalog, int num_users, std::uint64_t seed);

  // Requests raised during slot t, activating at t + 1. Only users flagged idle may
  // raise one, and each raises at most one.
  std::vector<Service> generate_requests(int t, const std::vector<bool>& idle);

  // Requests for the first slot of an episode (start_slot = 0).
  std::vector<Service> initial_requests(const std::vector<bool>& idle);

  int issued() const { return next_id_; }

 private:
  Service draw(int source, int start);

  ServiceCatalog catalog_;
  int num_users_;
  std::uint64_t seed_;
  Rng rng_;
  int next_id_ = 0;
};

}  // namespace uavnfv
