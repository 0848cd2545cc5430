#include "sinrlab/sim.hpp"

#include "json.hpp"

namespace sinrlab {

std::string to_json(const SimStats& s) {
  nlohmann::json j;
  j["attempts"] = s.attempts;
  j["successes"] = s.successes;
  j["active_slots"] = s.active_slots;
  j["final_queue_length"] = s.final_queue_length;
  j["arrival_count"] = s.arrival_count;
  j["initial_queue_length"] = s.initial_queue_length;
  j["departures"] = s.departures;
  j["slots"] = s.slots;
  j["warmup"] = s.warmup;
  j["typical_index"] = s.typical_index;
  if (s.coactive.size() > 0) {
    // Row of the typical link: activity counts conditioned on it being active.
    std::vector<int> row(s.coactive.cols());
    for (Eigen::Index k = 0; k < s.coactive.cols(); ++k) row[k] = s.coactive(s.typical_index, k);
    j["typical_coactive_slots"] = row;
  }
  return j.dump();
}

SimStats sim_stats_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  SimStats s;
  j.at("attempts").get_to(s.attempts);
  j.at("successes").get_to(s.successes);
  j.at("active_slots").get_to(s.active_slots);
  j.at("final_queue_length").get_to(s.final_queue_length);
  j.at("arrival_count").get_to(s.arrival_count);
  j.at("initial_queue_length").get_to(s.initial_queue_length);
  j.at("departures").get_to(s.departures);
  j.at("slots").get_to(s.slots);
  j.at("warmup").get_to(s.warmup);
  s.typical_index = j.at("typical_index").get<Eigen::Index>();
  return s;
}

}  // namespace sinrlab
