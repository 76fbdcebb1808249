#include <sstream>

#include "ird/error.hpp"
#include "ird/inference.hpp"

namespace ird {

std::string posterior_to_jsonl(const PosteriorSamples& samples) {
  const std::size_t k = samples.draws.empty() ? 0 : samples.draws.front().size();
  Json header{{"type", "header"},
              {"k", k},
              {"draws", samples.draws.size()},
              {"seed", samples.seed},
              {"acceptance_rate", samples.acceptance_rate},
              {"proposals", samples.proposals},
              {"accepted", samples.accepted},
              {"longest_rejection_run", samples.longest_rejection_run},
              {"config", inference_config_to_json(samples.config)},
              {"warnings", samples.warnings}};
  std::string out = header.dump() + "\n";
  for (const auto& d : samples.draws) out += Json(d.weights).dump() + "\n";
  return out;
}

PosteriorSamples posterior_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Validation, "posterior file is empty");
  PosteriorSamples s;
  std::size_t k = 0, expected = 0;
  try {
    const Json h = Json::parse(line);
    if (!h.is_object() || h.value("type", "") != "header") {
      fail(ErrorKind::Validation, "posterior file: first line must be the header object");
    }
    k = h.at("k").get<std::size_t>();
    expected = h.at("draws").get<std::size_t>();
    s.seed = h.at("seed").get<std::uint64_t>();
    s.acceptance_rate = h.at("acceptance_rate").get<double>();
    s.proposals = h.at("proposals").get<std::size_t>();
    s.accepted = h.at("accepted").get<std::size_t>();
    s.longest_rejection_run = h.value("longest_rejection_run", std::size_t{0});
    s.config = inference_config_from_json(h.at("config"));
    s.warnings = h.value("warnings", std::vector<std::string>{});
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      RewardParams d = reward_from_json(Json::parse(line), "posterior draw");
      if (d.size() != k) {
        fail(ErrorKind::Validation, "posterior file line " + std::to_string(lineno) +
                                        ": draw has wrong dimension");
      }
      s.draws.push_back(std::move(d));
    }
  } catch (const Json::exception& e) {
    fail(ErrorKind::Validation, std::string("posterior file: ") + e.what());
  }
  if (s.draws.size() != expected) {
    fail(ErrorKind::Validation, "posterior file: header announces " + std::to_string(expected) +
                                    " draws, found " + std::to_string(s.draws.size()));
  }
  return s;
}

}  // namespace ird
