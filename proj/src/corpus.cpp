#include "smbr/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "smbr/error.hpp"
#include "smbr/random.hpp"

namespace smbr {

using nlohmann::json;

namespace {

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

Candidate parse_candidate(const json& j) {
  if (!j.is_object()) throw DataError("candidate is not an object");
  Candidate c;
  if (!j.contains("text") || !j["text"].is_string()) throw DataError("candidate without string field 'text'");
  c.text = j["text"].get<std::string>();
  if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw DataError("candidate label is not a string");
    c.label = it->get<std::string>();
  }
  if (auto it = j.find("weight"); it != j.end() && !it->is_null()) {
    if (!it->is_number()) throw DataError("candidate weight is not a number");
    c.weight = it->get<double>();
  }
  return c;
}

OutcomeSpace parse_space(const json& j) {
  if (!j.is_object()) throw DataError("record is not an object");
  OutcomeSpace s;
  if (!j.contains("id") || !j["id"].is_string()) throw DataError("missing string field 'id'");
  s.id = j["id"].get<std::string>();
  if (auto it = j.find("context"); it != j.end()) {
    if (!it->is_string()) throw DataError("field 'context' is not a string");
    s.context = it->get<std::string>();
  } else {
    throw DataError("missing string field 'context'");
  }
  if (!j.contains("candidates") || !j["candidates"].is_array()) throw DataError("missing array field 'candidates'");
  for (const auto& c : j["candidates"]) s.candidates.push_back(parse_candidate(c));
  return s;
}

json to_json(const OutcomeSpace& s) {
  json cands = json::array();
  for (const auto& c : s.candidates) {
    json jc = {{"text", c.text}};
    if (c.label) jc["label"] = *c.label;
    if (c.weight != 1.0) jc["weight"] = c.weight;
    cands.push_back(std::move(jc));
  }
  return json{{"id", s.id}, {"context", s.context}, {"candidates", std::move(cands)}};
}

}  // namespace

bool OutcomeSpace::labelled() const {
  return !candidates.empty() && candidates.front().label.has_value();
}

std::vector<double> OutcomeSpace::weights() const {
  std::vector<double> w;
  w.reserve(candidates.size());
  for (const auto& c : candidates) w.push_back(c.weight);
  return w;
}

std::vector<std::string> OutcomeSpace::labels() const {
  std::vector<std::string> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) {
    if (!c.label) throw DataError("space " + id + ": candidates are not labelled");
    out.push_back(*c.label);
  }
  return out;
}

bool Corpus::labelled() const {
  return std::all_of(spaces.begin(), spaces.end(), [](const OutcomeSpace& s) { return s.labelled(); });
}

void validate_space(const OutcomeSpace& space) {
  const std::string where = "space " + space.id + ": ";
  if (space.candidates.size() < 2) throw DataError(where + "fewer than 2 candidates");
  std::size_t n_labelled = 0;
  bool any_positive = false;
  for (std::size_t i = 0; i < space.candidates.size(); ++i) {
    const auto& c = space.candidates[i];
    if (blank(c.text)) throw DataError(where + "candidate " + std::to_string(i) + " has empty text");
    if (!std::isfinite(c.weight) || c.weight < 0.0)
      throw DataError(where + "candidate " + std::to_string(i) + " has invalid weight");
    any_positive = any_positive || c.weight > 0.0;
    if (c.label) ++n_labelled;
  }
  if (!any_positive) throw DataError(where + "all candidate weights are zero");
  if (n_labelled != 0 && n_labelled != space.candidates.size())
    throw DataError(where + "mixed labelled and unlabelled candidates");
}

void validate_corpus(const Corpus& corpus) {
  std::set<std::string> ids;
  for (const auto& s : corpus.spaces) {
    validate_space(s);
    if (!ids.insert(s.id).second) throw DataError("duplicate id " + s.id);
  }
}

Corpus parse_corpus(const std::string& content, const std::string& provenance) {
  Corpus corpus;
  corpus.provenance = provenance;
  std::set<std::string> ids;
  std::istringstream in(content);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    OutcomeSpace space;
    try {
      space = parse_space(json::parse(line));
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(lineno) + ": malformed record: " + e.what());
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(lineno) + ": " + e.what());
    }
    validate_space(space);
    if (!ids.insert(space.id).second)
      throw DataError("line " + std::to_string(lineno) + ": duplicate id " + space.id);
    corpus.spaces.push_back(std::move(space));
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str(), path.string());
}

std::string dump_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& s : corpus.spaces) {
    out += to_json(s).dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  validate_corpus(corpus);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write corpus " + path.string());
  out << dump_corpus(corpus);
  if (!out) throw DataError("write failed for " + path.string());
}

Split split_corpus(const Corpus& corpus, double train_fraction, double validation_fraction,
                   double test_fraction, std::uint64_t seed) {
  for (double f : {train_fraction, validation_fraction, test_fraction}) {
    if (!(f > 0.0 && f < 1.0)) throw ConfigError("split fractions must lie in (0, 1)");
  }
  if (std::abs(train_fraction + validation_fraction + test_fraction - 1.0) > 1e-9)
    throw ConfigError("split fractions must sum to 1");
  if (corpus.spaces.empty()) throw ConfigError("cannot split an empty corpus");

  const std::size_t n = corpus.spaces.size();
  // The small epsilon keeps products like 0.29 * 100 from flooring to 28.
  auto part = [n](double f) { return static_cast<std::size_t>(std::floor(f * static_cast<double>(n) + 1e-9)); };
  const std::size_t n_val = part(validation_fraction);
  const std::size_t n_test = part(test_fraction);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());

  auto take = [&](std::size_t begin, std::size_t end, const std::string& tag) {
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                 order.begin() + static_cast<std::ptrdiff_t>(end));
    std::sort(idx.begin(), idx.end());
    Corpus c;
    c.provenance = corpus.provenance + " [" + tag + "]";
    for (auto i : idx) c.spaces.push_back(corpus.spaces[i]);
    return c;
  };
  Split out;
  out.validation = take(0, n_val, "validation");
  out.test = take(n_val, n_val + n_test, "test");
  out.train = take(n_val + n_test, n, "train");
  return out;
}

void SynthConfig::validate() const {
  if (n_spaces == 0) throw ConfigError("n_spaces must be positive");
  if (min_clusters < 1 || max_clusters > 8 || min_clusters > max_clusters)
    throw ConfigError("clusters_per_space range must lie within [1, 8]");
  if (candidates_per_cluster == 0) throw ConfigError("candidates_per_cluster must be positive");
  if (vocab_per_cluster == 0) throw ConfigError("vocab_per_cluster must be positive");
  if (tokens_per_candidate == 0) throw ConfigError("tokens_per_candidate must be positive");
  if (!(noise_rate >= 0.0 && noise_rate < 0.5)) throw ConfigError("noise_rate must lie in [0, 0.5)");
  if (!(separation > 0.0)) throw ConfigError("separation must be positive");
  if (include_compromise && min_clusters < 2) throw ConfigError("compromise candidates need at least 2 clusters");
}

Corpus generate_synthetic(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const double p_shared = config.shared_vocab > 0 ? 1.0 / (1.0 + config.separation) : 0.0;
  const std::size_t len = config.tokens_per_candidate;

  Corpus corpus;
  corpus.provenance = "synthetic seed=" + std::to_string(config.seed);
  std::size_t junk = 0;

  for (std::size_t s = 0; s < config.n_spaces; ++s) {
    OutcomeSpace space;
    space.id = "syn-" + std::to_string(s);
    const std::size_t k =
        config.min_clusters + static_cast<std::size_t>(rng.index(config.max_clusters - config.min_clusters + 1));
    space.context = "synthetic context " + std::to_string(s) + " with " + std::to_string(k) + " structures";

    auto cluster_token = [&](std::size_t c) {
      return "c" + std::to_string(c) + "w" + std::to_string(rng.index(config.vocab_per_cluster));
    };
    auto finish = [&](std::vector<std::string> tokens) {
      std::string text;
      for (auto& t : tokens) {
        if (p_shared > 0.0 && rng.uniform() < p_shared) t = "sh" + std::to_string(rng.index(config.shared_vocab));
        if (rng.uniform() < config.noise_rate) t = "nz" + std::to_string(junk++);
        if (!text.empty()) text += ' ';
        text += t;
      }
      return text;
    };

    std::vector<std::vector<std::string>> prototypes(k);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t t = 0; t < len; ++t) prototypes[c].push_back(cluster_token(c));
    }
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t m = 0; m < config.candidates_per_cluster; ++m) {
        auto tokens = prototypes[c];
        for (auto& t : tokens) {
          if (rng.uniform() < 0.5) t = cluster_token(c);
        }
        space.candidates.push_back({finish(std::move(tokens)), "s" + std::to_string(c), 1.0});
      }
    }
    if (config.include_compromise) {
      // All clusters have equal size, so the two largest are the first two.
      std::vector<std::string> tokens;
      for (std::size_t t = 0; t < len; ++t) {
        tokens.push_back(prototypes[0][t]);
        tokens.push_back(prototypes[1][t]);
      }
      space.candidates.push_back({finish(std::move(tokens)), kCompromiseLabel, 1.0});
    }
    corpus.spaces.push_back(std::move(space));
  }
  return corpus;
}

}  // namespace smbr
