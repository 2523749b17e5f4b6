#include "cli.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "smbr/corpus.hpp"
#include "smbr/decode.hpp"
#include "smbr/engine.hpp"
#include "smbr/error.hpp"
#include "smbr/exec.hpp"
#include "smbr/metrics.hpp"
#include "smbr/tuning.hpp"
#include "smbr/utility.hpp"

namespace smbr::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) parts.push_back(cur);
  return parts;
}

double parse_real(const std::string& s, const std::string& flag) {
  double v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ConfigError(flag + ": not a number: '" + s + "'");
  return v;
}

std::vector<double> parse_reals(const std::string& s, const std::string& flag) {
  std::vector<double> out;
  for (const auto& part : split_list(s)) out.push_back(parse_real(part, flag));
  return out;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string strip_slash(std::string p) {
  while (p.size() > 1 && (p.back() == '/' || p.back() == '\\')) p.pop_back();
  return p;
}

class Manifest {
 public:
  Manifest(const std::vector<std::string>& args, const std::string& subcommand) {
    std::string cmd = "smbr";
    for (const auto& a : args) cmd += " " + a;
    doc_["command"] = cmd;
    doc_["subcommand"] = subcommand;
    doc_["version"] = kVersion;
    doc_["started_at"] = utc_now();
    doc_["config"] = json::object();
    doc_["seed"] = nullptr;
    doc_["inputs"] = json::array();
    doc_["outputs"] = json::array();
  }

  json& config() { return doc_["config"]; }
  void seed(std::uint64_t s) { doc_["seed"] = s; }
  void input(const std::string& p) { doc_["inputs"].push_back({{"path", p}, {"sha256", sha256_file(p)}}); }
  void output(const std::string& p) { doc_["outputs"].push_back({{"path", p}, {"sha256", sha256_file(p)}}); }

  void write(const std::string& out) {
    doc_["finished_at"] = utc_now();
    const std::string path = strip_slash(out) + ".manifest.json";
    std::ofstream f(path);
    f << doc_.dump(2) << '\n';
    if (!f) throw DataError("cannot write " + path);
  }

 private:
  json doc_;
};

std::ofstream open_out(const std::string& path) {
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  return f;
}

void check_file_id(const std::string& id) {
  if (id.empty() || id == "." || id == ".." || id.find_first_of("/\\") != std::string::npos)
    throw DataError("space id '" + id + "' cannot name a file");
}

// --- shared input handling ---

struct InputOpts {
  std::string corpus;
  std::string matrix_dir;
  std::string embed_dir;
  std::string utility = "token-f1";
  int ngram_order = 6;
  double beta = 1.0;
};

void add_input_options(CLI::App* sub, InputOpts& o) {
  sub->add_option("--corpus", o.corpus, "candidate corpus (JSONL)")->required();
  sub->add_option("--matrix", o.matrix_dir, "directory of <id>.umat.json/.bin matrices");
  sub->add_option("--embeddings", o.embed_dir, "directory of <id>.emb.json/.bin embeddings");
  sub->add_option("--utility", o.utility, "utility when no --matrix is given: token-f1 or char-ngram-f")
      ->capture_default_str();
  sub->add_option("--ngram-order", o.ngram_order, "char-ngram-f maximum order")->capture_default_str();
  sub->add_option("--beta", o.beta, "char-ngram-f recall weight")->capture_default_str();
}

UtilityBackend backend_of(const InputOpts& o) {
  auto b = UtilityBackend::parse(o.utility);
  b.ngram_order = o.ngram_order;
  b.beta = o.beta;
  if (b.ngram_order < 1) throw ConfigError("--ngram-order must be >= 1");
  if (!(b.beta > 0)) throw ConfigError("--beta must be > 0");
  return b;
}

std::vector<UtilityMatrix> load_matrices(const Corpus& corpus, const InputOpts& o, Manifest& man) {
  std::vector<UtilityMatrix> out;
  out.reserve(corpus.size());
  if (o.matrix_dir.empty()) {
    const auto backend = backend_of(o);
    for (const auto& s : corpus.spaces) out.push_back(build_utility_matrix(s, backend));
    return out;
  }
  for (const auto& s : corpus.spaces) {
    check_file_id(s.id);
    const auto base = (fs::path(o.matrix_dir) / s.id).string();
    auto m = load_matrix(base + ".umat.json");
    if (m.n() != s.size())
      throw DataError("matrix for space " + s.id + " has n=" + std::to_string(m.n()) + " but the space has " +
                      std::to_string(s.size()) + " candidates");
    man.input(base + ".umat.json");
    man.input(base + ".umat.bin");
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<EmbeddingSet> load_embedding_dir(const Corpus& corpus, const std::string& dir, Manifest& man) {
  std::vector<EmbeddingSet> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus.spaces) {
    check_file_id(s.id);
    const auto base = (fs::path(dir) / s.id).string();
    auto e = load_embeddings(base + ".emb.json");
    if (e.n() != s.size())
      throw DataError("embeddings for space " + s.id + " have n=" + std::to_string(e.n()) + " but the space has " +
                      std::to_string(s.size()) + " candidates");
    man.input(base + ".emb.json");
    man.input(base + ".emb.bin");
    out.push_back(std::move(e));
  }
  return out;
}

json source_json(const InputOpts& o, std::span<const UtilityMatrix> ms) {
  json j;
  j["matrix_dir"] = o.matrix_dir.empty() ? json(nullptr) : json(o.matrix_dir);
  j["embedding_dir"] = o.embed_dir.empty() ? json(nullptr) : json(o.embed_dir);
  j["utility"] = ms.empty() ? json(nullptr) : json(ms.front().kind());
  return j;
}

// --- method options ---

struct MethodOpts {
  std::string method = "standard";
  double tau = kBertScoreCutoff;
  CLI::Option* tau_opt = nullptr;
  std::string delta = "0";
  std::string cutoff_mode = "absolute";
  std::string cos_threshold = "0.918";
  bool gold = false;
  std::size_t k_min = 2;
  std::size_t k_max = 6;
  double floor = 0.15;
  std::string exclude_self;
  std::uint64_t seed = 0;
};

void add_method_options(CLI::App* sub, MethodOpts& o) {
  sub->add_option("--method", o.method, "standard, cutoff, cluster or embed")->capture_default_str();
  o.tau_opt = sub->add_option("--tau", o.tau, "cut-off threshold (default: 0.512 for BLEURT matrices, else 0.918)");
  sub->add_option("--delta", o.delta, "replacement for cut entries: a number or 'drop'")->capture_default_str();
  sub->add_option("--cutoff-mode", o.cutoff_mode, "absolute or deviation_from_max")->capture_default_str();
  sub->add_option("--cos-threshold", o.cos_threshold, "embed method similarity threshold, or 'none'")
      ->capture_default_str();
  sub->add_flag("--gold-clusters", o.gold, "cluster method: use gold labels as clusters");
  sub->add_option("--k-min", o.k_min, "smallest k tried by the silhouette sweep")->capture_default_str();
  sub->add_option("--k-max", o.k_max, "largest k tried by the silhouette sweep")->capture_default_str();
  sub->add_option("--silhouette-floor", o.floor, "below this best silhouette, use one cluster")->capture_default_str();
  sub->add_option("--exclude-self", o.exclude_self, "true or false (default: per method)")
      ->check(CLI::IsMember({"true", "false"}));
  sub->add_option("--seed", o.seed, "k-means seed")->capture_default_str();
}

MethodConfig resolve_method(const MethodOpts& o, const std::string& embed_dir) {
  MethodConfig cfg;
  cfg.method = parse_method(o.method);
  if (cfg.method == Method::embed && embed_dir.empty()) throw ConfigError("--method embed needs --embeddings");
  if (cfg.method == Method::cluster && !o.gold && embed_dir.empty())
    throw ConfigError("--method cluster needs --embeddings or --gold-clusters");
  cfg.cutoff.delta = CutoffDelta::parse(o.delta);
  cfg.cutoff.mode = parse_cutoff_mode(o.cutoff_mode);
  cfg.cutoff.tau = o.tau;
  if (o.cos_threshold == "none") {
    cfg.cos_threshold = std::nullopt;
  } else {
    cfg.cos_threshold = parse_real(o.cos_threshold, "--cos-threshold");
  }
  cfg.gold_clusters = o.gold;
  cfg.clustering.k_min = o.k_min;
  cfg.clustering.k_max = o.k_max;
  cfg.clustering.silhouette_floor = o.floor;
  cfg.clustering.seed = o.seed;
  if (o.k_min < 2 || o.k_max < o.k_min) throw ConfigError("need 2 <= --k-min <= --k-max");
  if (!o.exclude_self.empty()) cfg.exclude_self = o.exclude_self == "true";
  return cfg;
}

void finish_tau(MethodConfig& cfg, const MethodOpts& o, std::span<const UtilityMatrix> ms) {
  if (o.tau_opt->count() == 0 && !ms.empty()) cfg.cutoff.tau = default_cutoff_tau(ms.front().kind());
}

json method_json(const MethodConfig& c) {
  json j;
  j["method"] = std::string(to_string(c.method));
  j["exclude_self"] = c.effective_exclude_self();
  j["tau"] = c.cutoff.tau;
  j["delta"] = c.cutoff.delta.tag();
  j["cutoff_mode"] = std::string(to_string(c.cutoff.mode));
  j["cos_threshold"] = opt(c.cos_threshold);
  j["gold_clusters"] = c.gold_clusters;
  j["k_min"] = c.clustering.k_min;
  j["k_max"] = c.clustering.k_max;
  j["silhouette_floor"] = c.clustering.silhouette_floor;
  j["describe"] = c.describe();
  return j;
}

struct EvalOpts {
  std::string oracle_exclude_self = "true";
  std::string corc_mode = "all";
};

void add_eval_options(CLI::App* sub, EvalOpts& o) {
  sub->add_option("--oracle-exclude-self", o.oracle_exclude_self,
                  "drop self-comparisons in the reference selection")
      ->check(CLI::IsMember({"true", "false"}))
      ->capture_default_str();
  sub->add_option("--corc-mode", o.corc_mode, "all or selected")
      ->check(CLI::IsMember({"all", "selected"}))
      ->capture_default_str();
}

EvalOptions resolve_eval(const EvalOpts& o) {
  EvalOptions e;
  e.oracle_exclude_self = o.oracle_exclude_self == "true";
  e.corc_mode = o.corc_mode == "all" ? CorcMode::all_structures : CorcMode::selected_structure;
  return e;
}

json eval_json(const EvalOptions& e) {
  return {{"oracle_exclude_self", e.oracle_exclude_self},
          {"corc_mode", e.corc_mode == CorcMode::all_structures ? "all" : "selected"}};
}

std::string clip(const std::string& s, std::size_t n) { return s.size() <= n ? s : s.substr(0, n - 3) + "..."; }

// --- subcommands ---

struct DecodeCmd {
  InputOpts in;
  MethodOpts method;
  std::string out;
};

int run_decode(const DecodeCmd& c, bool pretty, Manifest& man, std::ostream& out) {
  auto cfg = resolve_method(c.method, c.in.embed_dir);
  const auto corpus = load_corpus(c.in.corpus);
  man.input(c.in.corpus);
  const auto matrices = load_matrices(corpus, c.in, man);
  std::vector<EmbeddingSet> embeddings;
  if (!c.in.embed_dir.empty()) embeddings = load_embedding_dir(corpus, c.in.embed_dir, man);
  finish_tau(cfg, c.method, matrices);
  man.config() = method_json(cfg);
  man.config()["inputs"] = source_json(c.in, matrices);
  man.seed(cfg.clustering.seed);

  const auto results = decode_corpus(corpus, matrices, embeddings, cfg);
  {
    auto f = open_out(c.out);
    for (std::size_t s = 0; s < corpus.size(); ++s) {
      const auto& space = corpus.spaces[s];
      const auto& r = results[s];
      json j;
      j["id"] = space.id;
      j["method"] = r.method;
      j["selected"] = r.selected;
      j["selected_text"] = space.candidates[r.selected].text;
      j["exclude_self"] = r.exclude_self;
      j["ranking"] = r.ranking;
      j["support"] = r.support;
      j["scores"] = r.scores;
      j["diagnostics"] = r.diagnostics;
      f << j.dump() << '\n';
    }
    if (!f) throw DataError("cannot write " + c.out);
  }
  man.output(c.out);
  if (pretty) {
    out << std::left << std::setw(20) << "space" << std::setw(10) << "selected" << std::setw(10) << "score"
        << "text\n";
    for (std::size_t s = 0; s < corpus.size(); ++s) {
      const auto& r = results[s];
      out << std::left << std::setw(20) << clip(corpus.spaces[s].id, 19) << std::setw(10) << r.selected
          << std::setw(10) << std::fixed << std::setprecision(4) << r.score_of(r.selected)
          << clip(corpus.spaces[s].candidates[r.selected].text, 60) << '\n';
    }
  }
  out << "decoded " << corpus.size() << " spaces with " << cfg.describe() << " -> " << c.out << '\n';
  return 0;
}

struct EvalCmd {
  InputOpts in;
  MethodOpts method;
  EvalOpts eval;
  std::string out;
};

json space_eval_json(const SpaceEval& e) {
  json j;
  j["type"] = "space";
  j["id"] = e.id;
  j["selected"] = e.selected;
  j["selected_label"] = e.selected_label;
  j["oracle_selected"] = e.oracle_selected ? json(*e.oracle_selected) : json(nullptr);
  j["co_hit"] = e.co_hit;
  j["singleton_miss"] = e.singleton_miss;
  j["mean_rho"] = opt(e.mean_rho);
  j["structures_scored"] = e.structures_scored;
  j["structures_defined"] = e.structures_defined;
  return j;
}

int run_eval(const EvalCmd& c, bool pretty, Manifest& man, std::ostream& out) {
  auto cfg = resolve_method(c.method, c.in.embed_dir);
  const auto options = resolve_eval(c.eval);
  const auto corpus = load_corpus(c.in.corpus);
  man.input(c.in.corpus);
  if (!corpus.labelled()) throw DataError("eval needs a fully labelled corpus");
  const auto matrices = load_matrices(corpus, c.in, man);
  std::vector<EmbeddingSet> embeddings;
  if (!c.in.embed_dir.empty()) embeddings = load_embedding_dir(corpus, c.in.embed_dir, man);
  finish_tau(cfg, c.method, matrices);
  man.config() = method_json(cfg);
  man.config()["evaluation"] = eval_json(options);
  man.config()["inputs"] = source_json(c.in, matrices);
  man.seed(cfg.clustering.seed);

  const auto report = evaluate(corpus, matrices, embeddings, cfg, options);
  {
    auto f = open_out(c.out);
    for (const auto& e : report.per_space) f << space_eval_json(e).dump() << '\n';
    json s;
    s["type"] = "summary";
    s["method"] = report.method;
    s["co"] = report.co;
    s["corc"] = opt(report.corc);
    s["n_spaces"] = report.n_spaces;
    s["corc_excluded"] = report.corc_excluded;
    s["singleton_misses"] = report.singleton_misses;
    f << s.dump() << '\n';
    if (!f) throw DataError("cannot write " + c.out);
  }
  man.output(c.out);
  if (pretty) {
    out << std::left << std::setw(20) << "space" << std::setw(10) << "selected" << std::setw(14) << "label"
        << std::setw(8) << "hit" << "rho\n";
    for (const auto& e : report.per_space) {
      out << std::left << std::setw(20) << clip(e.id, 19) << std::setw(10) << e.selected << std::setw(14)
          << clip(e.selected_label, 13) << std::setw(8) << (e.co_hit ? "yes" : "no");
      if (e.mean_rho) {
        out << std::fixed << std::setprecision(4) << *e.mean_rho << '\n';
      } else {
        out << "undefined\n";
      }
    }
  }
  out << std::fixed << std::setprecision(4) << report.method << ": CO " << report.co << " CORC ";
  if (report.corc) {
    out << *report.corc;
  } else {
    out << "undefined";
  }
  out << " over " << report.n_spaces << " spaces (" << report.corc_excluded << " without a defined rho)\n";
  return 0;
}

struct SweepCmd {
  InputOpts in;
  std::string validation;
  std::string method = "cutoff";
  std::string grid;
  std::size_t grid_size = 50;
  std::string modes = "absolute";
  std::string deltas = "0";
  std::size_t top_k = 10;
  EvalOpts eval;
  std::string out;
};

std::vector<double> parse_grid(const std::string& s) {
  if (s.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, ':')) parts.push_back(cur);
    if (parts.size() != 3) throw ConfigError("--grid: expected lo:hi:count or a comma list");
    const double count = parse_real(parts[2], "--grid");
    if (count < 1 || count != std::floor(count)) throw ConfigError("--grid: count must be a positive integer");
    return linear_grid(parse_real(parts[0], "--grid"), parse_real(parts[1], "--grid"),
                       static_cast<std::size_t>(count));
  }
  return parse_reals(s, "--grid");
}

json sweep_entry_json(const SweepEntry& e, std::size_t rank, bool chosen) {
  json j;
  j["type"] = "setting";
  j["rank"] = rank;
  j["threshold"] = e.setting.threshold;
  j["mode"] = std::string(to_string(e.setting.mode));
  j["delta"] = e.setting.delta.tag();
  j["train_co"] = e.train_co;
  j["train_corc"] = opt(e.train_corc);
  j["validation_co"] = opt(e.validation_co);
  j["validation_corc"] = opt(e.validation_corc);
  j["chosen"] = chosen;
  return j;
}

int run_sweep(const SweepCmd& c, bool pretty, Manifest& man, std::ostream& out) {
  if (c.method != "cutoff" && c.method != "embed") throw ConfigError("sweep --method must be cutoff or embed");
  const bool embed = c.method == "embed";
  if (embed && c.in.embed_dir.empty()) throw ConfigError("sweep --method embed needs --embeddings");
  SweepConfig cfg;
  cfg.modes.clear();
  for (const auto& m : split_list(c.modes)) cfg.modes.push_back(parse_cutoff_mode(m));
  cfg.deltas.clear();
  for (const auto& d : split_list(c.deltas)) cfg.deltas.push_back(CutoffDelta::parse(d));
  cfg.top_k = c.top_k;
  const auto options = resolve_eval(c.eval);

  const auto train = load_corpus(c.in.corpus);
  man.input(c.in.corpus);
  const auto val = load_corpus(c.validation);
  man.input(c.validation);
  const auto train_m = load_matrices(train, c.in, man);
  const auto val_m = load_matrices(val, c.in, man);
  std::vector<EmbeddingSet> train_e, val_e;
  if (embed) {
    train_e = load_embedding_dir(train, c.in.embed_dir, man);
    val_e = load_embedding_dir(val, c.in.embed_dir, man);
  }
  if (!c.grid.empty()) {
    cfg.grid = parse_grid(c.grid);
  } else if (embed) {
    cfg.grid = cosine_grid(train_e, c.grid_size);
  } else {
    cfg.grid = utility_grid(train_m, c.grid_size);
  }

  const LabelledSet tr{train, train_m, train_e};
  const LabelledSet va{val, val_m, val_e};
  const auto result = embed ? sweep_cosine_threshold(tr, va, cfg, options) : sweep_cutoff(tr, va, cfg, options);

  json conf;
  conf["method"] = c.method;
  conf["grid"] = cfg.grid;
  json modes = json::array();
  for (auto m : cfg.modes) modes.push_back(std::string(to_string(m)));
  conf["modes"] = modes;
  json deltas = json::array();
  for (const auto& d : cfg.deltas) deltas.push_back(d.tag());
  conf["deltas"] = deltas;
  conf["top_k"] = cfg.top_k;
  conf["evaluation"] = eval_json(options);
  conf["inputs"] = source_json(c.in, train_m);
  man.config() = conf;

  {
    auto f = open_out(c.out);
    for (std::size_t i = 0; i < result.trace.size(); ++i)
      f << sweep_entry_json(result.trace[i], i, i == result.chosen).dump() << '\n';
    json s;
    s["type"] = "summary";
    s["method"] = result.method;
    s["settings"] = result.trace.size();
    s["chosen"] = sweep_entry_json(result.chosen_entry(), result.chosen, true);
    f << s.dump() << '\n';
    if (!f) throw DataError("cannot write " + c.out);
  }
  man.output(c.out);
  if (pretty) {
    out << std::left << std::setw(6) << "rank" << std::setw(12) << "threshold" << std::setw(20) << "mode"
        << std::setw(8) << "delta" << std::setw(10) << "train" << "validation\n";
    for (std::size_t i = 0; i < result.trace.size(); ++i) {
      const auto& e = result.trace[i];
      out << std::left << std::setw(6) << i << std::setw(12) << std::fixed << std::setprecision(4)
          << e.setting.threshold << std::setw(20) << to_string(e.setting.mode) << std::setw(8)
          << e.setting.delta.tag() << std::setw(10) << e.train_co;
      if (e.validation_co) out << *e.validation_co;
      out << (i == result.chosen ? "  <-" : "") << '\n';
    }
  }
  const auto& ch = result.chosen_entry();
  out << std::fixed << std::setprecision(4) << "chosen threshold " << ch.setting.threshold << " ("
      << to_string(ch.setting.mode) << ", delta " << ch.setting.delta.tag() << "): train CO " << ch.train_co
      << ", validation CO " << *ch.validation_co << '\n';
  return 0;
}

struct GenCmd {
  SynthConfig cfg;
  std::string out;
};

int run_gen(const GenCmd& c, Manifest& man, std::ostream& out) {
  c.cfg.validate();
  const auto corpus = generate_synthetic(c.cfg);
  {
    auto f = open_out(c.out);
    f << dump_corpus(corpus);
    if (!f) throw DataError("cannot write " + c.out);
  }
  json j;
  j["n_spaces"] = c.cfg.n_spaces;
  j["min_clusters"] = c.cfg.min_clusters;
  j["max_clusters"] = c.cfg.max_clusters;
  j["candidates_per_cluster"] = c.cfg.candidates_per_cluster;
  j["vocab_per_cluster"] = c.cfg.vocab_per_cluster;
  j["shared_vocab"] = c.cfg.shared_vocab;
  j["tokens_per_candidate"] = c.cfg.tokens_per_candidate;
  j["noise_rate"] = c.cfg.noise_rate;
  j["separation"] = c.cfg.separation;
  j["compromise"] = c.cfg.include_compromise;
  man.config() = j;
  man.seed(c.cfg.seed);
  man.output(c.out);
  out << "wrote " << corpus.size() << " spaces -> " << c.out << '\n';
  return 0;
}

struct SplitCmd {
  std::string corpus;
  std::string fractions = "0.8,0.1,0.1";
  std::uint64_t seed = 0;
  std::string out;
};

int run_split(const SplitCmd& c, Manifest& man, std::ostream& out) {
  const auto f = parse_reals(c.fractions, "--fractions");
  if (f.size() != 3) throw ConfigError("--fractions needs three values: train,validation,test");
  const auto corpus = load_corpus(c.corpus);
  man.input(c.corpus);
  const auto split = split_corpus(corpus, f[0], f[1], f[2], c.seed);
  man.config() = {{"fractions", f}};
  man.seed(c.seed);
  const std::pair<const char*, const Corpus*> parts[] = {
      {"train", &split.train}, {"validation", &split.validation}, {"test", &split.test}};
  for (const auto& [name, part] : parts) {
    const std::string path = c.out + "." + name + ".jsonl";
    {
      auto file = open_out(path);
      file << dump_corpus(*part);
      if (!file) throw DataError("cannot write " + path);
    }
    man.output(path);
    out << name << ": " << part->size() << " spaces -> " << path << '\n';
  }
  return 0;
}

struct MatricesCmd {
  InputOpts in;
  std::string out;
};

int run_matrices(const MatricesCmd& c, Manifest& man, std::ostream& out) {
  const auto backend = backend_of(c.in);
  const auto corpus = load_corpus(c.in.corpus);
  man.input(c.in.corpus);
  fs::create_directories(c.out);
  for (const auto& s : corpus.spaces) {
    check_file_id(s.id);
    const auto base = (fs::path(c.out) / s.id).string();
    save_matrix(build_utility_matrix(s, backend), base);
    man.output(base + ".umat.json");
    man.output(base + ".umat.bin");
  }
  man.config() = {{"utility", backend.kind_tag()}};
  out << "wrote " << corpus.size() << " " << backend.kind_tag() << " matrices -> " << c.out << '\n';
  return 0;
}

struct DemoCmd {
  std::string weights = "0.5,0.5";
  std::string means = "-2,2";
  std::string stds = "1,1";
  std::string utility = "neg-squared-error";
  double bandwidth = 1.0;
  std::size_t steps = 10001;
  double lo = 0;
  double hi = 0;
  CLI::Option* lo_opt = nullptr;
  CLI::Option* hi_opt = nullptr;
  std::string out;
};

std::array<double, 2> pair_of(const std::string& s, const std::string& flag) {
  const auto v = parse_reals(s, flag);
  if (v.size() != 2) throw ConfigError(flag + " needs exactly two values");
  return {v[0], v[1]};
}

int run_demo(const DemoCmd& c, const std::vector<std::string>& args, std::ostream& out) {
  MixtureSpec mix;
  mix.weights = pair_of(c.weights, "--weights");
  mix.means = pair_of(c.means, "--means");
  mix.stds = pair_of(c.stds, "--stds");
  mix.validate();
  const auto kind = parse_continuous_utility(c.utility);
  Grid grid = Grid::covering(mix, c.steps);
  if (c.lo_opt->count() != c.hi_opt->count()) throw ConfigError("--lo and --hi go together");
  if (c.lo_opt->count()) grid = Grid{c.lo, c.hi, c.steps};
  const auto demo = demo_continuous(mix, kind, c.bandwidth, grid);

  out << std::fixed << std::setprecision(3) << "optimum: " << demo.optimum << '\n'
      << std::setprecision(6) << "expected utility: " << demo.curve[demo.optimum_index].second << '\n'
      << "grid step: " << grid.step() << " over [" << grid.lo << ", " << grid.hi << "]\n"
      << "mixture mean: " << mix.mean() << '\n';
  if (c.out.empty()) return 0;

  Manifest man(args, "demo-continuous");
  {
    auto f = open_out(c.out);
    for (const auto& [h, u] : demo.curve) f << json{{"h", h}, {"expected_utility", u}}.dump() << '\n';
    if (!f) throw DataError("cannot write " + c.out);
  }
  man.config() = {{"weights", mix.weights},
                  {"means", mix.means},
                  {"stds", mix.stds},
                  {"utility", c.utility},
                  {"bandwidth", c.bandwidth},
                  {"grid", {{"lo", grid.lo}, {"hi", grid.hi}, {"steps", grid.steps}}},
                  {"optimum", demo.optimum}};
  man.output(c.out);
  man.write(c.out);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Structure-aware minimum Bayes risk decoding", "smbr"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  int workers = 0;
  bool pretty = false;
  app.add_option("--workers", workers, "OpenMP worker threads (0: runtime default)");
  app.add_flag("--pretty", pretty, "also print a human-readable table");

  DecodeCmd dec;
  auto* sub_dec = app.add_subcommand("decode", "select one candidate per outcome space");
  add_input_options(sub_dec, dec.in);
  add_method_options(sub_dec, dec.method);
  sub_dec->add_option("--out", dec.out, "selections (JSONL)")->required();

  EvalCmd ev;
  auto* sub_ev = app.add_subcommand("eval", "cluster optimality and rank correlation on a labelled corpus");
  add_input_options(sub_ev, ev.in);
  add_method_options(sub_ev, ev.method);
  add_eval_options(sub_ev, ev.eval);
  sub_ev->add_option("--out", ev.out, "report (JSONL)")->required();

  SweepCmd sw;
  auto* sub_sw = app.add_subcommand("sweep", "tune a threshold on train, choose on validation");
  add_input_options(sub_sw, sw.in);
  sub_sw->add_option("--validation", sw.validation, "validation corpus (JSONL)")->required();
  sub_sw->add_option("--method", sw.method, "cutoff or embed")->capture_default_str();
  sub_sw->add_option("--grid", sw.grid, "lo:hi:count or a comma list (default: spans the training data)");
  sub_sw->add_option("--grid-size", sw.grid_size, "points in the data-driven grid")->capture_default_str();
  sub_sw->add_option("--modes", sw.modes, "comma list of cut-off modes")->capture_default_str();
  sub_sw->add_option("--deltas", sw.deltas, "comma list of deltas (numbers or 'drop')")->capture_default_str();
  sub_sw->add_option("--top-k", sw.top_k, "settings evaluated on validation")->capture_default_str();
  add_eval_options(sub_sw, sw.eval);
  sub_sw->add_option("--out", sw.out, "trace (JSONL)")->required();

  GenCmd gen;
  auto* sub_gen = app.add_subcommand("gen-synth", "write a synthetic labelled corpus");
  sub_gen->add_option("--n-spaces", gen.cfg.n_spaces)->capture_default_str();
  sub_gen->add_option("--min-clusters", gen.cfg.min_clusters)->capture_default_str();
  sub_gen->add_option("--max-clusters", gen.cfg.max_clusters)->capture_default_str();
  sub_gen->add_option("--candidates-per-cluster", gen.cfg.candidates_per_cluster)->capture_default_str();
  sub_gen->add_option("--vocab-per-cluster", gen.cfg.vocab_per_cluster)->capture_default_str();
  sub_gen->add_option("--shared-vocab", gen.cfg.shared_vocab)->capture_default_str();
  sub_gen->add_option("--tokens-per-candidate", gen.cfg.tokens_per_candidate)->capture_default_str();
  sub_gen->add_option("--noise-rate", gen.cfg.noise_rate)->capture_default_str();
  sub_gen->add_option("--separation", gen.cfg.separation)->capture_default_str();
  sub_gen->add_flag("--compromise", gen.cfg.include_compromise, "add a mixed candidate to each space");
  sub_gen->add_option("--seed", gen.cfg.seed)->capture_default_str();
  sub_gen->add_option("--out", gen.out, "corpus (JSONL)")->required();

  SplitCmd sp;
  auto* sub_sp = app.add_subcommand("split", "seeded train/validation/test partition");
  sub_sp->add_option("--corpus", sp.corpus)->required();
  sub_sp->add_option("--fractions", sp.fractions, "train,validation,test")->capture_default_str();
  sub_sp->add_option("--seed", sp.seed)->capture_default_str();
  sub_sp->add_option("--out", sp.out, "prefix; writes <out>.{train,validation,test}.jsonl")->required();

  MatricesCmd mat;
  auto* sub_mat = app.add_subcommand("build-matrices", "write one utility matrix per space");
  sub_mat->add_option("--corpus", mat.in.corpus)->required();
  sub_mat->add_option("--utility", mat.in.utility, "token-f1 or char-ngram-f")->capture_default_str();
  sub_mat->add_option("--ngram-order", mat.in.ngram_order)->capture_default_str();
  sub_mat->add_option("--beta", mat.in.beta)->capture_default_str();
  sub_mat->add_option("--out", mat.out, "output directory")->required();

  DemoCmd demo;
  auto* sub_demo = app.add_subcommand("demo-continuous", "MBR optimum for a two-component Gaussian mixture");
  sub_demo->add_option("--weights", demo.weights)->capture_default_str();
  sub_demo->add_option("--means", demo.means)->capture_default_str();
  sub_demo->add_option("--stds", demo.stds)->capture_default_str();
  sub_demo->add_option("--utility", demo.utility, "neg-squared-error or rbf")->capture_default_str();
  sub_demo->add_option("--bandwidth", demo.bandwidth, "rbf bandwidth")->capture_default_str();
  sub_demo->add_option("--steps", demo.steps, "grid points")->capture_default_str();
  demo.lo_opt = sub_demo->add_option("--lo", demo.lo, "grid start (default: covers both components)");
  demo.hi_opt = sub_demo->add_option("--hi", demo.hi, "grid end");
  sub_demo->add_option("--out", demo.out, "expected-utility curve (JSONL)");

  for (auto* s : app.get_subcommands({})) s->fallthrough();

  std::vector<const char*> argv{"smbr"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (workers < 0) throw ConfigError("--workers must be >= 0");
    set_workers(workers);
    if (sub_demo->parsed()) return run_demo(demo, args, out);
    const std::string name = app.get_subcommands().front()->get_name();
    Manifest man(args, name);
    int code = 0;
    std::string out_path;
    if (sub_dec->parsed()) {
      code = run_decode(dec, pretty, man, out);
      out_path = dec.out;
    } else if (sub_ev->parsed()) {
      code = run_eval(ev, pretty, man, out);
      out_path = ev.out;
    } else if (sub_sw->parsed()) {
      code = run_sweep(sw, pretty, man, out);
      out_path = sw.out;
    } else if (sub_gen->parsed()) {
      code = run_gen(gen, man, out);
      out_path = gen.out;
    } else if (sub_sp->parsed()) {
      code = run_split(sp, man, out);
      out_path = sp.out;
    } else {
      code = run_matrices(mat, man, out);
      out_path = mat.out;
    }
    man.write(out_path);
    return code;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace smbr::cli
