#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <map>

#include "smbr/error.hpp"
#include "smbr/utility.hpp"
#include "support.hpp"

using namespace smbr;
namespace ts = testing_support;

namespace {

// Averaged F_beta over character n-gram counts, ASCII only.
double naive_char_f(const std::string& a, const std::string& b, int n, double beta) {
  double sum = 0;
  int orders = 0;
  for (int k = 1; k <= n; ++k) {
    std::map<std::string, int> ca, cb;
    for (int i = 0; i + k <= static_cast<int>(a.size()); ++i) ++ca[a.substr(i, k)];
    for (int i = 0; i + k <= static_cast<int>(b.size()); ++i) ++cb[b.substr(i, k)];
    if (ca.empty() && cb.empty()) continue;
    ++orders;
    int ta = 0, tb = 0, common = 0;
    for (auto& [g, c] : ca) ta += c, common += std::min(c, cb.count(g) ? cb[g] : 0);
    for (auto& [g, c] : cb) tb += c;
    if (common == 0) continue;
    const double p = double(common) / ta, r = double(common) / tb;
    sum += (1 + beta * beta) * p * r / (beta * beta * p + r);
  }
  return orders ? sum / orders : 1.0;
}

std::string random_text(Rng& rng, std::size_t words, std::size_t vocab) {
  std::string s;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) s += ' ';
    s += "w" + std::to_string(rng.index(vocab));
    if (rng.uniform() < 0.2) s += "X";
  }
  return s;
}

std::string bytes_of(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(TokenF1, Examples) {
  EXPECT_DOUBLE_EQ(token_f1("a b c", "a b c"), 1.0);
  EXPECT_DOUBLE_EQ(token_f1("a b", "c d"), 0.0);
  EXPECT_NEAR(token_f1("a b c d", "a b x"), 4.0 / 7.0, 1e-15);
}

TEST(TokenF1, EmptyAndCaseHandling) {
  EXPECT_EQ(token_f1("", ""), 1.0);
  EXPECT_EQ(token_f1("   ", "\t"), 1.0);
  EXPECT_EQ(token_f1("a", ""), 0.0);
  EXPECT_EQ(token_f1("", "a"), 0.0);
  EXPECT_EQ(token_f1("Hello  World", "hello world"), 1.0);
  EXPECT_NEAR(token_f1("a a b", "a b b"), 2.0 / 3.0, 1e-15);
}

TEST(TokenF1, MatchesOracleAndIsSymmetric) {
  Rng rng(11);
  for (int t = 0; t < 500; ++t) {
    const auto a = random_text(rng, 1 + rng.index(12), 10);
    const auto b = random_text(rng, rng.index(12), 10);
    EXPECT_NEAR(token_f1(a, b), oracle::token_f1(a, b), 1e-12) << a << " | " << b;
    EXPECT_EQ(token_f1(a, b), token_f1(b, a));
    EXPECT_GE(token_f1(a, b), 0.0);
    EXPECT_LE(token_f1(a, b), 1.0);
  }
}

TEST(CharNgramF, Examples) {
  EXPECT_DOUBLE_EQ(char_ngram_f("abc", "abc", 2, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(char_ngram_f("ab", "cd", 1, 1.0), 0.0);
  EXPECT_NEAR(char_ngram_f("abcd", "abce", 2, 1.0), (0.75 + 2.0 / 3.0) / 2.0, 1e-12);
}

TEST(CharNgramF, ShortStringsSkipEmptyOrders) {
  // Order 2..6 have no n-grams on either side and are skipped.
  EXPECT_DOUBLE_EQ(char_ngram_f("a", "a"), 1.0);
  EXPECT_DOUBLE_EQ(char_ngram_f("", ""), 1.0);
  // Order 2 exists only on one side: counts as an order with score 0.
  EXPECT_DOUBLE_EQ(char_ngram_f("ab", "a", 2, 1.0), (2.0 / 3.0 + 0.0) / 2.0);
}

TEST(CharNgramF, CodePointsNotBytes) {
  // "é" is two bytes; as code points both strings have 2 characters and share one.
  EXPECT_NEAR(char_ngram_f("\xC3\xA9" "a", "\xC3\xA9" "b", 1, 1.0), 0.5, 1e-15);
}

TEST(CharNgramF, MatchesOracle) {
  Rng rng(5);
  for (int t = 0; t < 300; ++t) {
    const auto a = random_text(rng, rng.index(6), 5);
    const auto b = random_text(rng, rng.index(6), 5);
    const int n = 1 + static_cast<int>(rng.index(10));
    const double beta = t % 3 == 0 ? 2.0 : 1.0;
    EXPECT_NEAR(char_ngram_f(a, b, n, beta), naive_char_f(a, b, n, beta), 1e-12);
  }
}

TEST(CharNgramF, BetaWeightsRecall) {
  // Hypothesis "ab" against reference "abcd": precision 1, recall < 1.
  EXPECT_LT(char_ngram_f("ab", "abcd", 1, 2.0), char_ngram_f("ab", "abcd", 1, 1.0));
  EXPECT_GT(char_ngram_f("abcd", "ab", 1, 2.0), char_ngram_f("abcd", "ab", 1, 1.0));
}

TEST(CharNgramF, ParameterValidation) {
  EXPECT_THROW(char_ngram_f("a", "b", 0, 1.0), ConfigError);
  EXPECT_THROW(char_ngram_f("a", "b", 11, 1.0), ConfigError);
  EXPECT_THROW(char_ngram_f("a", "b", 3, 0.0), ConfigError);
}

TEST(Backend, ParseAndTags) {
  EXPECT_EQ(UtilityBackend::parse("token-f1").kind, UtilityBackend::Kind::token_f1);
  EXPECT_EQ(UtilityBackend::parse("char_ngram_f").kind, UtilityBackend::Kind::char_ngram_f);
  EXPECT_EQ(UtilityBackend::parse("token_f1").kind_tag(), "token_f1");
  auto b = UtilityBackend::parse("char-ngram-f");
  b.ngram_order = 4;
  b.beta = 2;
  EXPECT_EQ(b.kind_tag(), "char_ngram_f(n=4,beta=2)");
  EXPECT_THROW(UtilityBackend::parse("bleu"), ConfigError);
}

TEST(BuildMatrix, IdenticalTextsGiveOnes) {
  OutcomeSpace s{"same", "c", {{"x y z", {}, 1}, {"x y z", {}, 1}, {"x y z", {}, 1}}};
  const auto m = build_utility_matrix(s, {});
  for (float v : m.values()) EXPECT_EQ(v, 1.0f);
  EXPECT_EQ(m.kind(), "token_f1");
  EXPECT_TRUE(m.builtin());
}

TEST(BuildMatrix, DisjointTextsGiveIdentity) {
  OutcomeSpace s{"dis", "c", {{"a b", {}, 1}, {"c d", {}, 1}, {"e f", {}, 1}}};
  const auto m = build_utility_matrix(s, {});
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(m(i, j), i == j ? 1.0f : 0.0f);
  }
}

TEST(BuildMatrix, MatchesDoubleLoopOracle) {
  SynthConfig cfg;
  cfg.n_spaces = 5;
  for (const auto& s : generate_synthetic(cfg).spaces) {
    const auto m = build_utility_matrix(s, {});
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t j = 0; j < s.size(); ++j)
        EXPECT_EQ(m(i, j), static_cast<float>(oracle::token_f1(s.candidates[i].text, s.candidates[j].text)));
    }
  }
}

TEST(BuildMatrix, SerialEqualsParallelBitwise) {
  SynthConfig cfg;
  cfg.n_spaces = 8;
  cfg.include_compromise = true;
  UtilityBackend chr = UtilityBackend::parse("char-ngram-f");
  chr.beta = 2.0;
  for (const auto& s : generate_synthetic(cfg).spaces) {
    for (const auto& backend : {UtilityBackend{}, chr}) {
      const auto a = build_utility_matrix(s, backend, Exec::serial);
      const auto b = build_utility_matrix(s, backend, Exec::parallel);
      ASSERT_EQ(a.values().size(), b.values().size());
      EXPECT_EQ(std::memcmp(a.values().data(), b.values().data(), a.values().size() * sizeof(float)), 0);
    }
  }
}

TEST(BuildMatrix, BuiltinSymmetryAndRange) {
  SynthConfig cfg;
  cfg.n_spaces = 10;
  for (const auto& s : generate_synthetic(cfg).spaces) {
    for (const auto& backend : {UtilityBackend{}, UtilityBackend::parse("char-ngram-f")}) {
      const auto m = build_utility_matrix(s, backend);
      EXPECT_LE(m.max_asymmetry(), 1e-9);
      for (std::size_t i = 0; i < m.n(); ++i) {
        EXPECT_EQ(m(i, i), 1.0f);
        for (float v : m.row(i)) {
          EXPECT_GE(v, 0.0f);
          EXPECT_LE(v, 1.0f);
        }
      }
    }
  }
}

TEST(MatrixIO, RoundTripBitwise) {
  const auto dir = ts::scratch_dir("umat");
  Rng rng(1);
  auto m = ts::random_matrix(4, rng);
  m(1, 2) = -0.0f;
  m(3, 3) = 1e-38f;
  save_matrix(m, dir / "m");
  const auto back = load_matrix(dir / "m");
  EXPECT_EQ(back, m);
  EXPECT_EQ(std::memcmp(back.values().data(), m.values().data(), 16 * sizeof(float)), 0);
  EXPECT_EQ(load_matrix(dir / "m.umat.json"), m);
  EXPECT_EQ(load_matrix(dir / "m.umat.bin"), m);
  EXPECT_EQ(std::filesystem::file_size(dir / "m.umat.bin"), 64u);
}

TEST(MatrixIO, DoubleSaveIsByteIdentical) {
  const auto dir = ts::scratch_dir("umat2");
  Rng rng(2);
  save_matrix(ts::random_matrix(7, rng), dir / "a");
  save_matrix(load_matrix(dir / "a"), dir / "b");
  EXPECT_EQ(bytes_of(dir / "a.umat.bin"), bytes_of(dir / "b.umat.bin"));
  EXPECT_EQ(bytes_of(dir / "a.umat.json"), bytes_of(dir / "b.umat.json"));
}

TEST(MatrixIO, LittleEndianLayout) {
  const auto dir = ts::scratch_dir("umat-le");
  UtilityMatrix m(1, std::vector<float>{1.0f}, "external:x");
  save_matrix(m, dir / "one");
  EXPECT_EQ(bytes_of(dir / "one.umat.bin"), std::string("\x00\x00\x80\x3f", 4));
}

TEST(MatrixIO, TruncatedPayload) {
  const auto dir = ts::scratch_dir("umat-trunc");
  Rng rng(3);
  save_matrix(ts::random_matrix(4, rng), dir / "m");
  std::filesystem::resize_file(dir / "m.umat.bin", 60);
  try {
    load_matrix(dir / "m");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "payload length mismatch: expected 64 bytes, found 60");
  }
}

TEST(MatrixIO, NonFiniteAndBadMetadataRejected) {
  const auto dir = ts::scratch_dir("umat-bad");
  {
    std::ofstream(dir / "nan.umat.json") << R"({"n":1,"dtype":"f32le","order":"row-major","kind":"external:x"})";
    std::ofstream(dir / "nan.umat.bin", std::ios::binary) << std::string("\x00\x00\xc0\x7f", 4);
  }
  EXPECT_THROW(load_matrix(dir / "nan"), DataError);
  {
    std::ofstream(dir / "f64.umat.json") << R"({"n":1,"dtype":"f64le","order":"row-major","kind":"external:x"})";
    std::ofstream(dir / "f64.umat.bin", std::ios::binary) << std::string(4, '\0');
  }
  EXPECT_THROW(load_matrix(dir / "f64"), DataError);
  {
    std::ofstream(dir / "neg.umat.json") << R"({"n":-2,"dtype":"f32le","order":"row-major","kind":"external:x"})";
  }
  EXPECT_THROW(load_matrix(dir / "neg"), DataError);
  EXPECT_THROW(load_matrix(dir / "missing"), DataError);
}

TEST(MatrixIO, BridgeFixture) {
  const auto m = load_matrix(std::filesystem::path(SMBR_TEST_DATA) / "bridge_space");
  EXPECT_EQ(m.n(), 5u);
  EXPECT_EQ(m.kind(), "external:bertscore");
  EXPECT_FALSE(m.builtin());
  EXPECT_EQ(m(0, 0), 1.0f);
  EXPECT_EQ(m(0, 1), 0.82f);
  EXPECT_EQ(m(1, 0), 0.81f);  // directional scores survive loading
}

TEST(EmbeddingIO, RoundTripBitwise) {
  const auto dir = ts::scratch_dir("emb");
  Rng rng(4);
  std::vector<float> v(24);
  for (auto& x : v) x = static_cast<float>(rng.normal());
  const EmbeddingSet e(3, 8, v);
  save_embeddings(e, dir / "e");
  EXPECT_EQ(load_embeddings(dir / "e"), e);
  save_embeddings(load_embeddings(dir / "e.emb.json"), dir / "f");
  EXPECT_EQ(bytes_of(dir / "e.emb.bin"), bytes_of(dir / "f.emb.bin"));
  EXPECT_EQ(bytes_of(dir / "e.emb.json"), bytes_of(dir / "f.emb.json"));
}

TEST(EmbeddingIO, NormalizeOnLoad) {
  const auto dir = ts::scratch_dir("emb-norm");
  Rng rng(6);
  std::vector<float> v(5 * 7);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-3, 3));
  save_embeddings(EmbeddingSet(5, 7, v), dir / "e");
  const auto e = load_embeddings(dir / "e", true);
  EXPECT_TRUE(e.normalized());
  for (std::size_t i = 0; i < e.n(); ++i) {
    double sq = 0;
    for (float x : e.row(i)) sq += double(x) * x;
    EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-6);
  }
}

TEST(EmbeddingIO, ZeroRowRejectedUnderNormalize) {
  const auto dir = ts::scratch_dir("emb-zero");
  std::vector<float> v(3 * 2, 1.0f);
  v[4] = v[5] = 0.0f;
  save_embeddings(EmbeddingSet(3, 2, v), dir / "e");
  EXPECT_NO_THROW(load_embeddings(dir / "e"));
  try {
    load_embeddings(dir / "e", true);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "zero-norm row 2");
  }
}

TEST(EmbeddingIO, TruncatedAndMisflaggedRejected) {
  const auto dir = ts::scratch_dir("emb-bad");
  save_embeddings(EmbeddingSet(2, 2, {1, 2, 3, 4}), dir / "e");
  std::filesystem::resize_file(dir / "e.emb.bin", 12);
  EXPECT_THROW(load_embeddings(dir / "e"), DataError);
  EXPECT_THROW(EmbeddingSet(1, 2, {1.0f, 1.0f}, true), DataError);
  EXPECT_THROW(EmbeddingSet(1, 2, {1.0f}), DataError);
}

TEST(EmbeddingIO, BridgeFixture) {
  const auto e = load_embeddings(std::filesystem::path(SMBR_TEST_DATA) / "bridge_space.emb.json");
  EXPECT_EQ(e.n(), 5u);
  EXPECT_EQ(e.d(), 4u);
  EXPECT_TRUE(e.normalized());
  for (std::size_t i = 0; i < e.n(); ++i) {
    double sq = 0;
    for (float x : e.row(i)) sq += double(x) * x;
    EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-5);
  }
}
