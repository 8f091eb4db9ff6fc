#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "subalign/aligner.hpp"
#include "subalign/random.hpp"
#include "support/em_oracle.hpp"

using namespace subalign;

namespace {

Bitext make_bitext(const oracle::Corpus& corpus) {
  Bitext b;
  for (const auto& [src, tgt] : corpus) {
    b.source.push_back(src);
    b.target.push_back(tgt);
  }
  return b;
}

AlignerConfig basic_config(int m1_iters, double p0, double alpha) {
  AlignerConfig c;
  c.model1_iterations = m1_iters;
  c.model2_iterations = 0;
  c.null_probability = p0;
  c.smoothing_alpha = alpha;
  return c;
}

// Compares the library model against the enumeration oracle after the same
// number of EM iterations.
void check_against_oracle(const oracle::Corpus& corpus, int iterations, double p0,
                          double alpha) {
  const Bitext bitext = make_bitext(corpus);
  const TrainedModel model = train_model1(bitext, basic_config(iterations, p0, alpha));

  oracle::Model1Oracle ora(corpus, p0, alpha);
  ora.train(corpus, iterations);

  // translation probabilities
  for (const auto& [pair, p_oracle] : ora.t) {
    const auto e = model.source_vocab.lookup(pair.first == oracle::Model1Oracle::kNull
                                                 ? "<null>"
                                                 : pair.first);
    const auto f = model.target_vocab.lookup(pair.second);
    REQUIRE(e != Vocabulary::kUnseen);
    REQUIRE(f != Vocabulary::kUnseen);
    CHECK(std::abs(model.table.prob(e, f) - p_oracle) < 1e-9);
  }

  // posterior marginals
  const auto grids = posterior_grids(bitext, model);
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    const auto marginal = ora.posteriors(corpus[s].first, corpus[s].second);
    for (std::size_t j = 0; j < grids[s].m; ++j) {
      CHECK(std::abs(grids[s].null_mass[j] - marginal[j][0]) < 1e-9);
      for (std::size_t i = 0; i < grids[s].n; ++i) {
        CHECK(std::abs(grids[s].real[j * grids[s].n + i] - marginal[j][i + 1]) < 1e-9);
      }
    }
  }

  // viterbi links; decisions are only comparable across the two routes
  // when the score margin exceeds the table agreement tolerance
  const auto decoded = viterbi_align(bitext, model);
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    std::vector<double> margins;
    const auto expected = ora.viterbi(corpus[s].first, corpus[s].second, &margins);
    for (std::size_t j = 0; j < expected.size(); ++j) {
      if (margins[j] > 1e-9) CHECK(decoded.chosen[s][j] == expected[j]);
    }
  }
}

oracle::Corpus random_corpus(std::mt19937_64& rng, std::size_t pairs, std::size_t max_len,
                             std::size_t vocab) {
  oracle::Corpus corpus;
  for (std::size_t p = 0; p < pairs; ++p) {
    oracle::Sentence src, tgt;
    const std::size_t ls = 1 + uniform_below(rng, max_len);
    const std::size_t lt = 1 + uniform_below(rng, max_len);
    for (std::size_t k = 0; k < ls; ++k) src.push_back("s" + std::to_string(uniform_below(rng, vocab)));
    for (std::size_t k = 0; k < lt; ++k) tgt.push_back("t" + std::to_string(uniform_below(rng, vocab)));
    corpus.emplace_back(std::move(src), std::move(tgt));
  }
  return corpus;
}

}  // namespace

TEST_CASE("single co-occurrence converges immediately") {
  const oracle::Corpus corpus{{{"a"}, {"x"}}};
  const auto model = train_model1(make_bitext(corpus), basic_config(1, 0.0, 0.0));
  const auto e = model.source_vocab.lookup("a");
  const auto f = model.target_vocab.lookup("x");
  CHECK(model.table.prob(e, f) == doctest::Approx(1.0));
}

TEST_CASE("the two-pair corpus disambiguates by EM") {
  // {("b c","x y"), ("b","x")}: x pins to b, which frees y for c. The
  // expected probabilities are frozen from the enumeration oracle: the
  // coupled row converges slowly, so 10 iterations leave t(y|c) at ~0.93
  // and both rows pass 0.99 only near iteration 60.
  const oracle::Corpus corpus{{{"b", "c"}, {"x", "y"}}, {{"b"}, {"x"}}};

  oracle::Model1Oracle ten(corpus, 0.0, 0.0);
  ten.train(corpus, 10);
  const auto model10 = train_model1(make_bitext(corpus), basic_config(10, 0.0, 0.0));
  const double txb = model10.table.prob(model10.source_vocab.lookup("b"),
                                        model10.target_vocab.lookup("x"));
  const double tyc = model10.table.prob(model10.source_vocab.lookup("c"),
                                        model10.target_vocab.lookup("y"));
  CHECK(std::abs(txb - ten.t.at({"b", "x"})) < 1e-9);
  CHECK(std::abs(tyc - ten.t.at({"c", "y"})) < 1e-9);
  CHECK(txb > 0.99);
  CHECK(tyc > 0.9);

  const auto model60 = train_model1(make_bitext(corpus), basic_config(60, 0.0, 0.0));
  CHECK(model60.table.prob(model60.source_vocab.lookup("b"),
                           model60.target_vocab.lookup("x")) > 0.99);
  CHECK(model60.table.prob(model60.source_vocab.lookup("c"),
                           model60.target_vocab.lookup("y")) > 0.99);

  // after convergence the predicted alignment is x->b, y->c
  const auto decoded = viterbi_align(make_bitext(corpus), model60);
  CHECK(decoded.chosen[0] == std::vector<std::int32_t>{0, 1});
}

TEST_CASE("rows stay normalized after every iteration") {
  std::mt19937_64 rng(4);
  const auto corpus = random_corpus(rng, 20, 5, 8);
  for (int iters : {1, 3, 5}) {
    const auto model = train_model1(make_bitext(corpus), basic_config(iters, 0.08, 0.01));
    for (std::uint32_t e = 0; e < model.table.row_count(); ++e) {
      if (model.table.row_keys(e).empty()) continue;
      double total = 0.0;
      for (const double p : model.table.row_probs(e)) total += p;
      CHECK(std::abs(total - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("model 1 matches the enumeration oracle on small corpora") {
  // All single-pair corpora over 2-symbol vocabularies up to length 3,
  // plus a systematic sample of 2- and 3-pair combinations.
  const auto pairs = oracle::enumerate_pairs(3);
  REQUIRE(pairs.size() == 196);

  for (const auto& pair : pairs) {
    check_against_oracle({pair}, 3, 0.0, 0.0);
  }
  for (std::size_t i = 0; i < pairs.size() * pairs.size(); i += 173) {
    const auto a = i / pairs.size();
    const auto b = i % pairs.size();
    check_against_oracle({pairs[a], pairs[b]}, 3, 0.08, 0.0);
  }
  for (std::size_t i = 0; i < pairs.size() * pairs.size() * pairs.size(); i += 36097) {
    const auto a = i / (pairs.size() * pairs.size());
    const auto b = (i / pairs.size()) % pairs.size();
    const auto c = i % pairs.size();
    check_against_oracle({pairs[a], pairs[b], pairs[c]}, 2, 0.08, 0.01);
  }
}

TEST_CASE("EM log-likelihood is non-decreasing without smoothing") {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 5; ++rep) {
    const auto corpus = random_corpus(rng, 30, 6, 10);
    AlignerConfig config = basic_config(10, 0.08, 0.0);
    const auto model = train_model1(make_bitext(corpus), config);
    REQUIRE(model.likelihood_trace.size() == 10);
    for (std::size_t k = 1; k < model.likelihood_trace.size(); ++k) {
      CHECK(model.likelihood_trace[k] >= model.likelihood_trace[k - 1] - 1e-9);
    }
  }
}

TEST_CASE("viterbi ties break to the smallest source index") {
  // one iteration over a single pair: t(x|a) = t(x|b)
  const oracle::Corpus corpus{{{"a", "b"}, {"x"}}};
  const auto model = train_model1(make_bitext(corpus), basic_config(1, 0.0, 0.0));
  const auto decoded = viterbi_align(make_bitext(corpus), model);
  CHECK(decoded.chosen[0] == std::vector<std::int32_t>{0});
}

TEST_CASE("decoding is deterministic") {
  std::mt19937_64 rng(77);
  const auto corpus = random_corpus(rng, 25, 5, 6);
  const Bitext b = make_bitext(corpus);
  AlignerConfig config;
  config.model1_iterations = 3;
  config.model2_iterations = 2;
  const auto m1 = train_model1(b, config);
  const auto model_a = train_diag_model2(b, config, m1);
  const auto model_b = train_diag_model2(b, config, m1);
  CHECK(viterbi_align(b, model_a).chosen == viterbi_align(b, model_b).chosen);
  CHECK(model_a.tension == model_b.tension);
}

TEST_CASE("unseen tokens fall back to the floor probability") {
  const oracle::Corpus corpus{{{"a"}, {"x"}}};
  const auto model = train_model1(make_bitext(corpus), basic_config(2, 0.0, 0.01));
  Bitext unseen;
  unseen.source = {{"q", "a"}};
  unseen.target = {{"z"}};
  const auto decoded = viterbi_align(unseen, model);  // must not throw
  REQUIRE(decoded.chosen.size() == 1);
}

TEST_CASE("diagonal prior at tension zero reduces to model 1") {
  const oracle::Corpus corpus{{{"b", "c"}, {"x", "y"}}, {{"b"}, {"x"}}};
  const Bitext b = make_bitext(corpus);
  TrainedModel flat = train_model1(b, basic_config(3, 0.08, 0.0));
  const auto grids_m1 = posterior_grids(b, flat);
  flat.diagonal = true;
  flat.tension = 0.0;  // exp(0) = 1 for every cell
  const auto grids_diag = posterior_grids(b, flat);
  for (std::size_t s = 0; s < grids_m1.size(); ++s) {
    for (std::size_t k = 0; k < grids_m1[s].real.size(); ++k) {
      CHECK(grids_diag[s].real[k] == doctest::Approx(grids_m1[s].real[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("large tension concentrates mass on the diagonal") {
  Bitext b;
  b.source = {{"s0", "s1", "s2", "s3", "s4"}};
  b.target = {{"t0", "t1", "t2", "t3", "t4"}};
  AlignerConfig config = basic_config(1, 0.0, 0.0);
  TrainedModel model = train_model1(b, config);  // uniform-ish t
  model.diagonal = true;
  model.tension = 20.0;
  const auto grids = posterior_grids(b, model);
  for (std::size_t j = 0; j < 5; ++j) {
    // argmin |i/n - j/m| is i == j for equal lengths
    double best = 0.0;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < 5; ++i) {
      if (grids[0].real[j * 5 + i] > best) {
        best = grids[0].real[j * 5 + i];
        best_i = i;
      }
    }
    CHECK(best_i == j);
    CHECK(best > 0.9);
  }
}

TEST_CASE("tension gradient matches finite differences of expected log-likelihood") {
  std::mt19937_64 rng(321);
  int checked = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const auto corpus = random_corpus(rng, 4 + uniform_below(rng, 4), 5, 6);
    const Bitext b = make_bitext(corpus);
    AlignerConfig config;
    config.model1_iterations = 2;
    config.model2_iterations = 1;
    config.null_probability = 0.08;
    TrainedModel model = train_diag_model2(b, config, train_model1(b, config));

    const auto grids = posterior_grids(b, model);
    const auto stats = diagonal_stats(grids);

    // Independent Q(T): expected log positional prior under fixed posteriors.
    auto expected_loglik = [&](double tension) {
      double q = 0.0;
      for (const auto& g : grids) {
        for (std::size_t j = 0; j < g.m; ++j) {
          double z = 0.0;
          for (std::size_t i = 0; i < g.n; ++i) {
            z += std::exp(-tension * diagonal_distance(i, j, g.n, g.m));
          }
          for (std::size_t i = 0; i < g.n; ++i) {
            const double post = g.real[j * g.n + i];
            const double logp = std::log(1.0 - config.null_probability) -
                                tension * diagonal_distance(i, j, g.n, g.m) - std::log(z);
            q += post * logp;
          }
          if (g.null_mass[j] > 0.0) {
            q += g.null_mass[j] * std::log(config.null_probability);
          }
        }
      }
      return q;
    };

    for (const double tension : {model.tension, 2.0, 7.5}) {
      const double eps = 1e-5 * std::max(1.0, std::abs(tension));
      const double fd = (expected_loglik(tension + eps) - expected_loglik(tension - eps)) /
                        (2.0 * eps);
      const double grad = diagonal_gradient(stats, tension);
      // relative error, floored at 1 so near-stationary points stay well posed
      const double denom = std::max({std::abs(fd), std::abs(grad), 1.0});
      CHECK(std::abs(fd - grad) / denom < 1e-4);
      ++checked;
    }
  }
  CHECK(checked == 60);
}

TEST_CASE("training on a diagonal corpus raises the tension") {
  std::mt19937_64 rng(55);
  Bitext b;
  for (int s = 0; s < 50; ++s) {
    std::vector<std::string> sent;
    const std::size_t len = 3 + uniform_below(rng, 6);
    for (std::size_t k = 0; k < len; ++k) {
      sent.push_back("w" + std::to_string(uniform_below(rng, 30)));
    }
    b.source.push_back(sent);
    b.target.push_back(sent);  // identity alignment
  }
  AlignerConfig config;
  const auto model = train_diag_model2(b, config, train_model1(b, config));
  CHECK(model.diagonal);
  CHECK(model.tension > 4.0);
}

TEST_CASE("bidirectional runs coincide on symmetric one-token pairs") {
  Bitext b;
  b.source = {{"a"}, {"b"}, {"a"}};
  b.target = {{"x"}, {"y"}, {"x"}};
  AlignerConfig config;
  const auto bi = align_bidirectional(b, config);
  CHECK(bi.forward == bi.reverse);
  CHECK(bi.forward.contains(Link{0, 0, 0}));
}

TEST_CASE("reverse direction equals the transposed forward run on swapped sides") {
  std::mt19937_64 rng(9);
  const auto corpus = random_corpus(rng, 15, 4, 5);
  const Bitext b = make_bitext(corpus);
  Bitext swapped;
  swapped.source = b.target;
  swapped.target = b.source;
  AlignerConfig config;
  const auto bi = align_bidirectional(b, config);
  const auto bi_swapped = align_bidirectional(swapped, config);

  std::vector<Link> transposed;
  for (const auto& l : bi_swapped.forward.links()) {
    transposed.push_back(Link{l.sentence, l.target, l.source});
  }
  CHECK(bi.reverse == AlignmentSet(transposed));
}

TEST_CASE("intersection recovers a synthetic diagonal corpus") {
  std::mt19937_64 rng(31);
  Bitext b;
  std::vector<Link> gold;
  for (std::uint32_t s = 0; s < 50; ++s) {
    const std::size_t len = 3 + uniform_below(rng, 5);
    std::vector<std::string> src, tgt;
    for (std::uint32_t k = 0; k < len; ++k) {
      const auto w = uniform_below(rng, 25);
      src.push_back("s" + std::to_string(w));
      tgt.push_back("t" + std::to_string(w));
      gold.push_back(Link{s, k, k});
    }
    b.source.push_back(src);
    b.target.push_back(tgt);
  }
  AlignerConfig config;
  const auto bi = align_bidirectional(b, config);
  const auto inter = bi.forward.intersect(bi.reverse);
  std::size_t hit = 0;
  for (const auto& l : gold) {
    if (inter.contains(l)) ++hit;
  }
  CHECK(static_cast<double>(hit) / static_cast<double>(gold.size()) >= 0.95);
}

TEST_CASE("workers do not change the result") {
  std::mt19937_64 rng(13);
  const auto corpus = random_corpus(rng, 40, 6, 10);
  const Bitext b = make_bitext(corpus);
  AlignerConfig one;
  one.workers = 1;
  AlignerConfig four;
  four.workers = 4;
  const auto m_one = train_model1(b, one);
  const auto m_four = train_model1(b, four);
  CHECK(viterbi_align(b, m_one).chosen == viterbi_align(b, m_four).chosen);
}
