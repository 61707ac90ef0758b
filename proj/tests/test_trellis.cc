// tests/test_trellis.cc

// Copyright 2026  The anchor-align Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <functional>

#include "anchor_align/errors.h"
#include "anchor_align/synthdata.h"
#include "anchor_align/trellis.h"
#include "anchor_align/utf8.h"
#include "doctest.h"
#include "test_support.h"

using namespace anchor_align;
using anchor_align::testing::from_linear;
using anchor_align::testing::random_instance;
using anchor_align::testing::single_utterance;

namespace {

// Every monotone path score, for margin checks. Independent of the DP.
void all_path_scores(const PosteriorSlice &w, const TokenSequence &ts,
                     std::vector<std::pair<double, std::vector<int>>> *out) {
  const int final_col = ts.num_columns() - 1;
  std::vector<int> path;
  std::function<void(int, int, double)> rec = [&](int f, int j, double s) {
    if (f == w.frames()) return;
    for (int step = 0; step < 2; ++step) {
      const int nj = j + step;
      if (nj > final_col) continue;
      double ns = s;
      if (nj > 0) {
        const int sym = nj < final_col ? ts.tokens[nj - 1] : ts.blank;
        ns += step ? w.at(f, sym) : w.at(f, ts.blank);
      }
      path.push_back(nj);
      if (nj == final_col) out->push_back({ns, path});
      rec(f + 1, nj, ns);
      path.pop_back();
    }
  };
  rec(0, 0, 0.0);
}

double path_log_prob(const PosteriorSlice &w, const TokenSequence &ts,
                     const std::vector<int> &cols) {
  const int final_col = ts.num_columns() - 1;
  double s = 0.0;
  int prev = 0;
  for (int f = 0; f < static_cast<int>(cols.size()); ++f) {
    const int j = cols[f];
    if (j > 0) {
      const int sym = j < final_col ? ts.tokens[j - 1] : ts.blank;
      s += j != prev ? w.at(f, sym) : w.at(f, ts.blank);
    }
    prev = j;
  }
  return s;
}

}  // namespace

TEST_CASE("two-frame lattice matches hand-applied recursion") {
  // vocab {blank, a}; frame 1 (0.1, 0.9), frame 2 (0.8, 0.2); text "a".
  const auto pm = from_linear({{0.1, 0.9}, {0.8, 0.2}});
  const auto ts = single_utterance({1});
  const auto tr = compute_trellis(pm.all(), ts);
  REQUIRE(tr.rows() == 3);
  REQUIRE(tr.cols() == 3);
  CHECK(tr.at(1, 1) == doctest::Approx(std::log(0.9)).epsilon(1e-15));
  CHECK(std::fabs(tr.at(2, 2) - std::log(0.72)) <= 1e-12);
  CHECK(tr.at(0, 1) == kLogZero);
  for (int t = 0; t < tr.rows(); ++t) CHECK(tr.at(t, 0) == 0.0);

  const auto trace = backtrack(tr, pm.all(), ts);
  REQUIRE(trace.chars.size() == 2);
  CHECK(trace.chars[0].symbol == 1);
  CHECK(trace.chars[0].start_frame == 0);
  CHECK(trace.chars[0].end_frame == 0);
  CHECK(trace.chars[1].symbol == 0);
  CHECK(trace.chars[1].start_frame == 1);
  CHECK(trace.rho_at(0) == doctest::Approx(std::log(0.9)));

  const auto oracle = oracle_best_path(pm.all(), ts);
  CHECK(std::fabs(oracle.log_prob - std::log(0.72)) <= 1e-12);
  CHECK(oracle.path == std::vector<int>{1, 2});
  CHECK(trace.frame_columns() == oracle.path);
}

TEST_CASE("certain posteriors give a zero-cost lattice and exact frames") {
  // vocab {blank, a, b, c}; frames emit a, b, c, blank with certainty.
  const auto pm = from_linear({{1e-300, 1, 1e-300, 1e-300},
                               {1e-300, 1e-300, 1, 1e-300},
                               {1e-300, 1e-300, 1e-300, 1},
                               {1, 1e-300, 1e-300, 1e-300}});
  const auto ts = single_utterance({1, 2, 3});
  const auto tr = compute_trellis(pm.all(), ts);
  CHECK(tr.at(4, 4) == 0.0);
  const auto trace = backtrack(tr, pm.all(), ts);
  for (int k = 0; k < 3; ++k) {
    CHECK(trace.chars[k].start_frame == k);
    CHECK(trace.chars[k].end_frame == k);
  }
  const ScoringParams sp{};
  const auto utts = score_utterances(trace, ts, sp);
  CHECK(fragment_scores(utts[0].rho, 30)[0] == 0.0);
}

TEST_CASE("trellis and backtrack agree with exhaustive enumeration") {
  Rng rng(20260101);
  int compared = 0;
  for (int i = 0; i < 200; ++i) {
    const auto inst = random_instance(rng, 12, 8, 5);
    const auto w = inst.pm.all();
    const auto tr = compute_trellis(w, inst.ts);
    double final_max = kLogZero;
    for (int t = 1; t < tr.rows(); ++t) final_max = std::max(final_max, tr.at(t, tr.cols() - 1));
    if (final_max == kLogZero) {
      CHECK_THROWS_AS(backtrack(tr, w, inst.ts), NoPathError);
      CHECK_THROWS_AS(oracle_best_path(w, inst.ts), NoPathError);
      continue;
    }
    const auto oracle = oracle_best_path(w, inst.ts);
    CHECK(std::fabs(final_max - oracle.log_prob) <= 1e-9);
    const auto trace = backtrack(tr, w, inst.ts);
    CHECK(trace.frame_columns() == oracle.path);
    // Path probability recomputed from the columns alone.
    CHECK(std::fabs(path_log_prob(w, inst.ts, trace.frame_columns()) - final_max) <= 1e-9);
    ++compared;
  }
  CHECK(compared > 100);
}

TEST_CASE("stay-on-character variant agrees with its oracle") {
  Rng rng(7);
  TrellisOptions opts;
  opts.stay_on_char = true;
  for (int i = 0; i < 100; ++i) {
    const auto inst = random_instance(rng, 10, 7, 4);
    const auto w = inst.pm.all();
    const auto tr = compute_trellis(w, inst.ts, opts);
    try {
      const auto oracle = oracle_best_path(w, inst.ts, opts);
      const auto trace = backtrack(tr, w, inst.ts, opts);
      CHECK(std::fabs(trace.log_prob - oracle.log_prob) <= 1e-9);
      CHECK(trace.frame_columns() == oracle.path);
    } catch (const NoPathError &) {
      CHECK_THROWS_AS(backtrack(tr, w, inst.ts, opts), NoPathError);
    }
  }
}

TEST_CASE("alignment ranges are ordered and cover the traced span") {
  Rng rng(99);
  for (int i = 0; i < 100; ++i) {
    const auto inst = random_instance(rng, 12, 8, 5);
    const auto w = inst.pm.all();
    PathTrace trace;
    try {
      trace = backtrack(compute_trellis(w, inst.ts), w, inst.ts);
    } catch (const NoPathError &) {
      continue;
    }
    REQUIRE(trace.chars.size() == inst.ts.tokens.size() + 1);
    CHECK(trace.chars.front().start_frame == trace.first_frame);
    CHECK(trace.chars.back().end_frame == trace.last_frame);
    for (std::size_t k = 0; k < trace.chars.size(); ++k) {
      CHECK(trace.chars[k].token_pos == static_cast<int>(k));
      CHECK(trace.chars[k].start_frame <= trace.chars[k].end_frame);
      if (k > 0) CHECK(trace.chars[k].start_frame == trace.chars[k - 1].end_frame + 1);
    }
  }
}

TEST_CASE("row offsets smaller than the best-path margin leave the path unchanged") {
  Rng rng(4242);
  int checked = 0;
  for (int i = 0; i < 300 && checked < 50; ++i) {
    const auto inst = random_instance(rng, 9, 6, 4);
    std::vector<std::pair<double, std::vector<int>>> paths;
    all_path_scores(inst.pm.all(), inst.ts, &paths);
    if (paths.size() < 2) continue;
    std::sort(paths.begin(), paths.end(),
              [](const auto &a, const auto &b) { return a.first > b.first; });
    const double margin = paths[0].first - paths[1].first;
    const double shift = -0.05;
    if (!(margin > std::fabs(shift))) continue;
    const int row = static_cast<int>(rng() % inst.pm.frames());
    auto data = inst.pm.data();
    for (int c = 0; c < inst.pm.vocab_size(); ++c) data[row * inst.pm.vocab_size() + c] += shift;
    const PosteriorMatrix shifted(data, inst.pm.frames(), inst.pm.vocab_size(), 0.02);
    const auto a = backtrack(compute_trellis(inst.pm.all(), inst.ts), inst.pm.all(), inst.ts);
    const auto b = backtrack(compute_trellis(shifted.all(), inst.ts), shifted.all(), inst.ts);
    CHECK(a.frame_columns() == b.frame_columns());
    ++checked;
  }
  CHECK(checked >= 20);
}

TEST_CASE("batch lattice reproduces per-prefix trellis alignments") {
  Rng rng(31337);
  for (int i = 0; i < 300; ++i) {
    const auto inst = random_instance(rng, 30, 14, 6, 4);
    const auto w = inst.pm.all();
    const BatchLattice lattice(w, inst.ts);
    for (int n = 1; n <= lattice.num_utterances(); ++n) {
      const auto prefix = lattice.prefix_tokens(n);
      const auto tr = compute_trellis(w, prefix);
      try {
        const auto expect = backtrack(tr, w, prefix);
        const auto got = lattice.trace_prefix(n);
        CHECK(got.log_prob == expect.log_prob);
        CHECK(got.frame_columns() == expect.frame_columns());
        CHECK(got.rho == expect.rho);
      } catch (const NoPathError &) {
        CHECK_THROWS_AS(lattice.trace_prefix(n), NoPathError);
      }
    }
  }
}

TEST_CASE("window shorter than the text has no path") {
  const auto pm = from_linear({{0.5, 0.25, 0.25}});
  const auto ts = single_utterance({1, 2});
  CHECK_THROWS_AS(backtrack(compute_trellis(pm.all(), ts), pm.all(), ts), NoPathError);
  CHECK_THROWS_AS(BatchLattice(pm.all(), ts).trace_prefix(1), NoPathError);
}

TEST_CASE("token outside the vocabulary is rejected") {
  const auto pm = from_linear({{0.5, 0.5}, {0.5, 0.5}});
  CHECK_THROWS_AS(compute_trellis(pm.all(), single_utterance({2})), std::out_of_range);
}

TEST_CASE("fragment scores") {
  const std::vector<double> one{std::log(0.9)};
  const auto f1 = fragment_scores(one, 30);
  REQUIRE(f1.size() == 1);
  CHECK(f1[0] == doctest::Approx(std::log(0.9)).epsilon(1e-15));

  const std::vector<double> certain(60, 0.0);
  CHECK(fragment_scores(certain, 30) == std::vector<double>{0.0, 0.0});

  std::vector<double> mixed(30, std::log(0.8));
  mixed.insert(mixed.end(), 30, std::log(0.4));
  const auto f2 = fragment_scores(mixed, 30);
  REQUIRE(f2.size() == 2);
  CHECK(std::fabs(f2[0] - std::log(0.8)) < 1e-12);
  CHECK(std::fabs(f2[1] - std::log(0.4)) < 1e-12);

  // Default averages log rho; the linear variant averages probabilities.
  const std::vector<double> pair{std::log(0.9), std::log(0.1)};
  CHECK(fragment_scores(pair, 30)[0] == doctest::Approx(std::log(0.3)));
  CHECK(fragment_scores(pair, 30, FragmentMean::kLinear)[0] == doctest::Approx(std::log(0.5)));
  // Trailing partial fragment averages over its own length.
  std::vector<double> tail(31, 0.0);
  tail[30] = std::log(0.25);
  const auto f3 = fragment_scores(tail, 30);
  REQUIRE(f3.size() == 2);
  CHECK(f3[1] == doctest::Approx(std::log(0.25)));
}

TEST_CASE("segment score is the worst fragment") {
  const std::vector<double> a{std::log(0.8), std::log(0.4)};
  CHECK(segment_score(a) == std::log(0.4));
  CHECK(segment_score(std::vector<double>{0.0}) == 0.0);
  CHECK_THROWS(segment_score(std::vector<double>{}));
}

TEST_CASE("length normalization") {
  CHECK(normalize_score(-1.0, 4.0, 8.0) == -0.5);
  CHECK(normalize_score(-1.0, 8.0, 8.0) == -1.0);
  CHECK(normalize_score(-2.0, 16.0, 8.0) == -4.0);
  CHECK_THROWS(normalize_score(-1.0, 0.0, 8.0));
}

TEST_CASE("short utterance penalty") {
  auto p = apply_short_penalty(-0.5, 25);
  CHECK(p.score == -4.0);
  CHECK(p.penalized);
  p = apply_short_penalty(-0.5, 31);
  CHECK(p.score == -0.5);
  CHECK_FALSE(p.penalized);
  p = apply_short_penalty(-5.0, 10);
  CHECK(p.score == -5.0);
  CHECK(p.penalized);
  CHECK(apply_short_penalty(-0.1, 30).penalized);
}

TEST_CASE("certainty bound on synthetic speech") {
  const Vocab vocab = spanish_vocab();
  SynthSpec spec;
  spec.peak_prob = 1.0;
  spec.utterances = {{"hola que tal estamos todos bien", 0.1, 1.0, ""}};
  const auto syn = synth_posteriors(spec, vocab);
  Utterance u{0, "hola que tal estamos todos bien", 6, 0.0};
  const auto ts = build_token_sequence({u}, vocab);
  const auto trace = backtrack(compute_trellis(syn.posteriors.all(), ts), syn.posteriors.all(), ts);
  const auto scored = score_utterances(trace, ts, ScoringParams{});
  CHECK(scored[0].s_seg == 0.0);

  spec.peak_prob = 0.95;
  const auto noisy = synth_posteriors(spec, vocab);
  const auto trace2 = backtrack(compute_trellis(noisy.posteriors.all(), ts), noisy.posteriors.all(), ts);
  CHECK(score_utterances(trace2, ts, ScoringParams{})[0].s_seg < 0.0);
}

TEST_CASE("corrupted text scores strictly below the true text") {
  const Vocab vocab = spanish_vocab();
  Rng rng(5);
  SynthSpec spec;
  const std::string truth = "el gobierno explica la nueva situación del mercado";
  spec.utterances = {{truth, 0.2, 0.2 + placement_units(truth) * 0.02, ""}};
  const auto syn = synth_posteriors(spec, vocab);
  auto score_of = [&](const std::string &text) {
    const auto ts = build_token_sequence({Utterance{0, text, 1, 0.0}}, vocab);
    const auto w = syn.posteriors.all();
    return score_utterances(backtrack(compute_trellis(w, ts), w, ts), ts, ScoringParams{})[0]
        .s_seg;
  };
  const double clean = score_of(truth);
  const double corrupt = score_of(unrelated_text(rng, static_cast<int>(utf8::decode(truth).size())));
  CHECK(corrupt < clean);
  CHECK(clean == doctest::Approx(std::log(0.9)));
}
